//! Model arguments: a JSON file path or an inline builder `name:key=val,...`.

use std::collections::BTreeMap;

use bogolab_core::io::model_from_json;
use bogolab_core::model::{build_dimer, build_random, build_ring, ModeProblem};

/// Where a model came from; argument errors are usage errors, file errors are domain errors.
pub enum ModelError {
    Usage(String),
    Domain(bogolab_core::Error),
}

const BUILDERS: [&str; 3] = ["dimer", "ring", "random"];

fn is_inline(spec: &str) -> bool {
    let name = spec.split(':').next().unwrap_or("");
    BUILDERS.contains(&name) && !std::path::Path::new(spec).exists()
}

fn parse_params(name: &str, body: &str, allowed: &[&str]) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    for part in body.split(',').filter(|s| !s.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| format!("{name}: expected key=value, got '{part}'"))?;
        if !allowed.contains(&k) {
            return Err(format!("{name}: unknown parameter '{k}' (allowed: {})", allowed.join(", ")));
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(format!("{name}: parameter '{k}' given twice"));
        }
    }
    Ok(out)
}

fn num<T: std::str::FromStr>(p: &BTreeMap<String, String>, key: &str, default: Option<T>) -> Result<T, String> {
    match p.get(key) {
        Some(v) => v.parse().map_err(|_| format!("bad value for {key}: '{v}'")),
        None => default.ok_or_else(|| format!("missing parameter {key}")),
    }
}

pub fn load_model(spec: &str) -> Result<ModeProblem, ModelError> {
    if !is_inline(spec) {
        let text = std::fs::read_to_string(spec).map_err(|e| ModelError::Domain(bogolab_core::Error::Io(format!("{spec}: {e}"))))?;
        return model_from_json(&text).map_err(ModelError::Domain);
    }
    let (name, body) = spec.split_once(':').unwrap_or((spec, ""));
    let usage = ModelError::Usage;
    match name {
        "dimer" => {
            let p = parse_params(name, body, &["t", "U"]).map_err(usage)?;
            let t: f64 = num(&p, "t", Some(1.0)).map_err(usage)?;
            let u: f64 = num(&p, "U", Some(1.0)).map_err(usage)?;
            if !t.is_finite() || !u.is_finite() {
                return Err(ModelError::Usage("dimer parameters must be finite".into()));
            }
            Ok(build_dimer(t, u))
        }
        "ring" => {
            let p = parse_params(name, body, &["L", "t", "vhat"]).map_err(usage)?;
            let l: usize = num(&p, "L", Some(3)).map_err(usage)?;
            let t: f64 = num(&p, "t", Some(1.0)).map_err(usage)?;
            let vhat: Vec<f64> = match p.get("vhat") {
                Some(v) => v
                    .split(';')
                    .map(|x| x.parse::<f64>().map_err(|_| format!("bad vhat entry '{x}'")))
                    .collect::<Result<_, _>>()
                    .map_err(usage)?,
                None => return Err(ModelError::Usage("ring needs vhat=v0;v1;...".into())),
            };
            if l < 2 {
                return Err(ModelError::Usage("ring needs L >= 2".into()));
            }
            if vhat.len() != l {
                return Err(ModelError::Usage(format!("vhat has {} entries, expected L={l}", vhat.len())));
            }
            build_ring(l, t, &vhat).map_err(ModelError::Domain)
        }
        "random" => {
            let p = parse_params(name, body, &["seed", "d", "strength"]).map_err(usage)?;
            let seed: u64 = num(&p, "seed", None).map_err(usage)?;
            let d: usize = num(&p, "d", None).map_err(usage)?;
            let s: f64 = num(&p, "strength", Some(0.5)).map_err(usage)?;
            if !(2..=12).contains(&d) || !s.is_finite() {
                return Err(ModelError::Usage("random needs 2 <= d <= 12 and finite strength".into()));
            }
            Ok(build_random(seed, d, s))
        }
        _ => unreachable!("checked by is_inline"),
    }
}
