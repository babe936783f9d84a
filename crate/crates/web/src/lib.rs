//! Browser bindings for the dimer demo. Each export returns a JSON string.

use bogolab_core::bogoliubov::{diagonalize, enumerate_targets, quadratic_form, DEFAULT_TOL_DEGENERATE};
use bogolab_core::harness::{compare_spectra, convergence_fit, HarnessOptions};
use bogolab_core::hartree::{energy_and_gradient, find_minimizers};
use bogolab_core::linalg::{CVector, C64};
use bogolab_core::model::build_dimer;
use bogolab_core::{Error, Result};
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Keeps the page responsive: the dimer sector has dimension N+1.
const MAX_N: usize = 400;

fn check_params(t: f64, u: f64) -> Result<()> {
    if !t.is_finite() || !u.is_finite() || t <= 0.0 {
        return Err(Error::InvalidInput("need finite t > 0 and finite U".into()));
    }
    Ok(())
}

fn parse_n_list(s: &str) -> Result<Vec<usize>> {
    let ns: Vec<usize> = s
        .split(',')
        .map(|x| x.trim().parse::<usize>().map_err(|_| Error::Parse(format!("bad N '{x}'"))))
        .collect::<Result<_>>()?;
    if ns.iter().any(|&n| n > MAX_N) {
        return Err(Error::InvalidInput(format!("N above {MAX_N} is too slow for the page")));
    }
    Ok(ns)
}

/// Exact excitations of the dimer at one `N` next to Bogoliubov levels.
pub fn spectra(t: f64, u: f64, n: usize, levels: usize) -> Result<String> {
    check_params(t, u)?;
    if n > MAX_N || levels == 0 || levels > 12 {
        return Err(Error::InvalidInput(format!("need N <= {MAX_N} and 1 <= levels <= 12")));
    }
    let p = build_dimer(t, u);
    let mins = find_minimizers(&p, &Default::default())?;
    let st = &mins[0];
    let spec = diagonalize(&quadratic_form(&p, st)?, DEFAULT_TOL_DEGENERATE);
    let bog: Vec<f64> = enumerate_targets(&spec, levels)?.into_iter().map(|l| l.value).collect();
    let rep = compare_spectra(&p, st, &[n], levels, &HarnessOptions::default())?;
    let exact: Vec<f64> = rep.rows.iter().map(|r| r.exact_excitation).collect();
    Ok(json!({
        "N": n,
        "minimizers": mins.len(),
        "stability": spec.stability.as_str(),
        "e": spec.e,
        "bogoliubov": bog,
        "exact": exact,
    })
    .to_string())
}

/// `E_H(cos θ, sin θ)` on `[0, π]` and the angles of the minimizers.
pub fn landscape(t: f64, u: f64, samples: usize) -> Result<String> {
    check_params(t, u)?;
    let samples = samples.clamp(2, 2000);
    let p = build_dimer(t, u);
    let mut theta = Vec::with_capacity(samples);
    let mut energy = Vec::with_capacity(samples);
    for i in 0..samples {
        let th = std::f64::consts::PI * i as f64 / (samples - 1) as f64;
        let c = CVector::from_vec(vec![C64::from(th.cos()), C64::from(th.sin())]);
        theta.push(th);
        energy.push(energy_and_gradient(&p, &c)?.energy);
    }
    let mins: Vec<serde_json::Value> = find_minimizers(&p, &Default::default())?
        .iter()
        .map(|s| {
            let mut th = s.c[1].norm().atan2(s.c[0].norm());
            if (s.c[1] * s.c[0].conj()).re < 0.0 {
                th = std::f64::consts::PI - th;
            }
            json!({ "theta": th, "energy": s.energy })
        })
        .collect();
    Ok(json!({ "theta": theta, "energy": energy, "minimizers": mins }).to_string())
}

/// `|gap|` per level against `N`, with log-log slopes where defined.
pub fn convergence(t: f64, u: f64, n_list: &str, levels: usize) -> Result<String> {
    check_params(t, u)?;
    if levels == 0 || levels > 8 {
        return Err(Error::InvalidInput("need 1 <= levels <= 8".into()));
    }
    let ns = parse_n_list(n_list)?;
    let p = build_dimer(t, u);
    let st = find_minimizers(&p, &Default::default())?.remove(0);
    let rep = compare_spectra(&p, &st, &ns, levels, &HarnessOptions::default())?;
    let series: Vec<serde_json::Value> = (1..=levels)
        .map(|l| {
            let g = rep.gaps_for_level(l);
            json!({ "l": l, "N": g.iter().map(|x| x.0).collect::<Vec<_>>(), "gap": g.iter().map(|x| x.1.abs()).collect::<Vec<_>>() })
        })
        .collect();
    let fits: Vec<serde_json::Value> = convergence_fit(&rep)
        .unwrap_or_default()
        .iter()
        .map(|f| json!({ "l": f.l, "slope": f.slope, "r2": f.r2 }))
        .collect();
    Ok(json!({ "series": series, "fits": fits }).to_string())
}

fn to_js(r: Result<String>) -> std::result::Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&format!("{}: {e}", e.code())))
}

#[wasm_bindgen]
pub fn dimer_spectra(t: f64, u: f64, n: usize, levels: usize) -> std::result::Result<String, JsValue> {
    to_js(spectra(t, u, n, levels))
}

#[wasm_bindgen]
pub fn hartree_landscape(t: f64, u: f64, samples: usize) -> std::result::Result<String, JsValue> {
    to_js(landscape(t, u, samples))
}

#[wasm_bindgen]
pub fn gap_convergence(t: f64, u: f64, n_list: &str, levels: usize) -> std::result::Result<String, JsValue> {
    to_js(convergence(t, u, n_list, levels))
}
