//! JSON and CSV formats for models, states, spectra and reports.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::bogoliubov::{depletion, BogoliubovSpectrum, Stability};
use crate::error::{Error, Result};
use crate::harness::{ComparisonReport, ComparisonRow, Thm1Scan, Thm3Report};
use crate::hartree::{HartreeState, StateKind};
use crate::linalg::{CMatrix, CVector, C64};
use crate::model::{validate_problem, ModeProblem, Tensor4};

type Pair = [f64; 2];

fn pairs<'a>(it: impl Iterator<Item = &'a C64>) -> Vec<Pair> {
    it.map(|z| [z.re, z.im]).collect()
}

fn complex(v: &[Pair]) -> Vec<C64> {
    v.iter().map(|p| C64::new(p[0], p[1])).collect()
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    d: usize,
    #[serde(rename = "T")]
    t: Vec<Pair>,
    #[serde(rename = "W")]
    w: Vec<Pair>,
    #[serde(rename = "W2", default, skip_serializing_if = "Option::is_none")]
    w2: Option<Vec<Pair>>,
    #[serde(default)]
    shift: f64,
}

pub fn model_to_json(problem: &ModeProblem) -> String {
    let d = problem.d();
    let t = problem.kinetic();
    let file = ModelFile {
        d,
        t: (0..d * d).map(|i| [t[(i / d, i % d)].re, t[(i / d, i % d)].im]).collect(),
        w: pairs(problem.interaction().data().iter()),
        w2: problem.interaction_sq().map(|w| pairs(w.data().iter())),
        shift: problem.shift(),
    };
    serde_json::to_string_pretty(&file).expect("model serializes")
}

/// Parses and validates a model document. The stored shift is ignored and
/// recomputed from `T`.
pub fn model_from_json(text: &str) -> Result<ModeProblem> {
    let f: ModelFile = serde_json::from_str(text)?;
    if f.d < 2 {
        return Err(Error::InvalidInput(format!("d must be at least 2, got {}", f.d)));
    }
    let d = f.d;
    if f.t.len() != d * d {
        return Err(Error::DimensionMismatch { expected: d * d, got: f.t.len() });
    }
    let t = CMatrix::from_row_slice(d, d, &complex(&f.t));
    let w = Tensor4::from_vec(d, complex(&f.w))?;
    let w2 = f.w2.map(|v| Tensor4::from_vec(d, complex(&v))).transpose()?;
    validate_problem(t, w, w2)
}

#[derive(Serialize, Deserialize)]
struct StateFile {
    c: Vec<Pair>,
    energy: f64,
    mu0: f64,
    residual: f64,
    kind: StateKind,
    hessian_min_eig: Option<f64>,
}

pub fn state_to_json(state: &HartreeState) -> String {
    serde_json::to_string_pretty(&state_value(state)).expect("state serializes")
}

pub fn states_to_json(states: &[HartreeState]) -> String {
    let v: Vec<serde_json::Value> = states.iter().map(state_value).collect();
    serde_json::to_string_pretty(&v).expect("states serialize")
}

fn state_value(state: &HartreeState) -> serde_json::Value {
    let f = StateFile {
        c: pairs(state.c.iter()),
        energy: state.energy,
        mu0: state.mu0,
        residual: state.residual,
        kind: state.kind,
        hessian_min_eig: state.hessian_min_eig,
    };
    serde_json::to_value(f).expect("state serializes")
}

pub fn state_from_json(text: &str) -> Result<HartreeState> {
    let f: StateFile = serde_json::from_str(text)?;
    if f.c.is_empty() {
        return Err(Error::ZeroVector);
    }
    Ok(HartreeState {
        c: CVector::from_vec(complex(&f.c)),
        energy: f.energy,
        mu0: f.mu0,
        residual: f.residual,
        kind: f.kind,
        hessian_min_eig: f.hessian_min_eig,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumFile {
    pub e: Vec<f64>,
    #[serde(rename = "E0")]
    pub e0: Option<f64>,
    pub e0_defined: bool,
    pub stability: Stability,
    pub eta: f64,
    pub depletion: Option<f64>,
    pub zero_modes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<f64>>,
}

impl SpectrumFile {
    pub fn new(spec: &BogoliubovSpectrum, levels: Option<Vec<f64>>) -> Self {
        SpectrumFile {
            e: spec.e.clone(),
            e0: spec.e0,
            e0_defined: spec.e0.is_some(),
            stability: spec.stability,
            eta: spec.eta,
            depletion: depletion(spec).ok(),
            zero_modes: spec.zero_modes,
            levels,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spectrum serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// 17 significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

pub const COMPARISON_HEADER: &str = "N,l,exact_excitation,bog_level,gap,nplus";

pub fn comparison_to_csv(report: &ComparisonReport) -> String {
    let mut s = String::from(COMPARISON_HEADER);
    s.push('\n');
    for r in &report.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.n,
            r.l,
            fmt_num(r.exact_excitation),
            fmt_num(r.bog_level),
            fmt_num(r.gap),
            fmt_num(r.nplus)
        );
    }
    s
}

pub fn comparison_rows_from_csv(text: &str) -> Result<Vec<ComparisonRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == COMPARISON_HEADER => {}
        other => return Err(Error::Parse(format!("unexpected header {other:?}"))),
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(Error::Parse(format!("bad row: {line}")));
            }
            let int = |x: &str| x.trim().parse::<usize>().map_err(|_| Error::Parse(format!("bad integer in: {line}")));
            let num = |x: &str| x.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number in: {line}")));
            Ok(ComparisonRow {
                n: int(f[0])?,
                l: int(f[1])?,
                exact_excitation: num(f[2])?,
                bog_level: num(f[3])?,
                gap: num(f[4])?,
                nplus: num(f[5])?,
            })
        })
        .collect()
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes")
}

pub fn comparison_from_json(text: &str) -> Result<ComparisonReport> {
    Ok(serde_json::from_str(text)?)
}

/// Two columns `N |gap|` for one level, ready for gnuplot.
pub fn gap_series(report: &ComparisonReport, l: usize) -> String {
    let mut s = format!("# N |gap| for level {l}\n");
    for (n, g) in report.gaps_for_level(l) {
        let _ = writeln!(s, "{} {}", n, fmt_num(g.abs()));
    }
    s
}

pub fn thm1_to_csv(scan: &Thm1Scan) -> String {
    let mut s = String::from("N,probe,norm\n");
    for r in &scan.rows {
        let _ = writeln!(s, "{},{},{}", r.n, r.probe, fmt_num(r.norm));
    }
    s
}

pub fn thm3_to_csv(report: &Thm3Report) -> String {
    let mut s = String::from("N,lambda_N,nplus_N,M,residual,norm_kept\n");
    for r in &report.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.n,
            fmt_num(r.lambda_n),
            fmt_num(r.nplus_n),
            r.m,
            fmt_num(r.residual),
            fmt_num(r.norm_kept)
        );
    }
    s
}
