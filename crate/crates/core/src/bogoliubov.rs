//! Hessian blocks of the Hartree functional, symplectic diagonalization,
//! level enumeration and the truncated Fock matrix of the quadratic
//! Hamiltonian.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::basis::{BasisKind, FockBasis};
use crate::fock::ops::{assemble_terms, number_conserving, Term};
use crate::fock::sparse::SparseOperator;
use crate::hartree::{energy_and_gradient, HartreeState};
use crate::linalg::{eigh, eigvals_general, householder_frame, null_space, CMatrix, CVector, C64, ZERO};
use crate::model::ModeProblem;

/// Residual above which a state is not treated as stationary.
pub const STATIONARY_TOL: f64 = 1e-6;
pub const DEFAULT_TOL_DEGENERATE: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct QuadraticForm {
    /// Rows span the orthogonal complement of the condensate.
    pub qbasis: CMatrix,
    pub a: CMatrix,
    pub b: CMatrix,
    /// Unitary with the condensate as first column and `qbasis` rows as the rest.
    pub frame: CMatrix,
}

impl QuadraticForm {
    /// Blocks given directly, condensate taken as the first mode of `a.nrows() + 1`.
    pub fn from_blocks(a: CMatrix, b: CMatrix) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b.nrows() != n || b.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: b.nrows() });
        }
        let qbasis = CMatrix::from_fn(n, n + 1, |r, c| if c == r + 1 { C64::from(1.0) } else { ZERO });
        Ok(QuadraticForm { qbasis, a, b, frame: CMatrix::identity(n + 1, n + 1) })
    }

    pub fn modes(&self) -> usize {
        self.a.nrows()
    }

    /// `[[A, B], [conj B, conj A]]`
    pub fn hessian(&self) -> CMatrix {
        let n = self.modes();
        CMatrix::from_fn(2 * n, 2 * n, |r, c| match (r < n, c < n) {
            (true, true) => self.a[(r, c)],
            (true, false) => self.b[(r, c - n)],
            (false, true) => self.b[(r - n, c)].conj(),
            (false, false) => self.a[(r - n, c - n)].conj(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Landau,
    DynamicallyUnstable,
    Degenerate,
}

impl Stability {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::Landau => "landau",
            Stability::DynamicallyUnstable => "dynamically_unstable",
            Stability::Degenerate => "degenerate",
        }
    }
}

#[derive(Clone, Debug)]
pub struct BogoliubovSpectrum {
    /// Ascending for stable spectra, by absolute value for Landau ones.
    pub e: Vec<f64>,
    /// `None` when the spectrum has no well-defined ground energy.
    pub e0: Option<f64>,
    pub umat: CMatrix,
    pub vmat: CMatrix,
    pub stability: Stability,
    pub eta: f64,
    pub zero_modes: usize,
}

/// Blocks at a stationary state.
pub fn quadratic_form(problem: &ModeProblem, state: &HartreeState) -> Result<QuadraticForm> {
    let d = problem.d();
    if state.c.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: state.c.len() });
    }
    let mf = energy_and_gradient(problem, &state.c)?;
    if !(mf.residual < STATIONARY_TOL) {
        return Err(Error::NotStationary(mf.residual));
    }
    let c = state.c.normalize();
    let w = problem.interaction();
    let mut k1 = CMatrix::zeros(d, d);
    let mut k2 = CMatrix::zeros(d, d);
    for m in 0..d {
        for n in 0..d {
            let mut s1 = ZERO;
            let mut s2 = ZERO;
            for p in 0..d {
                for q in 0..d {
                    s1 += c[p] * c[q].conj() * w.get(m, q, p, n);
                    s2 += c[p] * c[q] * w.get(m, n, p, q);
                }
            }
            k1[(m, n)] = s1;
            k2[(m, n)] = s2;
        }
    }
    let h = problem.kinetic() + &mf.meanfield - CMatrix::identity(d, d).scale(mf.mu) + k1;
    let frame = householder_frame(&c);
    let q = frame.columns(1, d - 1).into_owned();
    let a = q.adjoint() * h * &q;
    let b = q.adjoint() * k2 * q.map(|z| z.conj());
    let a = (&a + a.adjoint()).scale(0.5);
    let b = (&b + b.transpose()).scale(0.5);
    Ok(QuadraticForm { qbasis: q.transpose(), a, b, frame })
}

/// Smallest eigenvalue of the Hessian block matrix.
pub fn hessian_min_eig(qf: &QuadraticForm) -> f64 {
    eigh(&qf.hessian()).0.first().copied().unwrap_or(f64::INFINITY)
}

fn signature(n: usize) -> CMatrix {
    CMatrix::from_fn(2 * n, 2 * n, |r, c| {
        if r != c {
            ZERO
        } else if r < n {
            C64::from(1.0)
        } else {
            C64::from(-1.0)
        }
    })
}

fn split_blocks(n: usize, cols: &[(f64, CVector)]) -> (Vec<f64>, CMatrix, CMatrix) {
    let e = cols.iter().map(|p| p.0).collect();
    let u = CMatrix::from_fn(n, cols.len(), |r, k| cols[k].1[r]);
    let v = CMatrix::from_fn(n, cols.len(), |r, k| cols[k].1[r + n]);
    (e, u, v)
}

fn ground_energy(e: &[f64], a: &CMatrix) -> f64 {
    0.5 * (e.iter().sum::<f64>() - a.trace().re)
}

/// Symplectic diagonalization with stability classification.
pub fn diagonalize(qf: &QuadraticForm, tol_degenerate: f64) -> BogoliubovSpectrum {
    let n = qf.modes();
    let s = qf.hessian();
    let j = signature(n);
    let eta = if n == 0 { f64::INFINITY } else { eigh(&s).0[0] };
    let empty = |stability, zero_modes| BogoliubovSpectrum {
        e: Vec::new(),
        e0: None,
        umat: CMatrix::zeros(n, 0),
        vmat: CMatrix::zeros(n, 0),
        stability,
        eta,
        zero_modes,
    };
    if n == 0 {
        return BogoliubovSpectrum { e0: Some(0.0), ..empty(Stability::Stable, 0) };
    }
    if eta > tol_degenerate {
        if let Some(chol) = s.clone().cholesky() {
            let l = chol.unpack();
            let aux = l.adjoint() * &j * &l;
            let (vals, vecs) = eigh(&aux);
            // vals has n negative and n positive entries; keep the positive half
            let mut cols: Vec<(f64, CVector)> = Vec::with_capacity(n);
            for (k, &ev) in vals.iter().enumerate().skip(n) {
                let y: CVector = vecs.column(k).into();
                let x = (&j * &l * y).unscale(ev.sqrt());
                cols.push((ev, x));
            }
            let (e, u, v) = split_blocks(n, &cols);
            let e0 = ground_energy(&e, &qf.a);
            return BogoliubovSpectrum { e, e0: Some(e0), umat: u, vmat: v, stability: Stability::Stable, eta, zero_modes: 0 };
        }
    }
    // indefinite (or numerically singular) Hessian: direct eigensolve of J S
    let js = &j * &s;
    let scale = s.iter().fold(1.0f64, |m, z| m.max(z.norm()));
    let omegas = eigvals_general(&js);
    if omegas.iter().any(|w| w.im.abs() > 1e-7 * scale) {
        return empty(Stability::DynamicallyUnstable, 0);
    }
    let mut re: Vec<f64> = omegas.iter().map(|w| w.re).collect();
    re.sort_by(f64::total_cmp);
    let cluster_tol = 1e-6 * scale;
    let mut clusters: Vec<Vec<f64>> = Vec::new();
    for w in re {
        match clusters.last_mut() {
            Some(c) if w - c[c.len() - 1] <= cluster_tol => c.push(w),
            _ => clusters.push(vec![w]),
        }
    }
    let mut zero_modes = 0usize;
    let mut cols: Vec<(f64, CVector)> = Vec::new();
    for cl in &clusters {
        let omega = cl.iter().sum::<f64>() / cl.len() as f64;
        if omega.abs() <= cluster_tol {
            zero_modes += cl.len();
            continue;
        }
        let shifted = &js - CMatrix::identity(2 * n, 2 * n).scale(omega);
        let x = null_space(&shifted, cl.len());
        let gram = x.adjoint() * &j * &x;
        let (g, gv) = eigh(&gram);
        for (k, &gk) in g.iter().enumerate() {
            if gk <= 1e-8 {
                continue;
            }
            let w: CVector = gv.column(k).into();
            let dir = (&x * w).unscale(gk.sqrt());
            if (&shifted * &dir).norm() <= 1e-6 * scale * dir.norm() {
                cols.push((omega, dir));
            }
        }
    }
    // each mode appears once as ±pair with opposite J-norm; zero pairs count twice
    zero_modes /= 2;
    if zero_modes > 0 || cols.len() != n {
        cols.sort_by(|a, b| a.0.abs().total_cmp(&b.0.abs()));
        let (e, u, v) = split_blocks(n, &cols);
        return BogoliubovSpectrum { e, e0: None, umat: u, vmat: v, stability: Stability::Degenerate, eta, zero_modes: zero_modes.max(1) };
    }
    cols.sort_by(|a, b| a.0.abs().total_cmp(&b.0.abs()).then(a.0.total_cmp(&b.0)));
    let (e, u, v) = split_blocks(n, &cols);
    let e0 = ground_energy(&e, &qf.a);
    let stability = if eta > tol_degenerate { Stability::Stable } else { Stability::Landau };
    BogoliubovSpectrum { e, e0: Some(e0), umat: u, vmat: v, stability, eta, zero_modes: 0 }
}

/// One Bogoliubov level: its value and the quasiparticle occupations.
#[derive(Clone, Debug, PartialEq)]
pub struct Level {
    pub value: f64,
    pub occupation: Vec<u32>,
}

struct Node {
    key: f64,
    occ: Vec<u32>,
    last: usize,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // reversed: BinaryHeap pops the smallest key, then the smallest occupation
    fn cmp(&self, other: &Self) -> Ordering {
        other.key.total_cmp(&self.key).then_with(|| other.occ.cmp(&self.occ))
    }
}

/// The `count` smallest `Σ n_k cost_k` configurations, best first.
fn best_first(cost: &[f64], count: usize) -> Vec<(f64, Vec<u32>)> {
    let mut heap = BinaryHeap::new();
    heap.push(Node { key: 0.0, occ: vec![0; cost.len()], last: 0 });
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let Some(node) = heap.pop() else { break };
        for i in node.last..cost.len() {
            let mut occ = node.occ.clone();
            occ[i] += 1;
            heap.push(Node { key: node.key + cost[i], occ, last: i });
        }
        out.push((node.key, node.occ));
    }
    out
}

/// Lowest `count` values of `E0 + Σ n_k e_k`.
pub fn enumerate_levels(spec: &BogoliubovSpectrum, count: usize) -> Result<Vec<f64>> {
    Ok(enumerate_configurations(spec, count)?.into_iter().map(|l| l.value).collect())
}

pub fn enumerate_configurations(spec: &BogoliubovSpectrum, count: usize) -> Result<Vec<Level>> {
    if spec.stability != Stability::Stable {
        return Err(Error::NotStable);
    }
    let e0 = spec.e0.ok_or(Error::NotStable)?;
    Ok(best_first(&spec.e, count)
        .into_iter()
        .map(|(v, occupation)| Level { value: e0 + v, occupation })
        .collect())
}

/// Levels `E0 + Σ n_k e_k` of a stable or Landau spectrum, taken in order
/// of the excitation cost `Σ n_k |e_k|` (for stable spectra this is the
/// plain ascending order).
pub fn enumerate_targets(spec: &BogoliubovSpectrum, count: usize) -> Result<Vec<Level>> {
    match spec.stability {
        Stability::Stable => enumerate_configurations(spec, count),
        Stability::Landau => {
            let e0 = spec.e0.ok_or(Error::NotStable)?;
            let cost: Vec<f64> = spec.e.iter().map(|x| x.abs()).collect();
            Ok(best_first(&cost, count)
                .into_iter()
                .map(|(_, occupation)| {
                    let value = e0 + occupation.iter().zip(&spec.e).map(|(&n, &e)| n as f64 * e).sum::<f64>();
                    Level { value, occupation }
                })
                .collect())
        }
        _ => Err(Error::NotStable),
    }
}

/// Matrix of `dΓ(A) + ½ Σ (B_ab a†_a a†_b + conj(B_ab) a_a a_b)` on the
/// excited Fock space truncated at `cutoff` particles.
pub fn fock_representation(qf: &QuadraticForm, cutoff: usize) -> Result<(FockBasis, SparseOperator)> {
    let n = qf.modes();
    let basis = FockBasis::new(n, BasisKind::Truncated(cutoff))?;
    let one = number_conserving(&basis, &qf.a, None);
    let mut terms = Vec::new();
    for a in 0..n {
        for b in 0..n {
            let v = qf.b[(a, b)];
            if v.norm() > 0.0 {
                terms.push(Term::new(v * 0.5, vec![(a, true), (b, true)]));
                terms.push(Term::new(v.conj() * 0.5, vec![(a, false), (b, false)]));
            }
        }
    }
    let pair = assemble_terms(&basis, &terms, |_| 1.0);
    Ok((basis, one.combine(C64::from(1.0), &pair, C64::from(1.0))))
}

/// Ground-state expectation of `N₊`, `tr V†V`.
pub fn depletion(spec: &BogoliubovSpectrum) -> Result<f64> {
    if spec.stability != Stability::Stable {
        return Err(Error::NotStable);
    }
    Ok((spec.vmat.adjoint() * &spec.vmat).trace().re)
}
