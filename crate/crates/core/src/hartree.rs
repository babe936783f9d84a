//! Hartree functional, self-consistent stationary states and multistart
//! search for minimizers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bogoliubov::{quadratic_form, hessian_min_eig};
use crate::error::{Error, Result};
use crate::linalg::{eigh, gauge_fix, CMatrix, CVector, C64, ZERO};
use crate::model::ModeProblem;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    Minimizer,
    Stationary,
    Unknown,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HartreeState {
    /// Gauge-fixed unit coefficient vector of the condensate.
    pub c: CVector,
    pub energy: f64,
    pub mu0: f64,
    pub residual: f64,
    pub kind: StateKind,
    pub hessian_min_eig: Option<f64>,
}

/// Everything the functional yields at one point of the unit sphere.
#[derive(Clone, Debug)]
pub struct MeanField {
    pub energy: f64,
    /// Imaginary part of the quartic contraction; zero up to round-off.
    pub energy_imag: f64,
    /// Matrix of the mean-field potential `|u|² * w`.
    pub meanfield: CMatrix,
    pub mu: f64,
    pub residual: f64,
}

pub fn meanfield_matrix(problem: &ModeProblem, c: &CVector) -> CMatrix {
    let d = problem.d();
    let w = problem.interaction();
    CMatrix::from_fn(d, d, |m, n| {
        let mut acc = ZERO;
        for q in 0..d {
            let cq = c[q].conj();
            for p in 0..d {
                acc += cq * c[p] * w.get(m, q, n, p);
            }
        }
        acc
    })
}

pub fn energy_and_gradient(problem: &ModeProblem, c: &CVector) -> Result<MeanField> {
    let norm = c.norm();
    if !(norm > 1e-300) || !norm.is_finite() {
        return Err(Error::ZeroVector);
    }
    let c = c.unscale(norm);
    let t = problem.kinetic();
    let mf = meanfield_matrix(problem, &c);
    let kin = c.dotc(&(t * &c));
    let tc = (t + &mf) * &c;
    // ⟨c, mf c⟩ equals Σ c̄_m c̄_n W_mnpq c_p c_q
    let quartic = c.dotc(&(&mf * &c));
    let e = kin + quartic * 0.5;
    let mu = c.dotc(&tc).re;
    let residual = (tc - c.scale(mu)).norm();
    Ok(MeanField { energy: e.re, energy_imag: e.im, meanfield: mf, mu, residual })
}

#[derive(Clone, Copy, Debug)]
pub struct ScfOptions {
    pub max_iter: usize,
    pub tol: f64,
    /// Weight of the previous iterate in the linear mix.
    pub damping: f64,
}

impl Default for ScfOptions {
    fn default() -> Self {
        ScfOptions { max_iter: 5000, tol: 1e-10, damping: 0.5 }
    }
}

fn finish(problem: &ModeProblem, mut c: CVector, kind: StateKind) -> Result<HartreeState> {
    c = c.normalize();
    gauge_fix(&mut c);
    let mf = energy_and_gradient(problem, &c)?;
    Ok(HartreeState { c, energy: mf.energy, mu0: mf.mu, residual: mf.residual, kind, hessian_min_eig: None })
}

/// Damped self-consistent iteration that follows the eigenvector of the
/// mean-field operator with the largest overlap with the current iterate,
/// so excited stationary branches can be tracked as well as the ground one.
pub fn solve_stationary(problem: &ModeProblem, init: &CVector, opts: &ScfOptions) -> Result<HartreeState> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidInput("tol must be positive".into()));
    }
    if init.len() != problem.d() {
        return Err(Error::DimensionMismatch { expected: problem.d(), got: init.len() });
    }
    let norm = init.norm();
    if !(norm > 1e-300) {
        return Err(Error::ZeroVector);
    }
    let mut c = init.unscale(norm);
    let mut residual = energy_and_gradient(problem, &c)?.residual;
    if residual < opts.tol {
        return finish(problem, c, StateKind::Stationary);
    }
    let mut polishing = 0usize;
    let mut best = (residual, c.clone());
    for _ in 0..opts.max_iter {
        c = scf_step(problem, &c, opts.damping);
        residual = energy_and_gradient(problem, &c)?.residual;
        if residual < best.0 {
            best = (residual, c.clone());
        }
        if best.0 < opts.tol {
            // a few extra sweeps push the residual toward round-off at no real cost
            polishing += 1;
            if polishing > POLISH_STEPS || best.0 < 1e-15 {
                return finish(problem, best.1, StateKind::Stationary);
            }
        }
    }
    if best.0 < opts.tol {
        return finish(problem, best.1, StateKind::Stationary);
    }
    Err(Error::NoConvergence { iterations: opts.max_iter, residual })
}

const POLISH_STEPS: usize = 60;

fn scf_step(problem: &ModeProblem, c: &CVector, damping: f64) -> CVector {
    let t = problem.kinetic();
    {
        let fock = t + meanfield_matrix(problem, c);
        let (_, vecs) = eigh(&fock);
        let (best, _) = (0..vecs.ncols())
            .map(|j| (j, vecs.column(j).dotc(c).norm()))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        let mut v: CVector = vecs.column(best).into();
        let ov = v.dotc(c);
        if ov.norm() > 0.0 {
            v *= ov / ov.norm();
        }
        let mixed = c.scale(damping) + v.scale(1.0 - damping);
        if mixed.norm() > 1e-12 {
            mixed.normalize()
        } else {
            v
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct MultistartOptions {
    pub n_starts: usize,
    pub seed: u64,
    pub tol: f64,
    pub dedup_tol: f64,
    pub damping: f64,
    pub max_iter: usize,
}

impl Default for MultistartOptions {
    fn default() -> Self {
        MultistartOptions { n_starts: 32, seed: 0, tol: 1e-10, dedup_tol: 1e-8, damping: 0.5, max_iter: 5000 }
    }
}

/// States whose energies lie within this window of the best are kept.
const ENERGY_WINDOW: f64 = 1e-8;
/// Distinct minimizers closer than this (but not identified) hint at a flat manifold.
const FAMILY_OVERLAP: f64 = 0.999;

fn random_start(d: usize, rng: &mut ChaCha8Rng) -> CVector {
    let v = CVector::from_fn(d, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im)
    });
    v.normalize()
}

fn canonical_key(c: &CVector) -> Vec<i64> {
    c.iter()
        .flat_map(|z| [(z.re * 1e8).round() as i64, (z.im * 1e8).round() as i64])
        .collect()
}

/// Multistart search for the global minimizers of the Hartree functional,
/// identified up to a global phase.
pub fn find_minimizers(problem: &ModeProblem, opts: &MultistartOptions) -> Result<Vec<HartreeState>> {
    if opts.n_starts == 0 {
        return Err(Error::InvalidInput("n_starts must be at least 1".into()));
    }
    let d = problem.d();
    let mut starts = Vec::with_capacity(opts.n_starts + 1);
    let (_, tv) = eigh(problem.kinetic());
    starts.push(CVector::from(tv.column(0)));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.n_starts {
        starts.push(random_start(d, &mut rng));
    }
    let scf = ScfOptions { max_iter: opts.max_iter, tol: opts.tol, damping: opts.damping };

    #[cfg(feature = "parallel")]
    let results: Vec<Result<HartreeState>> = {
        use rayon::prelude::*;
        starts.par_iter().map(|s| solve_stationary(problem, s, &scf)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<HartreeState>> = starts.iter().map(|s| solve_stationary(problem, s, &scf)).collect();

    let mut last_err = None;
    let mut converged = Vec::new();
    for r in results {
        match r {
            Ok(s) => converged.push(s),
            Err(e) => last_err = Some(e),
        }
    }
    if converged.is_empty() {
        return Err(last_err.unwrap_or(Error::NoConvergence { iterations: opts.max_iter, residual: f64::NAN }));
    }
    let best = converged.iter().map(|s| s.energy).fold(f64::INFINITY, f64::min);
    let mut kept: Vec<HartreeState> = Vec::new();
    for s in converged.into_iter().filter(|s| s.energy <= best + ENERGY_WINDOW) {
        let mut duplicate = false;
        for k in &kept {
            let ov = k.c.dotc(&s.c).norm();
            if ov > 1.0 - opts.dedup_tol {
                duplicate = true;
                break;
            }
            if ov > FAMILY_OVERLAP {
                return Err(Error::ContinuousFamilySuspected { overlap: ov });
            }
        }
        if !duplicate {
            kept.push(s);
        }
    }
    for s in kept.iter_mut() {
        let qf = quadratic_form(problem, s)?;
        let eta = hessian_min_eig(&qf);
        s.hessian_min_eig = Some(eta);
        s.kind = if eta >= -1e-9 { StateKind::Minimizer } else { StateKind::Stationary };
    }
    kept.sort_by(|a, b| canonical_key(&a.c).cmp(&canonical_key(&b.c)));
    Ok(kept)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_dimer, validate_problem, Tensor4};
    use crate::linalg::ONE;

    fn real(v: &[f64]) -> CVector {
        CVector::from_iterator(v.len(), v.iter().map(|&x| C64::from(x)))
    }

    /// Energy on the real great circle c = (cos φ, sin φ).
    fn angle_energy(t: f64, u: f64, phi: f64) -> f64 {
        let s = (2.0 * phi).sin();
        -t * s + 0.5 * u * (1.0 - 0.5 * s * s)
    }

    #[test]
    fn angle_scan_oracle_locates_symmetric_minimum() {
        let (best_phi, best) = (0..=20000)
            .map(|i| std::f64::consts::FRAC_PI_2 * i as f64 / 20000.0)
            .map(|p| (p, angle_energy(1.0, 1.0, p)))
            .fold((0.0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        assert!((best_phi - std::f64::consts::FRAC_PI_4).abs() < 1e-3);
        assert!((best + 0.75).abs() < 1e-8);
        // attractive dimer: E(s) = -s - 1.5 + 0.75 s², minimum at s = 2/3
        let best = (0..=200000)
            .map(|i| std::f64::consts::FRAC_PI_2 * i as f64 / 200000.0)
            .map(|p| angle_energy(1.0, -3.0, p))
            .fold(f64::INFINITY, f64::min);
        assert!((best + 11.0 / 6.0).abs() < 1e-9);
    }

    #[test]
    fn dimer_symmetric_point() {
        let p = build_dimer(1.0, 1.0);
        let r = energy_and_gradient(&p, &real(&[1.0, 1.0]).normalize()).unwrap();
        assert!((r.energy + 0.75).abs() < 1e-14);
        assert!((r.mu + 0.5).abs() < 1e-14);
        assert!(r.residual < 1e-14);
    }

    #[test]
    fn dimer_localized_point() {
        let p = build_dimer(1.0, 1.0);
        let r = energy_and_gradient(&p, &real(&[1.0, 0.0])).unwrap();
        assert!((r.energy - 0.5).abs() < 1e-14);
        assert!((r.mu - 1.0).abs() < 1e-14);
        assert!((r.residual - 1.0).abs() < 1e-14);
        assert!((r.meanfield[(0, 0)] - ONE).norm() < 1e-14);
        assert!(r.meanfield[(1, 1)].norm() < 1e-14);
    }

    #[test]
    fn zero_vector_is_rejected() {
        let p = build_dimer(1.0, 1.0);
        assert!(matches!(energy_and_gradient(&p, &real(&[0.0, 0.0])), Err(Error::ZeroVector)));
    }

    fn free_three_level() -> ModeProblem {
        let t = CMatrix::from_diagonal(&real(&[0.0, 1.0, 2.0]));
        validate_problem(t, Tensor4::zeros(3), None).unwrap()
    }

    #[test]
    fn free_eigenvector_has_zero_residual() {
        let p = free_three_level();
        let r = energy_and_gradient(&p, &real(&[0.0, 1.0, 0.0])).unwrap();
        assert!(r.residual < 1e-15);
        assert!((r.energy - 1.0).abs() < 1e-15 && (r.mu - 1.0).abs() < 1e-15);
    }

    #[test]
    fn scf_converges_on_repulsive_dimer() {
        let p = build_dimer(1.0, 1.0);
        let s = solve_stationary(&p, &real(&[0.9, 0.436]), &ScfOptions::default()).unwrap();
        assert!(s.residual < 1e-10);
        assert!((s.energy + 0.75).abs() < 1e-12);
        let target = real(&[1.0, 1.0]).normalize();
        assert!((s.c - target).norm() < 1e-9);
    }

    #[test]
    fn scf_keeps_excited_branch() {
        let p = free_three_level();
        let s = solve_stationary(&p, &real(&[0.0, 0.0, 1.0]), &ScfOptions::default()).unwrap();
        assert!((s.c[2] - ONE).norm() < 1e-14);
        assert!((s.mu0 - 2.0).abs() < 1e-14);
    }

    #[test]
    fn scf_breaks_symmetry_on_attractive_dimer() {
        let p = build_dimer(1.0, -3.0);
        let s = solve_stationary(&p, &real(&[0.95, 0.312]), &ScfOptions::default()).unwrap();
        assert!((s.energy + 11.0 / 6.0).abs() < 1e-10);
        assert!(s.c[0].re > s.c[1].re);
    }

    #[test]
    fn minimizers_of_repulsive_dimer() {
        let p = build_dimer(1.0, 1.0);
        let mins = find_minimizers(&p, &MultistartOptions::default()).unwrap();
        assert_eq!(mins.len(), 1);
        assert!((mins[0].c.clone() - real(&[1.0, 1.0]).normalize()).norm() < 1e-9);
        assert_eq!(mins[0].kind, StateKind::Minimizer);
        assert!(mins[0].hessian_min_eig.unwrap() > 0.0);
    }

    #[test]
    fn minimizers_of_attractive_dimer_are_swapped_pair() {
        let p = build_dimer(1.0, -3.0);
        let mins = find_minimizers(&p, &MultistartOptions::default()).unwrap();
        assert_eq!(mins.len(), 2);
        for m in &mins {
            assert!((m.energy + 11.0 / 6.0).abs() < 1e-10);
        }
        assert!((mins[0].c[0] - mins[1].c[1]).norm() < 1e-8);
        assert!((mins[0].c[1] - mins[1].c[0]).norm() < 1e-8);
    }

    #[test]
    fn minimizer_of_free_model_is_lowest_eigenvector() {
        let mins = find_minimizers(&free_three_level(), &MultistartOptions::default()).unwrap();
        assert_eq!(mins.len(), 1);
        assert!((mins[0].c[0] - ONE).norm() < 1e-9);
    }
}
