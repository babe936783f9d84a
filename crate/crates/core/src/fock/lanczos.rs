//! Hermitian eigensolvers for [`SparseOperator`]s: Lanczos with full
//! reorthogonalization and locking restarts, with a dense fallback for
//! small dimensions.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::sparse::SparseOperator;
use crate::error::{Error, Result};
use crate::linalg::{eigh, CMatrix, CVector, C64};

#[derive(Clone, Copy, Debug)]
pub struct EigenOptions {
    pub seed: u64,
    /// Relative Ritz-residual tolerance (scaled by a norm bound of the operator).
    pub tol: f64,
    /// Dimensions up to this size are solved densely.
    pub dense_threshold: usize,
    /// Cap on Krylov steps per pass.
    pub max_steps: usize,
    pub max_passes: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions { seed: 0x5eed, tol: 1e-11, dense_threshold: 400, max_steps: 4000, max_passes: 64 }
    }
}

/// Eigenvalues ascending with matching eigenvector columns.
#[derive(Clone, Debug)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl EigenPairs {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn vector(&self, i: usize) -> CVector {
        self.vectors.column(i).into()
    }
}

/// Full dense spectrum.
pub fn dense_spectrum(op: &SparseOperator) -> EigenPairs {
    let (values, vectors) = eigh(&op.to_dense());
    EigenPairs { values, vectors }
}

fn take_columns(vals: &[f64], vecs: &CMatrix, idx: &[usize]) -> EigenPairs {
    let values = idx.iter().map(|&i| vals[i]).collect();
    let vectors = CMatrix::from_fn(vecs.nrows(), idx.len(), |r, c| vecs[(r, idx[c])]);
    EigenPairs { values, vectors }
}

fn random_unit(dim: usize, rng: &mut ChaCha8Rng) -> CVector {
    CVector::from_fn(dim, |_, _| {
        let a: f64 = StandardNormal.sample(rng);
        let b: f64 = StandardNormal.sample(rng);
        C64::new(a, b)
    })
    .normalize()
}

/// Relative size of the next Lanczos vector below which the Krylov space is
/// taken as invariant.
const BREAKDOWN: f64 = 1e-10;

fn orthogonalize(w: &mut CVector, basis: &[CVector]) {
    // two rounds of classical Gram-Schmidt
    for _ in 0..2 {
        for v in basis {
            let c = v.dotc(w);
            w.axpy(-c, v, C64::from(1.0));
        }
    }
}

/// One Lanczos pass on the complement of `locked`; returns the converged
/// lowest Ritz pairs (at most `want`).
fn lanczos_pass<F>(
    apply: &F,
    dim: usize,
    locked: &[CVector],
    want: usize,
    anorm: f64,
    opts: &EigenOptions,
    rng: &mut ChaCha8Rng,
) -> Vec<(f64, CVector)>
where
    F: Fn(&CVector) -> CVector,
{
    let free = dim - locked.len();
    if free == 0 {
        return Vec::new();
    }
    let mut v = random_unit(dim, rng);
    orthogonalize(&mut v, locked);
    let nv = v.norm();
    if nv < 1e-8 {
        return Vec::new();
    }
    v.unscale_mut(nv);
    let mut basis: Vec<CVector> = vec![v];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let max_steps = opts.max_steps.min(free);
    let mut next_check = want.max(8);
    loop {
        let j = basis.len() - 1;
        let mut w = apply(&basis[j]);
        orthogonalize(&mut w, locked);
        let alpha = basis[j].dotc(&w).re;
        alphas.push(alpha);
        orthogonalize(&mut w, &basis);
        let beta = w.norm();
        let breakdown = beta <= BREAKDOWN * anorm.max(1e-300);
        let exhausted = breakdown || basis.len() >= max_steps;
        if basis.len() >= next_check || exhausted {
            let m = alphas.len();
            let tri = DMatrix::<f64>::from_fn(m, m, |r, c| {
                if r == c {
                    alphas[r]
                } else if r + 1 == c {
                    betas[r]
                } else if c + 1 == r {
                    betas[c]
                } else {
                    0.0
                }
            });
            let eig = tri.symmetric_eigen();
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
            let mut converged = Vec::new();
            for &i in order.iter().take(want) {
                let est = (beta * eig.eigenvectors[(m - 1, i)]).abs();
                if breakdown || est <= opts.tol * anorm {
                    converged.push(i);
                } else {
                    break;
                }
            }
            if converged.len() >= want.min(m) || exhausted {
                return converged
                    .into_iter()
                    .map(|i| {
                        let mut y = CVector::zeros(dim);
                        for (k, b) in basis.iter().enumerate() {
                            y.axpy(C64::from(eig.eigenvectors[(k, i)]), b, C64::from(1.0));
                        }
                        let n = y.norm();
                        (eig.eigenvalues[i], y.unscale(n))
                    })
                    .collect();
            }
            next_check = (basis.len() + basis.len() / 8 + 4).min(max_steps);
        }
        betas.push(beta);
        let mut next = w.unscale(beta);
        orthogonalize(&mut next, locked);
        orthogonalize(&mut next, &basis);
        let nn = next.norm();
        basis.push(next.unscale(nn));
    }
}

fn locking_lanczos<F>(apply: F, dim: usize, k: usize, anorm: f64, opts: &EigenOptions) -> Result<Vec<(f64, CVector)>>
where
    F: Fn(&CVector) -> CVector,
{
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut locked: Vec<(f64, CVector)> = Vec::new();
    let slack = 1e-9 * anorm.max(1.0);
    for _ in 0..opts.max_passes {
        let vecs: Vec<CVector> = locked.iter().map(|p| p.1.clone()).collect();
        let found = lanczos_pass(&apply, dim, &vecs, k, anorm, opts, &mut rng);
        let kth = if locked.len() >= k { Some(locked[k - 1].0) } else { None };
        let useful: Vec<(f64, CVector)> = found
            .into_iter()
            .filter(|(v, x)| kth.is_none_or(|t| *v <= t + slack) && (apply(x) - x.scale(*v)).norm() <= 1e-6 * anorm.max(1e-300))
            .collect();
        if useful.is_empty() {
            if locked.len() >= k || locked.len() == dim {
                locked.truncate(k);
                return Ok(locked);
            }
            return Err(Error::ConvergenceFailure(locked.len()));
        }
        locked.extend(useful);
        locked.sort_by(|a, b| a.0.total_cmp(&b.0));
        if locked.len() == dim {
            locked.truncate(k);
            return Ok(locked);
        }
    }
    Err(Error::ConvergenceFailure(locked.len().min(k)))
}

fn finish(op: &SparseOperator, pairs: Vec<(f64, CVector)>) -> EigenPairs {
    // Rayleigh-Ritz on the collected vectors tidies orthogonality and values
    let dim = op.dim();
    let k = pairs.len();
    let mut q = CMatrix::from_fn(dim, k, |r, c| pairs[c].1[r]);
    // re-orthonormalize
    for c in 0..k {
        let mut col: CVector = q.column(c).into();
        for p in 0..c {
            let prev: CVector = q.column(p).into();
            let s = prev.dotc(&col);
            col.axpy(-s, &prev, C64::from(1.0));
        }
        let n = col.norm();
        q.set_column(c, &col.unscale(n));
    }
    let aq = CMatrix::from_fn(dim, k, |_, _| C64::from(0.0));
    let mut aq = aq;
    for c in 0..k {
        let col: CVector = q.column(c).into();
        aq.set_column(c, &op.matvec(&col));
    }
    let small = q.adjoint() * &aq;
    let (vals, y) = eigh(&small);
    EigenPairs { values: vals, vectors: q * y }
}

/// The `k` lowest eigenpairs.
pub fn eig_lowest(op: &SparseOperator, k: usize, opts: &EigenOptions) -> Result<EigenPairs> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    let dim = op.dim();
    let k = k.min(dim);
    if dim <= opts.dense_threshold {
        let full = dense_spectrum(op);
        let idx: Vec<usize> = (0..k).collect();
        return Ok(take_columns(&full.values, &full.vectors, &idx));
    }
    let anorm = op.norm_bound();
    let pairs = locking_lanczos(|x| op.matvec(x), dim, k, anorm, opts)?;
    Ok(finish(op, pairs))
}

/// The `k` eigenpairs whose eigenvalues lie closest to `target`, sorted
/// ascending by value. Large operators use Lanczos on `(A - target)²`.
pub fn eig_nearest(op: &SparseOperator, target: f64, k: usize, opts: &EigenOptions) -> Result<EigenPairs> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    let dim = op.dim();
    let k = k.min(dim);
    let mut out = if dim <= opts.dense_threshold {
        let full = dense_spectrum(op);
        let mut idx: Vec<usize> = (0..dim).collect();
        idx.sort_by(|&a, &b| (full.values[a] - target).abs().total_cmp(&(full.values[b] - target).abs()));
        idx.truncate(k);
        take_columns(&full.values, &full.vectors, &idx)
    } else {
        let shifted = op.add_identity(-target);
        let anorm = shifted.norm_bound();
        let folded = EigenOptions { tol: opts.tol * 1e-3, ..*opts };
        let pairs = locking_lanczos(|x| shifted.matvec(&shifted.matvec(x)), dim, k, anorm * anorm, &folded)?;
        finish(op, pairs)
    };
    let mut idx: Vec<usize> = (0..out.values.len()).collect();
    idx.sort_by(|&a, &b| out.values[a].total_cmp(&out.values[b]));
    out = take_columns(&out.values, &out.vectors, &idx);
    Ok(out)
}

/// max over pairs of ‖A v − λ v‖.
pub fn max_residual(op: &SparseOperator, pairs: &EigenPairs) -> f64 {
    (0..pairs.len())
        .map(|i| {
            let v = pairs.vector(i);
            (op.matvec(&v) - v.scale(pairs.values[i])).norm()
        })
        .fold(0.0, f64::max)
}
