//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Eigen-decomposition of a Hermitian matrix with eigenvalues ascending.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    // symmetrize so round-off in the input does not leak into the solver
    let h = (m + m.adjoint()).scale(0.5);
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn eigvalsh(m: &CMatrix) -> Vec<f64> {
    let n = m.nrows();
    if n == 0 {
        return Vec::new();
    }
    let h = (m + m.adjoint()).scale(0.5);
    let mut v: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Eigenvalues of a general complex matrix from its Schur form.
pub fn eigvals_general(m: &CMatrix) -> Vec<C64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let schur = m.clone().schur();
    let (_, t) = schur.unpack();
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}

/// Largest entrywise deviation from Hermiticity.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0f64, |a, z| a.max(z.norm()))
}

/// Unitary `V` with `V e_0 = c` built from one Householder reflection; the
/// remaining columns span the orthogonal complement of `c`.
pub fn householder_frame(c: &CVector) -> CMatrix {
    let d = c.len();
    let alpha = if c[0].norm() > 0.0 { c[0] / c[0].norm() } else { ONE };
    let mut w = c.clone();
    w[0] += alpha;
    let wn = w.norm_squared();
    let mut h = CMatrix::identity(d, d);
    if wn > 0.0 {
        h -= (&w * w.adjoint()).scale(2.0 / wn);
    }
    // H c = -alpha e_0, hence H e_0 = -conj(alpha) c
    let first = h.column(0).map(|z| -z * alpha);
    h.set_column(0, &first);
    h
}

/// Fix the global phase: the largest-modulus entry (lowest index on ties)
/// becomes real and positive.
pub fn gauge_fix(c: &mut CVector) {
    let mut best = 0usize;
    let mut best_mod = -1.0f64;
    for (i, z) in c.iter().enumerate() {
        // relative slack so that round-off does not flip the tie-break
        if z.norm() > best_mod * (1.0 + 1e-10) + 1e-14 {
            best = i;
            best_mod = z.norm();
        }
    }
    if best_mod > 0.0 {
        let phase = c[best].conj() / c[best].norm();
        for z in c.iter_mut() {
            *z *= phase;
        }
        c[best] = C64::new(c[best].re, 0.0);
    }
}

/// Orthonormal basis of the approximate null space of `m`: right singular
/// vectors belonging to the `r` smallest singular values.
pub fn null_space(m: &CMatrix, r: usize) -> CMatrix {
    let n = m.ncols();
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("requested v_t");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    CMatrix::from_fn(n, r, |i, k| vt[(order[k], i)].conj())
}

/// Least-squares line through `(x, y)`; returns `(slope, intercept, r2)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, intercept, r2)
}

pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn householder_maps_first_axis_to_c() {
        let c = CVector::from_vec(vec![
            C64::new(0.3, 0.4),
            C64::new(-0.5, 0.1),
            C64::new(0.2, -0.6),
        ]);
        let c = c.normalize();
        let v = householder_frame(&c);
        let id = v.adjoint() * &v;
        assert!((id - CMatrix::identity(3, 3)).norm() < 1e-13);
        assert!((v.column(0) - &c).norm() < 1e-13);
    }

    #[test]
    fn householder_handles_zero_leading_entry() {
        let c = CVector::from_vec(vec![ZERO, ONE, ZERO]);
        let v = householder_frame(&c);
        assert!((v.column(0) - &c).norm() < 1e-14);
        assert!((v.adjoint() * &v - CMatrix::identity(3, 3)).norm() < 1e-14);
    }

    #[test]
    fn gauge_prefers_lowest_index_on_ties() {
        let mut c = CVector::from_vec(vec![C64::new(0.0, 1.0), C64::new(-1.0, 0.0)]);
        gauge_fix(&mut c);
        assert!((c[0] - ONE).norm() < 1e-15);
        assert!((c[1] - C64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(7, 2), 21);
        assert_eq!(binomial(4, 1), 4);
        assert_eq!(binomial(3, 5), 0);
    }

    #[test]
    fn general_eigenvalues_of_rotation_generator() {
        let m = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, -ONE, ZERO]);
        let mut ev = eigvals_general(&m);
        ev.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert!((ev[0] - C64::new(0.0, -1.0)).norm() < 1e-12);
        assert!((ev[1] - C64::new(0.0, 1.0)).norm() < 1e-12);
    }
}
