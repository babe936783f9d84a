//! Finite mode problems: a Hermitian kinetic matrix plus a two-body
//! interaction tensor `W[m,n,p,q] = <u_m ⊗ u_n, w u_p ⊗ u_q>`.

use nalgebra::Cholesky;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigh, eigvalsh, CMatrix, C64, ZERO};

/// Relative tolerance for all symmetry checks on the input data.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Dense rank-4 tensor stored in `m·d³ + n·d² + p·d + q` order.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor4 {
    d: usize,
    data: Vec<C64>,
}

impl Tensor4 {
    pub fn zeros(d: usize) -> Self {
        Tensor4 { d, data: vec![ZERO; d * d * d * d] }
    }

    pub fn from_vec(d: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != d * d * d * d {
            return Err(Error::DimensionMismatch { expected: d.pow(4), got: data.len() });
        }
        Ok(Tensor4 { d, data })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn index(&self, m: usize, n: usize, p: usize, q: usize) -> usize {
        ((m * self.d + n) * self.d + p) * self.d + q
    }

    #[inline]
    pub fn get(&self, m: usize, n: usize, p: usize, q: usize) -> C64 {
        self.data[self.index(m, n, p, q)]
    }

    #[inline]
    pub fn set(&mut self, m: usize, n: usize, p: usize, q: usize, v: C64) {
        let i = self.index(m, n, p, q);
        self.data[i] = v;
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, z| a.max(z.norm()))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| *z == ZERO)
    }

    /// Components in the rotated basis `u'_k = Σ_m V[m,k] u_m`.
    pub fn rotated(&self, v: &CMatrix) -> Tensor4 {
        let d = self.d;
        // contract one index at a time; d ≤ ~12 keeps this cheap
        let mut cur = self.data.clone();
        let mut next = vec![ZERO; cur.len()];
        let stride = [d * d * d, d * d, d, 1];
        for (slot, &s) in stride.iter().enumerate() {
            for (idx, out) in next.iter_mut().enumerate() {
                let k = (idx / s) % d;
                let base = idx - k * s;
                let mut acc = ZERO;
                for m in 0..d {
                    // bra slots take conj(V), ket slots take V
                    let coef = if slot < 2 { v[(m, k)].conj() } else { v[(m, k)] };
                    acc += coef * cur[base + m * s];
                }
                *out = acc;
            }
            std::mem::swap(&mut cur, &mut next);
        }
        Tensor4 { d, data: cur }
    }
}

/// Which algebraic symmetry of an interaction tensor failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Symmetry {
    /// `W[m,n,p,q] = W[n,m,q,p]`
    PairExchange,
    /// `conj(W[m,n,p,q]) = W[p,q,m,n]`
    Hermiticity,
    PairExchangeSq,
    HermiticitySq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModeProblem {
    d: usize,
    kinetic: CMatrix,
    interaction: Tensor4,
    interaction_sq: Option<Tensor4>,
    shift: f64,
}

impl ModeProblem {
    pub fn d(&self) -> usize {
        self.d
    }

    /// The kinetic matrix exactly as supplied.
    pub fn kinetic(&self) -> &CMatrix {
        &self.kinetic
    }

    /// `T + shift`, whose smallest eigenvalue is at least one.
    pub fn shifted_kinetic(&self) -> CMatrix {
        &self.kinetic + CMatrix::identity(self.d, self.d).scale(self.shift)
    }

    pub fn interaction(&self) -> &Tensor4 {
        &self.interaction
    }

    pub fn interaction_sq(&self) -> Option<&Tensor4> {
        self.interaction_sq.as_ref()
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Same problem expressed in the rotated mode basis given by the columns of `v`.
    pub fn rotated(&self, v: &CMatrix) -> ModeProblem {
        ModeProblem {
            d: self.d,
            kinetic: v.adjoint() * &self.kinetic * v,
            interaction: self.interaction.rotated(v),
            interaction_sq: self.interaction_sq.as_ref().map(|w| w.rotated(v)),
            shift: self.shift,
        }
    }
}

fn check_tensor(w: &Tensor4, exchange: Symmetry, herm: Symmetry) -> Result<()> {
    let d = w.dim();
    let scale = w.max_abs().max(1.0);
    let mut worst = (0.0f64, [0usize; 4]);
    for m in 0..d {
        for n in 0..d {
            for p in 0..d {
                for q in 0..d {
                    let dev = (w.get(m, n, p, q) - w.get(n, m, q, p)).norm();
                    if dev > worst.0 {
                        worst = (dev, [m, n, p, q]);
                    }
                }
            }
        }
    }
    if worst.0 > SYMMETRY_TOL * scale {
        return Err(Error::SymmetryViolation { symmetry: exchange, index: worst.1, magnitude: worst.0 });
    }
    worst = (0.0, [0; 4]);
    for m in 0..d {
        for n in 0..d {
            for p in 0..d {
                for q in 0..d {
                    let dev = (w.get(m, n, p, q).conj() - w.get(p, q, m, n)).norm();
                    if dev > worst.0 {
                        worst = (dev, [m, n, p, q]);
                    }
                }
            }
        }
    }
    if worst.0 > SYMMETRY_TOL * scale {
        return Err(Error::SymmetryViolation { symmetry: herm, index: worst.1, magnitude: worst.0 });
    }
    Ok(())
}

/// Checks all symmetries and records the diagonal shift that brings the
/// smallest kinetic eigenvalue up to one (zero if it already is).
pub fn validate_problem(t: CMatrix, w: Tensor4, w2: Option<Tensor4>) -> Result<ModeProblem> {
    let d = t.nrows();
    if d < 2 || t.ncols() != d {
        return Err(Error::InvalidInput(format!("kinetic matrix must be square with d >= 2, got {}x{}", t.nrows(), t.ncols())));
    }
    if w.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: w.dim() });
    }
    if t.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("T"));
    }
    if w.data().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("W"));
    }
    if let Some(w2) = &w2 {
        if w2.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: w2.dim() });
        }
        if w2.data().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("W2"));
        }
    }
    let scale = crate::linalg::max_abs(&t).max(1.0);
    for i in 0..d {
        for j in 0..d {
            let defect = (t[(i, j)] - t[(j, i)].conj()).norm();
            if defect > SYMMETRY_TOL * scale {
                return Err(Error::NonHermitianKinetic { row: i, col: j, defect });
            }
        }
    }
    check_tensor(&w, Symmetry::PairExchange, Symmetry::Hermiticity)?;
    if let Some(w2) = &w2 {
        check_tensor(w2, Symmetry::PairExchangeSq, Symmetry::HermiticitySq)?;
    }
    let lowest = eigvalsh(&t)[0];
    let shift = if lowest < 1.0 { 1.0 - lowest } else { 0.0 };
    Ok(ModeProblem { d, kinetic: t, interaction: w, interaction_sq: w2, shift })
}

/// Two sites with hopping `t` and on-site coupling `u`.
pub fn build_dimer(t: f64, u: f64) -> ModeProblem {
    let kin = CMatrix::from_row_slice(2, 2, &[ZERO, C64::from(-t), C64::from(-t), ZERO]);
    let mut w = Tensor4::zeros(2);
    let mut w2 = Tensor4::zeros(2);
    for i in 0..2 {
        w.set(i, i, i, i, C64::from(u));
        w2.set(i, i, i, i, C64::from(u * u));
    }
    validate_problem(kin, w, Some(w2)).expect("dimer is symmetric by construction")
}

fn momentum_tensor(l: usize, profile: &[f64]) -> Tensor4 {
    let mut w = Tensor4::zeros(l);
    for m in 0..l {
        for n in 0..l {
            for p in 0..l {
                for q in 0..l {
                    if (m + n + 2 * l - p - q) % l == 0 {
                        w.set(m, n, p, q, C64::from(profile[(m + l - p) % l] / l as f64));
                    }
                }
            }
        }
    }
    w
}

/// Translation-invariant ring of `l` sites in the plane-wave basis.
/// `vhat[k]` is the Fourier coefficient `Σ_r w(r) e^{-2πikr/L}` of the pair
/// interaction and must be even in `k`.
pub fn build_ring(l: usize, t: f64, vhat: &[f64]) -> Result<ModeProblem> {
    if l < 3 {
        return Err(Error::InvalidInput(format!("ring needs at least 3 sites, got {l}")));
    }
    if vhat.len() != l {
        return Err(Error::DimensionMismatch { expected: l, got: vhat.len() });
    }
    for k in 0..l {
        let mirror = (l - k) % l;
        if (vhat[k] - vhat[mirror]).abs() > SYMMETRY_TOL * vhat[k].abs().max(1.0) {
            return Err(Error::ProfileNotEven { index: k.min(mirror), mirror: k.max(mirror) });
        }
    }
    let tau = 2.0 * std::f64::consts::PI / l as f64;
    let kin = CMatrix::from_fn(l, l, |i, j| {
        if i == j {
            C64::from(-2.0 * t * (tau * i as f64).cos())
        } else {
            ZERO
        }
    });
    // real-space profile, its square, and back to Fourier space
    let real: Vec<f64> = (0..l)
        .map(|r| (0..l).map(|k| vhat[k] * (tau * (k * r) as f64).cos()).sum::<f64>() / l as f64)
        .collect();
    let sq_hat: Vec<f64> = (0..l)
        .map(|k| (0..l).map(|r| real[r] * real[r] * (tau * (k * r) as f64).cos()).sum())
        .collect();
    validate_problem(kin, momentum_tensor(l, vhat), Some(momentum_tensor(l, &sq_hat)))
}

/// Seeded random model: Gaussian Hermitian kinetic matrix shifted so its
/// spectrum starts at one, and a Gaussian tensor averaged over the
/// symmetry group of the interaction.
pub fn build_random(seed: u64, d: usize, strength: f64) -> ModeProblem {
    assert!(d >= 2, "random model needs d >= 2");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gauss = || -> f64 { StandardNormal.sample(&mut rng) };
    let mut x = CMatrix::zeros(d, d);
    for v in x.iter_mut() {
        *v = C64::new(gauss(), gauss());
    }
    let mut t = (&x + x.adjoint()).scale(0.5);
    let lowest = eigvalsh(&t)[0];
    for i in 0..d {
        t[(i, i)] += C64::from(1.0 - lowest);
    }
    // exact Hermiticity after the shift
    t = (&t + t.adjoint()).scale(0.5);
    let mut raw = Tensor4::zeros(d);
    for v in raw.data.iter_mut() {
        *v = C64::new(gauss(), gauss());
    }
    let mut w = Tensor4::zeros(d);
    for m in 0..d {
        for n in 0..d {
            for p in 0..d {
                for q in 0..d {
                    let avg = raw.get(m, n, p, q)
                        + raw.get(n, m, q, p)
                        + raw.get(p, q, m, n).conj()
                        + raw.get(q, p, n, m).conj();
                    w.set(m, n, p, q, avg * (0.25 * strength));
                }
            }
        }
    }
    validate_problem(t, w, None).expect("random model is symmetric by construction")
}

/// Smallest `C0` with `W² ≤ C0 (1⊗T + T⊗1)` on the two-body space, using the
/// shifted kinetic matrix.
pub fn check_assumption_c0(problem: &ModeProblem) -> Result<f64> {
    let w2 = problem.interaction_sq().ok_or(Error::MissingW2)?;
    let d = problem.d();
    let t = problem.shifted_kinetic();
    let dd = d * d;
    let k = CMatrix::from_fn(dd, dd, |r, c| {
        let (m, n) = (r / d, r % d);
        let (p, q) = (c / d, c % d);
        let mut v = ZERO;
        if m == p {
            v += t[(n, q)];
        }
        if n == q {
            v += t[(m, p)];
        }
        v
    });
    let a = CMatrix::from_fn(dd, dd, |r, c| w2.get(r / d, r % d, c / d, c % d));
    let chol = Cholesky::new(k).ok_or(Error::NonPositiveKinetic)?;
    let l = chol.l();
    let linv = l.clone().try_inverse().ok_or(Error::NonPositiveKinetic)?;
    let reduced = &linv * a * linv.adjoint();
    let (vals, _) = eigh(&reduced);
    Ok(vals.last().copied().unwrap_or(0.0).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ONE;

    fn hopping() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, -ONE, -ONE, ZERO])
    }

    #[test]
    fn dimer_hopping_gets_shift_two() {
        let mut w = Tensor4::zeros(2);
        w.set(0, 0, 0, 0, ONE);
        w.set(1, 1, 1, 1, ONE);
        let p = validate_problem(hopping(), w, None).unwrap();
        assert!((p.shift() - 2.0).abs() < 1e-12);
        assert!((eigvalsh(&p.shifted_kinetic())[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hermiticity_violation_is_reported() {
        let mut w = Tensor4::zeros(2);
        w.set(0, 0, 1, 1, ONE);
        w.set(1, 1, 0, 0, C64::from(2.0));
        match validate_problem(hopping(), w, None) {
            Err(Error::SymmetryViolation { symmetry, magnitude, .. }) => {
                assert_eq!(symmetry, Symmetry::Hermiticity);
                assert!((magnitude - 1.0).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn pair_exchange_violation_is_reported() {
        let mut w = Tensor4::zeros(2);
        w.set(0, 1, 0, 0, ONE);
        let err = validate_problem(hopping(), w, None).unwrap_err();
        assert!(matches!(err, Error::SymmetryViolation { symmetry: Symmetry::PairExchange, .. }));
    }

    #[test]
    fn anti_hermitian_kinetic_is_rejected() {
        let i = C64::new(0.0, 1.0);
        let t = CMatrix::from_row_slice(2, 2, &[ZERO, i, i, ZERO]);
        let err = validate_problem(t, Tensor4::zeros(2), None).unwrap_err();
        assert!(matches!(err, Error::NonHermitianKinetic { .. }));
    }

    #[test]
    fn non_finite_is_rejected() {
        let mut t = hopping();
        t[(0, 0)] = C64::new(f64::NAN, 0.0);
        assert_eq!(validate_problem(t, Tensor4::zeros(2), None).unwrap_err(), Error::NonFinite("T"));
    }

    #[test]
    fn dimer_builders() {
        let p = build_dimer(1.0, 1.0);
        assert_eq!(p.interaction().get(0, 0, 0, 0), ONE);
        assert_eq!(p.interaction().get(1, 1, 1, 1), ONE);
        assert_eq!(p.interaction().get(0, 1, 0, 1), ZERO);
        let free = build_dimer(0.0, 0.0);
        assert!(free.kinetic().iter().all(|z| *z == ZERO));
        assert!(free.interaction().is_zero());
        let attractive = build_dimer(1.0, -3.0);
        assert_eq!(attractive.interaction_sq().unwrap().get(1, 1, 1, 1), C64::from(9.0));
    }

    #[test]
    fn ring_kinetic_and_profile_checks() {
        let p = build_ring(3, 1.0, &[1.0, 1.0, 1.0]).unwrap();
        let diag: Vec<f64> = (0..3).map(|k| p.kinetic()[(k, k)].re).collect();
        assert!((diag[0] + 2.0).abs() < 1e-14);
        assert!((diag[1] - 1.0).abs() < 1e-14);
        assert!((diag[2] - 1.0).abs() < 1e-14);
        // contact interaction: every momentum-conserving element is 1/L
        assert!((p.interaction().get(1, 2, 0, 0).re - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(p.interaction().get(1, 1, 0, 0), ZERO);
        // w = delta so w^2 = delta as well
        let w2 = p.interaction_sq().unwrap();
        assert!((w2.get(1, 2, 0, 0).re - 1.0 / 3.0).abs() < 1e-14);

        let free = build_ring(4, 0.0, &[0.0; 4]).unwrap();
        assert!(free.interaction().is_zero());

        let err = build_ring(3, 1.0, &[1.0, 2.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::ProfileNotEven { .. }));
    }

    #[test]
    fn random_is_deterministic_and_valid() {
        let a = build_random(7, 4, 0.1);
        let b = build_random(7, 4, 0.1);
        assert_eq!(a, b);
        assert!(build_random(7, 4, 0.0).interaction().is_zero());
        let again = validate_problem(a.kinetic().clone(), a.interaction().clone(), None).unwrap();
        assert_eq!(again, a);
        assert!(eigvalsh(a.kinetic())[0] >= 1.0 - 1e-12);
    }

    #[test]
    fn c0_needs_w2_and_vanishes_without_interaction() {
        assert_eq!(check_assumption_c0(&build_random(1, 3, 0.2)).unwrap_err(), Error::MissingW2);
        assert_eq!(check_assumption_c0(&build_dimer(1.0, 0.0)).unwrap(), 0.0);
    }

    /// Independent oracle: eigen-decompose K and form K^{-1/2} W² K^{-1/2}.
    fn c0_oracle(p: &ModeProblem) -> f64 {
        let d = p.d();
        let t = p.shifted_kinetic();
        let w2 = p.interaction_sq().unwrap();
        let dd = d * d;
        let mut k = CMatrix::zeros(dd, dd);
        let mut a = CMatrix::zeros(dd, dd);
        for m in 0..d {
            for n in 0..d {
                for pp in 0..d {
                    for q in 0..d {
                        let r = m * d + n;
                        let c = pp * d + q;
                        if m == pp {
                            k[(r, c)] += t[(n, q)];
                        }
                        if n == q {
                            k[(r, c)] += t[(m, pp)];
                        }
                        a[(r, c)] = w2.get(m, n, pp, q);
                    }
                }
            }
        }
        let (kv, ku) = eigh(&k);
        let inv_sqrt = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            dd,
            kv.iter().map(|x| C64::from(1.0 / x.sqrt())),
        ));
        let ks = &ku * inv_sqrt * ku.adjoint();
        *eigvalsh(&(&ks * a * &ks)).last().unwrap()
    }

    #[test]
    fn c0_matches_dense_oracle_on_dimer() {
        let p = build_dimer(1.0, 1.0);
        let c0 = check_assumption_c0(&p).unwrap();
        assert!(c0 > 0.0 && c0.is_finite());
        assert!((c0 - c0_oracle(&p)).abs() < 1e-12);
    }

    #[test]
    fn c0_is_invariant_under_cyclic_relabeling_of_ring() {
        let p = build_ring(3, 1.0, &[1.0, 1.0, 1.0]).unwrap();
        let c0 = check_assumption_c0(&p).unwrap();
        assert!(c0 > 0.0);
        assert!((c0 - c0_oracle(&p)).abs() < 1e-12);
        // translating the sites by s multiplies plane wave k by exp(2πiks/L)
        for s in 1..3 {
            let tau = 2.0 * std::f64::consts::PI * s as f64 / 3.0;
            let shift = CMatrix::from_fn(3, 3, |r, c| {
                if r == c {
                    C64::from_polar(1.0, tau * r as f64)
                } else {
                    ZERO
                }
            });
            let moved = p.rotated(&shift);
            assert!((check_assumption_c0(&moved).unwrap() - c0).abs() < 1e-10);
        }
    }
}
