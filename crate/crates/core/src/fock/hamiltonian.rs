use super::basis::{BasisKind, FockBasis, DEFAULT_CAP};
use super::ops::number_conserving;
use super::sparse::SparseOperator;
use crate::error::{Error, Result};
use crate::model::ModeProblem;

/// Mean-field `N`-body Hamiltonian
/// `Σ T_mn a†_m a_n + (1/(2(N-1))) Σ W_mnpq a†_m a†_n a_p a_q`
/// on the fixed-`N` occupation basis.
pub fn build_hn(problem: &ModeProblem, n: usize) -> Result<(FockBasis, SparseOperator)> {
    build_hn_with_cap(problem, n, DEFAULT_CAP)
}

pub fn build_hn_with_cap(problem: &ModeProblem, n: usize, cap: usize) -> Result<(FockBasis, SparseOperator)> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("N must be at least 2, got {n}")));
    }
    let basis = FockBasis::with_cap(problem.d(), BasisKind::FixedN(n), cap)?;
    let scale = 1.0 / (2.0 * (n as f64 - 1.0));
    let op = number_conserving(&basis, problem.kinetic(), Some((problem.interaction(), scale)));
    Ok((basis, op))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::ops::apply_string;
    use crate::linalg::{eigvalsh, CMatrix, C64, ZERO};
    use crate::model::{build_dimer, build_random, validate_problem, Tensor4};

    #[test]
    fn dimer_two_particles_by_hand() {
        let (b, h) = build_hn(&build_dimer(1.0, 1.0), 2).unwrap();
        let s2 = 2f64.sqrt();
        let expected = [[1.0, -s2, 0.0], [-s2, 0.0, -s2], [0.0, -s2, 1.0]];
        assert_eq!(b.len(), 3);
        for i in 0..3 {
            for j in 0..3 {
                assert!((h.get(i, j) - C64::from(expected[i][j])).norm() < 1e-14);
            }
        }
        let ev = eigvalsh(&h.to_dense());
        assert!((ev[0] - (1.0 - 17f64.sqrt()) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn free_spectrum_is_sums_of_single_particle_levels() {
        let t = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![C64::from(0.0), C64::from(1.0), C64::from(2.5)]));
        let p = validate_problem(t, Tensor4::zeros(3), None).unwrap();
        let (_, h) = build_hn(&p, 3).unwrap();
        let ev = eigvalsh(&h.to_dense());
        let mut sums = Vec::new();
        let lv = [0.0, 1.0, 2.5];
        for a in 0..3 {
            for b in a..3 {
                for c in b..3 {
                    sums.push(lv[a] + lv[b] + lv[c]);
                }
            }
        }
        sums.sort_by(f64::total_cmp);
        for (x, y) in ev.iter().zip(&sums) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    /// Dense oracle: ⟨i|H|j⟩ by looping over every basis pair and every
    /// operator string, independent of the column generator.
    fn dense_oracle(p: &ModeProblem, n: usize) -> CMatrix {
        let basis = FockBasis::new(p.d(), BasisKind::FixedN(n)).unwrap();
        let d = p.d();
        let dim = basis.len();
        let mut h = CMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                let mut acc = ZERO;
                for m in 0..d {
                    for q in 0..d {
                        let mut occ = basis.state(j).to_vec();
                        if let Some(a) = apply_string(&mut occ, &[(m, true), (q, false)]) {
                            if occ.as_slice() == basis.state(i) {
                                acc += p.kinetic()[(m, q)] * a;
                            }
                        }
                        for nn in 0..d {
                            for pp in 0..d {
                                let mut occ = basis.state(j).to_vec();
                                if let Some(a) = apply_string(&mut occ, &[(m, true), (nn, true), (pp, false), (q, false)]) {
                                    if occ.as_slice() == basis.state(i) {
                                        acc += p.interaction().get(m, nn, pp, q) * (a / (2.0 * (n as f64 - 1.0)));
                                    }
                                }
                            }
                        }
                    }
                }
                h[(i, j)] = acc;
            }
        }
        h
    }

    #[test]
    fn random_model_matches_dense_oracle() {
        let p = build_random(3, 3, 0.7);
        let (_, h) = build_hn(&p, 4).unwrap();
        assert!(h.hermiticity_defect() < 1e-12);
        let diff = h.to_dense() - dense_oracle(&p, 4);
        assert!(crate::linalg::max_abs(&diff) < 1e-12);
    }

    #[test]
    fn one_particle_is_rejected() {
        assert!(build_hn(&build_dimer(1.0, 1.0), 1).is_err());
    }
}
