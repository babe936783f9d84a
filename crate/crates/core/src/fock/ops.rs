//! Row-generated assembly of second-quantized operators on a [`FockBasis`].

use super::basis::FockBasis;
use super::sparse::SparseOperator;
use crate::linalg::{CMatrix, C64};
use crate::model::Tensor4;

/// A creation (`true`) or annihilation (`false`) operator on a mode.
pub type Ladder = (usize, bool);

/// Product of ladder operators written left to right as in `a†_m a†_n a_p a_q`,
/// times a coefficient.
#[derive(Clone, Debug)]
pub struct Term {
    pub coef: C64,
    pub ops: Vec<Ladder>,
}

impl Term {
    pub fn new(coef: C64, ops: Vec<Ladder>) -> Self {
        Term { coef, ops }
    }
}

/// Applies the string right to left; returns the product of the
/// `√n` factors, or `None` when a mode runs empty.
pub fn apply_string(occ: &mut [u32], ops: &[Ladder]) -> Option<f64> {
    let mut amp = 1.0;
    for &(m, create) in ops.iter().rev() {
        if create {
            occ[m] += 1;
            amp *= (occ[m] as f64).sqrt();
        } else {
            if occ[m] == 0 {
                return None;
            }
            amp *= (occ[m] as f64).sqrt();
            occ[m] -= 1;
        }
    }
    Some(amp)
}

/// Sum of `terms`, each followed (on the right) by the diagonal multiplier
/// `ket_factor(N₊)` of the ket's particle number. Targets outside the basis
/// are projected out.
pub fn assemble_terms<F>(basis: &FockBasis, terms: &[Term], ket_factor: F) -> SparseOperator
where
    F: Fn(usize) -> f64 + Sync,
{
    SparseOperator::from_columns(basis.len(), |j, emit| {
        let ket = basis.state(j);
        let f = ket_factor(basis.particles(j));
        if f == 0.0 {
            return;
        }
        let mut occ = ket.to_vec();
        for term in terms {
            occ.copy_from_slice(ket);
            if let Some(amp) = apply_string(&mut occ, &term.ops) {
                if let Some(i) = basis.rank(&occ) {
                    emit(i, term.coef * (amp * f));
                }
            }
        }
    })
}

/// `Σ one[m,n] a†_m a_n + scale · Σ two[m,n,p,q] a†_m a†_n a_p a_q` on any
/// basis; both parts conserve particle number so the basis is closed.
pub fn number_conserving(basis: &FockBasis, one: &CMatrix, two: Option<(&Tensor4, f64)>) -> SparseOperator {
    let d = basis.d();
    SparseOperator::from_columns(basis.len(), |j, emit| {
        let ket = basis.state(j);
        let mut occ = ket.to_vec();
        for n in 0..d {
            if ket[n] == 0 {
                continue;
            }
            let a_n = (ket[n] as f64).sqrt();
            for m in 0..d {
                let v = one[(m, n)];
                if v.norm() == 0.0 {
                    continue;
                }
                occ.copy_from_slice(ket);
                occ[n] -= 1;
                occ[m] += 1;
                let amp = a_n * (occ[m] as f64).sqrt();
                emit(basis.rank(&occ).expect("number conserving"), v * amp);
            }
        }
        let Some((w, scale)) = two else { return };
        for q in 0..d {
            if ket[q] == 0 {
                continue;
            }
            for p in 0..d {
                let np = if p == q { ket[p] - 1 } else { ket[p] };
                if np == 0 {
                    continue;
                }
                let lower = (ket[q] as f64).sqrt() * (np as f64).sqrt();
                for n in 0..d {
                    for m in 0..d {
                        let v = w.get(m, n, p, q);
                        if v.norm() == 0.0 {
                            continue;
                        }
                        occ.copy_from_slice(ket);
                        occ[q] -= 1;
                        occ[p] -= 1;
                        occ[n] += 1;
                        let raise_n = (occ[n] as f64).sqrt();
                        occ[m] += 1;
                        let amp = lower * raise_n * (occ[m] as f64).sqrt();
                        emit(basis.rank(&occ).expect("number conserving"), v * (amp * scale));
                    }
                }
            }
        }
    })
}

/// `N₊`-style diagonal: the particle number of each basis state.
pub fn number_operator(basis: &FockBasis) -> SparseOperator {
    let v: Vec<f64> = (0..basis.len()).map(|i| basis.particles(i) as f64).collect();
    SparseOperator::diagonal(&v)
}
