//! The operator `U_N H_N U_N† - N E_H - bH` on the truncated excited space
//! and its split into the six correction terms.

use super::basis::{FockBasis, DEFAULT_CAP};
use super::excitation::{conjugated_hamiltonian_with_cap, SectorReindex};
use super::ops::{assemble_terms, number_conserving, Term};
use super::sparse::SparseOperator;
use crate::bogoliubov::{fock_representation, quadratic_form};
use crate::error::{Error, Result};
use crate::hartree::{energy_and_gradient, HartreeState};
use crate::linalg::{householder_frame, CMatrix, C64};
use crate::model::{ModeProblem, Tensor4};

/// Tolerance of the half-sum identity check.
pub const IDENTITY_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct ResidualOperator {
    pub n: usize,
    pub reindex: SectorReindex,
    pub m: SparseOperator,
    /// `R_0 .. R_5` (not symmetrized) when requested.
    pub terms: Option<Vec<SparseOperator>>,
    /// Largest entry of `M - ½ Σ (R_j + R_j†)`.
    pub identity_defect: Option<f64>,
}

impl ResidualOperator {
    pub fn basis(&self) -> &FockBasis {
        &self.reindex.excited
    }
}

pub fn residual_operator(problem: &ModeProblem, state: &HartreeState, n: usize, termwise: bool) -> Result<ResidualOperator> {
    residual_operator_with_cap(problem, state, n, termwise, DEFAULT_CAP)
}

pub fn residual_operator_with_cap(
    problem: &ModeProblem,
    state: &HartreeState,
    n: usize,
    termwise: bool,
    cap: usize,
) -> Result<ResidualOperator> {
    let qf = quadratic_form(problem, state)?;
    let eh = energy_and_gradient(problem, &state.c)?.energy;
    let (reindex, conj) = conjugated_hamiltonian_with_cap(problem, &state.c, n, cap)?;
    let (_, bh) = fock_representation(&qf, n)?;
    let m = conj.combine(C64::from(1.0), &bh, C64::from(-1.0)).add_identity(-(n as f64) * eh);
    let mut out = ResidualOperator { n, reindex, m, terms: None, identity_defect: None };
    if termwise {
        let frame = householder_frame(&state.c.normalize());
        let terms = residual_terms(&problem.rotated(&frame), &out.reindex.excited, n);
        let mut half = SparseOperator::zeros(out.m.dim());
        for r in &terms {
            half = half.combine(C64::from(1.0), &r.combine(C64::from(0.5), &r.adjoint(), C64::from(0.5)), C64::from(1.0));
        }
        let defect = half
            .combine(C64::from(1.0), &out.m, C64::from(-1.0))
            .values()
            .iter()
            .fold(0.0f64, |a, z| a.max(z.norm()));
        if defect > IDENTITY_TOL * out.m.norm_bound().max(1.0) {
            return Err(Error::InvalidInput(format!("residual split does not add up: defect {defect:e}")));
        }
        out.terms = Some(terms);
        out.identity_defect = Some(defect);
    }
    Ok(out)
}

/// `R_0 .. R_5` for a problem already expressed in the condensate frame
/// (condensate = mode 0), on the excited basis truncated at `n`.
pub fn residual_terms(rot: &ModeProblem, excited: &FockBasis, n: usize) -> Vec<SparseOperator> {
    let d = rot.d();
    let w: &Tensor4 = rot.interaction();
    let nf = n as f64;
    let inv = 1.0 / (nf - 1.0);
    let ex = d - 1;
    let room = move |k: usize| (nf - k as f64).max(0.0);

    // R0 = ½ W_0000 N₊(N₊-1)/(N-1)
    let w0 = w.get(0, 0, 0, 0) * 0.5;
    let r0 = assemble_terms(excited, &[Term::new(w0, vec![])], |k| k as f64 * (k as f64 - 1.0) * inv);

    // R1 = -dΓ(mf + k1 on excited modes) (N₊-1)/(N-1)
    let h1 = CMatrix::from_fn(ex, ex, |a, b| -(w.get(a + 1, 0, b + 1, 0) + w.get(a + 1, 0, 0, b + 1)));
    let r1 = diag_right(&number_conserving(excited, &h1, None), excited, |k| (k as f64 - 1.0) * inv);

    // R2 = -2 a†(v) N₊ √(N-N₊)/(N-1), v_a = mf_a0
    let t2: Vec<Term> = (0..ex).map(|a| Term::new(w.get(a + 1, 0, 0, 0) * -2.0, vec![(a, true)])).collect();
    let r2 = assemble_terms(excited, &t2, |k| k as f64 * room(k).sqrt() * inv);

    // R3 = Σ K2_ab a†_a a†_b (√((N-N₊)(N-N₊-1))/(N-1) - 1)
    let mut t3 = Vec::new();
    for a in 0..ex {
        for b in 0..ex {
            t3.push(Term::new(w.get(a + 1, b + 1, 0, 0), vec![(a, true), (b, true)]));
        }
    }
    let r3 = assemble_terms(excited, &t3, |k| (room(k) * (room(k) - 1.0).max(0.0)).sqrt() * inv - 1.0);

    // R4 = 1/(2(N-1)) Σ W_abce a†a†aa on excited modes
    let sub = Tensor4::from_vec(
        ex,
        (0..ex.pow(4))
            .map(|i| {
                let (a, b, c, e) = (i / (ex * ex * ex), (i / (ex * ex)) % ex, (i / ex) % ex, i % ex);
                w.get(a + 1, b + 1, c + 1, e + 1)
            })
            .collect(),
    )
    .expect("sized");
    let r4 = number_conserving(excited, &CMatrix::zeros(ex, ex), Some((&sub, 0.5 * inv)));

    // R5 = 2/(N-1) Σ W_abc0 a†_a a†_b a_c √(N-N₊)
    let mut t5 = Vec::new();
    for a in 0..ex {
        for b in 0..ex {
            for c in 0..ex {
                t5.push(Term::new(w.get(a + 1, b + 1, c + 1, 0) * (2.0 * inv), vec![(a, true), (b, true), (c, false)]));
            }
        }
    }
    let r5 = assemble_terms(excited, &t5, |k| room(k).sqrt());
    vec![r0, r1, r2, r3, r4, r5]
}

fn diag_right<F: Fn(usize) -> f64>(op: &SparseOperator, basis: &FockBasis, f: F) -> SparseOperator {
    let t = op.triplets().map(|(i, j, v)| (i, j, v * f(basis.particles(j)))).collect();
    SparseOperator::from_triplets(op.dim(), t)
}

/// `dΓ(Q T Q)` on the excited basis with the shifted kinetic matrix.
pub fn dgamma_qtq(problem: &ModeProblem, state: &HartreeState, excited: &FockBasis) -> SparseOperator {
    let d = problem.d();
    let frame = householder_frame(&state.c.normalize());
    let t = frame.adjoint() * problem.shifted_kinetic() * &frame;
    let sub = t.view((1, 1), (d - 1, d - 1)).into_owned();
    number_conserving(excited, &sub, None)
}

/// `(C/N)(dΓ(QTQ) N₊² + 1) - M²`, whose smallest eigenvalue should be nonnegative.
pub fn bound_gap_operator(problem: &ModeProblem, state: &HartreeState, res: &ResidualOperator, c_const: f64) -> SparseOperator {
    let basis = res.basis();
    let dg = dgamma_qtq(problem, state, basis);
    let dgn2 = diag_right(&dg, basis, |k| (k * k) as f64);
    let lhs = dgn2.add_identity(1.0).scale(C64::from(c_const / res.n as f64));
    lhs.combine(C64::from(1.0), &res.m.mul(&res.m), C64::from(-1.0))
}
