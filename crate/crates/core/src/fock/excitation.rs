//! The excitation map `U_N` from the `N`-particle space onto the excited
//! Fock space truncated at `N`, computed in the condensate frame.

use super::basis::{BasisKind, FockBasis, DEFAULT_CAP};
use super::density::one_body_density;
use super::hamiltonian::build_hn_with_cap;
use super::sparse::SparseOperator;
use crate::error::{Error, Result};
use crate::hartree::HartreeState;
use crate::linalg::{householder_frame, CMatrix, CVector, C64, ZERO};
use crate::model::ModeProblem;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Index bookkeeping between the fixed-`N` basis over `d` modes (read in the
/// rotated frame) and the truncated basis over the `d - 1` excited modes:
/// the `n₀` register is dropped.
#[derive(Clone, Debug)]
pub struct SectorReindex {
    pub full: FockBasis,
    pub excited: FockBasis,
    /// `to_excited[i]` is the excited index of full state `i`.
    to_excited: Vec<usize>,
}

impl SectorReindex {
    pub fn new(d: usize, n: usize) -> Result<Self> {
        Self::with_cap(d, n, DEFAULT_CAP)
    }

    pub fn with_cap(d: usize, n: usize, cap: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidInput("need at least two modes".into()));
        }
        let full = FockBasis::with_cap(d, BasisKind::FixedN(n), cap)?;
        let excited = FockBasis::with_cap(d - 1, BasisKind::Truncated(n), cap)?;
        let to_excited = full
            .states()
            .map(|s| excited.rank(&s[1..]).expect("bijection between sectors"))
            .collect();
        Ok(SectorReindex { full, excited, to_excited })
    }

    pub fn n(&self) -> usize {
        self.full.max_particles()
    }

    pub fn to_excited(&self, psi: &CVector) -> CVector {
        let mut out = CVector::zeros(self.excited.len());
        for (i, &j) in self.to_excited.iter().enumerate() {
            out[j] = psi[i];
        }
        out
    }

    pub fn from_excited(&self, phi: &CVector) -> CVector {
        CVector::from_fn(self.full.len(), |i, _| phi[self.to_excited[i]])
    }

    /// Relabels an operator on the full basis onto the excited basis.
    pub fn operator_to_excited(&self, op: &SparseOperator) -> SparseOperator {
        let t = op.triplets().map(|(i, j, v)| (self.to_excited[i], self.to_excited[j], v)).collect();
        SparseOperator::from_triplets(self.excited.len(), t)
    }
}

/// Matrix of the `N`-body rotation `Γ(V)` on the fixed-`N` basis: column
/// `j` is the occupation state `j` of the modes `b†_k = Σ_m V_mk a†_m`
/// written in the original modes.
pub fn nbody_rotation(v: &CMatrix, basis: &FockBasis) -> Result<CMatrix> {
    let d = basis.d();
    let BasisKind::FixedN(n) = basis.kind() else {
        return Err(Error::InvalidInput("rotation needs a fixed-N basis".into()));
    };
    if v.nrows() != d || v.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, got: v.nrows() });
    }
    // sector by sector: |occ⟩ = b†_k |occ - e_k⟩ / √occ_k with k the last occupied mode
    let mut prev_basis = FockBasis::new(d, BasisKind::FixedN(0))?;
    let mut prev = CMatrix::from_element(1, 1, C64::from(1.0));
    for k in 1..=n {
        let cur_basis = FockBasis::new(d, BasisKind::FixedN(k))?;
        let mut cur = CMatrix::zeros(cur_basis.len(), cur_basis.len());
        let mut occ = vec![0u32; d];
        for j in 0..cur_basis.len() {
            let target = cur_basis.state(j);
            let mode = (0..d).rev().find(|&m| target[m] > 0).expect("nonempty state");
            occ.copy_from_slice(target);
            occ[mode] -= 1;
            let src = prev_basis.rank(&occ).expect("lower sector");
            let norm = (target[mode] as f64).sqrt();
            for i in 0..prev_basis.len() {
                let amp = prev[(i, src)];
                if amp == ZERO {
                    continue;
                }
                occ.copy_from_slice(prev_basis.state(i));
                for m in 0..d {
                    let vm = v[(m, mode)];
                    if vm == ZERO {
                        continue;
                    }
                    occ[m] += 1;
                    let r = cur_basis.rank(&occ).expect("same sector");
                    cur[(r, j)] += amp * vm * ((occ[m] as f64).sqrt() / norm);
                    occ[m] -= 1;
                }
            }
        }
        prev = cur;
        prev_basis = cur_basis;
    }
    Ok(prev)
}

/// `U_N` at a fixed condensate, with its dense rotation cached.
#[derive(Clone, Debug)]
pub struct ExcitationMap {
    pub frame: CMatrix,
    pub reindex: SectorReindex,
    gamma: CMatrix,
}

impl ExcitationMap {
    pub fn new(c: &CVector, n: usize) -> Result<Self> {
        let frame = householder_frame(&c.normalize());
        let reindex = SectorReindex::new(c.len(), n)?;
        let gamma = nbody_rotation(&frame, &reindex.full)?;
        Ok(ExcitationMap { frame, reindex, gamma })
    }

    pub fn full_basis(&self) -> &FockBasis {
        &self.reindex.full
    }

    pub fn excited_basis(&self) -> &FockBasis {
        &self.reindex.excited
    }

    pub fn forward(&self, psi: &CVector) -> Result<CVector> {
        if psi.len() != self.reindex.full.len() {
            return Err(Error::DimensionMismatch { expected: self.reindex.full.len(), got: psi.len() });
        }
        Ok(self.reindex.to_excited(&(self.gamma.adjoint() * psi)))
    }

    pub fn inverse(&self, phi: &CVector) -> Result<CVector> {
        if phi.len() != self.reindex.excited.len() {
            return Err(Error::DimensionMismatch { expected: self.reindex.excited.len(), got: phi.len() });
        }
        Ok(&self.gamma * self.reindex.from_excited(phi))
    }

    /// Full basis vector in rotated occupations, mapped back to the original modes.
    pub fn from_rotated(&self, psi_rot: &CVector) -> CVector {
        &self.gamma * psi_rot
    }
}

/// `U_N ψ` (forward) or `U_N† φ` (inverse) for the `N` implied by the vector length.
pub fn excitation_map(
    problem: &ModeProblem,
    state: &HartreeState,
    n: usize,
    psi: &CVector,
    direction: Direction,
) -> Result<CVector> {
    if state.c.len() != problem.d() {
        return Err(Error::DimensionMismatch { expected: problem.d(), got: state.c.len() });
    }
    let map = ExcitationMap::new(&state.c, n)?;
    match direction {
        Direction::Forward => map.forward(psi),
        Direction::Inverse => map.inverse(psi),
    }
}

/// `⟨ψ, N₊ ψ⟩ = N - N⟨c, γ c⟩`.
pub fn nplus_expectation(state: &HartreeState, basis: &FockBasis, psi: &CVector) -> Result<f64> {
    let n = basis.max_particles() as f64;
    let gamma = one_body_density(basis, psi)?;
    let c = state.c.normalize();
    let n0 = c.dotc(&(gamma * &c)).re * n;
    Ok((n - n0).clamp(0.0, n))
}

/// `Σ_j j·|φ_j|²` over the sectors of an excited-space vector.
pub fn sector_weighted_count(excited: &FockBasis, phi: &CVector) -> f64 {
    (0..excited.len()).map(|i| phi[i].norm_sqr() * excited.particles(i) as f64).sum()
}

/// `U_N H_N U_N†` on the excited basis, built from the Hamiltonian of the
/// problem expressed in the condensate frame.
pub fn conjugated_hamiltonian(problem: &ModeProblem, c: &CVector, n: usize) -> Result<(SectorReindex, SparseOperator)> {
    conjugated_hamiltonian_with_cap(problem, c, n, DEFAULT_CAP)
}

pub fn conjugated_hamiltonian_with_cap(
    problem: &ModeProblem,
    c: &CVector,
    n: usize,
    cap: usize,
) -> Result<(SectorReindex, SparseOperator)> {
    if c.len() != problem.d() {
        return Err(Error::DimensionMismatch { expected: problem.d(), got: c.len() });
    }
    let frame = householder_frame(&c.normalize());
    let (_, h) = build_hn_with_cap(&problem.rotated(&frame), n, cap)?;
    let reindex = SectorReindex::with_cap(problem.d(), n, cap)?;
    let op = reindex.operator_to_excited(&h);
    Ok((reindex, op))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::hamiltonian::build_hn;
    use crate::fock::ops::{assemble_terms, Term};
    use crate::hartree::{find_minimizers, StateKind};
    use crate::model::{build_dimer, build_random};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn product_state(c: &CVector, basis: &FockBasis) -> CVector {
        // c^{⊗N} in occupations: √(N!/Π n_m!) Π c_m^{n_m}
        let n = basis.max_particles();
        let lf = |k: u32| (1..=k).map(|x| (x as f64).ln()).sum::<f64>();
        CVector::from_fn(basis.len(), |i, _| {
            let s = basis.state(i);
            let mut amp = C64::from(1.0);
            let mut logc = lf(n as u32);
            for (m, &k) in s.iter().enumerate() {
                amp *= c[m].powu(k);
                logc -= lf(k);
            }
            amp * (0.5 * logc).exp()
        })
    }

    fn state_of(c: CVector) -> HartreeState {
        HartreeState { c, energy: 0.0, mu0: 0.0, residual: 0.0, kind: StateKind::Stationary, hessian_min_eig: None }
    }

    fn random_vec(len: usize, rng: &mut ChaCha8Rng) -> CVector {
        CVector::from_fn(len, |_, _| C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))).normalize()
    }

    #[test]
    fn rotation_is_unitary_and_identity_for_identity() {
        let basis = FockBasis::new(3, BasisKind::FixedN(4)).unwrap();
        let id = nbody_rotation(&CMatrix::identity(3, 3), &basis).unwrap();
        assert!((&id - CMatrix::identity(basis.len(), basis.len())).norm() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = random_vec(3, &mut rng);
        let g = nbody_rotation(&householder_frame(&c), &basis).unwrap();
        assert!((g.adjoint() * &g - CMatrix::identity(basis.len(), basis.len())).norm() < 1e-12);
    }

    #[test]
    fn condensate_maps_to_vacuum() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = random_vec(3, &mut rng);
        let map = ExcitationMap::new(&c, 5).unwrap();
        let psi = product_state(&c, map.full_basis());
        assert!((psi.norm() - 1.0).abs() < 1e-12);
        let phi = map.forward(&psi).unwrap();
        assert!((phi[0].norm() - 1.0).abs() < 1e-12);
        assert!(nplus_expectation(&state_of(c), map.full_basis(), &psi).unwrap().abs() < 1e-12);
    }

    #[test]
    fn one_excitation_lands_in_sector_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = random_vec(3, &mut rng);
        let n = 4;
        let map = ExcitationMap::new(&c, n).unwrap();
        let q = map.frame.column(1).into_owned();
        // a†(q) a(c) c^{⊗N} / √N
        let ops: Vec<Term> = (0..3)
            .flat_map(|m| (0..3).map(move |k| (m, k)))
            .map(|(m, k)| Term::new(q[m] * c[k].conj() / (n as f64).sqrt(), vec![(m, true), (k, false)]))
            .collect();
        let op = assemble_terms(map.full_basis(), &ops, |_| 1.0);
        let psi = op.matvec(&product_state(&c, map.full_basis()));
        assert!((psi.norm() - 1.0).abs() < 1e-12);
        let phi = map.forward(&psi).unwrap();
        // excited mode 0 is frame column 1; |1,0⟩ has index 1 in the truncated basis
        assert!((phi[1].norm() - 1.0).abs() < 1e-12);
        let np = nplus_expectation(&state_of(c), map.full_basis(), &psi).unwrap();
        assert!((np - 1.0).abs() < 1e-12);
    }

    #[test]
    fn roundtrip_and_norms() {
        let p = build_random(5, 3, 0.2);
        let mins = find_minimizers(&p, &Default::default()).unwrap();
        let map = ExcitationMap::new(&mins[0].c, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let psi = random_vec(map.full_basis().len(), &mut rng);
            let phi = map.forward(&psi).unwrap();
            assert!((phi.norm() - 1.0).abs() < 1e-12);
            assert!((map.inverse(&phi).unwrap() - &psi).norm() < 1e-12);
        }
        assert!(matches!(map.forward(&CVector::zeros(2)), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn conjugation_relations() {
        let p = build_random(8, 3, 0.3);
        let c = find_minimizers(&p, &Default::default()).unwrap()[0].c.clone();
        let n = 5;
        let map = ExcitationMap::new(&c, n).unwrap();
        let full = map.full_basis().clone();
        let exc = map.excited_basis().clone();
        let conj = |op: &SparseOperator| {
            let g = &map.gamma;
            g.adjoint() * op.to_dense() * g
        };
        let reidx = |m: CMatrix| map.reindex.operator_to_excited(&SparseOperator::from_dense(&m)).to_dense();
        // U a†(c) a(c) U† = N - N₊
        let n0 = assemble_terms(
            &full,
            &(0..3)
                .flat_map(|a| (0..3).map(move |b| (a, b)))
                .map(|(a, b)| Term::new(c[a] * c[b].conj(), vec![(a, true), (b, false)]))
                .collect::<Vec<_>>(),
            |_| 1.0,
        );
        let lhs = reidx(conj(&n0));
        let rhs = CMatrix::from_fn(exc.len(), exc.len(), |i, j| {
            if i == j {
                C64::from((n - exc.particles(i)) as f64)
            } else {
                ZERO
            }
        });
        assert!((lhs - rhs).norm() < 1e-10);
        // U a†(q_1) a(q_2) U† = a†_0 a_1 on excited modes
        let (q1, q2) = (map.frame.column(1).into_owned(), map.frame.column(2).into_owned());
        let hop = assemble_terms(
            &full,
            &(0..3)
                .flat_map(|a| (0..3).map(move |b| (a, b)))
                .map(|(a, b)| Term::new(q1[a] * q2[b].conj(), vec![(a, true), (b, false)]))
                .collect::<Vec<_>>(),
            |_| 1.0,
        );
        let lhs = reidx(conj(&hop));
        let rhs = assemble_terms(&exc, &[Term::new(C64::from(1.0), vec![(0, true), (1, false)])], |_| 1.0).to_dense();
        assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn rotated_route_matches_dense_conjugation() {
        let p = build_random(12, 3, 0.4);
        let c = find_minimizers(&p, &Default::default()).unwrap()[0].c.clone();
        let map = ExcitationMap::new(&c, 4).unwrap();
        let (_, h) = build_hn(&p, 4).unwrap();
        let dense = map.gamma.adjoint() * h.to_dense() * &map.gamma;
        let via = map.reindex.operator_to_excited(&SparseOperator::from_dense(&dense)).to_dense();
        let (_, fast) = conjugated_hamiltonian(&p, &c, 4).unwrap();
        assert!((via - fast.to_dense()).norm() < 1e-10);
    }

    #[test]
    fn nplus_two_ways_on_dimer_ground_state() {
        let p = build_dimer(1.0, 1.0);
        let st = find_minimizers(&p, &Default::default()).unwrap().remove(0);
        let (basis, h) = build_hn(&p, 8).unwrap();
        let ground = crate::fock::lanczos::dense_spectrum(&h).vector(0);
        let a = nplus_expectation(&st, &basis, &ground).unwrap();
        let map = ExcitationMap::new(&st.c, 8).unwrap();
        let b = sector_weighted_count(map.excited_basis(), &map.forward(&ground).unwrap());
        assert!(a > 0.0 && (a - b).abs() < 1e-9);
    }
}
