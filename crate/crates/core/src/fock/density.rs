use super::basis::{BasisKind, FockBasis};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};

/// One-body density matrix `γ_mn = ⟨ψ, a†_n a_m ψ⟩ / N` of a fixed-`N` vector.
pub fn one_body_density(basis: &FockBasis, psi: &CVector) -> Result<CMatrix> {
    let BasisKind::FixedN(n) = basis.kind() else {
        return Err(Error::InvalidInput("density needs a fixed-N basis".into()));
    };
    if psi.len() != basis.len() {
        return Err(Error::DimensionMismatch { expected: basis.len(), got: psi.len() });
    }
    let d = basis.d();
    let mut g = CMatrix::zeros(d, d);
    if n == 0 {
        return Ok(g);
    }
    let mut occ = vec![0u32; d];
    for j in 0..basis.len() {
        let amp = psi[j];
        if amp.norm() == 0.0 {
            continue;
        }
        let ket = basis.state(j);
        for m in 0..d {
            if ket[m] == 0 {
                continue;
            }
            for k in 0..d {
                occ.copy_from_slice(ket);
                let lower = (occ[m] as f64).sqrt();
                occ[m] -= 1;
                occ[k] += 1;
                let f = lower * (occ[k] as f64).sqrt();
                let i = basis.rank(&occ).expect("number conserving");
                // ⟨ψ| a†_k a_m |ψ⟩ contribution
                g[(m, k)] += psi[i].conj() * amp * f;
            }
        }
    }
    Ok(g.unscale(n as f64))
}
