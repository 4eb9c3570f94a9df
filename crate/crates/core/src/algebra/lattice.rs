//! Projection lattice: re-orthogonalization, complements, meets and joins.

use super::jacobi::eigh;
use super::matrix::CMatrix;
use super::spectral::TOL_RANK;
use crate::error::{NcczError, Result};

/// Width of the ambiguity band above the rank cut, as a multiple of the cut.
const AMBIGUITY_FACTOR: f64 = 10.0;

/// Snap a near-projection to an exact orthogonal projector (eigenvalues rounded to {0,1}).
pub fn reorthogonalize(p: &CMatrix) -> Result<CMatrix> {
    let s = eigh(p)?;
    Ok(s.projector(|_, v| v > 0.5))
}

pub fn complement(p: &CMatrix) -> CMatrix {
    &CMatrix::identity(p.dim()) - p
}

/// Rank of a projector (rounded trace).
pub fn rank(p: &CMatrix) -> usize {
    p.trace().re.round().max(0.0) as usize
}

/// Orthogonal projector onto range(s) for PSD s, with the relative rank cut tol_rank.
pub fn range_projector(s: &CMatrix) -> Result<CMatrix> {
    let sd = eigh(s)?;
    let top = sd.values.last().copied().unwrap_or(0.0).max(1.0);
    let cut = TOL_RANK * top;
    for &v in &sd.values {
        if v > cut && v <= AMBIGUITY_FACTOR * cut {
            return Err(NcczError::AmbiguousRank { value: v, cut });
        }
    }
    Ok(sd.projector(|_, v| v > cut))
}

/// Projector onto range(P) + range(Q).
pub fn join(p: &CMatrix, q: &CMatrix) -> Result<CMatrix> {
    range_projector(&(p + q))
}

/// Projector onto range(P) ∩ range(Q), via (P^⊥ ∨ Q^⊥)^⊥.
pub fn meet(p: &CMatrix, q: &CMatrix) -> Result<CMatrix> {
    meet_all(&[p, q])
}

pub fn join_all(ps: &[&CMatrix]) -> Result<CMatrix> {
    let n = ps[0].dim();
    let mut s = CMatrix::zeros(n);
    for p in ps {
        s += *p;
    }
    range_projector(&s)
}

pub fn meet_all(ps: &[&CMatrix]) -> Result<CMatrix> {
    let n = ps[0].dim();
    let id = CMatrix::identity(n);
    if ps.iter().all(|p| (&id - *p).max_abs() == 0.0) {
        return Ok(id);
    }
    let mut s = CMatrix::zeros(n);
    for p in ps {
        s += &(&id - *p);
    }
    Ok(complement(&range_projector(&s)?))
}

/// Meet that never reports ambiguity: directions inside the ambiguity band are dropped, so the
/// result is the smaller of the two candidate answers.
pub fn meet_all_conservative(ps: &[&CMatrix]) -> Result<CMatrix> {
    let n = ps[0].dim();
    let id = CMatrix::identity(n);
    let mut s = CMatrix::zeros(n);
    for p in ps {
        s += &(&id - *p);
    }
    if s.max_abs() == 0.0 {
        return Ok(id);
    }
    let sd = eigh(&s)?;
    let top = sd.values.last().copied().unwrap_or(0.0).max(1.0);
    let cut = TOL_RANK * top;
    Ok(sd.projector(|_, v| v <= cut))
}

/// Idempotence and self-adjointness defect max(‖P²−P‖, ‖P−P*‖) (entrywise max, cheap).
pub fn projection_defect(p: &CMatrix) -> f64 {
    let sq = p.matmul(p);
    (&sq - p).max_abs().max(p.hermitian_defect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::matrix::C64;

    #[test]
    fn lattice_examples() {
        let a = CMatrix::from_real_diag(&[1.0, 0.0]);
        let b = CMatrix::identity(2);
        assert!((&meet(&a, &b).unwrap() - &a).max_abs() < 1e-15);
        assert!((&join(&a, &b).unwrap() - &b).max_abs() < 1e-15);
        assert!((&meet(&a, &a).unwrap() - &a).max_abs() < 1e-15);
        assert!((&join(&a, &a).unwrap() - &a).max_abs() < 1e-15);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let q = CMatrix::outer(&[C64::new(h, 0.0), C64::new(h, 0.0)]);
        assert!(meet(&a, &q).unwrap().max_abs() < 1e-14);
        assert!((&join(&a, &q).unwrap() - &b).max_abs() < 1e-14);
    }
}
