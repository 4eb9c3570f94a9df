//! Cellwise projection-field utilities shared by the certificate stages.

use rayon::prelude::*;

use crate::algebra::lattice::{self, rank};
use crate::algebra::spectral::{self, op_norm_general, Bound, Interval};
use crate::algebra::CMatrix;
use crate::dyadic::OperatorField;
use crate::error::Result;

/// φ(1 − e) = Σ_cells |cell|·(n − rank e).
pub fn deficit(e: &OperatorField) -> f64 {
    let n = e.dim();
    let missing: usize = e.values().iter().map(|p| n - rank(p)).sum();
    missing as f64 * e.grid().cell_volume()
}

/// χ_{[0,λ]}(x) per cell for PSD x (the kernel of x is kept).
pub fn at_most(x: &OperatorField, lambda: f64) -> Result<OperatorField> {
    x.try_map(|_, m| spectral::spectral_projection(&m.hermitian_part(), Interval::new(Bound::Unbounded, Bound::Closed(lambda))))
}

/// Cellwise meet; rank-ambiguous directions are excluded, which keeps every bound valid.
pub fn meet_fields(parts: &[&OperatorField]) -> Result<OperatorField> {
    parts[0].try_map(|c, _| {
        let ps: Vec<&CMatrix> = parts.iter().map(|p| p.value(c)).collect();
        lattice::meet_all_conservative(&ps)
    })
}

/// max over fields and cells of ‖e x e‖_∞.
pub fn compressed_sup(e: &OperatorField, fields: &[OperatorField]) -> Result<f64> {
    let per = (0..e.len())
        .into_par_iter()
        .map(|c| {
            let ec = e.value(c);
            let mut w: f64 = 0.0;
            for x in fields {
                let v = x.value(c);
                if v.is_zero() || ec.is_zero() {
                    continue;
                }
                w = w.max(op_norm_general(&ec.matmul(v).matmul(ec))?);
            }
            Ok(w)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(per.into_iter().fold(0.0, f64::max))
}

/// max cellwise ‖e² − e‖ + ‖e − e*‖.
pub fn projection_defect(e: &OperatorField) -> f64 {
    e.values().iter().map(|p| (&p.matmul(p) - p).max_abs() + p.hermitian_defect()).fold(0.0, f64::max)
}

/// max cellwise ‖e·p − e‖: zero iff e ⪯ p.
pub fn below_defect(e: &OperatorField, p: &OperatorField) -> f64 {
    e.values().iter().zip(p.values()).map(|(a, b)| (&a.matmul(b) - a).max_abs()).fold(0.0, f64::max)
}

/// min over cells of min eig(a ± x), i.e. how far −a ⪯ x ⪯ a is from failing.
pub fn two_sided_slack(x: &OperatorField, a: &OperatorField) -> Result<f64> {
    let per = (0..x.len())
        .into_par_iter()
        .map(|c| {
            let (xv, av) = (x.value(c), a.value(c));
            if xv.is_zero() && av.is_zero() {
                return Ok(0.0);
            }
            spectral::loewner_raw_slack(&xv.hermitian_part(), &av.hermitian_part())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(per.into_iter().fold(f64::INFINITY, f64::min))
}

/// Cellwise |x| of the Hermitian part.
pub fn abs_field(x: &OperatorField) -> Result<OperatorField> {
    x.try_map(|_, m| if m.is_zero() { Ok(m.clone()) } else { spectral::abs_herm(&m.hermitian_part()) })
}
