//! f = g + Σ_n b_{d,n} + Σ_n b_n with the localization projection ζ.

use rayon::prelude::*;

use super::cuculescu::{cuculescu, validate_family, CuculescuFamily};
use crate::algebra::spectral::{self, tol_psd};
use crate::algebra::{lattice, CMatrix};
use crate::dyadic::OperatorField;
use crate::error::{invalid, NcczError, Result};
use crate::report::{Check, ValidationReport};

/// 4·⌊√d⌋.
pub fn default_s(d: usize) -> usize {
    4 * (d as f64).sqrt().floor() as usize
}

/// A bad-part field attached to its dyadic level.
#[derive(Clone, Debug)]
pub struct LevelField {
    pub level: i32,
    pub field: OperatorField,
}

#[derive(Clone, Debug)]
pub struct CzDecomposition {
    pub s: usize,
    pub lambda: f64,
    pub family: CuculescuFamily,
    pub g: OperatorField,
    pub bd: Vec<LevelField>,
    pub boff: Vec<LevelField>,
    pub zeta: OperatorField,
    /// max cellwise ‖f − g − Σb_d − Σb‖.
    pub reconstruction_residual: f64,
}

impl CzDecomposition {
    pub fn bd_total(&self) -> OperatorField {
        sum_levels(&self.g, &self.bd)
    }

    pub fn boff_total(&self) -> OperatorField {
        sum_levels(&self.g, &self.boff)
    }

    pub fn bd_at(&self, n: i32) -> Option<&OperatorField> {
        self.bd.iter().find(|l| l.level == n).map(|l| &l.field)
    }

    pub fn boff_at(&self, n: i32) -> Option<&OperatorField> {
        self.boff.iter().find(|l| l.level == n).map(|l| &l.field)
    }
}

fn sum_levels(like: &OperatorField, parts: &[LevelField]) -> OperatorField {
    let mut acc = OperatorField::zeros(*like.grid(), like.dim());
    for p in parts {
        acc.add_assign(&p.field);
    }
    acc
}

pub fn decompose(f: &OperatorField, lambda: f64, s: usize) -> Result<CzDecomposition> {
    if s == 0 {
        return invalid("dilation parameter s must be ≥ 1");
    }
    if f.hermitian_defect() > 1e-12 * (1.0 + f.norm(f64::INFINITY)?) {
        return invalid("field is not Hermitian");
    }
    if !f.is_psd()? {
        return invalid("field is not positive semidefinite");
    }
    let fam = cuculescu(f, lambda)?;
    let g = *f.grid();
    let n = f.dim();
    let levels = fam.stopping_levels();

    let mut bd = Vec::with_capacity(levels.len());
    let mut boff = Vec::with_capacity(levels.len());
    for &k in &levels {
        let lev = fam.level(k);
        let (d_vals, o_vals): (Vec<CMatrix>, Vec<CMatrix>) = (0..g.cell_count())
            .into_par_iter()
            .map(|c| {
                let id = g.cube_id_of_cell(c, k);
                if lev.p_rank[id] == 0 {
                    return (CMatrix::zeros(n), CMatrix::zeros(n));
                }
                let p = &lev.p[id];
                let q = &lev.q[id];
                let dev = f.value(c) - &lev.averages[id];
                let pdq = p.matmul(&dev).matmul(q);
                (dev.compress(p), &pdq + &pdq.adjoint())
            })
            .unzip();
        bd.push(LevelField { level: k, field: OperatorField::new(g, n, d_vals)? });
        boff.push(LevelField { level: k, field: OperatorField::new(g, n, o_vals)? });
    }

    // g = q f q + Σ_n (q_{n−1} f_n q_{n−1} − q_n f_n q_n); only stopping levels contribute.
    let good = (0..g.cell_count())
        .into_par_iter()
        .map(|c| {
            let q_end = fam.q_at(c, g.k_max);
            let mut acc = f.value(c).compress(q_end);
            for &k in &levels {
                let lev = fam.level(k);
                let id = g.cube_id_of_cell(c, k);
                if lev.p_rank[id] == 0 {
                    continue;
                }
                let fk = &lev.averages[id];
                acc += &fk.compress(fam.q_at(c, k - 1));
                acc -= &fk.compress(&lev.q[id]);
            }
            acc
        })
        .collect();
    let good = OperatorField::new(g, n, good)?;

    let zeta = build_zeta(&fam, s)?;

    let mut rest = f.sub(&good);
    for l in bd.iter().chain(&boff) {
        rest = rest.sub(&l.field);
    }
    let residual = rest.norm(f64::INFINITY)?;
    let finf = f.norm(f64::INFINITY)?;
    if residual > 1e-8 * finf.max(f64::MIN_POSITIVE) {
        return Err(NcczError::Internal(format!("reconstruction residual {residual:e} exceeds 1e-8·‖f‖∞")));
    }
    Ok(CzDecomposition { s, lambda, family: fam, g: good, bd, boff, zeta, reconstruction_residual: residual })
}

/// ζ(x) = (∨ p_Q over stopping cubes whose (2s+1)-dilation meets x)^⊥, counted inside the box.
fn build_zeta(fam: &CuculescuFamily, s: usize) -> Result<OperatorField> {
    let g = fam.grid;
    let n = fam.n;
    let mut sums: Vec<Option<CMatrix>> = vec![None; g.cell_count()];
    for lev in &fam.levels {
        for id in lev.nonzero_p() {
            let cube = g.cube_from_id(lev.level, id);
            for c in g.cells_in_dilation(&cube, s) {
                match &mut sums[c] {
                    Some(acc) => *acc += &lev.p[id],
                    slot @ None => *slot = Some(lev.p[id].clone()),
                }
            }
        }
    }
    let values = sums
        .into_par_iter()
        .map(|s| match s {
            None => Ok(CMatrix::identity(n)),
            Some(acc) => Ok(lattice::complement(&lattice::range_projector(&acc)?)),
        })
        .collect::<Result<Vec<_>>>()?;
    OperatorField::new(g, n, values)
}

/// Largest ‖ζ(x) b(y) ζ(x)‖ bound over y ∈ (2s+1)Q_{x,n}, diagonal and off-diagonal parts.
fn localized_bounds(dec: &CzDecomposition, f: &OperatorField) -> Result<(f64, f64)> {
    let fam = &dec.family;
    let g = fam.grid;
    let mut worst_d: f64 = 0.0;
    let mut worst_o: f64 = 0.0;
    for lev in &fam.levels {
        let ids: Vec<usize> = lev.nonzero_p().collect();
        let per = ids
            .par_iter()
            .map(|&id| -> Result<(f64, f64)> {
                let cube = g.cube_from_id(lev.level, id);
                let mut spread: f64 = 0.0;
                for c in g.cells_of_cube(&cube) {
                    spread = spread.max(spectral::op_norm(&(f.value(c) - &lev.averages[id]))?);
                }
                if spread == 0.0 {
                    return Ok((0.0, 0.0));
                }
                let p = &lev.p[id];
                let mut leak: f64 = 0.0;
                for x in g.cells_in_dilation(&cube, dec.s) {
                    let z = dec.zeta.value(x);
                    if z.is_zero() {
                        continue;
                    }
                    leak = leak.max(spectral::op_norm_general(&z.matmul(p))?);
                }
                Ok((leak * leak * spread, 2.0 * leak * spread))
            })
            .collect::<Result<Vec<_>>>()?;
        for (a, b) in per {
            worst_d = worst_d.max(a);
            worst_o = worst_o.max(b);
        }
    }
    Ok((worst_d, worst_o))
}

/// max over levels and cubes of ‖∫_Q b‖.
fn cube_integral_defect(parts: &[LevelField]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for l in parts {
        let g = l.field.grid();
        let vol = g.cell_volume();
        let per = (0..g.cube_count(l.level))
            .into_par_iter()
            .map(|id| {
                let mut s = CMatrix::zeros(l.field.dim());
                for c in g.cells_of_cube(&g.cube_from_id(l.level, id)) {
                    s += l.field.value(c);
                }
                spectral::op_norm_general(&s.scale(vol))
            })
            .collect::<Result<Vec<_>>>()?;
        worst = per.into_iter().fold(worst, f64::max);
    }
    Ok(worst)
}

/// The four theorem properties plus the Cuculescu invariants, with measured slack.
pub fn validate(dec: &CzDecomposition, f: &OperatorField) -> Result<ValidationReport> {
    let g = f.grid();
    let d = g.d as i32;
    let lambda = dec.lambda;
    let l1 = f.norm(1.0)?;
    let finf = f.norm(f64::INFINITY)?;
    // ‖g‖₁ = φ(g) = φ(f) in exact arithmetic; allow summation rounding only.
    let round = 1e-12;
    let mut r = validate_family(&dec.family, f)?;

    r.insert("reconstruction".into(), Check::le(dec.reconstruction_residual, 1e-10 * finf));
    let zdef = dec.zeta.map(|_, z| &CMatrix::identity(f.dim()) - z).trace_phi_real();
    let dil = ((2 * dec.s + 1) as f64).powi(d);
    r.insert("zeta_trace".into(), Check::le(zdef, dil * l1 / lambda));

    let gmin = dec.g.min_eigenvalue()?;
    let ginf = dec.g.norm(f64::INFINITY)?;
    r.insert("g_psd".into(), Check::le(-gmin, tol_psd(ginf, 0.0)));
    r.insert("g_l1".into(), Check::le(dec.g.norm(1.0)?, l1 * (1.0 + round)));
    r.insert("g_linf".into(), Check::le(ginf, 2f64.powi(d) * lambda * (1.0 + round)));

    let mean_tol = 1e-10 * l1.max(f64::MIN_POSITIVE);
    r.insert("bd_mean_zero".into(), Check::le(cube_integral_defect(&dec.bd)?, mean_tol));
    r.insert("boff_mean_zero".into(), Check::le(cube_integral_defect(&dec.boff)?, mean_tol));
    let (loc_d, loc_o) = localized_bounds(dec, f)?;
    r.insert("bd_localized".into(), Check::le(loc_d, 1e-10));
    r.insert("boff_localized".into(), Check::le(loc_o, 1e-10));
    let mut bd_l1 = 0.0;
    for l in &dec.bd {
        bd_l1 += l.field.norm(1.0)?;
    }
    r.insert("bd_l1".into(), Check::le(bd_l1, 2.0 * l1 * (1.0 + round)));
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::DyadicGrid;
    use crate::report::all_hold;

    #[test]
    fn bounded_field_is_all_good() {
        let g = DyadicGrid::new(1, 0, 4).unwrap();
        let f = OperatorField::constant(g, CMatrix::scalar(2, 0.5));
        let dec = decompose(&f, 1.0, 4).unwrap();
        assert_eq!(dec.g, f);
        assert!(dec.bd.is_empty() && dec.boff.is_empty());
        assert!(dec.zeta.values().iter().all(|z| *z == CMatrix::identity(2)));
    }

    #[test]
    fn spike_validates() {
        let g = DyadicGrid::new(1, -1, 6).unwrap();
        let f = OperatorField::from_fn(g, 2, |x| {
            if (x[0] - 0.3).abs() < 0.02 {
                CMatrix::from_real_rows(&[&[20.0, 3.0], &[3.0, 1.0]])
            } else {
                CMatrix::from_real_diag(&[0.1, 0.2])
            }
        });
        let dec = decompose(&f, 1.0, default_s(1)).unwrap();
        assert!(!dec.bd.is_empty());
        let rep = validate(&dec, &f).unwrap();
        assert!(all_hold(&rep), "{:?}", crate::report::failures(&rep));
    }

    #[test]
    fn rejects_non_psd() {
        let g = DyadicGrid::new(1, 0, 2).unwrap();
        let f = OperatorField::constant(g, CMatrix::from_real_diag(&[-1.0]));
        assert!(decompose(&f, 1.0, 4).is_err());
    }
}
