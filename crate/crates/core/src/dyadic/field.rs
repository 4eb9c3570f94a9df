use rayon::prelude::*;

use super::grid::DyadicGrid;
use crate::algebra::spectral::{self, tol_psd};
use crate::algebra::{CMatrix, C64};
use crate::error::{invalid, NcczError, Result};

/// Matrix-valued step function on the finest cells of a dyadic grid.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorField {
    grid: DyadicGrid,
    n: usize,
    values: Vec<CMatrix>,
}

impl OperatorField {
    pub fn new(grid: DyadicGrid, n: usize, values: Vec<CMatrix>) -> Result<Self> {
        if n == 0 || n > 16 {
            return invalid(format!("matrix dimension must be in 1..=16, got {n}"));
        }
        if values.len() != grid.cell_count() {
            return Err(NcczError::DimensionMismatch {
                expected: format!("{} cells", grid.cell_count()),
                got: format!("{} values", values.len()),
            });
        }
        if let Some(v) = values.iter().find(|v| v.dim() != n) {
            return Err(NcczError::DimensionMismatch { expected: format!("{n}x{n}"), got: format!("{0}x{0}", v.dim()) });
        }
        Ok(OperatorField { grid, n, values })
    }

    pub fn zeros(grid: DyadicGrid, n: usize) -> Self {
        OperatorField { grid, n, values: vec![CMatrix::zeros(n); grid.cell_count()] }
    }

    pub fn constant(grid: DyadicGrid, value: CMatrix) -> Self {
        let n = value.dim();
        OperatorField { grid, n, values: vec![value; grid.cell_count()] }
    }

    /// Value at each cell from its midpoint.
    pub fn from_fn(grid: DyadicGrid, n: usize, f: impl Fn([f64; 2]) -> CMatrix + Sync) -> Self {
        let values = (0..grid.cell_count()).into_par_iter().map(|c| f(grid.cell_center(c))).collect();
        OperatorField { grid, n, values }
    }

    pub fn from_scalars(grid: DyadicGrid, s: &[f64]) -> Result<Self> {
        Self::new(grid, 1, s.iter().map(|&v| CMatrix::from_real_diag(&[v])).collect())
    }

    #[inline]
    pub fn grid(&self) -> &DyadicGrid {
        &self.grid
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn values(&self) -> &[CMatrix] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [CMatrix] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<CMatrix> {
        self.values
    }

    #[inline]
    pub fn value(&self, cell: usize) -> &CMatrix {
        &self.values[cell]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_shape(&self, other: &OperatorField) -> Result<()> {
        if self.grid != other.grid || self.n != other.n {
            return Err(NcczError::DimensionMismatch {
                expected: format!("{:?} n={}", self.grid, self.n),
                got: format!("{:?} n={}", other.grid, other.n),
            });
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(usize, &CMatrix) -> CMatrix + Sync) -> OperatorField {
        let values = self.values.par_iter().enumerate().map(|(c, v)| f(c, v)).collect();
        OperatorField { grid: self.grid, n: self.n, values }
    }

    pub fn try_map(&self, f: impl Fn(usize, &CMatrix) -> Result<CMatrix> + Sync) -> Result<OperatorField> {
        let values = self.values.par_iter().enumerate().map(|(c, v)| f(c, v)).collect::<Result<Vec<_>>>()?;
        Ok(OperatorField { grid: self.grid, n: self.n, values })
    }

    pub fn zip_map(&self, other: &OperatorField, f: impl Fn(&CMatrix, &CMatrix) -> CMatrix + Sync) -> OperatorField {
        let values = self.values.par_iter().zip(other.values.par_iter()).map(|(a, b)| f(a, b)).collect();
        OperatorField { grid: self.grid, n: self.n, values }
    }

    pub fn add(&self, other: &OperatorField) -> OperatorField {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &OperatorField) -> OperatorField {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> OperatorField {
        self.map(|_, v| v.scale(c))
    }

    pub fn add_assign(&mut self, other: &OperatorField) {
        self.values.par_iter_mut().zip(other.values.par_iter()).for_each(|(a, b)| *a += b);
    }

    pub fn adjoint(&self) -> OperatorField {
        self.map(|_, v| v.adjoint())
    }

    /// e x e cellwise.
    pub fn compress(&self, e: &OperatorField) -> OperatorField {
        self.zip_map(e, |x, e| x.compress(e))
    }

    /// φ(f) = Σ vol·Tr f(cell).
    pub fn trace_phi(&self) -> C64 {
        let vol = self.grid.cell_volume();
        self.values.iter().map(|v| v.trace()).sum::<C64>() * vol
    }

    pub fn trace_phi_real(&self) -> f64 {
        self.trace_phi().re
    }

    /// ‖f‖_p = (Σ vol·Tr|f|^p)^{1/p}; p = ∞ gives the max operator norm.
    pub fn norm(&self, p: f64) -> Result<f64> {
        let per_cell: Vec<f64> = self
            .values
            .par_iter()
            .map(|v| {
                if v.hermitian_defect() <= 1e-14 * (1.0 + v.max_abs()) {
                    spectral::schatten_norm(v, p)
                } else {
                    spectral::schatten_norm_general(v, p)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        if p.is_infinite() {
            return Ok(per_cell.into_iter().fold(0.0, f64::max));
        }
        let vol = self.grid.cell_volume();
        let s: f64 = per_cell.iter().map(|x| x.powf(p)).sum::<f64>() * vol;
        Ok(s.powf(1.0 / p))
    }

    /// Lower bound of sup_λ λ·φ(χ_(λ,∞)(|f|))^{1/p} on a geometric grid with 64 points per decade.
    pub fn weak_quasinorm(&self, p: f64) -> Result<f64> {
        let svals: Vec<Vec<f64>> = self.values.par_iter().map(spectral::singular_values).collect::<Result<_>>()?;
        let mut all: Vec<f64> = svals.into_iter().flatten().filter(|&s| s > 0.0).collect();
        if all.is_empty() {
            return Ok(0.0);
        }
        all.sort_by(f64::total_cmp);
        let lo = all[0];
        let hi = *all.last().unwrap();
        let vol = self.grid.cell_volume();
        let steps = ((hi / lo).log10() * 64.0).ceil().max(1.0) as usize;
        let mut best: f64 = 0.0;
        for t in 0..=steps {
            let lam = lo * 10f64.powf(t as f64 / 64.0) * (1.0 - 1e-12);
            let idx = all.partition_point(|&s| s <= lam);
            let mass = (all.len() - idx) as f64 * vol;
            best = best.max(lam * mass.powf(1.0 / p));
        }
        Ok(best)
    }

    /// Max over cells of the Hermitian defect.
    pub fn hermitian_defect(&self) -> f64 {
        self.values.iter().map(|v| v.hermitian_defect()).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        let m = self.values.par_iter().map(spectral::min_eig).collect::<Result<Vec<_>>>()?;
        Ok(m.into_iter().fold(f64::INFINITY, f64::min))
    }

    /// PSD certificate: min eigenvalue per cell ≥ −tol_psd.
    pub fn is_psd(&self) -> Result<bool> {
        let ok = self
            .values
            .par_iter()
            .map(|v| {
                let nrm = v.norm_bound();
                spectral::is_psd(v, tol_psd(nrm, 0.0))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ok.into_iter().all(|b| b))
    }

    /// Max cellwise operator norm of self − other.
    pub fn max_diff(&self, other: &OperatorField) -> Result<f64> {
        let m = self
            .values
            .par_iter()
            .zip(other.values.par_iter())
            .map(|(a, b)| spectral::op_norm_general(&(a - b)))
            .collect::<Result<Vec<_>>>()?;
        Ok(m.into_iter().fold(0.0, f64::max))
    }

    /// Max cellwise max-entry difference (cheap, for identity checks).
    pub fn max_entry_diff(&self, other: &OperatorField) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).max_abs()).fold(0.0, f64::max)
    }

    /// Real and imaginary parts (x + x*)/2 and (x − x*)/(2i).
    pub fn real_part(&self) -> OperatorField {
        self.map(|_, v| v.hermitian_part())
    }

    pub fn imag_part(&self) -> OperatorField {
        self.map(|_, v| v.skew_part())
    }

    /// Embed scalar-valued data as the (0,0) entry of n=1 matrices.
    pub fn scalar_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v[(0, 0)].re).collect()
    }

    /// Does any cell carry a nonzero value?
    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.is_zero())
    }

    /// Cells with nonzero value.
    pub fn support(&self) -> Vec<usize> {
        self.values.iter().enumerate().filter(|(_, v)| !v.is_zero()).map(|(c, _)| c).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_examples() {
        let g = DyadicGrid::new(1, 0, 3).unwrap();
        assert_eq!(OperatorField::zeros(g, 2).trace_phi_real(), 0.0);
        assert_eq!(OperatorField::constant(g, CMatrix::identity(2)).trace_phi_real(), 2.0);
        let f = OperatorField::from_fn(g, 2, |x| if x[0] < 0.5 { CMatrix::from_real_diag(&[1.0, 3.0]) } else { CMatrix::zeros(2) });
        assert_eq!(f.trace_phi_real(), 2.0);
    }

    #[test]
    fn norm_examples() {
        let g = DyadicGrid::new(1, 0, 4).unwrap();
        let f = OperatorField::from_fn(g, 3, |x| if x[0] < 0.25 { CMatrix::identity(3) } else { CMatrix::zeros(3) });
        assert!((f.norm(1.0).unwrap() - 0.75).abs() < 1e-15);
        let g10 = DyadicGrid::new(1, 0, 10).unwrap();
        let ramp = OperatorField::from_fn(g10, 1, |x| CMatrix::from_real_diag(&[x[0]]));
        let l2 = ramp.norm(2.0).unwrap();
        // midpoint Riemann sum of x² on [0,1): 1/3 − h²/12
        assert!((l2 * l2 - 1.0 / 3.0).abs() < 1e-6);
        assert!(ramp.weak_quasinorm(2.0).unwrap() <= l2 + 1e-12);
    }
}
