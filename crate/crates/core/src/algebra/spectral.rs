//! Functional calculus, Schatten norms and Löwner predicates.

use serde::{Deserialize, Serialize};

use super::jacobi::{eigh, SpectralData};
use super::matrix::{CMatrix, C64};
use crate::error::Result;

pub const TOL_PROJ: f64 = 1e-12;
pub const TOL_RANK: f64 = 1e-9;
pub const EIG_ROUNDING: f64 = 1e-12;

/// tol_psd = 1e−10·(1+‖a‖∞+‖x‖∞)
pub fn tol_psd(a_norm: f64, x_norm: f64) -> f64 {
    1e-10 * (1.0 + a_norm + x_norm)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Bound {
    Open(f64),
    Closed(f64),
    Unbounded,
}

/// Real interval used for spectral projections.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: Bound,
    pub hi: Bound,
}

impl Interval {
    pub fn new(lo: Bound, hi: Bound) -> Self {
        Interval { lo, hi }
    }
    pub fn all() -> Self {
        Interval { lo: Bound::Unbounded, hi: Bound::Unbounded }
    }
    /// (0, λ]
    pub fn up_to(lambda: f64) -> Self {
        Interval { lo: Bound::Open(0.0), hi: Bound::Closed(lambda) }
    }
    /// (λ, ∞)
    pub fn above(lambda: f64) -> Self {
        Interval { lo: Bound::Open(lambda), hi: Bound::Unbounded }
    }
    /// [a, b]
    pub fn closed(a: f64, b: f64) -> Self {
        Interval { lo: Bound::Closed(a), hi: Bound::Closed(b) }
    }

    pub fn contains(&self, v: f64) -> bool {
        let lo_ok = match self.lo {
            Bound::Open(a) => v > a,
            Bound::Closed(a) => v >= a,
            Bound::Unbounded => true,
        };
        let hi_ok = match self.hi {
            Bound::Open(b) => v < b,
            Bound::Closed(b) => v <= b,
            Bound::Unbounded => true,
        };
        lo_ok && hi_ok
    }
}

fn round_to(v: f64, grid: f64) -> f64 {
    (v / grid).round() * grid
}

/// Eigenvalue as used for interval classification: values within the zero band are exactly 0,
/// everything else rounded to the 1e−12 grid (relative to the matrix scale when it exceeds 1).
pub fn classify_value(v: f64, scale: f64) -> f64 {
    let grid = EIG_ROUNDING * scale.max(1.0);
    if v.abs() <= grid {
        0.0
    } else {
        round_to(v, grid)
    }
}

pub fn spectral_data(x: &CMatrix) -> Result<SpectralData> {
    eigh(x)
}

/// χ_I(x) for Hermitian x.
pub fn spectral_projection(x: &CMatrix, interval: Interval) -> Result<CMatrix> {
    let s = eigh(x)?;
    Ok(spectral_projection_from(&s, interval))
}

pub fn spectral_projection_from(s: &SpectralData, interval: Interval) -> CMatrix {
    let scale = s.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    s.projector(|_, v| interval.contains(classify_value(v, scale)))
}

/// g(x) for Hermitian x.
pub fn apply_fn(x: &CMatrix, g: impl FnMut(f64) -> f64) -> Result<CMatrix> {
    Ok(eigh(x)?.rebuild(g))
}

/// |x| for Hermitian x.
pub fn abs_herm(x: &CMatrix) -> Result<CMatrix> {
    apply_fn(x, f64::abs)
}

/// |x| = (x*x)^{1/2} for a general square matrix.
pub fn abs_general(x: &CMatrix) -> Result<CMatrix> {
    let xx = x.adjoint().matmul(x);
    apply_fn(&xx, |l| l.max(0.0).sqrt())
}

/// Square root of a PSD matrix (negative rounding noise clipped).
pub fn psd_sqrt(x: &CMatrix) -> Result<CMatrix> {
    apply_fn(x, |l| l.max(0.0).sqrt())
}

pub fn eigenvalues(x: &CMatrix) -> Result<Vec<f64>> {
    Ok(eigh(x)?.values)
}

pub fn min_eig(x: &CMatrix) -> Result<f64> {
    Ok(eigh(x)?.values[0])
}

pub fn max_eig(x: &CMatrix) -> Result<f64> {
    Ok(*eigh(x)?.values.last().unwrap())
}

/// Singular values of a general square matrix, descending.
pub fn singular_values(x: &CMatrix) -> Result<Vec<f64>> {
    let xx = x.adjoint().matmul(x);
    let mut v: Vec<f64> = eigh(&xx)?.values.into_iter().map(|l| l.max(0.0).sqrt()).collect();
    v.reverse();
    Ok(v)
}

fn schatten_from(values: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    } else if p == 1.0 {
        values.iter().map(|v| v.abs()).sum()
    } else {
        values.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// ‖x‖_p for Hermitian x, p ∈ [1, ∞] (also accepts p ∈ (0,1) as a quasi-norm).
pub fn schatten_norm(x: &CMatrix, p: f64) -> Result<f64> {
    Ok(schatten_from(&eigh(x)?.values, p))
}

/// Schatten norm of a general (possibly non-Hermitian) matrix.
pub fn schatten_norm_general(x: &CMatrix, p: f64) -> Result<f64> {
    Ok(schatten_from(&singular_values(x)?, p))
}

/// Operator norm of a Hermitian matrix.
pub fn op_norm(x: &CMatrix) -> Result<f64> {
    schatten_norm(x, f64::INFINITY)
}

/// Operator norm of any square matrix.
pub fn op_norm_general(x: &CMatrix) -> Result<f64> {
    if x.dim() == 1 {
        return Ok(x[(0, 0)].norm());
    }
    Ok(singular_values(x)?[0])
}

pub fn is_psd(x: &CMatrix, tol: f64) -> Result<bool> {
    Ok(min_eig(x)? >= -tol)
}

/// a − x ⪰ 0 and a + x ⪰ 0 within tol_psd.
pub fn loewner_between(x: &CMatrix, a: &CMatrix) -> Result<bool> {
    Ok(loewner_slack(x, a)? >= 0.0)
}

/// min eig(a ± x) + tol_psd; nonnegative iff loewner_between holds.
pub fn loewner_slack(x: &CMatrix, a: &CMatrix) -> Result<f64> {
    let tol = tol_psd(op_norm(a)?, op_norm(x)?);
    Ok(loewner_raw_slack(x, a)? + tol)
}

/// min over the two eigenvalue problems of min eig(a ± x), without tolerance.
pub fn loewner_raw_slack(x: &CMatrix, a: &CMatrix) -> Result<f64> {
    let lo = min_eig(&(a - x))?;
    let hi = min_eig(&(a + x))?;
    Ok(lo.min(hi))
}

/// Smallest C with −C·a ⪯ x ⪯ C·a for PSD a (∞ when x leaks outside range(a)).
pub fn relative_bound(x: &CMatrix, a: &CMatrix) -> Result<f64> {
    let n = x.dim();
    let s = crate::algebra::eigh(a)?;
    let top = s.values.last().copied().unwrap_or(0.0).max(0.0);
    let xn = op_norm(x)?;
    let cut = 1e-12 * top.max(xn).max(f64::MIN_POSITIVE);
    let keep: Vec<usize> = (0..n).filter(|&k| s.values[k] > cut).collect();
    let drop: Vec<usize> = (0..n).filter(|&k| s.values[k] <= cut).collect();
    let vecs: Vec<Vec<C64>> = (0..n).map(|k| s.vector(k)).collect();
    let form = |u: &[C64], v: &[C64]| -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += u[i].conj() * x[(i, j)] * v[j];
            }
        }
        acc
    };
    // compression onto null(a) must vanish, and so must the coupling to it
    for &i in &drop {
        for k in 0..n {
            if form(&vecs[i], &vecs[k]).norm() > 1e-10 * xn.max(f64::MIN_POSITIVE) {
                return Ok(f64::INFINITY);
            }
        }
    }
    if keep.is_empty() {
        return Ok(0.0);
    }
    let r = keep.len();
    let b = CMatrix::from_fn(r, |p, q| {
        let (i, j) = (keep[p], keep[q]);
        form(&vecs[i], &vecs[j]) / (s.values[i] * s.values[j]).sqrt()
    });
    op_norm(&b.hermitian_part())
}

/// Commutator norm ‖xy − yx‖ (operator norm).
pub fn commutator_norm(x: &CMatrix, y: &CMatrix) -> Result<f64> {
    let c = &x.matmul(y) - &y.matmul(x);
    op_norm_general(&c)
}

pub fn real_trace(x: &CMatrix) -> f64 {
    x.trace().re
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> CMatrix {
        CMatrix::from_real_diag(v)
    }

    #[test]
    fn spectral_projection_examples() {
        let p = spectral_projection(&diag(&[0.5, 2.0]), Interval::up_to(1.0)).unwrap();
        assert!((&p - &diag(&[1.0, 0.0])).max_abs() < 1e-15);
        let x = CMatrix::from_real_rows(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let id = spectral_projection(&x, Interval::all()).unwrap();
        assert!((&id - &CMatrix::identity(2)).max_abs() < 1e-14);
        let p = spectral_projection(&x, Interval::up_to(1.5)).unwrap();
        let expect = CMatrix::from_real_rows(&[&[0.5, -0.5], &[-0.5, 0.5]]);
        assert!((&p - &expect).max_abs() < 1e-14);
    }

    #[test]
    fn zero_eigenvalue_excluded_from_half_open_interval() {
        let p = spectral_projection(&diag(&[0.0, 1e-14, 0.7]), Interval::up_to(1.0)).unwrap();
        assert!((&p - &diag(&[0.0, 0.0, 1.0])).max_abs() < 1e-15);
    }

    #[test]
    fn schatten_examples() {
        assert_eq!(schatten_norm(&diag(&[3.0, -4.0]), 1.0).unwrap(), 7.0);
        assert_eq!(schatten_norm(&diag(&[3.0, -4.0]), f64::INFINITY).unwrap(), 4.0);
        let x = CMatrix::from_real_rows(&[&[0.0, 2.0], &[2.0, 0.0]]);
        assert!((schatten_norm(&x, 2.0).unwrap() - 8f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn counterexample_pair() {
        let f = diag(&[8.0, -8.0]);
        let g = CMatrix::from_real_rows(&[&[10.0, 6.0], &[6.0, 10.0]]);
        assert!(loewner_between(&f, &g).unwrap());
        let absf = abs_herm(&f).unwrap();
        assert!(!is_psd(&(&g - &absf), tol_psd(10.0, 8.0)).unwrap());
        assert!(loewner_between(&CMatrix::zeros(2), &CMatrix::zeros(2)).unwrap());
        assert!(!loewner_between(&diag(&[1.0, 0.0]), &diag(&[0.5, 0.5])).unwrap());
    }
}
