//! Cyclic Jacobi eigensolver for small complex Hermitian matrices.

use super::matrix::{CMatrix, C64, ZERO};
use crate::error::{NcczError, Result};

pub const JACOBI_REL_TOL: f64 = 1e-13;
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenvalues in ascending order with the matching unit eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct SpectralData {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl SpectralData {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.vectors.column(k)
    }

    /// U diag(g(λ)) U*
    pub fn rebuild(&self, mut g: impl FnMut(f64) -> f64) -> CMatrix {
        let n = self.dim();
        let u = &self.vectors;
        let w: Vec<f64> = self.values.iter().map(|&l| g(l)).collect();
        let mut out = CMatrix::zeros(n);
        for (k, &wk) in w.iter().enumerate() {
            if wk == 0.0 {
                continue;
            }
            for i in 0..n {
                let uik = u[(i, k)] * wk;
                for j in 0..n {
                    out[(i, j)] += uik * u[(j, k)].conj();
                }
            }
        }
        out
    }

    /// Projector onto the span of the selected eigenvectors.
    pub fn projector(&self, mut keep: impl FnMut(usize, f64) -> bool) -> CMatrix {
        let n = self.dim();
        let mut out = CMatrix::zeros(n);
        for k in 0..n {
            if !keep(k, self.values[k]) {
                continue;
            }
            for i in 0..n {
                let uik = self.vectors[(i, k)];
                for j in 0..n {
                    out[(i, j)] += uik * self.vectors[(j, k)].conj();
                }
            }
        }
        out
    }
}

fn off_diagonal(a: &CMatrix) -> f64 {
    let n = a.dim();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Diagonalize the Hermitian part of `x`.
pub fn eigh(x: &CMatrix) -> Result<SpectralData> {
    let n = x.dim();
    if n == 1 {
        return Ok(SpectralData { values: vec![x[(0, 0)].re], vectors: CMatrix::identity(1) });
    }
    let mut a = x.hermitian_part();
    let mut v = CMatrix::identity(n);
    let scale = a.frobenius();
    let target = JACOBI_REL_TOL * scale;
    let mut off = off_diagonal(&a);
    let mut sweeps = 0;
    while off > target {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(NcczError::EigenNonConvergence { sweeps, residual: off });
        }
        sweeps += 1;
        for p in 0..n - 1 {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
        off = off_diagonal(&a);
    }
    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    let values = order.iter().map(|&i| diag[i]).collect();
    let vectors = CMatrix::from_fn(n, |i, k| v[(i, order[k])]);
    Ok(SpectralData { values, vectors })
}

fn rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let n = a.dim();
    let phase = apq / r;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let tau = (aqq - app) / (2.0 * r);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let ph = phase.conj();
    let u_pp = C64::new(c, 0.0);
    let u_pq = C64::new(s, 0.0);
    let u_qp = ph * (-s);
    let u_qq = ph * c;

    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * u_pp + akq * u_qp;
        a[(k, q)] = akp * u_pq + akq * u_qq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = u_pp.conj() * apk + u_qp.conj() * aqk;
        a[(q, k)] = u_pq.conj() * apk + u_qq.conj() * aqk;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * u_pp + vkq * u_qp;
        v[(k, q)] = vkp * u_pq + vkq * u_qq;
    }
}
