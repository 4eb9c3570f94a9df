//! Cuculescu's decreasing projections q_k and the per-cube stopping projections p_Q.

use rayon::prelude::*;

use crate::algebra::spectral::{self, tol_psd};
use crate::algebra::{eigh, CMatrix, C64};
use crate::dyadic::{cube_averages, expand_cube_values, DyadicGrid, OperatorField};
use crate::error::{invalid, NcczError, Result};
use crate::report::{Check, ValidationReport};

/// Relative slack for eigenvalues sitting on λ.
pub const LAMBDA_REL_TOL: f64 = 1e-12;

/// Per-level data: cube averages f_Q and the projections q_Q, p_Q.
#[derive(Clone, Debug)]
pub struct LevelProjections {
    pub level: i32,
    pub averages: Vec<CMatrix>,
    pub q: Vec<CMatrix>,
    pub p: Vec<CMatrix>,
    pub p_rank: Vec<usize>,
}

impl LevelProjections {
    pub fn nonzero_p(&self) -> impl Iterator<Item = usize> + '_ {
        self.p_rank.iter().enumerate().filter(|(_, &r)| r > 0).map(|(i, _)| i)
    }

    pub fn has_stopping(&self) -> bool {
        self.p_rank.iter().any(|&r| r > 0)
    }
}

#[derive(Clone, Debug)]
pub struct CuculescuFamily {
    pub lambda: f64,
    pub m_lambda: i32,
    pub grid: DyadicGrid,
    pub n: usize,
    /// Levels k_min..=k_max in order.
    pub levels: Vec<LevelProjections>,
}

impl CuculescuFamily {
    pub fn level(&self, k: i32) -> &LevelProjections {
        &self.levels[(k - self.grid.k_min) as usize]
    }

    /// q_Q for the level-k cube containing `cell`.
    pub fn q_at(&self, cell: usize, k: i32) -> &CMatrix {
        &self.level(k).q[self.grid.cube_id_of_cell(cell, k)]
    }

    pub fn p_at(&self, cell: usize, k: i32) -> &CMatrix {
        &self.level(k).p[self.grid.cube_id_of_cell(cell, k)]
    }

    pub fn q_field(&self, k: i32) -> OperatorField {
        expand_cube_values(&self.grid, k, &self.level(k).q)
    }

    pub fn p_field(&self, k: i32) -> OperatorField {
        expand_cube_values(&self.grid, k, &self.level(k).p)
    }

    /// q = ∧_k q_k, which is q_{k_max}.
    pub fn residual(&self) -> OperatorField {
        self.q_field(self.grid.k_max)
    }

    /// Levels with some p_Q ≠ 0.
    pub fn stopping_levels(&self) -> Vec<i32> {
        self.levels.iter().filter(|l| l.has_stopping()).map(|l| l.level).collect()
    }
}

fn within_lambda(v: f64, lambda: f64) -> bool {
    v <= lambda * (1.0 + LAMBDA_REL_TOL)
}

/// Greatest m with E_k f ⪯ λ for all k ≤ m.
pub fn starting_index(f: &OperatorField, lambda: f64) -> Result<i32> {
    if !(lambda > 0.0) {
        return invalid(format!("lambda must be positive, got {lambda}"));
    }
    let g = f.grid();
    let mut m = g.k_min - 1;
    for k in g.levels() {
        let avg = cube_averages(f, k)?;
        let worst = avg.par_iter().map(spectral::max_eig).collect::<Result<Vec<_>>>()?.into_iter().fold(f64::NEG_INFINITY, f64::max);
        if !within_lambda(worst, lambda) {
            if k == g.k_min {
                return Err(NcczError::CoarsestLevelViolation { lambda, level: k, max_eig: worst });
            }
            break;
        }
        m = k;
    }
    Ok(m)
}

/// Split range(q̂) into the part where the compression of a has spectrum in [0, λ] (q) and the rest (p).
fn compressed_cut(qhat: &CMatrix, a: &CMatrix, lambda: f64) -> Result<(CMatrix, CMatrix, usize)> {
    let n = qhat.dim();
    let id = CMatrix::identity(n);
    let basis: Vec<Vec<C64>> = if *qhat == id {
        (0..n).map(|j| id.column(j)).collect()
    } else {
        let s = eigh(qhat)?;
        (0..n).filter(|&k| s.values[k] > 0.5).map(|k| s.vector(k)).collect()
    };
    let r = basis.len();
    if r == 0 {
        return Ok((CMatrix::zeros(n), CMatrix::zeros(n), 0));
    }
    // B = V* a V on the r-dimensional range.
    let av: Vec<Vec<C64>> = basis
        .iter()
        .map(|v| (0..n).map(|i| (0..n).map(|j| a[(i, j)] * v[j]).sum()).collect())
        .collect();
    let b = CMatrix::from_fn(r, |i, j| (0..n).map(|k| basis[i][k].conj() * av[j][k]).sum());
    let s = eigh(&b)?;
    let keep: Vec<bool> = s.values.iter().map(|&v| within_lambda(v, lambda)).collect();
    let kept = keep.iter().filter(|&&k| k).count();
    if kept == r {
        return Ok((qhat.clone(), CMatrix::zeros(n), 0));
    }
    if kept == 0 {
        return Ok((CMatrix::zeros(n), qhat.clone(), r));
    }
    let mut q = CMatrix::zeros(n);
    let mut p = CMatrix::zeros(n);
    for k in 0..r {
        let w = s.vector(k);
        let u: Vec<C64> = (0..n).map(|i| (0..r).map(|j| basis[j][i] * w[j]).sum()).collect();
        let target = if keep[k] { &mut q } else { &mut p };
        *target += &CMatrix::outer(&u);
    }
    Ok((q, p, r - kept))
}

/// q_k = χ_[0,λ](q_{k−1} f_k q_{k−1}) on the range of q_{k−1}, q_k = 1 for k ≤ m_λ.
pub fn cuculescu(f: &OperatorField, lambda: f64) -> Result<CuculescuFamily> {
    let m = starting_index(f, lambda)?;
    let g = *f.grid();
    let n = f.dim();
    let mut levels: Vec<LevelProjections> = Vec::with_capacity((g.k_max - g.k_min + 1) as usize);
    for k in g.levels() {
        let averages = cube_averages(f, k)?;
        let count = averages.len();
        if k <= m {
            levels.push(LevelProjections {
                level: k,
                averages,
                q: vec![CMatrix::identity(n); count],
                p: vec![CMatrix::zeros(n); count],
                p_rank: vec![0; count],
            });
            continue;
        }
        let parent = levels.last().expect("k > m ≥ k_min has a parent level");
        let cuts = (0..count)
            .into_par_iter()
            .map(|id| {
                let pid = g.cube_id(&g.cube_from_id(k, id).parent());
                compressed_cut(&parent.q[pid], &averages[id], lambda)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut q = Vec::with_capacity(count);
        let mut p = Vec::with_capacity(count);
        let mut p_rank = Vec::with_capacity(count);
        for (qq, pp, r) in cuts {
            q.push(qq);
            p.push(pp);
            p_rank.push(r);
        }
        levels.push(LevelProjections { level: k, averages, q, p, p_rank });
    }
    Ok(CuculescuFamily { lambda, m_lambda: m, grid: g, n, levels })
}

/// Invariant checks of the family against the data it came from.
pub fn validate_family(fam: &CuculescuFamily, f: &OperatorField) -> Result<ValidationReport> {
    let g = fam.grid;
    let lambda = fam.lambda;
    let mut monotone: f64 = 0.0;
    let mut commute: f64 = 0.0;
    let mut bounded: f64 = 0.0;
    let mut bounded_tol: f64 = 0.0;
    for k in (g.k_min + 1)..=g.k_max {
        let lev = fam.level(k);
        let par = fam.level(k - 1);
        let per = (0..lev.q.len())
            .into_par_iter()
            .map(|id| -> Result<(f64, f64, f64, f64)> {
                let cube = g.cube_from_id(k, id);
                let pid = g.cube_id(&cube.parent());
                let qhat = &par.q[pid];
                let q = &lev.q[id];
                let fq = &lev.averages[id];
                let mono = -spectral::min_eig(&(qhat - q))?;
                let comp = fq.compress(qhat);
                let comm = spectral::commutator_norm(q, &comp)?;
                let top = spectral::max_eig(&(&fq.compress(q) - &q.scale(lambda)))?;
                let tol = tol_psd(lambda, spectral::op_norm(fq)?);
                Ok((mono, comm, top, tol))
            })
            .collect::<Result<Vec<_>>>()?;
        for (a, b, c, t) in per {
            monotone = monotone.max(a);
            commute = commute.max(b);
            if c - t > bounded - bounded_tol {
                bounded = c;
                bounded_tol = t;
            }
        }
    }
    let mut r = ValidationReport::new();
    r.insert("q_monotone".into(), Check::le(monotone, 1e-12));
    r.insert("q_commutes".into(), Check::le(commute, 1e-9));
    r.insert("q_bounded".into(), Check::le(bounded, bounded_tol.max(1e-10 * (1.0 + lambda))));
    let deficit = fam.residual().map(|_, q| &CMatrix::identity(fam.n) - q).trace_phi_real();
    let l1 = f.norm(1.0)?;
    r.insert("residual_trace".into(), Check::le(deficit, l1 / lambda * (1.0 + 1e-12)));
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_field(vals: &[f64], k_min: i32) -> OperatorField {
        let k_max = k_min + vals.len().trailing_zeros() as i32;
        let g = DyadicGrid::new(1, k_min, k_max).unwrap();
        OperatorField::from_scalars(g, vals).unwrap()
    }

    #[test]
    fn bounded_field_keeps_everything() {
        let f = scalar_field(&[0.5, 0.2, 0.9, 0.1], 0);
        let fam = cuculescu(&f, 1.0).unwrap();
        assert_eq!(fam.m_lambda, fam.grid.k_max);
        for l in &fam.levels {
            assert!(l.q.iter().all(|q| *q == CMatrix::identity(1)));
            assert!(l.p_rank.iter().all(|&r| r == 0));
        }
    }

    #[test]
    fn constant_half_lambda() {
        let g = DyadicGrid::new(2, -1, 2).unwrap();
        let f = OperatorField::constant(g, CMatrix::scalar(3, 0.5));
        assert_eq!(starting_index(&f, 1.0).unwrap(), g.k_max);
    }

    #[test]
    fn coarsest_violation_is_an_error() {
        let f = scalar_field(&[8.0, 0.0, 0.0, 0.0], 0);
        assert!(matches!(starting_index(&f, 1.0), Err(NcczError::CoarsestLevelViolation { .. })));
    }

    #[test]
    fn scalar_stopping_cube() {
        // averages: level0 = 1.5/… choose λ so that only the first half stops at level 1
        let f = scalar_field(&[3.0, 1.0, 0.0, 0.0], 0);
        let fam = cuculescu(&f, 1.5).unwrap();
        assert_eq!(fam.m_lambda, 0);
        let l1 = fam.level(1);
        assert_eq!(l1.p_rank, vec![1, 0]);
        assert_eq!(fam.level(2).p_rank, vec![0, 0, 0, 0]);
        let rep = validate_family(&fam, &f).unwrap();
        assert!(crate::report::all_hold(&rep), "{rep:?}");
    }

    #[test]
    fn block_diagonal_reduces_to_scalar_runs() {
        let h1 = [3.0, 1.0, 0.2, 0.0];
        let h2 = [0.0, 0.5, 2.5, 0.5];
        let g = DyadicGrid::new(1, 0, 2).unwrap();
        let f = OperatorField::new(g, 2, (0..4).map(|c| CMatrix::from_real_diag(&[h1[c], h2[c]])).collect()).unwrap();
        let fam = cuculescu(&f, 1.2).unwrap();
        let a = cuculescu(&scalar_field(&h1, 0), 1.2).unwrap();
        let b = cuculescu(&scalar_field(&h2, 0), 1.2).unwrap();
        for k in g.levels() {
            for id in 0..g.cube_count(k) {
                let q = &fam.level(k).q[id];
                assert!((q[(0, 0)].re - a.level(k).q[id][(0, 0)].re).abs() < 1e-15);
                assert!((q[(1, 1)].re - b.level(k).q[id][(0, 0)].re).abs() < 1e-15);
                assert!(q[(0, 1)].norm() < 1e-15);
            }
        }
    }
}
