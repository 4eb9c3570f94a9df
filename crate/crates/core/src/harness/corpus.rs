//! Deterministic PSD input fields. Member i draws from ChaCha8 stream i of the configured seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::{CMatrix, C64};
use crate::certificates::mollifier_table;
use crate::dyadic::{DyadicGrid, OperatorField};
use crate::error::{invalid, Result};

use super::config::{ExperimentConfig, Weak11Config};

#[derive(Clone, Debug, Serialize)]
pub struct CorpusMember {
    pub label: String,
    #[serde(skip)]
    pub field: OperatorField,
    pub l1: f64,
}

pub fn member_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn gram(rng: &mut ChaCha8Rng, n: usize, rank: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n);
    for _ in 0..rank {
        let v: Vec<C64> = (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        m.axpy(1.0, &CMatrix::outer(&v));
    }
    m
}

fn normalize(f: OperatorField, target: f64) -> Result<(OperatorField, f64)> {
    let l1 = f.norm(1.0)?;
    if !(l1 > 0.0) {
        return invalid("corpus member has zero mass");
    }
    let g = f.scale(target / l1);
    let l1 = g.norm(1.0)?;
    Ok((g, l1))
}

/// Random rank-r Gram values on a random sub-box, smoothed and scaled to ‖f‖₁ ~ U(band).
pub fn gram_member(grid: DyadicGrid, n: usize, rank: usize, band: (f64, f64), rng: &mut ChaCha8Rng) -> Result<OperatorField> {
    let side = grid.box_side();
    let mut lo = [0.0; 2];
    let mut hi = [side; 2];
    for a in 0..grid.d {
        let len = side * rng.gen_range(0.125..0.5);
        lo[a] = rng.gen_range(0.0..side - len);
        hi[a] = lo[a] + len;
    }
    let raw: Vec<CMatrix> = (0..grid.cell_count())
        .map(|c| {
            let x = grid.cell_center(c);
            let inside = (0..grid.d).all(|a| x[a] >= lo[a] && x[a] < hi[a]);
            let m = gram(rng, n, rank);
            if inside {
                m
            } else {
                CMatrix::zeros(n)
            }
        })
        .collect();
    let f = OperatorField::new(grid, n, raw)?;
    let smooth = mollifier_table(&grid, 4.0 * grid.cell_side())?.apply(&f).map(|_, m| m.hermitian_part());
    let target = rng.gen_range(band.0..=band.1);
    Ok(normalize(smooth, target)?.0)
}

fn on_box(grid: DyadicGrid, lo: f64, hi: f64, value: &CMatrix) -> OperatorField {
    let (a, b) = (lo * grid.box_side(), hi * grid.box_side());
    OperatorField::from_fn(grid, value.dim(), |x| {
        if (0..grid.d).all(|k| x[k] >= a && x[k] < b) {
            value.clone()
        } else {
            CMatrix::zeros(value.dim())
        }
    })
}

/// Embed an m×m block in the top-left corner of an n×n zero matrix (m ≤ n).
pub fn embed_block(block: &CMatrix, n: usize) -> CMatrix {
    let m = block.dim();
    CMatrix::from_fn(n, |i, j| if i < m && j < m { block[(i, j)] } else { C64::default() })
}

/// Fixed inputs: an indicator, a scalar embedding, a block-diagonal pair and the 2×2 pair
/// g = [[10,6],[6,10]], |f| = diag(8,8) (for n = 1 only the scalar entries survive).
pub fn regression_inputs(grid: DyadicGrid, n: usize) -> Result<Vec<CorpusMember>> {
    let mut out = Vec::new();
    let mut push = |label: &str, f: OperatorField| -> Result<()> {
        let (field, l1) = normalize(f, 1.0)?;
        out.push(CorpusMember { label: label.into(), field, l1 });
        Ok(())
    };
    let proj = if n == 1 {
        CMatrix::identity(1)
    } else {
        let v: Vec<C64> = (0..n).map(|i| C64::new(1.0, 0.5 * i as f64)).collect();
        let mut p = CMatrix::outer(&v);
        let t = p.trace().re;
        p = p.scale(1.0 / t);
        p
    };
    push("indicator", on_box(grid, 0.25, 0.5, &proj))?;
    let side = grid.box_side();
    let scalar = OperatorField::from_fn(grid, n, |x| {
        let r = ((0..grid.d).map(|k| (x[k] / side - 0.4).powi(2)).sum::<f64>()).sqrt();
        CMatrix::identity(n).scale((1.0 - 4.0 * r).max(0.0))
    });
    push("scalar-embedding", scalar)?;
    let block = OperatorField::from_fn(grid, n, |x| {
        let t = x[0] / side;
        let a = if (0.2..0.45).contains(&t) { 2.0 } else { 0.0 };
        let b = if (0.35..0.6).contains(&t) { 1.0 } else { 0.0 };
        CMatrix::from_fn(n, |i, j| if i == j { C64::new(if i % 2 == 0 { a } else { b }, 0.0) } else { C64::default() })
    });
    push("block-diagonal", block)?;
    let (g2, f2) = if n == 1 {
        (CMatrix::from_real_diag(&[10.0]), CMatrix::from_real_diag(&[8.0]))
    } else {
        (embed_block(&CMatrix::from_real_rows(&[&[10.0, 6.0], &[6.0, 10.0]]), n), embed_block(&CMatrix::from_real_diag(&[8.0, 8.0]), n))
    };
    push("pair-g", on_box(grid, 0.5, 0.625, &g2))?;
    push("pair-abs-f", on_box(grid, 0.5, 0.625, &f2))?;
    Ok(out)
}

/// Regression inputs followed by random Gram members up to `corpus_size`.
pub fn generate_corpus(cfg: &ExperimentConfig) -> Result<Vec<CorpusMember>> {
    cfg.validate()?;
    if cfg.corpus_size == 0 {
        return Ok(Vec::new());
    }
    let grid = cfg.grid()?;
    let mut out = regression_inputs(grid, cfg.n)?;
    out.truncate(cfg.corpus_size);
    let mut i = 0u64;
    while out.len() < cfg.corpus_size {
        let mut rng = member_rng(cfg.seed, i);
        let field = gram_member(grid, cfg.n, cfg.rank, cfg.l1_band, &mut rng)?;
        let l1 = field.norm(1.0)?;
        out.push(CorpusMember { label: format!("gram-{i}"), field, l1 });
        i += 1;
    }
    Ok(out)
}

/// Step field on `fine` copying each value of `f` to its descendants.
pub fn prolong(f: &OperatorField, fine: DyadicGrid) -> Result<OperatorField> {
    let g = f.grid();
    if fine.d != g.d || fine.k_min != g.k_min || fine.k_max < g.k_max {
        return invalid("prolongation needs the same box and a finer grid");
    }
    let shift = fine.k_max - g.k_max;
    let vals = (0..fine.cell_count())
        .map(|c| {
            let [ix, iy] = fine.cell_index(c);
            f.value(g.cell_id([ix >> shift, iy >> shift])).clone()
        })
        .collect();
    OperatorField::new(fine, f.dim(), vals)
}

/// Clusters of two or three adjacent cells carrying non-commuting full-rank PSD values, every
/// cell height above the top of the λ sweep. Returns the base field and its smallest cell eigenvalue.
pub fn spike_member(cfg: &Weak11Config, seed: u64, stream: u64) -> Result<(OperatorField, f64)> {
    let grid = DyadicGrid::new(1, cfg.k_min, cfg.k_max)?;
    let mut rng = member_rng(seed, stream);
    let side = grid.box_side();
    let h = grid.cell_side();
    let n = cfg.n;
    let mut vals = vec![CMatrix::zeros(n); grid.cell_count()];
    let clusters = rng.gen_range(1..=3);
    let mut starts: Vec<f64> = Vec::new();
    for _ in 0..clusters {
        let width = rng.gen_range(2..=3usize);
        let start = loop {
            let x = rng.gen_range(0.15 * side..0.85 * side);
            if starts.iter().all(|&a| (x - a).abs() > 1.0) {
                break x;
            }
        };
        starts.push(start);
        let first = (start / h) as usize;
        let mass = rng.gen_range(0.2..0.6);
        for v in &mut vals[first..first + width] {
            let mut m = gram(&mut rng, n, n);
            m.axpy(0.3, &CMatrix::identity(n));
            let t = m.trace().re;
            *v = m.scale(mass / (width as f64 * t * h));
        }
    }
    let target = rng.gen_range(0.5..=2.0);
    let (f, _) = normalize(OperatorField::new(grid, n, vals)?, target)?;
    let hmin = f
        .values()
        .iter()
        .filter(|m| !m.is_zero())
        .map(crate::algebra::spectral::min_eig)
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    Ok((f, hmin))
}

/// Cell averages of `f` on the coarser grid `coarse` (same box).
pub fn restrict(f: &OperatorField, coarse: DyadicGrid) -> Result<OperatorField> {
    let g = f.grid();
    if coarse.d != g.d || coarse.k_min != g.k_min || coarse.k_max > g.k_max {
        return invalid("restriction needs the same box and a coarser grid");
    }
    let shift = (g.k_max - coarse.k_max) as usize;
    let per = 1usize << shift;
    let count = if g.d == 1 { per } else { per * per };
    let vals = (0..coarse.cell_count())
        .map(|c| {
            let [ix, iy] = coarse.cell_index(c);
            let mut acc = CMatrix::zeros(f.dim());
            for k in 0..count {
                let (a, b) = (k % per, k / per);
                let id = if g.d == 1 { g.cell_id([(ix << shift) + a, 0]) } else { g.cell_id([(ix << shift) + a, (iy << shift) + b]) };
                acc.axpy(1.0, f.value(id));
            }
            acc.scale(1.0 / count as f64)
        })
        .collect();
    OperatorField::new(coarse, f.dim(), vals)
}
