//! Projection searches certifying upper bounds for the weak maximal quasi-norm.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::{strong_max_norm, MajorantCertificate, MaxNormP, MaximalFamily};
use crate::algebra::lattice::{complement, rank, range_projector};
use crate::algebra::spectral::{self, op_norm_general, Bound, Interval};
use crate::algebra::CMatrix;
use crate::dyadic::OperatorField;
use crate::error::{invalid, Result};

const WEAK_REL_TOL: f64 = 1e-9;
const GREEDY_ROUNDS: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeakRecipe {
    /// χ_{[0,λ]}(a) for a strong majorant a.
    Spectral,
    /// Exact entrywise search for diagonal families.
    Scalar,
    /// Iterated removal of eigenspaces where some |e x_k e| exceeds λ.
    Greedy,
    /// Cellwise best of the above.
    PerCell,
}

#[derive(Clone, Debug, Serialize)]
pub struct WeakCertificate {
    pub lambda: f64,
    #[serde(skip)]
    pub e: OperatorField,
    /// φ(e^⊥).
    pub deficit: f64,
    /// max_k ‖e x_k e‖_∞, re-measured.
    pub max_compressed: f64,
    pub valid: bool,
    pub recipe: WeakRecipe,
    /// Deficit reached by each recipe on its own.
    pub candidates: BTreeMap<String, f64>,
    pub degenerate: bool,
}

fn tag(r: WeakRecipe) -> &'static str {
    match r {
        WeakRecipe::Spectral => "spectral",
        WeakRecipe::Scalar => "scalar",
        WeakRecipe::Greedy => "greedy",
        WeakRecipe::PerCell => "per-cell",
    }
}

fn cell_ok(e: &CMatrix, xs: &[&CMatrix]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for x in xs {
        worst = worst.max(spectral::op_norm(&x.compress(e))?);
    }
    Ok(worst)
}

fn spectral_cell(a: &CMatrix, lambda: f64) -> Result<CMatrix> {
    spectral::spectral_projection(a, Interval::new(Bound::Unbounded, Bound::Closed(lambda)))
}

fn is_diagonal(xs: &[&CMatrix]) -> bool {
    xs.iter().all(|x| {
        let n = x.dim();
        let s = x.max_abs();
        (0..n).all(|i| (0..n).all(|j| i == j || x[(i, j)].norm() <= 1e-14 * s))
    })
}

fn scalar_cell(xs: &[&CMatrix], lambda: f64) -> CMatrix {
    let n = xs[0].dim();
    let d: Vec<f64> =
        (0..n).map(|i| if xs.iter().all(|x| x[(i, i)].re.abs() <= lambda) { 1.0 } else { 0.0 }).collect();
    CMatrix::from_real_diag(&d)
}

fn greedy_cell(xs: &[&CMatrix], lambda: f64) -> Result<CMatrix> {
    let n = xs[0].dim();
    let mut e = CMatrix::identity(n);
    for _ in 0..GREEDY_ROUNDS {
        let mut bad = CMatrix::zeros(n);
        for x in xs {
            let c = x.compress(&e);
            let s = spectral::spectral_data(&c)?;
            bad = &bad + &s.projector(|_, v| v.abs() > lambda);
        }
        if bad.max_abs() == 0.0 {
            break;
        }
        let remove = range_projector(&bad)?;
        e = (&e - &remove).hermitian_part();
        e = range_projector(&e)?;
    }
    Ok(e)
}

/// Build e by the available recipes and keep the smallest deficit, cell by cell.
pub fn weak_max_quasinorm_upper(
    fam: &MaximalFamily,
    lambda: f64,
    majorant: Option<&MajorantCertificate>,
) -> Result<WeakCertificate> {
    if !(lambda > 0.0) {
        return invalid("lambda must be positive");
    }
    let owned;
    let maj = match majorant {
        Some(m) => m,
        None => {
            owned = strong_max_norm(fam, MaxNormP::Two)?;
            &owned
        }
    };
    let g = *fam.members[0].grid();
    let n = fam.dim();
    let vol = g.cell_volume();
    let scalar_ok = (0..fam.cells()).all(|c| is_diagonal(&fam.cell_values(c)));
    let limit = lambda * (1.0 + WEAK_REL_TOL);

    struct Cell {
        e: CMatrix,
        recipe: WeakRecipe,
        worst: f64,
        deficits: [Option<usize>; 3],
    }
    let cells: Vec<Cell> = (0..fam.cells())
        .into_par_iter()
        .map(|c| {
            let xs = fam.cell_values(c);
            let mut options: Vec<(WeakRecipe, CMatrix)> = vec![(WeakRecipe::Spectral, spectral_cell(maj.a.value(c), lambda)?)];
            if scalar_ok {
                options.push((WeakRecipe::Scalar, scalar_cell(&xs, lambda)));
            }
            options.push((WeakRecipe::Greedy, greedy_cell(&xs, lambda)?));
            let mut deficits = [None; 3];
            let mut best: Option<(usize, WeakRecipe, CMatrix, f64)> = None;
            for (r, e) in options {
                let worst = cell_ok(&e, &xs)?;
                if worst > limit {
                    continue;
                }
                let def = n - rank(&e);
                deficits[r as usize] = Some(def);
                if best.as_ref().map_or(true, |b| def < b.0) {
                    best = Some((def, r, e, worst));
                }
            }
            let (_, recipe, e, worst) = best.unwrap_or((n, WeakRecipe::Greedy, CMatrix::zeros(n), 0.0));
            Ok(Cell { e, recipe, worst, deficits })
        })
        .collect::<Result<_>>()?;

    let mut candidates = BTreeMap::new();
    for r in [WeakRecipe::Spectral, WeakRecipe::Scalar, WeakRecipe::Greedy] {
        if r == WeakRecipe::Scalar && !scalar_ok {
            continue;
        }
        // a recipe failing in some cell falls back to e = 0 there
        let total: usize = cells.iter().map(|c| c.deficits[r as usize].unwrap_or(n)).sum();
        candidates.insert(tag(r).to_string(), total as f64 * vol);
    }
    let first = cells[0].recipe;
    let recipe = if cells.iter().all(|c| c.recipe == first) { first } else { WeakRecipe::PerCell };
    let deficit_cells: usize = cells.iter().map(|c| n - rank(&c.e)).sum();
    let e = OperatorField::new(g, n, cells.iter().map(|c| c.e.clone()).collect())?;
    let max_compressed = cells.iter().map(|c| c.worst).fold(0.0, f64::max);
    // independent re-check of the claimed bound
    let recheck = recheck_bound(fam, &e)?;
    let family_zero = fam.members.iter().all(|m| m.is_zero());
    Ok(WeakCertificate {
        lambda,
        deficit: deficit_cells as f64 * vol,
        max_compressed: recheck.max(max_compressed),
        valid: recheck <= limit,
        recipe,
        candidates,
        degenerate: !family_zero && deficit_cells == n * fam.cells(),
        e,
    })
}

/// max over k and cells of ‖e x_k e‖_∞ for a general (not necessarily Hermitian) product.
pub fn recheck_bound(fam: &MaximalFamily, e: &OperatorField) -> Result<f64> {
    let per = (0..fam.cells())
        .into_par_iter()
        .map(|c| {
            let ec = e.value(c);
            let mut w: f64 = 0.0;
            for x in fam.cell_values(c) {
                w = w.max(op_norm_general(&ec.matmul(x).matmul(ec))?);
            }
            Ok(w)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(per.into_iter().fold(0.0, f64::max))
}

#[derive(Clone, Debug, Serialize)]
pub struct WeakSweepPoint {
    pub lambda: f64,
    pub deficit: f64,
    /// λ·φ(e^⊥)^{1/p}
    pub value: f64,
    pub recipe: WeakRecipe,
    pub valid: bool,
}

/// Certificates over a λ-sweep sharing one p = 2 majorant; the quasi-norm bound is the max value.
pub fn weak_sweep(fam: &MaximalFamily, lambdas: &[f64], p: f64) -> Result<(Vec<WeakSweepPoint>, f64)> {
    let maj = strong_max_norm(fam, MaxNormP::Two)?;
    let mut out = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        let c = weak_max_quasinorm_upper(fam, l, Some(&maj))?;
        out.push(WeakSweepPoint {
            lambda: l,
            deficit: c.deficit,
            value: l * c.deficit.powf(1.0 / p),
            recipe: c.recipe,
            valid: c.valid,
        });
    }
    let best = out.iter().map(|w| w.value).fold(0.0, f64::max);
    Ok((out, best))
}

/// Complement field 1 − e.
pub fn complement_field(e: &OperatorField) -> OperatorField {
    e.map(|_, m| complement(m))
}
