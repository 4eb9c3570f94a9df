//! Bilateral almost uniform convergence of the truncation ladder: one projection e with small
//! deficit on which the truncations form a uniform Cauchy sequence.

use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::spectral::{apply_fn, op_norm_general};
use crate::algebra::{CMatrix, C64};
use crate::dyadic::{DyadicGrid, OperatorField};
use crate::error::{invalid, Result};
use crate::kernels::partition::mollifier;
use crate::kernels::Kernel;
use crate::maxnorm::{capped_majorant, weak_max_quasinorm_upper, MaxNormP, MaximalFamily};
use crate::operators::{build_operators, Radial, RadialOperator, TruncationLadder, WeightTable};
use crate::quadrature::gauss_legendre;
use crate::report::{Check, ValidationReport};

use super::projections::{deficit, meet_fields, projection_defect};

pub const BAU_SCHEMA: u32 = 1;
/// Final envelope entry relative to the first.
pub const BAU_FINAL_FRACTION: f64 = 0.1;
const MONOTONE_SLACK: f64 = 1e-9;

/// ϕ_s∗f with ϕ_s(x) = s^{−d}ϕ(|x|/s), integrated exactly enough over each source cell.
pub fn mollifier_table(grid: &DyadicGrid, scale: f64) -> Result<WeightTable> {
    if !(scale > 0.0) {
        return invalid("mollification scale must be positive");
    }
    let d = grid.d;
    let h = grid.cell_side();
    let reach = (0.5 * scale / h).ceil() as i32 + 1;
    let rule = gauss_legendre(12);
    let bump = |x: f64, y: f64| mollifier(d, x.hypot(y) / scale);
    let offsets: Vec<[i32; 2]> = if d == 1 {
        (-reach..=reach).map(|x| [x, 0]).collect()
    } else {
        (-reach..=reach).flat_map(|y| (-reach..=reach).map(move |x| [x, y])).collect()
    };
    let raw: Vec<f64> = offsets
        .par_iter()
        .map(|o| {
            let (x0, x1) = ((o[0] as f64 - 0.5) * h, (o[0] as f64 + 0.5) * h);
            if d == 1 {
                rule.integrate(x0, x1, |x| bump(x, 0.0))
            } else {
                let (y0, y1) = ((o[1] as f64 - 0.5) * h, (o[1] as f64 + 0.5) * h);
                rule.integrate(y0, y1, |y| rule.integrate(x0, x1, |x| bump(x, y)))
            }
        })
        .collect();
    let mass: f64 = raw.iter().sum();
    if !(mass > 0.0) {
        return invalid("mollifier has no mass on the grid");
    }
    let mut t = WeightTable::empty(d);
    for (o, w) in offsets.into_iter().zip(raw) {
        if w > 0.0 {
            t.offsets.push(o);
            t.weights.push(C64::new(w / mass, 0.0));
        }
    }
    Ok(t)
}

/// g = ϕ_s ∗ (f·χ_{[0,cap]}(f)).
pub fn smooth_approximant(f: &OperatorField, scale: f64, cap: f64) -> Result<OperatorField> {
    let compressed = f.try_map(|_, m| apply_fn(&m.hermitian_part(), |v| if v <= cap { v } else { 0.0 }))?;
    Ok(mollifier_table(f.grid(), scale)?.apply_auto(&compressed, None))
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainStep {
    pub n: u32,
    pub scale: f64,
    pub lambda: f64,
    /// ‖f − g_n‖₁
    pub residual_l1: f64,
    pub deficit: f64,
    /// max_j ‖e_n T_j(f − g_n) e_n‖_∞
    pub max_compressed: f64,
    pub valid: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BauReport {
    pub schema: u32,
    pub kernel: String,
    pub delta: f64,
    pub ladder: Vec<f64>,
    pub chain: Vec<ChainStep>,
    /// Largest n whose scale 2^{−n} stays above the grid floor.
    pub reached_n: u32,
    /// e = ∧_{n ≥ n0} e_n
    pub n0: u32,
    pub deficit: f64,
    /// d[k][ℓ] = ‖e(T_{ε_k}f − T_{ε_ℓ}f)e‖_∞
    pub cauchy: Vec<Vec<f64>>,
    /// env[m] = max_{ℓ>m} d[m][ℓ]
    pub envelope: Vec<f64>,
    /// Least-squares slope of log env against log ε.
    pub decay_slope: Option<f64>,
    pub checks: ValidationReport,
    #[serde(skip)]
    pub e: Option<OperatorField>,
}

fn truncations(ops: &[RadialOperator], f: &OperatorField) -> Vec<OperatorField> {
    let support = f.support();
    ops.iter().map(|o| o.apply_sparse(f, &support).map(|_, m| m.hermitian_part())).collect()
}

/// d[k][ℓ] = ‖e(x_k − x_ℓ)e‖_∞ (e = None: no compression), symmetric with zero diagonal.
fn cauchy_matrix(xs: &[OperatorField], e: Option<&OperatorField>) -> Result<Vec<Vec<f64>>> {
    let m = xs.len();
    let mut out = vec![vec![0.0; m]; m];
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|k| (k + 1..m).map(move |l| (k, l))).collect();
    let vals: Vec<f64> = pairs
        .par_iter()
        .map(|&(k, l)| {
            let mut w: f64 = 0.0;
            for c in 0..xs[k].len() {
                let diff = xs[k].value(c) - xs[l].value(c);
                let v = match e {
                    Some(e) if e.value(c).is_zero() => continue,
                    Some(e) => diff.compress(e.value(c)),
                    None => diff,
                };
                if !v.is_zero() {
                    w = w.max(op_norm_general(&v)?);
                }
            }
            Ok(w)
        })
        .collect::<Result<_>>()?;
    for ((k, l), v) in pairs.into_iter().zip(vals) {
        out[k][l] = v;
        out[l][k] = v;
    }
    Ok(out)
}

fn envelope_of(d: &[Vec<f64>]) -> Vec<f64> {
    (0..d.len().saturating_sub(1)).map(|m| d[m][m + 1..].iter().copied().fold(0.0, f64::max)).collect()
}

fn decay_slope(eps: &[f64], env: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = eps.iter().zip(env).filter(|(_, &v)| v > 0.0).map(|(&e, &v)| (e.ln(), v.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / k, pts.iter().map(|p| p.1).sum::<f64>() / k);
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn envelope_checks(checks: &mut ValidationReport, prefix: &str, env: &[f64]) {
    let scale = env.first().copied().unwrap_or(0.0);
    let worst_rise = env.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max).max(0.0);
    checks.insert(format!("{prefix}envelope_monotone"), Check::le(worst_rise, MONOTONE_SLACK * (1.0 + scale)));
    let last = env.last().copied().unwrap_or(0.0);
    checks.insert(format!("{prefix}envelope_final"), Check::le(last, BAU_FINAL_FRACTION * scale + MONOTONE_SLACK));
}

/// Builds e from weak certificates of (T_{ε_j}(f − g_n))_j at λ_n = 1/n, g_n the mollified
/// range-compressed f at scale 2^{−n}, then measures the Cauchy matrix of (T_{ε_j} f) under e.
pub fn bau_cauchy_test(f: &OperatorField, kernel: &Kernel, ladder: &TruncationLadder, delta: f64) -> Result<BauReport> {
    if !kernel.is_convolution() {
        return invalid("the b.a.u. test needs a convolution kernel with cancellation");
    }
    if !(delta > 0.0) {
        return invalid("delta must be positive");
    }
    if f.hermitian_defect() > 1e-12 * (1.0 + f.norm(f64::INFINITY)?) {
        return invalid("input field must be Hermitian");
    }
    let g = *f.grid();
    ladder.validate(&g)?;
    let radials: Vec<Radial> = ladder.epsilons.iter().map(|&e| Radial::Trunc(e)).collect();
    let ops = build_operators(kernel, &g, &radials)?;
    let h = g.cell_side();

    let mut chain = Vec::new();
    let mut projections = Vec::new();
    let mut n: u32 = 1;
    while 0.5f64.powi(n as i32) >= h {
        let scale = 0.5f64.powi(n as i32);
        let lambda = 1.0 / n as f64;
        let resid = f.sub(&smooth_approximant(f, scale, 2f64.powi(n as i32))?);
        let fam = MaximalFamily::new(truncations(&ops, &resid), ladder.epsilons.clone())?;
        let (maj, _) = capped_majorant(&fam, MaxNormP::Two, lambda)?;
        let cert = weak_max_quasinorm_upper(&fam, lambda, Some(&maj))?;
        chain.push(ChainStep {
            n,
            scale,
            lambda,
            residual_l1: resid.norm(1.0)?,
            deficit: cert.deficit,
            max_compressed: cert.max_compressed,
            valid: cert.valid,
        });
        projections.push(cert.e);
        n += 1;
    }
    if chain.is_empty() {
        return invalid("grid too coarse for the approximation chain");
    }
    let reached_n = chain.last().unwrap().n;
    // smallest n0 whose tail of deficits stays below δ; the last step alone is the fallback
    let tails: Vec<f64> = (0..chain.len()).map(|i| chain[i..].iter().map(|s| s.deficit).sum()).collect();
    let i0 = tails.iter().position(|&t| t < delta).unwrap_or(chain.len() - 1);
    let n0 = chain[i0].n;
    let parts: Vec<&OperatorField> = projections[i0..].iter().collect();
    let e = meet_fields(&parts)?;
    let e_def = deficit(&e);

    let tf = truncations(&ops, f);
    let cauchy = cauchy_matrix(&tf, Some(&e))?;
    let envelope = envelope_of(&cauchy);
    let slope = decay_slope(&ladder.epsilons[..envelope.len()], &envelope);

    let mut checks = ValidationReport::new();
    for s in &chain[i0..] {
        checks.insert(format!("chain_{}_valid", s.n), Check::flag(s.valid, s.max_compressed, s.lambda));
    }
    checks.insert("projection".into(), Check::le(projection_defect(&e), 1e-9));
    checks.insert("deficit_below_delta".into(), Check::lt(e_def, delta));
    checks.insert("deficit_subadditive".into(), Check::le(e_def, tails[i0] * (1.0 + 1e-12) + 1e-15));
    envelope_checks(&mut checks, "", &envelope);
    Ok(BauReport {
        schema: BAU_SCHEMA,
        kernel: kernel.name(),
        delta,
        ladder: ladder.epsilons.clone(),
        chain,
        reached_n,
        n0,
        deficit: e_def,
        cauchy,
        envelope,
        decay_slope: slope,
        checks,
        e: Some(e),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct TensorCheck {
    pub ladder: Vec<f64>,
    pub cauchy: Vec<Vec<f64>>,
    pub envelope: Vec<f64>,
    pub decay_slope: Option<f64>,
    pub checks: ValidationReport,
}

/// ‖T_{ε_k}g − T_{ε_ℓ}g‖_∞ for g = ϕ(|x − c|/r)⊗m: uniform Cauchy without any projection.
pub fn elementary_tensor_check(kernel: &Kernel, grid: &DyadicGrid, ladder: &TruncationLadder, center: [f64; 2], radius: f64, m: &CMatrix) -> Result<TensorCheck> {
    if !kernel.is_convolution() {
        return invalid("the tensor check needs a convolution kernel");
    }
    if !(radius > 0.0) {
        return invalid("bump radius must be positive");
    }
    ladder.validate(grid)?;
    let d = grid.d;
    let gfield = OperatorField::from_fn(*grid, m.dim(), |x| {
        let r = if d == 1 { (x[0] - center[0]).abs() } else { (x[0] - center[0]).hypot(x[1] - center[1]) };
        m.scale(mollifier(d, r / radius))
    });
    let radials: Vec<Radial> = ladder.epsilons.iter().map(|&e| Radial::Trunc(e)).collect();
    let ops = build_operators(kernel, grid, &radials)?;
    let tg: Vec<OperatorField> = ops.iter().map(|o| o.apply(&gfield)).collect();
    let cauchy = cauchy_matrix(&tg, None)?;
    let envelope = envelope_of(&cauchy);
    let decay = decay_slope(&ladder.epsilons[..envelope.len()], &envelope);
    let mut checks = ValidationReport::new();
    envelope_checks(&mut checks, "tensor_", &envelope);
    Ok(TensorCheck { ladder: ladder.epsilons.clone(), cauchy, envelope, decay_slope: decay, checks })
}
