//! The Cotlar-type norm inequality for maximal truncations and the pointwise domination of the
//! truncation-minus-mollification kernel.

use std::f64::consts::PI;

use serde::Serialize;

use crate::algebra::C64;
use crate::dyadic::{hl_average, OperatorField};
use crate::error::{invalid, Result};
use crate::kernels::partition::mollifier;
use crate::kernels::Kernel;
use crate::maxnorm::{strong_max_norm, MaxNormP, MaximalFamily};
use crate::operators::{build_operators, Radial, TruncationLadder};
use crate::quadrature::integrate_adaptive;
use crate::report::{Check, ValidationReport};

pub const COTLAR_SCHEMA: u32 = 1;

/// |x|/ε at which the envelope is sampled.
const ENVELOPE_RADII: [f64; 12] = [0.05, 0.2, 0.45, 0.55, 0.8, 1.1, 1.6, 2.5, 4.0, 8.0, 16.0, 32.0];
/// Far field: samples with |x| ≥ FAR·ε.
const FAR: f64 = 8.0;
const ENVELOPE_REL_TOL: f64 = 1e-4;

#[derive(Clone, Debug, Serialize)]
pub struct EnvelopeSample {
    pub eps: f64,
    pub x: [f64; 2],
    /// |kχ_{|·|>ε} − ϕ_ε∗k|(x)
    pub difference: f64,
    /// difference·(1 + |x|/ε)^{d+γ}·ε^d
    pub normalized: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EnvelopeReport {
    pub gamma: f64,
    /// C calibrated on the largest ε.
    pub constant: f64,
    /// max normalized value per ε
    pub per_eps: Vec<(f64, f64)>,
    pub far_max: f64,
    pub samples: Vec<EnvelopeSample>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CotlarReport {
    pub schema: u32,
    pub kernel: String,
    pub p: MaxNormP,
    pub ladder: Vec<f64>,
    pub lhs: f64,
    pub rhs_maximal_tf: f64,
    pub rhs_maximal_f: f64,
    pub rhs: f64,
    pub ratio: f64,
    /// ‖T_{ε_J}f − T_{ε_{J−1}}f‖₂/‖T_{ε_J}f‖₂: how far the finest truncation is from settled.
    pub substitution_error: f64,
    pub envelope: EnvelopeReport,
    pub checks: ValidationReport,
}

/// PV (ϕ_ε∗k)(x) = ∫_0^∞ r^{−1}∫ Ω(θ)ϕ_ε(x − rθ)dθ dr, integrating only where ϕ_ε(x − rθ) ≠ 0.
pub fn mollified_kernel(kernel: &Kernel, eps: f64, x: [f64; 2]) -> Result<C64> {
    let d = kernel.d;
    let bump = |z: f64| mollifier(d, z / eps) / eps.powi(d as i32);
    let omega = |dir: [f64; 2]| kernel.omega(dir).unwrap_or_default();
    let rx = if d == 1 { x[0].abs() } else { x[0].hypot(x[1]) };
    let half = 0.5 * eps;
    let tol = 1e-13 / eps.powi(d as i32);
    let part = |re: bool| -> f64 {
        let pick = |z: C64| if re { z.re } else { z.im };
        let radial = |r: f64| -> f64 {
            if r <= 0.0 {
                return 0.0;
            }
            let a = if d == 1 {
                pick(omega([1.0, 0.0])) * bump((x[0] - r).abs()) + pick(omega([-1.0, 0.0])) * bump((x[0] + r).abs())
            } else {
                // arc of directions θ with |x − rθ| < ε/2
                let c = if rx > 0.0 { (r * r + rx * rx - half * half) / (2.0 * r * rx) } else { -2.0 };
                let (t0, t1) = if c <= -1.0 {
                    (0.0, 2.0 * PI)
                } else if c >= 1.0 {
                    return 0.0;
                } else {
                    let tx = x[1].atan2(x[0]);
                    let w = c.acos();
                    (tx - w, tx + w)
                };
                let g = |t: f64| {
                    let th = [t.cos(), t.sin()];
                    pick(omega(th)) * bump((x[0] - r * th[0]).hypot(x[1] - r * th[1]))
                };
                integrate_adaptive(g, t0, t1, tol * r, 400).0
            };
            a / r
        };
        let lo = (rx - half).max(0.0);
        let hi = rx + half;
        let mut v = integrate_adaptive(radial, lo, hi, tol, 2000).0;
        if d == 1 && rx < half {
            // the reflected bump ϕ_ε(x + r) reaches r ∈ (0, half − |x|) as well
            v += if lo > 0.0 { integrate_adaptive(radial, 0.0, lo, tol, 2000).0 } else { 0.0 };
        }
        v
    };
    let re = part(true);
    let im = if kernel.is_real() { 0.0 } else { part(false) };
    Ok(C64::new(re, im))
}

/// Samples of |kχ_{|·|>ε} − ϕ_ε∗k| against ψ_ε(x) = ε^{−d}(1 + |x|/ε)^{−d−γ}.
pub fn kernel_difference_envelope(kernel: &Kernel, epsilons: &[f64]) -> Result<EnvelopeReport> {
    if !kernel.is_convolution() {
        return invalid("the envelope check needs a convolution kernel");
    }
    let Some(gamma) = kernel.gamma() else {
        return invalid("the envelope check needs a γ-Lipschitz kernel");
    };
    let d = kernel.d;
    let dirs: Vec<[f64; 2]> = if d == 1 {
        vec![[1.0, 0.0], [-1.0, 0.0]]
    } else {
        [0.3f64, 1.9, 4.0].iter().map(|t| [t.cos(), t.sin()]).collect()
    };
    let mut samples = Vec::new();
    for &eps in epsilons {
        for &rho in &ENVELOPE_RADII {
            for dir in &dirs {
                let x = [rho * eps * dir[0], rho * eps * dir[1]];
                let k = if rho > 1.0 { kernel.eval(x, [0.0, 0.0]).unwrap_or_default() } else { C64::default() };
                let diff = (k - mollified_kernel(kernel, eps, x)?).norm();
                let normalized = diff * (1.0 + rho).powf(d as f64 + gamma) * eps.powi(d as i32);
                samples.push(EnvelopeSample { eps, x, difference: diff, normalized });
            }
        }
    }
    let top = epsilons.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let constant = samples.iter().filter(|s| s.eps == top).map(|s| s.normalized).fold(0.0, f64::max);
    let per_eps = epsilons
        .iter()
        .map(|&e| (e, samples.iter().filter(|s| s.eps == e).map(|s| s.normalized).fold(0.0, f64::max)))
        .collect();
    let far_max = samples
        .iter()
        .filter(|s| s.x[0].hypot(s.x[1]) >= FAR * s.eps * (1.0 - 1e-12))
        .map(|s| s.normalized)
        .fold(0.0, f64::max);
    Ok(EnvelopeReport { gamma, constant, per_eps, far_max, samples })
}

/// LHS = ‖sup⁺_ε T_ε f‖_p against ‖sup⁺_ε M_ε(Tf)‖_p + ‖sup⁺_ε M_ε f‖_p, with Tf = T_{ε_min} f.
pub fn cotlar_norm_check(kernel: &Kernel, f: &OperatorField, p: MaxNormP, ladder: &TruncationLadder) -> Result<CotlarReport> {
    if p != MaxNormP::Two {
        return invalid("the Cotlar check runs at p = 2");
    }
    if !kernel.is_convolution() || kernel.gamma().is_none() {
        return invalid("the Cotlar check needs a γ-Lipschitz convolution kernel");
    }
    if !f.is_psd()? {
        return invalid("input field must be PSD");
    }
    let g = *f.grid();
    ladder.validate(&g)?;
    let radials: Vec<Radial> = ladder.epsilons.iter().map(|&e| Radial::Trunc(e)).collect();
    let ops = build_operators(kernel, &g, &radials)?;
    let support = f.support();
    let truncs: Vec<OperatorField> = ops.iter().map(|o| o.apply_sparse(f, &support).map(|_, m| m.hermitian_part())).collect();
    let tf = truncs.last().expect("nonempty ladder").clone();
    let m_tf: Vec<OperatorField> =
        ladder.epsilons.iter().map(|&e| hl_average(&tf, e).map(|x| x.map(|_, m| m.hermitian_part()))).collect::<Result<_>>()?;
    let m_f: Vec<OperatorField> = ladder.epsilons.iter().map(|&e| hl_average(f, e)).collect::<Result<_>>()?;
    let lhs_cert = strong_max_norm(&MaximalFamily::new(truncs.clone(), ladder.epsilons.clone())?, p)?;
    let tf_cert = strong_max_norm(&MaximalFamily::new(m_tf, ladder.epsilons.clone())?, p)?;
    let f_cert = strong_max_norm(&MaximalFamily::new(m_f, ladder.epsilons.clone())?, p)?;
    let rhs = tf_cert.objective + f_cert.objective;
    let ratio = if rhs > 0.0 { lhs_cert.objective / rhs } else { 0.0 };
    let substitution_error = if truncs.len() >= 2 {
        let last = &truncs[truncs.len() - 1];
        let prev = &truncs[truncs.len() - 2];
        let top = last.norm(2.0)?;
        if top > 0.0 {
            last.sub(prev).norm(2.0)? / top
        } else {
            0.0
        }
    } else {
        0.0
    };

    let envelope = kernel_difference_envelope(kernel, &ladder.epsilons)?;
    let mut checks = ValidationReport::new();
    for (name, c) in [("lhs", &lhs_cert), ("rhs_maximal_tf", &tf_cert), ("rhs_maximal_f", &f_cert)] {
        checks.insert(format!("{name}_feasible"), Check::flag(c.feasible, -c.feasibility_slack, 0.0));
        checks.insert(format!("{name}_gap"), Check::le(c.relative_gap(), 1e-6));
    }
    let worst = envelope.per_eps.iter().map(|p| p.1).fold(0.0, f64::max);
    checks.insert("envelope_all_eps".into(), Check::le(worst, envelope.constant * (1.0 + ENVELOPE_REL_TOL)));
    checks.insert("envelope_far_field".into(), Check::le(envelope.far_max, envelope.constant));
    Ok(CotlarReport {
        schema: COTLAR_SCHEMA,
        kernel: kernel.name(),
        p,
        ladder: ladder.epsilons.clone(),
        lhs: lhs_cert.objective,
        rhs_maximal_tf: tf_cert.objective,
        rhs_maximal_f: f_cert.objective,
        rhs,
        ratio,
        substitution_error,
        envelope,
        checks,
    })
}
