//! Line integrals along a direction: H_{θ,ε}, directional averages, the method of rotations,
//! and the smoothly truncated operator with its directional sandwich.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::rules::Radial;
use super::truncated::{build_operators, sandwich_constant};
use crate::algebra::CMatrix;
use crate::dyadic::{DyadicGrid, OperatorField};
use crate::error::{invalid, NcczError, Result};
use crate::kernels::{Kernel, RoughSymbol};

/// Cells met by the ray start + t·dir, t ≥ 0, with their parameter intervals, until the box is left.
pub fn ray_cells(grid: &DyadicGrid, start: [f64; 2], dir: [f64; 2]) -> Vec<(usize, f64, f64)> {
    let h = grid.cell_side();
    let np = grid.per_axis() as i64;
    let d = grid.d;
    let mut idx = [0i64; 2];
    let mut step = [0i64; 2];
    let mut t_max = [f64::INFINITY; 2];
    let mut t_delta = [f64::INFINITY; 2];
    for a in 0..d {
        idx[a] = ((start[a] / h).floor() as i64).clamp(0, np - 1);
        if dir[a] > 1e-15 {
            step[a] = 1;
            t_max[a] = ((idx[a] + 1) as f64 * h - start[a]) / dir[a];
            t_delta[a] = h / dir[a];
        } else if dir[a] < -1e-15 {
            step[a] = -1;
            t_max[a] = (idx[a] as f64 * h - start[a]) / dir[a];
            t_delta[a] = -h / dir[a];
        }
    }
    let mut out = Vec::new();
    let mut t = 0.0;
    loop {
        let a = if d == 1 || t_max[0] <= t_max[1] { 0 } else { 1 };
        let t_next = t_max[a];
        if !t_next.is_finite() {
            break;
        }
        let cell = grid.cell_id([idx[0] as usize, idx[1] as usize]);
        if t_next > t {
            out.push((cell, t, t_next));
        }
        t = t_next;
        idx[a] += step[a];
        t_max[a] += t_delta[a];
        if idx[a] < 0 || idx[a] >= np {
            break;
        }
    }
    out
}

fn unit(grid: &DyadicGrid, theta: [f64; 2]) -> Result<[f64; 2]> {
    let norm = if grid.d == 1 { theta[0].abs() } else { theta[0].hypot(theta[1]) };
    if (norm - 1.0).abs() > 1e-9 {
        return invalid(format!("direction must be a unit vector, |θ| = {norm}"));
    }
    Ok(if grid.d == 1 { [theta[0].signum(), 0.0] } else { theta })
}

/// Σ over cells on the ray x + s·dir of f(cell)·∫ w(s) ds with the given antiderivative.
fn line_sum(f: &OperatorField, x: [f64; 2], dir: [f64; 2], prim: &impl Fn(f64) -> f64, acc: &mut CMatrix, sign: f64) {
    for (cell, a, b) in ray_cells(f.grid(), x, dir) {
        let w = prim(b) - prim(a);
        if w != 0.0 {
            acc.axpy(sign * w, f.value(cell));
        }
    }
}

/// H_{θ,ε} f(x) = (1/π)∫_{|t|>ε} f(x − tθ) dt/t, exact for step functions.
pub fn directional_hilbert(f: &OperatorField, theta: [f64; 2], eps: f64) -> Result<OperatorField> {
    let g = *f.grid();
    let u = unit(&g, theta)?;
    if !(eps > 0.0) {
        return invalid("eps must be positive");
    }
    let prim = move |s: f64| if s <= eps { 0.0 } else { (s / eps).ln() };
    let back = [-u[0], -u[1]];
    let n = f.dim();
    let values = (0..g.cell_count())
        .into_par_iter()
        .map(|c| {
            let x = g.cell_center(c);
            let mut acc = CMatrix::zeros(n);
            line_sum(f, x, back, &prim, &mut acc, 1.0 / PI);
            line_sum(f, x, u, &prim, &mut acc, -1.0 / PI);
            acc
        })
        .collect();
    OperatorField::new(g, n, values)
}

/// f_{θ,ε}(x) = (2ε)^{−1}∫_{|r|≤ε} f(x − rθ) dr.
pub fn directional_average(f: &OperatorField, theta: [f64; 2], eps: f64) -> Result<OperatorField> {
    let g = *f.grid();
    let u = unit(&g, theta)?;
    if !(eps > 0.0) {
        return invalid("eps must be positive");
    }
    let prim = move |s: f64| s.min(eps);
    let back = [-u[0], -u[1]];
    let n = f.dim();
    let values = (0..g.cell_count())
        .into_par_iter()
        .map(|c| {
            let x = g.cell_center(c);
            let mut acc = CMatrix::zeros(n);
            line_sum(f, x, back, &prim, &mut acc, 0.5 / eps);
            line_sum(f, x, u, &prim, &mut acc, 0.5 / eps);
            acc
        })
        .collect();
    OperatorField::new(g, n, values)
}

/// Default number of directions over a half circle.
pub const ROTATION_DIRECTIONS: usize = 256;

/// (π/2)∫_{S^{d−1}} Ω(θ) H_{θ,ε} f dθ for odd Ω.
pub fn rotation_method(omega: &RoughSymbol, f: &OperatorField, eps: f64, directions: usize) -> Result<OperatorField> {
    let g = *f.grid();
    if omega.d != g.d {
        return invalid("symbol and grid dimensions differ");
    }
    let (even, _) = omega.even_odd()?;
    let defect = even.l1_norm();
    if defect > 1e-10 {
        return Err(NcczError::NotOdd(defect));
    }
    if g.d == 1 {
        return Ok(directional_hilbert(f, [1.0, 0.0], eps)?.scale(PI * omega.values[0]));
    }
    // Ω(θ+π)H_{θ+π} = Ω(θ)H_θ, so the circle integral is twice the half-circle one.
    let dt = PI / directions as f64;
    let mut acc = OperatorField::zeros(g, f.dim());
    for m in 0..directions {
        let th = m as f64 * dt;
        let w = omega.at_angle(th);
        if w == 0.0 {
            continue;
        }
        let h = directional_hilbert(f, [th.cos(), th.sin()], eps)?;
        acc.add_assign(&h.scale(PI * w * dt));
    }
    Ok(acc)
}

/// ∫_{S^{d−1}} |Ω(θ)| f_{θ,ε} dθ.
pub fn omega_directional_average(omega: &RoughSymbol, f: &OperatorField, eps: f64, directions: usize) -> Result<OperatorField> {
    let g = *f.grid();
    if g.d == 1 {
        let s = omega.values[0].abs() + omega.values[1].abs();
        return Ok(directional_average(f, [1.0, 0.0], eps)?.scale(s));
    }
    // f_{θ,ε} = f_{θ+π,ε}: integrate |Ω(θ)| + |Ω(θ+π)| over a half circle.
    let dt = PI / directions as f64;
    let mut acc = OperatorField::zeros(g, f.dim());
    for m in 0..directions {
        let th = (m as f64 + 0.5) * dt;
        let w = omega.at_angle(th).abs() + omega.at_angle(th + PI).abs();
        if w == 0.0 {
            continue;
        }
        acc.add_assign(&directional_average(f, [th.cos(), th.sin()], eps)?.scale(w * dt));
    }
    Ok(acc)
}

/// T̃_{Ω,ε}f = ∫ k_Ω(y)ϕ(|y|/ε) f(x−y) dy.
pub fn smooth_truncation(omega: &RoughSymbol, f: &OperatorField, eps: f64) -> Result<OperatorField> {
    let k = Kernel::rough(omega.clone());
    let ops = build_operators(&k, f.grid(), &[Radial::Smooth(eps)])?;
    Ok(ops[0].apply(f))
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct SmoothSandwich {
    pub eps: f64,
    /// Smallest C with −C·A ⪯ T̃f − T f ⪯ C·A, A = ∫|Ω| f_{θ,ε} dθ.
    pub constant: f64,
}

/// Measure the directional-average domination of T̃_{Ω,ε}f − T_{Ω,ε}f for PSD f.
pub fn smooth_truncation_sandwich(omega: &RoughSymbol, f: &OperatorField, eps: f64, directions: usize) -> Result<SmoothSandwich> {
    let k = Kernel::rough(omega.clone());
    let ops = build_operators(&k, f.grid(), &[Radial::SmoothMinusTrunc(eps)])?;
    let diff = ops[0].apply(f).real_part();
    let avg = omega_directional_average(omega, f, eps, directions)?;
    Ok(SmoothSandwich { eps, constant: sandwich_constant(&diff, &avg)? })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ray_covers_box() {
        let g = DyadicGrid::new(2, 0, 3).unwrap();
        let cells = ray_cells(&g, [0.3, 0.2], [0.6, 0.8]);
        let len: f64 = cells.iter().map(|c| c.2 - c.1).sum();
        // exits through the top edge y = 1 at t = 1
        assert!((len - 1.0).abs() < 1e-12);
    }

    #[test]
    fn average_of_constant_in_interior() {
        let g = DyadicGrid::new(2, -1, 3).unwrap();
        let f = OperatorField::constant(g, CMatrix::scalar(2, 3.0));
        let a = directional_average(&f, [0.6, 0.8], 0.2).unwrap();
        let c = g.locate(&[1.0, 1.0]).unwrap();
        assert!((a.value(c)[(0, 0)].re - 3.0).abs() < 1e-12);
    }

    #[test]
    fn even_line_gives_zero() {
        let g = DyadicGrid::new(1, 0, 5).unwrap();
        let f = OperatorField::from_fn(g, 1, |x| CMatrix::from_real_diag(&[(-(x[0] - 0.515625f64).powi(2) * 20.0).exp()]));
        let c = g.locate(&[0.515625]).unwrap();
        let h = directional_hilbert(&f, [1.0, 0.0], 0.05).unwrap();
        assert!(h.value(c)[(0, 0)].re.abs() < 1e-3);
    }

    #[test]
    fn rejects_even_symbol() {
        let g = DyadicGrid::new(2, 0, 3).unwrap();
        let f = OperatorField::zeros(g, 1);
        let even = RoughSymbol::by_name("cos2", 2).unwrap();
        assert!(matches!(rotation_method(&even, &f, 0.1, 16), Err(NcczError::NotOdd(_))));
    }
}
