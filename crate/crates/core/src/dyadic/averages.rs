//! Conditional expectations E_k and Hardy–Littlewood averages M_ε.

use rayon::prelude::*;

use super::field::OperatorField;
use super::grid::DyadicGrid;
use crate::algebra::CMatrix;
use crate::error::{invalid, Result};

/// f_Q for every cube of level k, indexed by flat cube id.
pub fn cube_averages(f: &OperatorField, k: i32) -> Result<Vec<CMatrix>> {
    let g = f.grid();
    g.check_level(k)?;
    let n = f.dim();
    let count = g.cube_count(k);
    let per_cube = 1usize << ((g.k_max - k) as usize * g.d);
    let inv = 1.0 / per_cube as f64;
    Ok((0..count)
        .into_par_iter()
        .map(|id| {
            let q = g.cube_from_id(k, id);
            let mut s = CMatrix::zeros(n);
            for c in g.cells_of_cube(&q) {
                s += f.value(c);
            }
            s.scale(inv)
        })
        .collect())
}

/// E_k f as a finest-level field.
pub fn conditional_expectation(f: &OperatorField, k: i32) -> Result<OperatorField> {
    let avg = cube_averages(f, k)?;
    Ok(expand_cube_values(f.grid(), k, &avg))
}

/// Expand per-cube values of level k to a finest-level field.
pub fn expand_cube_values(g: &DyadicGrid, k: i32, per_cube: &[CMatrix]) -> OperatorField {
    let n = per_cube[0].dim();
    let values = (0..g.cell_count()).into_par_iter().map(|c| per_cube[g.cube_id_of_cell(c, k)].clone()).collect();
    OperatorField::new(*g, n, values).expect("shape is consistent by construction")
}

/// M_ε f(x) = ε^{−d}∫_{|x−y|≤ε} f(y)dy at cell midpoints (zero extension outside the box).
pub fn hl_average(f: &OperatorField, eps: f64) -> Result<OperatorField> {
    if !(eps > 0.0) {
        return invalid(format!("averaging radius must be positive, got {eps}"));
    }
    match f.grid().d {
        1 => Ok(hl_average_1d(f, eps)),
        _ => Ok(hl_average_2d(f, eps)),
    }
}

fn hl_average_1d(f: &OperatorField, eps: f64) -> OperatorField {
    let g = *f.grid();
    let h = g.cell_side();
    let np = g.per_axis();
    let n = f.dim();
    // prefix[k] = ∫_0^{kh} f
    let mut prefix = Vec::with_capacity(np + 1);
    prefix.push(CMatrix::zeros(n));
    for c in 0..np {
        let mut next = prefix[c].clone();
        next.axpy(h, f.value(c));
        prefix.push(next);
    }
    let cumulative = |t: f64| -> CMatrix {
        let t = t.clamp(0.0, np as f64 * h);
        let k = ((t / h).floor() as usize).min(np);
        let mut v = prefix[k].clone();
        if k < np {
            v.axpy(t - k as f64 * h, f.value(k));
        }
        v
    };
    let values = (0..np)
        .into_par_iter()
        .map(|c| {
            let x = (c as f64 + 0.5) * h;
            (&cumulative(x + eps) - &cumulative(x - eps)).scale(1.0 / eps)
        })
        .collect();
    OperatorField::new(g, n, values).expect("shape is consistent by construction")
}

/// |cell(dx,dy) ∩ B(0,ε)|, with midpoint inclusion on a 4×4 subdivision for cells cut by the sphere.
fn ball_cell_weight(dx: i64, dy: i64, h: f64, eps: f64) -> f64 {
    let cx = dx as f64 * h;
    let cy = dy as f64 * h;
    let near_x = (cx.abs() - h / 2.0).max(0.0);
    let near_y = (cy.abs() - h / 2.0).max(0.0);
    let far_x = cx.abs() + h / 2.0;
    let far_y = cy.abs() + h / 2.0;
    if far_x.hypot(far_y) <= eps {
        return h * h;
    }
    if near_x.hypot(near_y) >= eps {
        return 0.0;
    }
    let sub = 4;
    let hs = h / sub as f64;
    let mut count = 0;
    for i in 0..sub {
        for j in 0..sub {
            let px = cx - h / 2.0 + (i as f64 + 0.5) * hs;
            let py = cy - h / 2.0 + (j as f64 + 0.5) * hs;
            if px.hypot(py) <= eps {
                count += 1;
            }
        }
    }
    count as f64 * hs * hs
}

fn hl_average_2d(f: &OperatorField, eps: f64) -> OperatorField {
    let g = *f.grid();
    let h = g.cell_side();
    let np = g.per_axis() as i64;
    let n = f.dim();
    let reach = ((eps / h).ceil() as i64 + 1).min(np);
    let side = (2 * reach + 1) as usize;
    let mut table = vec![0.0; side * side];
    for dy in -reach..=reach {
        for dx in -reach..=reach {
            table[(dy + reach) as usize * side + (dx + reach) as usize] = ball_cell_weight(dx, dy, h, eps);
        }
    }
    let norm = 1.0 / (eps * eps);
    let values = (0..g.cell_count())
        .into_par_iter()
        .map(|c| {
            let [ix, iy] = g.cell_index(c);
            let (ix, iy) = (ix as i64, iy as i64);
            let mut s = CMatrix::zeros(n);
            for y in (iy - reach).max(0)..=(iy + reach).min(np - 1) {
                for x in (ix - reach).max(0)..=(ix + reach).min(np - 1) {
                    let w = table[(y - iy + reach) as usize * side + (x - ix + reach) as usize];
                    if w > 0.0 {
                        s.axpy(w, f.value(g.cell_id([x as usize, y as usize])));
                    }
                }
            }
            s.scale(norm)
        })
        .collect();
    OperatorField::new(g, n, values).expect("shape is consistent by construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn left_half_indicator_average() {
        let g = DyadicGrid::new(1, 0, 1).unwrap();
        let f = OperatorField::from_scalars(g, &[1.0, 0.0]).unwrap();
        let e0 = conditional_expectation(&f, 0).unwrap();
        assert_eq!(e0.scalar_values(), vec![0.5, 0.5]);
    }

    #[test]
    fn hl_example_indicator() {
        // ε = 1/4 at x = 1/2: the midpoint of cell [0.5, 0.5+h) is slightly right of 1/2,
        // so evaluate on a grid where 1/2 − h/2 is a midpoint and compare the exact integral.
        let g = DyadicGrid::new(1, 0, 6).unwrap();
        let f = OperatorField::from_fn(g, 1, |x| CMatrix::from_real_diag(&[if x[0] < 0.5 { 1.0 } else { 0.0 }]));
        let m = hl_average(&f, 0.25).unwrap();
        let h = g.cell_side();
        let c = 31; // midpoint 0.5 − h/2
        let x = 0.5 - h / 2.0;
        let exact = ((0.5f64).min(x + 0.25) - (x - 0.25)) / 0.25;
        assert!((m.value(c)[(0, 0)].re - exact).abs() < 1e-14);
        assert!((exact - 1.0 - 2.0 * h).abs() < 1e-14);
    }

    #[test]
    fn interior_constant_maps_to_ball_volume() {
        let g = DyadicGrid::new(2, -1, 5).unwrap();
        let f = OperatorField::constant(g, CMatrix::identity(1));
        let m = hl_average(&f, 0.25).unwrap();
        let c = g.locate(&[1.0, 1.0]).unwrap();
        let v = m.value(c)[(0, 0)].re;
        assert!((v - std::f64::consts::PI).abs() < 0.05, "{v}");
    }
}
