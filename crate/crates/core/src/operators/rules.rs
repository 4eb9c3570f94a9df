//! Polar cell rules: ∫_{cell} k(x−y)ρ(|x−y|)dy as Σ w_θ Ω(θ)∫_{r1(θ)}^{r2(θ)} ρ(r)/r dr.
//!
//! Every radial profile evaluated for one offset uses the same angular nodes, so linear
//! identities between profiles (χ_{|·|>ε} = Σφ_i + boundary) carry over to the weights exactly.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::algebra::{CMatrix, C64};
use crate::dyadic::{DyadicGrid, OperatorField};
use crate::error::{invalid, Result};
use crate::kernels::{Kernel, KernelSpec, PartitionFamily};
use crate::quadrature::gauss_legendre;

/// Radial profile ρ(r) multiplying the kernel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Radial {
    /// χ_{r>ε}
    Trunc(f64),
    /// Σ_{i=a}^{b} φ_i
    Window(i32, i32),
    /// χ_{r>ε} − Σ_{i=a}^{b} φ_i
    Boundary { eps: f64, a: i32, b: i32 },
    /// ϕ(r/ε)
    Smooth(f64),
    /// ϕ(r/ε) − χ_{r>ε}
    SmoothMinusTrunc(f64),
}

impl Radial {
    pub fn value(&self, p: &PartitionFamily, r: f64) -> f64 {
        match *self {
            Radial::Trunc(e) => (r > e) as u8 as f64,
            Radial::Window(a, b) => p.window(a, b, r),
            Radial::Boundary { eps, a, b } => (r > eps) as u8 as f64 - p.window(a, b, r),
            Radial::Smooth(e) => crate::kernels::partition::smooth_cutoff(r / e),
            Radial::SmoothMinusTrunc(e) => crate::kernels::partition::smooth_cutoff(r / e) - (r > e) as u8 as f64,
        }
    }

    /// ∫_{r1}^{r2} ρ(r)/r dr.
    pub fn log_integral(&self, p: &PartitionFamily, r1: f64, r2: f64) -> f64 {
        use crate::kernels::partition::cutoff_antiderivative as cut;
        if r2 <= r1 {
            return 0.0;
        }
        let trunc = |e: f64| {
            let lo = r1.max(e);
            if r2 > lo {
                (r2 / lo).ln()
            } else {
                0.0
            }
        };
        let window = |a: i32, b: i32| p.window_antiderivative(a, b, r2) - p.window_antiderivative(a, b, r1);
        let smooth = |e: f64| cut(r2 / e) - cut(r1 / e);
        match *self {
            Radial::Trunc(e) => trunc(e),
            Radial::Window(a, b) => window(a, b),
            Radial::Boundary { eps, a, b } => trunc(eps) - window(a, b),
            Radial::Smooth(e) => smooth(e),
            Radial::SmoothMinusTrunc(e) => smooth(e) - trunc(e),
        }
    }

    /// [lo, hi] outside of which ρ vanishes.
    pub fn support(&self, p: &PartitionFamily) -> (f64, f64) {
        let win = |a: i32, b: i32| (p.annulus(b).0, p.annulus(a).1);
        match *self {
            Radial::Trunc(e) => (e, f64::INFINITY),
            Radial::Window(a, b) => win(a, b),
            Radial::Boundary { eps, a, b } => (win(a, b).0.min(eps), f64::INFINITY),
            Radial::Smooth(e) => (0.25 * e, f64::INFINITY),
            Radial::SmoothMinusTrunc(e) => (0.25 * e, e),
        }
    }

    /// Radii where ρ or its derivatives change character.
    fn breaks(&self, p: &PartitionFamily, out: &mut Vec<f64>) {
        let sd = p.sqrt_d();
        let scale = |a: i32, b: i32, out: &mut Vec<f64>| {
            for i in a..=b + 1 {
                out.push(2f64.powi(-i) * sd);
                out.push(2f64.powi(-i + 1) * sd);
            }
        };
        match *self {
            Radial::Trunc(e) => out.push(e),
            Radial::Window(a, b) => scale(a, b, out),
            Radial::Boundary { eps, a, b } => {
                out.push(eps);
                scale(a, b, out);
            }
            Radial::Smooth(e) | Radial::SmoothMinusTrunc(e) => out.extend([0.25 * e, 0.75 * e, e]),
        }
    }
}

/// One angular node: direction from x toward the cell, weight, radial extent.
#[derive(Clone, Copy, Debug)]
pub struct PolarNode {
    pub dir: [f64; 2],
    pub w: f64,
    pub r1: f64,
    pub r2: f64,
}

fn ray_box(dir: [f64; 2], lo: [f64; 2], hi: [f64; 2]) -> Option<(f64, f64)> {
    let mut t0: f64 = 0.0;
    let mut t1 = f64::INFINITY;
    for a in 0..2 {
        if dir[a].abs() < 1e-300 {
            if 0.0 < lo[a] || 0.0 > hi[a] {
                return None;
            }
        } else {
            let (mut ta, mut tb) = (lo[a] / dir[a], hi[a] / dir[a]);
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
        }
    }
    (t1 > t0).then_some((t0, t1))
}

/// Angles of intersection of the circle |z| = r with the box boundary.
fn circle_box_angles(r: f64, lo: [f64; 2], hi: [f64; 2], out: &mut Vec<f64>) {
    for a in 0..2 {
        let b = 1 - a;
        for &c in &[lo[a], hi[a]] {
            let disc = r * r - c * c;
            if disc <= 0.0 {
                continue;
            }
            let s = disc.sqrt();
            for &t in &[s, -s] {
                if t >= lo[b] && t <= hi[b] {
                    let mut z = [0.0; 2];
                    z[a] = c;
                    z[b] = t;
                    out.push(z[1].atan2(z[0]));
                }
            }
        }
    }
}

/// Polar nodes for the cell at integer offset `o` (in units of h) from the evaluation midpoint.
pub fn cell_nodes(d: usize, h: f64, o: [i64; 2], radii: &[f64], extra_angles: &[f64]) -> Vec<PolarNode> {
    if d == 1 {
        let c = o[0] as f64 * h;
        return if o[0] == 0 {
            vec![PolarNode { dir: [1.0, 0.0], w: 1.0, r1: 0.0, r2: 0.5 * h }, PolarNode { dir: [-1.0, 0.0], w: 1.0, r1: 0.0, r2: 0.5 * h }]
        } else {
            vec![PolarNode { dir: [c.signum(), 0.0], w: 1.0, r1: c.abs() - 0.5 * h, r2: c.abs() + 0.5 * h }]
        };
    }
    let lo = [(o[0] as f64 - 0.5) * h, (o[1] as f64 - 0.5) * h];
    let hi = [(o[0] as f64 + 0.5) * h, (o[1] as f64 + 0.5) * h];
    let own = o == [0, 0];
    let corners = [[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]];
    let dmin = if own { 0.0 } else { nearest(lo, hi) };
    let dmax = corners.iter().map(|c| c[0].hypot(c[1])).fold(0.0, f64::max);

    // angles relative to a reference so the cell's span is an interval
    let (base, span_lo, span_hi) = if own {
        (0.0, 0.0, 2.0 * PI)
    } else {
        let base = (o[1] as f64).atan2(o[0] as f64);
        let rel: Vec<f64> = corners.iter().map(|c| wrap(c[1].atan2(c[0]) - base)).collect();
        (base, rel.iter().cloned().fold(f64::INFINITY, f64::min), rel.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
    };
    let mut cuts: Vec<f64> = Vec::new();
    let mut raw = Vec::new();
    for c in &corners {
        raw.push(c[1].atan2(c[0]));
    }
    for &r in radii {
        if r > dmin && r < dmax {
            circle_box_angles(r, lo, hi, &mut raw);
        }
    }
    raw.extend_from_slice(extra_angles);
    for a in raw {
        let rel = if own { (a - base).rem_euclid(2.0 * PI) } else { wrap(a - base) };
        if rel > span_lo && rel < span_hi {
            cuts.push(rel);
        }
    }
    cuts.push(span_lo);
    cuts.push(span_hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);

    let rule = gauss_legendre(10);
    let mut nodes = Vec::new();
    for w in cuts.windows(2) {
        let width = w[1] - w[0];
        let pieces = (width / 0.25).ceil().max(1.0) as usize;
        for p in 0..pieces {
            let a0 = w[0] + width * p as f64 / pieces as f64;
            let a1 = w[0] + width * (p + 1) as f64 / pieces as f64;
            for (t, wt) in rule.mapped(a0, a1) {
                let th = base + t;
                let dir = [th.cos(), th.sin()];
                if let Some((r1, r2)) = ray_box(dir, lo, hi) {
                    nodes.push(PolarNode { dir, w: wt, r1, r2 });
                }
            }
        }
    }
    nodes
}

fn nearest(lo: [f64; 2], hi: [f64; 2]) -> f64 {
    let cx = 0.0f64.clamp(lo[0], hi[0]);
    let cy = 0.0f64.clamp(lo[1], hi[1]);
    cx.hypot(cy)
}

fn wrap(a: f64) -> f64 {
    let mut a = a.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Sparse convolution weights: out(x) = Σ_o w[o]·f(x + o).
#[derive(Clone, Debug)]
pub struct WeightTable {
    pub d: usize,
    pub offsets: Vec<[i32; 2]>,
    pub weights: Vec<C64>,
    pub real: bool,
}

impl WeightTable {
    pub fn empty(d: usize) -> Self {
        WeightTable { d, offsets: Vec::new(), weights: Vec::new(), real: true }
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn weight(&self, o: [i32; 2]) -> C64 {
        self.offsets.iter().position(|&x| x == o).map(|k| self.weights[k]).unwrap_or_default()
    }

    /// Σ of |w| (ℓ¹ mass of the discrete operator on scalars).
    pub fn l1(&self) -> f64 {
        self.weights.iter().map(|w| w.norm()).sum()
    }

    pub fn apply(&self, f: &OperatorField) -> OperatorField {
        let g = *f.grid();
        let n = f.dim();
        let np = g.per_axis() as i64;
        let values = (0..g.cell_count())
            .into_par_iter()
            .map(|c| {
                let [ix, iy] = g.cell_index(c);
                let mut acc = CMatrix::zeros(n);
                for (o, w) in self.offsets.iter().zip(&self.weights) {
                    let x = ix as i64 + o[0] as i64;
                    let y = iy as i64 + o[1] as i64;
                    if x < 0 || x >= np || (self.d == 2 && (y < 0 || y >= np)) {
                        continue;
                    }
                    let v = f.value(g.cell_id([x as usize, y as usize]));
                    if self.real {
                        acc.axpy(w.re, v);
                    } else {
                        acc.axpy_c(*w, v);
                    }
                }
                acc
            })
            .collect();
        OperatorField::new(g, n, values).expect("shape preserved")
    }

    /// Same as `apply` but only visits the listed source cells.
    pub fn apply_sparse(&self, f: &OperatorField, support: &[usize]) -> OperatorField {
        let g = *f.grid();
        let n = f.dim();
        let np = g.per_axis() as i64;
        let span = (2 * np - 1) as usize;
        let slot = |o: [i64; 2]| -> usize {
            let x = (o[0] + np - 1) as usize;
            if self.d == 1 {
                x
            } else {
                (o[1] + np - 1) as usize * span + x
            }
        };
        let mut dense = vec![C64::default(); if self.d == 1 { span } else { span * span }];
        for (o, w) in self.offsets.iter().zip(&self.weights) {
            dense[slot([o[0] as i64, o[1] as i64])] = *w;
        }
        let src: Vec<[i64; 2]> = support.iter().map(|&s| g.cell_index(s)).map(|[x, y]| [x as i64, y as i64]).collect();
        let values = (0..g.cell_count())
            .into_par_iter()
            .map(|c| {
                let [ix, iy] = g.cell_index(c);
                let mut acc = CMatrix::zeros(n);
                for (&s, sp) in support.iter().zip(&src) {
                    let w = dense[slot([sp[0] - ix as i64, sp[1] - iy as i64])];
                    if w == C64::default() {
                        continue;
                    }
                    if self.real {
                        acc.axpy(w.re, f.value(s));
                    } else {
                        acc.axpy_c(w, f.value(s));
                    }
                }
                acc
            })
            .collect();
        OperatorField::new(g, n, values).expect("shape preserved")
    }
}

/// In-place d-dimensional FFT on an M^d row-major buffer.
fn fft_nd(buf: &mut [C64], m: usize, d: usize, fft: &dyn rustfft::Fft<f64>) {
    for row in buf.chunks_mut(m) {
        fft.process(row);
    }
    if d == 2 {
        let mut col = vec![C64::default(); m];
        for x in 0..m {
            for y in 0..m {
                col[y] = buf[y * m + x];
            }
            fft.process(&mut col);
            for y in 0..m {
                buf[y * m + x] = col[y];
            }
        }
    }
}

impl WeightTable {
    /// FFT length per axis: cyclic convolution of length 2np is linear on the box.
    fn fft_len(np: usize) -> usize {
        (2 * np).next_power_of_two()
    }

    /// Same result as `apply`, through cyclic convolution of each matrix entry.
    pub fn apply_fft(&self, f: &OperatorField) -> OperatorField {
        let g = *f.grid();
        let n = f.dim();
        let np = g.per_axis();
        let m = Self::fft_len(np);
        let size = if self.d == 1 { m } else { m * m };
        let mut planner = rustfft::FftPlanner::<f64>::new();
        let fwd = planner.plan_fft_forward(m);
        let inv = planner.plan_fft_inverse(m);
        // out(x) = Σ_o w_o f(x + o) = Σ_y h(x − y) f(y) with h(−o) = w_o
        let wrap = |k: i64| k.rem_euclid(m as i64) as usize;
        let mut h = vec![C64::default(); size];
        for (o, w) in self.offsets.iter().zip(&self.weights) {
            let i = if self.d == 1 { wrap(-(o[0] as i64)) } else { wrap(-(o[1] as i64)) * m + wrap(-(o[0] as i64)) };
            h[i] += *w;
        }
        fft_nd(&mut h, m, self.d, fwd.as_ref());
        let scale = 1.0 / size as f64;
        let planes: Vec<Vec<C64>> = (0..n * n)
            .into_par_iter()
            .map(|e| {
                let mut buf = vec![C64::default(); size];
                for c in 0..g.cell_count() {
                    let [ix, iy] = g.cell_index(c);
                    buf[iy * m + ix] = f.value(c).as_slice()[e];
                }
                fft_nd(&mut buf, m, self.d, fwd.as_ref());
                buf.iter_mut().zip(&h).for_each(|(b, k)| *b *= k * scale);
                fft_nd(&mut buf, m, self.d, inv.as_ref());
                buf
            })
            .collect();
        let real = self.real && f.values().iter().all(|v| v.as_slice().iter().all(|z| z.im == 0.0));
        let values = (0..g.cell_count())
            .map(|c| {
                let [ix, iy] = g.cell_index(c);
                let data = planes.iter().map(|p| p[iy * m + ix]).collect();
                let mut v = CMatrix::from_vec(n, data);
                if real {
                    v.as_mut_slice().iter_mut().for_each(|z| z.im = 0.0);
                }
                v
            })
            .collect();
        OperatorField::new(g, n, values).expect("shape preserved")
    }

    /// Cheapest of the direct, sparse and FFT evaluations (rough operation counts).
    pub fn apply_auto(&self, f: &OperatorField, support: Option<&[usize]>) -> OperatorField {
        let cells = f.len() as f64;
        let n2 = (f.dim() * f.dim()) as f64;
        let direct = self.len() as f64 * cells * n2;
        let sparse = support.map(|s| s.len() as f64 * cells * n2).unwrap_or(f64::INFINITY);
        let np = f.grid().per_axis();
        let m = Self::fft_len(np) as f64;
        let md = if self.d == 1 { m } else { m * m };
        let fft = 5.0 * (2.0 * n2 + 1.0) * md * md.log2() + 4.0 * md * n2;
        if fft < direct.min(sparse) {
            self.apply_fft(f)
        } else if sparse < direct {
            self.apply_sparse(f, support.expect("finite cost"))
        } else {
            self.apply(f)
        }
    }
}

/// Kernel-specific angular breakpoints (tabulated symbol nodes seen from −θ).
fn symbol_angles(kernel: &Kernel) -> Vec<f64> {
    fn collect(spec: &KernelSpec, out: &mut Vec<f64>) {
        match spec {
            KernelSpec::Rough { omega } if omega.d == 2 => {
                let a = omega.values.len();
                out.extend((0..a).map(|k| 2.0 * PI * k as f64 / a as f64 + PI));
            }
            KernelSpec::Scaled { base, .. } => collect(base, out),
            _ => {}
        }
    }
    let mut v = Vec::new();
    collect(&kernel.spec, &mut v);
    v
}

/// Weight tables of a convolution kernel for several radial profiles on one grid.
pub fn convolution_tables(kernel: &Kernel, grid: &DyadicGrid, radials: &[Radial]) -> Result<Vec<WeightTable>> {
    if !kernel.is_convolution() {
        return invalid("convolution tables need a convolution kernel");
    }
    if kernel.d != grid.d {
        return invalid("kernel and grid dimensions differ");
    }
    let d = grid.d;
    let h = grid.cell_side();
    let part = PartitionFamily::new(d);
    let np = grid.per_axis() as i64;
    let mut radii = Vec::new();
    for r in radials {
        r.breaks(&part, &mut radii);
    }
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    let extra = symbol_angles(kernel);
    let supports: Vec<(f64, f64)> = radials.iter().map(|r| r.support(&part)).collect();
    let offsets: Vec<[i64; 2]> = if d == 1 {
        (-(np - 1)..np).map(|x| [x, 0]).collect()
    } else {
        (-(np - 1)..np).flat_map(|y| (-(np - 1)..np).map(move |x| [x, y])).collect()
    };
    let cell_reach = 0.5 * h * (d as f64).sqrt();
    let per_offset: Vec<Vec<C64>> = offsets
        .par_iter()
        .map(|&o| {
            let c = (o[0] as f64 * h).hypot(o[1] as f64 * h);
            let (near, far) = ((c - cell_reach).max(0.0), c + cell_reach);
            let active: Vec<bool> = supports.iter().map(|&(lo, hi)| far > lo && near < hi).collect();
            if !active.iter().any(|&a| a) {
                return vec![C64::default(); radials.len()];
            }
            let nodes = cell_nodes(d, h, o, &radii, &extra);
            let omegas: Vec<C64> = nodes.iter().map(|nd| kernel.omega([-nd.dir[0], -nd.dir[1]]).unwrap_or_default()).collect();
            radials
                .iter()
                .zip(&active)
                .map(|(r, &on)| {
                    if !on {
                        return C64::default();
                    }
                    let mut acc = C64::default();
                    for (nd, om) in nodes.iter().zip(&omegas) {
                        let v = r.log_integral(&part, nd.r1, nd.r2);
                        if v != 0.0 {
                            acc += *om * (nd.w * v);
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect();
    let mut tables: Vec<WeightTable> = radials.iter().map(|_| WeightTable::empty(d)).collect();
    for (o, ws) in offsets.iter().zip(per_offset) {
        for (t, w) in tables.iter_mut().zip(ws) {
            if w != C64::default() {
                t.offsets.push([o[0] as i32, o[1] as i32]);
                t.weights.push(w);
                if w.im != 0.0 {
                    t.real = false;
                }
            }
        }
    }
    Ok(tables)
}

/// Largest grid handled by the dense non-convolution path.
pub const MAX_DENSE_CELLS: usize = 1024;

/// Dense weights W[x][y] for a non-convolution kernel (d = 1): radial Gauss on pieces split at the profile breaks.
pub fn dense_weights(kernel: &Kernel, grid: &DyadicGrid, radial: Radial) -> Result<Vec<Vec<C64>>> {
    if grid.d != 1 {
        return invalid("non-convolution kernels are supported in d = 1 only");
    }
    if grid.cell_count() > MAX_DENSE_CELLS {
        return invalid(format!("non-convolution kernels need at most {MAX_DENSE_CELLS} cells"));
    }
    let part = PartitionFamily::new(1);
    let h = grid.cell_side();
    let mut radii = Vec::new();
    radial.breaks(&part, &mut radii);
    let rule = gauss_legendre(16);
    let n = grid.cell_count();
    Ok((0..n)
        .into_par_iter()
        .map(|xc| {
            let x = grid.cell_center(xc);
            (0..n)
                .map(|yc| {
                    let nodes = cell_nodes(1, h, [yc as i64 - xc as i64, 0], &[], &[]);
                    let mut acc = C64::default();
                    for nd in nodes {
                        let mut cuts = vec![nd.r1, nd.r2];
                        cuts.extend(radii.iter().copied().filter(|&r| r > nd.r1 && r < nd.r2));
                        cuts.sort_by(f64::total_cmp);
                        for w in cuts.windows(2) {
                            if w[1] <= w[0] {
                                continue;
                            }
                            for (r, wt) in rule.mapped(w[0], w[1]) {
                                let rho = radial.value(&part, r);
                                if rho == 0.0 {
                                    continue;
                                }
                                if let Some(k) = kernel.eval(x, [x[0] + r * nd.dir[0], 0.0]) {
                                    acc += k * (wt * rho);
                                }
                            }
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect())
}

pub fn apply_dense(w: &[Vec<C64>], f: &OperatorField) -> OperatorField {
    let n = f.dim();
    let values: Vec<CMatrix> = w
        .par_iter()
        .map(|row| {
            let mut acc = CMatrix::zeros(n);
            for (y, wy) in row.iter().enumerate() {
                if *wy != C64::default() {
                    acc.axpy_c(*wy, f.value(y));
                }
            }
            acc
        })
        .collect();
    OperatorField::new(*f.grid(), n, values).expect("shape preserved")
}
