//! Empirical kernel constants: size, Lipschitz, L_q-integral regularity δ_q(m), cancellation,
//! and the difference kernels k^φ_{i,n}. All sampled values are lower bounds of suprema.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use super::partition::PartitionFamily;
use super::spec::Kernel;
use crate::algebra::C64;
use crate::quadrature::{gauss_legendre, integrate_adaptive};

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Halton point in [0,1)^k with the first k primes.
fn halton(i: u64, k: usize) -> [f64; 6] {
    const PRIMES: [u64; 6] = [2, 3, 5, 7, 11, 13];
    let mut out = [0.0; 6];
    for (a, p) in PRIMES.iter().take(k).enumerate() {
        out[a] = radical_inverse(i + 1, *p);
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct SizeLipschitz {
    pub c_size: f64,
    pub c_lip: Option<f64>,
    pub samples: usize,
    pub skipped: usize,
}

fn dist(d: usize, a: [f64; 2], b: [f64; 2]) -> f64 {
    if d == 1 {
        (a[0] - b[0]).abs()
    } else {
        (a[0] - b[0]).hypot(a[1] - b[1])
    }
}

/// Sampled sup of |x−y|^d|k(x,y)| and of the γ-Lipschitz quotient over |x−y| ≥ 2|y−z|.
pub fn size_and_lipschitz(kernel: &Kernel, budget: usize) -> SizeLipschitz {
    let d = kernel.d;
    let gamma = kernel.gamma();
    let per: Vec<(f64, Option<f64>, bool)> = (0..budget as u64)
        .into_par_iter()
        .map(|i| {
            let h = halton(i, 6);
            let x = [4.0 * h[0] - 2.0, if d == 2 { 4.0 * h[1] - 2.0 } else { 0.0 }];
            // y at distance ρ ∈ (0, 2] from x in a sampled direction
            let rho = 2.0 * h[2].max(1e-9);
            let th = 2.0 * PI * h[3];
            let u = if d == 1 { [if h[3] < 0.5 { 1.0 } else { -1.0 }, 0.0] } else { [th.cos(), th.sin()] };
            let y = [x[0] + rho * u[0], x[1] + rho * u[1]];
            let Some(kxy) = kernel.eval(x, y) else { return (0.0, None, true) };
            let size = dist(d, x, y).powi(d as i32) * kxy.norm();
            let lip = gamma.and_then(|g| {
                let t = 0.5 * h[4];
                let ph = 2.0 * PI * h[5];
                let w = if d == 1 { [if h[5] < 0.5 { 1.0 } else { -1.0 }, 0.0] } else { [ph.cos(), ph.sin()] };
                let z = [y[0] + t * rho * w[0], y[1] + t * rho * w[1]];
                let yz = dist(d, y, z);
                if yz == 0.0 {
                    return None;
                }
                let kxz = kernel.eval(x, z)?;
                Some((kxy - kxz).norm() * rho.powf(d as f64 + g) / yz.powf(g))
            });
            (size, lip, false)
        })
        .collect();
    let mut c_size: f64 = 0.0;
    let mut c_lip: Option<f64> = gamma.map(|_| 0.0);
    let mut skipped = 0;
    for (s, l, skip) in per {
        if skip {
            skipped += 1;
            continue;
        }
        c_size = c_size.max(s);
        if let (Some(acc), Some(v)) = (c_lip.as_mut(), l) {
            *acc = acc.max(v);
        }
    }
    SizeLipschitz { c_size, c_lip, samples: budget, skipped }
}

/// Sample set for δ_q: (R, y, v).
#[derive(Clone, Debug)]
pub struct ModulusSamples {
    pub radii: Vec<f64>,
    pub centers: Vec<[f64; 2]>,
    pub shifts_per_radius: usize,
    pub angular_points: usize,
}

impl ModulusSamples {
    /// Homogeneous convolution kernels are scale and translation invariant: R = 1, y = 0.
    pub fn for_kernel(kernel: &Kernel) -> Self {
        if kernel.is_convolution() {
            ModulusSamples { radii: vec![1.0], centers: vec![[0.0, 0.0]], shifts_per_radius: 16, angular_points: 1024 }
        } else {
            ModulusSamples {
                radii: vec![0.125, 0.5, 2.0],
                centers: vec![[0.0, 0.0], [0.7, 0.0], [-1.3, 0.0]],
                shifts_per_radius: 8,
                angular_points: 1024,
            }
        }
    }
}

/// ((2^m R)^{d(q−1)} ∫_{2^mR ≤ |x−y| ≤ 2^{m+1}R} |k(x,y+v) − k(x,y)|^q dx)^{1/q}, sup over the sample.
pub fn delta_q_modulus(kernel: &Kernel, m: u32, q: f64, samples: &ModulusSamples) -> f64 {
    let d = kernel.d;
    let mut tuples = Vec::new();
    for &r in &samples.radii {
        for &y in &samples.centers {
            for s in 0..samples.shifts_per_radius {
                let (v, mag) = if d == 1 {
                    let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
                    let mag = if (s / 2) % 2 == 0 { 1.0 } else { 0.5 };
                    ([sign, 0.0], mag)
                } else {
                    let th = 2.0 * PI * (s / 2) as f64 / (samples.shifts_per_radius / 2).max(1) as f64;
                    ([th.cos(), th.sin()], if s % 2 == 0 { 1.0 } else { 0.5 })
                };
                tuples.push((r, y, [v[0] * mag * r, v[1] * mag * r]));
            }
        }
    }
    let vals: Vec<f64> = tuples
        .par_iter()
        .map(|&(r, y, v)| {
            let lo = 2f64.powi(m as i32) * r;
            let hi = 2.0 * lo;
            let yv = [y[0] + v[0], y[1] + v[1]];
            let diff = |x: [f64; 2]| -> f64 {
                match (kernel.eval(x, yv), kernel.eval(x, y)) {
                    (Some(a), Some(b)) => (a - b).norm().powf(q),
                    _ => 0.0,
                }
            };
            let integral = if d == 1 {
                let right = integrate_adaptive(|t| diff([y[0] + t, 0.0]), lo, hi, 1e-16, 400).0;
                let left = integrate_adaptive(|t| diff([y[0] - t, 0.0]), lo, hi, 1e-16, 400).0;
                right + left
            } else {
                let rule = gauss_legendre(64);
                let na = samples.angular_points;
                let dt = 2.0 * PI / na as f64;
                let mut acc = 0.0;
                for a in 0..na {
                    let th = (a as f64 + 0.5) * dt;
                    let (c, s) = (th.cos(), th.sin());
                    let radial: f64 = rule.integrate(lo, hi, |rr| diff([y[0] + rr * c, y[1] + rr * s]) * rr);
                    acc += radial * dt;
                }
                acc
            };
            (lo.powf(d as f64 * (q - 1.0)) * integral).powf(1.0 / q)
        })
        .collect();
    vals.into_iter().fold(0.0, f64::max)
}

/// Least-squares slope of log₂ δ against m; the decay exponent is its negative.
pub fn fitted_decay_exponent(ms: &[u32], deltas: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = ms.iter().zip(deltas).filter(|(_, &d)| d > 0.0).map(|(&m, &d)| (m as f64, d.log2())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    -sxy / sxx
}

/// ∫_{r<|x|<R} k(x) dx for a convolution kernel.
pub fn annulus_integral(kernel: &Kernel, r: f64, big_r: f64) -> C64 {
    let k = |x: [f64; 2]| kernel.eval(x, [0.0, 0.0]).unwrap_or_default();
    if kernel.d == 1 {
        let re = integrate_adaptive(|t| (k([t, 0.0]) + k([-t, 0.0])).re, r, big_r, 1e-14, 2000).0;
        let im = integrate_adaptive(|t| (k([t, 0.0]) + k([-t, 0.0])).im, r, big_r, 1e-14, 2000).0;
        return C64::new(re, im);
    }
    let rule = gauss_legendre(64);
    let na = 2048;
    let dt = 2.0 * PI / na as f64;
    // split the shell geometrically so the 1/r profile is resolved
    let decades = ((big_r / r).log2().ceil() as usize).max(1);
    let ratio = (big_r / r).powf(1.0 / decades as f64);
    let mut acc = C64::default();
    for a in 0..na {
        let th = (a as f64 + 0.5) * dt;
        let (c, s) = (th.cos(), th.sin());
        let mut lo = r;
        for _ in 0..decades {
            let hi = lo * ratio;
            acc += rule.integrate(lo, hi, |rr| k([rr * c, rr * s]) * rr) * dt;
            lo = hi;
        }
    }
    acc
}

#[derive(Clone, Debug, Serialize)]
pub struct CancellationReport {
    pub sup: f64,
    pub cancellative: bool,
    /// (ε_j, ∫_{ε_j<|x|≤1} k).
    pub ladder: Vec<(f64, f64, f64)>,
}

pub fn cancellation_sup(kernel: &Kernel, r_grid: &[f64], big_r_grid: &[f64], ladder: &[f64]) -> CancellationReport {
    let mut pairs = Vec::new();
    for &r in r_grid {
        for &rr in big_r_grid {
            if r < rr {
                pairs.push((r, rr));
            }
        }
    }
    let sup = pairs.par_iter().map(|&(a, b)| annulus_integral(kernel, a, b).norm()).collect::<Vec<_>>().into_iter().fold(0.0, f64::max);
    let ladder = ladder
        .iter()
        .filter(|&&e| e < 1.0)
        .map(|&e| {
            let v = annulus_integral(kernel, e, 1.0);
            (e, v.re, v.im)
        })
        .collect();
    CancellationReport { sup, cancellative: sup <= 1e-6, ladder }
}

/// k^φ_{i,n}(x,y) = k(x,y)φ_i(x−y) − k(x,c_{y,n})φ_i(x−c_{y,n}).
#[derive(Clone, Debug)]
pub struct DifferenceKernel<'a> {
    pub kernel: &'a Kernel,
    pub partition: PartitionFamily,
    pub i: i32,
    pub n: i32,
}

impl<'a> DifferenceKernel<'a> {
    /// Center of the level-n dyadic cube containing y.
    pub fn center(&self, y: [f64; 2]) -> [f64; 2] {
        let side = 2f64.powi(-self.n);
        let mut c = [0.0; 2];
        for a in 0..self.kernel.d {
            c[a] = ((y[a] / side).floor() + 0.5) * side;
        }
        c
    }

    fn piece(&self, x: [f64; 2], y: [f64; 2]) -> C64 {
        let r = dist(self.kernel.d, x, y);
        let w = self.partition.phi_i(self.i, r);
        if w == 0.0 {
            return C64::default();
        }
        self.kernel.eval(x, y).map(|k| k * w).unwrap_or_default()
    }

    pub fn eval(&self, x: [f64; 2], y: [f64; 2]) -> C64 {
        self.piece(x, y) - self.piece(x, self.center(y))
    }
}

pub fn difference_kernel(kernel: &Kernel, partition: PartitionFamily, i: i32, n: i32) -> DifferenceKernel<'_> {
    DifferenceKernel { kernel, partition, i, n }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{KernelSpec, RoughSymbol};

    #[test]
    fn hilbert_size_constant() {
        let r = size_and_lipschitz(&Kernel::hilbert(), 2000);
        assert!((r.c_size - 1.0 / PI).abs() < 1e-14);
        let lip = r.c_lip.unwrap();
        let lip2 = size_and_lipschitz(&Kernel::hilbert(), 4000).c_lip.unwrap();
        assert!(lip <= 2.0 / PI + 1e-12 && (lip2 - lip) / lip < 0.05);
        let z = size_and_lipschitz(&Kernel::new(1, KernelSpec::Zero).unwrap(), 100);
        assert_eq!((z.c_size, z.c_lip), (0.0, Some(0.0)));
    }

    #[test]
    fn translation_invariant_zero_shift() {
        let k = Kernel::hilbert();
        let s = ModulusSamples { radii: vec![1.0], centers: vec![[0.0, 0.0]], shifts_per_radius: 0, angular_points: 8 };
        assert_eq!(delta_q_modulus(&k, 3, 2.0, &s), 0.0);
    }

    #[test]
    fn hilbert_decay() {
        let k = Kernel::hilbert();
        let s = ModulusSamples::for_kernel(&k);
        let ms: Vec<u32> = (1..=8).collect();
        let d2: Vec<f64> = ms.iter().map(|&m| delta_q_modulus(&k, m, 2.0, &s)).collect();
        let g = fitted_decay_exponent(&ms, &d2);
        assert!((g - 1.0).abs() < 0.15, "{g}");
    }

    #[test]
    fn cancellation_examples() {
        let h = cancellation_sup(&Kernel::hilbert(), &[0.1, 0.5], &[1.0, 4.0], &[]);
        assert!(h.sup < 1e-12 && h.cancellative);
        let one = cancellation_sup(&Kernel::from_name("one-sided", 1).unwrap(), &[0.1], &[4.0], &[]);
        assert!((one.sup - (40.0f64).ln()).abs() < 1e-9 && !one.cancellative);
        let rough = Kernel::rough(RoughSymbol::by_name("cos2", 2).unwrap());
        assert!(cancellation_sup(&rough, &[0.1], &[2.0], &[]).sup < 1e-8);
    }

    #[test]
    fn difference_kernel_support() {
        let k = Kernel::hilbert();
        let p = PartitionFamily::new(1);
        let (i, n) = (2, 6);
        let dk = difference_kernel(&k, p, i, n);
        let y = [0.3 + 1e-3, 0.0];
        assert_eq!(dk.eval([0.9, 0.0], dk.center(y)).norm(), 0.0);
        let side = 2f64.powi(-n);
        let c = dk.center(y);
        for t in 0..4000 {
            let x = [-2.0 + 0.001 * t as f64, 0.0];
            if dk.eval(x, y).norm() > 0.0 {
                let dq = ((x[0] - c[0]).abs() - side / 2.0).max(0.0);
                assert!(dq >= 2f64.powi(-i - 2) && dq <= 3.0 * 2f64.powi(-i), "x={x:?}");
            }
        }
    }
}
