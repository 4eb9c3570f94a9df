//! Smooth dyadic partition of unity φ_i(x) = φ(2^i x/√d) and the smooth cutoff ϕ.
//!
//! Radial integrals against 1/r use tabulated antiderivatives on the transition
//! intervals; outside them the antiderivatives are logarithms or constants.

use std::sync::OnceLock;

use crate::quadrature::gauss_legendre;

fn glue(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// C^∞ step: 0 for t ≤ 0, 1 for t ≥ 1.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = glue(t);
    a / (a + glue(1.0 - t))
}

/// ψ = 1 on [0,1], 0 on [2,∞).
pub fn psi(r: f64) -> f64 {
    smooth_step(2.0 - r)
}

/// Base bump φ(r) = ψ(r) − ψ(2r), supported in [1/2, 2].
pub fn phi(r: f64) -> f64 {
    psi(r) - psi(2.0 * r)
}

/// ϕ(s): 0 for s ≤ 1/4, 1 for s ≥ 3/4.
pub fn smooth_cutoff(s: f64) -> f64 {
    smooth_step(2.0 * (s - 0.25))
}

const TABLE_INTERVALS: usize = 4096;

/// Hermite-interpolated antiderivative of g(t)/t on [lo, hi].
struct Antiderivative {
    lo: f64,
    hi: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl Antiderivative {
    fn build(lo: f64, hi: f64, g: impl Fn(f64) -> f64) -> Self {
        let h = (hi - lo) / TABLE_INTERVALS as f64;
        let rule = gauss_legendre(10);
        let integrand = |t: f64| g(t) / t;
        let mut values = Vec::with_capacity(TABLE_INTERVALS + 1);
        let mut slopes = Vec::with_capacity(TABLE_INTERVALS + 1);
        let mut acc = 0.0;
        values.push(0.0);
        slopes.push(integrand(lo));
        for k in 0..TABLE_INTERVALS {
            let a = lo + k as f64 * h;
            acc += rule.integrate(a, a + h, integrand);
            values.push(acc);
            slopes.push(integrand(a + h));
        }
        Antiderivative { lo, hi, values, slopes }
    }

    fn eval(&self, t: f64) -> f64 {
        if t <= self.lo {
            return 0.0;
        }
        if t >= self.hi {
            return self.values[TABLE_INTERVALS];
        }
        let h = (self.hi - self.lo) / TABLE_INTERVALS as f64;
        let s = (t - self.lo) / h;
        let k = (s.floor() as usize).min(TABLE_INTERVALS - 1);
        let u = s - k as f64;
        let (y0, y1) = (self.values[k], self.values[k + 1]);
        let (m0, m1) = (self.slopes[k] * h, self.slopes[k + 1] * h);
        let u2 = u * u;
        let u3 = u2 * u;
        (2.0 * u3 - 3.0 * u2 + 1.0) * y0 + (u3 - 2.0 * u2 + u) * m0 + (-2.0 * u3 + 3.0 * u2) * y1 + (u3 - u2) * m1
    }

    fn total(&self) -> f64 {
        self.values[TABLE_INTERVALS]
    }
}

fn psi_table() -> &'static Antiderivative {
    static T: OnceLock<Antiderivative> = OnceLock::new();
    T.get_or_init(|| Antiderivative::build(1.0, 2.0, psi))
}

fn cutoff_table() -> &'static Antiderivative {
    static T: OnceLock<Antiderivative> = OnceLock::new();
    T.get_or_init(|| Antiderivative::build(0.25, 0.75, smooth_cutoff))
}

/// Ψ(u) = ∫ ψ(u)/u du normalized as ln u on (0, 1].
pub fn psi_antiderivative(u: f64) -> f64 {
    if u <= 1.0 {
        u.ln()
    } else {
        psi_table().eval(u)
    }
}

/// Φ(s) = ∫_{1/4}^s ϕ(t)/t dt.
pub fn cutoff_antiderivative(s: f64) -> f64 {
    if s <= 0.75 {
        cutoff_table().eval(s)
    } else {
        cutoff_table().total() + (s / 0.75).ln()
    }
}

/// Dyadic scales and normalization of the partition on R^d.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PartitionFamily {
    pub d: usize,
    sqrt_d: f64,
}

impl PartitionFamily {
    pub fn new(d: usize) -> Self {
        PartitionFamily { d, sqrt_d: (d as f64).sqrt() }
    }

    pub fn sqrt_d(&self) -> f64 {
        self.sqrt_d
    }

    /// φ_i at radius r = |x|.
    pub fn phi_i(&self, i: i32, r: f64) -> f64 {
        phi(2f64.powi(i) * r / self.sqrt_d)
    }

    /// Σ_{i=a}^{b} φ_i(r) = ψ(2^a u) − ψ(2^{b+1} u).
    pub fn window(&self, a: i32, b: i32, r: f64) -> f64 {
        if b < a {
            return 0.0;
        }
        let u = r / self.sqrt_d;
        psi(2f64.powi(a) * u) - psi(2f64.powi(b + 1) * u)
    }

    /// Antiderivative of window(a, b, r)/r in r.
    pub fn window_antiderivative(&self, a: i32, b: i32, r: f64) -> f64 {
        if b < a {
            return 0.0;
        }
        let u = r / self.sqrt_d;
        let hi = 2f64.powi(b + 1) * u;
        if hi <= 1.0 {
            // both in the logarithmic regime: ln(2^a u) − ln(2^{b+1} u)
            return (a - b - 1) as f64 * std::f64::consts::LN_2;
        }
        if r <= 0.0 {
            return (a - b - 1) as f64 * std::f64::consts::LN_2;
        }
        psi_antiderivative(2f64.powi(a) * u) - psi_antiderivative(hi)
    }

    /// Annulus Δ_i = [2^{−i−1}√d, 2^{−i+1}√d].
    pub fn annulus(&self, i: i32) -> (f64, f64) {
        (2f64.powi(-i - 1) * self.sqrt_d, 2f64.powi(-i + 1) * self.sqrt_d)
    }

    /// j_ε = ⌊log₂(2√d/ε)⌋.
    pub fn j_of_eps(&self, eps: f64) -> i32 {
        let v = (2.0 * self.sqrt_d / eps).log2();
        // guard against ε exactly on the ladder landing a hair below an integer
        let r = v.round();
        if (v - r).abs() < 1e-12 {
            r as i32
        } else {
            v.floor() as i32
        }
    }

    /// Ladder ε_j = 2√d·2^{−j}.
    pub fn ladder_eps(&self, j: i32) -> f64 {
        2.0 * self.sqrt_d * 2f64.powi(-j)
    }
}

/// Radial mollifier profile ∝ ψ(4|x|), normalized to unit mass in R^d.
pub fn mollifier(d: usize, r: f64) -> f64 {
    static NORM: OnceLock<[f64; 2]> = OnceLock::new();
    let norms = NORM.get_or_init(|| {
        let rule = gauss_legendre(40);
        let one: f64 = 2.0 * (0.25 + rule.integrate(0.25, 0.5, |t| psi(4.0 * t)));
        let two: f64 = 2.0 * std::f64::consts::PI * (0.03125 + rule.integrate(0.25, 0.5, |t| psi(4.0 * t) * t));
        [1.0 / one, 1.0 / two]
    });
    psi(4.0 * r) * norms[d - 1]
}
