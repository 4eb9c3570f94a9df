//! Tabulated symbols Ω on the sphere S^{d−1} and their even/odd split and moduli.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, io_err, NcczError, Result};

pub const DEFAULT_ANGLES: usize = 512;

/// Ω on S^0 = {±1} (values [Ω(+1), Ω(−1)]) or on S^1 sampled at θ_a = 2πa/A.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoughSymbol {
    pub d: usize,
    pub values: Vec<f64>,
}

impl RoughSymbol {
    /// Build and subtract the angular mean.
    pub fn new(d: usize, values: Vec<f64>) -> Result<Self> {
        let mut s = Self::raw(d, values)?;
        let m = s.mean();
        for v in &mut s.values {
            *v -= m;
        }
        Ok(s)
    }

    /// No mean projection.
    pub fn raw(d: usize, values: Vec<f64>) -> Result<Self> {
        match d {
            1 if values.len() == 2 => {}
            1 => return invalid("a d=1 symbol has exactly two values"),
            2 if values.len() >= 8 => {}
            2 => return invalid("a d=2 symbol needs at least 8 angles"),
            _ => return invalid(format!("unsupported dimension {d}")),
        }
        if values.iter().any(|v| !v.is_finite()) {
            return invalid("symbol values must be finite");
        }
        Ok(RoughSymbol { d, values })
    }

    pub fn from_fn(d: usize, angles: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if d == 1 {
            return Self::new(1, vec![f(0.0), f(PI)]);
        }
        Self::new(2, (0..angles).map(|a| f(2.0 * PI * a as f64 / angles as f64)).collect())
    }

    /// Named symbols: cos, cos2, cos3, sin, sign, holder (odd |sin|^{1/2}), or a CSV path.
    pub fn by_name(name: &str, d: usize) -> Result<Self> {
        let f: fn(f64) -> f64 = match name {
            "cos" => f64::cos,
            "sin" => f64::sin,
            "cos2" => |t| (2.0 * t).cos(),
            "cos3" => |t| (3.0 * t).cos(),
            "sign" => |t| {
                let c = t.cos();
                if c > 1e-12 {
                    1.0
                } else if c < -1e-12 {
                    -1.0
                } else {
                    0.0
                }
            },
            "holder" => |t| {
                let c = t.cos();
                c.signum() * c.abs().sqrt()
            },
            other => {
                if let Some(path) = other.strip_prefix("csv:") {
                    return Self::load_csv(Path::new(path), d);
                }
                return invalid(format!("unknown symbol '{other}'"));
            }
        };
        Self::from_fn(d, DEFAULT_ANGLES, f)
    }

    /// CSV rows `angle,value` (radians) on a uniform grid; d=1 uses angles 0 and π.
    pub fn load_csv(path: &Path, d: usize) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let mut rows = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("angle") {
                continue;
            }
            let mut it = line.split(',').map(str::trim);
            let parse = |s: Option<&str>| -> Result<f64> {
                s.ok_or_else(|| NcczError::Parse(format!("{}:{}: expected angle,value", path.display(), ln + 1)))?
                    .parse::<f64>()
                    .map_err(|e| NcczError::Parse(format!("{}:{}: {e}", path.display(), ln + 1)))
            };
            let a = parse(it.next())?;
            let v = parse(it.next())?;
            rows.push((a, v));
        }
        rows.sort_by(|x, y| x.0.total_cmp(&y.0));
        Self::new(d, rows.into_iter().map(|r| r.1).collect())
    }

    pub fn angles(&self) -> usize {
        self.values.len()
    }

    /// Ω at angle θ (d=2: linear interpolation; d=1: θ ≈ 0 → +1, else −1).
    pub fn at_angle(&self, theta: f64) -> f64 {
        if self.d == 1 {
            return if theta.cos() >= 0.0 { self.values[0] } else { self.values[1] };
        }
        let a = self.values.len();
        let s = theta.rem_euclid(2.0 * PI) / (2.0 * PI) * a as f64;
        let k = (s.floor() as usize) % a;
        let u = s - s.floor();
        self.values[k] * (1.0 - u) + self.values[(k + 1) % a] * u
    }

    /// Ω at a unit direction.
    pub fn at_direction(&self, dir: [f64; 2]) -> f64 {
        if self.d == 1 {
            return if dir[0] >= 0.0 { self.values[0] } else { self.values[1] };
        }
        self.at_angle(dir[1].atan2(dir[0]))
    }

    /// Mean of Ω over the sphere (of the interpolant).
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// |∫ Ω dσ|.
    pub fn mean_defect(&self) -> f64 {
        (self.mean() * self.sphere_measure()).abs()
    }

    pub fn sphere_measure(&self) -> f64 {
        if self.d == 1 {
            2.0
        } else {
            2.0 * PI
        }
    }

    fn cell(&self) -> f64 {
        self.sphere_measure() / self.values.len() as f64
    }

    /// Index of the antipodal sample.
    fn antipode(&self, k: usize) -> usize {
        (k + self.values.len() / 2) % self.values.len()
    }

    /// (Ω_e, Ω_o); requires an even number of angles in d=2.
    pub fn even_odd(&self) -> Result<(RoughSymbol, RoughSymbol)> {
        if self.d == 2 && self.values.len() % 2 != 0 {
            return invalid("even/odd split needs an even number of angles");
        }
        let n = self.values.len();
        let mut e = vec![0.0; n];
        let mut o = vec![0.0; n];
        for k in 0..n {
            let a = self.antipode(k);
            e[k] = 0.5 * (self.values[k] + self.values[a]);
            o[k] = 0.5 * (self.values[k] - self.values[a]);
        }
        Ok((RoughSymbol { d: self.d, values: e }, RoughSymbol { d: self.d, values: o }))
    }

    /// ‖Ω‖_{L_q(S^{d−1})} of the interpolant (samplewise for d=1, Simpson-refined for d=2).
    pub fn lq_norm(&self, q: f64) -> f64 {
        if self.d == 1 {
            return self.values.iter().map(|v| v.abs().powf(q)).sum::<f64>().powf(1.0 / q);
        }
        let sub = 8;
        let a = self.values.len();
        let dt = 2.0 * PI / (a * sub) as f64;
        let s: f64 = (0..a * sub).map(|m| self.at_angle((m as f64 + 0.5) * dt).abs().powf(q)).sum();
        (s * dt).powf(1.0 / q)
    }

    pub fn l1_norm(&self) -> f64 {
        self.lq_norm(1.0)
    }

    pub fn is_odd(&self, tol: f64) -> bool {
        match self.even_odd() {
            Ok((e, _)) => e.values.iter().map(|v| v.abs()).sum::<f64>() * self.cell() <= tol,
            Err(_) => false,
        }
    }

    /// ω₂(δ) = sup_{|α| ≤ δ} (∫|Ω(θ) − Ω(θ+α)|²dθ)^{1/2}, sampled on grid rotations.
    pub fn omega2(&self, delta: f64) -> f64 {
        if self.d == 1 {
            return 0.0;
        }
        let a = self.values.len();
        let step = 2.0 * PI / a as f64;
        let sub = 4;
        let dt = step / sub as f64;
        let mut best: f64 = 0.0;
        // rotations by fractions of a grid step as well, so small δ is resolved
        let max_shift = ((delta / dt).floor() as usize).min(a * sub / 2);
        let mut shifts: Vec<f64> = (1..=max_shift).map(|s| s as f64 * dt).collect();
        shifts.push(delta.min(PI));
        for alpha in shifts {
            let s: f64 = (0..a * sub)
                .map(|m| {
                    let t = (m as f64 + 0.5) * dt;
                    let d = self.at_angle(t) - self.at_angle(t + alpha);
                    d * d
                })
                .sum();
            best = best.max((s * dt).sqrt());
        }
        best
    }

    /// ∫₀¹ ω₂(s)/s ds on a geometric grid down to one grid step/64.
    pub fn dini_integral(&self) -> f64 {
        if self.d == 1 {
            return 0.0;
        }
        let floor = 2.0 * PI / self.values.len() as f64 / 64.0;
        let pts = 24 * ((1.0 / floor).log2().ceil() as usize);
        let ratio = (1.0 / floor).powf(1.0 / pts as f64);
        let mut total = 0.0;
        let mut s0 = floor;
        let mut w0 = self.omega2(s0);
        // below the floor ω₂ is linear in s, ∫₀^floor ω₂(s)/s ds = ω₂(floor)
        total += w0;
        for _ in 0..pts {
            let s1 = s0 * ratio;
            let w1 = self.omega2(s1);
            total += 0.5 * (w0 + w1) * (s1 / s0).ln();
            s0 = s1;
            w0 = w1;
        }
        total
    }

    /// ∫|Ω| log(2 + |Ω|) dσ.
    pub fn llogl(&self) -> f64 {
        self.values.iter().map(|v| v.abs() * (2.0 + v.abs()).ln()).sum::<f64>() * self.cell()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OmegaReport {
    pub mean_defect: f64,
    pub even_l1: f64,
    pub odd_l1: f64,
    pub l2: f64,
    pub dini: f64,
    pub llogl: f64,
    pub omega2: Vec<(f64, f64)>,
}

pub fn omega_tools(omega: &RoughSymbol, deltas: &[f64]) -> Result<OmegaReport> {
    let (e, o) = omega.even_odd()?;
    Ok(OmegaReport {
        mean_defect: omega.mean_defect(),
        even_l1: e.l1_norm(),
        odd_l1: o.l1_norm(),
        l2: omega.lq_norm(2.0),
        dini: omega.dini_integral(),
        llogl: omega.llogl(),
        omega2: deltas.iter().map(|&d| (d, omega.omega2(d))).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn odd_symbol_has_zero_even_part() {
        let s = RoughSymbol::by_name("cos", 2).unwrap();
        let (e, o) = s.even_odd().unwrap();
        assert!(e.values.iter().all(|v| v.abs() < 1e-15));
        assert!(o.values.iter().zip(&s.values).all(|(a, b)| (a - b).abs() < 1e-15));
        assert!(s.is_odd(1e-10));
    }

    #[test]
    fn constant_symbol() {
        let s = RoughSymbol::raw(2, vec![1.5; 64]).unwrap();
        assert!(s.omega2(0.3) < 1e-14);
        assert!(s.dini_integral() < 1e-12);
        assert!(s.mean_defect() > 1.0);
        assert!(RoughSymbol::new(2, vec![1.5; 64]).unwrap().mean_defect() < 1e-12);
    }

    #[test]
    fn cos_modulus_matches_closed_form() {
        // ∫|cos θ − cos(θ+α)|² dθ = 4π sin²(α/2)
        let s = RoughSymbol::by_name("cos", 2).unwrap();
        for &a in &[0.05, 0.3, 1.0] {
            let exact = (4.0 * PI).sqrt() * (a / 2.0f64).sin();
            let got = s.omega2(a);
            assert!((got - exact).abs() / exact < 2e-3, "{a}: {got} vs {exact}");
        }
        // ∫₀¹ 2√π sin(s/2)/s ds
        let exact = crate::quadrature::integrate_adaptive(|t| (4.0 * PI).sqrt() * (t / 2.0).sin() / t, 0.0, 1.0, 1e-13, 100).0;
        assert!((s.dini_integral() - exact).abs() / exact < 0.01);
    }

    #[test]
    fn omega2_is_monotone() {
        let s = RoughSymbol::by_name("sign", 2).unwrap();
        let mut last = 0.0;
        for k in 1..40 {
            let w = s.omega2(0.02 * k as f64);
            assert!(w >= last - 1e-15);
            last = w;
        }
    }
}
