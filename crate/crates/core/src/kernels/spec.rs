//! Kernel specifications and the registry by name.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::symbol::RoughSymbol;
use crate::algebra::C64;
use crate::error::{invalid, io_err, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum KernelSpec {
    /// 1/(πx), d = 1.
    Hilbert,
    /// x_j/(2π|x|³) in d = 2 (j ∈ {0,1}); 1/(πx) in d = 1.
    Riesz { j: usize },
    /// Ω(x')/|x|^d.
    Rough { omega: RoughSymbol },
    /// χ_{x>0}/x, d = 1 (non-cancellative).
    OneSided,
    /// (re + i·im)·base.
    Scaled { base: Box<KernelSpec>, re: f64, im: f64 },
    /// (1 + a·cos(w(x+y)))/(π(x−y)), d = 1, not of convolution type.
    Modulated { amplitude: f64, frequency: f64 },
    Zero,
}

/// A kernel bound to a dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub d: usize,
    pub spec: KernelSpec,
}

impl Kernel {
    pub fn new(d: usize, spec: KernelSpec) -> Result<Self> {
        if d != 1 && d != 2 {
            return invalid(format!("unsupported dimension {d}"));
        }
        check(d, &spec)?;
        Ok(Kernel { d, spec })
    }

    pub fn hilbert() -> Self {
        Kernel { d: 1, spec: KernelSpec::Hilbert }
    }

    pub fn rough(omega: RoughSymbol) -> Self {
        Kernel { d: omega.d, spec: KernelSpec::Rough { omega } }
    }

    /// Registry: hilbert, riesz-j, one-sided, zero, rough:<symbol>, phased:<α>:<name>, custom:<file>.
    pub fn from_name(name: &str, d: usize) -> Result<Self> {
        let spec = parse_name(name, d)?;
        Kernel::new(d, spec)
    }

    pub fn name(&self) -> String {
        spec_name(&self.spec)
    }

    pub fn is_convolution(&self) -> bool {
        is_conv(&self.spec)
    }

    pub fn is_real(&self) -> bool {
        is_real(&self.spec)
    }

    /// Lipschitz exponent when the kernel is smooth off the diagonal.
    pub fn gamma(&self) -> Option<f64> {
        gamma(&self.spec)
    }

    /// Ω(θ) for homogeneous convolution kernels at a unit direction.
    pub fn omega(&self, dir: [f64; 2]) -> Option<C64> {
        omega(&self.spec, self.d, dir)
    }

    /// k(x, y); None on the diagonal.
    pub fn eval(&self, x: [f64; 2], y: [f64; 2]) -> Option<C64> {
        let z = [x[0] - y[0], x[1] - y[1]];
        let r = if self.d == 1 { z[0].abs() } else { z[0].hypot(z[1]) };
        if r == 0.0 {
            return None;
        }
        if let KernelSpec::Modulated { amplitude, frequency } = self.spec {
            let m = 1.0 + amplitude * (frequency * (x[0] + y[0])).cos();
            return Some(C64::new(m / (PI * z[0]), 0.0));
        }
        let dir = [z[0] / r, z[1] / r];
        let o = self.omega(dir)?;
        Some(o / r.powi(self.d as i32))
    }

    /// Real and imaginary parts as kernels (Re k, Im k).
    pub fn split(&self) -> (Kernel, Kernel) {
        match &self.spec {
            KernelSpec::Scaled { base, re, im } => (
                Kernel { d: self.d, spec: KernelSpec::Scaled { base: base.clone(), re: *re, im: 0.0 } },
                Kernel { d: self.d, spec: KernelSpec::Scaled { base: base.clone(), re: *im, im: 0.0 } },
            ),
            _ => (self.clone(), Kernel { d: self.d, spec: KernelSpec::Zero }),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.spec, KernelSpec::Zero)
    }
}

fn check(d: usize, spec: &KernelSpec) -> Result<()> {
    match spec {
        KernelSpec::Hilbert | KernelSpec::OneSided | KernelSpec::Modulated { .. } if d != 1 => {
            invalid(format!("kernel '{}' is one-dimensional", spec_name(spec)))
        }
        KernelSpec::Riesz { j } if *j >= d => invalid(format!("riesz-{} needs j < d", j + 1)),
        KernelSpec::Rough { omega } if omega.d != d => invalid("symbol dimension does not match"),
        KernelSpec::Scaled { base, .. } => check(d, base),
        _ => Ok(()),
    }
}

fn parse_name(name: &str, d: usize) -> Result<KernelSpec> {
    let name = name.trim();
    if let Some(sym) = name.strip_prefix("rough:") {
        return Ok(KernelSpec::Rough { omega: RoughSymbol::by_name(sym, d)? });
    }
    if let Some(rest) = name.strip_prefix("phased:") {
        let (alpha, base) = rest.split_once(':').ok_or_else(|| crate::NcczError::Parse(format!("expected phased:<angle>:<kernel>, got '{name}'")))?;
        let a: f64 = alpha.parse().map_err(|e| crate::NcczError::Parse(format!("phase '{alpha}': {e}")))?;
        return Ok(KernelSpec::Scaled { base: Box::new(parse_name(base, d)?), re: a.cos(), im: a.sin() });
    }
    if let Some(path) = name.strip_prefix("custom:") {
        let p = Path::new(path);
        let text = std::fs::read_to_string(p).map_err(io_err(p))?;
        return Ok(serde_json::from_str(&text)?);
    }
    if let Some(j) = name.strip_prefix("riesz-") {
        let j: usize = j.parse().map_err(|e| crate::NcczError::Parse(format!("riesz index '{j}': {e}")))?;
        if j == 0 {
            return invalid("riesz index starts at 1");
        }
        return Ok(KernelSpec::Riesz { j: j - 1 });
    }
    match name {
        "hilbert" => Ok(KernelSpec::Hilbert),
        "one-sided" => Ok(KernelSpec::OneSided),
        "zero" => Ok(KernelSpec::Zero),
        other => invalid(format!("unknown kernel '{other}'")),
    }
}

fn spec_name(spec: &KernelSpec) -> String {
    match spec {
        KernelSpec::Hilbert => "hilbert".into(),
        KernelSpec::Riesz { j } => format!("riesz-{}", j + 1),
        KernelSpec::Rough { .. } => "rough".into(),
        KernelSpec::OneSided => "one-sided".into(),
        KernelSpec::Scaled { base, re, im } => format!("phased:{}:{}", im.atan2(*re), spec_name(base)),
        KernelSpec::Modulated { .. } => "modulated".into(),
        KernelSpec::Zero => "zero".into(),
    }
}

fn is_conv(spec: &KernelSpec) -> bool {
    match spec {
        KernelSpec::Modulated { .. } => false,
        KernelSpec::Scaled { base, .. } => is_conv(base),
        _ => true,
    }
}

fn is_real(spec: &KernelSpec) -> bool {
    match spec {
        KernelSpec::Scaled { base, im, .. } => *im == 0.0 && is_real(base),
        _ => true,
    }
}

fn gamma(spec: &KernelSpec) -> Option<f64> {
    match spec {
        KernelSpec::Rough { .. } => None,
        KernelSpec::Scaled { base, .. } => gamma(base),
        _ => Some(1.0),
    }
}

fn omega(spec: &KernelSpec, d: usize, dir: [f64; 2]) -> Option<C64> {
    let real = |v: f64| Some(C64::new(v, 0.0));
    match spec {
        KernelSpec::Hilbert => real(dir[0].signum() / PI),
        KernelSpec::Riesz { j } => {
            if d == 1 {
                real(dir[0].signum() / PI)
            } else {
                real(dir[*j] / (2.0 * PI))
            }
        }
        KernelSpec::Rough { omega } => real(omega.at_direction(dir)),
        KernelSpec::OneSided => real(if dir[0] > 0.0 { 1.0 } else { 0.0 }),
        KernelSpec::Scaled { base, re, im } => omega(base, d, dir).map(|v| v * C64::new(*re, *im)),
        KernelSpec::Modulated { .. } => None,
        KernelSpec::Zero => real(0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry() {
        assert_eq!(Kernel::from_name("hilbert", 1).unwrap(), Kernel::hilbert());
        assert!(Kernel::from_name("hilbert", 2).is_err());
        assert!(Kernel::from_name("riesz-2", 2).is_ok());
        assert!(Kernel::from_name("riesz-2", 1).is_err());
        let k = Kernel::from_name("phased:0.5:hilbert", 1).unwrap();
        assert!(!k.is_real());
        let (re, im) = k.split();
        let x = [0.3, 0.0];
        let y = [0.1, 0.0];
        let sum = re.eval(x, y).unwrap() + C64::new(0.0, 1.0) * im.eval(x, y).unwrap();
        assert!((sum - k.eval(x, y).unwrap()).norm() < 1e-15);
    }

    #[test]
    fn riesz_values() {
        let k = Kernel::from_name("riesz-1", 2).unwrap();
        let v = k.eval([1.0, 0.0], [0.0, 0.0]).unwrap();
        assert!((v.re - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert!(k.eval([0.0, 0.0], [0.0, 0.0]).is_none());
    }
}
