use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dyadic::DyadicGrid;
use crate::error::{invalid, io_err, Result};

/// Geometric λ grid: `points` values from `lo` to `hi`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaSweep {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl LambdaSweep {
    pub fn values(&self) -> Vec<f64> {
        if self.points <= 1 {
            return vec![self.lo];
        }
        let r = (self.hi / self.lo).ln() / (self.points - 1) as f64;
        (0..self.points).map(|i| self.lo * (r * i as f64).exp()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Allowed factor of variation of a ratio across the λ sweep.
    pub sweep_factor: f64,
    /// Allowed relative change under one grid refinement.
    pub refinement: f64,
    /// Corpus max/median bound for ‖F_i‖₁/‖f‖₁.
    pub majorant_spread: f64,
    pub duality_gap: f64,
    /// Relative tolerance on fitted δ₂ decay against γ.
    pub decay: f64,
    pub rotation: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { sweep_factor: 4.0, refinement: 0.25, majorant_spread: 5.0, duality_gap: 1e-6, decay: 0.15, rotation: 1e-4 }
    }
}

/// Spike-cluster corpus used for weak-(1,1) stability.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Weak11Config {
    pub members: usize,
    pub k_min: i32,
    /// Finest level of the base grid; the refined run adds one level.
    pub k_max: i32,
    pub n: usize,
    /// λ_hi = lambda_top·(smallest cell eigenvalue), λ_lo = λ_hi/decades.
    pub lambda_top: f64,
    pub decades: f64,
    pub lambda_points: usize,
}

impl Default for Weak11Config {
    fn default() -> Self {
        Weak11Config { members: 50, k_min: -4, k_max: 10, n: 2, lambda_top: 0.6, decades: 1000.0, lambda_points: 4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CotlarConfig {
    pub members: usize,
    pub k_min: i32,
    pub k_max: i32,
    /// Fixed C in LHS ≤ C·RHS.
    pub constant: f64,
}

impl Default for CotlarConfig {
    fn default() -> Self {
        CotlarConfig { members: 50, k_min: -4, k_max: 5, constant: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModuliConfig {
    pub lipschitz_kernels: Vec<(String, usize)>,
    pub symbols: Vec<String>,
    pub m_max: u32,
    /// One C for Σδ₂(m) ≤ C(Dini + ‖Ω‖₂).
    pub dini_constant: f64,
}

impl Default for ModuliConfig {
    fn default() -> Self {
        ModuliConfig {
            lipschitz_kernels: vec![("hilbert".into(), 1), ("riesz-1".into(), 2), ("riesz-2".into(), 2)],
            symbols: vec!["cos".into(), "holder".into(), "sign".into()],
            m_max: 8,
            dini_constant: 4.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BauConfig {
    pub delta: f64,
    pub k_min: i32,
    pub k_max: i32,
    /// d = 2 run with an odd rough kernel on a 2^{2(k_max−k_min)} grid; None skips it.
    pub planar: Option<(i32, i32, String)>,
}

impl Default for BauConfig {
    fn default() -> Self {
        BauConfig { delta: 0.1, k_min: -2, k_max: 8, planar: Some((-1, 4, "rough:cos".into())) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub d: usize,
    pub k_min: i32,
    pub k_max: i32,
    pub n: usize,
    pub kernel: String,
    pub lambda: LambdaSweep,
    /// Ladder length J + 1; None uses the longest resolvable ladder.
    pub ladder: Option<usize>,
    pub corpus_size: usize,
    pub rank: usize,
    pub l1_band: (f64, f64),
    /// Members entering the maximal-norm solves.
    pub maxnorm_members: usize,
    pub tolerances: Tolerances,
    pub weak11: Weak11Config,
    pub cotlar: CotlarConfig,
    pub moduli: ModuliConfig,
    pub bau: BauConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 1,
            d: 1,
            k_min: -3,
            k_max: 7,
            n: 2,
            kernel: "hilbert".into(),
            lambda: LambdaSweep { lo: 0.3, hi: 3.0, points: 3 },
            ladder: None,
            corpus_size: 50,
            rank: 2,
            l1_band: (0.5, 2.0),
            maxnorm_members: 50,
            tolerances: Tolerances::default(),
            weak11: Weak11Config::default(),
            cotlar: CotlarConfig::default(),
            moduli: ModuliConfig::default(),
            bau: BauConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn grid(&self) -> Result<DyadicGrid> {
        DyadicGrid::new(self.d, self.k_min, self.k_max)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        if self.n == 0 || self.n > 8 {
            return invalid("matrix size n must be in 1..=8");
        }
        if self.rank == 0 || self.rank > self.n {
            return invalid("rank must be in 1..=n");
        }
        let (lo, hi) = self.l1_band;
        if !(lo > 0.0 && hi >= lo) {
            return invalid("l1_band must satisfy 0 < lo ≤ hi");
        }
        if !(self.lambda.lo > 0.0 && self.lambda.hi >= self.lambda.lo && self.lambda.points >= 1) {
            return invalid("λ sweep needs 0 < lo ≤ hi and at least one point");
        }
        if !(self.bau.delta > 0.0) {
            return invalid("bau.delta must be positive");
        }
        Ok(())
    }
}
