use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{io_err, Result};
use crate::report::{failures, ValidationReport};

use super::config::ExperimentConfig;

pub const RUN_REPORT_SCHEMA: u32 = 1;
pub const PLOT_SCHEMA: u32 = 1;
pub const PLOT_HEADER: &str = "suite,sweep,series,x,y";

#[derive(Clone, Debug, Serialize)]
pub struct TestRecord {
    pub name: String,
    pub member: Option<String>,
    pub passed: bool,
    pub checks: ValidationReport,
    pub metrics: BTreeMap<String, f64>,
}

impl TestRecord {
    pub fn new(name: impl Into<String>, member: Option<String>, checks: ValidationReport, metrics: BTreeMap<String, f64>) -> Self {
        let passed = crate::report::all_hold(&checks);
        TestRecord { name: name.into(), member, passed, checks, metrics }
    }

    pub fn failures(&self) -> Vec<String> {
        failures(&self.checks)
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Sweep {
    pub name: String,
    /// series name → (x, y) points
    pub series: BTreeMap<String, Vec<(f64, f64)>>,
}

impl Sweep {
    pub fn new(name: impl Into<String>) -> Self {
        Sweep { name: name.into(), series: BTreeMap::new() }
    }

    pub fn push(&mut self, series: &str, x: f64, y: f64) {
        self.series.entry(series.to_string()).or_default().push((x, y));
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Environment {
    pub version: String,
    pub os: String,
    pub arch: String,
    pub threads: usize,
}

impl Environment {
    pub fn current() -> Self {
        Environment {
            version: env!("CARGO_PKG_VERSION").into(),
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
            threads: rayon::current_num_threads(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub tests: usize,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub schema: u32,
    pub suite: String,
    pub config: ExperimentConfig,
    pub summary: Summary,
    pub tests: Vec<TestRecord>,
    pub sweeps: Vec<Sweep>,
    pub environment: Environment,
    /// Wall-clock seconds per stage.
    pub timings: BTreeMap<String, f64>,
}

impl RunReport {
    pub fn new(suite: &str, config: &ExperimentConfig, tests: Vec<TestRecord>, sweeps: Vec<Sweep>, timings: BTreeMap<String, f64>) -> Self {
        let passed = tests.iter().filter(|t| t.passed).count();
        RunReport {
            schema: RUN_REPORT_SCHEMA,
            suite: suite.into(),
            config: config.clone(),
            summary: Summary { tests: tests.len(), passed, failed: tests.len() - passed },
            tests,
            sweeps,
            environment: Environment::current(),
            timings,
        }
    }

    pub fn passed(&self) -> bool {
        self.summary.failed == 0
    }

    /// Everything except timings and the environment, serialized: equal strings mean
    /// bit-identical reported numbers (floats are written round-trip exact).
    pub fn numbers(&self) -> String {
        #[derive(Serialize)]
        struct View<'a> {
            schema: u32,
            suite: &'a str,
            config: &'a ExperimentConfig,
            summary: &'a Summary,
            tests: &'a [TestRecord],
            sweeps: &'a [Sweep],
        }
        serde_json::to_string(&View {
            schema: self.schema,
            suite: &self.suite,
            config: &self.config,
            summary: &self.summary,
            tests: &self.tests,
            sweeps: &self.sweeps,
        })
        .expect("report serializes")
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(io_err(path))
    }
}

fn csv_number(v: f64) -> String {
    format!("{v:e}")
}

fn sweep_csv(suite: &str, s: &Sweep) -> String {
    let mut out = String::from(PLOT_HEADER);
    out.push('\n');
    for (series, pts) in &s.series {
        for &(x, y) in pts {
            let _ = writeln!(out, "{suite},{},{series},{},{}", s.name, csv_number(x), csv_number(y));
        }
    }
    out
}

fn sweep_svg(suite: &str, s: &Sweep) -> String {
    let (w, h, pad) = (640.0, 400.0, 48.0);
    let pts: Vec<(f64, f64)> = s.series.values().flatten().copied().filter(|p| p.0.is_finite() && p.1.is_finite()).collect();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !(x1 > x0) {
        x1 = x0 + 1.0;
    }
    if !(y1 > y0) {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);
    let palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"];
    let mut out = format!(r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="11">"#);
    let _ = write!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = write!(out, r#"<text x="{pad}" y="20">{suite} / {}</text>"#, s.name);
    let _ = write!(out, r#"<line x1="{pad}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#, h - pad, w - pad, h - pad);
    let _ = write!(out, r#"<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{}" stroke="black"/>"#, h - pad);
    let _ = write!(out, r#"<text x="{pad}" y="{}">{x0:.3e}</text><text x="{}" y="{}" text-anchor="end">{x1:.3e}</text>"#, h - pad + 16.0, w - pad, h - pad + 16.0);
    let _ = write!(out, r#"<text x="4" y="{}">{y0:.3e}</text><text x="4" y="{}">{y1:.3e}</text>"#, h - pad, pad);
    for (i, (name, series)) in s.series.iter().enumerate() {
        let colour = palette[i % palette.len()];
        let path: Vec<String> =
            series.iter().filter(|p| p.0.is_finite() && p.1.is_finite()).map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = write!(out, r#"<polyline fill="none" stroke="{colour}" points="{}"><title>{name}</title></polyline>"#, path.join(" "));
    }
    out.push_str("</svg>\n");
    out
}

/// One `<suite>_<sweep>.csv` per sweep (long format, header `suite,sweep,series,x,y`), plus an SVG
/// line plot per sweep when requested. Returns the written paths.
pub fn emit_plots(report: &RunReport, dir: &Path, svg: bool) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    for s in &report.sweeps {
        let stem = format!("{}_{}", report.suite, s.name);
        let path = dir.join(format!("{stem}.csv"));
        std::fs::write(&path, sweep_csv(&report.suite, s)).map_err(io_err(&path))?;
        written.push(path);
        if svg {
            let path = dir.join(format!("{stem}.svg"));
            std::fs::write(&path, sweep_svg(&report.suite, s)).map_err(io_err(&path))?;
            written.push(path);
        }
    }
    Ok(written)
}
