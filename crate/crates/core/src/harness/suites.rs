//! The six acceptance suites. Each returns a RunReport; members run in order, parallelism
//! lives inside the numerical kernels, so reports do not depend on the thread count.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::algebra::spectral::max_eig;
use crate::algebra::CMatrix;
use crate::certificates::{bau_cauchy_test, compressed_sup, cotlar_norm_check, elementary_tensor_check, Weak11Context};
use crate::cz::{decompose, default_s, validate};
use crate::dyadic::{cube_averages, hl_average, DyadicGrid, OperatorField};
use crate::error::{invalid, NcczError, Result};
use crate::kernels::{delta_q_modulus, fitted_decay_exponent, Kernel, ModulusSamples, RoughSymbol};
use crate::maxnorm::{strong_max_norm, MaxNormP, MaximalFamily};
use crate::operators::{rotation_method, truncated_czo, TruncationLadder};
use crate::report::{Check, ValidationReport};

use super::config::ExperimentConfig;
use super::corpus::{generate_corpus, gram_member, member_rng, prolong, regression_inputs, restrict, spike_member};
use super::report::{RunReport, Sweep, TestRecord};

/// Stream offsets keep the suite-specific corpora independent of the main one.
const SPIKE_STREAMS: u64 = 1 << 32;
const COTLAR_STREAMS: u64 = 2 << 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    CzDecomp,
    MaxNorm,
    Weak11,
    Cotlar,
    Rough,
    Bau,
}

impl Suite {
    pub const ALL: [Suite; 6] = [Suite::CzDecomp, Suite::MaxNorm, Suite::Weak11, Suite::Cotlar, Suite::Rough, Suite::Bau];

    pub fn name(self) -> &'static str {
        match self {
            Suite::CzDecomp => "czdecomp",
            Suite::MaxNorm => "maxnorm",
            Suite::Weak11 => "weak11",
            Suite::Cotlar => "cotlar",
            Suite::Rough => "rough",
            Suite::Bau => "bau",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = NcczError;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| {
            NcczError::InvalidArgument(format!("unknown suite '{s}' (expected one of czdecomp, maxnorm, weak11, cotlar, rough, bau)"))
        })
    }
}

struct Clock {
    start: Instant,
    timings: BTreeMap<String, f64>,
}

impl Clock {
    fn new() -> Self {
        Clock { start: Instant::now(), timings: BTreeMap::new() }
    }

    fn lap(&mut self, stage: &str) {
        let t = self.start.elapsed().as_secs_f64();
        let before: f64 = self.timings.values().sum();
        self.timings.insert(stage.to_string(), t - before);
    }
}

pub fn run_suite(cfg: &ExperimentConfig, suite: Suite) -> Result<RunReport> {
    cfg.validate()?;
    let mut clock = Clock::new();
    let (tests, sweeps) = match suite {
        Suite::CzDecomp => czdecomp(cfg, &mut clock)?,
        Suite::MaxNorm => maxnorm(cfg, &mut clock)?,
        Suite::Weak11 => weak11(cfg, &mut clock)?,
        Suite::Cotlar => cotlar(cfg, &mut clock)?,
        Suite::Rough => rough(cfg, &mut clock)?,
        Suite::Bau => bau(cfg, &mut clock)?,
    };
    clock.lap("report");
    Ok(RunReport::new(suite.name(), cfg, tests, sweeps, clock.timings))
}

/// Runs on a dedicated pool of `threads` workers (None: rayon's default).
pub fn run_suite_with_threads(cfg: &ExperimentConfig, suite: Suite, threads: Option<usize>) -> Result<RunReport> {
    match threads {
        None => run_suite(cfg, suite),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| NcczError::InvalidArgument(format!("thread pool: {e}")))?;
            pool.install(|| run_suite(cfg, suite))
        }
    }
}

fn prefixed(into: &mut ValidationReport, prefix: &str, from: &ValidationReport) {
    for (k, v) in from {
        into.insert(format!("{prefix}{k}"), v.clone());
    }
}

fn ladder_for(cfg: &ExperimentConfig, g: &DyadicGrid) -> TruncationLadder {
    let full = TruncationLadder::default_for(g);
    match cfg.ladder {
        Some(len) if len >= 1 && len < full.len() => TruncationLadder { d: full.d, epsilons: full.epsilons[..len].to_vec() },
        _ => full,
    }
}

/// max/min of a positive list; ∞ when some entry vanishes.
fn spread(xs: &[f64]) -> f64 {
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m == 0 {
        0.0
    } else if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

type Output = (Vec<TestRecord>, Vec<Sweep>);

fn czdecomp(cfg: &ExperimentConfig, clock: &mut Clock) -> Result<Output> {
    let corpus = generate_corpus(cfg)?;
    clock.lap("corpus");
    let s = default_s(cfg.d);
    let mut tests = Vec::new();
    let mut sweep = Sweep::new("zeta_deficit");
    for m in &corpus {
        for (i, &lambda) in cfg.lambda.values().iter().enumerate() {
            let mut metrics = BTreeMap::from([("lambda".to_string(), lambda), ("l1".to_string(), m.l1)]);
            let dec = match decompose(&m.field, lambda, s) {
                Ok(d) => d,
                Err(NcczError::CoarsestLevelViolation { .. }) => {
                    metrics.insert("skipped".into(), 1.0);
                    tests.push(TestRecord::new(format!("decomposition.lam{i}"), Some(m.label.clone()), ValidationReport::new(), metrics));
                    continue;
                }
                Err(e) => return Err(e),
            };
            let checks = validate(&dec, &m.field)?;
            let zdef = dec.zeta.map(|_, z| &CMatrix::identity(m.field.dim()) - z).trace_phi_real();
            metrics.insert("zeta_deficit".into(), zdef);
            metrics.insert("reconstruction_residual".into(), dec.reconstruction_residual);
            metrics.insert("stopping_levels".into(), dec.family.stopping_levels().len() as f64);
            sweep.push(&m.label, lambda, zdef * lambda / m.l1);
            tests.push(TestRecord::new(format!("decomposition.lam{i}"), Some(m.label.clone()), checks, metrics));
        }
    }
    clock.lap("decompose");
    Ok((tests, vec![sweep]))
}

fn maxnorm(cfg: &ExperimentConfig, clock: &mut Clock) -> Result<Output> {
    let corpus = generate_corpus(cfg)?;
    clock.lap("corpus");
    let tol = cfg.tolerances.duality_gap;
    let mut tests = Vec::new();
    let mut sweep = Sweep::new("strong_norms");

    // fixed instances
    {
        let g = DyadicGrid::new(1, 0, 1)?;
        let f = CMatrix::from_real_diag(&[8.0, -8.0]);
        let fam = MaximalFamily::unlabeled(vec![OperatorField::constant(g, f)])?;
        let cert = strong_max_norm(&fam, MaxNormP::One)?;
        let mut checks = ValidationReport::new();
        checks.insert("below_tr_g".into(), Check::lt(cert.objective, 20.0));
        checks.insert("equals_tr_abs_f".into(), Check::le((cert.objective - 16.0).abs(), 1e-4));
        checks.insert("gap".into(), Check::le(cert.relative_gap(), tol));
        tests.push(TestRecord::new("counterexample", None, checks, BTreeMap::from([("objective".into(), cert.objective)])));
    }

    let take = cfg.maxnorm_members.min(corpus.len());
    for m in &corpus[..take] {
        let fine = m.field.grid();
        let coarse = DyadicGrid::new(fine.d, fine.k_min, (fine.k_max - 2).max(fine.k_min + 1))?;
        let f = restrict(&m.field, coarse)?;
        let h = coarse.cell_side();
        let avgs: Vec<OperatorField> = [2.0, 4.0, 8.0].iter().map(|&r| hl_average(&f, r * h)).collect::<Result<_>>()?;
        let members = vec![f.clone(), avgs[0].sub(&f), avgs[1].sub(&avgs[0]), avgs[2].sub(&avgs[1])];
        let members: Vec<OperatorField> = members.into_iter().map(|x| x.map(|_, v| v.hermitian_part())).collect();
        let fam = MaximalFamily::unlabeled(members.clone())?;
        let mut checks = ValidationReport::new();
        let mut metrics = BTreeMap::new();
        for p in [MaxNormP::One, MaxNormP::Two] {
            let cert = strong_max_norm(&fam, p)?;
            let tag = if p == MaxNormP::One { "p1" } else { "p2" };
            checks.insert(format!("{tag}.feasible"), Check::flag(cert.feasible, -cert.feasibility_slack, 0.0));
            checks.insert(format!("{tag}.gap"), Check::le(cert.relative_gap(), tol));
            metrics.insert(format!("{tag}.objective"), cert.objective);
            sweep.push(tag, sweep.series.get(tag).map_or(0, |s| s.len()) as f64, cert.objective);
        }
        // one member: p = 1 optimum is ‖x‖₁
        let single = MaximalFamily::unlabeled(vec![members[1].clone()])?;
        let cert = strong_max_norm(&single, MaxNormP::One)?;
        let exact = members[1].norm(1.0)?;
        checks.insert("single_member_trace_abs".into(), Check::le((cert.objective - exact).abs(), 1e-6));
        // traces as scalars: the classical ‖sup_k |x_k|‖_p
        let scalars: Vec<OperatorField> = members
            .iter()
            .map(|x| OperatorField::from_scalars(coarse, &x.values().iter().map(|v| v.trace().re).collect::<Vec<_>>()))
            .collect::<Result<_>>()?;
        let sfam = MaximalFamily::unlabeled(scalars.clone())?;
        let vol = coarse.cell_volume();
        let sup: Vec<f64> = (0..coarse.cell_count()).map(|c| scalars.iter().map(|x| x.value(c)[(0, 0)].re.abs()).fold(0.0, f64::max)).collect();
        for (p, pv) in [(MaxNormP::One, 1.0), (MaxNormP::Two, 2.0)] {
            let cert = strong_max_norm(&sfam, p)?;
            let classical = (sup.iter().map(|s| s.powf(pv)).sum::<f64>() * vol).powf(1.0 / pv);
            checks.insert(format!("scalar_reduction_p{pv}"), Check::le((cert.objective - classical).abs(), 1e-8));
        }
        tests.push(TestRecord::new("strong_norm", Some(m.label.clone()), checks, metrics));
    }
    clock.lap("solve");
    Ok((tests, vec![sweep]))
}

struct Weak11Point {
    deficit_ratio: f64,
    sup_ratio: f64,
    f1: f64,
    f2: f64,
}

fn weak11(cfg: &ExperimentConfig, clock: &mut Clock) -> Result<Output> {
    let wc = &cfg.weak11;
    let kernel = Kernel::hilbert();
    let s = default_s(1);
    let tol = &cfg.tolerances;
    let mut tests = Vec::new();
    let mut dr_sweep = Sweep::new("deficit_ratio");
    let mut sr_sweep = Sweep::new("sup_ratio");
    let mut by_j = Sweep::new("partial_by_j");
    let mut f1_all = Vec::new();
    let mut f2_all = Vec::new();
    for i in 0..wc.members {
        let label = format!("spikes-{i}");
        let (base, hmin) = spike_member(wc, cfg.seed, SPIKE_STREAMS + i as u64)?;
        let hi = wc.lambda_top * hmin;
        // below ~‖f‖₁/φ(1) the bound holds with e = 0; start well clear of that and of the coarsest averages
        let coarse = cube_averages(&base, wc.k_min)?.iter().map(max_eig).collect::<Result<Vec<_>>>()?.into_iter().fold(0.0, f64::max);
        let trivial = base.norm(1.0)? / (base.dim() as f64 * base.grid().box_side());
        let lo = (hi / wc.decades).max(16.0 * trivial).max(2.0 * coarse).min(hi);
        let lambdas = super::config::LambdaSweep { lo, hi, points: wc.lambda_points }.values();
        let fine_grid = DyadicGrid::new(1, wc.k_min, wc.k_max + 1)?;
        let fine = prolong(&base, fine_grid)?;
        let mut checks = ValidationReport::new();
        let mut metrics = BTreeMap::from([("min_cell_eigenvalue".to_string(), hmin)]);
        let mut points: Vec<Vec<Weak11Point>> = Vec::new();
        for (tag, f) in [("base", &base), ("refined", &fine)] {
            let ctx = Weak11Context::new(&kernel, f, TruncationLadder::default_for(f.grid()))?;
            let mut pts = Vec::new();
            for (li, &lambda) in lambdas.iter().enumerate() {
                let r = ctx.certify(lambda, s)?;
                prefixed(&mut checks, &format!("{tag}.lam{li}."), &r.checks);
                if tag == "base" {
                    dr_sweep.push(&label, lambda, r.deficit_ratio);
                    sr_sweep.push(&label, lambda, r.sup_ratio);
                    if i == 0 && li == lambdas.len() / 2 {
                        let e = r.e.as_ref().expect("projection kept");
                        for (j, p) in ctx.on_f.partial.iter().enumerate() {
                            by_j.push("sup_e_partial_over_lambda", j as f64, compressed_sup(e, std::slice::from_ref(p))? / lambda);
                        }
                    }
                }
                metrics.insert(format!("{tag}.lam{li}.deficit_ratio"), r.deficit_ratio);
                metrics.insert(format!("{tag}.lam{li}.sup_ratio"), r.sup_ratio);
                pts.push(Weak11Point { deficit_ratio: r.deficit_ratio, sup_ratio: r.sup_ratio, f1: r.f1_l1 / r.f_l1, f2: r.f2_l1 / r.f_l1 });
            }
            let dr: Vec<f64> = pts.iter().map(|p| p.deficit_ratio).collect();
            let sr: Vec<f64> = pts.iter().map(|p| p.sup_ratio).collect();
            checks.insert(format!("{tag}.deficit_ratio_sweep"), Check::le(spread(&dr), tol.sweep_factor));
            checks.insert(format!("{tag}.sup_ratio_sweep"), Check::le(spread(&sr), tol.sweep_factor));
            points.push(pts);
        }
        for (li, (b, r)) in points[0].iter().zip(&points[1]).enumerate() {
            let rel = |x: f64, y: f64| if x > 0.0 { (y / x - 1.0).abs() } else { f64::INFINITY };
            checks.insert(format!("refinement.lam{li}.deficit_ratio"), Check::le(rel(b.deficit_ratio, r.deficit_ratio), tol.refinement));
            checks.insert(format!("refinement.lam{li}.sup_ratio"), Check::le(rel(b.sup_ratio, r.sup_ratio), tol.refinement));
        }
        let f1 = points.iter().flatten().map(|p| p.f1).fold(0.0, f64::max);
        let f2 = points.iter().flatten().map(|p| p.f2).fold(0.0, f64::max);
        metrics.insert("f1_ratio".into(), f1);
        metrics.insert("f2_ratio".into(), f2);
        f1_all.push(f1);
        f2_all.push(f2);
        tests.push(TestRecord::new("weak11_stability", Some(label), checks, metrics));
        clock.lap(&format!("member{i}"));
    }
    if !f1_all.is_empty() {
        let mut checks = ValidationReport::new();
        let mut metrics = BTreeMap::new();
        for (name, xs) in [("f1", &f1_all), ("f2", &f2_all)] {
            let med = median(xs);
            let top = xs.iter().copied().fold(0.0, f64::max);
            let ratio = if med > 0.0 { top / med } else if top == 0.0 { 1.0 } else { f64::INFINITY };
            checks.insert(format!("{name}_max_over_median"), Check::le(ratio, tol.majorant_spread));
            metrics.insert(format!("{name}_median"), med);
            metrics.insert(format!("{name}_max"), top);
        }
        tests.push(TestRecord::new("majorant_spread", None, checks, metrics));
    }
    Ok((tests, vec![dr_sweep, sr_sweep, by_j]))
}

fn cotlar(cfg: &ExperimentConfig, clock: &mut Clock) -> Result<Output> {
    let cc = &cfg.cotlar;
    let kernel = Kernel::hilbert();
    let base_grid = DyadicGrid::new(1, cc.k_min, cc.k_max)?;
    let fine_grid = DyadicGrid::new(1, cc.k_min, cc.k_max + 1)?;
    let mut tests = Vec::new();
    let mut sweep = Sweep::new("ratio");
    let mut env = Sweep::new("envelope");
    for i in 0..cc.members {
        let mut rng = member_rng(cfg.seed, COTLAR_STREAMS + i as u64);
        let base = gram_member(base_grid, 2, cfg.rank.min(2), cfg.l1_band, &mut rng)?;
        let fine = prolong(&base, fine_grid)?;
        let mut checks = ValidationReport::new();
        let mut metrics = BTreeMap::new();
        let mut ratios = Vec::new();
        for (tag, f) in [("base", &base), ("refined", &fine)] {
            let r = cotlar_norm_check(&kernel, f, MaxNormP::Two, &TruncationLadder::default_for(f.grid()))?;
            prefixed(&mut checks, &format!("{tag}."), &r.checks);
            checks.insert(format!("{tag}.ratio_bounded"), Check::le(r.ratio, cc.constant));
            metrics.insert(format!("{tag}.ratio"), r.ratio);
            metrics.insert(format!("{tag}.lhs"), r.lhs);
            metrics.insert(format!("{tag}.rhs"), r.rhs);
            metrics.insert(format!("{tag}.substitution_error"), r.substitution_error);
            metrics.insert(format!("{tag}.envelope_constant"), r.envelope.constant);
            sweep.push(tag, i as f64, r.ratio);
            if i == 0 && tag == "base" {
                for s in &r.envelope.samples {
                    let rho = s.x[0].hypot(s.x[1]) / s.eps;
                    env.push(&format!("eps={:e}", s.eps), if s.x[0] < 0.0 { -rho } else { rho }, s.normalized);
                }
            }
            ratios.push(r.ratio);
        }
        let rel = if ratios[0] > 0.0 { (ratios[1] / ratios[0] - 1.0).abs() } else { f64::INFINITY };
        checks.insert("refinement".into(), Check::le(rel, cfg.tolerances.refinement));
        tests.push(TestRecord::new("cotlar", Some(format!("gram-{i}")), checks, metrics));
    }
    clock.lap("cotlar");
    Ok((tests, vec![sweep, env]))
}

fn rough(cfg: &ExperimentConfig, clock: &mut Clock) -> Result<Output> {
    let mc = &cfg.moduli;
    let ms: Vec<u32> = (1..=mc.m_max).collect();
    let mut tests = Vec::new();
    let mut sweep = Sweep::new("delta2");
    for (name, d) in &mc.lipschitz_kernels {
        let k = Kernel::from_name(name, *d)?;
        let Some(gamma) = k.gamma() else {
            return invalid(format!("kernel '{name}' has no Lipschitz exponent"));
        };
        let samples = ModulusSamples::for_kernel(&k);
        let d2: Vec<f64> = ms.iter().map(|&m| delta_q_modulus(&k, m, 2.0, &samples)).collect();
        for (&m, &v) in ms.iter().zip(&d2) {
            sweep.push(name, m as f64, v);
        }
        let fit = fitted_decay_exponent(&ms, &d2);
        let mut checks = ValidationReport::new();
        checks.insert("decay_exponent".into(), Check::le((fit - gamma).abs(), cfg.tolerances.decay * gamma));
        tests.push(TestRecord::new("lipschitz_decay", Some(format!("{name}/d{d}")), checks, BTreeMap::from([("fitted".into(), fit), ("gamma".into(), gamma)])));
    }
    clock.lap("lipschitz");
    for sym in &mc.symbols {
        let omega = RoughSymbol::by_name(sym, 2)?;
        let k = Kernel::rough(omega.clone());
        let samples = ModulusSamples::for_kernel(&k);
        let d2: Vec<f64> = ms.iter().map(|&m| delta_q_modulus(&k, m, 2.0, &samples)).collect();
        for (&m, &v) in ms.iter().zip(&d2) {
            sweep.push(&format!("rough:{sym}"), m as f64, v);
        }
        let sum: f64 = d2.iter().sum();
        let bound = omega.dini_integral() + omega.lq_norm(2.0);
        let mut checks = ValidationReport::new();
        checks.insert("dini_bound".into(), Check::le(sum, mc.dini_constant * bound));
        let metrics = BTreeMap::from([("delta2_sum".to_string(), sum), ("dini_plus_l2".to_string(), bound), ("ratio".to_string(), sum / bound)]);
        tests.push(TestRecord::new("dini_bound", Some(sym.clone()), checks, metrics));
    }
    clock.lap("dini");
    // method of rotations against direct truncation, odd symbol
    {
        let g = DyadicGrid::new(2, 0, 5)?;
        let f = OperatorField::from_fn(g, 1, |x| {
            let r2 = (x[0] - 0.5).powi(2) + (x[1] - 0.45).powi(2);
            CMatrix::scalar(1, (-r2 * 12.0).exp())
        });
        let omega = RoughSymbol::by_name("cos", 2)?;
        let eps = 0.1;
        let direct = truncated_czo(&Kernel::rough(omega.clone()), &f, eps)?;
        let rot = rotation_method(&omega, &f, eps, 2048)?;
        let mut worst: f64 = 0.0;
        for c in 0..g.cell_count() {
            let x = g.cell_center(c);
            if x.iter().all(|&t| (0.25..0.75).contains(&t)) {
                worst = worst.max((direct.value(c)[(0, 0)] - rot.value(c)[(0, 0)]).norm());
            }
        }
        let mut checks = ValidationReport::new();
        checks.insert("rotation_vs_direct".into(), Check::le(worst, cfg.tolerances.rotation));
        tests.push(TestRecord::new("rotation", Some("cos".into()), checks, BTreeMap::from([("max_difference".into(), worst)])));
    }
    clock.lap("rotation");
    Ok((tests, vec![sweep]))
}

fn bau(cfg: &ExperimentConfig, clock: &mut Clock) -> Result<Output> {
    let bc = &cfg.bau;
    let mut runs: Vec<(DyadicGrid, Kernel)> = vec![(DyadicGrid::new(1, bc.k_min, bc.k_max)?, Kernel::hilbert())];
    if let Some((lo, hi, name)) = &bc.planar {
        runs.push((DyadicGrid::new(2, *lo, *hi)?, Kernel::from_name(name, 2)?));
    }
    let mut tests = Vec::new();
    let mut env = Sweep::new("envelope");
    let mut cauchy = Sweep::new("cauchy");
    for (g, kernel) in runs {
        let ladder = ladder_for(cfg, &g);
        let tag = format!("{}/d{}", kernel.name(), g.d);
        for m in regression_inputs(g, cfg.n)? {
            let r = bau_cauchy_test(&m.field, &kernel, &ladder, bc.delta)?;
            let label = format!("{tag}/{}", m.label);
            for (e, v) in ladder.epsilons.iter().zip(&r.envelope) {
                env.push(&label, *e, *v);
            }
            if m.label == "indicator" {
                for (k, row) in r.cauchy.iter().enumerate() {
                    for (l, v) in row.iter().enumerate() {
                        cauchy.push(&format!("{tag}/k={k}"), l as f64, *v);
                    }
                }
            }
            let metrics = BTreeMap::from([
                ("deficit".to_string(), r.deficit),
                ("n0".to_string(), r.n0 as f64),
                ("reached_n".to_string(), r.reached_n as f64),
                ("envelope_first".to_string(), r.envelope.first().copied().unwrap_or(0.0)),
                ("envelope_last".to_string(), r.envelope.last().copied().unwrap_or(0.0)),
                ("decay_slope".to_string(), r.decay_slope.unwrap_or(f64::NAN)),
            ]);
            tests.push(TestRecord::new("bau_cauchy", Some(label), r.checks, metrics));
        }
        let centre = [0.5 * g.box_side(), if g.d == 2 { 0.5 * g.box_side() } else { 0.0 }];
        let bump = CMatrix::from_real_rows(&[&[1.0, 0.4], &[0.4, 0.3]]);
        let m = if cfg.n >= 2 { super::corpus::embed_block(&bump, cfg.n) } else { CMatrix::identity(1) };
        let t = elementary_tensor_check(&kernel, &g, &ladder, centre, 0.45 * g.box_side(), &m)?;
        let metrics = BTreeMap::from([("decay_slope".to_string(), t.decay_slope.unwrap_or(f64::NAN))]);
        tests.push(TestRecord::new("elementary_tensor", Some(tag.clone()), t.checks, metrics));
        clock.lap(&tag);
    }
    Ok((tests, vec![env, cauchy]))
}
