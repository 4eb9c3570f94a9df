use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use nccz::certificates::{bau_cauchy_test, compressed_sup, Weak11Context, Weak11Report};
use nccz::cz::{decompose, default_s, validate};
use nccz::dyadic::io::{load_field, save_field};
use nccz::dyadic::OperatorField;
use nccz::harness::{emit_plots, generate_corpus, run_suite_with_threads, ExperimentConfig, LambdaSweep, RunReport, Suite, Sweep, TestRecord};
use nccz::kernels::{Kernel, RoughSymbol};
use nccz::maxnorm::{strong_max_norm, weak_sweep, MaxNormP, MaximalFamily};
use nccz::operators::{rotation_method, truncated_czo, LacunaryBank, TruncationLadder};
use nccz::report::{all_hold, ValidationReport};
use nccz::NcczError;

#[derive(Parser)]
#[command(name = "nccz", version, about = "Operator-valued Calderon-Zygmund laboratory")]
struct Cli {
    /// Experiment config (JSON); flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run one suite (or `all`) when no verb is given.
    #[arg(long, global = true)]
    suite: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output root; defaults to $NCCZ_OUT_DIR, then ./nccz-out.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Also write SVG line plots next to the CSVs.
    #[arg(long, global = true)]
    svg: bool,
    #[command(subcommand)]
    cmd: Option<Cmd>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write the corpus as field files.
    Generate,
    /// Truncated singular integral T_ε f.
    Apply {
        #[command(flatten)]
        io: FieldIo,
        #[arg(long, default_value = "hilbert")]
        kernel: String,
        #[arg(long)]
        eps: f64,
    },
    /// Lacunary ladder fields and the telescoping residual.
    Ladder {
        #[command(flatten)]
        io: FieldIo,
        #[arg(long, default_value = "hilbert")]
        kernel: String,
        #[arg(long = "J")]
        big_j: Option<i32>,
    },
    /// Method of rotations for an odd planar symbol.
    Rotate {
        #[command(flatten)]
        io: FieldIo,
        /// Symbol CSV file, or a built-in name.
        #[arg(long)]
        omega: String,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 1024)]
        directions: usize,
    },
    /// Strong maximal norm of the family given by the input fields.
    Maxnorm {
        #[arg(long, num_args = 1.., required = true)]
        input: Vec<PathBuf>,
        #[arg(long, default_value = "2")]
        p: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Weak quasi-norm upper bounds over a λ sweep.
    Weaknorm {
        #[arg(long, num_args = 1.., required = true)]
        input: Vec<PathBuf>,
        #[arg(long, default_value = "0.5:8:5")]
        lambda_sweep: String,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Weak-(1,1) projection certificates over a λ sweep.
    Certify {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value = "hilbert")]
        kernel: String,
        #[arg(long)]
        lambda_sweep: Option<String>,
        /// Also run the b.a.u. Cauchy test with this δ.
        #[arg(long)]
        bau: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// CZ decomposition and its property checks.
    #[command(alias = "cz")]
    Validate {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        s: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Acceptance suites.
    #[command(alias = "run")]
    Suite {
        /// Suite name or `all`.
        name: Option<String>,
    },
}

#[derive(Args)]
struct FieldIo {
    /// Input field; the first corpus member when omitted.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Exit 2 for usage problems, 1 for everything else.
struct Failure {
    usage: bool,
    err: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(err: anyhow::Error) -> Self {
        let usage = matches!(
            err.downcast_ref::<NcczError>(),
            Some(NcczError::InvalidArgument(_) | NcczError::Parse(_) | NcczError::Json(_))
        );
        Failure { usage, err }
    }
}

fn usage(msg: impl std::fmt::Display) -> Failure {
    Failure { usage: true, err: anyhow!("{msg}") }
}

struct Ctx {
    cfg: ExperimentConfig,
    out: PathBuf,
    threads: Option<usize>,
    svg: bool,
}

impl Ctx {
    fn input(&self, path: &Option<PathBuf>) -> anyhow::Result<OperatorField> {
        match path {
            Some(p) => Ok(load_field(p)?),
            None => {
                let corpus = generate_corpus(&self.cfg)?;
                corpus.into_iter().next().map(|m| m.field).ok_or_else(|| anyhow!("empty corpus and no --input"))
            }
        }
    }

    fn dest(&self, given: &Option<PathBuf>, default: &str) -> anyhow::Result<PathBuf> {
        let p = given.clone().unwrap_or_else(|| self.out.join(default));
        if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        Ok(p)
    }

    fn write_json<T: Serialize>(&self, given: &Option<PathBuf>, default: &str, value: &T) -> anyhow::Result<PathBuf> {
        let p = self.dest(given, default)?;
        let text = serde_json::to_string_pretty(value)?;
        std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?;
        Ok(p)
    }
}

fn parse_sweep(s: &str) -> Result<LambdaSweep, Failure> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(usage(format!("lambda sweep must be lo:hi:n, got {s}")));
    }
    let lo: f64 = parts[0].parse().map_err(|_| usage(format!("bad lo in {s}")))?;
    let hi: f64 = parts[1].parse().map_err(|_| usage(format!("bad hi in {s}")))?;
    let points: usize = parts[2].parse().map_err(|_| usage(format!("bad n in {s}")))?;
    let sw = LambdaSweep { lo, hi, points };
    if !(lo > 0.0 && hi >= lo && points >= 1) {
        return Err(usage(format!("need 0 < lo <= hi and n >= 1, got {s}")));
    }
    Ok(sw)
}

fn load_family(paths: &[PathBuf]) -> anyhow::Result<MaximalFamily> {
    let members = paths.iter().map(|p| load_field(p)).collect::<Result<Vec<_>, _>>()?;
    Ok(MaximalFamily::unlabeled(members)?)
}

fn symbol(spec: &str, d: usize) -> anyhow::Result<RoughSymbol> {
    let p = Path::new(spec);
    if p.exists() {
        Ok(RoughSymbol::load_csv(p, d)?)
    } else {
        Ok(RoughSymbol::by_name(spec, d)?)
    }
}

fn suites_from(name: &str) -> Result<Vec<Suite>, Failure> {
    if name == "all" {
        return Ok(Suite::ALL.to_vec());
    }
    name.parse::<Suite>().map(|s| vec![s]).map_err(|e| usage(e))
}

/// Writes report and plots; returns whether every hard check passed.
fn publish(ctx: &Ctx, report: &RunReport) -> anyhow::Result<bool> {
    std::fs::create_dir_all(&ctx.out).with_context(|| format!("creating {}", ctx.out.display()))?;
    let json = ctx.out.join(format!("{}.json", report.suite));
    report.write_json(&json)?;
    emit_plots(report, &ctx.out, ctx.svg)?;
    let s = &report.summary;
    println!("{:<10} {:>4} tests {:>4} passed {:>4} failed  -> {}", report.suite, s.tests, s.passed, s.failed, json.display());
    for t in report.tests.iter().filter(|t| !t.passed) {
        let who = t.member.as_deref().unwrap_or("-");
        for f in t.failures().iter().take(4) {
            println!("  FAIL {} [{}] {}", t.name, who, f);
        }
    }
    Ok(report.passed())
}

fn run_suites(ctx: &Ctx, names: &str) -> Result<bool, Failure> {
    let mut ok = true;
    for suite in suites_from(names)? {
        let report = run_suite_with_threads(&ctx.cfg, suite, ctx.threads).map_err(anyhow::Error::from)?;
        ok &= publish(ctx, &report)?;
    }
    Ok(ok)
}

#[derive(Serialize)]
struct CertifyOutput<'a> {
    schema: u32,
    kernel: String,
    sweep: &'a [Weak11Report],
    #[serde(skip_serializing_if = "Option::is_none")]
    bau: Option<nccz::certificates::BauReport>,
}

fn certify(ctx: &Ctx, input: &Option<PathBuf>, kernel: &str, sweep: &Option<String>, bau: Option<f64>, out: &Option<PathBuf>) -> Result<bool, Failure> {
    let f = ctx.input(input)?;
    let kernel = Kernel::from_name(kernel, f.grid().d).map_err(anyhow::Error::from)?;
    let sweep = match sweep {
        Some(s) => parse_sweep(s)?,
        None => ctx.cfg.lambda.clone(),
    };
    let ladder = TruncationLadder::default_for(f.grid());
    let cctx = Weak11Context::new(&kernel, &f, ladder.clone()).map_err(anyhow::Error::from)?;
    let s = default_s(f.grid().d);
    let mut reports = Vec::new();
    let mut ratios = Sweep::new("deficit_ratio");
    let mut by_j = Sweep::new("partial_by_j");
    let mut tests = Vec::new();
    for lambda in sweep.values() {
        let r = cctx.certify(lambda, s).map_err(anyhow::Error::from)?;
        ratios.push("deficit_ratio", lambda, r.deficit_ratio);
        ratios.push("sup_ratio", lambda, r.sup_ratio);
        if let Some(e) = &r.e {
            for (j, p) in cctx.on_f.partial.iter().enumerate() {
                let v = compressed_sup(e, std::slice::from_ref(p)).map_err(anyhow::Error::from)?;
                by_j.push(&format!("lambda={lambda:.6e}"), j as f64, v / lambda);
            }
        }
        let metrics = BTreeMap::from([("deficit_ratio".to_string(), r.deficit_ratio), ("sup_ratio".to_string(), r.sup_ratio)]);
        tests.push(TestRecord::new("weak11", Some(format!("lambda={lambda:.6e}")), r.checks.clone(), metrics));
        reports.push(r);
    }
    let mut sweeps = vec![ratios, by_j];
    let bau_report = match bau {
        Some(delta) => {
            let r = bau_cauchy_test(&f, &kernel, &ladder, delta).map_err(anyhow::Error::from)?;
            let mut cauchy = Sweep::new("cauchy");
            for (k, row) in r.cauchy.iter().enumerate() {
                for (l, v) in row.iter().enumerate() {
                    cauchy.push(&format!("k={k}"), l as f64, *v);
                }
            }
            sweeps.push(cauchy);
            tests.push(TestRecord::new("bau_cauchy", None, r.checks.clone(), BTreeMap::from([("deficit".to_string(), r.deficit)])));
            Some(r)
        }
        None => None,
    };
    let doc = CertifyOutput { schema: nccz::certificates::WEAK11_SCHEMA, kernel: kernel.name(), sweep: &reports, bau: bau_report };
    let path = ctx.write_json(out, "certify.json", &doc)?;
    let run = RunReport::new("certify", &ctx.cfg, tests, sweeps, BTreeMap::new());
    std::fs::create_dir_all(&ctx.out).map_err(anyhow::Error::from)?;
    emit_plots(&run, &ctx.out, ctx.svg).map_err(anyhow::Error::from)?;
    println!("certify: {} λ values -> {}", reports.len(), path.display());
    Ok(run.passed())
}

fn dispatch(cli: Cli) -> Result<bool, Failure> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p).map_err(anyhow::Error::from)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate().map_err(anyhow::Error::from)?;
    let out = cli
        .out_dir
        .clone()
        .or_else(|| std::env::var_os("NCCZ_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("nccz-out"));
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().map_err(|e| anyhow!("thread pool: {e}"))?;
    }
    let ctx = Ctx { cfg, out, threads: cli.threads, svg: cli.svg };

    let cmd = match (cli.cmd, &cli.suite) {
        (Some(c), _) => c,
        (None, Some(_)) => Cmd::Suite { name: None },
        (None, None) => return Err(usage("nothing to do: give a verb or --suite (see --help)")),
    };
    match cmd {
        Cmd::Suite { name } => {
            let name = name.or(cli.suite).unwrap_or_else(|| "all".into());
            run_suites(&ctx, &name)
        }
        Cmd::Generate => {
            let corpus = generate_corpus(&ctx.cfg).map_err(anyhow::Error::from)?;
            let dir = ctx.out.join("corpus");
            std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            for m in &corpus {
                save_field(&m.field, &dir.join(format!("{}.ndjson", m.label))).map_err(anyhow::Error::from)?;
            }
            ctx.write_json(&None, "corpus/index.json", &corpus)?;
            println!("generate: {} fields -> {}", corpus.len(), dir.display());
            Ok(true)
        }
        Cmd::Apply { io, kernel, eps } => {
            let f = ctx.input(&io.input)?;
            let k = Kernel::from_name(&kernel, f.grid().d).map_err(anyhow::Error::from)?;
            let t = truncated_czo(&k, &f, eps).map_err(anyhow::Error::from)?;
            let p = ctx.dest(&io.output, "apply.ndjson")?;
            save_field(&t, &p).map_err(anyhow::Error::from)?;
            println!("apply: ‖T_ε f‖_2 = {:.12e} -> {}", t.norm(2.0).map_err(anyhow::Error::from)?, p.display());
            Ok(true)
        }
        Cmd::Ladder { io, kernel, big_j } => {
            let f = ctx.input(&io.input)?;
            let k = Kernel::from_name(&kernel, f.grid().d).map_err(anyhow::Error::from)?;
            let ladder = match big_j {
                Some(j) => TruncationLadder::lacunary(f.grid().d, j),
                None => TruncationLadder::default_for(f.grid()),
            };
            let bank = LacunaryBank::new(&k, f.grid(), ladder.clone()).map_err(anyhow::Error::from)?;
            let fields = bank.apply(&f);
            let c_size = f.norm(f64::INFINITY).map_err(anyhow::Error::from)?.max(1.0);
            let residual = bank.telescoping_residual(&fields, &f, c_size).map_err(anyhow::Error::from)?;
            let base = io.output.clone().unwrap_or_else(|| ctx.out.join("ladder"));
            std::fs::create_dir_all(&base).with_context(|| format!("creating {}", base.display()))?;
            for (j, t) in fields.truncs.iter().enumerate() {
                save_field(t, &base.join(format!("trunc_{j}.ndjson"))).map_err(anyhow::Error::from)?;
            }
            #[derive(Serialize)]
            struct LadderSummary {
                kernel: String,
                epsilons: Vec<f64>,
                telescoping_residual: f64,
            }
            let summary = LadderSummary { kernel: k.name(), epsilons: ladder.epsilons, telescoping_residual: residual };
            ctx.write_json(&Some(base.join("summary.json")), "", &summary)?;
            println!("ladder: {} levels, telescoping residual {:.3e} -> {}", summary.epsilons.len(), residual, base.display());
            Ok(residual <= 1e-9)
        }
        Cmd::Rotate { io, omega, eps, directions } => {
            let f = ctx.input(&io.input)?;
            if f.grid().d != 2 {
                return Err(usage("rotate needs a planar field"));
            }
            let om = symbol(&omega, 2)?;
            let t = rotation_method(&om, &f, eps, directions).map_err(anyhow::Error::from)?;
            let p = ctx.dest(&io.output, "rotate.ndjson")?;
            save_field(&t, &p).map_err(anyhow::Error::from)?;
            println!("rotate: {directions} directions -> {}", p.display());
            Ok(true)
        }
        Cmd::Maxnorm { input, p, out } => {
            let p = MaxNormP::parse(&p).map_err(anyhow::Error::from)?;
            let fam = load_family(&input)?;
            let cert = strong_max_norm(&fam, p).map_err(anyhow::Error::from)?;
            let path = ctx.write_json(&out, "maxnorm.json", &cert)?;
            println!("maxnorm: {:.12e} (gap {:?}) -> {}", cert.objective, cert.gap, path.display());
            Ok(cert.feasible)
        }
        Cmd::Weaknorm { input, lambda_sweep, p, out } => {
            let sweep = parse_sweep(&lambda_sweep)?;
            let fam = load_family(&input)?;
            let (points, best) = weak_sweep(&fam, &sweep.values(), p).map_err(anyhow::Error::from)?;
            #[derive(Serialize)]
            struct WeakOut<'a> {
                p: f64,
                upper_bound: f64,
                points: &'a [nccz::maxnorm::WeakSweepPoint],
            }
            let path = ctx.write_json(&out, "weaknorm.json", &WeakOut { p, upper_bound: best, points: &points })?;
            println!("weaknorm: upper bound {best:.12e} -> {}", path.display());
            Ok(points.iter().all(|w| w.valid))
        }
        Cmd::Certify { input, kernel, lambda_sweep, bau, out } => certify(&ctx, &input, &kernel, &lambda_sweep, bau, &out),
        Cmd::Validate { input, lambda, s, out } => {
            let f = ctx.input(&input)?;
            let s = s.unwrap_or_else(|| default_s(f.grid().d));
            let dec = decompose(&f, lambda, s).map_err(anyhow::Error::from)?;
            let report: ValidationReport = validate(&dec, &f).map_err(anyhow::Error::from)?;
            let path = ctx.write_json(&out, "validate.json", &report)?;
            let ok = all_hold(&report);
            println!("validate: {} properties, {} -> {}", report.len(), if ok { "all hold" } else { "FAILED" }, path.display());
            for f in nccz::report::failures(&report) {
                println!("  FAIL {f}");
            }
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(if f.usage { 2 } else { 1 })
        }
    }
}

