use std::process::Command;

use nccz::dyadic::io::write_field;
use nccz::harness::*;

fn small() -> ExperimentConfig {
    ExperimentConfig { corpus_size: 12, k_min: -2, k_max: 5, ..ExperimentConfig::default() }
}

fn bytes(cfg: &ExperimentConfig) -> Vec<u8> {
    let mut out = Vec::new();
    for m in generate_corpus(cfg).unwrap() {
        out.extend(m.label.as_bytes());
        write_field(&m.field, &mut out).unwrap();
    }
    out
}

#[test]
fn corpus_is_reproducible() {
    let cfg = small();
    assert_eq!(bytes(&cfg), bytes(&cfg));
    let other = ExperimentConfig { seed: 2, ..small() };
    assert_ne!(bytes(&cfg), bytes(&other));
}

#[test]
fn corpus_members_are_psd_within_band() {
    let cfg = small();
    let corpus = generate_corpus(&cfg).unwrap();
    assert_eq!(corpus.len(), 12);
    let labels: Vec<&str> = corpus.iter().map(|m| m.label.as_str()).collect();
    for want in ["indicator", "scalar-embedding", "block-diagonal", "pair-g", "pair-abs-f"] {
        assert!(labels.contains(&want), "{want} missing");
    }
    for m in &corpus {
        assert!(m.field.is_psd().unwrap(), "{}", m.label);
        assert!(m.field.min_eigenvalue().unwrap() >= -1e-12);
        // trace computed directly
        let l1: f64 = m.field.values().iter().map(|v| v.trace().re).sum::<f64>() * m.field.grid().cell_volume();
        assert!((l1 - m.l1).abs() < 1e-12 * l1.max(1.0));
        if m.label.starts_with("gram-") {
            assert!((0.5..=2.0).contains(&l1), "{}: {l1}", m.label);
        }
    }
}

#[test]
fn single_member_seed_one() {
    let cfg = ExperimentConfig { corpus_size: 1, ..ExperimentConfig::default() };
    let c = generate_corpus(&cfg).unwrap();
    assert_eq!(c.len(), 1);
    assert!(c[0].field.min_eigenvalue().unwrap() >= 0.0 - 1e-15);
}

#[test]
fn spike_members_stay_in_band() {
    let wc = Weak11Config::default();
    for i in 0..6 {
        let (f, hmin) = spike_member(&wc, 1, i).unwrap();
        let l1 = f.norm(1.0).unwrap();
        assert!((0.5..=2.0).contains(&l1));
        assert!(hmin > 0.0);
        assert!(f.is_psd().unwrap());
    }
}

#[test]
fn restrict_inverts_prolong() {
    let cfg = small();
    let f = generate_corpus(&cfg).unwrap().pop().unwrap().field;
    let fine = nccz::dyadic::DyadicGrid::new(1, cfg.k_min, cfg.k_max + 2).unwrap();
    let back = restrict(&prolong(&f, fine).unwrap(), *f.grid()).unwrap();
    assert!(back.max_entry_diff(&f) < 1e-14);
}

#[test]
fn empty_corpus_gives_empty_passing_report() {
    let cfg = ExperimentConfig { corpus_size: 0, ..ExperimentConfig::default() };
    let r = run_suite(&cfg, Suite::CzDecomp).unwrap();
    assert_eq!(r.summary.tests, 0);
    assert!(r.passed());
}

#[test]
fn csv_header_and_layout() {
    let cfg = small();
    let r = run_suite(&cfg, Suite::CzDecomp).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = emit_plots(&r, dir.path(), true).unwrap();
    let csvs: Vec<_> = files.iter().filter(|p| p.extension().unwrap() == "csv").collect();
    assert_eq!(csvs.len(), r.sweeps.len());
    for p in csvs {
        let text = std::fs::read_to_string(p).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), PLOT_HEADER);
        for l in lines {
            let cols: Vec<&str> = l.split(',').collect();
            assert_eq!(cols.len(), 5, "{l}");
            assert_eq!(cols[0], "czdecomp");
            cols[3].parse::<f64>().unwrap();
        }
    }
    assert!(files.iter().any(|p| p.extension().unwrap() == "svg"));
}

#[test]
fn report_numbers_ignore_timings() {
    let cfg = small();
    let a = run_suite(&cfg, Suite::CzDecomp).unwrap();
    let mut b = run_suite(&cfg, Suite::CzDecomp).unwrap();
    b.timings.insert("extra".into(), 1.0);
    assert_eq!(a.numbers(), b.numbers());
    let v: serde_json::Value = serde_json::from_str(&a.numbers()).unwrap();
    assert_eq!(v["schema"], RUN_REPORT_SCHEMA);
    assert!(v.get("timings").is_none());
}

#[test]
fn config_round_trips_and_rejects_nonsense() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.json");
    std::fs::write(&p, r#"{"seed": 9, "k_max": 6, "lambda": {"lo": 1.0, "hi": 2.0, "points": 2}}"#).unwrap();
    let c = ExperimentConfig::load(&p).unwrap();
    assert_eq!((c.seed, c.k_max, c.corpus_size), (9, 6, 50));
    assert_eq!(c.lambda.values().len(), 2);
    std::fs::write(&p, r#"{"d": 3}"#).unwrap();
    assert!(ExperimentConfig::load(&p).is_err());
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nccz"))
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.json");
    std::fs::write(&cfg, r#"{"corpus_size": 0}"#).unwrap();
    let ok = cli().args(["--suite", "czdecomp", "--config"]).arg(&cfg).arg("--out-dir").arg(dir.path()).status().unwrap();
    assert_eq!(ok.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("czdecomp.json")).unwrap()).unwrap();
    assert_eq!(report["summary"]["tests"], 0);

    assert_eq!(cli().arg("--bogus").status().unwrap().code(), Some(2));
    assert_eq!(cli().args(["--suite", "nope"]).arg("--out-dir").arg(dir.path()).status().unwrap().code(), Some(2));
    assert_eq!(cli().status().unwrap().code(), Some(2));

    // a field whose coarsest averages exceed λ cannot be decomposed
    let f = dir.path().join("f.ndjson");
    let g = nccz::dyadic::DyadicGrid::new(1, 0, 3).unwrap();
    nccz::dyadic::io::save_field(&nccz::dyadic::OperatorField::from_scalars(g, &[5.0; 8]).unwrap(), &f).unwrap();
    let hard = cli().args(["cz", "--lambda", "1", "--input"]).arg(&f).arg("--out-dir").arg(dir.path()).status().unwrap();
    assert_eq!(hard.code(), Some(1));
    let pass = cli().args(["cz", "--lambda", "6", "--input"]).arg(&f).arg("--out-dir").arg(dir.path()).status().unwrap();
    assert_eq!(pass.code(), Some(0));
}

#[test]
fn cli_out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let st = cli().args(["generate", "--config"]).arg(write_cfg(dir.path(), r#"{"corpus_size": 3}"#)).env("NCCZ_OUT_DIR", dir.path()).status().unwrap();
    assert_eq!(st.code(), Some(0));
    assert!(dir.path().join("corpus/indicator.ndjson").exists());
    assert!(dir.path().join("corpus/index.json").exists());
}

fn write_cfg(dir: &std::path::Path, body: &str) -> std::path::PathBuf {
    let p = dir.join("cfg.json");
    std::fs::write(&p, body).unwrap();
    p
}
