use std::fs;
use std::path::Path;
use std::process::Command;

use d2d_sim::emit::{cdf_csv, summary_json, write_outputs};
use d2d_sim::{run_experiment, ExperimentKind, MonteCarloResult, SimConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

fn small_config() -> SimConfig {
    let mut cfg = SimConfig::default();
    cfg.scheduling.slots = 50;
    cfg
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn same_seed_gives_identical_files() {
    let cfg = small_config();
    for kind in ExperimentKind::ALL {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        write_outputs(&run_experiment(kind, &cfg, 7, 12, None).unwrap(), a.path()).unwrap();
        write_outputs(&run_experiment(kind, &cfg, 7, 12, None).unwrap(), b.path()).unwrap();
        let (fa, fb) = (read_dir_sorted(a.path()), read_dir_sorted(b.path()));
        assert!(fa.iter().any(|(n, _)| n == "summary.json"), "{kind}");
        assert!(fa.iter().any(|(n, _)| n.starts_with("cdf_")), "{kind}");
        assert_eq!(fa, fb, "{kind}");
    }
}

#[test]
fn worker_count_does_not_change_results() {
    let cfg = small_config();
    for kind in ExperimentKind::ALL {
        let one = run_experiment(kind, &cfg, 3, 16, Some(1)).unwrap();
        let four = run_experiment(kind, &cfg, 3, 16, Some(4)).unwrap();
        assert_eq!(one, four, "{kind}");
    }
}

#[test]
fn different_seeds_differ() {
    let cfg = small_config();
    let a = run_experiment(ExperimentKind::SinrDist, &cfg, 1, 5, None).unwrap();
    let b = run_experiment(ExperimentKind::SinrDist, &cfg, 2, 5, None).unwrap();
    assert_ne!(a.samples, b.samples);
}

#[test]
fn single_drop_gives_at_most_one_sample() {
    let cfg = small_config();
    for kind in ExperimentKind::ALL {
        let r = run_experiment(kind, &cfg, 11, 1, None).unwrap();
        for (name, v) in &r.samples {
            assert!(v.len() <= 1, "{kind}/{name} has {}", v.len());
        }
    }
}

#[test]
fn sample_vectors_never_outgrow_drops() {
    let cfg = small_config();
    for kind in ExperimentKind::ALL {
        let r = run_experiment(kind, &cfg, 5, 9, None).unwrap();
        for (name, v) in &r.samples {
            assert!(v.len() <= 9, "{kind}/{name}");
        }
    }
}

#[test]
fn auction_writes_price_trace() {
    let dir = tempfile::tempdir().unwrap();
    write_outputs(&run_experiment(ExperimentKind::Auction, &SimConfig::default(), 1, 3, None).unwrap(), dir.path())
        .unwrap();
    let text = fs::read_to_string(dir.path().join("price_trace.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("round,item,price,event"));
}

#[test]
fn zero_drops_is_refused() {
    assert!(run_experiment(ExperimentKind::Auction, &SimConfig::default(), 1, 0, None).is_err());
}

#[test]
fn exponential_cdf_at_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let xs: Vec<f64> = (0..10_000).map(|_| Exp1.sample(&mut rng)).collect();
    let csv = cdf_csv(&xs).unwrap();
    let at_one = csv
        .lines()
        .skip(1)
        .map(|l| {
            let (v, c) = l.split_once(',').unwrap();
            (v.parse::<f64>().unwrap(), c.parse::<f64>().unwrap())
        })
        .take_while(|&(v, _)| v <= 1.0)
        .last()
        .map_or(0.0, |(_, c)| c);
    assert!((at_one - (1.0 - (-1.0f64).exp())).abs() < 0.02, "{at_one}");
}

#[test]
fn summary_mean_matches_csv() {
    let r = run_experiment(ExperimentKind::ThresholdPc, &SimConfig::default(), 4, 200, None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_outputs(&r, dir.path()).unwrap();
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 4);
    assert_eq!(summary["schema_version"], 1);
    let samples = summary["samples"].as_object().unwrap();
    assert!(!samples.is_empty());
    for (name, s) in samples {
        let csv = fs::read_to_string(dir.path().join(format!("cdf_{name}.csv"))).unwrap();
        let values: Vec<f64> =
            csv.lines().skip(1).map(|l| l.split_once(',').unwrap().0.parse().unwrap()).collect();
        assert_eq!(s["count"].as_u64().unwrap() as usize, values.len());
        let recomputed = values.iter().sum::<f64>() / values.len() as f64;
        assert!((s["mean"].as_f64().unwrap() - recomputed).abs() <= 1e-12, "{name}");
    }
    assert!(summary["counters"]["infeasible"].as_u64().is_some());
}

#[test]
fn summary_of_empty_result_is_refused() {
    let r = MonteCarloResult::collect(ExperimentKind::ThresholdPc, 1, serde_json::Value::Null, vec![]);
    assert!(summary_json(&r).is_err());
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    assert!(write_outputs(&r, &out).is_err());
    assert!(!out.exists());
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_d2dsim"))
}

#[test]
fn cli_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let status = cli()
        .args(["auction", "--seed", "5", "--drops", "4", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    assert!(out.join("summary.json").exists());
    assert!(out.join("price_trace.csv").exists());
}

#[test]
fn cli_reads_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    fs::write(&cfg, "[scheduling]\nslots = 20\nn_pairs = 3\n").unwrap();
    let out = dir.path().join("run");
    let status = cli().args(["scheduling", "--drops", "2", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert!(status.success());
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["experiment"]["slots"], 20);
}

#[test]
fn cli_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[auction]\nno_such_key = 1\n").unwrap();
    let out = cli().args(["auction", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));

    let missing = cli().args(["auction", "--config", "/nonexistent/cfg.toml", "--out"]).arg(dir.path()).output().unwrap();
    assert!(!missing.status.success());

    let zero = cli().args(["auction", "--drops", "0", "--out"]).arg(dir.path()).output().unwrap();
    assert!(!zero.status.success());

    assert!(!cli().arg("no-such-experiment").output().unwrap().status.success());
}
