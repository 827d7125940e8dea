mod common;

use std::fs;
use std::path::Path;

use casim::cli::{execute, main_with_args, Command, EXIT_CONFIG, EXIT_INVARIANT};
use casim::config::{parse_scenario, to_config_string};
use casim::ExactScenario;

fn run(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut full = vec!["casim"];
    full.extend_from_slice(args);
    let code = main_with_args(full, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn missing_config_is_a_config_error() {
    let (code, _, err) = run(&[
        "run",
        "--config",
        "/nonexistent/x.cfg",
        "--out",
        "/tmp/unused",
    ]);
    assert_eq!(code, EXIT_CONFIG);
    assert!(err.contains("config error"));
}

#[test]
fn swapped_carriers_are_an_invariant_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(common::suite_dir().join("geo_ca.cfg"))
        .unwrap()
        .replace(
            "carrier1.symbol_rate_sym_s=4640000",
            "carrier1.symbol_rate_sym_s=1000000",
        );
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, text).unwrap();
    let (code, _, err) = run(&["run", "--config", path(&cfg), "--out", path(dir.path())]);
    assert_eq!(code, EXIT_INVARIANT);
    assert!(err.contains("swap"), "{err}");
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("typo.cfg");
    let text = fs::read_to_string(common::suite_dir().join("geo_ca.cfg")).unwrap()
        + "carrier1.fillrate=0.3\n";
    fs::write(&cfg, text).unwrap();
    assert_eq!(run(&["plan", "--config", path(&cfg)]).0, EXIT_CONFIG);
}

#[test]
fn plan_output() {
    let (code, out, _) = run(&["plan", "--alpha", "0.4"]);
    assert_eq!(code, 0);
    assert!(out.contains("source: table"));
    assert!(out.contains("cycle: [1,1,2,1,1,1,2]"));
    assert!(out.contains("prefix: none"));

    let meo_geo = common::suite_dir().join("meo_geo.cfg");
    let (_, out, _) = run(&["plan", "--config", path(&meo_geo)]);
    assert!(out.contains("prefix: 38×MEO"), "{out}");

    let (_, out, _) = run(&["plan", "--alpha", "2/7"]);
    assert!(out.contains("source: generated"), "{out}");

    assert_ne!(run(&["plan", "--alpha", "1.5"]).0, 0);
    assert_ne!(run(&["plan"]).0, 0);
}

#[test]
fn prefix_output() {
    let cfg = common::suite_dir().join("meo_geo.cfg");
    let (code, out, _) = run(&["prefix", "--config", path(&cfg), "--delta-t-ms", "188.1"]);
    assert_eq!(code, 0);
    assert!(out.contains("raw: 38.4712"), "{out}");
    assert!(out.contains("prefix: 38"));
    let (_, out, _) = run(&["prefix", "--config", path(&cfg)]);
    assert!(out.contains("fast_carrier: 1"));
    assert!(out.contains("prefix: 38"));
}

#[test]
fn run_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = common::configs_dir().join("geo_ca_alpha04.cfg");
    let (code, out, _) = run(&[
        "run",
        "--config",
        path(&cfg),
        "--out",
        path(dir.path()),
        "--trace",
    ]);
    assert_eq!(code, 0);
    assert!(out.contains("cycle: [1,1,2,1,1,1,2]"));
    for f in [
        "report.json",
        "comparison.csv",
        "trace.csv",
        "manifest.json",
    ] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["alpha"]["exact"], "0.4");
    assert_eq!(report["report"]["n_pdus"], 5000);
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(
        trace.lines().next().unwrap(),
        "seq,carrier,t_scheduled,t_tx_start,t_tx_end,t_arrival"
    );
    assert_eq!(trace.lines().count(), 5001);
}

#[test]
fn suite_compares_five_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    let mut out = Vec::new();
    execute(
        Command::Suite {
            dir: common::suite_dir(),
            out: dir.path().to_path_buf(),
        },
        None,
        &mut out,
    )
    .unwrap();
    let csv = fs::read_to_string(dir.path().join("comparison.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 5);
    let worst = rows
        .iter()
        .max_by(|a, b| {
            a[4].parse::<f64>()
                .unwrap()
                .total_cmp(&b[4].parse().unwrap())
        })
        .unwrap();
    assert_eq!(worst[0], "GEO-RR");
    for stem in ["geo_ca", "geo_rr", "meo_ca", "meo_geo", "geo_meo"] {
        assert!(dir.path().join(stem).join("report.json").exists());
    }
}

#[test]
fn seed_changes_only_the_meo_phase() {
    let cfg = common::suite_dir().join("meo_geo.cfg");
    let runs: Vec<String> = [Some("1"), Some("1"), Some("2")]
        .iter()
        .map(|seed| {
            let dir = tempfile::tempdir().unwrap();
            let cmd = Command::Run {
                config: cfg.clone(),
                out: dir.path().to_path_buf(),
                trace: true,
            };
            execute(cmd, *seed, &mut Vec::new()).unwrap();
            fs::read_to_string(dir.path().join("trace.csv")).unwrap()
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    assert_ne!(runs[0], runs[2]);
    let bad = Command::Run {
        config: cfg,
        out: "/tmp/unused".into(),
        trace: false,
    };
    assert_eq!(
        execute(bad, Some("x"), &mut Vec::new())
            .unwrap_err()
            .exit_code(),
        EXIT_CONFIG
    );
}

#[test]
fn bundled_configs_round_trip() {
    let mut paths: Vec<_> = fs::read_dir(common::suite_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    paths.push(common::configs_dir().join("geo_ca_alpha04.cfg"));
    for p in paths {
        let s: ExactScenario = parse_scenario(&fs::read_to_string(&p).unwrap()).unwrap();
        let again: ExactScenario = parse_scenario(&to_config_string(&s)).unwrap();
        assert_eq!(s, again, "{}", p.display());
    }
}
