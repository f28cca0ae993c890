use std::fs;
use std::path::Path;

use netgibbs::schedule::load_schedule;
use netgibbs_cli::oracle::{compare, Quantity};
use netgibbs_cli::{cmd_bounds, run, ExperimentConfig, GraphSource, Mode, RunArgs, ScheduleSpec};

fn argv(args: &[&str]) -> Vec<String> {
    std::iter::once("netgibbs")
        .chain(args.iter().copied())
        .map(String::from)
        .collect()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

#[test]
fn help_and_version_exit_zero_and_bad_flags_exit_one() {
    assert_eq!(run(argv(&["--help"])), 0);
    assert_eq!(run(argv(&["--version"])), 0);
    assert_eq!(run(argv(&["simulate", "--no-such-flag"])), 1);
    assert_eq!(run(argv(&[])), 1);
}

#[test]
fn precedence_is_flags_then_file_then_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    fs::write(
        &cfg_path,
        r#"{"q": 3, "beta": 0.1, "T": 40, "seed": 9, "schedule": {"generator": "shocks", "epoch_mean": 5}}"#,
    )
    .unwrap();
    let args = RunArgs {
        config: Some(cfg_path),
        beta: Some(0.3),
        ..RunArgs::default()
    };
    let cfg = ExperimentConfig::resolve(&args).unwrap();
    assert_eq!(cfg.q, 3);
    assert_eq!(cfg.beta, 0.3);
    assert_eq!(cfg.horizon, 40);
    assert_eq!(cfg.seed, 9);
    assert_eq!(cfg.schedule, ScheduleSpec::Shocks { epoch_mean: 5 });
    assert_eq!(cfg.graph, GraphSource::Builtin { spec: "path:4".into() });
    assert_eq!(cfg.mode, Mode::Exact);
}

#[test]
fn invalid_configs_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"qq": 2}"#).unwrap();
    let out = dir.path().join("o");
    let out = out.to_str().unwrap();
    assert_eq!(
        run(argv(&[
            "simulate",
            "--config",
            bad.to_str().unwrap(),
            "--output-dir",
            out
        ])),
        1
    );
    assert_eq!(
        run(argv(&[
            "simulate",
            "--mode",
            "montecarlo",
            "--replicas",
            "0",
            "--output-dir",
            out
        ])),
        1
    );
    assert_eq!(
        run(argv(&["simulate", "--dense-cap", "100000", "--output-dir", out])),
        1
    );
    assert_eq!(run(argv(&["simulate", "--graph", "path:20", "--output-dir", out])), 1);
    assert_eq!(
        run(argv(&[
            "simulate",
            "--generator",
            "iid",
            "--amplitude",
            "1.5",
            "--output-dir",
            out
        ])),
        1
    );
    assert_eq!(
        run(argv(&[
            "simulate",
            "--generator",
            "zero",
            "--epoch-mean",
            "4",
            "--output-dir",
            out
        ])),
        1
    );
}

#[test]
fn zero_schedule_gives_zero_losses_and_regrets() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("zero");
    let code = run(argv(&[
        "simulate",
        "--generator",
        "zero",
        "-T",
        "30",
        "--output-dir",
        out.to_str().unwrap(),
    ]));
    assert_eq!(code, 0);
    let rows = csv_rows(&out.join("metrics.csv"));
    assert_eq!(rows.len(), 31);
    for row in &rows[1..] {
        for cell in &row[1..5] {
            assert_eq!(cell.parse::<f64>().unwrap(), 0.0);
        }
    }
}

#[test]
fn default_run_stays_under_both_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    assert_eq!(
        run(argv(&[
            "simulate",
            "--seed",
            "7",
            "--output-dir",
            out.to_str().unwrap()
        ])),
        0
    );
    let rows = csv_rows(&out.join("metrics.csv"));
    assert_eq!(rows[0][5], "bound_eq12");
    assert_eq!(rows.len(), 201);
    for row in &rows[1..] {
        let v: Vec<f64> = row.iter().map(|c| c.parse().unwrap()).collect();
        assert!(v[3] <= v[5], "row {}", v[0]);
        assert!(v[4] <= v[6], "row {}", v[0]);
        assert!(v[8] <= v[7] + 1e-12 && v[7] <= 4.0 * v[8] + 1e-12);
    }
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["dominated"]["centralized"]["holds"], true);
    assert_eq!(summary["dominated"]["local_interaction"]["holds"], true);
    assert_eq!(summary["constants"]["T0"], 4);
}

#[test]
fn irregular_instance_blanks_curvature_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("hot");
    assert_eq!(
        run(argv(&[
            "simulate",
            "--beta",
            "0.6",
            "-T",
            "10",
            "--output-dir",
            out.to_str().unwrap()
        ])),
        0
    );
    let rows = csv_rows(&out.join("metrics.csv"));
    for row in &rows[1..] {
        assert!(row[6].is_empty() && row[10].is_empty());
        assert!(!row[5].is_empty() && !row[11].is_empty());
    }
}

#[test]
fn montecarlo_mode_reports_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mc");
    let code = run(argv(&[
        "simulate",
        "--mode",
        "montecarlo",
        "--replicas",
        "20000",
        "-T",
        "20",
        "--output-dir",
        out.to_str().unwrap(),
    ]));
    assert_eq!(code, 0);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let rows = summary["checkpoints"].as_array().unwrap();
    assert_eq!(
        rows.iter().map(|r| r["t"].as_u64().unwrap()).collect::<Vec<_>>(),
        vec![5, 20]
    );
    for r in rows {
        assert!(r["tv_empirical_exact"].as_f64().unwrap() < 0.05);
    }
    assert!(summary["mean_cumulative_cost"].is_number());
}

#[test]
fn montecarlo_beyond_dense_cap_still_runs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("big");
    let code = run(argv(&[
        "simulate",
        "--graph",
        "cycle:20",
        "--beta",
        "0.1",
        "--mode",
        "montecarlo",
        "--replicas",
        "50",
        "-T",
        "15",
        "--output-dir",
        out.to_str().unwrap(),
    ]));
    assert_eq!(code, 0);
    let rows = csv_rows(&out.join("metrics.csv"));
    assert!(rows[1][1].is_empty() && !rows[1][5].is_empty());
}

#[test]
fn verify_exit_codes() {
    assert_eq!(run(argv(&["verify", "-T", "30"])), 0);
    assert_eq!(run(argv(&["verify", "-T", "20", "--beta", "0.6"])), 0);
    let dir = tempfile::tempdir().unwrap();
    let corrupt = dir.path().join("s.json");
    fs::write(&corrupt, "{\"format\": \"netgibbs-schedule\"").unwrap();
    assert_eq!(run(argv(&["verify", "--schedule", corrupt.to_str().unwrap()])), 1);
}

#[test]
fn gen_then_simulate_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let sched = dir.path().join("s.json");
    let s = sched.to_str().unwrap();
    assert_eq!(
        run(argv(&[
            "gen",
            "--generator",
            "shocks",
            "--epoch-mean",
            "8",
            "-T",
            "25",
            "--out",
            s
        ])),
        0
    );
    let loaded = load_schedule(&sched).unwrap();
    assert_eq!(loaded.horizon(), 25);
    assert_eq!(loaded.provenance().generator, "shocks");
    let out = dir.path().join("o");
    assert_eq!(
        run(argv(&[
            "simulate",
            "--schedule",
            s,
            "--output-dir",
            out.to_str().unwrap()
        ])),
        0
    );
    assert_eq!(csv_rows(&out.join("metrics.csv")).len(), 26);
    // A schedule for another graph is rejected.
    assert_eq!(
        run(argv(&[
            "simulate",
            "--schedule",
            s,
            "--graph",
            "cycle:4",
            "--output-dir",
            out.to_str().unwrap()
        ])),
        1
    );
}

#[test]
fn bounds_table_constants() {
    let cfg = ExperimentConfig {
        horizon: 10,
        ..ExperimentConfig::default()
    };
    let table = cmd_bounds(&cfg).unwrap();
    assert!(table.contains("# kappa_star=0.15\n"));
    let k: f64 = table
        .lines()
        .find_map(|l| l.strip_prefix("# K="))
        .unwrap()
        .parse()
        .unwrap();
    assert!((k - 9.6).abs() < 1e-12);
    assert!(table.contains("t,delta_t,tracking_bound,K_p_t,bound_eq12,bound_thm1\n"));

    let hot = ExperimentConfig {
        beta: 0.6,
        horizon: 10,
        ..ExperimentConfig::default()
    };
    let table = cmd_bounds(&hot).unwrap();
    assert!(table.contains("t,delta_t,bound_eq12\n"));
    assert!(!table.contains("kappa_star"));
}

#[test]
fn bound_table_scaling() {
    let row = |cfg: &ExperimentConfig, t: usize| -> Vec<f64> {
        let table = cmd_bounds(cfg).unwrap();
        let line = table.lines().find(|l| l.starts_with(&format!("{t},"))).unwrap();
        line.split(',').map(|c| c.parse().unwrap()).collect()
    };
    // With β = 0 only the default-measure term remains.
    let cold = ExperimentConfig {
        beta: 0.0,
        horizon: 50,
        ..ExperimentConfig::default()
    };
    let eq12 = |r: &Vec<f64>| r[4];
    assert!((eq12(&row(&cold, 1)) - eq12(&row(&cold, 50))).abs() < 1e-12);
    assert!((eq12(&row(&cold, 7)) - 4.0 * 2f64.ln()).abs() < 1e-12);
    // Doubling |V| at fixed Δ and β multiplies the leading coefficient by 4.
    let base = ExperimentConfig {
        horizon: 30,
        beta: 0.1,
        ..ExperimentConfig::default()
    };
    let double = ExperimentConfig {
        graph: GraphSource::Builtin { spec: "path:8".into() },
        ..base.clone()
    };
    let lead = |cfg: &ExperimentConfig, n: f64| (eq12(&row(cfg, 30)) - n * 2f64.ln()) / 31f64.ln();
    assert!((lead(&double, 8.0) / lead(&base, 4.0) - 4.0).abs() < 1e-12);
}

#[test]
fn oracle_agrees_with_library_on_every_quantity() {
    let cfg = ExperimentConfig {
        horizon: 25,
        seed: 3,
        ..ExperimentConfig::default()
    };
    let mut cfg2 = cfg.clone();
    let instance = cfg.instance().unwrap();
    let schedule = cfg2.schedule(&instance).unwrap();
    for q in Quantity::ALL {
        for t in [1, 2, 13, 25] {
            let c = compare(&instance, schedule.costs(), q, t).unwrap();
            assert!(c.agrees(), "{} at {t}: {} vs {}", q.name(), c.oracle, c.library);
        }
    }
    assert_eq!(run(argv(&["oracle", "regret-li", "-T", "12"])), 0);
    assert_eq!(run(argv(&["oracle", "kl-step", "-T", "12", "--t", "13"])), 1);
}
