//! Batch driver for netgibbs: simulate, verify, bounds, gen and oracle.

pub mod config;
pub mod oracle;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use netgibbs::centralized::{centralized_regret_bound, centralized_strategies};
use netgibbs::glauber::{empirical_distributions, evolve_exact, mean_cumulative_cost, simulate_path};
use netgibbs::measures::{kl_divergence, tv_distance, wasserstein1_hamming_with_cap};
use netgibbs::schedule::save_schedule;
use netgibbs::theory::{check_suite, decentralized_regret_bound, delta_t, p_poly_next, tracking_sequence};
use netgibbs::{CostSchedule, Instance, RegretLedger, SuiteOptions, ThmConstants};

pub use config::{ExperimentConfig, FileConfig, GraphSource, Mode, RunArgs, ScheduleSpec};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] netgibbs::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Failed(_) => 2,
            _ => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(io_err(path))
}

#[derive(Debug, Parser)]
#[command(
    name = "netgibbs",
    version,
    about = "Online learning on networks with Glauber dynamics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run centralized and decentralized play and write per-round metrics.
    Simulate(RunArgs),
    /// Run the certification suite; exit status 2 if any check fails.
    Verify {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
        /// Also write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Print the constants and bound curves for an instance as CSV.
    Bounds {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a cost schedule file.
    Gen {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recompute one quantity by brute force and compare with the library.
    Oracle {
        #[command(flatten)]
        run: RunArgs,
        #[arg(value_enum)]
        quantity: oracle::Quantity,
        /// Round; defaults to T.
        #[arg(long)]
        t: Option<usize>,
    },
}

/// Parses `argv` (including the program name), runs the command and returns the exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("netgibbs: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Simulate(args) => {
            let cfg = ExperimentConfig::resolve(&args)?;
            let out = cmd_simulate(&cfg)?;
            eprintln!("wrote {}", out.display());
            Ok(())
        }
        Command::Verify { run, format, report } => {
            let cfg = ExperimentConfig::resolve(&run)?;
            cmd_verify(&cfg, format, report.as_deref())
        }
        Command::Bounds { run, out } => {
            let cfg = ExperimentConfig::resolve(&run)?;
            let table = cmd_bounds(&cfg)?;
            match out {
                Some(path) => write_file(&path, &table),
                None => {
                    print!("{table}");
                    Ok(())
                }
            }
        }
        Command::Gen { run, out } => {
            let mut cfg = ExperimentConfig::resolve(&run)?;
            let instance = cfg.instance()?;
            let schedule = cfg.schedule(&instance)?;
            save_schedule(&schedule, &out)?;
            Ok(())
        }
        Command::Oracle { run, quantity, t } => {
            let mut cfg = ExperimentConfig::resolve(&run)?;
            init_workers(cfg.workers);
            let instance = cfg.instance()?;
            let schedule = cfg.schedule(&instance)?;
            let cmp = oracle::compare(&instance, schedule.costs(), quantity, t.unwrap_or(cfg.horizon))?;
            println!("quantity,t,oracle,library,abs_diff");
            println!(
                "{},{},{},{},{}",
                quantity.name(),
                cmp.t,
                cmp.oracle,
                cmp.library,
                (cmp.oracle - cmp.library).abs()
            );
            if cmp.agrees() {
                Ok(())
            } else {
                Err(CliError::Failed(format!(
                    "{} at t = {}: oracle {} vs library {}",
                    quantity.name(),
                    cmp.t,
                    cmp.oracle,
                    cmp.library
                )))
            }
        }
    }
}

/// Sizes the global rayon pool once; later calls keep the first setting.
pub fn init_workers(workers: Option<usize>) {
    if let Some(n) = workers {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn num(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => format!("{v}"),
        _ => String::new(),
    }
}

/// Checkpoints reported by montecarlo mode.
pub fn mc_checkpoints(horizon: usize) -> Vec<usize> {
    let mut c: Vec<usize> = [5, 20, 50, horizon].into_iter().filter(|&t| t <= horizon).collect();
    c.dedup();
    c
}

/// Per-round metrics of one exact run.
#[derive(Debug, Clone)]
pub struct ExactMetrics {
    pub central: RegretLedger,
    pub local: RegretLedger,
    pub w1_mu_pi: Vec<Option<f64>>,
    pub tv_mu_pi: Vec<f64>,
    pub kl_step: Vec<f64>,
}

pub fn exact_metrics(
    instance: &Instance,
    schedule: &[netgibbs::NetworkCost],
    cfg: &ExperimentConfig,
) -> Result<ExactMetrics, CliError> {
    let dense = instance.dense(cfg.dense_cap)?;
    let pis = centralized_strategies(instance, &dense, schedule)?;
    let mus = evolve_exact(instance, &dense, schedule)?;
    let theta_d = instance.mu0.theta_d();
    let central = RegretLedger::from_strategies(&pis, schedule, instance, &dense, |t| {
        Some(centralized_regret_bound(instance.beta, &instance.graph, theta_d, t))
    })?;
    let constants = ThmConstants::new(instance).ok();
    let local = RegretLedger::from_strategies(&mus[1..], schedule, instance, &dense, |t| {
        constants
            .as_ref()
            .and_then(|c| decentralized_regret_bound(c, instance, t).ok())
    })?;
    let horizon = schedule.len();
    let ot_ok = dense.size() <= cfg.ot_cap;
    let w1_mu_pi = (1..=horizon)
        .map(|t| {
            if ot_ok {
                wasserstein1_hamming_with_cap(&mus[t], &pis[t - 1], &instance.graph, instance.q, cfg.ot_cap).map(Some)
            } else {
                Ok(None)
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let tv_mu_pi = (1..=horizon)
        .map(|t| tv_distance(&mus[t], &pis[t - 1]))
        .collect::<Result<Vec<_>, _>>()?;
    let kl_step = (1..=horizon)
        .map(|t| kl_divergence(&pis[t - 1], &pis[t]))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ExactMetrics {
        central,
        local,
        w1_mu_pi,
        tv_mu_pi,
        kl_step,
    })
}

const METRIC_COLUMNS: &str = "t,loss_centralized,loss_decentralized,cum_regret_centralized,cum_regret_LI,\
bound_eq12,bound_thm1,w1_mu_pi,tv_mu_pi,kl_step_centralized,kappa_star,delta_t";

/// Per-round CSV. Columns that cannot be computed for this run are left blank.
pub fn metrics_csv(instance: &Instance, horizon: usize, exact: Option<&ExactMetrics>) -> String {
    let n = instance.num_vertices();
    let delta = instance.max_degree();
    let theta_d = instance.mu0.theta_d();
    let constants = ThmConstants::new(instance).ok();
    let mut out = String::with_capacity(64 * (horizon + 1));
    out.push_str(METRIC_COLUMNS);
    out.push('\n');
    for t in 1..=horizon {
        let i = t - 1;
        let eq12 = centralized_regret_bound(instance.beta, &instance.graph, theta_d, t);
        let thm1 = constants
            .as_ref()
            .and_then(|c| decentralized_regret_bound(c, instance, t).ok());
        let cells = [
            t.to_string(),
            num(exact.map(|m| m.central.per_round_losses[i])),
            num(exact.map(|m| m.local.per_round_losses[i])),
            num(exact.map(|m| m.central.cumulative_regret[i])),
            num(exact.map(|m| m.local.cumulative_regret[i])),
            num(Some(eq12)),
            num(thm1),
            num(exact.and_then(|m| m.w1_mu_pi[i])),
            num(exact.map(|m| m.tv_mu_pi[i])),
            num(exact.map(|m| m.kl_step[i])),
            num(constants.map(|c| c.kappa_star)),
            num(Some(delta_t(instance.beta, n, delta, t))),
        ];
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn domination(values: &[f64], bounds: &[f64]) -> Value {
    if bounds.is_empty() {
        return Value::Null;
    }
    let worst = values
        .iter()
        .zip(bounds)
        .map(|(v, b)| b - v)
        .fold(f64::INFINITY, f64::min);
    json!({ "holds": worst >= 0.0, "min_margin": worst })
}

/// Runs one experiment and writes `metrics.csv`, `summary.json`,
/// `trajectory.csv` and `schedule.json` into the output directory.
pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<PathBuf, CliError> {
    let mut cfg = cfg.clone();
    init_workers(cfg.workers);
    let instance = cfg.instance()?;
    let schedule = cfg.schedule(&instance)?;
    let horizon = cfg.horizon;
    let costs = schedule.costs();

    let constants = match ThmConstants::new(&instance) {
        Ok(c) => Some(c),
        Err(netgibbs::Error::Regularity(db)) => {
            eprintln!("warning: Delta*beta = {db} >= 1; curvature and local-interaction bound columns are blank");
            None
        }
        Err(e) => return Err(e.into()),
    };

    let dense_ok = instance.dense(cfg.dense_cap).is_ok();
    if cfg.mode == Mode::Exact && !dense_ok {
        return Err(CliError::Config(format!(
            "exact mode needs q^|V| <= dense cap {}; use montecarlo mode",
            cfg.dense_cap
        )));
    }
    let exact = if dense_ok {
        Some(exact_metrics(&instance, costs, &cfg)?)
    } else {
        None
    };

    let mut summary = json!({
        "config": cfg,
        "graph_hash": instance.graph.hash(),
        "num_vertices": instance.num_vertices(),
        "max_degree": instance.max_degree(),
        "regular": instance.is_regular(),
        "constants": constants,
        "theta_d": instance.mu0.theta_d(),
        "schedule_provenance": schedule.provenance(),
    });
    if let Some(m) = &exact {
        summary["final_regret_centralized"] = json!(m.central.final_regret());
        summary["final_regret_LI"] = json!(m.local.final_regret());
        summary["comparator_value"] = json!(m.central.comparator_value());
        summary["bound_eq12_final"] = json!(m.central.bound_values.last());
        summary["bound_thm1_final"] = json!(m.local.bound_values.last());
        summary["dominated"] = json!({
            "centralized": domination(&m.central.cumulative_regret, &m.central.bound_values),
            "local_interaction": domination(&m.local.cumulative_regret, &m.local.bound_values),
        });
    }

    let path = simulate_path(&instance, costs, cfg.seed)?;
    summary["sample_path_cumulative_cost"] = json!(path.cumulative_cost());

    if cfg.mode == Mode::Montecarlo {
        summary["replicas"] = json!(cfg.replicas);
        summary["mean_cumulative_cost"] = json!(mean_cumulative_cost(&instance, costs, cfg.seed, cfg.replicas)?);
        if dense_ok {
            summary["checkpoints"] = montecarlo_checkpoints(&instance, &schedule, &cfg)?;
        }
    }

    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let metrics = dir.join("metrics.csv");
    write_file(&metrics, &metrics_csv(&instance, horizon, exact.as_ref()))?;
    let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    text.push('\n');
    write_file(&dir.join("summary.json"), &text)?;
    path.save_csv(&dir.join("trajectory.csv"))?;
    save_schedule(&schedule, &dir.join("schedule.json"))?;
    Ok(metrics)
}

/// Empirical versus exact distributions of `X_t` at the reporting checkpoints.
pub fn montecarlo_checkpoints(
    instance: &Instance,
    schedule: &CostSchedule,
    cfg: &ExperimentConfig,
) -> Result<Value, CliError> {
    let dense = instance.dense(cfg.dense_cap)?;
    let checkpoints = mc_checkpoints(schedule.horizon());
    let emp = empirical_distributions(instance, &dense, schedule.costs(), cfg.seed, cfg.replicas, &checkpoints)?;
    let mus = evolve_exact(instance, &dense, schedule.costs())?;
    let ot_ok = dense.size() <= cfg.ot_cap;
    let mut rows = Vec::new();
    for (k, &t) in checkpoints.iter().enumerate() {
        let tv = tv_distance(&emp[k], &mus[t])?;
        let w1 = if ot_ok {
            Some(wasserstein1_hamming_with_cap(
                &emp[k],
                &mus[t],
                &instance.graph,
                instance.q,
                cfg.ot_cap,
            )?)
        } else {
            None
        };
        rows.push(json!({ "t": t, "tv_empirical_exact": tv, "w1_empirical_exact": w1 }));
    }
    Ok(Value::Array(rows))
}

/// Runs the certification suite, prints the table or JSON and fails with
/// exit status 2 if any check fails.
pub fn cmd_verify(cfg: &ExperimentConfig, format: Format, report: Option<&Path>) -> Result<(), CliError> {
    let mut cfg = cfg.clone();
    init_workers(cfg.workers);
    let instance = cfg.instance()?;
    let schedule = cfg.schedule(&instance)?;
    let options = SuiteOptions {
        dense_cap: cfg.dense_cap,
        ot_cap: cfg.ot_cap,
        ..SuiteOptions::default()
    };
    let suite = check_suite(&instance, schedule.costs(), options)?;
    match format {
        Format::Table => print!("{}", suite.table()),
        Format::Json => println!("{}", suite.to_json()),
    }
    if let Some(path) = report {
        write_file(path, &(suite.to_json() + "\n"))?;
    }
    if suite.passed() {
        Ok(())
    } else {
        let failed: Vec<&str> = suite
            .reports
            .iter()
            .filter(|r| !r.passed)
            .map(|r| r.name.as_str())
            .collect();
        Err(CliError::Failed(format!("failed checks: {}", failed.join(", "))))
    }
}

/// Constants as `# key=value` lines followed by the bound curves for `t <= T`.
pub fn cmd_bounds(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let instance = cfg.instance()?;
    let n = instance.num_vertices();
    let delta = instance.max_degree();
    let beta = instance.beta;
    let theta_d = instance.mu0.theta_d();
    let horizon = cfg.horizon;
    let mut out = String::new();
    let _ = writeln!(out, "# num_vertices={n}");
    let _ = writeln!(out, "# max_degree={delta}");
    let _ = writeln!(out, "# q={}", instance.q);
    let _ = writeln!(out, "# beta={beta}");
    let _ = writeln!(out, "# theta_d={theta_d}");
    let constants = match ThmConstants::new(&instance) {
        Ok(c) => Some(c),
        Err(netgibbs::Error::Regularity(db)) => {
            let notice = format!("Delta*beta = {db} >= 1; local-interaction columns omitted");
            eprintln!("notice: {notice}");
            let _ = writeln!(out, "# notice={notice}");
            None
        }
        Err(e) => return Err(e.into()),
    };
    let deltas: Vec<f64> = (1..=horizon).map(|t| delta_t(beta, n, delta, t)).collect();
    match constants {
        Some(c) => {
            let _ = writeln!(out, "# kappa_star={}", c.kappa_star);
            let _ = writeln!(out, "# K={}", c.k);
            let _ = writeln!(out, "# T0={}", c.t0);
            let _ = writeln!(out, "# T1={}", c.t1);
            let tracking = tracking_sequence(horizon, c.kappa_star, &deltas, 0.0);
            let u = 1.0 - c.kappa_star;
            let mut p = 1.0;
            out.push_str("t,delta_t,tracking_bound,K_p_t,bound_eq12,bound_thm1\n");
            for t in 1..=horizon {
                let eq12 = centralized_regret_bound(beta, &instance.graph, theta_d, t);
                let thm1 = decentralized_regret_bound(&c, &instance, t)?;
                let _ = writeln!(
                    out,
                    "{t},{},{},{},{eq12},{thm1}",
                    deltas[t - 1],
                    tracking[t - 1],
                    c.k * p
                );
                p = p_poly_next(p, t, u);
            }
        }
        None => {
            out.push_str("t,delta_t,bound_eq12\n");
            for t in 1..=horizon {
                let eq12 = centralized_regret_bound(beta, &instance.graph, theta_d, t);
                let _ = writeln!(out, "{t},{},{eq12}", deltas[t - 1]);
            }
        }
    }
    Ok(out)
}
