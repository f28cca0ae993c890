//! Experiment configuration: built-in defaults, overlaid by a JSON file,
//! overlaid by command-line flags.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use netgibbs::measures::DEFAULT_OT_CAP;
use netgibbs::schedule::{generate_iid, generate_shocks, generate_zero, load_schedule};
use netgibbs::{CostSchedule, DefaultMeasure, Instance, NetworkGraph, DEFAULT_DENSE_CAP};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Montecarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "lowercase", deny_unknown_fields)]
pub enum ScheduleSpec {
    File { path: PathBuf },
    Iid { amplitude: f64 },
    Shocks { epoch_mean: usize },
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GeneratorName {
    Iid,
    Shocks,
    Zero,
}

/// Contents of a `--config` file. Every field is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub graph: Option<String>,
    pub graph_path: Option<PathBuf>,
    pub q: Option<usize>,
    pub beta: Option<f64>,
    #[serde(rename = "T")]
    pub horizon: Option<usize>,
    pub mu0: Option<String>,
    pub mode: Option<Mode>,
    pub replicas: Option<u64>,
    pub seed: Option<u64>,
    pub schedule: Option<ScheduleSpec>,
    pub output_dir: Option<PathBuf>,
    pub dense_cap: Option<usize>,
    pub ot_cap: Option<usize>,
    pub allow_large_caps: Option<bool>,
    pub workers: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// JSON configuration file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Built-in graph: `path:N`, `cycle:N` or `star:N`.
    #[arg(long)]
    pub graph: Option<String>,
    /// Graph file: first line `|V|`, then one `u v` edge per line (1-based).
    #[arg(long)]
    pub graph_path: Option<PathBuf>,
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Horizon T.
    #[arg(short = 'T', long = "horizon")]
    pub horizon: Option<usize>,
    /// `uniform` or a file with one line of q probabilities per vertex.
    #[arg(long)]
    pub mu0: Option<String>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub replicas: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Schedule file written by `gen`.
    #[arg(long, conflicts_with = "generator")]
    pub schedule: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub generator: Option<GeneratorName>,
    #[arg(long)]
    pub amplitude: Option<f64>,
    #[arg(long)]
    pub epoch_mean: Option<usize>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[arg(long)]
    pub dense_cap: Option<usize>,
    #[arg(long)]
    pub ot_cap: Option<usize>,
    /// Required to raise either cap above its default.
    #[arg(long)]
    pub allow_large_caps: bool,
    /// Worker threads; defaults to NETGIBBS_WORKERS, then to the core count.
    #[arg(long, env = "NETGIBBS_WORKERS")]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GraphSource {
    Builtin { spec: String },
    File { path: PathBuf },
}

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub graph: GraphSource,
    pub q: usize,
    pub beta: f64,
    #[serde(rename = "T")]
    pub horizon: usize,
    #[serde(skip)]
    pub horizon_explicit: bool,
    pub mu0: String,
    pub mode: Mode,
    pub replicas: u64,
    pub seed: u64,
    pub schedule: ScheduleSpec,
    pub output_dir: PathBuf,
    pub dense_cap: usize,
    pub ot_cap: usize,
    pub workers: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            graph: GraphSource::Builtin { spec: "path:4".into() },
            q: 2,
            beta: 0.2,
            horizon: 200,
            horizon_explicit: false,
            mu0: "uniform".into(),
            mode: Mode::Exact,
            replicas: 1000,
            seed: 7,
            schedule: ScheduleSpec::Iid { amplitude: 1.0 },
            output_dir: PathBuf::from("netgibbs-out"),
            dense_cap: DEFAULT_DENSE_CAP,
            ot_cap: DEFAULT_OT_CAP,
            workers: None,
        }
    }
}

fn overlay_schedule(
    base: ScheduleSpec,
    generator: Option<GeneratorName>,
    amplitude: Option<f64>,
    epoch_mean: Option<usize>,
) -> Result<ScheduleSpec, CliError> {
    let spec = match generator {
        Some(GeneratorName::Iid) => ScheduleSpec::Iid { amplitude: 1.0 },
        Some(GeneratorName::Shocks) => ScheduleSpec::Shocks { epoch_mean: 10 },
        Some(GeneratorName::Zero) => ScheduleSpec::Zero,
        None => base,
    };
    Ok(match spec {
        ScheduleSpec::Iid { amplitude: a } => ScheduleSpec::Iid {
            amplitude: amplitude.unwrap_or(a),
        },
        ScheduleSpec::Shocks { epoch_mean: m } => ScheduleSpec::Shocks {
            epoch_mean: epoch_mean.unwrap_or(m),
        },
        other => {
            if amplitude.is_some() || epoch_mean.is_some() {
                return Err(CliError::Usage(
                    "--amplitude and --epoch-mean apply only to the iid and shocks generators".into(),
                ));
            }
            other
        }
    })
}

impl ExperimentConfig {
    /// Applies defaults, then the `--config` file, then flags, and validates.
    pub fn resolve(args: &RunArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let mut cfg = Self::default();

        let graph = |spec: &Option<String>, path: &Option<PathBuf>| -> Result<Option<GraphSource>, CliError> {
            match (spec, path) {
                (Some(_), Some(_)) => Err(CliError::Usage("give either a built-in graph or a graph file".into())),
                (Some(s), None) => Ok(Some(GraphSource::Builtin { spec: s.clone() })),
                (None, Some(p)) => Ok(Some(GraphSource::File { path: p.clone() })),
                (None, None) => Ok(None),
            }
        };
        if let Some(g) = graph(&file.graph, &file.graph_path)? {
            cfg.graph = g;
        }
        if let Some(g) = graph(&args.graph, &args.graph_path)? {
            cfg.graph = g;
        }

        cfg.q = pick(args.q, file.q, cfg.q);
        cfg.beta = pick(args.beta, file.beta, cfg.beta);
        cfg.horizon_explicit = args.horizon.or(file.horizon).is_some();
        cfg.horizon = pick(args.horizon, file.horizon, cfg.horizon);
        cfg.mu0 = args.mu0.clone().or(file.mu0).unwrap_or(cfg.mu0);
        cfg.mode = pick(args.mode, file.mode, cfg.mode);
        cfg.replicas = pick(args.replicas, file.replicas, cfg.replicas);
        cfg.seed = pick(args.seed, file.seed, cfg.seed);
        cfg.output_dir = args.output_dir.clone().or(file.output_dir).unwrap_or(cfg.output_dir);
        cfg.dense_cap = pick(args.dense_cap, file.dense_cap, cfg.dense_cap);
        cfg.ot_cap = pick(args.ot_cap, file.ot_cap, cfg.ot_cap);
        cfg.workers = args.workers.or(file.workers);

        let base = file.schedule.unwrap_or(cfg.schedule);
        cfg.schedule = match &args.schedule {
            Some(path) => {
                if args.amplitude.is_some() || args.epoch_mean.is_some() {
                    return Err(CliError::Usage(
                        "generator parameters given with a schedule file".into(),
                    ));
                }
                ScheduleSpec::File { path: path.clone() }
            }
            None => overlay_schedule(base, args.generator, args.amplitude, args.epoch_mean)?,
        };

        let allow_large = args.allow_large_caps || file.allow_large_caps.unwrap_or(false);
        cfg.validate(allow_large)?;
        Ok(cfg)
    }

    fn validate(&self, allow_large: bool) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.q == 0 {
            return bad("q must be at least 1".into());
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return bad(format!("beta must be finite and nonnegative, got {}", self.beta));
        }
        if self.horizon == 0 {
            return bad("T must be at least 1".into());
        }
        if self.mode == Mode::Montecarlo && self.replicas == 0 {
            return bad("montecarlo mode needs replicas >= 1".into());
        }
        if !allow_large && (self.dense_cap > DEFAULT_DENSE_CAP || self.ot_cap > DEFAULT_OT_CAP) {
            return bad(format!(
                "raising dense_cap above {DEFAULT_DENSE_CAP} or ot_cap above {DEFAULT_OT_CAP} \
                 requires --allow-large-caps (memory grows quadratically for exact transport)"
            ));
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1".into());
        }
        match &self.schedule {
            ScheduleSpec::Iid { amplitude } if !(*amplitude > 0.0 && *amplitude <= 1.0) => {
                bad(format!("amplitude {amplitude} outside (0, 1]"))
            }
            ScheduleSpec::Shocks { epoch_mean: 0 } => bad("epoch_mean must be at least 1".into()),
            _ => Ok(()),
        }
    }

    pub fn load_graph(&self) -> Result<NetworkGraph, CliError> {
        match &self.graph {
            GraphSource::File { path } => Ok(NetworkGraph::load(path)?),
            GraphSource::Builtin { spec } => builtin_graph(spec),
        }
    }

    pub fn instance(&self) -> Result<Instance, CliError> {
        let graph = self.load_graph()?;
        let mu0 = if self.mu0 == "uniform" {
            DefaultMeasure::uniform(graph.num_vertices(), self.q)
        } else {
            let path = Path::new(&self.mu0);
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            DefaultMeasure::parse(&text)?
        };
        Ok(Instance::new(graph, self.q, mu0, self.beta)?)
    }

    /// Builds or loads the schedule. A file schedule must belong to the graph,
    /// and sets the horizon unless one was given explicitly.
    pub fn schedule(&mut self, instance: &Instance) -> Result<CostSchedule, CliError> {
        let graph = &instance.graph;
        let schedule = match &self.schedule {
            ScheduleSpec::Iid { amplitude } => generate_iid(graph, self.q, self.horizon, self.seed, *amplitude)?,
            ScheduleSpec::Shocks { epoch_mean } => {
                generate_shocks(graph, self.q, self.horizon, self.seed, *epoch_mean)?
            }
            ScheduleSpec::Zero => generate_zero(graph, self.q, self.horizon)?,
            ScheduleSpec::File { path } => {
                let s = load_schedule(path)?;
                s.check_graph(graph)?;
                if s.q() != self.q {
                    return Err(CliError::Config(format!(
                        "schedule has q = {}, config has q = {}",
                        s.q(),
                        self.q
                    )));
                }
                if !self.horizon_explicit {
                    self.horizon = s.horizon();
                }
                if s.horizon() < self.horizon {
                    return Err(CliError::Config(format!(
                        "schedule has {} rounds, T = {} requested",
                        s.horizon(),
                        self.horizon
                    )));
                }
                if self.horizon == 0 {
                    return Err(CliError::Config("schedule file has no rounds".into()));
                }
                s.truncated(self.horizon)?
            }
        };
        Ok(schedule)
    }
}

fn pick<T>(flag: Option<T>, file_value: Option<T>, default: T) -> T {
    flag.or(file_value).unwrap_or(default)
}

pub fn builtin_graph(spec: &str) -> Result<NetworkGraph, CliError> {
    let (kind, n) = spec
        .split_once(':')
        .ok_or_else(|| CliError::Config(format!("graph {spec:?}: expected kind:N")))?;
    let n: usize = n
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("graph {spec:?}: bad vertex count")))?;
    if n == 0 {
        return Err(CliError::Config("graph needs at least one vertex".into()));
    }
    match kind.trim() {
        "path" => Ok(NetworkGraph::path(n)),
        "cycle" => Ok(NetworkGraph::cycle(n)?),
        "star" => {
            let edges: Vec<(usize, usize)> = (1..n).map(|u| (0, u)).collect();
            Ok(NetworkGraph::new(n, &edges)?)
        }
        other => Err(CliError::Config(format!("unknown graph kind {other:?}"))),
    }
}
