//! Cost sequences `f_1, ..., f_T`: seeded generators and a JSON file format.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::cost::{check_entry, NetworkCost};
use crate::error::{Error, Result};
use crate::graph::NetworkGraph;

pub const SCHEDULE_FORMAT: &str = "netgibbs-schedule";
pub const SCHEDULE_VERSION: u32 = 1;

/// How a schedule was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub generator: String,
    pub seed: Option<u64>,
    pub params: Value,
}

impl Provenance {
    pub fn manual() -> Self {
        Self {
            generator: "manual".into(),
            seed: None,
            params: json!({}),
        }
    }
}

/// A fixed, nonreactive cost sequence tied to one graph.
#[derive(Debug, Clone, PartialEq)]
pub struct CostSchedule {
    graph_hash: String,
    num_vertices: usize,
    num_edges: usize,
    q: usize,
    costs: Vec<NetworkCost>,
    provenance: Provenance,
}

impl CostSchedule {
    /// Validates every cost against `graph`.
    pub fn new(graph: &NetworkGraph, q: usize, costs: Vec<NetworkCost>, provenance: Provenance) -> Result<Self> {
        for (t, f) in costs.iter().enumerate() {
            if f.q() != q {
                return Err(Error::Shape(format!("round {} has q = {}, expected {q}", t + 1, f.q())));
            }
            f.validate(graph)?;
        }
        Ok(Self {
            graph_hash: graph.hash(),
            num_vertices: graph.num_vertices(),
            num_edges: graph.num_edges(),
            q,
            costs,
            provenance,
        })
    }

    pub fn horizon(&self) -> usize {
        self.costs.len()
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn costs(&self) -> &[NetworkCost] {
        &self.costs
    }

    pub fn into_costs(self) -> Vec<NetworkCost> {
        self.costs
    }

    pub fn graph_hash(&self) -> &str {
        &self.graph_hash
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// The first `horizon` rounds.
    pub fn truncated(&self, horizon: usize) -> Result<Self> {
        if horizon > self.horizon() {
            return Err(Error::InvalidArgument(format!(
                "schedule has {} rounds, {horizon} requested",
                self.horizon()
            )));
        }
        let mut out = self.clone();
        out.costs.truncate(horizon);
        Ok(out)
    }

    /// Fails unless the schedule was built for `graph`.
    pub fn check_graph(&self, graph: &NetworkGraph) -> Result<()> {
        let hash = graph.hash();
        if hash != self.graph_hash {
            return Err(Error::Shape(format!(
                "schedule is for graph {}, got graph {hash}",
                self.graph_hash
            )));
        }
        Ok(())
    }

    /// Rounds `t >= 2` whose cost differs from round `t - 1`.
    pub fn shock_rounds(&self) -> Vec<usize> {
        self.costs
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[0] != w[1])
            .map(|(i, _)| i + 2)
            .collect()
    }

    pub fn to_json(&self) -> String {
        let file = ScheduleFile {
            format: SCHEDULE_FORMAT.into(),
            version: SCHEDULE_VERSION,
            graph_hash: self.graph_hash.clone(),
            num_vertices: self.num_vertices,
            num_edges: self.num_edges,
            q: self.q,
            horizon: self.horizon(),
            provenance: self.provenance.clone(),
            rounds: self
                .costs
                .iter()
                .map(|f| Round {
                    phi: f.vertex_costs().to_vec(),
                    psi: f.edge_costs().to_vec(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("schedule serializes")
    }

    /// Parses and validates a schedule file's contents.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: ScheduleFile = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            Error::Parse {
                location: format!("{path} (line {}, column {})", inner.line(), inner.column()),
                message: inner.to_string(),
            }
        })?;
        file.into_schedule()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Round {
    phi: Vec<Vec<f64>>,
    psi: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleFile {
    format: String,
    version: u32,
    graph_hash: String,
    num_vertices: usize,
    num_edges: usize,
    q: usize,
    #[serde(rename = "T")]
    horizon: usize,
    provenance: Provenance,
    rounds: Vec<Round>,
}

impl ScheduleFile {
    fn into_schedule(self) -> Result<CostSchedule> {
        let header = |message: String| Error::Parse {
            location: "header".into(),
            message,
        };
        if self.format != SCHEDULE_FORMAT {
            return Err(header(format!(
                "format {:?}, expected {SCHEDULE_FORMAT:?}",
                self.format
            )));
        }
        if self.version != SCHEDULE_VERSION {
            return Err(header(format!("unsupported version {}", self.version)));
        }
        if self.q == 0 {
            return Err(header("q must be positive".into()));
        }
        if self.rounds.len() != self.horizon {
            return Err(header(format!(
                "T = {} but {} rounds present",
                self.horizon,
                self.rounds.len()
            )));
        }
        let q = self.q;
        let mut costs = Vec::with_capacity(self.rounds.len());
        for (t, round) in self.rounds.into_iter().enumerate() {
            let shape = |what: &str, found: usize, expected: usize| {
                Error::Shape(format!("rounds[{t}].{what} has {found} entries, expected {expected}"))
            };
            if round.phi.len() != self.num_vertices {
                return Err(shape("phi", round.phi.len(), self.num_vertices));
            }
            if round.psi.len() != self.num_edges {
                return Err(shape("psi", round.psi.len(), self.num_edges));
            }
            for (v, row) in round.phi.iter().enumerate() {
                if row.len() != q {
                    return Err(shape(&format!("phi[{v}]"), row.len(), q));
                }
                for (a, &x) in row.iter().enumerate() {
                    check_entry(x, || format!("rounds[{t}].phi[{v}][{a}]"))?;
                }
            }
            for (e, row) in round.psi.iter().enumerate() {
                if row.len() != q * q {
                    return Err(shape(&format!("psi[{e}]"), row.len(), q * q));
                }
                for (k, &x) in row.iter().enumerate() {
                    check_entry(x, || format!("rounds[{t}].psi[{e}][{k}]"))?;
                }
            }
            costs.push(NetworkCost::from_checked_tables(q, round.phi, round.psi));
        }
        Ok(CostSchedule {
            graph_hash: self.graph_hash,
            num_vertices: self.num_vertices,
            num_edges: self.num_edges,
            q,
            costs,
            provenance: self.provenance,
        })
    }
}

pub fn save_schedule(schedule: &CostSchedule, path: &Path) -> Result<()> {
    std::fs::write(path, schedule.to_json()).map_err(|e| Error::io(path, e))
}

pub fn load_schedule(path: &Path) -> Result<CostSchedule> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    CostSchedule::from_json(&text)
}

fn random_cost(graph: &NetworkGraph, q: usize, amplitude: f64, rng: &mut ChaCha8Rng) -> NetworkCost {
    let mut draw = |len: usize| -> Vec<f64> { (0..len).map(|_| rng.random_range(-amplitude..=amplitude)).collect() };
    let phi = (0..graph.num_vertices()).map(|_| draw(q)).collect();
    let psi = (0..graph.num_edges()).map(|_| draw(q * q)).collect();
    NetworkCost::from_checked_tables(q, phi, psi)
}

fn check_q(q: usize) -> Result<()> {
    if q == 0 {
        return Err(Error::InvalidArgument("q must be positive".into()));
    }
    Ok(())
}

/// Every entry independent and uniform on `[-amplitude, amplitude]`.
pub fn generate_iid(graph: &NetworkGraph, q: usize, horizon: usize, seed: u64, amplitude: f64) -> Result<CostSchedule> {
    check_q(q)?;
    if !(amplitude > 0.0 && amplitude <= 1.0) {
        return Err(Error::InvalidArgument(format!("amplitude {amplitude} outside (0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let costs = (0..horizon)
        .map(|_| random_cost(graph, q, amplitude, &mut rng))
        .collect();
    CostSchedule::new(
        graph,
        q,
        costs,
        Provenance {
            generator: "iid".into(),
            seed: Some(seed),
            params: json!({ "amplitude": amplitude }),
        },
    )
}

/// Piecewise-constant costs. Each round after the first starts a new epoch
/// with probability `1 / epoch_mean`, so epoch lengths are geometric with
/// mean `epoch_mean`; a new epoch draws a fresh full-range cost.
pub fn generate_shocks(
    graph: &NetworkGraph,
    q: usize,
    horizon: usize,
    seed: u64,
    epoch_mean: usize,
) -> Result<CostSchedule> {
    check_q(q)?;
    if epoch_mean == 0 {
        return Err(Error::InvalidArgument("epoch_mean must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = 1.0 / epoch_mean as f64;
    let mut costs: Vec<NetworkCost> = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let shock = t == 0 || rng.random_bool(p);
        let f = if shock {
            random_cost(graph, q, 1.0, &mut rng)
        } else {
            costs[t - 1].clone()
        };
        costs.push(f);
    }
    CostSchedule::new(
        graph,
        q,
        costs,
        Provenance {
            generator: "shocks".into(),
            seed: Some(seed),
            params: json!({ "epoch_mean": epoch_mean }),
        },
    )
}

/// `f_t = 0` for every round.
pub fn generate_zero(graph: &NetworkGraph, q: usize, horizon: usize) -> Result<CostSchedule> {
    check_q(q)?;
    CostSchedule::new(
        graph,
        q,
        vec![NetworkCost::zero(graph, q); horizon],
        Provenance {
            generator: "zero".into(),
            seed: None,
            params: json!({}),
        },
    )
}
