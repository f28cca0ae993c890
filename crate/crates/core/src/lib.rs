pub mod centralized;
pub mod cost;
pub mod error;
pub mod glauber;
pub mod graph;
pub mod instance;
pub mod measures;
pub mod profile;
pub mod schedule;
pub mod theory;

pub use centralized::{CentralizedState, RegretLedger};
pub use cost::{DefaultMeasure, NetworkCost, RunningAvgCost};
pub use error::{Error, Result};
pub use glauber::{GlauberKernel, LocalConditional, SamplePath};
pub use graph::NetworkGraph;
pub use instance::{DenseSpace, Instance, DEFAULT_DENSE_CAP};
pub use measures::Dist;
pub use profile::{ActionProfile, ProfileSpace};
pub use schedule::{CostSchedule, Provenance};
pub use theory::{BoundReport, CheckStatus, SuiteOptions, SuiteReport, ThmConstants};
