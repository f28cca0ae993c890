use crate::cost::DefaultMeasure;
use crate::error::{Error, Result};
use crate::graph::NetworkGraph;
use crate::measures::Dist;
use crate::profile::ProfileSpace;

/// Default cap on `q^|V|` for dense distributions over the profile space.
pub const DEFAULT_DENSE_CAP: usize = 65_536;

/// A network, its action alphabet, default behavior and inverse temperature.
#[derive(Debug, Clone)]
pub struct Instance {
    pub graph: NetworkGraph,
    pub q: usize,
    pub mu0: DefaultMeasure,
    pub beta: f64,
}

impl Instance {
    pub fn new(graph: NetworkGraph, q: usize, mu0: DefaultMeasure, beta: f64) -> Result<Self> {
        if q < 1 {
            return Err(Error::InvalidArgument("q must be at least 1".into()));
        }
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "beta must be finite and nonnegative, got {beta}"
            )));
        }
        mu0.check_graph(&graph, q)?;
        Ok(Self { graph, q, mu0, beta })
    }

    /// Uniform default measure.
    pub fn uniform(graph: NetworkGraph, q: usize, beta: f64) -> Result<Self> {
        let mu0 = DefaultMeasure::uniform(graph.num_vertices(), q);
        Self::new(graph, q, mu0, beta)
    }

    /// Path on 4 vertices, binary actions, uniform defaults, `beta = 0.2`.
    pub fn canonical() -> Self {
        Self::uniform(NetworkGraph::path(4), 2, 0.2).expect("valid instance")
    }

    pub fn num_vertices(&self) -> usize {
        self.graph.num_vertices()
    }

    pub fn max_degree(&self) -> usize {
        self.graph.max_degree()
    }

    /// `Delta * beta < 1`.
    pub fn is_regular(&self) -> bool {
        (self.max_degree() as f64) * self.beta < 1.0
    }

    pub fn dense(&self, cap: usize) -> Result<DenseSpace> {
        let space = ProfileSpace::new(self.num_vertices(), self.q, cap)?;
        let mu0 = self.mu0.dense(&space);
        Ok(DenseSpace { space, mu0 })
    }
}

/// The enumerated profile space together with the dense product `mu_0`.
#[derive(Debug, Clone)]
pub struct DenseSpace {
    pub space: ProfileSpace,
    pub mu0: Dist,
}

impl DenseSpace {
    pub fn size(&self) -> usize {
        self.space.size()
    }
}
