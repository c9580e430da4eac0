//! Scenario description: what to run, from which state, for how long.

use serde::{Deserialize, Serialize};

use super::fault::FaultEvent;
use super::trace::TraceMode;
use crate::graph::WeightedGraph;
use crate::proto::ProtocolMode;

/// Initial-state mode: clean protocol defaults, or uniformly random
/// syntactically valid states drawn from a seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMode {
    Clean,
    Arbitrary(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SchedulerPolicy {
    /// Random per-phase activation order, messages delivered the unit they
    /// are stored.
    #[default]
    Fair,
    /// Seeded worst-case bias: permuted orders plus per-link delivery
    /// deferral to the following unit (the fairness window's edge).
    Adversarial,
}

/// On-disk scenario file: references the graph by path.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub graph: String,
    pub protocol: ProtocolMode,
    pub init: InitMode,
    #[serde(default)]
    pub scheduler: SchedulerPolicy,
    pub seed: u64,
    pub horizon: u64,
    #[serde(default)]
    pub faults: Vec<FaultEvent>,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub graph: WeightedGraph,
    pub protocol: ProtocolMode,
    pub init: InitMode,
    pub scheduler: SchedulerPolicy,
    pub seed: u64,
    pub horizon: u64,
    pub faults: Vec<FaultEvent>,
    pub trace_mode: TraceMode,
    pub dump_tables: bool,
}

impl RunConfig {
    pub fn new(graph: WeightedGraph, protocol: ProtocolMode) -> Self {
        RunConfig {
            graph,
            protocol,
            init: InitMode::Clean,
            scheduler: SchedulerPolicy::Fair,
            seed: 0,
            horizon: 100,
            faults: Vec::new(),
            trace_mode: TraceMode::Digests,
            dump_tables: false,
        }
    }

    pub fn with_init(mut self, init: InitMode) -> Self {
        self.init = init;
        self
    }
    pub fn with_scheduler(mut self, s: SchedulerPolicy) -> Self {
        self.scheduler = s;
        self
    }
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
    pub fn with_horizon(mut self, horizon: u64) -> Self {
        self.horizon = horizon;
        self
    }
    pub fn with_faults(mut self, faults: Vec<FaultEvent>) -> Self {
        self.faults = faults;
        self
    }
    pub fn with_trace(mut self, mode: TraceMode) -> Self {
        self.trace_mode = mode;
        self
    }

    /// Scenario echo for reports (graph inlined as its text format).
    pub fn echo(&self) -> ScenarioEcho {
        ScenarioEcho {
            graph: self.graph.format(),
            protocol: self.protocol,
            init: self.init,
            scheduler: self.scheduler,
            seed: self.seed,
            horizon: self.horizon,
            faults: self.faults.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioEcho {
    pub graph: String,
    pub protocol: ProtocolMode,
    pub init: InitMode,
    pub scheduler: SchedulerPolicy,
    pub seed: u64,
    pub horizon: u64,
    pub faults: Vec<FaultEvent>,
}
