//! Minimum-diameter-spanning-tree solver and self-stabilizing protocol lab.
//!
//! The crate has two halves. The sequential half ([`graph`], [`center`])
//! computes exact distances, per-edge centers, the absolute center and the
//! MDST of a weighted graph, together with brute-force oracles. The
//! distributed half ([`netsim`], [`proto`], [`checker`]) runs a composed
//! self-stabilizing algorithm — randomized unique naming, a stabilizing
//! distance-vector APSP and a distributed MDST protocol — on a deterministic
//! discrete-event simulator with fault injection, and measures stabilization
//! against per-edge legitimacy predicates.

pub mod center;
pub mod checker;
pub mod gen;
pub mod graph;
pub mod netsim;
pub mod proto;

pub use center::{
    absolute_center, boundary_eval, brute_force_center, brute_force_mdst, candidate_pairs,
    edge_skip_bound, gamma_star, mdst, prune_and_sort, BoundaryList, CandidatePair, CenterResult,
};
pub use checker::{PredicateReport, RunReport};
pub use graph::{
    all_pairs_distances, diameter_radius, general_distance, separation, shortest_path_tree,
    tree_diameter, DistanceTable, GeneralNode, GraphError, SpanningTree, TieOrder, WeightedGraph,
};
pub use netsim::{FaultEvent, Scenario, Simulation, Trace};
