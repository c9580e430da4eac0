//! Stabilization checker: evaluates the per-edge legitimacy predicates over
//! simulation runs, measures suffix times, audits local checkability and
//! fair composition, and assembles run reports.
//!
//! Predicates (evaluated on node states; link contents are excluded, which
//! the report notes):
//!   - naming: both endpoints in phase 3 with duplicate-free id lists,
//!   - routing: both endpoints hold finite entries for each other,
//!   - center agreement: every node's adopted bound equals the absolute
//!     center separation of the current graph within 1e-9.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::center::{absolute_center, mdst_ordered};
use crate::graph::{
    all_pairs_distances, is_spanning_tree, tree_diameter, GeneralNode, SpanningTree, TieOrder,
    WeightedGraph, TOL,
};
use crate::netsim::{Counters, RunConfig, ScenarioEcho, SimError, Simulation, Trace};
use crate::proto::un::has_duplicate;
use crate::proto::{NodeState, ProtocolMode};

/// Per-edge naming predicate: both endpoints in phase 3, both id lists
/// duplicate-free.
pub fn eval_lp_un(nodes: &[NodeState], u: usize, v: usize) -> bool {
    let ok = |i: usize| {
        let un = &nodes[i].un;
        un.phase == 3 && !has_duplicate(&un.id_list)
    };
    ok(u) && ok(v)
}

/// Per-edge routing predicate: finite distance entries both ways.
pub fn eval_lp_apsp(nodes: &[NodeState], u: usize, v: usize) -> bool {
    let finite = |a: usize, b: usize| {
        let id_b = nodes[b].un.id;
        id_b != 0 && nodes[a].apsp.dist.contains_key(&id_b)
    };
    finite(u, v) && finite(v, u)
}

/// Center agreement: every node's adopted upper bound equals the oracle
/// separation within tolerance.
pub fn eval_theta(nodes: &[NodeState], oracle_sep: f64) -> bool {
    nodes.iter().all(|n| match n.mdst.phi_star {
        Some(phi) => (phi.upbound - oracle_sep).abs() <= TOL,
        None => false,
    })
}

pub fn psi(graph: &WeightedGraph, nodes: &[NodeState]) -> bool {
    graph.edges().iter().all(|e| eval_lp_un(nodes, e.u, e.v))
}

pub fn psi_prime(graph: &WeightedGraph, nodes: &[NodeState]) -> bool {
    graph.edges().iter().all(|e| eval_lp_apsp(nodes, e.u, e.v))
}

fn truth_string(truth: &[bool]) -> String {
    truth.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// Truth sequence of one predicate over a run, with its minimal suffix time
/// at or after the last injected fault.
#[derive(Debug, Clone, Serialize)]
pub struct PredicateReport {
    pub name: String,
    /// One character per unit, '1' where the predicate held.
    pub truth: String,
    /// Minimal unit t (≥ last fault) such that the predicate holds at every
    /// logged configuration from t through the horizon.
    pub first_suffix_time: Option<u64>,
    /// Distinct outcome marker: false means "did not stabilize within the
    /// horizon", not an error.
    pub stabilized: bool,
}

impl PredicateReport {
    /// Build from a per-unit truth vector (index 0 = unit 1).
    pub fn from_truth(name: &str, truth: &[bool], last_fault: u64) -> Self {
        let mut start: Option<usize> = None;
        for (i, &b) in truth.iter().enumerate().rev() {
            if b {
                start = Some(i);
            } else {
                break;
            }
        }
        let first_suffix_time = start.map(|i| (i as u64 + 1).max(last_fault));
        PredicateReport {
            name: name.to_string(),
            truth: truth_string(truth),
            first_suffix_time,
            stabilized: first_suffix_time.is_some(),
        }
    }
}

/// A stability violation of Definition-style condition (iii): the predicate
/// held at `t − 1` and fell at `t` with no fault in between.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StabilityViolation {
    pub t: u64,
    pub u: usize,
    pub v: usize,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct CheckabilityAudit {
    /// Per-edge per-unit transitions examined.
    pub transitions_checked: u64,
    /// Transitions excluded because they fall between a fault and the
    /// system's re-stabilization: their falsifications are attributed to
    /// the fault, not to the protocol.
    pub fault_excluded: u64,
    pub violations: Vec<StabilityViolation>,
    /// Condition (i): on every sampled all-edges-true unit the global
    /// predicate held (the conjunction really is the global predicate).
    pub conjunction_ok: bool,
    /// Condition (ii): some observed configuration satisfied every local
    /// predicate.
    pub witness_found: bool,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct CompositionAudit {
    /// Naming-layer writes into routing/MDST variables, with their units.
    pub cross_write_units: Vec<u64>,
    /// Cross-writes at or after the naming predicate's suffix time.
    pub cross_writes_after_psi: u64,
    /// Every node activated in every unit (fair composition condition (iv)).
    pub fairness_ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TreeReport {
    pub edges: Vec<(usize, usize)>,
    pub diameter: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub separation: f64,
    pub center: String,
    pub tree_edges: Vec<(usize, usize)>,
    pub diameter: f64,
}

/// Compact verdict of one checkability audit for the report.
#[derive(Debug, Clone, Serialize)]
pub struct AuditSummary {
    pub transitions_checked: u64,
    pub fault_excluded: u64,
    pub violations: usize,
    pub conjunction_ok: bool,
    pub witness_found: bool,
}

impl From<&CheckabilityAudit> for AuditSummary {
    fn from(a: &CheckabilityAudit) -> Self {
        AuditSummary {
            transitions_checked: a.transitions_checked,
            fault_excluded: a.fault_excluded,
            violations: a.violations.len(),
            conjunction_ok: a.conjunction_ok,
            witness_found: a.witness_found,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub scenario: ScenarioEcho,
    pub predicates: BTreeMap<String, PredicateReport>,
    /// For composed runs: naming suffix ≤ routing suffix ≤ agreement suffix.
    pub layered_order_ok: Option<bool>,
    /// Tree extracted from the final configuration, when it spans.
    pub tree: Option<TreeReport>,
    /// Sequential solver on the final graph, ordered by the final ids.
    pub oracle: Option<OracleReport>,
    pub tree_matches_oracle: Option<bool>,
    pub counters: Counters,
    pub composition: CompositionAudit,
    /// Stability audits of the naming and routing local predicates.
    pub audits: BTreeMap<String, AuditSummary>,
    pub stabilized: bool,
    pub final_ids: Vec<u32>,
    pub notes: Vec<String>,
}

/// Streaming observer: evaluates predicates after every unit and records
/// the per-edge tracks the audits consume.
pub struct StabChecker {
    oracle_sep: f64,
    psi_truth: Vec<bool>,
    psi_p_truth: Vec<bool>,
    theta_truth: Vec<bool>,
    /// Per unit: sorted per-edge truth of each local predicate.
    track_un: Vec<Vec<((usize, usize), bool)>>,
    track_apsp: Vec<Vec<((usize, usize), bool)>>,
    cross_writes: Vec<u64>,
    pub last_fault: u64,
    fault_units: Vec<u64>,
    conjunction_ok_un: bool,
    conjunction_ok_apsp: bool,
}

impl StabChecker {
    pub fn new(graph: &WeightedGraph) -> Self {
        let dt = all_pairs_distances(graph);
        let oracle_sep = absolute_center(graph, &dt).separation;
        StabChecker {
            oracle_sep,
            psi_truth: Vec::new(),
            psi_p_truth: Vec::new(),
            theta_truth: Vec::new(),
            track_un: Vec::new(),
            track_apsp: Vec::new(),
            cross_writes: Vec::new(),
            last_fault: 0,
            fault_units: Vec::new(),
            conjunction_ok_un: true,
            conjunction_ok_apsp: true,
        }
    }

    pub fn oracle_sep(&self) -> f64 {
        self.oracle_sep
    }

    /// Call once after every `Simulation::step`.
    pub fn observe(&mut self, sim: &Simulation) {
        let t = sim.time();
        let ev = &sim.last_events;
        if !ev.faults.is_empty() {
            self.last_fault = t;
            self.fault_units.push(t);
        }
        if ev.topology_changed {
            let dt = all_pairs_distances(sim.graph());
            self.oracle_sep = absolute_center(sim.graph(), &dt).separation;
        }
        for _ in &ev.cross_writes {
            self.cross_writes.push(t);
        }

        let nodes = sim.nodes();
        let graph = sim.graph();
        let mut lp_un = Vec::with_capacity(graph.m());
        let mut lp_apsp = Vec::with_capacity(graph.m());
        let mut all_un = true;
        let mut all_apsp = true;
        for e in graph.edges() {
            let ku = eval_lp_un(nodes, e.u, e.v);
            let ka = eval_lp_apsp(nodes, e.u, e.v);
            all_un &= ku;
            all_apsp &= ka;
            lp_un.push(((e.u, e.v), ku));
            lp_apsp.push(((e.u, e.v), ka));
        }
        let theta_now = eval_theta(nodes, self.oracle_sep);
        self.psi_truth.push(all_un);
        self.psi_p_truth.push(all_apsp);
        self.theta_truth.push(theta_now);
        self.track_un.push(lp_un);
        self.track_apsp.push(lp_apsp);

        // condition (i): the conjunction over edges is the global predicate
        self.conjunction_ok_un &= all_un == psi(graph, nodes);
        self.conjunction_ok_apsp &= all_apsp == psi_prime(graph, nodes);
    }

    /// Units attributed to faults: from each fault until the first unit from
    /// which every requested global predicate holds through the rest of its
    /// fault-free segment (the system has demonstrably re-stabilized).
    fn excluded_units(&self, requested: &[&str]) -> Vec<bool> {
        let horizon = self.psi_truth.len();
        let all_ok: Vec<bool> = (0..horizon)
            .map(|i| {
                requested.iter().all(|&p| match p {
                    "psi" => self.psi_truth[i],
                    "psi_prime" => self.psi_p_truth[i],
                    "theta" => self.theta_truth[i],
                    _ => true,
                })
            })
            .collect();
        let mut excluded = vec![false; horizon];
        let mut faults: Vec<usize> = self
            .fault_units
            .iter()
            .map(|&t| (t - 1) as usize)
            .collect();
        faults.sort_unstable();
        for (k, &f) in faults.iter().enumerate() {
            let seg_end = faults.get(k + 1).copied().unwrap_or(horizon);
            // earliest index from which all_ok holds through the segment
            let mut stable_from = seg_end;
            let mut i = seg_end;
            while i > f {
                if all_ok[i - 1] {
                    stable_from = i - 1;
                    i -= 1;
                } else {
                    break;
                }
            }
            for slot in excluded.iter_mut().take(stable_from).skip(f) {
                *slot = true;
            }
        }
        excluded
    }

    fn audit_from_track(
        &self,
        track: &[Vec<((usize, usize), bool)>],
        excluded: &[bool],
        conjunction_ok: bool,
        witness: bool,
    ) -> CheckabilityAudit {
        let mut audit = CheckabilityAudit {
            conjunction_ok,
            witness_found: witness,
            ..Default::default()
        };
        for t in 1..track.len() {
            let counted = !excluded[t] && !excluded[t - 1];
            for &(edge, held) in &track[t - 1] {
                let still = track[t]
                    .iter()
                    .find(|(e, _)| *e == edge)
                    .map(|&(_, b)| b);
                let still = match still {
                    Some(b) => b,
                    None => continue, // edge removed between the units
                };
                if !counted {
                    audit.fault_excluded += 1;
                } else {
                    audit.transitions_checked += 1;
                    if held && !still {
                        audit.violations.push(StabilityViolation {
                            t: t as u64 + 1,
                            u: edge.0,
                            v: edge.1,
                        });
                    }
                }
            }
        }
        audit
    }

    /// Definition-style audits of both local predicates.
    pub fn checkability_audits(
        &self,
        requested: &[&str],
    ) -> (CheckabilityAudit, CheckabilityAudit) {
        let excluded = self.excluded_units(requested);
        let un = self.audit_from_track(
            &self.track_un,
            &excluded,
            self.conjunction_ok_un,
            self.psi_truth.iter().any(|&b| b),
        );
        let apsp = self.audit_from_track(
            &self.track_apsp,
            &excluded,
            self.conjunction_ok_apsp,
            self.psi_p_truth.iter().any(|&b| b),
        );
        (un, apsp)
    }

    pub fn psi_report(&self) -> PredicateReport {
        PredicateReport::from_truth("psi", &self.psi_truth, self.last_fault)
    }
    pub fn psi_prime_report(&self) -> PredicateReport {
        PredicateReport::from_truth("psi_prime", &self.psi_p_truth, self.last_fault)
    }
    pub fn theta_report(&self) -> PredicateReport {
        PredicateReport::from_truth("theta", &self.theta_truth, self.last_fault)
    }

    pub fn composition_audit(&self, sim: &Simulation) -> CompositionAudit {
        let psi_suffix = self.psi_report().first_suffix_time;
        let after = match psi_suffix {
            Some(s) => self.cross_writes.iter().filter(|&&t| t >= s).count() as u64,
            None => 0,
        };
        CompositionAudit {
            cross_write_units: self.cross_writes.clone(),
            cross_writes_after_psi: after,
            fairness_ok: sim.counters.activations == sim.counters.units * sim.nodes().len() as u64,
        }
    }
}

/// Collect the spanning tree the protocol extracted, if it currently spans.
pub fn extracted_tree(sim: &Simulation) -> Option<Vec<(usize, usize)>> {
    use crate::proto::Attach;
    let n = sim.graph().n();
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for (i, node) in sim.nodes().iter().enumerate() {
        match node.mdst.attach {
            Attach::Root => {}
            Attach::Parent(p) | Attach::ViaEdge(p) => {
                edges.push((i.min(p), i.max(p)));
            }
            Attach::Unknown => return None,
        }
    }
    edges.sort_unstable();
    edges.dedup();
    if edges.len() + 1 != n || !is_spanning_tree(sim.graph(), &edges) {
        return None;
    }
    Some(edges)
}

/// Sequential solve ordered by the protocol's final ids, so tie resolution
/// matches the distributed computation exactly.
pub fn oracle_by_ids(graph: &WeightedGraph, ids: &[u32]) -> Option<OracleReport> {
    if ids.contains(&0) || has_duplicate(ids) {
        return None;
    }
    let order = TieOrder::from_ids(&ids.iter().map(|&i| i as u64).collect::<Vec<_>>());
    let dt = all_pairs_distances(graph);
    let center = crate::center::absolute_center_ordered(
        graph,
        &dt,
        &order,
        crate::center::SkipBound::Off,
    );
    let (tree, diameter) = mdst_ordered(graph, &dt, &order);
    Some(OracleReport {
        separation: center.separation,
        center: center.location.to_string(),
        tree_edges: tree.edges,
        diameter,
    })
}

pub struct RunOutcome {
    pub report: RunReport,
    pub trace: Trace,
    pub audit_un: CheckabilityAudit,
    pub audit_apsp: CheckabilityAudit,
    pub final_states: Vec<NodeState>,
}

/// Predicates a protocol mode is expected to stabilize.
pub fn requested_predicates(mode: ProtocolMode) -> &'static [&'static str] {
    match mode {
        ProtocolMode::Un => &["psi"],
        ProtocolMode::Apsp => &["psi_prime"],
        ProtocolMode::Mdst => &["psi_prime", "theta"],
        ProtocolMode::Composed => &["psi", "psi_prime", "theta"],
    }
}

/// Run a configuration to its horizon with the checker attached.
pub fn run_with_checker(cfg: &RunConfig) -> Result<RunOutcome, SimError> {
    let mut sim = Simulation::from_config(cfg)?;
    let mut checker = StabChecker::new(&cfg.graph);
    for _ in 0..cfg.horizon {
        sim.step()?;
        checker.observe(&sim);
    }

    let mut predicates = BTreeMap::new();
    for &name in requested_predicates(cfg.protocol) {
        let report = match name {
            "psi" => checker.psi_report(),
            "psi_prime" => checker.psi_prime_report(),
            "theta" => checker.theta_report(),
            _ => unreachable!(),
        };
        predicates.insert(name.to_string(), report);
    }
    let stabilized = predicates.values().all(|p| p.stabilized);
    let layered_order_ok = if cfg.protocol == ProtocolMode::Composed {
        let s = |k: &str| predicates.get(k).and_then(|p| p.first_suffix_time);
        Some(match (s("psi"), s("psi_prime"), s("theta")) {
            (Some(a), Some(b), Some(c)) => a <= b && b <= c,
            _ => false,
        })
    } else {
        None
    };

    let final_ids: Vec<u32> = sim.nodes().iter().map(|n| n.un.id).collect();
    let tree = extracted_tree(&sim).map(|edges| {
        let st = SpanningTree {
            edges: edges.clone(),
            root: GeneralNode::Vertex(0),
        };
        TreeReport {
            diameter: tree_diameter(sim.graph(), &st),
            edges,
        }
    });
    let oracle = if cfg.protocol.runs_mdst() {
        oracle_by_ids(sim.graph(), &final_ids)
    } else {
        None
    };
    let tree_matches_oracle = match (&tree, &oracle) {
        (Some(t), Some(o)) => Some(t.edges == o.tree_edges),
        _ => None,
    };
    let composition = checker.composition_audit(&sim);
    let (audit_un, audit_apsp) = checker.checkability_audits(requested_predicates(cfg.protocol));
    let mut audits = BTreeMap::new();
    audits.insert("lp_naming".to_string(), AuditSummary::from(&audit_un));
    audits.insert("lp_routing".to_string(), AuditSummary::from(&audit_apsp));

    let report = RunReport {
        scenario: cfg.echo(),
        predicates,
        layered_order_ok,
        tree,
        oracle,
        tree_matches_oracle,
        counters: sim.counters.clone(),
        composition,
        audits,
        stabilized,
        final_ids,
        notes: vec![
            "predicates are evaluated over node states; link queue contents are not part of the checked configuration".to_string(),
        ],
    };
    Ok(RunOutcome {
        report,
        audit_un,
        audit_apsp,
        final_states: sim.nodes().to_vec(),
        trace: std::mem::take(&mut sim.trace),
    })
}
