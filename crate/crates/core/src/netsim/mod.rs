//! Deterministic discrete-event simulator of the message-passing model:
//! node automata over unit-capacity FIFO links, with per-unit time
//! accounting, seeded schedulers and transient-fault injection.
//!
//! One time unit runs three phases: every node's local activation (timer),
//! then sends (outbox head moves onto a free link), then deliveries. Every
//! action continuously enabled at the start of a unit occurs within it, and
//! a stored message is delivered at most one unit after storage — the fair
//! scheduler delivers in the same unit, the adversarial one may hold a
//! freshly stored frame until the next.

pub mod fault;
pub mod scenario;
pub mod trace;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use fault::{FaultEvent, FaultKind};
pub use scenario::{InitMode, RunConfig, Scenario, ScenarioEcho, SchedulerPolicy};
pub use trace::{Trace, TraceMode, TraceRecord};

use crate::graph::{GraphError, WeightedGraph};
use crate::proto::apsp::encode_apsp_payload;
use crate::proto::mdst::encode_mdst_payload;
use crate::proto::un::encode_un_payload;
use crate::proto::{Frame, NodeCtx, NodeState, ProtocolMode};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    BadScenario(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("fault rejected at t={at}: {msg}")]
    FaultRejected { at: u64, msg: String },
    #[error("send on non-edge {0}-{1}")]
    NonEdgeSend(usize, usize),
}

/// A message sitting on a directed link.
#[derive(Debug, Clone)]
pub struct StoredFrame {
    pub frame: Frame,
    pub at: u64,
}

#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct Counters {
    pub units: u64,
    pub activations: u64,
    pub messages_sent: u64,
    pub messages_delivered: u64,
    pub sends_rejected: u64,
    pub resets: u64,
    pub conflicts: u64,
    pub waves_completed: u64,
    pub stale_waves_dropped: u64,
    pub owned_edge_scans: u64,
    pub peak_state_bits: u64,
}

/// Everything notable that happened during the last unit, for observers.
#[derive(Debug, Clone, Default)]
pub struct UnitEvents {
    pub faults: Vec<FaultEvent>,
    /// Nodes whose naming layer wiped routing/MDST state this unit.
    pub cross_writes: Vec<usize>,
    pub resets: Vec<usize>,
    pub conflicts: Vec<usize>,
    pub topology_changed: bool,
}

pub struct Simulation {
    graph: WeightedGraph,
    mode: ProtocolMode,
    nodes: Vec<NodeState>,
    node_rngs: Vec<ChaCha8Rng>,
    /// Per-node egress buffer: one pending frame per neighbor.
    outbox: Vec<BTreeMap<usize, Frame>>,
    /// Directed unit-capacity queues.
    links: BTreeMap<(usize, usize), Option<StoredFrame>>,
    /// Cached adjacency `(peer, weight)` per node, rebuilt on topology faults.
    adj: Vec<Vec<(usize, f64)>>,
    time: u64,
    scheduler: SchedulerPolicy,
    sched_rng: ChaCha8Rng,
    fault_rng: ChaCha8Rng,
    pending_faults: Vec<FaultEvent>,
    pub counters: Counters,
    pub trace: Trace,
    trace_mode: TraceMode,
    dump_tables: bool,
    pub last_events: UnitEvents,
    pub last_digest: [u8; 32],
    digest_buf: Vec<u8>,
}

impl Simulation {
    pub fn from_config(cfg: &RunConfig) -> Result<Self, SimError> {
        if cfg.horizon == 0 {
            return Err(SimError::BadScenario("horizon must be positive".into()));
        }
        for f in &cfg.faults {
            if f.at == 0 {
                return Err(SimError::BadScenario("fault at t=0; faults strike from unit 1".into()));
            }
            if let FaultKind::WeightChange { weight, .. } | FaultKind::AddEdge { weight, .. } =
                f.kind
            {
                if !(weight.is_finite() && weight > 0.0) {
                    return Err(SimError::BadScenario(format!(
                        "fault at t={} carries non-positive weight",
                        f.at
                    )));
                }
            }
        }
        let mut faults = cfg.faults.clone();
        faults.sort_by_key(|f| f.at);
        faults.reverse(); // pop from the back in time order

        let n = cfg.graph.n();
        let mut master = ChaCha8Rng::seed_from_u64(cfg.seed);
        let node_rngs: Vec<ChaCha8Rng> = (0..n)
            .map(|_| ChaCha8Rng::seed_from_u64(master.gen()))
            .collect();
        let sched_rng = ChaCha8Rng::seed_from_u64(master.gen());
        let fault_rng = ChaCha8Rng::seed_from_u64(master.gen());

        let adj: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|v| {
                cfg.graph
                    .neighbors(v)
                    .iter()
                    .map(|&(p, w, _)| (p, w))
                    .collect()
            })
            .collect();
        let mut links = BTreeMap::new();
        for e in cfg.graph.edges() {
            links.insert((e.u, e.v), None);
            links.insert((e.v, e.u), None);
        }

        let mut nodes: Vec<NodeState> = (0..n)
            .map(|i| NodeState::clean(cfg.protocol, i, n))
            .collect();
        if let InitMode::Arbitrary(seed) = cfg.init {
            let mut init_rng = ChaCha8Rng::seed_from_u64(seed);
            for i in 0..n {
                let ports: Vec<usize> = adj[i].iter().map(|&(p, _)| p).collect();
                nodes[i] = fault::random_node_state(&mut init_rng, cfg.protocol, i, n, &ports);
            }
            for q in links.values_mut() {
                if init_rng.gen_bool(0.4) {
                    *q = Some(StoredFrame {
                        frame: fault::random_frame(&mut init_rng, cfg.protocol),
                        at: 0,
                    });
                }
            }
        }

        Ok(Simulation {
            graph: cfg.graph.clone(),
            mode: cfg.protocol,
            nodes,
            node_rngs,
            outbox: vec![BTreeMap::new(); n],
            links,
            adj,
            time: 0,
            scheduler: cfg.scheduler,
            sched_rng,
            fault_rng,
            pending_faults: faults,
            counters: Counters::default(),
            trace: Trace::default(),
            trace_mode: cfg.trace_mode,
            dump_tables: cfg.dump_tables,
            last_events: UnitEvents::default(),
            last_digest: [0; 32],
            digest_buf: Vec::with_capacity(4096),
        })
    }

    pub fn time(&self) -> u64 {
        self.time
    }
    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }
    pub fn mode(&self) -> ProtocolMode {
        self.mode
    }
    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }
    pub fn link(&self, u: usize, v: usize) -> Option<&StoredFrame> {
        self.links.get(&(u, v)).and_then(|q| q.as_ref())
    }

    /// Replace one node's protocol state wholesale. Harness hook for
    /// handcrafted adversarial starts (e.g. forcing an id conflict).
    pub fn override_node(&mut self, i: usize, state: NodeState) {
        self.nodes[i] = state;
    }

    /// Inject a fault right now (scheduled faults go through the config).
    pub fn inject(&mut self, fault: &FaultEvent) -> Result<(), SimError> {
        self.apply_fault(fault)?;
        self.last_events.faults.push(*fault);
        Ok(())
    }

    /// Direct link-layer send with the model's capacity rule: storing into an
    /// empty queue succeeds; a send on an occupied queue changes nothing.
    pub fn send_raw(&mut self, from: usize, to: usize, frame: Frame) -> Result<bool, SimError> {
        let q = self
            .links
            .get_mut(&(from, to))
            .ok_or(SimError::NonEdgeSend(from, to))?;
        if q.is_some() {
            return Ok(false);
        }
        *q = Some(StoredFrame {
            frame,
            at: self.time,
        });
        Ok(true)
    }

    /// Deliver the frame stored on u→v, if any (test helper; `step` is the
    /// normal driver).
    pub fn deliver_one(&mut self, u: usize, v: usize) -> bool {
        let stored = match self.links.get_mut(&(u, v)) {
            Some(q) => q.take(),
            None => None,
        };
        match stored {
            Some(sf) => {
                self.deliver(u, v, sf.frame);
                true
            }
            None => false,
        }
    }

    fn deliver(&mut self, from: usize, to: usize, frame: Frame) {
        let ctx = NodeCtx {
            index: to,
            neighbors: &self.adj[to],
            mode: self.mode,
        };
        let fx = self.nodes[to].on_frame(&ctx, &mut self.node_rngs[to], from, &frame);
        self.counters.messages_delivered += 1;
        if fx.un_wrote_downstream {
            self.last_events.cross_writes.push(to);
        }
        if fx.reset_initiated {
            self.counters.resets += 1;
            self.last_events.resets.push(to);
        }
        if fx.conflict_detected {
            self.counters.conflicts += 1;
            self.last_events.conflicts.push(to);
        }
        if fx.stale_wave_dropped {
            self.counters.stale_waves_dropped += 1;
        }
    }

    fn permutation(&mut self, len: usize) -> Vec<usize> {
        let mut order: Vec<usize> = (0..len).collect();
        // Fisher-Yates from the scheduler stream; the adversarial policy
        // additionally reverses, biasing against index order.
        for i in (1..len).rev() {
            let j = self.sched_rng.gen_range(0..=i);
            order.swap(i, j);
        }
        if self.scheduler == SchedulerPolicy::Adversarial {
            order.reverse();
        }
        order
    }

    /// Advance one time unit.
    pub fn step(&mut self) -> Result<(), SimError> {
        self.time += 1;
        self.counters.units += 1;
        self.last_events = UnitEvents::default();

        while let Some(f) = self.pending_faults.last() {
            if f.at != self.time {
                break;
            }
            let f = self.pending_faults.pop().unwrap();
            self.apply_fault(&f)?;
            self.last_events.faults.push(f);
        }

        // phase A: every node's activation
        let order = self.permutation(self.nodes.len());
        let mut out: Vec<(usize, Frame)> = Vec::new();
        for i in order {
            out.clear();
            let ctx = NodeCtx {
                index: i,
                neighbors: &self.adj[i],
                mode: self.mode,
            };
            let fx = self.nodes[i].tick(&ctx, &mut self.node_rngs[i], &mut out);
            self.counters.activations += 1;
            self.counters.owned_edge_scans += fx.owned_edges_scanned as u64;
            if fx.un_wrote_downstream {
                self.last_events.cross_writes.push(i);
            }
            if fx.reset_initiated {
                self.counters.resets += 1;
                self.last_events.resets.push(i);
            }
            if fx.conflict_detected {
                self.counters.conflicts += 1;
                self.last_events.conflicts.push(i);
            }
            if fx.wave_completed {
                self.counters.waves_completed += 1;
            }
            if fx.stale_wave_dropped {
                self.counters.stale_waves_dropped += 1;
            }
            if self.trace_mode == TraceMode::Full {
                self.trace
                    .push(self.time, format!("node:{}", i), "tick", None);
            }
            for (port, frame) in out.drain(..) {
                if !frame.is_empty() {
                    self.outbox[i].insert(port, frame);
                }
            }
        }

        // phase B: move outbox heads onto free links
        let dirs: Vec<(usize, usize)> = self.links.keys().copied().collect();
        let order = self.permutation(dirs.len());
        for k in order {
            let (u, v) = dirs[k];
            if let Some(frame) = self.outbox[u].remove(&v) {
                let q = self.links.get_mut(&(u, v)).unwrap();
                if q.is_none() {
                    if self.trace_mode == TraceMode::Full {
                        let d = frame_digest(&frame);
                        self.trace
                            .push(self.time, format!("link:{}>{}", u, v), "send", Some(d));
                    }
                    *q = Some(StoredFrame {
                        frame,
                        at: self.time,
                    });
                    self.counters.messages_sent += 1;
                } else {
                    // unit capacity: no change of state
                    self.counters.sends_rejected += 1;
                    if self.trace_mode == TraceMode::Full {
                        self.trace.push(
                            self.time,
                            format!("link:{}>{}", u, v),
                            "send-rejected",
                            None,
                        );
                    }
                }
            }
        }

        // phase C: deliveries — everything stored before this unit must go,
        // fresh frames may be deferred one unit by the adversarial scheduler
        let order = self.permutation(dirs.len());
        for k in order {
            let (u, v) = dirs[k];
            let must = match &self.links[&(u, v)] {
                Some(sf) => {
                    sf.at < self.time
                        || self.scheduler == SchedulerPolicy::Fair
                        || !self.sched_rng.gen_bool(0.5)
                }
                None => false,
            };
            if must {
                let sf = self.links.get_mut(&(u, v)).unwrap().take().unwrap();
                if self.trace_mode == TraceMode::Full {
                    let d = frame_digest(&sf.frame);
                    self.trace
                        .push(self.time, format!("link:{}>{}", u, v), "recv", Some(d));
                    self.trace
                        .push(self.time, format!("link:{}>{}", u, v), "free", None);
                }
                self.deliver(u, v, sf.frame);
            }
        }
        // delivery latency bound: only frames stored this unit may remain
        debug_assert!(self
            .links
            .values()
            .flatten()
            .all(|sf| sf.at == self.time));

        self.finish_unit();
        Ok(())
    }

    fn finish_unit(&mut self) {
        let mut hasher = Sha256::new();
        let mut peak = self.counters.peak_state_bits;
        for node in &self.nodes {
            self.digest_buf.clear();
            node.encode(&mut self.digest_buf);
            peak = peak.max(self.digest_buf.len() as u64 * 8);
            hasher.update(&self.digest_buf);
        }
        self.counters.peak_state_bits = peak;
        for ((u, v), q) in &self.links {
            self.digest_buf.clear();
            self.digest_buf.extend_from_slice(&(*u as u32).to_le_bytes());
            self.digest_buf.extend_from_slice(&(*v as u32).to_le_bytes());
            match q {
                Some(sf) => {
                    self.digest_buf.push(1);
                    encode_frame(&sf.frame, &mut self.digest_buf);
                }
                None => self.digest_buf.push(0),
            }
            hasher.update(&self.digest_buf);
        }
        self.last_digest = hasher.finalize().into();
        if self.trace_mode != TraceMode::Off {
            let hex = hex32(&self.last_digest);
            self.trace.push(self.time, "sim".into(), "digest", Some(hex));
        }
        if self.trace_mode == TraceMode::Full {
            for (i, node) in self.nodes.iter().enumerate() {
                if let Some(phi) = node.mdst.phi_star {
                    self.trace.push(
                        self.time,
                        format!("node:{}", i),
                        "phi-star",
                        Some(format!(
                            "cycle {} upbound {} edge {}-{} alpha {}",
                            node.mdst.cycle, phi.upbound, phi.id1, phi.id2, phi.alpha_best
                        )),
                    );
                }
            }
        }
        if self.dump_tables {
            for (i, node) in self.nodes.iter().enumerate() {
                let mut dump = String::new();
                for (id, e) in &node.apsp.dist {
                    use std::fmt::Write as _;
                    let _ = write!(dump, "{}:{}/{} ", id, e.val, e.hops);
                }
                self.trace.push(
                    self.time,
                    format!("node:{}", i),
                    "tables",
                    Some(dump.trim_end().to_string()),
                );
            }
        }
    }

    fn rebuild_topology(&mut self, graph: WeightedGraph) {
        let n = graph.n();
        self.adj = (0..n)
            .map(|v| graph.neighbors(v).iter().map(|&(p, w, _)| (p, w)).collect())
            .collect();
        let mut links = BTreeMap::new();
        for e in graph.edges() {
            for dir in [(e.u, e.v), (e.v, e.u)] {
                let prev = self.links.get(&dir).cloned().flatten();
                links.insert(dir, prev);
            }
        }
        self.links = links;
        for v in 0..n {
            let keep: Vec<usize> = self.adj[v].iter().map(|&(p, _)| p).collect();
            self.outbox[v].retain(|p, _| keep.contains(p));
        }
        self.graph = graph;
        self.last_events.topology_changed = true;
    }

    fn apply_fault(&mut self, f: &FaultEvent) -> Result<(), SimError> {
        let reject = |msg: String| SimError::FaultRejected { at: f.at, msg };
        match f.kind {
            FaultKind::CorruptNode { node, seed } => {
                if node >= self.nodes.len() {
                    return Err(reject(format!("no node {}", node)));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let ports: Vec<usize> = self.adj[node].iter().map(|&(p, _)| p).collect();
                self.nodes[node] = fault::random_node_state(
                    &mut rng,
                    self.mode,
                    node,
                    self.nodes.len(),
                    &ports,
                );
            }
            FaultKind::CrashRecover { node, seed } => {
                if node >= self.nodes.len() {
                    return Err(reject(format!("no node {}", node)));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let ports: Vec<usize> = self.adj[node].iter().map(|&(p, _)| p).collect();
                let mut fresh = NodeState::clean(self.mode, node, self.nodes.len());
                // recovery lands in a partially scrambled state
                if self.mode.runs_un() && rng.gen_bool(0.7) {
                    fresh.un = fault::random_un_state(&mut rng, &ports);
                }
                if self.mode.runs_apsp() && rng.gen_bool(0.5) {
                    fresh.apsp = fault::random_apsp_state(&mut rng, &ports);
                }
                self.nodes[node] = fresh;
                self.outbox[node].clear();
                let ports: Vec<usize> = self.adj[node].iter().map(|&(p, _)| p).collect();
                for p in ports {
                    if let Some(q) = self.links.get_mut(&(node, p)) {
                        *q = None;
                    }
                    if let Some(q) = self.links.get_mut(&(p, node)) {
                        *q = None;
                    }
                }
            }
            FaultKind::CorruptLink { u, v } => {
                match self.links.get_mut(&(u, v)) {
                    None => return Err(reject(format!("no link {}>{}", u, v))),
                    Some(q) => {
                        if q.is_some() {
                            // drop or garble, never a malformed frame
                            if self.fault_rng.gen_bool(0.5) {
                                *q = None;
                            } else {
                                let frame = fault::random_frame(&mut self.fault_rng, self.mode);
                                *q = Some(StoredFrame { frame, at: f.at });
                            }
                        }
                        // empty queue: no-op
                    }
                }
            }
            FaultKind::WeightChange { u, v, weight } => {
                let idx = self
                    .graph
                    .edge_index(u, v)
                    .ok_or_else(|| reject(format!("no edge {}-{}", u, v)))?;
                let mut edges: Vec<(usize, usize, f64)> = self
                    .graph
                    .edges()
                    .iter()
                    .map(|e| (e.u, e.v, e.w))
                    .collect();
                edges[idx].2 = weight;
                let graph = WeightedGraph::new(self.graph.n(), &edges)?;
                self.rebuild_topology(graph);
            }
            FaultKind::RemoveEdge { u, v } => {
                let idx = self
                    .graph
                    .edge_index(u, v)
                    .ok_or_else(|| reject(format!("no edge {}-{}", u, v)))?;
                if !self.graph.connected_without(idx) {
                    return Err(reject(format!("removing {}-{} disconnects the graph", u, v)));
                }
                let edges: Vec<(usize, usize, f64)> = self
                    .graph
                    .edges()
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != idx)
                    .map(|(_, e)| (e.u, e.v, e.w))
                    .collect();
                let graph = WeightedGraph::new(self.graph.n(), &edges)?;
                self.rebuild_topology(graph);
            }
            FaultKind::AddEdge { u, v, weight } => {
                if self.graph.edge_index(u, v).is_some() {
                    return Err(reject(format!("edge {}-{} already present", u, v)));
                }
                let mut edges: Vec<(usize, usize, f64)> = self
                    .graph
                    .edges()
                    .iter()
                    .map(|e| (e.u, e.v, e.w))
                    .collect();
                edges.push((u, v, weight));
                let graph = WeightedGraph::new(self.graph.n(), &edges)?;
                self.rebuild_topology(graph);
            }
        }
        if self.trace_mode != TraceMode::Off {
            self.trace
                .push(self.time, "sim".into(), "fault", Some(f.describe()));
        }
        Ok(())
    }
}

pub(crate) fn encode_frame(f: &Frame, buf: &mut Vec<u8>) {
    match &f.un {
        Some(pl) => {
            buf.push(1);
            encode_un_payload(pl, buf);
        }
        None => buf.push(0),
    }
    match &f.apsp {
        Some(pl) => {
            buf.push(1);
            encode_apsp_payload(pl, buf);
        }
        None => buf.push(0),
    }
    match &f.mdst {
        Some(pl) => {
            buf.push(1);
            encode_mdst_payload(pl, buf);
        }
        None => buf.push(0),
    }
}

fn frame_digest(f: &Frame) -> String {
    let mut buf = Vec::new();
    encode_frame(f, &mut buf);
    let d = Sha256::digest(&buf);
    d[..8].iter().map(|b| format!("{:02x}", b)).collect()
}

pub(crate) fn hex32(d: &[u8; 32]) -> String {
    d.iter().map(|b| format!("{:02x}", b)).collect()
}
