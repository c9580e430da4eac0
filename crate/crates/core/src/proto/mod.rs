//! The protocol stack run by every node: randomized unique naming, a
//! stabilizing distance-vector APSP, and the distributed MDST layer on top.
//!
//! Each layer is a sequential deterministic transition function over its own
//! state; all asynchrony lives in the simulator. A node addresses its
//! neighbors through port labels (the peer's simulator index); port labels
//! are not identities — the naming layer exists precisely because processes
//! start anonymous.

pub mod apsp;
pub mod mdst;
pub mod un;

use rand_chacha::ChaCha8Rng;

pub use apsp::{ApspPayload, ApspState};
pub use mdst::{Attach, Elt, MdstPayload, MdstState};
pub use un::{draw_id, UnPayload, UnState};

/// Which layers are active in a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolMode {
    /// Naming layer only.
    Un,
    /// Routing layer only, over pinned names.
    Apsp,
    /// Routing + MDST layers, over pinned names.
    Mdst,
    /// Full composition: naming under routing under MDST.
    Composed,
}

impl ProtocolMode {
    pub fn runs_un(self) -> bool {
        matches!(self, ProtocolMode::Un | ProtocolMode::Composed)
    }
    pub fn runs_apsp(self) -> bool {
        !matches!(self, ProtocolMode::Un)
    }
    pub fn runs_mdst(self) -> bool {
        matches!(self, ProtocolMode::Mdst | ProtocolMode::Composed)
    }
}

/// Immutable per-activation view handed to the layer transition functions.
pub struct NodeCtx<'a> {
    /// This node's simulator index.
    pub index: usize,
    /// Adjacent ports as `(peer index, edge weight)`, sorted by peer.
    pub neighbors: &'a [(usize, f64)],
    pub mode: ProtocolMode,
}

impl NodeCtx<'_> {
    pub fn edge_weight(&self, port: usize) -> Option<f64> {
        self.neighbors
            .iter()
            .find(|(p, _)| *p == port)
            .map(|&(_, w)| w)
    }
}

/// One message of the link alphabet: a composite frame bundling at most one
/// payload per layer, so a node sends at most one message per neighbor per
/// time unit and unit link capacity is never overrun.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Frame {
    pub un: Option<UnPayload>,
    pub apsp: Option<ApspPayload>,
    pub mdst: Option<MdstPayload>,
}

impl Frame {
    pub fn is_empty(&self) -> bool {
        self.un.is_none() && self.apsp.is_none() && self.mdst.is_none()
    }
}

/// Full per-node protocol state.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NodeState {
    pub un: UnState,
    pub apsp: ApspState,
    pub mdst: MdstState,
}

impl NodeState {
    /// Clean initial state for a mode. Pinned-name modes get phase-3 naming
    /// state with id = index + 1 and the full id list.
    pub fn clean(mode: ProtocolMode, index: usize, n: usize) -> Self {
        let mut s = NodeState::default();
        if mode.runs_un() {
            s.un = UnState::clean();
        } else {
            s.un = UnState::pinned(index as u32 + 1, n as u32);
        }
        s
    }

    /// Whether the routing/MDST layers are unlocked: names must be in place.
    pub fn downstream_active(&self) -> bool {
        self.un.phase == 3 && self.un.id != 0
    }

    /// Clear the routing and MDST layers. Returns true when anything
    /// actually changed — the composition audit counts only real writes.
    pub fn clear_downstream(&mut self) -> bool {
        let changed = self.apsp != ApspState::default() || self.mdst != MdstState::default();
        self.apsp = ApspState::default();
        self.mdst = MdstState::default();
        changed
    }

    /// One local activation: advance every active layer and produce the
    /// outgoing frame for each neighbor. Reports whether the naming layer
    /// wrote into downstream variables (a reset or a fresh phase-3 entry).
    pub fn tick(
        &mut self,
        ctx: &NodeCtx,
        rng: &mut ChaCha8Rng,
        out: &mut Vec<(usize, Frame)>,
    ) -> TickEffects {
        let mut fx = TickEffects::default();
        let mut un_payloads: Vec<(usize, UnPayload)> = Vec::new();
        if ctx.mode.runs_un() {
            let events = self.un.tick(ctx, rng, &mut un_payloads);
            if events.names_invalidated {
                fx.un_wrote_downstream |= self.clear_downstream();
            }
            fx.reset_initiated = events.reset_initiated;
            fx.wave_completed = events.wave_completed;
            fx.conflict_detected = events.conflict_detected;
        }
        let active = self.downstream_active();
        if !active {
            // an unnamed process has no meaningful id-keyed state; leftover
            // tables from before a reset (or a fabricated start) are void
            fx.un_wrote_downstream |= self.clear_downstream();
        }
        if ctx.mode.runs_apsp() && active {
            self.apsp.tick(ctx, self.un.id, self.un.n_seen, &self.un.id_list);
        }
        if ctx.mode.runs_mdst() && active {
            self.mdst
                .tick(ctx, self.un.id, &self.apsp, &mut fx.owned_edges_scanned);
        }
        for &(port, _) in ctx.neighbors {
            let mut frame = Frame::default();
            if ctx.mode.runs_un() {
                frame.un = Some(
                    un_payloads
                        .iter()
                        .find(|(p, _)| *p == port)
                        .map(|(_, pl)| pl.clone())
                        .unwrap_or_else(|| self.un.base_payload()),
                );
            }
            if ctx.mode.runs_apsp() && active {
                frame.apsp = Some(self.apsp.payload_for(port, self.un.id));
            }
            if ctx.mode.runs_mdst() && active {
                frame.mdst = self.mdst.payload_for(port, &self.apsp);
            }
            out.push((port, frame));
        }
        fx
    }

    /// Deliver one frame received on `port`.
    pub fn on_frame(
        &mut self,
        ctx: &NodeCtx,
        rng: &mut ChaCha8Rng,
        port: usize,
        frame: &Frame,
    ) -> TickEffects {
        let mut fx = TickEffects::default();
        if ctx.mode.runs_un() {
            if let Some(un) = &frame.un {
                let events = self.un.on_payload(ctx, rng, port, un);
                if events.names_invalidated {
                    fx.un_wrote_downstream |= self.clear_downstream();
                }
                fx.reset_initiated = events.reset_initiated;
                fx.wave_completed = events.wave_completed;
                fx.conflict_detected = events.conflict_detected;
                fx.stale_wave_dropped = events.stale_wave_dropped;
            }
        }
        if self.downstream_active() {
            if ctx.mode.runs_apsp() {
                if let Some(apsp) = &frame.apsp {
                    self.apsp.on_payload(
                        ctx,
                        port,
                        apsp,
                        self.un.id,
                        self.un.n_seen,
                        &self.un.id_list,
                    );
                }
            }
            if ctx.mode.runs_mdst() {
                if let Some(mdst) = &frame.mdst {
                    self.mdst.on_payload(port, mdst);
                }
            }
        }
        fx
    }

    /// Canonical byte encoding, used for configuration digests and the
    /// peak-state-size metric.
    pub fn encode(&self, buf: &mut Vec<u8>) {
        self.un.encode(buf);
        self.apsp.encode(buf);
        self.mdst.encode(buf);
    }
}

/// Side effects of an activation the simulator logs into the trace.
#[derive(Debug, Clone, Copy, Default)]
pub struct TickEffects {
    /// The naming layer invalidated names and wiped routing/MDST state this
    /// activation (and something was actually there to wipe).
    pub un_wrote_downstream: bool,
    pub reset_initiated: bool,
    pub wave_completed: bool,
    pub conflict_detected: bool,
    pub stale_wave_dropped: bool,
    /// Edges whose per-edge center this node computed this activation.
    pub owned_edges_scanned: u32,
}

impl TickEffects {
    pub fn merge(&mut self, other: TickEffects) {
        self.un_wrote_downstream |= other.un_wrote_downstream;
        self.reset_initiated |= other.reset_initiated;
        self.wave_completed |= other.wave_completed;
        self.conflict_detected |= other.conflict_detected;
        self.stale_wave_dropped |= other.stale_wave_dropped;
        self.owned_edges_scanned += other.owned_edges_scanned;
    }
}

pub(crate) fn enc_u32(buf: &mut Vec<u8>, x: u32) {
    buf.extend_from_slice(&x.to_le_bytes());
}

pub(crate) fn enc_f64(buf: &mut Vec<u8>, x: f64) {
    buf.extend_from_slice(&x.to_bits().to_le_bytes());
}
