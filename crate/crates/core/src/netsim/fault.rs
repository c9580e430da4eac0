//! Transient fault events and the arbitrary-state sampler.
//!
//! "Arbitrary initial state" is realized as uniformly sampled syntactically
//! valid protocol states: random phases, id lists with possible duplicates,
//! random finite-or-absent distance entries, random wave bookkeeping and
//! random in-flight frames. Handcrafted adversarial states are layered on
//! top by the test suites.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::proto::apsp::{ApspPayload, DistEntry, NbrCache};
use crate::proto::mdst::{Attach, Elt, MdstPayload, MdstState};
use crate::proto::un::{UnPayload, UnState, WaveFrame, WaveLocal, WaveMsg};
use crate::proto::{ApspState, Frame, NodeState, ProtocolMode};

/// An injected transient fault.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaultEvent {
    /// Time unit at which the fault strikes (before any action of the unit).
    pub at: u64,
    #[serde(flatten)]
    pub kind: FaultKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FaultKind {
    /// Replace the node's protocol state by a random syntactically valid one.
    CorruptNode { node: usize, seed: u64 },
    /// Drop or garble the message stored on the directed link u→v.
    CorruptLink { u: usize, v: usize },
    /// Clear the node to a fresh state, then scramble part of it; adjacent
    /// in-flight messages are lost.
    CrashRecover { node: usize, seed: u64 },
    WeightChange { u: usize, v: usize, weight: f64 },
    RemoveEdge { u: usize, v: usize },
    AddEdge { u: usize, v: usize, weight: f64 },
}

impl FaultEvent {
    pub fn describe(&self) -> String {
        match &self.kind {
            FaultKind::CorruptNode { node, seed } => format!("corrupt-node {} seed {}", node, seed),
            FaultKind::CorruptLink { u, v } => format!("corrupt-link {}>{}", u, v),
            FaultKind::CrashRecover { node, seed } => {
                format!("crash-recover {} seed {}", node, seed)
            }
            FaultKind::WeightChange { u, v, weight } => {
                format!("weight-change {}-{} to {}", u, v, weight)
            }
            FaultKind::RemoveEdge { u, v } => format!("remove-edge {}-{}", u, v),
            FaultKind::AddEdge { u, v, weight } => format!("add-edge {}-{} w {}", u, v, weight),
        }
    }
}

const ID_DOMAIN: u32 = 64;

fn random_id(rng: &mut ChaCha8Rng) -> u32 {
    rng.gen_range(1..=ID_DOMAIN)
}

fn random_ids(rng: &mut ChaCha8Rng, max_len: usize) -> Vec<u32> {
    let len = rng.gen_range(0..=max_len);
    (0..len).map(|_| random_id(rng)).collect()
}

pub fn random_un_state(rng: &mut ChaCha8Rng, ports: &[usize]) -> UnState {
    let n_cap = *[16u32, 32, 64, 128].get(rng.gen_range(0..4)).unwrap();
    let mut id_list = random_ids(rng, 12);
    id_list.sort_unstable();
    let mut waves = BTreeMap::new();
    for _ in 0..rng.gen_range(0..3usize) {
        let parent = if !ports.is_empty() && rng.gen_bool(0.7) {
            Some(ports[rng.gen_range(0..ports.len())])
        } else {
            None
        };
        let mut responded = BTreeSet::new();
        for &p in ports {
            if rng.gen_bool(0.3) {
                responded.insert(p);
            }
        }
        waves.insert(
            random_id(rng),
            WaveLocal {
                seq: rng.gen(),
                parent,
                path: random_ids(rng, 6),
                acc: random_ids(rng, 6),
                responded,
                done: rng.gen_bool(0.2),
                age: rng.gen_range(0..8),
            },
        );
    }
    UnState {
        phase: rng.gen_range(1..=3),
        id: rng.gen_range(1..=n_cap.min(ID_DOMAIN)),
        n_cap,
        gen: rng.gen_range(0..16),
        reset_key: (random_id(rng), rng.gen_range(0..16)),
        id_list,
        n_seen: rng.gen_range(0..12),
        own_seq: rng.gen(),
        waves,
        resp: BTreeMap::new(),
    }
}

fn random_vec_entries(rng: &mut ChaCha8Rng) -> Vec<(u32, f64, u8)> {
    let len = rng.gen_range(0..10usize);
    let mut v: Vec<(u32, f64, u8)> = (0..len)
        .map(|_| {
            (
                random_id(rng),
                (rng.gen_range(0..80) as f64) / 2.0,
                rng.gen_range(0..20),
            )
        })
        .collect();
    v.sort_unstable_by_key(|&(id, _, _)| id);
    v.dedup_by_key(|&mut (id, _, _)| id);
    v
}

pub fn random_apsp_state(rng: &mut ChaCha8Rng, ports: &[usize]) -> ApspState {
    let mut s = ApspState::default();
    if rng.gen_bool(0.3) {
        return s; // entirely washed-out table
    }
    for _ in 0..rng.gen_range(0..10usize) {
        let id = random_id(rng);
        s.dist.insert(
            id,
            DistEntry {
                val: (rng.gen_range(0..80) as f64) / 2.0,
                hops: rng.gen_range(0..20),
            },
        );
        if !ports.is_empty() && rng.gen_bool(0.8) {
            s.next_hop.insert(id, ports[rng.gen_range(0..ports.len())]);
        }
    }
    for &p in ports {
        if rng.gen_bool(0.5) {
            s.nbr.insert(
                p,
                NbrCache {
                    id: random_id(rng),
                    vec: random_vec_entries(rng),
                    sep: rng.gen_bool(0.5).then(|| rng.gen_range(0..40) as f64),
                    claims_me_parent: rng.gen_bool(0.3),
                    agg: None,
                    dr: rng
                        .gen_bool(0.3)
                        .then(|| (rng.gen_range(0..40) as f64, rng.gen_range(0..40) as f64, random_id(rng))),
                    age: rng.gen_range(0..4),
                },
            );
        }
    }
    s.sep = rng.gen_bool(0.4).then(|| rng.gen_range(0..40) as f64);
    s.r_id = rng.gen_bool(0.7).then(|| random_id(rng));
    s.parent = (!ports.is_empty() && rng.gen_bool(0.5))
        .then(|| ports[rng.gen_range(0..ports.len())]);
    s.dr = rng
        .gen_bool(0.4)
        .then(|| (rng.gen_range(0..40) as f64, rng.gen_range(0..40) as f64, random_id(rng)));
    s
}

fn random_elt(rng: &mut ChaCha8Rng) -> Elt {
    if rng.gen_bool(0.2) {
        return Elt::sentinel(rng.gen_range(0..40) as f64);
    }
    let omega = (rng.gen_range(1..20) as f64) / 2.0;
    let a = random_id(rng);
    let b = random_id(rng);
    Elt {
        alpha_best: omega * rng.gen_range(0..=4) as f64 / 4.0,
        upbound: (rng.gen_range(0..80) as f64) / 2.0,
        id1: a.min(b),
        id2: a.max(b),
        omega,
    }
}

pub fn random_mdst_state(rng: &mut ChaCha8Rng, ports: &[usize]) -> MdstState {
    let mut s = MdstState {
        phi: rng.gen_bool(0.5).then(|| random_elt(rng)),
        subtree_best: rng.gen_bool(0.5).then(|| random_elt(rng)),
        phi_star: rng.gen_bool(0.5).then(|| random_elt(rng)),
        cycle: rng.gen_range(0..64),
        ..MdstState::default()
    };
    for &p in ports {
        if rng.gen_bool(0.3) {
            s.son_reports.insert(p, (random_elt(rng), rng.gen_range(0..4)));
        }
        if rng.gen_bool(0.3) {
            s.down_cache
                .insert(p, (rng.gen_range(0..64), random_elt(rng), rng.gen_range(0..4)));
        }
    }
    s.attach = match rng.gen_range(0..4) {
        0 => Attach::Unknown,
        1 => Attach::Root,
        _ if !ports.is_empty() => Attach::Parent(ports[rng.gen_range(0..ports.len())]),
        _ => Attach::Unknown,
    };
    s
}

/// A full random node state honoring the mode's layering: pinned-name modes
/// keep their pinned naming layer so the protocol under test stays isolated.
pub fn random_node_state(
    rng: &mut ChaCha8Rng,
    mode: ProtocolMode,
    index: usize,
    n: usize,
    ports: &[usize],
) -> NodeState {
    let mut s = NodeState::clean(mode, index, n);
    if mode.runs_un() {
        s.un = random_un_state(rng, ports);
    }
    if mode.runs_apsp() {
        s.apsp = random_apsp_state(rng, ports);
    }
    if mode.runs_mdst() {
        s.mdst = random_mdst_state(rng, ports);
    }
    s
}

/// A random well-formed frame of the alphabet (used for link garbling and
/// arbitrary initial queue contents). Never a malformed byte blob: the model
/// has no checksum layer, so garbling yields a valid message.
pub fn random_frame(rng: &mut ChaCha8Rng, mode: ProtocolMode) -> Frame {
    let mut f = Frame::default();
    if mode.runs_un() && rng.gen_bool(0.8) {
        let waves = (0..rng.gen_range(0..3usize))
            .map(|_| WaveFrame {
                init_id: random_id(rng),
                seq: rng.gen_range(0..8),
                msg: match rng.gen_range(0..3) {
                    0 => WaveMsg::Forward,
                    1 => WaveMsg::Feedback,
                    _ => WaveMsg::Ack,
                },
                ids: random_ids(rng, 6),
            })
            .collect();
        f.un = Some(UnPayload {
            phase: rng.gen_range(1..=3),
            id: random_id(rng),
            gen: rng.gen_range(0..16),
            reset_key: (random_id(rng), rng.gen_range(0..16)),
            n_seen: rng.gen_range(0..12),
            waves,
        });
    }
    if mode.runs_apsp() && rng.gen_bool(0.8) {
        f.apsp = Some(ApspPayload {
            id: random_id(rng),
            vec: random_vec_entries(rng),
            sep: rng.gen_bool(0.5).then(|| rng.gen_range(0..40) as f64),
            claim_parent: rng.gen_bool(0.3),
            agg: None,
            dr: None,
        });
    }
    if mode.runs_mdst() && rng.gen_bool(0.5) {
        f.mdst = Some(MdstPayload {
            cycle: rng.gen_range(0..64),
            up: rng.gen_bool(0.5).then(|| random_elt(rng)),
            down: rng.gen_bool(0.5).then(|| (rng.gen_range(0..64), random_elt(rng))),
        });
    }
    f
}
