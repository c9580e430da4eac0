//! Randomized unique-naming layer.
//!
//! Every process repeatedly runs a PIF wave: it broadcasts its id, every
//! visited process attaches its own id to the forwarded list, and feedback
//! merges the subtree lists back toward the initiator, which therefore ends
//! each wave holding one id entry per reached process. A duplicate in the
//! completed list (or in a forward path, or a foreign wave carrying our own
//! id) is a conflict and triggers a network-wide reset: everyone redraws
//! from a doubled id space, so ids become distinct with probability 1 over
//! generations. After stabilization every process sits in phase 3 forever.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{enc_u32, NodeCtx};

/// Starting id-space size; doubles on every reset generation.
pub const INITIAL_ID_SPACE: u32 = 16;
const MAX_ID_SPACE: u32 = 1 << 30;
/// Hard cap on any carried id list; longer lists are treated as corruption.
const MAX_LIST: usize = 256;
/// Wave bookkeeping table capacity.
const WAVE_CAP: usize = 64;
/// Completed foreign wave entries older than this are dropped.
const DONE_WAVE_TTL: u16 = 64;

/// Uniform draw from `1..=space`.
pub fn draw_id(space: u32, rng: &mut impl Rng) -> u32 {
    rng.gen_range(1..=space.max(1))
}

/// True iff the list carries the same id twice.
pub fn has_duplicate(ids: &[u32]) -> bool {
    let mut sorted: Vec<u32> = ids.to_vec();
    sorted.sort_unstable();
    sorted.windows(2).any(|w| w[0] == w[1])
}

/// Wrapping sequence-number comparison: is `a` newer than `b`?
pub fn newer16(a: u16, b: u16) -> bool {
    a != b && a.wrapping_sub(b) < 0x8000
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveLocal {
    pub seq: u16,
    /// Port the wave arrived on; `None` for a wave this node initiates.
    pub parent: Option<usize>,
    /// Forward path list, own id included.
    pub path: Vec<u32>,
    /// Merged feedback ids, own id included.
    pub acc: Vec<u32>,
    /// Non-parent ports that acked or fed back.
    pub responded: BTreeSet<usize>,
    pub done: bool,
    pub age: u16,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WaveMsg {
    Forward,
    Feedback,
    Ack,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveFrame {
    pub init_id: u32,
    pub seq: u16,
    pub msg: WaveMsg,
    /// Path list for forwards, merged list for feedbacks, empty for acks.
    pub ids: Vec<u32>,
}

/// Per-link naming payload: the constant heartbeat fields plus wave traffic.
#[derive(Debug, Clone, PartialEq)]
pub struct UnPayload {
    pub phase: u8,
    pub id: u32,
    pub gen: u16,
    pub reset_key: (u32, u16),
    pub n_seen: u32,
    pub waves: Vec<WaveFrame>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnState {
    /// 1 = unnamed (fresh or just reset), 2 = first wave pending, 3 = steady.
    pub phase: u8,
    /// 0 while unnamed.
    pub id: u32,
    pub n_cap: u32,
    /// Reset generation, wrapping.
    pub gen: u16,
    /// (initiator id, initiator wave seq) of the adopted generation;
    /// concurrent same-generation resets coalesce to the smallest key.
    pub reset_key: (u32, u16),
    /// Sorted multiset collected by the last completed own wave.
    pub id_list: Vec<u32>,
    /// Size estimate: length of the last completed own wave list.
    pub n_seen: u32,
    pub own_seq: u16,
    pub waves: BTreeMap<u32, WaveLocal>,
    /// Pending responses per port, drained into the next frame.
    pub resp: BTreeMap<usize, Vec<WaveFrame>>,
}

impl Default for UnState {
    fn default() -> Self {
        UnState::clean()
    }
}

/// Layer events surfaced to the host for tracing and composition auditing.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnEvents {
    /// Ids were invalidated (reset initiated or adopted, or a fresh phase-3
    /// entry): routing state keyed by ids must be wiped.
    pub names_invalidated: bool,
    pub reset_initiated: bool,
    pub wave_completed: bool,
    pub conflict_detected: bool,
    pub stale_wave_dropped: bool,
}

impl UnState {
    pub fn clean() -> Self {
        UnState {
            phase: 1,
            id: 0,
            n_cap: INITIAL_ID_SPACE,
            gen: 0,
            reset_key: (u32::MAX, u16::MAX),
            id_list: Vec::new(),
            n_seen: 0,
            own_seq: 0,
            waves: BTreeMap::new(),
            resp: BTreeMap::new(),
        }
    }

    /// Fixed-name state for runs that start from a named network.
    pub fn pinned(id: u32, n: u32) -> Self {
        UnState {
            phase: 3,
            id,
            n_cap: INITIAL_ID_SPACE.max(n),
            gen: 0,
            reset_key: (u32::MAX, u16::MAX),
            id_list: (1..=n).collect(),
            n_seen: n,
            own_seq: 0,
            waves: BTreeMap::new(),
            resp: BTreeMap::new(),
        }
    }

    /// Heartbeat payload carrying no wave traffic.
    pub fn base_payload(&self) -> UnPayload {
        UnPayload {
            phase: self.phase,
            id: self.id,
            gen: self.gen,
            reset_key: self.reset_key,
            n_seen: self.n_seen,
            waves: Vec::new(),
        }
    }

    fn start_own_wave(&mut self) {
        self.waves.insert(
            self.id,
            WaveLocal {
                seq: self.own_seq,
                parent: None,
                path: vec![self.id],
                acc: vec![self.id],
                responded: BTreeSet::new(),
                done: false,
                age: 0,
            },
        );
    }

    /// Drop names and all wave state; the next activation redraws.
    fn reset_apply(&mut self) {
        self.n_cap = self
            .n_cap
            .max(INITIAL_ID_SPACE)
            .saturating_mul(2)
            .min(MAX_ID_SPACE);
        self.phase = 1;
        self.id = 0;
        self.own_seq = 0;
        self.id_list.clear();
        self.n_seen = 0;
        self.waves.clear();
        self.resp.clear();
    }

    fn initiate_reset(&mut self) -> UnEvents {
        self.gen = self.gen.wrapping_add(1);
        self.reset_key = (self.id, self.own_seq);
        self.reset_apply();
        UnEvents {
            names_invalidated: true,
            reset_initiated: true,
            conflict_detected: true,
            ..UnEvents::default()
        }
    }

    fn queue_resp(&mut self, port: usize, frame: WaveFrame) {
        let q = self.resp.entry(port).or_default();
        if !q.contains(&frame) {
            if q.len() >= WAVE_CAP {
                q.remove(0);
            }
            q.push(frame);
        }
    }

    /// One activation: housekeeping, wave completion, and frame derivation.
    pub fn tick(
        &mut self,
        ctx: &NodeCtx,
        rng: &mut ChaCha8Rng,
        out: &mut Vec<(usize, UnPayload)>,
    ) -> UnEvents {
        let mut ev = UnEvents::default();
        if !(1..=3).contains(&self.phase) {
            self.phase = 1;
        }
        // age and expire wave bookkeeping
        let ports: BTreeSet<usize> = ctx.neighbors.iter().map(|&(p, _)| p).collect();
        self.waves.retain(|_, w| {
            w.age = w.age.saturating_add(1);
            !(w.done && w.age > DONE_WAVE_TTL)
        });
        while self.waves.len() > WAVE_CAP {
            let evict = self
                .waves
                .iter()
                .filter(|(k, _)| **k != self.id)
                .max_by_key(|(k, w)| (w.age, **k))
                .map(|(k, _)| *k);
            match evict {
                Some(k) => {
                    self.waves.remove(&k);
                }
                None => break,
            }
        }
        self.resp.retain(|p, _| ports.contains(p));

        // draw a name when unnamed; a named node found in phase 1 is a
        // corrupted survivor and rejoins the wave phase as it stands
        if self.id == 0 {
            self.id = draw_id(self.n_cap, rng);
            self.phase = 2;
            self.own_seq = 0;
            self.start_own_wave();
        } else if self.phase == 1 {
            self.phase = 2;
        }
        // self-heal: our own wave slot must exist and be ours
        let own_ok = self
            .waves
            .get(&self.id)
            .map(|w| w.parent.is_none() && w.seq == self.own_seq)
            .unwrap_or(false);
        if !own_ok {
            self.start_own_wave();
        }

        // completion sweep
        let keys: Vec<u32> = self.waves.keys().copied().collect();
        for key in keys {
            let complete = {
                let w = &self.waves[&key];
                !w.done
                    && ports
                        .iter()
                        .all(|p| Some(*p) == w.parent || w.responded.contains(p))
            };
            if !complete {
                continue;
            }
            let (parent, seq, acc) = {
                let w = self.waves.get_mut(&key).unwrap();
                w.done = true;
                w.age = 0;
                (w.parent, w.seq, w.acc.clone())
            };
            match parent {
                Some(parent) => {
                    self.queue_resp(
                        parent,
                        WaveFrame {
                            init_id: key,
                            seq,
                            msg: WaveMsg::Feedback,
                            ids: acc,
                        },
                    );
                }
                None if key == self.id => {
                    // own wave completed: consume the collected multiset
                    let mut list = acc;
                    list.sort_unstable();
                    self.id_list = list;
                    self.n_seen = self.id_list.len() as u32;
                    ev.wave_completed = true;
                    if has_duplicate(&self.id_list) {
                        let r = self.initiate_reset();
                        return merged(ev, r);
                    }
                    if self.phase != 3 {
                        self.phase = 3;
                        // entering the named steady state invalidates any
                        // routing state left over from before naming
                        ev.names_invalidated = true;
                    }
                    self.own_seq = self.own_seq.wrapping_add(1);
                    self.start_own_wave();
                }
                None => {} // foreign wave missing an initiator: park it
            }
        }

        // derive outgoing payloads: base fields, forwards, queued responses
        for &(port, _) in ctx.neighbors {
            let mut pl = self.base_payload();
            for (init, w) in &self.waves {
                if !w.done && Some(port) != w.parent && !w.responded.contains(&port) {
                    pl.waves.push(WaveFrame {
                        init_id: *init,
                        seq: w.seq,
                        msg: WaveMsg::Forward,
                        ids: w.path.clone(),
                    });
                }
            }
            if let Some(q) = self.resp.get_mut(&port) {
                pl.waves.append(q);
            }
            out.push((port, pl));
        }
        ev
    }

    /// Deliver one naming payload received on `port`.
    pub fn on_payload(
        &mut self,
        ctx: &NodeCtx,
        rng: &mut ChaCha8Rng,
        port: usize,
        pl: &UnPayload,
    ) -> UnEvents {
        let mut ev = UnEvents::default();
        let _ = rng;
        // reset adoption precedes everything else
        if newer16(pl.gen, self.gen) {
            self.gen = pl.gen;
            self.reset_key = pl.reset_key;
            self.reset_apply();
            ev.names_invalidated = true;
            return ev;
        }
        if pl.gen != self.gen {
            // wave traffic of dead generations is void; the lagging sender
            // will adopt our generation from our own heartbeat
            return ev;
        }
        if pl.reset_key < self.reset_key {
            // concurrent resets of the same generation coalesce
            self.reset_key = pl.reset_key;
        }
        if self.id == 0 {
            return ev; // unnamed: wave traffic waits for the redraw
        }
        // a neighbor advertising our own id is a conflict on this very edge
        if pl.id == self.id {
            let r = self.initiate_reset();
            return merged(ev, r);
        }
        // two settled processes must agree on the network size
        if self.phase == 3
            && pl.phase == 3
            && self.n_seen > 0
            && pl.n_seen > 0
            && self.n_seen != pl.n_seen
        {
            let r = self.initiate_reset();
            return merged(ev, r);
        }
        for wf in &pl.waves {
            if wf.ids.len() > MAX_LIST {
                ev.stale_wave_dropped = true;
                continue;
            }
            match wf.msg {
                WaveMsg::Forward => {
                    // a path visiting two processes with one id is a conflict
                    if has_duplicate(&wf.ids) {
                        let r = self.initiate_reset();
                        return merged(ev, r);
                    }
                    if wf.init_id == self.id {
                        // our own wave echoing back through a cycle carries a
                        // sequence we already issued; a future sequence can
                        // only come from a duplicate initiator
                        if newer16(wf.seq, self.own_seq) {
                            let r = self.initiate_reset();
                            return merged(ev, r);
                        }
                        self.queue_resp(
                            port,
                            WaveFrame {
                                init_id: wf.init_id,
                                seq: wf.seq,
                                msg: WaveMsg::Ack,
                                ids: Vec::new(),
                            },
                        );
                        continue;
                    }
                    let adopt = match self.waves.get(&wf.init_id) {
                        None => true,
                        Some(w) => newer16(wf.seq, w.seq),
                    };
                    if adopt {
                        // we are not a participant yet, so a path already
                        // carrying our id means someone else owns it
                        if wf.ids.contains(&self.id) {
                            let r = self.initiate_reset();
                            return merged(ev, r);
                        }
                        let mut path = wf.ids.clone();
                        path.push(self.id);
                        self.waves.insert(
                            wf.init_id,
                            WaveLocal {
                                seq: wf.seq,
                                parent: Some(port),
                                path,
                                acc: vec![self.id],
                                responded: BTreeSet::new(),
                                done: false,
                                age: 0,
                            },
                        );
                    } else {
                        enum Re {
                            Feedback(Vec<u32>),
                            Ack,
                            Nothing,
                            Stale,
                        }
                        let re = {
                            let w = self.waves.get_mut(&wf.init_id).unwrap();
                            if w.seq == wf.seq {
                                w.age = 0;
                                if Some(port) == w.parent {
                                    if w.done {
                                        Re::Feedback(w.acc.clone())
                                    } else {
                                        Re::Nothing
                                    }
                                } else {
                                    Re::Ack
                                }
                            } else {
                                Re::Stale
                            }
                        };
                        match re {
                            Re::Feedback(acc) => self.queue_resp(
                                port,
                                WaveFrame {
                                    init_id: wf.init_id,
                                    seq: wf.seq,
                                    msg: WaveMsg::Feedback,
                                    ids: acc,
                                },
                            ),
                            Re::Ack => self.queue_resp(
                                port,
                                WaveFrame {
                                    init_id: wf.init_id,
                                    seq: wf.seq,
                                    msg: WaveMsg::Ack,
                                    ids: Vec::new(),
                                },
                            ),
                            Re::Nothing => {}
                            Re::Stale => ev.stale_wave_dropped = true,
                        }
                    }
                }
                WaveMsg::Feedback => match self.waves.get_mut(&wf.init_id) {
                    Some(w)
                        if w.seq == wf.seq
                            && !w.done
                            && Some(port) != w.parent
                            && !w.responded.contains(&port) =>
                    {
                        w.age = 0;
                        w.responded.insert(port);
                        let room = MAX_LIST.saturating_sub(w.acc.len());
                        w.acc.extend(wf.ids.iter().take(room));
                    }
                    _ => ev.stale_wave_dropped = true,
                },
                WaveMsg::Ack => match self.waves.get_mut(&wf.init_id) {
                    Some(w) if w.seq == wf.seq && Some(port) != w.parent => {
                        w.age = 0;
                        w.responded.insert(port);
                    }
                    _ => ev.stale_wave_dropped = true,
                },
            }
        }
        let _ = ctx;
        ev
    }

    pub fn encode(&self, buf: &mut Vec<u8>) {
        buf.push(self.phase);
        enc_u32(buf, self.id);
        enc_u32(buf, self.n_cap);
        buf.extend_from_slice(&self.gen.to_le_bytes());
        enc_u32(buf, self.reset_key.0);
        buf.extend_from_slice(&self.reset_key.1.to_le_bytes());
        enc_u32(buf, self.id_list.len() as u32);
        for id in &self.id_list {
            enc_u32(buf, *id);
        }
        enc_u32(buf, self.n_seen);
        buf.extend_from_slice(&self.own_seq.to_le_bytes());
        enc_u32(buf, self.waves.len() as u32);
        for (k, w) in &self.waves {
            enc_u32(buf, *k);
            buf.extend_from_slice(&w.seq.to_le_bytes());
            enc_u32(buf, w.parent.map(|p| p as u32 + 1).unwrap_or(0));
            enc_u32(buf, w.path.len() as u32);
            for id in &w.path {
                enc_u32(buf, *id);
            }
            enc_u32(buf, w.acc.len() as u32);
            for id in &w.acc {
                enc_u32(buf, *id);
            }
            enc_u32(buf, w.responded.len() as u32);
            for p in &w.responded {
                enc_u32(buf, *p as u32);
            }
            buf.push(w.done as u8);
        }
        enc_u32(buf, self.resp.len() as u32);
        for (p, q) in &self.resp {
            enc_u32(buf, *p as u32);
            enc_u32(buf, q.len() as u32);
            for f in q {
                encode_wave_frame(f, buf);
            }
        }
    }
}

pub(crate) fn encode_wave_frame(f: &WaveFrame, buf: &mut Vec<u8>) {
    enc_u32(buf, f.init_id);
    buf.extend_from_slice(&f.seq.to_le_bytes());
    buf.push(match f.msg {
        WaveMsg::Forward => 0,
        WaveMsg::Feedback => 1,
        WaveMsg::Ack => 2,
    });
    enc_u32(buf, f.ids.len() as u32);
    for id in &f.ids {
        enc_u32(buf, *id);
    }
}

pub(crate) fn encode_un_payload(pl: &UnPayload, buf: &mut Vec<u8>) {
    buf.push(pl.phase);
    enc_u32(buf, pl.id);
    buf.extend_from_slice(&pl.gen.to_le_bytes());
    enc_u32(buf, pl.reset_key.0);
    buf.extend_from_slice(&pl.reset_key.1.to_le_bytes());
    enc_u32(buf, pl.n_seen);
    enc_u32(buf, pl.waves.len() as u32);
    for f in &pl.waves {
        encode_wave_frame(f, buf);
    }
}

fn merged(mut a: UnEvents, b: UnEvents) -> UnEvents {
    a.names_invalidated |= b.names_invalidated;
    a.reset_initiated |= b.reset_initiated;
    a.wave_completed |= b.wave_completed;
    a.conflict_detected |= b.conflict_detected;
    a.stale_wave_dropped |= b.stale_wave_dropped;
    a
}
