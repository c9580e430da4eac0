//! Stabilizing all-pairs shortest paths by per-destination distance vectors.
//!
//! Every unit each node rebuilds its whole distance vector from scratch out
//! of the neighbors' last-received vectors (own entry pinned to zero), so no
//! stale own value can survive an activation. Entries carry hop counts and
//! candidates beyond the hop cap are discarded, which bounds count-to-infinity
//! after weight increases without needing a global weight bound. Distances
//! are keyed by process id, so a naming reset implicitly invalidates them.
//!
//! Separations, the diameter and radius estimates travel over the route tree
//! toward the minimum-id node: sons report subtree aggregates upward, the
//! root folds them and broadcasts the result back down.

use std::collections::BTreeMap;

use super::{enc_f64, enc_u32, NodeCtx};
use crate::proto::un::has_duplicate;

/// Neighbor caches older than this many units are dropped.
const STALE_MAX: u8 = 4;
/// Hard hop cap when no size estimate is available.
const HOP_CAP: u8 = 255;
/// Corruption guard on received vector length.
const MAX_VEC: usize = 512;

/// One distance entry: weight and hop count of the chosen path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistEntry {
    pub val: f64,
    pub hops: u8,
}

/// Last payload received from one neighbor.
#[derive(Debug, Clone, PartialEq)]
pub struct NbrCache {
    pub id: u32,
    pub vec: Vec<(u32, f64, u8)>,
    pub sep: Option<f64>,
    pub claims_me_parent: bool,
    pub agg: Option<(f64, f64, u32)>,
    pub dr: Option<(f64, f64, u32)>,
    pub age: u8,
}

/// Per-link routing payload.
#[derive(Debug, Clone, PartialEq)]
pub struct ApspPayload {
    pub id: u32,
    /// Full distance vector `(destination id, weight, hops)`, sorted by id.
    pub vec: Vec<(u32, f64, u8)>,
    /// Sender separation estimate, when its table is complete.
    pub sep: Option<f64>,
    /// "You are my next hop toward the minimum-id node."
    pub claim_parent: bool,
    /// Subtree aggregate `(max sep, min sep, min-sep id)`, sent to the parent.
    pub agg: Option<(f64, f64, u32)>,
    /// Root broadcast `(D, R, min-sep id)`, sent to sons.
    pub dr: Option<(f64, f64, u32)>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ApspState {
    pub dist: BTreeMap<u32, DistEntry>,
    pub next_hop: BTreeMap<u32, usize>,
    pub nbr: BTreeMap<usize, NbrCache>,
    /// This node's separation, when every known process has an entry.
    pub sep: Option<f64>,
    /// Id believed to be the minimum in the network.
    pub r_id: Option<u32>,
    /// Port toward `r_id`, `None` when this node believes it is the root.
    pub parent: Option<usize>,
    /// Own subtree aggregate, refreshed every activation.
    pub my_agg: Option<(f64, f64, u32)>,
    /// Adopted `(D, R, min-sep id)`.
    pub dr: Option<(f64, f64, u32)>,
}

impl ApspState {
    pub fn d_est(&self) -> Option<f64> {
        self.dr.map(|(d, _, _)| d)
    }
    pub fn r_est(&self) -> Option<f64> {
        self.dr.map(|(_, r, _)| r)
    }
    pub fn r_arg(&self) -> Option<u32> {
        self.dr.map(|(_, _, a)| a)
    }

    /// Parent port toward a destination id; `None` when unknown (not ready)
    /// or when this node is the destination.
    pub fn route_parent(&self, dest: u32) -> Option<usize> {
        self.next_hop.get(&dest).copied()
    }

    /// (s_u, D, R) once the table is complete and the root broadcast arrived.
    pub fn separation_and_bounds(&self) -> Option<(f64, f64, f64)> {
        match (self.sep, self.dr) {
            (Some(s), Some((d, r, _))) => Some((s, d, r)),
            _ => None,
        }
    }

    /// One activation: age caches, rebuild the table, refresh aggregates.
    pub fn tick(&mut self, ctx: &NodeCtx, my_id: u32, n_seen: u32, id_list: &[u32]) {
        for c in self.nbr.values_mut() {
            c.age = c.age.saturating_add(1);
        }
        self.refresh(ctx, my_id, n_seen, id_list);
    }

    /// Store a received payload and immediately re-minimize.
    pub fn on_payload(
        &mut self,
        ctx: &NodeCtx,
        port: usize,
        pl: &ApspPayload,
        my_id: u32,
        n_seen: u32,
        id_list: &[u32],
    ) {
        if ctx.edge_weight(port).is_none() {
            return; // stale frame from a removed link
        }
        let mut vec = pl.vec.clone();
        vec.truncate(MAX_VEC);
        vec.sort_unstable_by_key(|&(id, _, _)| id);
        vec.dedup_by_key(|&mut (id, _, _)| id);
        vec.retain(|&(_, v, _)| v.is_finite() && v >= 0.0);
        self.nbr.insert(
            port,
            NbrCache {
                id: pl.id,
                vec,
                sep: pl.sep,
                claims_me_parent: pl.claim_parent,
                agg: pl.agg,
                dr: pl.dr,
                age: 0,
            },
        );
        self.refresh(ctx, my_id, n_seen, id_list);
    }

    /// Rebuild dist/next_hop from neighbor caches and recompute separation,
    /// root, parent and aggregates. Pure function of the cache contents.
    pub fn refresh(&mut self, ctx: &NodeCtx, my_id: u32, n_seen: u32, id_list: &[u32]) {
        self.nbr
            .retain(|port, c| c.age <= STALE_MAX && ctx.edge_weight(*port).is_some());
        let hop_cap = if n_seen >= 2 {
            ((n_seen - 1).min(HOP_CAP as u32)) as u8
        } else {
            HOP_CAP
        };

        // candidate destination set, purged against the current id list
        let mut dests: Vec<u32> = vec![my_id];
        for c in self.nbr.values() {
            for &(id, _, _) in &c.vec {
                dests.push(id);
            }
        }
        dests.sort_unstable();
        dests.dedup();
        if !id_list.is_empty() {
            dests.retain(|d| *d == my_id || id_list.contains(d));
        }

        let mut dist = BTreeMap::new();
        let mut next_hop = BTreeMap::new();
        for &x in &dests {
            if x == my_id {
                dist.insert(x, DistEntry { val: 0.0, hops: 0 });
                continue;
            }
            // min over neighbors of (edge weight + their entry); equal-cost
            // routes resolve to the smallest neighbor id, matching the
            // sequential tree construction
            let mut best: Option<(f64, u32, u8, usize)> = None;
            for (&port, c) in &self.nbr {
                let w = match ctx.edge_weight(port) {
                    Some(w) => w,
                    None => continue,
                };
                if let Ok(i) = c.vec.binary_search_by_key(&x, |&(id, _, _)| id) {
                    let (_, v, h) = c.vec[i];
                    if h >= hop_cap {
                        continue;
                    }
                    let cand = (w + v, c.id, h + 1, port);
                    let better = match &best {
                        None => true,
                        Some(b) => {
                            (cand.0, cand.1).partial_cmp(&(b.0, b.1))
                                == Some(std::cmp::Ordering::Less)
                        }
                    };
                    if better {
                        best = Some(cand);
                    }
                }
            }
            if let Some((v, _, h, port)) = best {
                dist.insert(x, DistEntry { val: v, hops: h });
                next_hop.insert(x, port);
            }
        }
        self.dist = dist;
        self.next_hop = next_hop;

        // readiness: one finite entry per distinct known process
        let ready = !id_list.is_empty()
            && !has_duplicate(id_list)
            && id_list.iter().all(|id| self.dist.contains_key(id));
        self.sep = if ready {
            Some(
                self.dist
                    .values()
                    .map(|e| e.val)
                    .fold(0.0, f64::max),
            )
        } else {
            None
        };

        self.r_id = self.dist.keys().next().copied().or(Some(my_id));
        self.parent = match self.r_id {
            Some(r) if r != my_id => self.next_hop.get(&r).copied(),
            _ => None,
        };

        // subtree aggregate over own separation and fresh son reports
        self.my_agg = self.sep.map(|s| {
            let mut d = s;
            let mut rmin = (s, my_id);
            for c in self.nbr.values() {
                if c.claims_me_parent {
                    if let Some((ad, ar, aa)) = c.agg {
                        if ad.is_finite() && ar.is_finite() {
                            d = d.max(ad);
                            if (ar, aa) < rmin {
                                rmin = (ar, aa);
                            }
                        }
                    }
                }
            }
            (d, rmin.0, rmin.1)
        });

        // adopt D/R: the root uses its own aggregate, everyone else takes the
        // parent's broadcast
        self.dr = if self.r_id == Some(my_id) {
            self.my_agg
        } else {
            self.parent
                .and_then(|p| self.nbr.get(&p))
                .and_then(|c| c.dr)
        };
    }

    /// Payload addressed to one neighbor.
    pub fn payload_for(&self, port: usize, my_id: u32) -> ApspPayload {
        let vec: Vec<(u32, f64, u8)> = self
            .dist
            .iter()
            .map(|(&id, e)| (id, e.val, e.hops))
            .collect();
        let to_parent = self.parent == Some(port);
        let to_son = self
            .nbr
            .get(&port)
            .map(|c| c.claims_me_parent)
            .unwrap_or(false);
        ApspPayload {
            id: my_id,
            vec,
            sep: self.sep,
            claim_parent: to_parent,
            agg: if to_parent { self.my_agg } else { None },
            dr: if to_son { self.dr } else { None },
        }
    }

    pub fn encode(&self, buf: &mut Vec<u8>) {
        enc_u32(buf, self.dist.len() as u32);
        for (id, e) in &self.dist {
            enc_u32(buf, *id);
            enc_f64(buf, e.val);
            buf.push(e.hops);
        }
        enc_u32(buf, self.next_hop.len() as u32);
        for (id, p) in &self.next_hop {
            enc_u32(buf, *id);
            enc_u32(buf, *p as u32);
        }
        enc_u32(buf, self.nbr.len() as u32);
        for (port, c) in &self.nbr {
            enc_u32(buf, *port as u32);
            enc_u32(buf, c.id);
            enc_u32(buf, c.vec.len() as u32);
            for &(id, v, h) in &c.vec {
                enc_u32(buf, id);
                enc_f64(buf, v);
                buf.push(h);
            }
            enc_opt_f64(buf, c.sep);
            buf.push(c.claims_me_parent as u8);
            enc_opt_triple(buf, c.agg);
            enc_opt_triple(buf, c.dr);
            buf.push(c.age);
        }
        enc_opt_f64(buf, self.sep);
        enc_u32(buf, self.r_id.unwrap_or(0));
        enc_u32(buf, self.parent.map(|p| p as u32 + 1).unwrap_or(0));
        enc_opt_triple(buf, self.my_agg);
        enc_opt_triple(buf, self.dr);
    }
}

fn enc_opt_f64(buf: &mut Vec<u8>, x: Option<f64>) {
    match x {
        Some(v) => {
            buf.push(1);
            enc_f64(buf, v);
        }
        None => buf.push(0),
    }
}

fn enc_opt_triple(buf: &mut Vec<u8>, x: Option<(f64, f64, u32)>) {
    match x {
        Some((a, b, c)) => {
            buf.push(1);
            enc_f64(buf, a);
            enc_f64(buf, b);
            enc_u32(buf, c);
        }
        None => buf.push(0),
    }
}

pub(crate) fn encode_apsp_payload(pl: &ApspPayload, buf: &mut Vec<u8>) {
    enc_u32(buf, pl.id);
    enc_u32(buf, pl.vec.len() as u32);
    for &(id, v, h) in &pl.vec {
        enc_u32(buf, id);
        enc_f64(buf, v);
        buf.push(h);
    }
    enc_opt_f64(buf, pl.sep);
    buf.push(pl.claim_parent as u8);
    enc_opt_triple(buf, pl.agg);
    enc_opt_triple(buf, pl.dr);
}
