//! Distributed MDST layer.
//!
//! Each node owns its adjacent edges toward larger ids and computes their
//! per-edge centers out of its own distance vector and the cached neighbor
//! vectors, keeping the lexicographically best candidate (separation, then
//! edge ids, then offset — so every node converges to an identical record,
//! not merely an equal bound). Candidates are folded toward the minimum-id
//! root over the route tree, the root adopts the global minimum and
//! broadcasts it back down, and the whole exchange repeats every unit; the
//! cycle counter only tags broadcasts. Finally every node derives its tree
//! attachment from the adopted center and the routing tables.

use std::collections::BTreeMap;

use super::apsp::ApspState;
use super::{enc_f64, enc_u32, NodeCtx};
use crate::center::{gamma_star, prune_and_sort, CandidatePair};

const STALE_MAX: u8 = 4;

/// Best-known center candidate: a point at `alpha_best` from the `id1`
/// endpoint of edge `(id1, id2)`, with separation bound `upbound`. The edge
/// weight rides along so any node can evaluate which side of the center it
/// falls on. `id1 == id2` names a vertex; `u32::MAX` ids are the no-candidate
/// sentinel, ordered after every real location.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Elt {
    pub alpha_best: f64,
    pub upbound: f64,
    pub id1: u32,
    pub id2: u32,
    pub omega: f64,
}

impl Elt {
    pub fn sentinel(upbound: f64) -> Self {
        Elt {
            alpha_best: 0.0,
            upbound,
            id1: u32::MAX,
            id2: u32::MAX,
            omega: 0.0,
        }
    }

    pub fn is_sentinel(&self) -> bool {
        self.id1 == u32::MAX && self.id2 == u32::MAX
    }

    fn key(&self) -> (f64, u32, u32, f64) {
        (self.upbound, self.id1, self.id2, self.alpha_best)
    }

    /// Lexicographic candidate order: (upbound, id1, id2, alpha).
    pub fn beats(&self, other: &Elt) -> bool {
        let (a, b) = (self.key(), other.key());
        a.0.total_cmp(&b.0)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
            .then(a.3.total_cmp(&b.3))
            == std::cmp::Ordering::Less
    }

    fn sane(&self) -> bool {
        self.alpha_best.is_finite()
            && self.omega.is_finite()
            && !self.upbound.is_nan()
            && self.alpha_best >= 0.0
    }
}

/// How this node hangs off the extracted spanning tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Attach {
    /// Not derivable yet (missing tables or stale center record).
    #[default]
    Unknown,
    /// This node is the tree root (closest vertex to the center).
    Root,
    /// Attached through the next hop toward the center, on this port.
    Parent(usize),
    /// This node is an endpoint of the center edge; the edge itself joins it.
    ViaEdge(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MdstPayload {
    pub cycle: u16,
    /// Subtree-best candidate, sent to the parent.
    pub up: Option<Elt>,
    /// Adopted global record, sent to sons.
    pub down: Option<(u16, Elt)>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MdstState {
    /// Own candidate from the edges this node owns.
    pub phi: Option<Elt>,
    /// Minimum over own candidate and fresh son reports.
    pub subtree_best: Option<Elt>,
    /// Adopted answer (the root's global minimum).
    pub phi_star: Option<Elt>,
    /// Broadcast freshness tag; the root bumps it per adoption.
    pub cycle: u16,
    pub son_reports: BTreeMap<usize, (Elt, u8)>,
    pub down_cache: BTreeMap<usize, (u16, Elt, u8)>,
    pub attach: Attach,
}

impl MdstState {
    /// One activation, after the routing layer has refreshed.
    pub fn tick(&mut self, ctx: &NodeCtx, my_id: u32, apsp: &ApspState, owned: &mut u32) {
        for (_, age) in self.son_reports.values_mut() {
            *age = age.saturating_add(1);
        }
        for (_, _, age) in self.down_cache.values_mut() {
            *age = age.saturating_add(1);
        }
        self.son_reports
            .retain(|p, (_, age)| *age <= STALE_MAX && ctx.edge_weight(*p).is_some());
        self.down_cache
            .retain(|p, (_, _, age)| *age <= STALE_MAX && ctx.edge_weight(*p).is_some());

        self.phi = Some(self.local_candidates(ctx, my_id, apsp, owned));

        // fold own candidate with fresh son reports
        let mut best = self.phi.unwrap();
        for (p, (elt, _)) in &self.son_reports {
            let claims = apsp
                .nbr
                .get(p)
                .map(|c| c.claims_me_parent)
                .unwrap_or(false);
            if claims && elt.sane() && elt.beats(&best) {
                best = *elt;
            }
        }
        self.subtree_best = Some(best);

        if apsp.r_id == Some(my_id) && apsp.parent.is_none() {
            // root: adopt the global minimum and stamp a new broadcast
            if best.upbound.is_finite() {
                if self.phi_star != Some(best) {
                    self.cycle = self.cycle.wrapping_add(1);
                }
                self.phi_star = Some(best);
            } else {
                self.phi_star = None;
            }
        } else {
            match apsp.parent.and_then(|p| self.down_cache.get(&p)) {
                Some(&(cycle, elt, _)) if elt.sane() => {
                    self.cycle = cycle;
                    self.phi_star = Some(elt);
                }
                _ => self.phi_star = None,
            }
        }

        self.attach = self.extract(ctx, my_id, apsp);
    }

    /// Protocol steps 2–3: scan owned edges in ascending (own id, peer id)
    /// order, keep the lexicographically best per-edge center, stop early
    /// once the bound cannot improve on D/2 and skip edges whose boundary
    /// provably stays above the current bound.
    fn local_candidates(&self, ctx: &NodeCtx, my_id: u32, apsp: &ApspState, owned: &mut u32) -> Elt {
        let (d_est, r_est) = match apsp.dr {
            Some((d, r, _)) if apsp.sep.is_some() => (d, r),
            _ => return Elt::sentinel(f64::INFINITY),
        };
        let mut phi = Elt::sentinel(r_est);
        let mut edges: Vec<(u32, usize, f64)> = apsp
            .nbr
            .iter()
            .filter_map(|(&port, c)| {
                let w = ctx.edge_weight(port)?;
                (c.id > my_id).then_some((c.id, port, w))
            })
            .collect();
        edges.sort_unstable_by_key(|&(id, port, _)| (id, port));
        for (nbr_id, port, omega) in edges {
            if phi.upbound <= d_est / 2.0 {
                break;
            }
            *owned += 1;
            let cache = &apsp.nbr[&port];
            // candidate pairs over destinations known on both sides
            let mut pairs: Vec<CandidatePair> = Vec::with_capacity(apsp.dist.len());
            let mut bound = 0.0f64;
            for (&z, e) in &apsp.dist {
                if let Ok(i) = cache.vec.binary_search_by_key(&z, |&(id, _, _)| id) {
                    let b = cache.vec[i].1;
                    pairs.push(CandidatePair { a: e.val, b, z: z as usize });
                    bound = bound.max(e.val.min(b));
                }
            }
            if pairs.is_empty() || bound > phi.upbound {
                continue; // nothing to gain on this edge
            }
            let list = prune_and_sort(&pairs);
            let (alpha, localmin) = gamma_star(&list, omega);
            let cand = Elt {
                alpha_best: alpha,
                upbound: localmin,
                id1: my_id,
                id2: nbr_id,
                omega,
            };
            if cand.beats(&phi) {
                phi = cand;
            }
        }
        phi
    }

    /// Derive the tree attachment from the adopted center record.
    fn extract(&self, ctx: &NodeCtx, my_id: u32, apsp: &ApspState) -> Attach {
        let phi = match self.phi_star {
            Some(p) if p.sane() && p.upbound.is_finite() => p,
            _ => return Attach::Unknown,
        };
        let vertex_attach = |x: u32| -> Attach {
            if x == my_id {
                Attach::Root
            } else {
                match apsp.route_parent(x) {
                    Some(p) => Attach::Parent(p),
                    None => Attach::Unknown,
                }
            }
        };
        if phi.is_sentinel() {
            // no location: fall back to the minimum-separation vertex
            return match apsp.r_arg() {
                Some(x) => vertex_attach(x),
                None => Attach::Unknown,
            };
        }
        if phi.id1 == phi.id2 {
            return vertex_attach(phi.id1);
        }
        // edge point, possibly sitting on an endpoint
        if phi.alpha_best <= 0.0 {
            return vertex_attach(phi.id1);
        }
        if phi.alpha_best >= phi.omega {
            return vertex_attach(phi.id2);
        }
        if my_id == phi.id1 || my_id == phi.id2 {
            let other = if my_id == phi.id1 { phi.id2 } else { phi.id1 };
            let direct = apsp
                .nbr
                .iter()
                .find(|(p, c)| c.id == other && ctx.edge_weight(**p).is_some())
                .map(|(&p, _)| p);
            return match direct {
                Some(p) => Attach::ViaEdge(p),
                None => Attach::Unknown,
            };
        }
        let (d1, d2) = match (apsp.dist.get(&phi.id1), apsp.dist.get(&phi.id2)) {
            (Some(a), Some(b)) => (a.val, b.val),
            _ => return Attach::Unknown,
        };
        // side of the center: ties prefer the smaller-id endpoint
        let toward = if d1 + phi.alpha_best <= d2 + (phi.omega - phi.alpha_best) {
            phi.id1
        } else {
            phi.id2
        };
        match apsp.route_parent(toward) {
            Some(p) => Attach::Parent(p),
            None => Attach::Unknown,
        }
    }

    pub fn payload_for(&self, port: usize, apsp: &ApspState) -> Option<MdstPayload> {
        let to_parent = apsp.parent == Some(port);
        let to_son = apsp
            .nbr
            .get(&port)
            .map(|c| c.claims_me_parent)
            .unwrap_or(false);
        let up = if to_parent {
            self.subtree_best.filter(|e| e.upbound.is_finite())
        } else {
            None
        };
        let down = if to_son {
            self.phi_star.map(|e| (self.cycle, e))
        } else {
            None
        };
        if up.is_none() && down.is_none() {
            return None;
        }
        Some(MdstPayload {
            cycle: self.cycle,
            up,
            down,
        })
    }

    pub fn on_payload(&mut self, port: usize, pl: &MdstPayload) {
        if let Some(elt) = pl.up {
            if elt.sane() {
                self.son_reports.insert(port, (elt, 0));
            }
        }
        if let Some((cycle, elt)) = pl.down {
            if elt.sane() {
                self.down_cache.insert(port, (cycle, elt, 0));
            }
        }
    }

    pub fn encode(&self, buf: &mut Vec<u8>) {
        enc_opt_elt(buf, self.phi);
        enc_opt_elt(buf, self.subtree_best);
        enc_opt_elt(buf, self.phi_star);
        buf.extend_from_slice(&self.cycle.to_le_bytes());
        enc_u32(buf, self.son_reports.len() as u32);
        for (p, (e, age)) in &self.son_reports {
            enc_u32(buf, *p as u32);
            enc_elt(buf, e);
            buf.push(*age);
        }
        enc_u32(buf, self.down_cache.len() as u32);
        for (p, (c, e, age)) in &self.down_cache {
            enc_u32(buf, *p as u32);
            buf.extend_from_slice(&c.to_le_bytes());
            enc_elt(buf, e);
            buf.push(*age);
        }
        match self.attach {
            Attach::Unknown => buf.push(0),
            Attach::Root => buf.push(1),
            Attach::Parent(p) => {
                buf.push(2);
                enc_u32(buf, p as u32);
            }
            Attach::ViaEdge(p) => {
                buf.push(3);
                enc_u32(buf, p as u32);
            }
        }
    }
}

pub(crate) fn enc_elt(buf: &mut Vec<u8>, e: &Elt) {
    enc_f64(buf, e.alpha_best);
    enc_f64(buf, e.upbound);
    enc_u32(buf, e.id1);
    enc_u32(buf, e.id2);
    enc_f64(buf, e.omega);
}

fn enc_opt_elt(buf: &mut Vec<u8>, e: Option<Elt>) {
    match e {
        Some(e) => {
            buf.push(1);
            enc_elt(buf, &e);
        }
        None => buf.push(0),
    }
}

pub(crate) fn encode_mdst_payload(pl: &MdstPayload, buf: &mut Vec<u8>) {
    buf.extend_from_slice(&pl.cycle.to_le_bytes());
    enc_opt_elt(buf, pl.up);
    match pl.down {
        Some((c, e)) => {
            buf.push(1);
            buf.extend_from_slice(&c.to_le_bytes());
            enc_elt(buf, &e);
        }
        None => buf.push(0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proto::apsp::{DistEntry, NbrCache};
    use crate::proto::ProtocolMode;

    #[test]
    fn elt_ordering_is_lexicographic() {
        let a = Elt {
            alpha_best: 0.5,
            upbound: 1.5,
            id1: 1,
            id2: 2,
            omega: 2.0,
        };
        let b = Elt {
            alpha_best: 0.0,
            upbound: 1.5,
            id1: 1,
            id2: 3,
            omega: 1.0,
        };
        assert!(a.beats(&b), "same bound, smaller (id1,id2) wins");
        assert!(a.beats(&Elt::sentinel(1.5)), "real candidate beats sentinel");
        assert!(Elt::sentinel(1.0).beats(&a), "smaller bound wins");
    }

    /// Two nodes, one edge of weight 4, tables already exact.
    fn two_node_state() -> (ApspState, NodeCtx<'static>) {
        let mut apsp = ApspState::default();
        apsp.dist.insert(1, DistEntry { val: 0.0, hops: 0 });
        apsp.dist.insert(2, DistEntry { val: 4.0, hops: 1 });
        apsp.next_hop.insert(2, 1);
        apsp.nbr.insert(
            1,
            NbrCache {
                id: 2,
                vec: vec![(1, 4.0, 1), (2, 0.0, 0)],
                sep: Some(4.0),
                claims_me_parent: true,
                agg: Some((4.0, 4.0, 2)),
                dr: None,
                age: 0,
            },
        );
        apsp.sep = Some(4.0);
        apsp.r_id = Some(1);
        apsp.parent = None;
        apsp.my_agg = Some((4.0, 4.0, 1));
        apsp.dr = Some((4.0, 4.0, 1));
        static NEIGHBORS: [(usize, f64); 1] = [(1, 4.0)];
        let ctx = NodeCtx {
            index: 0,
            neighbors: &NEIGHBORS,
            mode: ProtocolMode::Mdst,
        };
        (apsp, ctx)
    }

    #[test]
    fn single_edge_candidate_is_midpoint() {
        let (apsp, ctx) = two_node_state();
        let mut st = MdstState::default();
        let mut owned = 0;
        st.tick(&ctx, 1, &apsp, &mut owned);
        assert_eq!(owned, 1, "node 1 owns the edge toward id 2");
        let phi = st.phi.unwrap();
        assert_eq!(phi.upbound, 2.0);
        assert_eq!(phi.alpha_best, 2.0);
        assert_eq!((phi.id1, phi.id2), (1, 2));
        // root adopts its own subtree minimum
        let star = st.phi_star.unwrap();
        assert_eq!(star.upbound, 2.0);
        // interior center: the endpoint attaches through the edge itself
        assert_eq!(st.attach, Attach::ViaEdge(1));
    }

    #[test]
    fn non_owner_computes_nothing() {
        let (mut apsp, ctx) = two_node_state();
        // flip perspective: this node has id 2, neighbor id 1
        apsp.dist.clear();
        apsp.dist.insert(2, DistEntry { val: 0.0, hops: 0 });
        apsp.dist.insert(1, DistEntry { val: 4.0, hops: 1 });
        apsp.next_hop.insert(1, 1);
        apsp.nbr.get_mut(&1).unwrap().id = 1;
        apsp.nbr.get_mut(&1).unwrap().claims_me_parent = false;
        apsp.r_id = Some(1);
        apsp.parent = Some(1);
        let mut st = MdstState::default();
        let mut owned = 0;
        st.tick(&ctx, 2, &apsp, &mut owned);
        assert_eq!(owned, 0);
        assert!(st.phi.unwrap().is_sentinel());
        assert_eq!(st.phi.unwrap().upbound, 4.0, "seeded with R");
    }

    #[test]
    fn extraction_vertex_center() {
        let phi = Elt {
            alpha_best: 0.0,
            upbound: 4.0,
            id1: 1,
            id2: 2,
            omega: 4.0,
        };
        // from node 2's side: α = 0 on edge (1,2) is vertex 1, routed via
        // the next hop toward id 1
        let (mut apsp, ctx) = two_node_state();
        apsp.dist.clear();
        apsp.dist.insert(2, DistEntry { val: 0.0, hops: 0 });
        apsp.dist.insert(1, DistEntry { val: 4.0, hops: 1 });
        apsp.next_hop.clear();
        apsp.next_hop.insert(1, 1);
        apsp.nbr.get_mut(&1).unwrap().id = 1;
        apsp.r_id = Some(1);
        apsp.parent = Some(1);
        let mut st = MdstState::default();
        st.phi_star = Some(phi);
        assert_eq!(st.extract(&ctx, 2, &apsp), Attach::Parent(1));

        // from node 1's side: it is the vertex itself, hence the root
        let (apsp1, ctx1) = two_node_state();
        let mut st1 = MdstState::default();
        st1.phi_star = Some(phi);
        assert_eq!(st1.extract(&ctx1, 1, &apsp1), Attach::Root);
    }

    #[test]
    fn stale_center_record_is_not_extractable() {
        let (apsp, ctx) = two_node_state();
        let mut st = MdstState::default();
        st.phi_star = Some(Elt {
            alpha_best: 1.0,
            upbound: 2.0,
            id1: 7,
            id2: 9,
            omega: 2.0,
        });
        assert_eq!(st.extract(&ctx, 1, &apsp), Attach::Unknown);
    }
}
