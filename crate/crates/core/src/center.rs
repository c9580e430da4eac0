//! Sequential absolute-center and MDST computation.
//!
//! For an edge `uv` of weight ω, every vertex `z` contributes a tent
//! `min(α + d(u,z), ω − α + d(v,z))` over α ∈ [0, ω]; the upper boundary of
//! all tents is the separation of the point at offset α, and its global
//! minimum is the center of that edge. The absolute center is the best of
//! the per-edge centers, and the shortest-path tree rooted there is a
//! minimum diameter spanning tree.

use crate::graph::{
    all_pairs_distances, is_spanning_tree, separation, shortest_path_tree_ordered, tree_diameter,
    DistanceTable, Edge, GeneralNode, SpanningTree, TieOrder, WeightedGraph,
};
use thiserror::Error;

/// One distance pair `(d(u,z), d(v,z))` contributed by vertex `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidatePair {
    pub a: f64,
    pub b: f64,
    pub z: usize,
}

/// Dominance-pruned pairs, strictly descending in `a`, strictly ascending
/// in `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryList {
    pub pairs: Vec<(f64, f64)>,
}

/// A center location with its separation.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterResult {
    pub location: GeneralNode,
    pub separation: f64,
}

/// One pair per vertex, read off the distance table.
pub fn candidate_pairs(dt: &DistanceTable, e: &Edge) -> Vec<CandidatePair> {
    (0..dt.dist.len())
        .map(|z| CandidatePair {
            a: dt.dist[e.u][z],
            b: dt.dist[e.v][z],
            z,
        })
        .collect()
}

/// Drop every pair dominated by another (componentwise ≤), deduplicate, and
/// sort descending by the first coordinate.
pub fn prune_and_sort(pairs: &[CandidatePair]) -> BoundaryList {
    let mut sorted: Vec<(f64, f64)> = pairs.iter().map(|p| (p.a, p.b)).collect();
    // Descending by a, then descending by b: a pair survives iff its b
    // strictly exceeds every b seen at larger-or-equal a.
    sorted.sort_by(|x, y| y.0.total_cmp(&x.0).then(y.1.total_cmp(&x.1)));
    let mut kept: Vec<(f64, f64)> = Vec::new();
    let mut max_b = f64::NEG_INFINITY;
    for (a, b) in sorted {
        if b > max_b {
            kept.push((a, b));
            max_b = b;
        }
    }
    BoundaryList { pairs: kept }
}

/// The upper boundary B_e(α): max over pairs of `min(α + a, ω − α + b)`.
/// Equals the separation of the edge point at α when given one pair per
/// vertex (pruned or not — dominated tents never reach the max).
pub fn boundary_eval(pairs: &[(f64, f64)], omega: f64, alpha: f64) -> f64 {
    pairs
        .iter()
        .map(|&(a, b)| (alpha + a).min(omega - alpha + b))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Global minimum of the upper boundary over α ∈ [0, ω].
///
/// Candidate points are both endpoints plus, for every consecutive retained
/// pair, the crossing of tent i's descending segment with tent i+1's
/// ascending segment, `x = ½(ω + b_i − a_{i+1})`, clamped to the edge. Each
/// candidate is scored by evaluating the boundary itself, so a crossing that
/// is not a true local minimum can never win with a wrong value. Ties go to
/// the smallest α.
pub fn gamma_star(list: &BoundaryList, omega: f64) -> (f64, f64) {
    assert!(!list.pairs.is_empty() && omega > 0.0);
    let mut candidates = Vec::with_capacity(list.pairs.len() + 1);
    candidates.push(0.0);
    for i in 0..list.pairs.len().saturating_sub(1) {
        let (_, b_i) = list.pairs[i];
        let (a_next, _) = list.pairs[i + 1];
        let x = 0.5 * (omega + b_i - a_next);
        candidates.push(x.clamp(0.0, omega));
    }
    candidates.push(omega);
    candidates.sort_by(f64::total_cmp);
    let mut best_alpha = 0.0;
    let mut best = f64::INFINITY;
    for alpha in candidates {
        let y = boundary_eval(&list.pairs, omega, alpha);
        if y < best {
            best = y;
            best_alpha = alpha;
        }
    }
    (best_alpha, best)
}

/// Sound lower bound test for skipping an edge: every tent's minimum over
/// the whole edge is `min(a_z, b_z)`, so the boundary never drops below
/// `max_z min(d(u,z), d(v,z))`. The comparison is strict so that skipping
/// can never discard a candidate tying the current best (which would change
/// tie resolution, though never the separation value).
pub fn edge_skip_bound(dt: &DistanceTable, e: &Edge, best_so_far: f64) -> bool {
    let bound = (0..dt.dist.len())
        .map(|z| dt.dist[e.u][z].min(dt.dist[e.v][z]))
        .fold(0.0, f64::max);
    bound > best_so_far
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkipBound {
    Off,
    On,
}

/// Absolute center under a vertex order: per-edge centers via [`gamma_star`],
/// ties across edges broken by (separation, oriented edge key, α).
pub fn absolute_center_ordered(
    g: &WeightedGraph,
    dt: &DistanceTable,
    order: &TieOrder,
    skip: SkipBound,
) -> CenterResult {
    if g.n() == 1 {
        return CenterResult {
            location: GeneralNode::Vertex(0),
            separation: 0.0,
        };
    }
    // Edges scanned in ascending oriented-key order so the lexicographic
    // tie rule is the same "first strict improvement wins" rule the
    // distributed protocol applies.
    let mut edge_order: Vec<usize> = (0..g.m()).collect();
    edge_order.sort_by_key(|&i| order.edge_key(&g.edge(i)));
    let mut best: Option<(f64, (u64, u64), f64, usize)> = None; // (sep, key, alpha-from-p, edge)
    for &i in &edge_order {
        let e = g.edge(i);
        if skip == SkipBound::On {
            if let Some((s, _, _, _)) = best {
                if edge_skip_bound(dt, &e, s) {
                    continue;
                }
            }
        }
        let (p, q) = order.orient(e.u, e.v);
        let pairs: Vec<CandidatePair> = (0..g.n())
            .map(|z| CandidatePair {
                a: dt.dist[p][z],
                b: dt.dist[q][z],
                z,
            })
            .collect();
        let list = prune_and_sort(&pairs);
        let (alpha, localmin) = gamma_star(&list, e.w);
        let key = (localmin, order.edge_key(&e), alpha, i);
        let better = match &best {
            None => true,
            Some((s, k, a, _)) => {
                (key.0, key.1, key.2).partial_cmp(&(*s, *k, *a)) == Some(std::cmp::Ordering::Less)
            }
        };
        if better {
            best = Some(key);
        }
    }
    let (sep, _, alpha_p, i) = best.expect("graph with n > 1 has at least one edge");
    let e = g.edge(i);
    let (p, _) = order.orient(e.u, e.v);
    // Convert back to the canonical representation (α from lower index).
    let alpha = if p == e.u { alpha_p } else { e.w - alpha_p };
    let location = GeneralNode::EdgePoint {
        edge: (e.u, e.v),
        alpha,
    }
    .normalized(g);
    CenterResult {
        location,
        separation: sep,
    }
}

/// Absolute center with internal-index tie order and no edge skipping.
pub fn absolute_center(g: &WeightedGraph, dt: &DistanceTable) -> CenterResult {
    absolute_center_ordered(g, dt, &TieOrder::identity(g.n()), SkipBound::Off)
}

/// MDST: the shortest-path tree rooted at the absolute center, with its
/// diameter.
pub fn mdst_ordered(
    g: &WeightedGraph,
    dt: &DistanceTable,
    order: &TieOrder,
) -> (SpanningTree, f64) {
    let c = absolute_center_ordered(g, dt, order, SkipBound::Off);
    let t = shortest_path_tree_ordered(g, dt, c.location, order);
    let d = tree_diameter(g, &t);
    (t, d)
}

pub fn mdst(g: &WeightedGraph) -> (SpanningTree, f64) {
    let dt = all_pairs_distances(g);
    mdst_ordered(g, &dt, &TieOrder::identity(g.n()))
}

/// Grid-search oracle: separation minimized over all vertices and a uniform
/// α-grid on every edge.
pub fn brute_force_center(g: &WeightedGraph, dt: &DistanceTable, grid_step: f64) -> CenterResult {
    assert!(grid_step > 0.0);
    let mut best = CenterResult {
        location: GeneralNode::Vertex(0),
        separation: separation(g, dt, GeneralNode::Vertex(0)),
    };
    for v in 1..g.n() {
        let s = separation(g, dt, GeneralNode::Vertex(v));
        if s < best.separation {
            best = CenterResult {
                location: GeneralNode::Vertex(v),
                separation: s,
            };
        }
    }
    for e in g.edges() {
        let mut alpha = 0.0;
        loop {
            let gamma = GeneralNode::EdgePoint {
                edge: (e.u, e.v),
                alpha,
            };
            let s = separation(g, dt, gamma);
            if s < best.separation {
                best = CenterResult {
                    location: gamma,
                    separation: s,
                };
            }
            if alpha >= e.w {
                break;
            }
            alpha = (alpha + grid_step).min(e.w);
        }
    }
    best
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("instance too large for tree enumeration (n ≤ {max_n}, m ≤ {max_m})")]
    TooLarge { max_n: usize, max_m: usize },
}

const BRUTE_MAX_N: usize = 9;
const BRUTE_MAX_M: usize = 12;

/// Exact minimum tree diameter by enumerating every spanning tree.
/// Guarded to n ≤ 9, m ≤ 12. Distances are recomputed internally
/// (Floyd–Warshall over the chosen edges) so the oracle shares no code path
/// with the solver it checks.
pub fn brute_force_mdst(g: &WeightedGraph) -> Result<f64, OracleError> {
    if g.n() > BRUTE_MAX_N || g.m() > BRUTE_MAX_M {
        return Err(OracleError::TooLarge {
            max_n: BRUTE_MAX_N,
            max_m: BRUTE_MAX_M,
        });
    }
    let n = g.n();
    let m = g.m();
    if n == 1 {
        return Ok(0.0);
    }
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << m) {
        if mask.count_ones() as usize != n - 1 {
            continue;
        }
        let edges: Vec<(usize, usize)> = (0..m)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| (g.edge(i).u, g.edge(i).v))
            .collect();
        if !is_spanning_tree(g, &edges) {
            continue;
        }
        // Floyd–Warshall restricted to the tree edges.
        let mut d = vec![vec![f64::INFINITY; n]; n];
        for (v, row) in d.iter_mut().enumerate() {
            row[v] = 0.0;
        }
        for &(u, v) in &edges {
            let w = g.edge(g.edge_index(u, v).unwrap()).w;
            d[u][v] = w;
            d[v][u] = w;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let via = d[i][k] + d[k][j];
                    if via < d[i][j] {
                        d[i][j] = via;
                    }
                }
            }
        }
        let diam = d.iter().flatten().copied().fold(0.0, f64::max);
        if diam < best {
            best = diam;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::all_pairs_distances;

    fn single_edge() -> WeightedGraph {
        WeightedGraph::new(2, &[(0, 1, 4.0)]).unwrap()
    }

    fn path_auv() -> WeightedGraph {
        WeightedGraph::new(3, &[(0, 1, 1.0), (1, 2, 2.0)]).unwrap()
    }

    fn unit_triangle() -> WeightedGraph {
        WeightedGraph::new(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap()
    }

    fn unit_cycle4() -> WeightedGraph {
        WeightedGraph::new(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (0, 3, 1.0)]).unwrap()
    }

    fn pairs(raw: &[(f64, f64)]) -> Vec<CandidatePair> {
        raw.iter()
            .enumerate()
            .map(|(z, &(a, b))| CandidatePair { a, b, z })
            .collect()
    }

    #[test]
    fn candidate_pairs_examples() {
        let g = path_auv();
        let dt = all_pairs_distances(&g);
        let e = g.edge(g.edge_index(1, 2).unwrap());
        let got: Vec<(f64, f64)> = candidate_pairs(&dt, &e).iter().map(|p| (p.a, p.b)).collect();
        assert_eq!(got, vec![(1.0, 3.0), (0.0, 2.0), (2.0, 0.0)]);

        let se = single_edge();
        let sdt = all_pairs_distances(&se);
        let got: Vec<(f64, f64)> = candidate_pairs(&sdt, &se.edge(0))
            .iter()
            .map(|p| (p.a, p.b))
            .collect();
        assert_eq!(got, vec![(0.0, 4.0), (4.0, 0.0)]);

        let tri = unit_triangle();
        let tdt = all_pairs_distances(&tri);
        let e = tri.edge(tri.edge_index(0, 1).unwrap());
        let got: Vec<(f64, f64)> = candidate_pairs(&tdt, &e).iter().map(|p| (p.a, p.b)).collect();
        assert_eq!(got, vec![(0.0, 1.0), (1.0, 0.0), (1.0, 1.0)]);
    }

    #[test]
    fn prune_examples() {
        let l = prune_and_sort(&pairs(&[(1.0, 3.0), (0.0, 2.0), (2.0, 0.0)]));
        assert_eq!(l.pairs, vec![(2.0, 0.0), (1.0, 3.0)]);

        let l = prune_and_sort(&pairs(&[(0.0, 4.0), (4.0, 0.0)]));
        assert_eq!(l.pairs, vec![(4.0, 0.0), (0.0, 4.0)]);

        let l = prune_and_sort(&pairs(&[(1.0, 1.0), (1.0, 1.0), (0.0, 1.0)]));
        assert_eq!(l.pairs, vec![(1.0, 1.0)]);
    }

    #[test]
    fn boundary_list_invariants_on_random_inputs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let k = rng.gen_range(1..10);
            let raw: Vec<CandidatePair> = (0..k)
                .map(|z| CandidatePair {
                    a: rng.gen_range(0..8) as f64,
                    b: rng.gen_range(0..8) as f64,
                    z,
                })
                .collect();
            let l = prune_and_sort(&raw);
            for w in l.pairs.windows(2) {
                assert!(w[0].0 > w[1].0, "a strictly descending");
                assert!(w[0].1 < w[1].1, "b strictly ascending");
            }
            // every dropped pair is dominated by some retained pair
            for p in &raw {
                let covered = l
                    .pairs
                    .iter()
                    .any(|&(a, b)| p.a <= a && p.b <= b);
                assert!(covered);
            }
        }
    }

    /// Dense α-grid oracle for gamma_star.
    fn grid_min(pairs: &[(f64, f64)], omega: f64, step: f64) -> (f64, f64) {
        let mut alpha = 0.0;
        let mut best = (0.0, f64::INFINITY);
        loop {
            let y = boundary_eval(pairs, omega, alpha);
            if y < best.1 {
                best = (alpha, y);
            }
            if alpha >= omega {
                break;
            }
            alpha = (alpha + step).min(omega);
        }
        best
    }

    #[test]
    fn gamma_star_examples() {
        // single edge: symmetric midpoint
        let l = BoundaryList {
            pairs: vec![(4.0, 0.0), (0.0, 4.0)],
        };
        assert_eq!(gamma_star(&l, 4.0), (2.0, 2.0));

        // path graph, edge uv: derived via the grid oracle
        let l = BoundaryList {
            pairs: vec![(2.0, 0.0), (1.0, 3.0)],
        };
        let (alpha, min) = gamma_star(&l, 2.0);
        assert_eq!((alpha, min), (0.5, 1.5));
        let (ga, gm) = grid_min(&l.pairs, 2.0, 1e-4);
        assert!((min - gm).abs() <= 1e-4 + 1e-9);
        assert!((alpha - ga).abs() <= 1e-4 + 1e-9);

        // unit triangle: single tent, minimum at an endpoint
        let l = BoundaryList {
            pairs: vec![(1.0, 1.0)],
        };
        let (alpha, min) = gamma_star(&l, 1.0);
        assert_eq!((alpha, min), (0.0, 1.0));
        let (_, gm) = grid_min(&l.pairs, 1.0, 1e-4);
        assert!((min - gm).abs() <= 1e-4 + 1e-9);
    }

    #[test]
    fn boundary_eval_examples() {
        let se_pairs = vec![(0.0, 4.0), (4.0, 0.0)];
        assert_eq!(boundary_eval(&se_pairs, 4.0, 0.0), 4.0);
        assert_eq!(boundary_eval(&se_pairs, 4.0, 2.0), 2.0);

        let g = path_auv();
        let dt = all_pairs_distances(&g);
        let e = g.edge(g.edge_index(1, 2).unwrap());
        let raw: Vec<(f64, f64)> = candidate_pairs(&dt, &e).iter().map(|p| (p.a, p.b)).collect();
        assert_eq!(boundary_eval(&raw, e.w, 1.0), 2.0);
        // cross-check against separation()
        let gamma = GeneralNode::EdgePoint {
            edge: (1, 2),
            alpha: 1.0,
        };
        assert_eq!(boundary_eval(&raw, e.w, 1.0), separation(&g, &dt, gamma));
    }

    #[test]
    fn boundary_equals_separation_on_grid() {
        let g = unit_cycle4();
        let dt = all_pairs_distances(&g);
        for e in g.edges() {
            let raw: Vec<(f64, f64)> =
                candidate_pairs(&dt, e).iter().map(|p| (p.a, p.b)).collect();
            let mut alpha = 0.0;
            while alpha <= e.w {
                let gamma = GeneralNode::EdgePoint {
                    edge: (e.u, e.v),
                    alpha,
                };
                assert_eq!(
                    boundary_eval(&raw, e.w, alpha),
                    separation(&g, &dt, gamma),
                    "identical arithmetic"
                );
                alpha += 0.125;
            }
        }
    }

    #[test]
    fn absolute_center_examples() {
        let se = single_edge();
        let c = absolute_center(&se, &all_pairs_distances(&se));
        assert_eq!(
            c.location,
            GeneralNode::EdgePoint {
                edge: (0, 1),
                alpha: 2.0
            }
        );
        assert_eq!(c.separation, 2.0);

        let g = path_auv();
        let c = absolute_center(&g, &all_pairs_distances(&g));
        assert_eq!(
            c.location,
            GeneralNode::EdgePoint {
                edge: (1, 2),
                alpha: 0.5
            }
        );
        assert_eq!(c.separation, 1.5);

        let tri = unit_triangle();
        let c = absolute_center(&tri, &all_pairs_distances(&tri));
        assert_eq!(c.location, GeneralNode::Vertex(0));
        assert_eq!(c.separation, 1.0);
    }

    #[test]
    fn absolute_center_matches_grid_oracle() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let g = crate::gen::random_connected(&mut rng, 7, 10, 9);
            let dt = all_pairs_distances(&g);
            let exact = absolute_center(&g, &dt);
            let grid = brute_force_center(&g, &dt, 1e-3);
            assert!(
                (exact.separation - grid.separation).abs() <= 1e-3,
                "exact {} vs grid {} on {:?}",
                exact.separation,
                grid.separation,
                g
            );
        }
    }

    #[test]
    fn brute_force_center_examples() {
        let se = single_edge();
        let sdt = all_pairs_distances(&se);
        let c = brute_force_center(&se, &sdt, 0.1);
        // grid points accumulate in 0.1 steps, so exactness is up to fp noise
        assert!((c.separation - 2.0).abs() <= 1e-9);
        match c.location {
            GeneralNode::EdgePoint { alpha, .. } => assert!((alpha - 2.0).abs() <= 1e-9),
            _ => panic!("expected edge point"),
        }

        let tri = unit_triangle();
        let c = brute_force_center(&tri, &all_pairs_distances(&tri), 0.25);
        assert_eq!(c.separation, 1.0);
    }

    #[test]
    fn mdst_examples() {
        let tri = unit_triangle();
        let (t, d) = mdst(&tri);
        assert_eq!(d, 2.0);
        assert_eq!(t.edges.len(), 2);
        assert_eq!(brute_force_mdst(&tri).unwrap(), 2.0);

        let c4 = unit_cycle4();
        let (t, d) = mdst(&c4);
        assert_eq!(d, 3.0);
        assert_eq!(t.edges.len(), 3);
        assert_eq!(brute_force_mdst(&c4).unwrap(), 3.0);

        let g = path_auv();
        let (t, d) = mdst(&g);
        assert_eq!(t.edges, vec![(0, 1), (1, 2)]);
        assert_eq!(d, 3.0);
    }

    #[test]
    fn k4_bruteforce() {
        let k4 = WeightedGraph::new(
            4,
            &[
                (0, 1, 1.0),
                (0, 2, 1.0),
                (0, 3, 1.0),
                (1, 2, 1.0),
                (1, 3, 1.0),
                (2, 3, 1.0),
            ],
        )
        .unwrap();
        assert_eq!(brute_force_mdst(&k4).unwrap(), 2.0);
        let (_, d) = mdst(&k4);
        assert_eq!(d, 2.0);
    }

    #[test]
    fn brute_force_guard() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let big = crate::gen::random_connected(&mut rng, 10, 13, 5);
        assert!(brute_force_mdst(&big).is_err());
    }

    #[test]
    fn edge_skip_examples() {
        let g = path_auv();
        let dt = all_pairs_distances(&g);
        for e in g.edges() {
            assert!(!edge_skip_bound(&dt, e, f64::INFINITY));
        }
        let e_au = g.edge(g.edge_index(0, 1).unwrap());
        // bound = max_z min(d(a,z), d(u,z)) = min(3,2) = 2 ≥ 1.5
        assert!(edge_skip_bound(&dt, &e_au, 1.5));
    }

    #[test]
    fn skip_bound_never_changes_result() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        for _ in 0..50 {
            let g = crate::gen::random_connected(&mut rng, 9, 14, 10);
            let dt = all_pairs_distances(&g);
            let order = TieOrder::identity(g.n());
            let plain = absolute_center_ordered(&g, &dt, &order, SkipBound::Off);
            let skipped = absolute_center_ordered(&g, &dt, &order, SkipBound::On);
            assert_eq!(plain, skipped);
        }
    }

    #[test]
    fn bound_sandwich_property() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..40 {
            let g = crate::gen::random_connected(&mut rng, 8, 12, 7);
            let dt = all_pairs_distances(&g);
            let (diam, _, _) = crate::graph::diameter_radius(&g, &dt);
            let c = absolute_center(&g, &dt);
            let (_, td) = mdst(&g);
            assert!(c.separation >= diam / 2.0 - 1e-9);
            assert!(td >= diam - 1e-9);
            assert!(td <= 2.0 * c.separation + 1e-9);
        }
    }
}
