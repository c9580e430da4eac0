//! Deterministic graph generators for tests, benchmarks and the CLI.

use rand::Rng;
use thiserror::Error;

use crate::graph::WeightedGraph;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("infeasible parameters: n={n}, m={m}")]
    Infeasible { n: usize, m: usize },
}

/// Path 0-1-...-(n−1) with weights 1, 2, 3, ...
pub fn path(n: usize) -> WeightedGraph {
    let edges: Vec<(usize, usize, f64)> =
        (0..n - 1).map(|i| (i, i + 1, (i + 1) as f64)).collect();
    WeightedGraph::new(n, &edges).unwrap()
}

/// Unit-weight cycle on n vertices.
pub fn cycle(n: usize) -> WeightedGraph {
    let mut edges: Vec<(usize, usize, f64)> = (0..n - 1).map(|i| (i, i + 1, 1.0)).collect();
    edges.push((0, n - 1, 1.0));
    WeightedGraph::new(n, &edges).unwrap()
}

/// Unit-weight star centered at vertex 0.
pub fn star(n: usize) -> WeightedGraph {
    let edges: Vec<(usize, usize, f64)> = (1..n).map(|i| (0, i, 1.0)).collect();
    WeightedGraph::new(n, &edges).unwrap()
}

/// Random connected graph: a random spanning tree first, then extra edges,
/// integer weights in 1..=wmax.
pub fn random_connected<R: Rng>(rng: &mut R, n: usize, m: usize, wmax: u32) -> WeightedGraph {
    try_random_connected(rng, n, m, wmax).expect("feasible parameters")
}

pub fn try_random_connected<R: Rng>(
    rng: &mut R,
    n: usize,
    m: usize,
    wmax: u32,
) -> Result<WeightedGraph, GenError> {
    let max_m = n * (n - 1) / 2;
    if n == 0 || m + 1 < n || m > max_m || wmax == 0 {
        return Err(GenError::Infeasible { n, m });
    }
    let mut present = std::collections::BTreeSet::new();
    let mut edges: Vec<(usize, usize, f64)> = Vec::with_capacity(m);
    let w = |rng: &mut R| rng.gen_range(1..=wmax) as f64;
    // spanning tree: attach each vertex to a random earlier one
    for v in 1..n {
        let u = rng.gen_range(0..v);
        present.insert((u, v));
        let weight = w(rng);
        edges.push((u, v, weight));
    }
    while edges.len() < m {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u == v {
            continue;
        }
        let key = (u.min(v), u.max(v));
        if present.insert(key) {
            let weight = w(rng);
            edges.push((key.0, key.1, weight));
        }
    }
    Ok(WeightedGraph::new(n, &edges).unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn canonical_fixtures() {
        let p = path(3);
        assert_eq!(p.format(), "3 2\n0 1 1\n1 2 2\n");
        let c = cycle(4);
        assert_eq!(c.n(), 4);
        assert_eq!(c.m(), 4);
        assert!(c.edges().iter().all(|e| e.w == 1.0));
        let s = star(5);
        assert_eq!(s.m(), 4);
    }

    #[test]
    fn random_is_deterministic() {
        let a = random_connected(&mut rand_chacha::ChaCha8Rng::seed_from_u64(7), 12, 20, 10);
        let b = random_connected(&mut rand_chacha::ChaCha8Rng::seed_from_u64(7), 12, 20, 10);
        assert_eq!(a.format(), b.format());
    }

    #[test]
    fn infeasible_rejected() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        assert!(try_random_connected(&mut rng, 5, 3, 10).is_err()); // too few
        assert!(try_random_connected(&mut rng, 4, 7, 10).is_err()); // too many
    }
}
