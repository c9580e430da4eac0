//! Shared fixtures for the benchmark targets.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mdst_core::gen;
use mdst_core::WeightedGraph;

/// Deterministic graph instances spanning the shapes the solver meets:
/// sparse, ring, hub and dense-ish random topologies.
pub fn solver_instances() -> Vec<(String, WeightedGraph)> {
    let mut out = Vec::new();
    for &n in &[16usize, 32, 64] {
        out.push((format!("path-{n}"), gen::path(n)));
        out.push((format!("cycle-{n}"), gen::cycle(n)));
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        out.push((
            format!("rand-{n}"),
            gen::random_connected(&mut rng, n, 2 * n, 10),
        ));
    }
    out
}

/// Smaller set for full simulation runs.
pub fn simulation_instances() -> Vec<(String, WeightedGraph)> {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    vec![
        ("path-8".into(), gen::path(8)),
        ("cycle-12".into(), gen::cycle(12)),
        ("rand-16".into(), gen::random_connected(&mut rng, 16, 24, 10)),
    ]
}
