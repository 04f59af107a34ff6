#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rppr_core::{build_from_edges, Graph, ProblemParams};

/// Random recursive tree plus each remaining pair with probability `p`.
pub fn random_connected_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Graph {
    let mut edges = Vec::new();
    for i in 1..n {
        edges.push((rng.gen_range(0..i) as u64, i as u64));
    }
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                edges.push((u as u64, v as u64));
            }
        }
    }
    build_from_edges(&edges, None).unwrap().graph
}

/// `n ∈ [10, 50]`, `α ∈ [0.05, 0.9]`, `ρ` log-uniform in `[1e-3, 0.5]`.
pub fn random_instance(rng: &mut ChaCha8Rng) -> (Graph, ProblemParams) {
    let n = rng.gen_range(10..=50);
    let density = rng.gen_range(0.02..0.3);
    let g = random_connected_graph(rng, n, density);
    let alpha = rng.gen_range(0.05..=0.9);
    let rho = (rng.gen_range(1e-3f64.ln()..=0.5f64.ln())).exp();
    let seed = rng.gen_range(0..n);
    (g, ProblemParams::new(alpha, rho, seed).unwrap())
}
