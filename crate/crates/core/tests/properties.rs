mod common;

use std::cell::RefCell;
use std::collections::BTreeSet;

use nalgebra::DVector;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rppr_core::objective::{gradient, objective_value, prox, smooth_value};
use rppr_core::oracle::DenseProblem;
use rppr_core::{solve, Adjacency, Graph, Method, ProblemParams, SolverConfig, SparseVector};

/// Records every node whose adjacency list is read.
struct Counting<'a> {
    g: &'a Graph,
    touched: RefCell<BTreeSet<usize>>,
}

impl Adjacency for Counting<'_> {
    fn node_count(&self) -> usize {
        self.g.node_count()
    }
    fn degree(&self, node: usize) -> usize {
        self.g.degree(node)
    }
    fn neighbors(&self, node: usize) -> &[u32] {
        self.touched.borrow_mut().insert(node);
        self.g.neighbors(node)
    }
    fn sqrt_degree(&self, node: usize) -> f64 {
        self.g.sqrt_degree(node)
    }
}

fn instance(seed: u64) -> (Graph, ProblemParams) {
    common::random_instance(&mut ChaCha8Rng::seed_from_u64(seed))
}

fn sparse_from(n: usize, raw: &[(usize, f64)]) -> SparseVector {
    let mut seen = BTreeSet::new();
    let pairs = raw
        .iter()
        .map(|&(i, v)| (i % n, v))
        .filter(|&(i, _)| seen.insert(i))
        .collect();
    SparseVector::from_pairs(pairs).unwrap()
}

fn entries() -> impl Strategy<Value = Vec<(usize, f64)>> {
    prop::collection::vec((0usize..1000, -1.0f64..1.0), 0..20)
}

fn dense(x: &SparseVector, n: usize) -> DVector<f64> {
    DVector::from_vec(x.to_dense(n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gradient_matches_dense(seed in any::<u64>(), raw in entries()) {
        let (g, p) = instance(seed);
        let x = sparse_from(g.n(), &raw);
        let dp = DenseProblem::from_params(&g, &p).unwrap();
        let want = dp.gradient(&dense(&x, g.n()));
        let got = gradient(&g, &p, &x).to_dense(g.n());
        for i in 0..g.n() {
            prop_assert!((got[i] - want[i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn objective_matches_dense(seed in any::<u64>(), raw in entries()) {
        let (g, p) = instance(seed);
        let x = sparse_from(g.n(), &raw);
        let dp = DenseProblem::from_params(&g, &p).unwrap();
        let want = dp.objective(&dense(&x, g.n()));
        prop_assert!((objective_value(&g, &p, &x) - want).abs() <= 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences(seed in any::<u64>(), raw in entries(), dir in entries()) {
        let (g, p) = instance(seed);
        let x = sparse_from(g.n(), &raw);
        let d = sparse_from(g.n(), &dir);
        let h = 1e-6;
        let fd = (smooth_value(&g, &p, &x.lincomb(1.0, &d, h)) - smooth_value(&g, &p, &x.lincomb(1.0, &d, -h))) / (2.0 * h);
        let an = gradient(&g, &p, &x).dot(&d);
        prop_assert!((fd - an).abs() <= 1e-6 * (1.0 + an.abs()));
    }

    #[test]
    fn prox_is_monotone(seed in any::<u64>(), raw in entries(), bump in prop::collection::vec(0.0f64..1.0, 20)) {
        let (g, p) = instance(seed);
        let w = sparse_from(g.n(), &raw);
        let lifted: Vec<(usize, f64)> = w.iter().zip(&bump).map(|((i, v), b)| (i, v + b)).collect();
        let w2 = SparseVector::from_pairs(lifted).unwrap();
        let (a, b) = (prox(&g, &p, &w, 1.0), prox(&g, &p, &w2, 1.0));
        for i in 0..g.n() {
            prop_assert!(a.get(i) <= b.get(i));
        }
    }

    #[test]
    fn quadratic_form_sandwich(seed in any::<u64>(), raw in entries()) {
        let (g, p) = instance(seed);
        let x = sparse_from(g.n(), &raw);
        // ⟨x, Qx⟩ = 2(f(x) + ⟨b, x⟩)
        let quad = 2.0 * (smooth_value(&g, &p, &x) + p.alpha * x.get(p.seed) / g.sqrt_degree(p.seed));
        let norm2 = x.norm2().powi(2);
        prop_assert!(quad >= p.alpha * norm2 - 1e-12);
        prop_assert!(quad <= norm2 + 1e-12);
    }

    #[test]
    fn operator_is_symmetric(seed in any::<u64>(), a in entries(), b in entries()) {
        let (g, p) = instance(seed);
        let (x, y) = (sparse_from(g.n(), &a), sparse_from(g.n(), &b));
        let bvec = SparseVector::unit(p.seed, p.alpha / g.sqrt_degree(p.seed));
        let qx = gradient(&g, &p, &x).lincomb(1.0, &bvec, 1.0);
        let qy = gradient(&g, &p, &y).lincomb(1.0, &bvec, 1.0);
        prop_assert!((qx.dot(&y) - x.dot(&qy)).abs() <= 1e-12);
    }

    #[test]
    fn gradient_reads_only_the_support(seed in any::<u64>(), raw in entries()) {
        let (g, p) = instance(seed);
        let x = sparse_from(g.n(), &raw);
        let counting = Counting { g: &g, touched: RefCell::new(BTreeSet::new()) };
        let _ = gradient(&counting, &p, &x);
        let supp: BTreeSet<usize> = x.indices().collect();
        prop_assert!(counting.touched.borrow().is_subset(&supp));
    }

    #[test]
    fn solves_are_deterministic_and_methods_agree(seed in any::<u64>()) {
        let (g, p) = instance(seed);
        let cfg = SolverConfig::new(Method::Fista, 1e-10).full_trace();
        let a = solve(&g, &p, &cfg).unwrap();
        let b = solve(&g, &p, &cfg).unwrap();
        prop_assert_eq!(&a.trace.records, &b.trace.records);
        prop_assert_eq!(&a.x, &b.x);
        let ista = solve(&g, &p, &SolverConfig::new(Method::Ista, 1e-10)).unwrap();
        prop_assert!(ista.x.dist_inf(&a.x) <= 1e-6);
    }

    #[test]
    fn solver_reads_only_visited_supports(seed in any::<u64>()) {
        let (g, p) = instance(seed);
        let counting = Counting { g: &g, touched: RefCell::new(BTreeSet::new()) };
        let sol = solve(&counting, &p, &SolverConfig::new(Method::Fista, 1e-8).full_trace()).unwrap();
        let mut visited: BTreeSet<usize> = sol.trace.snapshots.iter().flat_map(|s| s.y.indices().chain(s.x_next.indices())).collect();
        visited.extend(sol.x.indices());
        prop_assert!(counting.touched.borrow().is_subset(&visited));
    }
}
