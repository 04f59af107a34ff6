mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rppr_core::diagnostics::slacks;
use rppr_core::oracle::{breakpoint_scan, dense_solve, dense_solve_default, DenseProblem, DEFAULT_CAP_NODES};
use rppr_core::synth::{path_instance, star_instance, AnalyticFamily, AnalyticInstance};
use rppr_core::{solve, Method, SolverConfig, SparseVector};

#[test]
fn local_solvers_match_dense_on_random_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let (g, p) = common::random_instance(&mut rng);
        let want = SparseVector::from_dense(dense_solve_default(&g, &p).unwrap().as_slice());
        for method in [Method::Ista, Method::Fista] {
            let got = solve(&g, &p, &SolverConfig::new(method, 1e-10)).unwrap().x;
            assert!(got.dist_inf(&want) <= 1e-6);
        }
    }
}

#[test]
fn dense_solution_is_a_fixed_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (g, p) = common::random_instance(&mut rng);
    let dp = DenseProblem::from_params(&g, &p).unwrap();
    let x = dense_solve(&dp, 1e-14, 1_000_000).unwrap();
    assert!((dp.step(&x) - &x).amax() <= 1e-14);
    let (lo, hi) = dp.eigen_bounds();
    assert!(lo >= p.alpha - 1e-9 && hi <= 1.0 + 1e-9);
}

#[test]
fn closed_forms_match_dense_minimizer() {
    for family in [AnalyticFamily::Star, AnalyticFamily::Path] {
        for &(alpha, m) in &[(0.5, 4), (0.2, 6), (0.9, 3)] {
            let inst = AnalyticInstance::new(family, m).unwrap();
            let (lo, hi) = inst.validity_interval(alpha);
            for j in 0..4 {
                let rho = lo + j as f64 * (hi - lo) / 4.0;
                let p = inst.params(alpha, rho).unwrap();
                let x = SparseVector::from_dense(dense_solve_default(&inst.graph, &p).unwrap().as_slice());
                let closed = inst.solution(alpha, rho).unwrap();
                assert_eq!(x.support(), closed.support(), "{family:?} m={m} rho={rho}");
                assert!(x.dist_inf(&closed) <= 1e-9);
                let report = slacks(&inst.graph, &p, &x).unwrap();
                for (node, gamma) in inst.slacks(alpha, rho).unwrap() {
                    assert!((report.slack(node).unwrap() - gamma).abs() <= 1e-9);
                }
            }
        }
    }
}

#[test]
fn breakpoint_scans_agree_with_formulas() {
    let grid: Vec<f64> = (1..=400).map(|i| i as f64 * 5e-4).collect();
    let star = star_instance(4).unwrap();
    let found = breakpoint_scan(&star, 0.5, &grid).unwrap().unwrap();
    assert!((found - 0.0625).abs() <= 5e-4);
    let path = path_instance(6).unwrap();
    let found = breakpoint_scan(&path, 0.5, &grid).unwrap().unwrap();
    assert!((found - 1.0 / 7.0).abs() <= 5e-4);
    assert!(DenseProblem::new(&path.graph, 0.5, 0.1, 0, 3).is_err());
    assert!(DenseProblem::new(&path.graph, 0.5, 0.1, 0, DEFAULT_CAP_NODES).is_ok());
}
