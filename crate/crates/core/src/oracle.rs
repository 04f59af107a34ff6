//! Dense reference implementations for cross-checking the local solvers.
//! Only built with the `oracle` feature.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::graph::{Adjacency, Graph};
use crate::objective::ProblemParams;
use crate::synth::AnalyticInstance;

pub const DEFAULT_CAP_NODES: usize = 2000;
pub const DEFAULT_TOL: f64 = 1e-14;
pub const DEFAULT_MAX_ITER: usize = 1_000_000;

/// `Q`, `b = α D^{-1/2} e_v` and thresholds `τ_i = c·α·ρ·√d_i`, all dense.
#[derive(Debug, Clone)]
pub struct DenseProblem {
    pub q: DMatrix<f64>,
    pub b: DVector<f64>,
    pub tau: DVector<f64>,
    pub alpha: f64,
}

impl DenseProblem {
    pub fn from_params(g: &Graph, p: &ProblemParams) -> Result<Self> {
        Self::new(g, p.alpha, p.rho * p.reg_factor, p.seed, DEFAULT_CAP_NODES)
    }

    /// `rho` here already includes the factor `c`; `rho = 0` is allowed.
    pub fn new(g: &Graph, alpha: f64, rho: f64, seed: usize, cap: usize) -> Result<Self> {
        let n = g.n();
        if n > cap {
            return Err(Error::invalid(format!("dense oracle limited to {cap} nodes, got {n}")));
        }
        if seed >= n {
            return Err(Error::NodeOutOfRange { node: seed, n });
        }
        if !(alpha > 0.0 && alpha <= 1.0) || !(rho >= 0.0) {
            return Err(Error::invalid(format!("bad dense parameters alpha={alpha} rho={rho}")));
        }
        let s: Vec<f64> = (0..n).map(|i| g.sqrt_degree(i)).collect();
        let off = 0.5 * (1.0 - alpha);
        let mut q = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            q[(i, i)] = alpha + off;
            for &j in g.neighbors(i) {
                let j = j as usize;
                q[(i, j)] = -off / (s[i] * s[j]);
            }
        }
        let mut b = DVector::<f64>::zeros(n);
        b[seed] = alpha / s[seed];
        let tau = DVector::from_iterator(n, s.iter().map(|si| alpha * rho * si));
        Ok(DenseProblem { q, b, tau, alpha })
    }

    pub fn n(&self) -> usize {
        self.b.len()
    }

    pub fn is_symmetric(&self) -> bool {
        self.q == self.q.transpose()
    }

    /// Smallest and largest eigenvalue of `Q`.
    pub fn eigen_bounds(&self) -> (f64, f64) {
        let eig = SymmetricEigen::new(self.q.clone());
        let lo = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.q * x - &self.b
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        let l1: f64 = x.iter().zip(self.tau.iter()).map(|(xi, t)| t * xi.abs()).sum();
        0.5 * x.dot(&(&self.q * x)) - self.b.dot(x) + l1
    }

    /// One unit-step proximal-gradient step.
    pub fn step(&self, x: &DVector<f64>) -> DVector<f64> {
        let u = x - self.gradient(x);
        DVector::from_iterator(
            self.n(),
            u.iter().zip(self.tau.iter()).map(|(&ui, &t)| {
                let shrunk = ui.abs() - t;
                if shrunk > 0.0 {
                    shrunk.copysign(ui)
                } else {
                    0.0
                }
            }),
        )
    }
}

/// Plain ISTA from zero until `‖x − T(x)‖_∞ ≤ tol`.
pub fn dense_solve(dp: &DenseProblem, tol: f64, max_iter: usize) -> Result<DVector<f64>> {
    let mut x = DVector::<f64>::zeros(dp.n());
    for _ in 0..max_iter {
        let next = dp.step(&x);
        let r = (&next - &x).amax();
        x = next;
        if r <= tol {
            return Ok(x);
        }
    }
    Err(Error::invalid(format!("dense solve did not reach {tol:e} in {max_iter} iterations")))
}

pub fn dense_solve_default(g: &Graph, p: &ProblemParams) -> Result<DVector<f64>> {
    dense_solve(&DenseProblem::from_params(g, p)?, DEFAULT_TOL, DEFAULT_MAX_ITER)
}

/// Smallest grid `ρ` at which the dense minimizer is supported exactly on the
/// seed. `rho_grid` must be ascending.
pub fn breakpoint_scan(inst: &AnalyticInstance, alpha: f64, rho_grid: &[f64]) -> Result<Option<f64>> {
    debug_assert!(rho_grid.windows(2).all(|w| w[0] < w[1]));
    let seed = inst.seed;
    for &rho in rho_grid {
        let dp = DenseProblem::new(&inst.graph, alpha, rho, seed, DEFAULT_CAP_NODES)?;
        let x = dense_solve(&dp, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
        let only_seed = x.iter().enumerate().all(|(i, &v)| (v != 0.0) == (i == seed));
        if only_seed {
            return Ok(Some(rho));
        }
    }
    Ok(None)
}
