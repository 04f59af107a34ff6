//! The ℓ1-regularized personalized PageRank objective
//!
//! ```text
//! F(x) = ½⟨x, Qx⟩ − α⟨D^{-1/2} e_v, x⟩ + c·α·ρ·‖D^{1/2} x‖₁
//! Q    = αI + ((1−α)/2)(I − D^{-1/2} A D^{-1/2})
//! ```
//!
//! All maps here read adjacency only for nodes in `supp(x)`, and degrees only
//! for `supp(x) ∪ N(supp(x)) ∪ {v}`.

use crate::error::{Error, Result};
use crate::graph::Adjacency;
pub use crate::sparse::SparseVector;

/// Teleportation `alpha`, regularization `rho`, seed node and the factor `c`
/// multiplying the ℓ1 term (`c = 1` is the plain problem, `c = 2` the
/// over-regularized one).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemParams {
    pub alpha: f64,
    pub rho: f64,
    pub seed: usize,
    pub reg_factor: f64,
}

impl ProblemParams {
    pub fn new(alpha: f64, rho: f64, seed: usize) -> Result<Self> {
        Self::with_reg_factor(alpha, rho, seed, 1.0)
    }

    pub fn with_reg_factor(alpha: f64, rho: f64, seed: usize, reg_factor: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::invalid(format!("rho must be positive, got {rho}")));
        }
        if !(reg_factor > 0.0 && reg_factor.is_finite()) {
            return Err(Error::invalid(format!(
                "reg_factor must be positive, got {reg_factor}"
            )));
        }
        Ok(ProblemParams {
            alpha,
            rho,
            seed,
            reg_factor,
        })
    }

    /// Same problem with the ℓ1 weight multiplied by `c`.
    pub fn over_regularized(&self, c: f64) -> Self {
        ProblemParams {
            reg_factor: c,
            ..*self
        }
    }

    /// Per-unit-√degree threshold `c·α·ρ`.
    pub fn threshold_scale(&self) -> f64 {
        self.reg_factor * self.alpha * self.rho
    }

    pub(crate) fn check_seed(&self, n: usize) -> Result<()> {
        if self.seed >= n {
            return Err(Error::NodeOutOfRange { node: self.seed, n });
        }
        Ok(())
    }
}

/// `∇f(x) = Qx − α D^{-1/2} e_v`.
pub fn gradient<A: Adjacency + ?Sized>(g: &A, p: &ProblemParams, x: &SparseVector) -> SparseVector {
    let diag = 0.5 * (1.0 + p.alpha);
    let off = 0.5 * (1.0 - p.alpha);

    // neighbor sums Σ_{j∼i} x_j/√d_j, accumulated in ascending j
    let mut contrib: Vec<(usize, f64)> = Vec::new();
    for (j, xj) in x.iter() {
        let w = xj / g.sqrt_degree(j);
        contrib.extend(g.neighbors(j).iter().map(|&i| (i as usize, w)));
    }
    contrib.sort_by_key(|&(i, _)| i);

    let mut out = Vec::with_capacity(contrib.len() + x.len() + 1);
    let mut xs = x.entries().iter().peekable();
    let mut cs = contrib.into_iter().peekable();
    let mut seed_done = false;
    loop {
        let next_x = xs.peek().map_or(usize::MAX, |e| e.0);
        let next_c = cs.peek().map_or(usize::MAX, |e| e.0);
        let next_s = if seed_done { usize::MAX } else { p.seed };
        let i = next_x.min(next_c).min(next_s);
        if i == usize::MAX {
            break;
        }
        let xi = if next_x == i { xs.next().unwrap().1 } else { 0.0 };
        let mut nsum = 0.0;
        while cs.peek().is_some_and(|e| e.0 == i) {
            nsum += cs.next().unwrap().1;
        }
        let sqrt_di = g.sqrt_degree(i);
        let mut val = diag * xi;
        if nsum != 0.0 {
            val -= off * nsum / sqrt_di;
        }
        if i == p.seed {
            val -= p.alpha / sqrt_di;
            seed_done = true;
        }
        if val != 0.0 {
            out.push((i, val));
        }
    }
    SparseVector::from_sorted_unchecked(out)
}

/// Weighted soft-thresholding with per-coordinate level `η·c·α·ρ·√d_i`.
/// A coordinate exactly at its level maps to zero.
pub fn prox<A: Adjacency + ?Sized>(
    g: &A,
    p: &ProblemParams,
    w: &SparseVector,
    step: f64,
) -> SparseVector {
    let scale = step * p.threshold_scale();
    let out = w
        .iter()
        .filter_map(|(i, wi)| {
            let shrunk = wi.abs() - scale * g.sqrt_degree(i);
            (shrunk > 0.0).then(|| (i, shrunk.copysign(wi)))
        })
        .collect();
    SparseVector::from_sorted_unchecked(out)
}

/// `u(x) = x − η∇f(x)`.
pub fn forward_map<A: Adjacency + ?Sized>(
    g: &A,
    p: &ProblemParams,
    x: &SparseVector,
    step: f64,
) -> SparseVector {
    x.lincomb(1.0, &gradient(g, p, x), -step)
}

/// One proximal-gradient step `T(x) = prox(u(x))`.
pub fn prox_grad_step<A: Adjacency + ?Sized>(
    g: &A,
    p: &ProblemParams,
    x: &SparseVector,
    step: f64,
) -> SparseVector {
    prox(g, p, &forward_map(g, p, x, step), step)
}

/// Smooth part `f(x)`.
pub fn smooth_value<A: Adjacency + ?Sized>(g: &A, p: &ProblemParams, x: &SparseVector) -> f64 {
    let diag = 0.5 * (1.0 + p.alpha);
    let off = 0.5 * (1.0 - p.alpha);
    let mut quad = 0.0;
    for (i, xi) in x.iter() {
        let mut nsum = 0.0;
        for &j in g.neighbors(i) {
            let xj = x.get(j as usize);
            if xj != 0.0 {
                nsum += xj / g.sqrt_degree(j as usize);
            }
        }
        quad += xi * (diag * xi - off * nsum / g.sqrt_degree(i));
    }
    0.5 * quad - p.alpha * x.get(p.seed) / g.sqrt_degree(p.seed)
}

/// `F(x) = f(x) + c·α·ρ·Σ √d_i |x_i|`.
pub fn objective_value<A: Adjacency + ?Sized>(g: &A, p: &ProblemParams, x: &SparseVector) -> f64 {
    let l1: f64 = x.iter().map(|(i, v)| g.sqrt_degree(i) * v.abs()).sum();
    smooth_value(g, p, x) + p.threshold_scale() * l1
}

/// Fixed-point residual `‖x − T(x)‖_∞`.
pub fn kkt_residual<A: Adjacency + ?Sized>(
    g: &A,
    p: &ProblemParams,
    x: &SparseVector,
    step: f64,
) -> f64 {
    x.dist_inf(&prox_grad_step(g, p, x, step))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_from_edges;
    use crate::graph::Graph;

    fn star(m: u64) -> Graph {
        let edges: Vec<_> = (1..=m).map(|l| (0, l)).collect();
        build_from_edges(&edges, None).unwrap().graph
    }

    #[test]
    fn gradient_at_zero_is_seed_only() {
        let g = star(4);
        let p = ProblemParams::new(0.5, 0.1, 0).unwrap();
        let grad = gradient(&g, &p, &SparseVector::zeros());
        assert_eq!(grad.entries(), &[(0, -0.25)]);
    }

    #[test]
    fn star_active_kkt_identity() {
        let g = star(4);
        let p = ProblemParams::new(0.5, 0.1, 0).unwrap();
        let grad = gradient(&g, &p, &SparseVector::unit(0, 0.2));
        // 0.75·0.2 − 0.5/2 = −0.1 = −αρ√m
        assert!((grad.get(0) + 0.1).abs() < 1e-15);
        // leaves: −(1−α)/2 · 0.2/√4
        for l in 1..=4 {
            assert!((grad.get(l) + 0.025).abs() < 1e-15);
        }
    }

    #[test]
    fn soft_threshold_arithmetic() {
        // unit degree so τ = η·c·α·ρ = 0.2
        let g = build_from_edges(&[(0, 1)], None).unwrap().graph;
        let p = ProblemParams::new(0.5, 0.4, 0).unwrap();
        let w = SparseVector::from_pairs(vec![(0, 0.5), (1, -0.15)]).unwrap();
        let out = prox(&g, &p, &w, 1.0);
        assert_eq!(out.len(), 1);
        assert!((out.get(0) - 0.3).abs() < 1e-15);

        // tie at the threshold goes to zero
        let tie = SparseVector::unit(0, 0.2);
        assert!(prox(&g, &p, &tie, 1.0).is_empty());
    }

    #[test]
    fn forward_map_at_zero() {
        let g = star(4);
        let p = ProblemParams::new(0.5, 0.1, 0).unwrap();
        let u = forward_map(&g, &p, &SparseVector::zeros(), 1.0);
        assert_eq!(u.entries(), &[(0, 0.25)]);
    }

    #[test]
    fn objective_at_zero_is_zero() {
        let g = star(4);
        let p = ProblemParams::new(0.5, 0.1, 0).unwrap();
        assert_eq!(objective_value(&g, &p, &SparseVector::zeros()), 0.0);
    }

    #[test]
    fn residual_from_zero_on_star() {
        // r(0) = max{α/√m − αρ√m, 0}
        let g = star(4);
        let p = ProblemParams::new(0.5, 0.1, 0).unwrap();
        let r = kkt_residual(&g, &p, &SparseVector::zeros(), 1.0);
        assert!((r - (0.25 - 0.1)).abs() < 1e-15);
        let p_big = ProblemParams::new(0.5, 0.3, 0).unwrap();
        assert_eq!(kkt_residual(&g, &p_big, &SparseVector::zeros(), 1.0), 0.0);
    }

    #[test]
    fn star_minimizer_is_fixed_point() {
        let g = star(4);
        let p = ProblemParams::new(0.5, 0.1, 0).unwrap();
        let x = SparseVector::unit(0, 0.2);
        assert!(kkt_residual(&g, &p, &x, 1.0) <= 1e-12);
        let t = prox_grad_step(&g, &p, &x, 1.0);
        assert_eq!(t.support(), x.support());
    }

    #[test]
    fn params_validation() {
        assert!(ProblemParams::new(0.0, 0.1, 0).is_err());
        assert!(ProblemParams::new(1.1, 0.1, 0).is_err());
        assert!(ProblemParams::new(0.5, 0.0, 0).is_err());
        assert!(ProblemParams::new(1.0, 0.1, 0).is_ok());
    }
}
