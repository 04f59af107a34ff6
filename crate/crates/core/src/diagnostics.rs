//! KKT slacks, the two-tier split, the no-percolation condition and audits of
//! recorded solver traces.

use crate::error::{Error, Result};
use crate::graph::{Adjacency, Graph, NodeSet};
use crate::objective::{forward_map, gradient, ProblemParams, SparseVector};
use crate::solver::{solve, Method, SolveTrace, SolverConfig};

/// Largest KKT violation (∞-norm on the gradient) tolerated before a vector
/// is refused as a minimizer.
pub const KKT_TOLERANCE: f64 = 1e-6;

/// Tolerance used by [`two_tier_split`] for its two reference solves.
pub const SPLIT_EPSILON: f64 = 1e-11;

/// Degree-normalized slacks `γ_i = (λ_i − |∇_i f(x⋆)|)/√d_i` with
/// `λ_i = c·α·ρ·√d_i`, for coordinates inactive at `x⋆`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlackReport {
    pub n: usize,
    pub support: NodeSet,
    /// Inactive nodes where the gradient is nonzero, ascending.
    pub entries: Vec<(usize, f64)>,
    /// Slack of every other inactive node: `c·α·ρ`.
    pub default_slack: f64,
    pub min_slack: Option<f64>,
    pub min_node: Option<usize>,
    pub kkt_violation: f64,
}

impl SlackReport {
    /// `None` for active coordinates.
    pub fn slack(&self, node: usize) -> Option<f64> {
        if self.support.contains(node) {
            return None;
        }
        Some(match self.entries.binary_search_by_key(&node, |e| e.0) {
            Ok(pos) => self.entries[pos].1,
            Err(_) => self.default_slack,
        })
    }

    /// Inactive nodes with slack strictly below `threshold`.
    pub fn below(&self, threshold: f64) -> NodeSet {
        if self.default_slack < threshold {
            return self.inactive_where(|s| s < threshold);
        }
        self.entries
            .iter()
            .filter(|e| e.1 < threshold)
            .map(|e| e.0)
            .collect()
    }

    /// Inactive nodes with slack at least `threshold`.
    pub fn at_least(&self, threshold: f64) -> NodeSet {
        self.inactive_where(|s| s >= threshold)
    }

    fn inactive_where(&self, keep: impl Fn(f64) -> bool) -> NodeSet {
        (0..self.n)
            .filter(|&i| self.slack(i).is_some_and(&keep))
            .collect()
    }
}

pub fn slacks<A: Adjacency + ?Sized>(g: &A, p: &ProblemParams, x_star: &SparseVector) -> Result<SlackReport> {
    p.check_seed(g.node_count())?;
    let grad = gradient(g, p, x_star);
    let scale = p.threshold_scale();
    let mut violation: f64 = 0.0;
    let mut entries = Vec::new();
    for (i, gi) in grad.iter() {
        let lambda = scale * g.sqrt_degree(i);
        let xi = x_star.get(i);
        if xi != 0.0 {
            violation = violation.max((gi + lambda.copysign(xi)).abs());
        } else {
            violation = violation.max(gi).max(-lambda - gi);
            entries.push((i, (lambda - gi.abs()) / g.sqrt_degree(i)));
        }
    }
    // active coordinates with zero gradient violate stationarity by λ_i
    for (i, _) in x_star.iter() {
        if grad.get(i) == 0.0 {
            violation = violation.max(scale * g.sqrt_degree(i));
        }
    }
    if violation > KKT_TOLERANCE {
        return Err(Error::NotAMinimizer {
            violation,
            tolerance: KKT_TOLERANCE,
        });
    }
    let support = x_star.support();
    let n = g.node_count();
    let inactive = n - support.len();
    let mut min: Option<(usize, f64)> = None;
    for &(i, s) in &entries {
        if min.is_none_or(|(_, m)| s < m) {
            min = Some((i, s));
        }
    }
    if inactive > entries.len() {
        let untouched = (0..n).find(|&i| !support.contains(i) && grad.get(i) == 0.0);
        if let Some(i) = untouched {
            if min.is_none_or(|(_, m)| scale < m) {
                min = Some((i, scale));
            }
        }
    }
    Ok(SlackReport {
        n,
        support,
        entries,
        default_slack: scale,
        min_slack: min.map(|m| m.1),
        min_node: min.map(|m| m.0),
        kkt_violation: violation,
    })
}

/// Solutions of the plain (`c = 1`) and over-regularized (`c = 2`) problems
/// and the split of the latter's inactive set at slack `ρα`.
#[derive(Debug, Clone)]
pub struct TwoTierSplit {
    pub x_a: SparseVector,
    pub x_b: SparseVector,
    pub s_a: NodeSet,
    pub s_b: NodeSet,
    pub slacks_b: SlackReport,
    /// Inactive for (B) with `γ^{(B)}_i < ρα`.
    pub small: NodeSet,
    /// Inactive for (B) with `γ^{(B)}_i ≥ ρα`.
    pub large: NodeSet,
    /// `small ⊆ S_A`.
    pub witness: bool,
}

fn reference_solve(g: &Graph, p: &ProblemParams) -> Result<SparseVector> {
    let sol = solve(g, p, &SolverConfig::new(Method::Fista, SPLIT_EPSILON))?;
    if !sol.trace.converged {
        return Err(Error::invalid(format!(
            "reference solve did not reach {SPLIT_EPSILON:e} within {} iterations",
            sol.trace.iterations
        )));
    }
    Ok(sol.x)
}

/// `p.reg_factor` is ignored: (A) uses `c = 1` and (B) `c = 2` at `p.rho`.
pub fn two_tier_split(g: &Graph, p: &ProblemParams) -> Result<TwoTierSplit> {
    let pa = p.over_regularized(1.0);
    let pb = p.over_regularized(2.0);
    let x_a = reference_solve(g, &pa)?;
    let x_b = reference_solve(g, &pb)?;
    let slacks_b = slacks(g, &pb, &x_b)?;
    let threshold = p.rho * p.alpha;
    let small = slacks_b.below(threshold);
    let large = slacks_b.at_least(threshold);
    let s_a = x_a.support();
    let witness = small.is_subset(&s_a);
    Ok(TwoTierSplit {
        s_b: x_b.support(),
        x_a,
        x_b,
        s_a,
        slacks_b,
        small,
        large,
        witness,
    })
}

/// `max(0, max_i (lhs_i − rhs_i))`: zero iff `lhs ≤ rhs` coordinatewise.
pub fn max_excess(lhs: &SparseVector, rhs: &SparseVector) -> f64 {
    lhs.sub(rhs).iter().fold(0.0, |m, (_, v)| m.max(v))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PercolationReport {
    pub holds: bool,
    /// Exterior node with the largest LHS/RHS ratio.
    pub worst_node: Option<usize>,
    pub worst_ratio: f64,
    pub boundary: NodeSet,
    pub exterior_size: usize,
    pub min_boundary_degree: Option<usize>,
}

/// Evaluates, for every `i ∈ Ext(S)`,
///
/// ```text
/// |N(i) ∩ ∂S| / d_i  ≤  (αρ / (2(1−α)))² · d_i · min_{j∈∂S} d_j
/// ```
///
/// with `ρ = p.rho`: the guarantee it gives is for FISTA on the problem
/// regularized at `2ρ`. At `α = 1` or with an empty boundary the condition
/// holds vacuously.
pub fn check_no_percolation(g: &Graph, p: &ProblemParams, s: &NodeSet) -> Result<PercolationReport> {
    let boundary = g.vertex_boundary(s)?;
    let exterior = g.exterior(s)?;
    let min_boundary_degree = boundary.iter().map(|j| g.degree(j)).min();
    let mut report = PercolationReport {
        holds: true,
        worst_node: None,
        worst_ratio: 0.0,
        exterior_size: exterior.len(),
        min_boundary_degree,
        boundary,
    };
    let Some(d_min) = min_boundary_degree else {
        return Ok(report);
    };
    if p.alpha >= 1.0 {
        return Ok(report);
    }
    let k = p.alpha * p.rho / (2.0 * (1.0 - p.alpha));
    let k2 = k * k;
    let mut in_boundary = vec![false; g.n()];
    for j in report.boundary.iter() {
        in_boundary[j] = true;
    }
    for i in exterior.iter() {
        let d = g.degree(i) as f64;
        let exposed = g.neighbors(i).iter().filter(|&&j| in_boundary[j as usize]).count();
        let lhs = exposed as f64 / d;
        let rhs = k2 * d * d_min as f64;
        let ratio = lhs / rhs;
        if report.worst_node.is_none() || ratio > report.worst_ratio {
            report.worst_ratio = ratio;
            report.worst_node = Some(i);
        }
        if lhs > rhs {
            report.holds = false;
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfinementReport {
    /// `(k, supp(x_{k+1}) \ (S ∪ ∂S))` for every iteration where it is nonempty.
    pub violations: Vec<(usize, NodeSet)>,
    /// `vol(supp(x_{k+1}) \ core)` per iteration.
    pub spurious_volumes: Vec<u64>,
    pub max_spurious_volume: u64,
    pub cumulative_spurious_volume: u64,
    pub confined: bool,
}

/// Checks `supp(x_{k+1}) ⊆ S ∪ ∂S` along a full trace and accumulates the
/// volume of `supp(x_{k+1})` outside `core` (typically `S` or `S_A`).
pub fn verify_confinement(
    g: &Graph,
    region: &NodeSet,
    core: &NodeSet,
    trace: &SolveTrace,
) -> Result<ConfinementReport> {
    trace.require_full()?;
    let allowed = region.union(&g.vertex_boundary(region)?);
    core.check_range(g.n())?;
    let mut violations = Vec::new();
    let mut spurious_volumes = Vec::with_capacity(trace.snapshots.len());
    for (k, snap) in trace.snapshots.iter().enumerate() {
        let supp = snap.x_next.support();
        let outside = supp.difference(&allowed);
        if !outside.is_empty() {
            violations.push((k, outside));
        }
        spurious_volumes.push(g.volume_unchecked(supp.difference(core).iter()));
    }
    Ok(ConfinementReport {
        confined: violations.is_empty(),
        max_spurious_volume: spurious_volumes.iter().copied().max().unwrap_or(0),
        cumulative_spurious_volume: spurious_volumes.iter().sum(),
        spurious_volumes,
        violations,
    })
}

/// `N·vol(core)` and `Σ_k vol(supp(x_{k+1}) \ core)`: the two terms the
/// total work is compared against.
pub fn work_decomposition(g: &Graph, core: &NodeSet, trace: &SolveTrace) -> Result<(u64, u64)> {
    trace.require_full()?;
    let core_term = trace.iterations as u64 * g.volume(core)?;
    let spurious = trace
        .snapshots
        .iter()
        .map(|s| g.volume_unchecked(s.x_next.support().difference(core).iter()))
        .sum();
    Ok((core_term, spurious))
}

/// `(L·R/(αρ))²`: inactive nodes of degree at least this never activate when
/// FISTA runs on the over-regularized problem.
pub fn degree_cutoff(alpha: f64, rho: f64, lipschitz: f64, radius: f64) -> f64 {
    let r = lipschitz * radius / (alpha * rho);
    r * r
}

/// `1600/(αρ)²`, the constant form of [`degree_cutoff`].
pub fn degree_cutoff_constant(alpha: f64, rho: f64) -> f64 {
    1600.0 / (alpha * alpha * rho * rho)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpViolation {
    pub k: usize,
    pub node: usize,
    pub jump: f64,
    pub required: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct JumpAudit {
    /// Number of `(k, i)` spurious activations examined.
    pub activations: usize,
    pub violations: Vec<JumpViolation>,
}

/// For every `i ∈ supp(x_{k+1}) \ supp(x⋆)` checks
/// `|u(y_k)_i − u(x⋆)_i| > η·γ_i·√d_i`.
pub fn jump_audit(
    g: &Graph,
    p: &ProblemParams,
    trace: &SolveTrace,
    x_star: &SparseVector,
    step: f64,
) -> Result<JumpAudit> {
    trace.require_full()?;
    let report = slacks(g, p, x_star)?;
    let u_star = forward_map(g, p, x_star, step);
    let mut audit = JumpAudit::default();
    for (k, snap) in trace.snapshots.iter().enumerate() {
        let spurious: Vec<usize> = snap
            .x_next
            .indices()
            .filter(|&i| !report.support.contains(i))
            .collect();
        if spurious.is_empty() {
            continue;
        }
        let u_y = forward_map(g, p, &snap.y, step);
        for i in spurious {
            audit.activations += 1;
            let jump = (u_y.get(i) - u_star.get(i)).abs();
            let gamma = report.slack(i).expect("inactive");
            let required = step * gamma * g.sqrt_degree(i);
            if !(jump > required) {
                audit.violations.push(JumpViolation {
                    k,
                    node: i,
                    jump,
                    required,
                });
            }
        }
    }
    Ok(audit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_from_edges;

    fn path(n: u64) -> Graph {
        let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        build_from_edges(&edges, None).unwrap().graph
    }

    #[test]
    fn percolation_on_path() {
        // path 0-1-2-3, S = {0}: ∂S = {1}, Ext = {2, 3}.
        // node 2: LHS = 1/2, RHS = k²·2·2, so it holds iff k ≥ 1/(2√2),
        // i.e. ρ ≥ (1−α)/(α√2).
        let g = path(4);
        let s = NodeSet::range(0, 1);
        let alpha = 0.5;
        let rho_star = (1.0 - alpha) / (alpha * 2f64.sqrt());
        let above = ProblemParams::new(alpha, rho_star * 1.01, 0).unwrap();
        let below = ProblemParams::new(alpha, rho_star * 0.99, 0).unwrap();
        let r = check_no_percolation(&g, &above, &s).unwrap();
        assert!(r.holds);
        assert_eq!(r.worst_node, Some(2));
        let r = check_no_percolation(&g, &below, &s).unwrap();
        assert!(!r.holds);
        let k = alpha * rho_star * 0.99 / (2.0 * (1.0 - alpha));
        assert!((r.worst_ratio - 0.5 / (4.0 * k * k)).abs() < 1e-12);
        let tiny = ProblemParams::new(alpha, 1e-4, 0).unwrap();
        assert!(!check_no_percolation(&g, &tiny, &s).unwrap().holds);
    }

    #[test]
    fn percolation_vacuous_cases() {
        let g = path(4);
        let p = ProblemParams::new(0.5, 1e-4, 0).unwrap();
        let r = check_no_percolation(&g, &p, &NodeSet::new()).unwrap();
        assert!(r.holds && r.worst_node.is_none());
        let p1 = ProblemParams::new(1.0, 1e-4, 0).unwrap();
        assert!(check_no_percolation(&g, &p1, &NodeSet::range(0, 1)).unwrap().holds);
    }

    #[test]
    fn degree_cutoffs() {
        assert!((degree_cutoff_constant(0.2, 1e-4) / 4e12 - 1.0).abs() < 1e-12);
        assert!((degree_cutoff(1.0, 1.0, 1.0, 20f64.sqrt()) - 20.0).abs() < 1e-12);
    }

    #[test]
    fn star_slacks() {
        let edges: Vec<_> = (1..=4).map(|l| (0, l)).collect();
        let g = build_from_edges(&edges, None).unwrap().graph;
        let p = ProblemParams::new(0.5, 0.1, 0).unwrap();
        let r = slacks(&g, &p, &SparseVector::unit(0, 0.2)).unwrap();
        for l in 1..=4 {
            assert!((r.slack(l).unwrap() - 0.025).abs() < 1e-15);
        }
        assert_eq!(r.slack(0), None);
        assert!((r.min_slack.unwrap() - 0.025).abs() < 1e-15);
        assert!(matches!(
            slacks(&g, &p, &SparseVector::unit(0, 0.3)),
            Err(Error::NotAMinimizer { .. })
        ));
    }

    #[test]
    fn path_slacks_past_neighbor_are_exact() {
        let g = path(5);
        let p = ProblemParams::new(0.5, 0.2, 0).unwrap();
        let r = slacks(&g, &p, &SparseVector::unit(0, 8.0 / 15.0)).unwrap();
        assert!((r.slack(1).unwrap() - 1.0 / 30.0).abs() < 1e-15);
        for i in 2..5 {
            assert_eq!(r.slack(i).unwrap(), 0.5 * 0.2);
        }
    }

    #[test]
    fn excess() {
        let a = SparseVector::from_pairs(vec![(0, 1.0), (1, 0.5)]).unwrap();
        let b = SparseVector::from_pairs(vec![(0, 0.9)]).unwrap();
        assert!(max_excess(&b, &a) <= 0.0);
        assert!((max_excess(&a, &b) - 0.5).abs() < 1e-15);
        assert_eq!(max_excess(&a, &a), 0.0);
    }
}
