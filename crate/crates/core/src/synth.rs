//! Core–boundary–exterior graphs and the analytic star/path instances.
//!
//! Nodes are laid out in blocks: core `0..|S|`, boundary `|S|..|S|+|B|`,
//! exterior after that. The seed is core node 0.
//!
//! Edge rules for [`generate`]:
//! - core: a clique, or for `core_density < 1` a random spanning tree plus
//!   uniformly chosen extra core pairs up to `round(density·C(|S|,2))` edges;
//! - core node `u` is joined to boundary nodes `b_{(u·c_bnd + j) mod |B|}`
//!   for `j < c_bnd`;
//! - the boundary is a circulant with offsets `±1..±k/2`, where `k` is
//!   `deg_b` rounded down to even, capped at `|B|−1`, and rounded down to
//!   even again;
//! - the exterior is a circulant of degree `deg_ext` (an odd degree adds the
//!   diametric offset and needs an even `|Ext|`);
//! - exterior node `t` is joined to boundary node `b_{t mod |B|}`.
//!
//! The sparse core uses `ChaCha8Rng::seed_from_u64(rng_seed)`. The spanning
//! tree is a random recursive tree over a shuffled node order: the `i`-th node
//! in that order attaches to a uniformly chosen earlier one.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::check_no_percolation;
use crate::error::{Error, Result};
use crate::graph::{build_from_edges, Graph, NodeSet};
use crate::objective::{ProblemParams, SparseVector};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub core_size: usize,
    pub boundary_size: usize,
    pub exterior_size: usize,
    pub c_bnd: usize,
    pub deg_b: usize,
    pub deg_ext: usize,
    pub core_density: f64,
    pub rng_seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            core_size: 60,
            boundary_size: 600,
            exterior_size: 1000,
            c_bnd: 20,
            deg_b: 82,
            deg_ext: 998,
            core_density: 1.0,
            rng_seed: 0,
        }
    }
}

impl SynthParams {
    pub fn node_count(&self) -> usize {
        self.core_size + self.boundary_size + self.exterior_size
    }

    /// The circulant degree actually used inside the boundary.
    pub fn effective_boundary_degree(&self) -> usize {
        let b = self.boundary_size;
        if b == 0 {
            return 0;
        }
        let k = self.deg_b & !1;
        k.min(b - 1) & !1
    }

    fn core_edge_target(&self) -> usize {
        let s = self.core_size;
        let pairs = s * s.saturating_sub(1) / 2;
        ((self.core_density * pairs as f64).round() as usize).clamp(s.saturating_sub(1), pairs)
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.core_size;
        if s == 0 {
            return Err(Error::invalid("core_size must be positive"));
        }
        if self.boundary_size == 0 {
            if self.c_bnd > 0 {
                return Err(Error::invalid("c_bnd > 0 requires a nonempty boundary"));
            }
            if self.exterior_size > 0 {
                return Err(Error::invalid(
                    "exterior nodes need a boundary neighbor; boundary_size must be positive",
                ));
            }
        } else if self.c_bnd > self.boundary_size {
            return Err(Error::invalid(format!(
                "c_bnd ({}) must not exceed boundary_size ({})",
                self.c_bnd, self.boundary_size
            )));
        }
        if self.exterior_size > 0 {
            if self.deg_ext >= self.exterior_size {
                return Err(Error::invalid(format!(
                    "deg_ext ({}) must be smaller than exterior_size ({})",
                    self.deg_ext, self.exterior_size
                )));
            }
            if self.deg_ext % 2 == 1 && self.exterior_size % 2 == 1 {
                return Err(Error::invalid(
                    "odd deg_ext needs an even exterior_size for a circulant",
                ));
            }
        }
        if !(self.core_density > 0.0 && self.core_density <= 1.0) {
            return Err(Error::invalid(format!(
                "core_density must lie in (0, 1], got {}",
                self.core_density
            )));
        }
        let pairs = (s * (s - 1) / 2) as f64;
        if self.core_density * pairs < (s - 1) as f64 {
            return Err(Error::invalid(format!(
                "core_density {} leaves fewer than |S|-1 = {} core edges",
                self.core_density,
                s - 1
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Core,
    Boundary,
    Exterior,
}

impl Region {
    pub fn name(self) -> &'static str {
        match self {
            Region::Core => "core",
            Region::Boundary => "boundary",
            Region::Exterior => "exterior",
        }
    }
}

impl std::str::FromStr for Region {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "core" => Ok(Region::Core),
            "boundary" => Ok(Region::Boundary),
            "exterior" => Ok(Region::Exterior),
            other => Err(Error::invalid(format!("unknown region {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionPartition {
    pub core: NodeSet,
    pub boundary: NodeSet,
    pub exterior: NodeSet,
}

impl RegionPartition {
    fn blocks(core: usize, boundary: usize, exterior: usize) -> Self {
        RegionPartition {
            core: NodeSet::range(0, core),
            boundary: NodeSet::range(core, core + boundary),
            exterior: NodeSet::range(core + boundary, core + boundary + exterior),
        }
    }

    pub fn seed(&self) -> usize {
        self.core.as_slice()[0]
    }

    pub fn region_of(&self, node: usize) -> Option<Region> {
        if self.core.contains(node) {
            Some(Region::Core)
        } else if self.boundary.contains(node) {
            Some(Region::Boundary)
        } else if self.exterior.contains(node) {
            Some(Region::Exterior)
        } else {
            None
        }
    }

    pub fn node_count(&self) -> usize {
        self.core.len() + self.boundary.len() + self.exterior.len()
    }
}

/// Stable seed for sweep point `index` derived from `base` (SplitMix64 of the
/// pair).
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x632B_E59B_D9B4_E019);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn circulant(offset: usize, size: usize, degree: usize, edges: &mut Vec<(usize, usize)>) {
    for i in 0..size {
        for d in 1..=degree / 2 {
            edges.push((offset + i, offset + (i + d) % size));
        }
    }
    if degree % 2 == 1 {
        for i in 0..size / 2 {
            edges.push((offset + i, offset + i + size / 2));
        }
    }
}

fn core_edges(params: &SynthParams, edges: &mut Vec<(usize, usize)>) {
    let s = params.core_size;
    if params.core_density >= 1.0 {
        for u in 0..s {
            for v in u + 1..s {
                edges.push((u, v));
            }
        }
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    let mut order: Vec<usize> = (0..s).collect();
    order.shuffle(&mut rng);
    let mut present = vec![false; s * s];
    for i in 1..s {
        let parent = order[rng.gen_range(0..i)];
        edges.push((order[i], parent));
        present[order[i].min(parent) * s + order[i].max(parent)] = true;
    }
    let mut rest: Vec<(usize, usize)> = (0..s)
        .flat_map(|u| (u + 1..s).map(move |v| (u, v)))
        .filter(|&(u, v)| !present[u * s + v])
        .collect();
    rest.shuffle(&mut rng);
    let extra = params.core_edge_target() - (s - 1);
    edges.extend(rest.into_iter().take(extra));
}

fn core_boundary_edges(params: &SynthParams, edges: &mut Vec<(usize, usize)>) {
    let (s, b) = (params.core_size, params.boundary_size);
    for u in 0..s {
        for j in 0..params.c_bnd {
            edges.push((u, s + (u * params.c_bnd + j) % b));
        }
    }
    circulant(s, b, params.effective_boundary_degree(), edges);
}

fn finish(n: usize, edges: &[(usize, usize)]) -> Result<Graph> {
    Graph::from_edges_exact(n, edges).map_err(|e| match e {
        Error::IsolatedNode(i) => Error::invalid(format!(
            "parameters leave node {i} without neighbors"
        )),
        other => other,
    })
}

/// Builds the core–boundary–exterior graph. Deterministic for fixed params.
pub fn generate(params: &SynthParams) -> Result<(Graph, RegionPartition)> {
    params.validate()?;
    let (s, b, e) = (params.core_size, params.boundary_size, params.exterior_size);
    let mut edges = Vec::new();
    core_edges(params, &mut edges);
    core_boundary_edges(params, &mut edges);
    circulant(s + b, e, params.deg_ext, &mut edges);
    for t in 0..e {
        edges.push((s + b + t, s + t % b));
    }
    let graph = finish(s + b + e, &edges)?;
    Ok((graph, RegionPartition::blocks(s, b, e)))
}

/// Parameters of the α-sweep family: exterior is a clique and only its first
/// `m_ext_edges` nodes get a boundary neighbor.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSweepParams {
    /// Core, boundary and fan-out settings; `exterior_size` and `deg_ext`
    /// are ignored.
    pub base: SynthParams,
    pub m_ext_edges: usize,
    pub alpha_min: f64,
    pub rho: f64,
    pub max_exterior: usize,
}

fn alpha_sweep_graph(p: &AlphaSweepParams, exterior: usize) -> Result<(Graph, RegionPartition)> {
    let base = &p.base;
    let (s, b) = (base.core_size, base.boundary_size);
    let mut edges = Vec::new();
    core_edges(base, &mut edges);
    core_boundary_edges(base, &mut edges);
    // a circulant of degree |Ext|-1 is the complete graph
    circulant(s + b, exterior, exterior - 1, &mut edges);
    for t in 0..p.m_ext_edges {
        edges.push((s + b + t, s + t % b));
    }
    let graph = finish(s + b + exterior, &edges)?;
    Ok((graph, RegionPartition::blocks(s, b, exterior)))
}

/// Smallest exterior clique for which the no-percolation inequality holds at
/// `alpha_min` with the core as `S`. Searches `max(m, 2)..=max_exterior`.
pub fn generate_alpha_sweep_instance(p: &AlphaSweepParams) -> Result<(Graph, RegionPartition)> {
    if p.base.boundary_size == 0 {
        return Err(Error::invalid("alpha-sweep family needs a nonempty boundary"));
    }
    SynthParams {
        exterior_size: 0,
        deg_ext: 0,
        ..p.base.clone()
    }
    .validate()?;
    let params = ProblemParams::new(p.alpha_min, p.rho, 0)?;
    let lower = p.m_ext_edges.max(2);
    if lower > p.max_exterior {
        return Err(Error::invalid(format!(
            "m_ext_edges = {} exceeds max_exterior = {}",
            p.m_ext_edges, p.max_exterior
        )));
    }
    let holds = |ext: usize| -> Result<Option<(Graph, RegionPartition)>> {
        let (g, part) = alpha_sweep_graph(p, ext)?;
        let report = check_no_percolation(&g, &params, &part.core)?;
        Ok(report.holds.then_some((g, part)))
    };

    if let Some(found) = holds(lower)? {
        return Ok(found);
    }
    // feasibility is monotone in |Ext|: exposed exterior degrees grow, the
    // boundary degrees do not change
    let mut hi = lower;
    let mut lo;
    let mut best = loop {
        if hi == p.max_exterior {
            return Err(Error::invalid(format!(
                "no exterior size up to {} satisfies no-percolation at alpha = {}",
                p.max_exterior, p.alpha_min
            )));
        }
        lo = hi;
        hi = (hi * 2).min(p.max_exterior);
        if let Some(found) = holds(hi)? {
            break found;
        }
    };
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        match holds(mid)? {
            Some(found) => {
                best = found;
                hi = mid;
            }
            None => lo = mid,
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalyticFamily {
    Star,
    Path,
}

impl std::str::FromStr for AnalyticFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "star" => Ok(AnalyticFamily::Star),
            "path" => Ok(AnalyticFamily::Path),
            other => Err(Error::invalid(format!("unknown analytic family {other:?}"))),
        }
    }
}

/// Star or path graph whose minimizer and KKT slacks are known in closed form
/// on a breakpoint interval `[ρ₀, ρ_max)`.
///
/// Star: center 0 with leaves `1..=m`, seed at the center.
/// Path: nodes `0..=m` in a line, seed at endpoint 0.
#[derive(Debug, Clone)]
pub struct AnalyticInstance {
    pub family: AnalyticFamily,
    pub m: usize,
    pub graph: Graph,
    pub seed: usize,
}

pub fn star_instance(m: usize) -> Result<AnalyticInstance> {
    if m == 0 {
        return Err(Error::invalid("star needs at least one leaf"));
    }
    let edges: Vec<(u64, u64)> = (1..=m as u64).map(|l| (0, l)).collect();
    Ok(AnalyticInstance {
        family: AnalyticFamily::Star,
        m,
        graph: build_from_edges(&edges, None)?.graph,
        seed: 0,
    })
}

pub fn path_instance(m: usize) -> Result<AnalyticInstance> {
    if m < 2 {
        return Err(Error::invalid("path instance needs m >= 2"));
    }
    let edges: Vec<(u64, u64)> = (0..m as u64).map(|i| (i, i + 1)).collect();
    Ok(AnalyticInstance {
        family: AnalyticFamily::Path,
        m,
        graph: build_from_edges(&edges, None)?.graph,
        seed: 0,
    })
}

impl AnalyticInstance {
    pub fn new(family: AnalyticFamily, m: usize) -> Result<Self> {
        match family {
            AnalyticFamily::Star => star_instance(m),
            AnalyticFamily::Path => path_instance(m),
        }
    }

    /// `ρ₀`: `(1−α)/(2m)` for the star, `(1−α)/(3+α)` for the path.
    pub fn rho_breakpoint(&self, alpha: f64) -> f64 {
        match self.family {
            AnalyticFamily::Star => (1.0 - alpha) / (2.0 * self.m as f64),
            AnalyticFamily::Path => (1.0 - alpha) / (3.0 + alpha),
        }
    }

    /// Half-open interval `[ρ₀, ρ_max)` on which the closed forms hold.
    pub fn validity_interval(&self, alpha: f64) -> (f64, f64) {
        let hi = match self.family {
            AnalyticFamily::Star => 1.0 / self.m as f64,
            AnalyticFamily::Path => 1.0,
        };
        (self.rho_breakpoint(alpha), hi)
    }

    pub fn check_rho(&self, alpha: f64, rho: f64) -> Result<()> {
        let (lo, hi) = self.validity_interval(alpha);
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        if rho < lo || rho >= hi || rho <= 0.0 {
            return Err(Error::OutsideValidity { rho, lo, hi });
        }
        Ok(())
    }

    pub fn params(&self, alpha: f64, rho: f64) -> Result<ProblemParams> {
        ProblemParams::new(alpha, rho, self.seed)
    }

    /// The single nonzero entry of the minimizer, at the seed.
    pub fn seed_value(&self, alpha: f64, rho: f64) -> Result<f64> {
        self.check_rho(alpha, rho)?;
        Ok(match self.family {
            AnalyticFamily::Star => {
                let m = self.m as f64;
                2.0 * alpha * (1.0 - rho * m) / ((1.0 + alpha) * m.sqrt())
            }
            AnalyticFamily::Path => 2.0 * alpha * (1.0 - rho) / (1.0 + alpha),
        })
    }

    pub fn solution(&self, alpha: f64, rho: f64) -> Result<SparseVector> {
        Ok(SparseVector::unit(self.seed, self.seed_value(alpha, rho)?))
    }

    /// Slack of the tight inactive node: any leaf for the star, node 1 for
    /// the path.
    pub fn critical_slack(&self, alpha: f64, rho: f64) -> Result<f64> {
        self.check_rho(alpha, rho)?;
        let rho0 = self.rho_breakpoint(alpha);
        Ok(match self.family {
            AnalyticFamily::Star => 2.0 * alpha / (1.0 + alpha) * (rho - rho0),
            AnalyticFamily::Path => alpha * (3.0 + alpha) / (2.0 * (1.0 + alpha)) * (rho - rho0),
        })
    }

    /// Closed-form slack of every inactive node, in node order. Path nodes past
    /// the seed's neighbor have zero gradient, hence slack `ρα`.
    pub fn slacks(&self, alpha: f64, rho: f64) -> Result<Vec<(usize, f64)>> {
        let crit = self.critical_slack(alpha, rho)?;
        Ok(match self.family {
            AnalyticFamily::Star => (1..=self.m).map(|l| (l, crit)).collect(),
            AnalyticFamily::Path => std::iter::once((1, crit))
                .chain((2..=self.m).map(|i| (i, rho * alpha)))
                .collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Adjacency;

    #[test]
    fn default_core_degree() {
        let (g, part) = generate(&SynthParams::default()).unwrap();
        for u in part.core.iter() {
            assert_eq!(g.degree(u), 59 + 20);
        }
        assert_eq!(g.volume(&NodeSet::range(0, 1)).unwrap(), 79);
    }

    #[test]
    fn boundary_exterior_edge_count() {
        let (g, part) = generate(&SynthParams::default()).unwrap();
        let count: usize = part
            .exterior
            .iter()
            .map(|i| g.neighbors(i).iter().filter(|&&j| part.boundary.contains(j as usize)).count())
            .sum();
        assert_eq!(count, 1000);
    }

    #[test]
    fn exterior_has_no_core_neighbors() {
        let (g, part) = generate(&SynthParams {
            boundary_size: 50,
            ..SynthParams::default()
        })
        .unwrap();
        for i in part.exterior.iter() {
            assert!(g.neighbors(i).iter().all(|&j| !part.core.contains(j as usize)));
        }
        assert_eq!(g.exterior(&part.core).unwrap(), part.exterior);
        assert_eq!(g.vertex_boundary(&part.core).unwrap(), part.boundary);
    }

    #[test]
    fn parameter_errors() {
        let empty_boundary = SynthParams {
            boundary_size: 0,
            ..SynthParams::default()
        };
        assert!(generate(&empty_boundary).is_err());
        let wide = SynthParams {
            boundary_size: 10,
            ..SynthParams::default()
        };
        let err = generate(&wide).unwrap_err().to_string();
        assert!(err.contains("c_bnd"), "{err}");
        let thin = SynthParams {
            core_density: 0.01,
            ..SynthParams::default()
        };
        assert!(generate(&thin).is_err());
    }

    #[test]
    fn boundary_degree_adjustment() {
        let p = |b, d| SynthParams {
            boundary_size: b,
            deg_b: d,
            ..SynthParams::default()
        };
        assert_eq!(p(600, 82).effective_boundary_degree(), 82);
        assert_eq!(p(600, 83).effective_boundary_degree(), 82);
        assert_eq!(p(50, 82).effective_boundary_degree(), 48);
        assert_eq!(p(51, 82).effective_boundary_degree(), 50);
    }

    #[test]
    fn sparse_core_is_connected_and_deterministic() {
        let params = SynthParams {
            core_density: 0.2,
            rng_seed: 7,
            boundary_size: 100,
            c_bnd: 5,
            exterior_size: 50,
            deg_ext: 10,
            deg_b: 6,
            ..SynthParams::default()
        };
        let (g1, part) = generate(&params).unwrap();
        let (g2, _) = generate(&params).unwrap();
        assert_eq!(g1, g2);
        let core_edges = g1
            .edges()
            .filter(|&(u, v)| part.core.contains(u) && part.core.contains(v))
            .count();
        assert_eq!(core_edges, (0.2f64 * 1770.0).round() as usize);
        // BFS inside the core
        let mut seen = [false; 60];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &v in g1.neighbors(u) {
                let v = v as usize;
                if v < 60 && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        assert!(seen.iter().all(|&s| s));
        let other = generate(&SynthParams { rng_seed: 8, ..params }).unwrap().0;
        assert_ne!(g1, other);
    }

    #[test]
    fn odd_exterior_degree() {
        let base = SynthParams {
            core_size: 5,
            boundary_size: 10,
            c_bnd: 2,
            deg_b: 4,
            exterior_size: 10,
            deg_ext: 3,
            ..SynthParams::default()
        };
        let (g, part) = generate(&base).unwrap();
        for i in part.exterior.iter() {
            assert_eq!(g.degree(i), 4);
        }
        assert!(generate(&SynthParams {
            exterior_size: 11,
            ..base
        })
        .is_err());
    }

    #[test]
    fn star_closed_forms() {
        let star = star_instance(4).unwrap();
        assert!((star.rho_breakpoint(0.5) - 0.0625).abs() < 1e-15);
        assert!((star.seed_value(0.5, 0.1).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(star.critical_slack(0.5, 0.0625).unwrap(), 0.0);
        assert!((star.critical_slack(0.5, 0.1).unwrap() - 0.025).abs() < 1e-15);
        assert!(matches!(
            star.seed_value(0.5, 0.9 * 0.0625),
            Err(Error::OutsideValidity { .. })
        ));
        assert!(star.seed_value(0.5, 0.25).is_err());
    }

    #[test]
    fn path_closed_forms() {
        let path = path_instance(4).unwrap();
        assert_eq!(path.graph.degrees(), vec![1, 2, 2, 2, 1]);
        assert!((path.rho_breakpoint(0.5) - 1.0 / 7.0).abs() < 1e-15);
        assert!((path.seed_value(0.5, 0.2).unwrap() - 8.0 / 15.0).abs() < 1e-15);
        assert!((path.critical_slack(0.5, 0.2).unwrap() - 1.0 / 30.0).abs() < 1e-15);
        let s = path.slacks(0.5, 0.2).unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(s[2], (3, 0.1));
        assert!(path_instance(1).is_err());
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_eq!(derive_seed(5, 3), derive_seed(5, 3));
    }
}
