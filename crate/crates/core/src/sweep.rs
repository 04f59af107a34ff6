//! Parameter sweeps with ISTA/FISTA head-to-head rows, seed sampling,
//! summaries and CSV output.
//!
//! A sweep spec is a `key = value` file; `#` starts a comment. Keys:
//!
//! | key | value |
//! |-----|-------|
//! | `axis` | `rho`, `alpha`, `epsilon` or `boundary_size` |
//! | `grid` | `v1, v2, ...` or `log:lo:hi:count` |
//! | `alpha`, `rho`, `epsilon`, `max_iter`, `reg_factor` | fixed parameters |
//! | `methods` | comma list of `ista`, `fista` |
//! | `graph` | `synth`, `alpha_sweep`, `edgelist:PATH`, `star:M`, `path:M` |
//! | `core_size`, `boundary_size`, `exterior_size`, `c_bnd`, `deg_b`, `deg_ext`, `core_density` | generator settings |
//! | `m_ext_edges`, `alpha_min`, `max_exterior` | α-sweep family settings |
//! | `seeds` | `n1, n2, ...` or `sample:K` |
//! | `per_point_fresh_graph`, `base_rng_seed`, `max_nodes`, `trace_dir` | harness settings |
//!
//! Explicit edge-list seeds use the file's node ids, and so does the `seed`
//! column. A fresh graph for grid point `i` uses generator seed
//! `derive_seed(base_rng_seed, i)`; otherwise the generator seed is
//! `base_rng_seed` itself.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{parse_snap_edgelist_capped, Adjacency, Graph, IndexRemap, NodeSet};
use crate::objective::ProblemParams;
use crate::solver::{solve_observed, Method, SolverConfig, TraceLevel, DEFAULT_MAX_ITER};
use crate::synth::{
    derive_seed, generate, generate_alpha_sweep_instance, AlphaSweepParams, AnalyticFamily,
    AnalyticInstance, SynthParams,
};

pub const CSV_HEADER: &str =
    "axis,value,method,seed,iters,total_work,converged,residual,vol_supp,spurious_vol,work_per_iter";

pub const SUMMARY_HEADER: &str =
    "axis,value,method,runs,converged,work_mean,work_p25,work_p75,iters_mean,iters_p25,iters_p75";

/// Number of calibration α values used by [`autotune`].
pub const CALIBRATION_POINTS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    Rho,
    Alpha,
    Epsilon,
    BoundarySize,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Rho => "rho",
            Axis::Alpha => "alpha",
            Axis::Epsilon => "epsilon",
            Axis::BoundarySize => "boundary_size",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rho" => Ok(Axis::Rho),
            "alpha" => Ok(Axis::Alpha),
            "epsilon" | "eps" => Ok(Axis::Epsilon),
            "boundary_size" | "boundary" => Ok(Axis::BoundarySize),
            other => Err(Error::invalid(format!("unknown sweep axis '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    List(Vec<f64>),
    Log { lo: f64, hi: f64, count: usize },
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match *self {
            Grid::List(ref v) => v.clone(),
            Grid::Log { lo, hi, count } => log_spaced(lo, hi, count),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Grid::List(ref v) if v.is_empty() => Err(Error::invalid("grid must be nonempty")),
            Grid::List(_) => Ok(()),
            Grid::Log { lo, hi, count } => {
                if count == 0 {
                    Err(Error::invalid("grid must be nonempty"))
                } else if !(lo > 0.0 && hi > 0.0) {
                    Err(Error::invalid("log-spaced grid needs lo > 0 and hi > 0"))
                } else {
                    Ok(())
                }
            }
        }
    }
}

impl FromStr for Grid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("log:") {
            let parts: Vec<&str> = rest.split(':').collect();
            if parts.len() != 3 {
                return Err(Error::invalid("log grid must be log:lo:hi:count"));
            }
            let grid = Grid::Log {
                lo: parse_num(parts[0])?,
                hi: parse_num(parts[1])?,
                count: parse_num(parts[2])?,
            };
            grid.validate()?;
            return Ok(grid);
        }
        let values = split_list(s).map(parse_num).collect::<Result<Vec<f64>>>()?;
        let grid = Grid::List(values);
        grid.validate()?;
        Ok(grid)
    }
}

/// `count` points from `lo` to `hi` evenly spaced in `ln`; endpoints exact.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            let last = count - 1;
            (0..count)
                .map(|i| match i {
                    0 => lo,
                    i if i == last => hi,
                    i => (a + (b - a) * i as f64 / last as f64).exp(),
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GraphSource {
    Synth(SynthParams),
    AlphaSweep(AlphaSweepParams),
    EdgeList { path: PathBuf, max_nodes: Option<usize> },
    Analytic { family: AnalyticFamily, m: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum SeedSpec {
    Explicit(Vec<u64>),
    Sample(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: Axis,
    pub grid: Grid,
    pub alpha: f64,
    pub rho: f64,
    pub epsilon: f64,
    pub max_iter: usize,
    pub reg_factor: f64,
    pub methods: Vec<Method>,
    pub source: GraphSource,
    pub seeds: SeedSpec,
    pub per_point_fresh_graph: bool,
    pub base_rng_seed: u64,
    pub trace_dir: Option<PathBuf>,
}

impl SweepSpec {
    /// Fixed parameters `α = 0.2`, `ρ = 1e-4`, `ε = 1e-6`, both methods, seed 0.
    pub fn new(axis: Axis, grid: Grid, source: GraphSource) -> Self {
        let epsilon = match source {
            GraphSource::EdgeList { .. } => 1e-8,
            _ => 1e-6,
        };
        SweepSpec {
            axis,
            grid,
            alpha: 0.2,
            rho: 1e-4,
            epsilon,
            max_iter: DEFAULT_MAX_ITER,
            reg_factor: 1.0,
            methods: vec![Method::Ista, Method::Fista],
            source,
            seeds: SeedSpec::Explicit(vec![0]),
            per_point_fresh_graph: false,
            base_rng_seed: 0,
            trace_dir: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        parse_spec(text, None)
    }

    /// Relative `edgelist:` paths resolve against the directory of the sweep file.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        parse_spec(&text, path.parent())
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.methods.is_empty() {
            return Err(Error::invalid("at least one method is required"));
        }
        let mut seen = HashSet::new();
        if !self.methods.iter().all(|m| seen.insert(*m)) {
            return Err(Error::invalid("methods must be distinct"));
        }
        let values = self.grid.values();
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("grid values must be distinct"));
        }
        if let SeedSpec::Explicit(ref s) = self.seeds {
            if s.is_empty() {
                return Err(Error::invalid("seed list must be nonempty"));
            }
        }
        for (i, &v) in values.iter().enumerate() {
            self.point_params(v)?.1.validate()?;
            if self.axis == Axis::BoundarySize {
                match self.source {
                    GraphSource::Synth(ref base) => self.synth_params(base, v, i).validate()?,
                    GraphSource::AlphaSweep(ref a) => self.synth_params(&a.base, v, i).validate()?,
                    _ => {
                        return Err(Error::invalid(
                            "boundary_size sweeps need a synth or alpha_sweep graph",
                        ))
                    }
                }
            }
        }
        if let GraphSource::Synth(ref base) = self.source {
            if self.axis != Axis::BoundarySize {
                base.validate()?;
            }
        }
        Ok(())
    }

    fn point_params(&self, v: f64) -> Result<(ProblemParams, SolverConfig)> {
        let (mut alpha, mut rho, mut eps) = (self.alpha, self.rho, self.epsilon);
        match self.axis {
            Axis::Rho => rho = v,
            Axis::Alpha => alpha = v,
            Axis::Epsilon => eps = v,
            Axis::BoundarySize => {
                if !(v >= 0.0 && v.fract() == 0.0) {
                    return Err(Error::invalid(format!(
                        "boundary_size grid value {v} is not a nonnegative integer"
                    )));
                }
            }
        }
        let p = ProblemParams::with_reg_factor(alpha, rho, 0, self.reg_factor)?;
        let mut cfg = SolverConfig::new(Method::Ista, eps).with_max_iter(self.max_iter);
        if self.trace_dir.is_some() {
            cfg = cfg.full_trace();
        }
        Ok((p, cfg))
    }

    fn synth_params(&self, base: &SynthParams, v: f64, index: usize) -> SynthParams {
        let mut sp = base.clone();
        if self.axis == Axis::BoundarySize {
            sp.boundary_size = v as usize;
        }
        sp.rng_seed = self.graph_seed(index);
        sp
    }

    fn graph_seed(&self, index: usize) -> u64 {
        if self.per_point_fresh_graph {
            derive_seed(self.base_rng_seed, index as u64)
        } else {
            self.base_rng_seed
        }
    }

    fn rebuilds_per_point(&self) -> bool {
        match self.source {
            GraphSource::Synth(_) | GraphSource::AlphaSweep(_) => {
                self.per_point_fresh_graph || self.axis == Axis::BoundarySize
            }
            _ => false,
        }
    }
}

fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty())
}

fn parse_num<T: FromStr>(s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::invalid(format!("cannot parse '{}' as a number", s.trim())))
}

fn parse_bool(s: &str) -> Result<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(Error::invalid(format!("cannot parse '{other}' as a boolean"))),
    }
}

fn parse_spec(text: &str, base_dir: Option<&Path>) -> Result<SweepSpec> {
    let mut kv: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Config {
                line: line_no,
                message: format!("expected 'key = value', got '{line}'"),
            });
        };
        let key = k.trim().to_ascii_lowercase();
        if kv.insert(key.clone(), (line_no, v.trim().to_string())).is_some() {
            return Err(Error::Config {
                line: line_no,
                message: format!("duplicate key '{key}'"),
            });
        }
    }

    let mut take = |key: &str| kv.remove(key);
    let at = |line: usize| move |e: Error| Error::Config { line, message: e.to_string() };
    macro_rules! field {
        ($key:expr, $parse:expr) => {
            match take($key) {
                Some((line, v)) => Some(($parse)(v.as_str()).map_err(at(line))?),
                None => None,
            }
        };
    }

    let axis: Axis = field!("axis", Axis::from_str).ok_or(Error::Config {
        line: 0,
        message: "missing key 'axis'".into(),
    })?;
    let grid: Grid = field!("grid", Grid::from_str).ok_or(Error::Config {
        line: 0,
        message: "missing key 'grid'".into(),
    })?;

    let mut synth = SynthParams::default();
    macro_rules! synth_field {
        ($($name:ident),*) => {
            $(if let Some(v) = field!(stringify!($name), parse_num) { synth.$name = v; })*
        };
    }
    synth_field!(core_size, boundary_size, exterior_size, c_bnd, deg_b, deg_ext, core_density);

    let alpha_min: Option<f64> = field!("alpha_min", parse_num);
    let m_ext_edges: Option<usize> = field!("m_ext_edges", parse_num);
    let max_exterior: Option<usize> = field!("max_exterior", parse_num);
    let max_nodes: Option<usize> = field!("max_nodes", parse_num);
    let rho: Option<f64> = field!("rho", parse_num);

    let source = match take("graph") {
        None => GraphSource::Synth(synth.clone()),
        Some((line, v)) => {
            let v = v.trim();
            if v == "synth" {
                GraphSource::Synth(synth.clone())
            } else if v == "alpha_sweep" {
                GraphSource::AlphaSweep(AlphaSweepParams {
                    base: synth.clone(),
                    m_ext_edges: m_ext_edges.unwrap_or(synth.boundary_size),
                    alpha_min: alpha_min.unwrap_or(1e-3),
                    rho: rho.unwrap_or(1e-4),
                    max_exterior: max_exterior.unwrap_or(4000),
                })
            } else if let Some(path) = v.strip_prefix("edgelist:") {
                let p = PathBuf::from(path.trim());
                let path = match base_dir {
                    Some(dir) if p.is_relative() => dir.join(p),
                    _ => p,
                };
                GraphSource::EdgeList { path, max_nodes }
            } else if let Some((fam, m)) = v.split_once(':') {
                GraphSource::Analytic {
                    family: fam.parse().map_err(at(line))?,
                    m: parse_num(m).map_err(at(line))?,
                }
            } else {
                return Err(Error::Config {
                    line,
                    message: format!("unknown graph source '{v}'"),
                });
            }
        }
    };

    let mut spec = SweepSpec::new(axis, grid, source);
    if let Some(v) = rho {
        spec.rho = v;
    }
    if let Some(v) = field!("alpha", parse_num) {
        spec.alpha = v;
    }
    if let Some(v) = field!("epsilon", parse_num) {
        spec.epsilon = v;
    }
    if let Some(v) = field!("max_iter", parse_num) {
        spec.max_iter = v;
    }
    if let Some(v) = field!("reg_factor", parse_num) {
        spec.reg_factor = v;
    }
    if let Some(v) = field!("methods", |s: &str| split_list(s).map(Method::from_str).collect::<Result<Vec<_>>>()) {
        spec.methods = v;
    }
    if let Some(v) = field!("seeds", |s: &str| -> Result<SeedSpec> {
        match s.trim().strip_prefix("sample:") {
            Some(k) => Ok(SeedSpec::Sample(parse_num(k)?)),
            None => Ok(SeedSpec::Explicit(split_list(s).map(parse_num).collect::<Result<_>>()?)),
        }
    }) {
        spec.seeds = v;
    }
    if let Some(v) = field!("per_point_fresh_graph", parse_bool) {
        spec.per_point_fresh_graph = v;
    }
    if let Some(v) = field!("base_rng_seed", parse_num) {
        spec.base_rng_seed = v;
    }
    if let Some(v) = field!("trace_dir", |s: &str| -> Result<PathBuf> { Ok(PathBuf::from(s)) }) {
        spec.trace_dir = Some(match base_dir {
            Some(dir) if v.is_relative() => dir.join(v),
            _ => v,
        });
    }

    if let Some((key, (line, _))) = kv.into_iter().next() {
        return Err(Error::Config {
            line,
            message: format!("unknown key '{key}'"),
        });
    }
    spec.validate()?;
    Ok(spec)
}

/// One `(grid point, method, seed)` run.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis: Axis,
    pub value: f64,
    pub method: Method,
    /// Node id in the source's numbering.
    pub seed: u64,
    pub iterations: usize,
    pub total_work: u64,
    pub converged: bool,
    pub final_residual: f64,
    pub vol_supp: u64,
    /// `Σ_k vol(supp(x_{k+1}) \ core)`; `None` without a known core.
    pub spurious_vol: Option<u64>,
    pub work_per_iter: f64,
    /// Solver error, if the run failed; such rows have `converged = false`.
    pub error: Option<String>,
}

/// `k` distinct nodes drawn uniformly without replacement, deterministic in
/// `rng_seed`.
pub fn sample_seeds(g: &Graph, k: usize, rng_seed: u64) -> Result<NodeSet> {
    let n = g.n();
    if k > n {
        return Err(Error::invalid(format!("cannot sample {k} seeds from {n} nodes")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    Ok(rand::seq::index::sample(&mut rng, n, k).into_iter().collect())
}

struct PointGraph {
    graph: Graph,
    remap: Option<IndexRemap>,
    core: Option<NodeSet>,
}

fn load_source(spec: &SweepSpec, value: f64, index: usize) -> Result<PointGraph> {
    Ok(match spec.source {
        GraphSource::Synth(ref base) => {
            let (graph, part) = generate(&spec.synth_params(base, value, index))?;
            PointGraph {
                graph,
                remap: None,
                core: Some(part.core),
            }
        }
        GraphSource::AlphaSweep(ref a) => {
            let params = AlphaSweepParams {
                base: spec.synth_params(&a.base, value, index),
                ..a.clone()
            };
            let (graph, part) = generate_alpha_sweep_instance(&params)?;
            PointGraph {
                graph,
                remap: None,
                core: Some(part.core),
            }
        }
        GraphSource::EdgeList { ref path, max_nodes } => {
            let file = File::open(path).map_err(|e| {
                Error::invalid(format!("cannot read edge list {}: {e}", path.display()))
            })?;
            let ingested = parse_snap_edgelist_capped(BufReader::new(file), max_nodes)?;
            PointGraph {
                graph: ingested.graph,
                remap: Some(ingested.remap),
                core: None,
            }
        }
        GraphSource::Analytic { family, m } => PointGraph {
            graph: AnalyticInstance::new(family, m)?.graph,
            remap: None,
            core: None,
        },
    })
}

fn resolve_seeds(spec: &SweepSpec, pg: &PointGraph) -> Result<Vec<(usize, u64)>> {
    let external = |i: usize| pg.remap.as_ref().map_or(i as u64, |r| r.original_id(i));
    match spec.seeds {
        SeedSpec::Sample(k) => Ok(sample_seeds(&pg.graph, k, spec.base_rng_seed)?
            .iter()
            .map(|i| (i, external(i)))
            .collect()),
        SeedSpec::Explicit(ref ids) => ids
            .iter()
            .map(|&id| {
                let idx = match pg.remap {
                    Some(ref r) => r.compact_index(id),
                    None => usize::try_from(id).ok().filter(|&i| i < pg.graph.n()),
                };
                idx.map(|i| (i, id))
                    .ok_or_else(|| Error::invalid(format!("seed node {id} is not in the graph")))
            })
            .collect(),
    }
}

#[derive(Serialize)]
struct TraceLine<'a> {
    k: usize,
    vol_supp_y: u64,
    vol_supp_x_next: u64,
    work: u64,
    residual: f64,
    supp_x_next: &'a [usize],
}

fn run_one(
    spec: &SweepSpec,
    pg: &PointGraph,
    in_core: Option<&[bool]>,
    point: usize,
    value: f64,
    method: Method,
    (seed, seed_id): (usize, u64),
) -> SweepRow {
    let mut row = SweepRow {
        axis: spec.axis,
        value,
        method,
        seed: seed_id,
        iterations: 0,
        total_work: 0,
        converged: false,
        final_residual: f64::NAN,
        vol_supp: 0,
        spurious_vol: None,
        work_per_iter: 0.0,
        error: None,
    };
    let outcome = (|| -> Result<()> {
        let (mut p, mut cfg) = spec.point_params(value)?;
        p.seed = seed;
        cfg.method = method;
        let g = &pg.graph;
        let mut spurious = 0u64;
        let sol = solve_observed(g, &p, &cfg, |_, _, x_next| {
            if let Some(mask) = in_core {
                spurious += x_next
                    .indices()
                    .filter(|&i| !mask[i])
                    .map(|i| g.degree(i) as u64)
                    .sum::<u64>();
            }
        })?;
        row.iterations = sol.trace.iterations;
        row.total_work = sol.trace.total_work;
        row.converged = sol.trace.converged;
        row.final_residual = sol.trace.final_residual;
        row.vol_supp = g.volume(&sol.support)?;
        row.spurious_vol = in_core.map(|_| spurious);
        if row.iterations > 0 {
            row.work_per_iter = row.total_work as f64 / row.iterations as f64;
        }
        if let (Some(dir), TraceLevel::Full) = (&spec.trace_dir, sol.trace.level) {
            let name = format!("trace_{point:04}_{}_{seed_id}.jsonl", method.name());
            let mut w = BufWriter::new(File::create(dir.join(name))?);
            for (rec, snap) in sol.trace.records.iter().zip(&sol.trace.snapshots) {
                let supp: Vec<usize> = snap.x_next.indices().collect();
                let line = TraceLine {
                    k: rec.k,
                    vol_supp_y: rec.vol_supp_y,
                    vol_supp_x_next: rec.vol_supp_x_next,
                    work: rec.work,
                    residual: rec.residual,
                    supp_x_next: &supp,
                };
                serde_json::to_writer(&mut w, &line).map_err(std::io::Error::from)?;
                w.write_all(b"\n")?;
            }
            w.flush()?;
        }
        Ok(())
    })();
    if let Err(e) = outcome {
        row.converged = false;
        row.error = Some(e.to_string());
    }
    row
}

/// Runs every `(grid point, method, seed)` combination. Rows come back sorted
/// by axis value, then method name, then seed; the order is independent of
/// scheduling.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    if let Some(dir) = &spec.trace_dir {
        std::fs::create_dir_all(dir)?;
    }
    let values = spec.grid.values();
    let shared = if spec.rebuilds_per_point() {
        None
    } else {
        Some(load_source(spec, values[0], 0)?)
    };
    let per_point: Vec<Result<Vec<SweepRow>>> = values
        .par_iter()
        .enumerate()
        .map(|(idx, &value)| {
            let owned;
            let pg = match shared {
                Some(ref pg) => pg,
                None => {
                    owned = load_source(spec, value, idx)?;
                    &owned
                }
            };
            let seeds = resolve_seeds(spec, pg)?;
            let mask: Option<Vec<bool>> = pg.core.as_ref().map(|c| {
                let mut m = vec![false; pg.graph.n()];
                c.iter().for_each(|i| m[i] = true);
                m
            });
            let units: Vec<(Method, (usize, u64))> = spec
                .methods
                .iter()
                .flat_map(|&m| seeds.iter().map(move |&s| (m, s)))
                .collect();
            Ok(units
                .into_par_iter()
                .map(|(m, s)| run_one(spec, pg, mask.as_deref(), idx, value, m, s))
                .collect())
        })
        .collect();
    let mut rows = Vec::new();
    for r in per_point {
        rows.extend(r?);
    }
    rows.sort_by(|a, b| {
        a.value
            .total_cmp(&b.value)
            .then_with(|| a.method.name().cmp(b.method.name()))
            .then_with(|| a.seed.cmp(&b.seed))
    });
    Ok(rows)
}

/// `%.12g`-style formatting: 12 significant digits, trailing zeros trimmed.
pub fn format_g(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..12).contains(&exp) {
        return format!("{}e{}{:02}", trim_zeros(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs());
    }
    let decimals = (11 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_csv<W: Write>(rows: &[SweepRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.axis,
            format_g(r.value),
            r.method.name(),
            r.seed,
            r.iterations,
            r.total_work,
            r.converged,
            format_g(r.final_residual),
            r.vol_supp,
            r.spurious_vol.map(|v| v.to_string()).unwrap_or_default(),
            format_g(r.work_per_iter),
        )?;
    }
    Ok(())
}

pub fn to_csv_string(rows: &[SweepRow]) -> String {
    let mut out = Vec::new();
    write_csv(rows, &mut out).expect("writing to memory");
    String::from_utf8(out).expect("ascii output")
}

/// Nearest-rank percentile: the value of rank `⌈p/100 · N⌉` (at least 1) in
/// the ascending sample.
pub fn percentile_nearest_rank(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of an empty sample");
    let n = sorted.len();
    let rank = ((p / 100.0) * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spread {
    pub mean: f64,
    pub p25: f64,
    pub p75: f64,
}

impl Spread {
    pub fn of(values: &[f64]) -> Spread {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Spread {
            mean: values.iter().sum::<f64>() / values.len() as f64,
            p25: percentile_nearest_rank(&sorted, 25.0),
            p75: percentile_nearest_rank(&sorted, 75.0),
        }
    }
}

/// Per-point, per-method summary. All runs are included, converged or not.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub axis: Axis,
    pub value: f64,
    pub method: Method,
    pub runs: usize,
    pub converged: usize,
    pub work: Spread,
    pub iterations: Spread,
}

pub fn aggregate(rows: &[SweepRow]) -> Vec<SummaryRow> {
    let mut out: Vec<SummaryRow> = Vec::new();
    let mut start = 0;
    while start < rows.len() {
        let (value, method) = (rows[start].value, rows[start].method);
        let end = start
            + rows[start..]
                .iter()
                .take_while(|r| r.value == value && r.method == method)
                .count();
        let group = &rows[start..end];
        let work: Vec<f64> = group.iter().map(|r| r.total_work as f64).collect();
        let iters: Vec<f64> = group.iter().map(|r| r.iterations as f64).collect();
        out.push(SummaryRow {
            axis: rows[start].axis,
            value,
            method,
            runs: group.len(),
            converged: group.iter().filter(|r| r.converged).count(),
            work: Spread::of(&work),
            iterations: Spread::of(&iters),
        });
        start = end;
    }
    out
}

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{SUMMARY_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.axis,
            format_g(r.value),
            r.method.name(),
            r.runs,
            r.converged,
            format_g(r.work.mean),
            format_g(r.work.p25),
            format_g(r.work.p75),
            format_g(r.iterations.mean),
            format_g(r.iterations.p25),
            format_g(r.iterations.p75),
        )?;
    }
    Ok(())
}

/// `W_F/W_I = (N_F/N_I)·((W_F/N_F)/(W_I/N_I))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tradeoff {
    pub value: f64,
    pub seed: u64,
    pub iter_ratio: f64,
    pub per_iter_ratio: f64,
    pub work_ratio: f64,
}

/// Ratios of `accelerated` over `baseline`; `None` when either run took no
/// iterations.
pub fn tradeoff(accelerated: &SweepRow, baseline: &SweepRow) -> Option<Tradeoff> {
    if accelerated.iterations == 0 || baseline.iterations == 0 {
        return None;
    }
    let iter_ratio = accelerated.iterations as f64 / baseline.iterations as f64;
    let per_iter_ratio = accelerated.work_per_iter / baseline.work_per_iter;
    Some(Tradeoff {
        value: accelerated.value,
        seed: accelerated.seed,
        iter_ratio,
        per_iter_ratio,
        work_ratio: accelerated.total_work as f64 / baseline.total_work as f64,
    })
}

/// FISTA-over-ISTA ratios for every `(point, seed)` that has both rows.
pub fn tradeoff_ratios(rows: &[SweepRow]) -> Vec<Tradeoff> {
    let mut ista: BTreeMap<(u64, u64), &SweepRow> = BTreeMap::new();
    let mut fista: Vec<&SweepRow> = Vec::new();
    for r in rows {
        match r.method {
            Method::Ista => {
                ista.insert((r.value.to_bits(), r.seed), r);
            }
            Method::Fista => fista.push(r),
        }
    }
    let mut out = Vec::new();
    for f in fista {
        match ista.get(&(f.value.to_bits(), f.seed)) {
            Some(i) => out.extend(tradeoff(f, i)),
            None => log::warn!("no ISTA row for value {} seed {}; skipped", f.value, f.seed),
        }
    }
    out
}

/// Average ranks, 1-based; ties share the mean of their positions.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation; `NaN` if either side is constant.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let (rx, ry) = (average_ranks(xs), average_ranks(ys));
    let n = xs.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TunerCandidate {
    pub c_bnd: usize,
    pub deg_b: usize,
    pub m_ext_edges: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TunerGrid {
    pub base: AlphaSweepParams,
    pub c_bnd: Vec<usize>,
    pub deg_b: Vec<usize>,
    pub m_ext_edges: Vec<usize>,
    pub epsilon: f64,
    pub max_iter: usize,
}

impl TunerGrid {
    /// Candidates in `c_bnd`, then `deg_b`, then `m_ext_edges` order.
    pub fn candidates(&self) -> Vec<TunerCandidate> {
        let mut out = Vec::new();
        for &c_bnd in &self.c_bnd {
            for &deg_b in &self.deg_b {
                for &m_ext_edges in &self.m_ext_edges {
                    out.push(TunerCandidate { c_bnd, deg_b, m_ext_edges });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct TunerOutcome {
    pub best: TunerCandidate,
    pub best_score: f64,
    pub params: AlphaSweepParams,
    /// Score of every candidate, `None` where no valid instance exists.
    pub scores: Vec<(TunerCandidate, Option<f64>)>,
}

/// Scores each candidate by the fraction of the calibration α grid on which
/// FISTA does more work than ISTA, and returns the first maximizer.
pub fn autotune(grid: &TunerGrid) -> Result<TunerOutcome> {
    let alphas = log_spaced(grid.base.alpha_min, 0.9, CALIBRATION_POINTS);
    let scored: Vec<(TunerCandidate, Option<(f64, AlphaSweepParams)>)> = grid
        .candidates()
        .into_par_iter()
        .map(|cand| {
            let params = AlphaSweepParams {
                base: SynthParams {
                    c_bnd: cand.c_bnd,
                    deg_b: cand.deg_b,
                    ..grid.base.base.clone()
                },
                m_ext_edges: cand.m_ext_edges,
                ..grid.base.clone()
            };
            let Ok((g, _)) = generate_alpha_sweep_instance(&params) else {
                return (cand, None);
            };
            let mut slower = 0usize;
            for &alpha in &alphas {
                let work = |method| -> Option<u64> {
                    let p = ProblemParams::new(alpha, params.rho, 0).ok()?;
                    let cfg = SolverConfig::new(method, grid.epsilon).with_max_iter(grid.max_iter);
                    solve_observed(&g, &p, &cfg, |_, _, _| {}).ok().map(|s| s.trace.total_work)
                };
                if let (Some(f), Some(i)) = (work(Method::Fista), work(Method::Ista)) {
                    if f > i {
                        slower += 1;
                    }
                }
            }
            (cand, Some((slower as f64 / alphas.len() as f64, params)))
        })
        .collect();
    let mut best: Option<(TunerCandidate, f64, AlphaSweepParams)> = None;
    for (cand, s) in &scored {
        if let Some((score, params)) = s {
            if best.as_ref().is_none_or(|b| *score > b.1) {
                best = Some((*cand, *score, params.clone()));
            }
        }
    }
    let (best, best_score, params) =
        best.ok_or_else(|| Error::invalid("no tuner candidate yields a valid instance"))?;
    Ok(TunerOutcome {
        best,
        best_score,
        params,
        scores: scored.into_iter().map(|(c, s)| (c, s.map(|x| x.0))).collect(),
    })
}
