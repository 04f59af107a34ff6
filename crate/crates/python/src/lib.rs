//! Python bindings for `rppr_core`.
//!
//! Node sets cross the boundary as Python lists of ints, sparse vectors as
//! `dict[int, float]`, reports as plain dicts.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use rppr_core::diagnostics;
use rppr_core::synth::{self, AnalyticFamily, SynthParams};
use rppr_core::{Adjacency, Error, NodeSet, ProblemParams, SparseVector};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::NumericalDivergence { .. } => PyRuntimeError::new_err(e.to_string()),
        Error::Io(_) => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn node_set(mut nodes: Vec<usize>) -> PyResult<NodeSet> {
    nodes.sort_unstable();
    nodes.dedup();
    NodeSet::from_sorted(nodes).map_err(py_err)
}

fn sparse(x: BTreeMap<usize, f64>) -> PyResult<SparseVector> {
    SparseVector::from_pairs(x.into_iter().collect()).map_err(py_err)
}

fn dense_map(x: &SparseVector) -> BTreeMap<usize, f64> {
    x.iter().collect()
}

fn params(alpha: f64, rho: f64, seed: usize, reg_factor: f64) -> PyResult<ProblemParams> {
    ProblemParams::with_reg_factor(alpha, rho, seed, reg_factor).map_err(py_err)
}

/// Undirected simple graph in compressed adjacency form.
#[pyclass(name = "Graph", module = "rppr", frozen)]
pub struct PyGraph {
    inner: rppr_core::Graph,
}

impl PyGraph {
    fn check_node(&self, node: usize) -> PyResult<()> {
        if node >= self.inner.n() {
            return Err(PyValueError::new_err(format!("node {node} out of range for n = {}", self.inner.n())));
        }
        Ok(())
    }
}

#[pymethods]
impl PyGraph {
    /// Nodes are `0..n`; duplicate edges collapse, self-loops are rejected.
    #[new]
    fn new(n: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        let inner = rppr_core::Graph::from_edges_exact(n, &edges).map_err(py_err)?;
        Ok(Self { inner })
    }

    /// Reads a whitespace-separated edge list; ids are compacted in order of first appearance.
    /// Returns the graph and the original id of every compact node.
    #[staticmethod]
    fn read_edgelist(path: &str) -> PyResult<(PyGraph, Vec<u64>)> {
        let file = File::open(path).map_err(|e| PyOSError::new_err(format!("{path}: {e}")))?;
        let ingested = rppr_core::parse_snap_edgelist(BufReader::new(file)).map_err(py_err)?;
        let ids = (0..ingested.remap.len()).map(|i| ingested.remap.original_id(i)).collect();
        Ok((PyGraph { inner: ingested.graph }, ids))
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    fn degree(&self, node: usize) -> PyResult<usize> {
        self.check_node(node)?;
        Ok(self.inner.degree(node))
    }

    fn degrees(&self) -> Vec<usize> {
        self.inner.degrees()
    }

    fn neighbors(&self, node: usize) -> PyResult<Vec<u32>> {
        self.check_node(node)?;
        Ok(self.inner.neighbors(node).to_vec())
    }

    /// Each edge once, as `(u, v)` with `u < v`.
    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges().collect()
    }

    fn volume(&self, nodes: Vec<usize>) -> PyResult<u64> {
        self.inner.volume(&node_set(nodes)?).map_err(py_err)
    }

    fn vertex_boundary(&self, nodes: Vec<usize>) -> PyResult<Vec<usize>> {
        Ok(self.inner.vertex_boundary(&node_set(nodes)?).map_err(py_err)?.into_vec())
    }

    fn exterior(&self, nodes: Vec<usize>) -> PyResult<Vec<usize>> {
        Ok(self.inner.exterior(&node_set(nodes)?).map_err(py_err)?.into_vec())
    }

    fn __len__(&self) -> usize {
        self.inner.n()
    }

    fn __repr__(&self) -> String {
        format!("Graph(n={}, edges={})", self.inner.n(), self.inner.edge_count())
    }
}

/// Minimizer plus per-iteration accounting.
#[pyclass(name = "Solution", module = "rppr", frozen)]
pub struct PySolution {
    inner: rppr_core::Solution,
}

#[pymethods]
impl PySolution {
    #[getter]
    fn x(&self) -> BTreeMap<usize, f64> {
        dense_map(&self.inner.x)
    }

    #[getter]
    fn support(&self) -> Vec<usize> {
        self.inner.support.as_slice().to_vec()
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.trace.iterations
    }

    #[getter]
    fn total_work(&self) -> u64 {
        self.inner.trace.total_work
    }

    #[getter]
    fn final_residual(&self) -> f64 {
        self.inner.trace.final_residual
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.trace.converged
    }

    /// `(k, vol_supp_y, vol_supp_x_next, work, residual)` per iteration.
    fn records(&self) -> Vec<(usize, u64, u64, u64, f64)> {
        self.inner
            .trace
            .records
            .iter()
            .map(|r| (r.k, r.vol_supp_y, r.vol_supp_x_next, r.work, r.residual))
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Solution(support={}, iterations={}, total_work={}, converged={})",
            self.inner.support.len(),
            self.inner.trace.iterations,
            self.inner.trace.total_work,
            self.inner.trace.converged
        )
    }
}

/// Runs ISTA or FISTA from zero until the fixed-point residual drops below `epsilon`.
#[pyfunction]
#[pyo3(signature = (graph, alpha, rho, seed, epsilon = 1e-6, method = "fista", max_iter = rppr_core::solver::DEFAULT_MAX_ITER, reg_factor = 1.0))]
#[allow(clippy::too_many_arguments)]
fn solve(
    py: Python<'_>,
    graph: &PyGraph,
    alpha: f64,
    rho: f64,
    seed: usize,
    epsilon: f64,
    method: &str,
    max_iter: usize,
    reg_factor: f64,
) -> PyResult<PySolution> {
    let method: rppr_core::Method = method.parse().map_err(py_err)?;
    let p = params(alpha, rho, seed, reg_factor)?;
    let cfg = rppr_core::SolverConfig::new(method, epsilon).with_max_iter(max_iter);
    let inner = py.detach(|| rppr_core::solve(&graph.inner, &p, &cfg)).map_err(py_err)?;
    Ok(PySolution { inner })
}

#[pyfunction]
#[pyo3(signature = (graph, alpha, rho, seed, x, reg_factor = 1.0))]
fn objective(graph: &PyGraph, alpha: f64, rho: f64, seed: usize, x: BTreeMap<usize, f64>, reg_factor: f64) -> PyResult<f64> {
    let p = params(alpha, rho, seed, reg_factor)?;
    Ok(rppr_core::objective::objective_value(&graph.inner, &p, &sparse(x)?))
}

/// Complementary-slackness margins of a candidate minimizer.
#[pyfunction]
#[pyo3(signature = (graph, alpha, rho, seed, x, reg_factor = 1.0))]
fn slacks<'py>(
    py: Python<'py>,
    graph: &PyGraph,
    alpha: f64,
    rho: f64,
    seed: usize,
    x: BTreeMap<usize, f64>,
    reg_factor: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let p = params(alpha, rho, seed, reg_factor)?;
    let r = diagnostics::slacks(&graph.inner, &p, &sparse(x)?).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("entries", r.entries.into_iter().collect::<BTreeMap<_, _>>())?;
    d.set_item("default_slack", r.default_slack)?;
    d.set_item("min_slack", r.min_slack)?;
    d.set_item("min_node", r.min_node)?;
    d.set_item("kkt_violation", r.kkt_violation)?;
    Ok(d)
}

#[pyfunction]
fn check_no_percolation<'py>(
    py: Python<'py>,
    graph: &PyGraph,
    core: Vec<usize>,
    alpha: f64,
    rho: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let s = node_set(core)?;
    let seed = s.iter().next().unwrap_or(0);
    let r = diagnostics::check_no_percolation(&graph.inner, &params(alpha, rho, seed, 1.0)?, &s).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("holds", r.holds)?;
    d.set_item("worst_node", r.worst_node)?;
    d.set_item("worst_ratio", r.worst_ratio)?;
    d.set_item("boundary", r.boundary.into_vec())?;
    d.set_item("exterior_size", r.exterior_size)?;
    d.set_item("min_boundary_degree", r.min_boundary_degree)?;
    Ok(d)
}

/// Planted core/boundary/exterior graph; returns the graph and its partition.
#[pyfunction]
#[pyo3(signature = (core_size = 60, boundary_size = 600, exterior_size = 1000, c_bnd = 20, deg_b = 82, deg_ext = 998, core_density = 1.0, rng_seed = 0))]
#[allow(clippy::too_many_arguments)]
fn generate<'py>(
    py: Python<'py>,
    core_size: usize,
    boundary_size: usize,
    exterior_size: usize,
    c_bnd: usize,
    deg_b: usize,
    deg_ext: usize,
    core_density: f64,
    rng_seed: u64,
) -> PyResult<(PyGraph, Bound<'py, PyDict>)> {
    let sp = SynthParams { core_size, boundary_size, exterior_size, c_bnd, deg_b, deg_ext, core_density, rng_seed };
    let (g, part) = py.detach(|| synth::generate(&sp)).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("core", part.core.into_vec())?;
    d.set_item("boundary", part.boundary.into_vec())?;
    d.set_item("exterior", part.exterior.into_vec())?;
    Ok((PyGraph { inner: g }, d))
}

/// Star or path instance with closed-form minimizers.
#[pyclass(name = "AnalyticInstance", module = "rppr", frozen)]
pub struct PyAnalytic {
    inner: synth::AnalyticInstance,
}

#[pymethods]
impl PyAnalytic {
    /// `family` is `"star"` or `"path"`.
    #[new]
    fn new(family: &str, m: usize) -> PyResult<Self> {
        let family: AnalyticFamily = family.parse().map_err(py_err)?;
        Ok(Self { inner: synth::AnalyticInstance::new(family, m).map_err(py_err)? })
    }

    #[getter]
    fn graph(&self) -> PyGraph {
        PyGraph { inner: self.inner.graph.clone() }
    }

    #[getter]
    fn seed(&self) -> usize {
        self.inner.seed
    }

    fn rho_breakpoint(&self, alpha: f64) -> f64 {
        self.inner.rho_breakpoint(alpha)
    }

    fn validity_interval(&self, alpha: f64) -> (f64, f64) {
        self.inner.validity_interval(alpha)
    }

    fn solution(&self, alpha: f64, rho: f64) -> PyResult<BTreeMap<usize, f64>> {
        Ok(dense_map(&self.inner.solution(alpha, rho).map_err(py_err)?))
    }

    fn slacks(&self, alpha: f64, rho: f64) -> PyResult<BTreeMap<usize, f64>> {
        Ok(self.inner.slacks(alpha, rho).map_err(py_err)?.into_iter().collect())
    }
}

#[pymodule]
fn rppr(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_class::<PySolution>()?;
    m.add_class::<PyAnalytic>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(objective, m)?)?;
    m.add_function(wrap_pyfunction!(slacks, m)?)?;
    m.add_function(wrap_pyfunction!(check_no_percolation, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    Ok(())
}
