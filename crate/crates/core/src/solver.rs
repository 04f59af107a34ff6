//! ISTA and FISTA from `x₋₁ = x₀ = 0` with a degree-weighted work ledger.
//!
//! Iteration `k` forms `y_k = x_k + β(x_k − x_{k−1})` and
//! `x_{k+1} = prox(y_k − η∇f(y_k))`, and is charged
//! `work_k = vol(supp(y_k)) + vol(supp(x_{k+1}))`. ISTA is the `β = 0` case of
//! the same loop. Before each iteration the fixed-point residual
//! `‖x_k − T(x_k)‖_∞` (unit step) is compared to `ε`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Adjacency, NodeSet};
use crate::objective::{objective_value, prox_grad_step, ProblemParams, SparseVector};

pub const DEFAULT_MAX_ITER: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    Ista,
    Fista,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Ista => "ista",
            Method::Fista => "fista",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ista" => Ok(Method::Ista),
            "fista" => Ok(Method::Fista),
            other => Err(Error::invalid(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TraceLevel {
    #[default]
    Summary,
    /// Also keep every `y_k` and `x_{k+1}`.
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    pub epsilon: f64,
    pub max_iter: usize,
    pub step: f64,
    /// Overrides the method's default momentum when set.
    pub momentum: Option<f64>,
    pub trace_level: TraceLevel,
}

impl SolverConfig {
    pub fn new(method: Method, epsilon: f64) -> Self {
        SolverConfig {
            method,
            epsilon,
            max_iter: DEFAULT_MAX_ITER,
            step: 1.0,
            momentum: None,
            trace_level: TraceLevel::Summary,
        }
    }

    pub fn full_trace(mut self) -> Self {
        self.trace_level = TraceLevel::Full;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    /// Momentum actually used for a given teleportation parameter.
    pub fn momentum_for(&self, alpha: f64) -> f64 {
        self.momentum.unwrap_or(match self.method {
            Method::Ista => 0.0,
            Method::Fista => fista_momentum(alpha),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::invalid(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.max_iter < 1 {
            return Err(Error::invalid("max_iter must be at least 1"));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::invalid(format!("step must be positive, got {}", self.step)));
        }
        if let Some(b) = self.momentum {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::invalid(format!("momentum must lie in [0, 1), got {b}")));
            }
        }
        Ok(())
    }
}

/// `β = (1 − √α)/(1 + √α)`.
pub fn fista_momentum(alpha: f64) -> f64 {
    let s = alpha.sqrt();
    (1.0 - s) / (1.0 + s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRecord {
    pub k: usize,
    pub vol_supp_y: u64,
    pub vol_supp_x_next: u64,
    pub work: u64,
    /// Residual of `x_k`, checked before the step.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterateSnapshot {
    pub y: SparseVector,
    pub x_next: SparseVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveTrace {
    pub level: TraceLevel,
    pub records: Vec<IterationRecord>,
    /// One entry per record at [`TraceLevel::Full`], empty otherwise.
    pub snapshots: Vec<IterateSnapshot>,
    pub iterations: usize,
    pub total_work: u64,
    pub final_residual: f64,
    pub converged: bool,
}

impl SolveTrace {
    pub fn require_full(&self) -> Result<()> {
        if self.level != TraceLevel::Full {
            return Err(Error::FullTraceRequired);
        }
        Ok(())
    }

    /// `x_0, x_1, …, x_N` reconstructed from a full trace.
    pub fn iterates(&self) -> Result<Vec<SparseVector>> {
        self.require_full()?;
        let mut out = Vec::with_capacity(self.snapshots.len() + 1);
        out.push(SparseVector::zeros());
        out.extend(self.snapshots.iter().map(|s| s.x_next.clone()));
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub x: SparseVector,
    pub trace: SolveTrace,
    pub support: NodeSet,
}

pub fn solve<A: Adjacency + ?Sized>(g: &A, p: &ProblemParams, cfg: &SolverConfig) -> Result<Solution> {
    solve_observed(g, p, cfg, |_, _, _| {})
}

/// [`solve`], calling `observer(k, y_k, x_{k+1})` after every iteration.
pub fn solve_observed<A, F>(
    g: &A,
    p: &ProblemParams,
    cfg: &SolverConfig,
    mut observer: F,
) -> Result<Solution>
where
    A: Adjacency + ?Sized,
    F: FnMut(usize, &SparseVector, &SparseVector),
{
    cfg.validate()?;
    p.check_seed(g.node_count())?;
    let beta = cfg.momentum_for(p.alpha);
    let volume = |v: &SparseVector| -> u64 { v.indices().map(|i| g.degree(i) as u64).sum() };

    let mut x_prev = SparseVector::zeros();
    let mut x = SparseVector::zeros();
    let mut records = Vec::new();
    let mut snapshots = Vec::new();
    let mut total_work = 0u64;
    let mut k = 0usize;
    let (final_residual, converged) = loop {
        let t = prox_grad_step(g, p, &x, 1.0);
        let residual = x.dist_inf(&t);
        if !residual.is_finite() {
            return Err(Error::NumericalDivergence { iteration: k });
        }
        if residual <= cfg.epsilon {
            break (residual, true);
        }
        if k == cfg.max_iter {
            break (residual, false);
        }

        let y = if beta == 0.0 {
            x.clone()
        } else {
            extrapolate(&x, &x_prev, beta)
        };
        let x_next = if beta == 0.0 && cfg.step == 1.0 {
            t
        } else {
            prox_grad_step(g, p, &y, cfg.step)
        };
        if !x_next.all_finite() || !y.all_finite() {
            return Err(Error::NumericalDivergence { iteration: k });
        }

        let vol_supp_y = volume(&y);
        let vol_supp_x_next = volume(&x_next);
        let work = vol_supp_y + vol_supp_x_next;
        total_work += work;
        records.push(IterationRecord {
            k,
            vol_supp_y,
            vol_supp_x_next,
            work,
            residual,
        });
        observer(k, &y, &x_next);
        if cfg.trace_level == TraceLevel::Full {
            snapshots.push(IterateSnapshot {
                y,
                x_next: x_next.clone(),
            });
        }
        x_prev = std::mem::replace(&mut x, x_next);
        k += 1;
    };

    let support = x.support();
    Ok(Solution {
        x,
        support,
        trace: SolveTrace {
            level: cfg.trace_level,
            records,
            snapshots,
            iterations: k,
            total_work,
            final_residual,
            converged,
        },
    })
}

/// `x + β(x − x_prev)`, entry by entry; exact cancellations leave the support.
fn extrapolate(x: &SparseVector, x_prev: &SparseVector, beta: f64) -> SparseVector {
    let diff = x.sub(x_prev);
    x.lincomb(1.0, &diff, beta)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopePoint {
    pub k: usize,
    pub gap: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateEnvelope {
    pub initial_gap: f64,
    pub points: Vec<EnvelopePoint>,
    /// Iterations whose gap exceeds the bound by more than [`ENVELOPE_SLACK`].
    pub violations: Vec<usize>,
}

pub const ENVELOPE_SLACK: f64 = 1e-9;

/// Measured optimality gap `F(x_k) − F⋆` next to `2Δ₀(1 − √α)^k`, with
/// `Δ₀ = F(0) − F⋆ = −F⋆`.
pub fn rate_envelope<A: Adjacency + ?Sized>(
    g: &A,
    p: &ProblemParams,
    trace: &SolveTrace,
    f_star: f64,
) -> Result<RateEnvelope> {
    let iterates = trace.iterates()?;
    let initial_gap = -f_star;
    let q = 1.0 - p.alpha.sqrt();
    let mut points = Vec::with_capacity(iterates.len());
    let mut violations = Vec::new();
    for (k, x) in iterates.iter().enumerate() {
        let gap = objective_value(g, p, x) - f_star;
        let bound = 2.0 * initial_gap * q.powi(k as i32);
        if gap > bound + ENVELOPE_SLACK {
            violations.push(k);
        }
        points.push(EnvelopePoint { k, gap, bound });
    }
    Ok(RateEnvelope {
        initial_gap,
        points,
        violations,
    })
}
