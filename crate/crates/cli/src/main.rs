//! `rppr`: generate instances, solve, check no-percolation, run sweeps and
//! compare against the analytic instances.
//!
//! Exit codes: 0 success, 1 condition violated (or a sweep run errored),
//! 2 usage or input error, 3 iteration cap reached.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rppr_core::diagnostics::{check_no_percolation, slacks};
use rppr_core::graph::IngestedGraph;
use rppr_core::solver::DEFAULT_MAX_ITER;
use rppr_core::sweep::{aggregate, format_g, run_sweep, write_csv, write_summary_csv, SweepSpec};
use rppr_core::synth::{
    generate, generate_alpha_sweep_instance, AlphaSweepParams, AnalyticFamily, AnalyticInstance,
    RegionPartition, SynthParams,
};
use rppr_core::{
    parse_snap_edgelist, solve, Adjacency, Error, Graph, Method, NodeSet, ProblemParams,
    SolverConfig,
};

const EXIT_VIOLATED: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_CAP: u8 = 3;

#[derive(Parser)]
#[command(name = "rppr", version, about = "Local l1-regularized PageRank solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a core-boundary-exterior graph and its partition sidecar.
    Gen(GenArgs),
    /// Solve one problem on an edge-list graph.
    Solve(SolveArgs),
    /// Evaluate the no-percolation condition for a core set.
    Check(CheckArgs),
    /// Run a sweep spec and write the CSV.
    Sweep(SweepArgs),
    /// Compare the star/path closed forms with the solver.
    Analytic(AnalyticArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Output edge list (SNAP format).
    #[arg(long)]
    out: PathBuf,
    /// Partition sidecar; defaults to `<out>.partition.csv`.
    #[arg(long)]
    partition: Option<PathBuf>,
    #[arg(long, default_value_t = 60)]
    core_size: usize,
    #[arg(long, default_value_t = 600)]
    boundary_size: usize,
    #[arg(long, default_value_t = 1000)]
    exterior_size: usize,
    #[arg(long, default_value_t = 20)]
    c_bnd: usize,
    #[arg(long, default_value_t = 82)]
    deg_b: usize,
    #[arg(long, default_value_t = 998)]
    deg_ext: usize,
    #[arg(long, default_value_t = 1.0)]
    core_density: f64,
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,
    /// Build the alpha-sweep family instead (clique exterior sized for no-percolation).
    #[arg(long)]
    alpha_sweep: bool,
    #[arg(long, default_value_t = 1e-3, requires = "alpha_sweep")]
    alpha_min: f64,
    #[arg(long, default_value_t = 1e-4, requires = "alpha_sweep")]
    rho: f64,
    #[arg(long, requires = "alpha_sweep")]
    m_ext_edges: Option<usize>,
    #[arg(long, default_value_t = 4000, requires = "alpha_sweep")]
    max_exterior: usize,
}

#[derive(Args)]
struct SolveArgs {
    graph: PathBuf,
    #[arg(long, default_value_t = 0.2)]
    alpha: f64,
    #[arg(long, default_value_t = 1e-4)]
    rho: f64,
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
    #[arg(long, default_value = "fista")]
    method: Method,
    /// Seed node id as written in the edge list.
    #[arg(long, default_value_t = 0)]
    seed_node: u64,
    #[arg(long, default_value_t = 1.0)]
    reg_factor: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    max_iter: usize,
    /// Per-iteration trace CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Solution CSV (`node,value`).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    graph: PathBuf,
    /// Node ids of S, separated by whitespace or commas; `#` starts a comment.
    #[arg(long, conflicts_with = "partition", required_unless_present = "partition")]
    core_set: Option<PathBuf>,
    /// Partition sidecar; S is the `core` region.
    #[arg(long)]
    partition: Option<PathBuf>,
    #[arg(long, default_value_t = 0.2)]
    alpha: f64,
    #[arg(long, default_value_t = 1e-4)]
    rho: f64,
}

#[derive(Args)]
struct SweepArgs {
    spec: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Per-point mean and interquartile summary CSV.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyticArgs {
    #[arg(long)]
    family: AnalyticFamily,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    rho: f64,
    #[arg(long, default_value_t = 1e-12)]
    eps: f64,
    #[arg(long, default_value = "ista")]
    method: Method,
}

enum Failure {
    Input(String),
    Code(u8),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Check(a) => cmd_check(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Analytic(a) => cmd_analytic(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Code(c)) => ExitCode::from(c),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

fn read_graph(path: &Path) -> Result<IngestedGraph, Failure> {
    let file = File::open(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    parse_snap_edgelist(BufReader::new(file)).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn partition_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".partition.csv");
    PathBuf::from(s)
}

fn write_edge_list(g: &Graph, path: &Path) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# Undirected graph")?;
    writeln!(w, "# Nodes: {} Edges: {}", g.n(), g.edge_count())?;
    writeln!(w, "# FromNodeId\tToNodeId")?;
    for (u, v) in g.edges() {
        writeln!(w, "{u}\t{v}")?;
    }
    w.flush()
}

fn write_partition(part: &RegionPartition, path: &Path) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "node,region")?;
    for i in 0..part.node_count() {
        let region = part.region_of(i).expect("partition covers every node");
        writeln!(w, "{i},{}", region.name())?;
    }
    w.flush()
}

fn cmd_gen(a: GenArgs) -> CmdResult {
    let base = SynthParams {
        core_size: a.core_size,
        boundary_size: a.boundary_size,
        exterior_size: a.exterior_size,
        c_bnd: a.c_bnd,
        deg_b: a.deg_b,
        deg_ext: a.deg_ext,
        core_density: a.core_density,
        rng_seed: a.rng_seed,
    };
    let (g, part) = if a.alpha_sweep {
        generate_alpha_sweep_instance(&AlphaSweepParams {
            m_ext_edges: a.m_ext_edges.unwrap_or(base.boundary_size),
            base,
            alpha_min: a.alpha_min,
            rho: a.rho,
            max_exterior: a.max_exterior,
        })?
    } else {
        generate(&base)?
    };
    write_edge_list(&g, &a.out)?;
    let sidecar = a.partition.unwrap_or_else(|| partition_path(&a.out));
    write_partition(&part, &sidecar)?;
    println!("nodes: {}", g.n());
    println!("edges: {}", g.edge_count());
    println!("core: {}", part.core.len());
    println!("boundary: {}", part.boundary.len());
    println!("exterior: {}", part.exterior.len());
    println!("partition: {}", sidecar.display());
    Ok(())
}

fn cmd_solve(a: SolveArgs) -> CmdResult {
    let ing = read_graph(&a.graph)?;
    let seed = ing
        .remap
        .compact_index(a.seed_node)
        .ok_or_else(|| Failure::Input(format!("seed node {} is not in the graph", a.seed_node)))?;
    let p = ProblemParams::with_reg_factor(a.alpha, a.rho, seed, a.reg_factor)?;
    let mut cfg = SolverConfig::new(a.method, a.eps).with_max_iter(a.max_iter);
    cfg.trace_level = rppr_core::TraceLevel::Summary;
    let sol = solve(&ing.graph, &p, &cfg)?;
    let g = &ing.graph;
    let t = &sol.trace;
    println!("method: {}", a.method.name());
    println!("iterations: {}", t.iterations);
    println!("total_work: {}", t.total_work);
    println!("residual: {}", format_g(t.final_residual));
    println!("converged: {}", t.converged);
    println!("support_size: {}", sol.support.len());
    println!("support_volume: {}", g.volume(&sol.support)?);
    println!("seed_value: {}", format_g(sol.x.get(seed)));
    if let Some(path) = &a.trace {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "k,vol_supp_y,vol_supp_x_next,work,residual")?;
        for r in &t.records {
            writeln!(w, "{},{},{},{},{}", r.k, r.vol_supp_y, r.vol_supp_x_next, r.work, format_g(r.residual))?;
        }
        w.flush()?;
    }
    if let Some(path) = &a.output {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "node,value")?;
        for (i, v) in sol.x.iter() {
            writeln!(w, "{},{}", ing.remap.original_id(i), format_g(v))?;
        }
        w.flush()?;
    }
    if t.converged {
        Ok(())
    } else {
        eprintln!("iteration cap {} reached", a.max_iter);
        Err(Failure::Code(EXIT_CAP))
    }
}

fn read_core_ids(path: &Path) -> Result<Vec<u64>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let mut ids = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("");
        for tok in body.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
            ids.push(tok.parse().map_err(|_| {
                Failure::Input(format!("{}:{}: bad node id '{tok}'", path.display(), n + 1))
            })?);
        }
    }
    Ok(ids)
}

fn read_partition_core(path: &Path) -> Result<Vec<u64>, Failure> {
    let file = File::open(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let mut ids = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if n == 0 && line.trim() == "node,region" {
            continue;
        }
        let Some((node, region)) = line.split_once(',') else {
            return Err(Failure::Input(format!("{}:{}: expected node,region", path.display(), n + 1)));
        };
        if region.trim() == "core" {
            ids.push(node.trim().parse().map_err(|_| {
                Failure::Input(format!("{}:{}: bad node id '{node}'", path.display(), n + 1))
            })?);
        }
    }
    Ok(ids)
}

fn cmd_check(a: CheckArgs) -> CmdResult {
    let ing = read_graph(&a.graph)?;
    let ids = match (&a.core_set, &a.partition) {
        (Some(p), _) => read_core_ids(p)?,
        (None, Some(p)) => read_partition_core(p)?,
        (None, None) => unreachable!("clap requires one of the two"),
    };
    let s: NodeSet = ids
        .iter()
        .map(|&id| {
            ing.remap
                .compact_index(id)
                .ok_or_else(|| Failure::Input(format!("core node {id} is not in the graph")))
        })
        .collect::<Result<_, _>>()?;
    if s.is_empty() {
        eprintln!("warning: empty core set; the boundary is empty and the condition holds vacuously");
    }
    let p = ProblemParams::new(a.alpha, a.rho, 0)?;
    let r = check_no_percolation(&ing.graph, &p, &s)?;
    println!("holds: {}", r.holds);
    println!("core_size: {}", s.len());
    println!("boundary_size: {}", r.boundary.len());
    println!("exterior_size: {}", r.exterior_size);
    match r.min_boundary_degree {
        Some(d) => println!("min_boundary_degree: {d}"),
        None => println!("min_boundary_degree: none"),
    }
    match r.worst_node {
        Some(i) => {
            println!("worst_node: {}", ing.remap.original_id(i));
            println!("worst_ratio: {}", format_g(r.worst_ratio));
        }
        None => println!("worst_node: none"),
    }
    if r.holds {
        Ok(())
    } else {
        Err(Failure::Code(EXIT_VIOLATED))
    }
}

fn cmd_sweep(a: SweepArgs) -> CmdResult {
    let spec = SweepSpec::from_file(&a.spec)?;
    let rows = run_sweep(&spec)?;
    write_csv(&rows, BufWriter::new(File::create(&a.out)?))?;
    if let Some(path) = &a.summary {
        write_summary_csv(&aggregate(&rows), BufWriter::new(File::create(path)?))?;
    }
    let errored: Vec<_> = rows.iter().filter(|r| r.error.is_some()).collect();
    let unconverged = rows.iter().filter(|r| !r.converged).count();
    println!("rows: {}", rows.len());
    println!("not_converged: {unconverged}");
    println!("errored: {}", errored.len());
    for r in &errored {
        eprintln!(
            "run error at {}={} method={} seed={}: {}",
            r.axis,
            format_g(r.value),
            r.method.name(),
            r.seed,
            r.error.as_deref().unwrap_or("")
        );
    }
    if errored.is_empty() {
        Ok(())
    } else {
        Err(Failure::Code(EXIT_VIOLATED))
    }
}

fn cmd_analytic(a: AnalyticArgs) -> CmdResult {
    let inst = AnalyticInstance::new(a.family, a.m)?;
    let (lo, hi) = inst.validity_interval(a.alpha);
    if let Err(e) = inst.check_rho(a.alpha, a.rho) {
        return Err(Failure::Input(format!("{e}; valid interval is [{}, {})", format_g(lo), format_g(hi))));
    }
    let p = inst.params(a.alpha, a.rho)?;
    let sol = solve(&inst.graph, &p, &SolverConfig::new(a.method, a.eps))?;
    let report = slacks(&inst.graph, &p, &sol.x)?;
    let closed_x = inst.seed_value(a.alpha, a.rho)?;
    println!("family: {:?}", a.family);
    println!("interval: [{}, {})", format_g(lo), format_g(hi));
    println!("quantity,closed_form,solver,deviation");
    let mut worst: f64 = 0.0;
    let mut row = |name: String, closed: f64, got: f64| {
        let dev = (closed - got).abs();
        worst = worst.max(dev);
        println!("{name},{},{},{}", format_g(closed), format_g(got), format_g(dev));
    };
    row(format!("x[{}]", inst.seed), closed_x, sol.x.get(inst.seed));
    for i in 0..inst.graph.n() {
        if i != inst.seed {
            row(format!("x[{i}]"), 0.0, sol.x.get(i));
        }
    }
    for (node, gamma) in inst.slacks(a.alpha, a.rho)? {
        row(format!("gamma[{node}]"), gamma, report.slack(node).unwrap_or(f64::NAN));
    }
    println!("max_deviation: {}", format_g(worst));
    println!("seed_degree: {}", inst.graph.degree(inst.seed));
    Ok(())
}
