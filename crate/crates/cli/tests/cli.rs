use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rppr_core::sweep::format_g;
use rppr_core::synth::{generate, SynthParams};
use rppr_core::{parse_snap_edgelist, solve, Method, ProblemParams, SolverConfig};

fn rppr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rppr")).args(args).output().expect("spawn rppr")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn summary(o: &Output) -> HashMap<String, String> {
    stdout(o)
        .lines()
        .filter_map(|l| l.split_once(": "))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn star_file(dir: &Path, m: usize) -> PathBuf {
    let text: String = (1..=m).map(|l| format!("0\t{l}\n")).collect();
    write(dir, "star.txt", &text)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_defaults_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.txt");
    let o = rppr(&["gen", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let info = summary(&o);
    let (g, part) = generate(&SynthParams::default()).unwrap();
    assert_eq!(info["edges"], g.edge_count().to_string());
    let parsed = parse_snap_edgelist(fs::read(&out).unwrap().as_slice()).unwrap();
    assert_eq!(parsed.graph, g);
    assert_eq!(parsed.graph.degrees().iter().sum::<usize>(), 2 * g.edge_count());
    let sidecar = fs::read_to_string(dir.path().join("g.txt.partition.csv")).unwrap();
    let mut lines = sidecar.lines();
    assert_eq!(lines.next(), Some("node,region"));
    assert_eq!(lines.clone().count(), g.n());
    assert_eq!(lines.filter(|l| l.ends_with(",core")).count(), part.core.len());
}

#[test]
fn gen_rejects_fanout_beyond_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.txt");
    let o = rppr(&["gen", "--out", s(&out), "--boundary-size", "10", "--c-bnd", "20"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("c_bnd"));
}

#[test]
fn solve_star() {
    let dir = tempfile::tempdir().unwrap();
    let g = star_file(dir.path(), 4);
    let o = rppr(&["solve", s(&g), "--alpha", "0.5", "--rho", "0.1", "--seed-node", "0", "--eps", "1e-12"]);
    assert!(o.status.success());
    let info = summary(&o);
    assert_eq!(info["support_size"], "1");
    assert!((info["seed_value"].parse::<f64>().unwrap() - 0.2).abs() < 1e-10);

    let o = rppr(&["solve", s(&g), "--alpha", "0.5", "--rho", "0.3"]);
    assert!(o.status.success());
    let info = summary(&o);
    assert_eq!(info["support_size"], "0");
    assert_eq!(info["total_work"], "0");
}

#[test]
fn solve_methods_agree_and_match_library() {
    let dir = tempfile::tempdir().unwrap();
    let (g, _) = generate(&SynthParams {
        core_size: 10,
        boundary_size: 30,
        exterior_size: 40,
        c_bnd: 3,
        deg_b: 4,
        deg_ext: 6,
        ..Default::default()
    })
    .unwrap();
    let text: String = g.edges().map(|(u, v)| format!("{u} {v}\n")).collect();
    let path = write(dir.path(), "g.txt", &text);
    let mut values = Vec::new();
    for method in ["ista", "fista"] {
        let out = dir.path().join(format!("{method}.csv"));
        let o = rppr(&["solve", s(&path), "--alpha", "0.3", "--rho", "0.01", "--eps", "1e-10", "--method", method, "--output", s(&out), "--trace", s(&dir.path().join("t.csv"))]);
        assert!(o.status.success());
        let info = summary(&o);
        let m: Method = method.parse().unwrap();
        let lib = solve(&g, &ProblemParams::new(0.3, 0.01, 0).unwrap(), &SolverConfig::new(m, 1e-10)).unwrap();
        assert_eq!(info["iterations"], lib.trace.iterations.to_string());
        assert_eq!(info["total_work"], lib.trace.total_work.to_string());
        assert_eq!(info["residual"], format_g(lib.trace.final_residual));
        let x: HashMap<u64, f64> = fs::read_to_string(&out)
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| {
                let (a, b) = l.split_once(',').unwrap();
                (a.parse().unwrap(), b.parse().unwrap())
            })
            .collect();
        values.push(x);
        let trace = fs::read_to_string(dir.path().join("t.csv")).unwrap();
        assert_eq!(trace.lines().count(), lib.trace.iterations + 1);
    }
    let keys: std::collections::BTreeSet<_> = values[0].keys().chain(values[1].keys()).collect();
    for k in keys {
        let a = values[0].get(k).copied().unwrap_or(0.0);
        let b = values[1].get(k).copied().unwrap_or(0.0);
        assert!((a - b).abs() <= 1e-6);
    }
}

#[test]
fn solve_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let g = star_file(dir.path(), 4);
    let o = rppr(&["solve", s(&g), "--alpha", "0.5", "--rho", "0.1", "--max-iter", "1", "--eps", "1e-14"]);
    assert_eq!(o.status.code(), Some(3));
    let o = rppr(&["solve", s(&dir.path().join("missing.txt"))]);
    assert_eq!(o.status.code(), Some(2));
    let o = rppr(&["solve", s(&g), "--seed-node", "99"]);
    assert_eq!(o.status.code(), Some(2));
    let bad = write(dir.path(), "bad.txt", "0 1\n2\n");
    let o = rppr(&["solve", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn check_alpha_sweep_instance_holds() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a.txt");
    let o = rppr(&[
        "gen", "--out", s(&out), "--alpha-sweep", "--core-size", "10", "--boundary-size", "30",
        "--c-bnd", "3", "--deg-b", "28", "--alpha-min", "0.3", "--rho", "0.01", "--m-ext-edges", "30",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let part = dir.path().join("a.txt.partition.csv");
    let o = rppr(&["check", s(&out), "--partition", s(&part), "--alpha", "0.3", "--rho", "0.01"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(summary(&o)["holds"], "true");
}

#[test]
fn check_path_violation_and_empty_core() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "path.txt", "0 1\n1 2\n2 3\n");
    let core = write(dir.path(), "core.txt", "# S\n1\n");
    let o = rppr(&["check", s(&g), "--core-set", s(&core), "--alpha", "0.5", "--rho", "1e-4"]);
    assert_eq!(o.status.code(), Some(1));
    let info = summary(&o);
    assert_eq!(info["holds"], "false");
    assert_eq!(info["worst_node"], "3");

    let empty = write(dir.path(), "empty.txt", "# nothing\n");
    let o = rppr(&["check", s(&g), "--core-set", s(&empty)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));

    let o = rppr(&["check", s(&g), "--core-set", s(&core), "--partition", s(&core)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_epsilon_monotone_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "eps.cfg",
        "# epsilon sweep\naxis = epsilon\ngrid = log:1e-12:1e-1:8\ncore_size = 20\nboundary_size = 60\nexterior_size = 100\nc_bnd = 5\ndeg_b = 10\ndeg_ext = 20\nrho = 1e-3\n",
    );
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let summary_path = dir.path().join("summary.csv");
    let o = rppr(&["sweep", s(&spec), "--out", s(&a), "--summary", s(&summary_path)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(rppr(&["sweep", s(&spec), "--out", s(&b)]).status.success());
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    assert!(fs::read_to_string(&summary_path).unwrap().starts_with("axis,value,method,runs"));

    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), rppr_core::sweep::CSV_HEADER);
    let mut work: HashMap<String, Vec<(f64, u64)>> = HashMap::new();
    for l in lines {
        let f: Vec<&str> = l.split(',').collect();
        work.entry(f[2].to_string()).or_default().push((f[1].parse().unwrap(), f[5].parse().unwrap()));
    }
    assert_eq!(work.len(), 2);
    for rows in work.values() {
        assert_eq!(rows.len(), 8);
        assert!(rows.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 >= w[1].1));
    }
}

#[test]
fn sweep_spec_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "bad.cfg", "axis = rho\ngrid = log:0:1:3\n");
    let o = rppr(&["sweep", s(&spec), "--out", s(&dir.path().join("o.csv"))]);
    assert_eq!(o.status.code(), Some(2));
    let spec = write(dir.path(), "bad2.cfg", "axis = rho\ngrid = 0.1\nwhat = 3\n");
    let o = rppr(&["sweep", s(&spec), "--out", s(&dir.path().join("o.csv"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn analytic_comparisons() {
    let o = rppr(&["analytic", "--family", "star", "--m", "4", "--alpha", "0.5", "--rho", "0.1"]);
    assert!(o.status.success());
    assert!(summary(&o)["max_deviation"].parse::<f64>().unwrap() <= 1e-9);

    let rho0 = format!("{:?}", 0.5f64 / 3.5);
    let o = rppr(&["analytic", "--family", "path", "--m", "5", "--alpha", "0.5", "--rho", &rho0]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let gamma = out.lines().find(|l| l.starts_with("gamma[1],")).unwrap();
    let solver_gamma: f64 = gamma.split(',').nth(2).unwrap().parse().unwrap();
    assert!(solver_gamma.abs() <= 1e-9);

    let below = format!("{}", 0.9 * 0.5 / 3.5);
    let o = rppr(&["analytic", "--family", "path", "--m", "5", "--alpha", "0.5", "--rho", &below]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("valid interval"));
}
