use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use graphex::cdegree::{
    count_common, distribution_csv, empirical_distribution, fit_tail_index, FitOptions, Restriction,
};
use graphex::experiment::{run_experiment, ExperimentConfig};
use graphex::model::{limit_omega, scaling_b};
use graphex::numerics::{dispersion_index, mean_and_se, poisson_gof};
use graphex::simulator::export::write_atomic;
use graphex::simulator::{
    choose_eta_max, export_graph, read_graph, sample_graph_blocked, sample_planted_pairs, sample_points, GraphMetadata,
};
use graphex::theory::bound_interval;
use graphex::{Error, GraphexSpec, MarginalEvaluator, Result, SpecConfig};

/// Simulate graphex graphs, count common connections and fit tail indices.
#[derive(Parser)]
#[command(name = "graphex", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Marginals, limit functions and tail-index bounds.
    #[command(subcommand)]
    Theory(TheoryCommand),
    /// Sample one graph and write `graph.edges`, `graph.vertices`, `graph.json`.
    Simulate(SimulateArgs),
    /// Common-connection histogram of a simulated graph.
    Cdegree(CdegreeArgs),
    /// Tail-index fit of a `k,prob` distribution file.
    Fit(FitArgs),
    /// Statistical checks.
    #[command(subcommand)]
    Verify(VerifyCommand),
    /// Replicated simulate/count/fit study from a JSON config.
    Experiment(ExperimentArgs),
}

#[derive(Subcommand)]
enum TheoryCommand {
    /// Print mu1, mu2, lambda and b(t) for a spec.
    Marginals(MarginalsArgs),
    /// Print the tail-index bound interval.
    Bounds(BoundsArgs),
}

#[derive(Args)]
struct MarginalsArgs {
    /// `family:alpha`, e.g. `sum-power-shifted:3`.
    #[arg(long)]
    spec: String,
    /// `x` or `x,y`.
    #[arg(long, default_value = "1")]
    at: String,
    /// Horizon for b(t).
    #[arg(long)]
    t: Option<f64>,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    separable: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    spec: String,
    #[arg(long)]
    t: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Expected number of edges lost to η truncation.
    #[arg(long, default_value_t = 0.1)]
    budget: f64,
}

#[derive(Args)]
struct CdegreeArgs {
    /// Directory written by `simulate`.
    #[arg(long)]
    graph: PathBuf,
    /// Restrict to latent values above b(t)·epsilon.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Output directory (defaults to the graph directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    dist: PathBuf,
    #[arg(long, default_value_t = 0.995)]
    r2: f64,
    #[arg(long, default_value_t = 5)]
    min_points: usize,
    #[arg(long)]
    log_binning: bool,
    /// Write the fit JSON here as well as to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum VerifyCommand {
    /// Goodness of fit of planted-pair common neighbours to Poisson(t·mu2(x,y)).
    Poisson(PoissonArgs),
}

#[derive(Args)]
struct PoissonArgs {
    #[arg(long)]
    spec: String,
    #[arg(long)]
    t: f64,
    #[arg(long)]
    x: f64,
    #[arg(long)]
    y: f64,
    #[arg(long, default_value_t = 100_000)]
    draws: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e6)]
    eta_max: f64,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `threads` in the config.
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides `outputs` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    keep_dists: bool,
}

fn build_spec(s: &str) -> Result<GraphexSpec> {
    SpecConfig::parse(s)?.build()
}

fn parse_at(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad coordinate `{v}`")))
        })
        .collect()
}

fn print_json(v: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn marginals(a: &MarginalsArgs) -> Result<()> {
    let spec = build_spec(&a.spec)?;
    let at = parse_at(&a.at)?;
    let (x, y) = match at[..] {
        [x] => (x, None),
        [x, y] => (x, Some(y)),
        _ => return Err(Error::Config("--at takes one or two coordinates".into())),
    };
    let ev = MarginalEvaluator::new(spec.clone());
    let mut out = json!({ "spec": spec.label(), "x": x, "mu1_x": ev.mu1(x)? });
    if let Some(y) = y {
        out["y"] = json!(y);
        out["mu1_y"] = json!(ev.mu1(y)?);
        out["mu2"] = json!(ev.mu2(x, y)?);
    }
    match limit_omega(&spec) {
        Ok(lf) => {
            out["gamma"] = json!(lf.gamma());
            if x > 0.0 {
                let y = y.unwrap_or(x);
                if y > 0.0 {
                    out["lambda"] = json!(lf.lambda(x, y)?);
                }
            }
        }
        Err(e) => eprintln!("limit functions unavailable: {e}"),
    }
    if let Some(t) = a.t {
        out["t"] = json!(t);
        out["b_t"] = json!(scaling_b(&spec, t)?);
    }
    print_json(&out)
}

fn bounds(a: &BoundsArgs) -> Result<()> {
    let b = bound_interval(a.alpha, a.separable)?;
    println!("[{:?}, {:?}]", b.lower, b.upper);
    eprintln!("{}", serde_json::to_string(&b)?);
    Ok(())
}

fn simulate(a: &SimulateArgs) -> Result<()> {
    let spec = build_spec(&a.spec)?;
    let report = choose_eta_max(&MarginalEvaluator::new(spec.clone()), a.t, a.budget)?;
    if report.capped {
        eprintln!("warning: {}", report.note.as_deref().unwrap_or("eta_max capped"));
    }
    let pts = sample_points(a.t, report.eta_max, a.seed)?;
    let g = sample_graph_blocked(&spec, &pts, a.seed.wrapping_add(1))?.with_truncation(report);
    let meta = GraphMetadata::new(&g, spec.config(), spec.label());
    export_graph(&g, &meta, &a.out, "graph")?;
    eprintln!("{} edges, {} non-isolated vertices", g.edge_count(), g.vertex_count());
    Ok(())
}

fn cdegree(a: &CdegreeArgs) -> Result<()> {
    let (g, meta) = read_graph(&a.graph, "graph")?;
    let restriction = match a.epsilon {
        Some(epsilon) => {
            let cfg = meta
                .spec
                .ok_or_else(|| Error::Config("graph metadata has no spec; cannot compute b(t)".into()))?;
            Some(Restriction {
                epsilon,
                b_t: scaling_b(&cfg.build()?, g.t)?,
            })
        }
        None => None,
    };
    let hist = count_common(&g, restriction)?;
    let out = a.out.as_deref().unwrap_or(&a.graph);
    write_atomic(&out.join("histogram.csv"), hist.to_csv().as_bytes())?;
    let dist = empirical_distribution(&hist)?;
    write_atomic(&out.join("distribution.csv"), distribution_csv(&dist).as_bytes())?;
    eprintln!("{} pairs with a common neighbour", hist.pairs_positive);
    Ok(())
}

fn read_distribution(path: &Path) -> Result<Vec<(u64, f64)>> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (n == 0 && line.starts_with('k')) {
            continue;
        }
        let bad = || Error::Config(format!("{}:{}: expected `k,prob`", path.display(), n + 1));
        let (k, p) = line.split_once(',').ok_or_else(bad)?;
        out.push((
            k.trim().parse().map_err(|_| bad())?,
            p.trim().parse().map_err(|_| bad())?,
        ));
    }
    Ok(out)
}

fn fit(a: &FitArgs) -> Result<()> {
    let dist = read_distribution(&a.dist)?;
    let opts = FitOptions {
        r2_target: a.r2,
        min_points: a.min_points,
        log_binning: a.log_binning,
    };
    let f = fit_tail_index(&dist, opts)?;
    let text = serde_json::to_string_pretty(&f)?;
    if let Some(p) = &a.out {
        write_atomic(p, text.as_bytes())?;
    }
    println!("{text}");
    Ok(())
}

fn verify_poisson(a: &PoissonArgs) -> Result<()> {
    let spec = build_spec(&a.spec)?;
    let rate = a.t * MarginalEvaluator::new(spec.clone()).mu2(a.x, a.y)?;
    let draws = sample_planted_pairs(&spec, a.t, a.eta_max, a.x, a.y, a.seed, a.draws)?;
    let gof = poisson_gof(&draws, rate)?;
    let as_f: Vec<f64> = draws.iter().map(|&d| d as f64).collect();
    let (mean, se) = mean_and_se(&as_f);
    let dispersion = dispersion_index(&as_f).ok();
    print_json(&json!({
        "spec": spec.label(),
        "t": a.t, "x": a.x, "y": a.y,
        "draws": a.draws,
        "expected_rate": rate,
        "mean": mean,
        "standard_error": se,
        "dispersion_index": dispersion,
        "gof": gof,
        "pass": gof.p_value > 0.01,
    }))
}

fn experiment(a: &ExperimentArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::from_json(&fs::read_to_string(&a.config)?)?;
    if a.threads.is_some() {
        cfg.threads = a.threads;
    }
    if a.out.is_some() {
        cfg.outputs = a.out.clone();
    }
    cfg.keep_dists |= a.keep_dists;
    let report = run_experiment(&cfg)?;
    eprint!("{}", report.summary_table());
    if cfg.outputs.is_none() {
        println!("{}", serde_json::to_string_pretty(&report)?);
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Theory(TheoryCommand::Marginals(a)) => marginals(&a),
        Command::Theory(TheoryCommand::Bounds(a)) => bounds(&a),
        Command::Simulate(a) => simulate(&a),
        Command::Cdegree(a) => cdegree(&a),
        Command::Fit(a) => fit(&a),
        Command::Verify(VerifyCommand::Poisson(a)) => verify_poisson(&a),
        Command::Experiment(a) => experiment(&a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
