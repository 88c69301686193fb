//! `heatlab <subcommand> [flags]`
//!
//! Exit codes: 0 when every recorded check passes, 2 when a check fails,
//! 1 for usage, configuration, IO and solver errors.

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use heatlab_core::eigenfunction::{
    check_growth_bounds_with, check_one_step_harnack, construct_positive_eigenfunction_with,
    growth_profile, verify_zero_propagation, Eigenfunction, Positivity, DEFAULT_CONSTRUCTION_TOL,
    DEFAULT_RATE_SLACK,
};
use heatlab_core::graph::{
    certify_bounded_geometry, decompose_balls, generate_family, BallDecomposition, Family,
    GeometryCertificate, WeightedGraph,
};
use heatlab_core::harnack::{audit_harnack, SampleSpec, DEFAULT_SAMPLE_COUNT};
use heatlab_core::heat::{
    heat_residual, solve_heat_spectral, synthesize_from_eigenvalues, AncientSolution, HeatState,
    ImplicitHeatStepper,
};
use heatlab_core::laplacian::{check_maximum_principle, VertexFunction};
use heatlab_core::liouville::{
    default_time_grid, dichotomy_sweep, SweepSpec, DEFAULT_RATE_TOL, DEFAULT_T_STAR,
    DEFAULT_VERDICT_TOL,
};
use heatlab_core::spectrum::{estimate_lambda1_exhaustion, DEFAULT_EXHAUSTION_TOL, DENSE_LIMIT};
use heatlab_core::Error;

use crate::config::ExperimentConfig;
use crate::error::{LabError, Result};
use crate::graph_file::{read_graph_file, save_graph};
use crate::report::{emit_report, fmt17, render_pretty, Artifact, Check, RunReport, Table};

pub const OUT_ENV: &str = "HEATLAB_OUT";
pub const DEFAULT_OUT: &str = "heatlab-out";
pub const DEFAULT_RADIUS: usize = 10;
pub const DEFAULT_TAU: f64 = 0.01;
pub const DEFAULT_HEAT_TIME: f64 = 1.0;
pub const DEFAULT_WINDOW: [f64; 2] = [-5.0, -1.0];
pub const DEFAULT_SYNTH_TIMES: [f64; 2] = [-5.0, -1.0];
pub const DEFAULT_TAIL_FRACTION: f64 = 0.5;
/// Relative mass drift allowed per implicit step.
pub const MASS_TOL: f64 = 1e-10;

#[derive(Parser, Debug)]
#[command(name = "heatlab", version, about = "Heat flow, eigenfunctions and Liouville audits on weighted graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a graph, certify its bounded geometry and save it
    Gen(GenArgs),
    /// Dirichlet exhaustion estimate of the bottom of the spectrum
    Lambda1(Lambda1Args),
    /// Positive eigenfunction on a truncation, with zero-propagation check
    Eigfn(EigfnArgs),
    /// Ball maxima growth against the lower and upper ratio bounds
    Growth(GrowthArgs),
    /// Implicit Euler heat flow, cross-checked against the exact solution
    Heat(HeatArgs),
    /// Ancient solution from spectral atoms and its heat-equation residual
    Synth(SynthArgs),
    /// Empirical Harnack constants for an ancient solution
    Harnack(HarnackArgs),
    /// Growth classification and stationarity verdicts over a lambda grid
    Liouville(LiouvilleArgs),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Output directory [default: $HEATLAB_OUT, else ./heatlab-out]
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON file with default values for any flag
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print human-readable tables
    #[arg(long)]
    pretty: bool,
}

#[derive(Args, Debug, Clone)]
struct GraphArgs {
    /// path, cycle, lattice_Z, lattice_Z2 or tree_regular
    #[arg(long)]
    family: Option<String>,
    /// Tree degree
    #[arg(long)]
    degree: Option<usize>,
    /// Ball radius (vertex count for path and cycle; truncation radius for --graph)
    #[arg(long)]
    radius: Option<usize>,
    /// Graph file instead of a family
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Truncation root for --graph
    #[arg(long)]
    root: Option<usize>,
}

impl GraphArgs {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        cfg.family = self.family.clone();
        cfg.degree = self.degree;
        cfg.radius = self.radius;
        cfg.graph = self.graph.clone();
        cfg.root = self.root;
    }
}

#[derive(Args, Debug, Clone)]
struct AtomArgs {
    /// Single eigenvalue
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    /// Several eigenvalues, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    lambdas: Option<Vec<f64>>,
    /// Atom weights matching --lambdas [default: uniform]
    #[arg(long, value_delimiter = ',')]
    weights: Option<Vec<f64>>,
    /// Time horizon t0
    #[arg(long, allow_hyphen_values = true)]
    horizon: Option<f64>,
    /// Construction tolerance
    #[arg(long)]
    tol: Option<f64>,
}

impl AtomArgs {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        cfg.lambda = self.lambda;
        cfg.lambdas = self.lambdas.clone();
        cfg.weights = self.weights.clone();
        cfg.horizon = self.horizon;
        cfg.tol = self.tol;
    }
}

#[derive(Args, Debug)]
struct GenArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    graph: GraphArgs,
}

#[derive(Args, Debug)]
struct Lambda1Args {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    graph: GraphArgs,
    /// Convergence tolerance between the last two radii
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args, Debug)]
struct EigfnArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args, Debug)]
struct GrowthArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    /// Slack on the rate bounds
    #[arg(long)]
    slack: Option<f64>,
    /// Looser bounded-geometry constant
    #[arg(long)]
    c0: Option<f64>,
    /// Tail window starts at this fraction of the radius
    #[arg(long)]
    tail_fraction: Option<f64>,
}

#[derive(Args, Debug)]
struct HeatArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long)]
    tau: Option<f64>,
    /// Final time
    #[arg(long)]
    time: Option<f64>,
    /// delta (at the root), delta:<vertex> or uniform
    #[arg(long)]
    init: Option<String>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    atoms: AtomArgs,
    /// Sample times, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    times: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
struct HarnackArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    atoms: AtomArgs,
    #[arg(long)]
    samples: Option<usize>,
    /// Time window ta,tb
    #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true)]
    window: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct LiouvilleArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    lambdas: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, allow_hyphen_values = true)]
    t_star: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    time_grid: Option<Vec<f64>>,
    #[arg(long)]
    rate_tol: Option<f64>,
    /// Stationarity and harmonicity tolerance
    #[arg(long)]
    tol: Option<f64>,
    /// Slack on the spatial lower bound
    #[arg(long)]
    slack: Option<f64>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Gen(_) => "gen",
            Command::Lambda1(_) => "lambda1",
            Command::Eigfn(_) => "eigfn",
            Command::Growth(_) => "growth",
            Command::Heat(_) => "heat",
            Command::Synth(_) => "synth",
            Command::Harnack(_) => "harnack",
            Command::Liouville(_) => "liouville",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Gen(a) => &a.common,
            Command::Lambda1(a) => &a.common,
            Command::Eigfn(a) => &a.common,
            Command::Growth(a) => &a.common,
            Command::Heat(a) => &a.common,
            Command::Synth(a) => &a.common,
            Command::Harnack(a) => &a.common,
            Command::Liouville(a) => &a.common,
        }
    }

    /// The flags as a config layer.
    fn flags(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig { out: self.common().out.clone(), ..Default::default() };
        match self {
            Command::Gen(a) => a.graph.apply(&mut cfg),
            Command::Lambda1(a) => {
                a.graph.apply(&mut cfg);
                cfg.tol = a.tol;
            }
            Command::Eigfn(a) => {
                a.graph.apply(&mut cfg);
                cfg.lambda = a.lambda;
                cfg.tol = a.tol;
            }
            Command::Growth(a) => {
                a.graph.apply(&mut cfg);
                cfg.lambda = a.lambda;
                cfg.tol = a.tol;
                cfg.slack = a.slack;
                cfg.c0 = a.c0;
                cfg.tail_fraction = a.tail_fraction;
            }
            Command::Heat(a) => {
                a.graph.apply(&mut cfg);
                cfg.tau = a.tau;
                cfg.time = a.time;
                cfg.init = a.init.clone();
            }
            Command::Synth(a) => {
                a.graph.apply(&mut cfg);
                a.atoms.apply(&mut cfg);
                cfg.times = a.times.clone();
            }
            Command::Harnack(a) => {
                a.graph.apply(&mut cfg);
                a.atoms.apply(&mut cfg);
                cfg.samples = a.samples;
                cfg.seed = a.seed;
                cfg.window = match a.window.as_deref() {
                    None => None,
                    Some(&[lo, hi]) => Some([lo, hi]),
                    Some(_) => return Err(LabError::Usage("--window takes two values ta,tb".into())),
                };
            }
            Command::Liouville(a) => {
                a.graph.apply(&mut cfg);
                cfg.lambdas = a.lambdas.clone();
                cfg.seed = a.seed;
                cfg.t_star = a.t_star;
                cfg.time_grid = a.time_grid.clone();
                cfg.rate_tol = a.rate_tol;
                cfg.tol = a.tol;
                cfg.slack = a.slack;
            }
        }
        Ok(cfg)
    }
}

/// Runs the command line `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    let name = cli.command.name();
    match execute(&cli.command) {
        Ok((report, dir)) => {
            if cli.command.common().pretty {
                for artifact in &report.artifacts {
                    if let Artifact::Csv(table) = artifact {
                        println!("{}", render_pretty(table));
                    }
                }
            }
            for check in &report.checks {
                println!("{:<4} {}: {}", if check.passed { "ok" } else { "FAIL" }, check.name, check.detail);
            }
            println!("{name}: {} -> {}", if report.passed { "pass" } else { "checks failed" }, dir.display());
            if report.passed {
                0
            } else {
                2
            }
        }
        Err(e) => {
            eprintln!("heatlab {name}: {e}");
            1
        }
    }
}

fn execute(cmd: &Command) -> Result<(RunReport, PathBuf)> {
    let started = Instant::now();
    let flags = cmd.flags()?;
    let cfg = match &cmd.common().config {
        Some(path) => flags.over(ExperimentConfig::from_file(path)?),
        None => flags,
    };
    cfg.validate()?;
    let dir = cfg
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let mut report = match cmd {
        Command::Gen(_) => cmd_gen(&cfg)?,
        Command::Lambda1(_) => cmd_lambda1(&cfg)?,
        Command::Eigfn(_) => cmd_eigfn(&cfg)?,
        Command::Growth(_) => cmd_growth(&cfg)?,
        Command::Heat(_) => cmd_heat(&cfg)?,
        Command::Synth(_) => cmd_synth(&cfg)?,
        Command::Harnack(_) => cmd_harnack(&cfg)?,
        Command::Liouville(_) => cmd_liouville(&cfg)?,
    };
    report.seconds = started.elapsed().as_secs_f64();
    emit_report(&report, &dir)?;
    Ok((report, dir))
}

struct Setup {
    g: WeightedGraph,
    balls: BallDecomposition,
}

impl Setup {
    fn radius(&self) -> Result<usize> {
        self.g.truncation_radius().ok_or(LabError::Core(Error::RadiusTooSmall))
    }

    fn describe(&self) -> Value {
        json!({
            "family": self.g.family_label(),
            "degree": self.g.degree_param(),
            "vertices": self.g.vertex_count(),
            "edges": self.g.edge_count(),
            "root": self.balls.root,
            "truncation_radius": self.g.truncation_radius(),
        })
    }
}

fn family(cfg: &ExperimentConfig) -> Result<Option<Family>> {
    cfg.family.as_deref().map(str::parse).transpose().map_err(LabError::Core)
}

fn build_graph(cfg: &ExperimentConfig) -> Result<Setup> {
    let g = match (&cfg.graph, family(cfg)?) {
        (Some(_), Some(_)) => return Err(LabError::Usage("give either --family or --graph, not both".into())),
        (None, None) => return Err(LabError::Usage("a graph is required: --family or --graph".into())),
        (None, Some(f)) => generate_family(f, cfg.radius.unwrap_or(DEFAULT_RADIUS), cfg.degree)?,
        (Some(path), None) => {
            let g = read_graph_file(path)?;
            match cfg.radius {
                Some(r) => g.with_truncation(cfg.root.unwrap_or(0), r)?,
                None => g,
            }
        }
    };
    let root = g.truncation().map_or(cfg.root.unwrap_or(0), |t| t.root);
    let balls = decompose_balls(&g, root)?;
    Ok(Setup { g, balls })
}

fn certificate(g: &WeightedGraph, cfg: &ExperimentConfig) -> Result<GeometryCertificate> {
    let cert = certify_bounded_geometry(g);
    Ok(match cfg.c0 {
        Some(c0) => cert.with_override(c0)?,
        None => cert,
    })
}

fn cert_json(cert: &GeometryCertificate) -> Value {
    json!({
        "c0": cert.c0,
        "witness_edge_min": cert.witness_edge_min,
        "witness_edge_max": cert.witness_edge_max,
        "witness_measure_min": cert.witness_measure_min,
        "witness_measure_max": cert.witness_measure_max,
        "witness_degree_max": cert.witness_degree_max,
    })
}

fn cmd_gen(cfg: &ExperimentConfig) -> Result<RunReport> {
    let s = build_graph(cfg)?;
    let cert = certificate(&s.g, cfg)?;
    let mut report = RunReport::new("gen", cfg.to_json());
    let mut body = Vec::new();
    save_graph(&s.g, &mut body).map_err(|e| LabError::io("graph.txt", e))?;
    report.attach(Artifact::Text { file: "graph.txt".into(), body: String::from_utf8(body).expect("ascii") });
    let mut spheres = Table::new("spheres.csv", &["n", "size"]);
    for (n, sphere) in s.balls.spheres.iter().enumerate() {
        spheres.push(vec![n.to_string(), sphere.len().to_string()]);
    }
    report.attach(Artifact::Csv(spheres));
    report.results = json!({ "graph": s.describe(), "geometry": cert_json(&cert) });
    Ok(report)
}

fn cmd_lambda1(cfg: &ExperimentConfig) -> Result<RunReport> {
    let s = build_graph(cfg)?;
    if s.radius()? < 3 {
        return Err(LabError::Config("exhaustion needs a truncation radius of at least 3".into()));
    }
    let tol = cfg.tol.unwrap_or(DEFAULT_EXHAUSTION_TOL);
    let est = estimate_lambda1_exhaustion(&s.g, &s.balls, tol)?;
    let mut report = RunReport::new("lambda1", cfg.to_json());
    let mut table = Table::new("lambda1.csv", &["radius", "dirichlet_bottom"]);
    for &(n, v) in &est.per_radius {
        table.push(vec![n.to_string(), fmt17(v)]);
    }
    report.attach(Artifact::Csv(table));
    let monotone = est.is_monotone(1e-10);
    report.check(Check::new(
        "dirichlet_sequence_nonincreasing",
        monotone,
        format!("{} radii", est.per_radius.len()),
    ));
    report.results = json!({
        "graph": s.describe(),
        "lambda1": est.lambda1,
        "converged": est.converged,
        "tol": est.tol,
        "extrapolated": est.extrapolated,
    });
    Ok(report)
}

fn construct(s: &Setup, lambda: f64, cfg: &ExperimentConfig) -> Result<Eigenfunction> {
    let tol = cfg.tol.unwrap_or(DEFAULT_CONSTRUCTION_TOL);
    Ok(construct_positive_eigenfunction_with(&s.g, &s.balls, lambda, tol)?)
}

fn require_lambda(cfg: &ExperimentConfig, cmd: &str) -> Result<f64> {
    cfg.lambda.ok_or_else(|| LabError::Usage(format!("{cmd} needs --lambda")))
}

fn cmd_eigfn(cfg: &ExperimentConfig) -> Result<RunReport> {
    let s = build_graph(cfg)?;
    let lambda = require_lambda(cfg, "eigfn")?;
    let w = construct(&s, lambda, cfg)?;
    let dichotomy = verify_zero_propagation(&s.g, &w)?;
    let mut report = RunReport::new("eigfn", cfg.to_json());
    let mut table = Table::new("eigenfunction.csv", &["vertex", "distance", "value"]);
    for x in 0..s.g.vertex_count() {
        table.push(vec![x.to_string(), s.balls.distance[x].to_string(), fmt17(w.value(x))]);
    }
    report.attach(Artifact::Csv(table));
    report.check(Check::new(
        "strictly_positive",
        w.positivity == Positivity::StrictlyPositive,
        format!("{:?}", w.positivity),
    ));
    report.check(Check::new("zero_propagation", dichotomy, "zero somewhere implies zero everywhere"));
    report.results = json!({
        "graph": s.describe(),
        "lambda": lambda,
        "residual": w.residual,
        "max_value": w.max_value(),
        "non_constant": w.is_non_constant(),
    });
    Ok(report)
}

fn cmd_growth(cfg: &ExperimentConfig) -> Result<RunReport> {
    let s = build_graph(cfg)?;
    let radius = s.radius()?;
    let lambda = require_lambda(cfg, "growth")?;
    let w = construct(&s, lambda, cfg)?;
    let cert = certificate(&s.g, cfg)?;
    let profile = growth_profile(&w, &s.balls, cfg.tail_fraction.unwrap_or(DEFAULT_TAIL_FRACTION))?;
    let bounds = check_growth_bounds_with(&profile, lambda, &cert, cfg.slack.unwrap_or(DEFAULT_RATE_SLACK))?;
    let one_step = check_one_step_harnack(&s.g, &w, &cert);
    let mut mp_failures = Vec::new();
    for n in 0..radius {
        match check_maximum_principle(&s.g, &s.balls, &w.values, n) {
            Ok(true) => {}
            Ok(false) | Err(Error::NotSubharmonic { .. }) => mp_failures.push(n),
            Err(e) => return Err(e.into()),
        }
    }

    let mut report = RunReport::new("growth", cfg.to_json());
    let mut table = Table::new("growth.csv", &["n", "M_n", "ratio", "lower_bound", "upper_bound", "pass"]);
    let lower = bounds.lower_ratio_bound.map(fmt17).unwrap_or_default();
    for (n, &m) in profile.m.iter().enumerate() {
        let (ratio, pass) = match profile.ratios.get(n) {
            Some(&r) => (fmt17(r), bounds.ratio_within(r).to_string()),
            None => (String::new(), String::new()),
        };
        table.push(vec![n.to_string(), fmt17(m), ratio, lower.clone(), fmt17(bounds.upper_ratio_bound), pass]);
    }
    report.attach(Artifact::Csv(table));
    report.check(Check::new(
        "growth_bounds",
        bounds.passed(),
        format!(
            "rates [{:.6}, {:.6}], lower {:?}, upper {:.6}, {} ratio violations",
            profile.rate_lower,
            profile.rate_upper,
            bounds.lower_bound,
            bounds.upper_bound,
            bounds.ratio_violations.len()
        ),
    ));
    report.check(Check::new(
        "one_step_upper_bound",
        one_step.violations.is_empty(),
        format!("max w(y)/w(x) = {:.6} against {:.6}", one_step.max_ratio, one_step.bound),
    ));
    report.check(Check::new(
        "maximum_principle",
        mp_failures.is_empty(),
        format!("{} of {radius} radii fail", mp_failures.len()),
    ));
    report.results = json!({
        "graph": s.describe(),
        "geometry": cert_json(&cert),
        "lambda": lambda,
        "residual": w.residual,
        "rate_lower": profile.rate_lower,
        "rate_upper": profile.rate_upper,
        "tail_window": [profile.tail_start, profile.tail_end],
        "lower_bound": bounds.lower_bound,
        "upper_bound": bounds.upper_bound,
        "upper_bound_note": "c0^2 (lambda + c0^3) is derived here from the eigen-equation",
        "slack": bounds.slack,
        "ratio_violations": bounds.ratio_violations,
        "one_step_max_ratio": one_step.max_ratio,
        "one_step_edges": one_step.edges_checked,
        "maximum_principle_failures": mp_failures,
    });
    Ok(report)
}

fn initial_condition(s: &Setup, init: &str) -> Result<VertexFunction> {
    let n = s.g.vertex_count();
    let delta = |x: usize| -> Result<VertexFunction> {
        if x >= n {
            return Err(Error::UnknownVertex(x).into());
        }
        let mut v = vec![0.0; n];
        v[x] = 1.0;
        Ok(v.into())
    };
    match init {
        "delta" => delta(s.balls.root),
        "uniform" => Ok(VertexFunction::constant(n, 1.0)),
        other => match other.strip_prefix("delta:").map(str::parse::<usize>) {
            Some(Ok(x)) => delta(x),
            _ => Err(LabError::Usage(format!("unknown --init `{other}`"))),
        },
    }
}

fn cmd_heat(cfg: &ExperimentConfig) -> Result<RunReport> {
    let s = build_graph(cfg)?;
    let tau = cfg.tau.unwrap_or(DEFAULT_TAU);
    let time = cfg.time.unwrap_or(DEFAULT_HEAT_TIME);
    let steps = (time / tau).round() as usize;
    if steps == 0 {
        return Err(LabError::Usage(format!("time {time} is shorter than one step of {tau}")));
    }
    let u0 = initial_condition(&s, cfg.init.as_deref().unwrap_or("delta"))?;
    let stepper = ImplicitHeatStepper::new(&s.g, tau)?;

    let mut table = Table::new("heat.csv", &["step", "time", "mass", "min", "max"]);
    let summarize = |k: usize, st: &HeatState, table: &mut Table| {
        let v = st.values.values();
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        table.push(vec![k.to_string(), fmt17(st.time), fmt17(st.values.mass(&s.g)), fmt17(min), fmt17(max)]);
        min
    };
    let mut state = HeatState::new(0.0, u0.clone());
    let mut nonnegative = summarize(0, &state, &mut table) >= 0.0;
    let mut drift: f64 = 0.0;
    for k in 1..=steps {
        let next = stepper.step(&state)?;
        let (m0, m1) = (state.values.mass(&s.g), next.values.mass(&s.g));
        drift = drift.max((m1 - m0).abs() / m0.abs().max(f64::MIN_POSITIVE));
        state = next;
        nonnegative &= summarize(k, &state, &mut table) >= 0.0;
    }

    let mut report = RunReport::new("heat", cfg.to_json());
    report.attach(Artifact::Csv(table));
    let exact = if s.g.vertex_count() <= DENSE_LIMIT {
        Some(solve_heat_spectral(&s.g, &u0, state.time)?)
    } else {
        None
    };
    let mut last = Table::new("heat_final.csv", &["vertex", "implicit", "spectral"]);
    for x in 0..s.g.vertex_count() {
        let spectral = exact.as_ref().map(|e| fmt17(e.values[x])).unwrap_or_default();
        last.push(vec![x.to_string(), fmt17(state.values[x]), spectral]);
    }
    report.attach(Artifact::Csv(last));
    report.check(Check::new("nonnegative", nonnegative, format!("{steps} steps of {tau}")));
    report.check(Check::new(
        "mass_conserved",
        drift <= MASS_TOL,
        format!("max relative drift per step {drift:e}"),
    ));
    let mut error = None;
    if let Some(e) = &exact {
        let err = (0..s.g.vertex_count())
            .map(|x| (state.values[x] - e.values[x]).abs())
            .fold(0.0, f64::max);
        let allowed = 10.0 * tau * (1.0 + u0.max_abs());
        report.check(Check::new(
            "matches_spectral",
            err <= allowed,
            format!("max error {err:e}, allowed {allowed:e}"),
        ));
        error = Some(err);
    }
    report.results = json!({
        "graph": s.describe(),
        "tau": tau,
        "steps": steps,
        "final_time": state.time,
        "max_mass_drift": drift,
        "spectral_max_error": error,
    });
    Ok(report)
}

struct Built<'g> {
    sol: AncientSolution<'g>,
    lambda1_reference: f64,
}

fn build_solution<'g>(s: &'g Setup, cfg: &ExperimentConfig, default_lambda: Option<f64>) -> Result<Built<'g>> {
    let lambdas = match (&cfg.lambdas, cfg.lambda.or(default_lambda)) {
        (Some(ls), _) => ls.clone(),
        (None, Some(l)) => vec![l],
        (None, None) => return Err(LabError::Usage("needs --lambda or --lambdas".into())),
    };
    if lambdas.is_empty() {
        return Err(LabError::Usage("empty --lambdas".into()));
    }
    let weights = match &cfg.weights {
        Some(w) if w.len() != lambdas.len() => {
            return Err(LabError::Usage(format!("{} weights for {} lambdas", w.len(), lambdas.len())))
        }
        Some(w) => w.clone(),
        None => vec![1.0 / lambdas.len() as f64; lambdas.len()],
    };
    let tol = cfg.tol.unwrap_or(DEFAULT_CONSTRUCTION_TOL);
    let sol = synthesize_from_eigenvalues(&s.g, &s.balls, &lambdas, &weights, cfg.horizon.unwrap_or(0.0), tol)?;
    let lambda1 = sol.measure.lambda1_reference;
    Ok(Built { sol, lambda1_reference: lambda1 })
}

fn atoms_json(sol: &AncientSolution<'_>) -> Value {
    sol.measure
        .atoms
        .iter()
        .map(|a| json!({ "lambda": a.lambda, "weight": a.weight, "residual": a.eigenfunction.residual }))
        .collect()
}

fn cmd_synth(cfg: &ExperimentConfig) -> Result<RunReport> {
    let s = build_graph(cfg)?;
    let built = build_solution(&s, cfg, None)?;
    let sol = &built.sol;
    let times = cfg.times.clone().unwrap_or_else(|| DEFAULT_SYNTH_TIMES.to_vec());
    let wdeg = (0..s.g.vertex_count()).map(|x| s.g.weighted_degree(x) / s.g.measure(x)).fold(0.0, f64::max);

    let mut report = RunReport::new("synth", cfg.to_json());
    let mut table = Table::new("synth.csv", &["time", "heat_residual", "bound"]);
    let mut ok = true;
    for &t in &times {
        let res = heat_residual(sol, &[t], &sol.domain)?;
        let mut bound = 0.0;
        let mut scale = 0.0;
        for a in &sol.measure.atoms {
            let size = a.weight * (a.lambda * t).exp() * a.eigenfunction.max_value();
            bound += size * a.eigenfunction.residual;
            scale += size * (1.0 + a.lambda.abs() + wdeg);
        }
        // Δu and ∂_t u are summed separately, so allow rounding at the scale of the terms
        let allowed = bound + 16.0 * f64::EPSILON * scale;
        ok &= res <= allowed;
        table.push(vec![fmt17(t), fmt17(res), fmt17(allowed)]);
    }
    report.attach(Artifact::Csv(table));
    report.check(Check::new("closed_form_residual", ok, format!("{} sample times", times.len())));
    report.results = json!({
        "graph": s.describe(),
        "atoms": atoms_json(sol),
        "excluded_atoms": sol.excluded_atoms,
        "support": sol.support().label(),
        "horizon": sol.horizon,
        "lambda1_reference": built.lambda1_reference,
    });
    Ok(report)
}

fn cmd_harnack(cfg: &ExperimentConfig) -> Result<RunReport> {
    let s = build_graph(cfg)?;
    let built = build_solution(&s, cfg, Some(1.0))?;
    let sol = &built.sol;
    let [ta, tb] = cfg.window.unwrap_or(DEFAULT_WINDOW);
    if !(tb < sol.horizon) {
        return Err(LabError::Usage(format!("window end {tb} must lie below the horizon {}", sol.horizon)));
    }
    let seed = cfg.seed.unwrap_or(0);
    let spec = SampleSpec::new(cfg.samples.unwrap_or(DEFAULT_SAMPLE_COUNT), (ta, tb));
    let audit = audit_harnack(|x, t| sol.value(x, t), &s.g, &s.balls, &spec, seed)?;
    let worst = audit.worst();

    let mut report = RunReport::new("harnack", cfg.to_json());
    let summary = json!({
        "seed": audit.seed,
        "window": [ta, tb],
        "sample_count": audit.samples.len(),
        "fitted_C1": audit.fitted_c1,
        "fitted_C2": audit.fitted_c2,
        "max_violation": audit.max_violation,
        "feasible": audit.feasible,
        "worst_sample": {
            "x": worst.x, "y": worst.y, "t1": worst.t1, "t2": worst.t2, "rho": worst.rho, "lhs": worst.lhs,
        },
    });
    report.attach(Artifact::Json { file: "harnack.json".into(), value: summary.clone() });
    let mut table = Table::new("harnack_samples.csv", &["x", "y", "t1", "t2", "rho", "lhs", "violation"]);
    for smp in &audit.samples {
        table.push(vec![
            smp.x.to_string(),
            smp.y.to_string(),
            fmt17(smp.t1),
            fmt17(smp.t2),
            smp.rho.to_string(),
            fmt17(smp.lhs),
            fmt17(smp.violation(audit.fitted_c1, audit.fitted_c2)),
        ]);
    }
    report.attach(Artifact::Csv(table));
    report.check(Check::new(
        "harnack_constants_found",
        audit.passed(),
        format!("C1 = {:.6}, C2 = {:.6}, max violation {:e}", audit.fitted_c1, audit.fitted_c2, audit.max_violation),
    ));
    report.results = json!({
        "graph": s.describe(),
        "atoms": atoms_json(sol),
        "lambda1_reference": built.lambda1_reference,
        "audit": summary,
        "note": "empirical constants over the sampled window only",
    });
    Ok(report)
}

fn cmd_liouville(cfg: &ExperimentConfig) -> Result<RunReport> {
    if cfg.graph.is_some() {
        return Err(LabError::Usage("liouville sweeps a --family".into()));
    }
    let family = family(cfg)?.ok_or_else(|| LabError::Usage("liouville needs --family".into()))?;
    let radius = cfg.radius.unwrap_or(DEFAULT_RADIUS);
    let lambdas = cfg.lambdas.clone().unwrap_or_else(|| vec![0.0, 0.5, 1.0]);
    let mut spec = SweepSpec::new(family, cfg.degree, lambdas, radius, cfg.seed.unwrap_or(0));
    spec.t_star = cfg.t_star.unwrap_or(DEFAULT_T_STAR);
    spec.time_grid = cfg.time_grid.clone().unwrap_or_else(default_time_grid);
    spec.rate_tol = cfg.rate_tol.unwrap_or(DEFAULT_RATE_TOL);
    spec.tol = cfg.tol.unwrap_or(DEFAULT_VERDICT_TOL);
    let slack = cfg.slack.unwrap_or(DEFAULT_RATE_SLACK);
    let table = dichotomy_sweep(&spec)?;
    let c0 = certify_bounded_geometry(&generate_family(family, radius, cfg.degree)?).c0;

    let mut report = RunReport::new("liouville", cfg.to_json());
    let mut csv = Table::new(
        "liouville.csv",
        &["family", "lambda", "radius", "spatial_rate", "temporal_rate", "support", "stationary", "harmonic", "consistent"],
    );
    let mut rows = Vec::new();
    let (mut lower_ok, mut zero_ok) = (true, true);
    for row in &table.rows {
        match &row.outcome {
            Ok(v) => {
                let c = &v.classification;
                csv.push(vec![
                    family.name().to_string(),
                    fmt17(row.lambda),
                    row.radius.to_string(),
                    fmt17(c.spatial_rate),
                    fmt17(c.temporal_rate),
                    v.measure_support.label().to_string(),
                    v.stationary.to_string(),
                    v.harmonic.to_string(),
                    v.consistent_with_theorem.to_string(),
                ]);
                if row.lambda > 0.0 {
                    lower_ok &= c.spatial_rate >= (1.0 + row.lambda / (c0 * c0 * c0)).ln() - slack;
                }
                if row.lambda == 0.0 {
                    zero_ok &= v.stationary && v.harmonic;
                }
                rows.push(json!({
                    "lambda": row.lambda,
                    "radius": row.radius,
                    "lambda1_reference": row.lambda1_reference,
                    "spatial_rate": c.spatial_rate,
                    "temporal_rate": c.temporal_rate,
                    "spatial_subexponential": c.spatial_subexponential,
                    "temporal_subexponential": c.temporal_subexponential,
                    "spatial_window": [c.spatial_window.0, c.spatial_window.1],
                    "support": v.measure_support.label(),
                    "stationary": v.stationary,
                    "harmonic": v.harmonic,
                    "stationarity_gap": v.stationarity_gap,
                    "harmonic_defect": v.harmonic_defect,
                    "consistent": v.consistent_with_theorem,
                }));
            }
            Err(e) => {
                csv.push(vec![
                    family.name().to_string(),
                    fmt17(row.lambda),
                    row.radius.to_string(),
                    String::new(),
                    String::new(),
                    format!("error:{}", e.kind()),
                    String::new(),
                    String::new(),
                    String::new(),
                ]);
                rows.push(json!({
                    "lambda": row.lambda,
                    "radius": row.radius,
                    "lambda1_reference": row.lambda1_reference,
                    "error": e.kind(),
                    "message": e.to_string(),
                }));
            }
        }
    }
    report.attach(Artifact::Csv(csv));
    let failed = table.rows.iter().filter(|r| r.outcome.is_err()).count();
    report.check(Check::new(
        "consistent_with_theorem",
        table.all_consistent(),
        format!("{} rows, {failed} recorded as errors", table.rows.len()),
    ));
    report.check(Check::new("zero_atom_stationary_harmonic", zero_ok, "lambda = 0 rows"));
    report.check(Check::new(
        "spatial_lower_bound",
        lower_ok,
        format!("spatial_rate >= ln(1 + lambda/c0^3) - {slack} with c0 = {c0}"),
    ));
    report.results = json!({
        "family": family.name(),
        "degree": cfg.degree,
        "c0": c0,
        "seed": spec.seed,
        "t_star": spec.t_star,
        "time_grid": spec.time_grid,
        "rate_tol": spec.rate_tol,
        "tol": spec.tol,
        "slack": slack,
        "scope": "single-atom ancient solutions built from truncation eigenfunctions",
        "rows": rows,
    });
    Ok(report)
}
