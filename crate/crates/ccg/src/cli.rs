//! The `ccg` command line.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use ccg_core::congestion::CostModel;
use ccg_core::equilibrium::{
    fw_gap, solve_accelerated, solve_naive_softmin, solve_standard_fw, Clock, NoClock, Solution, SolverConfig,
};
use ccg_core::stackelberg::{
    baseline_heuristic, check_feasible, optimize_pgd, social_cost_and_flow, Budget, OptimizationTrace,
    OuterRecord, StackelbergConfig,
};
use ccg_core::zdd::{Designation, Graph, StrategyClass, Zdd};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::clock::StdClock;
use crate::config::{ClassArg, ConfigOverrides, CostArg, OptimizerArg, RunConfig, Stamp, VariantArg};
use crate::format::graph::{parse_graph, write_graph};
use crate::format::trace::{write_equilibrium_csv, write_optimization_csv};
use crate::format::zdd::{parse_zdd, write_zdd};
use crate::grid::parallel_exhaustive_search;
use crate::ingest::{delaunay_graph, parse_graphml, parse_tsplib};
use crate::verify::{self, PropertyResult, Report, Suite};

/// Exit status for a `verify` run with a failing property.
pub const EXIT_PROPERTY_FAILED: i32 = 1;
/// Exit status for any error.
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "ccg", version, about = "Combinatorial congestion games: compile, solve, optimize, verify")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compile a graph's strategy family into a diagram file.
    Compile(CompileArgs),
    /// Approximate the follower equilibrium for a fixed leader parameter.
    Equilibrium(EquilibriumArgs),
    /// Optimize the leader parameter.
    Stackelberg(StackelbergArgs),
    /// Run the oracle suites and print a JSON report.
    Verify(VerifyArgs),
    /// Convert a TSPLIB or GraphML network into a graph file.
    Ingest(IngestArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Graph file.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Diagram file; takes precedence over compiling `--graph`.
    #[arg(long)]
    pub zdd: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub class: Option<ClassArg>,
    /// JSON file with defaults for any flag.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Write 0 in every wall-clock column.
    #[arg(long)]
    pub no_clock: bool,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub cost: Option<CostArg>,
    #[arg(long = "congestion-C")]
    pub congestion: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, value_enum)]
    pub variant: Option<VariantArg>,
    #[arg(long)]
    pub eta: Option<f64>,
    /// Inner iterations.
    #[arg(long = "T")]
    pub iterations: Option<usize>,
    /// Comma-separated leader parameter (default: all ones).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct CompileArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Output path (default: `<out-dir>/strategies.zdd`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EquilibriumArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct StackelbergArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, value_enum)]
    pub optimizer: Option<OptimizerArg>,
    /// Outer iterations.
    #[arg(long)]
    pub outer_iters: Option<usize>,
    /// Gradient step of the projected gradient method.
    #[arg(long)]
    pub outer_step: Option<f64>,
    /// Stop the gradient method once a step moves θ by at most this much.
    #[arg(long)]
    pub stall_tolerance: Option<f64>,
    /// Grid spacing.
    #[arg(long)]
    pub step: Option<f64>,
    /// Heuristic step size.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub max_grid_points: Option<u64>,
    /// Worker threads for the grid search.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Suites to run (default: all).
    #[arg(long, value_enum, value_delimiter = ',')]
    pub suites: Option<Vec<Suite>>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// TSPLIB file with EUC_2D coordinates.
    #[arg(long, conflicts_with = "graphml", required_unless_present = "graphml")]
    pub tsplib: Option<PathBuf>,
    /// GraphML topology.
    #[arg(long)]
    pub graphml: Option<PathBuf>,
    /// Origin and destination vertex.
    #[arg(long, num_args = 2, value_names = ["S", "T"], conflicts_with = "terminals")]
    pub od: Option<Vec<usize>>,
    /// Comma-separated terminal vertices.
    #[arg(long, value_delimiter = ',')]
    pub terminals: Option<Vec<usize>>,
    /// Output graph file.
    #[arg(long)]
    pub out: PathBuf,
}

impl InputArgs {
    fn overrides(&self) -> ConfigOverrides {
        ConfigOverrides {
            class: self.class,
            seed: self.seed,
            no_clock: self.no_clock.then_some(true),
            ..Default::default()
        }
    }
}

impl ModelArgs {
    fn overrides(&self) -> ConfigOverrides {
        ConfigOverrides { cost: self.cost, congestion: self.congestion, ..Default::default() }
    }
}

impl SolverArgs {
    fn overrides(&self) -> ConfigOverrides {
        ConfigOverrides {
            variant: self.variant,
            eta: self.eta,
            iterations: self.iterations,
            theta: self.theta.clone(),
            ..Default::default()
        }
    }
}

impl StackelbergArgs {
    fn overrides(&self) -> ConfigOverrides {
        ConfigOverrides {
            optimizer: self.optimizer,
            outer_iters: self.outer_iters,
            outer_step: self.outer_step,
            stall_tolerance: self.stall_tolerance,
            step: self.step,
            delta: self.delta,
            max_grid_points: self.max_grid_points,
            jobs: self.jobs,
            ..Default::default()
        }
        .or(self.solver.overrides())
        .or(self.model.overrides())
        .or(self.input.overrides())
    }
}

fn resolve(input: &InputArgs, flags: ConfigOverrides) -> Result<RunConfig> {
    let file = match &input.config {
        Some(path) => ConfigOverrides::load(path).with_context(|| format!("reading {}", path.display()))?,
        None => ConfigOverrides::default(),
    };
    Ok(flags.or(file).resolve())
}

/// Runs a parsed command line and returns the process exit status.
pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Compile(args) => compile(&args).map(|_| 0),
        Command::Equilibrium(args) => equilibrium(&args).map(|_| 0),
        Command::Stackelberg(args) => stackelberg(&args).map(|_| 0),
        Command::Verify(args) => verify_cmd(&args),
        Command::Ingest(args) => ingest(&args).map(|_| 0),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write(path, text.as_bytes())
}

fn load_graph(path: &Path) -> Result<Graph> {
    parse_graph(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn build_zdd(graph: &Graph, class: ClassArg) -> Result<Zdd> {
    let class = StrategyClass::from_designation(class.into(), graph)?;
    class.validate(graph)?;
    let zdd = Zdd::build(graph, &class)?;
    ensure!(!zdd.is_empty_family(), "the designation admits no strategy");
    Ok(zdd)
}

/// The diagram plus per-edge lengths (unit lengths without a graph).
fn load_problem(input: &InputArgs, config: &RunConfig) -> Result<(Zdd, Vec<f64>)> {
    let graph = input.graph.as_deref().map(load_graph).transpose()?;
    let zdd = match (&input.zdd, &graph) {
        (Some(path), _) => parse_zdd(&read(path)?).with_context(|| format!("parsing {}", path.display()))?,
        (None, Some(graph)) => build_zdd(graph, config.class)?,
        (None, None) => bail!("either --graph or --zdd is required"),
    };
    let lengths = match &graph {
        Some(g) => {
            ensure!(
                g.edge_count() == zdd.num_vars(),
                "graph has {} edges but the diagram has {} variables",
                g.edge_count(),
                zdd.num_vars()
            );
            g.lengths()
        }
        None => vec![1.0; zdd.num_vars()],
    };
    log::info!("diagram: {} variables, {} nodes, {} members", zdd.num_vars(), zdd.size(), zdd.count());
    Ok((zdd, lengths))
}

fn clock(config: &RunConfig) -> Box<dyn Clock> {
    if config.no_clock {
        Box::new(NoClock)
    } else {
        Box::new(StdClock::start())
    }
}

fn theta_for(config: &RunConfig, n: usize) -> Result<Vec<f64>> {
    let theta = config.theta.clone().unwrap_or_else(|| vec![1.0; n]);
    ensure!(theta.len() == n, "--theta has {} entries, expected {n}", theta.len());
    Ok(theta)
}

#[derive(Serialize)]
struct CompileStats {
    vertices: usize,
    edges: usize,
    zdd_nodes: usize,
    family_size: String,
    construction_ms: f64,
}

fn compile(args: &CompileArgs) -> Result<()> {
    let config = resolve(&args.input, args.input.overrides())?;
    let path = args.input.graph.as_deref().context("--graph is required")?;
    let graph = load_graph(path)?;
    let clock = clock(&config);
    let zdd = build_zdd(&graph, config.class)?;
    let stats = CompileStats {
        vertices: graph.vertex_count(),
        edges: graph.edge_count(),
        zdd_nodes: zdd.size(),
        family_size: zdd.count().to_string(),
        construction_ms: clock.elapsed_ms(),
    };
    let out = args.out.clone().unwrap_or_else(|| args.input.out_dir.join("strategies.zdd"));
    log::info!("writing {}", out.display());
    write(&out, write_zdd(&zdd).as_bytes())?;
    println!("|V| = {}", stats.vertices);
    println!("|E| = {}", stats.edges);
    println!("|Z| = {}", stats.zdd_nodes);
    println!("|S| = {}", stats.family_size);
    println!("time = {:.3} ms", stats.construction_ms);
    #[derive(Serialize)]
    struct Output<'a> {
        #[serde(flatten)]
        stamp: Stamp,
        zdd_file: String,
        stats: &'a CompileStats,
    }
    write_json(
        &args.input.out_dir.join("compile.json"),
        &Output { stamp: Stamp::new(&config), zdd_file: out.display().to_string(), stats: &stats },
    )
}

fn solver_config(config: &RunConfig) -> SolverConfig {
    SolverConfig {
        iterations: config.iterations,
        eta: config.eta,
        variant: config.variant.into(),
        record_trace: true,
        record_gap: true,
        record_iterates: false,
    }
}

fn equilibrium(args: &EquilibriumArgs) -> Result<()> {
    let flags = args.solver.overrides().or(args.model.overrides()).or(args.input.overrides());
    let config = resolve(&args.input, flags)?;
    let (zdd, lengths) = load_problem(&args.input, &config)?;
    let model = CostModel::new(config.cost.into(), config.congestion, lengths)?;
    let theta = theta_for(&config, zdd.num_vars())?;
    let solver = solver_config(&config);
    let clock = clock(&config);
    let Solution { y, trace } = match config.variant {
        VariantArg::Accel => solve_accelerated(&zdd, &model, &theta, &solver, clock.as_ref())?,
        VariantArg::Naive => solve_naive_softmin(&zdd, &model, &theta, &solver, clock.as_ref())?,
        VariantArg::Fw => solve_standard_fw(&zdd, &model, &theta, &solver, clock.as_ref())?,
    };
    let gap = fw_gap(&zdd, &model, &y, &theta)?;
    let potential = model.potential_value(&y, &theta)?;
    let social_cost = model.social_cost(&theta, &y)?;

    let mut csv = Vec::new();
    write_equilibrium_csv(&trace, &mut csv)?;
    write(&args.input.out_dir.join("equilibrium_trace.csv"), &csv)?;
    #[derive(Serialize)]
    struct Output {
        #[serde(flatten)]
        stamp: Stamp,
        theta: Vec<f64>,
        y: Vec<f64>,
        potential: f64,
        fw_gap: f64,
        social_cost: f64,
    }
    write_json(
        &args.input.out_dir.join("equilibrium.json"),
        &Output { stamp: Stamp::new(&config), theta, y: y.clone(), potential, fw_gap: gap, social_cost },
    )?;
    println!("y = {}", join(&y));
    println!("potential = {potential}");
    println!("fw_gap = {gap}");
    Ok(())
}

fn stackelberg(args: &StackelbergArgs) -> Result<()> {
    let config = resolve(&args.input, args.overrides())?;
    let (zdd, lengths) = load_problem(&args.input, &config)?;
    let model = CostModel::new(config.cost.into(), config.congestion, lengths)?;
    let n = zdd.num_vars();
    let start = theta_for(&config, n)?;
    let inner =
        SolverConfig { record_trace: false, ..SolverConfig::accelerated(config.iterations, config.eta) };
    let outer = StackelbergConfig {
        outer_step: config.outer_step,
        inner: inner.clone(),
        budget: Budget { max_outer_iters: config.outer_iters, wall_clock_limit_ms: None },
        heuristic_delta: config.delta,
        seed: config.seed,
        stall_tolerance: config.stall_tolerance,
    };
    let clock = clock(&config);
    let trace = match config.optimizer {
        OptimizerArg::Pgd => optimize_pgd(&start, &zdd, &model, &outer, clock.as_ref())?,
        OptimizerArg::Heuristic => baseline_heuristic(&start, &zdd, &model, &outer, clock.as_ref())?,
        OptimizerArg::Grid => {
            log::info!("grid search, step {}, {} thread(s)", config.step, config.jobs);
            let (theta, f) = parallel_exhaustive_search(
                config.step,
                &zdd,
                &model,
                &inner,
                u128::from(config.max_grid_points),
                config.jobs,
            )?;
            OptimizationTrace {
                records: vec![OuterRecord { k: 0, theta, social_cost: f, wall_clock_ms: clock.elapsed_ms() }],
            }
        }
    };
    let best = trace.best().context("optimizer produced no iterate")?;
    check_feasible(&best.theta)?;
    let (f, y) = social_cost_and_flow(&best.theta, &zdd, &model, &inner)?;

    let mut csv = Vec::new();
    write_optimization_csv(&trace, n, &mut csv)?;
    write(&args.input.out_dir.join("stackelberg_trace.csv"), &csv)?;
    #[derive(Serialize)]
    struct Output<'a> {
        #[serde(flatten)]
        stamp: Stamp,
        outer_iterations: usize,
        theta: &'a [f64],
        y: Vec<f64>,
        social_cost: f64,
    }
    write_json(
        &args.input.out_dir.join("stackelberg.json"),
        &Output {
            stamp: Stamp::new(&config),
            outer_iterations: trace.records.len().saturating_sub(1),
            theta: &best.theta,
            y,
            social_cost: f,
        },
    )?;
    println!("theta = {}", join(&best.theta));
    println!("F = {f}");
    Ok(())
}

fn verify_cmd(args: &VerifyArgs) -> Result<i32> {
    let config = resolve(&args.input, args.input.overrides())?;
    let suites = args.suites.clone().unwrap_or_else(|| Suite::ALL.to_vec());
    let report = match &args.input.zdd {
        Some(path) => match parse_zdd(&read(path)?) {
            Ok(_) => None,
            Err(e) => Some(Report {
                results: vec![PropertyResult {
                    suite: Suite::Structure,
                    property: format!("structural invariants of {} ({e})", path.display()),
                    measured: 1.0,
                    threshold: 0.0,
                    pass: false,
                }],
            }),
        },
        None => None,
    };
    let report = match report {
        Some(r) => r,
        None => {
            let (zdd, lengths) = load_problem(&args.input, &config)?;
            verify::run(&zdd, &lengths, &suites, config.seed)?
        }
    };
    #[derive(Serialize)]
    struct Output<'a> {
        #[serde(flatten)]
        stamp: Stamp,
        all_pass: bool,
        #[serde(flatten)]
        report: &'a Report,
    }
    let output = Output { stamp: Stamp::new(&config), all_pass: report.all_pass(), report: &report };
    let mut text = serde_json::to_string_pretty(&output)?;
    text.push('\n');
    std::io::stdout().write_all(text.as_bytes())?;
    write(&args.input.out_dir.join("verify.json"), text.as_bytes())?;
    Ok(if report.all_pass() { 0 } else { EXIT_PROPERTY_FAILED })
}

fn ingest(args: &IngestArgs) -> Result<()> {
    let designation = match (&args.od, &args.terminals) {
        (Some(od), _) => Designation::OdPair { source: od[0], target: od[1] },
        (None, Some(ts)) => Designation::Terminals(ts.clone()),
        (None, None) => Designation::None,
    };
    let graph = match (&args.tsplib, &args.graphml) {
        (Some(path), _) => delaunay_graph(&parse_tsplib(&read(path)?)?, designation)?,
        (None, Some(path)) => parse_graphml(&read(path)?, designation)?,
        (None, None) => bail!("one of --tsplib or --graphml is required"),
    };
    write(&args.out, write_graph(&graph).as_bytes())?;
    println!("|V| = {}", graph.vertex_count());
    println!("|E| = {}", graph.edge_count());
    Ok(())
}

fn join(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}
