//! `umapf`: solve, benchmark, and replay unlabeled multi-agent path finding
//! instances on grid maps.

mod bench;
mod instance_args;
mod solver;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use unlabeled_mapf::assignment::{assign, AssignKind, Eval};
use unlabeled_mapf::instance::{
    compute_metrics, format_node, generate_random_instance, random_grid_map_text, validate_plan,
    Plan,
};
use unlabeled_mapf::tswap::{make_schedule, solve_online, OnlineError, ScheduleKind};

use instance_args::{load, InstanceArgs};
use solver::{csv_row, run_solver, SolverSpec, Status, CSV_HEADER};

#[derive(Parser)]
#[command(name = "umapf", version, about = "Unlabeled multi-agent path finding: TSWAP planners and a makespan-optimal flow baseline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and print a result row
    Solve(SolveArgs),
    /// Sweep solvers over maps, agent counts, and seeds into a CSV
    Bench(bench::BenchArgs),
    /// Replay an instance online under an activation schedule
    Online(OnlineArgs),
    /// Check a plan file against an instance
    Validate(ValidateArgs),
    /// Generate random maps and instance files
    Gen(GenArgs),
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    instance: InstanceArgs,

    /// tswap[:<alg2|alg2dagger|alg3|alg5|naive|linear>][:eager] or
    /// flow[:lb=...][:noprune][:noreuse]
    #[arg(long, default_value = "tswap:alg2dagger")]
    solver: SolverSpec,

    /// assignment algorithm for tswap, e.g. alg2dagger or alg3:eager
    #[arg(long)]
    assign: Option<String>,

    /// per-solve timeout in seconds
    #[arg(long, default_value_t = 300.0)]
    timeout: f64,

    /// write the plan here
    #[arg(long)]
    out: Option<PathBuf>,

    /// write the assignment here (tswap solvers only)
    #[arg(long)]
    assignment_out: Option<PathBuf>,

    /// write per-horizon flow diagnostics here (flow solver only)
    #[arg(long)]
    flow_stats_out: Option<PathBuf>,
}

#[derive(Args)]
struct OnlineArgs {
    #[command(flatten)]
    instance: InstanceArgs,

    /// round_robin, random_fair, or delayed:AGENT:FACTOR
    #[arg(long, default_value = "round_robin")]
    schedule: String,

    /// activation budget (default: a bound that any fair schedule meets)
    #[arg(long)]
    budget: Option<u64>,

    /// assignment algorithm feeding the execution
    #[arg(long, default_value = "alg2dagger")]
    assign: String,

    /// write the activation trace here
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    instance: InstanceArgs,

    /// plan file produced by `solve`
    #[arg(long)]
    plan: PathBuf,
}

#[derive(Args)]
struct GenArgs {
    /// existing map to sample an instance on
    #[arg(long)]
    map: Option<PathBuf>,

    /// generate a WxH random map instead, e.g. 32x32
    #[arg(long, conflicts_with = "map")]
    random_map: Option<String>,

    /// obstacle density of the generated map
    #[arg(long, default_value_t = 0.2)]
    obstacles: f64,

    /// where to write the generated map
    #[arg(long, requires = "random_map")]
    map_out: Option<PathBuf>,

    /// sample an instance with this many agents
    #[arg(long)]
    agents: Option<usize>,

    /// targets of the sampled instance (default: agents)
    #[arg(long)]
    targets: Option<usize>,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// where to write the instance file (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
}

const EXIT_INVALID: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_TIMEOUT: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {:#}", err);
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Bench(args) => bench::run(&args).map(|()| ExitCode::SUCCESS),
        Command::Online(args) => cmd_online(args),
        Command::Validate(args) => cmd_validate(args),
        Command::Gen(args) => cmd_gen(args),
    }
}

fn cmd_solve(args: SolveArgs) -> Result<ExitCode> {
    let loaded = load(&args.instance)?;
    let instance = loaded.instance()?;
    let timeout = std::time::Duration::from_secs_f64(args.timeout);
    let mut spec = args.solver.clone();
    if let Some(assign) = &args.assign {
        let SolverSpec::Tswap { kind, eval } = &mut spec else {
            bail!("--assign applies to the tswap solver only");
        };
        let mut parts = assign.split(':');
        *kind = parse_assign_kind(parts.next().unwrap_or(""))?;
        *eval = match parts.next() {
            None => Eval::Lazy,
            Some("eager") => Eval::Eager,
            Some(other) => bail!("unknown assignment option `{}`", other),
        };
    }
    let output = run_solver(&instance, &spec, timeout);

    println!("{}", CSV_HEADER);
    println!(
        "{}",
        csv_row(&loaded.map_name, instance.n_agents(), loaded.seed, &spec, &output)
    );

    if let (Some(path), Some(plan)) = (&args.out, &output.plan) {
        let metrics = compute_metrics(&instance, plan).expect("solver output is valid");
        std::fs::write(path, plan.to_text(&metrics)).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = &args.assignment_out {
        if let SolverSpec::Tswap { kind, eval } = &spec {
            let outcome = assign(&instance, *kind, *eval);
            std::fs::write(path, outcome.assignment.export_text(&instance))
                .with_context(|| format!("writing {}", path.display()))?;
        }
    }
    if let (Some(path), Some(solution)) = (&args.flow_stats_out, &output.flow_solution) {
        std::fs::write(path, solution.horizons_csv()).with_context(|| format!("writing {}", path.display()))?;
    }

    Ok(match output.status {
        Status::Ok => ExitCode::SUCCESS,
        Status::Timeout => ExitCode::from(EXIT_TIMEOUT),
        Status::Error(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(EXIT_USAGE)
        }
    })
}

fn parse_schedule(spec: &str, n_agents: usize) -> Result<ScheduleKind> {
    match spec {
        "round_robin" => Ok(ScheduleKind::RoundRobin),
        "random_fair" => Ok(ScheduleKind::RandomFair),
        other => {
            let mut parts = other.split(':');
            if parts.next() != Some("delayed") {
                bail!("unknown schedule `{}`; use round_robin, random_fair, or delayed:AGENT:FACTOR", other);
            }
            let agent: usize = parts
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| anyhow!("delayed schedule needs an agent index"))?;
            let slowdown: usize = parts
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| anyhow!("delayed schedule needs a slowdown factor"))?;
            if agent >= n_agents {
                bail!("delayed agent {} out of range ({} agents)", agent, n_agents);
            }
            Ok(ScheduleKind::Delayed { agent, slowdown })
        }
    }
}

fn parse_assign_kind(name: &str) -> Result<AssignKind> {
    Ok(match name {
        "alg2" => AssignKind::Bottleneck,
        "alg2dagger" => AssignKind::BottleneckMinCost,
        "alg3" => AssignKind::GreedyMakespan,
        "alg5" => AssignKind::GreedySumOfCosts,
        "naive" => AssignKind::NaiveGreedy,
        "linear" => AssignKind::OptimalLinear,
        other => bail!("unknown assignment `{}`", other),
    })
}

fn cmd_online(args: OnlineArgs) -> Result<ExitCode> {
    let loaded = load(&args.instance)?;
    let instance = loaded.instance()?;
    let n = instance.n_agents();
    let kind = parse_schedule(&args.schedule, n)?;
    let mut schedule = make_schedule(kind, n, args.instance.seed).map_err(|e| anyhow!("{}", e))?;

    let outcome = assign(&instance, parse_assign_kind(&args.assign)?, Eval::Lazy);
    let psi0 = outcome.assignment.total_cost();
    let budget = args
        .budget
        .unwrap_or_else(|| schedule.fairness_window() as u64 * (psi0 + (n * n) as u64 + 1) + n as u64);

    let (trace, code) = match solve_online(&instance, &outcome.assignment, &mut schedule, budget) {
        Ok(trace) => (trace, ExitCode::SUCCESS),
        Err(OnlineError::BudgetExhausted(trace)) => {
            eprintln!("error: activation budget {} exhausted before termination", budget);
            (*trace, ExitCode::from(EXIT_TIMEOUT))
        }
        Err(e) => return Err(anyhow!("{}", e)),
    };

    match &args.trace {
        Some(path) => std::fs::write(path, trace.to_csv()).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{}", trace.to_csv()),
    }
    println!(
        "terminated={} activations={} sum_of_moves={} maximum_moves={}",
        trace.terminated,
        trace.records.len(),
        trace.sum_of_moves(),
        trace.maximum_moves()
    );
    Ok(code)
}

fn cmd_validate(args: ValidateArgs) -> Result<ExitCode> {
    let loaded = load(&args.instance)?;
    let instance = loaded.instance()?;
    let text = std::fs::read_to_string(&args.plan).with_context(|| format!("reading {}", args.plan.display()))?;
    let plan = Plan::parse_text(&text).map_err(|e| anyhow!("{}: {}", args.plan.display(), e))?;
    let report = validate_plan(&instance, &plan);
    for violation in &report.violations {
        println!("{}", violation);
    }
    if report.is_valid() {
        println!("valid: makespan={}", plan.makespan());
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(EXIT_INVALID))
    }
}

fn cmd_gen(args: GenArgs) -> Result<ExitCode> {
    let (map, map_name) = if let Some(dims) = &args.random_map {
        let (w, h) = dims
            .split_once('x')
            .and_then(|(w, h)| Some((w.parse().ok()?, h.parse().ok()?)))
            .ok_or_else(|| anyhow!("--random-map expects WxH, e.g. 32x32"))?;
        let text = random_grid_map_text(w, h, args.obstacles, args.seed);
        let path = args
            .map_out
            .as_ref()
            .ok_or_else(|| anyhow!("--random-map needs --map-out to store the map"))?;
        std::fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
        let map = unlabeled_mapf::instance::parse_movingai_map(&text).expect("generated maps parse");
        (map, path.display().to_string())
    } else {
        let path = args.map.as_ref().ok_or_else(|| anyhow!("give --map or --random-map"))?;
        (instance_args::load_map(path)?, path.display().to_string())
    };

    let Some(agents) = args.agents else {
        return Ok(ExitCode::SUCCESS); // map generation only
    };
    let targets = args.targets.unwrap_or(agents);
    let inst = generate_random_instance(&map.graph, agents, targets, args.seed)
        .map_err(|e| anyhow!("sampling instance: {}", e))?;
    let mut text = format!("# sampled with seed {}\nmap {}\n", args.seed, map_name);
    let cells = |nodes: &[unlabeled_mapf::graph::Node]| {
        nodes.iter().map(|&v| format_node(&map.graph, v)).collect::<Vec<_>>().join(" ")
    };
    text.push_str(&format!("starts {}\n", cells(inst.starts())));
    text.push_str(&format!("targets {}\n", cells(inst.targets())));
    match &args.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{}", text),
    }
    Ok(ExitCode::SUCCESS)
}
