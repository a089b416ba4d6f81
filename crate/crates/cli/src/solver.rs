//! Solver selection strings and single-instance runs.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use unlabeled_mapf::assignment::{assign, AssignKind, Eval};
use unlabeled_mapf::instance::{compute_metrics, Instance, Metrics, Plan};
use unlabeled_mapf::optimal::{solve_optimal, FlowSolveOptions, LowerBoundMode, OptimalSolution};
use unlabeled_mapf::tswap::solve_offline;

pub const CSV_HEADER: &str =
    "map,n_agents,seed,solver,assignment,makespan,sum_of_costs,maximum_moves,sum_of_moves,runtime_ms,lower_bound,status";

/// What to run on an instance: `tswap:<assign>[:eager]` or
/// `flow[:lb=conservative|bottleneck][:noprune][:noreuse]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolverSpec {
    Tswap { kind: AssignKind, eval: Eval },
    Flow { lower_bound: Option<LowerBoundMode>, prune: bool, reuse: bool },
}

impl FromStr for SolverSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.split(':');
        match parts.next() {
            Some("tswap") => {
                let kind = match parts.next() {
                    None => AssignKind::BottleneckMinCost,
                    Some("alg2") => AssignKind::Bottleneck,
                    Some("alg2dagger") => AssignKind::BottleneckMinCost,
                    Some("alg3") => AssignKind::GreedyMakespan,
                    Some("alg5") => AssignKind::GreedySumOfCosts,
                    Some("naive") => AssignKind::NaiveGreedy,
                    Some("linear") => AssignKind::OptimalLinear,
                    Some(other) => {
                        return Err(format!(
                            "unknown assignment `{}`; use alg2|alg2dagger|alg3|alg5|naive|linear",
                            other
                        ))
                    }
                };
                let eval = match parts.next() {
                    None => Eval::Lazy,
                    Some("eager") => Eval::Eager,
                    Some(other) => return Err(format!("unknown tswap option `{}`", other)),
                };
                Ok(SolverSpec::Tswap { kind, eval })
            }
            Some("flow") => {
                let mut lower_bound = None;
                let mut prune = true;
                let mut reuse = true;
                for part in parts {
                    match part {
                        "noprune" => prune = false,
                        "noreuse" => reuse = false,
                        "lb=conservative" => lower_bound = Some(LowerBoundMode::Conservative),
                        "lb=bottleneck" => lower_bound = Some(LowerBoundMode::Bottleneck),
                        other => return Err(format!("unknown flow option `{}`", other)),
                    }
                }
                Ok(SolverSpec::Flow { lower_bound, prune, reuse })
            }
            other => Err(format!("unknown solver `{}`; use tswap:<assign> or flow", other.unwrap_or(""))),
        }
    }
}

impl SolverSpec {
    pub fn solver_column(&self) -> &'static str {
        match self {
            SolverSpec::Tswap { .. } => "tswap",
            SolverSpec::Flow { .. } => "flow",
        }
    }

    pub fn assignment_column(&self) -> String {
        match self {
            SolverSpec::Tswap { kind, eval } => {
                let name = match kind {
                    AssignKind::Bottleneck => "alg2",
                    AssignKind::BottleneckMinCost => "alg2dagger",
                    AssignKind::GreedyMakespan => "alg3",
                    AssignKind::GreedySumOfCosts => "alg5",
                    AssignKind::NaiveGreedy => "naive",
                    AssignKind::OptimalLinear => "linear",
                };
                match eval {
                    Eval::Lazy => name.to_string(),
                    Eval::Eager => format!("{}-eager", name),
                }
            }
            SolverSpec::Flow { lower_bound, prune, reuse } => {
                let lb = match lower_bound {
                    None => "auto",
                    Some(LowerBoundMode::Conservative) => "conservative",
                    Some(LowerBoundMode::Bottleneck) => "bottleneck",
                };
                format!("lb={}{}{}", lb, if *prune { "" } else { ",noprune" }, if *reuse { "" } else { ",noreuse" })
            }
        }
    }

    fn flow_options(&self, instance: &Instance<'_>, timeout: Duration) -> FlowSolveOptions {
        let SolverSpec::Flow { lower_bound, prune, reuse } = self else {
            unreachable!("flow options for a flow spec");
        };
        let mut opts = FlowSolveOptions::for_instance(instance);
        if let Some(lb) = lower_bound {
            opts.lower_bound = *lb;
        }
        opts.use_prune = *prune;
        opts.use_reuse = *reuse;
        opts.timeout = Some(timeout);
        opts
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Status {
    Ok,
    Timeout,
    Error(String),
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::Ok => write!(f, "ok"),
            Status::Timeout => write!(f, "timeout"),
            Status::Error(_) => write!(f, "error"),
        }
    }
}

/// One solver run: metrics when ok, the plan for export, and diagnostics.
pub struct SolveOutput {
    pub metrics: Option<Metrics>,
    pub lower_bound: Option<usize>,
    pub runtime: Duration,
    pub status: Status,
    pub plan: Option<Plan>,
    pub flow_solution: Option<OptimalSolution>,
}

/// Runs one solver on one instance. Runtime covers assignment and planning
/// together. Failures land in `status`, never panic.
pub fn run_solver(instance: &Instance<'_>, spec: &SolverSpec, timeout: Duration) -> SolveOutput {
    let clock = Instant::now();
    match spec {
        SolverSpec::Tswap { kind, eval } => {
            let outcome = assign(instance, *kind, *eval);
            let lower_bound = Some(outcome.assignment.target_bottleneck() as usize);
            match solve_offline(instance, &outcome.assignment) {
                Ok(run) => {
                    let runtime = clock.elapsed();
                    let metrics = compute_metrics(instance, &run.plan).expect("planner output is valid");
                    let status = if runtime > timeout { Status::Timeout } else { Status::Ok };
                    let metrics = (status == Status::Ok).then_some(metrics);
                    SolveOutput {
                        metrics,
                        lower_bound,
                        runtime,
                        status,
                        plan: Some(run.plan),
                        flow_solution: None,
                    }
                }
                Err(e) => SolveOutput {
                    metrics: None,
                    lower_bound,
                    runtime: clock.elapsed(),
                    status: Status::Error(e.to_string()),
                    plan: None,
                    flow_solution: None,
                },
            }
        }
        SolverSpec::Flow { .. } => {
            let opts = spec.flow_options(instance, timeout);
            match solve_optimal(instance, &opts) {
                Ok(solution) => {
                    let runtime = clock.elapsed();
                    let metrics = compute_metrics(instance, &solution.plan).expect("planner output is valid");
                    SolveOutput {
                        metrics: Some(metrics),
                        lower_bound: Some(solution.lower_bound),
                        runtime,
                        status: Status::Ok,
                        plan: Some(solution.plan.clone()),
                        flow_solution: Some(solution),
                    }
                }
                Err(e) => {
                    let status = match &e {
                        unlabeled_mapf::optimal::BaselineError::Timeout { .. } => Status::Timeout,
                        _ => Status::Error(e.to_string()),
                    };
                    SolveOutput {
                        metrics: None,
                        lower_bound: None,
                        runtime: clock.elapsed(),
                        status,
                        plan: None,
                        flow_solution: None,
                    }
                }
            }
        }
    }
}

/// Formats one result row; metric cells are empty unless the run was ok.
pub fn csv_row(
    map: &str,
    n_agents: usize,
    seed: Option<u64>,
    spec: &SolverSpec,
    output: &SolveOutput,
) -> String {
    let seed = seed.map_or(String::new(), |s| s.to_string());
    let (makespan, soc, maxm, summ) = match &output.metrics {
        Some(m) => (
            m.makespan.to_string(),
            m.sum_of_costs.to_string(),
            m.maximum_moves.to_string(),
            m.sum_of_moves.to_string(),
        ),
        None => Default::default(),
    };
    let lb = output.lower_bound.map_or(String::new(), |l| l.to_string());
    format!(
        "{},{},{},{},{},{},{},{},{},{:.3},{},{}",
        map,
        n_agents,
        seed,
        spec.solver_column(),
        spec.assignment_column(),
        makespan,
        soc,
        maxm,
        summ,
        output.runtime.as_secs_f64() * 1e3,
        lb,
        output.status
    )
}
