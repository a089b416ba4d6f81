//! Solvers for unlabeled multi-agent path finding on undirected graphs.
//!
//! Agents are interchangeable: any agent may satisfy any target, so planning
//! splits into target assignment ([`assignment`]) and path planning. The
//! [`tswap`] planners move agents along shortest paths and swap or rotate
//! targets on contention; the [`optimal`] baseline finds the exact minimum
//! makespan through maximum flow on time-expanded networks and validates the
//! fast planners.

pub mod assignment;
pub mod graph;
pub mod instance;
pub mod matching;
pub mod maxflow;
pub mod optimal;
pub mod tswap;

pub use assignment::{
    assign, assign_bottleneck, assign_greedy_refined, assign_naive_greedy, assign_optimal_linear,
    park_surplus_agents, AssignKind, AssignOutcome, Assignment, AssignedDest, Eval, Objective,
};
pub use graph::{DistanceOracle, Graph, GraphError, Node};
pub use instance::{
    compute_metrics, generate_random_instance, parse_movingai_map, random_grid_map_text,
    validate_plan, Instance, Metrics, MovingAiMap, Plan, ValidityReport, Violation,
};
pub use matching::{augment_once, min_cost_max_matching, BipartiteGraph, Matching};
pub use maxflow::FlowNetwork;
pub use optimal::{
    build_network, compute_prune_table, feasible, resolve_swap_conflicts, solve_optimal,
    FlowSolveOptions, LowerBoundMode, OptimalSolution, PruneTable,
};
pub use tswap::{
    make_schedule, solve_offline, solve_online, AgentState, ExecutionTrace, OfflineEngine,
    OfflineRun, Schedule, ScheduleKind, StepEvent, TswapCore,
};
