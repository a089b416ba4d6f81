//! Makespan-optimal baseline via maximum flow on time-expanded networks.
//!
//! For a horizon T, each graph node v becomes vertices v_in^t and v_out^t
//! per timestep t < T; a flow of one unit per agent encodes a conflict-free
//! plan. The optimal makespan is found by growing T from a lower bound and
//! testing feasibility, optionally pruning vertices that cannot reach a
//! target in time and reusing the previous horizon's flow.

use std::fmt;
use std::time::{Duration, Instant};

use crate::assignment::{assign_bottleneck, Eval};
use crate::graph::Node;
use crate::instance::{multi_source_bfs, Instance, Plan};
use crate::maxflow::FlowNetwork;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BaselineError {
    ReuseHorizonMismatch { expected: usize, got: usize },
    Timeout { last_horizon: usize },
    HorizonOverrun { horizon: usize },
    VertexConflictInRawPlan { timestep: usize, agents: (usize, usize) },
}

impl fmt::Display for BaselineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaselineError::ReuseHorizonMismatch { expected, got } => {
                write!(f, "reuse state is for horizon {}, expected {}", got, expected)
            }
            BaselineError::Timeout { last_horizon } => {
                write!(f, "timed out; last horizon tried was {}", last_horizon)
            }
            BaselineError::HorizonOverrun { horizon } => {
                write!(f, "no feasible horizon up to {}; this should be impossible", horizon)
            }
            BaselineError::VertexConflictInRawPlan { timestep, agents } => {
                write!(
                    f,
                    "raw plan has a vertex conflict at t={} between agents {} and {}",
                    timestep, agents.0, agents.1
                )
            }
        }
    }
}

impl std::error::Error for BaselineError {}

/// Minimum distance from each node to its nearest target.
#[derive(Debug, Clone)]
pub struct PruneTable {
    lambda: Vec<u32>,
}

impl PruneTable {
    pub fn lambda(&self, v: Node) -> u32 {
        self.lambda[v.index()]
    }
}

/// One multi-source search from all targets fills the whole table.
pub fn compute_prune_table(instance: &Instance<'_>) -> PruneTable {
    PruneTable { lambda: multi_source_bfs(instance.graph(), instance.targets()) }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TenVertex {
    Source,
    Sink,
    /// Overflow sink tier for surplus agents when there are fewer targets
    /// than agents.
    Park,
    In(Node, usize),
    Out(Node, usize),
}

/// Flow network for one horizon, including its flow state.
pub struct TimeExpandedNetwork {
    net: FlowNetwork,
    horizon: usize,
    n_graph_nodes: usize,
    /// one per agent, in instance start order
    source_arcs: Vec<u32>,
    park: Option<u32>,
}

const SOURCE: u32 = 0;
const SINK: u32 = 1;

/// Builds the network for `horizon >= 1`:
/// stay arcs (v_in^t, v_out^t); move arcs (u_in^t, v_out^t) per edge and
/// direction; chain arcs (v_out^t, v_in^{t+1}); source arcs to the starts'
/// v_in^0; sink arcs from the targets' v_out^{horizon-1}. All capacities are
/// one. With fewer targets than agents, non-target v_out^{horizon-1}
/// vertices drain through a park vertex whose sink arc absorbs exactly the
/// surplus, so full flow still forces every target sink arc to saturate.
pub fn build_network(instance: &Instance<'_>, horizon: usize) -> TimeExpandedNetwork {
    assert!(horizon >= 1, "horizon zero is decided without a network");
    let graph = instance.graph();
    let v_count = graph.n_nodes();
    let surplus = instance.n_agents() - instance.n_targets();
    let mut n_vertices = 2 + 2 * horizon * v_count;
    let park = (surplus > 0).then(|| {
        let id = n_vertices as u32;
        n_vertices += 1;
        id
    });
    let mut net = FlowNetwork::new(n_vertices, SOURCE, SINK).expect("source and sink differ");
    let in_v = |v: Node, t: usize| 2 + 2 * (t * v_count + v.index()) as u32;
    let out_v = |v: Node, t: usize| in_v(v, t) + 1;

    let source_arcs = instance
        .starts()
        .iter()
        .map(|&s| net.add_arc(SOURCE, in_v(s, 0), 1))
        .collect();
    for t in 0..horizon {
        for v in graph.nodes() {
            // move arcs first so the path search advances before it waits
            for &u in graph.neighbors(v) {
                net.add_arc(in_v(v, t), out_v(u, t), 1);
            }
            net.add_arc(in_v(v, t), out_v(v, t), 1);
            if t + 1 < horizon {
                net.add_arc(out_v(v, t), in_v(v, t + 1), 1);
            }
        }
    }
    for &g in instance.targets() {
        net.add_arc(out_v(g, horizon - 1), SINK, 1);
    }
    if let Some(park) = park {
        for v in graph.nodes() {
            if !instance.is_target(v) {
                net.add_arc(out_v(v, horizon - 1), park, 1);
            }
        }
        net.add_arc(park, SINK, surplus as u32);
    }
    TimeExpandedNetwork { net, horizon, n_graph_nodes: v_count, source_arcs, park }
}

impl TimeExpandedNetwork {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn n_vertices(&self) -> usize {
        self.net.n_vertices()
    }

    pub fn n_arcs(&self) -> usize {
        self.net.n_arcs()
    }

    pub fn flow_value(&self) -> usize {
        self.net.flow_value()
    }

    pub fn augmentations(&self) -> u64 {
        self.net.augmentations()
    }

    pub fn pruned_skips(&self) -> u64 {
        self.net.pruned_skips()
    }

    pub fn describe(&self, vertex: u32) -> TenVertex {
        if vertex == SOURCE {
            return TenVertex::Source;
        }
        if vertex == SINK {
            return TenVertex::Sink;
        }
        if Some(vertex) == self.park {
            return TenVertex::Park;
        }
        let k = (vertex - 2) as usize;
        let idx = k / 2;
        let (t, v) = (idx / self.n_graph_nodes, idx % self.n_graph_nodes);
        if k % 2 == 0 {
            TenVertex::In(Node(v as u32), t)
        } else {
            TenVertex::Out(Node(v as u32), t)
        }
    }

    fn in_vertex(&self, v: Node, t: usize) -> u32 {
        2 + 2 * (t * self.n_graph_nodes + v.index()) as u32
    }

    fn out_vertex(&self, v: Node, t: usize) -> u32 {
        self.in_vertex(v, t) + 1
    }

    /// Decomposes the current flow into per-unit node sequences of length
    /// horizon + 1, ordered like the source arcs that carry them.
    pub fn extract_paths(&self) -> Vec<Vec<Node>> {
        let mut paths = Vec::new();
        for &arc in &self.source_arcs {
            if self.net.arc_flow(arc) == 0 {
                continue;
            }
            let mut vertex = self
                .net
                .arcs_from(SOURCE)
                .find(|a| a.id == arc)
                .expect("source arc exists")
                .to;
            let TenVertex::In(start, 0) = self.describe(vertex) else {
                panic!("source arcs feed layer-zero in-vertices");
            };
            let mut positions = vec![start];
            loop {
                // in-vertex: exactly one flowing arc leads to an out-vertex
                let step = self
                    .net
                    .arcs_from(vertex)
                    .find(|a| a.is_forward && self.net.arc_flow(a.id) > 0)
                    .expect("unit flow continues from an in-vertex");
                let TenVertex::Out(node, t) = self.describe(step.to) else {
                    panic!("in-vertices feed out-vertices");
                };
                positions.push(node);
                let next = self
                    .net
                    .arcs_from(step.to)
                    .find(|a| a.is_forward && self.net.arc_flow(a.id) > 0)
                    .expect("unit flow continues from an out-vertex");
                match self.describe(next.to) {
                    TenVertex::In(_, _) => vertex = next.to,
                    TenVertex::Sink | TenVertex::Park => {
                        debug_assert_eq!(t, self.horizon - 1);
                        break;
                    }
                    other => panic!("unexpected successor {:?}", other),
                }
            }
            paths.push(positions);
        }
        paths
    }
}

/// Outcome of one horizon's feasibility check.
pub struct FeasibleOutcome {
    pub network: TimeExpandedNetwork,
    pub feasible: bool,
}

/// Decides whether the instance has a makespan-`horizon` solution.
///
/// `use_prune` skips v_out^t vertices with t + lambda(v) >= horizon during
/// the path search (disabled internally when surplus agents exist, since
/// they are allowed to end away from targets). `reuse_from` must be the
/// returned state for `horizon - 1`; its flow is extended by one waiting
/// step per unit before any new search runs. Neither option changes the
/// verdict.
pub fn feasible(
    instance: &Instance<'_>,
    horizon: usize,
    use_prune: bool,
    reuse_from: Option<&TimeExpandedNetwork>,
) -> Result<FeasibleOutcome, BaselineError> {
    let table = (use_prune && instance.n_agents() == instance.n_targets())
        .then(|| compute_prune_table(instance));
    run_feasible(instance, horizon, table.as_ref(), reuse_from)
}

fn run_feasible(
    instance: &Instance<'_>,
    horizon: usize,
    prune_table: Option<&PruneTable>,
    reuse_from: Option<&TimeExpandedNetwork>,
) -> Result<FeasibleOutcome, BaselineError> {
    let mut ten = build_network(instance, horizon);
    if let Some(prior) = reuse_from {
        if prior.horizon + 1 != horizon {
            return Err(BaselineError::ReuseHorizonMismatch { expected: horizon - 1, got: prior.horizon });
        }
        for path in prior.extract_paths() {
            let mut vertices = vec![SOURCE, ten.in_vertex(path[0], 0)];
            for t in 0..horizon {
                // the prior path gains one trailing wait at its end node
                let node = *path.get(t + 1).unwrap_or_else(|| path.last().unwrap());
                vertices.push(ten.out_vertex(node, t));
                if t + 1 < horizon {
                    vertices.push(ten.in_vertex(node, t + 1));
                }
            }
            // units that ended away from a target drain through the park tier
            let final_node = *path.last().unwrap();
            if !instance.is_target(final_node) {
                vertices.push(ten.park.expect("non-target endings imply surplus agents"));
            }
            vertices.push(SINK);
            ten.net.force_path(&vertices);
        }
    }

    let n_agents = instance.n_agents();
    let flow = if let Some(table) = prune_table {
        let v_count = ten.n_graph_nodes;
        let park = ten.park;
        let pred = move |vertex: u32| {
            if vertex <= SINK || Some(vertex) == park {
                return false;
            }
            let k = (vertex - 2) as usize;
            if k % 2 == 0 {
                return false;
            }
            let idx = k / 2;
            let (t, v) = (idx / v_count, idx % v_count);
            t + table.lambda[v] as usize >= horizon
        };
        ten.net.max_flow(Some(&pred))
    } else {
        ten.net.max_flow(None)
    };
    Ok(FeasibleOutcome { feasible: flow == n_agents, network: ten })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LowerBoundMode {
    /// max over agents of the heuristic distance to the nearest target
    Conservative,
    /// optimal bottleneck assignment cost; tighter but costs an assignment
    Bottleneck,
}

#[derive(Debug, Clone)]
pub struct FlowSolveOptions {
    pub lower_bound: LowerBoundMode,
    pub use_prune: bool,
    pub use_reuse: bool,
    pub timeout: Option<Duration>,
}

impl FlowSolveOptions {
    /// Bottleneck bound pays off until the assignment itself dominates;
    /// beyond `BOTTLENECK_LB_AGENT_LIMIT` agents the cheap bound wins.
    pub fn for_instance(instance: &Instance<'_>) -> Self {
        FlowSolveOptions {
            lower_bound: if instance.n_agents() > BOTTLENECK_LB_AGENT_LIMIT {
                LowerBoundMode::Conservative
            } else {
                LowerBoundMode::Bottleneck
            },
            use_prune: true,
            use_reuse: true,
            timeout: None,
        }
    }
}

pub const BOTTLENECK_LB_AGENT_LIMIT: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HorizonStats {
    pub horizon: usize,
    pub flow: usize,
    pub augmentations: u64,
    pub pruned_skips: u64,
}

pub struct OptimalSolution {
    pub plan: Plan,
    pub makespan: usize,
    pub lower_bound: usize,
    /// per-horizon diagnostics, in search order
    pub horizons: Vec<HorizonStats>,
}

impl OptimalSolution {
    /// Diagnostic CSV: `T,flow,augmentations,pruned_expansions`.
    pub fn horizons_csv(&self) -> String {
        let mut out = String::from("T,flow,augmentations,pruned_expansions\n");
        for h in &self.horizons {
            out.push_str(&format!("{},{},{},{}\n", h.horizon, h.flow, h.augmentations, h.pruned_skips));
        }
        out
    }
}

pub fn makespan_lower_bound(instance: &Instance<'_>, mode: LowerBoundMode) -> usize {
    match mode {
        LowerBoundMode::Conservative => {
            let graph = instance.graph();
            if instance.n_agents() == instance.n_targets() {
                // every agent must reach some target
                instance
                    .starts()
                    .iter()
                    .map(|&s| instance.targets().iter().map(|&g| graph.heuristic(s, g)).min().unwrap_or(0))
                    .max()
                    .unwrap_or(0) as usize
            } else {
                // surplus agents reach nothing, but every target needs someone
                instance
                    .targets()
                    .iter()
                    .map(|&g| instance.starts().iter().map(|&s| graph.heuristic(s, g)).min().unwrap_or(0))
                    .max()
                    .unwrap_or(0) as usize
            }
        }
        LowerBoundMode::Bottleneck => {
            assign_bottleneck(instance, false, Eval::Lazy).assignment.target_bottleneck() as usize
        }
    }
}

/// Smallest horizon with a feasible flow, searched incrementally from the
/// lower bound; the extracted plan is swap-conflict free.
pub fn solve_optimal(instance: &Instance<'_>, opts: &FlowSolveOptions) -> Result<OptimalSolution, BaselineError> {
    // horizon zero: the starts already cover every target
    if instance.targets().iter().all(|g| instance.starts().contains(g)) {
        let plan = Plan::from_paths(instance.starts().iter().map(|&s| vec![s]).collect())
            .expect("instances have agents");
        return Ok(OptimalSolution { plan, makespan: 0, lower_bound: 0, horizons: Vec::new() });
    }

    let deadline = opts.timeout.map(|t| Instant::now() + t);
    let lower_bound = makespan_lower_bound(instance, opts.lower_bound).max(1);
    let horizon_cap = instance.graph().n_nodes() + instance.n_agents() + 2;
    // one-shot preprocessing shared by every horizon
    let prune_table = (opts.use_prune && instance.n_agents() == instance.n_targets())
        .then(|| compute_prune_table(instance));
    let mut prior: Option<TimeExpandedNetwork> = None;
    let mut horizons = Vec::new();
    let mut horizon = lower_bound;
    loop {
        if let Some(deadline) = deadline {
            if Instant::now() > deadline {
                return Err(BaselineError::Timeout { last_horizon: horizon });
            }
        }
        if horizon > horizon_cap {
            return Err(BaselineError::HorizonOverrun { horizon });
        }
        let outcome = run_feasible(instance, horizon, prune_table.as_ref(), prior.as_ref())?;
        horizons.push(HorizonStats {
            horizon,
            flow: outcome.network.flow_value(),
            augmentations: outcome.network.augmentations(),
            pruned_skips: outcome.network.pruned_skips(),
        });
        if outcome.feasible {
            let raw = Plan::from_paths(outcome.network.extract_paths()).expect("full flow yields one path per agent");
            let plan = resolve_swap_conflicts(raw)?;
            return Ok(OptimalSolution { plan, makespan: horizon, lower_bound, horizons });
        }
        prior = opts.use_reuse.then_some(outcome.network);
        horizon += 1;
    }
}

/// Rewrites head-on exchanges into waits by trading the two agents' path
/// suffixes; agents are interchangeable so the occupied node set at every
/// timestep is unchanged. The input must be vertex-conflict free.
pub fn resolve_swap_conflicts(plan: Plan) -> Result<Plan, BaselineError> {
    let mut paths: Vec<Vec<Node>> = plan.paths().to_vec();
    let len = paths[0].len();
    let n = paths.len();
    for t in 0..len {
        for i in 0..n {
            for j in i + 1..n {
                if paths[i][t] == paths[j][t] {
                    return Err(BaselineError::VertexConflictInRawPlan { timestep: t, agents: (i, j) });
                }
            }
        }
    }
    for t in 0..len - 1 {
        // swap pairs at one timestep are vertex-disjoint, fix each directly
        for i in 0..n {
            for j in i + 1..n {
                let head_on = paths[i][t] == paths[j][t + 1]
                    && paths[i][t + 1] == paths[j][t]
                    && paths[i][t] != paths[i][t + 1];
                if head_on {
                    let (left, right) = paths.split_at_mut(j);
                    left[i][t + 1..].swap_with_slice(&mut right[0][t + 1..]);
                }
            }
        }
    }
    Ok(Plan::from_paths(paths).expect("suffix exchange preserves shape"))
}
