//! Initial target assignment.
//!
//! All algorithms produce a complete assignment: every target is claimed by
//! exactly one agent and surplus agents receive distinct non-target parking
//! nodes. Distance work is counted in BFS node expansions so lazy and eager
//! evaluation can be compared.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};
use std::fmt;

use crate::graph::{DistanceOracle, Graph, Node};
use crate::instance::Instance;
use crate::matching::{augment_once, min_cost_max_matching, BipartiteGraph, Matching};

/// Whether distances are resolved on demand or exhaustively up front.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Eval {
    Lazy,
    Eager,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    Makespan,
    SumOfCosts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssignKind {
    /// minimize the maximum start-target distance
    Bottleneck,
    /// bottleneck, then minimum total cost among bottleneck-feasible edges
    BottleneckMinCost,
    /// greedy nearest-target with pairwise-swap refinement of the makespan
    GreedyMakespan,
    /// greedy nearest-target with pairwise-swap refinement of the cost sum
    GreedySumOfCosts,
    /// globally shortest pair first
    NaiveGreedy,
    /// minimum total distance over all assignments
    OptimalLinear,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AssignError {
    Incomplete { agent: usize },
    WrongAgentCount { expected: usize, got: usize },
    DuplicateDestination(Node),
    TargetUnclaimed(Node),
    NotZeroOrOneTarget(Node),
    ParkOnTarget { agent: usize, node: Node },
    ParkCapacity,
}

impl fmt::Display for AssignError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AssignError::Incomplete { agent } => write!(f, "agent {} has no destination", agent),
            AssignError::WrongAgentCount { expected, got } => {
                write!(f, "assignment has {} agents, instance has {}", got, expected)
            }
            AssignError::DuplicateDestination(v) => write!(f, "destination {} used twice", v),
            AssignError::TargetUnclaimed(v) => write!(f, "target {} claimed by no agent", v),
            AssignError::NotZeroOrOneTarget(v) => write!(f, "node {} mislabeled as target", v),
            AssignError::ParkOnTarget { agent, node } => {
                write!(f, "agent {} parked on target {}", agent, node)
            }
            AssignError::ParkCapacity => write!(f, "not enough non-target nodes to park surplus agents"),
        }
    }
}

impl std::error::Error for AssignError {}

/// Destination of one agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AssignedDest {
    pub dest: Node,
    pub dist: u32,
    /// false for parking nodes of surplus agents
    pub is_target: bool,
}

/// Per-agent destinations, aligned with the instance's start order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    entries: Vec<Option<AssignedDest>>,
}

impl Assignment {
    pub fn empty(n_agents: usize) -> Self {
        Assignment { entries: vec![None; n_agents] }
    }

    /// Builds an assignment from explicit (agent, target) pairs, computing
    /// distances and parking any unnamed agents.
    pub fn from_pairs(instance: &Instance<'_>, pairs: &[(usize, Node)]) -> Result<Assignment, AssignError> {
        let mut oracle = DistanceOracle::new(instance.graph());
        let mut entries = vec![None; instance.n_agents()];
        for &(agent, target) in pairs {
            let dist = oracle.dist_lazy(instance.starts()[agent], target);
            entries[agent] = Some(AssignedDest { dest: target, dist, is_target: true });
        }
        let mut expansions = 0;
        park_into(instance, &mut entries, &mut expansions)?;
        let assignment = Assignment { entries };
        assignment.validate(instance)?;
        Ok(assignment)
    }

    pub fn n_agents(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, agent: usize) -> Option<&AssignedDest> {
        self.entries[agent].as_ref()
    }

    pub fn set(&mut self, agent: usize, dest: AssignedDest) {
        self.entries[agent] = Some(dest);
    }

    pub fn is_complete(&self) -> bool {
        self.entries.iter().all(|e| e.is_some())
    }

    pub fn assigned(&self) -> impl Iterator<Item = (usize, &AssignedDest)> {
        self.entries.iter().enumerate().filter_map(|(i, e)| e.as_ref().map(|d| (i, d)))
    }

    /// Largest assigned distance, parking included.
    pub fn bottleneck_cost(&self) -> u32 {
        self.assigned().map(|(_, d)| d.dist).max().unwrap_or(0)
    }

    /// Largest start-to-target distance, parking excluded. This is the value
    /// a bottleneck-optimal assignment minimizes.
    pub fn target_bottleneck(&self) -> u32 {
        self.assigned().filter(|(_, d)| d.is_target).map(|(_, d)| d.dist).max().unwrap_or(0)
    }

    pub fn total_cost(&self) -> u64 {
        self.assigned().map(|(_, d)| d.dist as u64).sum()
    }

    pub fn validate(&self, instance: &Instance<'_>) -> Result<(), AssignError> {
        if self.entries.len() != instance.n_agents() {
            return Err(AssignError::WrongAgentCount {
                expected: instance.n_agents(),
                got: self.entries.len(),
            });
        }
        let graph = instance.graph();
        let mut used = vec![false; graph.n_nodes()];
        let mut covered = 0;
        for (agent, entry) in self.entries.iter().enumerate() {
            let Some(d) = entry else {
                return Err(AssignError::Incomplete { agent });
            };
            if used[d.dest.index()] {
                return Err(AssignError::DuplicateDestination(d.dest));
            }
            used[d.dest.index()] = true;
            if d.is_target != instance.is_target(d.dest) {
                if d.is_target {
                    return Err(AssignError::NotZeroOrOneTarget(d.dest));
                }
                return Err(AssignError::ParkOnTarget { agent, node: d.dest });
            }
            if d.is_target {
                covered += 1;
            }
        }
        if covered != instance.n_targets() {
            let missed = instance
                .targets()
                .iter()
                .find(|t| !used[t.index()])
                .copied()
                .expect("some target is unclaimed");
            return Err(AssignError::TargetUnclaimed(missed));
        }
        Ok(())
    }

    /// Text export: one `sx,sy -> gx,gy dist=d` line per agent, then a
    /// `bottleneck=B total=C` summary.
    pub fn export_text(&self, instance: &Instance<'_>) -> String {
        use crate::instance::format_node;
        let graph = instance.graph();
        let mut out = String::new();
        for (agent, d) in self.assigned() {
            out.push_str(&format!(
                "{} -> {} dist={}\n",
                format_node(graph, instance.starts()[agent]),
                format_node(graph, d.dest),
                d.dist
            ));
        }
        out.push_str(&format!("bottleneck={} total={}\n", self.bottleneck_cost(), self.total_cost()));
        out
    }
}

/// An assignment plus the BFS expansion count spent building it.
#[derive(Debug, Clone)]
pub struct AssignOutcome {
    pub assignment: Assignment,
    pub expansions: u64,
}

pub fn assign(instance: &Instance<'_>, kind: AssignKind, eval: Eval) -> AssignOutcome {
    match kind {
        AssignKind::Bottleneck => assign_bottleneck(instance, false, eval),
        AssignKind::BottleneckMinCost => assign_bottleneck(instance, true, eval),
        AssignKind::GreedyMakespan => assign_greedy_refined(instance, Objective::Makespan, eval),
        AssignKind::GreedySumOfCosts => assign_greedy_refined(instance, Objective::SumOfCosts, eval),
        AssignKind::NaiveGreedy => assign_naive_greedy(instance),
        AssignKind::OptimalLinear => assign_optimal_linear(instance),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct QueueEntry {
    key: u32,
    s: u32,
    g: u32,
    resolved: bool,
}

impl Ord for QueueEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.key, self.s, self.g, self.resolved).cmp(&(other.key, other.s, other.g, other.resolved))
    }
}

impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Bottleneck assignment: pairs enter a bipartite graph in distance order
/// until one augmenting path per insertion saturates the targets. The popped
/// distance at saturation is the optimal bottleneck. With `with_min_cost`,
/// all distance-tied pairs join the graph and a minimum-cost maximum
/// matching replaces the incumbent.
///
/// Lazy evaluation keeps heuristic estimates in the queue and resolves a real
/// distance only when its entry is popped.
pub fn assign_bottleneck(instance: &Instance<'_>, with_min_cost: bool, eval: Eval) -> AssignOutcome {
    let graph = instance.graph();
    let (n, m) = (instance.n_agents(), instance.n_targets());
    let mut oracle = DistanceOracle::new(graph);
    let mut heap: BinaryHeap<Reverse<QueueEntry>> = BinaryHeap::with_capacity(n * m);
    for s in 0..n as u32 {
        for g in 0..m as u32 {
            let (start, target) = (instance.starts()[s as usize], instance.targets()[g as usize]);
            let entry = match eval {
                Eval::Lazy => QueueEntry { key: graph.heuristic(start, target), s, g, resolved: false },
                Eval::Eager => QueueEntry { key: oracle.dist(start, target), s, g, resolved: true },
            };
            heap.push(Reverse(entry));
        }
    }

    let mut bg = BipartiteGraph::new(n, m);
    let mut matching = Matching::new(&bg);
    while let Some(Reverse(entry)) = heap.pop() {
        if !entry.resolved {
            let d = oracle.dist_lazy(instance.starts()[entry.s as usize], instance.targets()[entry.g as usize]);
            heap.push(Reverse(QueueEntry { key: d, resolved: true, ..entry }));
            continue;
        }
        bg.add_edge(entry.s, entry.g, entry.key).expect("pairs enter the queue once");
        augment_once(&bg, &mut matching).expect("matching tracks this graph");
        if matching.size() == m {
            if with_min_cost {
                // keep pulling pairs whose real distance ties the bottleneck
                while let Some(&Reverse(top)) = heap.peek() {
                    if top.key > entry.key {
                        break;
                    }
                    let Reverse(tied) = heap.pop().unwrap();
                    if !tied.resolved {
                        let d = oracle
                            .dist_lazy(instance.starts()[tied.s as usize], instance.targets()[tied.g as usize]);
                        heap.push(Reverse(QueueEntry { key: d, resolved: true, ..tied }));
                        continue;
                    }
                    // pops are nondecreasing, so a resolved key at most the
                    // bottleneck is exactly the bottleneck
                    debug_assert_eq!(tied.key, entry.key);
                    bg.add_edge(tied.s, tied.g, tied.key).expect("pairs enter the queue once");
                }
                matching = min_cost_max_matching(&bg).expect("graph already saturates the targets");
            }
            break;
        }
    }
    debug_assert!(matching.size() == m, "connected graph saturates all targets");

    let mut expansions = 0;
    let assignment = finish(instance, &bg, &matching, &mut expansions);
    AssignOutcome { assignment, expansions: expansions + oracle.expansions() }
}

/// Resumable per-start search that yields targets in nondecreasing distance.
struct NearestTargetStream {
    dist: Vec<u32>,
    queue: VecDeque<Node>,
    found: Vec<(u32, u32)>,
    cursor: usize,
    expansions: u64,
}

const UNSEEN: u32 = u32::MAX;

impl NearestTargetStream {
    fn new(graph: &Graph, start: Node, target_idx_of: &[Option<u32>], eval: Eval) -> Self {
        let mut stream = NearestTargetStream {
            dist: vec![UNSEEN; graph.n_nodes()],
            queue: VecDeque::from([start]),
            found: Vec::new(),
            cursor: 0,
            expansions: 0,
        };
        stream.dist[start.index()] = 0;
        if let Some(t) = target_idx_of[start.index()] {
            stream.found.push((t, 0));
        }
        if eval == Eval::Eager {
            stream.expand(graph, target_idx_of, None);
        }
        stream
    }

    /// Next not-yet-returned target, resuming the search just far enough.
    fn next(&mut self, graph: &Graph, target_idx_of: &[Option<u32>]) -> Option<(u32, u32)> {
        if self.cursor == self.found.len() {
            self.expand(graph, target_idx_of, Some(self.cursor + 1));
        }
        if self.cursor < self.found.len() {
            self.cursor += 1;
            Some(self.found[self.cursor - 1])
        } else {
            None
        }
    }

    fn expand(&mut self, graph: &Graph, target_idx_of: &[Option<u32>], until_found: Option<usize>) {
        while let Some(v) = self.queue.pop_front() {
            self.expansions += 1;
            let base = self.dist[v.index()];
            for &w in graph.neighbors(v) {
                if self.dist[w.index()] == UNSEEN {
                    self.dist[w.index()] = base + 1;
                    self.queue.push_back(w);
                    if let Some(t) = target_idx_of[w.index()] {
                        self.found.push((t, base + 1));
                    }
                }
            }
            if let Some(goal) = until_found {
                if self.found.len() >= goal {
                    return;
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct MatchedPair {
    agent: u32,
    target: u32,
    dist: u32,
}

/// Greedy nearest-target assignment with displacement, then pairwise-swap
/// refinement of the chosen objective until no swap strictly improves it.
pub fn assign_greedy_refined(instance: &Instance<'_>, objective: Objective, eval: Eval) -> AssignOutcome {
    let graph = instance.graph();
    let (n, m) = (instance.n_agents(), instance.n_targets());
    let mut target_idx_of: Vec<Option<u32>> = vec![None; graph.n_nodes()];
    for (t, &node) in instance.targets().iter().enumerate() {
        target_idx_of[node.index()] = Some(t as u32);
    }

    // greedy phase: each agent claims its nearest untried target, displacing
    // a holder only when strictly closer
    let mut streams: Vec<Option<NearestTargetStream>> = (0..n).map(|_| None).collect();
    let mut holder: Vec<Option<(u32, u32)>> = vec![None; m];
    let mut pending: VecDeque<u32> = (0..n as u32).collect();
    while let Some(agent) = pending.pop_front() {
        let stream = streams[agent as usize]
            .get_or_insert_with(|| NearestTargetStream::new(graph, instance.starts()[agent as usize], &target_idx_of, eval));
        // a drained stream means every target was tried; the agent parks later
        while let Some((t, d)) = stream.next(graph, &target_idx_of) {
            match holder[t as usize] {
                None => {
                    holder[t as usize] = Some((agent, d));
                    break;
                }
                Some((other, other_d)) if d < other_d => {
                    holder[t as usize] = Some((agent, d));
                    pending.push_back(other);
                    break;
                }
                _ => continue,
            }
        }
    }

    let mut matched: Vec<MatchedPair> = holder
        .iter()
        .enumerate()
        .filter_map(|(t, h)| h.map(|(agent, dist)| MatchedPair { agent, target: t as u32, dist }))
        .collect();
    matched.sort_by_key(|p| p.agent);

    let mut refine_oracle = DistanceOracle::new(graph);
    match objective {
        Objective::Makespan => refine_makespan(instance, &mut matched, &mut refine_oracle, eval),
        Objective::SumOfCosts => refine_sum_of_costs(instance, &mut matched, &mut refine_oracle, eval),
    }

    let mut expansions: u64 = streams.iter().flatten().map(|s| s.expansions).sum();
    expansions += refine_oracle.expansions();
    let mut entries = vec![None; n];
    for p in &matched {
        entries[p.agent as usize] = Some(AssignedDest {
            dest: instance.targets()[p.target as usize],
            dist: p.dist,
            is_target: true,
        });
    }
    park_into(instance, &mut entries, &mut expansions).expect("instance guarantees parking capacity");
    let assignment = Assignment { entries };
    debug_assert!(assignment.validate(instance).is_ok());
    AssignOutcome { assignment, expansions }
}

fn refine_makespan(
    instance: &Instance<'_>,
    matched: &mut [MatchedPair],
    oracle: &mut DistanceOracle<'_>,
    eval: Eval,
) {
    if matched.is_empty() {
        return;
    }
    let graph = instance.graph();
    loop {
        let worst = (0..matched.len())
            .max_by_key(|&i| (matched[i].dist, Reverse(matched[i].agent)))
            .unwrap();
        let c_now = matched[worst].dist;
        let (s_i, g_i) = pair_nodes(instance, &matched[worst]);
        let mut updated = false;
        for j in 0..matched.len() {
            if j == worst {
                continue;
            }
            let (s_j, g_j) = pair_nodes(instance, &matched[j]);
            if graph.heuristic(s_j, g_i) >= c_now {
                continue; // cannot beat the incumbent, skip the evaluation
            }
            let d_j_gi = measure(oracle, s_j, g_i, eval);
            let d_i_gj = measure(oracle, s_i, g_j, eval);
            if d_j_gi.max(d_i_gj) < c_now {
                let (ti, tj) = (matched[worst].target, matched[j].target);
                matched[worst].target = tj;
                matched[worst].dist = d_i_gj;
                matched[j].target = ti;
                matched[j].dist = d_j_gi;
                updated = true;
                break;
            }
        }
        if !updated {
            break;
        }
    }
}

fn refine_sum_of_costs(
    instance: &Instance<'_>,
    matched: &mut [MatchedPair],
    oracle: &mut DistanceOracle<'_>,
    eval: Eval,
) {
    let graph = instance.graph();
    loop {
        let mut updated = false;
        'scan: for a in 0..matched.len() {
            for b in a + 1..matched.len() {
                let (s_a, g_a) = pair_nodes(instance, &matched[a]);
                let (s_b, g_b) = pair_nodes(instance, &matched[b]);
                let c_now = matched[a].dist + matched[b].dist;
                if graph.heuristic(s_b, g_a) + graph.heuristic(s_a, g_b) >= c_now {
                    continue;
                }
                let d_b_ga = measure(oracle, s_b, g_a, eval);
                let d_a_gb = measure(oracle, s_a, g_b, eval);
                if d_b_ga + d_a_gb < c_now {
                    let (ta, tb) = (matched[a].target, matched[b].target);
                    matched[a].target = tb;
                    matched[a].dist = d_a_gb;
                    matched[b].target = ta;
                    matched[b].dist = d_b_ga;
                    updated = true;
                    break 'scan;
                }
            }
        }
        if !updated {
            break;
        }
    }
}

fn pair_nodes(instance: &Instance<'_>, p: &MatchedPair) -> (Node, Node) {
    (instance.starts()[p.agent as usize], instance.targets()[p.target as usize])
}

fn measure(oracle: &mut DistanceOracle<'_>, u: Node, target: Node, eval: Eval) -> u32 {
    match eval {
        Eval::Lazy => oracle.dist_lazy(u, target),
        Eval::Eager => oracle.dist(u, target),
    }
}

/// Baseline: sort every start-target pair by distance and accept greedily.
pub fn assign_naive_greedy(instance: &Instance<'_>) -> AssignOutcome {
    let (n, m) = (instance.n_agents(), instance.n_targets());
    let mut oracle = DistanceOracle::new(instance.graph());
    let mut pairs = Vec::with_capacity(n * m);
    for s in 0..n as u32 {
        for g in 0..m as u32 {
            let d = oracle.dist(instance.starts()[s as usize], instance.targets()[g as usize]);
            pairs.push((d, s, g));
        }
    }
    pairs.sort_unstable();
    let mut entries = vec![None; n];
    let mut target_taken = vec![false; m];
    let mut taken = 0;
    for &(d, s, g) in &pairs {
        if taken == m {
            break;
        }
        if entries[s as usize].is_some() || target_taken[g as usize] {
            continue;
        }
        entries[s as usize] = Some(AssignedDest {
            dest: instance.targets()[g as usize],
            dist: d,
            is_target: true,
        });
        target_taken[g as usize] = true;
        taken += 1;
    }
    let mut expansions = 0;
    park_into(instance, &mut entries, &mut expansions).expect("instance guarantees parking capacity");
    AssignOutcome { assignment: Assignment { entries }, expansions: expansions + oracle.expansions() }
}

/// Minimum total distance over all assignments, by successive shortest paths
/// on the complete start-target bipartite graph.
pub fn assign_optimal_linear(instance: &Instance<'_>) -> AssignOutcome {
    let (n, m) = (instance.n_agents(), instance.n_targets());
    let mut oracle = DistanceOracle::new(instance.graph());
    let mut bg = BipartiteGraph::new(n, m);
    for s in 0..n as u32 {
        for g in 0..m as u32 {
            let d = oracle.dist(instance.starts()[s as usize], instance.targets()[g as usize]);
            bg.add_edge(s, g, d).expect("complete graph has unique pairs");
        }
    }
    let matching = if m > 0 {
        min_cost_max_matching(&bg).expect("connected graph saturates all targets")
    } else {
        Matching::new(&bg)
    };
    let mut expansions = 0;
    let assignment = finish(instance, &bg, &matching, &mut expansions);
    AssignOutcome { assignment, expansions: expansions + oracle.expansions() }
}

fn finish(
    instance: &Instance<'_>,
    bg: &BipartiteGraph,
    matching: &Matching,
    expansions: &mut u64,
) -> Assignment {
    let mut entries = vec![None; instance.n_agents()];
    for (s, g) in matching.pairs() {
        entries[s as usize] = Some(AssignedDest {
            dest: instance.targets()[g as usize],
            dist: bg.cost(s, g).expect("matched pair is an edge"),
            is_target: true,
        });
    }
    park_into(instance, &mut entries, expansions).expect("instance guarantees parking capacity");
    let assignment = Assignment { entries };
    debug_assert!(assignment.validate(instance).is_ok());
    assignment
}

/// Parks every agent without a target at a distinct non-target node: its own
/// start when possible, otherwise the nearest free non-target node with ids
/// breaking distance ties.
pub fn park_surplus_agents(instance: &Instance<'_>, partial: Assignment) -> Result<Assignment, AssignError> {
    if partial.n_agents() != instance.n_agents() {
        return Err(AssignError::WrongAgentCount {
            expected: instance.n_agents(),
            got: partial.n_agents(),
        });
    }
    let mut entries = partial.entries;
    let mut expansions = 0;
    park_into(instance, &mut entries, &mut expansions)?;
    let assignment = Assignment { entries };
    assignment.validate(instance)?;
    Ok(assignment)
}

fn park_into(
    instance: &Instance<'_>,
    entries: &mut [Option<AssignedDest>],
    expansions: &mut u64,
) -> Result<(), AssignError> {
    let graph = instance.graph();
    let mut claimed = vec![false; graph.n_nodes()];
    for d in entries.iter().flatten() {
        claimed[d.dest.index()] = true;
    }
    for (agent, entry) in entries.iter_mut().enumerate() {
        if entry.is_some() {
            continue;
        }
        let start = instance.starts()[agent];
        // BFS rings from the start; within a ring, smallest id first.
        // Ring zero is the start itself, so an eligible own start wins.
        let mut seen = vec![false; graph.n_nodes()];
        seen[start.index()] = true;
        let mut ring = vec![start];
        let mut dist = 0u32;
        let found = 'search: loop {
            let mut ordered = ring.clone();
            ordered.sort_unstable();
            for &v in &ordered {
                if !instance.is_target(v) && !claimed[v.index()] {
                    break 'search Some((v, dist));
                }
            }
            let mut next = Vec::new();
            for &v in &ring {
                *expansions += 1;
                for &w in graph.neighbors(v) {
                    if !seen[w.index()] {
                        seen[w.index()] = true;
                        next.push(w);
                    }
                }
            }
            if next.is_empty() {
                break None;
            }
            ring = next;
            dist += 1;
        };
        let Some((park, d)) = found else {
            return Err(AssignError::ParkCapacity);
        };
        claimed[park.index()] = true;
        *entry = Some(AssignedDest { dest: park, dist: d, is_target: false });
    }
    Ok(())
}
