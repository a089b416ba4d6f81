//! TSWAP planners: one-step moves along shortest paths with target swapping
//! and deadlock rotation.
//!
//! The offline engine runs synchronous timesteps over all agents and emits a
//! plan; the online engine runs one agent per activation under an arbitrary
//! fair schedule and emits a trace. Both terminate for any complete
//! assignment because each swap, rotation, or move strictly decreases an
//! integer potential.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::assignment::{AssignError, Assignment};
use crate::graph::{DistanceOracle, Node};
use crate::instance::{Instance, Plan};

/// Where an agent is and where it is headed. Positions stay pairwise
/// distinct, and so do targets; swaps and rotations only permute targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AgentState {
    pub id: usize,
    pub v: Node,
    pub g: Node,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepEvent {
    Stay,
    Move { from: Node, to: Node },
    SwapTargets { with: usize },
    RotateTargets { cycle: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveError {
    InvalidAssignment(AssignError),
    /// The engine exceeded its theoretical step bound; indicates a bug.
    ProgressStall { timestep: usize },
}

impl fmt::Display for SolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveError::InvalidAssignment(e) => write!(f, "invalid assignment: {}", e),
            SolveError::ProgressStall { timestep } => {
                write!(f, "no progress by timestep {}; potential argument violated", timestep)
            }
        }
    }
}

impl std::error::Error for SolveError {}

enum Decision {
    AtTarget,
    MoveTo(Node),
    Swap(usize),
    Rotate(Vec<usize>),
    Blocked(usize),
}

/// Shared state machine of both engines: one agent's read-decide-act step.
pub struct TswapCore<'g> {
    oracle: DistanceOracle<'g>,
    states: Vec<AgentState>,
    occupant: Vec<Option<u32>>,
    is_target: Vec<bool>,
    covered: usize,
    n_targets: usize,
}

impl<'g> TswapCore<'g> {
    pub fn new(instance: &Instance<'g>, assignment: &Assignment) -> Result<Self, SolveError> {
        assignment.validate(instance).map_err(SolveError::InvalidAssignment)?;
        let graph = instance.graph();
        let mut occupant = vec![None; graph.n_nodes()];
        let mut is_target = vec![false; graph.n_nodes()];
        for &t in instance.targets() {
            is_target[t.index()] = true;
        }
        let mut covered = 0;
        let states = instance
            .starts()
            .iter()
            .enumerate()
            .map(|(id, &v)| {
                occupant[v.index()] = Some(id as u32);
                if is_target[v.index()] {
                    covered += 1;
                }
                AgentState { id, v, g: assignment.get(id).unwrap().dest }
            })
            .collect();
        Ok(TswapCore {
            oracle: DistanceOracle::new(graph),
            states,
            occupant,
            is_target,
            covered,
            n_targets: instance.n_targets(),
        })
    }

    pub fn states(&self) -> &[AgentState] {
        &self.states
    }

    pub fn positions(&self) -> Vec<Node> {
        self.states.iter().map(|s| s.v).collect()
    }

    pub fn all_targets_covered(&self) -> bool {
        self.covered == self.n_targets
    }

    fn decide(&mut self, agent: usize) -> Decision {
        let st = self.states[agent];
        if st.v == st.g {
            return Decision::AtTarget;
        }
        let u = self.oracle.next_node(st.v, st.g);
        match self.occupant[u.index()] {
            None => Decision::MoveTo(u),
            Some(b) => {
                let b = b as usize;
                if self.states[b].v == self.states[b].g {
                    // the blocker rests on its own target: trade targets
                    Decision::Swap(b)
                } else if let Some(cycle) = self.detect_deadlock(agent) {
                    Decision::Rotate(cycle)
                } else {
                    Decision::Blocked(b)
                }
            }
        }
    }

    /// Follows occupied next nodes from `origin`; a cycle back to `origin`
    /// is a deadlock. Chains that leave an unoccupied next node, hit an agent
    /// already home, or loop elsewhere are not.
    pub fn detect_deadlock(&mut self, origin: usize) -> Option<Vec<usize>> {
        let mut chain = vec![origin];
        let mut on_chain = vec![false; self.states.len()];
        on_chain[origin] = true;
        let mut current = origin;
        loop {
            let st = self.states[current];
            if st.v == st.g {
                return None;
            }
            let u = self.oracle.next_node(st.v, st.g);
            let next = self.occupant[u.index()]? as usize;
            if next == origin {
                return Some(chain);
            }
            if on_chain[next] {
                return None;
            }
            on_chain[next] = true;
            chain.push(next);
            current = next;
        }
    }

    fn apply_move(&mut self, agent: usize, to: Node) {
        let from = self.states[agent].v;
        debug_assert!(self.occupant[to.index()].is_none());
        self.occupant[from.index()] = None;
        self.occupant[to.index()] = Some(agent as u32);
        self.states[agent].v = to;
        if self.is_target[from.index()] {
            self.covered -= 1;
        }
        if self.is_target[to.index()] {
            self.covered += 1;
        }
    }

    fn apply_swap(&mut self, a: usize, b: usize) {
        let (ga, gb) = (self.states[a].g, self.states[b].g);
        self.states[a].g = gb;
        self.states[b].g = ga;
    }

    /// Cyclic shift: each agent in the cycle takes its predecessor's target.
    fn apply_rotation(&mut self, cycle: &[usize]) {
        let old: Vec<Node> = cycle.iter().map(|&a| self.states[a].g).collect();
        let k = cycle.len();
        for (i, &a) in cycle.iter().enumerate() {
            self.states[a].g = old[(i + k - 1) % k];
        }
    }

    /// One full activation: decide, resolve rotations in place, and act.
    /// The last event is always `Stay`, `Move`, or `SwapTargets`.
    pub fn activate(&mut self, agent: usize) -> Vec<StepEvent> {
        let mut events = Vec::with_capacity(1);
        loop {
            match self.decide(agent) {
                Decision::AtTarget | Decision::Blocked(_) => {
                    events.push(StepEvent::Stay);
                    break;
                }
                Decision::MoveTo(u) => {
                    let from = self.states[agent].v;
                    self.apply_move(agent, u);
                    events.push(StepEvent::Move { from, to: u });
                    break;
                }
                Decision::Swap(b) => {
                    self.apply_swap(agent, b);
                    events.push(StepEvent::SwapTargets { with: b });
                    break;
                }
                Decision::Rotate(cycle) => {
                    self.apply_rotation(&cycle);
                    events.push(StepEvent::RotateTargets { cycle });
                    // re-evaluate: the rotation may have freed this agent's way
                }
            }
        }
        events
    }
}

/// Synchronous engine: each `step` plans every agent once (with re-insertion
/// of agents blocked by not-yet-planned agents) and advances one timestep.
pub struct OfflineEngine<'g> {
    core: TswapCore<'g>,
    snapshots: Vec<Vec<Node>>,
    events: Vec<(usize, usize, StepEvent)>,
    t: usize,
}

impl<'g> OfflineEngine<'g> {
    pub fn new(instance: &Instance<'g>, assignment: &Assignment) -> Result<Self, SolveError> {
        let core = TswapCore::new(instance, assignment)?;
        let snapshots = vec![core.positions()];
        Ok(OfflineEngine { core, snapshots, events: Vec::new(), t: 0 })
    }

    pub fn finished(&self) -> bool {
        self.core.all_targets_covered()
    }

    pub fn timestep(&self) -> usize {
        self.t
    }

    pub fn agent_states(&self) -> &[AgentState] {
        self.core.states()
    }

    pub fn events(&self) -> &[(usize, usize, StepEvent)] {
        &self.events
    }

    /// Runs one timestep. Agents are keyed by (defer count, id); an agent
    /// blocked by an unplanned agent re-enters the queue instead of wasting
    /// a wait, capped at one defer per blocker chain member.
    pub fn step(&mut self) {
        let n = self.core.states.len();
        let mut processed = vec![false; n];
        let mut defers = vec![0usize; n];
        let mut queue: BinaryHeap<Reverse<(usize, usize)>> =
            (0..n).map(|id| Reverse((0, id))).collect();
        while let Some(Reverse((_, agent))) = queue.pop() {
            if processed[agent] {
                continue;
            }
            loop {
                match self.core.decide(agent) {
                    Decision::AtTarget => {
                        processed[agent] = true;
                        break;
                    }
                    Decision::MoveTo(u) => {
                        let from = self.core.states[agent].v;
                        self.core.apply_move(agent, u);
                        self.events.push((self.t, agent, StepEvent::Move { from, to: u }));
                        processed[agent] = true;
                        break;
                    }
                    Decision::Swap(b) => {
                        self.core.apply_swap(agent, b);
                        self.events.push((self.t, agent, StepEvent::SwapTargets { with: b }));
                        processed[agent] = true;
                        break;
                    }
                    Decision::Rotate(cycle) => {
                        self.core.apply_rotation(&cycle);
                        self.events.push((self.t, agent, StepEvent::RotateTargets { cycle }));
                        // re-evaluate within the same activation
                    }
                    Decision::Blocked(blocker) => {
                        if !processed[blocker] && defers[agent] < n {
                            defers[agent] += 1;
                            queue.push(Reverse((defers[agent], agent)));
                        } else {
                            processed[agent] = true;
                        }
                        break;
                    }
                }
            }
        }
        self.t += 1;
        self.snapshots.push(self.core.positions());
    }

    pub fn into_plan(self) -> Plan {
        let n = self.core.states.len();
        let paths = (0..n)
            .map(|agent| self.snapshots.iter().map(|snap| snap[agent]).collect())
            .collect();
        Plan::from_paths(paths).expect("snapshots are rectangular")
    }
}

/// A plan plus the swap and rotation events that produced it.
pub struct OfflineRun {
    pub plan: Plan,
    pub events: Vec<(usize, usize, StepEvent)>,
}

/// Plans collision-free paths for a complete assignment. The plan ends at
/// the first timestep where every target is occupied.
pub fn solve_offline(instance: &Instance<'_>, assignment: &Assignment) -> Result<OfflineRun, SolveError> {
    let mut engine = OfflineEngine::new(instance, assignment)?;
    // Bound from the termination potential: distance sum plus at most n
    // blocking targets per agent.
    let n = instance.n_agents();
    let cap = assignment.total_cost() as usize + n * n + 1;
    while !engine.finished() {
        if engine.timestep() > cap {
            return Err(SolveError::ProgressStall { timestep: engine.timestep() });
        }
        engine.step();
    }
    let events = std::mem::take(&mut engine.events);
    Ok(OfflineRun { plan: engine.into_plan(), events })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    RoundRobin,
    RandomFair,
    /// The named agent joins only every `slowdown`-th round.
    Delayed { agent: usize, slowdown: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScheduleError {
    ZeroAgents,
    SlowdownTooSmall,
    AgentOutOfRange { agent: usize, n_agents: usize },
}

impl fmt::Display for ScheduleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScheduleError::ZeroAgents => write!(f, "schedule needs at least one agent"),
            ScheduleError::SlowdownTooSmall => write!(f, "slowdown factor must be at least 1"),
            ScheduleError::AgentOutOfRange { agent, n_agents } => {
                write!(f, "agent {} out of range ({} agents)", agent, n_agents)
            }
        }
    }
}

impl std::error::Error for ScheduleError {}

/// Conceptually infinite activation sequence in which every agent appears
/// within any `fairness_window` consecutive activations.
pub struct Schedule {
    kind: ScheduleKind,
    n_agents: usize,
    rng: ChaCha8Rng,
    queue: VecDeque<usize>,
    block: u64,
}

pub fn make_schedule(kind: ScheduleKind, n_agents: usize, seed: u64) -> Result<Schedule, ScheduleError> {
    if n_agents == 0 {
        return Err(ScheduleError::ZeroAgents);
    }
    if let ScheduleKind::Delayed { agent, slowdown } = kind {
        if slowdown < 1 {
            return Err(ScheduleError::SlowdownTooSmall);
        }
        if agent >= n_agents {
            return Err(ScheduleError::AgentOutOfRange { agent, n_agents });
        }
    }
    Ok(Schedule {
        kind,
        n_agents,
        rng: ChaCha8Rng::seed_from_u64(seed),
        queue: VecDeque::new(),
        block: 0,
    })
}

impl Schedule {
    pub fn next_agent(&mut self) -> usize {
        if self.queue.is_empty() {
            self.refill();
        }
        self.queue.pop_front().expect("refill never leaves the queue empty")
    }

    fn refill(&mut self) {
        match self.kind {
            ScheduleKind::RoundRobin => self.queue.extend(0..self.n_agents),
            ScheduleKind::RandomFair => {
                let mut ids: Vec<usize> = (0..self.n_agents).collect();
                ids.shuffle(&mut self.rng);
                self.queue.extend(ids);
            }
            ScheduleKind::Delayed { agent, slowdown } => {
                let include_slowed = self.block % slowdown as u64 == 0;
                self.queue.extend(
                    (0..self.n_agents).filter(|&id| id != agent || include_slowed),
                );
            }
        }
        self.block += 1;
    }

    pub fn fairness_window(&self) -> usize {
        match self.kind {
            ScheduleKind::RoundRobin => self.n_agents,
            // adjacent shuffled blocks can separate two appearances by 2n-2
            ScheduleKind::RandomFair => 2 * self.n_agents - 1,
            ScheduleKind::Delayed { slowdown, .. } => self.n_agents * slowdown,
        }
    }
}

/// What one activation did.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivationRecord {
    pub index: u64,
    pub agent: usize,
    pub from: Node,
    pub to: Node,
    pub events: Vec<StepEvent>,
}

impl ActivationRecord {
    pub fn moved(&self) -> bool {
        self.from != self.to
    }
}

#[derive(Debug, Clone, Default)]
pub struct ExecutionTrace {
    pub records: Vec<ActivationRecord>,
    pub terminated: bool,
    pub n_agents: usize,
}

impl ExecutionTrace {
    pub fn sum_of_moves(&self) -> usize {
        self.records.iter().filter(|r| r.moved()).count()
    }

    pub fn maximum_moves(&self) -> usize {
        let mut per_agent = vec![0usize; self.n_agents];
        for r in self.records.iter().filter(|r| r.moved()) {
            per_agent[r.agent] += 1;
        }
        per_agent.into_iter().max().unwrap_or(0)
    }

    pub fn activations_to_termination(&self) -> Option<usize> {
        self.terminated.then_some(self.records.len())
    }

    /// CSV export, one row per event:
    /// `activation,agent,from,to,event,partners`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("activation,agent,from,to,event,partners\n");
        for r in &self.records {
            for ev in &r.events {
                let (name, from, to, partners) = match ev {
                    StepEvent::Stay => ("stay", r.from, r.from, String::new()),
                    StepEvent::Move { from, to } => ("move", *from, *to, String::new()),
                    StepEvent::SwapTargets { with } => ("swap", r.from, r.from, with.to_string()),
                    StepEvent::RotateTargets { cycle } => (
                        "rotate",
                        r.from,
                        r.from,
                        cycle.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(";"),
                    ),
                };
                out.push_str(&format!("{},{},{},{},{},{}\n", r.index, r.agent, from, to, name, partners));
            }
        }
        out
    }
}

#[derive(Debug)]
pub enum OnlineError {
    InvalidAssignment(AssignError),
    /// The activation budget ran out; carries everything executed so far.
    BudgetExhausted(Box<ExecutionTrace>),
}

impl fmt::Display for OnlineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OnlineError::InvalidAssignment(e) => write!(f, "invalid assignment: {}", e),
            OnlineError::BudgetExhausted(trace) => {
                write!(f, "activation budget exhausted after {} activations", trace.records.len())
            }
        }
    }
}

impl std::error::Error for OnlineError {}

/// Executes activations from `schedule` until every target is occupied or
/// the budget runs out. Under any fair schedule termination arrives within a
/// finite number of activations.
pub fn solve_online(
    instance: &Instance<'_>,
    assignment: &Assignment,
    schedule: &mut Schedule,
    activation_budget: u64,
) -> Result<ExecutionTrace, OnlineError> {
    let mut core = TswapCore::new(instance, assignment).map_err(|e| match e {
        SolveError::InvalidAssignment(a) => OnlineError::InvalidAssignment(a),
        SolveError::ProgressStall { .. } => unreachable!("constructor cannot stall"),
    })?;
    let mut trace = ExecutionTrace {
        records: Vec::new(),
        terminated: core.all_targets_covered(),
        n_agents: instance.n_agents(),
    };
    if trace.terminated {
        return Ok(trace);
    }
    for index in 0..activation_budget {
        let agent = schedule.next_agent();
        let from = core.states()[agent].v;
        let events = core.activate(agent);
        let to = core.states()[agent].v;
        trace.records.push(ActivationRecord { index, agent, from, to, events });
        if core.all_targets_covered() {
            trace.terminated = true;
            return Ok(trace);
        }
    }
    Err(OnlineError::BudgetExhausted(Box::new(trace)))
}
