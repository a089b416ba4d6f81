//! Problem instances, map ingestion, plan validation, and metrics.

use std::collections::VecDeque;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{Graph, Node};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InstanceError {
    NoAgents,
    DuplicateStart(Node),
    DuplicateTarget(Node),
    MoreTargetsThanAgents { agents: usize, targets: usize },
    NodeOutOfRange(Node),
    TooManyAgents { requested: usize, capacity: usize },
}

impl fmt::Display for InstanceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InstanceError::NoAgents => write!(f, "instance needs at least one agent"),
            InstanceError::DuplicateStart(v) => write!(f, "duplicate start node {}", v),
            InstanceError::DuplicateTarget(v) => write!(f, "duplicate target node {}", v),
            InstanceError::MoreTargetsThanAgents { agents, targets } => {
                write!(f, "{} targets but only {} agents", targets, agents)
            }
            InstanceError::NodeOutOfRange(v) => write!(f, "node {} not in graph", v),
            InstanceError::TooManyAgents { requested, capacity } => {
                write!(f, "{} agents requested but graph has {} nodes", requested, capacity)
            }
        }
    }
}

impl std::error::Error for InstanceError {}

/// An unlabeled problem: agents at distinct starts must jointly cover the
/// distinct targets. Targets are not pre-assigned to agents.
#[derive(Debug, Clone)]
pub struct Instance<'g> {
    graph: &'g Graph,
    starts: Vec<Node>,
    targets: Vec<Node>,
    is_target: Vec<bool>,
    seed: Option<u64>,
}

impl<'g> Instance<'g> {
    pub fn new(graph: &'g Graph, starts: Vec<Node>, targets: Vec<Node>) -> Result<Self, InstanceError> {
        if starts.is_empty() {
            return Err(InstanceError::NoAgents);
        }
        if targets.len() > starts.len() {
            return Err(InstanceError::MoreTargetsThanAgents {
                agents: starts.len(),
                targets: targets.len(),
            });
        }
        let mut seen = vec![false; graph.n_nodes()];
        for &s in &starts {
            if !graph.contains(s) {
                return Err(InstanceError::NodeOutOfRange(s));
            }
            if seen[s.index()] {
                return Err(InstanceError::DuplicateStart(s));
            }
            seen[s.index()] = true;
        }
        let mut is_target = vec![false; graph.n_nodes()];
        for &g in &targets {
            if !graph.contains(g) {
                return Err(InstanceError::NodeOutOfRange(g));
            }
            if is_target[g.index()] {
                return Err(InstanceError::DuplicateTarget(g));
            }
            is_target[g.index()] = true;
        }
        Ok(Instance { graph, starts, targets, is_target, seed: None })
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    pub fn starts(&self) -> &[Node] {
        &self.starts
    }

    pub fn targets(&self) -> &[Node] {
        &self.targets
    }

    pub fn n_agents(&self) -> usize {
        self.starts.len()
    }

    pub fn n_targets(&self) -> usize {
        self.targets.len()
    }

    pub fn is_target(&self, v: Node) -> bool {
        self.is_target[v.index()]
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }
}

/// Samples starts and targets uniformly without replacement, independently of
/// each other (the two sets may overlap). Reproducible from `seed`.
pub fn generate_random_instance(
    graph: &Graph,
    n_agents: usize,
    n_targets: usize,
    seed: u64,
) -> Result<Instance<'_>, InstanceError> {
    if n_agents > graph.n_nodes() {
        return Err(InstanceError::TooManyAgents { requested: n_agents, capacity: graph.n_nodes() });
    }
    if n_targets > n_agents {
        return Err(InstanceError::MoreTargetsThanAgents { agents: n_agents, targets: n_targets });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts = sample_distinct(graph.n_nodes(), n_agents, &mut rng);
    let targets = sample_distinct(graph.n_nodes(), n_targets, &mut rng);
    let mut instance = Instance::new(graph, starts, targets)?;
    instance.seed = Some(seed);
    Ok(instance)
}

/// Partial Fisher-Yates: first `k` entries of a shuffled 0..n.
fn sample_distinct(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<Node> {
    let mut pool: Vec<u32> = (0..n as u32).collect();
    for i in 0..k {
        let j = rng.gen_range(i..n);
        pool.swap(i, j);
    }
    pool[..k].iter().map(|&id| Node(id)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlanShapeError {
    NoPaths,
    EmptyPath { agent: usize },
    LengthMismatch { agent: usize, expected: usize, got: usize },
}

impl fmt::Display for PlanShapeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanShapeError::NoPaths => write!(f, "plan has no paths"),
            PlanShapeError::EmptyPath { agent } => write!(f, "agent {} has an empty path", agent),
            PlanShapeError::LengthMismatch { agent, expected, got } => {
                write!(f, "agent {} path has {} steps, expected {}", agent, got, expected)
            }
        }
    }
}

impl std::error::Error for PlanShapeError {}

/// Per-agent node sequences, all of length makespan + 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plan {
    paths: Vec<Vec<Node>>,
}

impl Plan {
    pub fn from_paths(paths: Vec<Vec<Node>>) -> Result<Plan, PlanShapeError> {
        if paths.is_empty() {
            return Err(PlanShapeError::NoPaths);
        }
        let len = paths[0].len();
        for (agent, path) in paths.iter().enumerate() {
            if path.is_empty() {
                return Err(PlanShapeError::EmptyPath { agent });
            }
            if path.len() != len {
                return Err(PlanShapeError::LengthMismatch { agent, expected: len, got: path.len() });
            }
        }
        Ok(Plan { paths })
    }

    pub fn paths(&self) -> &[Vec<Node>] {
        &self.paths
    }

    pub fn n_agents(&self) -> usize {
        self.paths.len()
    }

    pub fn makespan(&self) -> usize {
        self.paths[0].len() - 1
    }

    pub fn position(&self, agent: usize, t: usize) -> Node {
        self.paths[agent][t]
    }

    /// Text export: a metrics header line, then one comma-separated row of
    /// node ids per timestep (one column per agent).
    pub fn to_text(&self, metrics: &Metrics) -> String {
        let mut out = format!(
            "makespan={} sum_of_costs={} maximum_moves={} sum_of_moves={}\n",
            metrics.makespan, metrics.sum_of_costs, metrics.maximum_moves, metrics.sum_of_moves
        );
        for t in 0..=self.makespan() {
            let row: Vec<String> = self.paths.iter().map(|p| p[t].0.to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Plan, String> {
        let mut rows: Vec<Vec<Node>> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if i == 0 && line.starts_with("makespan=") {
                continue;
            }
            let row: Result<Vec<Node>, _> = line
                .split(',')
                .map(|tok| tok.trim().parse::<u32>().map(Node))
                .collect();
            rows.push(row.map_err(|e| format!("plan line {}: {}", i + 1, e))?);
        }
        if rows.is_empty() {
            return Err("plan file has no timestep rows".into());
        }
        let n_agents = rows[0].len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_agents {
                return Err(format!("plan row {} has {} columns, expected {}", i + 1, row.len(), n_agents));
            }
        }
        let paths = (0..n_agents)
            .map(|a| rows.iter().map(|row| row[a]).collect())
            .collect();
        Plan::from_paths(paths).map_err(|e| e.to_string())
    }
}

/// Solution quality measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Metrics {
    /// Last timestep of the plan; all targets are covered there.
    pub makespan: usize,
    /// Sum over agents of the first timestep from which the agent rests.
    pub sum_of_costs: usize,
    /// Largest per-agent count of actual node changes.
    pub maximum_moves: usize,
    /// Total count of actual node changes.
    pub sum_of_moves: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    WrongAgentCount { expected: usize, got: usize },
    BadStart { agent: usize, expected: Node, got: Node },
    IllegalMove { agent: usize, timestep: usize, from: Node, to: Node },
    VertexConflict { timestep: usize, agents: (usize, usize), node: Node },
    SwapConflict { timestep: usize, agents: (usize, usize), nodes: (Node, Node) },
    TargetUnoccupied { target: Node },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::WrongAgentCount { expected, got } => {
                write!(f, "plan has {} agents, instance has {}", got, expected)
            }
            Violation::BadStart { agent, expected, got } => {
                write!(f, "agent {} starts at {} instead of {}", agent, got, expected)
            }
            Violation::IllegalMove { agent, timestep, from, to } => {
                write!(f, "t={}: agent {} jumps {} -> {} (not adjacent)", timestep, agent, from, to)
            }
            Violation::VertexConflict { timestep, agents, node } => {
                write!(f, "t={}: agents {} and {} share node {}", timestep, agents.0, agents.1, node)
            }
            Violation::SwapConflict { timestep, agents, nodes } => {
                write!(
                    f,
                    "t={}: agents {} and {} swap across edge ({}, {})",
                    timestep, agents.0, agents.1, nodes.0, nodes.1
                )
            }
            Violation::TargetUnoccupied { target } => {
                write!(f, "target {} unoccupied at the final timestep", target)
            }
        }
    }
}

/// Every violation found in a plan; empty means the plan is a valid solution.
#[derive(Debug, Clone, Default)]
pub struct ValidityReport {
    pub violations: Vec<Violation>,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_plan(instance: &Instance<'_>, plan: &Plan) -> ValidityReport {
    let mut report = ValidityReport::default();
    let graph = instance.graph();
    if plan.n_agents() != instance.n_agents() {
        report.violations.push(Violation::WrongAgentCount {
            expected: instance.n_agents(),
            got: plan.n_agents(),
        });
        return report;
    }
    for (agent, path) in plan.paths().iter().enumerate() {
        if path[0] != instance.starts()[agent] {
            report.violations.push(Violation::BadStart {
                agent,
                expected: instance.starts()[agent],
                got: path[0],
            });
        }
        for t in 0..path.len() - 1 {
            let (from, to) = (path[t], path[t + 1]);
            if from != to && !graph.neighbors(from).contains(&to) {
                report.violations.push(Violation::IllegalMove { agent, timestep: t + 1, from, to });
            }
        }
    }
    let n = plan.n_agents();
    for t in 0..=plan.makespan() {
        for i in 0..n {
            for j in i + 1..n {
                if plan.position(i, t) == plan.position(j, t) {
                    report.violations.push(Violation::VertexConflict {
                        timestep: t,
                        agents: (i, j),
                        node: plan.position(i, t),
                    });
                }
            }
        }
    }
    for t in 0..plan.makespan() {
        for i in 0..n {
            for j in i + 1..n {
                let (iu, iv) = (plan.position(i, t), plan.position(i, t + 1));
                let (ju, jv) = (plan.position(j, t), plan.position(j, t + 1));
                if iu != iv && iu == jv && iv == ju {
                    report.violations.push(Violation::SwapConflict {
                        timestep: t + 1,
                        agents: (i, j),
                        nodes: (iu, iv),
                    });
                }
            }
        }
    }
    let last = plan.makespan();
    let mut occupied = vec![false; graph.n_nodes()];
    for path in plan.paths() {
        occupied[path[last].index()] = true;
    }
    for &g in instance.targets() {
        if !occupied[g.index()] {
            report.violations.push(Violation::TargetUnoccupied { target: g });
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvalidPlan(pub Vec<Violation>);

impl fmt::Display for InvalidPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "plan is invalid ({} violations)", self.0.len())
    }
}

impl std::error::Error for InvalidPlan {}

pub fn compute_metrics(instance: &Instance<'_>, plan: &Plan) -> Result<Metrics, InvalidPlan> {
    let report = validate_plan(instance, plan);
    if !report.is_valid() {
        return Err(InvalidPlan(report.violations));
    }
    let makespan = plan.makespan();
    let mut sum_of_costs = 0;
    let mut maximum_moves = 0;
    let mut sum_of_moves = 0;
    for path in plan.paths() {
        let mut last_change = 0;
        let mut moves = 0;
        for t in 1..path.len() {
            if path[t] != path[t - 1] {
                last_change = t;
                moves += 1;
            }
        }
        sum_of_costs += last_change;
        maximum_moves = maximum_moves.max(moves);
        sum_of_moves += moves;
    }
    Ok(Metrics { makespan, sum_of_costs, maximum_moves, sum_of_moves })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MapParseError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for MapParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "map line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for MapParseError {}

/// A parsed MovingAI-style grid map.
///
/// The graph covers the largest connected component of passable cells;
/// `dropped_cells` and `unknown_chars` carry the warnings a caller may want
/// to surface.
#[derive(Debug, Clone)]
pub struct MovingAiMap {
    pub graph: Graph,
    pub width: usize,
    pub height: usize,
    pub dropped_cells: usize,
    pub unknown_chars: Vec<(usize, char)>,
    rows: Vec<String>,
}

impl MovingAiMap {
    /// Re-serializes the original grid, byte for byte on canonical input.
    pub fn to_text(&self) -> String {
        let mut out = format!("type octile\nheight {}\nwidth {}\nmap\n", self.height, self.width);
        for row in &self.rows {
            out.push_str(row);
            out.push('\n');
        }
        out
    }
}

/// Parses the MovingAI `.map` format.
///
/// `.` and `G` are passable; `@`, `T`, `O`, `W` are obstacles; anything else
/// is treated as an obstacle and reported in `unknown_chars`.
pub fn parse_movingai_map(text: &str) -> Result<MovingAiMap, MapParseError> {
    let mut lines = text.lines().enumerate();
    let mut expect = |what: &str| {
        lines
            .next()
            .ok_or_else(|| MapParseError { line: 0, message: format!("missing `{}` line", what) })
    };
    let (n, type_line) = expect("type")?;
    if type_line.trim() != "type octile" {
        return Err(MapParseError { line: n + 1, message: format!("expected `type octile`, got `{}`", type_line) });
    }
    let (n, height_line) = expect("height")?;
    let height: usize = height_line
        .trim()
        .strip_prefix("height ")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| MapParseError { line: n + 1, message: format!("bad height line `{}`", height_line) })?;
    let (n, width_line) = expect("width")?;
    let width: usize = width_line
        .trim()
        .strip_prefix("width ")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| MapParseError { line: n + 1, message: format!("bad width line `{}`", width_line) })?;
    let (n, map_line) = expect("map")?;
    if map_line.trim() != "map" {
        return Err(MapParseError { line: n + 1, message: format!("expected `map`, got `{}`", map_line) });
    }

    let mut rows = Vec::with_capacity(height);
    let mut passable = Vec::with_capacity(width * height);
    let mut unknown_chars = Vec::new();
    for r in 0..height {
        let (n, row) = lines
            .next()
            .ok_or_else(|| MapParseError { line: 5 + r, message: format!("missing map row {}", r) })?;
        let row = row.trim_end_matches(['\r']);
        if row.chars().count() != width {
            return Err(MapParseError {
                line: n + 1,
                message: format!("row has {} characters, expected {}", row.chars().count(), width),
            });
        }
        for c in row.chars() {
            let open = match c {
                '.' | 'G' => true,
                '@' | 'T' | 'O' | 'W' => false,
                other => {
                    unknown_chars.push((n + 1, other));
                    false
                }
            };
            passable.push(open);
        }
        rows.push(row.to_string());
    }

    let build = Graph::from_grid(width, height, &passable)
        .map_err(|e| MapParseError { line: 5, message: e.to_string() })?;
    Ok(MovingAiMap {
        graph: build.graph,
        width,
        height,
        dropped_cells: build.dropped_cells,
        unknown_chars,
        rows,
    })
}

/// Random grid map text: each cell is an obstacle with probability
/// `obstacle_ratio`. Useful for generated benchmarks.
pub fn random_grid_map_text(width: usize, height: usize, obstacle_ratio: f64, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = format!("type octile\nheight {}\nwidth {}\nmap\n", height, width);
    for _ in 0..height {
        for _ in 0..width {
            out.push(if rng.gen_bool(obstacle_ratio) { '@' } else { '.' });
        }
        out.push('\n');
    }
    out
}

/// Instance description file: a `map` line (path or `inline:` rows joined by
/// `;`), then either explicit `starts`/`targets` coordinate lists or an
/// `agents n targets m seed k` line. Coordinates are `x,y` = (col,row).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InstanceSpecBody {
    Explicit { starts: Vec<(usize, usize)>, targets: Vec<(usize, usize)> },
    Random { agents: usize, targets: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceSpec {
    pub map: String,
    pub body: InstanceSpecBody,
}

pub fn parse_instance_spec(text: &str) -> Result<InstanceSpec, String> {
    let mut map = None;
    let mut starts = None;
    let mut targets = None;
    let mut random = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim();
        match key {
            "map" => map = Some(rest.to_string()),
            "starts" => starts = Some(parse_coord_list(rest).map_err(|e| format!("line {}: {}", i + 1, e))?),
            "targets" => targets = Some(parse_coord_list(rest).map_err(|e| format!("line {}: {}", i + 1, e))?),
            "agents" => {
                // `agents n targets m seed k`
                let toks: Vec<&str> = line.split_whitespace().collect();
                if toks.len() != 6 || toks[2] != "targets" || toks[4] != "seed" {
                    return Err(format!("line {}: expected `agents n targets m seed k`", i + 1));
                }
                let parse = |s: &str| s.parse::<u64>().map_err(|e| format!("line {}: {}", i + 1, e));
                random = Some((parse(toks[1])? as usize, parse(toks[3])? as usize, parse(toks[5])?));
            }
            other => return Err(format!("line {}: unknown key `{}`", i + 1, other)),
        }
    }
    let map = map.ok_or("missing `map` line")?;
    let body = match (starts, targets, random) {
        (Some(s), Some(t), None) => InstanceSpecBody::Explicit { starts: s, targets: t },
        (None, None, Some((agents, targets, seed))) => InstanceSpecBody::Random { agents, targets, seed },
        _ => return Err("give either `starts`+`targets` or a single `agents ... seed ...` line".into()),
    };
    Ok(InstanceSpec { map, body })
}

/// `x,y` pairs separated by whitespace; (x, y) = (col, row).
pub fn parse_coord_list(text: &str) -> Result<Vec<(usize, usize)>, String> {
    text.split_whitespace().map(parse_coord).collect()
}

pub fn parse_coord(tok: &str) -> Result<(usize, usize), String> {
    let (x, y) = tok.split_once(',').ok_or_else(|| format!("bad coordinate `{}`", tok))?;
    let x = x.trim().parse().map_err(|_| format!("bad coordinate `{}`", tok))?;
    let y = y.trim().parse().map_err(|_| format!("bad coordinate `{}`", tok))?;
    Ok((x, y))
}

/// Resolves `(col, row)` pairs against a grid graph.
pub fn resolve_coords(graph: &Graph, coords: &[(usize, usize)]) -> Result<Vec<Node>, String> {
    coords
        .iter()
        .map(|&(x, y)| {
            graph
                .node_at(y, x)
                .ok_or_else(|| format!("cell ({},{}) is blocked, disconnected, or out of bounds", x, y))
        })
        .collect()
}

pub fn format_node(graph: &Graph, v: Node) -> String {
    match graph.coords(v) {
        Some((r, c)) => format!("{},{}", c, r),
        None => v.0.to_string(),
    }
}

/// Multi-source BFS distances from a node set; `u32::MAX` where unreachable.
pub(crate) fn multi_source_bfs(graph: &Graph, sources: &[Node]) -> Vec<u32> {
    let mut dist = vec![u32::MAX; graph.n_nodes()];
    let mut queue = VecDeque::new();
    for &s in sources {
        if dist[s.index()] == u32::MAX {
            dist[s.index()] = 0;
            queue.push_back(s);
        }
    }
    while let Some(v) = queue.pop_front() {
        for &w in graph.neighbors(v) {
            if dist[w.index()] == u32::MAX {
                dist[w.index()] = dist[v.index()] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}
