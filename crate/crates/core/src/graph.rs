//! Graph model with a memoizing breadth-first distance oracle.
//!
//! Distances are hop counts on an unweighted, undirected, connected graph.
//! The oracle keeps one resumable search tree per queried target, so many
//! sources aiming at few targets share the same expansion work.

use std::collections::VecDeque;
use std::fmt;

/// Identifier of a graph node.
///
/// On grid graphs ids are assigned in row-major scan order over passable
/// cells, which makes the smallest-id tie-break reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Node(pub u32);

impl Node {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

const UNREACHED: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphError {
    Empty,
    NodeOutOfRange { node: u32, n_nodes: usize },
    SelfLoop { node: u32 },
    DuplicateEdge { a: u32, b: u32 },
    Disconnected { reached: usize, n_nodes: usize },
    NoPassableCells,
    GridShapeMismatch { expected: usize, got: usize },
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::Empty => write!(f, "graph has no nodes"),
            GraphError::NodeOutOfRange { node, n_nodes } => {
                write!(f, "node {} out of range (graph has {} nodes)", node, n_nodes)
            }
            GraphError::SelfLoop { node } => write!(f, "self-loop at node {}", node),
            GraphError::DuplicateEdge { a, b } => write!(f, "duplicate edge ({}, {})", a, b),
            GraphError::Disconnected { reached, n_nodes } => {
                write!(f, "graph is disconnected ({} of {} nodes reachable)", reached, n_nodes)
            }
            GraphError::NoPassableCells => write!(f, "grid has no passable cells"),
            GraphError::GridShapeMismatch { expected, got } => {
                write!(f, "grid cell array has {} entries, expected {}", got, expected)
            }
        }
    }
}

impl std::error::Error for GraphError {}

#[derive(Debug, Clone)]
struct GridMeta {
    width: usize,
    height: usize,
    /// node -> (row, col)
    coords: Vec<(u32, u32)>,
    /// row-major cell -> node, None for obstacles and dropped components
    node_at: Vec<Option<Node>>,
}

/// Undirected connected graph with sorted adjacency lists.
///
/// Immutable after construction and freely shareable across threads.
#[derive(Debug, Clone)]
pub struct Graph {
    adj: Vec<Vec<Node>>,
    n_edges: usize,
    grid: Option<GridMeta>,
}

/// Result of building a grid graph: the largest connected component is kept,
/// `dropped_cells` counts passable cells outside it.
#[derive(Debug)]
pub struct GridBuild {
    pub graph: Graph,
    pub dropped_cells: usize,
}

impl Graph {
    /// Builds a graph from an explicit undirected edge list.
    pub fn from_edges(n_nodes: usize, edges: &[(u32, u32)]) -> Result<Graph, GraphError> {
        if n_nodes == 0 {
            return Err(GraphError::Empty);
        }
        let mut adj: Vec<Vec<Node>> = vec![Vec::new(); n_nodes];
        let mut seen = std::collections::HashSet::new();
        for &(a, b) in edges {
            for node in [a, b] {
                if node as usize >= n_nodes {
                    return Err(GraphError::NodeOutOfRange { node, n_nodes });
                }
            }
            if a == b {
                return Err(GraphError::SelfLoop { node: a });
            }
            let key = (a.min(b), a.max(b));
            if !seen.insert(key) {
                return Err(GraphError::DuplicateEdge { a: key.0, b: key.1 });
            }
            adj[a as usize].push(Node(b));
            adj[b as usize].push(Node(a));
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        let graph = Graph { adj, n_edges: edges.len(), grid: None };
        let reached = graph.count_reachable(Node(0));
        if reached != n_nodes {
            return Err(GraphError::Disconnected { reached, n_nodes });
        }
        Ok(graph)
    }

    /// Builds a 4-connected grid graph from a row-major passability mask.
    ///
    /// If the passable cells form several components, only the largest one
    /// (ties broken toward the component seen first in scan order) becomes
    /// the graph; the rest are reported in `dropped_cells`.
    pub fn from_grid(width: usize, height: usize, passable: &[bool]) -> Result<GridBuild, GraphError> {
        if passable.len() != width * height {
            return Err(GraphError::GridShapeMismatch { expected: width * height, got: passable.len() });
        }
        let total_passable = passable.iter().filter(|&&p| p).count();
        if total_passable == 0 {
            return Err(GraphError::NoPassableCells);
        }

        // Largest component among passable cells, 4-connected.
        let mut comp = vec![usize::MAX; passable.len()];
        let mut comp_sizes = Vec::new();
        for start in 0..passable.len() {
            if !passable[start] || comp[start] != usize::MAX {
                continue;
            }
            let id = comp_sizes.len();
            let mut size = 0usize;
            let mut queue = VecDeque::from([start]);
            comp[start] = id;
            while let Some(cell) = queue.pop_front() {
                size += 1;
                let (r, c) = (cell / width, cell % width);
                for (nr, nc) in neighbors4(r, c, width, height) {
                    let ncell = nr * width + nc;
                    if passable[ncell] && comp[ncell] == usize::MAX {
                        comp[ncell] = id;
                        queue.push_back(ncell);
                    }
                }
            }
            comp_sizes.push(size);
        }
        let keep = comp_sizes
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(id, _)| id)
            .unwrap();

        let mut node_at = vec![None; passable.len()];
        let mut coords = Vec::new();
        for cell in 0..passable.len() {
            if passable[cell] && comp[cell] == keep {
                node_at[cell] = Some(Node(coords.len() as u32));
                coords.push(((cell / width) as u32, (cell % width) as u32));
            }
        }
        let n_nodes = coords.len();
        let mut adj: Vec<Vec<Node>> = vec![Vec::new(); n_nodes];
        let mut n_edges = 0;
        for cell in 0..passable.len() {
            let Some(node) = node_at[cell] else { continue };
            let (r, c) = (cell / width, cell % width);
            for (nr, nc) in neighbors4(r, c, width, height) {
                if let Some(other) = node_at[nr * width + nc] {
                    adj[node.index()].push(other);
                    if other > node {
                        n_edges += 1;
                    }
                }
            }
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        let graph = Graph {
            adj,
            n_edges,
            grid: Some(GridMeta { width, height, coords, node_at }),
        };
        Ok(GridBuild { graph, dropped_cells: total_passable - n_nodes })
    }

    /// Obstacle-free grid.
    pub fn open_grid(width: usize, height: usize) -> Graph {
        Graph::from_grid(width, height, &vec![true; width * height])
            .expect("open grid is connected")
            .graph
    }

    /// Line graph with `n` nodes, id order along the line.
    pub fn line(n: usize) -> Graph {
        Graph::open_grid(n, 1)
    }

    pub fn n_nodes(&self) -> usize {
        self.adj.len()
    }

    pub fn n_edges(&self) -> usize {
        self.n_edges
    }

    pub fn nodes(&self) -> impl Iterator<Item = Node> {
        (0..self.adj.len() as u32).map(Node)
    }

    pub fn neighbors(&self, v: Node) -> &[Node] {
        &self.adj[v.index()]
    }

    pub fn contains(&self, v: Node) -> bool {
        v.index() < self.adj.len()
    }

    pub fn is_grid(&self) -> bool {
        self.grid.is_some()
    }

    /// (width, height) for grid graphs.
    pub fn dims(&self) -> Option<(usize, usize)> {
        self.grid.as_ref().map(|g| (g.width, g.height))
    }

    /// Node at a grid cell, if passable and part of the kept component.
    pub fn node_at(&self, row: usize, col: usize) -> Option<Node> {
        let g = self.grid.as_ref()?;
        if row >= g.height || col >= g.width {
            return None;
        }
        g.node_at[row * g.width + col]
    }

    /// (row, col) of a node on grid graphs.
    pub fn coords(&self, v: Node) -> Option<(usize, usize)> {
        let g = self.grid.as_ref()?;
        let (r, c) = g.coords[v.index()];
        Some((r as usize, c as usize))
    }

    /// Admissible heuristic: Manhattan distance on grids, 0 otherwise.
    pub fn heuristic(&self, u: Node, v: Node) -> u32 {
        match &self.grid {
            Some(g) => {
                let (ur, uc) = g.coords[u.index()];
                let (vr, vc) = g.coords[v.index()];
                ur.abs_diff(vr) + uc.abs_diff(vc)
            }
            None => 0,
        }
    }

    fn count_reachable(&self, start: Node) -> usize {
        let mut seen = vec![false; self.n_nodes()];
        let mut queue = VecDeque::from([start]);
        seen[start.index()] = true;
        let mut count = 0;
        while let Some(v) = queue.pop_front() {
            count += 1;
            for &w in self.neighbors(v) {
                if !seen[w.index()] {
                    seen[w.index()] = true;
                    queue.push_back(w);
                }
            }
        }
        count
    }

    #[inline]
    fn assert_node(&self, v: Node) {
        assert!(
            v.index() < self.adj.len(),
            "node {} out of range (graph has {} nodes)",
            v.0,
            self.adj.len()
        );
    }
}

fn neighbors4(r: usize, c: usize, width: usize, height: usize) -> impl Iterator<Item = (usize, usize)> {
    let (r, c, w, h) = (r as isize, c as isize, width as isize, height as isize);
    [(r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)]
        .into_iter()
        .filter(move |&(nr, nc)| nr >= 0 && nr < h && nc >= 0 && nc < w)
        .map(|(nr, nc)| (nr as usize, nc as usize))
}

struct BfsTree {
    dist: Vec<u32>,
    queue: VecDeque<Node>,
}

impl BfsTree {
    fn new(root: Node, n_nodes: usize) -> BfsTree {
        let mut dist = vec![UNREACHED; n_nodes];
        dist[root.index()] = 0;
        BfsTree { dist, queue: VecDeque::from([root]) }
    }
}

/// Shortest-path oracle rooted at targets.
///
/// One breadth-first search tree per target; `dist_lazy` expands a tree only
/// until the queried source is settled, `dist` drains it. A paused search can
/// be resumed any number of times without changing already-reported values.
///
/// Single-writer: an oracle belongs to one solver run.
pub struct DistanceOracle<'g> {
    graph: &'g Graph,
    trees: Vec<Option<Box<BfsTree>>>,
    expansions: u64,
}

impl<'g> DistanceOracle<'g> {
    pub fn new(graph: &'g Graph) -> Self {
        DistanceOracle { graph, trees: (0..graph.n_nodes()).map(|_| None).collect(), expansions: 0 }
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    /// Nodes dequeued by the oracle's searches so far.
    pub fn expansions(&self) -> u64 {
        self.expansions
    }

    /// Exact hop distance; runs the target's search to completion.
    pub fn dist(&mut self, u: Node, target: Node) -> u32 {
        self.graph.assert_node(u);
        self.graph.assert_node(target);
        self.expand(target, None);
        self.trees[target.index()].as_ref().unwrap().dist[u.index()]
    }

    /// Exact hop distance; resumes the target's search only until `u` settles.
    pub fn dist_lazy(&mut self, u: Node, target: Node) -> u32 {
        self.graph.assert_node(u);
        self.graph.assert_node(target);
        self.expand(target, Some(u));
        self.trees[target.index()].as_ref().unwrap().dist[u.index()]
    }

    /// Deterministic steepest step toward `w`: the member of N(u) ∪ {u}
    /// closest to `w`, smallest node id on ties.
    pub fn next_node(&mut self, u: Node, w: Node) -> Node {
        self.graph.assert_node(u);
        self.graph.assert_node(w);
        if u == w {
            return w;
        }
        let mut best = (self.dist_lazy(u, w), u);
        for &v in self.graph.neighbors(u) {
            let d = self.dist_lazy(v, w);
            if (d, v) < best {
                best = (d, v);
            }
        }
        best.1
    }

    fn expand(&mut self, target: Node, until: Option<Node>) {
        let tree = self.trees[target.index()]
            .get_or_insert_with(|| Box::new(BfsTree::new(target, self.graph.n_nodes())));
        if let Some(u) = until {
            if tree.dist[u.index()] != UNREACHED {
                return;
            }
        }
        while let Some(v) = tree.queue.pop_front() {
            self.expansions += 1;
            let base = tree.dist[v.index()];
            for &w in self.graph.neighbors(v) {
                if tree.dist[w.index()] == UNREACHED {
                    tree.dist[w.index()] = base + 1;
                    tree.queue.push_back(w);
                }
            }
            if let Some(u) = until {
                if tree.dist[u.index()] != UNREACHED {
                    return;
                }
            }
        }
        if let Some(u) = until {
            assert!(
                tree.dist[u.index()] != UNREACHED,
                "node {} unreachable from {}; graph must be connected",
                u.0,
                target.0
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Fig-style six-node line: v1..v6 map to ids 0..5.
    fn line6() -> Graph {
        Graph::line(6)
    }

    #[test]
    fn line_distances() {
        let g = line6();
        let mut oracle = DistanceOracle::new(&g);
        // s1 = v3 (id 2), g1 = v1 (id 0)
        assert_eq!(oracle.dist(Node(2), Node(0)), 2);
        assert_eq!(oracle.dist(Node(0), Node(5)), 5);
    }

    #[test]
    fn dist_of_node_to_itself_is_zero() {
        let g = Graph::open_grid(3, 3);
        let mut oracle = DistanceOracle::new(&g);
        for v in g.nodes() {
            assert_eq!(oracle.dist_lazy(v, v), 0);
        }
    }

    #[test]
    fn lazy_repeat_query_expands_nothing() {
        let g = Graph::open_grid(8, 8);
        let mut oracle = DistanceOracle::new(&g);
        let d1 = oracle.dist_lazy(Node(60), Node(3));
        let after_first = oracle.expansions();
        let d2 = oracle.dist_lazy(Node(60), Node(3));
        assert_eq!(d1, d2);
        assert_eq!(oracle.expansions(), after_first);
    }

    #[test]
    fn lazy_zero_distance_query() {
        // s3 and g2 share v5 on the six-node line.
        let g = line6();
        let mut oracle = DistanceOracle::new(&g);
        assert_eq!(oracle.dist_lazy(Node(4), Node(4)), 0);
        assert_eq!(oracle.expansions(), 0);
    }

    #[test]
    fn lazy_matches_eager_on_grid() {
        use rand::{Rng, SeedableRng};
        let g = Graph::open_grid(16, 16);
        let mut lazy = DistanceOracle::new(&g);
        let mut eager = DistanceOracle::new(&g);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let u = Node(rng.gen_range(0..g.n_nodes() as u32));
            let v = Node(rng.gen_range(0..g.n_nodes() as u32));
            assert_eq!(lazy.dist_lazy(u, v), eager.dist(u, v));
        }
        assert!(lazy.expansions() <= eager.expansions());
    }

    #[test]
    fn manhattan_heuristic() {
        let g = Graph::open_grid(8, 8);
        let a = g.node_at(0, 0).unwrap();
        let b = g.node_at(3, 4).unwrap();
        assert_eq!(g.heuristic(a, b), 7);
        assert_eq!(g.heuristic(a, a), 0);
    }

    #[test]
    fn heuristic_exact_on_open_grid() {
        let g = Graph::open_grid(7, 5);
        let mut oracle = DistanceOracle::new(&g);
        for u in g.nodes() {
            for v in g.nodes() {
                assert_eq!(g.heuristic(u, v), oracle.dist(u, v));
            }
        }
    }

    #[test]
    fn heuristic_zero_off_grid() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(g.heuristic(Node(0), Node(2)), 0);
    }

    #[test]
    fn next_node_on_line() {
        let g = line6();
        let mut oracle = DistanceOracle::new(&g);
        // v4 -> v6 goes through v5
        assert_eq!(oracle.next_node(Node(3), Node(5)), Node(4));
        assert_eq!(oracle.next_node(Node(5), Node(5)), Node(5));
    }

    #[test]
    fn next_node_tie_breaks_by_smallest_id() {
        // Open 5x5 grid, u at (2,2) = id 12, w at (0,0) = id 0.
        // Neighbors (1,2) = 7 and (2,1) = 11 are tied at distance 3.
        let g = Graph::open_grid(5, 5);
        let mut oracle = DistanceOracle::new(&g);
        let u = g.node_at(2, 2).unwrap();
        let w = g.node_at(0, 0).unwrap();
        let next = oracle.next_node(u, w);
        assert_eq!(next, Node(7));
        assert_eq!(oracle.dist(next, w), 3);
    }

    #[test]
    fn next_node_steps_toward_target() {
        let g = Graph::open_grid(6, 4);
        let mut oracle = DistanceOracle::new(&g);
        for u in g.nodes() {
            for w in g.nodes() {
                let d = oracle.dist(u, w);
                let next = oracle.next_node(u, w);
                assert_eq!(oracle.dist(next, w), d.saturating_sub(1));
                // pure function: repeated calls agree
                assert_eq!(oracle.next_node(u, w), next);
            }
        }
    }

    #[test]
    fn dist_is_symmetric() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let passable: Vec<bool> = (0..64).map(|_| rng.gen_bool(0.8)).collect();
        let g = Graph::from_grid(8, 8, &passable).unwrap().graph;
        let mut oracle = DistanceOracle::new(&g);
        for u in g.nodes() {
            for v in g.nodes() {
                assert_eq!(oracle.dist(u, v), oracle.dist(v, u));
            }
        }
    }

    #[test]
    fn from_edges_rejects_bad_input() {
        assert!(matches!(
            Graph::from_edges(2, &[(0, 0)]),
            Err(GraphError::SelfLoop { .. })
        ));
        assert!(matches!(
            Graph::from_edges(2, &[(0, 1), (1, 0)]),
            Err(GraphError::DuplicateEdge { .. })
        ));
        assert!(matches!(
            Graph::from_edges(4, &[(0, 1), (2, 3)]),
            Err(GraphError::Disconnected { .. })
        ));
        assert!(matches!(
            Graph::from_edges(2, &[(0, 5)]),
            Err(GraphError::NodeOutOfRange { .. })
        ));
    }

    #[test]
    fn grid_keeps_largest_component() {
        // Two components: a 2-cell pocket and a 6-cell corridor.
        //   . . | . . . .   ('|' marks an obstacle column)
        let mut passable = vec![true; 9];
        passable[2] = false; // splits 1x9 line into 2 + 6 cells
        let build = Graph::from_grid(9, 1, &passable).unwrap();
        assert_eq!(build.graph.n_nodes(), 6);
        assert_eq!(build.dropped_cells, 2);
    }

    #[test]
    #[should_panic(expected = "out of range")]
    fn oracle_rejects_unknown_node() {
        let g = Graph::line(3);
        let mut oracle = DistanceOracle::new(&g);
        oracle.dist(Node(99), Node(0));
    }
}
