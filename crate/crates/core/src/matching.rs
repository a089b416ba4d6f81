//! Incremental bipartite matching and minimum-cost maximum matching.
//!
//! The matching grows one augmenting path at a time so that callers adding
//! edges in cost order can probe saturation after every insertion. Min-cost
//! matching runs successive shortest paths with vertex potentials.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MatchingError {
    LeftOutOfRange { s: u32, n_left: usize },
    RightOutOfRange { g: u32, n_right: usize },
    DuplicateEdge { s: u32, g: u32 },
    ForeignPair { s: u32, g: u32 },
    SizeMismatch,
    Unsaturable { matched: usize, n_right: usize },
}

impl fmt::Display for MatchingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatchingError::LeftOutOfRange { s, n_left } => {
                write!(f, "left vertex {} out of range ({} left vertices)", s, n_left)
            }
            MatchingError::RightOutOfRange { g, n_right } => {
                write!(f, "right vertex {} out of range ({} right vertices)", g, n_right)
            }
            MatchingError::DuplicateEdge { s, g } => write!(f, "edge ({}, {}) already present", s, g),
            MatchingError::ForeignPair { s, g } => {
                write!(f, "matched pair ({}, {}) is not an edge of the bipartite graph", s, g)
            }
            MatchingError::SizeMismatch => write!(f, "matching sized for a different bipartite graph"),
            MatchingError::Unsaturable { matched, n_right } => {
                write!(f, "only {} of {} right vertices can be matched", matched, n_right)
            }
        }
    }
}

impl std::error::Error for MatchingError {}

/// Bipartite graph over left vertices 0..n_left and right vertices
/// 0..n_right, with nonnegative integer edge costs.
#[derive(Debug, Clone)]
pub struct BipartiteGraph {
    n_left: usize,
    n_right: usize,
    adj: Vec<Vec<(u32, u32)>>,
    costs: HashMap<(u32, u32), u32>,
}

impl BipartiteGraph {
    pub fn new(n_left: usize, n_right: usize) -> Self {
        BipartiteGraph { n_left, n_right, adj: vec![Vec::new(); n_left], costs: HashMap::new() }
    }

    pub fn n_left(&self) -> usize {
        self.n_left
    }

    pub fn n_right(&self) -> usize {
        self.n_right
    }

    pub fn n_edges(&self) -> usize {
        self.costs.len()
    }

    pub fn add_edge(&mut self, s: u32, g: u32, cost: u32) -> Result<(), MatchingError> {
        if s as usize >= self.n_left {
            return Err(MatchingError::LeftOutOfRange { s, n_left: self.n_left });
        }
        if g as usize >= self.n_right {
            return Err(MatchingError::RightOutOfRange { g, n_right: self.n_right });
        }
        if self.costs.insert((s, g), cost).is_some() {
            return Err(MatchingError::DuplicateEdge { s, g });
        }
        self.adj[s as usize].push((g, cost));
        Ok(())
    }

    pub fn has_edge(&self, s: u32, g: u32) -> bool {
        self.costs.contains_key(&(s, g))
    }

    pub fn cost(&self, s: u32, g: u32) -> Option<u32> {
        self.costs.get(&(s, g)).copied()
    }

    pub fn edges_from(&self, s: u32) -> &[(u32, u32)] {
        &self.adj[s as usize]
    }
}

/// A matching plus both-side occupancy indexes.
#[derive(Debug, Clone)]
pub struct Matching {
    right_of_left: Vec<Option<u32>>,
    left_of_right: Vec<Option<u32>>,
    size: usize,
}

impl Matching {
    pub fn new(bg: &BipartiteGraph) -> Self {
        Matching {
            right_of_left: vec![None; bg.n_left()],
            left_of_right: vec![None; bg.n_right()],
            size: 0,
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn right_of(&self, s: u32) -> Option<u32> {
        self.right_of_left[s as usize]
    }

    pub fn left_of(&self, g: u32) -> Option<u32> {
        self.left_of_right[g as usize]
    }

    /// Matched pairs sorted by left vertex.
    pub fn pairs(&self) -> Vec<(u32, u32)> {
        self.right_of_left
            .iter()
            .enumerate()
            .filter_map(|(s, g)| g.map(|g| (s as u32, g)))
            .collect()
    }

    pub fn total_cost(&self, bg: &BipartiteGraph) -> u64 {
        self.pairs()
            .iter()
            .map(|&(s, g)| bg.cost(s, g).expect("matched pair must be an edge") as u64)
            .sum()
    }

    fn set(&mut self, s: u32, g: u32) {
        if self.right_of_left[s as usize].is_none() {
            self.size += 1;
        }
        self.right_of_left[s as usize] = Some(g);
        self.left_of_right[g as usize] = Some(s);
    }

    fn check_against(&self, bg: &BipartiteGraph) -> Result<(), MatchingError> {
        if self.right_of_left.len() != bg.n_left() || self.left_of_right.len() != bg.n_right() {
            return Err(MatchingError::SizeMismatch);
        }
        for (s, g) in self.pairs() {
            if !bg.has_edge(s, g) {
                return Err(MatchingError::ForeignPair { s, g });
            }
        }
        Ok(())
    }
}

/// Tries to grow `m` by exactly one augmenting path.
///
/// Returns true when the matching grew; false means `m` is already maximum
/// on `bg`.
pub fn augment_once(bg: &BipartiteGraph, m: &mut Matching) -> Result<bool, MatchingError> {
    m.check_against(bg)?;
    for s in 0..bg.n_left() as u32 {
        if m.right_of(s).is_some() {
            continue;
        }
        let mut visited = vec![false; bg.n_right()];
        if try_augment(bg, m, s, &mut visited) {
            return Ok(true);
        }
    }
    Ok(false)
}

fn try_augment(bg: &BipartiteGraph, m: &mut Matching, s: u32, visited: &mut [bool]) -> bool {
    for &(g, _) in bg.edges_from(s) {
        if visited[g as usize] {
            continue;
        }
        visited[g as usize] = true;
        let free = match m.left_of(g) {
            None => true,
            Some(owner) => try_augment(bg, m, owner, visited),
        };
        if free {
            m.set(s, g);
            return true;
        }
    }
    false
}

/// Iterates `augment_once` to a fixpoint.
pub fn maximum_matching(bg: &BipartiteGraph) -> Matching {
    let mut m = Matching::new(bg);
    while augment_once(bg, &mut m).expect("fresh matching is consistent") {}
    m
}

/// Minimum-cost matching among those saturating the right side.
///
/// Successive shortest paths with vertex potentials; deterministic because
/// every scan runs in ascending vertex order. Errors when some right vertex
/// cannot be matched.
pub fn min_cost_max_matching(bg: &BipartiteGraph) -> Result<Matching, MatchingError> {
    let (n_left, n_right) = (bg.n_left(), bg.n_right());
    let mut m = Matching::new(bg);
    let mut pot_left = vec![0i64; n_left];
    let mut pot_right = vec![0i64; n_right];

    for _round in 0..n_right {
        // Dijkstra over the residual graph: free left vertices are sources,
        // the first free right vertex popped is the cheapest augmenting end.
        const INF: i64 = i64::MAX / 4;
        let mut dist_left = vec![INF; n_left];
        let mut dist_right = vec![INF; n_right];
        let mut parent_right: Vec<Option<u32>> = vec![None; n_right];
        let mut heap = BinaryHeap::new();
        for s in 0..n_left as u32 {
            if m.right_of(s).is_none() {
                dist_left[s as usize] = 0;
                heap.push(Reverse((0i64, 0u8, s)));
            }
        }
        let mut found: Option<(i64, u32)> = None;
        while let Some(Reverse((d, side, v))) = heap.pop() {
            if side == 0 {
                if d > dist_left[v as usize] {
                    continue;
                }
                for &(g, cost) in bg.edges_from(v) {
                    if m.right_of(v) == Some(g) {
                        continue;
                    }
                    let reduced = cost as i64 + pot_left[v as usize] - pot_right[g as usize];
                    debug_assert!(reduced >= 0);
                    let nd = d + reduced;
                    if nd < dist_right[g as usize] {
                        dist_right[g as usize] = nd;
                        parent_right[g as usize] = Some(v);
                        heap.push(Reverse((nd, 1, g)));
                    }
                }
            } else {
                if d > dist_right[v as usize] {
                    continue;
                }
                match m.left_of(v) {
                    None => {
                        found = Some((d, v));
                        break;
                    }
                    Some(owner) => {
                        // traverse the matched edge backward at reduced cost 0
                        let cost = bg.cost(owner, v).expect("matched pair is an edge") as i64;
                        let reduced = -cost + pot_right[v as usize] - pot_left[owner as usize];
                        debug_assert!(reduced >= 0);
                        let nd = d + reduced;
                        if nd < dist_left[owner as usize] {
                            dist_left[owner as usize] = nd;
                            heap.push(Reverse((nd, 0, owner)));
                        }
                    }
                }
            }
        }

        let Some((d_final, mut g)) = found else {
            return Err(MatchingError::Unsaturable { matched: m.size(), n_right });
        };
        // Capping the potential shift at d_final keeps reduced costs of edges
        // touching unsettled vertices nonnegative.
        for s in 0..n_left {
            pot_left[s] += dist_left[s].min(d_final);
        }
        for r in 0..n_right {
            pot_right[r] += dist_right[r].min(d_final);
        }
        // flip the augmenting path ending at the free right vertex
        loop {
            let s = parent_right[g as usize].expect("path reaches a free left vertex");
            let prev = m.right_of(s);
            m.set(s, g);
            match prev {
                None => break,
                Some(pg) => g = pg,
            }
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_edge_augments() {
        let mut bg = BipartiteGraph::new(1, 1);
        bg.add_edge(0, 0, 1).unwrap();
        let mut m = Matching::new(&bg);
        assert!(augment_once(&bg, &mut m).unwrap());
        assert_eq!(m.pairs(), vec![(0, 0)]);
        assert!(!augment_once(&bg, &mut m).unwrap());
    }

    /// Costs of the six-node line example: s1..s3 against g1..g3.
    fn line_costs() -> [[u32; 3]; 3] {
        [[2, 2, 3], [3, 1, 2], [4, 0, 1]]
    }

    #[test]
    fn incremental_insertion_saturates() {
        // Insert edges in distance order and watch the matching grow to 3.
        let mut bg = BipartiteGraph::new(3, 3);
        let mut m = Matching::new(&bg);
        let costs = line_costs();
        let order = [(2u32, 1u32), (1, 1), (2, 2), (0, 0)];
        let mut sizes = Vec::new();
        for (s, g) in order {
            bg.add_edge(s, g, costs[s as usize][g as usize]).unwrap();
            augment_once(&bg, &mut m).unwrap();
            sizes.push(m.size());
        }
        assert_eq!(sizes, vec![1, 1, 2, 3]);
    }

    #[test]
    fn saturated_complete_graph_stops_growing() {
        let mut bg = BipartiteGraph::new(3, 3);
        for s in 0..3 {
            for g in 0..3 {
                bg.add_edge(s, g, 1).unwrap();
            }
        }
        let mut m = maximum_matching(&bg);
        assert_eq!(m.size(), 3);
        assert!(!augment_once(&bg, &mut m).unwrap());
    }

    #[test]
    fn foreign_pair_rejected() {
        let mut with_edge = BipartiteGraph::new(2, 2);
        with_edge.add_edge(0, 0, 1).unwrap();
        let mut m = Matching::new(&with_edge);
        assert!(augment_once(&with_edge, &mut m).unwrap());
        let empty = BipartiteGraph::new(2, 2);
        assert!(matches!(
            augment_once(&empty, &mut m),
            Err(MatchingError::ForeignPair { .. })
        ));
    }

    /// Exhaustive maximum-matching size by recursion over right vertices.
    fn brute_force_max_matching(edges: &[(u32, u32)], g: usize, used: &mut Vec<bool>) -> usize {
        if g == 0 {
            return 0;
        }
        let mut best = brute_force_max_matching(edges, g - 1, used);
        for &(s, gg) in edges {
            if gg as usize == g - 1 && !used[s as usize] {
                used[s as usize] = true;
                best = best.max(1 + brute_force_max_matching(edges, g - 1, used));
                used[s as usize] = false;
            }
        }
        best
    }

    #[test]
    fn fixpoint_reaches_maximum_on_random_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..60 {
            let n_left = rng.gen_range(1..=7);
            let n_right = rng.gen_range(1..=7);
            let mut bg = BipartiteGraph::new(n_left, n_right);
            let mut edges = Vec::new();
            for s in 0..n_left as u32 {
                for g in 0..n_right as u32 {
                    if rng.gen_bool(0.4) {
                        bg.add_edge(s, g, 1).unwrap();
                        edges.push((s, g));
                    }
                }
            }
            let m = maximum_matching(&bg);
            let mut used = vec![false; n_left];
            let best = brute_force_max_matching(&edges, n_right, &mut used);
            assert_eq!(m.size(), best);
        }
    }

    #[test]
    fn min_cost_on_line_example() {
        // Bottleneck-feasible edge set of the six-node line example.
        let mut bg = BipartiteGraph::new(3, 3);
        let costs = line_costs();
        for (s, g) in [(2u32, 1u32), (1, 1), (2, 2), (0, 0), (0, 1), (1, 2)] {
            bg.add_edge(s, g, costs[s as usize][g as usize]).unwrap();
        }
        let m = min_cost_max_matching(&bg).unwrap();
        assert_eq!(m.size(), 3);
        assert_eq!(m.total_cost(&bg), 4);
    }

    #[test]
    fn uniform_costs_cost_is_cardinality_times_cost() {
        let mut bg = BipartiteGraph::new(4, 3);
        for s in 0..4 {
            for g in 0..3 {
                bg.add_edge(s, g, 5).unwrap();
            }
        }
        let m = min_cost_max_matching(&bg).unwrap();
        assert_eq!(m.size(), 3);
        assert_eq!(m.total_cost(&bg), 15);
    }

    #[test]
    fn unsaturable_right_side_errors() {
        let mut bg = BipartiteGraph::new(2, 2);
        bg.add_edge(0, 0, 1).unwrap();
        bg.add_edge(1, 0, 1).unwrap();
        assert!(matches!(
            min_cost_max_matching(&bg),
            Err(MatchingError::Unsaturable { matched: 1, n_right: 2 })
        ));
    }

    fn brute_force_min_perfect_cost(costs: &[Vec<u32>]) -> u64 {
        let n = costs.len();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut best = u64::MAX;
        permute(&mut perm, 0, &mut |p| {
            let total: u64 = p.iter().enumerate().map(|(s, &g)| costs[s][g] as u64).sum();
            best = best.min(total);
        });
        best
    }

    fn permute(items: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
        if k == items.len() {
            f(items);
            return;
        }
        for i in k..items.len() {
            items.swap(k, i);
            permute(items, k + 1, f);
            items.swap(k, i);
        }
    }

    #[test]
    fn min_cost_matches_permutation_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let n = 5;
            let costs: Vec<Vec<u32>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(0..50)).collect()).collect();
            let mut bg = BipartiteGraph::new(n, n);
            for s in 0..n {
                for g in 0..n {
                    bg.add_edge(s as u32, g as u32, costs[s][g]).unwrap();
                }
            }
            let m = min_cost_max_matching(&bg).unwrap();
            assert_eq!(m.size(), n);
            assert_eq!(m.total_cost(&bg), brute_force_min_perfect_cost(&costs));
        }
    }
}
