//! Shared oracles for the integration suites. Everything here is written
//! from scratch so it checks the library without reusing its search code.
#![allow(dead_code)] // each test binary uses its own subset

use std::collections::{HashSet, VecDeque};

use unlabeled_mapf::graph::{DistanceOracle, Graph, Node};
use unlabeled_mapf::tswap::AgentState;

/// Plain breadth-first distances from one source, independent of the
/// library's oracle.
pub fn textbook_bfs(graph: &Graph, source: Node) -> Vec<u32> {
    let mut dist = vec![u32::MAX; graph.n_nodes()];
    dist[source.index()] = 0;
    let mut queue = VecDeque::from([source]);
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

pub fn diameter(graph: &Graph) -> u32 {
    graph
        .nodes()
        .map(|v| textbook_bfs(graph, v).into_iter().max().unwrap())
        .max()
        .unwrap()
}

/// dists[agent][target] by one textbook BFS per target.
pub fn distance_matrix(graph: &Graph, starts: &[Node], targets: &[Node]) -> Vec<Vec<u32>> {
    let per_target: Vec<Vec<u32>> = targets.iter().map(|&g| textbook_bfs(graph, g)).collect();
    starts
        .iter()
        .map(|&s| per_target.iter().map(|d| d[s.index()]).collect())
        .collect()
}

/// Calls `f` with every injective target -> agent map (`map[t]` = agent).
pub fn enumerate_assignments(n_agents: usize, n_targets: usize, f: &mut impl FnMut(&[usize])) {
    fn recurse(n_agents: usize, map: &mut Vec<usize>, used: &mut Vec<bool>, n_targets: usize, f: &mut impl FnMut(&[usize])) {
        if map.len() == n_targets {
            f(map);
            return;
        }
        for agent in 0..n_agents {
            if !used[agent] {
                used[agent] = true;
                map.push(agent);
                recurse(n_agents, map, used, n_targets, f);
                map.pop();
                used[agent] = false;
            }
        }
    }
    recurse(n_agents, &mut Vec::new(), &mut vec![false; n_agents], n_targets, f);
}

pub fn brute_force_bottleneck(dists: &[Vec<u32>], n_targets: usize) -> u32 {
    let mut best = u32::MAX;
    enumerate_assignments(dists.len(), n_targets, &mut |map| {
        let worst = map
            .iter()
            .enumerate()
            .map(|(t, &agent)| dists[agent][t])
            .max()
            .unwrap_or(0);
        best = best.min(worst);
    });
    best
}

pub fn brute_force_min_total(dists: &[Vec<u32>], n_targets: usize) -> u64 {
    let mut best = u64::MAX;
    enumerate_assignments(dists.len(), n_targets, &mut |map| {
        let total = map
            .iter()
            .enumerate()
            .map(|(t, &agent)| dists[agent][t] as u64)
            .sum();
        best = best.min(total);
    });
    best
}

/// Exhaustive breadth-first search over anonymous configurations: the exact
/// minimum makespan. Configurations are sorted position vectors; joint moves
/// respect vertex and swap conflicts.
pub fn optimal_makespan_joint_bfs(graph: &Graph, starts: &[Node], targets: &[Node]) -> usize {
    let covers = |cfg: &[Node]| targets.iter().all(|t| cfg.contains(t));
    let mut start_cfg = starts.to_vec();
    start_cfg.sort();
    if covers(&start_cfg) {
        return 0;
    }
    let mut seen: HashSet<Vec<Node>> = HashSet::from([start_cfg.clone()]);
    let mut frontier = vec![start_cfg];
    let cap = graph.n_nodes() + starts.len() + 2;
    for depth in 1..=cap {
        let mut next_frontier = Vec::new();
        for cfg in &frontier {
            let mut done = false;
            enumerate_joint_moves(graph, cfg, &mut |next_cfg| {
                if done {
                    return;
                }
                let mut key = next_cfg.to_vec();
                key.sort();
                if seen.insert(key.clone()) {
                    if covers(&key) {
                        done = true;
                    }
                    next_frontier.push(key);
                }
            });
            if done {
                return depth;
            }
        }
        assert!(!next_frontier.is_empty(), "joint search exhausted without covering the targets");
        frontier = next_frontier;
    }
    panic!("no solution within {} steps; instances on connected graphs are always solvable", cap);
}

fn enumerate_joint_moves(graph: &Graph, cfg: &[Node], f: &mut impl FnMut(&[Node])) {
    fn recurse(graph: &Graph, cfg: &[Node], chosen: &mut Vec<Node>, f: &mut impl FnMut(&[Node])) {
        let idx = chosen.len();
        if idx == cfg.len() {
            f(chosen);
            return;
        }
        let mut candidates = vec![cfg[idx]];
        candidates.extend_from_slice(graph.neighbors(cfg[idx]));
        'candidate: for next in candidates {
            for j in 0..idx {
                if chosen[j] == next {
                    continue 'candidate; // vertex conflict
                }
                if chosen[j] == cfg[idx] && next == cfg[j] {
                    continue 'candidate; // swap conflict
                }
            }
            chosen.push(next);
            recurse(graph, cfg, chosen, f);
            chosen.pop();
        }
    }
    recurse(graph, cfg, &mut Vec::new(), f);
}

/// Termination potential: per agent, the distance home plus the number of
/// assigned targets sitting on the interior of its steepest-descent path.
pub fn phi(graph: &Graph, states: &[AgentState]) -> u64 {
    let mut assigned = vec![false; graph.n_nodes()];
    for s in states {
        assigned[s.g.index()] = true;
    }
    let mut oracle = DistanceOracle::new(graph);
    let mut total = 0u64;
    for s in states {
        total += oracle.dist_lazy(s.v, s.g) as u64;
        let mut cur = s.v;
        while cur != s.g {
            cur = oracle.next_node(cur, s.g);
            if cur != s.g && assigned[cur.index()] {
                total += 1;
            }
        }
    }
    total
}

/// Distance-sum potential: one unit per future move.
pub fn psi(graph: &Graph, states: &[AgentState]) -> u64 {
    let mut oracle = DistanceOracle::new(graph);
    states.iter().map(|s| oracle.dist_lazy(s.v, s.g) as u64).sum()
}
