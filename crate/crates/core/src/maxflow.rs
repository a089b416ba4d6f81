//! Augmenting-path maximum flow with retained residual state.
//!
//! Capacities are integral (almost always 1 here). The residual graph
//! survives between calls, so a caller can seed flow with `force_path` and
//! keep augmenting, which is what the horizon-extension reuse needs.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FlowError {
    SourceIsSink,
    VertexOutOfRange { vertex: u32, n_vertices: usize },
}

impl fmt::Display for FlowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlowError::SourceIsSink => write!(f, "source and sink must differ"),
            FlowError::VertexOutOfRange { vertex, n_vertices } => {
                write!(f, "vertex {} out of range ({} vertices)", vertex, n_vertices)
            }
        }
    }
}

impl std::error::Error for FlowError {}

#[derive(Debug, Clone, Copy)]
struct Arc {
    to: u32,
    /// remaining residual capacity
    cap: u32,
}

/// View of one residual arc.
#[derive(Debug, Clone, Copy)]
pub struct ArcView {
    pub id: u32,
    pub to: u32,
    pub remaining: u32,
    /// true for arcs added by `add_arc`, false for their residual twins
    pub is_forward: bool,
}

#[derive(Debug, Clone)]
pub struct FlowNetwork {
    source: u32,
    sink: u32,
    head: Vec<Vec<u32>>,
    arcs: Vec<Arc>,
    flow: usize,
    augmentations: u64,
    pruned_skips: u64,
}

impl FlowNetwork {
    pub fn new(n_vertices: usize, source: u32, sink: u32) -> Result<Self, FlowError> {
        if source == sink {
            return Err(FlowError::SourceIsSink);
        }
        for v in [source, sink] {
            if v as usize >= n_vertices {
                return Err(FlowError::VertexOutOfRange { vertex: v, n_vertices });
            }
        }
        Ok(FlowNetwork {
            source,
            sink,
            head: vec![Vec::new(); n_vertices],
            arcs: Vec::new(),
            flow: 0,
            augmentations: 0,
            pruned_skips: 0,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.head.len()
    }

    pub fn n_arcs(&self) -> usize {
        self.arcs.len() / 2
    }

    pub fn source(&self) -> u32 {
        self.source
    }

    pub fn sink(&self) -> u32 {
        self.sink
    }

    /// Adds a directed arc and its zero-capacity residual twin.
    /// Returns the forward arc id (twin is `id ^ 1`).
    pub fn add_arc(&mut self, from: u32, to: u32, cap: u32) -> u32 {
        let n = self.head.len();
        assert!((from as usize) < n && (to as usize) < n, "arc endpoint out of range");
        let id = self.arcs.len() as u32;
        self.arcs.push(Arc { to, cap });
        self.arcs.push(Arc { to: from, cap: 0 });
        self.head[from as usize].push(id);
        self.head[to as usize].push(id + 1);
        id
    }

    /// Flow pushed through a forward arc.
    pub fn arc_flow(&self, forward_id: u32) -> u32 {
        debug_assert!(forward_id % 2 == 0, "flow is queried on forward arcs");
        self.arcs[(forward_id ^ 1) as usize].cap
    }

    pub fn arcs_from(&self, v: u32) -> impl Iterator<Item = ArcView> + '_ {
        self.head[v as usize].iter().map(move |&id| ArcView {
            id,
            to: self.arcs[id as usize].to,
            remaining: self.arcs[id as usize].cap,
            is_forward: id % 2 == 0,
        })
    }

    pub fn flow_value(&self) -> usize {
        self.flow
    }

    /// Augmenting paths found by search (forced paths not included).
    pub fn augmentations(&self) -> u64 {
        self.augmentations
    }

    /// Vertices skipped by the prune predicate during search.
    pub fn pruned_skips(&self) -> u64 {
        self.pruned_skips
    }

    /// Pushes one unit along an explicit vertex path without searching.
    /// Every hop must have residual capacity; used to replant a known flow.
    pub fn force_path(&mut self, vertices: &[u32]) {
        assert!(vertices.first() == Some(&self.source) && vertices.last() == Some(&self.sink));
        for pair in vertices.windows(2) {
            let arc = self.head[pair[0] as usize]
                .iter()
                .copied()
                .find(|&id| self.arcs[id as usize].to == pair[1] && self.arcs[id as usize].cap > 0)
                .expect("forced path hop has residual capacity");
            self.arcs[arc as usize].cap -= 1;
            self.arcs[(arc ^ 1) as usize].cap += 1;
        }
        self.flow += 1;
    }

    /// Augments until no residual path remains; returns the total flow value.
    ///
    /// `prune` marks vertices the search must not expand. A sound predicate
    /// (one that never cuts every residual source-sink path that exists
    /// without it) leaves the final value unchanged.
    pub fn max_flow(&mut self, prune: Option<&dyn Fn(u32) -> bool>) -> usize {
        let n = self.head.len();
        let mut parent_arc: Vec<u32> = vec![u32::MAX; n];
        let mut visited: Vec<bool> = vec![false; n];
        let mut stack: Vec<(u32, usize)> = Vec::new();
        loop {
            visited.iter_mut().for_each(|v| *v = false);
            stack.clear();
            stack.push((self.source, 0));
            visited[self.source as usize] = true;
            let mut reached = false;
            let mut pruned_here = 0u64;
            'dfs: while let Some(&mut (v, ref mut idx)) = stack.last_mut() {
                let out = &self.head[v as usize];
                while *idx < out.len() {
                    let arc = out[*idx];
                    *idx += 1;
                    let to = self.arcs[arc as usize].to;
                    if self.arcs[arc as usize].cap == 0 || visited[to as usize] {
                        continue;
                    }
                    if to != self.sink {
                        if let Some(p) = prune {
                            if p(to) {
                                pruned_here += 1;
                                continue;
                            }
                        }
                    }
                    visited[to as usize] = true;
                    parent_arc[to as usize] = arc;
                    if to == self.sink {
                        reached = true;
                        break 'dfs;
                    }
                    stack.push((to, 0));
                    continue 'dfs;
                }
                stack.pop();
            }
            self.pruned_skips += pruned_here;
            if !reached {
                break;
            }
            let mut bottleneck = u32::MAX;
            let mut v = self.sink;
            while v != self.source {
                let a = parent_arc[v as usize];
                bottleneck = bottleneck.min(self.arcs[a as usize].cap);
                v = self.arcs[(a ^ 1) as usize].to;
            }
            let mut v = self.sink;
            while v != self.source {
                let a = parent_arc[v as usize];
                self.arcs[a as usize].cap -= bottleneck;
                self.arcs[(a ^ 1) as usize].cap += bottleneck;
                v = self.arcs[(a ^ 1) as usize].to;
            }
            self.flow += bottleneck as usize;
            self.augmentations += 1;
        }
        self.flow
    }

    /// Net flow out of a vertex; zero everywhere but source and sink when the
    /// flow is conserved.
    pub fn flow_excess(&self, v: u32) -> i64 {
        let mut excess = 0i64;
        for (id, pair) in self.arcs.chunks(2).enumerate() {
            let forward_id = (id * 2) as u32;
            let from = pair[1].to;
            let to = pair[0].to;
            let f = self.arc_flow(forward_id) as i64;
            if from == v {
                excess += f;
            }
            if to == v {
                excess -= f;
            }
        }
        excess
    }

    pub fn is_conserved(&self) -> bool {
        (0..self.head.len() as u32)
            .filter(|&v| v != self.source && v != self.sink)
            .all(|v| self.flow_excess(v) == 0)
    }
}
