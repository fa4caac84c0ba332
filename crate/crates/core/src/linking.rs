//! Maximum linkings (sets of vertex-disjoint paths) and the saturation test.
//!
//! Linkings are computed as unit-capacity max-flow on the vertex-split
//! network: every vertex `v` becomes `v_in -> v_out` with capacity one,
//! each edge `u -> v` becomes `u_out -> v_in`, the super-source feeds every
//! source's `v_in` and every target's `v_out` drains into the super-sink.
//! By Menger's theorem the flow value is the maximum number of
//! vertex-disjoint source-to-target paths.

use std::collections::{BTreeSet, HashSet, VecDeque};

use thiserror::Error;

use crate::model::{AttackGraph, VertexId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinkingError {
    #[error("vertex {0} is not part of the graph")]
    UnknownVertex(VertexId),
    #[error("vertex {0} is not a member of the attack subset")]
    NotInSubset(VertexId),
    #[error("invalid linking: {0}")]
    InvalidLinking(String),
}

/// A set of pairwise vertex-disjoint directed paths.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Linking {
    pub paths: Vec<Vec<VertexId>>,
}

impl Linking {
    pub fn size(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Whether some path of the linking passes through `v`.
    pub fn saturates(&self, v: VertexId) -> bool {
        self.paths.iter().any(|p| p.contains(&v))
    }

    /// Consecutive vertex pairs along all paths.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.paths
            .iter()
            .flat_map(|p| p.windows(2).map(|w| (w[0], w[1])))
    }

    /// Checks that the linking is made of simple, pairwise disjoint paths of
    /// `graph` from `sources` to `targets`.
    pub fn validate(
        &self,
        graph: &AttackGraph,
        sources: &[VertexId],
        targets: &[VertexId],
    ) -> Result<(), LinkingError> {
        let mut used = HashSet::new();
        for path in &self.paths {
            let (Some(first), Some(last)) = (path.first(), path.last()) else {
                return Err(LinkingError::InvalidLinking("empty path".into()));
            };
            if !sources.contains(first) {
                return Err(LinkingError::InvalidLinking(format!(
                    "path starts at {first}, which is not a source"
                )));
            }
            if !targets.contains(last) {
                return Err(LinkingError::InvalidLinking(format!(
                    "path ends at {last}, which is not a target"
                )));
            }
            for &v in path {
                if !graph.contains(v) {
                    return Err(LinkingError::UnknownVertex(v));
                }
                if !used.insert(v) {
                    return Err(LinkingError::InvalidLinking(format!(
                        "vertex {v} appears twice"
                    )));
                }
            }
            if let Some(w) = path.windows(2).find(|w| !graph.has_edge(w[0], w[1])) {
                return Err(LinkingError::InvalidLinking(format!(
                    "no edge {} -> {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(())
    }
}

/// Reusable vertex-split flow network over a plain adjacency list.
///
/// Built once per graph; each query only resets capacities, so repeated
/// calls (as in subset enumeration) avoid rebuilding the network. Scratch
/// state is owned, so use one instance per thread.
#[derive(Debug, Clone)]
pub struct DisjointPathNetwork {
    vertex_count: usize,
    head: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<u32>,
    base_cap: Vec<u32>,
    source_arc: Vec<usize>,
    sink_arc: Vec<usize>,
    level: Vec<u32>,
    cursor: Vec<usize>,
}

const UNREACHED: u32 = u32::MAX;

impl DisjointPathNetwork {
    pub fn new(adjacency: &[Vec<usize>]) -> Self {
        let n = adjacency.len();
        let mut net = Self {
            vertex_count: n,
            head: vec![Vec::new(); 2 * n + 2],
            to: Vec::new(),
            cap: Vec::new(),
            base_cap: Vec::new(),
            source_arc: Vec::with_capacity(n),
            sink_arc: Vec::with_capacity(n),
            level: vec![UNREACHED; 2 * n + 2],
            cursor: vec![0; 2 * n + 2],
        };
        for v in 0..n {
            net.add_arc(2 * v, 2 * v + 1, 1);
        }
        for (v, list) in adjacency.iter().enumerate() {
            for &w in list {
                net.add_arc(2 * v + 1, 2 * w, 1);
            }
        }
        let (s, t) = (net.source(), net.sink());
        for v in 0..n {
            let arc = net.add_arc(s, 2 * v, 0);
            net.source_arc.push(arc);
        }
        for v in 0..n {
            let arc = net.add_arc(2 * v + 1, t, 0);
            net.sink_arc.push(arc);
        }
        net
    }

    fn source(&self) -> usize {
        2 * self.vertex_count
    }

    fn sink(&self) -> usize {
        2 * self.vertex_count + 1
    }

    fn add_arc(&mut self, from: usize, to: usize, cap: u32) -> usize {
        let id = self.to.len();
        self.head[from].push(id);
        self.to.push(to);
        self.cap.push(cap);
        self.base_cap.push(cap);
        self.head[to].push(id + 1);
        self.to.push(from);
        self.cap.push(0);
        self.base_cap.push(0);
        id
    }

    fn flows(&self, arc: usize) -> bool {
        self.base_cap[arc] > 0 && self.cap[arc] == 0
    }

    /// Maximum number of vertex-disjoint paths from `sources` to `targets`
    /// (dense vertex indices; duplicates are ignored).
    pub fn max_disjoint_paths(&mut self, sources: &[usize], targets: &[usize]) -> usize {
        for v in 0..self.vertex_count {
            self.base_cap[self.source_arc[v]] = 0;
            self.base_cap[self.sink_arc[v]] = 0;
        }
        for &s in sources {
            self.base_cap[self.source_arc[s]] = 1;
        }
        for &t in targets {
            self.base_cap[self.sink_arc[t]] = 1;
        }
        self.cap.copy_from_slice(&self.base_cap);
        self.dinic()
    }

    fn dinic(&mut self) -> usize {
        let (s, t) = (self.source(), self.sink());
        let mut total = 0;
        while self.bfs(s, t) {
            self.cursor.iter_mut().for_each(|c| *c = 0);
            while self.augment(s, t) {
                total += 1;
            }
        }
        total
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = UNREACHED);
        self.level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &arc in &self.head[u] {
                let v = self.to[arc];
                if self.cap[arc] > 0 && self.level[v] == UNREACHED {
                    self.level[v] = self.level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        self.level[t] != UNREACHED
    }

    /// Finds one unit augmenting path in the level graph; iterative so that
    /// long chains do not grow the call stack.
    fn augment(&mut self, s: usize, t: usize) -> bool {
        let mut stack: Vec<usize> = Vec::new();
        let mut u = s;
        loop {
            if u == t {
                for &arc in &stack {
                    self.cap[arc] -= 1;
                    self.cap[arc ^ 1] += 1;
                }
                return true;
            }
            let mut advanced = false;
            while self.cursor[u] < self.head[u].len() {
                let arc = self.head[u][self.cursor[u]];
                let v = self.to[arc];
                if self.cap[arc] > 0 && self.level[v] == self.level[u] + 1 {
                    stack.push(arc);
                    u = v;
                    advanced = true;
                    break;
                }
                self.cursor[u] += 1;
            }
            if !advanced {
                // dead end: retreat and skip the arc that led here
                self.level[u] = UNREACHED;
                match stack.pop() {
                    Some(arc) => {
                        u = self.to[arc ^ 1];
                        self.cursor[u] += 1;
                    }
                    None => return false,
                }
            }
        }
    }

    /// Decomposes the flow of the last query into vertex paths, one per
    /// flow-carrying source arc in vertex order. Flow cycles are never
    /// reachable from the super-source and are dropped.
    pub fn paths(&self) -> Vec<Vec<usize>> {
        let t = self.sink();
        let mut paths = Vec::new();
        for v in 0..self.vertex_count {
            if !self.flows(self.source_arc[v]) {
                continue;
            }
            let mut path = vec![v];
            let mut current = v;
            loop {
                let out = 2 * current + 1;
                let next = self.head[out]
                    .iter()
                    .copied()
                    .filter(|&arc| arc % 2 == 0 && self.flows(arc))
                    .map(|arc| self.to[arc])
                    .next()
                    .expect("flow conservation at v_out");
                if next == t {
                    break;
                }
                current = next / 2;
                path.push(current);
            }
            paths.push(path);
        }
        paths
    }
}

/// Linking queries against one attack graph.
#[derive(Debug, Clone)]
pub struct LinkingSolver<'g> {
    graph: &'g AttackGraph,
    network: DisjointPathNetwork,
}

impl<'g> LinkingSolver<'g> {
    pub fn new(graph: &'g AttackGraph) -> Self {
        Self {
            graph,
            network: DisjointPathNetwork::new(graph.adjacency()),
        }
    }

    pub fn graph(&self) -> &'g AttackGraph {
        self.graph
    }

    fn positions(&self, set: &[VertexId]) -> Result<Vec<usize>, LinkingError> {
        let unique: BTreeSet<VertexId> = set.iter().copied().collect();
        unique
            .into_iter()
            .map(|v| self.graph.position(v).ok_or(LinkingError::UnknownVertex(v)))
            .collect()
    }

    pub fn max_linking_size(
        &mut self,
        sources: &[VertexId],
        targets: &[VertexId],
    ) -> Result<usize, LinkingError> {
        let s = self.positions(sources)?;
        let t = self.positions(targets)?;
        Ok(self.network.max_disjoint_paths(&s, &t))
    }

    pub fn find_max_linking(
        &mut self,
        sources: &[VertexId],
        targets: &[VertexId],
    ) -> Result<Linking, LinkingError> {
        let s = self.positions(sources)?;
        let t = self.positions(targets)?;
        self.network.max_disjoint_paths(&s, &t);
        let vertices = self.graph.vertices();
        let paths = self
            .network
            .paths()
            .into_iter()
            .map(|p| p.into_iter().map(|i| vertices[i]).collect())
            .collect();
        Ok(Linking { paths })
    }

    /// Whether every maximum linking from `subset` to the sensors saturates
    /// `component`; equivalently, removing `component` from the subset
    /// lowers the maximum linking size by one.
    pub fn saturated_by_all_max_linkings(
        &mut self,
        subset: &[VertexId],
        component: VertexId,
    ) -> Result<bool, LinkingError> {
        if !subset.contains(&component) {
            return Err(LinkingError::NotInSubset(component));
        }
        let targets = self.graph.targets();
        let with = self.max_linking_size(subset, targets)?;
        let rest: Vec<VertexId> = subset.iter().copied().filter(|&v| v != component).collect();
        let without = self.max_linking_size(&rest, targets)?;
        Ok(with == without + 1)
    }
}

pub fn max_linking_size(
    graph: &AttackGraph,
    sources: &[VertexId],
    targets: &[VertexId],
) -> Result<usize, LinkingError> {
    LinkingSolver::new(graph).max_linking_size(sources, targets)
}

pub fn find_max_linking(
    graph: &AttackGraph,
    sources: &[VertexId],
    targets: &[VertexId],
) -> Result<Linking, LinkingError> {
    LinkingSolver::new(graph).find_max_linking(sources, targets)
}

pub fn saturated_by_all_max_linkings(
    graph: &AttackGraph,
    attack_subset: &[VertexId],
    component: VertexId,
) -> Result<bool, LinkingError> {
    LinkingSolver::new(graph).saturated_by_all_max_linkings(attack_subset, component)
}
