//! Undirected simple graphs, Watts-Strogatz sampling, and breadth-first
//! traversal.

use std::collections::{BTreeSet, VecDeque};

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{self, Domain};

/// Immutable undirected simple graph.
///
/// Edges are stored once as `(u, v)` with `u < v`, sorted ascending. The CSR
/// adjacency stores both directions with each row sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
    offsets: Vec<usize>,
    targets: Vec<usize>,
}

impl Graph {
    /// Builds a graph, rejecting self-loops, duplicates and out-of-range ids.
    pub fn from_edges(num_nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut normalized = Vec::with_capacity(edges.len());
        for (i, &(a, b)) in edges.iter().enumerate() {
            if a >= num_nodes || b >= num_nodes {
                return Err(Error::param(format!(
                    "edge {i} ({a},{b}) references a node outside 0..{num_nodes}"
                )));
            }
            if a == b {
                return Err(Error::param(format!("edge {i} is a self-loop on node {a}")));
            }
            normalized.push((a.min(b), a.max(b)));
        }
        normalized.sort_unstable();
        if let Some(w) = normalized.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::param(format!(
                "duplicate edge ({},{})",
                w[0].0, w[0].1
            )));
        }
        Ok(Self::from_sorted_unique(num_nodes, normalized))
    }

    /// Builds a graph from arbitrary pairs, dropping self-loops and
    /// duplicates (in either orientation). Returns the graph with the number
    /// of self-loops and duplicates removed.
    pub fn from_edges_lossy(
        num_nodes: usize,
        edges: &[(usize, usize)],
    ) -> Result<(Self, usize, usize)> {
        let mut self_loops = 0;
        let mut normalized = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= num_nodes || b >= num_nodes {
                return Err(Error::param(format!(
                    "edge ({a},{b}) references a node outside 0..{num_nodes}"
                )));
            }
            if a == b {
                self_loops += 1;
            } else {
                normalized.push((a.min(b), a.max(b)));
            }
        }
        normalized.sort_unstable();
        let before = normalized.len();
        normalized.dedup();
        let duplicates = before - normalized.len();
        Ok((Self::from_sorted_unique(num_nodes, normalized), self_loops, duplicates))
    }

    fn from_sorted_unique(num_nodes: usize, edges: Vec<(usize, usize)>) -> Self {
        let mut degree = vec![0usize; num_nodes];
        for &(u, v) in &edges {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut offsets = Vec::with_capacity(num_nodes + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..num_nodes].to_vec();
        let mut targets = vec![0usize; 2 * edges.len()];
        for &(u, v) in &edges {
            targets[fill[u]] = v;
            fill[u] += 1;
            targets[fill[v]] = u;
            fill[v] += 1;
        }
        for u in 0..num_nodes {
            targets[offsets[u]..offsets[u + 1]].sort_unstable();
        }
        Self {
            num_nodes,
            edges,
            offsets,
            targets,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Undirected edges as `(u, v)` with `u < v`, ascending.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Sorted neighbor ids of `u`.
    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.targets[self.offsets[u]..self.offsets[u + 1]]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.num_nodes && v < self.num_nodes && self.neighbors(u).binary_search(&v).is_ok()
    }

    /// CSR row offsets (length `num_nodes + 1`).
    pub fn csr_offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// CSR column indices, both directions stored.
    pub fn csr_targets(&self) -> &[usize] {
        &self.targets
    }

    /// Applies a node relabeling `perm[old] = new`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.num_nodes {
            return Err(Error::param("permutation length differs from node count"));
        }
        let edges: Vec<_> = self.edges.iter().map(|&(u, v)| (perm[u], perm[v])).collect();
        Self::from_edges(self.num_nodes, &edges)
    }
}

/// Watts-Strogatz parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WsParams {
    pub n: usize,
    pub k: usize,
    pub beta: f64,
    pub seed: u64,
}

impl WsParams {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 || self.k % 2 != 0 {
            return Err(Error::param(format!("mean degree k={} must be even and >= 2", self.k)));
        }
        if self.k >= self.n {
            return Err(Error::param(format!("mean degree k={} must be below n={}", self.k, self.n)));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::param(format!("rewiring probability {} outside [0,1]", self.beta)));
        }
        Ok(())
    }
}

/// Samples a Watts-Strogatz small-world graph.
///
/// Lattice edges `(u, u + j mod n)` are visited by node, then by offset
/// `j = 1..=k/2`. With probability `beta` the far endpoint is replaced by a
/// uniformly drawn node that is neither `u` nor already adjacent to `u`.
/// Nodes already adjacent to every other node are skipped.
pub fn watts_strogatz(params: WsParams) -> Result<Graph> {
    params.validate()?;
    let WsParams { n, k, beta, seed } = params;
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for u in 0..n {
        for j in 1..=k / 2 {
            let v = (u + j) % n;
            adj[u].insert(v);
            adj[v].insert(u);
        }
    }
    let mut rng = rng::stream(seed, Domain::Graph, 0);
    for u in 0..n {
        for j in 1..=k / 2 {
            if rng.random::<f64>() >= beta {
                continue;
            }
            if adj[u].len() >= n - 1 {
                continue;
            }
            let v = (u + j) % n;
            let w = loop {
                let w = rng.random_range(0..n);
                if w != u && !adj[u].contains(&w) {
                    break w;
                }
            };
            adj[u].remove(&v);
            adj[v].remove(&u);
            adj[u].insert(w);
            adj[w].insert(u);
        }
    }
    let edges: Vec<(usize, usize)> = adj
        .iter()
        .enumerate()
        .flat_map(|(u, nbrs)| nbrs.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
        .collect();
    Ok(Graph::from_sorted_unique(n, edges))
}

/// Breadth-first tree rooted at a node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BfsTree {
    pub root: usize,
    /// Hop distance from the root, `None` when unreachable.
    pub dist: Vec<Option<usize>>,
    /// BFS parent; `None` for the root and unreachable nodes.
    pub parent: Vec<Option<usize>>,
    /// `levels[i]` holds the nodes at distance `i`, ascending.
    pub levels: Vec<Vec<usize>>,
}

impl BfsTree {
    /// Largest finite distance from the root.
    pub fn eccentricity(&self) -> usize {
        self.levels.len().saturating_sub(1)
    }

    pub fn reachable(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }
}

/// Level-synchronous BFS. Each level is processed in ascending id order, so
/// a node's parent is its smallest-id neighbor in the previous level.
pub fn bfs(graph: &Graph, root: usize) -> Result<BfsTree> {
    let n = graph.num_nodes();
    if root >= n {
        return Err(Error::param(format!("root {root} outside 0..{n}")));
    }
    let mut dist = vec![None; n];
    let mut parent = vec![None; n];
    dist[root] = Some(0);
    let mut levels = vec![vec![root]];
    loop {
        let depth = levels.len();
        let mut next = Vec::new();
        for &u in levels.last().unwrap() {
            for &v in graph.neighbors(u) {
                if dist[v].is_none() {
                    dist[v] = Some(depth);
                    parent[v] = Some(u);
                    next.push(v);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        next.sort_unstable();
        levels.push(next);
    }
    Ok(BfsTree {
        root,
        dist,
        parent,
        levels,
    })
}

/// Connected-component label per node; components numbered by their
/// smallest member.
pub fn components(graph: &Graph) -> Vec<usize> {
    let n = graph.num_nodes();
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    let mut queue = VecDeque::new();
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        label[s] = next;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            for &v in graph.neighbors(u) {
                if label[v] == usize::MAX {
                    label[v] = next;
                    queue.push_back(v);
                }
            }
        }
        next += 1;
    }
    label
}

pub fn is_connected(graph: &Graph) -> bool {
    graph.num_nodes() > 0 && components(graph).iter().all(|&c| c == 0)
}

/// Induced subgraph on the largest connected component (ties go to the
/// component holding the smallest node id). Surviving nodes keep their
/// relative order; `map[old]` gives the new id.
pub fn giant_component(graph: &Graph) -> Result<(Graph, Vec<Option<usize>>)> {
    let n = graph.num_nodes();
    if n == 0 {
        return Err(Error::param("giant component of an empty graph"));
    }
    let label = components(graph);
    let count = label.iter().max().unwrap() + 1;
    let mut sizes = vec![0usize; count];
    for &c in &label {
        sizes[c] += 1;
    }
    let mut best = 0;
    for (c, &s) in sizes.iter().enumerate() {
        if s > sizes[best] {
            best = c;
        }
    }
    let mut map = vec![None; n];
    let mut next = 0;
    for u in 0..n {
        if label[u] == best {
            map[u] = Some(next);
            next += 1;
        }
    }
    let edges: Vec<(usize, usize)> = graph
        .edges()
        .iter()
        .filter_map(|&(u, v)| Some((map[u]?, map[v]?)))
        .collect();
    Ok((Graph::from_sorted_unique(next, edges), map))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DegreeStats {
    pub min: usize,
    pub max: usize,
    pub mean: f64,
    pub edges: usize,
}

pub fn degree_stats(graph: &Graph) -> DegreeStats {
    let n = graph.num_nodes();
    let degrees = (0..n).map(|u| graph.degree(u));
    DegreeStats {
        min: degrees.clone().min().unwrap_or(0),
        max: degrees.max().unwrap_or(0),
        mean: if n == 0 {
            0.0
        } else {
            2.0 * graph.num_edges() as f64 / n as f64
        },
        edges: graph.num_edges(),
    }
}
