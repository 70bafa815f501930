//! Network topologies: grids, edge lists, distances and node orders.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;
use std::ops::Deref;

use num_rational::Ratio;
use num_traits::{One, Zero};

/// Transfer rate of a directed edge, in packets per step.
pub type Rate = Ratio<i64>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TopologyError {
    #[error("invalid grid dimensions {0:?}")]
    InvalidDimension(Vec<usize>),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("graph is disconnected: node {0} is unreachable from node 0")]
    Disconnected(usize),
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(usize, usize),
    #[error("self-loop at node {0}")]
    SelfLoop(usize),
    #[error("node {node} out of range for {count} nodes")]
    NodeOutOfRange { node: usize, count: usize },
    #[error("rate on edge {0}-{1} must be positive")]
    InvalidRate(usize, usize),
}

/// An undirected, connected, simple graph with per-direction rates and a root.
///
/// Node ids are dense `0..P`. Adjacency lists are sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    adj: Vec<Vec<usize>>,
    // rates[i][k] is the rate of i -> adj[i][k]
    rates: Vec<Vec<Rate>>,
    root: usize,
}

impl Topology {
    /// Builds a topology from an undirected edge list with unit rates.
    pub fn from_edges(p: usize, edges: &[(usize, usize)]) -> Result<Topology, TopologyError> {
        let rated: Vec<_> = edges.iter().map(|&(u, v)| (u, v, Rate::one())).collect();
        Topology::from_rated_edges(p, &rated)
    }

    /// Builds a topology where each edge carries the same rate in both directions.
    pub fn from_rated_edges(
        p: usize,
        edges: &[(usize, usize, Rate)],
    ) -> Result<Topology, TopologyError> {
        if p == 0 {
            return Err(TopologyError::InvalidDimension(vec![0]));
        }
        let mut pairs: Vec<(usize, usize, Rate)> = Vec::with_capacity(edges.len() * 2);
        for &(u, v, r) in edges {
            for n in [u, v] {
                if n >= p {
                    return Err(TopologyError::NodeOutOfRange { node: n, count: p });
                }
            }
            if u == v {
                return Err(TopologyError::SelfLoop(u));
            }
            if r <= Rate::zero() {
                return Err(TopologyError::InvalidRate(u, v));
            }
            pairs.push((u, v, r));
            pairs.push((v, u, r));
        }
        pairs.sort_by_key(|&(u, v, _)| (u, v));
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 && w[0].1 == w[1].1 {
                let (a, b) = (w[0].0.min(w[0].1), w[0].0.max(w[0].1));
                return Err(TopologyError::DuplicateEdge(a, b));
            }
        }
        let mut adj = vec![Vec::new(); p];
        let mut rates = vec![Vec::new(); p];
        for (u, v, r) in pairs {
            adj[u].push(v);
            rates[u].push(r);
        }
        let t = Topology { adj, rates, root: 0 };
        let dist = bfs_from(&t, 0);
        if let Some(n) = dist.iter().position(|&d| d == u32::MAX) {
            return Err(TopologyError::Disconnected(n));
        }
        Ok(t)
    }

    /// Returns the same graph rooted at `root`.
    pub fn with_root(mut self, root: usize) -> Result<Topology, TopologyError> {
        if root >= self.node_count() {
            return Err(TopologyError::NodeOutOfRange { node: root, count: self.node_count() });
        }
        self.root = root;
        Ok(self)
    }

    /// Returns the same graph with every rate multiplied by `factor`.
    pub fn scale_rates(&self, factor: Rate) -> Topology {
        assert!(factor > Rate::zero(), "rate factor must be positive");
        let mut t = self.clone();
        for row in &mut t.rates {
            for r in row {
                *r *= factor;
            }
        }
        t
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adj[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.adj.len() && self.adj[u].binary_search(&v).is_ok()
    }

    /// Rate of the directed edge `u -> v`, or `None` if absent.
    pub fn rate(&self, u: usize, v: usize) -> Option<Rate> {
        let k = self.adj.get(u)?.binary_search(&v).ok()?;
        Some(self.rates[u][k])
    }

    pub fn has_unit_rates(&self) -> bool {
        self.rates.iter().flatten().all(|r| r.is_one())
    }

    /// Undirected edges `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.directed_edges().filter(|&(u, v)| u < v)
    }

    /// Directed edges sorted by `(sender, receiver)`.
    pub fn directed_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, ns)| ns.iter().map(move |&v| (u, v)))
    }

    /// FNV-1a hash of node count and edge list. Root and rates are not included.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        let mut eat = |x: u64| {
            for b in x.to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x100000001b3);
            }
        };
        eat(self.node_count() as u64);
        for (u, v) in self.edges() {
            eat(u as u64);
            eat(v as u64);
        }
        h
    }

    /// Serializes to the edge-list format read by [`from_edge_list`].
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("p {}\n", self.node_count());
        for (u, v) in self.edges() {
            let r = self.rate(u, v).unwrap();
            if r.is_one() {
                writeln!(out, "{u} {v}").unwrap();
            } else {
                writeln!(out, "{u} {v} {}/{}", r.numer(), r.denom()).unwrap();
            }
        }
        out
    }
}

/// Axis-aligned grid with row-major node ids and root 0.
///
/// ```
/// let t = bbs::topology::build_grid(&[4, 4]).unwrap();
/// assert_eq!((t.node_count(), t.edge_count(), t.root()), (16, 24, 0));
/// ```
pub fn build_grid(dims: &[usize]) -> Result<Topology, TopologyError> {
    if dims.is_empty() || dims.len() > 3 || dims.contains(&0) {
        return Err(TopologyError::InvalidDimension(dims.to_vec()));
    }
    let p: usize = dims.iter().product();
    if p < 2 {
        return Err(TopologyError::InvalidDimension(dims.to_vec()));
    }
    // stride of axis a: product of later dims
    let mut stride = vec![1; dims.len()];
    for a in (0..dims.len() - 1).rev() {
        stride[a] = stride[a + 1] * dims[a + 1];
    }
    let mut edges = Vec::new();
    for id in 0..p {
        for a in 0..dims.len() {
            let coord = (id / stride[a]) % dims[a];
            if coord + 1 < dims[a] {
                edges.push((id, id + stride[a]));
            }
        }
    }
    Topology::from_edges(p, &edges)
}

/// Parses `AxB[xC]` into grid dimensions.
pub fn parse_grid_spec(spec: &str) -> Result<Vec<usize>, TopologyError> {
    let dims: Result<Vec<usize>, _> = spec.split(['x', 'X']).map(|s| s.trim().parse()).collect();
    match dims {
        Ok(d) if !d.is_empty() && d.len() <= 3 && d.iter().all(|&x| x > 0) => Ok(d),
        Ok(d) => Err(TopologyError::InvalidDimension(d)),
        Err(_) => Err(TopologyError::Parse {
            line: 1,
            column: 1,
            message: format!("bad grid spec {spec:?}, expected AxB[xC]"),
        }),
    }
}

/// Parses the edge-list format: `p <P>`, then `u v [num/den]` per line, `#` comments.
pub fn from_edge_list(text: &str) -> Result<Topology, TopologyError> {
    let mut p: Option<usize> = None;
    let mut edges = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let body = raw.split('#').next().unwrap();
        let mut toks = Vec::new();
        let mut rest = body;
        let mut offset = 0;
        while let Some(start) = rest.find(|c: char| !c.is_whitespace()) {
            let tail = &rest[start..];
            let len = tail.find(char::is_whitespace).unwrap_or(tail.len());
            toks.push((offset + start + 1, &tail[..len]));
            offset += start + len;
            rest = &tail[len..];
        }
        if toks.is_empty() {
            continue;
        }
        let err = |column: usize, message: String| TopologyError::Parse { line, column, message };
        let num = |(col, s): (usize, &str)| -> Result<usize, TopologyError> {
            s.parse().map_err(|_| err(col, format!("expected a non-negative integer, got {s:?}")))
        };
        match p {
            None => {
                if toks[0].1 != "p" || toks.len() != 2 {
                    return Err(err(toks[0].0, "expected header `p <P>`".into()));
                }
                let n = num(toks[1])?;
                if n == 0 {
                    return Err(err(toks[1].0, "node count must be positive".into()));
                }
                p = Some(n);
            }
            Some(_) => {
                if toks.len() < 2 || toks.len() > 3 {
                    return Err(err(toks[0].0, "expected `u v [num/den]`".into()));
                }
                let u = num(toks[0])?;
                let v = num(toks[1])?;
                let rate = match toks.get(2) {
                    None => Rate::one(),
                    Some(&(col, s)) => parse_rate(s).ok_or_else(|| {
                        err(col, format!("expected a positive rate num/den, got {s:?}"))
                    })?,
                };
                edges.push((u, v, rate));
            }
        }
    }
    let p = p.ok_or(TopologyError::Parse {
        line: 1,
        column: 1,
        message: "missing header `p <P>`".into(),
    })?;
    Topology::from_rated_edges(p, &edges)
}

fn parse_rate(s: &str) -> Option<Rate> {
    let r = match s.split_once('/') {
        Some((n, d)) => {
            let d: i64 = d.parse().ok()?;
            if d == 0 {
                return None;
            }
            Rate::new(n.parse().ok()?, d)
        }
        None => Rate::from_integer(s.parse().ok()?),
    };
    (r > Rate::zero()).then_some(r)
}

/// Hop distances from the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMap(Vec<u32>);

impl Deref for DistanceMap {
    type Target = [u32];
    fn deref(&self) -> &[u32] {
        &self.0
    }
}

pub fn bfs_distances(t: &Topology) -> DistanceMap {
    DistanceMap(bfs_from(t, t.root()))
}

fn bfs_from(t: &Topology, src: usize) -> Vec<u32> {
    let mut dist = vec![u32::MAX; t.node_count()];
    let mut queue = VecDeque::from([src]);
    dist[src] = 0;
    while let Some(u) = queue.pop_front() {
        for &v in t.neighbors(u) {
            if dist[v] == u32::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Nodes in breadth-first order from the root, neighbors visited by ascending id.
pub fn bfs_order(t: &Topology) -> Vec<usize> {
    let mut seen = vec![false; t.node_count()];
    let mut order = vec![t.root()];
    seen[t.root()] = true;
    let mut head = 0;
    while head < order.len() {
        let u = order[head];
        head += 1;
        for &v in t.neighbors(u) {
            if !seen[v] {
                seen[v] = true;
                order.push(v);
            }
        }
    }
    order
}

/// Returns `Some(side)` with a proper 2-coloring if the graph has no odd cycle.
pub fn is_bipartite(t: &Topology) -> Option<Vec<u8>> {
    let dist = bfs_from(t, 0);
    for (u, v) in t.edges() {
        if dist[u] % 2 == dist[v] % 2 {
            return None;
        }
    }
    Some(dist.iter().map(|d| (d % 2) as u8).collect())
}

/// A rank per node; lower rank means nearer the source of the data flow.
///
/// Orientation and frame ordering only compare ranks, so hop distance
/// ([`NodeRank::from_distances`]) and a total order ([`depth_first_order`]) are
/// both valid ranks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeRank(Vec<u32>);

impl Deref for NodeRank {
    type Target = [u32];
    fn deref(&self) -> &[u32] {
        &self.0
    }
}

impl NodeRank {
    pub fn from_distances(d: &DistanceMap) -> NodeRank {
        NodeRank(d.0.clone())
    }

    /// Rank by position in `order`, which must be a permutation of the nodes.
    pub fn from_order(order: &[usize]) -> NodeRank {
        let mut rank = vec![u32::MAX; order.len()];
        for (k, &v) in order.iter().enumerate() {
            rank[v] = k as u32;
        }
        assert!(rank.iter().all(|&r| r != u32::MAX), "order is not a permutation");
        NodeRank(rank)
    }

    /// True if `u` sends to `v`: lower rank first, then lower id.
    pub fn precedes(&self, u: usize, v: usize) -> bool {
        (self.0[u], u) < (self.0[v], v)
    }
}

/// Depth-first order from the root that always steps to the unvisited
/// neighbor with the fewest unvisited neighbors (lowest id on ties), and
/// backtracks when stuck. On grids this walks a Hamiltonian path.
pub fn depth_first_order(t: &Topology) -> Vec<usize> {
    let p = t.node_count();
    let mut seen = vec![false; p];
    let mut order = vec![t.root()];
    let mut path = vec![t.root()];
    seen[t.root()] = true;
    while let Some(&u) = path.last() {
        let next = t
            .neighbors(u)
            .iter()
            .copied()
            .filter(|&v| !seen[v])
            .min_by_key(|&v| (free_count(t, &seen, v), v));
        match next {
            Some(v) => {
                seen[v] = true;
                order.push(v);
                path.push(v);
            }
            None => {
                path.pop();
            }
        }
    }
    order
}

fn free_count(t: &Topology, seen: &[bool], v: usize) -> usize {
    t.neighbors(v).iter().filter(|&&w| !seen[w]).count()
}

/// Total order that first walks a shortest path from the root to `target`
/// (each step back takes the lowest-id predecessor), then lists the other
/// nodes by hop distance from `target`, lowest id first.
///
/// ```
/// use bbs::topology::{build_grid, rank_toward};
/// let t = build_grid(&[3, 3]).unwrap();
/// let r = rank_toward(&t, 2);
/// assert_eq!((r[0], r[1], r[2], r[5]), (0, 1, 2, 3));
/// ```
pub fn rank_toward(t: &Topology, target: usize) -> NodeRank {
    let d = bfs_distances(t);
    let mut order = vec![target];
    let mut x = target;
    while x != t.root() {
        x = t.neighbors(x).iter().copied().filter(|&u| d[u] + 1 == d[x]).min().unwrap();
        order.push(x);
    }
    order.reverse();
    let on_path: BTreeSet<usize> = order.iter().copied().collect();
    let from_target = bfs_from(t, target);
    let mut rest: Vec<usize> = (0..t.node_count()).filter(|v| !on_path.contains(v)).collect();
    rest.sort_by_key(|&v| (from_target[v], v));
    order.extend(rest);
    NodeRank::from_order(&order)
}
