//! Balanced occupancy linear programs and the occupancy constraint checker.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::flow::MinCostFlow;
use crate::lp::{LinearProgram, LpError, Relation};
use crate::sim::RunTrace;
use crate::topology::{NodeRank, Rate, Topology};

pub type Q = BigRational;

pub(crate) fn q(n: i64, d: i64) -> Q {
    Q::new(n.into(), d.into())
}

pub(crate) fn rate_q(r: Rate) -> Q {
    Q::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

/// Exact occupancy per directed edge. Absent edges have occupancy zero.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OccupancyMap {
    entries: BTreeMap<(usize, usize), Q>,
}

impl OccupancyMap {
    pub fn new() -> OccupancyMap {
        OccupancyMap::default()
    }

    pub fn get(&self, u: usize, v: usize) -> Q {
        self.entries.get(&(u, v)).cloned().unwrap_or_else(Q::zero)
    }

    /// Sets `O(u, v)`; zero removes the entry.
    pub fn set(&mut self, u: usize, v: usize, value: Q) {
        if value.is_zero() {
            self.entries.remove(&(u, v));
        } else {
            self.entries.insert((u, v), value);
        }
    }

    /// Nonzero entries sorted by `(sender, receiver)`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &Q)> {
        self.entries.iter().map(|(&(u, v), o)| (u, v, o))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> Q {
        self.entries.values().sum()
    }

    /// Time fraction node `i` spends receiving.
    pub fn inflow(&self, t: &Topology, i: usize) -> Q {
        t.neighbors(i).iter().map(|&k| self.get(k, i)).sum()
    }

    /// Time fraction node `i` spends sending.
    pub fn outflow(&self, t: &Topology, i: usize) -> Q {
        t.neighbors(i).iter().map(|&j| self.get(i, j)).sum()
    }

    /// Incoming efficiency `sum_k O(k, i) E(k, i)`.
    pub fn in_efficiency(&self, t: &Topology, i: usize) -> Q {
        t.neighbors(i).iter().map(|&k| self.get(k, i) * rate_q(t.rate(k, i).unwrap())).sum()
    }

    /// Occupancy CSV: `# C=num/den` then `i,j,num,den` per nonzero entry.
    pub fn to_csv(&self, c: &Q) -> String {
        let mut out = format!("# C={}/{}\n", c.numer(), c.denom());
        for (u, v, o) in self.iter() {
            out += &format!("{u},{v},{},{}\n", o.numer(), o.denom());
        }
        out
    }

    /// Parses the occupancy CSV, returning the map and the header constant if present.
    pub fn from_csv(text: &str) -> Result<(OccupancyMap, Option<Q>), OccupancyParseError> {
        let mut map = OccupancyMap::new();
        let mut c = None;
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let err = |m: &str| OccupancyParseError { line: ln + 1, message: m.to_string() };
            if line.is_empty() {
                continue;
            }
            if let Some(h) = line.strip_prefix('#') {
                if let Some(v) = h.trim().strip_prefix("C=") {
                    c = Some(parse_q(v).ok_or_else(|| err("bad C value"))?);
                }
                continue;
            }
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 4 {
                return Err(err("expected i,j,num,den"));
            }
            let int = |s: &str| s.parse::<i64>().map_err(|_| err("expected an integer"));
            let (i, j, n, d) = (int(f[0])?, int(f[1])?, int(f[2])?, int(f[3])?);
            if i < 0 || j < 0 || d <= 0 || n < 0 || n > d {
                return Err(err("occupancy must be a fraction in [0, 1]"));
            }
            map.set(i as usize, j as usize, q(n, d));
        }
        Ok((map, c))
    }
}

fn parse_q(s: &str) -> Option<Q> {
    let (n, d) = s.split_once('/').unwrap_or((s, "1"));
    let d: BigInt = d.trim().parse().ok()?;
    if d.is_zero() {
        return None;
    }
    Some(Q::new(n.trim().parse().ok()?, d))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("occupancy file line {line}: {message}")]
pub struct OccupancyParseError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BalancedSolution {
    pub occupancies: OccupancyMap,
    /// Common incoming efficiency of every non-root node.
    pub c: Q,
    pub per_node_in: Vec<Q>,
}

/// A single failed occupancy constraint, with its slack.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// Entry on a pair that is not an edge of the topology.
    UnknownEdge { edge: (usize, usize) },
    /// Entry outside `[0, 1]`.
    Bounds { edge: (usize, usize), value: Q },
    /// Total occupancy above `floor(P/2)`.
    TotalActive { total: Q, bound: Q },
    /// A node sends and receives more than all of its time.
    NodeLoad { node: usize, load: Q },
    /// A non-root node forwards more on one edge than it receives.
    Forwarding { node: usize, edge: (usize, usize), out: Q, inflow: Q },
}

impl Violation {
    /// Amount by which the constraint is exceeded.
    pub fn excess(&self) -> Q {
        match self {
            Violation::UnknownEdge { .. } => Q::one(),
            Violation::Bounds { value, .. } => {
                if value.is_negative() {
                    -value.clone()
                } else {
                    value - Q::one()
                }
            }
            Violation::TotalActive { total, bound } => total - bound,
            Violation::NodeLoad { load, .. } => load - Q::one(),
            Violation::Forwarding { out, inflow, .. } => out - inflow,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnknownEdge { edge } => write!(f, "{}->{} is not an edge", edge.0, edge.1),
            Violation::Bounds { edge, value } => {
                write!(f, "O({},{})={value} outside [0,1]", edge.0, edge.1)
            }
            Violation::TotalActive { total, bound } => {
                write!(f, "total occupancy {total} exceeds {bound}")
            }
            Violation::NodeLoad { node, load } => write!(f, "node {node} busy {load} > 1"),
            Violation::Forwarding { node, edge, out, inflow } => write!(
                f,
                "node {node} forwards O({},{})={out} > inflow {inflow}",
                edge.0, edge.1
            ),
        }
    }
}

/// All violations found by [`verify_constraints`]; empty means every constraint holds.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConstraintReport {
    pub violations: Vec<Violation>,
}

impl ConstraintReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    /// Largest excess over all violations, zero if clean.
    pub fn max_excess(&self) -> Q {
        self.violations.iter().map(Violation::excess).max().unwrap_or_else(Q::zero)
    }
}

/// Checks box bounds, the total-activity bound, per-node load and forwarding.
///
/// Forwarding is checked for non-root senders only.
pub fn verify_constraints(t: &Topology, o: &OccupancyMap) -> ConstraintReport {
    let mut v = Vec::new();
    for (i, j, x) in o.iter() {
        if !t.has_edge(i, j) {
            v.push(Violation::UnknownEdge { edge: (i, j) });
        }
        if x.is_negative() || *x > Q::one() {
            v.push(Violation::Bounds { edge: (i, j), value: x.clone() });
        }
    }
    let total = o.total();
    let bound = q((t.node_count() / 2) as i64, 1);
    if total > bound {
        v.push(Violation::TotalActive { total, bound });
    }
    for i in 0..t.node_count() {
        let inflow = o.inflow(t, i);
        let load = &inflow + o.outflow(t, i);
        if load > Q::one() {
            v.push(Violation::NodeLoad { node: i, load });
        }
        if i == t.root() {
            continue;
        }
        for &j in t.neighbors(i) {
            let out = o.get(i, j);
            if out > inflow {
                v.push(Violation::Forwarding { node: i, edge: (i, j), out, inflow: inflow.clone() });
            }
        }
    }
    ConstraintReport { violations: v }
}

/// Maximizes the common incoming efficiency `C` of all non-root nodes.
///
/// Every directed edge is a variable. Among optimal solutions the one with
/// the smallest total occupancy is returned; remaining ties are settled by
/// the deterministic pivoting order.
///
/// ```
/// use bbs::topology::Topology;
/// let path = Topology::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
/// let s = bbs::balance::solve_balanced(&path).unwrap();
/// assert_eq!(s.c.to_string(), "1/2");
/// ```
pub fn solve_balanced(t: &Topology) -> Result<BalancedSolution, LpError> {
    let edges: Vec<(usize, usize)> = t.directed_edges().collect();
    solve_on(t, &edges, false)
}

/// Balanced LP restricted to edges that point forward in `rank`.
///
/// The root is balanced too: it keeps a share `C` of its time idle, the slot
/// in which every other node receives. With a total order this caps `C` at
/// 1/2, reached whenever the order walks a Hamiltonian path.
pub fn solve_balanced_acyclic(t: &Topology, rank: &NodeRank) -> Result<BalancedSolution, LpError> {
    let edges: Vec<(usize, usize)> =
        t.directed_edges().filter(|&(u, v)| rank.precedes(u, v)).collect();
    solve_on(t, &edges, true)
}

fn solve_on(
    t: &Topology,
    edges: &[(usize, usize)],
    root_balanced: bool,
) -> Result<BalancedSolution, LpError> {
    let p = t.node_count();
    let m = edges.len();
    let c_col = m;
    let mut lp = LinearProgram::new(m + 1);
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); p];
    let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); p];
    for (k, &(u, v)) in edges.iter().enumerate() {
        incident[u].push(k);
        incident[v].push(k);
        incoming[v].push(k);
    }
    for i in 0..p {
        let mut row: Vec<(usize, Q)> = incident[i].iter().map(|&k| (k, Q::one())).collect();
        if root_balanced && i == t.root() {
            row.push((c_col, Q::one()));
        }
        lp.add_row(row, Relation::Le, Q::one());
        if i != t.root() {
            let mut row: Vec<(usize, Q)> = incoming[i]
                .iter()
                .map(|&k| (k, rate_q(t.rate(edges[k].0, i).unwrap())))
                .collect();
            row.push((c_col, -Q::one()));
            lp.add_row(row, Relation::Eq, Q::zero());
        }
    }
    // summing node loads only gives P / 2; with P odd the floor binds
    lp.add_row((0..m).map(|k| (k, Q::one())).collect(), Relation::Le, q((p / 2) as i64, 1));
    let primary = vec![(c_col, Q::one())];
    let secondary: Vec<(usize, Q)> = (0..m).map(|k| (k, -Q::one())).collect();
    // forwarding rows are added lazily; most are slack at the optimum
    let mut added = vec![false; m];
    loop {
        let sol = lp.maximize_then(&primary, Some(&secondary))?;
        let inflow: Vec<Q> = (0..p)
            .map(|i| incoming[i].iter().map(|&k| sol.x[k].clone()).sum())
            .collect();
        let mut fresh = false;
        for (k, &(u, _)) in edges.iter().enumerate() {
            if u != t.root() && !added[k] && sol.x[k] > inflow[u] {
                let mut row = vec![(k, Q::one())];
                row.extend(incoming[u].iter().map(|&j| (j, -Q::one())));
                lp.add_row(row, Relation::Le, Q::zero());
                added[k] = true;
                fresh = true;
            }
        }
        if fresh {
            continue;
        }
        let mut occ = OccupancyMap::new();
        for (k, &(u, v)) in edges.iter().enumerate() {
            occ.set(u, v, sol.x[k].clone());
        }
        let per_node_in = (0..p).map(|i| occ.in_efficiency(t, i)).collect();
        return Ok(BalancedSolution { occupancies: occ, c: sol.x[c_col].clone(), per_node_in });
    }
}

/// Occupancies for packets dealt round-robin into `m = ranks.len()` classes,
/// class `k` flowing only forward in `ranks[k]`.
///
/// Every non-root node receives each class at rate `1 / 2m`, so `C = 1/2`
/// overall. Non-root nodes send at most 1/2 in total and the root at most 1;
/// no directed edge carries more than `1 / 2m` of a single class. Within
/// those bounds this is a transportation problem, solved as an integral
/// minimum-cost flow in units of `1 / 2m`. An edge costs more the less it
/// advances along the shortest forward paths of its class, which keeps the
/// class trees shallow. Returns `None` when the ranks admit no such flow.
/// Rates are taken as one.
///
/// ```
/// use bbs::topology::{bfs_distances, build_grid, rank_toward, NodeRank};
/// let t = build_grid(&[3, 3]).unwrap();
/// let ranks = [NodeRank::from_distances(&bfs_distances(&t)), rank_toward(&t, 2)];
/// let classes = bbs::balance::solve_split(&t, &ranks).unwrap();
/// assert_eq!(classes[0].inflow(&t, 8).to_string(), "1/4");
/// ```
pub fn solve_split(t: &Topology, ranks: &[NodeRank]) -> Option<Vec<OccupancyMap>> {
    let p = t.node_count();
    let m = ranks.len();
    assert!(m > 0, "at least one class");
    let root = t.root();
    let depth: Vec<Vec<i64>> = ranks.iter().map(|r| forward_depth(t, r)).collect();
    let demand = |v: usize, k: usize| p + v * m + k;
    let (src, sink) = (p + p * m, p + p * m + 1);
    let mut g = MinCostFlow::new(sink + 1);
    for u in 0..p {
        let supply = if u == root { 2 * m } else { m };
        g.add_arc(src, u, supply as i64, 0);
    }
    let mut arcs = Vec::new();
    for (k, rank) in ranks.iter().enumerate() {
        for (u, v) in t.directed_edges() {
            if v == root || !rank.precedes(u, v) || depth[k][u] == i64::MAX {
                continue;
            }
            let cost = 2 + depth[k][u] - depth[k][v];
            arcs.push((g.add_arc(u, demand(v, k), 1, cost), k, u, v));
        }
    }
    for v in (0..p).filter(|&v| v != root) {
        for k in 0..m {
            g.add_arc(demand(v, k), sink, 1, 0);
        }
    }
    let (flow, _) = g.run(src, sink);
    if flow < (m * (p - 1)) as i64 {
        return None;
    }
    let unit = q(1, 2 * m as i64);
    let mut classes = vec![OccupancyMap::new(); m];
    for &(a, k, u, v) in &arcs {
        if g.flow_on(a) > 0 {
            classes[k].set(u, v, unit.clone());
        }
    }
    Some(classes)
}

// hop count of the shortest forward path from the root in `rank`
fn forward_depth(t: &Topology, rank: &NodeRank) -> Vec<i64> {
    let mut order: Vec<usize> = (0..t.node_count()).collect();
    order.sort_by_key(|&v| (rank[v], v));
    let mut h = vec![i64::MAX; t.node_count()];
    h[t.root()] = 0;
    for &u in &order {
        if h[u] == i64::MAX {
            continue;
        }
        for &v in t.neighbors(u) {
            if rank.precedes(u, v) {
                h[v] = h[v].min(h[u] + 1);
            }
        }
    }
    h
}

/// Stable-phase time `N / C` with the bracket `[N / sup E, N P / inf E]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StableEstimate {
    pub time: Q,
    pub lower: Q,
    pub upper: Q,
}

pub fn estimate_stable_time(t: &Topology, s: &BalancedSolution, n: u64) -> StableEstimate {
    assert!(s.c.is_positive(), "balance constant must be positive");
    let n = Q::from_integer(BigInt::from(n));
    let rates: Vec<Q> = t.directed_edges().map(|(u, v)| rate_q(t.rate(u, v).unwrap())).collect();
    let sup = rates.iter().max().cloned().unwrap_or_else(Q::one);
    let inf = rates.iter().min().cloned().unwrap_or_else(Q::one);
    let time = &n / &s.c;
    let lower = &n / sup;
    let upper = &n * Q::from_integer(BigInt::from(t.node_count())) / inf;
    assert!(lower <= time && time <= upper, "stable time {time} outside [{lower}, {upper}]");
    StableEstimate { time, lower, upper }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("trace has no steps")]
pub struct EmptyTrace;

/// Occupancy of a finished run: busy time of each directed edge over total time.
///
/// A transfer on edge `(i, j)` occupies `1 / E(i, j)` time units.
pub fn trace_to_occupancy(trace: &RunTrace, t: &Topology) -> Result<OccupancyMap, EmptyTrace> {
    let steps = trace.steps();
    if steps == 0 {
        return Err(EmptyTrace);
    }
    let mut counts: BTreeMap<(usize, usize), i64> = BTreeMap::new();
    for step in trace.transfers() {
        for tr in step {
            *counts.entry((tr.sender, tr.receiver)).or_default() += 1;
        }
    }
    let total = q(steps as i64, 1);
    let mut occ = OccupancyMap::new();
    for ((u, v), n) in counts {
        let rate = t.rate(u, v).map(rate_q).unwrap_or_else(Q::one);
        occ.set(u, v, q(n, 1) / rate / &total);
    }
    Ok(occ)
}
