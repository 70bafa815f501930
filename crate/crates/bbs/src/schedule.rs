//! Compiling occupancies into a cyclic frame schedule.
//!
//! Occupancies are scaled by the LCM of their denominators into edge
//! multiplicities, the multigraph is edge colored, each color class becomes
//! a frame, frames are oriented away from the data source and ordered so
//! data can flow through the cycle.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

use crate::balance::{OccupancyMap, Q};
use crate::topology::{NodeRank, Topology};

/// Default cap on the common denominator `l`.
pub const DEFAULT_LCM_CAP: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScheduleError {
    #[error("common denominator {l} exceeds the cap {cap}; rationalize occupancies first (--max-den)")]
    LcmOverflow { l: BigInt, cap: u64 },
    #[error("occupancy on {0}->{1}, which is not an edge of the topology")]
    UnknownEdge(usize, usize),
    #[error("occupancy on {0}->{1} is outside [0, 1]")]
    BadOccupancy(usize, usize),
    #[error("multigraph is not bipartite")]
    NotBipartite,
    #[error("frame {frame} uses node {node} twice")]
    NotAMatching { frame: usize, node: usize },
    #[error("schedule is for {p} nodes rooted at {root}, topology has {tp} rooted at {troot}")]
    TopologyMismatch { p: usize, root: usize, tp: usize, troot: usize },
    #[error("schedule line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Largest rational not above each occupancy whose denominator divides `max_den`.
pub fn rationalize(o: &OccupancyMap, max_den: u64) -> OccupancyMap {
    assert!(max_den >= 1, "max_den must be positive");
    let den = BigInt::from(max_den);
    let mut out = OccupancyMap::new();
    for (u, v, x) in o.iter() {
        let scaled = (x * Q::from_integer(den.clone())).floor();
        out.set(u, v, scaled / Q::from_integer(den.clone()));
    }
    out
}

/// Undirected edge multiplicities after LCM scaling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Multigraph {
    node_count: usize,
    /// Keyed by `(u, v)` with `u < v`; zero multiplicities are omitted.
    k: BTreeMap<(usize, usize), u64>,
    l: u64,
    d_m: u64,
}

impl Multigraph {
    /// Builds a multigraph directly from multiplicities.
    pub fn from_multiplicities(
        node_count: usize,
        l: u64,
        edges: &[((usize, usize), u64)],
    ) -> Multigraph {
        let mut k = BTreeMap::new();
        for &((u, v), m) in edges {
            assert!(u != v && u < node_count && v < node_count, "bad edge {u}-{v}");
            if m > 0 {
                *k.entry((u.min(v), u.max(v))).or_insert(0) += m;
            }
        }
        let mut deg = vec![0u64; node_count];
        for (&(u, v), &m) in &k {
            deg[u] += m;
            deg[v] += m;
        }
        let d_m = deg.into_iter().max().unwrap_or(0);
        Multigraph { node_count, k, l, d_m }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn l(&self) -> u64 {
        self.l
    }

    pub fn d_m(&self) -> u64 {
        self.d_m
    }

    pub fn multiplicity(&self, u: usize, v: usize) -> u64 {
        self.k.get(&(u.min(v), u.max(v))).copied().unwrap_or(0)
    }

    /// `((u, v), k)` with `u < v`, sorted.
    pub fn edges(&self) -> impl Iterator<Item = ((usize, usize), u64)> + '_ {
        self.k.iter().map(|(&e, &m)| (e, m))
    }

    /// Multiplicity-weighted degree of each node.
    pub fn degrees(&self) -> Vec<u64> {
        let mut deg = vec![0; self.node_count];
        for (&(u, v), &m) in &self.k {
            deg[u] += m;
            deg[v] += m;
        }
        deg
    }
}

/// Two-coloring of an arbitrary (possibly disconnected) simple graph.
fn two_color(n: usize, edges: &[(usize, usize)]) -> Option<Vec<u8>> {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut side = vec![u8::MAX; n];
    for s in 0..n {
        if side[s] != u8::MAX {
            continue;
        }
        side[s] = 0;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if side[v] == u8::MAX {
                    side[v] = 1 - side[u];
                    stack.push(v);
                } else if side[v] == side[u] {
                    return None;
                }
            }
        }
    }
    Some(side)
}

/// Scales occupancies by the LCM `l` of their denominators.
///
/// `k(i, j) = l (O(i, j) + O(j, i))`. Fails if `l` exceeds `cap`.
pub fn build_multigraph(t: &Topology, o: &OccupancyMap, cap: u64) -> Result<Multigraph, ScheduleError> {
    let l = common_denominator(t, [o], cap)?;
    let lq = Q::from_integer(l.into());
    let mut ks = Vec::new();
    for (u, v, x) in o.iter() {
        let k = (x * &lq).to_integer().to_u64().unwrap();
        ks.push(((u, v), k));
    }
    Ok(Multigraph::from_multiplicities(t.node_count(), l, &ks))
}

// LCM of all denominators, after checking every entry
fn common_denominator<'a>(
    t: &Topology,
    maps: impl IntoIterator<Item = &'a OccupancyMap>,
    cap: u64,
) -> Result<u64, ScheduleError> {
    let mut l = BigInt::from(1);
    for o in maps {
        for (u, v, x) in o.iter() {
            if !t.has_edge(u, v) {
                return Err(ScheduleError::UnknownEdge(u, v));
            }
            if *x < Q::zero() || *x > Q::from_integer(1.into()) {
                return Err(ScheduleError::BadOccupancy(u, v));
            }
            l = l.lcm(x.denom());
        }
    }
    if l > BigInt::from(cap) {
        return Err(ScheduleError::LcmOverflow { l, cap });
    }
    Ok(l.to_u64().unwrap())
}

/// A set of node-disjoint edges executed in one step.
pub type Frame = Vec<(usize, usize)>;

/// Proper edge coloring with exactly `d_m` colors for a bipartite multigraph.
///
/// Parallel copies are colored one at a time. When the two endpoints share
/// no free color, the alternating path of the two candidate colors starting
/// at the second endpoint is swapped; in a bipartite graph it never returns
/// to the first endpoint.
pub fn edge_color_bipartite(m: &Multigraph) -> Result<Vec<Frame>, ScheduleError> {
    let support: Vec<_> = m.k.keys().copied().collect();
    if two_color(m.node_count, &support).is_none() {
        return Err(ScheduleError::NotBipartite);
    }
    let n = m.node_count;
    let colors = m.d_m as usize;
    // at[node][c] = other endpoint of the edge colored c at node
    let mut at: Vec<Vec<Option<usize>>> = vec![vec![None; colors]; n];
    // number of copies of (u, v) per color is at most one, so a color identifies a copy
    for (&(u, v), &k) in &m.k {
        for _ in 0..k {
            let a = (0..colors).find(|&c| at[u][c].is_none()).expect("degree exceeds d_m");
            if at[v][a].is_none() {
                at[u][a] = Some(v);
                at[v][a] = Some(u);
                continue;
            }
            let b = (0..colors).find(|&c| at[v][c].is_none()).expect("degree exceeds d_m");
            // walk the a/b path from v and swap its colors
            let mut path = vec![v];
            let mut cur = v;
            let mut c = a;
            while let Some(next) = at[cur][c] {
                path.push(next);
                cur = next;
                c = if c == a { b } else { a };
            }
            debug_assert!(!path.contains(&u), "alternating path closed an odd cycle");
            let mut c = a;
            let mut swaps = Vec::new();
            for w in path.windows(2) {
                swaps.push((w[0], w[1], c));
                c = if c == a { b } else { a };
            }
            for &(x, y, c) in &swaps {
                at[x][c] = None;
                at[y][c] = None;
            }
            for &(x, y, c) in &swaps {
                let d = if c == a { b } else { a };
                at[x][d] = Some(y);
                at[y][d] = Some(x);
            }
            at[u][a] = Some(v);
            at[v][a] = Some(u);
        }
    }
    Ok(collect_frames(&at, colors))
}

fn collect_frames(at: &[Vec<Option<usize>>], colors: usize) -> Vec<Frame> {
    let mut frames = vec![Vec::new(); colors];
    for (u, row) in at.iter().enumerate() {
        for (c, &other) in row.iter().enumerate() {
            if let Some(v) = other {
                if u < v {
                    frames[c].push((u, v));
                }
            }
        }
    }
    frames.retain(|f| !f.is_empty());
    frames
}

/// Edge coloring for any multigraph, edges taken in sorted order.
///
/// Without parallel edges this is the fan-rotation method and uses at most
/// `d_m + 1` colors. With parallel edges each copy takes the lowest color
/// free at both endpoints.
pub fn edge_color_heuristic(m: &Multigraph) -> Vec<Frame> {
    if m.k.values().all(|&k| k == 1) {
        return misra_gries(m);
    }
    let n = m.node_count;
    let mut at: Vec<Vec<Option<usize>>> = vec![Vec::new(); n];
    for (&(u, v), &k) in &m.k {
        for _ in 0..k {
            let mut c = 0;
            while at[u].get(c).is_some_and(Option::is_some) || at[v].get(c).is_some_and(Option::is_some) {
                c += 1;
            }
            for x in [u, v] {
                if at[x].len() <= c {
                    at[x].resize(c + 1, None);
                }
            }
            at[u][c] = Some(v);
            at[v][c] = Some(u);
        }
    }
    let colors = at.iter().map(Vec::len).max().unwrap_or(0);
    for row in &mut at {
        row.resize(colors, None);
    }
    collect_frames(&at, colors)
}

fn misra_gries(m: &Multigraph) -> Vec<Frame> {
    let n = m.node_count;
    let colors = m.d_m as usize + 1;
    let mut at: Vec<Vec<Option<usize>>> = vec![vec![None; colors]; n];
    let color_of = |at: &Vec<Vec<Option<usize>>>, u: usize, v: usize| -> Option<usize> {
        at[u].iter().position(|&x| x == Some(v))
    };
    let free = |at: &Vec<Vec<Option<usize>>>, x: usize, c: usize| at[x][c].is_none();
    for &(u, v) in m.k.keys() {
        // maximal fan of u starting at v
        let mut fan = vec![v];
        loop {
            let last = *fan.last().unwrap();
            let next = (0..colors).find_map(|c| {
                let w = at[u][c]?;
                (!fan.contains(&w) && free(&at, last, c)).then_some(w)
            });
            match next {
                Some(w) => fan.push(w),
                None => break,
            }
        }
        let c = (0..colors).find(|&c| free(&at, u, c)).unwrap();
        let d = (0..colors).find(|&c| free(&at, *fan.last().unwrap(), c)).unwrap();
        if c != d {
            // invert the c/d path starting at u (u has c free, so it starts with d)
            let mut path = vec![u];
            let mut cur = u;
            let mut col = d;
            while let Some(next) = at[cur][col] {
                path.push(next);
                cur = next;
                col = if col == c { d } else { c };
            }
            let mut col = d;
            let mut swaps = Vec::new();
            for w in path.windows(2) {
                swaps.push((w[0], w[1], col));
                col = if col == c { d } else { c };
            }
            for &(x, y, col) in &swaps {
                at[x][col] = None;
                at[y][col] = None;
            }
            for &(x, y, col) in &swaps {
                let other = if col == c { d } else { c };
                at[x][other] = Some(y);
                at[y][other] = Some(x);
            }
        }
        // first fan vertex with d free such that the prefix is still a fan
        let mut end = 0;
        for i in 0..fan.len() {
            if i > 0 {
                let prev = fan[i - 1];
                match color_of(&at, u, fan[i]) {
                    Some(cc) if free(&at, prev, cc) => {}
                    _ => break,
                }
            }
            if free(&at, fan[i], d) {
                end = i;
                break;
            }
        }
        // rotate the fan prefix: (u, f_i) takes the color of (u, f_{i+1})
        for i in 0..end {
            let cc = color_of(&at, u, fan[i + 1]).unwrap();
            at[u][cc] = None;
            at[fan[i + 1]][cc] = None;
            at[u][cc] = Some(fan[i]);
            at[fan[i]][cc] = Some(u);
        }
        let w = fan[end];
        at[u][d] = Some(w);
        at[w][d] = Some(u);
    }
    collect_frames(&at, colors)
}

/// Colors with [`edge_color_bipartite`] when the multigraph allows it,
/// otherwise with [`edge_color_heuristic`].
pub fn edge_color(m: &Multigraph) -> Vec<Frame> {
    edge_color_bipartite(m).unwrap_or_else(|_| edge_color_heuristic(m))
}

/// Points every edge from the node of lower rank to the other; equal ranks
/// send from the lower id.
pub fn orient_frames(frames: &[Frame], rank: &NodeRank) -> Vec<Frame> {
    frames
        .iter()
        .map(|f| {
            let mut g: Frame =
                f.iter().map(|&(u, v)| if rank.precedes(u, v) { (u, v) } else { (v, u) }).collect();
            g.sort_unstable();
            g
        })
        .collect()
}

/// Directed frames in cycle order.
///
/// Every frame edge carries a packet class in `0..class_count()`; packet `p`
/// belongs to class `p mod class_count()`. Single-class schedules label
/// everything 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CyclicSchedule {
    frames: Vec<Frame>,
    labels: Vec<Vec<usize>>,
    class_count: usize,
    node_count: usize,
    root: usize,
    fingerprint: Option<u64>,
}

impl CyclicSchedule {
    /// Validates that every frame is a matching of in-range nodes.
    pub fn new(frames: Vec<Frame>, node_count: usize, root: usize) -> Result<CyclicSchedule, ScheduleError> {
        let labels = frames.iter().map(|f| vec![0; f.len()]).collect();
        CyclicSchedule::with_classes(frames, labels, 1, node_count, root)
    }

    /// Like [`CyclicSchedule::new`], with a class label per frame edge.
    pub fn with_classes(
        frames: Vec<Frame>,
        labels: Vec<Vec<usize>>,
        class_count: usize,
        node_count: usize,
        root: usize,
    ) -> Result<CyclicSchedule, ScheduleError> {
        let bad = |message: String| ScheduleError::Parse { line: 0, message };
        if class_count == 0 {
            return Err(bad("class count must be positive".into()));
        }
        if labels.len() != frames.len() {
            return Err(bad("one label list per frame".into()));
        }
        for (k, (f, ls)) in frames.iter().zip(&labels).enumerate() {
            if ls.len() != f.len() || ls.iter().any(|&c| c >= class_count) {
                return Err(bad(format!("bad class labels in frame {k}")));
            }
            let mut used = vec![false; node_count];
            for &(u, v) in f {
                for x in [u, v] {
                    if x >= node_count {
                        return Err(bad(format!("node {x} out of range")));
                    }
                    if used[x] {
                        return Err(ScheduleError::NotAMatching { frame: k, node: x });
                    }
                    used[x] = true;
                }
            }
        }
        Ok(CyclicSchedule { frames, labels, class_count, node_count, root, fingerprint: None })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    /// Class of each edge, parallel to [`CyclicSchedule::frames`].
    pub fn labels(&self) -> &[Vec<usize>] {
        &self.labels
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn fingerprint(&self) -> Option<u64> {
        self.fingerprint
    }

    /// Total number of directed edge records.
    pub fn edge_records(&self) -> usize {
        self.frames.iter().map(Vec::len).sum()
    }

    /// Checks node count, root and that every scheduled edge exists in `t`.
    pub fn check_topology(&self, t: &Topology) -> Result<(), ScheduleError> {
        let mismatch = ScheduleError::TopologyMismatch {
            p: self.node_count,
            root: self.root,
            tp: t.node_count(),
            troot: t.root(),
        };
        if t.node_count() != self.node_count || t.root() != self.root {
            return Err(mismatch);
        }
        if self.fingerprint.is_some_and(|fp| fp != t.fingerprint()) {
            return Err(mismatch);
        }
        for f in &self.frames {
            for &(u, v) in f {
                if !t.has_edge(u, v) {
                    return Err(ScheduleError::UnknownEdge(u, v));
                }
            }
        }
        Ok(())
    }

    /// Text form: header lines then `<frame> <sender> <receiver>`. With more
    /// than one class a `classes <m>` header follows and each edge line ends
    /// with its class.
    pub fn serialize(&self) -> String {
        let mut out = format!(
            "bbs-schedule v1\np {}\nroot {}\nframes {}\n",
            self.node_count,
            self.root,
            self.frames.len()
        );
        let multi = self.class_count > 1;
        if multi {
            writeln!(out, "classes {}", self.class_count).unwrap();
        }
        for (k, (f, ls)) in self.frames.iter().zip(&self.labels).enumerate() {
            for (&(u, v), c) in f.iter().zip(ls) {
                if multi {
                    writeln!(out, "{k} {u} {v} {c}").unwrap();
                } else {
                    writeln!(out, "{k} {u} {v}").unwrap();
                }
            }
        }
        out
    }

    pub fn deserialize(text: &str) -> Result<CyclicSchedule, ScheduleError> {
        let lines: Vec<(usize, &str)> =
            text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()).map(|(n, l)| (n + 1, l)).collect();
        let (ln, first) = lines.first().copied().unwrap_or((1, ""));
        if first.trim() != "bbs-schedule v1" {
            return Err(ScheduleError::Parse { line: ln, message: "expected `bbs-schedule v1`".into() });
        }
        let header = |at: usize, key: &str| -> Option<Result<usize, ScheduleError>> {
            let &(ln, l) = lines.get(at)?;
            let mut it = l.split_whitespace();
            if it.next() != Some(key) {
                return None;
            }
            let err = || ScheduleError::Parse { line: ln, message: format!("expected `{key} <n>`") };
            Some(match (it.next().and_then(|s| s.parse().ok()), it.next()) {
                (Some(v), None) => Ok(v),
                _ => Err(err()),
            })
        };
        let mut at = 1;
        let mut take = |key: &str| -> Result<usize, ScheduleError> {
            let line = lines.get(at).map_or(0, |l| l.0);
            let v = header(at, key).unwrap_or_else(|| {
                Err(ScheduleError::Parse { line, message: format!("missing `{key}` line") })
            })?;
            at += 1;
            Ok(v)
        };
        let p = take("p")?;
        let root = take("root")?;
        let count = take("frames")?;
        if root >= p {
            return Err(ScheduleError::Parse { line: lines[2].0, message: "root out of range".into() });
        }
        let classes = match header(at, "classes") {
            Some(v) => {
                at += 1;
                v?
            }
            None => 1,
        };
        let fields = if classes > 1 { 4 } else { 3 };
        let shape = if classes > 1 {
            "expected `<frame> <sender> <receiver> <class>`"
        } else {
            "expected `<frame> <sender> <receiver>`"
        };
        let mut frames = vec![Vec::new(); count];
        let mut labels = vec![Vec::new(); count];
        for &(ln, l) in &lines[at..] {
            let err = |m: &str| ScheduleError::Parse { line: ln, message: m.to_string() };
            let f: Vec<usize> =
                l.split_whitespace().map(|s| s.parse().map_err(|_| err(shape))).collect::<Result<_, _>>()?;
            if f.len() != fields {
                return Err(err(shape));
            }
            if f[0] >= count {
                return Err(err("frame index out of range"));
            }
            if f[1] == f[2] {
                return Err(err("sender equals receiver"));
            }
            let c = if classes > 1 { f[3] } else { 0 };
            if c >= classes {
                return Err(err("class out of range"));
            }
            frames[f[0]].push((f[1], f[2]));
            labels[f[0]].push(c);
        }
        CyclicSchedule::with_classes(frames, labels, classes, p, root)
    }

    pub(crate) fn with_fingerprint(mut self, fp: u64) -> CyclicSchedule {
        self.fingerprint = Some(fp);
        self
    }
}

// frame edge with its packet class
type Labelled = (usize, usize, usize);

/// Orders directed frames so data can flow within one cycle.
///
/// Each node has a virtual fill counter, infinite at the root. The next frame
/// is the unplaced one with the largest score, the sum over its edges
/// `u -> v` with `fill(u) > fill(v)` of `1 + rank(v)`; ties go to the lower
/// frame index. Placing a frame increments the counters of its receivers.
pub fn order_frames(frames: &[Frame], t: &Topology, rank: &NodeRank) -> CyclicSchedule {
    let labelled = frames.iter().map(|f| f.iter().map(|&(u, v)| (u, v, 0)).collect()).collect();
    order_labelled(labelled, t, std::slice::from_ref(rank))
}

// order_frames with one fill counter and rank per class
fn order_labelled(frames: Vec<Vec<Labelled>>, t: &Topology, ranks: &[NodeRank]) -> CyclicSchedule {
    let mut fill = vec![vec![0u64; t.node_count()]; ranks.len()];
    for f in &mut fill {
        f[t.root()] = u64::MAX;
    }
    let mut left: Vec<Option<Vec<Labelled>>> = frames.into_iter().map(Some).collect();
    let mut order = Vec::with_capacity(left.len());
    let mut labels = Vec::with_capacity(left.len());
    for _ in 0..left.len() {
        let mut best: Option<(u64, usize)> = None;
        for (k, f) in left.iter().enumerate() {
            let Some(f) = f else { continue };
            let score: u64 = f
                .iter()
                .filter(|&&(u, v, c)| fill[c][u] > fill[c][v])
                .map(|&(_, v, c)| 1 + u64::from(ranks[c][v]))
                .sum();
            if best.is_none_or(|(s, _)| score > s) {
                best = Some((score, k));
            }
        }
        let (_, k) = best.unwrap();
        let f = left[k].take().unwrap();
        for &(_, v, c) in &f {
            fill[c][v] = fill[c][v].saturating_add(1);
        }
        order.push(f.iter().map(|&(u, v, _)| (u, v)).collect());
        labels.push(f.iter().map(|&(_, _, c)| c).collect());
    }
    CyclicSchedule::with_classes(order, labels, ranks.len(), t.node_count(), t.root())
        .expect("oriented frames are matchings")
        .with_fingerprint(t.fingerprint())
}

/// Whole pipeline: optional rationalization, multigraph, coloring, orientation, ordering.
pub fn compile(
    t: &Topology,
    o: &OccupancyMap,
    rank: &NodeRank,
    max_den: Option<u64>,
    cap: u64,
) -> Result<CyclicSchedule, ScheduleError> {
    let o = match max_den {
        Some(d) => rationalize(o, d),
        None => o.clone(),
    };
    let m = build_multigraph(t, &o, cap)?;
    let colored = edge_color(&m);
    Ok(order_frames(&orient_frames(&colored, rank), t, rank))
}

/// Compiles per-class occupancies, class `k` flowing forward in `ranks[k]`.
///
/// Every copy of an edge in the multigraph remembers the class and direction
/// it came from, so after coloring each frame edge serves one class and needs
/// no orientation step. Frames are ordered as in [`order_frames`] with a fill
/// counter per class.
pub fn compile_classes(
    t: &Topology,
    classes: &[OccupancyMap],
    ranks: &[NodeRank],
    cap: u64,
) -> Result<CyclicSchedule, ScheduleError> {
    assert_eq!(classes.len(), ranks.len(), "one rank per class");
    let l = common_denominator(t, classes, cap)?;
    let lq = Q::from_integer(l.into());
    let mut copies: BTreeMap<(usize, usize), Vec<Labelled>> = BTreeMap::new();
    for (c, o) in classes.iter().enumerate() {
        for (u, v, x) in o.iter() {
            let k = (x * &lq).to_integer().to_usize().unwrap();
            copies.entry((u.min(v), u.max(v))).or_default().extend(std::iter::repeat_n((u, v, c), k));
        }
    }
    let edges: Vec<_> = copies.iter().map(|(&e, c)| (e, c.len() as u64)).collect();
    let m = Multigraph::from_multiplicities(t.node_count(), l, &edges);
    let frames = edge_color(&m)
        .into_iter()
        .map(|f| {
            let mut g: Vec<Labelled> =
                f.iter().map(|&(a, b)| copies.get_mut(&(a.min(b), a.max(b))).unwrap().pop().unwrap()).collect();
            g.sort_unstable();
            g
        })
        .collect();
    Ok(order_labelled(frames, t, ranks))
}

/// True if the multigraph's support has no odd cycle.
pub fn is_bipartite_multigraph(m: &Multigraph) -> bool {
    let support: Vec<_> = m.k.keys().copied().collect();
    two_color(m.node_count, &support).is_some()
}
