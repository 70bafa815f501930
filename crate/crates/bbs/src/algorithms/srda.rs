//! Scatter then allgather baseline.
//!
//! Packets are split into one contiguous segment per node. The root first
//! routes every segment to its owner along a shortest-path spanning tree;
//! then the nodes cycle through an edge coloring of the topology, swapping
//! data with their neighbors until everyone is complete.

use crate::schedule::{edge_color, Frame, Multigraph};
use crate::sim::{SimState, StepPolicy, Transfer};
use crate::topology::{bfs_distances, bfs_order, Topology};

use super::packet_selection;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SrdaPlan {
    /// Owner node of each packet.
    pub owner: Vec<usize>,
    /// Scatter tree parent of each node: a shortest-path tree with subtree
    /// sizes balanced greedily.
    pub parent: Vec<Option<usize>>,
    pub children: Vec<Vec<usize>>,
    /// Tree order, root first.
    pub order: Vec<usize>,
    /// Packets whose owner lies in the subtree of each node, ascending.
    pub routed: Vec<Vec<usize>>,
    /// Undirected allgather frames, lower id first in each pair.
    pub frames: Vec<Frame>,
}

impl SrdaPlan {
    pub fn build(t: &Topology, packets: usize) -> SrdaPlan {
        let p = t.node_count();
        // node i owns packets [i N / P, (i + 1) N / P)
        let owner: Vec<usize> = (0..packets)
            .map(|k| (0..p).find(|&i| k < (i + 1) * packets / p).unwrap())
            .collect();
        // shortest-path tree; each node joins the candidate parent whose
        // ancestors, read from the top, have the smallest subtrees so far
        let order = bfs_order(t);
        let dist = bfs_distances(t);
        let mut parent: Vec<Option<usize>> = vec![None; p];
        let mut children = vec![Vec::new(); p];
        let mut size = vec![1usize; p];
        let chain = |mut u: usize, parent: &[Option<usize>], size: &[usize]| {
            let mut c = vec![size[u]];
            while let Some(w) = parent[u] {
                if parent[w].is_some() {
                    c.push(size[w]);
                }
                u = w;
            }
            c.reverse();
            c
        };
        for &v in &order {
            if v == t.root() {
                continue;
            }
            let u = t
                .neighbors(v)
                .iter()
                .copied()
                .filter(|&u| dist[u] + 1 == dist[v])
                .min_by_key(|&u| (chain(u, &parent, &size), u))
                .unwrap();
            parent[v] = Some(u);
            children[u].push(v);
            let mut x = Some(u);
            while let Some(w) = x {
                size[w] += 1;
                x = parent[w];
            }
        }
        let mut routed = vec![Vec::new(); p];
        for (k, &o) in owner.iter().enumerate() {
            let mut x = o;
            while x != t.root() {
                routed[x].push(k);
                x = parent[x].unwrap();
            }
        }
        let edges: Vec<_> = t.edges().map(|e| (e, 1)).collect();
        let m = Multigraph::from_multiplicities(p, 1, &edges);
        let frames = edge_color(&m);
        SrdaPlan { owner, parent, children, order, routed, frames }
    }

    /// Packet range owned by `node`.
    pub fn segment(&self, node: usize) -> std::ops::Range<usize> {
        let start = self.owner.partition_point(|&o| o < node);
        let end = self.owner.partition_point(|&o| o <= node);
        start..end
    }
}

#[derive(Debug, Clone)]
pub struct SrdaPolicy {
    plan: SrdaPlan,
    // index into routed[c] of the first packet c still lacks
    cursor: Vec<usize>,
    allgather_from: Option<u64>,
    busy: Vec<bool>,
}

impl SrdaPolicy {
    pub fn new(plan: SrdaPlan) -> SrdaPolicy {
        let p = plan.owner.len().max(plan.parent.len());
        SrdaPolicy { cursor: vec![0; p], plan, allgather_from: None, busy: Vec::new() }
    }

    pub fn plan(&self) -> &SrdaPlan {
        &self.plan
    }

    fn scatter(&mut self, state: &SimState, t: &Topology, out: &mut Vec<Transfer>) {
        let busy = &mut self.busy;
        for &u in self.plan.order.iter().rev() {
            if busy[u] {
                continue;
            }
            let pick = self.plan.children[u]
                .iter()
                .copied()
                .filter(|&c| {
                    let r = &self.plan.routed[c];
                    !busy[c]
                        && self.cursor[c] < r.len()
                        && state.holds(u, r[self.cursor[c]])
                        && state.edge_ready(t, u, c)
                })
                .max_by_key(|&c| (self.plan.routed[c].len() - self.cursor[c], std::cmp::Reverse(c)));
            if let Some(c) = pick {
                busy[u] = true;
                busy[c] = true;
                out.push(Transfer::new(u, c, self.plan.routed[c][self.cursor[c]]));
            }
        }
    }

    fn allgather(&self, state: &SimState, t: &Topology, from: u64, out: &mut Vec<Transfer>) {
        let f = self.plan.frames.len() as u64;
        if f == 0 {
            return;
        }
        let k = state.step() - from;
        let forward = (k / f).is_multiple_of(2);
        for &(a, b) in &self.plan.frames[(k % f) as usize] {
            let (u, v) = if forward { (a, b) } else { (b, a) };
            for (s, r) in [(u, v), (v, u)] {
                if !state.edge_ready(t, s, r) {
                    continue;
                }
                if let Some(p) = packet_selection(s, r, state, t) {
                    out.push(Transfer::new(s, r, p));
                    break;
                }
            }
        }
    }
}

impl StepPolicy for SrdaPolicy {
    fn propose(&mut self, state: &SimState, t: &Topology, out: &mut Vec<Transfer>) {
        if self.allgather_from.is_none() {
            for (c, r) in self.plan.routed.iter().enumerate() {
                while self.cursor[c] < r.len() && state.holds(c, r[self.cursor[c]]) {
                    self.cursor[c] += 1;
                }
            }
            let done = (0..t.node_count()).all(|v| self.plan.segment(v).all(|k| state.holds(v, k)));
            if done {
                self.allgather_from = Some(state.step());
            }
        }
        match self.allgather_from {
            None => {
                self.busy.clear();
                self.busy.resize(t.node_count(), false);
                self.scatter(state, t, out);
            }
            Some(from) => self.allgather(state, t, from, out),
        }
    }
}
