//! Integral minimum-cost flow by successive shortest paths.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// A flow network with integer capacities and costs.
///
/// Arcs are stored in pairs; arc `a ^ 1` is the residual twin of `a`.
#[derive(Debug, Clone, Default)]
pub(crate) struct MinCostFlow {
    out: Vec<Vec<usize>>,
    head: Vec<usize>,
    cap: Vec<i64>,
    cost: Vec<i64>,
    original: Vec<i64>,
}

impl MinCostFlow {
    pub fn new(nodes: usize) -> MinCostFlow {
        MinCostFlow { out: vec![Vec::new(); nodes], ..MinCostFlow::default() }
    }

    /// Adds an arc and returns its id.
    pub fn add_arc(&mut self, from: usize, to: usize, cap: i64, cost: i64) -> usize {
        let a = self.head.len();
        self.out[from].push(a);
        self.head.push(to);
        self.cap.push(cap);
        self.cost.push(cost);
        self.original.push(cap);
        self.out[to].push(a + 1);
        self.head.push(from);
        self.cap.push(0);
        self.cost.push(-cost);
        self.original.push(0);
        a
    }

    pub fn flow_on(&self, arc: usize) -> i64 {
        self.original[arc] - self.cap[arc]
    }

    /// Sends as much flow as possible from `s` to `t` at minimum cost and
    /// returns `(flow, cost)`. Negative arc costs are allowed as long as no
    /// negative cycle is reachable.
    pub fn run(&mut self, s: usize, t: usize) -> (i64, i64) {
        let n = self.out.len();
        let mut pot = self.bellman_ford(s);
        let (mut flow, mut total) = (0, 0);
        let mut dist = vec![i64::MAX; n];
        let mut via = vec![usize::MAX; n];
        loop {
            dist.fill(i64::MAX);
            let mut heap = BinaryHeap::from([Reverse((0i64, s))]);
            dist[s] = 0;
            while let Some(Reverse((du, u))) = heap.pop() {
                if du > dist[u] {
                    continue;
                }
                for &a in &self.out[u] {
                    if self.cap[a] <= 0 {
                        continue;
                    }
                    let v = self.head[a];
                    let dv = du + self.cost[a] + pot[u] - pot[v];
                    if dv < dist[v] {
                        dist[v] = dv;
                        via[v] = a;
                        heap.push(Reverse((dv, v)));
                    }
                }
            }
            if dist[t] == i64::MAX {
                return (flow, total);
            }
            for u in 0..n {
                if dist[u] != i64::MAX {
                    pot[u] += dist[u];
                }
            }
            let mut push = i64::MAX;
            let mut v = t;
            while v != s {
                push = push.min(self.cap[via[v]]);
                v = self.head[via[v] ^ 1];
            }
            let mut v = t;
            while v != s {
                let a = via[v];
                self.cap[a] -= push;
                self.cap[a ^ 1] += push;
                total += push * self.cost[a];
                v = self.head[a ^ 1];
            }
            flow += push;
        }
    }

    fn bellman_ford(&self, s: usize) -> Vec<i64> {
        let n = self.out.len();
        let mut d = vec![i64::MAX; n];
        d[s] = 0;
        for _ in 0..n {
            let mut changed = false;
            for u in 0..n {
                if d[u] == i64::MAX {
                    continue;
                }
                for &a in &self.out[u] {
                    let v = self.head[a];
                    if self.cap[a] > 0 && d[u] + self.cost[a] < d[v] {
                        d[v] = d[u] + self.cost[a];
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        d.iter().map(|&x| if x == i64::MAX { 0 } else { x }).collect()
    }
}
