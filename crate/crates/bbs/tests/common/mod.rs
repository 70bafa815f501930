#![allow(dead_code)]

use std::collections::BTreeSet;

use bbs::topology::Topology;

/// Every connected graph on `p` nodes, one per isomorphism class that fixes node 0.
pub fn connected_graphs(p: usize) -> Vec<Topology> {
    let pairs: Vec<(usize, usize)> = (0..p).flat_map(|u| (u + 1..p).map(move |v| (u, v))).collect();
    let perms = permutations_fixing_zero(p);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for mask in 0u32..1 << pairs.len() {
        let edges: Vec<(usize, usize)> =
            pairs.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &e)| e).collect();
        if !connected(p, &edges) {
            continue;
        }
        let canon = perms
            .iter()
            .map(|pi| {
                let mut e: Vec<(usize, usize)> =
                    edges.iter().map(|&(u, v)| (pi[u].min(pi[v]), pi[u].max(pi[v]))).collect();
                e.sort();
                e
            })
            .min()
            .unwrap();
        if seen.insert(canon) {
            out.push(Topology::from_edges(p, &edges).unwrap());
        }
    }
    out
}

fn permutations_fixing_zero(p: usize) -> Vec<Vec<usize>> {
    fn rec(rest: &mut Vec<usize>, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest.is_empty() {
            out.push(cur.clone());
            return;
        }
        for i in 0..rest.len() {
            let x = rest.remove(i);
            cur.push(x);
            rec(rest, cur, out);
            cur.pop();
            rest.insert(i, x);
        }
    }
    let mut out = Vec::new();
    rec(&mut (1..p).collect(), &mut vec![0], &mut out);
    out
}

fn connected(p: usize, edges: &[(usize, usize)]) -> bool {
    let mut comp: Vec<usize> = (0..p).collect();
    fn find(c: &mut Vec<usize>, x: usize) -> usize {
        if c[x] != x {
            let r = find(c, c[x]);
            c[x] = r;
        }
        c[x]
    }
    for &(u, v) in edges {
        let (a, b) = (find(&mut comp, u), find(&mut comp, v));
        comp[a] = b;
    }
    let r = find(&mut comp, 0);
    (0..p).all(|x| find(&mut comp, x) == r)
}

/// Largest `c` such that occupancies in sixteenths give every non-root node
/// inflow exactly `c / 16` under the box, total-activity, load and forwarding
/// constraints. Edges into the root are left at zero: dropping such flow
/// never breaks a constraint.
pub fn best_sixteenths(t: &Topology) -> u32 {
    let p = t.node_count();
    let root = t.root();
    (0..=16u32)
        .rev()
        .find(|&c| {
            if (p as u32 - 1) * c > 16 * (p as u32 / 2) {
                return false;
            }
            let receivers: Vec<usize> = (0..p).filter(|&v| v != root).collect();
            let mut out = vec![0u32; p];
            feasible(t, c, &receivers, 0, &mut out)
        })
        .unwrap()
}

fn feasible(t: &Topology, c: u32, receivers: &[usize], k: usize, out: &mut Vec<u32>) -> bool {
    let Some(&v) = receivers.get(k) else { return true };
    let senders = t.neighbors(v);
    fill(t, c, receivers, k, senders, 0, c, out)
}

#[allow(clippy::too_many_arguments)]
fn fill(
    t: &Topology,
    c: u32,
    receivers: &[usize],
    k: usize,
    senders: &[usize],
    s: usize,
    left: u32,
    out: &mut Vec<u32>,
) -> bool {
    if s == senders.len() {
        return left == 0 && feasible(t, c, receivers, k + 1, out);
    }
    let u = senders[s];
    // out-capacity: the root may use all of its time, others share it with inflow c
    let cap = if u == t.root() { 16 - out[u] } else { (16 - c).saturating_sub(out[u]).min(c) };
    let rest_cap: u32 = senders[s + 1..]
        .iter()
        .map(|&w| if w == t.root() { 16 - out[w] } else { (16 - c).saturating_sub(out[w]).min(c) })
        .sum();
    let lo = left.saturating_sub(rest_cap);
    for x in (lo..=cap.min(left)).rev() {
        out[u] += x;
        let ok = fill(t, c, receivers, k, senders, s + 1, left - x, out);
        out[u] -= x;
        if ok {
            return true;
        }
    }
    false
}
