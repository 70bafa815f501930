//! Pipelined binary-tree baseline.

use std::collections::VecDeque;

use crate::sim::{SimState, StepPolicy, Transfer};
use crate::topology::Topology;

/// Spanning tree with at most two children per node, except where the
/// topology forces more.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreePlan {
    pub parent: Vec<Option<usize>>,
    pub children: Vec<Vec<usize>>,
    /// Nodes in the order they joined the tree.
    pub order: Vec<usize>,
    /// Some node had to take a third or later child.
    pub degree_relaxed: bool,
}

impl TreePlan {
    pub fn depth(&self) -> usize {
        let mut depth = vec![0; self.parent.len()];
        for &v in &self.order {
            if let Some(u) = self.parent[v] {
                depth[v] = depth[u] + 1;
            }
        }
        depth.into_iter().max().unwrap_or(0)
    }
}

/// Breadth-first from the root, each node adopting up to two unvisited
/// neighbors by ascending id. Nodes left over once the search stalls join
/// their lowest-id neighbor already in the tree, ignoring the two-child cap,
/// and the search resumes from them.
pub fn build_binary_tree(t: &Topology) -> TreePlan {
    let p = t.node_count();
    let mut parent = vec![None; p];
    let mut children = vec![Vec::new(); p];
    let mut seen = vec![false; p];
    let mut order = vec![t.root()];
    let mut relaxed = false;
    seen[t.root()] = true;
    let mut queue = VecDeque::from([t.root()]);
    loop {
        while let Some(u) = queue.pop_front() {
            for &v in t.neighbors(u) {
                if children[u].len() == 2 {
                    break;
                }
                if !seen[v] {
                    seen[v] = true;
                    parent[v] = Some(u);
                    children[u].push(v);
                    order.push(v);
                    queue.push_back(v);
                }
            }
        }
        let orphan = (0..p).find(|&v| !seen[v] && t.neighbors(v).iter().any(|&u| seen[u]));
        let Some(v) = orphan else { break };
        let u = t.neighbors(v).iter().copied().find(|&u| seen[u]).unwrap();
        seen[v] = true;
        parent[v] = Some(u);
        children[u].push(v);
        order.push(v);
        queue.push_back(v);
        relaxed = true;
    }
    TreePlan { parent, children, order, degree_relaxed: relaxed }
}

/// Each step, nodes in reverse tree order: a node not already busy sends its
/// lowest-id useful packet to the free child with the largest deficit.
/// Deeper nodes claim their step first, so a parent never interrupts a child
/// that is still forwarding.
#[derive(Debug, Clone)]
pub struct BinaryTreePolicy {
    plan: TreePlan,
    busy: Vec<bool>,
}

impl BinaryTreePolicy {
    pub fn new(plan: TreePlan) -> BinaryTreePolicy {
        BinaryTreePolicy { plan, busy: Vec::new() }
    }

    pub fn plan(&self) -> &TreePlan {
        &self.plan
    }
}

impl StepPolicy for BinaryTreePolicy {
    fn propose(&mut self, state: &SimState, t: &Topology, out: &mut Vec<Transfer>) {
        let busy = &mut self.busy;
        busy.clear();
        busy.resize(t.node_count(), false);
        for &u in self.plan.order.iter().rev() {
            if busy[u] || state.count(u) == 0 {
                continue;
            }
            let child = self.plan.children[u]
                .iter()
                .copied()
                .filter(|&c| !busy[c] && state.edge_ready(t, u, c) && state.can_help(u, c))
                .max_by_key(|&c| (state.deficit(c), std::cmp::Reverse(c)));
            if let Some(c) = child {
                let packet = state.first_useful(u, c).unwrap();
                busy[u] = true;
                busy[c] = true;
                out.push(Transfer::new(u, c, packet));
            }
        }
    }
}
