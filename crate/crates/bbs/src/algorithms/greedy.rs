//! Greedy baseline: every step, a maximal set of useful node-disjoint transfers.

use crate::sim::{SimState, StepPolicy, Transfer};
use crate::topology::Topology;

use super::packet_selection;

/// Receivers are served in order of largest deficit, then lowest id; each
/// takes its lowest-id free neighbor that holds something it lacks.
#[derive(Debug, Clone, Default)]
pub struct GreedyPolicy {
    receivers: Vec<usize>,
    busy: Vec<bool>,
}

impl GreedyPolicy {
    pub fn new() -> GreedyPolicy {
        GreedyPolicy::default()
    }
}

impl StepPolicy for GreedyPolicy {
    fn propose(&mut self, state: &SimState, t: &Topology, out: &mut Vec<Transfer>) {
        greedy_step(state, t, &mut self.receivers, &mut self.busy, out);
    }
}

fn greedy_step(
    state: &SimState,
    t: &Topology,
    receivers: &mut Vec<usize>,
    busy: &mut Vec<bool>,
    out: &mut Vec<Transfer>,
) {
    let p = t.node_count();
    receivers.clear();
    receivers.extend((0..p).filter(|&v| !state.is_complete(v)));
    receivers.sort_by_key(|&v| (std::cmp::Reverse(state.deficit(v)), v));
    busy.clear();
    busy.resize(p, false);
    for &v in receivers.iter() {
        if busy[v] {
            continue;
        }
        let sender = t.neighbors(v).iter().copied().find(|&u| {
            !busy[u] && state.edge_ready(t, u, v) && state.can_help(u, v)
        });
        if let Some(u) = sender {
            let packet = packet_selection(u, v, state, t).expect("sender can help");
            busy[u] = true;
            busy[v] = true;
            out.push(Transfer::new(u, v, packet));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{run, SimConfig};
    use crate::topology::build_grid;

    #[test]
    fn first_step_leaves_root_once() {
        let t = build_grid(&[4, 4]).unwrap();
        let s = SimState::initial(&t, 10);
        let mut out = Vec::new();
        GreedyPolicy::new().propose(&s, &t, &mut out);
        assert_eq!(out, vec![Transfer::new(0, 1, 0)]);
    }

    #[test]
    fn nothing_to_do_when_complete() {
        let t = build_grid(&[2]).unwrap();
        let mut s = SimState::initial(&t, 1);
        crate::sim::apply_step(&mut s, &t, &[Transfer::new(0, 1, 0)]).unwrap();
        let mut out = Vec::new();
        GreedyPolicy::new().propose(&s, &t, &mut out);
        assert!(out.is_empty());
    }

    #[test]
    fn never_redundant() {
        let t = build_grid(&[3, 4]).unwrap();
        let r = run(&t, &mut GreedyPolicy::new(), &SimConfig::new(30)).unwrap();
        assert_eq!(r.total_transfers, 30 * 11);
    }
}
