//! Balanced-saturation broadcast: a cyclic frame schedule plus packet selection.

use std::cmp::Reverse;
use std::sync::Arc;

use crate::balance::{q, solve_balanced, solve_balanced_acyclic, solve_split, BalancedSolution, OccupancyMap};
use crate::lp::LpError;
use crate::schedule::{compile, compile_classes, CyclicSchedule, ScheduleError, DEFAULT_LCM_CAP};
use crate::sim::{SimState, StepPolicy, Transfer};
use crate::topology::{bfs_distances, depth_first_order, rank_toward, NodeRank, Topology};

use super::packet_selection_in;

/// How occupancies are restricted and frames oriented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Orientation {
    /// Packets are dealt round-robin into one class per root neighbor, each
    /// class flowing forward along its own node order (see
    /// [`solve_split`]). Class 0 follows hop distance; every other class
    /// heads first for the far end of one root branch. Fewer classes are
    /// tried when that fails, then [`Orientation::DepthFirst`]. Topologies
    /// with non-unit rates go straight to the fallback.
    #[default]
    Split,
    /// Occupancies only on edges that go forward in a depth-first node order,
    /// with the root balanced; frames follow the same order.
    DepthFirst,
    /// Unrestricted balanced occupancies; frames point away from the root by
    /// hop distance, ties from the lower id.
    BfsDistance,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BbsOptions {
    pub orientation: Orientation,
    /// Round occupancies down to this denominator before scaling. Split
    /// occupancies are already exact and ignore it.
    pub max_den: Option<u64>,
    pub lcm_cap: u64,
}

impl Default for BbsOptions {
    fn default() -> BbsOptions {
        BbsOptions { orientation: Orientation::default(), max_den: None, lcm_cap: DEFAULT_LCM_CAP }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BbsError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

/// Occupancies and node order of one packet class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassPlan {
    pub occupancies: OccupancyMap,
    pub rank: NodeRank,
}

/// Occupancies an orientation calls for: the combined solution and its
/// per-class parts.
pub fn solve_for(t: &Topology, orientation: Orientation) -> Result<(BalancedSolution, Vec<ClassPlan>), LpError> {
    let single = |solution: BalancedSolution, rank: NodeRank| {
        let class = ClassPlan { occupancies: solution.occupancies.clone(), rank };
        (solution, vec![class])
    };
    Ok(match orientation {
        Orientation::Split => match solve_split_classes(t) {
            Some(r) => r,
            None => return solve_for(t, Orientation::DepthFirst),
        },
        Orientation::DepthFirst => {
            let rank = NodeRank::from_order(&depth_first_order(t));
            single(solve_balanced_acyclic(t, &rank)?, rank)
        }
        Orientation::BfsDistance => single(solve_balanced(t)?, NodeRank::from_distances(&bfs_distances(t))),
    })
}

fn solve_split_classes(t: &Topology) -> Option<(BalancedSolution, Vec<ClassPlan>)> {
    if !t.has_unit_rates() {
        return None;
    }
    let ends = branch_ends(t);
    (2..=ends.len()).rev().find_map(|m| {
        let ranks = split_ranks(t, &ends[..m - 1]);
        let occ = solve_split(t, &ranks)?;
        let mut total = OccupancyMap::new();
        for o in &occ {
            for (u, v, x) in o.iter() {
                total.set(u, v, total.get(u, v) + x);
            }
        }
        let per_node_in = (0..t.node_count()).map(|i| total.in_efficiency(t, i)).collect();
        let solution = BalancedSolution { occupancies: total, c: q(1, 2), per_node_in };
        let classes =
            occ.into_iter().zip(ranks).map(|(occupancies, rank)| ClassPlan { occupancies, rank }).collect();
        Some((solution, classes))
    })
}

// one node per root neighbor n: the farthest node whose every shortest path
// from the root runs through n, lowest id on ties; sorted nearest first
fn branch_ends(t: &Topology) -> Vec<usize> {
    let p = t.node_count();
    let d = bfs_distances(t);
    let mut by_dist: Vec<usize> = (0..p).filter(|&v| v != t.root()).collect();
    by_dist.sort_by_key(|&v| d[v]);
    let mut ends: Vec<(u32, usize)> = t
        .neighbors(t.root())
        .iter()
        .map(|&n| {
            let mut owned = vec![false; p];
            for &v in &by_dist {
                owned[v] = v == n
                    || t.neighbors(v).iter().filter(|&&u| d[u] + 1 == d[v]).all(|&u| owned[u]);
            }
            let end = (0..p).filter(|&v| owned[v]).max_by_key(|&v| (d[v], Reverse(v))).unwrap();
            (d[end], end)
        })
        .collect();
    ends.sort_unstable();
    ends.into_iter().map(|(_, v)| v).collect()
}

fn split_ranks(t: &Topology, targets: &[usize]) -> Vec<NodeRank> {
    let mut ranks = vec![NodeRank::from_distances(&bfs_distances(t))];
    ranks.extend(targets.iter().map(|&v| rank_toward(t, v)));
    ranks
}

/// Everything a BBS run needs, built once per topology.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BbsPlan {
    pub solution: BalancedSolution,
    pub classes: Vec<ClassPlan>,
    pub schedule: Arc<CyclicSchedule>,
}

impl BbsPlan {
    /// ```
    /// use bbs::algorithms::{BbsOptions, BbsPlan};
    /// let t = bbs::topology::build_grid(&[4, 4]).unwrap();
    /// let plan = BbsPlan::build(&t, &BbsOptions::default()).unwrap();
    /// assert_eq!(plan.solution.c.to_string(), "1/2");
    /// assert_eq!((plan.classes.len(), plan.schedule.frame_count()), (2, 4));
    /// ```
    pub fn build(t: &Topology, opts: &BbsOptions) -> Result<BbsPlan, BbsError> {
        let (solution, classes) = solve_for(t, opts.orientation)?;
        if let [class] = &classes[..] {
            let rank = class.rank.clone();
            return BbsPlan::from_solution(t, solution, rank, opts);
        }
        let occ: Vec<OccupancyMap> = classes.iter().map(|c| c.occupancies.clone()).collect();
        let ranks: Vec<NodeRank> = classes.iter().map(|c| c.rank.clone()).collect();
        let schedule = Arc::new(compile_classes(t, &occ, &ranks, opts.lcm_cap)?);
        Ok(BbsPlan { solution, classes, schedule })
    }

    /// Compiles a given single-class solution with a given rank.
    pub fn from_solution(
        t: &Topology,
        solution: BalancedSolution,
        rank: NodeRank,
        opts: &BbsOptions,
    ) -> Result<BbsPlan, BbsError> {
        let schedule = Arc::new(compile(t, &solution.occupancies, &rank, opts.max_den, opts.lcm_cap)?);
        let classes = vec![ClassPlan { occupancies: solution.occupancies.clone(), rank }];
        Ok(BbsPlan { solution, classes, schedule })
    }
}

/// Runs frame `step mod F` each step, sending on every frame edge with a useful packet.
#[derive(Debug, Clone)]
pub struct BbsPolicy {
    schedule: Arc<CyclicSchedule>,
}

impl BbsPolicy {
    pub fn new(plan: &BbsPlan) -> BbsPolicy {
        BbsPolicy { schedule: Arc::clone(&plan.schedule) }
    }

    pub fn from_schedule(schedule: CyclicSchedule) -> BbsPolicy {
        BbsPolicy { schedule: Arc::new(schedule) }
    }

    pub fn schedule(&self) -> &CyclicSchedule {
        &self.schedule
    }
}

/// Transfers of the frame active at `state.step()`. Each edge only sends
/// packets of its class.
pub fn bbs_step(state: &SimState, t: &Topology, schedule: &CyclicSchedule, out: &mut Vec<Transfer>) {
    let f = schedule.frame_count();
    if f == 0 {
        return;
    }
    let k = (state.step() % f as u64) as usize;
    let m = schedule.class_count();
    for (&(u, v), &c) in schedule.frames()[k].iter().zip(&schedule.labels()[k]) {
        if !state.edge_ready(t, u, v) {
            continue;
        }
        if let Some(p) = packet_selection_in(u, v, state, t, c, m) {
            out.push(Transfer::new(u, v, p));
        }
    }
}

impl StepPolicy for BbsPolicy {
    fn propose(&mut self, state: &SimState, t: &Topology, out: &mut Vec<Transfer>) {
        bbs_step(state, t, &self.schedule, out);
    }
}
