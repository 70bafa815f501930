//! Broadcast step policies: BBS and the Greedy, Binary Tree and SRDA baselines.

use std::fmt;
use std::str::FromStr;

use crate::sim::{SimState, StepPolicy};
use crate::topology::Topology;

pub mod bbs;
pub mod btree;
pub mod greedy;
pub mod srda;

pub use bbs::{bbs_step, solve_for, BbsError, BbsOptions, BbsPlan, BbsPolicy, ClassPlan, Orientation};
pub use btree::{build_binary_tree, BinaryTreePolicy, TreePlan};
pub use greedy::GreedyPolicy;
pub use srda::{SrdaPlan, SrdaPolicy};

/// Packet `u` should send `v`: among packets `u` holds and `v` lacks, the one
/// that the most neighbors of `v` also lack. Ties go to the lowest id.
///
/// ```
/// use bbs::{algorithms::packet_selection, sim::SimState, topology::build_grid};
/// let t = build_grid(&[2]).unwrap();
/// let s = SimState::initial(&t, 3);
/// assert_eq!(packet_selection(0, 1, &s, &t), Some(0));
/// assert_eq!(packet_selection(1, 0, &s, &t), None);
/// ```
pub fn packet_selection(u: usize, v: usize, state: &SimState, t: &Topology) -> Option<usize> {
    packet_selection_in(u, v, state, t, 0, 1)
}

/// [`packet_selection`] restricted to packets `p` with `p mod classes == class`.
///
/// ```
/// use bbs::{algorithms::packet_selection_in, sim::SimState, topology::build_grid};
/// let t = build_grid(&[2]).unwrap();
/// let s = SimState::initial(&t, 5);
/// assert_eq!(packet_selection_in(0, 1, &s, &t, 1, 3), Some(1));
/// ```
pub fn packet_selection_in(
    u: usize,
    v: usize,
    state: &SimState,
    t: &Topology,
    class: usize,
    classes: usize,
) -> Option<usize> {
    assert!(class < classes, "class {class} out of range");
    if state.count(u) == 0 || state.is_complete(v) {
        return None;
    }
    let su = state.set(u).words();
    let sv = state.set(v).words();
    let nbrs = t.neighbors(v);
    let planes = (usize::BITS - nbrs.len().leading_zeros()) as usize;
    let mut counter = vec![0u64; planes];
    let mut best: Option<(u32, usize)> = None;
    for k in 0..su.len() {
        let cand = su[k] & !sv[k] & class_mask(k, class, classes);
        if cand == 0 {
            continue;
        }
        // bit-sliced count of neighbors lacking each candidate
        counter.fill(0);
        for &w in nbrs {
            let mut carry = cand & !state.set(w).words()[k];
            for plane in counter.iter_mut() {
                if carry == 0 {
                    break;
                }
                let sum = *plane ^ carry;
                carry &= *plane;
                *plane = sum;
            }
        }
        let mut mask = cand;
        let mut level = 0u32;
        for (b, plane) in counter.iter().enumerate().rev() {
            let m = mask & plane;
            if m != 0 {
                mask = m;
                level |= 1 << b;
            }
        }
        let packet = k * 64 + mask.trailing_zeros() as usize;
        if best.is_none_or(|(l, _)| level > l) {
            best = Some((level, packet));
        }
    }
    best.map(|(_, p)| p)
}

// bits of word `k` whose packet id is `class` mod `classes`
fn class_mask(k: usize, class: usize, classes: usize) -> u64 {
    if classes == 1 {
        return !0;
    }
    let first = (class + classes - (k * 64) % classes) % classes;
    (first..64).step_by(classes).fold(0, |m, b| m | 1 << b)
}

/// Forward potential of `packet` at `v`: neighbors of `v` that lack it.
pub fn forward_potential(v: usize, packet: usize, state: &SimState, t: &Topology) -> usize {
    t.neighbors(v).iter().filter(|&&w| !state.holds(w, packet)).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    Bbs,
    BinaryTree,
    Greedy,
    Srda,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] =
        [Algorithm::Bbs, Algorithm::Greedy, Algorithm::BinaryTree, Algorithm::Srda];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Bbs => "bbs",
            Algorithm::Greedy => "greedy",
            Algorithm::BinaryTree => "btree",
            Algorithm::Srda => "srda",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown algorithm {0:?}, expected one of bbs, greedy, btree, srda")]
pub struct UnknownAlgorithm(pub String);

impl FromStr for Algorithm {
    type Err = UnknownAlgorithm;
    fn from_str(s: &str) -> Result<Algorithm, UnknownAlgorithm> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bbs" => Ok(Algorithm::Bbs),
            "greedy" => Ok(Algorithm::Greedy),
            "btree" | "binary-tree" | "binarytree" => Ok(Algorithm::BinaryTree),
            "srda" => Ok(Algorithm::Srda),
            _ => Err(UnknownAlgorithm(s.to_string())),
        }
    }
}

/// Builds a fresh policy. BBS needs a precompiled plan, shared between runs.
pub fn make_policy(
    algo: Algorithm,
    t: &Topology,
    packets: usize,
    bbs_plan: Option<&BbsPlan>,
) -> Result<Box<dyn StepPolicy + Send>, BbsError> {
    Ok(match algo {
        Algorithm::Bbs => {
            let built;
            let plan = match bbs_plan {
                Some(p) => p,
                None => {
                    built = BbsPlan::build(t, &BbsOptions::default())?;
                    &built
                }
            };
            Box::new(BbsPolicy::new(plan))
        }
        Algorithm::Greedy => Box::new(GreedyPolicy::new()),
        Algorithm::BinaryTree => Box::new(BinaryTreePolicy::new(build_binary_tree(t))),
        Algorithm::Srda => Box::new(SrdaPolicy::new(SrdaPlan::build(t, packets))),
    })
}
