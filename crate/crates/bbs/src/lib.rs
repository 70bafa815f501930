//! Broadcasting many packets from one root over a fixed network, one packet
//! per edge per step, one send and one receive per node per step.
//!
//! The central algorithm picks per-edge occupancies under which every node
//! receives at the same rate, turns them into a short cyclic schedule of
//! matchings, and lets every active edge forward the packet its receiver's
//! neighbors need most.
//!
//! ```
//! use bbs::algorithms::{BbsOptions, BbsPlan, BbsPolicy};
//! use bbs::sim::{run, SimConfig};
//! use bbs::topology::build_grid;
//!
//! let t = build_grid(&[4, 4]).unwrap();
//! let plan = BbsPlan::build(&t, &BbsOptions::default()).unwrap();
//! let steps = |n| run(&t, &mut BbsPolicy::new(&plan), &SimConfig::new(n)).unwrap().t;
//! // two steps per packet plus a fixed start-up and drain
//! assert_eq!(steps(100), 2 * 100 + 14);
//! assert_eq!(steps(500), 2 * 500 + 14);
//! ```

pub mod algorithms;
pub mod balance;
pub mod bench;
mod flow;
pub mod lp;
pub mod schedule;
pub mod sim;
pub mod topology;
