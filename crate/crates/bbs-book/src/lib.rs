// The book's code blocks run as doctests: every chapter is included as the
// docs of an empty module, one module per chapter so a failure points at
// its source file.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/topologies.md")]
pub mod topologies {}
#[doc = include_str!("../../../book/src/occupancies.md")]
pub mod occupancies {}
#[doc = include_str!("../../../book/src/schedules.md")]
pub mod schedules {}
#[doc = include_str!("../../../book/src/simulation.md")]
pub mod simulation {}
#[doc = include_str!("../../../book/src/algorithms.md")]
pub mod algorithms {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
