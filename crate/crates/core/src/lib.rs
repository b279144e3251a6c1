//! Exact branch-and-cut-and-price for the dial-a-ride problem with
//! chance-constrained vehicle capacity and soft time windows.
//!
//! The pieces, bottom up:
//!
//! - [`instance`]: Cordeau-format parsing and the C / TF / R / TFR modes.
//! - [`robustness`]: Hoeffding bounds for uncertain loads.
//! - [`schedule`]: least feasible service times of a node sequence.
//! - [`pricing`]: labeling for negative reduced-cost trips.
//! - [`lp`] and [`master`]: the restricted master LP.
//! - [`cuts`] and [`search`]: separation, branching, and the tree search.
//! - [`oracle`]: brute force for tiny instances.
//! - [`simulator`]: Monte-Carlo replay of a plan under random demand.

pub mod construct;
pub mod cuts;
pub mod error;
pub mod generator;
pub mod instance;
pub mod lp;
pub mod master;
pub mod oracle;
pub mod pricing;
pub mod reqset;
pub mod robustness;
pub mod schedule;
pub mod search;
pub mod simulator;

pub use error::{Error, Result};
pub use instance::{apply_mode, parse_instance, Instance, Mode, ModeConfig};
pub use pricing::{Dominance, Trip};
pub use reqset::ReqSet;
pub use search::{solve_bcp, SolveConfig, SolveReport};

/// Largest number of requests an instance may have (request sets are 128-bit).
pub const MAX_REQUESTS: usize = 128;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/instances.md")]
    mod instances {}
    #[doc = include_str!("../../../book/src/robustness.md")]
    mod robustness {}
    #[doc = include_str!("../../../book/src/solving.md")]
    mod solving {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
