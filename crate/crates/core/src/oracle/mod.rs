//! Independent checks of the analytic results: Monte Carlo elections and
//! brute-force searches over discretized troll strategies.

pub mod dominance;
pub mod simulate;

pub use dominance::{
    discretized_exhaustive, dominance_test, BinnedStrategy, DominanceReport, ExhaustiveReport, FrontierPoint, Witness,
};
pub use simulate::{simulate_election, SimConfig, SimReport};
