//! Equilibrium engine for elections in which a troll farm replaces a share
//! of each voter's informative signals with messages of its own choosing.
//!
//! Voters have types `x` (the posterior above which they back the
//! government), observe a signal drawn from an information structure, and
//! vote on the resulting belief. The sender picks, per type, the share of
//! signals to intercept and the law of the replacement messages. The crate
//! computes that optimum, the implied vote shares in both states, the
//! comparative statics in informativeness, polarization, reach and belief
//! distortion, and checks all of it against simulation and brute force.

pub mod cli;
pub mod comparative;
pub mod config;
pub mod electorate;
mod error;
pub mod numerics;
pub mod oracle;
pub mod outcomes;
pub mod signals;
pub mod strategy;

pub use electorate::{DistortionFn, Electorate};
pub use error::{Error, Result};
pub use outcomes::{Regime, VoteShares};
pub use signals::{SignalModel, State};
pub use strategy::{ReachCap, TrollStrategy};
