//! Simulator for the newsvendor pricing game: a supplier (leader) posts a
//! wholesale price, a retailer (follower) reacts with a retail price and a
//! perishable-stock order, and stochastic linear demand realizes.
//!
//! The library provides the demand and profit model (`demand`), the
//! perfect-information economics and equilibrium oracle (`econ`), ridge
//! estimation with ball-shaped optimism (`bandit`), the repeated-game
//! engine with an optimistic learning leader and a UCB1 baseline (`game`),
//! regret metrics (`regret`), and an experiment harness with a plain-text
//! config format (`config`, `harness`). `selftest` runs the acceptance
//! checks end to end.

pub mod bandit;
pub mod config;
pub mod demand;
pub mod econ;
mod error;
pub mod game;
pub mod harness;
pub mod numeric;
pub mod regret;
pub mod selftest;

pub use error::{Error, Result};
