//! A user-driven pricing and scheduling market for public EV charging.
//!
//! The mechanism runs in three steps: users submit bids (price, demand
//! bounds, acceptable slots), the operator solves a mixed-integer program to
//! accept, counter, or reject each bid, and users then accept or decline the
//! resulting offers based on their utility.
//!
//! - [`domain`]: bids, station configuration, pricing policy, validation.
//! - [`model`]: the operator MILP, offer extraction, and the offer verifier.
//! - [`solver`]: backend adapter plus the exhaustive certification oracle.
//! - [`response`]: user utilities and accept/decline decisions.
//! - [`metrics`]: per-scenario indicators and cross-seed aggregation.
//! - [`scenario`]: seeded instance generation, presets, and sweep running.

pub mod domain;
pub mod metrics;
pub mod model;
pub mod money;
pub mod response;
pub mod scenario;
pub mod solver;
