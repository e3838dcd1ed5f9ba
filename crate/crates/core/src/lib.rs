//! Exact solvers for envy-free house allocation under uncertain preferences.
//!
//! Agents hold uncertain preferences over houses under one of four models:
//! independent per-agent lotteries over strict orders, weak orders with all
//! tie-breaks equally likely (compact indifference), a joint distribution
//! over whole preference profiles, or independent pairwise comparison
//! probabilities. The crate computes the exact probability that a given
//! allocation is envy-free, finds allocations maximizing that probability,
//! decides whether possibly- or certainly-envy-free allocations exist, and
//! generates seeded random and reduction-based validation instances. All
//! probabilities are arbitrary-precision rationals; nothing is sampled or
//! rounded.

pub mod compact;
pub mod deciders;
pub mod efprob;
pub mod gen;
pub mod instance;
pub mod io;
pub mod matching;
pub mod order;
pub mod prob;
pub mod solvers;

pub use instance::{Allocation, Instance, ModelKind, Prefs};
pub use prob::Prob;
