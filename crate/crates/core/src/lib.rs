//! Election-sweep laboratory: compute the probability that a single party
//! wins every election in a set, under arbitrary (possibly staggered)
//! polling schedules and randomized voter turnout.
//!
//! The model: each voter has a fixed preferred party and a fixed probability
//! `p_h` of showing up on any poll date. A schedule assigns every voter a
//! partition of the election set; one coin per partition block decides
//! whether the voter attends all elections of that block. Win rules map
//! per-election tallies to per-party win probabilities.
//!
//! The crate provides:
//! - exact sweep probabilities by enumeration over the turnout measure,
//!   with arbitrary-precision rational arithmetic ([`sweep`]),
//! - reproducible parallel Monte Carlo estimation ([`sweep`], [`turnout`]),
//! - the partition-coarsening order on schedules ([`lattice`]),
//! - concrete electoral systems (first-past-the-post, party-list PR with
//!   D'Hondt or Hare-largest-remainder rounding), alliance handling, and
//!   brute-force validators for the win-rule conditions ([`rules`]),
//! - exact verification of the underlying correlation inequalities on
//!   explicit lattice functions ([`ineq`]).

pub mod bitset;
pub mod ineq;
pub mod lattice;
pub mod model;
pub mod ratio;
pub mod rules;
pub mod sweep;
pub mod turnout;

pub use bitset::VoterSet;
pub use lattice::{enumerate_partitions, MergeStep, Partition};
pub use model::{ElectionSpec, PartyId, Scenario, Schedule, Violation, Voter};
pub use rules::{
    Alliance, AllianceKind, AllianceStructure, PrWinMode, RoundingMethod, Tally, WinContext,
    WinRuleSpec,
};
pub use sweep::{Method, ScheduleComparison, SweepEstimate, SweepReport};
pub use turnout::{Turnout, WeightedTurnout};

/// Exact rational probability type used throughout the exact paths.
pub type Prob = num::BigRational;
