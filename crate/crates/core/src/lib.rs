//! Randomization inference for completely randomized experiments with two or
//! more treatment arms.
//!
//! The crate is organised bottom-up:
//!
//! * [`design`] describes the assignment mechanism and can sample or
//!   enumerate assignments.
//! * [`stats`] computes the ANOVA decomposition and the `F`, `X²`, `T²` and
//!   pairwise studentized statistics from observed data.
//! * [`finitepop`] holds the full table of potential outcomes and the
//!   closed-form finite-population expectations of the sums of squares.
//! * [`frt`] runs exact or Monte Carlo Fisher randomization tests.
//! * [`asymptotics`] provides reference distributions and the chi-square
//!   mixture that governs `X²` under the weak null.
//! * [`scenarios`] generates simulation populations and runs rejection-rate
//!   studies.
//!
//! Treatment arms are indexed from zero everywhere in the API.

pub mod asymptotics;
pub mod design;
mod error;
pub mod finitepop;
pub mod frt;
pub mod rng;
pub mod scenarios;
pub mod stats;

pub use design::{Assignment, Design};
pub use error::{Error, Result};
pub use finitepop::{PopulationSummary, PotentialOutcomeTable};
pub use frt::{run_frt, run_frt_batch, FrtConfig, TestResult};
pub use stats::{ObservedDataset, Statistic};
