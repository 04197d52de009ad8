//! Exact numerics for sub-linear expectations on finite lattice models.
//!
//! A [`model::SequenceModel`] describes a horizon-`N` sequence of independent
//! coordinates, each carrying a finite family of probability vectors on a
//! shared lattice. Upper expectations are computed by backward induction
//! against an *adapted* adversary: the measure used for coordinate `k` may
//! depend on the realised values of coordinates `1..k`. This is what the
//! recursive notion of independence under a sub-linear expectation computes;
//! it is not a single product measure.
//!
//! Modules:
//! - [`model`]: lattice supports, step ambiguity sets, sequence schedules, model files.
//! - [`expectation`]: the backward-induction engine and a brute-force reference.
//! - [`capacity`]: path-event automata, upper/lower capacities, Choquet integrals,
//!   Borel–Cantelli products and Monte Carlo cross-checks.
//! - [`bounds`]: closed-form exponential inequalities and their verification harness.
//! - [`gnormal`]: G-normal tail capacities and the lattice CLT bridge.
//! - [`lil`]: LIL normalizers, moment-series condition checks and finite-window experiments.

// `!(x > 0.0)` style guards reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod capacity;
pub mod error;
pub mod expectation;
pub mod gnormal;
pub mod lil;
pub mod model;
pub mod rng;
pub mod table;

mod par;

pub use error::{Error, Result};
pub use expectation::Engine;
pub use par::with_workers;

/// Crate version, stamped into run reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
