//! Reference implementations used only by test suites.
//!
//! Every function here is a direct transcription of a defining formula,
//! written without any code shared with the production crates. The point is
//! to give the tests a second, independent route to the same numbers: the
//! production code may batch, sort, or parallelize, while these oracles stay
//! deliberately naive.

// Index-style loops are the point here: they mirror the formulas.
#![allow(clippy::needless_range_loop)]

pub mod auc;
pub mod density;
pub mod fdist;
pub mod mst;
pub mod ols;
pub mod phi;
pub mod quantile;
