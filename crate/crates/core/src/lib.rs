//! Classical two-body apparatus with a mutual-rotation constraint and
//! mechanical stops, its exact and Monte Carlo probabilities, and the
//! Clauser-Horne analysis of those probabilities: the naive plug-in of
//! per-setup conditionals and the treatment weighted by setting frequencies.

pub mod analysis;
pub mod apparatus;
pub mod check;
pub mod config;
pub mod error;
pub mod exact;
pub mod geometry;
pub mod lhv;
pub mod monte_carlo;
pub mod report;
pub mod simplex;

pub use error::{Error, Result};
