//! Numerical real radical ideals.
//!
//! Given polynomials `P`, [`pipeline::gif_m`] returns generators of the real
//! radical of the ideal they span. Each round brings the system to a
//! geometric involutive form, builds the moment matrix supported on its
//! kernel, shrinks it by facial reduction and solves the remaining
//! feasibility problem by Douglas-Rachford iteration. The kernel of a
//! maximal-rank moment matrix yields new generators.

pub mod error;
pub mod gif;
pub mod moment;
pub mod numlin;
pub mod pipeline;
pub mod polysys;
pub mod report;
pub mod solver;

pub use error::{Error, Result};
