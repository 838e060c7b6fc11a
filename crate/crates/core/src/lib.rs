//! Spectral monodromy of small non-selfadjoint perturbations of completely
//! integrable two-degree-of-freedom Hamiltonians.
//!
//! The crate synthesizes the asymptotic eigenvalue cloud of
//! `P_eps = P + i eps Q` inside good rectangles of the complex plane, recovers
//! its local lattice charts directly from the point cloud, and assembles the
//! `GL(2, Z)` transition cocycle whose holonomy is the spectral monodromy. The
//! classical monodromy of the underlying action atlas is computed
//! independently and compared against it.
//!
//! Module map:
//!
//! - [`models`]: reference integrable systems and their action-angle charts.
//! - [`diophantine`]: non-resonance tests and the good-value set.
//! - [`averaging`]: torus and flow averages of the perturbation symbol.
//! - [`synth`]: asymptotic eigenvalue synthesis inside good rectangles.
//! - [`detect`]: lattice detection, labeling and chart fitting.
//! - [`monodromy`]: transition matrices, cocycle checks and conjugacy classes.
//! - [`pipeline`]: loop coverings tying the above together.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod averaging;
pub mod detect;
pub mod diophantine;
pub mod error;
pub mod geom;
pub mod models;
pub mod monodromy;
pub mod pipeline;
pub mod quadrature;
pub mod synth;
pub mod table;

pub use error::{Error, Result};
