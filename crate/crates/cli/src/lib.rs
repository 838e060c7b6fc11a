//! Command-line driver: run configurations, artifact output and plots.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod plots;
pub mod run;
