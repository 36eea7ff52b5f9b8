//! Configuration, seeded sweeps, CSV records and summaries for the
//! `sparsecluster` command-line tool.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dataset;
pub mod error;
pub mod record;
pub mod runner;
pub mod summary;
