//! Library side of the `ergolab` command: configuration, execution,
//! report bundles and output files.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bundle;
pub mod config;
pub mod output;
pub mod plot;
pub mod run;
