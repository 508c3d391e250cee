//! Command line driver: TOML run configurations, subcommand dispatch and
//! artifact output for the `fracsep` library.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod run;
