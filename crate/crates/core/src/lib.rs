//! Paired GIMPLE / LLVM IR corpus construction and translation evaluation.
//!
//! The modules follow the data flow: [`toolchain`] produces IR dumps,
//! [`irparse`] splits them into functions, [`cmetrics`] and [`select`]
//! characterize and pick samples, [`dataset`] persists corpora,
//! [`translate`] produces candidate LLVM IR, [`evalharness`] scores it and
//! [`analysis`] summarizes the scores.

pub mod analysis;
pub mod clex;
pub mod cmetrics;
pub mod csource;
pub mod dataset;
pub mod evalharness;
pub mod exec;
pub mod irparse;
pub mod process;
pub mod select;
pub mod toolchain;
pub mod translate;

pub use exec::Execution;
