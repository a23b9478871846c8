//! Decision-tree builder service and command-line driver.
//!
//! The domain library lives in [`branch_core`] (re-exported as [`core`]);
//! this crate adds the HTTP API used by the web builder, the `branch` binary
//! and the demo fixtures. See `examples/` for one runnable program per
//! capability.

pub mod cli;
pub mod demo;
pub mod ops;
pub mod service;

pub use branch_core as core;
