//! Interactive decision trees over tabular two-class data.
//!
//! Trees are assembled by hand from five split kinds (single feature, custom
//! linear feature, embedded learned model, reference to another library tree,
//! and drawn polygons), evaluated on the training set, a held-out test set or
//! a seeded stratified split, and kept in a shared library with per-token
//! visibility.

pub mod dataset;
pub mod error;
pub mod eval;
pub mod json;
pub mod learners;
pub mod rng;
pub mod store;
pub mod synth;
pub mod tree;

pub use error::{Error, Result, ValidationIssue};
