//! Independent reference implementations for the `bmn` engine, and the
//! acceptance checks built on them.

pub mod criteria;
pub mod model;
pub mod naive;

pub use criteria::{run_all, Criterion};
