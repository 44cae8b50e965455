//! Spray and Finsler geometry on the slit tangent bundle, with exact
//! symbolic differentiation and residual-based verification.

pub mod check;
pub mod error;
pub mod expr;
pub mod field;
pub mod flows;
pub mod forms;
pub mod invariants;
pub mod metric;
pub mod point;
pub mod presets;
pub mod spray;
pub mod suites;
pub mod symmetry;

pub use error::{Error, Result};
