//! Chart-level numerical generalized geometry.
//!
//! Exact (rule-based) multivariate calculus on coordinate charts, the
//! generalized tangent bundle with its Courant bracket, generalized metrics
//! and connections with Gualtieri torsion and curvature, and the twistor
//! construction for generalized almost quaternionic structures, together
//! with residual checks for the associated integrability theorems.

pub mod catalog;
pub mod chart;
pub mod checks;
pub mod connections;
pub mod courant;
pub mod error;
pub mod exec;
pub mod expr;
pub mod field;
pub mod forms;
pub mod integrability;
pub mod jet;
pub mod parse;
pub mod report;
pub mod sample;
pub mod structures;
pub mod twistor;

pub use error::{GeoError, Result};
