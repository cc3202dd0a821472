//! Sparse exchangeable random graphs built from regularly varying graphex
//! functions: simulation, common-connection statistics, tail-index fits and
//! the associated limit theory.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cdegree;
pub mod error;
pub mod experiment;
pub mod model;
pub mod numerics;
pub mod rng;
pub mod simulator;
pub mod theory;

pub use error::{Error, ErrorClass, Result};
pub use model::{FamilyName, GraphexSpec, LimitFunctions, MarginalEvaluator, MarginalMode, SpecConfig};
