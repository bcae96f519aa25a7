//! Pseudospectral laboratory for the long-wave approximation of the improved
//! Boussinesq equation and of nonlocal wave equations by unidirectional
//! Camassa-Holm, BBM and KdV models.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bidirectional;
pub mod config;
pub mod energy;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod grid;
pub mod kernels;
pub mod report;
pub mod residuals;
pub mod svg;
pub mod trajectory;
pub mod unidirectional;

pub use error::{Error, Result};
