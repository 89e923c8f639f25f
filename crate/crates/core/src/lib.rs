//! Numerical laboratory for Bochner–Riesz means of Hermite and special Hermite expansions.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod carleson;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod grid;
pub mod hermite;
pub mod linalg;
pub mod oscillatory;
pub mod phase_h;
pub mod phase_l;
pub mod projection;
pub mod quadrature;
pub mod special_hermite;
pub mod subordination;

pub use error::{Error, Result};
