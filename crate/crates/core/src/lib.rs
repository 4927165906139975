//! Driven Dicke model of oscillating photodetectors in a damped cavity.

// `!(x >= 0.0)` is used on purpose so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cumulant;
pub mod dynamics;
pub mod error;
pub mod hp;
pub mod integrate;
pub mod linalg;
pub mod observables;
pub mod operators;
pub mod params;
pub mod special;
pub mod validation;

pub use error::{DickeError, Result};
