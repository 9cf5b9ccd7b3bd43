//! Pseudospectral simulation and I-method diagnostics for the periodic
//! Schrödinger–Korteweg–de Vries system on the torus.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bourgain;
pub mod commutators;
pub mod continuation;
pub mod data;
pub mod error;
pub mod functionals;
pub mod i_operator;
pub mod solver;
pub mod spectral;

pub use error::{LabError, Result};
