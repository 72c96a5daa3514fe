// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod brownian;
pub mod cli;
pub mod coefficients;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod predictor;
pub mod psi;
pub mod quadrature;
pub mod rng;
pub mod schedule;
pub mod sequence;
pub mod special;
pub mod stats;
pub mod verify;

pub use coefficients::{Coefficients, Params};
pub use error::{Error, Result};
pub use psi::PsiSpec;
pub use sequence::{ErrorSequence, Index};
