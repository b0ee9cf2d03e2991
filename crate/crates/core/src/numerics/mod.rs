//! Dense matrices, a small reverse-mode tape, Adam, and a finite-difference
//! gradient checker.

mod gradcheck;
mod matrix;
mod params;
mod sparse;
mod tape;

pub use gradcheck::{grad_check, relative_error, GradCheckOptions, GradCheckReport, ParamCheck};
pub use matrix::Matrix;
pub use params::{AdamConfig, ParamStore};
pub use sparse::SparsePattern;
pub use tape::{masked_softmax, Gradients, LossTargets, Tape, Var};
