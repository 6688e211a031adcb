// NaN-rejecting `!(x > 0.0)` guards and index loops over parallel arrays are intended.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod fft;
pub mod grid;
pub mod harness;
pub mod rng;

pub use error::{Error, Result};
pub use grid::{GridSpec, Mode, Rep, ScalarField, VectorField};
pub use num_complex::Complex64 as C64;
pub mod dump;
pub mod lp;
pub mod spacetime;
pub mod microlocal;
pub mod exponents;
pub mod sample;
pub mod mkg;
pub mod parametrix;
pub mod stats;
