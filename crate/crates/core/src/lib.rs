//! Low-rank completion of undersampled k-space tensors and committee-based
//! active selection of the next Cartesian lines to acquire.
//!
//! The crate is organised bottom-up:
//!
//! * [`tensor`] and [`fft`]: dense complex tensors, mode unfoldings, unitary FFT.
//! * [`linalg`]: SVD, singular value thresholding, soft-thresholding, leverage scores.
//! * [`solver`]: block coordinate descent and ADMM sweeps for the overlapped
//!   nuclear norm (plus optional sparse) completion model.
//! * [`sampling`]: predictive-variance and leverage utilities, pattern
//!   selection and baselines.
//! * [`sim`]: synthetic phantoms, Cartesian masks, fiber patterns and metrics.
//!
//! With the default `parallel` feature the per-mode SVDs of a sweep and the
//! per-mode utility terms run on the rayon pool. Results are bitwise identical
//! to the sequential build.

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fft;
pub mod linalg;
pub mod par;
pub mod sampling;
pub mod sim;
pub mod solver;
pub mod tensor;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use tensor::{DenseTensor, Matrix, MultiIndex, ObservationSet, Shape};
