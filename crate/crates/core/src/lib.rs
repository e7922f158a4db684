//! Recovering an approximation of an unknown input image given only a
//! distorted output and forward-evaluation access to the operator that
//! produced it.
//!
//! The crate is generic over the sample scalar (`f32` or `f64`, see
//! [`Scalar`]); the [`Image64`]/[`Image32`] aliases pick one. All
//! numerical defaults and file I/O use `f64`.

pub mod image;
pub mod io;
pub mod linear;
pub mod ops;
pub mod probe;
pub mod scalar;
pub mod solver;

pub use image::{add_noise, mse, psnr, Image, ImageError, NoiseSpec, PSNR_SENTINEL_DB};
pub use io::{load_image, save_image, BitDepth, IoError};
pub use linear::{closed_form_linear_iterate, DenseLinearOperator};
pub use ops::{BlackBoxOperator, OpError, OperatorSpec, SpecParseError};
pub use probe::{
    check_null_preservation, directional_derivative, estimate_lipschitz, radial_derivative,
    LipschitzEstimate, ProbeConfig, ProbeError,
};
pub use scalar::Scalar;
pub use solver::{
    derive_mu, max_stable_step, noise_amplification_bound, relative_residual, render,
    render_exact, render_red, suggested_iterations, RenditionResult, SolverConfig, SolverError,
    SolverMode, StopReason, MU_FLOOR,
};

/// Double-precision image, the default working type.
pub type Image64 = Image<f64>;
/// Single-precision image for memory-constrained callers.
pub type Image32 = Image<f32>;
