//! Design and evaluation of anisotropy-optimized interpolation kernels.
//!
//! The crate derives piecewise-polynomial kernels from exact linear
//! constraints, minimizes a diagonal-edge staircasing objective over the
//! remaining free coefficients, and compares the results with classical
//! kernels through resampling experiments and gradient metrics.

pub mod error;
pub mod kernel;
pub mod kernelspace;
pub mod metrics;
pub mod optimizer;
pub mod pnm;
pub mod polyalg;
pub mod report;
pub mod resample;
pub mod staircase;
pub mod zoo;

pub use error::{Error, Result};
pub use kernel::Kernel;
pub use kernelspace::{GeneralSolution, KernelSpec, PiecewiseKernel, PolyKernel, SolveOutcome};
pub use polyalg::{MultiPoly, Rational};
pub use resample::{Boundary, Image, OutputGrid};
