//! Arithmetic and analysis for Hecke congruence subgroups of `SL(2, ℤ[i])`.
//!
//! * [`gaussint`]: exact Gaussian-integer arithmetic.
//! * [`cusps`]: cusp normalization, equivalence, widths and scaling matrices.
//! * [`kloosterman`]: classical and generalized Kloosterman sums.
//! * [`bessel`]: Bessel functions and the kernels of the sum formula.
//! * [`quad`], [`special`], [`report`]: quadrature, the complex Gamma function and sweep reports.
//! * [`btransform`]: the Bessel transform of the Gaussian test function.
//! * [`sieve`]: large-sieve sums and the geometric side of the sum formula.

pub mod bessel;
pub mod btransform;
pub mod cusps;
pub mod error;
pub mod expsum;
pub mod gaussint;
pub mod kloosterman;
pub mod matrix;
pub mod quad;
pub mod report;
pub mod sieve;
pub mod special;

pub use error::{GkError, Result};
pub use gaussint::GaussianInt;
