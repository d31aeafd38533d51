//! Numerical laboratory for Piatetski-Shapiro primes in Diophantine
//! inequalities `|p_1^c + ... + p_s^c - N| < eps`.
//!
//! Modules are layered bottom-up:
//!
//! - [`psprimes`]: certified membership, windows and prime counts.
//! - [`expsums`]: the weighted exponential sums, the oscillatory integral `V`,
//!   bilinear sums, mean squares and bound audits.
//! - [`kernel`]: the smooth Davenport-Heilbronn kernel and its transform.
//! - [`circle`]: ranges, `R(N)` by direct count and by Fourier integral,
//!   region breakdown, main term and diagonal counts.
//! - [`solver`]: certified search for solutions with `s = 2..=5`.
//! - [`params`]: explicit constants and admissibility conditions.
//!
//! `log` is the natural logarithm throughout.

pub mod arith;
mod big;
pub mod circle;
pub mod context;
pub mod dd;
pub mod error;
pub mod expsums;
pub mod kernel;
mod mitm;
pub mod params;
pub mod psprimes;
pub mod quad;
pub mod reduce;
pub mod solver;

pub use context::{ExactExponent, PSContext};
pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use psprimes::{build_window, is_ps_member, pi_gamma, psi_gamma, PSWindow, PiGamma};
pub use kernel::{default_kernel, make_kernel, SmoothKernel};
pub use circle::{build_config, build_config_with, CircleConfig, CircleOptions, SolutionTuple};
pub use solver::{exceptional_scan, find_solutions, EpsilonRule, SearchMode, SearchTask};
