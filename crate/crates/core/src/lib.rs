//! Dressed energy of the XXZ spin chain in the massless regime `0 < Δ < 1`.
//!
//! The dressed energy is the solution of a Fredholm integral equation of the
//! second kind on `[-Q, Q]` with the XXZ scattering kernel, evaluated at the
//! Fermi rapidity `Q = Q_F` fixed by `ε(Q_F|Q_F) = 0`. This crate solves that
//! equation by Nyström quadrature, locates `Q_F`, continues `ε` into the
//! complex cylinder, traces the curve `Re ε = 0` and checks the lower bounds
//! on `Re ε` numerically.
//!
//! Module map:
//!
//! * [`kernels`]: closed-form kernel, driving terms and `Q = ∞` solutions.
//! * [`fredholm`]: Nyström discretisation, resolvent kernels, off-grid
//!   evaluation.
//! * [`dressed`]: dressed energy, dressed charge and root density at finite `Q`.
//! * [`fermi`]: Fermi rapidity and its field derivative.
//! * [`complexplane`]: the dressed energy on the cut cylinder.
//! * [`cli`]: command-line driver used by the `xxz-dressed` binary.

pub mod cli;
pub mod complexplane;
pub mod dressed;
pub mod error;
pub mod fermi;
pub mod fredholm;
pub mod kernels;
pub mod quadrature;
pub mod roots;

pub use error::{Error, Result};
pub use num_complex::Complex64;
