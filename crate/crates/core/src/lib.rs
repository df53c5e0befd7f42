//! Reversed weighted Hardy–Littlewood–Sobolev functional on the upper half
//! space `R^{n+1}_+` and its conformal ball picture.
//!
//! * [`params`] validates exponent systems.
//! * [`special`] gives the Gamma function and the explicit constant band.
//! * [`geometry`] holds the conformal map between the half space and the ball,
//!   plus Kelvin transforms.
//! * [`quad`] builds ball quadrature rules and Monte-Carlo estimates.
//! * [`functional`] provides fields, quasi-norms, the weighted operators and the
//!   bilinear form.
//! * [`pair`] represents half-space Nyström potentials and transported
//!   Euler–Lagrange pairs.
//! * [`solver`] runs alternating minimization, critical sweeps and blow-up
//!   rescaling.
//! * [`verify`] contains the identity and inequality checks.
//! * [`cli`] is the command-line front end.

pub mod cli;
pub mod error;
pub mod functional;
pub mod geometry;
pub mod pair;
pub mod params;
pub mod quad;
pub mod solver;
pub mod special;
pub mod sum;
pub mod verify;

pub use error::{Error, Result};
pub use params::{ExponentSet, RawExponents};
