//! Numerical laboratory for unique continuation of periodic dispersive waves.
//!
//! The crate is organised bottom-up:
//!
//! | Module            | Contents                                                        |
//! |-------------------|-----------------------------------------------------------------|
//! | [`dispersion`]    | dispersion relations ω(k), superlinearity and symbol-bound checks |
//! | [`spectral`]      | exact Fourier-space evolution of `u_t = -iω(D)u` and synthesis   |
//! | [`lattice`]       | the frequency lattice `(k, ω(k))`, separation, Beurling counting |
//! | [`observability`] | closed-form Gram matrices over rectangle unions, frame bounds    |
//! | [`fluid`]         | sigma-coordinate Dirichlet-to-Neumann operator and ZCS dynamics  |
//!
//! Every quantitative statement is made at a declared Fourier truncation `N`
//! (modes `-N..=N`).

// `!(x > 0.0)` guards reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dispersion;
mod error;
pub mod fluid;
pub mod lattice;
pub mod observability;
pub mod periodic;
pub mod spectral;

pub use error::{Error, Result};

pub use num_complex::Complex64;
