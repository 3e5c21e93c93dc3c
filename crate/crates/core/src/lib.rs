//! Pseudo-spectral simulation of the stochastic Navier-Stokes equations on the
//! rotating unit sphere, driven by subordinated stable Lévy noise.
//!
//! The velocity is split as `u = v + z`: `z` is the Ornstein-Uhlenbeck
//! stochastic convolution (integrated exactly per mode, see [`ou`]) and `v`
//! solves a random but pathwise deterministic Navier-Stokes equation
//! (see [`solver`]). Every divergence-free field is carried as a stream
//! function in spherical-harmonic coefficients ([`harmonics`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod harmonics;
pub mod noise;
pub mod operators;
pub mod ou;
pub mod solver;
pub mod stats;

pub use error::{Error, Result};
