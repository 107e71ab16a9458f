//! Finite-volume laboratory for nonlocal LWR traffic models.
//!
//! The model under study is the nonlocal conservation law
//!
//! ∂_t u + ∂_x(V(u ∗ γ_ε) u) = 0,    γ_ε(z) = ε⁻¹ γ(z/ε),
//!
//! where the convolution kernel γ is supported on ]−∞, 0] (drivers react to
//! traffic ahead), together with its local limit ∂_t u + ∂_x(V(u) u) = 0 as
//! ε ↓ 0. The crate provides:
//!
//! - admissible kernels with their spectral objects (γ̂, h, η, C₀) ([`kernel`]),
//! - grid functions and the norms used in the estimates ([`grid`]),
//! - an upwind solver for the nonlocal model ([`nonlocal`]),
//! - a Godunov solver and exact Riemann oracle for the local limit ([`local`]),
//! - Fourier-side diagnostics: spectra, tail energies, the ρ functional and
//!   the Volterra residual ([`spectral`]),
//! - the ε-sweep harness that measures convergence rates and checks every
//!   bound of the limit estimate ([`lab`]).

pub mod datum;
pub mod error;
pub mod grid;
pub mod kernel;
pub mod lab;
pub mod local;
pub mod nonlocal;
pub mod spectral;

pub(crate) mod quad;

pub use error::{Error, Result};
