//! Numerical simulation of the pseudo-Calabi flow on two concrete Kähler
//! geometries: the flat-class torus (complex dimension 1 or 2, Fourier
//! pseudo-spectral) and the axisymmetric round-class sphere (Legendre
//! collocation on Gauss–Legendre nodes).
//!
//! # Conventions
//!
//! All formulas use one fixed convention sheet:
//!
//! * `ω = (√−1/2) g_{ij̄} dzⁱ∧dz̄ʲ`, `ω_φ = ω + (√−1/2)∂∂̄φ`, so that
//!   `g_φ = g + φ_{ij̄}`.
//! * The complex Laplacian `Δ = g^{j̄i}∂_i∂_{j̄}` is half the Riemannian
//!   Laplacian. On the unit flat torus `Δ cos(2πx) = −2π² cos(2πx)`.
//! * `R_{ij̄} = −∂_i∂_{j̄} log det g`, `S = g^{j̄i}R_{ij̄}`.
//! * Integrals are taken against the volume form `ω^{[n]} = ωⁿ/n!`, which
//!   equals `det g` times the reference measure (Lebesgue measure on the
//!   torus, the round area form on the sphere).
//!
//! Tensor fields are stored in the frame of the reference metric (flat
//! coordinates on the torus, the round orthonormal frame on the sphere), so
//! the reference metric is the identity in every stored tensor.

// `!(x > 0.0)` style guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod elliptic;
pub mod exec;
pub mod flow;
pub mod functionals;
pub mod geometry;
pub mod random;
pub mod snapshot;
pub mod spectral;

mod error;
mod herm;

pub use error::{Error, Result};
pub use exec::ExecPolicy;
pub use geometry::{
    Backend, BackgroundGeometry, BackgroundSpec, Grid, GridSpec, HermitianTensorField,
    MetricState, PotentialSpec, ScalarField, Tensor20Field,
};
