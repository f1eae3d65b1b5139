//! Semiclassical quantum mechanics as a canonical dynamical system on moment
//! phase space.
//!
//! The crate is organised bottom-up:
//!
//! * [`scalar`] and [`chart`]: forward-mode differentiation and canonical
//!   Poisson brackets of smooth functions on Darboux charts.
//! * [`algebra`]: Weyl-ordered central moments, their closed-form brackets,
//!   truncation and a Moyal-bracket oracle.
//! * [`realizations`]: Casimir–Darboux maps from moments to canonical charts.
//! * [`effective`], [`dynamics`], [`thermo`], [`effpot2`],
//!   [`reconstruction`]: physics built on top of the realizations.
//!
//! Data-parallel loops go through [`par`], which uses rayon when the
//! `parallel` feature is enabled and falls back to plain iteration otherwise.

#![allow(clippy::needless_range_loop)]

pub mod algebra;
pub mod chart;
pub mod dynamics;
pub mod effective;
pub mod effpot2;
pub mod error;
pub mod optimize;
pub mod par;
pub mod quadrature;
pub mod realizations;
pub mod reconstruction;
pub mod scalar;
pub mod special;
pub mod thermo;

pub use algebra::{MomentIndex, MomentPolynomial, MomentState};
pub use chart::{CanonicalChart, ChartExpr, ChartFunction, ChartPoint};
pub use error::{Error, Result};
pub use par::Exec;
pub use realizations::{Realization, RealizationKind};
pub use scalar::{Dual, Scalar, Taylor};
