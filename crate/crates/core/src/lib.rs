//! Meshless strong-form solver for small-strain elasto-plastic plane-strain problems.
//!
//! The pipeline: a [`geometry::Domain`] is discretized into a scattered
//! [`nodegen::NodeSet`], differential operators are approximated by RBF-FD
//! weights ([`approx::WeightStore`]), the Navier-Cauchy system is assembled and
//! factorized once ([`elastic`], [`linsys`]), and the plastic response is
//! recovered by incremental loading with Picard iterations ([`driver`]) using a
//! radial-return constitutive update ([`material`]). [`verify`] holds closed-form
//! references and front-extraction utilities.

pub mod approx;
pub mod driver;
pub mod error;
pub mod elastic;
pub mod geometry;
pub mod linsys;
pub mod material;
pub mod nodegen;
pub mod verify;

pub use error::{Error, Result};
