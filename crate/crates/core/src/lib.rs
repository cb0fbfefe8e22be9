//! Electromagnetic energy transport in heterogeneous, randomly fluctuating
//! bianisotropic media at high frequency.
//!
//! The crate is layered bottom-up:
//!
//! - [`dispersion`]: Maxwell symbol, optical response, mode decompositions.
//! - [`raytrace`]: bicharacteristic rays with coherence-matrix transport.
//! - [`media`]: power spectral densities of the random fluctuation field.
//! - [`scattering`]: differential and total scattering cross-sections.
//! - [`rte_mc`]: Monte Carlo solver for the matrix radiative transfer equations.
//! - [`wigner_lab`]: 1D Wigner transform checks and the Kirchhoff spherical mean.
//! - [`cli`]: scenario files, subcommands and run artifacts.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dispersion;
pub mod error;
pub mod io;
pub mod linalg;
pub mod media;
pub mod quadrature;
pub mod raytrace;
pub mod rte_mc;
pub mod scattering;
pub mod wigner_lab;

pub use error::{Error, Result};
pub use linalg::C64;
