//! Design and verification toolkit for chromatic-dispersion-limited QKD
//! links built from two serial Mach-Zehnder interferometers.

pub mod bb84;
pub mod compensation;
pub mod config;
pub mod design;
pub mod error;
pub mod physics;
pub mod spectra;
pub mod svg;

pub use error::{Error, Result};
pub use physics::{derive, x_rho, DerivedQuantities, KappaConvention, LinkParams, MzConfig, Pair, SPEED_OF_LIGHT};
