//! Weakly compressible SPH with sub-particle-scale turbulence, turbulent
//! scalar transport and per-particle anaerobic digestion chemistry.

pub mod adm1;
pub mod cases;
pub mod config;
pub mod coupling;
pub mod error;
pub mod flow;
pub mod kernel;
pub mod neighbor;
pub mod output;
pub mod particles;
pub mod transport;
pub mod turbulence;

pub use error::{Error, Result};

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;
