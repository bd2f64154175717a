//! Recovery of sparse complex measures on the torus from noisy low-frequency
//! Fourier samples, by total-variation regularization.

pub mod certificate;
pub mod error;
pub mod error_analysis;
pub mod instances;
pub mod kernels;
pub mod noise;
pub mod solvers;
pub mod suites;
pub mod torus;

pub use error::{Error, Result};
pub use torus::{DiscreteMeasure, Spike, TorusPoint, TrigPoly};
