//! Numerical toolkit for the mean-field Kuramoto model in double Fourier
//! variables u(t, l, ξ): linear stability of the incoherent state through the
//! Volterra/Penrose machinery, a nonlinear spectral simulator with its energy
//! functional, eigenmode decomposition, the pitchfork amplitude equation at
//! criticality, and partially locked stationary states.

pub mod distributions;
pub mod error;
pub mod locked;
pub mod meanfield;
pub mod particles;
pub mod penrose;
mod quad;
pub mod reduction;
pub mod volterra;

pub use distributions::{Family, VelocityDistribution};
pub use error::{Error, Result};

pub use num_complex::Complex64;
