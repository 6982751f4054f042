//! Numerical laboratory for the spherically symmetric alpha^2-dynamo:
//! discretized operator, spectra and branch tracking, scalar Darboux
//! transformations, and the matrix-Darboux obstruction checks.

pub mod darboux;
pub mod error;
pub mod grid;
pub mod mat2;
pub mod nogo;
pub mod operator;
pub mod profile;
pub mod spectral;
pub mod spline;
pub mod tracker;

pub use error::{Error, Result};
pub use grid::{build_grid, RadialGrid};
pub use operator::{assemble, DynamoMatrix, PencilCoefficients};
pub use profile::AlphaProfile;
pub use spectral::{classify_pairs, eigen, jordan_probe, PairTag, Spectrum};
