pub mod algebra;
pub mod certificate;
pub mod error;
pub mod fullness;
pub mod haar;
pub mod ksearch;
pub mod matrix;
pub mod orthogonality;
pub mod spectral;
pub mod tower;

pub use error::{Error, Result};
pub use matrix::{ComplexMatrix, ToleranceConfig, C64};
