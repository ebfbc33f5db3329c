//! Pseudospectral toolkit for the self-dual Chern-Simons-Schrodinger model
//! on a periodic square box.

pub mod error;
pub mod evolution;
mod fft;
pub mod field;
pub mod functionals;
pub mod gauge;
pub mod grid;
pub mod ground_state;
pub mod par;
pub mod spectral;

pub use error::{CoreError, Result};
pub use field::{ComplexField2D, VectorField2D};
pub use grid::{make_grid, Grid2D};
