//! Galerkin bases for the plate, the temperature and the fluid velocity.

pub mod fluid;
pub mod heat;
pub mod lifting;
pub mod matrices;
pub mod plate;

pub use fluid::{Component, FluidBasis, VectorSample};
pub use heat::HeatBasis;
pub use lifting::{harmonic_extension_grid, sine_extension, GridLifting, SeriesLifting};
pub use matrices::{assemble_coupled_matrices, CoupledMatrices};
pub use plate::{clamped_beam_root, PlateBasis, PlateTable};
