//! Set representations: voxel occupancy grids and analytic shape expressions.

pub mod io;
mod shape;
mod voxel;

pub use shape::{Bounds, RasterOptions, ShapeSpec};
pub use voxel::{CellIndex, GridInfo, VoxelSet};
pub(crate) use voxel::runs;
