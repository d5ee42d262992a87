//! Nonlocal perimeter and curvature of voxel sets with integrable radial
//! kernels, ordered-curvature hypothesis checks, and a moving-plane sweep that
//! locates symmetry hyperplanes.

pub mod accum;
pub mod error;
pub mod fibers;
pub mod harness;
pub mod kernel;
pub mod measure;
pub mod moving_plane;
pub mod setrep;

pub use error::{Error, Result};
pub use harness::{CheckRecord, Status, VerificationReport};
pub use kernel::{GradientBound, KernelClass, KernelFamily, RadialKernel};
pub use measure::{CurvatureField, QuadratureOptions};
pub use setrep::{CellIndex, RasterOptions, ShapeSpec, VoxelSet};
