//! Shared fixtures for the benchmarks.

use ordcurv::{RadialKernel, RasterOptions, ShapeSpec, VoxelSet};

pub const HORIZON: f64 = 0.4;

pub fn disk(h: f64) -> VoxelSet {
    ShapeSpec::ball(&[0.0, 0.0], 0.5)
        .rasterize(&RasterOptions::new(h, HORIZON + h), None)
        .expect("disk rasterizes")
}

pub fn ball3(h: f64) -> VoxelSet {
    ShapeSpec::ball(&[0.0, 0.0, 0.0], 0.5)
        .rasterize(&RasterOptions::new(h, HORIZON + h), None)
        .expect("ball rasterizes")
}

pub fn kernels(dim: usize) -> Vec<RadialKernel> {
    vec![
        RadialKernel::characteristic_ball(HORIZON, dim).expect("valid kernel"),
        RadialKernel::tent(HORIZON, dim).expect("valid kernel"),
        RadialKernel::smooth_bump(HORIZON, dim).expect("valid kernel"),
    ]
}
