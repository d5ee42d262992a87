use serde::{Deserialize, Serialize};

use super::{CurvatureEvaluator, QuadratureOptions};
use crate::error::Result;
use crate::kernel::{unit_ball_volume, GradientBound, KernelClass, RadialKernel};
use crate::setrep::VoxelSet;

/// Empirical Lipschitz modulus of `H_A` near the boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusReport {
    /// Largest `|H(x) - H(y)| / |x - y|` over the sampled pairs.
    pub value: f64,
    /// Analytic bound for the continuum set.
    pub bound: f64,
    /// Grid allowance added to `bound` when judging `value`.
    pub allowance: f64,
    pub pairs: usize,
    pub worst: Option<(Vec<f64>, Vec<f64>)>,
}

impl ModulusReport {
    pub fn within_bound(&self) -> bool {
        self.value <= self.bound + self.allowance
    }
}

/// `2 sup|grad J| |A|` for Lipschitz kernels and `4 w_n r^(n-1)` (times the
/// kernel height) for the indicator.
pub fn lipschitz_bound(kernel: &RadialKernel, volume: f64) -> f64 {
    match (kernel.class(), kernel.gradient_sup()) {
        (KernelClass::Indicator, _) | (_, GradientBound::Unbounded) => {
            let n = kernel.dim();
            4.0 * unit_ball_volume(n) * kernel.horizon().powi(n as i32 - 1) * kernel.scale()
        }
        (_, GradientBound::Finite(g)) => 2.0 * g * volume,
    }
}

/// Samples up to `samples` boundary cells (evenly strided in lexicographic
/// order) and pairs each with cells `m` steps away along every axis, for
/// `m = 1, 2, 4, ...` while `m h <= r / 4`.
pub fn curvature_modulus(
    set: &VoxelSet,
    kernel: &RadialKernel,
    samples: usize,
    opts: QuadratureOptions,
) -> Result<ModulusReport> {
    let ev = CurvatureEvaluator::new(set, kernel, opts)?;
    let h = set.h();
    let boundary = set.boundary_cells();
    let stride = boundary.len().div_ceil(samples.max(1)).max(1);
    let mut steps = vec![1i64];
    while (2 * steps.last().unwrap()) as f64 * h <= kernel.horizon() / 4.0 {
        steps.push(2 * steps.last().unwrap());
    }
    let mut pairs = Vec::new();
    for &g in boundary.iter().step_by(stride) {
        for &s in set.slots() {
            for &m in &steps {
                let mut q = g;
                q[s] += m;
                pairs.push((g, q, m));
            }
        }
    }
    let mut cells: Vec<_> = pairs.iter().flat_map(|&(a, b, _)| [a, b]).collect();
    cells.sort_unstable();
    cells.dedup();
    let vals = ev.cells(&cells);
    let lookup = |g| vals[cells.binary_search(&g).unwrap()];
    let mut value = 0.0;
    let mut worst = None;
    for &(a, b, m) in &pairs {
        let q = (lookup(a) - lookup(b)).abs() / (m as f64 * h);
        if q > value {
            value = q;
            worst = Some((set.cell_center(a), set.cell_center(b)));
        }
    }
    let bound = lipschitz_bound(kernel, set.volume());
    Ok(ModulusReport {
        value,
        bound,
        allowance: grid_allowance(set, kernel),
        pairs: pairs.len(),
        worst,
    })
}

/// Slack for the difference between the rasterized and the continuum set:
/// proportional to `h / r` relative to the bound.
pub fn grid_allowance(set: &VoxelSet, kernel: &RadialKernel) -> f64 {
    let n = set.dim();
    let shell = unit_ball_volume(n) * kernel.horizon().powi(n as i32 - 1) * kernel.scale();
    let jmax = kernel.radial(0.0);
    2.0 * n as f64 * shell.max(jmax * kernel.horizon().powi(n as i32 - 1)) * set.h() / kernel.horizon()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setrep::{RasterOptions, ShapeSpec};

    #[test]
    fn disk_modulus_below_bound() {
        let disk = ShapeSpec::ball(&[0.0, 0.0], 0.7)
            .rasterize(&RasterOptions::new(1.0 / 64.0, 0.5), None)
            .unwrap();
        for k in [
            RadialKernel::characteristic_ball(0.4, 2).unwrap(),
            RadialKernel::tent(0.4, 2).unwrap(),
            RadialKernel::smooth_bump(0.4, 2).unwrap(),
        ] {
            let rep = curvature_modulus(&disk, &k, 64, QuadratureOptions::default()).unwrap();
            assert!(rep.pairs > 0);
            assert!(rep.value > 0.0);
            assert!(rep.within_bound(), "{} {rep:?}", k.family_name());
        }
    }
}
