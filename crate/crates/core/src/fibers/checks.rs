use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{classify_boundary, decompose, record_curvatures};
use crate::accum::ExactSum;
use crate::error::{Error, Result};
use crate::kernel::{KernelClass, RadialKernel};
use crate::measure::{curvature_modulus, QuadratureOptions};
use crate::setrep::{CellIndex, VoxelSet};

/// Lower point of a fiber interval whose curvature exceeds that of a higher
/// point on the same interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub lower_value: f64,
    pub upper_value: f64,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderedCurvatureReport {
    pub tol: f64,
    /// Largest `H(lower) - H(upper)` over same-interval pairs (0 if ordered).
    pub max_violation: f64,
    pub worst: Option<Violation>,
    pub intervals: usize,
    pub points: usize,
    pub passed: bool,
}

/// `4 * modulus * h`, with the modulus measured on the input itself.
pub fn default_order_tolerance(set: &VoxelSet, kernel: &RadialKernel) -> Result<f64> {
    let m = curvature_modulus(set, kernel, 256, QuadratureOptions::default())?;
    Ok(4.0 * m.value * set.h())
}

/// Checks that curvature is non-decreasing upward along every fiber interval,
/// comparing every ordered pair of boundary points on the same interval.
pub fn check_ordered_curvature(set: &VoxelSet, kernel: &RadialKernel, tol: f64) -> Result<OrderedCurvatureReport> {
    let recs = classify_boundary(set, &decompose(set))?;
    let vals = record_curvatures(set, kernel, &recs, QuadratureOptions::default())?;
    let mut max_violation = 0.0;
    let mut worst = None;
    let mut intervals = 0;
    let mut start = 0;
    while start < recs.len() {
        let key = (&recs[start].column, recs[start].interval);
        let mut end = start;
        while end < recs.len() && (&recs[end].column, recs[end].interval) == key {
            end += 1;
        }
        intervals += 1;
        let mut best = start;
        for i in start + 1..end {
            let gap = vals[best] - vals[i];
            if gap > max_violation {
                max_violation = gap;
                worst = Some(Violation {
                    lower: recs[best].position.clone(),
                    upper: recs[i].position.clone(),
                    lower_value: vals[best],
                    upper_value: vals[i],
                    magnitude: gap,
                });
            }
            if vals[i] > vals[best] {
                best = i;
            }
        }
        start = end;
    }
    Ok(OrderedCurvatureReport {
        tol,
        max_violation,
        worst,
        intervals,
        points: recs.len(),
        passed: max_violation <= tol,
    })
}

/// Occupied cells within one cell of the sphere of radius `r` around sampled
/// boundary points (indicator kernels only).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellCheck {
    pub samples: usize,
    pub min_count: u64,
    /// `min_count * h^n / (2h)`, an estimate of the sphere area inside the set.
    pub min_measure: f64,
    pub worst_point: Option<Vec<f64>>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainReport {
    pub boundary_cells: usize,
    /// Boundary-cell volume; shrinks under refinement for admissible sets.
    pub boundary_volume: f64,
    /// Every column has finitely many intervals on a grid.
    pub finite_fibers: bool,
    pub max_intervals_per_column: usize,
    pub diameter: f64,
    pub horizon: f64,
    pub diameter_gate: bool,
    pub shell: Option<ShellCheck>,
    pub components: usize,
    pub connected: bool,
    pub passed: bool,
}

pub fn check_domain_hypotheses(set: &VoxelSet, kernel: &RadialKernel) -> Result<DomainReport> {
    if kernel.dim() != set.dim() {
        return Err(Error::domain("kernel and set dimensions differ"));
    }
    let boundary = set.boundary_cells();
    let decomp = decompose(set);
    let diameter = set.diameter()?;
    let r = kernel.horizon();
    let diameter_gate = diameter > 2.0 * r;
    let shell = (kernel.class() == KernelClass::Indicator).then(|| shell_check(set, r, &boundary));
    let components = set.connected_components();
    let connected = components == 1;
    let passed = diameter_gate && connected && shell.as_ref().is_none_or(|s| s.passed);
    Ok(DomainReport {
        boundary_cells: boundary.len(),
        boundary_volume: boundary.len() as f64 * set.cell_volume(),
        finite_fibers: true,
        max_intervals_per_column: decomp.columns.iter().map(|c| c.intervals.len()).max().unwrap_or(0),
        diameter,
        horizon: r,
        diameter_gate,
        shell,
        components,
        connected,
        passed,
    })
}

fn shell_check(set: &VoxelSet, r: f64, boundary: &[CellIndex]) -> ShellCheck {
    let h = set.h();
    let reach = ((r + h) / h).ceil() as i64;
    let (inner, outer) = ((r - h) / h, (r + h) / h);
    let mut offsets = Vec::new();
    let ys: &[i64] = if set.dim() == 2 { &[0] } else { &[] };
    let yr: Vec<i64> = if ys.is_empty() { (-reach..=reach).collect() } else { ys.to_vec() };
    for dx in -reach..=reach {
        for &dy in &yr {
            for dz in -reach..=reach {
                let d = ((dx * dx + dy * dy + dz * dz) as f64).sqrt();
                if d >= inner && d <= outer {
                    offsets.push([dx, dy, dz]);
                }
            }
        }
    }
    let stride = boundary.len().div_ceil(64).max(1);
    let mut min_count = u64::MAX;
    let mut worst_point = None;
    let mut samples = 0;
    for &g in boundary.iter().step_by(stride) {
        samples += 1;
        let n = offsets
            .iter()
            .filter(|o| set.get([g[0] + o[0], g[1] + o[1], g[2] + o[2]]))
            .count() as u64;
        if n < min_count {
            min_count = n;
            worst_point = Some(set.cell_center(g));
        }
    }
    if samples == 0 {
        min_count = 0;
    }
    ShellCheck {
        samples,
        min_count,
        min_measure: min_count as f64 * set.cell_volume() / (2.0 * h),
        worst_point,
        passed: samples > 0 && min_count > 0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NondegeneracyReport {
    /// Minimum sampled `int_A |J(x1 - y) - J(x2 - y)| dy / |x1 - x2|`.
    pub value: f64,
    pub pair: (Vec<f64>, Vec<f64>),
    pub pairs_evaluated: usize,
}

/// Samples `pairs` random distinct boundary-cell pairs (fixed seed) plus
/// nearest-in-order neighbour pairs, and returns the smallest quotient.
pub fn nondegeneracy_quotient(
    set: &VoxelSet,
    kernel: &RadialKernel,
    pairs: usize,
    seed: u64,
) -> Result<NondegeneracyReport> {
    if kernel.dim() != set.dim() {
        return Err(Error::domain("kernel and set dimensions differ"));
    }
    if pairs == 0 {
        return Err(Error::domain("at least one pair is required"));
    }
    let boundary = set.boundary_cells();
    if boundary.len() < 2 {
        return Err(Error::domain("fewer than two boundary cells"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut candidates = Vec::with_capacity(2 * pairs);
    while candidates.len() < pairs {
        let a = rng.random_range(0..boundary.len());
        let b = rng.random_range(0..boundary.len());
        if a != b {
            candidates.push((a, b));
        }
    }
    let stride = boundary.len().div_ceil(pairs).max(1);
    for a in (0..boundary.len() - 1).step_by(stride) {
        candidates.push((a, a + 1));
    }
    let mut best: Option<(f64, usize, usize)> = None;
    for &(a, b) in &candidates {
        let q = quotient(set, kernel, boundary[a], boundary[b]);
        if best.is_none_or(|(v, _, _)| q < v) {
            best = Some((q, a, b));
        }
    }
    let (value, a, b) = best.expect("at least one candidate");
    Ok(NondegeneracyReport {
        value,
        pair: (set.cell_center(boundary[a]), set.cell_center(boundary[b])),
        pairs_evaluated: candidates.len(),
    })
}

pub(crate) fn quotient(set: &VoxelSet, kernel: &RadialKernel, g1: CellIndex, g2: CellIndex) -> f64 {
    let h = set.h();
    let reach = (kernel.horizon() / h).ceil() as i64 + 1;
    let slots = set.slots();
    let in_box = |g: CellIndex, c: CellIndex| slots.iter().all(|&s| (g[s] - c[s]).abs() <= reach);
    let dist = |a: CellIndex, b: CellIndex| {
        let mut s = 0.0;
        for &k in slots {
            let d = (a[k] - b[k]) as f64 * h;
            s += d * d;
        }
        s.sqrt()
    };
    let mut acc = ExactSum::new();
    let mut visit = |c: CellIndex, skip: Option<CellIndex>| {
        let (lo, hi) = (set.lo(), set.hi());
        let mut rng = [(0i64, 0i64); 3];
        for &s in slots {
            rng[s] = ((c[s] - reach).max(lo[s]), (c[s] + reach).min(hi[s] - 1));
        }
        for x in rng[0].0..=rng[0].1 {
            for y in rng[1].0..=rng[1].1 {
                for z in rng[2].0..=rng[2].1 {
                    let g = [x, y, z];
                    if !set.get(g) || skip.is_some_and(|o| in_box(g, o)) {
                        continue;
                    }
                    let v = kernel.radial(dist(g, g1)) - kernel.radial(dist(g, g2));
                    acc.add(v.abs());
                }
            }
        }
    };
    visit(g1, None);
    visit(g2, Some(g1));
    acc.value() * set.cell_volume() / dist(g1, g2)
}
