//! Grid quadrature for nonlocal curvature and nonlocal perimeter.
//!
//! All integrals are cell sums: the occupancy is piecewise constant and the
//! kernel is sampled at the offset between the evaluation point and each cell
//! center (optionally averaged over `3^n` sub-cell points). Sampled weights are
//! rescaled so that the discrete kernel has exactly the analytic total mass;
//! with that, far-field values equal the total mass and `|H| <= total_mass`
//! holds exactly.
//!
//! Sums go through [`ExactSum`](crate::accum::ExactSum) or integer counters, so
//! every result is independent of summation order and thread count.

mod export;
mod modulus;
mod pairs;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::accum::ExactSum;
use crate::error::{Error, Result};
use crate::kernel::{KernelClass, RadialKernel};
use crate::setrep::{CellIndex, VoxelSet};

pub use export::{curvature_heatmap, write_field_csv, write_field_csv_to, Heatmap, HeatmapMapping};
pub use modulus::{curvature_modulus, ModulusReport};
pub use pairs::{
    pair_integral, perimeter, perimeter_decomposition, perimeter_with, PerimeterDecomposition,
};

/// Quadrature switches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureOptions {
    /// Average the kernel over `3^n` points per cell instead of the center.
    #[serde(default)]
    pub partial_volume: bool,
    /// Rescale sampled weights to the analytic total mass.
    #[serde(default = "yes")]
    pub normalize: bool,
}

fn yes() -> bool {
    true
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            partial_volume: false,
            normalize: true,
        }
    }
}

/// Sampled kernel around a point with a fixed fractional lattice offset.
#[derive(Debug)]
pub(crate) struct Stencil {
    /// Cell offsets relative to the base cell and their weights.
    pub offsets: Vec<[i64; 3]>,
    pub weights: Vec<f64>,
    /// All weights equal (indicator kernel sampled at centers).
    pub uniform: bool,
    /// Factor turning `h^n * sum(w * f)` into the normalized integral.
    pub factor: f64,
}

impl Stencil {
    pub(crate) fn build(
        set: &VoxelSet,
        kernel: &RadialKernel,
        opts: QuadratureOptions,
        frac: [f64; 3],
    ) -> Stencil {
        let h = set.h();
        let dim = set.dim();
        let reach = kernel.horizon() / h + if opts.partial_volume { 0.5 * (dim as f64).sqrt() } else { 0.0 };
        let active = set.slots();
        let mut ranges = [(0i64, 0i64); 3];
        for &s in active {
            ranges[s] = (
                (frac[s] - 0.5 - reach).ceil() as i64,
                (frac[s] - 0.5 + reach).floor() as i64,
            );
        }
        let sub: &[f64] = if opts.partial_volume {
            &[-1.0 / 3.0, 0.0, 1.0 / 3.0]
        } else {
            &[0.0]
        };
        let sub_count = (sub.len() as f64).powi(dim as i32);
        let mut offsets = Vec::new();
        let mut weights = Vec::new();
        let mut mass = ExactSum::new();
        for ox in ranges[0].0..=ranges[0].1 {
            for oy in ranges[1].0..=ranges[1].1 {
                for oz in ranges[2].0..=ranges[2].1 {
                    let o = [ox, oy, oz];
                    let mut d = [0.0; 3];
                    for &s in active {
                        d[s] = o[s] as f64 + 0.5 - frac[s];
                    }
                    let w = if opts.partial_volume {
                        let mut acc = ExactSum::new();
                        let ys: &[f64] = if dim == 2 { &[0.0] } else { sub };
                        for &a in sub {
                            for &b in ys {
                                for &c in sub {
                                    let q = [(d[0] + a) * h, (d[1] + b) * h, (d[2] + c) * h];
                                    acc.add(kernel.radial(norm(q)));
                                }
                            }
                        }
                        acc.value() / sub_count
                    } else {
                        kernel.radial(norm([d[0] * h, d[1] * h, d[2] * h]))
                    };
                    if w > 0.0 {
                        offsets.push(o);
                        weights.push(w);
                        mass.add(w);
                    }
                }
            }
        }
        let uniform = kernel.class() == KernelClass::Indicator && !opts.partial_volume;
        let hn = set.cell_volume();
        let factor = if opts.normalize && !weights.is_empty() {
            kernel.total_mass() / (hn * mass.value())
        } else {
            1.0
        };
        Stencil {
            offsets,
            weights,
            uniform,
            factor,
        }
    }
}

#[inline]
fn norm(q: [f64; 3]) -> f64 {
    (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt()
}

fn key(frac: [f64; 3]) -> [u64; 3] {
    [frac[0].to_bits(), frac[1].to_bits(), frac[2].to_bits()]
}

/// Evaluates `H_A(x) = int J(x - y) (chi_{A^c} - chi_A)(y) dy` at arbitrary
/// points, caching one stencil per distinct fractional lattice offset.
pub struct CurvatureEvaluator<'a> {
    set: &'a VoxelSet,
    kernel: &'a RadialKernel,
    opts: QuadratureOptions,
    cache: Mutex<HashMap<[u64; 3], Arc<Stencil>>>,
}

impl<'a> CurvatureEvaluator<'a> {
    pub fn new(set: &'a VoxelSet, kernel: &'a RadialKernel, opts: QuadratureOptions) -> Result<Self> {
        if kernel.dim() != set.dim() {
            return Err(Error::domain(format!(
                "kernel dimension {} does not match set dimension {}",
                kernel.dim(),
                set.dim()
            )));
        }
        Ok(Self {
            set,
            kernel,
            opts,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn set(&self) -> &VoxelSet {
        self.set
    }

    pub fn kernel(&self) -> &RadialKernel {
        self.kernel
    }

    pub fn options(&self) -> QuadratureOptions {
        self.opts
    }

    fn split(&self, p: [f64; 3]) -> (CellIndex, [f64; 3]) {
        let u = self.set.lattice_coords(p);
        let mut base = [0i64; 3];
        let mut frac = [0.5; 3];
        for &s in self.set.slots() {
            let b = u[s].floor();
            base[s] = b as i64;
            frac[s] = u[s] - b;
        }
        (base, frac)
    }

    pub(crate) fn stencil(&self, frac: [f64; 3]) -> Arc<Stencil> {
        let k = key(frac);
        if let Some(s) = self.cache.lock().unwrap().get(&k) {
            return s.clone();
        }
        let built = Arc::new(Stencil::build(self.set, self.kernel, self.opts, frac));
        self.cache.lock().unwrap().entry(k).or_insert(built).clone()
    }

    /// Curvature at a point given in slot layout.
    pub fn at_slots(&self, p: [f64; 3]) -> f64 {
        let (base, frac) = self.split(p);
        let st = self.stencil(frac);
        self.sum(&st, base)
    }

    pub fn at(&self, x: &[f64]) -> Result<f64> {
        Ok(self.at_slots(self.set.to_slots(x)?))
    }

    /// Curvature at a cell center.
    pub fn at_cell(&self, g: CellIndex) -> f64 {
        self.at_slots(self.set.center_slots(g))
    }

    fn sum(&self, st: &Stencil, base: CellIndex) -> f64 {
        let set = self.set;
        let hn = set.cell_volume();
        if st.uniform {
            let mut signed: i64 = 0;
            for o in &st.offsets {
                let g = [base[0] + o[0], base[1] + o[1], base[2] + o[2]];
                signed += if set.get(g) { -1 } else { 1 };
            }
            return st.factor * hn * st.weights.first().copied().unwrap_or(0.0) * signed as f64;
        }
        let mut acc = ExactSum::new();
        for (o, &w) in st.offsets.iter().zip(&st.weights) {
            let g = [base[0] + o[0], base[1] + o[1], base[2] + o[2]];
            acc.add(if set.get(g) { -w } else { w });
        }
        st.factor * hn * acc.value()
    }

    /// Curvature at many points; parallel across points, sequential within.
    pub fn field(&self, points: &[Vec<f64>]) -> Result<Vec<f64>> {
        let slots: Vec<[f64; 3]> = points
            .iter()
            .map(|x| self.set.to_slots(x))
            .collect::<Result<_>>()?;
        Ok(self.field_slots(&slots))
    }

    pub fn field_slots(&self, points: &[[f64; 3]]) -> Vec<f64> {
        // build stencils up front so workers only read the cache
        let mut fracs: Vec<[f64; 3]> = points.iter().map(|&p| self.split(p).1).collect();
        fracs.sort_by_key(|f| key(*f));
        fracs.dedup_by_key(|f| key(*f));
        fracs.par_iter().for_each(|&f| {
            self.stencil(f);
        });
        points.par_iter().map(|&p| self.at_slots(p)).collect()
    }

    pub fn cells(&self, cells: &[CellIndex]) -> Vec<f64> {
        let pts: Vec<[f64; 3]> = cells.iter().map(|&g| self.set.center_slots(g)).collect();
        self.field_slots(&pts)
    }
}

/// `H^J_A(x)` with default quadrature.
pub fn curvature_at(set: &VoxelSet, kernel: &RadialKernel, x: &[f64]) -> Result<f64> {
    CurvatureEvaluator::new(set, kernel, QuadratureOptions::default())?.at(x)
}

/// Sampled curvature values with their provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureField {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub kernel: String,
    pub horizon: f64,
    pub total_mass: f64,
    pub h: f64,
    pub quadrature: QuadratureOptions,
}

pub fn curvature_field(
    set: &VoxelSet,
    kernel: &RadialKernel,
    points: Vec<Vec<f64>>,
    opts: QuadratureOptions,
) -> Result<CurvatureField> {
    let ev = CurvatureEvaluator::new(set, kernel, opts)?;
    let values = ev.field(&points)?;
    Ok(CurvatureField {
        points,
        values,
        kernel: kernel.family_name().to_string(),
        horizon: kernel.horizon(),
        total_mass: kernel.total_mass(),
        h: set.h(),
        quadrature: opts,
    })
}

/// Errors unless every occupied cell is at least `margin` away from the edge
/// of the stored grid (so no part of a horizon ball is silently cut off).
pub fn check_padding(set: &VoxelSet, margin: f64) -> Result<()> {
    let Some((lo, hi)) = set.occupied_bounds() else {
        return Ok(());
    };
    let need = (margin / set.h() - 1e-9).ceil().max(0.0) as i64;
    let (glo, ghi) = (set.lo(), set.hi());
    for &s in set.slots() {
        let below = lo[s] - glo[s];
        let above = ghi[s] - 1 - hi[s];
        if below < need || above < need {
            return Err(Error::Padding(format!(
                "occupied cells come within {} cells of the grid edge along axis {s}; \
                 {need} cells ({margin}) are required",
                below.min(above)
            )));
        }
    }
    Ok(())
}
