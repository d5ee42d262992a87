//! Double integrals `int_S int_T J(x - y)` over pairs of cell sets, computed
//! from exact integer counts of cell pairs at each stencil offset.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CurvatureEvaluator, QuadratureOptions, Stencil};
use crate::accum::ExactSum;
use crate::error::{Error, Result};
use crate::kernel::RadialKernel;
use crate::setrep::{runs, VoxelSet};

type Runs = Vec<(i64, i64)>;

/// Occupied runs keyed by global column index, in `frame`'s lattice.
fn columns(set: &VoxelSet, shift: [i64; 3]) -> HashMap<[i64; 2], Runs> {
    let lo = set.lo();
    let ext = set.ext();
    let occ = set.occupancy();
    let mut out = HashMap::new();
    for i in 0..ext[0] {
        for j in 0..ext[1] {
            let base = (i * ext[1] + j) * ext[2];
            let r = runs(&occ[base..base + ext[2]], lo[2] + shift[2]);
            if !r.is_empty() {
                out.insert([lo[0] + shift[0] + i as i64, lo[1] + shift[1] + j as i64], r);
            }
        }
    }
    out
}

/// Number of `k` with `k` in some run of `a` and `k + dz` in some run of `b`.
fn overlap(a: &[(i64, i64)], b: &[(i64, i64)], dz: i64) -> u64 {
    let (mut i, mut j, mut n) = (0, 0, 0u64);
    while i < a.len() && j < b.len() {
        let (a0, a1) = a[i];
        let (b0, b1) = (b[j].0 - dz, b[j].1 - dz);
        let lo = a0.max(b0);
        let hi = a1.min(b1);
        if hi >= lo {
            n += (hi - lo + 1) as u64;
        }
        if a1 < b1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    n
}

/// `#{g in S : g + o in T}` for every stencil offset `o`.
fn cross_counts(s: &VoxelSet, t: &VoxelSet, st: &Stencil) -> Result<Vec<u64>> {
    let off = s.lattice_offset(t)?;
    let cs = columns(s, [0; 3]);
    let ct = columns(t, off);
    let mut groups: BTreeMap<[i64; 2], Vec<(i64, usize)>> = BTreeMap::new();
    for (e, o) in st.offsets.iter().enumerate() {
        groups.entry([o[0], o[1]]).or_default().push((o[2], e));
    }
    let groups: Vec<_> = groups.into_iter().collect();
    let partial: Vec<Vec<(usize, u64)>> = groups
        .par_iter()
        .map(|(dxy, dzs)| {
            let mut acc = vec![0u64; dzs.len()];
            for (c, ra) in &cs {
                if let Some(rb) = ct.get(&[c[0] + dxy[0], c[1] + dxy[1]]) {
                    for (slot, &(dz, _)) in dzs.iter().enumerate() {
                        acc[slot] += overlap(ra, rb, dz);
                    }
                }
            }
            dzs.iter().map(|&(_, e)| e).zip(acc).collect()
        })
        .collect();
    let mut counts = vec![0u64; st.offsets.len()];
    for part in partial {
        for (e, n) in part {
            counts[e] = n;
        }
    }
    Ok(counts)
}

/// `sum_o w_o * n_o` with exact accumulation.
fn weigh(st: &Stencil, counts: impl Iterator<Item = u64>) -> f64 {
    if st.uniform {
        let total: u128 = counts.map(u128::from).sum();
        return st.weights.first().copied().unwrap_or(0.0) * total as f64;
    }
    let mut acc = ExactSum::new();
    for (w, n) in st.weights.iter().zip(counts) {
        acc.add(w * n as f64);
    }
    acc.value()
}

fn center_stencil(set: &VoxelSet, kernel: &RadialKernel, opts: QuadratureOptions) -> Result<Stencil> {
    if kernel.dim() != set.dim() {
        return Err(Error::domain(format!(
            "kernel dimension {} does not match set dimension {}",
            kernel.dim(),
            set.dim()
        )));
    }
    Ok(Stencil::build(set, kernel, opts, [0.5; 3]))
}

/// `int_S int_T J(x - y) dy dx`; both sets must share one lattice.
pub fn pair_integral(
    s: &VoxelSet,
    t: &VoxelSet,
    kernel: &RadialKernel,
    opts: QuadratureOptions,
) -> Result<f64> {
    let st = center_stencil(s, kernel, opts)?;
    let counts = cross_counts(s, t, &st)?;
    let hn = s.cell_volume();
    Ok(st.factor * hn * hn * weigh(&st, counts.into_iter()))
}

/// Nonlocal perimeter `int_A int_{A^c} J(x - y) dy dx` with default quadrature.
pub fn perimeter(set: &VoxelSet, kernel: &RadialKernel) -> Result<f64> {
    perimeter_with(set, kernel, QuadratureOptions::default())
}

pub fn perimeter_with(set: &VoxelSet, kernel: &RadialKernel, opts: QuadratureOptions) -> Result<f64> {
    let st = center_stencil(set, kernel, opts)?;
    let inside = cross_counts(set, set, &st)?;
    let n = set.occupied_count() as u64;
    let hn = set.cell_volume();
    Ok(st.factor * hn * hn * weigh(&st, inside.into_iter().map(|c| n - c)))
}

/// Split of `P(A_t) - P(A)` for `A_t = A + t e_n` into curvature integrals over
/// the removed part `F = A \ A_t` and the added part `E = A_t \ A`, plus the
/// kernel interactions between them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerimeterDecomposition {
    pub t: f64,
    /// `int_F H_A`
    pub curvature_removed: f64,
    /// `int_E H_A`
    pub curvature_added: f64,
    /// `2 int_E int_F J`
    pub cross: f64,
    /// `int_F int_F J`
    pub removed_self: f64,
    /// `int_E int_E J`
    pub added_self: f64,
    pub perimeter_before: f64,
    pub perimeter_after: f64,
}

impl PerimeterDecomposition {
    pub fn terms(&self) -> [f64; 5] {
        [
            self.curvature_removed,
            self.curvature_added,
            self.cross,
            self.removed_self,
            self.added_self,
        ]
    }

    /// Right-hand side assembled from the five terms.
    pub fn assembled(&self) -> f64 {
        -self.curvature_removed + self.curvature_added + self.cross
            - self.removed_self
            - self.added_self
    }

    pub fn change(&self) -> f64 {
        self.perimeter_after - self.perimeter_before
    }

    /// `|assembled - change|`, which vanishes up to rounding.
    pub fn residual(&self) -> f64 {
        (self.assembled() - self.change()).abs()
    }

    /// Magnitude used to judge the residual.
    pub fn scale(&self) -> f64 {
        self.terms()
            .iter()
            .chain([self.perimeter_before, self.perimeter_after].iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

pub fn perimeter_decomposition(
    set: &VoxelSet,
    kernel: &RadialKernel,
    t: f64,
    opts: QuadratureOptions,
) -> Result<PerimeterDecomposition> {
    let moved = set.translate_last_axis(t)?;
    let (added, removed) = moved.relative_complements(set)?;
    let ev = CurvatureEvaluator::new(set, kernel, opts)?;
    let hn = set.cell_volume();
    let integrate = |part: &VoxelSet| -> f64 {
        let cells: Vec<_> = part.occupied_cells().collect();
        let vals = ev.cells(&cells);
        hn * crate::accum::exact_sum(vals)
    };
    Ok(PerimeterDecomposition {
        t,
        curvature_removed: integrate(&removed),
        curvature_added: integrate(&added),
        cross: 2.0 * pair_integral(&added, &removed, kernel, opts)?,
        removed_self: pair_integral(&removed, &removed, kernel, opts)?,
        added_self: pair_integral(&added, &added, kernel, opts)?,
        perimeter_before: perimeter_with(set, kernel, opts)?,
        perimeter_after: perimeter_with(&moved, kernel, opts)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setrep::{RasterOptions, ShapeSpec};

    fn brute_pair(s: &VoxelSet, t: &VoxelSet, k: &RadialKernel) -> f64 {
        let hn = s.cell_volume();
        let mut acc = ExactSum::new();
        let tc: Vec<_> = t.occupied_cells().map(|g| t.cell_center(g)).collect();
        for g in s.occupied_cells() {
            let x = s.cell_center(g);
            for y in &tc {
                let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
                acc.add(k.eval(&d).unwrap());
            }
        }
        acc.value() * hn * hn
    }

    fn raw() -> QuadratureOptions {
        QuadratureOptions {
            partial_volume: false,
            normalize: false,
        }
    }

    #[test]
    fn pair_integral_matches_brute_force() {
        let opts = RasterOptions::new(1.0 / 16.0, 0.3);
        let a = ShapeSpec::ball(&[0.0, 0.1], 0.45).rasterize(&opts, None).unwrap();
        let b = ShapeSpec::cuboid(&[-0.2, -0.3], &[0.4, 0.2]).rasterize(&opts, None).unwrap();
        for k in [
            RadialKernel::characteristic_ball(0.3, 2).unwrap(),
            RadialKernel::smooth_bump(0.3, 2).unwrap(),
        ] {
            let fast = pair_integral(&a, &b, &k, raw()).unwrap();
            let slow = brute_pair(&a, &b, &k);
            assert!((fast - slow).abs() <= 1e-12 * slow, "{fast} vs {slow}");
        }
    }

    #[test]
    fn perimeter_matches_complement_pairs() {
        let opts = RasterOptions::new(1.0 / 16.0, 0.4);
        let a = ShapeSpec::ellipsoid(&[0.0, 0.0, 0.0], &[0.4, 0.3, 0.25]).rasterize(&opts, None).unwrap();
        let k = RadialKernel::tent(0.25, 3).unwrap();
        let mut comp = a.clone();
        for g in a.occupied_cells().collect::<Vec<_>>() {
            comp.set(g, false).unwrap();
        }
        let lo = a.lo();
        let ext = a.ext();
        for i in 0..ext[0] as i64 {
            for j in 0..ext[1] as i64 {
                for kk in 0..ext[2] as i64 {
                    let g = [lo[0] + i, lo[1] + j, lo[2] + kk];
                    comp.set(g, !a.get(g)).unwrap();
                }
            }
        }
        let p = perimeter_with(&a, &k, raw()).unwrap();
        let slow = brute_pair(&a, &comp, &k);
        assert!((p - slow).abs() <= 1e-12 * slow, "{p} vs {slow}");
    }

    #[test]
    fn decomposition_closes() {
        let opts = RasterOptions::new(1.0 / 32.0, 0.6);
        let a = ShapeSpec::union(vec![
            ShapeSpec::ball(&[0.0, 0.0], 0.5),
            ShapeSpec::cuboid(&[0.1, -0.7], &[0.6, 0.0]),
        ])
        .rasterize(&opts, None)
        .unwrap();
        for k in [
            RadialKernel::characteristic_ball(0.3, 2).unwrap(),
            RadialKernel::tent(0.3, 2).unwrap(),
        ] {
            for t in [1.0 / 32.0, 5.0 / 32.0] {
                let d = perimeter_decomposition(&a, &k, t, QuadratureOptions::default()).unwrap();
                assert!(d.residual() <= 1e-10 * d.scale(), "{d:?}");
                assert!(d.change().abs() <= 1e-12 * d.perimeter_before);
            }
        }
    }

    #[test]
    fn opposite_sign_convention_does_not_close() {
        let opts = RasterOptions::new(1.0 / 32.0, 0.6);
        let a = ShapeSpec::ball(&[0.0, 0.0], 0.5).rasterize(&opts, None).unwrap();
        let k = RadialKernel::tent(0.3, 2).unwrap();
        let d = perimeter_decomposition(&a, &k, 4.0 / 32.0, QuadratureOptions::default()).unwrap();
        let flipped = d.curvature_removed - d.curvature_added + d.cross - d.removed_self - d.added_self;
        assert!((flipped - d.change()).abs() > 1e-3 * d.scale());
    }
}
