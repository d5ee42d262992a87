//! Analytic shape expressions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::voxel::{slot, VoxelSet};
use crate::error::{Error, Result};

/// Expression tree over primitive solids. Membership is closed: boundary
/// points belong to the shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeSpec {
    Empty,
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Ellipsoid {
        center: Vec<f64>,
        semi_axes: Vec<f64>,
    },
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    /// `{x : x[axis] <= at}` (or `>=` when `below` is false). Unbounded on its
    /// own; useful inside intersections.
    HalfSpace {
        axis: usize,
        at: f64,
        below: bool,
    },
    Union(Vec<ShapeSpec>),
    Intersection(Vec<ShapeSpec>),
    Difference(Box<ShapeSpec>, Box<ShapeSpec>),
    Translate {
        offset: Vec<f64>,
        shape: Box<ShapeSpec>,
    },
    /// Mirror image across the hyperplane `x[axis] = at`.
    Reflect {
        axis: usize,
        at: f64,
        shape: Box<ShapeSpec>,
    },
}

/// Axis-aligned bounds; infinite entries mark unbounded directions.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Bounds {
    fn full(dim: usize) -> Self {
        Self {
            lo: vec![f64::NEG_INFINITY; dim],
            hi: vec![f64::INFINITY; dim],
        }
    }

    fn union(&self, o: &Bounds) -> Bounds {
        Bounds {
            lo: self.lo.iter().zip(&o.lo).map(|(a, b)| a.min(*b)).collect(),
            hi: self.hi.iter().zip(&o.hi).map(|(a, b)| a.max(*b)).collect(),
        }
    }

    fn intersect(&self, o: &Bounds) -> Option<Bounds> {
        let b = Bounds {
            lo: self.lo.iter().zip(&o.lo).map(|(a, b)| a.max(*b)).collect(),
            hi: self.hi.iter().zip(&o.hi).map(|(a, b)| a.min(*b)).collect(),
        };
        b.lo.iter().zip(&b.hi).all(|(l, h)| l <= h).then_some(b)
    }

    pub fn is_finite(&self) -> bool {
        self.lo.iter().chain(&self.hi).all(|v| v.is_finite())
    }
}

/// Rasterization controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RasterOptions {
    pub h: f64,
    /// Empty margin added around the shape's bounding box.
    pub padding: f64,
    /// Vote over the `2^n` sub-cell centers instead of sampling the cell center.
    #[serde(default)]
    pub supersample: bool,
}

impl RasterOptions {
    pub fn new(h: f64, padding: f64) -> Self {
        Self {
            h,
            padding,
            supersample: false,
        }
    }
}

impl ShapeSpec {
    pub fn ball(center: &[f64], radius: f64) -> Self {
        ShapeSpec::Ball {
            center: center.to_vec(),
            radius,
        }
    }

    pub fn ellipsoid(center: &[f64], semi_axes: &[f64]) -> Self {
        ShapeSpec::Ellipsoid {
            center: center.to_vec(),
            semi_axes: semi_axes.to_vec(),
        }
    }

    pub fn cuboid(lo: &[f64], hi: &[f64]) -> Self {
        ShapeSpec::Box {
            lo: lo.to_vec(),
            hi: hi.to_vec(),
        }
    }

    pub fn union(parts: Vec<ShapeSpec>) -> Self {
        ShapeSpec::Union(parts)
    }

    pub fn intersection(parts: Vec<ShapeSpec>) -> Self {
        ShapeSpec::Intersection(parts)
    }

    pub fn difference(a: ShapeSpec, b: ShapeSpec) -> Self {
        ShapeSpec::Difference(Box::new(a), Box::new(b))
    }

    pub fn translate(self, offset: &[f64]) -> Self {
        ShapeSpec::Translate {
            offset: offset.to_vec(),
            shape: Box::new(self),
        }
    }

    pub fn reflect(self, axis: usize, at: f64) -> Self {
        ShapeSpec::Reflect {
            axis,
            at,
            shape: Box::new(self),
        }
    }

    /// Spatial dimension, or `None` for expressions without any primitive
    /// carrying coordinates.
    pub fn dim(&self) -> Result<Option<usize>> {
        fn merge(a: Option<usize>, b: Option<usize>) -> Result<Option<usize>> {
            match (a, b) {
                (Some(x), Some(y)) if x != y => Err(Error::InvalidShape(format!(
                    "mixed dimensions {x} and {y}"
                ))),
                (Some(x), _) | (_, Some(x)) => Ok(Some(x)),
                _ => Ok(None),
            }
        }
        let d = match self {
            ShapeSpec::Empty | ShapeSpec::HalfSpace { .. } => None,
            ShapeSpec::Ball { center, radius } => {
                if !(radius.is_finite() && *radius >= 0.0) {
                    return Err(Error::InvalidShape(format!("bad ball radius {radius}")));
                }
                Some(center.len())
            }
            ShapeSpec::Ellipsoid { center, semi_axes } => {
                if center.len() != semi_axes.len() {
                    return Err(Error::InvalidShape("ellipsoid axes mismatch".into()));
                }
                if semi_axes.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
                    return Err(Error::InvalidShape("ellipsoid semi-axes must be positive".into()));
                }
                Some(center.len())
            }
            ShapeSpec::Box { lo, hi } => {
                if lo.len() != hi.len() {
                    return Err(Error::InvalidShape("box corners mismatch".into()));
                }
                Some(lo.len())
            }
            ShapeSpec::Union(parts) | ShapeSpec::Intersection(parts) => {
                let mut d = None;
                for p in parts {
                    d = merge(d, p.dim()?)?;
                }
                d
            }
            ShapeSpec::Difference(a, b) => merge(a.dim()?, b.dim()?)?,
            ShapeSpec::Translate { offset, shape } => merge(Some(offset.len()), shape.dim()?)?,
            ShapeSpec::Reflect { shape, .. } => shape.dim()?,
        };
        if let Some(n) = d {
            if n == 0 {
                return Err(Error::InvalidShape("zero-dimensional coordinates".into()));
            }
        }
        Ok(d)
    }

    /// Closed membership predicate.
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            ShapeSpec::Empty => false,
            ShapeSpec::Ball { center, radius } => {
                let d2: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                d2 <= radius * radius
            }
            ShapeSpec::Ellipsoid { center, semi_axes } => {
                let q: f64 = x
                    .iter()
                    .zip(center)
                    .zip(semi_axes)
                    .map(|((a, c), s)| ((a - c) / s).powi(2))
                    .sum();
                q <= 1.0
            }
            ShapeSpec::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(a, (l, h))| l <= a && a <= h),
            ShapeSpec::HalfSpace { axis, at, below } => {
                let v = x[*axis];
                if *below {
                    v <= *at
                } else {
                    v >= *at
                }
            }
            ShapeSpec::Union(parts) => parts.iter().any(|p| p.contains(x)),
            ShapeSpec::Intersection(parts) => {
                !parts.is_empty() && parts.iter().all(|p| p.contains(x))
            }
            ShapeSpec::Difference(a, b) => a.contains(x) && !b.contains(x),
            ShapeSpec::Translate { offset, shape } => {
                let y: Vec<f64> = x.iter().zip(offset).map(|(a, o)| a - o).collect();
                shape.contains(&y)
            }
            ShapeSpec::Reflect { axis, at, shape } => {
                let mut y = x.to_vec();
                y[*axis] = 2.0 * at - y[*axis];
                shape.contains(&y)
            }
        }
    }

    /// Bounding box, `None` when the expression is trivially empty.
    pub fn bounds(&self, dim: usize) -> Option<Bounds> {
        match self {
            ShapeSpec::Empty => None,
            ShapeSpec::Ball { center, radius } => Some(Bounds {
                lo: center.iter().map(|c| c - radius).collect(),
                hi: center.iter().map(|c| c + radius).collect(),
            }),
            ShapeSpec::Ellipsoid { center, semi_axes } => Some(Bounds {
                lo: center.iter().zip(semi_axes).map(|(c, a)| c - a).collect(),
                hi: center.iter().zip(semi_axes).map(|(c, a)| c + a).collect(),
            }),
            ShapeSpec::Box { lo, hi } => Bounds {
                lo: lo.clone(),
                hi: hi.clone(),
            }
            .intersect(&Bounds::full(dim)),
            ShapeSpec::HalfSpace { axis, at, below } => {
                let mut b = Bounds::full(dim);
                if *below {
                    b.hi[*axis] = *at;
                } else {
                    b.lo[*axis] = *at;
                }
                Some(b)
            }
            ShapeSpec::Union(parts) => parts
                .iter()
                .filter_map(|p| p.bounds(dim))
                .reduce(|a, b| a.union(&b)),
            ShapeSpec::Intersection(parts) => {
                let mut acc = Bounds::full(dim);
                if parts.is_empty() {
                    return None;
                }
                for p in parts {
                    acc = acc.intersect(&p.bounds(dim)?)?;
                }
                Some(acc)
            }
            ShapeSpec::Difference(a, _) => a.bounds(dim),
            ShapeSpec::Translate { offset, shape } => shape.bounds(dim).map(|b| Bounds {
                lo: b.lo.iter().zip(offset).map(|(l, o)| l + o).collect(),
                hi: b.hi.iter().zip(offset).map(|(h, o)| h + o).collect(),
            }),
            ShapeSpec::Reflect { axis, at, shape } => shape.bounds(dim).map(|mut b| {
                let (l, h) = (b.lo[*axis], b.hi[*axis]);
                b.lo[*axis] = 2.0 * at - h;
                b.hi[*axis] = 2.0 * at - l;
                b
            }),
        }
    }

    fn check_axes(&self, dim: usize) -> Result<()> {
        match self {
            ShapeSpec::HalfSpace { axis, at, .. } | ShapeSpec::Reflect { axis, at, .. }
                if *axis >= dim || !at.is_finite() =>
            {
                return Err(Error::InvalidShape(format!(
                    "axis {axis} / offset {at} invalid in dimension {dim}"
                )));
            }
            _ => {}
        }
        match self {
            ShapeSpec::Union(p) | ShapeSpec::Intersection(p) => {
                p.iter().try_for_each(|s| s.check_axes(dim))
            }
            ShapeSpec::Difference(a, b) => {
                a.check_axes(dim)?;
                b.check_axes(dim)
            }
            ShapeSpec::Translate { shape, .. } | ShapeSpec::Reflect { shape, .. } => {
                shape.check_axes(dim)
            }
            _ => Ok(()),
        }
    }

    /// Rasterizes onto the lattice anchored at the world origin. A cell is
    /// occupied iff its center (or the majority of its sub-cell centers when
    /// supersampling) lies in the shape. `dim` is needed only for expressions
    /// without coordinates (e.g. [`ShapeSpec::Empty`]).
    pub fn rasterize(&self, opts: &RasterOptions, dim: Option<usize>) -> Result<VoxelSet> {
        let dim = match (self.dim()?, dim) {
            (Some(a), Some(b)) if a != b => {
                return Err(Error::InvalidShape(format!(
                    "shape has dimension {a}, requested {b}"
                )))
            }
            (Some(a), _) | (None, Some(a)) => a,
            (None, None) => 2,
        };
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidShape(format!("dimension {dim} not supported")));
        }
        self.check_axes(dim)?;
        let h = opts.h;
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::domain(format!("cell size must be positive, got {h}")));
        }
        if !(opts.padding.is_finite() && opts.padding >= 0.0) {
            return Err(Error::domain(format!("padding must be non-negative, got {}", opts.padding)));
        }
        let origin = vec![0.0; dim];
        let Some(b) = self.bounds(dim) else {
            let m = (opts.padding / h).ceil() as i64;
            let ext = vec![(2 * m).max(1) as usize; dim];
            return VoxelSet::empty(dim, h, &origin, &vec![-m; dim], &ext);
        };
        if !b.is_finite() {
            return Err(Error::InvalidShape(
                "shape is unbounded; intersect it with a bounded solid".into(),
            ));
        }
        let lo: Vec<i64> = b
            .lo
            .iter()
            .map(|l| ((l - opts.padding) / h).floor() as i64)
            .collect();
        let hi: Vec<i64> = b
            .hi
            .iter()
            .map(|u| ((u + opts.padding) / h).ceil() as i64)
            .collect();
        let ext: Vec<usize> = lo.iter().zip(&hi).map(|(l, u)| (u - l).max(1) as usize).collect();
        let mut set = VoxelSet::empty(dim, h, &origin, &lo, &ext)?;

        let [nx, ny, nz] = set.ext();
        let slo = set.lo();
        let supersample = opts.supersample;
        let occ: Vec<bool> = (0..nx * ny)
            .into_par_iter()
            .flat_map_iter(|col| {
                let (i, j) = (col / ny, col % ny);
                let mut x = vec![0.0; dim];
                (0..nz)
                    .map(|k| {
                        let g = [slo[0] + i as i64, slo[1] + j as i64, slo[2] + k as i64];
                        for a in 0..dim {
                            x[a] = (g[slot(dim, a)] as f64 + 0.5) * h;
                        }
                        if supersample {
                            self.majority_vote(&x, h)
                        } else {
                            self.contains(&x)
                        }
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        set = VoxelSet::from_parts(dim, h, set.origin_slots(), slo, [nx, ny, nz], occ);
        Ok(set)
    }

    fn majority_vote(&self, center: &[f64], h: f64) -> bool {
        let dim = center.len();
        let n = 1usize << dim;
        let mut votes = 0;
        let mut p = center.to_vec();
        for mask in 0..n {
            for a in 0..dim {
                let sign = if mask >> a & 1 == 1 { 1.0 } else { -1.0 };
                p[a] = center[a] + sign * 0.25 * h;
            }
            votes += usize::from(self.contains(&p));
        }
        match (2 * votes).cmp(&n) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => self.contains(center),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn disk_area_first_order() {
        let disk = ShapeSpec::ball(&[0.0, 0.0], 1.0);
        let set = disk.rasterize(&RasterOptions::new(0.01, 0.0), None).unwrap();
        assert!((set.volume() - PI).abs() < 0.02 * PI);
    }

    #[test]
    fn empty_expression() {
        let set = ShapeSpec::Empty
            .rasterize(&RasterOptions::new(0.1, 0.5), None)
            .unwrap();
        assert_eq!(set.volume(), 0.0);
        let set = ShapeSpec::Union(vec![])
            .rasterize(&RasterOptions::new(0.1, 0.5), Some(3))
            .unwrap();
        assert_eq!(set.dim(), 3);
        assert!(set.is_empty());
    }

    #[test]
    fn disjoint_union_volume_adds() {
        let a = ShapeSpec::ball(&[-1.5, 0.2], 0.7);
        let b = ShapeSpec::ellipsoid(&[1.2, -0.3], &[0.5, 0.9]);
        let o = RasterOptions::new(1.0 / 64.0, 0.1);
        let u = ShapeSpec::union(vec![a.clone(), b.clone()]).rasterize(&o, None).unwrap();
        let va = a.rasterize(&o, None).unwrap().volume();
        let vb = b.rasterize(&o, None).unwrap().volume();
        assert_eq!(u.volume(), va + vb);
    }

    #[test]
    fn aligned_box_is_exact() {
        let k = 20;
        let b = ShapeSpec::cuboid(&[0.0, 0.0], &[1.0, 1.0]);
        let set = b.rasterize(&RasterOptions::new(1.0 / k as f64, 0.25), None).unwrap();
        assert_eq!(set.occupied_count(), k * k);
        let b3 = ShapeSpec::cuboid(&[0.0; 3], &[1.0; 3]);
        let set = b3.rasterize(&RasterOptions::new(0.125, 0.0), None).unwrap();
        assert_eq!(set.volume(), 1.0);
    }

    #[test]
    fn unbounded_is_rejected() {
        let half = ShapeSpec::HalfSpace {
            axis: 1,
            at: 0.0,
            below: true,
        };
        assert!(matches!(
            half.rasterize(&RasterOptions::new(0.1, 0.0), Some(2)),
            Err(Error::InvalidShape(_))
        ));
        let slab = ShapeSpec::intersection(vec![half, ShapeSpec::cuboid(&[-1.0, -1.0], &[1.0, 1.0])]);
        let set = slab.rasterize(&RasterOptions::new(0.125, 0.0), None).unwrap();
        assert_eq!(set.volume(), 2.0);
    }

    #[test]
    fn mixed_dimensions_rejected() {
        let bad = ShapeSpec::union(vec![
            ShapeSpec::ball(&[0.0, 0.0], 1.0),
            ShapeSpec::ball(&[0.0, 0.0, 0.0], 1.0),
        ]);
        assert!(bad.dim().is_err());
    }

    #[test]
    fn transforms() {
        let b = ShapeSpec::ball(&[0.0, 1.0], 0.5);
        let t = b.clone().translate(&[2.0, 0.0]);
        assert!(t.contains(&[2.0, 1.2]));
        assert!(!t.contains(&[0.0, 1.0]));
        let r = b.reflect(1, 0.0);
        assert!(r.contains(&[0.0, -1.0]));
        let bb = r.bounds(2).unwrap();
        assert_eq!(bb.lo, vec![-0.5, -1.5]);
        assert_eq!(bb.hi, vec![0.5, -0.5]);
    }

    #[test]
    fn supersampling_converges() {
        let disk = ShapeSpec::ball(&[0.013, -0.021], 1.0);
        let mut o = RasterOptions::new(1.0 / 32.0, 0.0);
        o.supersample = true;
        let v = disk.rasterize(&o, None).unwrap().volume();
        assert!((v - PI).abs() < 0.02);
    }

    #[test]
    fn json_roundtrip() {
        let s = ShapeSpec::difference(
            ShapeSpec::ball(&[0.0, 0.0], 1.0),
            ShapeSpec::ball(&[0.0, 0.0], 0.5).translate(&[0.1, 0.0]),
        );
        let text = serde_json::to_string(&s).unwrap();
        let back: ShapeSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(s, back);
        let empty: ShapeSpec = serde_json::from_str("\"empty\"").unwrap();
        assert_eq!(empty, ShapeSpec::Empty);
    }
}
