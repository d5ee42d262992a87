//! Vertical fibers of a voxel set: per-column interval stacks along the last
//! axis, boundary point classification, and the domain hypothesis checks.

mod checks;

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::RadialKernel;
use crate::measure::{CurvatureEvaluator, QuadratureOptions};
use crate::setrep::{runs, CellIndex, VoxelSet};

pub use checks::{
    check_domain_hypotheses, check_ordered_curvature, default_order_tolerance, nondegeneracy_quotient,
    DomainReport, NondegeneracyReport, OrderedCurvatureReport, ShellCheck, Violation,
};

/// A maximal closed interval `[lo, hi]` of one fiber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    /// Inclusive cell range along the last axis.
    pub cells: (i64, i64),
}

impl Interval {
    pub fn len_cells(&self) -> i64 {
        self.cells.1 - self.cells.0 + 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    /// Cell index in the first `n - 1` axes.
    pub index: Vec<i64>,
    /// World coordinates of the column axis.
    pub center: Vec<f64>,
    /// Ascending, pairwise separated.
    pub intervals: Vec<Interval>,
}

/// Nonempty columns of a set in lexicographic order of their index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberDecomposition {
    pub dim: usize,
    pub h: f64,
    pub columns: Vec<Column>,
}

impl FiberDecomposition {
    pub fn column(&self, index: &[i64]) -> Option<&Column> {
        self.columns
            .binary_search_by(|c| c.index.as_slice().cmp(index))
            .ok()
            .map(|i| &self.columns[i])
    }

    /// The projection region: indices of all nonempty columns.
    pub fn region(&self) -> impl Iterator<Item = &[i64]> {
        self.columns.iter().map(|c| c.index.as_slice())
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }
}

fn column_index(set: &VoxelSet, g: CellIndex) -> Vec<i64> {
    if set.dim() == 2 {
        vec![g[0]]
    } else {
        vec![g[0], g[1]]
    }
}

pub fn decompose(set: &VoxelSet) -> FiberDecomposition {
    let lo = set.lo();
    let ext = set.ext();
    let occ = set.occupancy();
    let h = set.h();
    let oz = set.origin_slots()[2];
    let mut columns = Vec::new();
    for i in 0..ext[0] {
        for j in 0..ext[1] {
            let base = (i * ext[1] + j) * ext[2];
            let rs = runs(&occ[base..base + ext[2]], lo[2]);
            if rs.is_empty() {
                continue;
            }
            let g = [lo[0] + i as i64, lo[1] + j as i64, 0];
            let c = set.center_slots(g);
            let mut center = set.to_public(c);
            center.pop();
            columns.push(Column {
                index: column_index(set, g),
                center,
                intervals: rs
                    .into_iter()
                    .map(|(a, b)| Interval {
                        lo: oz + a as f64 * h,
                        hi: oz + (b + 1) as f64 * h,
                        cells: (a, b),
                    })
                    .collect(),
            });
        }
    }
    FiberDecomposition {
        dim: set.dim(),
        h,
        columns,
    }
}

/// Length of the fiber at `column` below height `s`.
pub fn fiber_measure_below(decomp: &FiberDecomposition, column: &[i64], s: f64) -> f64 {
    let Some(col) = decomp.column(column) else {
        return 0.0;
    };
    col.intervals
        .iter()
        .map(|iv| {
            if s >= iv.hi {
                iv.len_cells() as f64 * decomp.h
            } else if s <= iv.lo {
                0.0
            } else {
                s - iv.lo
            }
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PointClass {
    /// P1
    Top,
    /// P2
    Bottom,
    /// P3
    Lateral,
    /// P4
    Isolated,
}

impl PointClass {
    pub fn label(self) -> &'static str {
        match self {
            PointClass::Top => "P1",
            PointClass::Bottom => "P2",
            PointClass::Lateral => "P3",
            PointClass::Isolated => "P4",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPointRecord {
    /// Top and bottom points sit on the interval's end faces, the others at
    /// cell centers.
    pub position: Vec<f64>,
    pub class: PointClass,
    pub column: Vec<i64>,
    pub interval: usize,
    pub cell: CellIndex,
    pub partner: Option<Vec<f64>>,
}

/// One record per boundary cell, ordered by column, interval and height.
pub fn classify_boundary(set: &VoxelSet, decomp: &FiberDecomposition) -> Result<Vec<BoundaryPointRecord>> {
    if decomp.dim != set.dim() || decomp.h != set.h() {
        return Err(Error::domain("fiber decomposition belongs to a different grid"));
    }
    let mut out = Vec::new();
    for col in &decomp.columns {
        let mut g = [0i64; 3];
        g[0] = col.index[0];
        if set.dim() == 3 {
            g[1] = col.index[1];
        }
        let at = |k: i64, z: Option<f64>| {
            let mut p = set.center_slots([g[0], g[1], k]);
            if let Some(z) = z {
                p[2] = z;
            }
            set.to_public(p)
        };
        for (ii, iv) in col.intervals.iter().enumerate() {
            let (k0, k1) = iv.cells;
            if k0 == k1 {
                out.push(BoundaryPointRecord {
                    position: at(k0, None),
                    class: PointClass::Isolated,
                    column: col.index.clone(),
                    interval: ii,
                    cell: [g[0], g[1], k0],
                    partner: None,
                });
                continue;
            }
            let bottom = at(k0, Some(iv.lo));
            let top = at(k1, Some(iv.hi));
            out.push(BoundaryPointRecord {
                position: bottom.clone(),
                class: PointClass::Bottom,
                column: col.index.clone(),
                interval: ii,
                cell: [g[0], g[1], k0],
                partner: Some(top.clone()),
            });
            for k in k0 + 1..k1 {
                let c = [g[0], g[1], k];
                if set.is_boundary_cell(c) {
                    out.push(BoundaryPointRecord {
                        position: at(k, None),
                        class: PointClass::Lateral,
                        column: col.index.clone(),
                        interval: ii,
                        cell: c,
                        partner: None,
                    });
                }
            }
            out.push(BoundaryPointRecord {
                position: top,
                class: PointClass::Top,
                column: col.index.clone(),
                interval: ii,
                cell: [g[0], g[1], k1],
                partner: Some(bottom),
            });
        }
    }
    Ok(out)
}

/// Curvature at every record position.
pub fn record_curvatures(
    set: &VoxelSet,
    kernel: &RadialKernel,
    records: &[BoundaryPointRecord],
    opts: QuadratureOptions,
) -> Result<Vec<f64>> {
    let ev = CurvatureEvaluator::new(set, kernel, opts)?;
    let pts: Vec<[f64; 3]> = records
        .iter()
        .map(|r| set.to_slots(&r.position))
        .collect::<Result<_>>()?;
    Ok(ev.field_slots(&pts))
}

/// CSV with coordinates, class label, partner coordinates (blank when
/// unpaired) and optionally the curvature at each record.
pub fn write_classification_csv(
    dim: usize,
    records: &[BoundaryPointRecord],
    curvature: Option<&[f64]>,
    out: &mut impl Write,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (0..dim).map(|a| format!("x{a}")).collect();
    header.push("class".into());
    header.extend((0..dim).map(|a| format!("partner{a}")));
    if curvature.is_some() {
        header.push("curvature".into());
    }
    let err = |e: csv::Error| Error::domain(format!("writing classification: {e}"));
    w.write_record(&header).map_err(err)?;
    for (n, r) in records.iter().enumerate() {
        let mut row: Vec<String> = r.position.iter().map(|c| format!("{c:.17e}")).collect();
        row.push(r.class.label().into());
        match &r.partner {
            Some(p) => row.extend(p.iter().map(|c| format!("{c:.17e}"))),
            None => row.extend((0..dim).map(|_| String::new())),
        }
        if let Some(h) = curvature {
            row.push(format!("{:.17e}", h[n]));
        }
        w.write_record(&row).map_err(err)?;
    }
    w.flush().map_err(|e| Error::domain(format!("writing classification: {e}")))
}

pub fn save_classification_csv(
    path: &Path,
    dim: usize,
    records: &[BoundaryPointRecord],
    curvature: Option<&[f64]>,
) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_classification_csv(dim, records, curvature, &mut f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setrep::{RasterOptions, ShapeSpec};

    fn disk(h: f64) -> VoxelSet {
        ShapeSpec::ball(&[0.0, 0.0], 1.0)
            .rasterize(&RasterOptions::new(h, 0.25), None)
            .unwrap()
    }

    /// Unit disk placed so that the rightmost column axis passes `h^2 / 16`
    /// inside the circle and meets it in a single cell.
    fn tangent_disk(h: f64) -> VoxelSet {
        ShapeSpec::ball(&[h / 2.0 + h * h / 16.0, h / 2.0], 1.0)
            .rasterize(&RasterOptions::new(h, 0.25), None)
            .unwrap()
    }

    #[test]
    fn disk_central_fiber() {
        let h = 1.0 / 32.0;
        let d = decompose(&disk(h));
        let col = d.column(&[0]).unwrap();
        assert_eq!(col.intervals.len(), 1);
        assert!((col.intervals[0].lo + 1.0).abs() <= h);
        assert!((col.intervals[0].hi - 1.0).abs() <= h);
        assert!((fiber_measure_below(&d, &[0], 0.0) - 1.0).abs() <= h);
        assert_eq!(fiber_measure_below(&d, &[0], -5.0), 0.0);
        let total = col.intervals[0].len_cells() as f64 * h;
        assert_eq!(fiber_measure_below(&d, &[0], 5.0), total);
        assert_eq!(fiber_measure_below(&d, &[10_000], 0.0), 0.0);
    }

    #[test]
    fn annulus_has_two_intervals() {
        let h = 1.0 / 32.0;
        let a = ShapeSpec::difference(ShapeSpec::ball(&[0.0, 0.0], 1.0), ShapeSpec::ball(&[0.0, 0.0], 0.5))
            .rasterize(&RasterOptions::new(h, 0.25), None)
            .unwrap();
        let d = decompose(&a);
        let iv = &d.column(&[0]).unwrap().intervals;
        assert_eq!(iv.len(), 2);
        assert!((iv[0].lo + 1.0).abs() <= h && (iv[0].hi + 0.5).abs() <= h);
        assert!((iv[1].lo - 0.5).abs() <= h && (iv[1].hi - 1.0).abs() <= h);
    }

    #[test]
    fn empty_set_has_empty_decomposition() {
        let e = VoxelSet::empty(2, 0.1, &[0.0, 0.0], &[0, 0], &[4, 4]).unwrap();
        let d = decompose(&e);
        assert!(d.is_empty());
        assert_eq!(d.region().count(), 0);
        assert!(classify_boundary(&e, &d).unwrap().is_empty());
    }

    #[test]
    fn disk_classes() {
        let h = 1.0 / 32.0;
        let s = tangent_disk(h);
        let d = decompose(&s);
        let recs = classify_boundary(&s, &d).unwrap();
        let top = recs
            .iter()
            .find(|r| r.class == PointClass::Top && r.column == [0])
            .unwrap();
        assert!((top.position[1] - 1.0).abs() <= h);
        let partner = top.partner.as_ref().unwrap();
        assert!((partner[1] + 1.0).abs() <= h);
        let right = recs
            .iter()
            .max_by(|a, b| a.position[0].total_cmp(&b.position[0]))
            .unwrap();
        assert_eq!(right.class, PointClass::Isolated);
        assert!(right.partner.is_none());
        assert_eq!(recs.len(), s.boundary_cells().len());
    }

    #[test]
    fn square_side_is_lateral() {
        let h = 1.0 / 16.0;
        let s = ShapeSpec::cuboid(&[0.0, 0.0], &[1.0, 1.0])
            .rasterize(&RasterOptions::new(h, 0.25), None)
            .unwrap();
        let recs = classify_boundary(&s, &decompose(&s)).unwrap();
        let r = recs
            .iter()
            .find(|r| (r.position[0] - h / 2.0).abs() < 1e-12 && (r.position[1] - (0.5 + h / 2.0)).abs() < 1e-12)
            .unwrap();
        assert_eq!(r.class, PointClass::Lateral);
    }

    #[test]
    fn pairing_is_a_matching() {
        let h = 1.0 / 16.0;
        let s = ShapeSpec::union(vec![
            ShapeSpec::ball(&[0.0, 0.0, 0.0], 0.5),
            ShapeSpec::ball(&[0.3, 0.0, 0.6], 0.3),
        ])
        .rasterize(&RasterOptions::new(h, 0.25), None)
        .unwrap();
        let recs = classify_boundary(&s, &decompose(&s)).unwrap();
        let tops: Vec<_> = recs.iter().filter(|r| r.class == PointClass::Top).collect();
        let bottoms: Vec<_> = recs.iter().filter(|r| r.class == PointClass::Bottom).collect();
        assert_eq!(tops.len(), bottoms.len());
        for t in &tops {
            let p = t.partner.as_ref().unwrap();
            let b = bottoms.iter().find(|b| &b.position == p).unwrap();
            assert_eq!(b.partner.as_ref().unwrap(), &t.position);
            assert_eq!((b.column.clone(), b.interval), (t.column.clone(), t.interval));
        }
    }

    #[test]
    fn fiber_lengths_sum_to_volume() {
        let h = 1.0 / 16.0;
        let s = ShapeSpec::ellipsoid(&[0.1, 0.0, -0.2], &[0.6, 0.4, 0.5])
            .rasterize(&RasterOptions::new(h, 0.25), None)
            .unwrap();
        let d = decompose(&s);
        let total: f64 = d
            .columns
            .iter()
            .map(|c| fiber_measure_below(&d, &c.index, f64::INFINITY) * h * h)
            .sum();
        assert_eq!(total, s.volume());
    }

    #[test]
    fn reflection_mirrors_intervals() {
        let h = 1.0 / 32.0;
        let s = ShapeSpec::union(vec![
            ShapeSpec::ball(&[0.0, 0.2], 0.4),
            ShapeSpec::cuboid(&[-0.2, -0.5], &[0.5, 0.0]),
        ])
        .rasterize(&RasterOptions::new(h, 0.25), None)
        .unwrap();
        let lambda = 0.375;
        let d = decompose(&s);
        let r = decompose(&s.reflect(lambda).unwrap());
        assert_eq!(d.columns.len(), r.columns.len());
        for (a, b) in d.columns.iter().zip(&r.columns) {
            assert_eq!(a.index, b.index);
            let mirrored: Vec<(f64, f64)> = a
                .intervals
                .iter()
                .rev()
                .map(|iv| (2.0 * lambda - iv.hi, 2.0 * lambda - iv.lo))
                .collect();
            let got: Vec<(f64, f64)> = b.intervals.iter().map(|iv| (iv.lo, iv.hi)).collect();
            assert_eq!(mirrored, got);
        }
    }

    #[test]
    fn csv_rows() {
        let h = 1.0 / 8.0;
        let s = tangent_disk(h);
        let recs = classify_boundary(&s, &decompose(&s)).unwrap();
        let mut buf = Vec::new();
        write_classification_csv(2, &recs, None, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), recs.len() + 1);
        assert!(text.starts_with("x0,x1,class,partner0,partner1\n"));
        let iso = text.lines().find(|l| l.contains(",P4,")).unwrap();
        assert!(iso.ends_with(",P4,,"));
    }
}
