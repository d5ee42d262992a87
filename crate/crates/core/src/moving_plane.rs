//! Moving-plane sweep along the last axis.
//!
//! For a plane `x_n = lambda`, the reflected lower part `R_lambda(A) ∩ {x_n >
//! lambda}` is compared with `A`. Planes are scanned bottom-up on the half-cell
//! lattice; the critical plane is the last one before the excess, eroded by one
//! cell layer, becomes nonempty.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{KernelClass, RadialKernel};
use crate::measure::{CurvatureEvaluator, QuadratureOptions};
use crate::setrep::{CellIndex, GridInfo, VoxelSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StoppingEvent {
    InteriorTouching,
    NonTransversal,
    SweepExhausted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Symmetric,
    Asymmetric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepState {
    pub lambda: f64,
    /// `lambda` as twice its lattice coordinate.
    pub plane_index: i64,
    /// `|R_lambda^+(A) \ A|` at `lambda`.
    pub containment_defect: f64,
    pub raw_excess_cells: usize,
    pub eroded_excess_cells: usize,
    /// Eroded excess one half-cell step above `lambda`.
    pub next_eroded_excess_cells: usize,
    pub planes_scanned: usize,
    pub exhausted: bool,
}

impl SweepState {
    pub fn nontransversal(&self) -> bool {
        self.raw_excess_cells == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub lambda0: f64,
    pub event: StoppingEvent,
    /// `|R_lambda0(A) Δ A| / |A|`
    pub defect: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub touching_points: Vec<Vec<f64>>,
    pub raw_excess_cells: usize,
    pub eroded_excess_cells: usize,
    pub hypothesis_checks: Option<serde_json::Value>,
    pub grid: GridInfo,
}

/// Cells of `R_c2(A)` strictly above the plane that are not in `A`.
fn excess_cells(set: &VoxelSet, c2: i64) -> Vec<CellIndex> {
    let mut out = Vec::new();
    for g in set.occupied_cells() {
        if 2 * g[2] + 1 >= c2 {
            continue;
        }
        let m = [g[0], g[1], c2 - 1 - g[2]];
        if !set.get(m) {
            out.push(m);
        }
    }
    out.sort_unstable();
    out
}

/// Whether any occupied cell lies within Chebyshev distance one of `g`.
fn near_set(set: &VoxelSet, g: CellIndex) -> bool {
    let ys: &[i64] = if set.dim() == 2 { &[0] } else { &[-1, 0, 1] };
    for dx in -1..=1 {
        for &dy in ys {
            for dz in -1..=1 {
                if set.get([g[0] + dx, g[1] + dy, g[2] + dz]) {
                    return true;
                }
            }
        }
    }
    false
}

fn eroded_count(set: &VoxelSet, excess: &[CellIndex]) -> usize {
    excess.iter().filter(|&&g| !near_set(set, g)).count()
}

/// `R_lambda(A) ∩ {x_n > lambda}` minus `A`, with its volume.
pub fn reflected_upper_excess(set: &VoxelSet, lambda: f64) -> Result<(f64, VoxelSet)> {
    let c2 = set.plane_index(lambda)?;
    let cells = excess_cells(set, c2);
    let mut lo = set.lo();
    let mut hi = set.hi();
    for g in &cells {
        lo[2] = lo[2].min(g[2]);
        hi[2] = hi[2].max(g[2] + 1);
    }
    let ext = [
        (hi[0] - lo[0]) as usize,
        (hi[1] - lo[1]) as usize,
        (hi[2] - lo[2]) as usize,
    ];
    let mut out = set.with_layout(lo, ext);
    for &g in &cells {
        out.set(g, true)?;
    }
    Ok((cells.len() as f64 * set.cell_volume(), out))
}

/// Scans planes from the bottom face of the set upward.
pub fn find_critical_plane(set: &VoxelSet) -> Result<SweepState> {
    let Some((lo, hi)) = set.occupied_bounds() else {
        return Err(Error::domain("the set is empty"));
    };
    if set.touches_grid_side(2, true) {
        return Err(Error::Padding(
            "occupied cells reach the top layer of the grid; add padding above the set".into(),
        ));
    }
    let first = 2 * lo[2];
    let last = 2 * (hi[2] + 1);
    let mut scanned = 0;
    for c2 in first..=last {
        scanned += 1;
        let ex = excess_cells(set, c2);
        let eroded = eroded_count(set, &ex);
        if eroded > 0 && c2 > first {
            let at = excess_cells(set, c2 - 1);
            return Ok(SweepState {
                lambda: set.plane_position(c2 - 1),
                plane_index: c2 - 1,
                containment_defect: at.len() as f64 * set.cell_volume(),
                raw_excess_cells: at.len(),
                eroded_excess_cells: eroded_count(set, &at),
                next_eroded_excess_cells: eroded,
                planes_scanned: scanned,
                exhausted: false,
            });
        }
    }
    let at = excess_cells(set, last);
    Ok(SweepState {
        lambda: set.plane_position(last),
        plane_index: last,
        containment_defect: at.len() as f64 * set.cell_volume(),
        raw_excess_cells: at.len(),
        eroded_excess_cells: eroded_count(set, &at),
        next_eroded_excess_cells: 0,
        planes_scanned: scanned,
        exhausted: true,
    })
}

/// `|R_lambda(A) Δ A| / |A|`.
pub fn symmetry_defect(set: &VoxelSet, lambda: f64) -> Result<f64> {
    let c2 = set.plane_index(lambda)?;
    defect_at(set, c2)
}

fn defect_at(set: &VoxelSet, c2: i64) -> Result<f64> {
    let n = set.occupied_count();
    if n == 0 {
        return Err(Error::domain("symmetry defect of an empty set"));
    }
    let unmatched = set
        .occupied_cells()
        .filter(|g| !set.get([g[0], g[1], c2 - 1 - g[2]]))
        .count();
    Ok(2.0 * unmatched as f64 / n as f64)
}

/// `2 * (boundary-layer volume) / |A|`.
pub fn default_symmetry_tolerance(set: &VoxelSet) -> f64 {
    2.0 * set.boundary_cells().len() as f64 / set.occupied_count().max(1) as f64
}

/// Upper boundary cells whose mirror image lies within one cell of a boundary
/// cell.
pub fn touching_cells(set: &VoxelSet, c2: i64) -> Vec<CellIndex> {
    let ys: &[i64] = if set.dim() == 2 { &[0] } else { &[-1, 0, 1] };
    set.boundary_cells()
        .into_iter()
        .filter(|g| 2 * g[2] + 1 > c2)
        .filter(|g| {
            let m = [g[0], g[1], c2 - 1 - g[2]];
            (-1..=1).any(|dx| {
                ys.iter().any(|&dy| {
                    (-1..=1).any(|dz| set.is_boundary_cell([m[0] + dx, m[1] + dy, m[2] + dz]))
                })
            })
        })
        .collect()
}

pub fn classify_stopping_event(set: &VoxelSet, state: &SweepState) -> Result<SymmetryReport> {
    let c2 = state.plane_index;
    let event = if state.exhausted {
        StoppingEvent::SweepExhausted
    } else if state.nontransversal() {
        StoppingEvent::NonTransversal
    } else {
        StoppingEvent::InteriorTouching
    };
    let defect = defect_at(set, c2)?;
    let tolerance = default_symmetry_tolerance(set);
    let verdict = if event != StoppingEvent::SweepExhausted && defect <= tolerance {
        Verdict::Symmetric
    } else {
        Verdict::Asymmetric
    };
    Ok(SymmetryReport {
        lambda0: state.lambda,
        event,
        defect,
        tolerance,
        verdict,
        touching_points: touching_cells(set, c2).into_iter().map(|g| set.cell_center(g)).collect(),
        raw_excess_cells: state.raw_excess_cells,
        eroded_excess_cells: state.eroded_excess_cells,
        hypothesis_checks: None,
        grid: set.grid_info(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TouchingCheck {
    pub x0: Vec<f64>,
    pub reflected: Vec<f64>,
    /// `|H(x0~) - H(x0)|`
    pub curvature_gap: f64,
    /// `|(A \ R(A)) ∩ W|`, `W = B_r(x0~) \ B_r(x0)` for the indicator and
    /// `B_r(x0~)` otherwise.
    pub measure: f64,
    /// Boundary-layer volume.
    pub measure_bound: f64,
    /// `2 sup J` times the normalized volume of `(A Δ R(A)) ∩ B_r(x0)`.
    pub gap_bound: f64,
    pub passed: bool,
}

pub fn touching_point_identity_check(
    set: &VoxelSet,
    kernel: &RadialKernel,
    x0: &[f64],
    lambda0: f64,
) -> Result<TouchingCheck> {
    let c2 = set.plane_index(lambda0)?;
    let p = set.to_slots(x0)?;
    let mut q = p;
    q[2] = 2.0 * lambda0 - p[2];
    let ev = CurvatureEvaluator::new(set, kernel, QuadratureOptions::default())?;
    let curvature_gap = (ev.at_slots(q) - ev.at_slots(p)).abs();

    let r = kernel.horizon();
    let dist = |c: [f64; 3], z: [f64; 3]| {
        set.slots()
            .iter()
            .map(|&s| (c[s] - z[s]).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let indicator = kernel.class() == KernelClass::Indicator;
    let mut in_w = 0usize;
    let mut sym_near = 0usize;
    for g in set.occupied_cells() {
        let m = [g[0], g[1], c2 - 1 - g[2]];
        let c = set.center_slots(g);
        if !set.get(m) {
            if dist(c, q) < r && !(indicator && dist(c, p) < r) {
                in_w += 1;
            }
            // g is in A \ R(A); its mirror is in R(A) \ A
            if dist(c, p) < r {
                sym_near += 1;
            }
            if dist(set.center_slots(m), p) < r {
                sym_near += 1;
            }
        }
    }
    let hn = set.cell_volume();
    let factor = {
        let st = ev.stencil([0.5; 3]);
        st.factor
    };
    let measure = in_w as f64 * hn;
    let measure_bound = set.boundary_cells().len() as f64 * hn;
    let gap_bound = 2.0 * kernel.radial(0.0) * factor * sym_near as f64 * hn;
    Ok(TouchingCheck {
        x0: x0.to_vec(),
        reflected: set.to_public(q),
        curvature_gap,
        measure,
        measure_bound,
        gap_bound,
        passed: measure <= measure_bound && curvature_gap <= gap_bound.max(1e-12 * kernel.total_mass()),
    })
}

/// Sweep, classification and defect in one call.
pub fn analyze_symmetry(set: &VoxelSet) -> Result<SymmetryReport> {
    let state = find_critical_plane(set)?;
    classify_stopping_event(set, &state)
}
