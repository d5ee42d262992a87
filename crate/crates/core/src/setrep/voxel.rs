use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Global lattice index of a cell. Two-dimensional sets keep the middle
/// component at zero so that the distinguished direction is always slot 2.
pub type CellIndex = [i64; 3];

/// Slot of public axis `a` in the internal three-slot layout.
#[inline]
pub(crate) fn slot(dim: usize, a: usize) -> usize {
    if dim == 2 && a == 1 {
        2
    } else {
        a
    }
}

/// Axis-aligned occupancy grid.
///
/// The represented set is the closed union of occupied cells. Cell `g` covers
/// `origin + h * [g, g + 1)` along every axis; storage spans the global index
/// box `lo .. lo + ext` and everything outside that box is unoccupied.
#[derive(Clone, PartialEq)]
pub struct VoxelSet {
    dim: usize,
    h: f64,
    origin: [f64; 3],
    lo: [i64; 3],
    ext: [usize; 3],
    occ: Vec<bool>,
}

impl std::fmt::Debug for VoxelSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VoxelSet")
            .field("dim", &self.dim)
            .field("h", &self.h)
            .field("origin", &&self.origin[..])
            .field("lo", &self.lo)
            .field("ext", &self.ext)
            .field("occupied", &self.occupied_count())
            .finish()
    }
}

/// Grid geometry summary used in reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub h: f64,
    pub dims: Vec<usize>,
    pub origin: Vec<f64>,
}

impl VoxelSet {
    /// All-empty grid. `origin`, `lo` and `ext` are given per public axis.
    pub fn empty(dim: usize, h: f64, origin: &[f64], lo: &[i64], ext: &[usize]) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::domain(format!("dimension {dim} not supported (2 or 3)")));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::domain(format!("cell size must be positive, got {h}")));
        }
        if origin.len() != dim || lo.len() != dim || ext.len() != dim {
            return Err(Error::domain("grid description has the wrong number of axes"));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::domain("non-finite grid origin"));
        }
        let mut o = [0.0; 3];
        let mut l = [0; 3];
        let mut e = [1; 3];
        for a in 0..dim {
            let s = slot(dim, a);
            o[s] = origin[a];
            l[s] = lo[a];
            e[s] = ext[a];
        }
        let n = e.iter().product();
        Ok(Self {
            dim,
            h,
            origin: o,
            lo: l,
            ext: e,
            occ: vec![false; n],
        })
    }

    /// Grid whose occupancy is given by a predicate on global cell indices.
    pub fn from_fn(
        dim: usize,
        h: f64,
        origin: &[f64],
        lo: &[i64],
        ext: &[usize],
        f: impl Fn(CellIndex) -> bool,
    ) -> Result<Self> {
        let mut set = Self::empty(dim, h, origin, lo, ext)?;
        set.fill(f);
        Ok(set)
    }

    pub(crate) fn fill(&mut self, f: impl Fn(CellIndex) -> bool) {
        let [nx, ny, nz] = self.ext;
        let lo = self.lo;
        for i in 0..nx {
            for j in 0..ny {
                let base = (i * ny + j) * nz;
                for k in 0..nz {
                    self.occ[base + k] = f([lo[0] + i as i64, lo[1] + j as i64, lo[2] + k as i64]);
                }
            }
        }
    }

    pub(crate) fn with_layout(&self, lo: [i64; 3], ext: [usize; 3]) -> Self {
        Self {
            dim: self.dim,
            h: self.h,
            origin: self.origin,
            lo,
            ext,
            occ: vec![false; ext.iter().product()],
        }
    }

    pub(crate) fn from_parts(
        dim: usize,
        h: f64,
        origin: [f64; 3],
        lo: [i64; 3],
        ext: [usize; 3],
        occ: Vec<bool>,
    ) -> Self {
        debug_assert_eq!(occ.len(), ext.iter().product::<usize>());
        Self {
            dim,
            h,
            origin,
            lo,
            ext,
            occ,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    /// Internal three-slot lattice origin.
    pub fn origin_slots(&self) -> [f64; 3] {
        self.origin
    }

    pub fn lo(&self) -> [i64; 3] {
        self.lo
    }

    pub fn ext(&self) -> [usize; 3] {
        self.ext
    }

    /// Index one past the last stored cell along each slot.
    pub fn hi(&self) -> [i64; 3] {
        [
            self.lo[0] + self.ext[0] as i64,
            self.lo[1] + self.ext[1] as i64,
            self.lo[2] + self.ext[2] as i64,
        ]
    }

    pub fn grid_info(&self) -> GridInfo {
        GridInfo {
            h: self.h,
            dims: (0..self.dim).map(|a| self.ext[slot(self.dim, a)]).collect(),
            origin: (0..self.dim)
                .map(|a| {
                    let s = slot(self.dim, a);
                    self.origin[s] + self.lo[s] as f64 * self.h
                })
                .collect(),
        }
    }

    pub(crate) fn occupancy(&self) -> &[bool] {
        &self.occ
    }

    #[inline]
    fn linear(&self, g: CellIndex) -> Option<usize> {
        let i = g[0] - self.lo[0];
        let j = g[1] - self.lo[1];
        let k = g[2] - self.lo[2];
        if i < 0 || j < 0 || k < 0 {
            return None;
        }
        let (i, j, k) = (i as usize, j as usize, k as usize);
        if i >= self.ext[0] || j >= self.ext[1] || k >= self.ext[2] {
            return None;
        }
        Some((i * self.ext[1] + j) * self.ext[2] + k)
    }

    /// Occupancy of a global cell; cells outside the stored box are empty.
    #[inline]
    pub fn get(&self, g: CellIndex) -> bool {
        self.linear(g).is_some_and(|l| self.occ[l])
    }

    pub fn set(&mut self, g: CellIndex, value: bool) -> Result<()> {
        match self.linear(g) {
            Some(l) => {
                self.occ[l] = value;
                Ok(())
            }
            None => Err(Error::domain(format!("cell {g:?} outside the stored grid"))),
        }
    }

    /// World coordinates of a cell center in slot layout.
    #[inline]
    pub fn center_slots(&self, g: CellIndex) -> [f64; 3] {
        let mut c = [0.0; 3];
        for s in 0..3 {
            if self.dim == 2 && s == 1 {
                continue;
            }
            c[s] = self.origin[s] + (g[s] as f64 + 0.5) * self.h;
        }
        c
    }

    /// World coordinates of a cell center as a `dim`-vector.
    pub fn cell_center(&self, g: CellIndex) -> Vec<f64> {
        self.to_public(self.center_slots(g))
    }

    pub fn to_public(&self, p: [f64; 3]) -> Vec<f64> {
        (0..self.dim).map(|a| p[slot(self.dim, a)]).collect()
    }

    pub fn to_slots(&self, x: &[f64]) -> Result<[f64; 3]> {
        if x.len() != self.dim {
            return Err(Error::domain(format!(
                "point has {} coordinates, set dimension is {}",
                x.len(),
                self.dim
            )));
        }
        if x.iter().any(|c| !c.is_finite()) {
            return Err(Error::domain("non-finite point"));
        }
        let mut p = [0.0; 3];
        for a in 0..self.dim {
            p[slot(self.dim, a)] = x[a];
        }
        Ok(p)
    }

    /// Lattice coordinates `(x - origin) / h`, in slot layout.
    #[inline]
    pub fn lattice_coords(&self, p: [f64; 3]) -> [f64; 3] {
        let mut u = [0.0; 3];
        for s in 0..3 {
            if self.dim == 2 && s == 1 {
                u[s] = 0.5;
                continue;
            }
            u[s] = (p[s] - self.origin[s]) / self.h;
        }
        u
    }

    /// Active slots (`[0, 2]` in 2D, `[0, 1, 2]` in 3D).
    pub fn slots(&self) -> &'static [usize] {
        if self.dim == 2 {
            &[0, 2]
        } else {
            &[0, 1, 2]
        }
    }

    pub fn occupied_count(&self) -> usize {
        self.occ.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.occ.iter().any(|&b| b)
    }

    /// Lebesgue measure: occupied cells times `h^n`.
    pub fn volume(&self) -> f64 {
        self.occupied_count() as f64 * self.cell_volume()
    }

    /// Global indices of occupied cells in lexicographic order.
    pub fn occupied_cells(&self) -> impl Iterator<Item = CellIndex> + '_ {
        let [_, ny, nz] = self.ext;
        let lo = self.lo;
        self.occ.iter().enumerate().filter(|(_, &b)| b).map(move |(l, _)| {
            let k = l % nz;
            let j = (l / nz) % ny;
            let i = l / (nz * ny);
            [lo[0] + i as i64, lo[1] + j as i64, lo[2] + k as i64]
        })
    }

    /// Same geometry and same occupied cells, regardless of storage extents.
    pub fn same_cells(&self, other: &VoxelSet) -> bool {
        self.dim == other.dim
            && self.h == other.h
            && self.origin == other.origin
            && self.occupied_count() == other.occupied_count()
            && self.occupied_cells().all(|g| other.get(g))
    }

    /// Column `(i, j)` as a slice along the distinguished axis.
    pub(crate) fn column(&self, i: usize, j: usize) -> &[bool] {
        let nz = self.ext[2];
        let base = (i * self.ext[1] + j) * nz;
        &self.occ[base..base + nz]
    }

    /// Maximal occupied runs of column `(i, j)` as inclusive global index pairs.
    pub fn column_runs(&self, i: usize, j: usize) -> Vec<(i64, i64)> {
        runs(self.column(i, j), self.lo[2])
    }

    /// Face neighbors in the active axes.
    pub fn face_neighbors(&self, g: CellIndex) -> impl Iterator<Item = CellIndex> + '_ {
        self.slots().iter().flat_map(move |&s| {
            [-1i64, 1].into_iter().map(move |d| {
                let mut n = g;
                n[s] += d;
                n
            })
        })
    }

    /// Occupied cell with at least one face-adjacent empty cell.
    pub fn is_boundary_cell(&self, g: CellIndex) -> bool {
        self.get(g) && self.face_neighbors(g).any(|n| !self.get(n))
    }

    pub fn boundary_cells(&self) -> Vec<CellIndex> {
        self.occupied_cells().filter(|&g| self.is_boundary_cell(g)).collect()
    }

    /// Union of closed boundary cells, as a voxel set.
    pub fn boundary_layer(&self) -> VoxelSet {
        let mut out = self.with_layout(self.lo, self.ext);
        for g in self.boundary_cells() {
            out.set(g, true).expect("boundary cell lies in the grid");
        }
        out
    }

    /// Whether any occupied cell sits on the outermost stored layer of the
    /// given slot (`upper` selects the high side).
    pub fn touches_grid_side(&self, s: usize, upper: bool) -> bool {
        let edge = if upper {
            self.lo[s] + self.ext[s] as i64 - 1
        } else {
            self.lo[s]
        };
        self.occupied_cells().any(|g| g[s] == edge)
    }

    fn check_multiple(&self, what: &'static str, value: f64, step: f64, base: f64) -> Result<i64> {
        if !value.is_finite() {
            return Err(Error::domain(format!("{what} is not finite")));
        }
        let q = (value - base) / step;
        let m = q.round();
        if (q - m).abs() > 1e-9 * q.abs().max(1.0) {
            return Err(Error::Misaligned {
                what,
                value,
                below: base + q.floor() * step,
                above: base + q.ceil() * step,
            });
        }
        Ok(m as i64)
    }

    /// Number of cells corresponding to a grid-aligned distance.
    pub fn cells_for_length(&self, t: f64) -> Result<i64> {
        self.check_multiple("t", t, self.h, 0.0)
    }

    /// Twice the lattice coordinate of the plane `x_n = lambda`; errors when
    /// the plane is neither on a cell face nor through cell centers.
    pub fn plane_index(&self, lambda: f64) -> Result<i64> {
        self.check_multiple("lambda", lambda, 0.5 * self.h, self.origin[2])
    }

    pub fn plane_position(&self, c2: i64) -> f64 {
        self.origin[2] + c2 as f64 * 0.5 * self.h
    }

    /// The set shifted by `t` along the distinguished axis.
    pub fn translate_last_axis(&self, t: f64) -> Result<VoxelSet> {
        let m = self.cells_for_length(t)?;
        Ok(self.shifted_cells(m))
    }

    pub fn shifted_cells(&self, m: i64) -> VoxelSet {
        let mut out = self.clone();
        out.lo[2] += m;
        out
    }

    /// Mirror image across `x_n = lambda`.
    pub fn reflect(&self, lambda: f64) -> Result<VoxelSet> {
        let c2 = self.plane_index(lambda)?;
        Ok(self.reflect_index(c2))
    }

    /// Mirror image across the plane with doubled lattice coordinate `c2`;
    /// cell `k` maps to `c2 - 1 - k`.
    pub fn reflect_index(&self, c2: i64) -> VoxelSet {
        let [nx, ny, nz] = self.ext;
        let mut occ = vec![false; self.occ.len()];
        for col in 0..nx * ny {
            let src = &self.occ[col * nz..(col + 1) * nz];
            let dst = &mut occ[col * nz..(col + 1) * nz];
            for k in 0..nz {
                dst[nz - 1 - k] = src[k];
            }
        }
        let mut lo = self.lo;
        lo[2] = c2 - self.lo[2] - nz as i64;
        Self {
            occ,
            lo,
            ..self.clone()
        }
    }

    /// Index offset that maps `other`'s lattice onto ours.
    pub(crate) fn lattice_offset(&self, other: &VoxelSet) -> Result<[i64; 3]> {
        if self.dim != other.dim {
            return Err(Error::IncompatibleGrids(format!(
                "dimensions {} and {}",
                self.dim, other.dim
            )));
        }
        if (self.h - other.h).abs() > 1e-12 * self.h {
            return Err(Error::IncompatibleGrids(format!(
                "cell sizes {} and {}",
                self.h, other.h
            )));
        }
        let mut off = [0; 3];
        for &s in self.slots() {
            let q = (other.origin[s] - self.origin[s]) / self.h;
            let m = q.round();
            if (q - m).abs() > 1e-9 * q.abs().max(1.0) {
                return Err(Error::IncompatibleGrids(format!(
                    "origins differ by a non-integer number of cells along axis {s}"
                )));
            }
            off[s] = m as i64;
        }
        Ok(off)
    }

    /// `(self \ other, other \ self)` on the union of both index ranges.
    pub fn relative_complements(&self, other: &VoxelSet) -> Result<(VoxelSet, VoxelSet)> {
        let off = self.lattice_offset(other)?;
        let olo = [other.lo[0] + off[0], other.lo[1] + off[1], other.lo[2] + off[2]];
        let ohi = [
            olo[0] + other.ext[0] as i64,
            olo[1] + other.ext[1] as i64,
            olo[2] + other.ext[2] as i64,
        ];
        let shi = self.hi();
        let mut lo = [0; 3];
        let mut ext = [0; 3];
        for s in 0..3 {
            lo[s] = self.lo[s].min(olo[s]);
            ext[s] = (shi[s].max(ohi[s]) - lo[s]) as usize;
        }
        let other_get = |g: CellIndex| other.get([g[0] - off[0], g[1] - off[1], g[2] - off[2]]);
        let mut a_minus_b = self.with_layout(lo, ext);
        let mut b_minus_a = self.with_layout(lo, ext);
        let mut l = 0;
        for i in 0..ext[0] {
            for j in 0..ext[1] {
                for k in 0..ext[2] {
                    let g = [lo[0] + i as i64, lo[1] + j as i64, lo[2] + k as i64];
                    let (a, b) = (self.get(g), other_get(g));
                    a_minus_b.occ[l] = a && !b;
                    b_minus_a.occ[l] = b && !a;
                    l += 1;
                }
            }
        }
        Ok((a_minus_b, b_minus_a))
    }

    /// `self ∩ other` in `self`'s storage box.
    pub fn intersection(&self, other: &VoxelSet) -> Result<VoxelSet> {
        let off = self.lattice_offset(other)?;
        let mut out = self.clone();
        let [_, ny, nz] = self.ext;
        for (l, o) in out.occ.iter_mut().enumerate() {
            if *o {
                let g = [
                    self.lo[0] + (l / (ny * nz)) as i64,
                    self.lo[1] + ((l / nz) % ny) as i64,
                    self.lo[2] + (l % nz) as i64,
                ];
                *o = other.get([g[0] - off[0], g[1] - off[1], g[2] - off[2]]);
            }
        }
        Ok(out)
    }

    /// Axis-aligned bounding box of occupied cells as inclusive index ranges.
    pub fn occupied_bounds(&self) -> Option<([i64; 3], [i64; 3])> {
        let mut lo = [i64::MAX; 3];
        let mut hi = [i64::MIN; 3];
        let mut any = false;
        for g in self.occupied_cells() {
            any = true;
            for s in 0..3 {
                lo[s] = lo[s].min(g[s]);
                hi[s] = hi[s].max(g[s]);
            }
        }
        any.then_some((lo, hi))
    }

    pub fn centroid(&self) -> Option<Vec<f64>> {
        let n = self.occupied_count();
        if n == 0 {
            return None;
        }
        let mut acc = [crate::accum::ExactSum::new(), Default::default(), Default::default()];
        for g in self.occupied_cells() {
            let c = self.center_slots(g);
            for s in 0..3 {
                acc[s].add(c[s]);
            }
        }
        let c = [
            acc[0].value() / n as f64,
            acc[1].value() / n as f64,
            acc[2].value() / n as f64,
        ];
        Some(self.to_public(c))
    }

    /// Outer diameter estimate: largest distance between occupied cell centers
    /// plus the cell diagonal.
    ///
    /// Only cells that are extreme along every axis-parallel line through them
    /// can be vertices of the convex hull, so the pairwise search runs over
    /// that candidate set.
    pub fn diameter(&self) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::domain("diameter of an empty set"));
        }
        let candidates: Vec<[f64; 3]> = self
            .occupied_cells()
            .filter(|&g| {
                self.slots().iter().all(|&s| {
                    let mut up = g;
                    up[s] += 1;
                    let mut down = g;
                    down[s] -= 1;
                    !self.get(up) || !self.get(down)
                })
            })
            .filter(|&g| self.is_line_extreme(g))
            .map(|g| self.center_slots(g))
            .collect();
        let mut best = 0.0f64;
        for (a, p) in candidates.iter().enumerate() {
            for q in &candidates[a + 1..] {
                let d2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2);
                best = best.max(d2);
            }
        }
        Ok(best.sqrt() + self.h * (self.dim as f64).sqrt())
    }

    /// True when, along every active axis, no occupied cell lies on both sides.
    fn is_line_extreme(&self, g: CellIndex) -> bool {
        self.slots().iter().all(|&s| {
            let (lo, hi) = (self.lo[s], self.lo[s] + self.ext[s] as i64);
            let side = |range: std::ops::Range<i64>| {
                range.into_iter().any(|v| {
                    let mut c = g;
                    c[s] = v;
                    self.get(c)
                })
            };
            let below = side(lo..g[s]);
            let above = side(g[s] + 1..hi);
            !(below && above)
        })
    }

    /// Number of face-connected components.
    pub fn connected_components(&self) -> usize {
        let mut seen = vec![false; self.occ.len()];
        let mut stack = Vec::new();
        let mut count = 0;
        for g in self.occupied_cells() {
            let l = self.linear(g).unwrap();
            if seen[l] {
                continue;
            }
            count += 1;
            seen[l] = true;
            stack.push(g);
            while let Some(c) = stack.pop() {
                for n in self.face_neighbors(c).collect::<Vec<_>>() {
                    if let Some(ln) = self.linear(n) {
                        if self.occ[ln] && !seen[ln] {
                            seen[ln] = true;
                            stack.push(n);
                        }
                    }
                }
            }
        }
        count
    }
}

/// Maximal runs of `true` in a column, as inclusive global index pairs.
pub(crate) fn runs(column: &[bool], base: i64) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    let mut start = None;
    for (k, &b) in column.iter().enumerate() {
        match (b, start) {
            (true, None) => start = Some(k),
            (false, Some(s)) => {
                out.push((base + s as i64, base + k as i64 - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((base + s as i64, base + column.len() as i64 - 1));
    }
    out
}
