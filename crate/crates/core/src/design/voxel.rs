//! Axis-aligned rasterization of a design's cavity.
//!
//! The main chain is a sequence of coaxial cylinders along +x centred on the
//! y = z = 0 axis. Branches are cylinders along +y rooted on that axis at
//! their attachment abscissa; a Helmholtz cavity is a squat cylinder
//! (height = diameter) on top of its neck. Overlaps are merged by union.

use std::collections::VecDeque;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::format::FormatVersion;
use super::{DesignError, FilterDesign, Primitive};

/// Boolean occupancy on a regular grid; `true` marks air (cavity).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "VoxelDocument", try_from = "VoxelDocument")]
pub struct VoxelGrid {
    pub dims: [usize; 3],
    pub cell_size_m: f64,
    /// Position of the minimum corner of cell (0, 0, 0).
    pub origin_m: [f64; 3],
    pub occupancy: Vec<bool>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VoxelDocument {
    #[serde(default)]
    format_version: FormatVersion,
    dims: [usize; 3],
    cell_size_m: f64,
    #[serde(default)]
    origin_m: [f64; 3],
    occupied: Vec<[usize; 3]>,
}

impl From<VoxelGrid> for VoxelDocument {
    fn from(g: VoxelGrid) -> Self {
        Self {
            format_version: FormatVersion,
            dims: g.dims,
            cell_size_m: g.cell_size_m,
            origin_m: g.origin_m,
            occupied: g.occupied_cells().collect(),
        }
    }
}

impl TryFrom<VoxelDocument> for VoxelGrid {
    type Error = String;

    fn try_from(d: VoxelDocument) -> Result<Self, String> {
        if d.dims.contains(&0) {
            return Err("voxel dims must be at least 1".into());
        }
        if !(d.cell_size_m > 0.0 && d.cell_size_m.is_finite()) {
            return Err("cell_size_m must be positive".into());
        }
        let mut g = VoxelGrid::empty(d.dims, d.cell_size_m, d.origin_m);
        for c in d.occupied {
            if (0..3).any(|a| c[a] >= d.dims[a]) {
                return Err(format!("occupied cell {c:?} outside dims {:?}", d.dims));
            }
            let i = g.index(c);
            g.occupancy[i] = true;
        }
        Ok(g)
    }
}

impl VoxelGrid {
    pub fn empty(dims: [usize; 3], cell_size_m: f64, origin_m: [f64; 3]) -> Self {
        Self {
            dims,
            cell_size_m,
            origin_m,
            occupancy: vec![false; dims[0] * dims[1] * dims[2]],
        }
    }

    #[inline]
    pub fn index(&self, [i, j, k]: [usize; 3]) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn coords(&self, index: usize) -> [usize; 3] {
        let i = index % self.dims[0];
        let rest = index / self.dims[0];
        [i, rest % self.dims[1], rest / self.dims[1]]
    }

    pub fn get(&self, c: [usize; 3]) -> bool {
        self.occupancy[self.index(c)]
    }

    pub fn set(&mut self, c: [usize; 3], value: bool) {
        let i = self.index(c);
        self.occupancy[i] = value;
    }

    pub fn occupied_count(&self) -> usize {
        self.occupancy.iter().filter(|&&b| b).count()
    }

    pub fn occupied_cells(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        self.occupancy
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| self.coords(i))
    }

    pub fn cell_center(&self, [i, j, k]: [usize; 3]) -> [f64; 3] {
        let h = self.cell_size_m;
        [
            self.origin_m[0] + (i as f64 + 0.5) * h,
            self.origin_m[1] + (j as f64 + 0.5) * h,
            self.origin_m[2] + (k as f64 + 0.5) * h,
        ]
    }

    pub fn occupied_volume(&self) -> f64 {
        self.occupied_count() as f64 * self.cell_size_m.powi(3)
    }

    /// Face-adjacent occupied neighbours of cell `c`.
    pub fn neighbors(&self, c: [usize; 3]) -> impl Iterator<Item = [usize; 3]> + '_ {
        const DIRS: [(usize, i64); 6] = [(0, -1), (0, 1), (1, -1), (1, 1), (2, -1), (2, 1)];
        DIRS.iter().filter_map(move |&(axis, step)| {
            let v = c[axis] as i64 + step;
            if v < 0 || v as usize >= self.dims[axis] {
                return None;
            }
            let mut n = c;
            n[axis] = v as usize;
            self.get(n).then_some(n)
        })
    }

    /// Number of 6-connected components of the occupied set.
    pub fn component_count(&self) -> usize {
        let mut seen = vec![false; self.occupancy.len()];
        let mut count = 0;
        for start in 0..self.occupancy.len() {
            if !self.occupancy[start] || seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            let mut queue = VecDeque::from([self.coords(start)]);
            while let Some(c) = queue.pop_front() {
                for n in self.neighbors(c) {
                    let ni = self.index(n);
                    if !seen[ni] {
                        seen[ni] = true;
                        queue.push_back(n);
                    }
                }
            }
        }
        count
    }

    pub fn is_six_connected(&self) -> bool {
        self.component_count() == 1
    }
}

#[derive(Debug, Clone, Copy)]
enum Axis {
    X,
    Y,
}

#[derive(Debug, Clone, Copy)]
struct Cylinder {
    axis: Axis,
    /// Axis coordinate range.
    start: f64,
    end: f64,
    radius: f64,
    /// x position of a +y cylinder (ignored for +x cylinders).
    x: f64,
}

impl Cylinder {
    fn bbox(&self) -> ([f64; 3], [f64; 3]) {
        match self.axis {
            Axis::X => (
                [self.start, -self.radius, -self.radius],
                [self.end, self.radius, self.radius],
            ),
            Axis::Y => (
                [self.x - self.radius, self.start, -self.radius],
                [self.x + self.radius, self.end, self.radius],
            ),
        }
    }

    fn contains(&self, p: [f64; 3]) -> bool {
        let r2 = self.radius * self.radius;
        match self.axis {
            Axis::X => p[0] >= self.start && p[0] < self.end && p[1] * p[1] + p[2] * p[2] <= r2,
            Axis::Y => {
                let dx = p[0] - self.x;
                p[1] >= self.start && p[1] < self.end && dx * dx + p[2] * p[2] <= r2
            }
        }
    }
}

fn cylinders(design: &FilterDesign) -> Vec<Cylinder> {
    let mut out = Vec::new();
    let mut stations = vec![0.0];
    let mut x = 0.0;
    for p in &design.chain {
        let len = p.chain_length();
        out.push(Cylinder {
            axis: Axis::X,
            start: x,
            end: x + len,
            radius: p.radius(),
            x: 0.0,
        });
        x += len;
        stations.push(x);
    }
    let n = design.chain.len();
    for b in &design.branches {
        let pos = b.attach_after().unwrap_or(0).min(n);
        let xa = stations[pos];
        // wall of the main duct at the attachment point
        let before = if pos > 0 {
            design.chain[pos - 1].radius()
        } else {
            0.0
        };
        let after = if pos < n {
            design.chain[pos].radius()
        } else {
            0.0
        };
        let wall = before.max(after);
        match *b {
            Primitive::QuarterWaveBranch {
                length_m, radius_m, ..
            } => {
                out.push(Cylinder {
                    axis: Axis::Y,
                    start: 0.0,
                    end: wall + length_m,
                    radius: radius_m,
                    x: xa,
                });
            }
            Primitive::HelmholtzBranch {
                neck_length_m,
                neck_radius_m,
                cavity_volume_m3,
                ..
            } => {
                let top = wall + neck_length_m;
                out.push(Cylinder {
                    axis: Axis::Y,
                    start: 0.0,
                    end: top,
                    radius: neck_radius_m,
                    x: xa,
                });
                let rc = (cavity_volume_m3 / (2.0 * PI)).cbrt();
                out.push(Cylinder {
                    axis: Axis::Y,
                    start: top,
                    end: top + 2.0 * rc,
                    radius: rc,
                    x: xa,
                });
            }
            _ => {}
        }
    }
    out
}

fn cells_to_cover(extent: f64, h: f64) -> usize {
    ((extent / h) - 1e-9).ceil().max(1.0) as usize
}

/// Rasterizes the design cavity; a cell is air when its centre lies inside
/// any primitive.
pub fn voxelize(design: &FilterDesign, cell_size: f64) -> Result<VoxelGrid, DesignError> {
    let violations = design.validate();
    if !violations.is_empty() {
        return Err(DesignError::ValidationFailed(violations));
    }
    let min_radius = design
        .chain
        .iter()
        .chain(&design.branches)
        .map(Primitive::radius)
        .fold(f64::INFINITY, f64::min);
    if !(cell_size > 0.0) || cell_size > min_radius {
        return Err(DesignError::VoxelizationTooCoarse {
            cell_size,
            min_radius,
        });
    }
    let h = cell_size;
    let shapes = cylinders(design);
    let (mut lo, mut hi) = ([f64::INFINITY; 3], [f64::NEG_INFINITY; 3]);
    for s in &shapes {
        let (a, b) = s.bbox();
        for ax in 0..3 {
            lo[ax] = lo[ax].min(a[ax]);
            hi[ax] = hi[ax].max(b[ax]);
        }
    }
    // y and z keep the duct axis on a cell boundary so the cross-section is symmetric
    let y_below = cells_to_cover(-lo[1], h);
    let y_above = cells_to_cover(hi[1], h);
    let z_half = cells_to_cover(hi[2].max(-lo[2]), h);
    let dims = [
        cells_to_cover(hi[0] - lo[0], h),
        y_below + y_above,
        2 * z_half,
    ];
    let origin = [lo[0], -(y_below as f64) * h, -(z_half as f64) * h];
    let mut grid = VoxelGrid::empty(dims, h, origin);

    for s in &shapes {
        let (a, b) = s.bbox();
        let range = |ax: usize| {
            let first = ((a[ax] - origin[ax]) / h - 1.0).floor().max(0.0) as usize;
            let last = (((b[ax] - origin[ax]) / h + 1.0).ceil() as usize).min(dims[ax]);
            first..last
        };
        for k in range(2) {
            for j in range(1) {
                for i in range(0) {
                    let c = [i, j, k];
                    if s.contains(grid.cell_center(c)) {
                        grid.set(c, true);
                    }
                }
            }
        }
    }
    Ok(grid)
}

/// Analytic cavity volume, counting each branch from the duct wall outward.
pub fn analytic_volume(design: &FilterDesign) -> f64 {
    design
        .chain
        .iter()
        .chain(&design.branches)
        .map(Primitive::volume)
        .sum()
}
