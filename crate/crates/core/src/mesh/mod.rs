//! Frequency-adaptive surface budgets.
//!
//! Element size is bounded by wavelength: ℓ(f) = c/(f·K). A plan gives the
//! element count N(f) = ⌈2·area/ℓ²⌉ per frequency and compares Σ N^e against
//! solving every frequency at the finest budget. [`cluster_decimate`]
//! realizes a budget on an actual mesh.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acoustics::Medium;
use crate::par;

pub const DEFAULT_ELEMENTS_PER_WAVELENGTH: f64 = 6.0;
pub const DEFAULT_COST_EXPONENT: f64 = 3.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("OFF parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("triangle {triangle} references vertex {index} of {count}")]
    IndexOutOfRange {
        triangle: usize,
        index: usize,
        count: usize,
    },
    #[error("triangle {0} has zero area")]
    DegenerateTriangle(usize),
    #[error("mesh is empty")]
    Empty,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Triangle mesh with in-range indices and no zero-area faces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceMesh {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn triangle_area(v: &[[f64; 3]], t: [usize; 3]) -> f64 {
    0.5 * norm(cross(sub(v[t[1]], v[t[0]]), sub(v[t[2]], v[t[0]])))
}

impl SurfaceMesh {
    pub fn new(vertices: Vec<[f64; 3]>, triangles: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        if vertices.is_empty() {
            return Err(MeshError::Empty);
        }
        for (i, t) in triangles.iter().enumerate() {
            if let Some(&index) = t.iter().find(|&&k| k >= vertices.len()) {
                return Err(MeshError::IndexOutOfRange {
                    triangle: i,
                    index,
                    count: vertices.len(),
                });
            }
            if !(triangle_area(&vertices, *t) > 0.0) {
                return Err(MeshError::DegenerateTriangle(i));
            }
        }
        Ok(Self {
            vertices,
            triangles,
        })
    }

    pub fn area(&self) -> f64 {
        self.triangles
            .iter()
            .map(|&t| triangle_area(&self.vertices, t))
            .sum()
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        let set: HashSet<(usize, usize)> = self
            .triangles
            .iter()
            .flat_map(|t| [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])])
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        let mut e: Vec<_> = set.into_iter().collect();
        e.sort_unstable();
        e
    }

    /// Mean length over unique edges; 0 for a mesh without triangles.
    pub fn mean_edge_length(&self) -> f64 {
        let e = self.edges();
        if e.is_empty() {
            return 0.0;
        }
        e.iter()
            .map(|&(a, b)| norm(sub(self.vertices[a], self.vertices[b])))
            .sum::<f64>()
            / e.len() as f64
    }

    pub fn bounding_box(&self) -> ([f64; 3], [f64; 3]) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for v in &self.vertices {
            for a in 0..3 {
                lo[a] = lo[a].min(v[a]);
                hi[a] = hi[a].max(v[a]);
            }
        }
        (lo, hi)
    }
}

/// Reads ASCII OFF. Polygons with more than three corners are fan-triangulated.
pub fn parse_off(text: &str) -> Result<SurfaceMesh, MeshError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let err = |line: usize, message: &str| MeshError::Parse {
        line,
        message: message.into(),
    };
    let (n0, first) = lines.next().ok_or_else(|| err(1, "empty input"))?;
    let rest = first
        .strip_prefix("OFF")
        .ok_or_else(|| err(n0, "missing OFF header"))?
        .trim();
    let (counts_line, counts) = if rest.is_empty() {
        lines.next().ok_or_else(|| err(n0, "missing counts"))?
    } else {
        (n0, rest)
    };
    let nums: Vec<usize> = counts
        .split_whitespace()
        .map(|s| s.parse().map_err(|_| err(counts_line, "bad count")))
        .collect::<Result<_, _>>()?;
    if nums.len() < 2 {
        return Err(err(counts_line, "expected vertex and face counts"));
    }
    let mut vertices = Vec::with_capacity(nums[0]);
    for _ in 0..nums[0] {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| err(counts_line, "too few vertex lines"))?;
        let c: Vec<f64> = l
            .split_whitespace()
            .take(3)
            .map(|s| s.parse().map_err(|_| err(ln, "bad coordinate")))
            .collect::<Result<_, _>>()?;
        if c.len() < 3 || c.iter().any(|x| !x.is_finite()) {
            return Err(err(ln, "expected three finite coordinates"));
        }
        vertices.push([c[0], c[1], c[2]]);
    }
    let mut triangles = Vec::with_capacity(nums[1]);
    for _ in 0..nums[1] {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| err(counts_line, "too few face lines"))?;
        let f: Vec<usize> = l
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| err(ln, "bad index")))
            .collect::<Result<_, _>>()?;
        let k = *f.first().ok_or_else(|| err(ln, "empty face"))?;
        if k < 3 || f.len() < k + 1 {
            return Err(err(ln, "face needs at least three indices"));
        }
        for i in 1..k - 1 {
            triangles.push([f[1], f[i + 1], f[i + 2]]);
        }
    }
    SurfaceMesh::new(vertices, triangles)
}

pub fn write_off(mesh: &SurfaceMesh) -> String {
    let mut s = format!("OFF\n{} {} 0\n", mesh.vertices.len(), mesh.triangles.len());
    for v in &mesh.vertices {
        let _ = writeln!(s, "{} {} {}", v[0], v[1], v[2]);
    }
    for t in &mesh.triangles {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    s
}

/// Unit icosphere: `level` midpoint subdivisions of an icosahedron,
/// 10·4^level + 2 vertices.
pub fn icosphere(level: u32) -> SurfaceMesh {
    let p = (1.0 + 5f64.sqrt()) / 2.0;
    let mut v: Vec<[f64; 3]> = [
        [-1.0, p, 0.0],
        [1.0, p, 0.0],
        [-1.0, -p, 0.0],
        [1.0, -p, 0.0],
        [0.0, -1.0, p],
        [0.0, 1.0, p],
        [0.0, -1.0, -p],
        [0.0, 1.0, -p],
        [p, 0.0, -1.0],
        [p, 0.0, 1.0],
        [-p, 0.0, -1.0],
        [-p, 0.0, 1.0],
    ]
    .iter()
    .map(|&x| {
        let n = norm(x);
        [x[0] / n, x[1] / n, x[2] / n]
    })
    .collect();
    let mut t: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, v: &mut Vec<[f64; 3]>| {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let m = [
                    (v[a][0] + v[b][0]) / 2.0,
                    (v[a][1] + v[b][1]) / 2.0,
                    (v[a][2] + v[b][2]) / 2.0,
                ];
                let n = norm(m);
                v.push([m[0] / n, m[1] / n, m[2] / n]);
                v.len() - 1
            })
        };
        let mut next = Vec::with_capacity(t.len() * 4);
        for &[a, b, c] in &t {
            let ab = midpoint(a, b, &mut v);
            let bc = midpoint(b, c, &mut v);
            let ca = midpoint(c, a, &mut v);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        t = next;
    }
    SurfaceMesh {
        vertices: v,
        triangles: t,
    }
}

/// Uniform-grid vertex clustering, grid anchored at the bounding-box minimum.
///
/// Each nonempty cell becomes one vertex at the centroid of its members,
/// clamped to their bounding box. Clusters touching a minimum face of the
/// bounding box keep that coordinate, so the anchor survives decimation and
/// a second pass at the same cell changes nothing. Collapsed, zero-area and
/// duplicate triangles are dropped.
pub fn cluster_decimate(mesh: &SurfaceMesh, cell: f64) -> Result<SurfaceMesh, MeshError> {
    if !(cell > 0.0 && cell.is_finite()) {
        return Err(MeshError::InvalidArgument(format!("cell size {cell}")));
    }
    if mesh.vertices.is_empty() {
        return Err(MeshError::Empty);
    }
    let (origin, _) = mesh.bounding_box();
    let key = |p: [f64; 3]| {
        [
            ((p[0] - origin[0]) / cell).floor() as i64,
            ((p[1] - origin[1]) / cell).floor() as i64,
            ((p[2] - origin[2]) / cell).floor() as i64,
        ]
    };
    struct Cluster {
        sum: [f64; 3],
        lo: [f64; 3],
        hi: [f64; 3],
        count: usize,
    }
    let mut clusters: BTreeMap<[i64; 3], Cluster> = BTreeMap::new();
    for &p in &mesh.vertices {
        let c = clusters.entry(key(p)).or_insert(Cluster {
            sum: [0.0; 3],
            lo: [f64::INFINITY; 3],
            hi: [f64::NEG_INFINITY; 3],
            count: 0,
        });
        for (a, &x) in p.iter().enumerate() {
            c.sum[a] += x;
            c.lo[a] = c.lo[a].min(x);
            c.hi[a] = c.hi[a].max(x);
        }
        c.count += 1;
    }
    let index: BTreeMap<[i64; 3], usize> =
        clusters.keys().enumerate().map(|(i, k)| (*k, i)).collect();
    let vertices: Vec<[f64; 3]> = clusters
        .values()
        .map(|c| {
            let mut m = [0.0; 3];
            for a in 0..3 {
                m[a] = if c.lo[a] == origin[a] {
                    origin[a]
                } else {
                    (c.sum[a] / c.count as f64).clamp(c.lo[a], c.hi[a])
                };
            }
            m
        })
        .collect();
    let remap: Vec<usize> = mesh.vertices.iter().map(|&p| index[&key(p)]).collect();
    let mut seen = HashSet::new();
    let mut triangles = Vec::new();
    for t in &mesh.triangles {
        let n = [remap[t[0]], remap[t[1]], remap[t[2]]];
        if n[0] == n[1] || n[1] == n[2] || n[2] == n[0] || !(triangle_area(&vertices, n) > 0.0) {
            continue;
        }
        let mut sorted = n;
        sorted.sort_unstable();
        if seen.insert(sorted) {
            triangles.push(n);
        }
    }
    Ok(SurfaceMesh {
        vertices,
        triangles,
    })
}

/// ℓ(f) = c/(f·K).
pub fn target_edge_length(frequency_hz: f64, medium: &Medium, elements_per_wavelength: f64) -> f64 {
    medium.c() / (frequency_hz * elements_per_wavelength)
}

/// Surface to budget: a mesh or a bare area [m²].
#[derive(Debug, Clone, Copy)]
pub enum Surface<'a> {
    Mesh(&'a SurfaceMesh),
    Area(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub frequency_hz: f64,
    pub target_edge_length_m: f64,
    pub element_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplificationPlan {
    pub area_m2: f64,
    pub cost_exponent: f64,
    pub entries: Vec<PlanEntry>,
    pub naive_cost: f64,
    pub adaptive_cost: f64,
    pub speedup: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanOptions {
    pub medium: Medium,
    pub elements_per_wavelength: f64,
    pub cost_exponent: f64,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self {
            medium: Medium::default(),
            elements_per_wavelength: DEFAULT_ELEMENTS_PER_WAVELENGTH,
            cost_exponent: DEFAULT_COST_EXPONENT,
        }
    }
}

/// Per-frequency budgets with naive (finest budget everywhere) and adaptive costs.
pub fn plan(
    frequencies_hz: &[f64],
    surface: Surface<'_>,
    opts: &PlanOptions,
) -> Result<SimplificationPlan, MeshError> {
    let bad = |m: String| Err(MeshError::InvalidArgument(m));
    if frequencies_hz.is_empty() {
        return bad("no frequencies".into());
    }
    if let Some(f) = frequencies_hz
        .iter()
        .find(|f| !(**f > 0.0 && f.is_finite()))
    {
        return bad(format!("frequency {f} Hz"));
    }
    if !(opts.elements_per_wavelength >= 2.0 && opts.elements_per_wavelength.is_finite()) {
        return bad(format!(
            "elements per wavelength {} < 2",
            opts.elements_per_wavelength
        ));
    }
    if !(opts.cost_exponent > 0.0 && opts.cost_exponent.is_finite()) {
        return bad(format!("cost exponent {}", opts.cost_exponent));
    }
    if opts.medium.check().is_err() {
        return bad("invalid medium".into());
    }
    let area = match surface {
        Surface::Mesh(m) => m.area(),
        Surface::Area(a) => a,
    };
    if !(area > 0.0 && area.is_finite()) {
        return bad(format!("surface area {area} m²"));
    }
    let entries: Vec<PlanEntry> = frequencies_hz
        .iter()
        .map(|&f| {
            let l = target_edge_length(f, &opts.medium, opts.elements_per_wavelength);
            PlanEntry {
                frequency_hz: f,
                target_edge_length_m: l,
                element_count: (2.0 * area / (l * l)).ceil() as u64,
            }
        })
        .collect();
    let e = opts.cost_exponent;
    let max_n = entries
        .iter()
        .map(|x| x.element_count)
        .max()
        .expect("nonempty") as f64;
    let naive_cost = entries.len() as f64 * max_n.powf(e);
    let adaptive_cost: f64 = entries
        .iter()
        .map(|x| (x.element_count as f64).powf(e))
        .sum();
    Ok(SimplificationPlan {
        area_m2: area,
        cost_exponent: e,
        entries,
        naive_cost,
        adaptive_cost,
        speedup: naive_cost / adaptive_cost,
    })
}

/// Decimates `mesh` at every planned edge length, in parallel.
pub fn realize(
    mesh: &SurfaceMesh,
    plan: &SimplificationPlan,
) -> Result<Vec<SurfaceMesh>, MeshError> {
    par::map_slice(&plan.entries, 1, |e| {
        cluster_decimate(mesh, e.target_edge_length_m)
    })
    .into_iter()
    .collect()
}

pub fn plan_csv(plan: &SimplificationPlan) -> String {
    let mut s = String::from("frequency_hz,target_edge_length_m,element_count\n");
    for e in &plan.entries {
        let _ = writeln!(
            s,
            "{},{},{}",
            e.frequency_hz, e.target_edge_length_m, e.element_count
        );
    }
    s
}
