//! Binary STL of the printable shell around a voxel cavity.

use thiserror::Error;

use super::VoxelGrid;

const HEADER: &[u8] = b"acouforge voxel shell";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StlError {
    #[error("nothing to export: the voxel grid has no occupied cells")]
    NothingToExport,
    #[error("wall thickness {wall} is thinner than one cell ({cell})")]
    WallTooThin { wall: f64, cell: f64 },
    #[error("malformed STL: {0}")]
    Malformed(String),
}

/// Solid = cavity dilated by `layers` cells (Chebyshev metric) minus the cavity,
/// on a grid padded by `layers` on every side.
fn shell(grid: &VoxelGrid, layers: usize) -> ([usize; 3], Vec<bool>) {
    let dims = [
        grid.dims[0] + 2 * layers,
        grid.dims[1] + 2 * layers,
        grid.dims[2] + 2 * layers,
    ];
    let idx = |c: [usize; 3]| c[0] + dims[0] * (c[1] + dims[1] * c[2]);
    let mut cavity = vec![false; dims[0] * dims[1] * dims[2]];
    for c in grid.occupied_cells() {
        cavity[idx([c[0] + layers, c[1] + layers, c[2] + layers])] = true;
    }
    // separable box dilation, one axis at a time
    let mut dilated = cavity.clone();
    for axis in 0..3 {
        let src = dilated.clone();
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    let c = [i, j, k];
                    if src[idx(c)] {
                        continue;
                    }
                    let lo = c[axis].saturating_sub(layers);
                    let hi = (c[axis] + layers).min(dims[axis] - 1);
                    let hit = (lo..=hi).any(|v| {
                        let mut n = c;
                        n[axis] = v;
                        src[idx(n)]
                    });
                    if hit {
                        dilated[idx(c)] = true;
                    }
                }
            }
        }
    }
    let solid = dilated
        .iter()
        .zip(&cavity)
        .map(|(&d, &c)| d && !c)
        .collect();
    (dims, solid)
}

/// Binary STL: 80-byte header, u32 triangle count, 50-byte little-endian
/// records. Two triangles per exposed solid face, wound outward.
pub fn export_stl(grid: &VoxelGrid, wall_thickness: f64) -> Result<Vec<u8>, StlError> {
    if grid.occupied_count() == 0 {
        return Err(StlError::NothingToExport);
    }
    let h = grid.cell_size_m;
    if !(wall_thickness >= h) {
        return Err(StlError::WallTooThin {
            wall: wall_thickness,
            cell: h,
        });
    }
    let layers = ((wall_thickness / h) - 1e-9).ceil() as usize;
    let (dims, solid) = shell(grid, layers);
    let idx = |c: [usize; 3]| c[0] + dims[0] * (c[1] + dims[1] * c[2]);
    let origin = [
        grid.origin_m[0] - layers as f64 * h,
        grid.origin_m[1] - layers as f64 * h,
        grid.origin_m[2] - layers as f64 * h,
    ];

    let mut triangles: Vec<[[f32; 3]; 3]> = Vec::new();
    let mut normals: Vec<[f32; 3]> = Vec::new();
    for k in 0..dims[2] {
        for j in 0..dims[1] {
            for i in 0..dims[0] {
                let c = [i, j, k];
                if !solid[idx(c)] {
                    continue;
                }
                for axis in 0..3 {
                    for positive in [false, true] {
                        let exposed = if positive {
                            c[axis] + 1 >= dims[axis] || {
                                let mut n = c;
                                n[axis] += 1;
                                !solid[idx(n)]
                            }
                        } else {
                            c[axis] == 0 || {
                                let mut n = c;
                                n[axis] -= 1;
                                !solid[idx(n)]
                            }
                        };
                        if exposed {
                            push_face(&mut triangles, &mut normals, origin, h, c, axis, positive);
                        }
                    }
                }
            }
        }
    }

    let mut out = Vec::with_capacity(84 + 50 * triangles.len());
    let mut header = [0u8; 80];
    header[..HEADER.len()].copy_from_slice(HEADER);
    out.extend_from_slice(&header);
    out.extend_from_slice(&(triangles.len() as u32).to_le_bytes());
    for (tri, n) in triangles.iter().zip(&normals) {
        for v in std::iter::once(n).chain(tri.iter()) {
            for x in v {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out.extend_from_slice(&0u16.to_le_bytes());
    }
    Ok(out)
}

fn push_face(
    triangles: &mut Vec<[[f32; 3]; 3]>,
    normals: &mut Vec<[f32; 3]>,
    origin: [f64; 3],
    h: f64,
    c: [usize; 3],
    axis: usize,
    positive: bool,
) {
    let u = (axis + 1) % 3;
    let v = (axis + 2) % 3;
    let corner = |du: usize, dv: usize| {
        let mut p = [c[0] as f64, c[1] as f64, c[2] as f64];
        if positive {
            p[axis] += 1.0;
        }
        p[u] += du as f64;
        p[v] += dv as f64;
        [
            (origin[0] + p[0] * h) as f32,
            (origin[1] + p[1] * h) as f32,
            (origin[2] + p[2] * h) as f32,
        ]
    };
    // e_u × e_v = e_axis, so (0,0) (1,0) (1,1) winds toward +axis
    let (p0, p1, p2, p3) = (corner(0, 0), corner(1, 0), corner(1, 1), corner(0, 1));
    let mut n = [0.0f32; 3];
    n[axis] = if positive { 1.0 } else { -1.0 };
    if positive {
        triangles.push([p0, p1, p2]);
        triangles.push([p0, p2, p3]);
    } else {
        triangles.push([p0, p2, p1]);
        triangles.push([p0, p3, p2]);
    }
    normals.push(n);
    normals.push(n);
}

fn read_triangles(bytes: &[u8]) -> Result<Vec<[[f64; 3]; 3]>, StlError> {
    let count = stl_triangle_count(bytes)?;
    let mut out = Vec::with_capacity(count);
    for t in 0..count {
        let rec = &bytes[84 + 50 * t..84 + 50 * (t + 1)];
        let f = |o: usize| f32::from_le_bytes(rec[o..o + 4].try_into().unwrap()) as f64;
        let vert = |base: usize| [f(base), f(base + 4), f(base + 8)];
        out.push([vert(12), vert(24), vert(36)]);
    }
    Ok(out)
}

/// Triangle count from the header, checked against the byte length.
pub fn stl_triangle_count(bytes: &[u8]) -> Result<usize, StlError> {
    if bytes.len() < 84 {
        return Err(StlError::Malformed(
            "shorter than the 84-byte preamble".into(),
        ));
    }
    let count = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
    if bytes.len() != 84 + 50 * count {
        return Err(StlError::Malformed(format!(
            "{} bytes for {count} triangles",
            bytes.len()
        )));
    }
    Ok(count)
}

/// Enclosed signed volume (divergence theorem); positive for outward winding.
pub fn stl_signed_volume(bytes: &[u8]) -> Result<f64, StlError> {
    Ok(read_triangles(bytes)?
        .iter()
        .map(|[a, b, c]| {
            let cross = [
                b[1] * c[2] - b[2] * c[1],
                b[2] * c[0] - b[0] * c[2],
                b[0] * c[1] - b[1] * c[0],
            ];
            (a[0] * cross[0] + a[1] * cross[1] + a[2] * cross[2]) / 6.0
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_cell() -> VoxelGrid {
        let mut g = VoxelGrid::empty([1, 1, 1], 0.01, [0.0; 3]);
        g.set([0, 0, 0], true);
        g
    }

    /// Brute-force face count: every (solid, not-solid) adjacent pair, with
    /// everything outside the padded box counted as empty.
    fn exposed_faces(grid: &VoxelGrid, layers: usize) -> usize {
        let (dims, solid) = shell(grid, layers);
        let at = |c: [i64; 3]| {
            if (0..3).any(|a| c[a] < 0 || c[a] >= dims[a] as i64) {
                false
            } else {
                solid[c[0] as usize + dims[0] * (c[1] as usize + dims[1] * c[2] as usize)]
            }
        };
        let mut faces = 0;
        for k in -1..=dims[2] as i64 {
            for j in -1..=dims[1] as i64 {
                for i in -1..=dims[0] as i64 {
                    for d in [[1, 0, 0], [0, 1, 0], [0, 0, 1]] {
                        let a = at([i, j, k]);
                        let b = at([i + d[0], j + d[1], k + d[2]]);
                        if a != b {
                            faces += 1;
                        }
                    }
                }
            }
        }
        faces
    }

    #[test]
    fn single_cell_shell() {
        let g = single_cell();
        let bytes = export_stl(&g, 0.01).unwrap();
        let tris = stl_triangle_count(&bytes).unwrap();
        // 3×3×3 block minus its centre: 54 outer faces + 6 inner faces
        assert_eq!(exposed_faces(&g, 1), 60);
        assert_eq!(tris, 2 * 60);
        assert_eq!(bytes.len(), 84 + 50 * tris);
        let vol = stl_signed_volume(&bytes).unwrap();
        assert!((vol - 26.0 * 1e-6).abs() < 1e-9, "{vol}");
    }

    #[test]
    fn errors() {
        let empty = VoxelGrid::empty([2, 2, 2], 0.01, [0.0; 3]);
        assert_eq!(export_stl(&empty, 0.02), Err(StlError::NothingToExport));
        assert!(matches!(
            export_stl(&single_cell(), 0.005),
            Err(StlError::WallTooThin { .. })
        ));
    }
}
