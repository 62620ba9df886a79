use super::{Mesh, Vec3};
use crate::error::{invalid, Result};

/// Axis-aligned box `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxBounds {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl BoxBounds {
    pub fn unit_cube() -> Self {
        Self {
            lo: [0.0; 3],
            hi: [1.0; 3],
        }
    }
}

impl Default for BoxBounds {
    fn default() -> Self {
        Self::unit_cube()
    }
}

/// Structured mesh of a box: `n[0] x n[1] x n[2]` sub-cubes, each split into
/// six tetrahedra around its main diagonal (Kuhn / Freudenthal split).
///
/// All cells carry region marker 1 and all boundary faces carry marker 1.
pub fn generate_box_mesh(n: [usize; 3], bounds: BoxBounds) -> Result<Mesh> {
    if n.iter().any(|&k| k == 0) {
        return Err(invalid(format!("subdivision counts must be positive, got {n:?}")));
    }
    if (0..3).any(|a| !(bounds.hi[a] > bounds.lo[a])) {
        return Err(invalid(format!("degenerate box {bounds:?}")));
    }
    let [nx, ny, nz] = n;
    let vid = |i: usize, j: usize, k: usize| i + (nx + 1) * (j + (ny + 1) * k);
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                let t = [i as f64 / nx as f64, j as f64 / ny as f64, k as f64 / nz as f64];
                vertices.push(Vec3::from_fn(|a, _| {
                    bounds.lo[a] + t[a] * (bounds.hi[a] - bounds.lo[a])
                }));
            }
        }
    }

    const AXIS_ORDERS: [[usize; 3]; 6] =
        [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut cells = Vec::with_capacity(6 * nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                for order in AXIS_ORDERS {
                    let mut p = [i, j, k];
                    let mut tet = [vid(p[0], p[1], p[2]); 4];
                    for (s, &axis) in order.iter().enumerate() {
                        p[axis] += 1;
                        tet[s + 1] = vid(p[0], p[1], p[2]);
                    }
                    cells.push(tet);
                }
            }
        }
    }

    let mut marked = Vec::new();
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                if i == 0 || i + 1 == nx || j == 0 || j + 1 == ny || k == 0 || k + 1 == nz {
                    push_boundary_faces(&mut marked, [i, j, k], n, &vid);
                }
            }
        }
    }
    let markers = vec![1; cells.len()];
    Mesh::new(vertices, cells, markers, &marked)
}

/// Each square side of a Kuhn cube is cut by the diagonal through the
/// side's lowest and highest corners.
fn push_boundary_faces(
    out: &mut Vec<([usize; 3], i32)>,
    [i, j, k]: [usize; 3],
    n: [usize; 3],
    vid: &impl Fn(usize, usize, usize) -> usize,
) {
    let base = [i, j, k];
    for axis in 0..3 {
        for side in 0..2 {
            let at_boundary = if side == 0 { base[axis] == 0 } else { base[axis] + 1 == n[axis] };
            if !at_boundary {
                continue;
            }
            let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
            let corner = |du: usize, dv: usize| {
                let mut p = base;
                p[axis] += side;
                p[u] += du;
                p[v] += dv;
                vid(p[0], p[1], p[2])
            };
            let (c00, c10, c01, c11) = (corner(0, 0), corner(1, 0), corner(0, 1), corner(1, 1));
            out.push(([c00, c10, c11], 1));
            out.push(([c00, c01, c11], 1));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cube() {
        let m = generate_box_mesh([1, 1, 1], BoxBounds::unit_cube()).unwrap();
        assert_eq!(m.n_cells(), 6);
        assert_eq!(m.n_vertices(), 8);
        assert!((m.total_volume() - 1.0).abs() < 1e-14);
        // 12 cube edges + 6 face diagonals + 1 body diagonal
        assert_eq!(m.n_edges(), 19);
        assert_eq!(m.boundary_faces().count(), 12);
        assert!(m.boundary_faces().all(|f| m.face_markers()[f] == 1));
        m.validate().unwrap();
    }

    #[test]
    fn two_per_axis() {
        let m = generate_box_mesh([2, 2, 2], BoxBounds::unit_cube()).unwrap();
        assert_eq!(m.n_cells(), 48);
        assert_eq!(m.n_vertices(), 27);
        assert!((m.total_volume() - 1.0).abs() < 1e-14);
        m.validate().unwrap();
    }

    #[test]
    fn euler_identity_four_per_axis() {
        let m = generate_box_mesh([4, 4, 4], BoxBounds::unit_cube()).unwrap();
        assert_eq!(m.euler_characteristic(), 1);
        let marked = m.face_markers().iter().filter(|&&x| x == 1).count();
        assert_eq!(marked, m.boundary_faces().count());
        assert_eq!(marked, 6 * 16 * 2);
        m.validate().unwrap();
    }

    #[test]
    fn anisotropic_box() {
        let b = BoxBounds {
            lo: [-1.0, 0.0, 2.0],
            hi: [1.0, 0.5, 3.0],
        };
        let m = generate_box_mesh([3, 1, 2], b).unwrap();
        assert!((m.total_volume() - 1.0).abs() < 1e-13);
        m.validate().unwrap();
    }

    #[test]
    fn zero_count_rejected() {
        assert!(generate_box_mesh([0, 1, 1], BoxBounds::unit_cube()).is_err());
        let flat = BoxBounds {
            lo: [0.0; 3],
            hi: [1.0, 0.0, 1.0],
        };
        assert!(generate_box_mesh([1, 1, 1], flat).is_err());
    }
}
