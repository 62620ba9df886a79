use serde::{Deserialize, Serialize};

use super::{generate_box_mesh, BoxBounds, Mesh, NO_CELL};
use crate::error::{invalid, Result};

/// Parameters of the sphere-in-sphere generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SphereMeshSpec {
    /// Cells from the centre to the outer boundary along each axis.
    pub n_radial: usize,
    /// How many of those cells lie inside the inner sphere.
    pub n_inner: usize,
    pub r_inner: f64,
    pub r_outer: f64,
    /// Region marker of the inner ball.
    pub inner_marker: i32,
    /// Region marker of the shell between the spheres.
    pub outer_marker: i32,
    /// Face marker of the outer sphere.
    pub boundary_marker: i32,
    /// Face marker of the inner sphere (material interface).
    pub interface_marker: i32,
}

impl Default for SphereMeshSpec {
    fn default() -> Self {
        Self {
            n_radial: 6,
            n_inner: 2,
            r_inner: 2.0,
            r_outer: 20.0,
            inner_marker: 1,
            outer_marker: 2,
            boundary_marker: 1,
            interface_marker: 2,
        }
    }
}

/// Polyhedral ball of radius `r_outer` containing a concentric ball of
/// radius `r_inner`, obtained by mapping a structured Kuhn cube onto the
/// ball: cube shells `|p|_inf = s` go to spheres, blending from cube-like at
/// the centre to spherical at the interface so the central cells stay well
/// shaped.
pub fn generate_sphere_in_sphere(spec: &SphereMeshSpec) -> Result<Mesh> {
    let (n, m) = (spec.n_radial, spec.n_inner);
    if m == 0 || n <= m {
        return Err(invalid(format!("need 0 < n_inner < n_radial, got {m}, {n}")));
    }
    if !(spec.r_inner > 0.0 && spec.r_outer > spec.r_inner) {
        return Err(invalid("need 0 < r_inner < r_outer"));
    }
    let half = n as f64;
    let cube = generate_box_mesh(
        [2 * n; 3],
        BoxBounds {
            lo: [-half; 3],
            hi: [half; 3],
        },
    )?;
    let mf = m as f64;
    let vertices = cube
        .vertices()
        .iter()
        .map(|p| {
            // Grid coordinates are integers; round away float noise.
            let p = p.map(f64::round);
            let s = p.amax();
            if s == 0.0 {
                return p;
            }
            let sphere_dir = p * (s / p.norm());
            let (rho, w) = if s <= mf {
                (spec.r_inner * s / mf, s / mf)
            } else {
                (spec.r_inner + (spec.r_outer - spec.r_inner) * (s - mf) / (half - mf), 1.0)
            };
            (p * (1.0 - w) + sphere_dir * w) * (rho / s)
        })
        .collect();
    let markers: Vec<i32> = cube
        .cells()
        .iter()
        .map(|c| {
            let inside = c.iter().all(|&v| cube.vertices()[v].amax() <= mf + 1e-9);
            if inside {
                spec.inner_marker
            } else {
                spec.outer_marker
            }
        })
        .collect();
    let mut marked = Vec::new();
    for f in 0..cube.n_faces() {
        let [c0, c1] = cube.face_cells()[f];
        if c1 == NO_CELL {
            marked.push((cube.faces()[f], spec.boundary_marker));
        } else if markers[c0] != markers[c1] {
            marked.push((cube.faces()[f], spec.interface_marker));
        }
    }
    Mesh::new(vertices, cube.cells().to_vec(), markers, &marked)
}
