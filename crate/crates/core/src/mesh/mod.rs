//! Tetrahedral meshes with full vertex/edge/face/cell topology.
//!
//! Orientation convention: every edge and face stores its vertices in
//! ascending global index order, and that order *is* the global orientation
//! of the entity (edges point from the lower to the higher index, a face's
//! reference normal is `(x_b - x_a) x (x_c - x_a)` for `a < b < c`).
//!
//! Cells are stored in canonical vertex order: ascending global index, with
//! the last two vertices swapped when that is needed to make the signed
//! volume positive. Consequently the first local vertex of every local face
//! is also the lowest global vertex of that face; finite element spaces rely
//! on this to express every local-to-global orientation change as a
//! permutation plus a sign.

mod box_gen;
mod gmsh;
mod refine;
mod sphere;
mod submesh;

pub use box_gen::{generate_box_mesh, BoxBounds};
pub use gmsh::{read_gmsh_msh, read_gmsh_msh_file, write_gmsh_msh};
pub use refine::refine_uniform;
pub use sphere::{generate_sphere_in_sphere, SphereMeshSpec};
pub use submesh::{extract_submesh, Submesh};

use nalgebra::{Matrix3, Vector3};

use crate::error::{invalid, Error, Result};

pub type Vec3 = Vector3<f64>;

/// Local edges of a tetrahedron, as pairs of local vertex indices.
pub const LOCAL_EDGES: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];

/// Local faces of a tetrahedron; face `i` is opposite local vertex `i`.
pub const LOCAL_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];

/// Sentinel for "no cell" in [`Mesh::face_cells`].
pub const NO_CELL: usize = usize::MAX;

/// Relative threshold (times the cell scale cubed) below which a cell is degenerate.
pub const DEGENERATE_TOL: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Vec3>,
    cells: Vec<[usize; 4]>,
    edges: Vec<[usize; 2]>,
    faces: Vec<[usize; 3]>,
    cell_edges: Vec<[usize; 6]>,
    cell_faces: Vec<[usize; 4]>,
    face_cells: Vec<[usize; 2]>,
    cell_markers: Vec<i32>,
    face_markers: Vec<i32>,
}

impl Mesh {
    /// Builds a mesh and its topology.
    ///
    /// `cells` may come in any vertex order; they are reordered canonically.
    /// `marked_faces` attaches markers to faces given by their three vertices
    /// (any order). A marked face that is not a face of some cell is an error.
    pub fn new(
        vertices: Vec<Vec3>,
        cells: Vec<[usize; 4]>,
        cell_markers: Vec<i32>,
        marked_faces: &[([usize; 3], i32)],
    ) -> Result<Self> {
        if cells.is_empty() {
            return Err(invalid("mesh has no cells"));
        }
        if cell_markers.len() != cells.len() {
            return Err(invalid(format!(
                "{} cell markers for {} cells",
                cell_markers.len(),
                cells.len()
            )));
        }
        let nv = vertices.len();
        let mut canon = Vec::with_capacity(cells.len());
        for (c, cell) in cells.iter().enumerate() {
            if let Some(&v) = cell.iter().find(|&&v| v >= nv) {
                return Err(invalid(format!("cell {c} references missing vertex {v}")));
            }
            canon.push(canonical_cell(&vertices, *cell, c)?);
        }

        let mut edges: Vec<[usize; 2]> = canon
            .iter()
            .flat_map(|c| LOCAL_EDGES.iter().map(move |&[a, b]| sorted2(c[a], c[b])))
            .collect();
        edges.sort_unstable();
        edges.dedup();

        let mut faces: Vec<[usize; 3]> = canon
            .iter()
            .flat_map(|c| LOCAL_FACES.iter().map(move |&[a, b, d]| sorted3(c[a], c[b], c[d])))
            .collect();
        faces.sort_unstable();
        faces.dedup();

        let mut cell_edges = Vec::with_capacity(canon.len());
        let mut cell_faces = Vec::with_capacity(canon.len());
        let mut face_cells = vec![[NO_CELL; 2]; faces.len()];
        for (ci, c) in canon.iter().enumerate() {
            let mut ce = [0usize; 6];
            for (k, &[a, b]) in LOCAL_EDGES.iter().enumerate() {
                ce[k] = edges.binary_search(&sorted2(c[a], c[b])).expect("edge exists");
            }
            let mut cf = [0usize; 4];
            for (k, &[a, b, d]) in LOCAL_FACES.iter().enumerate() {
                let f = faces
                    .binary_search(&sorted3(c[a], c[b], c[d]))
                    .expect("face exists");
                cf[k] = f;
                let slot = &mut face_cells[f];
                if slot[0] == NO_CELL {
                    slot[0] = ci;
                } else if slot[1] == NO_CELL {
                    slot[1] = ci;
                } else {
                    return Err(invalid(format!("face {:?} shared by more than two cells", faces[f])));
                }
            }
            cell_edges.push(ce);
            cell_faces.push(cf);
        }

        let mut face_markers = vec![0; faces.len()];
        for &(fv, marker) in marked_faces {
            let key = sorted3(fv[0], fv[1], fv[2]);
            let f = faces.binary_search(&key).map_err(|_| {
                invalid(format!("marked face {fv:?} is not a face of the mesh"))
            })?;
            face_markers[f] = marker;
        }

        Ok(Self {
            vertices,
            cells: canon,
            edges,
            faces,
            cell_edges,
            cell_faces,
            face_cells,
            cell_markers,
            face_markers,
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }
    pub fn cells(&self) -> &[[usize; 4]] {
        &self.cells
    }
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }
    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }
    pub fn cell_edges(&self) -> &[[usize; 6]] {
        &self.cell_edges
    }
    pub fn cell_faces(&self) -> &[[usize; 4]] {
        &self.cell_faces
    }
    /// Incident cells per face; the second slot is [`NO_CELL`] on the boundary.
    pub fn face_cells(&self) -> &[[usize; 2]] {
        &self.face_cells
    }
    pub fn cell_markers(&self) -> &[i32] {
        &self.cell_markers
    }
    /// Marker per face, `0` when the face carries none.
    pub fn face_markers(&self) -> &[i32] {
        &self.face_markers
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }
    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }
    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn is_boundary_face(&self, face: usize) -> bool {
        self.face_cells[face][1] == NO_CELL
    }

    pub fn boundary_faces(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_faces()).filter(move |&f| self.is_boundary_face(f))
    }

    /// Local index (0..4) of `face` within `cell`.
    pub fn local_face_index(&self, cell: usize, face: usize) -> Option<usize> {
        self.cell_faces[cell].iter().position(|&f| f == face)
    }

    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        self.edges.binary_search(&sorted2(a, b)).ok()
    }

    pub fn face_index(&self, a: usize, b: usize, c: usize) -> Option<usize> {
        self.faces.binary_search(&sorted3(a, b, c)).ok()
    }

    pub fn cell_vertices(&self, cell: usize) -> [Vec3; 4] {
        self.cells[cell].map(|v| self.vertices[v])
    }

    pub fn cell_volume(&self, cell: usize) -> f64 {
        let [a, b, c, d] = self.cell_vertices(cell);
        signed_volume(&a, &b, &c, &d)
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.n_cells()).map(|c| self.cell_volume(c)).sum()
    }

    pub fn marked_volume(&self, marker: i32) -> f64 {
        (0..self.n_cells())
            .filter(|&c| self.cell_markers[c] == marker)
            .map(|c| self.cell_volume(c))
            .sum()
    }

    pub fn cell_diameter(&self, cell: usize) -> f64 {
        let p = self.cell_vertices(cell);
        LOCAL_EDGES
            .iter()
            .map(|&[a, b]| (p[b] - p[a]).norm())
            .fold(0.0, f64::max)
    }

    /// Maximum cell diameter `h`.
    pub fn max_diameter(&self) -> f64 {
        (0..self.n_cells()).map(|c| self.cell_diameter(c)).fold(0.0, f64::max)
    }

    pub fn face_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.faces[face].map(|v| self.vertices[v]);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn face_centroid(&self, face: usize) -> Vec3 {
        let [a, b, c] = self.faces[face].map(|v| self.vertices[v]);
        (a + b + c) / 3.0
    }

    pub fn cell_centroid(&self, cell: usize) -> Vec3 {
        let [a, b, c, d] = self.cell_vertices(cell);
        (a + b + c + d) / 4.0
    }

    /// Unit normal of `face` pointing out of `cell`.
    pub fn outward_normal(&self, cell: usize, face: usize) -> Vec3 {
        let [a, b, c] = self.faces[face].map(|v| self.vertices[v]);
        let n = (b - a).cross(&(c - a)).normalize();
        if n.dot(&(self.cell_centroid(cell) - a)) > 0.0 {
            -n
        } else {
            n
        }
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.n_vertices() as i64 - self.n_edges() as i64 + self.n_faces() as i64
            - self.n_cells() as i64
    }

    /// Distinct cell markers in ascending order.
    pub fn region_markers(&self) -> Vec<i32> {
        let mut m = self.cell_markers.clone();
        m.sort_unstable();
        m.dedup();
        m
    }

    /// Distinct nonzero face markers in ascending order.
    pub fn face_marker_values(&self) -> Vec<i32> {
        let mut m: Vec<i32> = self.face_markers.iter().copied().filter(|&m| m != 0).collect();
        m.sort_unstable();
        m.dedup();
        m
    }

    /// Affine map from the reference tetrahedron onto `cell`.
    pub fn affine_map(&self, cell: usize) -> Result<AffineMap> {
        if cell >= self.n_cells() {
            return Err(invalid(format!("cell {cell} out of range")));
        }
        AffineMap::from_vertices(&self.cell_vertices(cell), cell)
    }

    /// Checks every structural invariant of the mesh: positive volumes,
    /// ascending entity vertex order, face incidence, conformity (the two
    /// cells of an interior face lie on opposite sides) and the
    /// Euler–Poincaré identity `V - E + F - C = 1`.
    pub fn validate(&self) -> Result<()> {
        for c in 0..self.n_cells() {
            let map = self.affine_map(c)?;
            if map.det <= 0.0 {
                return Err(invalid(format!("cell {c} has non-positive volume")));
            }
        }
        if self.edges.iter().any(|e| e[0] >= e[1]) {
            return Err(invalid("edge vertices not ascending"));
        }
        if self.faces.iter().any(|f| f[0] >= f[1] || f[1] >= f[2]) {
            return Err(invalid("face vertices not ascending"));
        }
        for (f, fc) in self.face_cells.iter().enumerate() {
            if fc[0] == NO_CELL {
                return Err(invalid(format!("face {f} has no incident cell")));
            }
            if fc[1] != NO_CELL {
                let n0 = self.outward_normal(fc[0], f);
                let n1 = self.outward_normal(fc[1], f);
                if n0.dot(&n1) > -0.5 {
                    return Err(invalid(format!("cells around face {f} overlap")));
                }
            }
        }
        let chi = self.euler_characteristic();
        if chi != 1 {
            return Err(invalid(format!("Euler characteristic {chi} != 1")));
        }
        Ok(())
    }
}

/// Affine map `x = origin + J x̂` from the reference tetrahedron
/// `{(0,0,0), (1,0,0), (0,1,0), (0,0,1)}`.
#[derive(Debug, Clone, Copy)]
pub struct AffineMap {
    pub origin: Vec3,
    pub jacobian: Matrix3<f64>,
    pub det: f64,
    pub inv: Matrix3<f64>,
    pub inv_t: Matrix3<f64>,
}

impl AffineMap {
    pub fn from_vertices(p: &[Vec3; 4], cell: usize) -> Result<Self> {
        let jacobian = Matrix3::from_columns(&[p[1] - p[0], p[2] - p[0], p[3] - p[0]]);
        let det = jacobian.determinant();
        let scale = LOCAL_EDGES
            .iter()
            .map(|&[a, b]| (p[b] - p[a]).norm())
            .fold(0.0, f64::max);
        if !(det.abs() >= DEGENERATE_TOL * scale.powi(3)) || scale == 0.0 {
            return Err(Error::DegenerateCell { cell, det });
        }
        let inv = jacobian.try_inverse().ok_or(Error::DegenerateCell { cell, det })?;
        Ok(Self {
            origin: p[0],
            jacobian,
            det,
            inv,
            inv_t: inv.transpose(),
        })
    }

    pub fn map(&self, xref: &Vec3) -> Vec3 {
        self.origin + self.jacobian * xref
    }

    pub fn inverse_map(&self, x: &Vec3) -> Vec3 {
        self.inv * (x - self.origin)
    }
}

pub fn signed_volume(a: &Vec3, b: &Vec3, c: &Vec3, d: &Vec3) -> f64 {
    (b - a).cross(&(c - a)).dot(&(d - a)) / 6.0
}

pub(crate) fn sorted2(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

pub(crate) fn sorted3(a: usize, b: usize, c: usize) -> [usize; 3] {
    let mut v = [a, b, c];
    v.sort_unstable();
    v
}

fn canonical_cell(vertices: &[Vec3], cell: [usize; 4], index: usize) -> Result<[usize; 4]> {
    let mut c = cell;
    c.sort_unstable();
    if c.windows(2).any(|w| w[0] == w[1]) {
        return Err(invalid(format!("cell {index} repeats a vertex")));
    }
    let p = c.map(|v| vertices[v]);
    // Degeneracy check shares the threshold with AffineMap.
    let map = AffineMap::from_vertices(&p, index)?;
    if map.det < 0.0 {
        c.swap(2, 3);
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_tet() -> Mesh {
        Mesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
                Vec3::new(0.0, 0.0, 1.0),
            ],
            vec![[0, 1, 2, 3]],
            vec![1],
            &[],
        )
        .unwrap()
    }

    #[test]
    fn reference_tet_has_identity_map() {
        let m = reference_tet();
        let map = m.affine_map(0).unwrap();
        assert_eq!(map.jacobian, Matrix3::identity());
        assert_eq!(map.det, 1.0);
        m.validate().unwrap();
    }

    #[test]
    fn scaled_tet_has_det_eight() {
        let m = Mesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(2.0, 0.0, 0.0),
                Vec3::new(0.0, 2.0, 0.0),
                Vec3::new(0.0, 0.0, 2.0),
            ],
            vec![[0, 1, 2, 3]],
            vec![1],
            &[],
        )
        .unwrap();
        let map = m.affine_map(0).unwrap();
        assert!((map.det - 8.0).abs() < 1e-14);
        assert!((map.det - 6.0 * m.cell_volume(0)).abs() < 1e-14);
    }

    #[test]
    fn negatively_oriented_input_is_canonicalized() {
        let m = Mesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 0.0, 1.0),
            ],
            vec![[3, 2, 1, 0]],
            vec![1],
            &[],
        )
        .unwrap();
        assert_eq!(m.cells()[0], [0, 1, 3, 2]);
        assert!(m.cell_volume(0) > 0.0);
        m.validate().unwrap();
    }

    #[test]
    fn degenerate_cell_is_rejected() {
        let err = Mesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
                Vec3::new(1.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2, 3]],
            vec![1],
            &[],
        )
        .unwrap_err();
        assert!(matches!(err, Error::DegenerateCell { .. }));
    }

    #[test]
    fn marked_face_must_exist() {
        let err = Mesh::new(
            reference_tet().vertices().to_vec(),
            vec![[0, 1, 2, 3]],
            vec![1],
            &[([0, 1, 7], 2)],
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn outward_normals_point_away() {
        let m = reference_tet();
        for lf in 0..4 {
            let f = m.cell_faces()[0][lf];
            let n = m.outward_normal(0, f);
            let to_face = m.face_centroid(f) - m.cell_centroid(0);
            assert!(n.dot(&to_face) > 0.0);
        }
    }
}
