use super::{Mesh, NO_CELL};
use crate::error::{invalid, Result};

/// The cells of a parent mesh carrying one region marker, as a mesh of their
/// own. Vertices are renumbered monotonically, so every submesh cell keeps
/// the local vertex order (and hence the affine map) of its parent cell.
#[derive(Debug, Clone)]
pub struct Submesh {
    mesh: Mesh,
    marker: i32,
    parent_cell: Vec<usize>,
    parent_vertex: Vec<usize>,
    parent_face: Vec<usize>,
}

impl Submesh {
    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }
    pub fn marker(&self) -> i32 {
        self.marker
    }
    pub fn parent_cell(&self) -> &[usize] {
        &self.parent_cell
    }
    pub fn parent_vertex(&self) -> &[usize] {
        &self.parent_vertex
    }
    pub fn parent_face(&self) -> &[usize] {
        &self.parent_face
    }

    /// True when this submesh was extracted from `parent`.
    pub fn is_submesh_of(&self, parent: &Mesh) -> bool {
        self.parent_cell.iter().all(|&c| c < parent.n_cells())
            && self.parent_vertex.iter().all(|&v| v < parent.n_vertices())
            && self.parent_cell.len() == parent.cell_markers().iter().filter(|&&m| m == self.marker).count()
            && self.parent_cell.iter().enumerate().all(|(sc, &pc)| {
                self.mesh.cells()[sc].map(|v| self.parent_vertex[v]) == parent.cells()[pc]
                    && self.mesh.cells()[sc]
                        .iter()
                        .all(|&v| self.mesh.vertices()[v] == parent.vertices()[self.parent_vertex[v]])
            })
    }
}

/// Extracts the cells with `region_marker`. Boundary faces of the submesh
/// are the faces with fewer than two incident marked cells; face markers of
/// the parent are kept.
pub fn extract_submesh(mesh: &Mesh, region_marker: i32) -> Result<Submesh> {
    let parent_cell: Vec<usize> = (0..mesh.n_cells())
        .filter(|&c| mesh.cell_markers()[c] == region_marker)
        .collect();
    if parent_cell.is_empty() {
        return Err(invalid(format!("no cell carries region marker {region_marker}")));
    }
    let mut used = vec![false; mesh.n_vertices()];
    for &c in &parent_cell {
        for &v in &mesh.cells()[c] {
            used[v] = true;
        }
    }
    let mut local = vec![usize::MAX; mesh.n_vertices()];
    let mut parent_vertex = Vec::new();
    for (v, &u) in used.iter().enumerate() {
        if u {
            local[v] = parent_vertex.len();
            parent_vertex.push(v);
        }
    }
    let vertices = parent_vertex.iter().map(|&v| mesh.vertices()[v]).collect();
    let cells = parent_cell
        .iter()
        .map(|&c| mesh.cells()[c].map(|v| local[v]))
        .collect();
    let marked: Vec<_> = (0..mesh.n_faces())
        .filter(|&f| {
            mesh.face_markers()[f] != 0
                && mesh.face_cells()[f]
                    .iter()
                    .any(|&c| c != NO_CELL && mesh.cell_markers()[c] == region_marker)
        })
        .map(|f| (mesh.faces()[f].map(|v| local[v]), mesh.face_markers()[f]))
        .collect();
    let sub = Mesh::new(vertices, cells, vec![region_marker; parent_cell.len()], &marked)?;
    let parent_face = sub
        .faces()
        .iter()
        .map(|fv| {
            let [a, b, c] = fv.map(|v| parent_vertex[v]);
            mesh.face_index(a, b, c).expect("submesh face exists in parent")
        })
        .collect();
    Ok(Submesh {
        mesh: sub,
        marker: region_marker,
        parent_cell,
        parent_vertex,
        parent_face,
    })
}
