use super::Mesh;
use crate::error::Result;

/// Red refinement: every tetrahedron is split into 8 children through its
/// edge midpoints. The inner octahedron is cut along its shortest diagonal
/// (ties broken by diagonal index), which keeps the structured Kuhn family
/// shape-regular. Children inherit region markers; marked faces are split
/// into four marked children.
pub fn refine_uniform(mesh: &Mesh) -> Result<Mesh> {
    let nv = mesh.n_vertices();
    let mut vertices = mesh.vertices().to_vec();
    vertices.extend(
        mesh.edges()
            .iter()
            .map(|&[a, b]| (mesh.vertices()[a] + mesh.vertices()[b]) * 0.5),
    );
    let mid = |a: usize, b: usize| nv + mesh.edge_index(a, b).expect("edge of mesh");

    let mut cells = Vec::with_capacity(8 * mesh.n_cells());
    let mut markers = Vec::with_capacity(8 * mesh.n_cells());
    for (c, &[v0, v1, v2, v3]) in mesh.cells().iter().enumerate() {
        let (m01, m02, m03) = (mid(v0, v1), mid(v0, v2), mid(v0, v3));
        let (m12, m13, m23) = (mid(v1, v2), mid(v1, v3), mid(v2, v3));
        cells.push([v0, m01, m02, m03]);
        cells.push([m01, v1, m12, m13]);
        cells.push([m02, m12, v2, m23]);
        cells.push([m03, m13, m23, v3]);

        // Each diagonal with the 4-cycle of the remaining midpoints around it.
        let diagonals = [
            ([m01, m23], [m02, m03, m13, m12]),
            ([m02, m13], [m01, m03, m23, m12]),
            ([m03, m12], [m01, m02, m23, m13]),
        ];
        let len = |[a, b]: [usize; 2]| (vertices[a] - vertices[b]).norm();
        let mut best = 0;
        for d in 1..3 {
            if len(diagonals[d].0) < len(diagonals[best].0) {
                best = d;
            }
        }
        let ([a, b], ring) = diagonals[best];
        for i in 0..4 {
            cells.push([a, b, ring[i], ring[(i + 1) % 4]]);
        }
        markers.extend(std::iter::repeat(mesh.cell_markers()[c]).take(8));
    }

    let mut marked = Vec::new();
    for (f, &[a, b, c]) in mesh.faces().iter().enumerate() {
        let m = mesh.face_markers()[f];
        if m == 0 {
            continue;
        }
        let (ab, ac, bc) = (mid(a, b), mid(a, c), mid(b, c));
        marked.push(([a, ab, ac], m));
        marked.push(([b, ab, bc], m));
        marked.push(([c, ac, bc], m));
        marked.push(([ab, ac, bc], m));
    }
    Mesh::new(vertices, cells, markers, &marked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_box_mesh, BoxBounds};

    #[test]
    fn refine_single_cube() {
        let m = generate_box_mesh([1, 1, 1], BoxBounds::unit_cube()).unwrap();
        let r = refine_uniform(&m).unwrap();
        assert_eq!(r.n_cells(), 48);
        assert!((r.total_volume() - 1.0).abs() < 1e-12);
        r.validate().unwrap();
    }

    #[test]
    fn refined_box_matches_direct_generation_counts() {
        let coarse = generate_box_mesh([2, 2, 2], BoxBounds::unit_cube()).unwrap();
        let fine = generate_box_mesh([4, 4, 4], BoxBounds::unit_cube()).unwrap();
        let r = refine_uniform(&coarse).unwrap();
        assert_eq!(r.n_cells(), fine.n_cells());
        assert_eq!(r.n_vertices(), fine.n_vertices());
        assert!((r.total_volume() - fine.total_volume()).abs() < 1e-12);
        assert!((r.max_diameter() - 0.5 * coarse.max_diameter()).abs() < 1e-12);
        r.validate().unwrap();
    }

    #[test]
    fn markers_are_inherited() {
        let mut m = generate_box_mesh([2, 1, 1], BoxBounds::unit_cube()).unwrap();
        let markers: Vec<i32> = (0..m.n_cells())
            .map(|c| if m.cell_centroid(c).x < 0.5 { 1 } else { 2 })
            .collect();
        m = Mesh::new(m.vertices().to_vec(), m.cells().to_vec(), markers, &[]).unwrap();
        let r = refine_uniform(&m).unwrap();
        for c in 0..m.n_cells() {
            for k in 0..8 {
                assert_eq!(r.cell_markers()[8 * c + k], m.cell_markers()[c]);
            }
        }
        assert!((r.marked_volume(1) - 0.5).abs() < 1e-12);
        assert!((r.marked_volume(2) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn boundary_markers_follow_refinement() {
        let m = generate_box_mesh([1, 1, 1], BoxBounds::unit_cube()).unwrap();
        let r = refine_uniform(&m).unwrap();
        let marked = r.face_markers().iter().filter(|&&x| x == 1).count();
        assert_eq!(marked, 4 * 12);
        assert!(r.boundary_faces().all(|f| r.face_markers()[f] == 1));
    }
}
