//! Nedelec (first kind) and Raviart–Thomas spaces of order 1 and 2 on
//! affine tetrahedral meshes.
//!
//! Global DOFs are numbered entity by entity: Nedelec edge DOFs then face
//! DOFs, Raviart–Thomas face DOFs then cell DOFs. Every global functional is
//! defined through the ascending global vertex order of its entity, so the
//! restriction of a global basis function to a cell is `sign * local basis`.

pub mod poly;
pub mod reference;

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

pub use reference::{reference_element, CVec3, DofEntity, Functional, LocalDof, ReferenceElement};

use crate::error::{invalid, Result};
use crate::mesh::{AffineMap, Mesh, Vec3, LOCAL_EDGES, LOCAL_FACES, NO_CELL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpaceKind {
    Nedelec,
    RaviartThomas,
}

impl std::fmt::Display for SpaceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SpaceKind::Nedelec => write!(f, "Nedelec"),
            SpaceKind::RaviartThomas => write!(f, "RaviartThomas"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FESpace {
    kind: SpaceKind,
    order: usize,
    mesh: Arc<Mesh>,
    n_dofs: usize,
    n_local: usize,
    cell_dofs: Vec<(usize, i8)>,
    boundary_dof_mask: Vec<bool>,
    essential_dofs: Vec<usize>,
}

/// Basis values at a set of points of one cell, point-major:
/// entry `p * n_dofs + i` belongs to point `p` and local DOF `i`.
#[derive(Debug, Clone, Default)]
pub struct BasisValues {
    pub n_points: usize,
    pub n_dofs: usize,
    pub values: Vec<Vec3>,
    /// Curls (Nedelec only).
    pub curls: Vec<Vec3>,
    /// Divergences (Raviart–Thomas only).
    pub divs: Vec<f64>,
}

impl BasisValues {
    pub fn value(&self, p: usize, i: usize) -> &Vec3 {
        &self.values[p * self.n_dofs + i]
    }
}

fn rank3(g: [usize; 3]) -> [usize; 3] {
    [0, 1, 2].map(|j| g.iter().filter(|&&x| x < g[j]).count())
}

fn parity(rank: [usize; 3]) -> i8 {
    let inversions = (rank[0] > rank[1]) as u8 + (rank[0] > rank[2]) as u8 + (rank[1] > rank[2]) as u8;
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Local DOFs attached to local face `lf` or (Nedelec) to one of its edges.
pub fn dofs_on_local_face(elem: &ReferenceElement, lf: usize) -> Vec<usize> {
    let fv = LOCAL_FACES[lf];
    (0..elem.n_dofs())
        .filter(|&i| match elem.dofs[i].entity {
            DofEntity::Face(f) => f == lf,
            DofEntity::Edge(e) => LOCAL_EDGES[e].iter().all(|v| fv.contains(v)),
            DofEntity::Cell => false,
        })
        .collect()
}

/// Builds the global space of `kind` and `order` on `mesh`. With
/// `zero_normal_bc` (Raviart–Thomas only) the DOFs of boundary faces are
/// listed as essential, to be eliminated with value zero.
pub fn build_space(kind: SpaceKind, mesh: Arc<Mesh>, order: usize, zero_normal_bc: bool) -> Result<FESpace> {
    if zero_normal_bc && kind != SpaceKind::RaviartThomas {
        return Err(invalid("zero_normal_bc only applies to Raviart-Thomas spaces"));
    }
    let elem = reference_element(kind, order)?;
    let (per_edge, per_face, per_cell) = match (kind, order) {
        (SpaceKind::Nedelec, 1) => (1, 0, 0),
        (SpaceKind::Nedelec, _) => (2, 2, 0),
        (SpaceKind::RaviartThomas, 1) => (0, 1, 0),
        (SpaceKind::RaviartThomas, _) => (0, 3, 3),
    };
    let face_offset = per_edge * mesh.n_edges();
    let cell_offset = face_offset + per_face * mesh.n_faces();
    let n_dofs = cell_offset + per_cell * mesh.n_cells();
    let n_local = elem.n_dofs();

    let mut cell_dofs = Vec::with_capacity(n_local * mesh.n_cells());
    for c in 0..mesh.n_cells() {
        let g = mesh.cells()[c];
        for d in &elem.dofs {
            let entry = match d.entity {
                DofEntity::Edge(e) => {
                    let [a, b] = LOCAL_EDGES[e];
                    let orient = if g[a] < g[b] { 1 } else { -1 };
                    let sign = if d.k == 0 { orient } else { 1 };
                    (per_edge * mesh.cell_edges()[c][e] + d.k, sign)
                }
                DofEntity::Face(f) => {
                    let rank = rank3(LOCAL_FACES[f].map(|v| g[v]));
                    let base = face_offset + per_face * mesh.cell_faces()[c][f];
                    match kind {
                        SpaceKind::Nedelec => {
                            // Canonical cells put the lowest vertex of every face first.
                            debug_assert_eq!(rank[0], 0);
                            let pos = if rank[1] == 1 { d.k } else { 1 - d.k };
                            (base + pos, 1)
                        }
                        SpaceKind::RaviartThomas => {
                            let pos = if per_face == 1 { 0 } else { rank[d.k] };
                            (base + pos, parity(rank))
                        }
                    }
                }
                DofEntity::Cell => (cell_offset + per_cell * c + d.k, 1),
            };
            cell_dofs.push(entry);
        }
    }

    let mut boundary_dof_mask = vec![false; n_dofs];
    for f in mesh.boundary_faces() {
        let c = mesh.face_cells()[f][0];
        let lf = mesh.local_face_index(c, f).expect("face of its cell");
        for i in dofs_on_local_face(elem, lf) {
            boundary_dof_mask[cell_dofs[c * n_local + i].0] = true;
        }
    }
    let essential_dofs = if zero_normal_bc {
        (0..n_dofs).filter(|&i| boundary_dof_mask[i]).collect()
    } else {
        Vec::new()
    };
    Ok(FESpace {
        kind,
        order,
        mesh,
        n_dofs,
        n_local,
        cell_dofs,
        boundary_dof_mask,
        essential_dofs,
    })
}

impl FESpace {
    pub fn kind(&self) -> SpaceKind {
        self.kind
    }
    pub fn order(&self) -> usize {
        self.order
    }
    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }
    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }
    pub fn n_local_dofs(&self) -> usize {
        self.n_local
    }
    /// `(global index, sign)` of each local DOF of `cell`.
    pub fn cell_dofs(&self, cell: usize) -> &[(usize, i8)] {
        &self.cell_dofs[cell * self.n_local..(cell + 1) * self.n_local]
    }
    /// DOFs whose basis function has a nonzero trace on the mesh boundary.
    pub fn boundary_dof_mask(&self) -> &[bool] {
        &self.boundary_dof_mask
    }
    /// DOFs fixed to zero by the essential normal condition.
    pub fn essential_dofs(&self) -> &[usize] {
        &self.essential_dofs
    }
    /// DOFs left after eliminating the essential ones.
    pub fn n_free_dofs(&self) -> usize {
        self.n_dofs - self.essential_dofs.len()
    }
    pub fn reference(&self) -> &'static ReferenceElement {
        reference_element(self.kind, self.order).expect("order validated at build")
    }

    /// Reference-cell basis values and derivatives at `points`, without signs.
    pub fn tabulate(&self, points: &[Vec3]) -> BasisValues {
        let elem = self.reference();
        let n = elem.n_dofs();
        let mut out = BasisValues {
            n_points: points.len(),
            n_dofs: n,
            values: Vec::with_capacity(n * points.len()),
            ..Default::default()
        };
        for x in points {
            for b in &elem.basis {
                out.values.push(b.eval(x));
                match self.kind {
                    SpaceKind::Nedelec => out.curls.push(b.curl(x)),
                    SpaceKind::RaviartThomas => out.divs.push(b.div(x)),
                }
            }
        }
        out
    }

    /// Maps a reference tabulation onto `cell` with the Piola transform of
    /// the space and applies the global DOF signs.
    pub fn transform(&self, cell: usize, map: &AffineMap, reference: &BasisValues) -> BasisValues {
        let dofs = self.cell_dofs(cell);
        let n = reference.n_dofs;
        let mut out = BasisValues {
            n_points: reference.n_points,
            n_dofs: n,
            values: Vec::with_capacity(reference.values.len()),
            curls: Vec::with_capacity(reference.curls.len()),
            divs: Vec::with_capacity(reference.divs.len()),
        };
        let inv_det = 1.0 / map.det;
        for (idx, v) in reference.values.iter().enumerate() {
            let s = dofs[idx % n].1 as f64;
            match self.kind {
                SpaceKind::Nedelec => {
                    out.values.push(map.inv_t * v * s);
                    out.curls.push(map.jacobian * reference.curls[idx] * (s * inv_det));
                }
                SpaceKind::RaviartThomas => {
                    out.values.push(map.jacobian * v * (s * inv_det));
                    out.divs.push(reference.divs[idx] * s * inv_det);
                }
            }
        }
        out
    }

    /// Physical basis values and curls (Nedelec) or divergences
    /// (Raviart–Thomas) of `cell` at reference `points`.
    pub fn eval_basis(&self, cell: usize, points: &[Vec3]) -> Result<BasisValues> {
        if cell >= self.mesh.n_cells() {
            return Err(invalid(format!("cell {cell} out of range")));
        }
        for p in points {
            if p.iter().any(|&x| x < -1e-12) || p.sum() > 1.0 + 1e-12 {
                return Err(invalid(format!("point {p:?} outside the reference tetrahedron")));
            }
        }
        let map = self.mesh.affine_map(cell)?;
        Ok(self.transform(cell, &map, &self.tabulate(points)))
    }

    /// Pulls a physical field back to the reference cell of `cell`.
    fn pullback<'a>(&self, map: &'a AffineMap, f: &'a (dyn Fn(&Vec3) -> CVec3 + Sync)) -> impl Fn(&Vec3) -> CVec3 + 'a {
        let kind = self.kind;
        move |xr: &Vec3| {
            let u = f(&map.map(xr));
            let m = match kind {
                SpaceKind::Nedelec => map.jacobian.transpose(),
                SpaceKind::RaviartThomas => map.inv * map.det,
            };
            m.map(Complex64::from) * u
        }
    }

    /// Canonical interpolant: every global DOF functional applied to `f`.
    pub fn interpolate(self: &Arc<Self>, f: &(dyn Fn(&Vec3) -> CVec3 + Sync)) -> Result<FEField> {
        let mut owner = vec![(usize::MAX, 0usize); self.n_dofs];
        for c in 0..self.mesh.n_cells() {
            for (i, &(g, _)) in self.cell_dofs(c).iter().enumerate() {
                if owner[g].0 == usize::MAX {
                    owner[g] = (c, i);
                }
            }
        }
        let maps = (0..self.mesh.n_cells())
            .map(|c| self.mesh.affine_map(c))
            .collect::<Result<Vec<_>>>()?;
        let elem = self.reference();
        let coefficients = owner
            .par_iter()
            .map(|&(c, i)| {
                let pulled = self.pullback(&maps[c], f);
                let s = self.cell_dofs(c)[i].1 as f64;
                elem.functionals[i].apply(&elem.quadrature, &pulled) * s
            })
            .collect();
        FEField::new(self.clone(), coefficients)
    }

    /// Tangential traces `(n × φ) × n` of the Nedelec basis of the cell
    /// adjacent to boundary `face`, at face points `(s, t)` parametrizing
    /// `x = x₀ + s (x₁ - x₀) + t (x₂ - x₀)` over the ascending face vertices.
    pub fn boundary_tangential_trace(&self, face: usize, points: &[[f64; 2]]) -> Result<BoundaryTrace> {
        if self.kind != SpaceKind::Nedelec {
            return Err(invalid("tangential traces are defined for Nedelec spaces"));
        }
        if face >= self.mesh.n_faces() || !self.mesh.is_boundary_face(face) {
            return Err(invalid(format!("face {face} is not a boundary face")));
        }
        let cell = self.mesh.face_cells()[face][0];
        let ref_points = face_points_in_cell(&self.mesh, cell, face, points);
        let map = self.mesh.affine_map(cell)?;
        let normal = self.mesh.outward_normal(cell, face);
        let mut basis = self.transform(cell, &map, &self.tabulate(&ref_points));
        for v in basis.values.iter_mut() {
            *v -= normal * normal.dot(v);
        }
        Ok(BoundaryTrace {
            cell,
            normal,
            points: ref_points.iter().map(|x| map.map(x)).collect(),
            ref_points,
            dofs: self.cell_dofs(cell).to_vec(),
            traces: basis.values,
            n_dofs: self.n_local,
        })
    }
}

/// Reference coordinates in `cell` of face points `(s, t)` given over the
/// ascending vertices of `face`.
pub fn face_points_in_cell(mesh: &Mesh, cell: usize, face: usize, points: &[[f64; 2]]) -> Vec<Vec3> {
    let cv = mesh.cells()[cell];
    let local = mesh.faces()[face].map(|v| {
        let l = cv.iter().position(|&w| w == v).expect("face vertex in cell");
        reference::reference_vertex(l)
    });
    points
        .iter()
        .map(|&[s, t]| local[0] * (1.0 - s - t) + local[1] * s + local[2] * t)
        .collect()
}

/// Tangential traces of the local basis on one boundary face.
#[derive(Debug, Clone)]
pub struct BoundaryTrace {
    pub cell: usize,
    /// Outward unit normal.
    pub normal: Vec3,
    pub points: Vec<Vec3>,
    pub ref_points: Vec<Vec3>,
    pub dofs: Vec<(usize, i8)>,
    /// Point-major, signs applied.
    pub traces: Vec<Vec3>,
    pub n_dofs: usize,
}

/// A finite element function: coefficients with respect to a global basis.
#[derive(Debug, Clone)]
pub struct FEField {
    space: Arc<FESpace>,
    coefficients: Vec<Complex64>,
}

/// Field values and derivatives (curl or divergence) at points of one cell.
#[derive(Debug, Clone, Default)]
pub struct FieldValues {
    pub values: Vec<CVec3>,
    pub curls: Vec<CVec3>,
    pub divs: Vec<Complex64>,
}

impl FEField {
    pub fn new(space: Arc<FESpace>, coefficients: Vec<Complex64>) -> Result<Self> {
        if coefficients.len() != space.n_dofs() {
            return Err(invalid(format!(
                "{} coefficients for a space with {} DOFs",
                coefficients.len(),
                space.n_dofs()
            )));
        }
        Ok(Self { space, coefficients })
    }

    pub fn zeros(space: Arc<FESpace>) -> Self {
        let n = space.n_dofs();
        Self {
            space,
            coefficients: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn space(&self) -> &Arc<FESpace> {
        &self.space
    }
    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }
    pub fn into_coefficients(self) -> Vec<Complex64> {
        self.coefficients
    }

    /// Combines physical basis values of `cell` with the coefficients.
    pub fn combine(&self, cell: usize, basis: &BasisValues) -> FieldValues {
        let dofs = self.space.cell_dofs(cell);
        let n = basis.n_dofs;
        let mut out = FieldValues::default();
        for p in 0..basis.n_points {
            let mut v = CVec3::zeros();
            let mut c = CVec3::zeros();
            let mut d = Complex64::new(0.0, 0.0);
            for (i, &(g, _)) in dofs.iter().enumerate() {
                let a = self.coefficients[g];
                let k = p * n + i;
                v += basis.values[k].map(Complex64::from) * a;
                if let Some(cu) = basis.curls.get(k) {
                    c += cu.map(Complex64::from) * a;
                }
                if let Some(dv) = basis.divs.get(k) {
                    d += a * *dv;
                }
            }
            out.values.push(v);
            match self.space.kind {
                SpaceKind::Nedelec => out.curls.push(c),
                SpaceKind::RaviartThomas => out.divs.push(d),
            }
        }
        out
    }

    /// Values and derivatives on `cell` at reference `points`.
    pub fn eval(&self, cell: usize, points: &[Vec3]) -> Result<FieldValues> {
        let basis = self.space.eval_basis(cell, points)?;
        Ok(self.combine(cell, &basis))
    }
}

/// Cells on either side of each interior face, for continuity checks.
pub fn interior_faces(mesh: &Mesh) -> impl Iterator<Item = (usize, [usize; 2])> + '_ {
    mesh.face_cells()
        .iter()
        .enumerate()
        .filter(|(_, fc)| fc[1] != NO_CELL)
        .map(|(f, fc)| (f, *fc))
}
