//! Reference elements: prime bases, degrees of freedom and the dual (nodal)
//! bases on the reference tetrahedron.
//!
//! All functionals are defined through the local vertex order of the cell,
//! so they commute with the covariant (Nedelec) or contravariant
//! (Raviart–Thomas) Piola transform of an affine map.

use std::sync::OnceLock;

use nalgebra::{DMatrix, Vector3};
use num_complex::Complex64;

use super::poly::VecPoly;
use super::SpaceKind;
use crate::error::{invalid, Result};
use crate::mesh::{Vec3, LOCAL_EDGES, LOCAL_FACES};
use crate::quadrature::{gauss_line, tet_rule, tri_rule, TetRule, TriRule};

pub type CVec3 = Vector3<Complex64>;

pub const REFERENCE_VERTICES: [[f64; 3]; 4] = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

pub fn reference_vertex(i: usize) -> Vec3 {
    Vec3::from(REFERENCE_VERTICES[i])
}

/// Mesh entity a local DOF is attached to, by local index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofEntity {
    Edge(usize),
    Face(usize),
    Cell,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalDof {
    pub entity: DofEntity,
    /// Index of the DOF within its entity.
    pub k: usize,
}

/// Linear functionals on the reference cell, in terms of local vertices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Functional {
    /// `∫₀¹ u(x_a + s (x_b - x_a)) · (x_b - x_a) q(s) ds` with `q = 1` or `q = 2s - 1`.
    EdgeMoment { a: usize, b: usize, legendre: usize },
    /// `∫ u · (x_{v[k+1]} - x_{v[0]}) ds dt` over the reference triangle.
    FaceTangent { face: [usize; 3], k: usize },
    /// `∫ u · ((x_{v1} - x_{v0}) × (x_{v2} - x_{v0})) w ds dt`, where `w = 1`
    /// or the barycentric coordinate of face vertex `weight`.
    FaceFlux { face: [usize; 3], weight: Option<usize> },
    /// `∫ u · e_k` over the reference cell.
    Interior { k: usize },
}

/// Quadrature used for every functional; exact for the degree-2 prime
/// bases and accurate to degree `2r + 2` for interpolation.
#[derive(Debug, Clone)]
pub struct FunctionalQuadrature {
    pub line: Vec<(f64, f64)>,
    pub tri: TriRule,
    pub tet: TetRule,
}

impl FunctionalQuadrature {
    fn new() -> Self {
        Self {
            line: gauss_line(4),
            tri: tri_rule(6).expect("degree 6 triangle rule"),
            tet: tet_rule(6).expect("degree 6 tetrahedron rule"),
        }
    }
}

fn dot(u: &CVec3, t: &Vec3) -> Complex64 {
    u[0] * t[0] + u[1] * t[1] + u[2] * t[2]
}

impl Functional {
    pub fn apply(&self, q: &FunctionalQuadrature, f: &dyn Fn(&Vec3) -> CVec3) -> Complex64 {
        match *self {
            Functional::EdgeMoment { a, b, legendre } => {
                let (xa, xb) = (reference_vertex(a), reference_vertex(b));
                let t = xb - xa;
                q.line
                    .iter()
                    .map(|&(s, w)| {
                        let weight = if legendre == 0 { 1.0 } else { 2.0 * s - 1.0 };
                        dot(&f(&(xa + t * s)), &t) * (w * weight)
                    })
                    .sum()
            }
            Functional::FaceTangent { face, k } => {
                let [x0, x1, x2] = face.map(reference_vertex);
                let t = if k == 0 { x1 - x0 } else { x2 - x0 };
                q.tri
                    .iter()
                    .map(|(p, w)| dot(&f(&(x0 + (x1 - x0) * p[0] + (x2 - x0) * p[1])), &t) * w)
                    .sum()
            }
            Functional::FaceFlux { face, weight } => {
                let [x0, x1, x2] = face.map(reference_vertex);
                let n = (x1 - x0).cross(&(x2 - x0));
                q.tri
                    .iter()
                    .map(|(p, w)| {
                        let lambda = [1.0 - p[0] - p[1], p[0], p[1]];
                        let wt = weight.map_or(1.0, |v| lambda[v]);
                        dot(&f(&(x0 + (x1 - x0) * p[0] + (x2 - x0) * p[1])), &n) * (w * wt)
                    })
                    .sum()
            }
            Functional::Interior { k } => q.tet.iter().map(|(p, w)| f(&Vec3::from(*p))[k] * w).sum(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReferenceElement {
    pub kind: SpaceKind,
    pub order: usize,
    pub dofs: Vec<LocalDof>,
    pub functionals: Vec<Functional>,
    /// Dual basis: `functionals[i](basis[j]) = δ_ij`.
    pub basis: Vec<VecPoly>,
    pub quadrature: FunctionalQuadrature,
}

const VARS: [[u8; 3]; 3] = [[1, 0, 0], [0, 1, 0], [0, 0, 1]];

fn add_exp(a: [u8; 3], b: [u8; 3]) -> [u8; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

/// `a(x) · (x × e_k)`, with `a` the monomial of exponent `ea`.
fn rotation(k: usize, ea: [u8; 3]) -> VecPoly {
    let mut p = VecPoly::zero();
    // (x × e_k)_{k+1} = x_{k+2}, (x × e_k)_{k+2} = -x_{k+1}.
    let (i1, i2) = ((k + 1) % 3, (k + 2) % 3);
    p.add_term(i1, 1.0, add_exp(VARS[i2], ea));
    p.add_term(i2, -1.0, add_exp(VARS[i1], ea));
    p
}

/// `a(x) · x`.
fn radial(ea: [u8; 3]) -> VecPoly {
    let mut p = VecPoly::zero();
    for (i, v) in VARS.iter().enumerate() {
        p.add_term(i, 1.0, add_exp(*v, ea));
    }
    p
}

/// `(P_{r-1})³`.
fn full_vector_polys(order: usize) -> Vec<VecPoly> {
    let monos: &[[u8; 3]] = if order == 1 {
        &[[0, 0, 0]]
    } else {
        &[[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]]
    };
    let mut out = Vec::new();
    for i in 0..3 {
        for &e in monos {
            let mut p = VecPoly::zero();
            p.add_term(i, 1.0, e);
            out.push(p);
        }
    }
    out
}

fn prime_basis(kind: SpaceKind, order: usize) -> Vec<VecPoly> {
    let mut out = full_vector_polys(order);
    match (kind, order) {
        (SpaceKind::Nedelec, 1) => out.extend((0..3).map(|k| rotation(k, [0, 0, 0]))),
        (SpaceKind::Nedelec, _) => {
            // x × (x e₁ + y e₂ + z e₃) = 0, so z (x × e₃) is dropped.
            for (ia, &ea) in VARS.iter().enumerate() {
                for k in 0..3 {
                    if !(ia == 2 && k == 2) {
                        out.push(rotation(k, ea));
                    }
                }
            }
        }
        (SpaceKind::RaviartThomas, 1) => out.push(radial([0, 0, 0])),
        (SpaceKind::RaviartThomas, _) => out.extend(VARS.iter().map(|&e| radial(e))),
    }
    out
}

fn layout(kind: SpaceKind, order: usize) -> (Vec<LocalDof>, Vec<Functional>) {
    let mut dofs = Vec::new();
    let mut fns = Vec::new();
    match kind {
        SpaceKind::Nedelec => {
            for (e, &[a, b]) in LOCAL_EDGES.iter().enumerate() {
                for k in 0..order {
                    dofs.push(LocalDof {
                        entity: DofEntity::Edge(e),
                        k,
                    });
                    fns.push(Functional::EdgeMoment { a, b, legendre: k });
                }
            }
            if order == 2 {
                for (f, &face) in LOCAL_FACES.iter().enumerate() {
                    for k in 0..2 {
                        dofs.push(LocalDof {
                            entity: DofEntity::Face(f),
                            k,
                        });
                        fns.push(Functional::FaceTangent { face, k });
                    }
                }
            }
        }
        SpaceKind::RaviartThomas => {
            for (f, &face) in LOCAL_FACES.iter().enumerate() {
                if order == 1 {
                    dofs.push(LocalDof {
                        entity: DofEntity::Face(f),
                        k: 0,
                    });
                    fns.push(Functional::FaceFlux { face, weight: None });
                } else {
                    for k in 0..3 {
                        dofs.push(LocalDof {
                            entity: DofEntity::Face(f),
                            k,
                        });
                        fns.push(Functional::FaceFlux { face, weight: Some(k) });
                    }
                }
            }
            if order == 2 {
                for k in 0..3 {
                    dofs.push(LocalDof {
                        entity: DofEntity::Cell,
                        k,
                    });
                    fns.push(Functional::Interior { k });
                }
            }
        }
    }
    (dofs, fns)
}

impl ReferenceElement {
    pub fn new(kind: SpaceKind, order: usize) -> Result<Self> {
        if !(1..=2).contains(&order) {
            return Err(invalid(format!("unsupported element order {order}, expected 1 or 2")));
        }
        let quadrature = FunctionalQuadrature::new();
        let prime = prime_basis(kind, order);
        let (dofs, functionals) = layout(kind, order);
        let n = prime.len();
        debug_assert_eq!(n, functionals.len());
        let f = DMatrix::from_fn(n, n, |i, j| {
            functionals[i]
                .apply(&quadrature, &|x| prime[j].eval(x).map(Complex64::from))
                .re
        });
        let c = f
            .try_inverse()
            .ok_or_else(|| invalid("reference functional matrix is singular"))?;
        let basis = (0..n)
            .map(|k| {
                let mut p = VecPoly::zero();
                for (j, pj) in prime.iter().enumerate() {
                    p.axpy(c[(j, k)], pj);
                }
                p
            })
            .collect();
        Ok(Self {
            kind,
            order,
            dofs,
            functionals,
            basis,
            quadrature,
        })
    }

    pub fn n_dofs(&self) -> usize {
        self.basis.len()
    }

    /// Matrix `M[i][j] = functional_i(basis_j)`; the identity up to roundoff.
    pub fn unisolvence_matrix(&self) -> DMatrix<f64> {
        let n = self.n_dofs();
        DMatrix::from_fn(n, n, |i, j| {
            self.functionals[i]
                .apply(&self.quadrature, &|x| self.basis[j].eval(x).map(Complex64::from))
                .re
        })
    }
}

/// Shared reference element for `(kind, order)`, `order` in {1, 2}.
pub fn reference_element(kind: SpaceKind, order: usize) -> Result<&'static ReferenceElement> {
    static CACHE: [OnceLock<ReferenceElement>; 4] = [const { OnceLock::new() }; 4];
    if !(1..=2).contains(&order) {
        return Err(invalid(format!("unsupported element order {order}, expected 1 or 2")));
    }
    let slot = match kind {
        SpaceKind::Nedelec => order - 1,
        SpaceKind::RaviartThomas => order + 1,
    };
    Ok(CACHE[slot].get_or_init(|| ReferenceElement::new(kind, order).expect("reference element is unisolvent")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all() -> Vec<&'static ReferenceElement> {
        [SpaceKind::Nedelec, SpaceKind::RaviartThomas]
            .iter()
            .flat_map(|&k| (1..=2).map(move |r| reference_element(k, r).unwrap()))
            .collect()
    }

    #[test]
    fn dimensions() {
        let dims: Vec<usize> = all().iter().map(|e| e.n_dofs()).collect();
        assert_eq!(dims, vec![6, 20, 4, 15]);
    }

    #[test]
    fn unisolvent() {
        for e in all() {
            let m = e.unisolvence_matrix();
            let err = (m - DMatrix::identity(e.n_dofs(), e.n_dofs())).amax();
            assert!(err < 1e-12, "{:?} r={} err={err}", e.kind, e.order);
        }
    }

    #[test]
    fn whitney_edge_function() {
        // Edge (v0, v1): λ₀∇λ₁ - λ₁∇λ₀ with λ₀ = 1-x-y-z, λ₁ = x.
        let e = reference_element(SpaceKind::Nedelec, 1).unwrap();
        let x = Vec3::new(0.1, 0.2, 0.3);
        let l0 = 1.0 - x.x - x.y - x.z;
        let expect = Vec3::new(l0, 0.0, 0.0) - Vec3::new(-1.0, -1.0, -1.0) * x.x;
        assert!((e.basis[0].eval(&x) - expect).norm() < 1e-14);
    }

    #[test]
    fn rt_divergence_is_constant_and_matches_flux() {
        let e = reference_element(SpaceKind::RaviartThomas, 1).unwrap();
        let outward = [
            Vec3::new(1.0, 1.0, 1.0),
            Vec3::new(-1.0, 0.0, 0.0),
            Vec3::new(0.0, -1.0, 0.0),
            Vec3::new(0.0, 0.0, -1.0),
        ];
        let q = &e.quadrature;
        for b in &e.basis {
            let d0 = b.div(&Vec3::new(0.1, 0.1, 0.1));
            assert!((b.div(&Vec3::new(0.3, 0.2, 0.4)) - d0).abs() < 1e-13);
            // Σ outward fluxes = ∫ div = d0 / 6.
            let mut total = 0.0;
            for (f, face) in LOCAL_FACES.iter().enumerate() {
                let fl = Functional::FaceFlux {
                    face: *face,
                    weight: None,
                };
                let [x0, x1, x2] = face.map(reference_vertex);
                let n = (x1 - x0).cross(&(x2 - x0));
                // Functional uses |n| = 2 area; orient it outward.
                let s = n.dot(&outward[f]).signum();
                total += s * fl.apply(q, &|x| b.eval(x).map(Complex64::from)).re;
            }
            assert!((total - d0 / 6.0).abs() < 1e-13);
        }
    }

    #[test]
    fn order_out_of_range() {
        assert!(reference_element(SpaceKind::Nedelec, 3).is_err());
        assert!(ReferenceElement::new(SpaceKind::RaviartThomas, 0).is_err());
    }
}
