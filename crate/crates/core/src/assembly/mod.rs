//! Assembly of the coupled Maxwell / hydrodynamic system
//!
//! ```text
//! [ A_EE  A_EJ ] [E]   [b_E]
//! [ A_JE  A_JJ ] [J] = [b_J]
//! ```
//!
//! with, for test functions `u` (Nedelec) and `v` (Raviart–Thomas),
//!
//! ```text
//! A_EE = (μ⁻¹ ∇×E, ∇×u) - ω²(εE, u) - iω⟨E_T, u_T⟩
//! A_EJ = -iω (J, u)_s
//! A_JE = iω ω_p² ε₀ (E, v)_s
//! A_JJ = β² (∇·J, ∇·v)_s - ω(ω + iγ)(J, v)_s
//! b_E  = (f₁, u) + ⟨g, u_T⟩
//! b_J  = -(f₂, v)_s
//! ```
//!
//! where `(a, b) = ∫ a · conj(b)` conjugates the test function. `J` is
//! extended by zero outside the metal, so `A_EJ` only integrates over metal
//! cells. Matrix entry `[i][j]` pairs test function `i` with trial function `j`.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::fespaces::{CVec3, FESpace, SpaceKind};
use crate::linsolve::{ComplexCsrMatrix, Triplet};
use crate::mesh::{Submesh, Vec3};
use crate::model::PhysicalParams;
use crate::quadrature::{tet_rule, tri_rule};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub type VectorField<'a> = dyn Fn(&Vec3) -> CVec3 + Sync + 'a;
/// Boundary data as a function of point and outward unit normal.
pub type BoundaryField<'a> = dyn Fn(&Vec3, &Vec3) -> CVec3 + Sync + 'a;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VolumeForm {
    /// `(∇×E, ∇×u)`
    CurlCurl,
    /// `(E, u)`
    MassE,
    /// `(∇·J, ∇·v)`
    DivDiv,
    /// `(J, v)`
    MassJ,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingDirection {
    /// Rows: Nedelec tests, columns: Raviart–Thomas trials.
    JToE,
    /// Rows: Raviart–Thomas tests, columns: Nedelec trials.
    EToJ,
}

fn volume_rule_degree(space: &FESpace) -> usize {
    2 * space.order() + 1
}

fn rhs_rule_degree(space: &FESpace) -> usize {
    2 * space.order() + 2
}

/// Local matrix `a · D + b · M` of every cell, where `D` is the derivative
/// (curl or divergence) Gram matrix and `M` the mass matrix. `coeff` maps a
/// cell's region marker to `(a, b)`.
pub fn assemble_derivative_and_mass(
    space: &FESpace,
    coeff: &(dyn Fn(i32) -> (Complex64, Complex64) + Sync),
) -> Result<Vec<Triplet>> {
    let mesh = space.mesh();
    let rule = tet_rule(volume_rule_degree(space))?;
    let pts: Vec<Vec3> = rule.points.iter().map(|p| Vec3::from(*p)).collect();
    let reference = space.tabulate(&pts);
    let n = space.n_local_dofs();
    let blocks = (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| -> Result<Vec<Triplet>> {
            let (a, b) = coeff(mesh.cell_markers()[c]);
            if a == ZERO && b == ZERO {
                return Ok(Vec::new());
            }
            let map = mesh.affine_map(c)?;
            let bv = space.transform(c, &map, &reference);
            let mut local = vec![ZERO; n * n];
            for (q, &w) in rule.weights.iter().enumerate() {
                let wq = w * map.det;
                let row = q * n;
                for i in 0..n {
                    for j in 0..n {
                        let d = match space.kind() {
                            SpaceKind::Nedelec => bv.curls[row + j].dot(&bv.curls[row + i]),
                            SpaceKind::RaviartThomas => bv.divs[row + j] * bv.divs[row + i],
                        };
                        let m = bv.values[row + j].dot(&bv.values[row + i]);
                        local[i * n + j] += a * (wq * d) + b * (wq * m);
                    }
                }
            }
            let dofs = space.cell_dofs(c);
            Ok((0..n * n)
                .map(|k| (dofs[k / n].0, dofs[k % n].0, local[k]))
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(blocks.into_iter().flatten().collect())
}

/// Triplets of one volume form with a cellwise coefficient from the region marker.
pub fn assemble_volume_form(
    space: &FESpace,
    form: VolumeForm,
    coeff: &(dyn Fn(i32) -> Complex64 + Sync),
) -> Result<Vec<Triplet>> {
    let expected = match form {
        VolumeForm::CurlCurl | VolumeForm::MassE => SpaceKind::Nedelec,
        VolumeForm::DivDiv | VolumeForm::MassJ => SpaceKind::RaviartThomas,
    };
    if space.kind() != expected {
        return Err(invalid(format!("{form:?} needs a {expected} space, got {}", space.kind())));
    }
    let derivative = matches!(form, VolumeForm::CurlCurl | VolumeForm::DivDiv);
    assemble_derivative_and_mass(space, &|m| {
        let c = coeff(m);
        if derivative {
            (c, ZERO)
        } else {
            (ZERO, c)
        }
    })
}

/// Boundary faces carrying `marker`, or every boundary face for `None`.
fn selected_boundary_faces(space: &FESpace, marker: Option<i32>) -> Vec<usize> {
    let mesh = space.mesh();
    mesh.boundary_faces()
        .filter(|&f| marker.is_none_or(|m| mesh.face_markers()[f] == m))
        .collect()
}

/// `weight · ⟨φ_T, ψ_T⟩` over the selected boundary faces.
pub fn assemble_boundary_form(space: &FESpace, marker: Option<i32>, weight: Complex64) -> Result<Vec<Triplet>> {
    if space.kind() != SpaceKind::Nedelec {
        return Err(invalid("boundary form needs a Nedelec space"));
    }
    let rule = tri_rule(rhs_rule_degree(space).min(6))?;
    let faces = selected_boundary_faces(space, marker);
    let n = space.n_local_dofs();
    let blocks = faces
        .par_iter()
        .map(|&f| -> Result<Vec<Triplet>> {
            let tr = space.boundary_tangential_trace(f, &rule.points)?;
            let jac = 2.0 * space.mesh().face_area(f);
            let mut local = vec![0.0; n * n];
            for (q, &w) in rule.weights.iter().enumerate() {
                for i in 0..n {
                    for j in 0..n {
                        local[i * n + j] += w * jac * tr.traces[q * n + j].dot(&tr.traces[q * n + i]);
                    }
                }
            }
            Ok((0..n * n)
                .map(|k| (tr.dofs[k / n].0, tr.dofs[k % n].0, weight * local[k]))
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(blocks.into_iter().flatten().collect())
}

/// `weight · (ψ, φ)` over the cells of `submesh`, pairing the Nedelec space
/// `x_space` on the parent mesh with the Raviart–Thomas space `y_space` on
/// the submesh. Indices are local to each block.
pub fn assemble_coupling_form(
    direction: CouplingDirection,
    x_space: &FESpace,
    y_space: &FESpace,
    submesh: &Submesh,
    weight: Complex64,
) -> Result<Vec<Triplet>> {
    if x_space.kind() != SpaceKind::Nedelec || y_space.kind() != SpaceKind::RaviartThomas {
        return Err(invalid("coupling needs a Nedelec and a Raviart-Thomas space"));
    }
    if !submesh.is_submesh_of(x_space.mesh()) || y_space.mesh().cells() != submesh.mesh().cells() {
        return Err(invalid("the Raviart-Thomas space does not live on a submesh of the Nedelec mesh"));
    }
    let degree = x_space.order() + y_space.order();
    let rule = tet_rule(degree)?;
    let pts: Vec<Vec3> = rule.points.iter().map(|p| Vec3::from(*p)).collect();
    let ref_x = x_space.tabulate(&pts);
    let ref_y = y_space.tabulate(&pts);
    let (nx, ny) = (x_space.n_local_dofs(), y_space.n_local_dofs());
    let blocks = (0..submesh.mesh().n_cells())
        .into_par_iter()
        .map(|sc| -> Result<Vec<Triplet>> {
            let pc = submesh.parent_cell()[sc];
            let map = x_space.mesh().affine_map(pc)?;
            let bx = x_space.transform(pc, &map, &ref_x);
            let by = y_space.transform(sc, &map, &ref_y);
            let mut local = vec![0.0; nx * ny];
            for (q, &w) in rule.weights.iter().enumerate() {
                let wq = w * map.det;
                for i in 0..nx {
                    for j in 0..ny {
                        local[i * ny + j] += wq * bx.values[q * nx + i].dot(&by.values[q * ny + j]);
                    }
                }
            }
            let (dx, dy) = (x_space.cell_dofs(pc), y_space.cell_dofs(sc));
            Ok((0..nx * ny)
                .map(|k| {
                    let (i, j) = (dx[k / ny].0, dy[k % ny].0);
                    let v = weight * local[k];
                    match direction {
                        CouplingDirection::JToE => (i, j, v),
                        CouplingDirection::EToJ => (j, i, v),
                    }
                })
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(blocks.into_iter().flatten().collect())
}

/// `(f, φ_i)` for every global basis function.
pub fn assemble_rhs_volume(space: &FESpace, f: &VectorField<'_>) -> Result<Vec<Complex64>> {
    let mesh = space.mesh();
    let rule = tet_rule(rhs_rule_degree(space))?;
    let pts: Vec<Vec3> = rule.points.iter().map(|p| Vec3::from(*p)).collect();
    let reference = space.tabulate(&pts);
    let n = space.n_local_dofs();
    let locals = (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| -> Result<Vec<Complex64>> {
            let map = mesh.affine_map(c)?;
            let bv = space.transform(c, &map, &reference);
            let mut local = vec![ZERO; n];
            for (q, p) in pts.iter().enumerate() {
                let fx = f(&map.map(p));
                let wq = rule.weights[q] * map.det;
                for (i, li) in local.iter_mut().enumerate() {
                    *li += fx.dot(&bv.values[q * n + i].map(Complex64::from)) * wq;
                }
            }
            Ok(local)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut b = vec![ZERO; space.n_dofs()];
    for (c, local) in locals.iter().enumerate() {
        for (&(g, _), v) in space.cell_dofs(c).iter().zip(local) {
            b[g] += v;
        }
    }
    Ok(b)
}

/// `⟨g, φ_T,i⟩` over the selected boundary faces.
pub fn assemble_rhs_boundary(space: &FESpace, marker: Option<i32>, g: &BoundaryField<'_>) -> Result<Vec<Complex64>> {
    if space.kind() != SpaceKind::Nedelec {
        return Err(invalid("boundary right-hand side needs a Nedelec space"));
    }
    let rule = tri_rule(rhs_rule_degree(space).min(6))?;
    let faces = selected_boundary_faces(space, marker);
    let n = space.n_local_dofs();
    let locals = faces
        .par_iter()
        .map(|&f| -> Result<(Vec<(usize, i8)>, Vec<Complex64>)> {
            let tr = space.boundary_tangential_trace(f, &rule.points)?;
            let jac = 2.0 * space.mesh().face_area(f);
            let mut local = vec![ZERO; n];
            for (q, x) in tr.points.iter().enumerate() {
                let gx = g(x, &tr.normal);
                for (i, li) in local.iter_mut().enumerate() {
                    *li += gx.dot(&tr.traces[q * n + i].map(Complex64::from)) * (rule.weights[q] * jac);
                }
            }
            Ok((tr.dofs, local))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut b = vec![ZERO; space.n_dofs()];
    for (dofs, local) in &locals {
        for (&(g, _), v) in dofs.iter().zip(local) {
            b[g] += v;
        }
    }
    Ok(b)
}

/// Symmetric elimination: rows and columns of `dofs` are dropped, a unit
/// diagonal is added and the right-hand side entry set to zero.
pub fn apply_essential_bc(triplets: Vec<Triplet>, rhs: &mut [Complex64], dofs: &[usize]) -> Result<Vec<Triplet>> {
    let n = rhs.len();
    if let Some(&d) = dofs.iter().find(|&&d| d >= n) {
        return Err(invalid(format!("eliminated DOF {d} out of range {n}")));
    }
    if dofs.is_empty() {
        return Ok(triplets);
    }
    let mut fixed = vec![false; n];
    for &d in dofs {
        fixed[d] = true;
        rhs[d] = ZERO;
    }
    let mut out: Vec<Triplet> = triplets.into_iter().filter(|&(i, j, _)| !fixed[i] && !fixed[j]).collect();
    let mut sorted = dofs.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    out.extend(sorted.into_iter().map(|d| (d, d, Complex64::new(1.0, 0.0))));
    Ok(out)
}

/// Source data of one coupled solve.
#[derive(Clone, Copy, Default)]
pub struct Sources<'a> {
    pub f1: Option<&'a VectorField<'a>>,
    pub f2: Option<&'a VectorField<'a>>,
    pub g: Option<&'a BoundaryField<'a>>,
    /// Faces carrying the absorbing condition and `g`; `None` selects the
    /// whole boundary.
    pub boundary_marker: Option<i32>,
}

/// The two discrete spaces and the metal submesh they are coupled through.
#[derive(Debug, Clone)]
pub struct CoupledSpaces {
    pub e: Arc<FESpace>,
    pub j: Arc<FESpace>,
    pub submesh: Arc<Submesh>,
}

impl CoupledSpaces {
    /// Nedelec space of order `order` on `submesh`'s parent and a
    /// Raviart–Thomas space with zero normal trace on the submesh.
    pub fn new(parent: Arc<crate::mesh::Mesh>, submesh: Arc<Submesh>, order: usize) -> Result<Self> {
        let e = Arc::new(crate::fespaces::build_space(SpaceKind::Nedelec, parent, order, false)?);
        let j = Arc::new(crate::fespaces::build_space(
            SpaceKind::RaviartThomas,
            Arc::new(submesh.mesh().clone()),
            order,
            true,
        )?);
        Ok(Self { e, j, submesh })
    }
}

/// Blocks of the coupled system before elimination, plus the unweighted
/// Gram matrices entering the discrete power balance.
#[derive(Debug, Clone)]
pub struct SystemBlocks {
    pub a_ee: ComplexCsrMatrix,
    pub a_ej: ComplexCsrMatrix,
    pub a_je: ComplexCsrMatrix,
    pub a_jj: ComplexCsrMatrix,
    pub b_e: Vec<Complex64>,
    pub b_j: Vec<Complex64>,
    /// `⟨φ_T, ψ_T⟩` on the absorbing boundary.
    pub boundary_mass: ComplexCsrMatrix,
    /// `(ψ_j, φ_i)_s`, Nedelec rows and Raviart–Thomas columns.
    pub mass_ej: ComplexCsrMatrix,
    /// `(ψ_j, ψ_i)_s`.
    pub mass_j: ComplexCsrMatrix,
    pub n_e: usize,
    pub n_j: usize,
    /// Eliminated DOFs, indexed within the J block.
    pub eliminated: Vec<usize>,
}

impl SystemBlocks {
    /// Offset of the J block in the monolithic unknown vector.
    pub fn j_offset(&self) -> usize {
        self.n_e
    }
}

fn scaled(t: &[Triplet], s: Complex64) -> Vec<Triplet> {
    t.iter().map(|&(i, j, v)| (i, j, v * s)).collect()
}

/// Assembles the monolithic system (E unknowns first, then J) with the
/// essential condition `n·J = 0` eliminated.
pub fn build_coupled_system(
    params: &PhysicalParams,
    spaces: &CoupledSpaces,
    sources: &Sources<'_>,
) -> Result<(ComplexCsrMatrix, Vec<Complex64>, SystemBlocks)> {
    params.validate()?;
    let (es, js, sub) = (&*spaces.e, &*spaces.j, &*spaces.submesh);
    let metal = sub.marker();
    let w = params.omega;

    // A_EE without the boundary term, in one pass.
    let mut t_ee = assemble_derivative_and_mass(es, &|m| {
        let (mu, eps) = params.coefficients(m == metal);
        (Complex64::from(1.0 / mu), Complex64::from(-w * w * eps))
    })?;
    let t_b = assemble_boundary_form(es, sources.boundary_marker, Complex64::new(1.0, 0.0))?;
    t_ee.extend(scaled(&t_b, -I * w));

    let t_m = assemble_coupling_form(CouplingDirection::JToE, es, js, sub, Complex64::new(1.0, 0.0))?;
    let t_ej = scaled(&t_m, -I * w);
    let t_je: Vec<Triplet> = t_m
        .iter()
        .map(|&(i, j, v)| (j, i, v * I * w * params.omega_p * params.omega_p * params.eps0))
        .collect();
    let t_mj = assemble_volume_form(js, VolumeForm::MassJ, &|_| Complex64::new(1.0, 0.0))?;
    let mut t_jj = assemble_volume_form(js, VolumeForm::DivDiv, &|_| Complex64::from(params.beta * params.beta))?;
    t_jj.extend(scaled(&t_mj, -w * Complex64::new(w, params.gamma)));

    let (n_e, n_j) = (es.n_dofs(), js.n_dofs());
    let mut b_e = vec![ZERO; n_e];
    if let Some(f1) = sources.f1 {
        b_e = assemble_rhs_volume(es, f1)?;
    }
    if let Some(g) = sources.g {
        for (b, v) in b_e.iter_mut().zip(assemble_rhs_boundary(es, sources.boundary_marker, g)?) {
            *b += v;
        }
    }
    let b_j = match sources.f2 {
        Some(f2) => assemble_rhs_volume(js, f2)?.into_iter().map(|v| -v).collect(),
        None => vec![ZERO; n_j],
    };

    let mut triplets = Vec::with_capacity(t_ee.len() + t_ej.len() + t_je.len() + t_jj.len());
    triplets.extend_from_slice(&t_ee);
    triplets.extend(t_ej.iter().map(|&(i, j, v)| (i, j + n_e, v)));
    triplets.extend(t_je.iter().map(|&(i, j, v)| (i + n_e, j, v)));
    triplets.extend(t_jj.iter().map(|&(i, j, v)| (i + n_e, j + n_e, v)));
    let mut rhs: Vec<Complex64> = b_e.iter().chain(&b_j).copied().collect();
    let eliminated: Vec<usize> = js.essential_dofs().to_vec();
    let shifted: Vec<usize> = eliminated.iter().map(|d| d + n_e).collect();
    let triplets = apply_essential_bc(triplets, &mut rhs, &shifted)?;
    let n = n_e + n_j;
    let matrix = ComplexCsrMatrix::from_triplets(n, n, &triplets)?;

    let blocks = SystemBlocks {
        a_ee: ComplexCsrMatrix::from_triplets(n_e, n_e, &t_ee)?,
        a_ej: ComplexCsrMatrix::from_triplets(n_e, n_j, &t_ej)?,
        a_je: ComplexCsrMatrix::from_triplets(n_j, n_e, &t_je)?,
        a_jj: ComplexCsrMatrix::from_triplets(n_j, n_j, &t_jj)?,
        b_e,
        b_j,
        boundary_mass: ComplexCsrMatrix::from_triplets(n_e, n_e, &t_b)?,
        mass_ej: ComplexCsrMatrix::from_triplets(n_e, n_j, &t_m)?,
        mass_j: ComplexCsrMatrix::from_triplets(n_j, n_j, &t_mj)?,
        n_e,
        n_j,
        eliminated,
    };
    Ok((matrix, rhs, blocks))
}

/// Dense matrix of a triplet list, for tests and diagnostics.
pub fn triplets_to_dense(nrows: usize, ncols: usize, t: &[Triplet]) -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(nrows, ncols);
    for &(i, j, v) in t {
        m[(i, j)] += v;
    }
    m
}
