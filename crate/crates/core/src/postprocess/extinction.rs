use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::fespaces::{CVec3, FEField, SpaceKind};
use crate::mesh::{Mesh, Vec3, NO_CELL};
use crate::model::IncidentWave;
use crate::quadrature::tri_rule;

/// One oriented face of an integration surface. Fields are evaluated in
/// `cell`; `normal` is the unit normal pointing away from the enclosed region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceFace {
    pub face: usize,
    pub cell: usize,
    pub normal: Vec3,
}

/// Faces between cells with `inside_marker` and any other cell, evaluated on
/// the outer side.
pub fn region_interface(mesh: &Mesh, inside_marker: i32) -> Result<Vec<SurfaceFace>> {
    let inside = |c: usize| c != NO_CELL && mesh.cell_markers()[c] == inside_marker;
    let out: Vec<SurfaceFace> = mesh
        .face_cells()
        .iter()
        .enumerate()
        .filter_map(|(f, &[a, b])| {
            if b == NO_CELL {
                return None;
            }
            match (inside(a), inside(b)) {
                (true, false) => Some(SurfaceFace { face: f, cell: b, normal: mesh.outward_normal(a, f) }),
                (false, true) => Some(SurfaceFace { face: f, cell: a, normal: mesh.outward_normal(b, f) }),
                _ => None,
            }
        })
        .collect();
    if out.is_empty() {
        return Err(Error::InvalidSurface(format!("region {inside_marker} has no interface faces")));
    }
    Ok(out)
}

/// Faces carrying `face_marker`. Interior faces are oriented away from the
/// cell with `inside_marker` and evaluated on the other side; boundary faces
/// use the outward normal of the domain.
pub fn marked_surface(mesh: &Mesh, face_marker: i32, inside_marker: i32) -> Result<Vec<SurfaceFace>> {
    let mut out = Vec::new();
    for (f, &[a, b]) in mesh.face_cells().iter().enumerate() {
        if mesh.face_markers()[f] != face_marker {
            continue;
        }
        if b == NO_CELL {
            out.push(SurfaceFace { face: f, cell: a, normal: mesh.outward_normal(a, f) });
            continue;
        }
        let (ma, mb) = (mesh.cell_markers()[a], mesh.cell_markers()[b]);
        let (inner, outer) = match (ma == inside_marker, mb == inside_marker) {
            (true, false) => (a, b),
            (false, true) => (b, a),
            _ => {
                return Err(Error::InvalidSurface(format!(
                    "face {f} does not separate region {inside_marker} from the rest"
                )))
            }
        };
        out.push(SurfaceFace { face: f, cell: outer, normal: mesh.outward_normal(inner, f) });
    }
    if out.is_empty() {
        return Err(Error::InvalidSurface(format!("no face carries marker {face_marker}")));
    }
    Ok(out)
}

/// The flux of every constant field through a closed surface vanishes:
/// `|Σ area · n| ≤ 1e-10 Σ area`.
pub fn check_closed_surface(mesh: &Mesh, surface: &[SurfaceFace]) -> Result<()> {
    let total: f64 = surface.iter().map(|s| mesh.face_area(s.face)).sum();
    let flux: Vec3 = surface.iter().map(|s| s.normal * mesh.face_area(s.face)).sum();
    if surface.is_empty() || flux.norm() > 1e-10 * total {
        return Err(Error::InvalidSurface(format!(
            "surface is not closed: |flux of a constant field| = {:e} for area {total:e}",
            flux.norm()
        )));
    }
    Ok(())
}

/// Total `(E, H)` at the physical points of one surface face.
pub type SurfaceFields<'a> = dyn Fn(&SurfaceFace, &[Vec3]) -> Result<Vec<(CVec3, CVec3)>> + Sync + 'a;

/// `σ_ext = -1/(D|E₀|²) ∮ Re[E_inc × conj(H_s) + E_s × conj(H_inc)]·n dS`
/// with `E_s = E - E_inc`, `H_s = H - H_inc` and the total fields from `fields`.
pub fn extinction_from_fields(
    mesh: &Mesh,
    wave: &IncidentWave,
    surface: &[SurfaceFace],
    diameter: f64,
    quad_degree: usize,
    fields: &SurfaceFields<'_>,
) -> Result<f64> {
    if !(diameter > 0.0) {
        return Err(invalid("diameter must be positive"));
    }
    let e0 = wave.amplitude.norm_sqr();
    if e0 == 0.0 {
        return Err(invalid("incident amplitude is zero"));
    }
    check_closed_surface(mesh, surface)?;
    let rule = tri_rule(quad_degree.min(crate::quadrature::MAX_DEGREE))?;
    let parts = surface
        .par_iter()
        .map(|s| -> Result<f64> {
            let fv = mesh.faces()[s.face].map(|v| mesh.vertices()[v]);
            let xs: Vec<Vec3> = rule
                .points
                .iter()
                .map(|p| fv[0] + (fv[1] - fv[0]) * p[0] + (fv[2] - fv[0]) * p[1])
                .collect();
            let total = fields(s, &xs)?;
            let n = s.normal.map(Complex64::from);
            let jac = 2.0 * mesh.face_area(s.face);
            let mut acc = 0.0;
            for (q, x) in xs.iter().enumerate() {
                let (ei, hi) = (wave.e(x), wave.h(x));
                let (es, hs) = (total[q].0 - ei, total[q].1 - hi);
                let s_vec = ei.cross(&hs.map(|v| v.conj())) + es.cross(&hi.map(|v| v.conj()));
                acc += rule.weights[q] * jac * s_vec.dot(&n).re;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(-parts.iter().sum::<f64>() / (diameter * e0))
}

/// Extinction of a Nedelec solution, with `H_h = ∇×E_h / (iωμ)` evaluated in
/// each face's `cell`.
pub fn extinction_cross_section(
    e_h: &FEField,
    wave: &IncidentWave,
    surface: &[SurfaceFace],
    mu: f64,
    diameter: f64,
) -> Result<f64> {
    if e_h.space().kind() != SpaceKind::Nedelec {
        return Err(invalid("extinction needs a Nedelec field"));
    }
    if !(mu > 0.0) {
        return Err(invalid("mu must be positive"));
    }
    let mesh = e_h.space().mesh();
    let iwmu = Complex64::new(0.0, wave.omega * mu);
    let fields = |s: &SurfaceFace, xs: &[Vec3]| -> Result<Vec<(CVec3, CVec3)>> {
        let map = mesh.affine_map(s.cell)?;
        let refs: Vec<Vec3> = xs.iter().map(|x| map.inverse_map(x)).collect();
        let fv = e_h.eval(s.cell, &refs)?;
        Ok(fv.values.iter().zip(&fv.curls).map(|(e, c)| (*e, c / iwmu)).collect())
    };
    extinction_from_fields(mesh, wave, surface, diameter, 2 * e_h.space().order() + 2, &fields)
}
