//! Error norms, convergence orders, extinction cross section, residual and
//! power balance diagnostics, and VTK export.

mod extinction;
mod residual;
mod vtk;

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::assembly::VectorField;
use crate::error::{invalid, Result};
use crate::fespaces::{FEField, SpaceKind};
use crate::mesh::Vec3;
use crate::quadrature::tet_rule;

pub use extinction::{
    check_closed_surface, extinction_cross_section, extinction_from_fields, marked_surface, region_interface, SurfaceFace,
    SurfaceFields,
};
pub use residual::{galerkin_residual, power_balance, BlockResiduals, PowerBalance};
pub use vtk::{cell_values, export_vtk, write_vtk, VtkField};

pub type ScalarField<'a> = dyn Fn(&Vec3) -> Complex64 + Sync + 'a;

/// How the L² and derivative pieces are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormKind {
    /// `‖u‖ + ‖Du‖`
    #[default]
    Sum,
    /// `sqrt(‖u‖² + ‖Du‖²)`
    RootSumSquare,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldError {
    pub l2_error: f64,
    /// Curl or divergence error.
    pub derivative_error: f64,
    /// `l2_error + derivative_error`.
    pub combined: f64,
}

impl FieldError {
    fn new(l2_sq: f64, d_sq: f64) -> Self {
        let (l2_error, derivative_error) = (l2_sq.sqrt(), d_sq.sqrt());
        Self {
            l2_error,
            derivative_error,
            combined: l2_error + derivative_error,
        }
    }

    pub fn norm(&self, kind: NormKind) -> f64 {
        match kind {
            NormKind::Sum => self.combined,
            NormKind::RootSumSquare => self.l2_error.hypot(self.derivative_error),
        }
    }
}

/// Squared errors `(∫|u_h - u|², ∫|Du_h - Du|²)` with a rule of degree `2r + 2`.
fn squared_errors(
    field: &FEField,
    value: &VectorField<'_>,
    derivative: &(dyn Fn(&Vec3, &crate::fespaces::FieldValues, usize) -> f64 + Sync),
) -> Result<(f64, f64)> {
    let space = field.space();
    let mesh = space.mesh();
    let rule = tet_rule((2 * space.order() + 2).min(crate::quadrature::MAX_DEGREE))?;
    let pts: Vec<Vec3> = rule.points.iter().map(|p| Vec3::from(*p)).collect();
    let reference = space.tabulate(&pts);
    let per_cell = (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| -> Result<(f64, f64)> {
            let map = mesh.affine_map(c)?;
            let fv = field.combine(c, &space.transform(c, &map, &reference));
            let (mut e0, mut e1) = (0.0, 0.0);
            for (q, p) in pts.iter().enumerate() {
                let x = map.map(p);
                let w = rule.weights[q] * map.det;
                e0 += w * (fv.values[q] - value(&x)).norm_squared();
                e1 += w * derivative(&x, &fv, q);
            }
            Ok((e0, e1))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_cell.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1)))
}

/// `‖E_h - E‖_{L²}` and `‖∇×E_h - ∇×E‖_{L²}` for a Nedelec field.
pub fn error_hcurl(field: &FEField, exact: &VectorField<'_>, exact_curl: &VectorField<'_>) -> Result<FieldError> {
    if field.space().kind() != SpaceKind::Nedelec {
        return Err(invalid("error_hcurl needs a Nedelec field"));
    }
    let (a, b) = squared_errors(field, exact, &|x, fv, q| (fv.curls[q] - exact_curl(x)).norm_squared())?;
    Ok(FieldError::new(a, b))
}

/// `‖J_h - J‖_{L²}` and `‖∇·J_h - ∇·J‖_{L²}` for a Raviart–Thomas field.
pub fn error_hdiv(field: &FEField, exact: &VectorField<'_>, exact_div: &ScalarField<'_>) -> Result<FieldError> {
    if field.space().kind() != SpaceKind::RaviartThomas {
        return Err(invalid("error_hdiv needs a Raviart-Thomas field"));
    }
    let (a, b) = squared_errors(field, exact, &|x, fv, q| (fv.divs[q] - exact_div(x)).norm_sqr())?;
    Ok(FieldError::new(a, b))
}

/// `order_i = log(e_{i-1}/e_i) / log(h_{i-1}/h_i)` for `i >= 1`.
pub fn convergence_orders(errors: &[f64], h: &[f64]) -> Result<Vec<f64>> {
    if errors.len() != h.len() || errors.len() < 2 {
        return Err(invalid("need at least two (error, h) pairs of equal length"));
    }
    if errors.iter().chain(h).any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(invalid("errors and mesh sizes must be positive and finite"));
    }
    if h.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("mesh sizes must be strictly decreasing"));
    }
    Ok((1..errors.len())
        .map(|i| (errors[i - 1] / errors[i]).ln() / (h[i - 1] / h[i]).ln())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub level: usize,
    pub h: f64,
    pub ndofs_e: usize,
    pub ndofs_j: usize,
    pub err_e: f64,
    pub order_e: Option<f64>,
    pub err_j: f64,
    pub order_j: Option<f64>,
}

/// Errors per refinement level; the first row has no order.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    /// Appends a level and computes its orders against the previous one.
    pub fn push(&mut self, h: f64, ndofs_e: usize, ndofs_j: usize, err_e: f64, err_j: f64) -> Result<()> {
        let (order_e, order_j) = match self.rows.last() {
            None => (None, None),
            Some(p) => {
                let oe = convergence_orders(&[p.err_e, err_e], &[p.h, h])?[0];
                let oj = convergence_orders(&[p.err_j, err_j], &[p.h, h])?[0];
                (Some(oe), Some(oj))
            }
        };
        self.rows.push(ConvergenceRow {
            level: self.rows.len(),
            h,
            ndofs_e,
            ndofs_j,
            err_e,
            order_e,
            err_j,
            order_j,
        });
        Ok(())
    }

    /// Orders of the last two levels.
    pub fn finest_orders(&self) -> Option<(f64, f64)> {
        let r = self.rows.last()?;
        Some((r.order_e?, r.order_j?))
    }

    pub const CSV_HEADER: &'static str = "level,h,ndofs_E,ndofs_J,err_E,order_E,err_J,order_J";

    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        let opt = |o: Option<f64>| o.map(|v| format!("{v:.6}")).unwrap_or_default();
        for r in &self.rows {
            writeln!(
                w,
                "{},{:.10e},{},{},{:.10e},{},{:.10e},{}",
                r.level,
                r.h,
                r.ndofs_e,
                r.ndofs_j,
                r.err_e,
                opt(r.order_e),
                r.err_j,
                opt(r.order_j)
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ASCII output")
    }
}
