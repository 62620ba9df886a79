use num_complex::Complex64;
use serde::Serialize;

use crate::assembly::SystemBlocks;
use crate::error::{invalid, Result};
use crate::linsolve::{norm2, ComplexCsrMatrix};
use crate::model::PhysicalParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlockResiduals {
    /// `‖A_EE E + A_EJ J - b_E‖`
    pub e_abs: f64,
    /// `‖A_JE E + A_JJ J - b_J‖` over the rows that are not eliminated.
    pub j_abs: f64,
    /// Each absolute residual divided by `max(‖b_block‖, ‖A₁x₁‖ + ‖A₂x₂‖, ‖b‖)`,
    /// where `‖b‖` is the norm of the whole right-hand side.
    pub e_rel: f64,
    pub j_rel: f64,
}

impl BlockResiduals {
    pub fn max_relative(&self) -> f64 {
        self.e_rel.max(self.j_rel)
    }
}

fn split<'a>(blocks: &SystemBlocks, x: &'a [Complex64]) -> Result<(&'a [Complex64], &'a [Complex64])> {
    if x.len() != blocks.n_e + blocks.n_j {
        return Err(invalid(format!(
            "solution of length {} for {} unknowns",
            x.len(),
            blocks.n_e + blocks.n_j
        )));
    }
    Ok(x.split_at(blocks.n_e))
}

fn block_residual(
    a1: &ComplexCsrMatrix,
    x1: &[Complex64],
    a2: &ComplexCsrMatrix,
    x2: &[Complex64],
    b: &[Complex64],
    skip: &[bool],
    floor: f64,
) -> Result<(f64, f64)> {
    let y1 = a1.matvec(x1)?;
    let y2 = a2.matvec(x2)?;
    let keep = |i: &usize| !skip.get(*i).copied().unwrap_or(false);
    let pick = |v: &[Complex64]| -> Vec<Complex64> { (0..v.len()).filter(keep).map(|i| v[i]).collect() };
    let r: Vec<Complex64> = (0..b.len()).filter(keep).map(|i| y1[i] + y2[i] - b[i]).collect();
    let abs = norm2(&r);
    let scale = norm2(&pick(b)).max(norm2(&pick(&y1)) + norm2(&pick(&y2))).max(floor);
    Ok((abs, if scale > 0.0 { abs / scale } else { abs }))
}

/// Residual of each block equation for the monolithic solution `x`.
pub fn galerkin_residual(blocks: &SystemBlocks, x: &[Complex64]) -> Result<BlockResiduals> {
    let (xe, xj) = split(blocks, x)?;
    let mut skip = vec![false; blocks.n_j];
    for &d in &blocks.eliminated {
        skip[d] = true;
    }
    let floor = norm2(&blocks.b_e).hypot(norm2(&blocks.b_j));
    let (e_abs, e_rel) = block_residual(&blocks.a_ee, xe, &blocks.a_ej, xj, &blocks.b_e, &[], floor)?;
    let (j_abs, j_rel) = block_residual(&blocks.a_je, xe, &blocks.a_jj, xj, &blocks.b_j, &skip, floor)?;
    Ok(BlockResiduals { e_abs, j_abs, e_rel, j_rel })
}

/// Both sides of the imaginary-part identities obtained by testing each
/// equation with the discrete solution itself:
///
/// ```text
/// -ω ‖E_T‖²_Γ                     = Im(b_E · conj(E)) + ω Re(J, E)
/// -ωγ ‖J‖² + ω ω_p² ε₀ Re(E, J)  = Im(b_J · conj(J))
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerBalance {
    pub e_lhs: f64,
    pub e_rhs: f64,
    pub j_lhs: f64,
    pub j_rhs: f64,
    /// Sum of the magnitudes of the terms of each identity.
    pub e_scale: f64,
    pub j_scale: f64,
}

impl PowerBalance {
    /// `|lhs - rhs| / max(e_scale, j_scale)` of each identity (absolute when
    /// both scales vanish).
    pub fn defects(&self) -> (f64, f64) {
        let s = self.e_scale.max(self.j_scale);
        let rel = |a: f64, b: f64| if s > 0.0 { (a - b).abs() / s } else { (a - b).abs() };
        (rel(self.e_lhs, self.e_rhs), rel(self.j_lhs, self.j_rhs))
    }

    pub fn max_defect(&self) -> f64 {
        let (a, b) = self.defects();
        a.max(b)
    }
}

fn form(m: &ComplexCsrMatrix, x: &[Complex64], y: &[Complex64]) -> Result<Complex64> {
    Ok(x.iter().zip(m.matvec(y)?).map(|(a, b)| a.conj() * b).sum())
}

fn dotc(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

pub fn power_balance(blocks: &SystemBlocks, params: &PhysicalParams, x: &[Complex64]) -> Result<PowerBalance> {
    let (xe, xj) = split(blocks, x)?;
    let w = params.omega;
    let et2 = form(&blocks.boundary_mass, xe, xe)?.re;
    // (J, E) = Σ conj(E_i) M_ij J_j.
    let je = form(&blocks.mass_ej, xe, xj)?.re;
    let jj = form(&blocks.mass_j, xj, xj)?.re;
    let src_e = dotc(xe, &blocks.b_e).im;
    let src_j = dotc(xj, &blocks.b_j).im;
    let coupling = w * params.omega_p * params.omega_p * params.eps0 * je;
    Ok(PowerBalance {
        e_lhs: -w * et2,
        e_rhs: src_e + w * je,
        j_lhs: -w * params.gamma * jj + coupling,
        j_rhs: src_j,
        e_scale: (w * et2).abs() + src_e.abs() + (w * je).abs(),
        j_scale: (w * params.gamma * jj).abs() + coupling.abs() + src_j.abs(),
    })
}
