//! Config-driven runs: convergence study, scattering sweep, dispersion scan
//! and mesh statistics.

mod config;

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

pub use config::{
    DispersionConfig, MeshConfig, MeshSource, NormChoice, OutputConfig, ProblemConfig, ProblemKind, Range, RunConfig,
    ScatteringConfig, SolverConfig, SolverKind,
};

use crate::assembly::{build_coupled_system, CoupledSpaces, Sources, SystemBlocks};
use crate::error::{Error, Result};
use crate::fespaces::{FEField, SpaceKind};
use crate::linsolve::{set_solver_threads, solve, SolveReport, SolverMethod};
use crate::mesh::{extract_submesh, generate_box_mesh, generate_sphere_in_sphere, read_gmsh_msh_file, BoxBounds, Mesh, Vec3};
use crate::model::{manufactured_case_unit_cube, nonlocal_permittivity, plane_wave_source, IncidentWave, PhysicalParams};
use crate::postprocess::{
    cell_values, error_hcurl, error_hdiv, export_vtk, extinction_cross_section, galerkin_residual, marked_surface,
    power_balance, region_interface, BlockResiduals, ConvergenceTable, FieldError, NormKind, PowerBalance, VtkField,
};

/// Environment variable overriding the worker thread count.
pub const THREADS_ENV: &str = "NHDFEM_THREADS";

/// Sets up the global thread pool: one thread in serial mode, otherwise the
/// value of `NHDFEM_THREADS` or the rayon default. Returns the thread count
/// in effect.
pub fn configure_threads(serial: bool) -> Result<usize> {
    let requested = if serial {
        Some(1)
    } else {
        match std::env::var(THREADS_ENV) {
            Ok(v) => Some(
                v.trim()
                    .parse::<usize>()
                    .ok()
                    .filter(|&n| n > 0)
                    .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?,
            ),
            Err(_) => None,
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = requested {
        builder = builder.num_threads(n);
    }
    // A pool built earlier in the process stays in place.
    let _ = builder.build_global();
    let n = rayon::current_num_threads();
    set_solver_threads(if serial { 1 } else { n });
    Ok(n)
}

/// Mesh described by the config (the coarsest level for box meshes).
pub fn load_mesh(cfg: &MeshConfig) -> Result<Mesh> {
    match cfg.source {
        MeshSource::Box => generate_box_mesh([cfg.n; 3], BoxBounds::unit_cube()),
        MeshSource::Msh => {
            let path = cfg.path.as_ref().ok_or_else(|| Error::Config("mesh.path is missing".into()))?;
            read_gmsh_msh_file(path)
        }
        MeshSource::Sphere => generate_sphere_in_sphere(&cfg.sphere),
    }
}

fn absorbing_marker(cfg: &MeshConfig) -> Option<i32> {
    match (cfg.boundary_marker, cfg.source) {
        (Some(m), _) => Some(m),
        (None, MeshSource::Sphere) => Some(cfg.sphere.boundary_marker),
        (None, _) => None,
    }
}

/// A solved coupled system with its post-solve diagnostics.
#[derive(Debug, Clone)]
pub struct SolvedSystem {
    pub spaces: CoupledSpaces,
    pub blocks: SystemBlocks,
    pub solution: Vec<Complex64>,
    pub report: SolveReport,
    pub residuals: BlockResiduals,
    pub balance: PowerBalance,
}

impl SolvedSystem {
    pub fn e_field(&self) -> FEField {
        FEField::new(self.spaces.e.clone(), self.solution[..self.blocks.n_e].to_vec()).expect("length matches")
    }
    pub fn j_field(&self) -> FEField {
        FEField::new(self.spaces.j.clone(), self.solution[self.blocks.n_e..].to_vec()).expect("length matches")
    }
    /// E DOFs and J DOFs left after eliminating `n·J = 0`.
    pub fn dof_counts(&self) -> (usize, usize) {
        (self.blocks.n_e, self.spaces.j.n_free_dofs())
    }
}

/// Assembles, solves and checks one coupled problem.
pub fn solve_coupled(
    params: &PhysicalParams,
    spaces: CoupledSpaces,
    sources: &Sources<'_>,
    method: &SolverMethod,
) -> Result<SolvedSystem> {
    let (mut a, mut b, blocks) = build_coupled_system(params, &spaces, sources)?;
    // Rows of the current equation times -1/(ω_p² ε₀) make A complex symmetric.
    if params.omega_p > 0.0 {
        let s = Complex64::new(-1.0 / (params.omega_p * params.omega_p * params.eps0), 0.0);
        a.scale_rows(blocks.n_e..blocks.n_e + blocks.n_j, s);
        for v in &mut b[blocks.n_e..] {
            *v *= s;
        }
    }
    let (solution, report) = solve(&a, &b, method)?;
    let residuals = galerkin_residual(&blocks, &solution)?;
    let balance = power_balance(&blocks, params, &solution)?;
    Ok(SolvedSystem {
        spaces,
        blocks,
        solution,
        report,
        residuals,
        balance,
    })
}

/// Spaces of order `order` on `mesh` with `J` on the cells with `metal_marker`.
pub fn coupled_spaces(mesh: Mesh, metal_marker: i32, order: usize) -> Result<CoupledSpaces> {
    let sub = Arc::new(extract_submesh(&mesh, metal_marker)?);
    CoupledSpaces::new(Arc::new(mesh), sub, order)
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelResult {
    pub level: usize,
    pub n: usize,
    pub h: f64,
    pub ndofs_e: usize,
    pub ndofs_j: usize,
    pub error_e: FieldError,
    pub error_j: FieldError,
    pub method: String,
    pub iterations: usize,
    pub relative_residual: f64,
    pub residuals: BlockResiduals,
    pub balance: PowerBalance,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub order: usize,
    pub levels: Vec<LevelResult>,
    pub table: ConvergenceTable,
}

/// Solves the manufactured problem on the unit cube at one box resolution.
pub fn solve_manufactured(n: usize, order: usize, method: &SolverMethod) -> Result<SolvedSystem> {
    let params = PhysicalParams::unit();
    let case = manufactured_case_unit_cube(&params)?;
    let mesh = generate_box_mesh([n; 3], BoxBounds::unit_cube())?;
    let spaces = coupled_spaces(mesh, 1, order)?;
    let f1 = |x: &Vec3| case.f1(x);
    let f2 = |x: &Vec3| case.f2(x);
    let g = |x: &Vec3, nrm: &Vec3| case.g(x, nrm);
    let sources = Sources {
        f1: Some(&f1),
        f2: Some(&f2),
        g: Some(&g),
        boundary_marker: None,
    };
    solve_coupled(&params, spaces, &sources, method)
}

/// Errors of a manufactured solve against the exact solution.
pub fn manufactured_errors(sol: &SolvedSystem) -> Result<(FieldError, FieldError)> {
    let case = manufactured_case_unit_cube(&PhysicalParams::unit())?;
    let ee = error_hcurl(&sol.e_field(), &|x| case.e_exact(x), &|x| case.curl_e_exact(x))?;
    let ej = error_hdiv(&sol.j_field(), &|x| case.j_exact(x), &|x| case.div_j_exact(x))?;
    Ok((ee, ej))
}

/// Manufactured solves on `n, 2n, 4n, ...` boxes. `on_level` sees each
/// level as soon as it is done.
pub fn run_convergence_study(
    cfg: &RunConfig,
    mut on_level: impl FnMut(&LevelResult),
) -> Result<ConvergenceReport> {
    if cfg.problem.kind != ProblemKind::Manufactured {
        return Err(Error::Config("convergence study needs problem.kind = \"manufactured\"".into()));
    }
    cfg.validate()?;
    let norm = match cfg.problem.norm {
        NormChoice::Sum => NormKind::Sum,
        NormChoice::Rss => NormKind::RootSumSquare,
    };
    let method = cfg.solver.method();
    let mut table = ConvergenceTable::default();
    let mut levels = Vec::new();
    for level in 0..cfg.mesh.levels {
        let at = |e: Error| Error::AtLevel {
            level,
            source: Box::new(e),
        };
        let n = cfg.mesh.n << level;
        let sol = solve_manufactured(n, cfg.problem.order, &method).map_err(at)?;
        let (error_e, error_j) = manufactured_errors(&sol).map_err(at)?;
        let (ndofs_e, ndofs_j) = sol.dof_counts();
        let h = sol.spaces.e.mesh().max_diameter();
        table
            .push(h, ndofs_e, ndofs_j, error_e.norm(norm), error_j.norm(norm))
            .map_err(at)?;
        let r = LevelResult {
            level,
            n,
            h,
            ndofs_e,
            ndofs_j,
            error_e,
            error_j,
            method: sol.report.method.clone(),
            iterations: sol.report.iterations,
            relative_residual: sol.report.relative_residual,
            residuals: sol.residuals,
            balance: sol.balance,
        };
        on_level(&r);
        levels.push(r);
    }
    Ok(ConvergenceReport {
        order: cfg.problem.order,
        levels,
        table,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ScatteringPoint {
    pub omega_over_omega_p: f64,
    pub omega: f64,
    pub sigma_ext: f64,
    pub relative_residual: f64,
    pub residuals: BlockResiduals,
    pub balance: PowerBalance,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScatteringReport {
    pub ndofs_e: usize,
    pub ndofs_j: usize,
    pub points: Vec<ScatteringPoint>,
}

impl ScatteringReport {
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "omega_over_omega_p,sigma_ext")?;
        for p in &self.points {
            writeln!(w, "{:.12e},{:.12e}", p.omega_over_omega_p, p.sigma_ext)?;
        }
        Ok(())
    }
}

/// Plane wave `exp(i k y) e_x` in the background medium.
pub fn incident_wave(params: &PhysicalParams) -> Result<IncidentWave> {
    IncidentWave::new(Vec3::y(), Vec3::x(), Complex64::new(1.0, 0.0), params.omega, params.eps2, params.mu2)
}

/// Frequency sweep of the extinction cross section. VTK snapshots are
/// written to `out` when it is given and `output.vtk` is set.
pub fn run_scattering(
    cfg: &RunConfig,
    out: Option<&Path>,
    mut on_point: impl FnMut(&ScatteringPoint),
) -> Result<ScatteringReport> {
    if cfg.problem.kind != ProblemKind::Scattering {
        return Err(Error::Config("scattering run needs problem.kind = \"scattering\"".into()));
    }
    cfg.validate()?;
    let sc = cfg.scattering.as_ref().expect("validated");
    let mesh = load_mesh(&cfg.mesh)?;
    let spaces = coupled_spaces(mesh, cfg.mesh.metal_marker, cfg.problem.order)?;
    let mesh = spaces.e.mesh().clone();
    let surface = match cfg.mesh.surface_marker {
        Some(m) => marked_surface(&mesh, m, cfg.mesh.metal_marker)?,
        None => region_interface(&mesh, cfg.mesh.metal_marker)?,
    };
    let reference = sc.reference_omega_p.unwrap_or(cfg.physics.omega_p);
    let method = cfg.solver.method();
    let mut points = Vec::new();
    let mut counts = (0, 0);
    for (i, &ratio) in sc.omega_over_omega_p.iter().enumerate() {
        let params = PhysicalParams {
            omega: ratio * reference,
            ..cfg.physics
        };
        let at = |e: Error| Error::AtLevel {
            level: i,
            source: Box::new(e),
        };
        let wave = incident_wave(&params).map_err(at)?;
        let g = plane_wave_source(&wave);
        let sources = Sources {
            g: Some(&g),
            boundary_marker: absorbing_marker(&cfg.mesh),
            ..Sources::default()
        };
        let sol = solve_coupled(&params, spaces.clone(), &sources, &method).map_err(at)?;
        counts = sol.dof_counts();
        let e = sol.e_field();
        let sigma_ext = extinction_cross_section(&e, &wave, &surface, params.mu2, sc.diameter).map_err(at)?;
        if let Some(dir) = out.filter(|_| cfg.output.vtk && sc.vtk_at.contains(&i)) {
            let fields = [
                VtkField {
                    name: "E".into(),
                    values: cell_values(&e, &mesh, None)?,
                },
                VtkField {
                    name: "J".into(),
                    values: cell_values(&sol.j_field(), &mesh, Some(spaces.submesh.parent_cell()))?,
                },
            ];
            export_vtk(&dir.join(format!("field_{i:03}.vtk")), &mesh, &fields)?;
        }
        let p = ScatteringPoint {
            omega_over_omega_p: ratio,
            omega: params.omega,
            sigma_ext,
            relative_residual: sol.report.relative_residual,
            residuals: sol.residuals,
            balance: sol.balance,
        };
        on_point(&p);
        points.push(p);
    }
    Ok(ScatteringReport {
        ndofs_e: counts.0,
        ndofs_j: counts.1,
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DispersionRow {
    pub omega: f64,
    pub k: f64,
    /// `None` at a pole of the permittivity.
    pub eps: Option<(f64, f64)>,
}

/// `ε(ω, k)` on the configured grid; poles are flagged rather than fatal.
pub fn run_dispersion(cfg: &RunConfig) -> Result<Vec<DispersionRow>> {
    let d = cfg
        .dispersion
        .as_ref()
        .ok_or_else(|| Error::Config("dispersion run needs a [dispersion] section".into()))?;
    let mut rows = Vec::new();
    for omega in d.omega.values() {
        for k in d.k.values() {
            let params = PhysicalParams { omega, ..cfg.physics };
            let eps = match nonlocal_permittivity(&params, k) {
                Ok(e) => Some((e.re, e.im)),
                Err(Error::Pole(_)) => None,
                Err(e) => return Err(e),
            };
            rows.push(DispersionRow { omega, k, eps });
        }
    }
    Ok(rows)
}

pub fn write_dispersion_csv(rows: &[DispersionRow], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "omega,k,re_eps,im_eps,pole")?;
    for r in rows {
        match r.eps {
            Some((re, im)) => writeln!(w, "{:.12e},{:.12e},{:.17e},{:.17e},0", r.omega, r.k, re, im)?,
            None => writeln!(w, "{:.12e},{:.12e},nan,nan,1", r.omega, r.k)?,
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct RegionInfo {
    pub marker: i32,
    pub cells: usize,
    pub volume: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MeshInfo {
    pub vertices: usize,
    pub cells: usize,
    pub edges: usize,
    pub faces: usize,
    pub boundary_faces: usize,
    pub h_max: f64,
    pub regions: Vec<RegionInfo>,
    pub face_markers: Vec<(i32, usize)>,
    pub order: usize,
    pub ndofs_e: usize,
    /// Free J DOFs on the metal region, when it exists.
    pub ndofs_j: Option<usize>,
}

pub fn mesh_info(cfg: &RunConfig) -> Result<MeshInfo> {
    let mesh = load_mesh(&cfg.mesh)?;
    mesh.validate()?;
    let order = cfg.problem.order;
    let regions = mesh
        .region_markers()
        .into_iter()
        .map(|m| RegionInfo {
            marker: m,
            cells: mesh.cell_markers().iter().filter(|&&x| x == m).count(),
            volume: mesh.marked_volume(m),
        })
        .collect();
    let face_markers = mesh
        .face_marker_values()
        .into_iter()
        .map(|m| (m, mesh.face_markers().iter().filter(|&&x| x == m).count()))
        .collect();
    let mesh = Arc::new(mesh);
    let e = crate::fespaces::build_space(SpaceKind::Nedelec, mesh.clone(), order, false)?;
    let ndofs_j = match extract_submesh(&mesh, cfg.mesh.metal_marker) {
        Ok(sub) => Some(
            crate::fespaces::build_space(SpaceKind::RaviartThomas, Arc::new(sub.mesh().clone()), order, true)?
                .n_free_dofs(),
        ),
        Err(_) => None,
    };
    Ok(MeshInfo {
        vertices: mesh.n_vertices(),
        cells: mesh.n_cells(),
        edges: mesh.n_edges(),
        faces: mesh.n_faces(),
        boundary_faces: mesh.boundary_faces().count(),
        h_max: mesh.max_diameter(),
        regions,
        face_markers,
        order,
        ndofs_e: e.n_dofs(),
        ndofs_j,
    })
}

impl fmt::Display for MeshInfo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "vertices        {}", self.vertices)?;
        writeln!(f, "cells           {}", self.cells)?;
        writeln!(f, "edges           {}", self.edges)?;
        writeln!(f, "faces           {}", self.faces)?;
        writeln!(f, "boundary faces  {}", self.boundary_faces)?;
        writeln!(f, "h_max           {:.6e}", self.h_max)?;
        for r in &self.regions {
            writeln!(f, "region {:<8} {} cells, volume {:.6e}", r.marker, r.cells, r.volume)?;
        }
        for (m, c) in &self.face_markers {
            writeln!(f, "face marker {m:<4} {c} faces")?;
        }
        writeln!(f, "order           {}", self.order)?;
        writeln!(f, "E DOFs          {}", self.ndofs_e)?;
        match self.ndofs_j {
            Some(n) => writeln!(f, "J DOFs (free)   {n}"),
            None => writeln!(f, "J DOFs (free)   no metal region"),
        }
    }
}

/// Writes `text` to `dir/name`, creating `dir` if needed.
pub fn write_output(dir: &Path, name: &str, text: &[u8]) -> Result<std::path::PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, text)?;
    Ok(path)
}

/// Process exit code for an error: 2 for bad input, 3 for solver failure, 4 for I/O.
pub fn exit_code(err: &Error) -> i32 {
    match err.root() {
        Error::Config(_)
        | Error::Parse { .. }
        | Error::InvalidArgument(_)
        | Error::InvalidSurface(_)
        | Error::DegenerateCell { .. } => 2,
        Error::SingularMatrix(_) | Error::NotConverged { .. } | Error::Pole(_) => 3,
        Error::Io(_) => 4,
        Error::AtLevel { .. } => unreachable!("root strips level context"),
    }
}
