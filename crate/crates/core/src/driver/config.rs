use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linsolve::SolverMethod;
use crate::mesh::SphereMeshSpec;
use crate::model::PhysicalParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Manufactured,
    Scattering,
    Dispersion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormChoice {
    #[default]
    Sum,
    Rss,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub kind: ProblemKind,
    /// Element order `r` of both spaces.
    #[serde(default = "one")]
    pub order: usize,
    /// How the two pieces of the H(curl) and H(div) errors are combined.
    #[serde(default)]
    pub norm: NormChoice,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeshSource {
    /// Unit cube split into `n³` Kuhn cubes.
    #[default]
    Box,
    /// Gmsh MSH 2.2 / 4.1 ASCII file.
    Msh,
    /// Built-in sphere-in-sphere generator.
    Sphere,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshConfig {
    pub source: MeshSource,
    /// Subdivisions per axis of the coarsest box mesh.
    pub n: usize,
    /// Number of refinement levels of a convergence study.
    pub levels: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Region marker of the metal, where `J` lives.
    pub metal_marker: i32,
    /// Face marker of the absorbing boundary; every boundary face when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary_marker: Option<i32>,
    /// Face marker of the extinction surface; the metal interface when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub surface_marker: Option<i32>,
    pub sphere: SphereMeshSpec,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self {
            source: MeshSource::Box,
            n: 2,
            levels: 1,
            path: None,
            metal_marker: 1,
            boundary_marker: None,
            surface_marker: None,
            sphere: SphereMeshSpec::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    #[default]
    Direct,
    Gmres,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub method: SolverKind,
    pub restart: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub ilu0: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: SolverKind::Direct,
            restart: 50,
            max_iter: 5000,
            tol: 1e-10,
            ilu0: true,
        }
    }
}

impl SolverConfig {
    pub fn method(&self) -> SolverMethod {
        match self.method {
            SolverKind::Direct => SolverMethod::DirectLu,
            SolverKind::Gmres => SolverMethod::Gmres {
                restart: self.restart,
                max_iter: self.max_iter,
                tol: self.tol,
                ilu0: self.ilu0,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScatteringConfig {
    /// Driving frequencies as multiples of `reference_omega_p`.
    pub omega_over_omega_p: Vec<f64>,
    /// Plasma frequency the sweep is expressed in; `physics.omega_p` when
    /// absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_omega_p: Option<f64>,
    /// Diameter `D` normalizing the extinction cross section.
    pub diameter: f64,
    /// Indices into the sweep at which VTK snapshots are written.
    pub vtk_at: Vec<usize>,
}

impl Default for ScatteringConfig {
    fn default() -> Self {
        Self {
            omega_over_omega_p: vec![0.5],
            reference_omega_p: None,
            diameter: 4.0,
            vtk_at: Vec::new(),
        }
    }
}

/// `count` equispaced values from `start` to `stop` inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Range {
    pub fn values(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.start],
            n => (0..n)
                .map(|i| self.start + (self.stop - self.start) * i as f64 / (n - 1) as f64)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionConfig {
    pub omega: Range,
    pub k: Range,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub vtk: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            vtk: true,
        }
    }
}

/// A complete run description, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    #[serde(default)]
    pub mesh: MeshConfig,
    #[serde(default)]
    pub physics: PhysicalParams,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scattering: Option<ScatteringConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dispersion: Option<DispersionConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| config_err(e.to_string()))
    }

    /// Checks that the sections needed by the problem kind are present and
    /// consistent.
    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.problem.order) {
            return Err(config_err(format!("order must be 1 or 2, got {}", self.problem.order)));
        }
        if self.mesh.levels == 0 {
            return Err(config_err("mesh.levels must be at least 1"));
        }
        if self.mesh.source == MeshSource::Box && self.mesh.n == 0 {
            return Err(config_err("mesh.n must be positive"));
        }
        if self.mesh.source == MeshSource::Msh && self.mesh.path.is_none() {
            return Err(config_err("mesh.source = \"msh\" needs mesh.path"));
        }
        let s = &self.solver;
        if s.method == SolverKind::Gmres && (s.restart == 0 || s.max_iter == 0 || !(s.tol > 0.0)) {
            return Err(config_err("GMRES needs restart > 0, max_iter > 0 and tol > 0"));
        }
        match self.problem.kind {
            ProblemKind::Manufactured => {
                if self.mesh.source != MeshSource::Box {
                    return Err(config_err("the manufactured problem is posed on the unit cube (mesh.source = \"box\")"));
                }
                if self.physics != PhysicalParams::unit() {
                    return Err(config_err("the manufactured problem needs every physics parameter equal to 1"));
                }
            }
            ProblemKind::Scattering => {
                let sc = self
                    .scattering
                    .as_ref()
                    .ok_or_else(|| config_err("scattering problem needs a [scattering] section"))?;
                if sc.omega_over_omega_p.is_empty() || sc.omega_over_omega_p.iter().any(|&w| !(w > 0.0)) {
                    return Err(config_err("scattering.omega_over_omega_p must be a non-empty list of positive values"));
                }
                if !(sc.diameter > 0.0) {
                    return Err(config_err("scattering.diameter must be positive"));
                }
                if sc.reference_omega_p.unwrap_or(self.physics.omega_p) <= 0.0 {
                    return Err(config_err("the sweep needs a positive reference plasma frequency"));
                }
                if let Some(&i) = sc.vtk_at.iter().find(|&&i| i >= sc.omega_over_omega_p.len()) {
                    return Err(config_err(format!("scattering.vtk_at index {i} outside the sweep")));
                }
            }
            ProblemKind::Dispersion => {
                if self.dispersion.is_none() {
                    return Err(config_err("dispersion problem needs a [dispersion] section"));
                }
            }
        }
        Ok(())
    }
}
