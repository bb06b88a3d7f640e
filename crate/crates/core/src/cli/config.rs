use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::geometry::DEFAULT_WELD_TOLERANCE;
use crate::remesh::DEFAULT_ITERATIONS;
use crate::shellfem::{
    Material, Pressure, ReferenceSurface, ShellSection, SolverKind, SolverOptions,
};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "policy", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClampPolicy {
    /// Clamp every vertex of every boundary loop.
    #[default]
    AutoRims,
    /// Clamp exactly these vertex indices.
    Vertices { vertices: Vec<usize> },
    /// 3-2-1 rigid-body support for closed surfaces.
    TieDown,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default)]
    pub kind: SolverKind,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_tolerance() -> f64 {
    1e-9
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            kind: SolverKind::Direct,
            tolerance: default_tolerance(),
        }
    }
}

fn default_weld() -> f64 {
    DEFAULT_WELD_TOLERANCE
}
fn default_iterations() -> usize {
    DEFAULT_ITERATIONS
}
fn default_thickness() -> f64 {
    0.086
}
fn default_youngs() -> f64 {
    Material::vessel_wall().youngs_modulus
}
fn default_poisson() -> f64 {
    Material::vessel_wall().poissons_ratio
}
fn default_points() -> usize {
    5
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}

/// Declarative description of one analysis run. Relative paths resolve
/// against the directory holding the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub mesh: PathBuf,
    #[serde(default = "default_weld")]
    pub weld_tolerance: f64,
    /// Remesh to this edge length (mm) before solving; `null` keeps the input mesh.
    #[serde(default)]
    pub target_edge: Option<f64>,
    #[serde(default = "default_iterations")]
    pub remesh_iterations: usize,
    pub pressure: Pressure,
    #[serde(default = "default_thickness")]
    pub thickness: f64,
    #[serde(default = "default_youngs")]
    pub youngs_modulus: f64,
    #[serde(default = "default_poisson")]
    pub poissons_ratio: f64,
    #[serde(default)]
    pub reference_surface: ReferenceSurface,
    #[serde(default = "default_points")]
    pub through_points: usize,
    #[serde(default)]
    pub clamp: ClampPolicy,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub deterministic: bool,
    /// Reverse the orientation after outward orientation.
    #[serde(default)]
    pub flip: bool,
}

impl RunConfig {
    pub fn new(mesh: impl Into<PathBuf>, pressure: Pressure) -> Self {
        RunConfig {
            schema_version: SCHEMA_VERSION,
            mesh: mesh.into(),
            weld_tolerance: default_weld(),
            target_edge: None,
            remesh_iterations: default_iterations(),
            pressure,
            thickness: default_thickness(),
            youngs_modulus: default_youngs(),
            poissons_ratio: default_poisson(),
            reference_surface: ReferenceSurface::Inner,
            through_points: default_points(),
            clamp: ClampPolicy::AutoRims,
            solver: SolverConfig::default(),
            output_dir: default_output(),
            deterministic: false,
            flip: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Load and resolve relative paths against the config's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if cfg.mesh.is_relative() {
            cfg.mesh = base.join(&cfg.mesh);
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if !(self.weld_tolerance >= 0.0) {
            return bad("weld_tolerance must be >= 0".into());
        }
        if let Some(t) = self.target_edge {
            if !(t > 0.0) {
                return bad("target_edge must be positive".into());
            }
        }
        if self.remesh_iterations < 1 {
            return bad("remesh_iterations must be >= 1".into());
        }
        if !(self.solver.tolerance > 0.0) {
            return bad("solver tolerance must be positive".into());
        }
        self.material()?;
        self.section()?;
        crate::shellfem::LoadCase::new(self.pressure).map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn material(&self) -> Result<Material> {
        Material::new(self.youngs_modulus, self.poissons_ratio)
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn section(&self) -> Result<ShellSection> {
        ShellSection::new(self.thickness, self.reference_surface, self.through_points)
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            kind: self.solver.kind,
            tolerance: self.solver.tolerance,
            max_iterations: None,
            deterministic: self.deterministic,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str =
        r#"{"schema_version": 1, "mesh": "a.stl", "pressure": {"unit": "mmHg", "value": 100}}"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = RunConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.thickness, 0.086);
        assert_eq!(c.through_points, 5);
        assert_eq!(c.reference_surface, ReferenceSurface::Inner);
        assert_eq!(c.clamp, ClampPolicy::AutoRims);
        assert!((c.pressure.to_mpa() - 0.0133322).abs() < 1e-15);
    }

    #[test]
    fn round_trips_through_json() {
        let mut c = RunConfig::new("x.stl", Pressure::KPa(13.332));
        c.clamp = ClampPolicy::Vertices {
            vertices: vec![1, 2],
        };
        c.target_edge = Some(0.3);
        assert_eq!(RunConfig::from_json(&c.to_json()).unwrap(), c);
    }

    #[test]
    fn rejects_bad_configs() {
        let unknown = MINIMAL.replace("\"mesh\"", "\"colour\": 1, \"mesh\"");
        assert!(matches!(
            RunConfig::from_json(&unknown),
            Err(Error::Config(_))
        ));
        let version = MINIMAL.replace("\"schema_version\": 1", "\"schema_version\": 2");
        assert!(RunConfig::from_json(&version).is_err());
        let unitless = r#"{"schema_version": 1, "mesh": "a.stl", "pressure": 100}"#;
        assert!(RunConfig::from_json(unitless).is_err());
        let even = MINIMAL.replace("\"mesh\"", "\"through_points\": 4, \"mesh\"");
        assert!(RunConfig::from_json(&even).is_err());
        let thin = MINIMAL.replace("\"mesh\"", "\"thickness\": 0, \"mesh\"");
        assert!(RunConfig::from_json(&thin).is_err());
    }
}
