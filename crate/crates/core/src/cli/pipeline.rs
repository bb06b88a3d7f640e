use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use super::config::{ClampPolicy, RunConfig};
use crate::fieldstat::{default_ranks, percentile_curve, PercentileCurve};
use crate::geometry::{
    boundary_loops, load_stl, orient_outward, quality_report, MeshQualityReport, TriangleMesh,
};
use crate::recovery::{mean_stress, stress_resultants, wall_fields, WallFields};
use crate::remesh::{isotropic_remesh, RemeshParams};
use crate::shellfem::{
    assemble, solve_displacements, ConstraintSet, Displacements, LoadCase, ShellModel, SolveStats,
};
use crate::vtk::write_polydata;
use crate::{Error, Result};

pub const VTK_FILE: &str = "result.vtk";
pub const SUMMARY_FILE: &str = "summary.json";
pub const INTEGRATED_CSV: &str = "mpwt_integrated_percentiles.csv";
pub const MIDSURFACE_CSV: &str = "mpwt_midsurface_percentiles.csv";

/// Everything a solve run produces.
#[derive(Debug, Clone)]
pub struct ResultBundle {
    pub model: ShellModel,
    pub displacements: Displacements,
    pub fields: WallFields,
    pub quality: MeshQualityReport,
    pub stats: SolveStats,
    pub rims: usize,
    pub integrated_curve: PercentileCurve,
    pub midsurface_curve: PercentileCurve,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstraintSummary {
    pub policy: &'static str,
    pub clamped_rims: usize,
    pub clamped_vertices: usize,
    pub fixed_dofs: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveSummary {
    pub dof: usize,
    pub nonzeros: usize,
    pub solver: crate::shellfem::SolverKind,
    pub iterations: usize,
    pub relative_residual: f64,
    /// Omitted from deterministic runs so reruns are byte-identical.
    pub seconds: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub mesh: String,
    pub pressure_mpa: f64,
    pub thickness: f64,
    pub through_points: usize,
    pub quality: MeshQualityReport,
    pub constraints: ConstraintSummary,
    pub solve: SolveSummary,
    /// Maximum of the MPWT_midsurface field (N/mm).
    pub max_mpwt: f64,
    pub max_mpwt_integrated: f64,
    pub median_mpwt: f64,
    pub median_mpwt_integrated: f64,
    /// max_mpwt / thickness (MPa).
    pub max_mean_stress: f64,
    pub max_mps_inner: f64,
}

/// Load, orient, optionally flip.
pub fn load_surface(path: &Path, weld_tolerance: f64, flip: bool) -> Result<TriangleMesh> {
    let mesh = orient_outward(&load_stl(path, weld_tolerance)?)?;
    Ok(if flip { mesh.flipped() } else { mesh })
}

pub fn constraints_for(mesh: &TriangleMesh, policy: &ClampPolicy) -> Result<ConstraintSet> {
    match policy {
        ClampPolicy::AutoRims => ConstraintSet::from_rims(mesh),
        ClampPolicy::Vertices { vertices } => Ok(ConstraintSet::clamped(vertices.iter().copied())),
        ClampPolicy::TieDown => ConstraintSet::tie_down(mesh),
    }
}

fn policy_name(p: &ClampPolicy) -> &'static str {
    match p {
        ClampPolicy::AutoRims => "auto_rims",
        ClampPolicy::Vertices { .. } => "vertices",
        ClampPolicy::TieDown => "tie_down",
    }
}

/// Remesh (if configured) and solve an already loaded surface.
pub fn solve_surface(mesh: TriangleMesh, config: &RunConfig) -> Result<ResultBundle> {
    let mesh = match config.target_edge {
        Some(h) => {
            let params = RemeshParams::new(h)?.with_iterations(config.remesh_iterations)?;
            isotropic_remesh(&mesh, &params)?
        }
        None => mesh,
    };
    let quality = quality_report(&mesh)?;
    let rims = boundary_loops(&mesh)?.len();
    let constraints = constraints_for(&mesh, &config.clamp)?;
    if constraints.is_empty() {
        return Err(Error::SingularSystem(
            "no constraints: the surface has no rims to clamp; use the tie_down clamp policy for closed surfaces"
                .into(),
        ));
    }
    let model = ShellModel::new(
        mesh,
        config.material()?,
        config.section()?,
        LoadCase::new(config.pressure)?,
        constraints,
    )?;
    let system = assemble(&model)?;
    let (displacements, stats) = solve_displacements(&system, &config.solver_options())?;
    let resultants = stress_resultants(&model, &displacements)?;
    let fields = wall_fields(&model, &resultants)?;
    let ranks = default_ranks();
    let integrated_curve = percentile_curve(&fields.mpwt_integrated, &ranks)?;
    let midsurface_curve = percentile_curve(&fields.mpwt_midsurface, &ranks)?;
    Ok(ResultBundle {
        model,
        displacements,
        fields,
        quality,
        stats,
        rims,
        integrated_curve,
        midsurface_curve,
    })
}

pub fn run_solve(config: &RunConfig, flip: bool) -> Result<ResultBundle> {
    let start = Instant::now();
    let mesh = load_surface(&config.mesh, config.weld_tolerance, config.flip ^ flip)?;
    let bundle = solve_surface(mesh, config)?;
    log::info!("pipeline finished in {:.2}s", start.elapsed().as_secs_f64());
    Ok(bundle)
}

impl ResultBundle {
    pub fn summary(&self, mesh_label: &str, deterministic: bool) -> Result<Summary> {
        let section = &self.model.section;
        let max_mpwt = self.fields.mpwt_midsurface.max();
        let c = &self.model.constraints;
        Ok(Summary {
            mesh: mesh_label.to_string(),
            pressure_mpa: self.model.load.pressure,
            thickness: section.thickness,
            through_points: section.through_points,
            quality: self.quality.clone(),
            constraints: ConstraintSummary {
                policy: "",
                clamped_rims: self.rims,
                clamped_vertices: c.clamped_vertices.len(),
                fixed_dofs: c.dofs().len(),
            },
            solve: SolveSummary {
                dof: self.stats.dof,
                nonzeros: self.stats.nonzeros,
                solver: self.stats.kind,
                iterations: self.stats.iterations,
                relative_residual: self.stats.relative_residual,
                seconds: (!deterministic).then_some(self.stats.seconds),
            },
            max_mpwt,
            max_mpwt_integrated: self.fields.mpwt_integrated.max(),
            median_mpwt: self.midsurface_curve.value_at(50.0).unwrap_or(f64::NAN),
            median_mpwt_integrated: self.integrated_curve.value_at(50.0).unwrap_or(f64::NAN),
            max_mean_stress: mean_stress(max_mpwt, section)?,
            max_mps_inner: self.fields.mps_inner.max(),
        })
    }

    /// Write VTK, both percentile CSVs and the JSON summary into `dir`.
    pub fn write(&self, dir: &Path, config: &RunConfig, deterministic: bool) -> Result<Summary> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_polydata(
            dir.join(VTK_FILE),
            &self.model.analysis_mesh,
            &self.fields.all(),
            "wall tension fields",
        )?;
        self.integrated_curve.write_csv(dir.join(INTEGRATED_CSV))?;
        self.midsurface_curve.write_csv(dir.join(MIDSURFACE_CSV))?;
        let label = config
            .mesh
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let mut summary = self.summary(&label, deterministic)?;
        summary.constraints.policy = policy_name(&config.clamp);
        let path = dir.join(SUMMARY_FILE);
        let text = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(summary)
    }
}
