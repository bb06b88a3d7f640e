//! Python bindings: mesh generation and I/O, remeshing, the shell solve and
//! the field statistics. Errors surface as `wallten.WalltenError` carrying the
//! CLI exit code.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use wallten::cli::{pipeline, ClampPolicy, RunConfig};
use wallten::fieldstat::{self, PercentileCurve};
use wallten::geometry::{self, TriangleMesh};
use wallten::recovery::{self, StressResultants};
use wallten::remesh::{isotropic_remesh, RemeshParams};
use wallten::shellfem::{Pressure, ReferenceSurface, ShellSection};
use wallten::Vec3;

create_exception!(wallten, WalltenError, PyException);

fn to_py(e: wallten::Error) -> PyErr {
    let code = e.exit_code();
    let err = WalltenError::new_err(e.to_string());
    Python::attach(|py| {
        // best effort: the message is the important part
        let _ = err.value(py).setattr("exit_code", code);
    });
    err
}

fn json_to_py<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| WalltenError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn parse_pressure(value: f64, unit: &str) -> PyResult<Pressure> {
    match unit {
        "mmHg" => Ok(Pressure::MmHg(value)),
        "kPa" => Ok(Pressure::KPa(value)),
        "MPa" => Ok(Pressure::MPa(value)),
        other => Err(WalltenError::new_err(format!(
            "unknown pressure unit '{other}'"
        ))),
    }
}

fn parse_reference(s: &str) -> PyResult<ReferenceSurface> {
    match s {
        "inner" => Ok(ReferenceSurface::Inner),
        "mid" => Ok(ReferenceSurface::Mid),
        other => Err(WalltenError::new_err(format!(
            "unknown reference surface '{other}'"
        ))),
    }
}

/// Triangulated surface in mm.
#[pyclass(name = "Mesh", module = "wallten", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyMesh {
    inner: TriangleMesh,
}

#[pymethods]
impl PyMesh {
    #[new]
    fn new(vertices: Vec<[f64; 3]>, triangles: Vec<[usize; 3]>) -> PyResult<Self> {
        let v = vertices.into_iter().map(Vec3::from).collect();
        let inner = TriangleMesh::new(v, triangles, "python").map_err(to_py)?;
        Ok(PyMesh { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (path, weld_tolerance = 1e-5))]
    fn load(path: &str, weld_tolerance: f64) -> PyResult<Self> {
        let inner = geometry::load_stl(path, weld_tolerance).map_err(to_py)?;
        Ok(PyMesh { inner })
    }

    #[staticmethod]
    fn icosphere(radius: f64, target_edge: f64) -> PyResult<Self> {
        Ok(PyMesh {
            inner: geometry::make_icosphere(radius, target_edge).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn open_cylinder(radius: f64, length: f64, target_edge: f64) -> PyResult<Self> {
        let inner = geometry::make_open_cylinder(radius, length, target_edge).map_err(to_py)?;
        Ok(PyMesh { inner })
    }

    #[staticmethod]
    fn bumpy_sphere(radius: f64, target_edge: f64, amplitude: f64) -> PyResult<Self> {
        let inner = geometry::make_bumpy_sphere(radius, target_edge, amplitude).map_err(to_py)?;
        Ok(PyMesh { inner })
    }

    #[staticmethod]
    fn tri_clip(radius: f64, target_edge: f64) -> PyResult<Self> {
        let openings = geometry::tri_clip_openings();
        let inner = geometry::make_clipped_sphere(radius, target_edge, &openings).map_err(to_py)?;
        Ok(PyMesh { inner })
    }

    #[staticmethod]
    fn blob(radius: f64, target_edge: f64) -> PyResult<Self> {
        Ok(PyMesh {
            inner: geometry::make_blob(radius, target_edge).map_err(to_py)?,
        })
    }

    #[pyo3(signature = (path, ascii = false))]
    fn save(&self, path: &str, ascii: bool) -> PyResult<()> {
        if ascii {
            geometry::save_stl_ascii(&self.inner, path)
        } else {
            geometry::save_stl(&self.inner, path)
        }
        .map_err(to_py)
    }

    #[pyo3(signature = (target_edge, iterations = 10))]
    fn remesh(&self, target_edge: f64, iterations: usize) -> PyResult<Self> {
        let params = RemeshParams::new(target_edge)
            .and_then(|p| p.with_iterations(iterations))
            .map_err(to_py)?;
        Ok(PyMesh {
            inner: isotropic_remesh(&self.inner, &params).map_err(to_py)?,
        })
    }

    fn flipped(&self) -> Self {
        PyMesh {
            inner: self.inner.flipped(),
        }
    }

    /// Consistently wound with outward normals.
    fn oriented(&self) -> PyResult<Self> {
        Ok(PyMesh {
            inner: geometry::orient_outward(&self.inner).map_err(to_py)?,
        })
    }

    #[getter]
    fn vertices(&self) -> Vec<[f64; 3]> {
        self.inner
            .vertices()
            .iter()
            .map(|v| [v.x, v.y, v.z])
            .collect()
    }

    #[getter]
    fn triangles(&self) -> Vec<[usize; 3]> {
        self.inner.triangles().to_vec()
    }

    #[getter]
    fn vertex_count(&self) -> usize {
        self.inner.vertex_count()
    }

    #[getter]
    fn triangle_count(&self) -> usize {
        self.inner.triangle_count()
    }

    fn boundary_loop_count(&self) -> PyResult<usize> {
        Ok(geometry::boundary_loops(&self.inner).map_err(to_py)?.len())
    }

    fn vertex_normals(&self) -> PyResult<Vec<[f64; 3]>> {
        let n = geometry::vertex_normals(&self.inner).map_err(to_py)?;
        Ok(n.iter().map(|v| [v.x, v.y, v.z]).collect())
    }

    fn quality<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_to_py(py, &geometry::quality_report(&self.inner).map_err(to_py)?)
    }

    fn __repr__(&self) -> String {
        format!(
            "Mesh(vertices={}, triangles={})",
            self.inner.vertex_count(),
            self.inner.triangle_count()
        )
    }
}

/// Output of a shell solve: per-vertex fields and a JSON-style summary.
#[pyclass(name = "SolveResult", module = "wallten", frozen)]
struct PySolveResult {
    bundle: pipeline::ResultBundle,
    config: RunConfig,
}

#[pymethods]
impl PySolveResult {
    #[getter]
    fn mesh(&self) -> PyMesh {
        PyMesh {
            inner: self.bundle.model.analysis_mesh.clone(),
        }
    }

    /// Field names in output order.
    #[getter]
    fn field_names(&self) -> Vec<String> {
        self.bundle
            .fields
            .all()
            .iter()
            .map(|f| f.name.clone())
            .collect()
    }

    fn field(&self, name: &str) -> PyResult<Vec<f64>> {
        self.bundle
            .fields
            .all()
            .iter()
            .find(|f| f.name == name)
            .map(|f| f.values.clone())
            .ok_or_else(|| WalltenError::new_err(format!("no field named '{name}'")))
    }

    /// Per-vertex [ux, uy, uz, rx, ry, rz].
    #[getter]
    fn displacements(&self) -> Vec<[f64; 6]> {
        self.bundle.displacements.values.clone()
    }

    #[pyo3(signature = (name, ranks = None))]
    fn percentiles(&self, name: &str, ranks: Option<Vec<f64>>) -> PyResult<Vec<f64>> {
        let field = self
            .bundle
            .fields
            .all()
            .into_iter()
            .find(|f| f.name == name)
            .ok_or_else(|| WalltenError::new_err(format!("no field named '{name}'")))?;
        let ranks = ranks.unwrap_or_else(fieldstat::default_ranks);
        Ok(fieldstat::percentile_curve(field, &ranks)
            .map_err(to_py)?
            .values)
    }

    #[pyo3(signature = (deterministic = false))]
    fn summary<'py>(&self, py: Python<'py>, deterministic: bool) -> PyResult<Bound<'py, PyAny>> {
        let summary = self
            .bundle
            .summary("python", deterministic)
            .map_err(to_py)?;
        json_to_py(py, &summary)
    }

    /// Write result.vtk, the percentile CSVs and summary.json into `directory`.
    #[pyo3(signature = (directory, deterministic = false))]
    fn write<'py>(
        &self,
        py: Python<'py>,
        directory: &str,
        deterministic: bool,
    ) -> PyResult<Bound<'py, PyAny>> {
        let s = self
            .bundle
            .write(directory.as_ref(), &self.config, deterministic)
            .map_err(to_py)?;
        json_to_py(py, &s)
    }
}

/// Solve a pressurized shell on `mesh`.
///
/// `clamp` is "auto_rims" (open surfaces) or "tie_down" (closed surfaces).
#[pyfunction]
#[pyo3(signature = (
    mesh,
    pressure,
    unit = "mmHg",
    thickness = 0.086,
    youngs_modulus = 1.0e5,
    poissons_ratio = 0.49,
    reference = "inner",
    through_points = 5,
    clamp = "auto_rims",
    target_edge = None,
))]
#[allow(clippy::too_many_arguments)]
fn solve(
    py: Python<'_>,
    mesh: &PyMesh,
    pressure: f64,
    unit: &str,
    thickness: f64,
    youngs_modulus: f64,
    poissons_ratio: f64,
    reference: &str,
    through_points: usize,
    clamp: &str,
    target_edge: Option<f64>,
) -> PyResult<PySolveResult> {
    let mut config = RunConfig::new("python", parse_pressure(pressure, unit)?);
    config.thickness = thickness;
    config.youngs_modulus = youngs_modulus;
    config.poissons_ratio = poissons_ratio;
    config.reference_surface = parse_reference(reference)?;
    config.through_points = through_points;
    config.target_edge = target_edge;
    config.clamp = match clamp {
        "auto_rims" => ClampPolicy::AutoRims,
        "tie_down" => ClampPolicy::TieDown,
        other => {
            return Err(WalltenError::new_err(format!(
                "unknown clamp policy '{other}'"
            )))
        }
    };
    config.validate().map_err(to_py)?;
    let surface = mesh.inner.clone();
    let bundle = py
        .detach(|| pipeline::solve_surface(surface, &config))
        .map_err(to_py)?;
    Ok(PySolveResult { bundle, config })
}

/// Run the pipeline described by a JSON config file.
#[pyfunction]
#[pyo3(signature = (path, flip = false))]
fn solve_config(py: Python<'_>, path: &str, flip: bool) -> PyResult<PySolveResult> {
    let config = RunConfig::load(path).map_err(to_py)?;
    let bundle = py
        .detach(|| pipeline::run_solve(&config, flip))
        .map_err(to_py)?;
    Ok(PySolveResult { bundle, config })
}

/// Largest in-plane principal value of (sxx, syy, sxy).
#[pyfunction]
fn principal_max_2d(sxx: f64, syy: f64, sxy: f64) -> f64 {
    recovery::principal_max_2d(&[sxx, syy, sxy])
}

/// Wall tension divided by thickness.
#[pyfunction]
fn mean_stress(tension: f64, thickness: f64) -> PyResult<f64> {
    let section = ShellSection::new(thickness, ReferenceSurface::Mid, 3).map_err(to_py)?;
    recovery::mean_stress(tension, &section).map_err(to_py)
}

/// Through-thickness integrated tension from membrane [Nxx, Nyy, Nxy] and
/// bending [Mxx, Myy, Mxy] resultants.
#[pyfunction]
#[pyo3(signature = (membrane, bending, thickness, points = 5))]
fn mpwt_integrated(
    membrane: [f64; 3],
    bending: [f64; 3],
    thickness: f64,
    points: usize,
) -> PyResult<f64> {
    let section = ShellSection::new(thickness, ReferenceSurface::Mid, points).map_err(to_py)?;
    let r = StressResultants { membrane, bending };
    Ok(recovery::mpwt_integrated(
        &recovery::profile_at_points(&r, &section),
        &section,
    ))
}

/// Largest principal membrane force.
#[pyfunction]
fn mpwt_midsurface(membrane: [f64; 3]) -> f64 {
    recovery::principal_max_2d(&membrane)
}

/// Weighted nearest-rank percentiles; unit weights when `weights` is None.
#[pyfunction]
#[pyo3(signature = (values, weights = None, ranks = None))]
fn percentile_curve(
    values: Vec<f64>,
    weights: Option<Vec<f64>>,
    ranks: Option<Vec<f64>>,
) -> PyResult<Vec<f64>> {
    let weights = weights.unwrap_or_else(|| vec![1.0; values.len()]);
    let field = recovery::SurfaceField::new("values", values, weights, "").map_err(to_py)?;
    let ranks = ranks.unwrap_or_else(fieldstat::default_ranks);
    Ok(fieldstat::percentile_curve(&field, &ranks)
        .map_err(to_py)?
        .values)
}

/// Max relative deviation of `candidate` from `reference` over ranks >= `rank_min`.
#[pyfunction]
#[pyo3(signature = (candidate, reference, ranks = None, rank_min = 5.0))]
fn curve_deviation(
    candidate: Vec<f64>,
    reference: Vec<f64>,
    ranks: Option<Vec<f64>>,
    rank_min: f64,
) -> PyResult<f64> {
    let ranks = ranks.unwrap_or_else(fieldstat::default_ranks);
    let curve = |values| PercentileCurve {
        ranks: ranks.clone(),
        values,
        units: String::new(),
    };
    let c = fieldstat::curve_deviation(&curve(candidate), &curve(reference), rank_min)
        .map_err(to_py)?;
    Ok(c.max_relative_deviation)
}

#[pymodule]
#[pyo3(name = "wallten")]
fn wallten_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("WalltenError", m.py().get_type::<WalltenError>())?;
    m.add_class::<PyMesh>()?;
    m.add_class::<PySolveResult>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(solve_config, m)?)?;
    m.add_function(wrap_pyfunction!(principal_max_2d, m)?)?;
    m.add_function(wrap_pyfunction!(mean_stress, m)?)?;
    m.add_function(wrap_pyfunction!(mpwt_integrated, m)?)?;
    m.add_function(wrap_pyfunction!(mpwt_midsurface, m)?)?;
    m.add_function(wrap_pyfunction!(percentile_curve, m)?)?;
    m.add_function(wrap_pyfunction!(curve_deviation, m)?)?;
    let info = PyDict::new(m.py());
    info.set_item("version", env!("CARGO_PKG_VERSION"))?;
    m.add("build_info", info)?;
    Ok(())
}
