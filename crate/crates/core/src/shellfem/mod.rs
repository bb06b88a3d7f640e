//! Linear flat-facet shell analysis: constant-strain membrane plus
//! discrete-Kirchhoff bending triangle, six DOF per node, clamped rims and
//! uniform luminal pressure applied as a dead load.

mod assembly;
pub(crate) mod element;
mod frame;
mod solver;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::geometry::{boundary_loops, offset_surface, TriangleMesh};
use crate::{Error, Result, Vec3};

pub use assembly::{assemble, assemble_stiffness, pressure_nodal_loads, CscMatrix, LinearSystem};
pub use element::{element_stiffness, element_stiffness_local, DRILLING_FACTOR};
pub use frame::{element_local_frame, ElementFrame};
pub use solver::{solve_displacements, solve_flat, SolveStats, SolverKind, SolverOptions};

/// Degrees of freedom per node: ux, uy, uz, rx, ry, rz.
pub const DOF_PER_NODE: usize = 6;

/// 1 mmHg in MPa.
pub const MMHG_TO_MPA: f64 = 133.322e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Material {
    /// MPa
    pub youngs_modulus: f64,
    pub poissons_ratio: f64,
}

impl Material {
    pub fn new(youngs_modulus: f64, poissons_ratio: f64) -> Result<Self> {
        if !(youngs_modulus > 0.0 && youngs_modulus.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Young's modulus must be positive, got {youngs_modulus}"
            )));
        }
        if !(0.0..0.5).contains(&poissons_ratio) {
            return Err(Error::InvalidParameter(format!(
                "Poisson's ratio must be in [0, 0.5), got {poissons_ratio}"
            )));
        }
        Ok(Material {
            youngs_modulus,
            poissons_ratio,
        })
    }

    /// Nearly incompressible stiff wall used for stress recovery (100 GPa, 0.49).
    pub fn vessel_wall() -> Self {
        Material {
            youngs_modulus: 100_000.0,
            poissons_ratio: 0.49,
        }
    }

    /// Plane-stress elasticity matrix (MPa) acting on (exx, eyy, gxy).
    pub fn plane_stress(&self) -> Matrix3<f64> {
        let (e, nu) = (self.youngs_modulus, self.poissons_ratio);
        let k = e / (1.0 - nu * nu);
        Matrix3::new(
            k,
            k * nu,
            0.0,
            k * nu,
            k,
            0.0,
            0.0,
            0.0,
            k * (1.0 - nu) / 2.0,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceSurface {
    /// The meshed surface is the lumen; the mid-surface sits t/2 outward.
    #[default]
    Inner,
    /// The meshed surface is the mid-surface.
    Mid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellSection {
    /// mm
    pub thickness: f64,
    pub reference_surface: ReferenceSurface,
    /// Odd number (>= 3) of evenly spaced through-thickness sample points.
    pub through_points: usize,
}

impl ShellSection {
    pub fn new(
        thickness: f64,
        reference_surface: ReferenceSurface,
        through_points: usize,
    ) -> Result<Self> {
        if !(thickness > 0.0 && thickness.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "thickness must be positive, got {thickness}"
            )));
        }
        if through_points < 3 || through_points.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "through-thickness points must be odd and >= 3, got {through_points}"
            )));
        }
        Ok(ShellSection {
            thickness,
            reference_surface,
            through_points,
        })
    }

    pub fn with_points(self, through_points: usize) -> Result<Self> {
        ShellSection::new(self.thickness, self.reference_surface, through_points)
    }
}

/// Pressure with an explicit unit tag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "unit", content = "value")]
pub enum Pressure {
    #[serde(rename = "mmHg")]
    MmHg(f64),
    #[serde(rename = "kPa")]
    KPa(f64),
    #[serde(rename = "MPa")]
    MPa(f64),
}

impl Pressure {
    pub fn to_mpa(self) -> f64 {
        match self {
            Pressure::MmHg(v) => v * MMHG_TO_MPA,
            Pressure::KPa(v) => v * 1e-3,
            Pressure::MPa(v) => v,
        }
    }
}

impl fmt::Display for Pressure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pressure::MmHg(v) => write!(f, "{v} mmHg"),
            Pressure::KPa(v) => write!(f, "{v} kPa"),
            Pressure::MPa(v) => write!(f, "{v} MPa"),
        }
    }
}

impl FromStr for Pressure {
    type Err = Error;

    /// Parses "100mmHg", "13.332 kPa", "0.0133 MPa".
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let split = s
            .find(|c: char| c.is_ascii_alphabetic())
            .ok_or_else(|| Error::InvalidParameter(format!("pressure '{s}' has no unit")))?;
        let (num, unit) = s.split_at(split);
        let v: f64 = num
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("invalid pressure value '{num}'")))?;
        match unit.trim() {
            "mmHg" | "mmhg" => Ok(Pressure::MmHg(v)),
            "kPa" | "kpa" => Ok(Pressure::KPa(v)),
            "MPa" | "mpa" => Ok(Pressure::MPa(v)),
            u => Err(Error::InvalidParameter(format!(
                "unknown pressure unit '{u}'"
            ))),
        }
    }
}

/// Uniform luminal pressure in MPa; positive pushes the wall outward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadCase {
    pub pressure: f64,
}

impl LoadCase {
    pub fn new(pressure: Pressure) -> Result<Self> {
        let p = pressure.to_mpa();
        if !p.is_finite() {
            return Err(Error::InvalidParameter("pressure must be finite".into()));
        }
        Ok(LoadCase { pressure: p })
    }
}

/// Essential boundary conditions. Clamped vertices have all six DOF fixed;
/// `fixed_dofs` holds individual global DOF indices (rigid-body tie-down).
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ConstraintSet {
    pub clamped_vertices: BTreeSet<usize>,
    pub fixed_dofs: BTreeSet<usize>,
}

impl ConstraintSet {
    pub fn clamped(vertices: impl IntoIterator<Item = usize>) -> Self {
        ConstraintSet {
            clamped_vertices: vertices.into_iter().collect(),
            fixed_dofs: BTreeSet::new(),
        }
    }

    /// Clamp every vertex on every open rim.
    pub fn from_rims(mesh: &TriangleMesh) -> Result<Self> {
        let loops = boundary_loops(mesh)?;
        Ok(Self::clamped(
            loops.into_iter().flat_map(|l| l.vertex_indices),
        ))
    }

    /// 3-2-1 statically determinate support for closed surfaces: one vertex
    /// fixed in x, y, z; a distant second one in the two directions across the
    /// line joining them; a third in the direction normal to the plane of all
    /// three.
    pub fn tie_down(mesh: &TriangleMesh) -> Result<Self> {
        let v = mesh.vertices();
        if v.len() < 3 {
            return Err(Error::InvalidMesh(
                "tie-down needs at least 3 vertices".into(),
            ));
        }
        let centroid = mesh.area_centroid();
        let argmax = |f: &dyn Fn(&Vec3) -> f64| -> usize {
            (0..v.len())
                .max_by(|&i, &j| f(&v[i]).total_cmp(&f(&v[j])).then(j.cmp(&i)))
                .unwrap()
        };
        let a = argmax(&|p| (p - centroid).norm_squared());
        let pa = v[a];
        let b = argmax(&|p| (p - pa).norm_squared());
        let ab = v[b] - pa;
        let c = argmax(&|p| (p - pa).cross(&ab).norm_squared());
        let normal = ab.cross(&(v[c] - pa));
        if normal.norm() <= 1e-12 * ab.norm_squared() {
            return Err(Error::InvalidMesh("tie-down vertices are collinear".into()));
        }
        let dominant = |d: &Vec3| d.iamax();
        let mut fixed = BTreeSet::new();
        for k in 0..3 {
            fixed.insert(DOF_PER_NODE * a + k);
        }
        let kb = dominant(&ab);
        for k in (0..3).filter(|&k| k != kb) {
            fixed.insert(DOF_PER_NODE * b + k);
        }
        fixed.insert(DOF_PER_NODE * c + dominant(&normal));
        Ok(ConstraintSet {
            clamped_vertices: BTreeSet::new(),
            fixed_dofs: fixed,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.clamped_vertices.is_empty() && self.fixed_dofs.is_empty()
    }

    /// Sorted, de-duplicated global DOF indices.
    pub fn dofs(&self) -> Vec<usize> {
        let mut d: BTreeSet<usize> = self.fixed_dofs.clone();
        for &v in &self.clamped_vertices {
            for k in 0..DOF_PER_NODE {
                d.insert(DOF_PER_NODE * v + k);
            }
        }
        d.into_iter().collect()
    }
}

/// Complete linear shell problem.
#[derive(Debug, Clone)]
pub struct ShellModel {
    /// Surface as given (lumen for `Inner`, mid-surface for `Mid`).
    pub mesh: TriangleMesh,
    /// Shell mid-surface actually analysed.
    pub analysis_mesh: TriangleMesh,
    pub material: Material,
    pub section: ShellSection,
    pub load: LoadCase,
    pub constraints: ConstraintSet,
}

impl ShellModel {
    pub fn new(
        mesh: TriangleMesh,
        material: Material,
        section: ShellSection,
        load: LoadCase,
        constraints: ConstraintSet,
    ) -> Result<Self> {
        if !mesh.is_consistently_wound() {
            return Err(Error::InvalidMesh(
                "shell mesh must be consistently oriented".into(),
            ));
        }
        let n = mesh.vertex_count();
        if let Some(&bad) = constraints.clamped_vertices.iter().find(|&&v| v >= n) {
            return Err(Error::InvalidParameter(format!(
                "clamped vertex {bad} out of range"
            )));
        }
        if let Some(&bad) = constraints
            .fixed_dofs
            .iter()
            .find(|&&d| d >= DOF_PER_NODE * n)
        {
            return Err(Error::InvalidParameter(format!(
                "fixed DOF {bad} out of range"
            )));
        }
        let analysis_mesh = match section.reference_surface {
            ReferenceSurface::Inner => offset_surface(&mesh, section.thickness / 2.0)?,
            ReferenceSurface::Mid => mesh.clone(),
        };
        Ok(ShellModel {
            mesh,
            analysis_mesh,
            material,
            section,
            load,
            constraints,
        })
    }

    pub fn dof_count(&self) -> usize {
        DOF_PER_NODE * self.analysis_mesh.vertex_count()
    }
}

/// Nodal generalized displacements: (ux, uy, uz) in mm, (rx, ry, rz) in rad.
#[derive(Debug, Clone, PartialEq)]
pub struct Displacements {
    pub values: Vec<[f64; 6]>,
}

impl Displacements {
    pub fn zeros(n: usize) -> Self {
        Displacements {
            values: vec![[0.0; 6]; n],
        }
    }

    pub fn from_flat(u: &[f64]) -> Self {
        Displacements {
            values: u
                .chunks_exact(DOF_PER_NODE)
                .map(|c| c.try_into().unwrap())
                .collect(),
        }
    }

    pub fn flat(&self) -> Vec<f64> {
        self.values.iter().flatten().copied().collect()
    }

    pub fn translation(&self, v: usize) -> Vec3 {
        let d = &self.values[v];
        Vec3::new(d[0], d[1], d[2])
    }

    pub fn scaled(&self, s: f64) -> Self {
        Displacements {
            values: self.values.iter().map(|d| d.map(|x| x * s)).collect(),
        }
    }
}
