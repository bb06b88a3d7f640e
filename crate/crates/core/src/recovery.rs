//! Stress recovery: membrane forces and bending moments per element, the
//! linear through-thickness stress profile, maximum in-plane principal stress
//! (MPS) layers and maximum principal wall tension (MPWT).
//!
//! Through-thickness depth `xi` runs from 0 at the inner (luminal) surface to
//! `t` at the outer surface, along the outward element normal.

use rayon::prelude::*;
use serde::Serialize;

use crate::geometry::TriangleMesh;
use crate::shellfem::element::{dkt_b, membrane_b, transformation, BENDING_DOFS, MEMBRANE_DOFS};
use crate::shellfem::{element_local_frame, Displacements, ShellModel, ShellSection, DOF_PER_NODE};
use crate::{Error, Result};
use nalgebra::{SVector, Vector3};

/// Plane-stress tensor components (sxx, syy, txy).
pub type PlaneStress = [f64; 3];

/// Section forces of one element in its local frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct StressResultants {
    /// Nxx, Nyy, Nxy in N/mm.
    pub membrane: [f64; 3],
    /// Mxx, Myy, Mxy in N mm/mm.
    pub bending: [f64; 3],
}

impl StressResultants {
    pub fn scaled(&self, s: f64) -> Self {
        StressResultants {
            membrane: self.membrane.map(|x| x * s),
            bending: self.bending.map(|x| x * s),
        }
    }
}

/// Stress sampled at `n` evenly spaced depths, innermost first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThroughThicknessProfile {
    pub depths: Vec<f64>,
    pub stresses: Vec<PlaneStress>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Layer {
    Inner,
    Mid,
    Outer,
}

impl Layer {
    pub fn depth(self, thickness: f64) -> f64 {
        match self {
            Layer::Inner => 0.0,
            Layer::Mid => thickness / 2.0,
            Layer::Outer => thickness,
        }
    }
}

/// Scalar field on mesh vertices with area weights.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurfaceField {
    pub name: String,
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
    pub units: String,
}

impl SurfaceField {
    pub fn new(
        name: impl Into<String>,
        values: Vec<f64>,
        weights: Vec<f64>,
        units: impl Into<String>,
    ) -> Result<Self> {
        if values.len() != weights.len() {
            return Err(Error::Field(format!(
                "{} values but {} weights",
                values.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::Field("weights must be positive and finite".into()));
        }
        Ok(SurfaceField {
            name: name.into(),
            values,
            weights,
            units: units.into(),
        })
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Membrane forces from the constant CST strain and moments from the DKT
/// curvature at the element centroid.
pub fn stress_resultants(model: &ShellModel, u: &Displacements) -> Result<Vec<StressResultants>> {
    let mesh = &model.analysis_mesh;
    if u.values.len() != mesh.vertex_count() {
        return Err(Error::InvalidParameter(format!(
            "displacements for {} vertices, mesh has {}",
            u.values.len(),
            mesh.vertex_count()
        )));
    }
    let d = model.material.plane_stress();
    let t = model.section.thickness;
    (0..mesh.triangle_count())
        .into_par_iter()
        .map(|e| {
            let f =
                element_local_frame(&mesh.corners(e)).map_err(|_| Error::DegenerateTriangle(e))?;
            let tr = transformation(&f);
            let mut ug = SVector::<f64, 18>::zeros();
            for (k, &v) in mesh.triangles()[e].iter().enumerate() {
                for a in 0..DOF_PER_NODE {
                    ug[DOF_PER_NODE * k + a] = u.values[v][a];
                }
            }
            let ul = tr * ug;
            let um = SVector::<f64, 6>::from_fn(|i, _| ul[MEMBRANE_DOFS[i]]);
            let ub = SVector::<f64, 9>::from_fn(|i, _| ul[BENDING_DOFS[i]]);
            let (bm, _) = membrane_b(&f);
            let strain: Vector3<f64> = bm * um;
            let curvature: Vector3<f64> = dkt_b(&f, 1.0 / 3.0, 1.0 / 3.0) * ub;
            let n = d * strain * t;
            let m = d * curvature * (t.powi(3) / 12.0);
            Ok(StressResultants {
                membrane: [n[0], n[1], n[2]],
                bending: [m[0], m[1], m[2]],
            })
        })
        .collect()
}

/// Plane stress at depth `xi`: N/t + 12 M (xi - t/2) / t^3 per component.
pub fn stress_at_depth(r: &StressResultants, thickness: f64, xi: f64) -> PlaneStress {
    let t = thickness;
    let z = xi - t / 2.0;
    std::array::from_fn(|k| r.membrane[k] / t + 12.0 * r.bending[k] * z / t.powi(3))
}

pub fn profile_at_points(r: &StressResultants, section: &ShellSection) -> ThroughThicknessProfile {
    let n = section.through_points;
    let t = section.thickness;
    let depths: Vec<f64> = (0..n).map(|i| t * i as f64 / (n - 1) as f64).collect();
    let stresses = depths.iter().map(|&xi| stress_at_depth(r, t, xi)).collect();
    ThroughThicknessProfile { depths, stresses }
}

/// Maximum in-plane principal value (signed, tension positive).
pub fn principal_max_2d(s: &PlaneStress) -> f64 {
    let [sxx, syy, txy] = *s;
    let c = 0.5 * (sxx + syy);
    let r = (0.5 * (sxx - syy)).hypot(txy);
    c + r
}

/// Wall tension by the through-thickness rule (t/n) * sum of sample MPS.
pub fn mpwt_integrated(profile: &ThroughThicknessProfile, section: &ShellSection) -> f64 {
    let n = profile.stresses.len() as f64;
    section.thickness / n * profile.stresses.iter().map(principal_max_2d).sum::<f64>()
}

/// Wall tension as thickness times mid-surface MPS, i.e. the maximum
/// principal membrane force.
pub fn mpwt_midsurface(r: &StressResultants, _section: &ShellSection) -> f64 {
    principal_max_2d(&r.membrane)
}

/// Mean wall stress from wall tension: T / t.
pub fn mean_stress(tension: f64, section: &ShellSection) -> Result<f64> {
    if section.thickness <= 0.0 {
        return Err(Error::InvalidParameter("thickness must be positive".into()));
    }
    Ok(tension / section.thickness)
}

/// Area-weighted average of per-element values at the vertices.
pub fn nodal_average(
    name: &str,
    element_values: &[f64],
    mesh: &TriangleMesh,
    units: &str,
) -> Result<SurfaceField> {
    if element_values.len() != mesh.triangle_count() {
        return Err(Error::Field(format!(
            "{} element values for {} triangles",
            element_values.len(),
            mesh.triangle_count()
        )));
    }
    let mut num = vec![0.0; mesh.vertex_count()];
    let mut den = vec![0.0; mesh.vertex_count()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let a = mesh.triangle_area(t);
        for &v in tri {
            num[v] += element_values[t] * a;
            den[v] += a;
        }
    }
    if let Some(v) = den.iter().position(|&d| d == 0.0) {
        return Err(Error::Field(format!(
            "vertex {v} has no incident triangles"
        )));
    }
    let values = num.iter().zip(&den).map(|(n, d)| n / d).collect();
    SurfaceField::new(name, values, mesh.vertex_areas(), units)
}

/// MPS at one layer, averaged to vertices.
pub fn surface_mps(
    model: &ShellModel,
    resultants: &[StressResultants],
    layer: Layer,
) -> Result<SurfaceField> {
    let t = model.section.thickness;
    let xi = layer.depth(t);
    let per_element: Vec<f64> = resultants
        .iter()
        .map(|r| principal_max_2d(&stress_at_depth(r, t, xi)))
        .collect();
    let name = match layer {
        Layer::Inner => "MPS_inner",
        Layer::Mid => "MPS_mid",
        Layer::Outer => "MPS_outer",
    };
    nodal_average(name, &per_element, &model.analysis_mesh, "MPa")
}

/// The five result fields of a solved model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WallFields {
    pub mps_inner: SurfaceField,
    pub mps_mid: SurfaceField,
    pub mps_outer: SurfaceField,
    pub mpwt_integrated: SurfaceField,
    pub mpwt_midsurface: SurfaceField,
}

impl WallFields {
    pub fn all(&self) -> [&SurfaceField; 5] {
        [
            &self.mps_inner,
            &self.mps_mid,
            &self.mps_outer,
            &self.mpwt_integrated,
            &self.mpwt_midsurface,
        ]
    }
}

/// Per-element wall tension by both routes.
pub fn element_mpwt(
    resultants: &[StressResultants],
    section: &ShellSection,
) -> (Vec<f64>, Vec<f64>) {
    resultants
        .iter()
        .map(|r| {
            (
                mpwt_integrated(&profile_at_points(r, section), section),
                mpwt_midsurface(r, section),
            )
        })
        .unzip()
}

pub fn wall_fields(model: &ShellModel, resultants: &[StressResultants]) -> Result<WallFields> {
    let (integrated, mid) = element_mpwt(resultants, &model.section);
    let mesh = &model.analysis_mesh;
    Ok(WallFields {
        mps_inner: surface_mps(model, resultants, Layer::Inner)?,
        mps_mid: surface_mps(model, resultants, Layer::Mid)?,
        mps_outer: surface_mps(model, resultants, Layer::Outer)?,
        mpwt_integrated: nodal_average("MPWT_integrated", &integrated, mesh, "N/mm")?,
        mpwt_midsurface: nodal_average("MPWT_midsurface", &mid, mesh, "N/mm")?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shellfem::ReferenceSurface;
    use crate::Vec3;
    use proptest::prelude::*;

    fn sec(t: f64, n: usize) -> ShellSection {
        ShellSection::new(t, ReferenceSurface::Mid, n).unwrap()
    }

    #[test]
    fn principal_examples() {
        assert_eq!(principal_max_2d(&[3.0, 1.0, 0.0]), 3.0);
        assert_eq!(principal_max_2d(&[0.0, 0.0, 1.0]), 1.0);
        assert_eq!(principal_max_2d(&[2.0, 2.0, 0.0]), 2.0);
        assert_eq!(principal_max_2d(&[-1.0, -3.0, 0.0]), -1.0);
    }

    #[test]
    fn pure_membrane_profile() {
        let r = StressResultants {
            membrane: [0.172, 0.172, 0.0],
            bending: [0.0; 3],
        };
        let s = sec(0.086, 5);
        let p = profile_at_points(&r, &s);
        assert_eq!(p.depths.len(), 5);
        assert_eq!(p.depths[0], 0.0);
        assert_eq!(p.depths[4], 0.086);
        assert!((p.depths[2] - 0.043).abs() < 1e-17);
        for st in &p.stresses {
            assert!((st[0] - 2.0).abs() < 1e-14 && (st[1] - 2.0).abs() < 1e-14 && st[2] == 0.0);
        }
        assert!((mpwt_integrated(&p, &s) - 0.172).abs() < 1e-15);
        assert!((mpwt_midsurface(&r, &s) - 0.172).abs() < 1e-15);
        assert!((mpwt_midsurface(&r, &sec(1.0, 3)) - 0.172).abs() < 1e-15);
    }

    #[test]
    fn pure_bending_profile() {
        let (m, t) = (0.3, 0.1);
        let r = StressResultants {
            membrane: [0.0; 3],
            bending: [m, 0.0, 0.0],
        };
        let p = profile_at_points(&r, &sec(t, 7));
        assert!((p.stresses[0][0] + 6.0 * m / (t * t)).abs() < 1e-10);
        assert!((p.stresses[6][0] - 6.0 * m / (t * t)).abs() < 1e-10);
        assert!(p.stresses[3][0].abs() < 1e-10);
    }

    #[test]
    fn superposition() {
        let a = StressResultants {
            membrane: [0.2, -0.1, 0.05],
            bending: [0.0; 3],
        };
        let b = StressResultants {
            membrane: [0.0; 3],
            bending: [0.01, 0.02, -0.003],
        };
        let c = StressResultants {
            membrane: a.membrane,
            bending: b.bending,
        };
        let s = sec(0.086, 5);
        let (pa, pb, pc) = (
            profile_at_points(&a, &s),
            profile_at_points(&b, &s),
            profile_at_points(&c, &s),
        );
        for i in 0..5 {
            for k in 0..3 {
                let sum = pa.stresses[i][k] + pb.stresses[i][k];
                assert!((pc.stresses[i][k] - sum).abs() < 1e-12 * (1.0 + sum.abs()));
            }
        }
    }

    #[test]
    fn linear_profile_integrates_to_mid_value() {
        // sxx linear 1 -> 3 MPa through t = 0.1, n = 5
        let t = 0.1;
        let r = StressResultants {
            membrane: [2.0 * t, 0.0, 0.0],
            bending: [t * t / 6.0, 0.0, 0.0],
        };
        let s = sec(t, 5);
        let p = profile_at_points(&r, &s);
        assert!((p.stresses[0][0] - 1.0).abs() < 1e-12 && (p.stresses[4][0] - 3.0).abs() < 1e-12);
        assert!((mpwt_integrated(&p, &s) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn pure_bending_fifteen_points() {
        let (sigma0, t) = (3.0, 0.086);
        let r = StressResultants {
            membrane: [0.0; 3],
            bending: [sigma0 * t * t / 6.0, 0.0, 0.0],
        };
        let s = sec(t, 15);
        let got = mpwt_integrated(&profile_at_points(&r, &s), &s);
        let expected = 4.0 * sigma0 * t / 15.0;
        assert!(
            ((got - expected) / expected).abs() < 1e-14,
            "{got} vs {expected}"
        );
    }

    #[test]
    fn mean_stress_examples() {
        let s = sec(0.086, 5);
        assert!((mean_stress(0.172, &s).unwrap() - 2.0).abs() < 1e-14);
        assert!((mean_stress(0.197, &s).unwrap() - 2.2907).abs() < 1e-4);
        assert_eq!(mean_stress(0.0, &s).unwrap(), 0.0);
    }

    fn two_triangles(second_area_scale: f64) -> TriangleMesh {
        let v = vec![
            Vec3::zeros(),
            Vec3::x(),
            Vec3::y(),
            Vec3::new(-second_area_scale, 0.0, 0.0),
        ];
        TriangleMesh::new(v, vec![[0, 1, 2], [0, 2, 3]], "").unwrap()
    }

    #[test]
    fn nodal_average_examples() {
        let m = two_triangles(1.0);
        let f = nodal_average("c", &[5.0, 5.0], &m, "MPa").unwrap();
        assert!(f.values.iter().all(|&v| v == 5.0));
        let f = nodal_average("eq", &[1.0, 3.0], &m, "MPa").unwrap();
        assert_eq!(f.values[0], 2.0);
        let m = two_triangles(3.0);
        let f = nodal_average("w", &[0.0, 4.0], &m, "MPa").unwrap();
        assert_eq!(f.values[0], 3.0);
        assert!((f.weights.iter().sum::<f64>() - m.total_area()).abs() < 1e-14);
        assert!(nodal_average("bad", &[1.0], &m, "MPa").is_err());
    }

    #[test]
    fn isolated_vertex_is_an_error() {
        let v = vec![Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::z()];
        let m = TriangleMesh::new(v, vec![[0, 1, 2]], "").unwrap();
        assert!(matches!(
            nodal_average("x", &[1.0], &m, "MPa"),
            Err(Error::Field(_))
        ));
    }

    fn resultants() -> impl Strategy<Value = StressResultants> {
        (
            prop::array::uniform3(-1.0..1.0f64),
            prop::array::uniform3(-0.01..0.01f64),
        )
            .prop_map(|(membrane, bending)| StressResultants { membrane, bending })
    }

    proptest! {
        #[test]
        fn affine_mps_profiles_are_integrated_exactly(
            n_half in 1usize..8, a in -5.0..5.0f64, b in -5.0..5.0f64, t in 0.01..1.0f64
        ) {
            // uniaxial sxx = a + b (xi - t/2) keeps the principal direction fixed;
            // shift so the MPS (= sxx) stays affine, i.e. sxx >= syy = 0 everywhere
            let n = 2 * n_half + 1;
            let base = a.abs() + b.abs() * t + 1.0;
            let r = StressResultants {
                membrane: [base * t, 0.0, 0.0],
                bending: [b * t.powi(3) / 12.0, 0.0, 0.0],
            };
            let s = sec(t, n);
            let exact = base * t;
            let got = mpwt_integrated(&profile_at_points(&r, &s), &s);
            prop_assert!(((got - exact) / exact).abs() < 1e-12);
        }

        #[test]
        fn recovery_is_homogeneous(r in resultants(), lambda in 0.01..10.0f64) {
            let s = sec(0.086, 5);
            let scaled = r.scaled(lambda);
            let i0 = mpwt_integrated(&profile_at_points(&r, &s), &s);
            let i1 = mpwt_integrated(&profile_at_points(&scaled, &s), &s);
            prop_assert!((i1 - lambda * i0).abs() <= 1e-12 * (1.0 + (lambda * i0).abs()) * 10.0);
            let m0 = mpwt_midsurface(&r, &s);
            let m1 = mpwt_midsurface(&scaled, &s);
            prop_assert!((m1 - lambda * m0).abs() <= 1e-12 * (1.0 + (lambda * m0).abs()) * 10.0);
        }

        #[test]
        fn mean_stress_times_thickness_is_tension(r in resultants(), t in 0.01..1.0f64) {
            let s = sec(t, 5);
            let tension = mpwt_integrated(&profile_at_points(&r, &s), &s);
            let back = mean_stress(tension, &s).unwrap() * t;
            prop_assert!((back - tension).abs() <= 1e-14 * (1.0 + tension.abs()));
        }

        #[test]
        fn midsurface_tension_ignores_thickness(r in resultants(), t1 in 0.01..1.0f64, t2 in 0.01..1.0f64) {
            prop_assert_eq!(mpwt_midsurface(&r, &sec(t1, 5)), mpwt_midsurface(&r, &sec(t2, 5)));
        }
    }
}
