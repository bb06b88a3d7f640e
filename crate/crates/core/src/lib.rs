//! Maximum principal wall tension (MPWT) on thin-walled vessel surfaces.
//!
//! The pipeline takes a clipped lumen surface (STL), optionally remeshes it to a
//! target element size, solves a linear flat-facet shell problem under uniform
//! luminal pressure with clamped rims, and recovers wall tension two ways: by
//! through-thickness quadrature of the maximum in-plane principal stress and
//! by the mid-surface shortcut (max principal membrane force).

// `!(x > 0.0)` guards are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod fieldstat;
pub mod geometry;
pub mod recovery;
pub mod remesh;
pub mod shellfem;
pub mod vtk;

pub use error::{Error, Result};
pub use fieldstat::{CurveComparison, PercentileCurve};
pub use geometry::{BoundaryLoop, MeshQualityReport, TriangleMesh};
pub use recovery::{StressResultants, SurfaceField, ThroughThicknessProfile};
pub use remesh::RemeshParams;
pub use shellfem::{
    ConstraintSet, Displacements, LoadCase, Material, Pressure, ReferenceSurface, ShellModel,
    ShellSection,
};

/// 3-vector used for positions, normals and forces (millimetres / newtons).
pub type Vec3 = nalgebra::Vector3<f64>;
