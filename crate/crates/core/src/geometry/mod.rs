//! Triangle surface meshes: loading, validation, orientation, normals,
//! offsets and benchmark generators.

mod generate;
mod normals;
mod stl;
mod topology;

use std::collections::HashMap;

use serde::Serialize;

use crate::{Error, Result, Vec3};

pub use generate::{
    make_blob, make_bumpy_sphere, make_clipped_sphere, make_icosphere, make_open_cylinder,
    tri_clip_openings,
};
pub use normals::{offset_surface, vertex_normals};
pub use stl::{load_stl, load_stl_with_report, save_stl, save_stl_ascii, StlLoadReport};
pub use topology::{boundary_loops, orient_consistent, orient_outward, quality_report};

/// Default vertex weld tolerance for STL input (mm).
pub const DEFAULT_WELD_TOLERANCE: f64 = 1e-5;

/// Triangles with area below this (mm²) are treated as degenerate.
pub const DEGENERATE_AREA: f64 = 1e-12;

/// Indexed triangle surface, lengths in millimetres.
///
/// Construction checks index validity, distinct corners, non-degeneracy and
/// edge-manifoldness. Consistent winding is established by
/// [`orient_consistent`] / [`orient_outward`]; see [`TriangleMesh::is_consistently_wound`].
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    provenance: String,
}

/// Closed cycle of boundary vertices (an open rim of the surface).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryLoop {
    pub vertex_indices: Vec<usize>,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeshQualityReport {
    pub vertex_count: usize,
    pub triangle_count: usize,
    pub mean_edge_length: f64,
    pub min_edge_length: f64,
    pub max_edge_length: f64,
    /// Smallest interior angle over all triangles, degrees.
    pub min_angle: f64,
    /// Triangles with a corner angle below 10 degrees.
    pub sliver_count: usize,
    pub boundary_loop_count: usize,
    pub watertight: bool,
}

impl TriangleMesh {
    pub fn new(
        vertices: Vec<Vec3>,
        triangles: Vec<[usize; 3]>,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        let n = vertices.len();
        if let Some(i) = vertices
            .iter()
            .position(|v| !v.iter().all(|c| c.is_finite()))
        {
            return Err(Error::InvalidMesh(format!("vertex {i} is not finite")));
        }
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= n) {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} references a vertex out of range"
                )));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} has repeated vertices"
                )));
            }
        }
        let mesh = TriangleMesh {
            vertices,
            triangles,
            provenance: provenance.into(),
        };
        for t in 0..mesh.triangles.len() {
            if mesh.triangle_area(t) <= DEGENERATE_AREA {
                return Err(Error::DegenerateTriangle(t));
            }
        }
        let over: Vec<(usize, usize)> = mesh
            .edge_faces()
            .into_iter()
            .filter(|(_, f)| f.len() > 2)
            .map(|(e, _)| e)
            .collect();
        if !over.is_empty() {
            let mut over = over;
            over.sort_unstable();
            return Err(Error::NonManifold { edges: over });
        }
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn with_provenance(mut self, provenance: impl Into<String>) -> Self {
        self.provenance = provenance.into();
        self
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn corners(&self, t: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Unnormalized face normal: (b - a) x (c - a), length twice the area.
    pub fn face_normal_raw(&self, t: usize) -> Vec3 {
        let [a, b, c] = self.corners(t);
        (b - a).cross(&(c - a))
    }

    pub fn face_normal(&self, t: usize) -> Vec3 {
        self.face_normal_raw(t).normalize()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        0.5 * self.face_normal_raw(t).norm()
    }

    pub fn triangle_centroid(&self, t: usize) -> Vec3 {
        let [a, b, c] = self.corners(t);
        (a + b + c) / 3.0
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| self.triangle_area(t))
            .sum()
    }

    /// Signed enclosed volume (positive for outward winding of a closed surface).
    pub fn signed_volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|&[a, b, c]| {
                self.vertices[a].dot(&self.vertices[b].cross(&self.vertices[c])) / 6.0
            })
            .sum()
    }

    /// One third of the incident triangle area at each vertex.
    pub fn vertex_areas(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.vertices.len()];
        for (t, tri) in self.triangles.iter().enumerate() {
            let a = self.triangle_area(t) / 3.0;
            for &v in tri {
                w[v] += a;
            }
        }
        w
    }

    /// Map from undirected edge (lo, hi) to incident triangles, in triangle order.
    pub fn edge_faces(&self) -> HashMap<(usize, usize), Vec<usize>> {
        let mut map: HashMap<(usize, usize), Vec<usize>> =
            HashMap::with_capacity(self.triangles.len() * 3 / 2 + 1);
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                map.entry((a.min(b), a.max(b))).or_default().push(t);
            }
        }
        map
    }

    /// Unique undirected edges (lo, hi), sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> = self
            .triangles
            .iter()
            .flat_map(|tri| {
                (0..3).map(move |k| {
                    let (a, b) = (tri[k], tri[(k + 1) % 3]);
                    (a.min(b), a.max(b))
                })
            })
            .collect();
        e.sort_unstable();
        e.dedup();
        e
    }

    pub fn boundary_edge_count(&self) -> usize {
        self.edge_faces().values().filter(|f| f.len() == 1).count()
    }

    pub fn is_watertight(&self) -> bool {
        self.boundary_edge_count() == 0
    }

    /// Every interior edge is traversed in opposite directions by its two triangles.
    pub fn is_consistently_wound(&self) -> bool {
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                *directed.entry((tri[k], tri[(k + 1) % 3])).or_default() += 1;
            }
        }
        directed.values().all(|&c| c == 1)
    }

    pub fn mean_edge_length(&self) -> f64 {
        let e = self.edges();
        if e.is_empty() {
            return 0.0;
        }
        e.iter()
            .map(|&(a, b)| (self.vertices[a] - self.vertices[b]).norm())
            .sum::<f64>()
            / e.len() as f64
    }

    /// Area-weighted centroid of the surface.
    pub fn area_centroid(&self) -> Vec3 {
        let mut c = Vec3::zeros();
        let mut total = 0.0;
        for t in 0..self.triangles.len() {
            let a = self.triangle_area(t);
            c += self.triangle_centroid(t) * a;
            total += a;
        }
        if total > 0.0 {
            c / total
        } else {
            c
        }
    }

    /// Reverse the winding of every triangle.
    pub fn flipped(&self) -> TriangleMesh {
        TriangleMesh {
            vertices: self.vertices.clone(),
            triangles: self.triangles.iter().map(|&[a, b, c]| [a, c, b]).collect(),
            provenance: self.provenance.clone(),
        }
    }

    /// Apply `f` to every vertex position, keeping connectivity.
    pub fn map_vertices(&self, f: impl Fn(&Vec3) -> Vec3) -> Result<TriangleMesh> {
        TriangleMesh::new(
            self.vertices.iter().map(f).collect(),
            self.triangles.clone(),
            self.provenance.clone(),
        )
    }

    pub(crate) fn from_parts_unchecked(
        vertices: Vec<Vec3>,
        triangles: Vec<[usize; 3]>,
        provenance: String,
    ) -> Self {
        TriangleMesh {
            vertices,
            triangles,
            provenance,
        }
    }
}

/// Drop unreferenced vertices and renumber.
pub(crate) fn compact(vertices: &[Vec3], triangles: &[[usize; 3]]) -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let mut remap = vec![usize::MAX; vertices.len()];
    let mut out_v = Vec::new();
    let mut out_t = Vec::with_capacity(triangles.len());
    for tri in triangles {
        let mut nt = [0; 3];
        for k in 0..3 {
            let v = tri[k];
            if remap[v] == usize::MAX {
                remap[v] = out_v.len();
                out_v.push(vertices[v]);
            }
            nt[k] = remap[v];
        }
        out_t.push(nt);
    }
    (out_v, out_t)
}
