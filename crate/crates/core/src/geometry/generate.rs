//! Benchmark surface generators (all in millimetres, centred at the origin).

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use super::{boundary_loops, TriangleMesh};
use crate::{Error, Result, Vec3};

const PHI: f64 = 1.618_033_988_749_895;

fn icosahedron() -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let s = (1.0 + PHI * PHI).sqrt();
    let v: Vec<Vec3> = [
        (-1.0, PHI, 0.0),
        (1.0, PHI, 0.0),
        (-1.0, -PHI, 0.0),
        (1.0, -PHI, 0.0),
        (0.0, -1.0, PHI),
        (0.0, 1.0, PHI),
        (0.0, -1.0, -PHI),
        (0.0, 1.0, -PHI),
        (PHI, 0.0, -1.0),
        (PHI, 0.0, 1.0),
        (-PHI, 0.0, -1.0),
        (-PHI, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z) / s)
    .collect();
    let f: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    let f = f
        .into_iter()
        .map(|[a, b, c]| {
            let n = (v[b] - v[a]).cross(&(v[c] - v[a]));
            if n.dot(&(v[a] + v[b] + v[c])) < 0.0 {
                [a, c, b]
            } else {
                [a, b, c]
            }
        })
        .collect();
    (v, f)
}

/// Mean projected edge length of a frequency-`n` geodesic subdivision of the
/// unit icosahedron. All faces are congruent, so one face suffices; edges on
/// the face boundary are shared and count half.
fn geodesic_mean_edge(n: usize) -> f64 {
    let (v, f) = icosahedron();
    let [a, b, c] = f[0].map(|i| v[i]);
    let p = |i: usize, j: usize| {
        let q = a + (b - a) * (i as f64 / n as f64) + (c - a) * (j as f64 / n as f64);
        q.normalize()
    };
    let (mut sum, mut count) = (0.0, 0.0);
    let mut edge = |i0: usize, j0: usize, i1: usize, j1: usize| {
        let on_face_edge =
            (j0 == 0 && j1 == 0) || (i0 == 0 && i1 == 0) || (i0 + j0 == n && i1 + j1 == n);
        let w = if on_face_edge { 0.5 } else { 1.0 };
        sum += w * (p(i0, j0) - p(i1, j1)).norm();
        count += w;
    };
    for j in 0..=n {
        for i in 0..=(n - j) {
            if i + j < n {
                edge(i, j, i + 1, j);
                edge(i, j, i, j + 1);
                edge(i + 1, j, i, j + 1);
            }
        }
    }
    sum / count
}

/// Geodesic icosphere of the given radius with mean edge close to `target_edge`.
pub fn make_icosphere(radius: f64, target_edge: f64) -> Result<TriangleMesh> {
    if !(radius > 0.0 && target_edge > 0.0) {
        return Err(Error::InvalidParameter(
            "icosphere radius and target edge must be positive".into(),
        ));
    }
    if target_edge > radius {
        return Err(Error::InvalidParameter(format!(
            "target edge {target_edge} larger than radius {radius}"
        )));
    }
    // pick the frequency whose mean edge is closest (in ratio) to the target
    let guess = ((geodesic_mean_edge(1) * radius / target_edge).round() as usize).max(1);
    let freq = (guess.saturating_sub(1).max(1)..=guess + 1)
        .min_by(|&a, &b| {
            let ra = (geodesic_mean_edge(a) * radius / target_edge).ln().abs();
            let rb = (geodesic_mean_edge(b) * radius / target_edge).ln().abs();
            ra.total_cmp(&rb)
        })
        .unwrap();

    let (iv, ifaces) = icosahedron();
    let mut index: HashMap<Vec<(usize, usize)>, usize> = HashMap::new();
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut triangles = Vec::with_capacity(20 * freq * freq);
    let n = freq;
    for face in &ifaces {
        let mut id = |i: usize, j: usize| -> usize {
            // barycentric weights (A: n-i-j, B: i, C: j) keyed by corner id so
            // that shared edge/corner points get identical keys and positions
            let mut key: Vec<(usize, usize)> = [(face[0], n - i - j), (face[1], i), (face[2], j)]
                .into_iter()
                .filter(|&(_, w)| w > 0)
                .collect();
            key.sort_unstable();
            *index.entry(key.clone()).or_insert_with(|| {
                let q = key
                    .iter()
                    .fold(Vec3::zeros(), |acc, &(c, w)| acc + iv[c] * w as f64)
                    / n as f64;
                vertices.push(q.normalize() * radius);
                vertices.len() - 1
            })
        };
        for j in 0..n {
            for i in 0..(n - j) {
                let p00 = id(i, j);
                let p10 = id(i + 1, j);
                let p01 = id(i, j + 1);
                triangles.push([p00, p10, p01]);
                if i + j + 1 < n {
                    let p11 = id(i + 1, j + 1);
                    triangles.push([p10, p11, p01]);
                }
            }
        }
    }
    TriangleMesh::new(
        vertices,
        triangles,
        format!("icosphere r={radius} edge={target_edge}"),
    )
}

/// Tube of the given radius along z in [-length/2, length/2], open at both
/// ends, with staggered rings for near-equilateral triangles.
pub fn make_open_cylinder(radius: f64, length: f64, target_edge: f64) -> Result<TriangleMesh> {
    if !(radius > 0.0 && length > 0.0 && target_edge > 0.0) {
        return Err(Error::InvalidParameter(
            "cylinder radius, length and target edge must be positive".into(),
        ));
    }
    let nt = ((TAU * radius / target_edge).round() as usize).max(3);
    let arc = TAU * radius / nt as f64;
    let nz = ((length / (arc * 3f64.sqrt() / 2.0)).round() as usize).max(1);
    let mut vertices = Vec::with_capacity(nt * (nz + 1));
    for k in 0..=nz {
        let z = -length / 2.0 + length * k as f64 / nz as f64;
        let shift = if k % 2 == 1 { 0.5 } else { 0.0 };
        for j in 0..nt {
            let th = (j as f64 + shift) * TAU / nt as f64;
            vertices.push(Vec3::new(radius * th.cos(), radius * th.sin(), z));
        }
    }
    let id = |k: usize, j: usize| k * nt + (j % nt);
    let mut triangles = Vec::with_capacity(2 * nt * nz);
    for k in 0..nz {
        for j in 0..nt {
            let (a0, a1) = (id(k, j), id(k, j + 1));
            let (b0, b1) = (id(k + 1, j), id(k + 1, j + 1));
            if k % 2 == 0 {
                // lower ring at integer angles, upper ring shifted by half a step
                triangles.push([a0, a1, b0]);
                triangles.push([b0, a1, b1]);
            } else {
                triangles.push([a0, b1, b0]);
                triangles.push([a0, a1, b1]);
            }
        }
    }
    // outward: normal along +radial
    for tri in triangles.iter_mut() {
        let [a, b, c] = tri.map(|i| vertices[i]);
        let n = (b - a).cross(&(c - a));
        let cen = (a + b + c) / 3.0;
        if n.dot(&Vec3::new(cen.x, cen.y, 0.0)) < 0.0 {
            tri.swap(1, 2);
        }
    }
    TriangleMesh::new(
        vertices,
        triangles,
        format!("open cylinder r={radius} l={length} edge={target_edge}"),
    )
}

/// Remove the triangles of `mesh` whose centroid falls inside any of the
/// given cones (axis direction, half-angle in radians) about the origin, then
/// clean up pinch vertices so every rim is a simple loop.
fn clip_cones(mesh: &TriangleMesh, cones: &[(Vec3, f64)]) -> Result<TriangleMesh> {
    let mut keep: Vec<bool> = (0..mesh.triangle_count())
        .map(|t| {
            let c = mesh.triangle_centroid(t).normalize();
            cones
                .iter()
                .all(|(axis, half)| c.dot(&axis.normalize()) < half.cos())
        })
        .collect();
    loop {
        let tris: Vec<[usize; 3]> = mesh
            .triangles()
            .iter()
            .zip(&keep)
            .filter(|(_, &k)| k)
            .map(|(t, _)| *t)
            .collect();
        let (v, t) = super::compact(mesh.vertices(), &tris);
        let candidate = TriangleMesh::new(v, t, mesh.provenance().to_string())?;
        match boundary_loops(&candidate) {
            Ok(_) => return Ok(candidate),
            Err(Error::NonManifoldBoundary { vertex, .. }) => {
                // drop every kept triangle touching the pinch vertex
                let p = candidate.vertices()[vertex];
                for (t, tri) in mesh.triangles().iter().enumerate() {
                    if keep[t] && tri.iter().any(|&i| mesh.vertices()[i] == p) {
                        keep[t] = false;
                    }
                }
            }
            Err(e) => return Err(e),
        }
    }
}

/// Icosphere with circular openings: a sac with clipped connecting vessels.
pub fn make_clipped_sphere(
    radius: f64,
    target_edge: f64,
    openings: &[(Vec3, f64)],
) -> Result<TriangleMesh> {
    let s = make_icosphere(radius, target_edge)?;
    Ok(clip_cones(&s, openings)?.with_provenance(format!(
        "clipped sphere r={radius} edge={target_edge} openings={}",
        openings.len()
    )))
}

/// Smooth radial perturbation of a sphere, r = R (1 + a * f(direction)).
fn bump(p: &Vec3, amplitude: f64) -> f64 {
    let u = p.normalize();
    let theta = u.z.clamp(-1.0, 1.0).acos();
    let phi = u.y.atan2(u.x);
    1.0 + amplitude * ((2.0 * theta).cos() * 0.5 + (3.0 * phi).cos() * theta.sin().powi(3))
}

/// Closed sphere with a smooth low-order radial bump field.
pub fn make_bumpy_sphere(radius: f64, target_edge: f64, amplitude: f64) -> Result<TriangleMesh> {
    let s = make_icosphere(radius, target_edge)?;
    Ok(s.map_vertices(|p| p * bump(p, amplitude))?
        .with_provenance(format!(
            "bumpy sphere r={radius} edge={target_edge} a={amplitude}"
        )))
}

/// Aneurysm-like sac: bumpy sphere with a dome bulge and three clipped
/// vessel openings.
pub fn make_blob(radius: f64, target_edge: f64) -> Result<TriangleMesh> {
    let s = make_icosphere(radius, target_edge)?;
    let dome = Vec3::new(0.3, 0.2, 1.0).normalize();
    let shaped = s.map_vertices(|p| {
        let u = p.normalize();
        let bulge = 0.25 * (-(1.0 - u.dot(&dome)) * 4.0).exp();
        p * (bump(p, 0.06) + bulge)
    })?;
    let openings = blob_openings();
    Ok(clip_cones(&shaped, &openings)?
        .with_provenance(format!("blob r={radius} edge={target_edge}")))
}

pub(crate) fn blob_openings() -> [(Vec3, f64); 3] {
    [
        (Vec3::new(0.0, 0.0, -1.0), 0.45),
        (Vec3::new(1.0, 0.0, -0.4), 0.35),
        (Vec3::new(-0.6, 0.8, -0.5), 0.3),
    ]
}

/// Three-opening fixture used to check rim detection.
pub fn tri_clip_openings() -> [(Vec3, f64); 3] {
    [
        (Vec3::new(0.0, 0.0, -1.0), PI / 8.0),
        (Vec3::new(1.0, 0.0, 0.3), PI / 10.0),
        (Vec3::new(-0.5, 0.86, 0.3), PI / 10.0),
    ]
}
