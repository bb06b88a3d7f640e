//! Isotropic explicit remeshing toward a target edge length.
//!
//! Each iteration splits long edges, collapses short ones, flips edges toward
//! regular valence, smooths tangentially and projects back onto the input
//! surface. Rim vertices only ever slide along their original boundary
//! polyline, so clamped boundaries keep their shape.

mod spatial;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::geometry::{boundary_loops, compact, TriangleMesh};
use crate::{Error, Result, Vec3};

pub use spatial::{closest_point_on_segment, closest_point_on_triangle, TriangleGrid};

pub const DEFAULT_ITERATIONS: usize = 10;
const SPLIT_RATIO: f64 = 4.0 / 3.0;
const COLLAPSE_RATIO: f64 = 4.0 / 5.0;
const SMOOTHING: f64 = 0.5;
/// Minimum cosine between a face normal before and after a collapse or flip.
const NORMAL_COSINE: f64 = 0.5;
const MIN_TRIANGLES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemeshParams {
    /// Target edge length in mm.
    pub target_edge: f64,
    pub iterations: usize,
    /// Rim vertices stay on their boundary loop. Must be true.
    pub preserve_boundary: bool,
    /// Project smoothed interior vertices back onto the input surface.
    pub projection: bool,
}

impl RemeshParams {
    pub fn new(target_edge: f64) -> Result<Self> {
        let p = RemeshParams {
            target_edge,
            iterations: DEFAULT_ITERATIONS,
            preserve_boundary: true,
            projection: true,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_iterations(mut self, iterations: usize) -> Result<Self> {
        self.iterations = iterations;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.target_edge > 0.0 && self.target_edge.is_finite()) {
            return Err(Error::InvalidParameter(
                "target edge must be positive".into(),
            ));
        }
        if self.iterations < 1 {
            return Err(Error::InvalidParameter(
                "remesh needs at least one iteration".into(),
            ));
        }
        if !self.preserve_boundary {
            return Err(Error::InvalidParameter(
                "boundary preservation cannot be disabled".into(),
            ));
        }
        Ok(())
    }
}

/// Mutable triangle soup with vertex-face incidence.
struct Work {
    pos: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    face_alive: Vec<bool>,
    vf: Vec<Vec<usize>>,
    vertex_alive: Vec<bool>,
    /// Boundary loop id of rim vertices.
    rim: Vec<Option<usize>>,
    loop_sizes: Vec<usize>,
    live_faces: usize,
}

fn raw_normal(p: [Vec3; 3]) -> Vec3 {
    (p[1] - p[0]).cross(&(p[2] - p[0]))
}

/// Rotate `f` so that its first two entries are `a` and `b` in some order.
fn rotate_to_edge(f: [usize; 3], a: usize, b: usize) -> [usize; 3] {
    for k in 0..3 {
        let (p, q) = (f[k], f[(k + 1) % 3]);
        if (p == a && q == b) || (p == b && q == a) {
            return [p, q, f[(k + 2) % 3]];
        }
    }
    unreachable!("face does not contain edge")
}

impl Work {
    fn new(mesh: &TriangleMesh, loops: &[Vec<usize>]) -> Self {
        let n = mesh.vertex_count();
        let mut vf = vec![Vec::new(); n];
        for (i, t) in mesh.triangles().iter().enumerate() {
            for &v in t {
                vf[v].push(i);
            }
        }
        let mut rim = vec![None; n];
        for (id, l) in loops.iter().enumerate() {
            for &v in l {
                rim[v] = Some(id);
            }
        }
        Work {
            pos: mesh.vertices().to_vec(),
            faces: mesh.triangles().to_vec(),
            face_alive: vec![true; mesh.triangle_count()],
            vf,
            vertex_alive: vec![true; n],
            rim,
            loop_sizes: loops.iter().map(Vec::len).collect(),
            live_faces: mesh.triangle_count(),
        }
    }

    fn corners(&self, f: usize) -> [Vec3; 3] {
        self.faces[f].map(|v| self.pos[v])
    }

    fn edge_faces(&self, a: usize, b: usize) -> Vec<usize> {
        self.vf[a]
            .iter()
            .copied()
            .filter(|&f| self.faces[f].contains(&b))
            .collect()
    }

    fn neighbours(&self, v: usize) -> Vec<usize> {
        let mut n: Vec<usize> = self.vf[v]
            .iter()
            .flat_map(|&f| self.faces[f])
            .filter(|&u| u != v)
            .collect();
        n.sort_unstable();
        n.dedup();
        n
    }

    fn boundary_neighbours(&self, v: usize) -> Vec<usize> {
        self.neighbours(v)
            .into_iter()
            .filter(|&u| self.edge_faces(v, u).len() == 1)
            .collect()
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        let mut set = BTreeSet::new();
        for (f, t) in self.faces.iter().enumerate() {
            if self.face_alive[f] {
                for k in 0..3 {
                    let (a, b) = (t[k], t[(k + 1) % 3]);
                    set.insert((a.min(b), a.max(b)));
                }
            }
        }
        set.into_iter().collect()
    }

    fn length(&self, a: usize, b: usize) -> f64 {
        (self.pos[a] - self.pos[b]).norm()
    }

    fn split(&mut self, a: usize, b: usize, rims: &[Vec<Vec3>]) {
        let fs = self.edge_faces(a, b);
        let m = self.pos.len();
        let mut p = (self.pos[a] + self.pos[b]) / 2.0;
        let on_rim = if fs.len() == 1 { self.rim[a] } else { None };
        if let Some(l) = on_rim {
            p = project_to_polyline(&p, &rims[l]);
            self.loop_sizes[l] += 1;
        }
        self.pos.push(p);
        self.vertex_alive.push(true);
        self.rim.push(on_rim);
        self.vf.push(Vec::new());
        for f in fs {
            let [p0, q, r] = rotate_to_edge(self.faces[f], a, b);
            let g = self.faces.len();
            self.faces[f] = [p0, m, r];
            self.faces.push([m, q, r]);
            self.face_alive.push(true);
            self.live_faces += 1;
            self.vf[q].retain(|&x| x != f);
            self.vf[q].push(g);
            self.vf[r].push(g);
            self.vf[m].push(f);
            self.vf[m].push(g);
        }
    }

    /// Decide whether edge (a, b) may collapse and into which vertex/position.
    fn collapse_plan(&self, a: usize, b: usize, max_len: f64) -> Option<(usize, usize, Vec3)> {
        let fs = self.edge_faces(a, b);
        let boundary_edge = fs.len() == 1;
        let (keep, gone, p) = match (self.rim[a], self.rim[b]) {
            (None, None) => (a, b, (self.pos[a] + self.pos[b]) / 2.0),
            (Some(_), None) => (a, b, self.pos[a]),
            (None, Some(_)) => (b, a, self.pos[b]),
            (Some(la), Some(_)) => {
                if !boundary_edge || self.loop_sizes[la] <= 3 {
                    return None;
                }
                (a, b, self.pos[a])
            }
        };
        if self.live_faces < MIN_TRIANGLES + fs.len() {
            return None;
        }
        let na = self.neighbours(a);
        let nb = self.neighbours(b);
        let common = na.iter().filter(|v| nb.contains(v)).count();
        if common != fs.len() {
            return None;
        }
        for &f in &fs {
            let c = self.faces[f]
                .into_iter()
                .find(|&v| v != a && v != b)
                .unwrap();
            if self.neighbours(c).len() <= 3 {
                return None;
            }
        }
        for &u in na.iter().chain(&nb) {
            if u != a && u != b && (self.pos[u] - p).norm() > max_len {
                return None;
            }
        }
        for &f in self.vf[a].iter().chain(&self.vf[b]) {
            if fs.contains(&f) {
                continue;
            }
            let old = raw_normal(self.corners(f));
            let moved = self.faces[f].map(|v| {
                if v == gone || v == keep {
                    p
                } else {
                    self.pos[v]
                }
            });
            let new = raw_normal(moved);
            let (lo, ln) = (old.norm(), new.norm());
            if ln <= 1e-12 * lo.max(1e-300) || old.dot(&new) < NORMAL_COSINE * lo * ln {
                return None;
            }
        }
        Some((keep, gone, p))
    }

    fn collapse(&mut self, keep: usize, gone: usize, p: Vec3) {
        for f in self.edge_faces(keep, gone) {
            self.face_alive[f] = false;
            self.live_faces -= 1;
            for v in self.faces[f] {
                self.vf[v].retain(|&x| x != f);
            }
        }
        let moved = std::mem::take(&mut self.vf[gone]);
        for &f in &moved {
            for v in self.faces[f].iter_mut() {
                if *v == gone {
                    *v = keep;
                }
            }
        }
        self.vf[keep].extend(moved);
        self.vertex_alive[gone] = false;
        if let Some(l) = self.rim[gone] {
            self.loop_sizes[l] -= 1;
        }
        self.pos[keep] = p;
    }

    fn valence_target(&self, v: usize) -> i64 {
        if self.rim[v].is_some() {
            4
        } else {
            6
        }
    }

    fn try_flip(&mut self, a: usize, b: usize) -> bool {
        let fs = self.edge_faces(a, b);
        if fs.len() != 2 {
            return false;
        }
        // f1 traverses a -> b
        let (f1, f2) = {
            let t = rotate_to_edge(self.faces[fs[0]], a, b);
            if t[0] == a {
                (fs[0], fs[1])
            } else {
                (fs[1], fs[0])
            }
        };
        let c = rotate_to_edge(self.faces[f1], a, b)[2];
        let d = rotate_to_edge(self.faces[f2], a, b)[2];
        if c == d || self.neighbours(c).contains(&d) {
            return false;
        }
        let val = [a, b, c, d].map(|v| self.neighbours(v).len() as i64);
        if val[0] <= 3 || val[1] <= 3 {
            return false;
        }
        let target = [a, b, c, d].map(|v| self.valence_target(v));
        let dev = |delta: [i64; 4]| -> i64 {
            (0..4).map(|k| (val[k] + delta[k] - target[k]).pow(2)).sum()
        };
        if dev([-1, -1, 1, 1]) >= dev([0; 4]) {
            return false;
        }
        let n1 = [a, d, c];
        let n2 = [d, b, c];
        let old = [raw_normal(self.corners(f1)), raw_normal(self.corners(f2))];
        for nf in [n1, n2] {
            let n = raw_normal(nf.map(|v| self.pos[v]));
            let ln = n.norm();
            for o in &old {
                if ln <= 1e-12 * o.norm() || n.dot(o) < NORMAL_COSINE * ln * o.norm() {
                    return false;
                }
            }
        }
        self.faces[f1] = n1;
        self.faces[f2] = n2;
        self.vf[b].retain(|&x| x != f1);
        self.vf[d].push(f1);
        self.vf[a].retain(|&x| x != f2);
        self.vf[c].push(f2);
        true
    }

    fn vertex_normal(&self, v: usize) -> Vec3 {
        let n: Vec3 = self.vf[v]
            .iter()
            .map(|&f| raw_normal(self.corners(f)))
            .sum();
        n.try_normalize(0.0).unwrap_or_else(Vec3::zeros)
    }

    fn smooth(&mut self, rims: &[Vec<Vec3>], grid: Option<&TriangleGrid>) {
        let updates: Vec<(usize, Vec3)> = (0..self.pos.len())
            .filter(|&v| self.vertex_alive[v])
            .filter_map(|v| {
                let p = self.pos[v];
                if let Some(l) = self.rim[v] {
                    let bn = self.boundary_neighbours(v);
                    if bn.len() != 2 {
                        return None;
                    }
                    let mid = (self.pos[bn[0]] + self.pos[bn[1]]) / 2.0;
                    let q = p + (mid - p) * SMOOTHING;
                    Some((v, project_to_polyline(&q, &rims[l])))
                } else {
                    let nb = self.neighbours(v);
                    if nb.is_empty() {
                        return None;
                    }
                    let centroid = nb.iter().map(|&u| self.pos[u]).sum::<Vec3>() / nb.len() as f64;
                    let n = self.vertex_normal(v);
                    let mut d = centroid - p;
                    d -= n * n.dot(&d);
                    let q = p + d * SMOOTHING;
                    Some((v, grid.map_or(q, |g| g.closest_point(&q))))
                }
            })
            .collect();
        for (v, q) in updates {
            self.pos[v] = q;
        }
    }

    fn into_mesh(self, provenance: String) -> Result<TriangleMesh> {
        let tris: Vec<[usize; 3]> = self
            .faces
            .iter()
            .zip(&self.face_alive)
            .filter(|(_, &alive)| alive)
            .map(|(t, _)| *t)
            .collect();
        let (v, t) = compact(&self.pos, &tris);
        TriangleMesh::new(v, t, provenance)
    }
}

fn project_to_polyline(p: &Vec3, ring: &[Vec3]) -> Vec3 {
    let n = ring.len();
    let mut best = (f64::INFINITY, *p);
    for i in 0..n {
        let q = closest_point_on_segment(p, &ring[i], &ring[(i + 1) % n]);
        let d = (q - p).norm_squared();
        if d < best.0 {
            best = (d, q);
        }
    }
    best.1
}

fn euler_characteristic(mesh: &TriangleMesh) -> i64 {
    mesh.vertex_count() as i64 - mesh.edges().len() as i64 + mesh.triangle_count() as i64
}

/// Remesh `mesh` toward uniform edges of length `params.target_edge`.
pub fn isotropic_remesh(mesh: &TriangleMesh, params: &RemeshParams) -> Result<TriangleMesh> {
    params.validate()?;
    if !mesh.is_consistently_wound() {
        return Err(Error::InvalidMesh(
            "remesh input must be consistently oriented".into(),
        ));
    }
    let loops = boundary_loops(mesh)?;
    let loop_vertices: Vec<Vec<usize>> = loops.iter().map(|l| l.vertex_indices.clone()).collect();
    let rims: Vec<Vec<Vec3>> = loop_vertices
        .iter()
        .map(|l| l.iter().map(|&v| mesh.vertices()[v]).collect())
        .collect();
    let grid = params.projection.then(|| {
        let tris = (0..mesh.triangle_count())
            .map(|t| mesh.corners(t))
            .collect();
        TriangleGrid::new(tris, mesh.mean_edge_length().max(params.target_edge))
    });

    let hi = SPLIT_RATIO * params.target_edge;
    let lo = COLLAPSE_RATIO * params.target_edge;
    let mut w = Work::new(mesh, &loop_vertices);
    for it in 0..params.iterations {
        // split until no edge is long; bounded because each round halves them
        for _ in 0..64 {
            let long: Vec<(usize, usize)> = w
                .edges()
                .into_iter()
                .filter(|&(a, b)| w.length(a, b) > hi)
                .collect();
            if long.is_empty() {
                break;
            }
            for (a, b) in long {
                w.split(a, b, &rims);
            }
        }
        let mut short: Vec<(f64, usize, usize)> = w
            .edges()
            .into_iter()
            .map(|(a, b)| (w.length(a, b), a, b))
            .filter(|e| e.0 < lo)
            .collect();
        short.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));
        let mut collapsed = 0;
        for (_, a, b) in short {
            if !(w.vertex_alive[a] && w.vertex_alive[b]) || w.edge_faces(a, b).is_empty() {
                continue;
            }
            if w.length(a, b) >= lo {
                continue;
            }
            if let Some((keep, gone, p)) = w.collapse_plan(a, b, hi) {
                w.collapse(keep, gone, p);
                collapsed += 1;
            }
        }
        let mut flipped = 0;
        for (a, b) in w.edges() {
            if w.try_flip(a, b) {
                flipped += 1;
            }
        }
        w.smooth(&rims, grid.as_ref());
        log::debug!(
            "remesh iteration {}: {} faces, {} collapses, {} flips",
            it + 1,
            w.live_faces,
            collapsed,
            flipped
        );
    }

    let out = w
        .into_mesh(format!(
            "{} remeshed to {}",
            mesh.provenance(),
            params.target_edge
        ))
        .map_err(|e| Error::Remesh(format!("remeshed surface is invalid: {e}")))?;
    if out.triangle_count() < MIN_TRIANGLES {
        return Err(Error::Remesh(format!(
            "remeshing left {} triangles",
            out.triangle_count()
        )));
    }
    if !out.is_consistently_wound() {
        return Err(Error::Remesh("remeshing broke the orientation".into()));
    }
    let out_loops = boundary_loops(&out)?;
    if out_loops.len() != loops.len() {
        return Err(Error::Remesh(format!(
            "boundary loop count changed from {} to {}",
            loops.len(),
            out_loops.len()
        )));
    }
    if mesh.is_watertight() && euler_characteristic(&out) != euler_characteristic(mesh) {
        return Err(Error::Remesh("Euler characteristic changed".into()));
    }
    Ok(out)
}
