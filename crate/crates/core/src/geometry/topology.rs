use std::collections::{HashMap, VecDeque};

use super::{BoundaryLoop, MeshQualityReport, TriangleMesh};
use crate::{Error, Result};

/// Open rims of the surface, longest first.
///
/// A boundary vertex touching more than two boundary edges (two rims meeting
/// at a point) is reported as an error rather than split arbitrarily.
pub fn boundary_loops(mesh: &TriangleMesh) -> Result<Vec<BoundaryLoop>> {
    let ef = mesh.edge_faces();
    let mut adj: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut boundary: Vec<(usize, usize)> = Vec::new();
    for (&(a, b), faces) in &ef {
        match faces.len() {
            1 => boundary.push((a, b)),
            2 => {}
            _ => {
                return Err(Error::NonManifold {
                    edges: vec![(a, b)],
                })
            }
        }
    }
    boundary.sort_unstable();
    for &(a, b) in &boundary {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    }
    let mut starts: Vec<usize> = adj.keys().copied().collect();
    starts.sort_unstable();
    for &v in &starts {
        let n = adj[&v].len();
        if n != 2 {
            return Err(Error::NonManifoldBoundary {
                vertex: v,
                boundary_edges: n,
            });
        }
    }

    let mut visited: HashMap<usize, bool> = HashMap::new();
    let mut loops = Vec::new();
    for &start in &starts {
        if visited.contains_key(&start) {
            continue;
        }
        let mut cycle = vec![start];
        visited.insert(start, true);
        let mut prev = start;
        let mut cur = adj[&start][0].min(adj[&start][1]);
        while cur != start {
            visited.insert(cur, true);
            cycle.push(cur);
            let nb = &adj[&cur];
            let next = if nb[0] == prev { nb[1] } else { nb[0] };
            prev = cur;
            cur = next;
        }
        let length = (0..cycle.len())
            .map(|i| {
                (mesh.vertices()[cycle[i]] - mesh.vertices()[cycle[(i + 1) % cycle.len()]]).norm()
            })
            .sum();
        loops.push(BoundaryLoop {
            vertex_indices: cycle,
            length,
        });
    }
    loops.sort_by(|a, b| b.length.total_cmp(&a.length));
    Ok(loops)
}

/// Triangle adjacency across shared edges: for each triangle, (neighbour, local edge).
fn face_neighbours(mesh: &TriangleMesh) -> Vec<Vec<usize>> {
    let ef = mesh.edge_faces();
    let mut nb = vec![Vec::with_capacity(3); mesh.triangle_count()];
    let mut keys: Vec<_> = ef.iter().filter(|(_, f)| f.len() == 2).collect();
    keys.sort_unstable_by_key(|(e, _)| **e);
    for (_, f) in keys {
        nb[f[0]].push(f[1]);
        nb[f[1]].push(f[0]);
    }
    for n in nb.iter_mut() {
        n.sort_unstable();
    }
    nb
}

/// Does `t` traverse the directed edge a -> b?
fn traverses(tri: &[usize; 3], a: usize, b: usize) -> bool {
    (0..3).any(|k| tri[k] == a && tri[(k + 1) % 3] == b)
}

fn shared_edge(t: &[usize; 3], u: &[usize; 3]) -> (usize, usize) {
    let common: Vec<usize> = t.iter().copied().filter(|v| u.contains(v)).collect();
    (common[0], common[1])
}

/// Connected components of triangles (via shared edges) after making the
/// winding agree within each component. Returns the rewound triangles, the
/// component id of each triangle and the number of triangles flipped.
fn propagate(mesh: &TriangleMesh) -> Result<(Vec<[usize; 3]>, Vec<usize>, usize)> {
    let nb = face_neighbours(mesh);
    let mut tris = mesh.triangles().to_vec();
    let mut comp = vec![usize::MAX; tris.len()];
    let mut flipped = 0;
    let mut ncomp = 0;
    for seed in 0..tris.len() {
        if comp[seed] != usize::MAX {
            continue;
        }
        comp[seed] = ncomp;
        let mut queue = VecDeque::from([seed]);
        while let Some(t) = queue.pop_front() {
            for &u in &nb[t] {
                let (a, b) = shared_edge(&tris[t], &tris[u]);
                // consistent: if t goes a->b, u must go b->a
                let t_ab = traverses(&tris[t], a, b);
                let u_ab = traverses(&tris[u], a, b);
                let consistent = t_ab != u_ab;
                if comp[u] == usize::MAX {
                    if !consistent {
                        tris[u].swap(1, 2);
                        flipped += 1;
                    }
                    comp[u] = ncomp;
                    queue.push_back(u);
                } else if !consistent {
                    return Err(Error::NonOrientable { triangle: u });
                }
            }
        }
        ncomp += 1;
    }
    Ok((tris, comp, flipped))
}

/// Make winding consistent across interior edges without choosing a global side.
pub fn orient_consistent(mesh: &TriangleMesh) -> Result<TriangleMesh> {
    orient_consistent_counted(mesh).map(|(m, _)| m)
}

pub(crate) fn orient_consistent_counted(mesh: &TriangleMesh) -> Result<(TriangleMesh, usize)> {
    let (tris, _, flipped) = propagate(mesh)?;
    Ok((
        TriangleMesh::from_parts_unchecked(
            mesh.vertices().to_vec(),
            tris,
            mesh.provenance().to_string(),
        ),
        flipped,
    ))
}

/// Consistent winding with normals pointing away from the lumen.
///
/// Closed components are flipped to positive signed volume. Open components
/// use a heuristic: the triangle farthest from the component centroid should
/// face away from it.
pub fn orient_outward(mesh: &TriangleMesh) -> Result<TriangleMesh> {
    let (mut tris, comp, _) = propagate(mesh)?;
    let ncomp = comp.iter().copied().max().map_or(0, |c| c + 1);
    let v = mesh.vertices();
    for c in 0..ncomp {
        let members: Vec<usize> = (0..tris.len()).filter(|&t| comp[t] == c).collect();
        let sub: Vec<[usize; 3]> = members.iter().map(|&t| tris[t]).collect();
        let sub_mesh = TriangleMesh::from_parts_unchecked(v.to_vec(), sub, String::new());
        let flip = if sub_mesh.is_watertight() {
            sub_mesh.signed_volume() < 0.0
        } else {
            let centroid = sub_mesh.area_centroid();
            let far = (0..sub_mesh.triangle_count())
                .max_by(|&a, &b| {
                    let da = (sub_mesh.triangle_centroid(a) - centroid).norm_squared();
                    let db = (sub_mesh.triangle_centroid(b) - centroid).norm_squared();
                    da.total_cmp(&db).then(b.cmp(&a))
                })
                .expect("component has at least one triangle");
            sub_mesh
                .face_normal_raw(far)
                .dot(&(sub_mesh.triangle_centroid(far) - centroid))
                < 0.0
        };
        if flip {
            for &t in &members {
                tris[t].swap(1, 2);
            }
        }
    }
    Ok(TriangleMesh::from_parts_unchecked(
        v.to_vec(),
        tris,
        mesh.provenance().to_string(),
    ))
}

pub fn quality_report(mesh: &TriangleMesh) -> Result<MeshQualityReport> {
    let v = mesh.vertices();
    let edges = mesh.edges();
    let lengths: Vec<f64> = edges.iter().map(|&(a, b)| (v[a] - v[b]).norm()).collect();
    let (mut min_e, mut max_e, mut sum) = (f64::INFINITY, 0.0f64, 0.0);
    for &l in &lengths {
        min_e = min_e.min(l);
        max_e = max_e.max(l);
        sum += l;
    }
    let mean = if lengths.is_empty() {
        0.0
    } else {
        sum / lengths.len() as f64
    };
    let mut min_angle = 180.0f64;
    let mut slivers = 0;
    for t in 0..mesh.triangle_count() {
        let a = triangle_min_angle(&mesh.corners(t));
        min_angle = min_angle.min(a);
        if a < 10.0 {
            slivers += 1;
        }
    }
    let loops = boundary_loops(mesh)?;
    Ok(MeshQualityReport {
        vertex_count: mesh.vertex_count(),
        triangle_count: mesh.triangle_count(),
        mean_edge_length: mean,
        min_edge_length: if lengths.is_empty() { 0.0 } else { min_e },
        max_edge_length: max_e,
        min_angle,
        sliver_count: slivers,
        boundary_loop_count: loops.len(),
        watertight: loops.is_empty(),
    })
}

/// Smallest corner angle of a triangle, degrees.
pub(crate) fn triangle_min_angle(p: &[crate::Vec3; 3]) -> f64 {
    (0..3)
        .map(|k| {
            let a = p[(k + 1) % 3] - p[k];
            let b = p[(k + 2) % 3] - p[k];
            a.angle(&b).to_degrees()
        })
        .fold(180.0, f64::min)
}
