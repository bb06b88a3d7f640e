use super::TriangleMesh;
use crate::{Error, Result, Vec3};

/// Angle-weighted vertex normals, unit length.
pub fn vertex_normals(mesh: &TriangleMesh) -> Result<Vec<Vec3>> {
    let mut acc = vec![Vec3::zeros(); mesh.vertex_count()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let n = mesh.face_normal(t);
        let p = mesh.corners(t);
        for k in 0..3 {
            let a = p[(k + 1) % 3] - p[k];
            let b = p[(k + 2) % 3] - p[k];
            acc[tri[k]] += n * a.angle(&b);
        }
    }
    acc.into_iter()
        .enumerate()
        .map(|(i, n)| {
            let len = n.norm();
            if len > 1e-300 && len.is_finite() {
                Ok(n / len)
            } else {
                Err(Error::ZeroNormal(i))
            }
        })
        .collect()
}

/// Move every vertex `distance` along its vertex normal.
///
/// Fails if any triangle ends up facing the other way.
pub fn offset_surface(mesh: &TriangleMesh, distance: f64) -> Result<TriangleMesh> {
    if distance == 0.0 {
        return Ok(mesh.clone());
    }
    let normals = vertex_normals(mesh)?;
    let moved: Vec<Vec3> = mesh
        .vertices()
        .iter()
        .zip(&normals)
        .map(|(p, n)| p + n * distance)
        .collect();
    let out = TriangleMesh::from_parts_unchecked(
        moved,
        mesh.triangles().to_vec(),
        mesh.provenance().to_string(),
    );
    let inverted: Vec<usize> = (0..mesh.triangle_count())
        .filter(|&t| out.face_normal_raw(t).dot(&mesh.face_normal_raw(t)) <= 0.0)
        .collect();
    if !inverted.is_empty() {
        return Err(Error::InvertedTriangles(inverted));
    }
    TriangleMesh::new(
        out.vertices().to_vec(),
        out.triangles().to_vec(),
        out.provenance().to_string(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_icosphere, make_open_cylinder};

    fn flat_grid(n: usize) -> TriangleMesh {
        let mut v = Vec::new();
        for j in 0..=n {
            for i in 0..=n {
                v.push(Vec3::new(i as f64, j as f64, 0.0));
            }
        }
        let id = |i: usize, j: usize| j * (n + 1) + i;
        let mut t = Vec::new();
        for j in 0..n {
            for i in 0..n {
                t.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                t.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        TriangleMesh::new(v, t, "grid").unwrap()
    }

    #[test]
    fn planar_normals() {
        for n in vertex_normals(&flat_grid(4)).unwrap() {
            assert!((n - Vec3::z()).norm() < 1e-15);
        }
    }

    #[test]
    fn sphere_normals_are_radial() {
        // angle-weighted normals converge as h^2; 6.4e-4 at h = 0.5
        let s = make_icosphere(10.0, 0.5).unwrap();
        let normals = vertex_normals(&s).unwrap();
        for (p, n) in s.vertices().iter().zip(&normals) {
            assert!((n - p.normalize()).norm() < 1e-3);
        }
    }

    #[test]
    fn cylinder_normals_are_radial_away_from_rims() {
        let c = make_open_cylinder(5.0, 40.0, 1.0).unwrap();
        let normals = vertex_normals(&c).unwrap();
        for (p, n) in c.vertices().iter().zip(&normals) {
            if p.z.abs() < 19.0 {
                assert!(n.z.abs() < 1e-6, "z component {} at {p:?}", n.z);
                let radial = Vec3::new(p.x, p.y, 0.0).normalize();
                assert!(n.dot(&radial) > 0.99);
            }
        }
    }

    #[test]
    fn sphere_offset_by_half_thickness() {
        let s = make_icosphere(10.0, 0.5).unwrap();
        let o = offset_surface(&s, 0.043).unwrap();
        let mean = o.vertices().iter().map(|v| v.norm()).sum::<f64>() / o.vertex_count() as f64;
        assert!((mean - 10.043).abs() < 1e-3);
    }

    #[test]
    fn zero_offset_is_identity_and_plate_translates() {
        let s = make_icosphere(10.0, 2.0).unwrap();
        assert_eq!(offset_surface(&s, 0.0).unwrap(), s);
        let g = flat_grid(3);
        let o = offset_surface(&g, 1.0).unwrap();
        for (a, b) in g.vertices().iter().zip(o.vertices()) {
            assert!((b - a - Vec3::z()).norm() < 1e-15);
        }
    }

    #[test]
    fn offset_round_trip() {
        // exact up to rounding where normals are exact (cylinder)
        let c = make_open_cylinder(5.0, 40.0, 0.5).unwrap();
        let d = 0.5;
        let back = offset_surface(&offset_surface(&c, d).unwrap(), -d).unwrap();
        for (a, b) in c.vertices().iter().zip(back.vertices()) {
            if a.z.abs() < 15.0 {
                assert!((a - b).norm() <= 1e-6 * d);
            }
        }
        // on the sphere the residual grows like d^2 times the normal error
        let s = make_icosphere(10.0, 0.5).unwrap();
        let d = 0.01;
        let back = offset_surface(&offset_surface(&s, d).unwrap(), -d).unwrap();
        for (a, b) in s.vertices().iter().zip(back.vertices()) {
            assert!((a - b).norm() <= 1e-6 * d);
        }
    }

    #[test]
    fn large_inward_offset_inverts() {
        // moving past the axis reverses every radial facet normal
        let c = make_open_cylinder(1.0, 4.0, 0.5).unwrap();
        assert!(matches!(
            offset_surface(&c, -1.5),
            Err(Error::InvertedTriangles(_))
        ));
    }
}
