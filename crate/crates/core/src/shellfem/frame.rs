use nalgebra::Matrix3;

use crate::{Error, Result, Vec3};

/// Orthonormal element frame. `e1` runs along the first edge, `normal`
/// follows the winding, `e2 = normal x e1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementFrame {
    pub e1: Vec3,
    pub e2: Vec3,
    pub normal: Vec3,
    /// In-plane coordinates of the three corners; corner 0 at the origin.
    pub local: [[f64; 2]; 3],
    pub area: f64,
}

impl ElementFrame {
    /// Rows are e1, e2, normal: maps global components to local.
    pub fn rotation(&self) -> Matrix3<f64> {
        Matrix3::from_rows(&[
            self.e1.transpose(),
            self.e2.transpose(),
            self.normal.transpose(),
        ])
    }
}

pub fn element_local_frame(p: &[Vec3; 3]) -> Result<ElementFrame> {
    let d1 = p[1] - p[0];
    let d2 = p[2] - p[0];
    let cross = d1.cross(&d2);
    let twice_area = cross.norm();
    let scale = d1.norm_squared().max(d2.norm_squared());
    if !(twice_area > 1e-14 * scale) || !twice_area.is_finite() {
        return Err(Error::DegenerateTriangle(0));
    }
    let e1 = d1.normalize();
    let normal = cross / twice_area;
    let e2 = normal.cross(&e1);
    Ok(ElementFrame {
        e1,
        e2,
        normal,
        local: [[0.0, 0.0], [d1.norm(), 0.0], [d2.dot(&e1), d2.dot(&e2)]],
        area: 0.5 * twice_area,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Rotation3, Unit};
    use proptest::prelude::*;

    #[test]
    fn canonical_triangle() {
        let f = element_local_frame(&[Vec3::zeros(), Vec3::x(), Vec3::y()]).unwrap();
        assert_eq!(f.normal, Vec3::z());
        assert_eq!(f.local, [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        assert!((f.area - 0.5).abs() < 1e-15);
    }

    #[test]
    fn degenerate_is_rejected() {
        let r = element_local_frame(&[Vec3::zeros(), Vec3::x(), Vec3::x() * 3.0]);
        assert!(matches!(r, Err(Error::DegenerateTriangle(_))));
    }

    fn vec3() -> impl Strategy<Value = Vec3> {
        (-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
    }

    proptest! {
        #[test]
        fn frame_is_orthonormal(a in vec3(), b in vec3(), c in vec3()) {
            let p = [a, b, c];
            prop_assume!((b - a).cross(&(c - a)).norm() > 1e-3);
            let f = element_local_frame(&p).unwrap();
            let r = f.rotation();
            let err = (r * r.transpose() - Matrix3::identity()).abs().max();
            prop_assert!(err < 1e-12);
            // projected coordinates reproduce the edge lengths
            for (i, j) in [(0, 1), (1, 2), (2, 0)] {
                let l2 = ((f.local[i][0] - f.local[j][0]).powi(2)
                    + (f.local[i][1] - f.local[j][1]).powi(2)).sqrt();
                prop_assert!((l2 - (p[i] - p[j]).norm()).abs() < 1e-10);
            }
        }

        #[test]
        fn local_coordinates_are_rotation_invariant(
            axis in vec3(), angle in -3.0..3.0f64, a in vec3(), b in vec3(), c in vec3()
        ) {
            prop_assume!(axis.norm() > 1e-3);
            prop_assume!((b - a).cross(&(c - a)).norm() > 1e-3);
            let rot = Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle);
            let f0 = element_local_frame(&[a, b, c]).unwrap();
            let f1 = element_local_frame(&[rot * a, rot * b, rot * c]).unwrap();
            for k in 0..3 {
                for d in 0..2 {
                    prop_assert!((f0.local[k][d] - f1.local[k][d]).abs() < 1e-9);
                }
            }
        }
    }
}
