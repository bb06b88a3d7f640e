//! Flat triangular shell element.
//!
//! Local DOF order per node: u, v, w, rx, ry, rz (six per node, 18 total).
//! Membrane: constant-strain triangle. Bending: discrete Kirchhoff triangle
//! with rx = dw/dy, ry = -dw/dx. The drilling rotation rz is tied to the
//! in-plane rotation of the membrane field, so rigid motions stay free.

use nalgebra::{Matrix3, SMatrix, SVector};

use super::frame::{element_local_frame, ElementFrame};
use super::{Material, ShellSection};
use crate::{Result, Vec3};

pub type Mat18 = SMatrix<f64, 18, 18>;
pub type Vec18 = SVector<f64, 18>;

/// Drilling stiffness relative to the mean bending rotation diagonal.
pub const DRILLING_FACTOR: f64 = 1e-3;

/// Constant strain-displacement matrix of the membrane, acting on
/// (u1, v1, u2, v2, u3, v3). Returns the matrix and the gradient of the
/// in-plane rotation (dv/dx - du/dy) / 2 over the same DOFs.
pub(crate) fn membrane_b(f: &ElementFrame) -> (SMatrix<f64, 3, 6>, [f64; 6]) {
    let [[x1, y1], [x2, y2], [x3, y3]] = f.local;
    let twice_a = 2.0 * f.area;
    let b = [y2 - y3, y3 - y1, y1 - y2];
    let c = [x3 - x2, x1 - x3, x2 - x1];
    let mut bm = SMatrix::<f64, 3, 6>::zeros();
    let mut omega = [0.0; 6];
    for i in 0..3 {
        bm[(0, 2 * i)] = b[i] / twice_a;
        bm[(1, 2 * i + 1)] = c[i] / twice_a;
        bm[(2, 2 * i)] = c[i] / twice_a;
        bm[(2, 2 * i + 1)] = b[i] / twice_a;
        omega[2 * i] = -c[i] / (2.0 * twice_a);
        omega[2 * i + 1] = b[i] / (2.0 * twice_a);
    }
    (bm, omega)
}

struct SideCoefs {
    a: [f64; 3],
    b: [f64; 3],
    c: [f64; 3],
    d: [f64; 3],
    e: [f64; 3],
}

impl SideCoefs {
    /// Sides 4, 5, 6 of the DKT run between corners (2,3), (3,1), (1,2).
    fn new(f: &ElementFrame) -> Self {
        let mut s = SideCoefs {
            a: [0.0; 3],
            b: [0.0; 3],
            c: [0.0; 3],
            d: [0.0; 3],
            e: [0.0; 3],
        };
        for (k, (i, j)) in [(1, 2), (2, 0), (0, 1)].into_iter().enumerate() {
            let xij = f.local[i][0] - f.local[j][0];
            let yij = f.local[i][1] - f.local[j][1];
            let l2 = xij * xij + yij * yij;
            s.a[k] = -xij / l2;
            s.b[k] = 0.75 * xij * yij / l2;
            s.c[k] = (0.25 * xij * xij - 0.5 * yij * yij) / l2;
            s.d[k] = -yij / l2;
            s.e[k] = (0.25 * yij * yij - 0.5 * xij * xij) / l2;
        }
        s
    }

    /// Rotation interpolants (Hx, Hy) for given values of the six quadratic
    /// shape functions (three corners, then midsides 23, 31, 12). Linear in
    /// `n`, so derivatives follow by passing shape-function derivatives.
    fn h(&self, n: [f64; 6]) -> ([f64; 9], [f64; 9]) {
        let [n1, n2, n3, n4, n5, n6] = n;
        let (a, b, c, d, e) = (&self.a, &self.b, &self.c, &self.d, &self.e);
        let mut hx = [0.0; 9];
        let mut hy = [0.0; 9];
        hx[0] = 1.5 * (a[2] * n6 - a[1] * n5);
        hx[1] = b[1] * n5 + b[2] * n6;
        hx[2] = n1 - c[1] * n5 - c[2] * n6;
        hx[3] = 1.5 * (a[0] * n4 - a[2] * n6);
        hx[4] = b[2] * n6 + b[0] * n4;
        hx[5] = n2 - c[2] * n6 - c[0] * n4;
        hx[6] = 1.5 * (a[1] * n5 - a[0] * n4);
        hx[7] = b[0] * n4 + b[1] * n5;
        hx[8] = n3 - c[0] * n4 - c[1] * n5;
        hy[0] = 1.5 * (d[2] * n6 - d[1] * n5);
        hy[1] = -n1 + e[1] * n5 + e[2] * n6;
        hy[2] = -hx[1];
        hy[3] = 1.5 * (d[0] * n4 - d[2] * n6);
        hy[4] = -n2 + e[2] * n6 + e[0] * n4;
        hy[5] = -hx[4];
        hy[6] = 1.5 * (d[1] * n5 - d[0] * n4);
        hy[7] = -n3 + e[0] * n4 + e[1] * n5;
        hy[8] = -hx[7];
        (hx, hy)
    }
}

/// DKT curvature matrix at area coordinates (L2, L3) = (xi, eta), acting on
/// (w1, rx1, ry1, w2, ...). Rows: kxx, kyy, 2kxy with kxx = -d2w/dx2.
pub(crate) fn dkt_b(f: &ElementFrame, xi: f64, eta: f64) -> SMatrix<f64, 3, 9> {
    let s = SideCoefs::new(f);
    let l1 = 1.0 - xi - eta;
    let dn_dxi = [
        1.0 - 4.0 * l1,
        4.0 * xi - 1.0,
        0.0,
        4.0 * eta,
        -4.0 * eta,
        4.0 * (l1 - xi),
    ];
    let dn_deta = [
        1.0 - 4.0 * l1,
        0.0,
        4.0 * eta - 1.0,
        4.0 * xi,
        4.0 * (l1 - eta),
        -4.0 * xi,
    ];
    let (hx_xi, hy_xi) = s.h(dn_dxi);
    let (hx_eta, hy_eta) = s.h(dn_deta);
    let [[x1, y1], [x2, y2], [x3, y3]] = f.local;
    let (x21, y21, x31, y31) = (x2 - x1, y2 - y1, x3 - x1, y3 - y1);
    let det = x21 * y31 - x31 * y21;
    let ddx = |a: f64, b: f64| (y31 * a - y21 * b) / det;
    let ddy = |a: f64, b: f64| (-x31 * a + x21 * b) / det;
    let mut bm = SMatrix::<f64, 3, 9>::zeros();
    for k in 0..9 {
        bm[(0, k)] = ddx(hx_xi[k], hx_eta[k]);
        bm[(1, k)] = ddy(hy_xi[k], hy_eta[k]);
        bm[(2, k)] = ddy(hx_xi[k], hx_eta[k]) + ddx(hy_xi[k], hy_eta[k]);
    }
    bm
}

const GAUSS3: [(f64, f64); 3] = [
    (1.0 / 6.0, 1.0 / 6.0),
    (2.0 / 3.0, 1.0 / 6.0),
    (1.0 / 6.0, 2.0 / 3.0),
];

fn dkt_stiffness(f: &ElementFrame, bending: &Matrix3<f64>) -> SMatrix<f64, 9, 9> {
    let mut k = SMatrix::<f64, 9, 9>::zeros();
    // weights 1/6 on the reference triangle, times |J| = 2A
    let w = f.area / 3.0;
    for &(xi, eta) in &GAUSS3 {
        let b = dkt_b(f, xi, eta);
        k += b.transpose() * bending * b * w;
    }
    k
}

pub(crate) const MEMBRANE_DOFS: [usize; 6] = [0, 1, 6, 7, 12, 13];
pub(crate) const BENDING_DOFS: [usize; 9] = [2, 3, 4, 8, 9, 10, 14, 15, 16];

/// Element stiffness in the element frame.
pub fn element_stiffness_local(f: &ElementFrame, material: &Material, thickness: f64) -> Mat18 {
    let d = material.plane_stress();
    let mut k = Mat18::zeros();

    let (bm, omega) = membrane_b(f);
    let km = bm.transpose() * d * bm * (thickness * f.area);
    for (i, &gi) in MEMBRANE_DOFS.iter().enumerate() {
        for (j, &gj) in MEMBRANE_DOFS.iter().enumerate() {
            k[(gi, gj)] += km[(i, j)];
        }
    }

    let kb = dkt_stiffness(f, &(d * (thickness.powi(3) / 12.0)));
    for (i, &gi) in BENDING_DOFS.iter().enumerate() {
        for (j, &gj) in BENDING_DOFS.iter().enumerate() {
            k[(gi, gj)] += kb[(i, j)];
        }
    }

    // drilling: k_d * sum_i (rz_i - omega)^2 / 2
    let rot_diag: f64 = (0..3)
        .map(|n| kb[(3 * n + 1, 3 * n + 1)] + kb[(3 * n + 2, 3 * n + 2)])
        .sum();
    let kd = DRILLING_FACTOR * rot_diag / 6.0;
    for node in 0..3 {
        let mut g = Vec18::zeros();
        g[6 * node + 5] = 1.0;
        for (m, &dof) in MEMBRANE_DOFS.iter().enumerate() {
            g[dof] -= omega[m];
        }
        k += g * g.transpose() * kd;
    }
    k
}

/// 18x18 block-diagonal rotation taking global nodal DOFs to local ones.
pub(crate) fn transformation(f: &ElementFrame) -> Mat18 {
    let r = f.rotation();
    let mut t = Mat18::zeros();
    for b in 0..6 {
        t.fixed_view_mut::<3, 3>(3 * b, 3 * b).copy_from(&r);
    }
    t
}

/// Element stiffness in global coordinates.
pub fn element_stiffness(
    corners: &[Vec3; 3],
    material: &Material,
    section: &ShellSection,
) -> Result<Mat18> {
    let f = element_local_frame(corners)?;
    let kl = element_stiffness_local(&f, material, section.thickness);
    let t = transformation(&f);
    let kg = t.transpose() * kl * t;
    // remove round-off asymmetry
    Ok((kg + kg.transpose()) * 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shellfem::ReferenceSurface;
    use nalgebra::{Rotation3, Unit};

    fn section(t: f64) -> ShellSection {
        ShellSection::new(t, ReferenceSurface::Mid, 5).unwrap()
    }

    fn skewed() -> [Vec3; 3] {
        [
            Vec3::new(0.3, -0.2, 0.1),
            Vec3::new(1.4, 0.1, -0.3),
            Vec3::new(0.5, 1.1, 0.4),
        ]
    }

    fn rigid_modes(p: &[Vec3; 3]) -> Vec<Vec18> {
        let mut modes = Vec::new();
        for axis in 0..3 {
            let mut u = Vec18::zeros();
            for n in 0..3 {
                u[6 * n + axis] = 1.0;
            }
            modes.push(u);
        }
        for axis in 0..3 {
            let w = Vec3::ith(axis, 1.0);
            let mut u = Vec18::zeros();
            for n in 0..3 {
                let d = w.cross(&p[n]);
                for k in 0..3 {
                    u[6 * n + k] = d[k];
                    u[6 * n + 3 + k] = w[k];
                }
            }
            modes.push(u);
        }
        modes
    }

    #[test]
    fn rigid_modes_are_in_null_space() {
        let p = skewed();
        let k = element_stiffness(&p, &Material::vessel_wall(), &section(0.086)).unwrap();
        let knorm = k.norm();
        for u in rigid_modes(&p) {
            let r = (k * u).norm() / (knorm * u.norm());
            assert!(r < 1e-10, "rigid residual {r}");
        }
    }

    #[test]
    fn symmetric_with_twelve_deformation_modes() {
        let p = skewed();
        let k = element_stiffness(&p, &Material::new(1000.0, 0.3).unwrap(), &section(0.1)).unwrap();
        assert!((k - k.transpose()).abs().max() <= 1e-10 * k.abs().max());
        let eig = k.symmetric_eigenvalues();
        let max = eig.max();
        let positive = eig.iter().filter(|&&l| l > 1e-12 * max).count();
        assert_eq!(positive, 12);
        assert!(eig.iter().all(|&l| l > -1e-10 * max));
    }

    #[test]
    fn dkt_reproduces_constant_curvature() {
        // w = a x^2 + b xy + c y^2 with rx = dw/dy, ry = -dw/dx
        let f = element_local_frame(&skewed()).unwrap();
        let (a, b, c) = (0.7, -0.4, 1.3);
        let mut u = SVector::<f64, 9>::zeros();
        for n in 0..3 {
            let [x, y] = f.local[n];
            u[3 * n] = a * x * x + b * x * y + c * y * y;
            u[3 * n + 1] = b * x + 2.0 * c * y;
            u[3 * n + 2] = -(2.0 * a * x + b * y);
        }
        for &(xi, eta) in &[(1.0 / 3.0, 1.0 / 3.0), (0.1, 0.7), (0.0, 0.0), (0.5, 0.5)] {
            let k = dkt_b(&f, xi, eta) * u;
            assert!((k[0] + 2.0 * a).abs() < 1e-12, "kxx {}", k[0]);
            assert!((k[1] + 2.0 * c).abs() < 1e-12, "kyy {}", k[1]);
            assert!((k[2] + 2.0 * b).abs() < 1e-12, "kxy {}", k[2]);
        }
    }

    #[test]
    fn bending_energy_of_cylindrical_bend() {
        // w = x^2 / 2 gives kxx = -1; energy = D * A / 2
        let f = element_local_frame(&skewed()).unwrap();
        let m = Material::new(1000.0, 0.3).unwrap();
        let t = 0.2;
        let kl = element_stiffness_local(&f, &m, t);
        let mut u = Vec18::zeros();
        for n in 0..3 {
            let [x, _] = f.local[n];
            u[6 * n + 2] = 0.5 * x * x;
            u[6 * n + 4] = -x;
        }
        let dplate = 1000.0 * t.powi(3) / (12.0 * (1.0 - 0.09));
        let energy = 0.5 * u.dot(&(kl * u));
        assert!((energy / (0.5 * dplate * f.area) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn stiffness_is_frame_covariant() {
        let p = skewed();
        let rot = Rotation3::from_axis_angle(&Unit::new_normalize(Vec3::new(1.0, 2.0, -0.5)), 0.9);
        let q = p.map(|v| rot * v);
        let m = Material::vessel_wall();
        let k0 = element_stiffness(&p, &m, &section(0.086)).unwrap();
        let k1 = element_stiffness(&q, &m, &section(0.086)).unwrap();
        let mut big = Mat18::zeros();
        for b in 0..6 {
            big.fixed_view_mut::<3, 3>(3 * b, 3 * b)
                .copy_from(rot.matrix());
        }
        let back = big.transpose() * k1 * big;
        assert!((back - k0).abs().max() < 1e-9 * k0.abs().max());
    }
}
