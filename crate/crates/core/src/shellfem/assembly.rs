use rayon::prelude::*;

use super::element::{element_stiffness, Mat18};
use super::{ShellModel, ShellSection, DOF_PER_NODE};
use crate::geometry::TriangleMesh;
use crate::shellfem::Material;
use crate::{Error, Result, Vec3};

/// Square sparse matrix in compressed-column form with sorted row indices.
/// Both triangles of symmetric matrices are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    pub n: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CscMatrix {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        let rows = &self.row_idx[self.col_ptr[col]..self.col_ptr[col + 1]];
        match rows.binary_search(&row) {
            Ok(k) => self.values[self.col_ptr[col] + k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for (c, &xc) in x.iter().enumerate() {
            if xc == 0.0 {
                continue;
            }
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                y[self.row_idx[k]] += self.values[k] * xc;
            }
        }
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// max |K_ij - K_ji|
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for c in 0..self.n {
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                let r = self.row_idx[k];
                worst = worst.max((self.values[k] - self.get(c, r)).abs());
            }
        }
        worst
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut d = nalgebra::DMatrix::zeros(self.n, self.n);
        for c in 0..self.n {
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                d[(self.row_idx[k], c)] = self.values[k];
            }
        }
        d
    }
}

/// Assembled system with essential conditions applied: fixed rows and
/// columns are replaced by identity and their load entries are zero.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub stiffness: CscMatrix,
    pub load: Vec<f64>,
    pub fixed: Vec<bool>,
}

/// Node-to-node sparsity: for every vertex the sorted list of vertices it
/// shares a triangle with, itself included.
fn node_graph(mesh: &TriangleMesh) -> Vec<Vec<usize>> {
    let mut nb: Vec<Vec<usize>> = (0..mesh.vertex_count()).map(|v| vec![v]).collect();
    for tri in mesh.triangles() {
        for &a in tri {
            for &b in tri {
                nb[a].push(b);
            }
        }
    }
    for l in nb.iter_mut() {
        l.sort_unstable();
        l.dedup();
    }
    nb
}

fn block_pattern(nb: &[Vec<usize>]) -> CscMatrix {
    let n = DOF_PER_NODE * nb.len();
    let mut col_ptr = Vec::with_capacity(n + 1);
    let mut row_idx = Vec::new();
    col_ptr.push(0);
    for list in nb {
        for _ in 0..DOF_PER_NODE {
            for &i in list {
                row_idx.extend((0..DOF_PER_NODE).map(|a| DOF_PER_NODE * i + a));
            }
            col_ptr.push(row_idx.len());
        }
    }
    let nnz = row_idx.len();
    CscMatrix {
        n,
        col_ptr,
        row_idx,
        values: vec![0.0; nnz],
    }
}

const CHUNK: usize = 2048;

/// Global stiffness of the free structure (no boundary conditions).
///
/// Element matrices are computed in parallel per chunk and scattered in
/// element order, so the result does not depend on the thread count.
pub fn assemble_stiffness(
    mesh: &TriangleMesh,
    material: &Material,
    section: &ShellSection,
) -> Result<CscMatrix> {
    let nb = node_graph(mesh);
    let mut k = block_pattern(&nb);
    let tris = mesh.triangles();
    for start in (0..tris.len()).step_by(CHUNK) {
        let end = (start + CHUNK).min(tris.len());
        let blocks: Vec<Result<Mat18>> = (start..end)
            .into_par_iter()
            .map(|t| {
                element_stiffness(&mesh.corners(t), material, section)
                    .map_err(|_| Error::DegenerateTriangle(t))
            })
            .collect();
        for (t, ke) in (start..end).zip(blocks) {
            let ke = ke?;
            let tri = tris[t];
            for (bj, &vj) in tri.iter().enumerate() {
                for (bi, &vi) in tri.iter().enumerate() {
                    let slot = nb[vj].binary_search(&vi).expect("pattern covers element");
                    for b in 0..DOF_PER_NODE {
                        let col = DOF_PER_NODE * vj + b;
                        let base = k.col_ptr[col] + DOF_PER_NODE * slot;
                        for a in 0..DOF_PER_NODE {
                            k.values[base + a] +=
                                ke[(DOF_PER_NODE * bi + a, DOF_PER_NODE * bj + b)];
                        }
                    }
                }
            }
        }
    }
    if k.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("stiffness matrix"));
    }
    Ok(k)
}

/// Consistent nodal forces of a uniform pressure on the undeformed surface:
/// each triangle sends p * A * n / 3 to each of its corners.
pub fn pressure_nodal_loads(mesh: &TriangleMesh, pressure: f64) -> Vec<Vec3> {
    let mut f = vec![Vec3::zeros(); mesh.vertex_count()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        // raw normal has length 2A
        let share = mesh.face_normal_raw(t) * (pressure / 6.0);
        for &v in tri {
            f[v] += share;
        }
    }
    f
}

/// Assemble stiffness and pressure load of a model and apply its constraints.
pub fn assemble(model: &ShellModel) -> Result<LinearSystem> {
    if model.constraints.is_empty() {
        return Err(Error::SingularSystem(
            "no clamped rims and no rigid-body tie-down: the stiffness matrix is singular".into(),
        ));
    }
    let mesh = &model.analysis_mesh;
    let mut k = assemble_stiffness(mesh, &model.material, &model.section)?;
    let mut load = vec![0.0; k.n];
    for (v, f) in pressure_nodal_loads(mesh, model.load.pressure)
        .iter()
        .enumerate()
    {
        for a in 0..3 {
            load[DOF_PER_NODE * v + a] = f[a];
        }
    }
    if load.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("load vector"));
    }
    let mut fixed = vec![false; k.n];
    for d in model.constraints.dofs() {
        fixed[d] = true;
        load[d] = 0.0;
    }
    for c in 0..k.n {
        for idx in k.col_ptr[c]..k.col_ptr[c + 1] {
            let r = k.row_idx[idx];
            if fixed[r] || fixed[c] {
                k.values[idx] = if r == c { 1.0 } else { 0.0 };
            }
        }
    }
    Ok(LinearSystem {
        stiffness: k,
        load,
        fixed,
    })
}
