use std::time::Instant;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, SymbolicSparseColMat};
use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use super::assembly::LinearSystem;
use super::Displacements;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    /// Sparse Cholesky with fill-reducing ordering.
    #[default]
    Direct,
    /// Jacobi-preconditioned conjugate gradient.
    Cg,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub kind: SolverKind,
    /// Relative residual target for the iterative path.
    pub tolerance: f64,
    /// Iteration cap; `None` means 20 * sqrt(DOF).
    pub max_iterations: Option<usize>,
    /// Single-threaded factorization for bitwise reproducible output.
    pub deterministic: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            kind: SolverKind::Direct,
            tolerance: 1e-9,
            max_iterations: None,
            deterministic: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveStats {
    pub dof: usize,
    pub nonzeros: usize,
    pub kind: SolverKind,
    pub iterations: usize,
    /// ||K u - f|| / ||f|| (0 when f = 0)
    pub relative_residual: f64,
    pub seconds: f64,
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn solve_displacements(
    system: &LinearSystem,
    options: &SolverOptions,
) -> Result<(Displacements, SolveStats)> {
    let (u, stats) = solve_flat(system, options)?;
    Ok((Displacements::from_flat(&u), stats))
}

/// Solve K u = f, returning the raw DOF vector.
pub fn solve_flat(
    system: &LinearSystem,
    options: &SolverOptions,
) -> Result<(Vec<f64>, SolveStats)> {
    let start = Instant::now();
    let k = &system.stiffness;
    let f = &system.load;
    let fnorm = norm(f);
    let (mut u, iterations) = if fnorm == 0.0 {
        (vec![0.0; k.n], 0)
    } else {
        match options.kind {
            SolverKind::Direct => (direct(system, options.deterministic)?, 0),
            SolverKind::Cg => conjugate_gradient(system, options)?,
        }
    };
    for (x, &fixed) in u.iter_mut().zip(&system.fixed) {
        if fixed {
            *x = 0.0;
        }
    }
    if u.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("displacements"));
    }
    let ku = k.mul_vec(&u);
    let r: Vec<f64> = ku.iter().zip(f).map(|(a, b)| a - b).collect();
    let relative_residual = if fnorm > 0.0 { norm(&r) / fnorm } else { 0.0 };
    let stats = SolveStats {
        dof: k.n,
        nonzeros: k.nnz(),
        kind: options.kind,
        iterations,
        relative_residual,
        seconds: start.elapsed().as_secs_f64(),
    };
    log::info!(
        "solved {} DOF ({:?}) residual {:.2e} in {:.2}s",
        stats.dof,
        stats.kind,
        stats.relative_residual,
        stats.seconds
    );
    Ok((u, stats))
}

fn direct(system: &LinearSystem, deterministic: bool) -> Result<Vec<f64>> {
    let k = &system.stiffness;
    if deterministic {
        faer::set_global_parallelism(faer::Par::Seq);
    } else {
        faer::set_global_parallelism(faer::Par::rayon(0));
    }
    let symbolic =
        SymbolicSparseColMat::new_checked(k.n, k.n, k.col_ptr.clone(), None, k.row_idx.clone());
    let mat = SparseColMat::new(symbolic, k.values.clone());
    let llt = mat.sp_cholesky(Side::Lower).map_err(|e| match e {
        faer::sparse::linalg::LltError::Numeric(
            faer::linalg::cholesky::llt::factor::LltError::NonPositivePivot { index },
        ) => Error::Factorization { pivot: index },
        other => Error::SingularSystem(format!("sparse Cholesky failed: {other:?}")),
    })?;
    let rhs = Mat::from_fn(k.n, 1, |i, _| system.load[i]);
    let x = llt.solve(&rhs);
    Ok((0..k.n).map(|i| x[(i, 0)]).collect())
}

fn conjugate_gradient(system: &LinearSystem, options: &SolverOptions) -> Result<(Vec<f64>, usize)> {
    let k = &system.stiffness;
    let b = &system.load;
    let n = k.n;
    let cap = options
        .max_iterations
        .unwrap_or_else(|| (20.0 * (n as f64).sqrt()).ceil() as usize);
    let inv_diag: Vec<f64> = k
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    let mut r = b.clone();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, d)| a * d).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    for it in 1..=cap {
        let kp = k.mul_vec(&p);
        let pkp: f64 = p.iter().zip(&kp).map(|(a, b)| a * b).sum();
        if pkp <= 0.0 {
            return Err(Error::SingularSystem(
                "stiffness is not positive definite (CG breakdown)".into(),
            ));
        }
        let alpha = rz / pkp;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * kp[i];
        }
        let res = norm(&r) / bnorm;
        if res <= options.tolerance {
            return Ok((x, it));
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NoConvergence {
        iterations: cap,
        residual: norm(&r) / bnorm,
    })
}
