//! Ground-state solve of the assembled operator: dense below a size
//! threshold, restarted Lanczos above it. In the displaced frame the
//! deterministic start vector is the electron ground state on the vacuum
//! block, which is already close to the answer for strong coupling.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fock::FockOperator;
use crate::linalg::sym_eigen;

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub tol: f64,
    pub seed: u64,
    /// Below this dimension the dense eigensolver is used directly.
    pub dense_threshold: usize,
    pub max_restarts: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tol: 1e-9, seed: 1, dense_threshold: 520, max_restarts: 400 }
    }
}

/// Ground-state data of one diagonalization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FockGroundState {
    pub e0: f64,
    /// `||H v - E0 v||` of the returned pair.
    pub residual: f64,
    pub dimension: usize,
    /// Ladder-frame occupation per mode; a cutoff-saturation diagnostic.
    pub mean_occupation: Vec<f64>,
}

/// Lowest eigenvalue of the operator with an explicitly verified residual.
pub fn lowest_eigenvalue(op: &FockOperator, options: &SolveOptions) -> Result<FockGroundState> {
    if op.dim <= options.dense_threshold {
        let spec = sym_eigen(&op.to_dense());
        let e0 = spec.values[0];
        let v: Vec<f64> = spec.vectors.column(0).iter().copied().collect();
        let mut hv = vec![0.0; op.dim];
        op.matvec(&v, &mut hv);
        let residual = hv
            .iter()
            .zip(&v)
            .map(|(&h, &x)| (h - e0 * x) * (h - e0 * x))
            .sum::<f64>()
            .sqrt();
        return Ok(FockGroundState {
            e0,
            residual,
            dimension: op.dim,
            mean_occupation: op.mean_occupation(&v),
        });
    }
    // warm start: electron ground state on the vacuum block, plus a seeded
    // random tail so every subspace is eventually reachable
    let electron = {
        let mut block = nalgebra::DMatrix::zeros(op.b, op.b);
        let mut unit = vec![0.0; op.dim];
        let mut col = vec![0.0; op.dim];
        for j in 0..op.b {
            unit[j] = 1.0;
            op.matvec(&unit, &mut col);
            unit[j] = 0.0;
            for i in 0..op.b {
                block[(i, j)] = col[i];
            }
        }
        sym_eigen(&block)
    };
    let dim = op.dim;
    let warm: Vec<f64> = {
        let mut rng = crate::linalg::stream_rng(options.seed, 0);
        use rand::Rng;
        let mut v: Vec<f64> = (0..dim).map(|_| 1e-6 * rng.random_range(-1.0..1.0)).collect();
        for i in 0..op.b {
            v[i] += electron.vectors[(i, 0)];
        }
        v
    };
    let ground = lanczos_smallest_with_start(op, &warm, options)?;
    Ok(FockGroundState {
        e0: ground.0,
        residual: ground.2,
        dimension: op.dim,
        mean_occupation: op.mean_occupation(&ground.1),
    })
}

fn lanczos_smallest_with_start(
    op: &FockOperator,
    start: &[f64],
    options: &SolveOptions,
) -> Result<(f64, Vec<f64>, f64)> {
    let mut current = start.to_vec();
    crate::linalg::normalize(&mut current);
    let mut best: Option<(f64, Vec<f64>, f64)> = None;
    for _ in 0..options.max_restarts {
        let (value, vector, _) = lanczos_cycle_from(op, &current, 260);
        let mut hv = vec![0.0; op.dim];
        op.matvec(&vector, &mut hv);
        let residual = hv
            .iter()
            .zip(&vector)
            .map(|(&h, &x)| (h - value * x) * (h - value * x))
            .sum::<f64>()
            .sqrt();
        let improved = best.as_ref().map_or(true, |b| value < b.0 || residual < b.2);
        if improved {
            best = Some((value, vector.clone(), residual));
        }
        if residual <= options.tol {
            return Ok(best.unwrap());
        }
        current = vector;
    }
    let b = best.unwrap();
    Err(crate::error::CoreError::EigensolverStall {
        iterations: options.max_restarts * 260,
        tol: options.tol,
        best: b.2,
    })
}

fn lanczos_cycle_from(op: &FockOperator, start: &[f64], block: usize) -> (f64, Vec<f64>, usize) {
    let dim = op.dim;
    let m = block.min(dim);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut alphas: Vec<f64> = Vec::with_capacity(m);
    let mut betas: Vec<f64> = Vec::with_capacity(m);
    let mut v = start.to_vec();
    crate::linalg::normalize(&mut v);
    basis.push(v);
    let mut w = vec![0.0; dim];
    for j in 0..m {
        op.matvec(&basis[j], &mut w);
        let alpha = crate::linalg::dot(&w, &basis[j]);
        alphas.push(alpha);
        for i in 0..dim {
            w[i] -= alpha * basis[j][i];
        }
        if j > 0 {
            let b = betas[j - 1];
            for i in 0..dim {
                w[i] -= b * basis[j - 1][i];
            }
        }
        for q in &basis {
            let c = crate::linalg::dot(&w, q);
            for i in 0..dim {
                w[i] -= c * q[i];
            }
        }
        let beta = crate::linalg::norm(&w);
        if beta < 1e-14 || j + 1 == m {
            break;
        }
        betas.push(beta);
        let mut next = w.clone();
        for x in next.iter_mut() {
            *x /= beta;
        }
        basis.push(next);
    }
    let k = alphas.len();
    let mut t = nalgebra::DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let spec = sym_eigen(&t);
    let coeffs = spec.vectors.column(0);
    let mut vector = vec![0.0; dim];
    for (j, q) in basis.iter().enumerate() {
        let c = coeffs[j];
        for i in 0..dim {
            vector[i] += c * q[i];
        }
    }
    crate::linalg::normalize(&mut vector);
    (spec.values[0], vector, k)
}
