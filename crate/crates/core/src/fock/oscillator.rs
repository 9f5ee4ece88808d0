//! Finite-difference ground state of the oscillator comparison operator
//!
//! ```text
//! K = -(1/4 alpha^4) sum_n d^2/d lambda_n^2 - M/(2 alpha^2) + F(lambda)
//! ```
//!
//! on a Dirichlet box around the classical minimizer. Its ground value is a
//! rigorous lower bound for the Fock ground energy at matching truncation,
//! up to discretization error, which a Richardson step and explicit
//! box-doubling checks keep below the reported targets.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::linalg::sym_eigen;
use crate::pekar::PekarProblem;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OscillatorGrid {
    /// Half-width of the box per axis, centered on the minimizer.
    pub half_width: f64,
    /// Grid points per axis at the base resolution.
    pub points_per_axis: usize,
    /// Target for the grid-halving and box-doubling stability checks.
    pub convergence_target: f64,
}

impl Default for OscillatorGrid {
    fn default() -> Self {
        OscillatorGrid { half_width: 1.2, points_per_axis: 1600, convergence_target: 1e-8 }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OscillatorValue {
    /// Richardson-extrapolated ground value.
    pub value: f64,
    /// Change under grid refinement (step halving), after extrapolation.
    pub grid_change: f64,
    /// Change of the base solve under box doubling.
    pub boundary_change: f64,
}

/// Ground value of the comparison operator for `M <= 2` field modes.
pub fn oscillator_bound(
    problem: &PekarProblem,
    center: &[f64],
    alpha: f64,
    grid: &OscillatorGrid,
) -> Result<OscillatorValue> {
    if problem.m > 2 {
        return Err(CoreError::InvalidInput("oscillator grids cover at most two modes".into()));
    }
    if center.len() != problem.m {
        return Err(CoreError::InvalidInput("center length must match the mode count".into()));
    }
    let base = ground_on_grid(problem, center, alpha, grid.half_width, grid.points_per_axis)?;
    let fine = ground_on_grid(problem, center, alpha, grid.half_width, grid.points_per_axis * 2)?;
    let extrapolated = (4.0 * fine - base) / 3.0;
    // second Richardson pair to measure the residual step dependence
    let finer = ground_on_grid(problem, center, alpha, grid.half_width, grid.points_per_axis * 4)?;
    let extrapolated_fine = (4.0 * finer - fine) / 3.0;
    let grid_change = (extrapolated_fine - extrapolated).abs();
    if grid_change > grid.convergence_target {
        return Err(CoreError::GridConvergence {
            change: grid_change,
            target: grid.convergence_target,
        });
    }
    let doubled = ground_on_grid(problem, center, alpha, 2.0 * grid.half_width, grid.points_per_axis * 2)?;
    let boundary_change = (doubled - base).abs();
    if boundary_change > grid.convergence_target {
        return Err(CoreError::GridConvergence {
            change: boundary_change,
            target: grid.convergence_target,
        });
    }
    Ok(OscillatorValue { value: extrapolated_fine, grid_change, boundary_change })
}

fn ground_on_grid(
    problem: &PekarProblem,
    center: &[f64],
    alpha: f64,
    half_width: f64,
    points: usize,
) -> Result<f64> {
    let m = problem.m;
    let h = 2.0 * half_width / (points + 1) as f64;
    let kinetic = 1.0 / (4.0 * alpha.powi(4) * h * h);
    let shift = m as f64 / (2.0 * alpha * alpha);
    let axis = |i: usize, a: usize| center[a] - half_width + (i + 1) as f64 * h;

    use rayon::prelude::*;
    let potential: Vec<f64> = match m {
        1 => (0..points)
            .into_par_iter()
            .map(|i| problem.field_functional(&[axis(i, 0)]))
            .collect(),
        2 => (0..points * points)
            .into_par_iter()
            .map(|flat| problem.field_functional(&[axis(flat / points, 0), axis(flat % points, 1)]))
            .collect(),
        _ => unreachable!(),
    };
    let dim = potential.len();
    let diag_kinetic = 2.0 * m as f64 * kinetic;

    let matvec = |x: &[f64], y: &mut [f64]| {
        for i in 0..dim {
            y[i] = (potential[i] - shift + diag_kinetic) * x[i];
        }
        match m {
            1 => {
                for i in 0..dim {
                    if i > 0 {
                        y[i] -= kinetic * x[i - 1];
                    }
                    if i + 1 < dim {
                        y[i] -= kinetic * x[i + 1];
                    }
                }
            }
            _ => {
                for r in 0..points {
                    for c in 0..points {
                        let i = r * points + c;
                        let mut acc = 0.0;
                        if r > 0 {
                            acc += x[i - points];
                        }
                        if r + 1 < points {
                            acc += x[i + points];
                        }
                        if c > 0 {
                            acc += x[i - 1];
                        }
                        if c + 1 < points {
                            acc += x[i + 1];
                        }
                        y[i] -= kinetic * acc;
                    }
                }
            }
        }
    };

    // warm start: Gaussian bump at the potential minimum
    let argmin = potential
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    let width = (2.0 * alpha * alpha).recip().sqrt().max(2.0 * h);
    let mut start = vec![0.0; dim];
    for i in 0..dim {
        let dist2 = match m {
            1 => {
                let d = (i as f64 - argmin as f64) * h;
                d * d
            }
            _ => {
                let (r, c) = (i / points, i % points);
                let (r0, c0) = (argmin / points, argmin % points);
                let dr = (r as f64 - r0 as f64) * h;
                let dc = (c as f64 - c0 as f64) * h;
                dr * dr + dc * dc
            }
        };
        start[i] = (-dist2 / (2.0 * width * width)).exp();
    }
    lanczos_ground_from(dim, matvec, &start).ok_or_else(|| CoreError::EigensolverStall {
        iterations: 0,
        tol: 1e-11,
        best: f64::NAN,
    })
}

fn lanczos_ground_from(
    dim: usize,
    matvec: impl Fn(&[f64], &mut [f64]),
    start: &[f64],
) -> Option<f64> {
    let mut current = start.to_vec();
    crate::linalg::normalize(&mut current);
    let mut last = f64::INFINITY;
    for _ in 0..200 {
        let (value, vector) = lanczos_block(dim, &matvec, &current, 200);
        let mut hv = vec![0.0; dim];
        matvec(&vector, &mut hv);
        let residual = hv
            .iter()
            .zip(&vector)
            .map(|(&a, &b)| (a - value * b) * (a - value * b))
            .sum::<f64>()
            .sqrt();
        if residual < 1e-11 || (last - value).abs() < 1e-14 {
            return Some(value);
        }
        last = value;
        current = vector;
    }
    None
}

fn lanczos_block(
    dim: usize,
    matvec: &impl Fn(&[f64], &mut [f64]),
    start: &[f64],
    block: usize,
) -> (f64, Vec<f64>) {
    let m = block.min(dim);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut alphas = Vec::with_capacity(m);
    let mut betas = Vec::with_capacity(m);
    basis.push(start.to_vec());
    let mut w = vec![0.0; dim];
    for j in 0..m {
        matvec(&basis[j], &mut w);
        let alpha = crate::linalg::dot(&w, &basis[j]);
        alphas.push(alpha);
        for i in 0..dim {
            w[i] -= alpha * basis[j][i];
        }
        if j > 0 {
            let b: f64 = betas[j - 1];
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
    (spec.values[0], vector)
}
