//! Variational upper bound from the Gaussian-times-cutoff adiabatic trial
//! state: the electron instantaneously follows the field coordinates, the
//! field fluctuates with Gaussian weight `exp(-alpha^2 <d|sqrt(1-K)|d>)`,
//! and a smooth radial cutoff keeps the state inside the region where the
//! quadratic expansion of the field functional is controlled.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::linalg::sym_eigen;
use crate::pekar::{PekarProblem, PekarSolution};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrialQuadrature {
    /// Gauss–Legendre panels per half axis (panel edges meet the cutoff knots).
    pub panels_per_half_axis: usize,
    pub nodes_per_panel: usize,
    /// Allowed change under node-count doubling.
    pub convergence_target: f64,
}

impl Default for TrialQuadrature {
    fn default() -> Self {
        TrialQuadrature { panels_per_half_axis: 2, nodes_per_panel: 40, convergence_target: 1e-9 }
    }
}

/// Smooth cutoff: 1 on `t <= 1/2`, 0 on `t >= 1`, quintic spline between.
fn chi(t: f64) -> f64 {
    if t <= 0.5 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        let s = (t - 0.5) * 2.0;
        1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
    }
}

fn chi_prime(t: f64) -> f64 {
    if t <= 0.5 || t >= 1.0 {
        0.0
    } else {
        let s = (t - 0.5) * 2.0;
        -2.0 * 30.0 * s * s * (1.0 - s) * (1.0 - s)
    }
}

/// Rayleigh quotient of the trial state for the `M`-mode truncation
/// (`M <= 2`), by tensor Gauss–Legendre quadrature over the cutoff support.
pub fn trial_state_energy(
    problem: &PekarProblem,
    solution: &PekarSolution,
    k: &DMatrix<f64>,
    alpha: f64,
    epsilon: f64,
    quad: &TrialQuadrature,
) -> Result<f64> {
    if problem.m > 2 {
        return Err(CoreError::InvalidInput("trial state covers at most two modes".into()));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(CoreError::InvalidInput("epsilon must lie in (0, 1)".into()));
    }
    let spec = sym_eigen(k);
    if spec.values.iter().any(|&v| v >= 1.0) {
        return Err(CoreError::OutOfRegime { value: spec.values[spec.values.len() - 1] });
    }
    let coarse = rayleigh(problem, solution, k, alpha, epsilon, quad)?;
    let mut fine_quad = *quad;
    fine_quad.nodes_per_panel *= 2;
    let fine = rayleigh(problem, solution, k, alpha, epsilon, &fine_quad)?;
    if (fine - coarse).abs() > quad.convergence_target {
        return Err(CoreError::GridConvergence {
            change: (fine - coarse).abs(),
            target: quad.convergence_target,
        });
    }
    Ok(fine)
}

fn rayleigh(
    problem: &PekarProblem,
    solution: &PekarSolution,
    k: &DMatrix<f64>,
    alpha: f64,
    epsilon: f64,
    quad: &TrialQuadrature,
) -> Result<f64> {
    let m = problem.m;
    // matrix square root of (1 - K)
    let spec = sym_eigen(&(DMatrix::<f64>::identity(m, m) - k));
    let mut sqrt_mat = DMatrix::<f64>::zeros(m, m);
    for j in 0..m {
        let root = spec.values[j].sqrt();
        for a in 0..m {
            for b in 0..m {
                sqrt_mat[(a, b)] += root * spec.vectors[(a, j)] * spec.vectors[(b, j)];
            }
        }
    }
    let phonon_e = problem.phonon_eigenvalues();
    // axis n reaches |delta_n| <= eps sqrt(e_n) inside the cutoff support
    let radii: Vec<f64> = phonon_e.iter().map(|&e| epsilon * e.sqrt()).collect();
    let (nodes, weights) = axis_rule(&radii, quad);

    let g2 = problem.g * problem.g;
    let alpha2 = alpha * alpha;
    let alpha4 = alpha2 * alpha2;
    let shift = m as f64 / (2.0 * alpha2);

    let eval_point = |delta: &[f64]| -> (f64, f64) {
        // returns (numerator integrand, weight integrand)
        let t2: f64 = delta.iter().zip(&phonon_e).map(|(&d, &e)| d * d / e).sum();
        let t = t2.sqrt() / epsilon;
        let c = chi(t);
        if c == 0.0 {
            return (0.0, 0.0);
        }
        let s_delta: Vec<f64> = (0..m)
            .map(|a| (0..m).map(|b| sqrt_mat[(a, b)] * delta[b]).sum())
            .collect();
        let quad_form: f64 = delta.iter().zip(&s_delta).map(|(&d, &s)| d * s).sum();
        let g = (-alpha2 * quad_form).exp();
        let w = (g * c) * (g * c);

        let lambda: Vec<f64> = solution.lambda.iter().zip(delta).map(|(&l, &d)| l + d).collect();
        let h = problem.electron_hamiltonian(&lambda);
        let espec = sym_eigen(&h);
        let mu = espec.values[0];
        let f_value = mu + lambda.iter().map(|v| v * v).sum::<f64>();

        // electron response: ||d psi / d lambda_n||^2 through the squared
        // reduced resolvent
        let b = problem.b;
        let psi: Vec<f64> = (0..b).map(|i| espec.vectors[(i, 0)]).collect();
        let mut dpsi2_total = 0.0;
        let mut phi_psi = vec![0.0; b];
        for n in 0..m {
            problem.tensor.apply_mode(n, &psi, &mut phi_psi);
            let mut acc = 0.0;
            for kk in 1..b {
                let mut proj = 0.0;
                for i in 0..b {
                    proj += espec.vectors[(i, kk)] * phi_psi[i];
                }
                acc += proj * proj / ((espec.values[kk] - mu) * (espec.values[kk] - mu));
            }
            dpsi2_total += 4.0 * g2 / phonon_e[n] * acc;
        }

        // gradient of the Gaussian-cutoff profile
        let mut grad2 = 0.0;
        for n in 0..m {
            let dg = -2.0 * alpha2 * s_delta[n] * g;
            let dc = if t > 0.0 { chi_prime(t) * delta[n] / (phonon_e[n] * epsilon * epsilon * t) } else { 0.0 };
            let d_profile = dg * c + g * dc;
            grad2 += d_profile * d_profile;
        }

        let numerator = w * (f_value - shift) + (grad2 + w * dpsi2_total) / (4.0 * alpha4);
        (numerator, w)
    };

    let mut num = 0.0;
    let mut den = 0.0;
    match m {
        1 => {
            for (x, wx) in nodes[0].iter().zip(&weights[0]) {
                let (n_val, w_val) = eval_point(&[*x]);
                num += wx * n_val;
                den += wx * w_val;
            }
        }
        _ => {
            for (x, wx) in nodes[0].iter().zip(&weights[0]) {
                for (y, wy) in nodes[1].iter().zip(&weights[1]) {
                    let (n_val, w_val) = eval_point(&[*x, *y]);
                    num += wx * wy * n_val;
                    den += wx * wy * w_val;
                }
            }
        }
    }
    if !(den > 0.0) {
        return Err(CoreError::QuadratureFailure("trial state has vanishing norm on the grid".into()));
    }
    Ok(num / den)
}

/// Composite Gauss–Legendre rule per axis with panel edges at the cutoff
/// knots `t = 1/2` and `t = 1`.
fn axis_rule(radii: &[f64], quad: &TrialQuadrature) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut all_nodes = Vec::with_capacity(radii.len());
    let mut all_weights = Vec::with_capacity(radii.len());
    let (gl_x, gl_w) = gauss_legendre(quad.nodes_per_panel);
    for &r in radii {
        let mut edges = vec![-r, -r / 2.0];
        let inner = 2 * quad.panels_per_half_axis.max(1);
        for i in 0..=inner {
            edges.push(-r / 2.0 + i as f64 * r / inner as f64);
        }
        edges.push(r);
        edges.sort_by(f64::total_cmp);
        edges.dedup();
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for pair in edges.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (x, w) in gl_x.iter().zip(&gl_w) {
                nodes.push(mid + half * x);
                weights.push(half * w);
            }
        }
        all_nodes.push(nodes);
        all_weights.push(weights);
    }
    (all_nodes, all_weights)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Chebyshev initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let pk = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = pk;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}
