//! Quadratic-expansion diagnostics around the minimizer: the local cubic
//! remainder, the rough global lower bound, and the Lipschitz trace
//! inequality used to absorb the `L` perturbation.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::linalg::{stream_rng, sym_eigen, trace_fn};
use crate::pekar::{PekarProblem, PekarSolution};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalExpansionReport {
    pub epsilon: f64,
    pub samples: usize,
    pub skipped: usize,
    /// max over samples of |F(lambda+delta) - e - <delta|(1-K)|delta>| / <delta|L|delta>
    pub max_ratio: f64,
}

/// Sample the cubic remainder of the field functional at displacement size
/// `epsilon`, measured in the `(-Delta)^{-1/2}` norm as in the expansion
/// estimate. The ratio against `<delta|L|delta>` should shrink linearly
/// with `epsilon`.
pub fn local_expansion_check(
    problem: &PekarProblem,
    solution: &PekarSolution,
    k: &DMatrix<f64>,
    l: &DMatrix<f64>,
    epsilon: f64,
    samples: usize,
    seed: u64,
) -> Result<LocalExpansionReport> {
    if !(epsilon > 0.0) {
        return Err(CoreError::InvalidInput("epsilon must be positive".into()));
    }
    let m = problem.m;
    let phonon_e = problem.phonon_eigenvalues();
    let results: Vec<Option<f64>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let mut delta: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
            // normalize ||(-Delta)^{-1/2} delta|| = epsilon
            let weighted: f64 = delta.iter().zip(&phonon_e).map(|(&d, &e)| d * d / e).sum();
            let scale = epsilon / weighted.sqrt();
            for d in delta.iter_mut() {
                *d *= scale;
            }
            let lambda: Vec<f64> =
                solution.lambda.iter().zip(&delta).map(|(&a, &b)| a + b).collect();
            let h = problem.electron_hamiltonian(&lambda);
            let gs = match crate::pekar::ground_state(&h, problem.degenerate_tol) {
                Ok(g) => g,
                Err(_) => return None, // degenerate sample: skipped and counted
            };
            let f = gs.mu + lambda.iter().map(|v| v * v).sum::<f64>();
            let mut quad = 0.0;
            let mut l_quad = 0.0;
            for a in 0..m {
                for b in 0..m {
                    let kron = if a == b { 1.0 } else { 0.0 };
                    quad += delta[a] * (kron - k[(a, b)]) * delta[b];
                    l_quad += delta[a] * l[(a, b)] * delta[b];
                }
            }
            Some((f - solution.energy - quad).abs() / l_quad)
        })
        .collect();
    let skipped = results.iter().filter(|r| r.is_none()).count();
    let max_ratio = results.into_iter().flatten().fold(0.0f64, f64::max);
    Ok(LocalExpansionReport { epsilon, samples, skipped, max_ratio })
}

/// Quadratic limit along a single direction:
/// `(F(lambda + t u) - e)/t^2 -> u^T (1-K) u` as `t -> 0`, via Richardson
/// extrapolation. Returns the extrapolated value.
pub fn directional_quadratic_limit(
    problem: &PekarProblem,
    solution: &PekarSolution,
    direction: &[f64],
    t: f64,
) -> f64 {
    let eval = |tt: f64| {
        let lambda: Vec<f64> =
            solution.lambda.iter().zip(direction).map(|(&a, &b)| a + tt * b).collect();
        (problem.field_functional(&lambda) - solution.energy) / (tt * tt)
    };
    // symmetric average kills the cubic term, Richardson the quartic
    let sym = |tt: f64| 0.5 * (eval(tt) + eval(-tt));
    (4.0 * sym(t / 2.0) - sym(t)) / 3.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GlobalBoundReport {
    pub kappa_prime: f64,
    pub samples: usize,
    pub violations: usize,
    pub worst_margin: f64,
    /// Largest kappa' that passes on this sample set, found by bisection.
    pub largest_passing_kappa: f64,
}

/// Check the global quadratic lower bound
/// `F(lambda) >= e + <delta| 1 - (1 + kappa' sqrt(-Delta))^{-1} |delta>`
/// on random fields drawn at scales from near the minimizer to far away.
pub fn global_bound_check(
    problem: &PekarProblem,
    solution: &PekarSolution,
    kappa_prime: f64,
    samples: usize,
    seed: u64,
) -> Result<GlobalBoundReport> {
    if !(kappa_prime > 0.0) {
        return Err(CoreError::InvalidInput("kappa' must be positive".into()));
    }
    let m = problem.m;
    let phonon_e = problem.phonon_eigenvalues();
    // precompute sample data: (delta, F(lambda))
    let draws: Vec<(Vec<f64>, f64)> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let scale = 10f64.powf(rng.random_range(-3.0..1.0));
            let delta: Vec<f64> =
                (0..m).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
            let lambda: Vec<f64> =
                solution.lambda.iter().zip(&delta).map(|(&a, &b)| a + b).collect();
            (delta, problem.field_functional(&lambda))
        })
        .collect();
    let margin = |kappa: f64| -> f64 {
        draws
            .iter()
            .map(|(delta, f)| {
                let quad: f64 = delta
                    .iter()
                    .zip(&phonon_e)
                    .map(|(&d, &e)| d * d * (1.0 - 1.0 / (1.0 + kappa * e.sqrt())))
                    .sum();
                f - solution.energy - quad
            })
            .fold(f64::INFINITY, f64::min)
    };
    let worst = margin(kappa_prime);
    let violations = draws
        .iter()
        .filter(|(delta, f)| {
            let quad: f64 = delta
                .iter()
                .zip(&phonon_e)
                .map(|(&d, &e)| d * d * (1.0 - 1.0 / (1.0 + kappa_prime * e.sqrt())))
                .sum();
            *f - solution.energy - quad < -1e-12
        })
        .count();
    // bisection for the largest passing kappa'
    let mut lo = 0.0;
    let mut hi = 1.0;
    while margin(hi) >= -1e-12 && hi < 1e6 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if margin(mid) >= -1e-12 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(GlobalBoundReport {
        kappa_prime,
        samples,
        violations,
        worst_margin: worst,
        largest_passing_kappa: lo,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LipschitzTraceReport {
    pub nu: f64,
    pub trials: usize,
    pub violations: usize,
    pub min_margin: f64,
}

/// Randomized check of `Tr f(A+B) <= Tr f(A) + C_f Tr B` for
/// `f(t) = 1 - sqrt(1-t)` on PSD pairs with `A + B <= nu`, where
/// `C_f = 1/(2 sqrt(1-nu))` is the Lipschitz constant on `[0, nu]`.
pub fn lipschitz_trace_check(
    nu: f64,
    size: usize,
    trials: usize,
    seed: u64,
) -> Result<LipschitzTraceReport> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(CoreError::InvalidInput("nu must lie in (0, 1)".into()));
    }
    let f = |t: f64| 1.0 - (1.0 - t).sqrt();
    let cf = 0.5 / (1.0 - nu).sqrt();
    let margins: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let gram = |rng: &mut rand_chacha::ChaCha12Rng| -> DMatrix<f64> {
                let g = DMatrix::from_fn(size, size, |_, _| rng.random_range(-1.0..1.0));
                &g * g.transpose()
            };
            let a0 = gram(&mut rng);
            let b0 = gram(&mut rng);
            let sum = &a0 + &b0;
            let top = sym_eigen(&sum).values[size - 1];
            let scale = nu * rng.random_range(0.05..1.0) / top;
            let a = a0 * scale;
            let b = b0 * scale;
            let lhs = trace_fn(&(&a + &b), f);
            let rhs = trace_fn(&a, f) + cf * b.trace();
            rhs - lhs
        })
        .collect();
    let min_margin = margins.iter().copied().fold(f64::INFINITY, f64::min);
    let violations = margins.iter().filter(|&&m| m < -1e-12).count();
    Ok(LipschitzTraceReport { nu, trials, violations, min_margin })
}
