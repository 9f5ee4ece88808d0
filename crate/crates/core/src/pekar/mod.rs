//! Truncated classical Pekar minimization.
//!
//! The classical energy over an electron vector `psi` (length B, unit norm)
//! and a field coordinate vector `lambda` (length M) is
//!
//! ```text
//! E(psi, lambda) = psi^T diag(e) psi
//!                  - 2 g sum_n lambda_n e_n^{-1/2} psi^T Phi_n psi
//!                  + |lambda|^2 ,
//! ```
//!
//! with `(Phi_n)_{ij} = T_{ijn}` the multiplication operators from the
//! overlap tensor. Minimizing over `psi` at fixed field gives the field
//! functional `F(lambda)`; minimizing over the field at fixed `psi` gives
//! the electron functional; the joint minimum is the Pekar energy.
//!
//! The minimizer is found by damped fixed-point iteration on the
//! self-consistency map `lambda_n = g e_n^{-1/2} psi^T Phi_n psi`, with a
//! gradient-descent restart available as an independent cross-check.

mod hessian;

pub use hessian::{electron_hessian, ElectronHessian, HessianRange};

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{CoreError, Result};
use crate::linalg::{stream_rng, sym_eigen};
use crate::spectral::{OverlapTensor, SpectralBasis};

/// Problem data for the truncated minimization. Immutable once built;
/// solver runs borrow it concurrently.
#[derive(Debug, Clone)]
pub struct PekarProblem {
    pub basis: Arc<SpectralBasis>,
    pub tensor: Arc<OverlapTensor>,
    /// Electron basis size.
    pub b: usize,
    /// Phonon mode count.
    pub m: usize,
    /// Coupling multiplier; 1 is the physical model, 0 decouples.
    pub g: f64,
    /// Fixed-point damping in (0, 1].
    pub theta: f64,
    pub tol_residual: f64,
    pub tol_energy: f64,
    pub max_iterations: usize,
    pub degenerate_tol: f64,
}

impl PekarProblem {
    pub fn new(
        basis: Arc<SpectralBasis>,
        tensor: Arc<OverlapTensor>,
        b: usize,
        m: usize,
        g: f64,
    ) -> Result<Self> {
        if b == 0 || m == 0 || b > basis.len() || m > basis.len() {
            return Err(CoreError::OutOfBounds { b, m, available: basis.len() });
        }
        if tensor.b < b || tensor.m < m {
            return Err(CoreError::OutOfBounds { b, m, available: tensor.m.min(tensor.b) });
        }
        if !(g >= 0.0) {
            return Err(CoreError::InvalidInput("coupling multiplier must be >= 0".into()));
        }
        Ok(PekarProblem {
            basis,
            tensor,
            b,
            m,
            g,
            theta: 0.5,
            tol_residual: 1e-12,
            tol_energy: 1e-13,
            max_iterations: 10_000,
            degenerate_tol: 1e-10,
        })
    }

    /// Electron eigenvalues `e_1..e_B`.
    pub fn electron_eigenvalues(&self) -> Vec<f64> {
        self.basis.eigenvalues(self.b)
    }

    /// Phonon eigenvalues `e_1..e_M`.
    pub fn phonon_eigenvalues(&self) -> Vec<f64> {
        self.basis.eigenvalues(self.m)
    }

    /// `H(lambda) = diag(e) - 2 g sum_n lambda_n e_n^{-1/2} Phi_n`.
    pub fn electron_hamiltonian(&self, lambda: &[f64]) -> DMatrix<f64> {
        assert_eq!(lambda.len(), self.m);
        let mut h = DMatrix::zeros(self.b, self.b);
        for i in 0..self.b {
            h[(i, i)] = self.basis.eigenvalue(i);
        }
        for (n, &ln) in lambda.iter().enumerate() {
            if ln == 0.0 || self.g == 0.0 {
                continue;
            }
            let c = -2.0 * self.g * ln / self.basis.eigenvalue(n).sqrt();
            for i in 0..self.b {
                for j in 0..=i {
                    let v = c * self.tensor.get(i, j, n);
                    h[(i, j)] += v;
                    if i != j {
                        h[(j, i)] += v;
                    }
                }
            }
        }
        h
    }

    /// Self-consistent field coordinates for a given electron state:
    /// `lambda_n = g e_n^{-1/2} psi^T Phi_n psi`.
    pub fn field_response(&self, psi: &[f64]) -> Vec<f64> {
        (0..self.m)
            .map(|n| self.g / self.basis.eigenvalue(n).sqrt() * self.tensor.quadratic_form(n, psi))
            .collect()
    }

    /// Field functional `F(lambda) = |lambda|^2 + inf spec H(lambda)`.
    pub fn field_functional(&self, lambda: &[f64]) -> f64 {
        let h = self.electron_hamiltonian(lambda);
        let mu = crate::linalg::sym_eigenvalues(&h)[0];
        mu + lambda.iter().map(|l| l * l).sum::<f64>()
    }

    /// The three functional values at `(psi, lambda)`:
    /// the joint energy `E`, the electron functional
    /// `EP(psi) = min_lambda E`, and the field functional `FP(lambda)`.
    pub fn functional_values(&self, psi: &[f64], lambda: &[f64]) -> FunctionalValues {
        assert_eq!(psi.len(), self.b);
        let kinetic: f64 = psi.iter().enumerate().map(|(i, &p)| self.basis.eigenvalue(i) * p * p).sum();
        let response = self.field_response(psi);
        let cross: f64 = lambda.iter().zip(&response).map(|(&l, &r)| l * r).sum();
        let field_norm: f64 = lambda.iter().map(|l| l * l).sum();
        let e = kinetic - 2.0 * cross + field_norm;
        // minimizing field is the response itself
        let ep = kinetic - response.iter().map(|r| r * r).sum::<f64>();
        let fp = self.field_functional(lambda);
        FunctionalValues { e, ep, fp }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FunctionalValues {
    /// Joint classical energy `E(psi, lambda)`.
    pub e: f64,
    /// Electron functional, i.e. `E` minimized over the field.
    pub ep: f64,
    /// Field functional, i.e. `E` minimized over the electron.
    pub fp: f64,
}

/// Lowest eigenpair of a symmetric matrix with the spectral gap.
#[derive(Debug, Clone)]
pub struct GroundState {
    pub mu: f64,
    pub psi: Vec<f64>,
    pub gap: f64,
}

/// Lowest eigenpair, phase-fixed so the first nonzero coefficient is
/// positive. A gap below `degenerate_tol` is an error: the reduced
/// resolvent downstream would be singular.
pub fn ground_state(h: &DMatrix<f64>, degenerate_tol: f64) -> Result<GroundState> {
    let spec = sym_eigen(h);
    let mu = spec.values[0];
    let gap = if spec.values.len() > 1 { spec.values[1] - mu } else { f64::INFINITY };
    if gap < degenerate_tol {
        return Err(CoreError::DegenerateGap { gap, tol: degenerate_tol });
    }
    let mut psi: Vec<f64> = spec.vectors.column(0).iter().copied().collect();
    fix_phase(&mut psi);
    Ok(GroundState { mu, psi, gap })
}

pub(crate) fn fix_phase(psi: &mut [f64]) {
    for &p in psi.iter() {
        if p.abs() > 1e-12 {
            if p < 0.0 {
                for q in psi.iter_mut() {
                    *q = -*q;
                }
            }
            return;
        }
    }
}

/// Converged minimizer data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PekarSolution {
    /// Field coordinates of the minimizer.
    pub lambda: Vec<f64>,
    /// Electron ground state at the minimizing field, unit norm.
    pub psi: Vec<f64>,
    /// Pekar energy.
    pub energy: f64,
    /// Electron ground eigenvalue.
    pub mu: f64,
    /// Electron spectral gap at the minimizer.
    pub gap: f64,
    /// Sup-norm of the final fixed-point residual.
    pub residual: f64,
    pub iterations: usize,
    /// Field-functional value per iteration.
    pub energy_trajectory: Vec<f64>,
}

/// Starting point for the fixed-point iteration.
#[derive(Debug, Clone)]
pub enum ScfInit {
    Zero,
    Vector(Vec<f64>),
    Seed(u64),
}

/// Damped self-consistent field iteration
/// `lambda <- (1 - theta) lambda + theta lambda_new(psi(lambda))`.
pub fn scf_solve(problem: &PekarProblem, init: ScfInit) -> Result<PekarSolution> {
    let mut lambda = match init {
        ScfInit::Zero => vec![0.0; problem.m],
        ScfInit::Vector(v) => {
            if v.len() != problem.m {
                return Err(CoreError::InvalidInput(format!(
                    "initial field has length {}, expected {}",
                    v.len(),
                    problem.m
                )));
            }
            v
        }
        ScfInit::Seed(seed) => {
            let mut rng = stream_rng(seed, 0);
            (0..problem.m).map(|_| rng.random_range(-1.0..1.0)).collect()
        }
    };
    let mut trajectory = Vec::new();
    let mut last_energy = f64::INFINITY;
    let mut residual = f64::INFINITY;
    for iteration in 1..=problem.max_iterations {
        let h = problem.electron_hamiltonian(&lambda);
        let gs = ground_state(&h, problem.degenerate_tol)?;
        let lambda_new = problem.field_response(&gs.psi);
        residual = lambda
            .iter()
            .zip(&lambda_new)
            .map(|(&a, &b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        let energy = gs.mu + lambda.iter().map(|l| l * l).sum::<f64>();
        trajectory.push(energy);
        let converged = residual < problem.tol_residual && (energy - last_energy).abs() < problem.tol_energy;
        last_energy = energy;
        if converged {
            // evaluate everything at the converged field
            let h = problem.electron_hamiltonian(&lambda);
            let gs = ground_state(&h, problem.degenerate_tol)?;
            let energy = gs.mu + lambda.iter().map(|l| l * l).sum::<f64>();
            return Ok(PekarSolution {
                lambda,
                psi: gs.psi,
                energy,
                mu: gs.mu,
                gap: gs.gap,
                residual,
                iterations: iteration,
                energy_trajectory: trajectory,
            });
        }
        for (l, &ln) in lambda.iter_mut().zip(&lambda_new) {
            *l = (1.0 - problem.theta) * *l + problem.theta * ln;
        }
    }
    Err(CoreError::NonConvergence {
        iterations: problem.max_iterations,
        residual,
        trajectory,
    })
}

/// Plain projected gradient descent on `F(lambda)`, kept as an independent
/// cross-check of the fixed-point route. The gradient of the field
/// functional is `2 lambda - 2 lambda_new(psi(lambda))` by first-order
/// perturbation theory.
pub fn gradient_descent_solve(
    problem: &PekarProblem,
    init: ScfInit,
    step: f64,
    max_iterations: usize,
) -> Result<PekarSolution> {
    let mut relaxed = problem.clone();
    relaxed.max_iterations = max_iterations;
    let mut lambda = match init {
        ScfInit::Zero => vec![0.0; problem.m],
        ScfInit::Vector(v) => v,
        ScfInit::Seed(seed) => {
            let mut rng = stream_rng(seed, 0);
            (0..problem.m).map(|_| rng.random_range(-1.0..1.0)).collect()
        }
    };
    let mut trajectory = Vec::new();
    let mut residual = f64::INFINITY;
    for iteration in 1..=max_iterations {
        let h = problem.electron_hamiltonian(&lambda);
        let gs = ground_state(&h, problem.degenerate_tol)?;
        let lambda_new = problem.field_response(&gs.psi);
        residual = lambda
            .iter()
            .zip(&lambda_new)
            .map(|(&a, &b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        trajectory.push(gs.mu + lambda.iter().map(|l| l * l).sum::<f64>());
        if residual < problem.tol_residual {
            let energy = gs.mu + lambda.iter().map(|l| l * l).sum::<f64>();
            return Ok(PekarSolution {
                lambda,
                psi: gs.psi,
                energy,
                mu: gs.mu,
                gap: gs.gap,
                residual,
                iterations: iteration,
                energy_trajectory: trajectory,
            });
        }
        for (l, &ln) in lambda.iter_mut().zip(&lambda_new) {
            *l -= step * 2.0 * (*l - ln);
        }
    }
    Err(CoreError::NonConvergence { iterations: max_iterations, residual, trajectory })
}

impl PekarSolution {
    /// Residual of the self-consistency identity
    /// `lambda_n = g e_n^{-1/2} psi^T Phi_n psi`.
    pub fn fixed_point_residual(&self, problem: &PekarProblem) -> f64 {
        problem
            .field_response(&self.psi)
            .iter()
            .zip(&self.lambda)
            .map(|(&a, &b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `psi(x)` reconstructed on a uniform interior grid; used to report
    /// pointwise positivity, which cannot be imposed coordinate-wise.
    pub fn psi_min_on_grid(&self, problem: &PekarProblem, points_per_axis: usize) -> f64 {
        let d = problem.basis.domain.dim();
        let lengths = &problem.basis.domain.lengths;
        let mut min = f64::INFINITY;
        let total = points_per_axis.pow(d as u32);
        for flat in 0..total {
            let mut x = vec![0.0; d];
            let mut rest = flat;
            for a in 0..d {
                let i = rest % points_per_axis;
                rest /= points_per_axis;
                x[a] = (i as f64 + 0.5) * lengths[a] / points_per_axis as f64;
            }
            let mut v = 0.0;
            for (n, &c) in self.psi.iter().enumerate() {
                v += c * problem.basis.eval(n, &x);
            }
            min = min.min(v);
        }
        min
    }
}

/// Clustered outcome of multi-start minimization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UniquenessReport {
    /// One representative `(energy, lambda)` per cluster.
    pub minima: Vec<(f64, Vec<f64>)>,
    /// How many starts landed in each cluster.
    pub basin_counts: Vec<usize>,
    /// Starts that failed to converge (error messages).
    pub failures: Vec<String>,
}

/// Run the solver from `n_starts` seeded random initializations and cluster
/// the converged minimizers with an l-infinity threshold of 1e-6.
pub fn uniqueness_probe(problem: &PekarProblem, n_starts: usize, seed: u64) -> Result<UniquenessReport> {
    if n_starts < 2 {
        return Err(CoreError::InvalidInput("uniqueness probe needs n_starts >= 2".into()));
    }
    use rayon::prelude::*;
    let runs: Vec<std::result::Result<PekarSolution, String>> = (0..n_starts)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64 + 1);
            let init: Vec<f64> = (0..problem.m).map(|_| rng.random_range(-2.0..2.0)).collect();
            scf_solve(problem, ScfInit::Vector(init)).map_err(|e| e.to_string())
        })
        .collect();
    let mut minima: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut basin_counts: Vec<usize> = Vec::new();
    let mut failures = Vec::new();
    for run in runs {
        match run {
            Ok(sol) => {
                let found = minima.iter().position(|(_, lam)| {
                    lam.iter()
                        .zip(&sol.lambda)
                        .map(|(&a, &b)| (a - b).abs())
                        .fold(0.0f64, f64::max)
                        < 1e-6
                });
                match found {
                    Some(i) => basin_counts[i] += 1,
                    None => {
                        minima.push((sol.energy, sol.lambda));
                        basin_counts.push(1);
                    }
                }
            }
            Err(msg) => failures.push(msg),
        }
    }
    Ok(UniquenessReport { minima, basin_counts, failures })
}
