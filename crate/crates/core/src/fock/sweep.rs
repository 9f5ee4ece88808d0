//! Strong-coupling sweep against the trace formula, coupling monotonicity,
//! and operator-inequality diagnostics on the truncated space.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::fock::{assemble_hamiltonian, lowest_eigenvalue, Frame, SolveOptions, TruncatedModel};
use crate::linalg::{linear_fit, min_eig_difference};
use crate::pekar::{PekarProblem, PekarSolution};
use crate::spectral::sine_product_integral;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPoint {
    pub alpha: f64,
    pub dimension: usize,
    pub p: usize,
    pub e0: f64,
    pub residual: f64,
    /// `alpha^2 (e_pekar - E0)`.
    pub delta: f64,
}

/// Least-squares fit of the rescaled energy difference.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepFit {
    pub points: Vec<SweepPoint>,
    /// Intercept of `delta = c0 + c1 / alpha`.
    pub c0: f64,
    pub c1: f64,
    pub stderr: f64,
    /// Intercept refit with the slower `alpha^{-2/11}` model, reported to
    /// expose the model sensitivity of the extrapolation.
    pub c0_slow_model: f64,
    /// Pekar energy of the matching truncation.
    pub e_pekar: f64,
}

/// Run the alpha sweep in the displaced frame and fit
/// `Delta(alpha) = c0 + c1/alpha`.
///
/// Each energy is solved at cutoff `p0` and again at `2 p0`; the doubled
/// value enters the fit and the difference must stay below
/// `0.1 * tol * alpha^{-2}`, otherwise the unconverged alpha is reported.
pub fn asymptotic_fit(
    problem: &PekarProblem,
    solution: &PekarSolution,
    alphas: &[f64],
    p0: usize,
    tol: f64,
    solve: &SolveOptions,
) -> Result<SweepFit> {
    if alphas.len() < 3 || alphas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CoreError::InvalidInput(
            "need at least three strictly increasing alphas".into(),
        ));
    }
    let points: Vec<SweepPoint> = alphas
        .par_iter()
        .map(|&alpha| -> Result<SweepPoint> {
            let model = TruncatedModel::new(
                alpha,
                problem.m,
                problem.b,
                p0,
                problem.g,
                Frame::Displaced(solution.lambda.clone()),
                problem.basis.clone(),
                problem.tensor.clone(),
            )?;
            let coarse = lowest_eigenvalue(&assemble_hamiltonian(&model)?, solve)?;
            let doubled = model.with_cutoff(2 * p0);
            let fine = lowest_eigenvalue(&assemble_hamiltonian(&doubled)?, solve)?;
            let change = (coarse.e0 - fine.e0).abs();
            let target = 0.1 * tol / (alpha * alpha);
            if change > target {
                return Err(CoreError::CutoffNotConverged { alpha, change, target });
            }
            Ok(SweepPoint {
                alpha,
                dimension: fine.dimension,
                p: 2 * p0,
                e0: fine.e0,
                residual: fine.residual,
                delta: alpha * alpha * (solution.energy - fine.e0),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let x: Vec<f64> = points.iter().map(|p| 1.0 / p.alpha).collect();
    let y: Vec<f64> = points.iter().map(|p| p.delta).collect();
    let (c0, c1, stderr) = linear_fit(&x, &y);
    let x_slow: Vec<f64> = points.iter().map(|p| p.alpha.powf(-2.0 / 11.0)).collect();
    let (c0_slow, _, _) = linear_fit(&x_slow, &y);
    Ok(SweepFit { points, c0, c1, stderr, c0_slow_model: c0_slow, e_pekar: solution.energy })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub multipliers: Vec<f64>,
    pub energies: Vec<f64>,
    /// Largest increase along the grid; nonpositive means monotone.
    pub max_increase: f64,
}

/// Ground energy along an increasing grid of coupling multipliers on one
/// mode; the energy must be non-increasing.
pub fn coupling_monotonicity_check(
    base: &TruncatedModel,
    mode_index: usize,
    multipliers: &[f64],
    solve: &SolveOptions,
) -> Result<MonotonicityReport> {
    if mode_index >= base.m {
        return Err(CoreError::InvalidInput("mode index out of range".into()));
    }
    if multipliers.windows(2).any(|w| w[0] > w[1]) || multipliers.iter().any(|&s| s < 0.0) {
        return Err(CoreError::InvalidInput(
            "multipliers must be nonnegative and increasing".into(),
        ));
    }
    if base.frame != Frame::Bare {
        return Err(CoreError::InvalidInput(
            "coupling monotonicity is a bare-frame statement".into(),
        ));
    }
    let energies: Vec<f64> = multipliers
        .par_iter()
        .map(|&s| -> Result<f64> {
            let mut model = base.clone();
            model.coupling_scale[mode_index] = s;
            Ok(lowest_eigenvalue(&assemble_hamiltonian(&model)?, solve)?.e0)
        })
        .collect::<Result<Vec<_>>>()?;
    let max_increase = energies
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(MonotonicityReport { multipliers: multipliers.to_vec(), energies, max_increase })
}

/// Smallest eigenvalue of `rhs - lhs`; nonnegative certifies `lhs <= rhs`
/// on the assembled space.
pub fn operator_inequality_check(lhs: &DMatrix<f64>, rhs: &DMatrix<f64>) -> f64 {
    min_eig_difference(lhs, rhs)
}

/// Margins of the commutator-bound instance with a single-mode coupling
/// function `h_x(y) = c phi_mode(x) phi_mode(y)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LiebYamazakiReport {
    /// Margin of `a†(h) a(h) <= coulomb_constant^2 p^2 N`; the constant comes
    /// from the flat-space Coulomb norm, so truncation may push this either
    /// way. Diagnostic only.
    pub margin_coulomb: f64,
    /// Margin of the elementary bound `a†(h) a(h) <= sup_x ||h_x||^2 N`,
    /// which survives Galerkin compression and must be nonnegative.
    pub margin_sup_norm: f64,
    pub dimension: usize,
}

/// Assemble `a†(h)a(h)`, `p^2 N` and `N` on the truncated space and report
/// both inequality margins. `coefficient` is the spectral coefficient `c`
/// of the coupling function, `coulomb_constant` the norm constant entering
/// the kinetic-weighted bound.
pub fn lieb_yamazaki_instance(
    model: &TruncatedModel,
    mode: usize,
    coefficient: f64,
    coulomb_constant: f64,
) -> Result<LiebYamazakiReport> {
    if mode >= model.m {
        return Err(CoreError::InvalidInput("mode index out of range".into()));
    }
    let occupations = crate::fock::enumerate_occupations(model.m, model.p, model.b, model.memory_budget)?;
    let b = model.b;
    let nb = occupations.states.len();
    let dim = b * nb;
    let basis = &model.basis;
    let d = basis.domain.dim();

    // electron matrix of multiplication by phi_mode(x)^2, exact quartic
    // sine integrals per axis
    let mut squared = DMatrix::zeros(b, b);
    for i in 0..b {
        for j in 0..b {
            let mut v = 1.0;
            for a in 0..d {
                let l = basis.domain.lengths[a];
                v *= (2.0 / l) * (2.0 / l).sqrt() * (2.0 / l).sqrt()
                    * sine_product_integral(
                        &[
                            basis.modes()[i].index[a],
                            basis.modes()[mode].index[a],
                            basis.modes()[mode].index[a],
                            basis.modes()[j].index[a],
                        ],
                        l,
                    );
            }
            squared[(i, j)] = v;
        }
    }
    let sup_phi2: f64 = basis.domain.lengths.iter().map(|&l| 2.0 / l).product();
    let inv_alpha2 = 1.0 / (model.alpha * model.alpha);

    let mut lhs = DMatrix::zeros(dim, dim);
    let mut rhs_coulomb = DMatrix::zeros(dim, dim);
    let mut rhs_sup = DMatrix::zeros(dim, dim);
    for (f, state) in occupations.states.iter().enumerate() {
        let occ: f64 = state.iter().sum::<u32>() as f64;
        let mode_occ = state[mode] as f64;
        for i in 0..b {
            for j in 0..b {
                let (r, c) = (f * b + i, f * b + j);
                // a†(h) a(h) = c^2 M_{phi^2} ⊗ alpha^{-2} d† d  (diagonal in occupation)
                lhs[(r, c)] = coefficient * coefficient * squared[(i, j)] * mode_occ * inv_alpha2;
                if i == j {
                    let number = occ * inv_alpha2;
                    rhs_coulomb[(r, c)] =
                        coulomb_constant * coulomb_constant * basis.eigenvalue(i) * number;
                    rhs_sup[(r, c)] = coefficient * coefficient * sup_phi2 * number;
                }
            }
        }
    }
    Ok(LiebYamazakiReport {
        margin_coulomb: operator_inequality_check(&lhs, &rhs_coulomb),
        margin_sup_norm: operator_inequality_check(&lhs, &rhs_sup),
        dimension: dim,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pekar::{scf_solve, ScfInit};
    use crate::spectral::{build_basis, triple_overlap, DomainSpec, ModeSelector};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn setup(b: usize, m: usize, g: f64) -> (PekarProblem, PekarSolution) {
        let domain = DomainSpec::interval(PI).unwrap();
        let n = b.max(m);
        let basis = Arc::new(build_basis(&domain, ModeSelector::Count(n)).unwrap());
        let tensor = Arc::new(triple_overlap(&basis, n, n).unwrap());
        let problem = PekarProblem::new(basis, tensor, b, m, g).unwrap();
        let solution = scf_solve(&problem, ScfInit::Zero).unwrap();
        (problem, solution)
    }

    #[test]
    fn decoupled_sweep_fits_zero() {
        let (problem, solution) = setup(4, 2, 0.0);
        let fit = asymptotic_fit(&problem, &solution, &[2.0, 3.0, 4.0], 4, 1e-6, &SolveOptions::default())
            .unwrap();
        assert!(fit.c0.abs() < 1e-10, "c0 {}", fit.c0);
        assert!(fit.points.iter().all(|p| p.delta.abs() < 1e-10));
    }

    #[test]
    fn operator_inequality_trivial_cases() {
        let id = DMatrix::identity(3, 3);
        let two = &id * 2.0;
        assert!((operator_inequality_check(&id, &two) - 1.0).abs() < 1e-14);
        assert!(operator_inequality_check(&id, &id).abs() < 1e-14);
    }

    #[test]
    fn monotonicity_constant_and_single_step() {
        let (problem, _) = setup(6, 2, 1.0);
        let model = TruncatedModel::new(
            2.0,
            2,
            6,
            10,
            1.0,
            Frame::Bare,
            problem.basis.clone(),
            problem.tensor.clone(),
        )
        .unwrap();
        // zero multipliers: constant sequence
        let report =
            coupling_monotonicity_check(&model, 0, &[0.0, 0.0], &SolveOptions::default()).unwrap();
        assert!((report.energies[0] - report.energies[1]).abs() < 1e-11);

        // single mode: switched off, the ground energy is exactly e_1, and
        // switching it on can only lower it
        let (problem, _) = setup(6, 1, 1.0);
        let single = TruncatedModel::new(
            2.0,
            1,
            6,
            10,
            1.0,
            Frame::Bare,
            problem.basis.clone(),
            problem.tensor.clone(),
        )
        .unwrap();
        let report =
            coupling_monotonicity_check(&single, 0, &[0.0, 1.0], &SolveOptions::default()).unwrap();
        assert!((report.energies[0] - 1.0).abs() < 1e-9);
        assert!(report.energies[1] <= report.energies[0] + 1e-12);
        assert!(report.max_increase <= 1e-12);
    }

    #[test]
    fn lieb_yamazaki_sup_norm_margin_is_nonnegative() {
        let (problem, _) = setup(4, 1, 1.0);
        let model = TruncatedModel::new(
            2.0,
            1,
            4,
            3,
            1.0,
            Frame::Bare,
            problem.basis.clone(),
            problem.tensor.clone(),
        )
        .unwrap();
        let z = 1.0 / 1.0f64.sqrt(); // e_1^{-1/2} spectral coefficient
        let report = lieb_yamazaki_instance(&model, 0, z, 0.5).unwrap();
        assert_eq!(report.dimension, 16);
        assert!(report.margin_sup_norm >= -1e-12, "margin {}", report.margin_sup_norm);
    }
}
