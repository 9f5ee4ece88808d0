//! Fluctuation operators at the Pekar minimizer.
//!
//! `K` is the compact part of the field-functional Hessian: with the
//! reduced resolvent `R = Q (H - mu)^{-1} Q` on the orthogonal complement
//! of the electron ground state,
//!
//! ```text
//! K_{mn} = 4 g^2 e_m^{-1/2} e_n^{-1/2} (Phi_m psi)^T R (Phi_n psi),
//! ```
//!
//! and the Hessian of `F` at the minimizer equals `2 (1 - K)`. The decisive
//! correctness test is the finite-difference Hessian oracle in the test
//! suite. `L` is the companion Gram operator controlling the cubic
//! remainder, and the quantum correction is `1/2 Tr(1 - sqrt(1 - K))`.

mod checks;

pub use checks::{
    directional_quadratic_limit, global_bound_check, lipschitz_trace_check,
    local_expansion_check, GlobalBoundReport, LipschitzTraceReport, LocalExpansionReport,
};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::linalg::{log_log_fit, sym_eigen};
use crate::pekar::{PekarProblem, PekarSolution};
use crate::spectral::unit_ball_volume;

/// Assemble `K` from the eigendecomposition of the electron Hamiltonian at
/// the minimizer.
pub fn assemble_k(problem: &PekarProblem, solution: &PekarSolution) -> Result<DMatrix<f64>> {
    if !(solution.gap > problem.degenerate_tol) {
        return Err(CoreError::DegenerateGap { gap: solution.gap, tol: problem.degenerate_tol });
    }
    let b = problem.b;
    let m = problem.m;
    let h = problem.electron_hamiltonian(&solution.lambda);
    let spec = sym_eigen(&h);
    let mu = spec.values[0];
    // coupling vectors in the excited eigenbasis: (u_k^T Phi_n psi), k >= 2
    let mut coupled = DMatrix::zeros(b - 1, m);
    let mut phi_psi = vec![0.0; b];
    for n in 0..m {
        problem.tensor.apply_mode(n, &solution.psi, &mut phi_psi);
        for k in 1..b {
            let mut acc = 0.0;
            for i in 0..b {
                acc += spec.vectors[(i, k)] * phi_psi[i];
            }
            coupled[(k - 1, n)] = acc;
        }
    }
    let g2 = problem.g * problem.g;
    let mut k_mat = DMatrix::zeros(m, m);
    for a in 0..m {
        for c in 0..=a {
            let mut acc = 0.0;
            for k in 1..b {
                acc += coupled[(k - 1, a)] * coupled[(k - 1, c)] / (spec.values[k] - mu);
            }
            let v = 4.0 * g2 * acc
                / (problem.basis.eigenvalue(a) * problem.basis.eigenvalue(c)).sqrt();
            k_mat[(a, c)] = v;
            k_mat[(c, a)] = v;
        }
    }
    Ok(k_mat)
}

/// Assemble `L_{mn} = 4 e_m^{-1/2} e_n^{-1/2} sum_k e_k^{-1}
/// (Phi_m psi)_k (Phi_n psi)_k`, the sum running over the full electron
/// basis. Positive semidefinite by its Gram structure.
pub fn assemble_l(problem: &PekarProblem, solution: &PekarSolution) -> DMatrix<f64> {
    let b = problem.b;
    let m = problem.m;
    let mut columns = DMatrix::zeros(b, m);
    let mut phi_psi = vec![0.0; b];
    for n in 0..m {
        problem.tensor.apply_mode(n, &solution.psi, &mut phi_psi);
        for k in 0..b {
            columns[(k, n)] = phi_psi[k] / problem.basis.eigenvalue(k).sqrt();
        }
    }
    let mut l = DMatrix::zeros(m, m);
    for a in 0..m {
        for c in 0..=a {
            let mut acc = 0.0;
            for k in 0..b {
                acc += columns[(k, a)] * columns[(k, c)];
            }
            let v = 4.0 * acc / (problem.basis.eigenvalue(a) * problem.basis.eigenvalue(c)).sqrt();
            l[(a, c)] = v;
            l[(c, a)] = v;
        }
    }
    l
}

/// `1/2 Tr(1 - sqrt(1 - K))` with a tail estimate for the modes beyond `M`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QuantumCorrection {
    pub value: f64,
    /// Extrapolated contribution of modes beyond the truncation, from the
    /// fitted power law of the spectrum, with a 2x safety factor.
    pub tail_bound: f64,
    /// Fitted exponent of `k_j` against `e_j` (expect around -2 or steeper).
    pub fitted_exponent: f64,
}

/// Evaluate the correction by symmetric eigendecomposition. Any eigenvalue
/// of `K` at or above 1 is out of the stable-Hessian regime and an error.
///
/// The tail is estimated by fitting `k_j ~ C e_j^p` on the last third of
/// the descending spectrum, continuing `e_j` beyond the truncation with the
/// basis eigenvalues where available and the leading Weyl growth beyond.
pub fn quantum_correction(
    k: &DMatrix<f64>,
    problem: &PekarProblem,
) -> Result<QuantumCorrection> {
    let mut spectrum = crate::linalg::sym_eigenvalues(k);
    spectrum.reverse(); // descending
    for &v in &spectrum {
        if v >= 1.0 {
            return Err(CoreError::OutOfRegime { value: v });
        }
    }
    let m = spectrum.len();
    let value: f64 = spectrum.iter().map(|&kj| 0.5 * (1.0 - (1.0 - kj.max(0.0)).sqrt())).sum();

    // power-law fit on the last third of strictly positive eigenvalues
    let start = m - (m / 3).max(2.min(m - 1));
    let phonon_e = problem.phonon_eigenvalues();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for j in start..m {
        if spectrum[j] > 1e-300 {
            xs.push(phonon_e[j]);
            ys.push(spectrum[j]);
        }
    }
    if xs.len() < 2 {
        return Ok(QuantumCorrection { value, tail_bound: 0.0, fitted_exponent: f64::NEG_INFINITY });
    }
    let (p, _) = log_log_fit(&xs, &ys);
    let c = ys.last().unwrap() / xs.last().unwrap().powf(p);

    // continue e_j beyond M: explicit basis modes first, then an integral
    // remainder on the Weyl-inverted growth e_j ~ (j / c_d)^{2/d}
    let d = problem.basis.domain.dim();
    let weyl_c = unit_ball_volume(d) * problem.basis.domain.volume()
        / (2.0 * std::f64::consts::PI).powi(d as i32);
    let mut tail = 0.0;
    for j in m..problem.basis.len() {
        let kj = (c * problem.basis.eigenvalue(j).powf(p)).min(spectrum[m - 1]);
        tail += 0.5 * (1.0 - (1.0 - kj).sqrt());
    }
    let growth = 2.0 * p / d as f64;
    if growth < -1.0 {
        // 1 - sqrt(1-k) <= k for k in [0,1), so the remainder is bounded by
        // (1/2) sum_{j > j0} c (j/c_d)^{2p/d} ~ integral comparison
        let j0 = problem.basis.len().max(m) as f64;
        let k_at_j0 = c * (j0 / weyl_c).powf(growth);
        tail += 0.5 * k_at_j0 * j0 / (-growth - 1.0);
    } else {
        // non-summable fit exponent: report an infinite bound rather than
        // a silently truncated one
        tail = f64::INFINITY;
    }
    Ok(QuantumCorrection { value, tail_bound: 2.0 * tail, fitted_exponent: p })
}

/// `K`, `L`, the correction and regime diagnostics in one bundle.
#[derive(Debug, Clone)]
pub struct FluctuationOperators {
    pub k: DMatrix<f64>,
    pub l: DMatrix<f64>,
    /// Eigenvalues of `K`, descending.
    pub k_spectrum: Vec<f64>,
    pub correction: QuantumCorrection,
}

impl FluctuationOperators {
    pub fn assemble(problem: &PekarProblem, solution: &PekarSolution) -> Result<Self> {
        let k = assemble_k(problem, solution)?;
        let l = assemble_l(problem, solution);
        let correction = quantum_correction(&k, problem)?;
        let mut k_spectrum = crate::linalg::sym_eigenvalues(&k);
        k_spectrum.reverse();
        Ok(FluctuationOperators { k, l, k_spectrum, correction })
    }

    /// Distance of `||K||` from 1; positive in the stable regime.
    pub fn regime_margin(&self) -> f64 {
        1.0 - self.k_spectrum.first().copied().unwrap_or(0.0)
    }
}
