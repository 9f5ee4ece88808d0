//! Hessian of the electron functional at the minimizer.
//!
//! In electron coordinates, with `c_k = psi^T Phi_k psi` and the resolvent
//! weights `e_k^{-1}`, the second variation of the electron functional
//! around the constrained minimizer assembles to
//!
//! ```text
//! Z = diag(e) + V - 4 X - mu I - 4 D |psi><psi|
//!     + 4 ( |psi><W psi| + |W psi><psi| )
//! ```
//!
//! where `V` is the converged self-consistent potential (field range `M`),
//! `X_{ij} = g^2 sum_k e_k^{-1} (Phi_k psi)_i (Phi_k psi)_j`,
//! `(W psi)_i = g^2 sum_k e_k^{-1} c_k (Phi_k psi)_i` and
//! `D = g^2 sum_k e_k^{-1} c_k^2`. The cancellation `Z psi = 0` holds
//! exactly for any resolvent range `k in S`, because the `X`, `D` and
//! rank-one contributions cancel mode by mode while the remaining terms
//! reduce to the Euler–Lagrange equation.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::linalg::sym_eigenvalues;
use crate::pekar::{PekarProblem, PekarSolution};

/// Mode range for the inverse-Laplacian sums inside `X`, `D` and the
/// rank-one terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HessianRange {
    /// All modes the overlap tensor covers; lowest truncation bias.
    FullBasis,
    /// Only the `M` phonon modes of the model, matching the Fock oracle.
    PhononTruncated,
}

#[derive(Debug, Clone)]
pub struct ElectronHessian {
    pub z: DMatrix<f64>,
    /// Full spectrum, ascending.
    pub spectrum: Vec<f64>,
    /// `||Z psi||`, which vanishes identically up to rounding.
    pub kernel_residual: f64,
}

/// Assemble the electron Hessian at a converged solution.
pub fn electron_hessian(
    problem: &PekarProblem,
    solution: &PekarSolution,
    range: HessianRange,
) -> Result<ElectronHessian> {
    if !(solution.residual <= problem.tol_residual * 10.0) {
        return Err(CoreError::InvalidInput(format!(
            "electron Hessian needs a converged solution (residual {:.3e})",
            solution.residual
        )));
    }
    let b = problem.b;
    let tensor = &problem.tensor;
    let k_range = match range {
        HessianRange::FullBasis => tensor.m,
        HessianRange::PhononTruncated => problem.m,
    };
    let g2 = problem.g * problem.g;
    let psi = &solution.psi;

    // diag(e) + V with the converged potential (field range M)
    let mut z = problem.electron_hamiltonian(&solution.lambda);
    for i in 0..b {
        z[(i, i)] -= solution.mu;
    }

    let mut w_psi = vec![0.0; b];
    let mut d = 0.0;
    let mut phi_psi = vec![0.0; b];
    for k in 0..k_range {
        let ek = problem.basis.eigenvalue(k);
        tensor.apply_mode(k, psi, &mut phi_psi);
        let ck: f64 = phi_psi.iter().zip(psi).map(|(&a, &b)| a * b).sum();
        let weight = g2 / ek;
        d += weight * ck * ck;
        for i in 0..b {
            w_psi[i] += weight * ck * phi_psi[i];
            // -4 X
            for j in 0..=i {
                let v = -4.0 * weight * phi_psi[i] * phi_psi[j];
                z[(i, j)] += v;
                if i != j {
                    z[(j, i)] += v;
                }
            }
        }
    }
    for i in 0..b {
        for j in 0..b {
            z[(i, j)] += -4.0 * d * psi[i] * psi[j] + 4.0 * (psi[i] * w_psi[j] + w_psi[i] * psi[j]);
        }
    }

    let spectrum = sym_eigenvalues(&z);
    let mut res = 0.0;
    for i in 0..b {
        let mut acc = 0.0;
        for j in 0..b {
            acc += z[(i, j)] * psi[j];
        }
        res += acc * acc;
    }
    Ok(ElectronHessian { z, spectrum, kernel_residual: res.sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pekar::{scf_solve, ScfInit};
    use crate::spectral::{build_basis, triple_overlap, DomainSpec, ModeSelector};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn problem(b: usize, m: usize, g: f64) -> PekarProblem {
        let domain = DomainSpec::interval(PI).unwrap();
        let n = b.max(m) + 6;
        let basis = Arc::new(build_basis(&domain, ModeSelector::Count(n)).unwrap());
        let tensor = Arc::new(triple_overlap(&basis, b.max(m).max(1), n).unwrap());
        PekarProblem::new(basis, tensor, b, m, g).unwrap()
    }

    #[test]
    fn decoupled_hessian_is_shifted_laplacian() {
        let p = problem(5, 2, 0.0);
        let sol = scf_solve(&p, ScfInit::Zero).unwrap();
        let h = electron_hessian(&p, &sol, HessianRange::FullBasis).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let expected = if i == j { ((i + 1) * (i + 1)) as f64 - 1.0 } else { 0.0 };
                assert!((h.z[(i, j)] - expected).abs() < 1e-13);
            }
        }
        assert!(h.kernel_residual < 1e-14);
        assert!((h.spectrum[1] - 3.0).abs() < 1e-12); // e_2 - e_1
    }

    #[test]
    fn kernel_residual_vanishes_in_both_ranges() {
        let p = problem(10, 4, 1.0);
        let sol = scf_solve(&p, ScfInit::Zero).unwrap();
        for range in [HessianRange::FullBasis, HessianRange::PhononTruncated] {
            let h = electron_hessian(&p, &sol, range).unwrap();
            assert!(h.kernel_residual <= 1e-8, "{range:?}: {}", h.kernel_residual);
            // second eigenvalue is the empirical curvature surrogate
            assert!(h.spectrum[0].abs() < 1e-8);
            assert!(h.spectrum[1] > 0.0);
        }
    }

    #[test]
    fn hessian_matches_finite_differences_of_electron_functional() {
        // oracle: central differences of EP(psi/|psi|) along coordinate
        // directions around the minimizer, PhononTruncated range
        let p = problem(6, 3, 1.0);
        let sol = scf_solve(&p, ScfInit::Zero).unwrap();
        let h = electron_hessian(&p, &sol, HessianRange::PhononTruncated).unwrap();
        let ep = |psi: &[f64]| -> f64 {
            let norm: f64 = psi.iter().map(|v| v * v).sum::<f64>().sqrt();
            let psi: Vec<f64> = psi.iter().map(|v| v / norm).collect();
            let kinetic: f64 =
                psi.iter().enumerate().map(|(i, &v)| p.basis.eigenvalue(i) * v * v).sum();
            let mut interaction = 0.0;
            for k in 0..p.m {
                let c = p.tensor.quadratic_form(k, &psi);
                interaction += c * c / p.basis.eigenvalue(k);
            }
            kinetic - p.g * p.g * interaction
        };
        let step = 1e-4;
        for a in 0..p.b {
            for b in 0..p.b {
                let fd = |hh: f64| {
                    let mut pp = sol.psi.clone();
                    let mut pm = sol.psi.clone();
                    let mut mp = sol.psi.clone();
                    let mut mm = sol.psi.clone();
                    pp[a] += hh;
                    pp[b] += hh;
                    pm[a] += hh;
                    pm[b] -= hh;
                    mp[a] -= hh;
                    mp[b] += hh;
                    mm[a] -= hh;
                    mm[b] -= hh;
                    (ep(&pp) - ep(&pm) - ep(&mp) + ep(&mm)) / (4.0 * hh * hh)
                };
                let richardson = (4.0 * fd(step / 2.0) - fd(step)) / 3.0;
                // quadratic form of EP has Hessian 2 Z
                let expected = 2.0 * h.z[(a, b)];
                assert!(
                    (richardson - expected).abs() < 2e-5,
                    "({a},{b}): fd {richardson} vs 2Z {expected}"
                );
            }
        }
    }

    #[test]
    fn unconverged_solution_is_rejected() {
        let p = problem(6, 3, 1.0);
        let mut sol = scf_solve(&p, ScfInit::Zero).unwrap();
        sol.residual = 1.0;
        assert!(electron_hessian(&p, &sol, HessianRange::FullBasis).is_err());
    }
}
