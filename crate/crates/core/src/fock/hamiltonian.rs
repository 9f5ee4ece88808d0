//! Assembly of the truncated Hamiltonian as a matrix-free symmetric
//! operator over electron ⊗ occupation states.
//!
//! With ladder operators normalized to `[d, d^T] = 1`, the bare frame reads
//!
//! ```text
//! H = diag(e) ⊗ I - (g/alpha) sum_n e_n^{-1/2} Phi_n ⊗ (d_n + d_n^T)
//!     + alpha^{-2} I ⊗ sum_n d_n^T d_n ,
//! ```
//!
//! and the coherent displacement `d_n -> d_n + alpha lambda_n` turns this
//! into the same operator written around the classical field `lambda`:
//! the electron block picks up the self-consistent potential and `|lambda|^2`,
//! the linear coupling becomes `g e_n^{-1/2} Phi_n - lambda_n I`, and the
//! number term is unchanged. The two frames are unitarily equivalent before
//! the occupation cutoff, which is the point: around `lambda = lambda_P`
//! the cutoff needed for convergence stays small uniformly in `alpha`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{CoreError, Result};
use crate::fock::{enumerate_occupations, OccupationBasis};
use crate::spectral::{OverlapTensor, SpectralBasis};

/// Ladder-operator frame of the assembly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    Bare,
    /// Coherent shift by the given classical field coordinates (length M).
    Displaced(Vec<f64>),
}

/// Full specification of one quantum oracle instance.
#[derive(Debug, Clone)]
pub struct TruncatedModel {
    pub alpha: f64,
    pub m: usize,
    pub b: usize,
    /// Total-occupation cutoff.
    pub p: usize,
    pub g: f64,
    pub frame: Frame,
    pub basis: Arc<SpectralBasis>,
    pub tensor: Arc<OverlapTensor>,
    /// Per-mode multipliers on the interaction coefficient; used by the
    /// coupling-monotonicity diagnostic. Ones by default.
    pub coupling_scale: Vec<f64>,
    /// Cap on `B * C(M+P, M)` before assembly.
    pub memory_budget: usize,
}

impl TruncatedModel {
    pub fn new(
        alpha: f64,
        m: usize,
        b: usize,
        p: usize,
        g: f64,
        frame: Frame,
        basis: Arc<SpectralBasis>,
        tensor: Arc<OverlapTensor>,
    ) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(CoreError::InvalidInput("alpha must be positive".into()));
        }
        if b == 0 || m == 0 || b > basis.len() || m > basis.len() {
            return Err(CoreError::OutOfBounds { b, m, available: basis.len() });
        }
        if tensor.b < b || tensor.m < m {
            return Err(CoreError::OutOfBounds { b, m, available: tensor.m.min(tensor.b) });
        }
        if let Frame::Displaced(lambda) = &frame {
            if lambda.len() != m {
                return Err(CoreError::InvalidInput(format!(
                    "displacement has length {}, expected {m}",
                    lambda.len()
                )));
            }
        }
        Ok(TruncatedModel {
            alpha,
            m,
            b,
            p,
            g,
            frame,
            basis,
            tensor,
            coupling_scale: vec![1.0; m],
            memory_budget: 60_000_000,
        })
    }

    pub fn with_cutoff(&self, p: usize) -> Self {
        let mut model = self.clone();
        model.p = p;
        model
    }
}

/// Matrix-free symmetric operator. State layout: `x[f * B + i]` with `f`
/// the occupation index and `i` the electron index.
#[derive(Debug, Clone)]
pub struct FockOperator {
    pub dim: usize,
    pub b: usize,
    pub occupations: OccupationBasis,
    /// Electron block: `diag(e)` plus, in the displaced frame, the
    /// self-consistent potential and the `|lambda|^2` shift.
    electron_block: DMatrix<f64>,
    /// Per-mode linear coupling matrices entering as `-(1/alpha) C_n ⊗ (d + d^T)`.
    couplings: Vec<DMatrix<f64>>,
    inv_alpha: f64,
    inv_alpha2: f64,
}

/// Assemble the operator for a model. Fails on the memory budget before
/// allocating anything large.
pub fn assemble_hamiltonian(model: &TruncatedModel) -> Result<FockOperator> {
    let occupations = enumerate_occupations(model.m, model.p, model.b, model.memory_budget)?;
    let b = model.b;
    let mut electron_block = DMatrix::zeros(b, b);
    for i in 0..b {
        electron_block[(i, i)] = model.basis.eigenvalue(i);
    }
    let lambda: Option<&[f64]> = match &model.frame {
        Frame::Bare => None,
        Frame::Displaced(l) => Some(l),
    };
    if let Some(lambda) = lambda {
        let norm2: f64 = lambda.iter().map(|l| l * l).sum();
        for i in 0..b {
            electron_block[(i, i)] += norm2;
        }
        for (n, &ln) in lambda.iter().enumerate() {
            let c = -2.0 * model.g * model.coupling_scale[n] * ln
                / model.basis.eigenvalue(n).sqrt();
            for i in 0..b {
                for j in 0..b {
                    electron_block[(i, j)] += c * model.tensor.get(i, j, n);
                }
            }
        }
    }
    let mut couplings = Vec::with_capacity(model.m);
    for n in 0..model.m {
        let scale = model.g * model.coupling_scale[n] / model.basis.eigenvalue(n).sqrt();
        let mut c = DMatrix::zeros(b, b);
        for i in 0..b {
            for j in 0..b {
                c[(i, j)] = scale * model.tensor.get(i, j, n);
            }
        }
        if let Some(lambda) = lambda {
            for i in 0..b {
                c[(i, i)] -= lambda[n];
            }
        }
        couplings.push(c);
    }
    Ok(FockOperator {
        dim: b * occupations.states.len(),
        b,
        occupations,
        electron_block,
        couplings,
        inv_alpha: 1.0 / model.alpha,
        inv_alpha2: 1.0 / (model.alpha * model.alpha),
    })
}

impl FockOperator {
    /// `y = H x`. Symmetric by construction: the raising sweep applies both
    /// the raise and its transpose.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        let b = self.b;
        let nb = self.occupations.states.len();
        y.fill(0.0);
        for f in 0..nb {
            let occ: u32 = self.occupations.states[f].iter().sum();
            let base = f * b;
            let number = occ as f64 * self.inv_alpha2;
            for i in 0..b {
                let mut acc = number * x[base + i];
                for j in 0..b {
                    acc += self.electron_block[(i, j)] * x[base + j];
                }
                y[base + i] += acc;
            }
            for (n, coupling) in self.couplings.iter().enumerate() {
                if let Some(up) = self.occupations.raise[f][n] {
                    let amp = -self.inv_alpha
                        * ((self.occupations.states[f][n] + 1) as f64).sqrt();
                    let up_base = up * b;
                    for i in 0..b {
                        let mut down = 0.0;
                        let mut lift = 0.0;
                        for j in 0..b {
                            lift += coupling[(i, j)] * x[base + j];
                            down += coupling[(i, j)] * x[up_base + j];
                        }
                        y[up_base + i] += amp * lift;
                        y[base + i] += amp * down;
                    }
                }
            }
        }
    }

    /// Dense assembly for cross-checks and operator-inequality diagnostics.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(self.dim, self.dim);
        let mut unit = vec![0.0; self.dim];
        let mut col = vec![0.0; self.dim];
        for j in 0..self.dim {
            unit[j] = 1.0;
            self.matvec(&unit, &mut col);
            unit[j] = 0.0;
            for i in 0..self.dim {
                h[(i, j)] = col[i];
            }
        }
        h
    }

    /// Expected occupation of each mode in the assembly frame.
    pub fn mean_occupation(&self, v: &[f64]) -> Vec<f64> {
        let b = self.b;
        let mut occ = vec![0.0; self.occupations.m];
        for (f, state) in self.occupations.states.iter().enumerate() {
            let weight: f64 = (0..b).map(|i| v[f * b + i] * v[f * b + i]).sum();
            for (n, &p) in state.iter().enumerate() {
                occ[n] += p as f64 * weight;
            }
        }
        occ
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{build_basis, triple_overlap, DomainSpec, ModeSelector};
    use std::f64::consts::PI;

    pub(crate) fn interval_model(
        alpha: f64,
        m: usize,
        b: usize,
        p: usize,
        g: f64,
        frame: Frame,
    ) -> TruncatedModel {
        let domain = DomainSpec::interval(PI).unwrap();
        let n = b.max(m);
        let basis = Arc::new(build_basis(&domain, ModeSelector::Count(n)).unwrap());
        let tensor = Arc::new(triple_overlap(&basis, n, n).unwrap());
        TruncatedModel::new(alpha, m, b, p, g, frame, basis, tensor).unwrap()
    }

    #[test]
    fn dense_assembly_is_symmetric() {
        let model = interval_model(2.0, 2, 3, 3, 1.0, Frame::Bare);
        let op = assemble_hamiltonian(&model).unwrap();
        let h = op.to_dense();
        let asym = (&h - h.transpose()).abs().max();
        assert_eq!(asym, 0.0);
    }

    #[test]
    fn two_level_closed_form() {
        // M=1, B=1, P=1: 2x2 with known ground energy
        let alpha = 3.0;
        let g = 1.0;
        let model = interval_model(alpha, 1, 1, 1, g, Frame::Bare);
        let op = assemble_hamiltonian(&model).unwrap();
        assert_eq!(op.dim, 2);
        let h = op.to_dense();
        let t111 = (2.0 / PI).powf(1.5) * 4.0 / 3.0;
        let e0_expected = 1.0
            + (1.0 - (1.0 + 4.0 * alpha * alpha * g * g * t111 * t111).sqrt())
                / (2.0 * alpha * alpha);
        let eigs = crate::linalg::sym_eigenvalues(&h);
        assert!((eigs[0] - e0_expected).abs() < 1e-14, "{} vs {e0_expected}", eigs[0]);
    }

    #[test]
    fn displaced_frame_matches_bare_at_converged_cutoff() {
        let bare = interval_model(2.0, 2, 4, 24, 1.0, Frame::Bare);
        let displaced = interval_model(2.0, 2, 4, 24, 1.0, Frame::Displaced(vec![0.6, -0.1]));
        let e_bare = crate::linalg::sym_eigenvalues(&assemble_hamiltonian(&bare).unwrap().to_dense())[0];
        let e_disp =
            crate::linalg::sym_eigenvalues(&assemble_hamiltonian(&displaced).unwrap().to_dense())[0];
        assert!((e_bare - e_disp).abs() < 1e-9, "{e_bare} vs {e_disp}");
    }

    #[test]
    fn memory_budget_rejects_oversized_model() {
        let mut model = interval_model(2.0, 2, 4, 10, 1.0, Frame::Bare);
        model.memory_budget = 10;
        assert!(matches!(assemble_hamiltonian(&model), Err(CoreError::MemoryBudget { .. })));
    }
}
