//! JSON-facing result shapes. Floating-point payloads are rounded to 12
//! significant digits before serialization so that identical runs produce
//! byte-identical summaries.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::fluctuation::FluctuationOperators;
use crate::fock::SweepFit;
use crate::pekar::{PekarProblem, PekarSolution};
use crate::spectral::{DomainSpec, Mode, OverlapTensor, SpectralBasis};

/// Round to 12 significant digits; stabilizes JSON output across runs.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let magnitude = x.abs().log10().floor();
    let scale = 10f64.powf(11.0 - magnitude);
    (x * scale).round() / scale
}

pub fn round_slice(xs: &[f64]) -> Vec<f64> {
    xs.iter().map(|&x| round_sig(x)).collect()
}

/// Tensor payload: shape header `(B, B, M)` plus row-major entries.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorExport {
    pub shape: [usize; 3],
    pub entries: Vec<f64>,
}

impl TensorExport {
    pub fn new(tensor: &OverlapTensor) -> Self {
        TensorExport {
            shape: [tensor.b, tensor.b, tensor.m],
            entries: round_slice(tensor.entries()),
        }
    }
}

/// Combined basis-and-tensor document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BasisExport {
    pub domain: DomainSpec,
    pub modes: Vec<Mode>,
    #[serde(rename = "T")]
    pub tensor: TensorExport,
}

impl BasisExport {
    pub fn new(basis: &SpectralBasis, tensor: &OverlapTensor) -> Self {
        let modes = basis
            .modes()
            .iter()
            .map(|m| Mode { index: m.index.clone(), eigenvalue: round_sig(m.eigenvalue) })
            .collect();
        BasisExport { domain: basis.domain.clone(), modes, tensor: TensorExport::new(tensor) }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionExport {
    #[serde(rename = "B")]
    pub b: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub g: f64,
    #[serde(rename = "lambdaP")]
    pub lambda: Vec<f64>,
    #[serde(rename = "psiP")]
    pub psi: Vec<f64>,
    #[serde(rename = "eP")]
    pub energy: f64,
    #[serde(rename = "muP")]
    pub mu: f64,
    pub gap: f64,
    pub residual: f64,
    pub iterations: usize,
}

impl SolutionExport {
    pub fn new(problem: &PekarProblem, solution: &PekarSolution) -> Self {
        SolutionExport {
            b: problem.b,
            m: problem.m,
            g: problem.g,
            lambda: round_slice(&solution.lambda),
            psi: round_slice(&solution.psi),
            energy: round_sig(solution.energy),
            mu: round_sig(solution.mu),
            gap: round_sig(solution.gap),
            residual: round_sig(solution.residual),
            iterations: solution.iterations,
        }
    }
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| round_sig(m[(i, j)])).collect())
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FluctuationExport {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "K")]
    pub k: Vec<Vec<f64>>,
    #[serde(rename = "L")]
    pub l: Vec<Vec<f64>>,
    pub k_spectrum: Vec<f64>,
    pub correction: f64,
    pub tail_bound: f64,
}

impl FluctuationExport {
    pub fn new(ops: &FluctuationOperators) -> Self {
        FluctuationExport {
            m: ops.k.nrows(),
            k: matrix_rows(&ops.k),
            l: matrix_rows(&ops.l),
            k_spectrum: round_slice(&ops.k_spectrum),
            correction: round_sig(ops.correction.value),
            tail_bound: round_sig(ops.correction.tail_bound),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepExport {
    pub e_pekar: f64,
    pub c0: f64,
    pub c1: f64,
    pub stderr: f64,
    pub c0_slow_model: f64,
    pub correction: f64,
    pub relative_difference: f64,
}

impl SweepExport {
    pub fn new(fit: &SweepFit, correction: f64) -> Self {
        SweepExport {
            e_pekar: round_sig(fit.e_pekar),
            c0: round_sig(fit.c0),
            c1: round_sig(fit.c1),
            stderr: round_sig(fit.stderr),
            c0_slow_model: round_sig(fit.c0_slow_model),
            correction: round_sig(correction),
            relative_difference: round_sig((fit.c0 - correction).abs() / correction),
        }
    }
}

/// CSV rows for a sweep: `alpha,dimension,P,E0,residual,delta`.
pub fn sweep_csv(fit: &SweepFit) -> String {
    let mut out = String::from("alpha,dimension,P,E0,residual,delta\n");
    for p in &fit.points {
        out.push_str(&format!(
            "{},{},{},{:.12e},{:.3e},{:.12e}\n",
            p.alpha, p.dimension, p.p, round_sig(p.e0), p.residual, round_sig(p.delta)
        ));
    }
    out
}
