//! Dirichlet-Laplacian eigenbases on intervals and rectangular boxes.
//!
//! Everything downstream - the Pekar solver, the fluctuation operators, the
//! Fock-space oracle, the bound checks - is built on the eigenpairs
//! `(e_n, phi_n)` of the Dirichlet Laplacian on a product domain. For a box
//! `[0,L_1] x ... x [0,L_d]` these are exact:
//!
//! ```text
//! phi_n(x) = prod_a sqrt(2/L_a) sin(n_a pi x_a / L_a),
//! e_n      = sum_a (n_a pi / L_a)^2 .
//! ```
//!
//! Modes are ordered by eigenvalue, ties broken lexicographically by
//! multi-index, so every basis is deterministic.

mod kernel;
mod overlap;

pub use kernel::{kernel_eval, unit_ball_volume, weyl_count, KernelValue, WeylCount};
pub use overlap::{sine_product_integral, triple_1d, triple_overlap, OverlapTensor};

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{CoreError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Interval,
    Box2d,
    Box3d,
}

impl DomainKind {
    pub fn dim(self) -> usize {
        match self {
            DomainKind::Interval => 1,
            DomainKind::Box2d => 2,
            DomainKind::Box3d => 3,
        }
    }
}

/// A product domain: an interval or a rectangular box, given by side lengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub kind: DomainKind,
    pub lengths: Vec<f64>,
}

impl DomainSpec {
    pub fn new(kind: DomainKind, lengths: Vec<f64>) -> Result<Self> {
        if lengths.len() != kind.dim() {
            return Err(CoreError::InvalidInput(format!(
                "domain kind wants {} side lengths, got {}",
                kind.dim(),
                lengths.len()
            )));
        }
        if lengths.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(CoreError::InvalidInput("side lengths must be positive and finite".into()));
        }
        Ok(DomainSpec { kind, lengths })
    }

    pub fn interval(length: f64) -> Result<Self> {
        Self::new(DomainKind::Interval, vec![length])
    }

    pub fn box3d(lengths: [f64; 3]) -> Result<Self> {
        Self::new(DomainKind::Box3d, lengths.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    pub fn volume(&self) -> f64 {
        self.lengths.iter().product()
    }

    /// Eigenvalue of the multi-index `n` (1-based per axis).
    pub fn eigenvalue(&self, index: &[u32]) -> f64 {
        index
            .iter()
            .zip(&self.lengths)
            .map(|(&n, &l)| {
                let k = n as f64 * PI / l;
                k * k
            })
            .sum()
    }

    /// True for strictly interior points.
    pub fn contains_interior(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(&self.lengths).all(|(&xi, &l)| xi > 0.0 && xi < l)
    }
}

/// One Dirichlet eigenpair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub index: Vec<u32>,
    pub eigenvalue: f64,
}

/// How many modes to keep when building a basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeSelector {
    Count(usize),
    EnergyCutoff(f64),
}

/// Ordered Dirichlet eigenbasis with closed-form evaluation of
/// `phi_n` and its derivatives up to third order per axis.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    pub domain: DomainSpec,
    modes: Vec<Mode>,
}

impl SpectralBasis {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn eigenvalue(&self, n: usize) -> f64 {
        self.modes[n].eigenvalue
    }

    /// Eigenvalues of the first `count` modes.
    pub fn eigenvalues(&self, count: usize) -> Vec<f64> {
        self.modes[..count].iter().map(|m| m.eigenvalue).collect()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.modes.last().map_or(0.0, |m| m.eigenvalue)
    }

    /// Evaluate `phi_n(x)`.
    pub fn eval(&self, n: usize, x: &[f64]) -> f64 {
        self.eval_derivative(n, x, &vec![0u8; self.domain.dim()])
    }

    /// Evaluate `∂^beta phi_n(x)` where `beta` lists the derivative order per
    /// axis (each <= 3).
    pub fn eval_derivative(&self, n: usize, x: &[f64], beta: &[u8]) -> f64 {
        let mode = &self.modes[n];
        debug_assert_eq!(x.len(), self.domain.dim());
        debug_assert_eq!(beta.len(), self.domain.dim());
        let mut out = 1.0;
        for a in 0..x.len() {
            let l = self.domain.lengths[a];
            let k = mode.index[a] as f64 * PI / l;
            let arg = k * x[a];
            let norm = (2.0 / l).sqrt();
            // d/dx cycles sin -> cos -> -sin -> -cos, one factor of k each
            let factor = match beta[a] % 4 {
                0 => arg.sin(),
                1 => arg.cos(),
                2 => -arg.sin(),
                _ => -arg.cos(),
            };
            out *= norm * k.powi(beta[a] as i32) * factor;
        }
        out
    }

    /// Number of modes with eigenvalue at or below `cutoff`.
    pub fn count_below(&self, cutoff: f64) -> usize {
        self.modes.partition_point(|m| m.eigenvalue <= cutoff)
    }
}

/// Enumerate every multi-index with eigenvalue `<= cutoff`, sorted by
/// `(eigenvalue, index)`.
fn enumerate_modes(domain: &DomainSpec, cutoff: f64) -> Vec<Mode> {
    let d = domain.dim();
    let mut modes = Vec::new();
    let mut index = vec![1u32; d];
    'outer: loop {
        let e = domain.eigenvalue(&index);
        if e <= cutoff {
            modes.push(Mode { index: index.clone(), eigenvalue: e });
            index[d - 1] += 1;
        } else {
            // carry: reset this axis, advance the previous one
            let mut axis = d - 1;
            loop {
                index[axis] = 1;
                if axis == 0 {
                    break 'outer;
                }
                axis -= 1;
                index[axis] += 1;
                let mut probe = index.clone();
                for p in probe.iter_mut().skip(axis + 1) {
                    *p = 1;
                }
                if domain.eigenvalue(&probe) <= cutoff {
                    break;
                }
                if axis == 0 {
                    break 'outer;
                }
            }
        }
    }
    modes.sort_by(|a, b| a.eigenvalue.total_cmp(&b.eigenvalue).then_with(|| a.index.cmp(&b.index)));
    modes
}

/// Build the eigenbasis selected by mode count or energy cutoff.
pub fn build_basis(domain: &DomainSpec, selector: ModeSelector) -> Result<SpectralBasis> {
    let e1 = domain.eigenvalue(&vec![1u32; domain.dim()]);
    match selector {
        ModeSelector::Count(count) => {
            if count == 0 {
                return Err(CoreError::InvalidInput("mode count must be >= 1".into()));
            }
            // grow the cutoff until enough modes are enumerated
            let mut cutoff = e1 * (count as f64).powf(2.0 / domain.dim() as f64).max(1.0) * 4.0;
            loop {
                let modes = enumerate_modes(domain, cutoff);
                if modes.len() >= count {
                    let modes = modes.into_iter().take(count).collect();
                    return Ok(SpectralBasis { domain: domain.clone(), modes });
                }
                cutoff *= 2.0;
            }
        }
        ModeSelector::EnergyCutoff(cutoff) => {
            if !(cutoff > e1) {
                return Err(CoreError::EmptyBasis { cutoff, e1 });
            }
            let modes = enumerate_modes(domain, cutoff);
            Ok(SpectralBasis { domain: domain.clone(), modes })
        }
    }
}
