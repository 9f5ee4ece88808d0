//! Experiment configuration: one JSON document drives every subcommand.
//! Parsing is strict (unknown fields rejected) and round-trip stable.

use serde::{Deserialize, Serialize};

use pekarlab_core::spectral::DomainSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Fixed-point residual target of the classical solver.
    #[serde(default = "d_scf_residual")]
    pub scf_residual: f64,
    /// Energy-change target of the classical solver.
    #[serde(default = "d_scf_energy")]
    pub scf_energy: f64,
    /// Residual target of the iterative eigensolver.
    #[serde(default = "d_eigensolver")]
    pub eigensolver: f64,
    /// Occupation-cutoff convergence budget on the rescaled-difference scale.
    #[serde(default = "d_sweep")]
    pub sweep: f64,
    /// Acceptance window for the fitted constant against the trace formula.
    #[serde(default = "d_fit_relative")]
    pub fit_relative: f64,
}

fn d_scf_residual() -> f64 {
    1e-12
}
fn d_scf_energy() -> f64 {
    1e-13
}
fn d_eigensolver() -> f64 {
    1e-9
}
fn d_sweep() -> f64 {
    1e-5
}
fn d_fit_relative() -> f64 {
    0.05
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            scf_residual: d_scf_residual(),
            scf_energy: d_scf_energy(),
            eigensolver: d_eigensolver(),
            sweep: d_sweep(),
            fit_relative: d_fit_relative(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub domain: DomainSpec,
    /// Electron basis size B.
    pub electron_basis: usize,
    /// Phonon mode count M.
    pub phonon_modes: usize,
    /// Total-occupation cutoff P for the quantum oracle.
    #[serde(default = "d_cutoff")]
    pub occupation_cutoff: usize,
    /// Coupling multiplier g.
    #[serde(default = "d_coupling")]
    pub coupling: f64,
    #[serde(default = "d_alphas")]
    pub alphas: Vec<f64>,
    /// Cutoff grid for the bound suites.
    #[serde(default = "d_lambda_grid")]
    pub lambda_grid: Vec<f64>,
    /// Displacement sizes for the local expansion check.
    #[serde(default = "d_epsilon_grid")]
    pub epsilon_grid: Vec<f64>,
    #[serde(default = "d_seed")]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Random samples per stochastic check.
    #[serde(default = "d_samples")]
    pub samples: usize,
    /// Sample-grid points per axis in the bound suites.
    #[serde(default = "d_grid_points")]
    pub grid_points: usize,
    #[serde(default = "d_output_dir")]
    pub output_dir: String,
    #[serde(default)]
    pub format: OutputFormat,
}

fn d_cutoff() -> usize {
    22
}
fn d_coupling() -> f64 {
    1.0
}
fn d_alphas() -> Vec<f64> {
    vec![4.0, 8.0, 16.0, 32.0]
}
fn d_lambda_grid() -> Vec<f64> {
    vec![5.0, 7.0, 10.0, 14.0, 20.0]
}
fn d_epsilon_grid() -> Vec<f64> {
    vec![1e-2, 1e-3]
}
fn d_seed() -> u64 {
    42
}
fn d_samples() -> usize {
    50
}
fn d_grid_points() -> usize {
    6
}
fn d_output_dir() -> String {
    "out".into()
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), String> {
        let b = self.electron_basis;
        let m = self.phonon_modes;
        if b == 0 || m == 0 {
            return Err("electron_basis and phonon_modes must be >= 1".into());
        }
        if !(self.coupling >= 0.0) {
            return Err("coupling must be nonnegative".into());
        }
        if self.alphas.is_empty() || self.alphas.windows(2).any(|w| w[0] >= w[1]) {
            return Err("alphas must be nonempty and strictly increasing".into());
        }
        if self.lambda_grid.iter().any(|&l| l <= 0.0) {
            return Err("lambda_grid entries must be positive".into());
        }
        if self.epsilon_grid.iter().any(|&e| !(e > 0.0)) {
            return Err("epsilon_grid entries must be positive".into());
        }
        if self.grid_points == 0 || self.samples == 0 {
            return Err("samples and grid_points must be >= 1".into());
        }
        DomainSpec::new(self.domain.kind, self.domain.lengths.clone())
            .map_err(|e| e.to_string())?;
        Ok(())
    }

    /// Canonical serialization; also the round-trip identity check.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_identity() {
        let cfg = ExperimentConfig {
            domain: DomainSpec::interval(std::f64::consts::PI).unwrap(),
            electron_basis: 10,
            phonon_modes: 2,
            occupation_cutoff: 22,
            coupling: 1.0,
            alphas: vec![4.0, 8.0],
            lambda_grid: d_lambda_grid(),
            epsilon_grid: d_epsilon_grid(),
            seed: 7,
            tolerances: Tolerances::default(),
            samples: 50,
            grid_points: 6,
            output_dir: "out".into(),
            format: OutputFormat::Json,
        };
        let text = cfg.canonical_json();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(text, back.canonical_json());
    }

    #[test]
    fn unknown_field_is_rejected() {
        let text = r#"{"domain":{"kind":"interval","lengths":[3.14]},
            "electron_basis":4,"phonon_modes":2,"bogus":1}"#;
        assert!(serde_json::from_str::<ExperimentConfig>(text).is_err());
    }
}
