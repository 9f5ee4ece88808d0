//! Exact diagonalization oracle for the truncated quantum Hamiltonian.
//!
//! The model keeps `M` field modes with a total-occupation cutoff `P` and a
//! `B`-dimensional electron space, so the state space has dimension
//! `B * C(M+P, M)`. Assembly supports the bare frame and a coherent
//! displacement of the ladder operators by a classical field; the
//! displacement keeps the occupation cutoff needed for convergence uniform
//! in the coupling strength.

mod hamiltonian;
mod oscillator;
mod solve;
mod sweep;
mod trial;

pub use hamiltonian::{assemble_hamiltonian, FockOperator, Frame, TruncatedModel};
pub use oscillator::{oscillator_bound, OscillatorGrid, OscillatorValue};
pub use solve::{lowest_eigenvalue, FockGroundState, SolveOptions};
pub use sweep::{
    asymptotic_fit, coupling_monotonicity_check, lieb_yamazaki_instance, operator_inequality_check,
    LiebYamazakiReport, SweepFit, SweepPoint,
};
pub use trial::{trial_state_energy, TrialQuadrature};

use std::collections::HashMap;

use crate::error::{CoreError, Result};

/// `C(n, k)` with saturation, enough for cutoff arithmetic.
pub fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Occupation-number basis: all tuples `(p_1..p_M)` with `sum p <= P` in
/// graded lexicographic order, plus the mode-raising index table.
#[derive(Debug, Clone)]
pub struct OccupationBasis {
    pub m: usize,
    pub p: usize,
    pub states: Vec<Vec<u32>>,
    /// `raise[f][n]` is the index of the state with one more quantum in
    /// mode `n`, when still inside the cutoff.
    pub raise: Vec<Vec<Option<usize>>>,
}

/// Enumerate the occupation basis. `budget` caps the total state count
/// (occupation tuples times electron dimension) before any allocation.
pub fn enumerate_occupations(m: usize, p: usize, electron_dim: usize, budget: usize) -> Result<OccupationBasis> {
    if m == 0 {
        return Err(CoreError::InvalidInput("need at least one field mode".into()));
    }
    let count = binomial(m + p, m);
    let total = count.saturating_mul(electron_dim as u128);
    if total > budget as u128 {
        return Err(CoreError::MemoryBudget {
            dim: total.min(usize::MAX as u128) as usize,
            budget,
        });
    }
    let mut states = Vec::with_capacity(count as usize);
    let mut current = vec![0u32; m];
    for grade in 0..=p {
        emit_grade(&mut states, &mut current, 0, grade as u32);
    }
    let index: HashMap<&[u32], usize> =
        states.iter().enumerate().map(|(i, s)| (s.as_slice(), i)).collect();
    let mut raise = Vec::with_capacity(states.len());
    for s in &states {
        let mut row = Vec::with_capacity(m);
        let total: u32 = s.iter().sum();
        for n in 0..m {
            if (total as usize) < p {
                let mut up = s.clone();
                up[n] += 1;
                row.push(index.get(up.as_slice()).copied());
            } else {
                row.push(None);
            }
        }
        raise.push(row);
    }
    Ok(OccupationBasis { m, p, states, raise })
}

fn emit_grade(states: &mut Vec<Vec<u32>>, current: &mut Vec<u32>, axis: usize, remaining: u32) {
    if axis + 1 == current.len() {
        current[axis] = remaining;
        states.push(current.clone());
        return;
    }
    for q in 0..=remaining {
        current[axis] = q;
        emit_grade(states, current, axis + 1, remaining - q);
    }
    current[axis] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_mode_enumeration() {
        let basis = enumerate_occupations(1, 2, 1, 1 << 20).unwrap();
        assert_eq!(basis.states, vec![vec![0], vec![1], vec![2]]);
        assert_eq!(basis.raise[0][0], Some(1));
        assert_eq!(basis.raise[2][0], None);
    }

    #[test]
    fn two_modes_grade_two() {
        let basis = enumerate_occupations(2, 2, 1, 1 << 20).unwrap();
        assert_eq!(basis.states.len(), 6);
        assert_eq!(binomial(4, 2), 6);
        // graded lex: grade 0, then grade 1, then grade 2
        assert_eq!(
            basis.states,
            vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![0, 2], vec![1, 1], vec![2, 0]]
        );
    }

    #[test]
    fn three_modes_count_matches_combinatorics() {
        let basis = enumerate_occupations(3, 10, 1, 1 << 20).unwrap();
        assert_eq!(basis.states.len(), 286);
        assert_eq!(binomial(13, 3), 286);
        // exhaustive oracle
        let mut oracle = 0;
        for a in 0..=10u32 {
            for b in 0..=10u32 {
                for c in 0..=10u32 {
                    if a + b + c <= 10 {
                        oracle += 1;
                    }
                }
            }
        }
        assert_eq!(basis.states.len(), oracle);
    }

    #[test]
    fn budget_guard_trips() {
        assert!(matches!(
            enumerate_occupations(6, 40, 20, 1000),
            Err(CoreError::MemoryBudget { .. })
        ));
    }
}
