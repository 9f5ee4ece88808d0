//! Cross-module integration: the classical solve, the fluctuation
//! operators, and the quantum oracle agree along the full pipeline.

use std::f64::consts::PI;
use std::sync::Arc;

use pekarlab_core::fluctuation::FluctuationOperators;
use pekarlab_core::fock::{
    assemble_hamiltonian, asymptotic_fit, lowest_eigenvalue, Frame, SolveOptions, TruncatedModel,
};
use pekarlab_core::pekar::{scf_solve, HessianRange, PekarProblem, ScfInit};
use pekarlab_core::spectral::{build_basis, triple_overlap, DomainSpec, ModeSelector};

fn interval_problem(b: usize, m: usize, g: f64) -> PekarProblem {
    let domain = DomainSpec::interval(PI).unwrap();
    let n = b.max(m);
    let basis = Arc::new(build_basis(&domain, ModeSelector::Count(n)).unwrap());
    let tensor = Arc::new(triple_overlap(&basis, n, n).unwrap());
    PekarProblem::new(basis, tensor, b, m, g).unwrap()
}

#[test]
fn displaced_frame_sweep_recovers_trace_formula() {
    let problem = interval_problem(10, 2, 1.0);
    let solution = scf_solve(&problem, ScfInit::Zero).unwrap();
    let ops = FluctuationOperators::assemble(&problem, &solution).unwrap();

    let alphas = [4.0, 8.0, 16.0, 32.0];
    let solve = SolveOptions { tol: 1e-9, ..Default::default() };
    let fit = asymptotic_fit(&problem, &solution, &alphas, 22, 1e-5, &solve).unwrap();

    // finite limit: rescaled differences form a Cauchy-trending sequence
    let d = &fit.points;
    assert!(
        (d[3].delta - d[2].delta).abs() < (d[2].delta - d[1].delta).abs(),
        "deltas {:?}",
        d.iter().map(|p| p.delta).collect::<Vec<_>>()
    );
    let rel = (fit.c0 - ops.correction.value).abs() / ops.correction.value;
    assert!(rel <= 0.05, "c0 {} vs correction {} (rel {rel})", fit.c0, ops.correction.value);

    // curvature probes agree in sign: the electron Hessian is positive on
    // the complement of its kernel exactly when |K| stays below one
    let hessian =
        pekarlab_core::pekar::electron_hessian(&problem, &solution, HessianRange::FullBasis)
            .unwrap();
    assert!(hessian.kernel_residual <= 1e-8);
    let z_positive = hessian.spectrum[1] > 0.0;
    let k_below_one = ops.k_spectrum[0] < 1.0;
    assert_eq!(z_positive, k_below_one);
    assert!(z_positive);
}

#[test]
fn bare_and_displaced_frames_agree_at_converged_cutoff() {
    let problem = interval_problem(8, 2, 1.0);
    let solution = scf_solve(&problem, ScfInit::Zero).unwrap();
    let alpha = 3.0;
    let solve = SolveOptions { tol: 1e-10, ..Default::default() };
    let displaced = TruncatedModel::new(
        alpha,
        2,
        8,
        26,
        1.0,
        Frame::Displaced(solution.lambda.clone()),
        problem.basis.clone(),
        problem.tensor.clone(),
    )
    .unwrap();
    let bare = TruncatedModel::new(
        alpha,
        2,
        8,
        26,
        1.0,
        Frame::Bare,
        problem.basis.clone(),
        problem.tensor.clone(),
    )
    .unwrap();
    let e_disp = lowest_eigenvalue(&assemble_hamiltonian(&displaced).unwrap(), &solve).unwrap();
    let e_bare = lowest_eigenvalue(&assemble_hamiltonian(&bare).unwrap(), &solve).unwrap();
    assert!(
        (e_disp.e0 - e_bare.e0).abs() <= 1e-9,
        "displaced {} vs bare {}",
        e_disp.e0,
        e_bare.e0
    );
    // variational in the cutoff and below the classical energy
    assert!(e_disp.e0 < solution.energy);
}

#[test]
fn two_mode_trial_state_stays_above_fock_ground_energy() {
    let problem = interval_problem(6, 2, 1.0);
    let solution = scf_solve(&problem, ScfInit::Zero).unwrap();
    let ops = FluctuationOperators::assemble(&problem, &solution).unwrap();
    let alpha = 8.0;
    let model = TruncatedModel::new(
        alpha,
        2,
        6,
        20,
        1.0,
        Frame::Displaced(solution.lambda.clone()),
        problem.basis.clone(),
        problem.tensor.clone(),
    )
    .unwrap();
    let e0 = lowest_eigenvalue(
        &assemble_hamiltonian(&model).unwrap(),
        &SolveOptions { tol: 1e-10, ..Default::default() },
    )
    .unwrap()
    .e0;
    let quad = pekarlab_core::fock::TrialQuadrature {
        panels_per_half_axis: 2,
        nodes_per_panel: 24,
        convergence_target: 1e-7,
    };
    let e_up =
        pekarlab_core::fock::trial_state_energy(&problem, &solution, &ops.k, alpha, 0.3, &quad)
            .unwrap();
    assert!(e_up >= e0 - 1e-7, "E_up {e_up} vs E0 {e0}");
    assert!(e_up < solution.energy, "trial state should beat the classical energy");
}

#[test]
fn stability_of_c0_under_electron_basis_growth() {
    let alphas = [4.0, 8.0, 16.0];
    let solve = SolveOptions { tol: 1e-9, ..Default::default() };
    let mut c0s = Vec::new();
    for b in [10usize, 14] {
        let problem = interval_problem(b, 2, 1.0);
        let solution = scf_solve(&problem, ScfInit::Zero).unwrap();
        let fit = asymptotic_fit(&problem, &solution, &alphas, 20, 1e-5, &solve).unwrap();
        c0s.push(fit.c0);
    }
    let rel = (c0s[1] - c0s[0]).abs() / c0s[0];
    assert!(rel < 0.01, "c0 moved by {rel} under B -> B+4");
}
