//! Command bodies. Each builds what it needs from the config, writes its
//! artifacts into the output directory, and finishes with a manifest that
//! references every file it produced.

use serde::Serialize;
use serde_json::json;
use std::path::PathBuf;

use pekarlab_core::bounds;
use pekarlab_core::export::{self, round_sig};
use pekarlab_core::fluctuation::{self, FluctuationOperators};
use pekarlab_core::fock::{self, Frame, SolveOptions, TruncatedModel};
use pekarlab_core::pekar::{self, HessianRange, PekarProblem, PekarSolution, ScfInit};
use pekarlab_core::quadrature::QuadratureSpec;
use pekarlab_core::spectral::{self, DomainKind, ModeSelector, SpectralBasis};

use crate::config::{ExperimentConfig, OutputFormat};
use crate::manifest::RunManifest;
use crate::Failure;

pub struct Context {
    pub cfg: ExperimentConfig,
    pub out: PathBuf,
    pub manifest: RunManifest,
    pub quick: bool,
}

impl Context {
    pub fn new(
        command: &str,
        cfg: ExperimentConfig,
        canonical: String,
        quick: bool,
    ) -> Result<Self, Failure> {
        let out = PathBuf::from(&cfg.output_dir);
        std::fs::create_dir_all(&out)?;
        let manifest = RunManifest::new(command, &canonical, cfg.seed);
        Ok(Context { cfg, out, manifest, quick })
    }

    fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<PathBuf, Failure> {
        let path = self.out.join(name);
        std::fs::write(&path, serde_json::to_string_pretty(value).unwrap())?;
        self.manifest.record(&path);
        Ok(path)
    }

    fn write_text(&mut self, name: &str, text: &str) -> Result<PathBuf, Failure> {
        let path = self.out.join(name);
        std::fs::write(&path, text)?;
        self.manifest.record(&path);
        Ok(path)
    }

    fn finish(self) -> Result<(), Failure> {
        self.manifest.write(&self.out)?;
        Ok(())
    }

    fn basis(&self) -> Result<SpectralBasis, Failure> {
        let count = self.cfg.electron_basis.max(self.cfg.phonon_modes);
        Ok(spectral::build_basis(&self.cfg.domain, ModeSelector::Count(count))?)
    }

    fn problem(&self) -> Result<PekarProblem, Failure> {
        let basis = std::sync::Arc::new(self.basis()?);
        let tensor = std::sync::Arc::new(spectral::triple_overlap(
            &basis,
            self.cfg.electron_basis,
            basis.len(),
        )?);
        let mut problem = PekarProblem::new(
            basis,
            tensor,
            self.cfg.electron_basis,
            self.cfg.phonon_modes,
            self.cfg.coupling,
        )?;
        problem.tol_residual = self.cfg.tolerances.scf_residual;
        problem.tol_energy = self.cfg.tolerances.scf_energy;
        Ok(problem)
    }

    fn solve(&self, problem: &PekarProblem) -> Result<PekarSolution, Failure> {
        Ok(pekar::scf_solve(problem, ScfInit::Zero)?)
    }

    fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            tol: self.cfg.tolerances.eigensolver,
            seed: self.cfg.seed,
            ..Default::default()
        }
    }
}

pub fn run_basis(mut ctx: Context) -> Result<(), Failure> {
    let basis = ctx.basis()?;
    let tensor =
        spectral::triple_overlap(&basis, ctx.cfg.electron_basis, ctx.cfg.phonon_modes)?;
    ctx.write_json("basis.json", &export::BasisExport::new(&basis, &tensor))?;
    ctx.finish()
}

pub fn run_pekar(mut ctx: Context) -> Result<(), Failure> {
    let problem = ctx.problem()?;
    let solution = ctx.solve(&problem)?;
    let probe = pekar::uniqueness_probe(&problem, ctx.cfg.samples.min(20).max(2), ctx.cfg.seed)?;
    let hessian = pekar::electron_hessian(&problem, &solution, HessianRange::FullBasis)?;
    let summary = json!({
        "solution": export::SolutionExport::new(&problem, &solution),
        "uniqueness": {
            "distinct_minima": probe.minima.len(),
            "basin_counts": probe.basin_counts,
            "failures": probe.failures,
            "minima": probe.minima.iter()
                .map(|(e, l)| json!({"energy": round_sig(*e), "lambda": export::round_slice(l)}))
                .collect::<Vec<_>>(),
        },
        "electron_hessian": {
            "kernel_residual": round_sig(hessian.kernel_residual),
            "second_eigenvalue": round_sig(hessian.spectrum[1]),
            "spectrum_head": export::round_slice(&hessian.spectrum[..hessian.spectrum.len().min(8)]),
            "psi_min_on_grid": round_sig(solution.psi_min_on_grid(&problem, 64)),
        },
    });
    ctx.write_json("pekar.json", &summary)?;
    ctx.finish()
}

pub fn run_fluct(mut ctx: Context) -> Result<(), Failure> {
    let problem = ctx.problem()?;
    let solution = ctx.solve(&problem)?;
    let ops = FluctuationOperators::assemble(&problem, &solution)?;
    let mut expansions = Vec::new();
    for &eps in &ctx.cfg.epsilon_grid {
        let report = fluctuation::local_expansion_check(
            &problem,
            &solution,
            &ops.k,
            &ops.l,
            eps,
            ctx.cfg.samples,
            ctx.cfg.seed,
        )?;
        expansions.push(json!({
            "epsilon": eps,
            "max_ratio": round_sig(report.max_ratio),
            "samples": report.samples,
            "skipped": report.skipped,
        }));
    }
    let global =
        fluctuation::global_bound_check(&problem, &solution, 0.05, ctx.cfg.samples.max(100), ctx.cfg.seed)?;
    let lipschitz = fluctuation::lipschitz_trace_check(0.9, 8, 100, ctx.cfg.seed)?;
    let summary = json!({
        "operators": export::FluctuationExport::new(&ops),
        "regime_margin": round_sig(ops.regime_margin()),
        "tail_exponent": round_sig(ops.correction.fitted_exponent),
        "local_expansion": expansions,
        "global_bound": {
            "kappa_prime": global.kappa_prime,
            "violations": global.violations,
            "largest_passing_kappa": round_sig(global.largest_passing_kappa),
        },
        "lipschitz_trace": {
            "violations": lipschitz.violations,
            "min_margin": round_sig(lipschitz.min_margin),
        },
    });
    ctx.write_json("fluct.json", &summary)?;
    if ops.k_spectrum.iter().any(|&k| k >= 1.0) {
        return Err(Failure::Property("fluct.k_spectrum_below_one".into()));
    }
    if global.violations > 0 {
        return Err(Failure::Property("fluct.global_quadratic_bound".into()));
    }
    if lipschitz.violations > 0 {
        return Err(Failure::Property("fluct.lipschitz_trace".into()));
    }
    ctx.finish()
}

pub fn run_spectrum(mut ctx: Context) -> Result<(), Failure> {
    let problem = ctx.problem()?;
    let solution = ctx.solve(&problem)?;
    let alpha = ctx.cfg.alphas[0];
    let model = TruncatedModel::new(
        alpha,
        ctx.cfg.phonon_modes,
        ctx.cfg.electron_basis,
        ctx.cfg.occupation_cutoff,
        ctx.cfg.coupling,
        Frame::Displaced(solution.lambda.clone()),
        problem.basis.clone(),
        problem.tensor.clone(),
    )?;
    let ground = fock::lowest_eigenvalue(&fock::assemble_hamiltonian(&model)?, &ctx.solve_options())?;
    let summary = json!({
        "alpha": alpha,
        "p": ctx.cfg.occupation_cutoff,
        "dimension": ground.dimension,
        "e0": round_sig(ground.e0),
        "residual": ground.residual,
        "mean_occupation": export::round_slice(&ground.mean_occupation),
        "e_pekar": round_sig(solution.energy),
        "delta": round_sig(alpha * alpha * (solution.energy - ground.e0)),
    });
    ctx.write_json("spectrum.json", &summary)?;
    ctx.finish()
}

pub fn run_fit(mut ctx: Context) -> Result<(), Failure> {
    let problem = ctx.problem()?;
    let solution = ctx.solve(&problem)?;
    let ops = FluctuationOperators::assemble(&problem, &solution)?;
    let fit = fock::asymptotic_fit(
        &problem,
        &solution,
        &ctx.cfg.alphas,
        ctx.cfg.occupation_cutoff,
        ctx.cfg.tolerances.sweep,
        &ctx.solve_options(),
    )?;
    let rel = (fit.c0 - ops.correction.value).abs() / ops.correction.value;
    let fit_tolerance = ctx.cfg.tolerances.fit_relative;
    let format = ctx.cfg.format;
    let pass = rel <= fit_tolerance;
    let mut summary = serde_json::to_value(export::SweepExport::new(&fit, ops.correction.value)).unwrap();
    summary["pass"] = json!(pass);
    summary["tolerance"] = json!(fit_tolerance);
    ctx.write_text("sweep.csv", &export::sweep_csv(&fit))?;
    if format == OutputFormat::Json {
        summary["points"] = serde_json::to_value(
            fit.points
                .iter()
                .map(|p| {
                    json!({
                        "alpha": p.alpha,
                        "dimension": p.dimension,
                        "p": p.p,
                        "e0": round_sig(p.e0),
                        "delta": round_sig(p.delta),
                    })
                })
                .collect::<Vec<_>>(),
        )
        .unwrap();
    }
    ctx.write_json("fit.json", &summary)?;
    ctx.finish()?;
    if pass {
        Ok(())
    } else {
        Err(Failure::Property(format!(
            "fit.c0_matches_correction: relative difference {rel:.3e} above {fit_tolerance}"
        )))
    }
}

pub fn run_bounds(mut ctx: Context) -> Result<(), Failure> {
    let spec = QuadratureSpec::default();
    let d = ctx.cfg.domain.dim();
    let mut rows = String::from("quantity,grid,value,reference\n");
    let mut summary = Vec::new();

    // closed-form radial constants
    let mut worst_rel = 0.0f64;
    for k in [0.5f64, 1.0, 3.0] {
        let k2 = k * k;
        let cases: [(&str, f64, f64); 4] = [
            ("field_shift_norm", bounds::radial_fourier_integral(|t| (2.0 / (t + k2)).powi(3), 3, true, &spec)?, 1.0 / (4.0 * std::f64::consts::PI * k * k * k)),
            ("low_mode_norm", bounds::radial_fourier_integral(|t| (1.0 - t / k2).exp() / t, 3, true, &spec)?, std::f64::consts::E * k / (4.0 * std::f64::consts::PI.powf(1.5))),
            ("cross_term_norm", bounds::radial_fourier_integral(|t| (2.0 / (t + k2)).powi(2), 3, true, &spec)?, 1.0 / (2.0 * std::f64::consts::PI * k)),
            ("gradient_norm", bounds::radial_fourier_integral(|t| t * (2.0 / (t + k2)).powi(3), 3, false, &spec)?, 6.0 * std::f64::consts::PI * std::f64::consts::PI / k),
        ];
        for (name, value, reference) in cases {
            worst_rel = worst_rel.max(((value - reference) / reference).abs());
            rows.push_str(&format!("{name},K={k},{:.12e},{:.12e}\n", round_sig(value), round_sig(reference)));
        }
    }
    summary.push(json!({
        "quantity": "radial_closed_forms",
        "fitted_exponent": serde_json::Value::Null,
        "expected": 0.0,
        "tolerance": 1e-8,
        "value": round_sig(worst_rel),
        "pass": worst_rel <= 1e-8,
    }));

    // pointwise diagonal bound with f = exp(-t)
    let b5_basis = spectral::build_basis(
        &ctx.cfg.domain,
        ModeSelector::EnergyCutoff(60.0 * ctx.cfg.domain.eigenvalue(&vec![1; d])),
    )?;
    let b5 = bounds::b5_check(&b5_basis, |t| (-t).exp(), ctx.cfg.grid_points, &spec)?;
    rows.push_str(&format!("b5_max_ratio,,{:.12e},1.0\n", round_sig(b5.max_ratio)));
    summary.push(json!({
        "quantity": "b5_pointwise_bound",
        "fitted_exponent": serde_json::Value::Null,
        "expected": 1.0,
        "tolerance": 0.0,
        "value": round_sig(b5.max_ratio),
        "pass": b5.max_ratio <= 1.0,
    }));

    // sharp-cutoff derivative growth and Weyl counting over the lambda grid
    let lam_max = ctx.cfg.lambda_grid.iter().copied().fold(0.0f64, f64::max);
    let count_basis =
        spectral::build_basis(&ctx.cfg.domain, ModeSelector::EnergyCutoff(1.05 * lam_max * lam_max))?;
    let mut beta = vec![0u8; d];
    beta[0] = 1;
    // the growth fit needs the asymptotic window; keep cutoffs >= 8
    let b12_grid: Vec<f64> = {
        let high: Vec<f64> = ctx.cfg.lambda_grid.iter().copied().filter(|&l| l >= 8.0).collect();
        if high.len() >= 3 {
            high
        } else {
            ctx.cfg.lambda_grid.clone()
        }
    };
    let b12 = bounds::b12_exponent_fit(&count_basis, &beta, &b12_grid, ctx.cfg.grid_points)?;
    let b12_expected = (2 + d) as f64;
    for (k, s) in b12.cutoffs.iter().zip(&b12.sums) {
        rows.push_str(&format!("b12_derivative_sum,K={k},{:.12e},\n", round_sig(*s)));
    }
    summary.push(json!({
        "quantity": "b12_derivative_growth",
        "fitted_exponent": round_sig(b12.exponent),
        "expected": b12_expected,
        "tolerance": 0.2,
        "value": round_sig(b12.exponent),
        "pass": (b12.exponent - b12_expected).abs() <= 0.2 && b12.r2 > 0.98,
    }));
    for &lam in &ctx.cfg.lambda_grid {
        let w = spectral::weyl_count(&count_basis, lam)?;
        rows.push_str(&format!(
            "weyl_ratio,Lambda={lam},{:.12e},{:.12e}\n",
            w.counted as f64 / w.predicted,
            w.counted as f64 / w.predicted_without_ball_volume,
        ));
    }

    // cutoff-norm scalings; reference exponents depend on the dimension
    let norm_basis = spectral::build_basis(
        &ctx.cfg.domain,
        ModeSelector::EnergyCutoff(10.0 * lam_max * lam_max),
    )?;
    let norms = bounds::cutoff_norms(&norm_basis, &ctx.cfg.lambda_grid, ctx.cfg.grid_points)?;
    let (a2_expected, a1_expected) = match d {
        3 => (-1.5, -2.5),
        2 => (-2.0, -3.0),
        _ => (-2.5, -3.5),
    };
    for (i, &lam) in norms.lambdas.iter().enumerate() {
        rows.push_str(&format!(
            "cutoff_norms,Lambda={lam},{:.12e},{:.12e}\n",
            round_sig(norms.a2[i]),
            round_sig(norms.a1[i])
        ));
    }
    summary.push(json!({
        "quantity": "a2_cutoff_scaling",
        "fitted_exponent": round_sig(norms.slope_a2),
        "expected": a2_expected,
        "tolerance": 0.15,
        "value": round_sig(norms.slope_a2),
        "pass": (norms.slope_a2 - a2_expected).abs() <= 0.15 && norms.r2_a2 > 0.98,
    }));
    summary.push(json!({
        "quantity": "a1_cutoff_scaling",
        "fitted_exponent": round_sig(norms.slope_a1),
        "expected": a1_expected,
        "tolerance": 0.15,
        "value": round_sig(norms.slope_a1),
        "pass": (norms.slope_a1 - a1_expected).abs() <= 0.15 && norms.r2_a1 > 0.98,
    }));

    // Coulomb norm: scaling identity margin for the two-regime envelope
    let envelope = |r: f64| r.powi(-2).min(r.powi(-4));
    let base = bounds::coulomb_norm_radial(envelope, &spec)?;
    let mut coulomb_worst = 0.0f64;
    for lam in [2.0f64, 4.0] {
        let scaled = bounds::coulomb_norm_radial(|r| envelope(lam * r), &spec)?;
        coulomb_worst = coulomb_worst.max((scaled / (lam.powf(-2.5) * base) - 1.0).abs());
    }
    summary.push(json!({
        "quantity": "coulomb_scaling_identity",
        "fitted_exponent": -2.5,
        "expected": -2.5,
        "tolerance": 1e-7,
        "value": round_sig(coulomb_worst),
        "pass": coulomb_worst <= 1e-7,
    }));

    // off-diagonal kernel decay: interval domains only (cost control)
    if ctx.cfg.domain.kind == DomainKind::Interval {
        let full = spectral::build_basis(&ctx.cfg.domain, ModeSelector::Count(24_000))?;
        let half = spectral::build_basis(&ctx.cfg.domain, ModeSelector::Count(12_000))?;
        let l0 = ctx.cfg.domain.lengths[0];
        let pairs: Vec<(Vec<f64>, Vec<f64>)> = [(0.22f64, 0.61), (0.32, 0.7), (0.16, 0.92), (0.41, 0.78)]
            .iter()
            .map(|&(a, b)| (vec![a * l0], vec![b * l0]))
            .collect();
        let report = bounds::offdiagonal_kernel_decay(
            &full,
            &half,
            1.75,
            &[1],
            &[1.5, 2.25, 3.375, 5.0],
            &pairs,
            1e-5,
        )?;
        summary.push(json!({
            "quantity": "offdiagonal_far_envelope",
            "fitted_exponent": round_sig(report.lambda_exponent),
            "expected": -4.0,
            "tolerance": 0.5,
            "value": round_sig(report.fitted_constant),
            "pass": report.fitted_constant.is_finite() && report.doubling_change <= 1e-5,
        }));
    }

    ctx.write_text("bounds.csv", &rows)?;
    let failed: Vec<String> = summary
        .iter()
        .filter(|s| s["pass"] == json!(false))
        .map(|s| s["quantity"].as_str().unwrap_or("?").to_string())
        .collect();
    ctx.write_json("bounds.json", &summary)?;
    ctx.finish()?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Property(format!("bounds: {}", failed.join(", "))))
    }
}

pub fn run_check(mut ctx: Context) -> Result<(), Failure> {
    let quick = ctx.quick;
    let checks = build_checks(&ctx.cfg, quick);
    let mut results = Vec::new();
    let mut first_failure: Option<String> = None;
    for (name, check) in checks {
        let outcome = check();
        let pass = matches!(outcome, CheckOutcome::Pass);
        let detail = match &outcome {
            CheckOutcome::Pass => String::from("ok"),
            CheckOutcome::Fail(msg) => msg.clone(),
            CheckOutcome::Error(msg) => msg.clone(),
        };
        println!("[{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass && first_failure.is_none() {
            first_failure = Some(format!("{name}: {detail}"));
        }
        results.push(json!({"name": name, "pass": pass, "detail": detail}));
    }
    ctx.write_json("check.json", &results)?;
    ctx.finish()?;
    match first_failure {
        None => Ok(()),
        Some(msg) => Err(Failure::Property(msg)),
    }
}

enum CheckOutcome {
    Pass,
    Fail(String),
    Error(String),
}

type Check = (&'static str, Box<dyn FnOnce() -> CheckOutcome>);

fn check<F>(name: &'static str, f: F) -> Check
where
    F: FnOnce() -> Result<Result<(), String>, pekarlab_core::CoreError> + 'static,
{
    (
        name,
        Box::new(move || match f() {
            Ok(Ok(())) => CheckOutcome::Pass,
            Ok(Err(msg)) => CheckOutcome::Fail(msg),
            Err(e) => CheckOutcome::Error(e.to_string()),
        }),
    )
}

fn interval_problem(b: usize, m: usize, g: f64) -> Result<PekarProblem, pekarlab_core::CoreError> {
    let domain = spectral::DomainSpec::interval(std::f64::consts::PI)?;
    let n = b.max(m);
    let basis = std::sync::Arc::new(spectral::build_basis(&domain, ModeSelector::Count(n))?);
    let tensor = std::sync::Arc::new(spectral::triple_overlap(&basis, n, n)?);
    PekarProblem::new(basis, tensor, b, m, g)
}

fn expect(ok: bool, msg: String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg)
    }
}

fn build_checks(cfg: &ExperimentConfig, quick: bool) -> Vec<Check> {
    use std::f64::consts::PI;
    let seed = cfg.seed;

    let mut checks: Vec<Check> = vec![
        check("basis.orthonormality", || {
            let domain = spectral::DomainSpec::interval(PI)?;
            let basis = spectral::build_basis(&domain, ModeSelector::Count(6))?;
            let spec = QuadratureSpec::default();
            let mut worst = 0.0f64;
            for m in 0..6 {
                for n in m..6 {
                    let overlap = pekarlab_core::quadrature::integrate(
                        |x| basis.eval(m, &[x]) * basis.eval(n, &[x]),
                        0.0,
                        PI,
                        &spec,
                    )?
                    .value;
                    let expected = if m == n { 1.0 } else { 0.0 };
                    worst = worst.max((overlap - expected).abs());
                }
            }
            Ok(expect(worst < 1e-10, format!("max deviation {worst:.3e}")))
        }),
        check("basis.weyl_interval_exact", || {
            let domain = spectral::DomainSpec::interval(PI)?;
            let basis = spectral::build_basis(&domain, ModeSelector::Count(20))?;
            let w = spectral::weyl_count(&basis, 10.5)?;
            Ok(expect(
                w.counted == 10 && (w.predicted - 10.5).abs() < 1e-12,
                format!("counted {}, predicted {}", w.counted, w.predicted),
            ))
        }),
        check("tensor.t111_closed_form", || {
            let domain = spectral::DomainSpec::interval(PI)?;
            let basis = spectral::build_basis(&domain, ModeSelector::Count(2))?;
            let t = spectral::triple_overlap(&basis, 2, 2)?;
            let expected = (2.0 / PI).powf(1.5) * 4.0 / 3.0;
            let err = (t.get(0, 0, 0) - expected).abs().max(t.get(0, 0, 1).abs());
            Ok(expect(err < 1e-13, format!("deviation {err:.3e}")))
        }),
        check("pekar.decoupled_ground", || {
            let p = interval_problem(6, 3, 0.0)?;
            let sol = pekar::scf_solve(&p, ScfInit::Zero)?;
            Ok(expect(
                (sol.energy - 1.0).abs() < 1e-12 && sol.lambda.iter().all(|&l| l.abs() < 1e-10),
                format!("energy {}", sol.energy),
            ))
        }),
        check("pekar.frozen_electron_closed_form", || {
            let p = interval_problem(1, 1, 1.0)?;
            let sol = pekar::scf_solve(&p, ScfInit::Zero)?;
            let closed = 1.0 - (2.0 / PI).powi(3) * 16.0 / 9.0;
            Ok(expect((sol.energy - closed).abs() < 1e-12, format!("{} vs {closed}", sol.energy)))
        }),
        check("pekar.functional_dominance", move || {
            let p = interval_problem(6, 3, 1.0)?;
            let mut rng = pekarlab_core::linalg::stream_rng(seed, 0);
            use rand::Rng;
            for _ in 0..100 {
                let mut psi: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
                let norm: f64 = psi.iter().map(|v| v * v).sum::<f64>().sqrt();
                psi.iter_mut().for_each(|v| *v /= norm);
                let lam: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
                let fv = p.functional_values(&psi, &lam);
                if fv.e < fv.ep - 1e-12 || fv.e < fv.fp - 1e-12 {
                    return Ok(Err(format!("dominance violated: {fv:?}")));
                }
            }
            Ok(Ok(()))
        }),
        check("hessian.kernel_annihilation", || {
            let p = interval_problem(8, 4, 1.0)?;
            let sol = pekar::scf_solve(&p, ScfInit::Zero)?;
            let h = pekar::electron_hessian(&p, &sol, HessianRange::FullBasis)?;
            Ok(expect(h.kernel_residual <= 1e-8, format!("residual {:.3e}", h.kernel_residual)))
        }),
        check("fluct.correction_diagonal", || {
            let p = interval_problem(4, 2, 1.0)?;
            let k = nalgebra_diag(&[0.75, 0.0]);
            let qc = fluctuation::quantum_correction(&k, &p)?;
            Ok(expect((qc.value - 0.25).abs() < 1e-14, format!("{}", qc.value)))
        }),
        check("fluct.lipschitz_equality", move || {
            let report = fluctuation::lipschitz_trace_check(0.9, 6, 50, seed)?;
            Ok(expect(report.violations == 0, format!("min margin {:.3e}", report.min_margin)))
        }),
        check("fock.two_level_closed_form", || {
            let p = interval_problem(1, 1, 1.0)?;
            let alpha = 4.0;
            let model = TruncatedModel::new(
                alpha, 1, 1, 1, 1.0, Frame::Bare, p.basis.clone(), p.tensor.clone(),
            )?;
            let gs = fock::lowest_eigenvalue(&fock::assemble_hamiltonian(&model)?, &SolveOptions::default())?;
            let t111 = (2.0 / PI).powf(1.5) * 4.0 / 3.0;
            let expected = 1.0
                + (1.0 - (1.0 + 4.0 * alpha * alpha * t111 * t111).sqrt()) / (2.0 * alpha * alpha);
            Ok(expect((gs.e0 - expected).abs() < 1e-12, format!("{} vs {expected}", gs.e0)))
        }),
        check("fock.decoupled_e0", || {
            let p = interval_problem(5, 2, 0.0)?;
            let model = TruncatedModel::new(
                3.0, 2, 5, 6, 0.0, Frame::Bare, p.basis.clone(), p.tensor.clone(),
            )?;
            let gs = fock::lowest_eigenvalue(&fock::assemble_hamiltonian(&model)?, &SolveOptions::default())?;
            Ok(expect((gs.e0 - 1.0).abs() < 1e-12, format!("{}", gs.e0)))
        }),
        check("bounds.radial_constants", || {
            let spec = QuadratureSpec::default();
            let k: f64 = 1.0;
            let v = bounds::radial_fourier_integral(|t| (2.0 / (t + k * k)).powi(3), 3, true, &spec)?;
            let expected = 1.0 / (4.0 * PI);
            Ok(expect(
                ((v - expected) / expected).abs() < 1e-8,
                format!("{v} vs {expected}"),
            ))
        }),
        check("bounds.coulomb_scaling", || {
            let spec = QuadratureSpec::default();
            let g = |r: f64| r.powi(-2).min(r.powi(-4));
            let base = bounds::coulomb_norm_radial(g, &spec)?;
            let scaled = bounds::coulomb_norm_radial(|r| g(3.0 * r), &spec)?;
            let rel = (scaled / (3.0f64.powf(-2.5) * base) - 1.0).abs();
            Ok(expect(rel < 1e-7, format!("relative deviation {rel:.3e}")))
        }),
    ];

    if !quick {
        checks.push(check("fluct.hessian_fd_identity", || {
            let p = interval_problem(8, 4, 1.0)?;
            let sol = pekar::scf_solve(&p, ScfInit::Zero)?;
            let k = fluctuation::assemble_k(&p, &sol)?;
            let step = 1e-3;
            let mut worst = 0.0f64;
            for a in 0..4 {
                for b in 0..4 {
                    let fd = |hh: f64| {
                        let mut pp = sol.lambda.clone();
                        let mut pm = sol.lambda.clone();
                        let mut mp = sol.lambda.clone();
                        let mut mm = sol.lambda.clone();
                        pp[a] += hh;
                        pp[b] += hh;
                        pm[a] += hh;
                        pm[b] -= hh;
                        mp[a] -= hh;
                        mp[b] += hh;
                        mm[a] -= hh;
                        mm[b] -= hh;
                        (p.field_functional(&pp) - p.field_functional(&pm)
                            - p.field_functional(&mp)
                            + p.field_functional(&mm))
                            / (4.0 * hh * hh)
                    };
                    let hess = (4.0 * fd(step / 2.0) - fd(step)) / 3.0;
                    let expected = 2.0 * (if a == b { 1.0 } else { 0.0 } - k[(a, b)]);
                    worst = worst.max((hess - expected).abs());
                }
            }
            Ok(expect(worst <= 1e-6, format!("max entry error {worst:.3e}")))
        }));
        checks.push(check("fluct.local_expansion_scaling", move || {
            let p = interval_problem(10, 4, 1.0)?;
            let sol = pekar::scf_solve(&p, ScfInit::Zero)?;
            let ops = FluctuationOperators::assemble(&p, &sol)?;
            let r2 = fluctuation::local_expansion_check(&p, &sol, &ops.k, &ops.l, 1e-2, 50, seed)?;
            let r3 = fluctuation::local_expansion_check(&p, &sol, &ops.k, &ops.l, 1e-3, 50, seed)?;
            let shrink = r3.max_ratio / r2.max_ratio;
            Ok(expect(shrink > 0.05 && shrink < 0.3, format!("shrink {shrink:.3}")))
        }));
        checks.push(check("fluct.global_bound", move || {
            let p = interval_problem(8, 3, 1.0)?;
            let sol = pekar::scf_solve(&p, ScfInit::Zero)?;
            let report = fluctuation::global_bound_check(&p, &sol, 0.05, 500, seed)?;
            Ok(expect(report.violations == 0, format!("{} violations", report.violations)))
        }));
        checks.push(check("fock.monotonicity", || {
            let p = interval_problem(6, 2, 1.0)?;
            let model = TruncatedModel::new(
                2.0, 2, 6, 12, 1.0, Frame::Bare, p.basis.clone(), p.tensor.clone(),
            )?;
            let report = fock::coupling_monotonicity_check(
                &model,
                0,
                &[0.0, 0.5, 1.0, 1.5, 2.0],
                &SolveOptions::default(),
            )?;
            Ok(expect(report.max_increase <= 1e-10, format!("max increase {:.3e}", report.max_increase)))
        }));
        checks.push(check("fock.frame_agreement", || {
            let p = interval_problem(6, 2, 1.0)?;
            let sol = pekar::scf_solve(&p, ScfInit::Zero)?;
            let opts = SolveOptions::default();
            let displaced = TruncatedModel::new(
                2.5, 2, 6, 24, 1.0,
                Frame::Displaced(sol.lambda.clone()),
                p.basis.clone(), p.tensor.clone(),
            )?;
            let bare = TruncatedModel::new(
                2.5, 2, 6, 24, 1.0, Frame::Bare, p.basis.clone(), p.tensor.clone(),
            )?;
            let e1 = fock::lowest_eigenvalue(&fock::assemble_hamiltonian(&displaced)?, &opts)?.e0;
            let e2 = fock::lowest_eigenvalue(&fock::assemble_hamiltonian(&bare)?, &opts)?.e0;
            Ok(expect((e1 - e2).abs() <= 1e-9, format!("displaced {e1} vs bare {e2}")))
        }));
        checks.push(check("bounds.b5_interval", || {
            let domain = spectral::DomainSpec::interval(PI)?;
            let basis = spectral::build_basis(&domain, ModeSelector::Count(300))?;
            let spec = QuadratureSpec::default();
            let report = bounds::b5_check(&basis, |t| (-t).exp(), 16, &spec)?;
            Ok(expect(report.max_ratio <= 1.0, format!("ratio {}", report.max_ratio)))
        }));
        checks.push(check("fock.variational_order", || {
            let p = interval_problem(8, 1, 1.0)?;
            let sol = pekar::scf_solve(&p, ScfInit::Zero)?;
            let ops = FluctuationOperators::assemble(&p, &sol)?;
            let alpha = 8.0;
            let model = TruncatedModel::new(
                alpha, 1, 8, 28, 1.0,
                Frame::Displaced(sol.lambda.clone()),
                p.basis.clone(), p.tensor.clone(),
            )?;
            let e0 = fock::lowest_eigenvalue(
                &fock::assemble_hamiltonian(&model)?,
                &SolveOptions { tol: 1e-10, ..Default::default() },
            )?
            .e0;
            let grid = fock::OscillatorGrid { half_width: 1.0, points_per_axis: 1200, convergence_target: 1e-7 };
            let e_k = fock::oscillator_bound(&p, &sol.lambda, alpha, &grid)?.value;
            let quad = fock::TrialQuadrature::default();
            let e_up = fock::trial_state_energy(&p, &sol, &ops.k, alpha, 0.25, &quad)?;
            Ok(expect(
                e_up >= e0 - 1e-7 && e0 >= e_k - 1e-7,
                format!("E_up {e_up}, E0 {e0}, E_K {e_k}"),
            ))
        }));
    }
    checks
}

fn nalgebra_diag(values: &[f64]) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_partial_diagonal(values.len(), values.len(), values)
}
