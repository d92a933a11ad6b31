//! End-to-end acceptance criteria at the planar desk scale: `x_star = 1`,
//! `m = 8`, `q = 34`, `δ = 0.1`, three noise laws with variance 0.05,
//! 10⁴ replications for moment checks and 500 for risk checks.
//!
//! Each test writes one `criterion N ... PASS|FAIL` line straight to stderr
//! so the verdicts show up even when the harness captures output.

use std::io::Write;

use ctselect::estimator::{CoefficientPlan, IndexSets, PhaseConvention};
use ctselect::fourier::{polar_theta, ThetaOracle};
use ctselect::obsmodel::{NoiseFamily, NoiseKeying, NoiseKind, NoiseModel, SinogramDesign};
use ctselect::phantoms::Phantom;
use ctselect::properties::*;
use ctselect::riskharness::{model_seed, oracle_report, Experiment, ExperimentConfig, RiskReport, SigmaMode};
use ctselect::selector::{reconstruct, select};

const SEED: u64 = 20240611;
const MOMENT_REPS: usize = 10_000;
const RISK_REPS: usize = 500;

fn verdict(n: u32, name: &str, passed: bool, detail: &str) {
    let tag = if passed { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {n:>2} {name}: {tag} ({detail})");
}

fn family() -> NoiseFamily {
    NoiseFamily::desk_default()
}

fn form_check(k: usize) -> FormCheck {
    FormCheck {
        q: 34,
        m: 8,
        dimension: 2,
        x_star: 1.0,
        vectors: 20,
        replications: MOMENT_REPS,
        seed: model_seed(SEED, k),
        keying: NoiseKeying::PerDirection,
        convention: PhaseConvention::Conjugate,
    }
}

fn all_pass(n: u32, name: &str, checks: &[CheckResult]) {
    let passed = checks.iter().all(|c| c.passed);
    let detail: Vec<String> = checks.iter().map(|c| format!("{} {:.4e}/{:.4e}", c.detail, c.statistic, c.threshold)).collect();
    verdict(n, name, passed, &detail.join("; "));
    assert!(passed, "{checks:#?}");
}

#[test]
fn criterion_01_cell_weight_orthogonality() {
    let c = orthogonality_check(&colinear_families(8.0), 1.0, 34, PhaseConvention::Conjugate).unwrap();
    all_pass(1, "cell-weight orthogonality", &[c]);
}

#[test]
fn criterion_02_noise_projection_covariance() {
    let (idx, pairs) = covariance_panel();
    assert!(pairs.len() >= 10);
    let checks: Vec<CheckResult> = family()
        .models()
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let seed = model_seed(SEED, k);
            eta_covariance_check(&idx, &pairs, 34, m, NoiseKeying::PerDirection, PhaseConvention::Conjugate, MOMENT_REPS, seed)
                .unwrap()
        })
        .collect();
    all_pass(2, "noise projection covariance", &checks);
}

#[test]
fn criterion_03_linear_form_bound() {
    let checks: Vec<CheckResult> =
        family().models().iter().enumerate().map(|(k, m)| linear_form_check(&form_check(k), m).unwrap()).collect();
    all_pass(3, "linear form second moment", &checks);
}

#[test]
fn criterion_04_quadratic_form_bound() {
    let checks: Vec<CheckResult> =
        family().models().iter().enumerate().map(|(k, m)| quadratic_form_check(&form_check(k), m).unwrap()).collect();
    all_pass(4, "centered quadratic form", &checks);
}

#[test]
fn criterion_05_radon_lipschitz() {
    let c = radon_lipschitz_check(&Phantom::desk_default(), 1000, SEED).unwrap();
    all_pass(5, "projection Lipschitz bound", &[c]);
}

#[test]
fn criterion_06_fourier_tail() {
    let s = Phantom::desk_default();
    let oracle = ThetaOracle::build(&s, 64);
    let c = fourier_tail_check(&s, &[4, 8, 16], &oracle).unwrap();
    all_pass(6, "high-frequency tail bound", &[c]);
}

#[test]
fn criterion_07_penalty_below_risk() {
    let cfg = ExperimentConfig { sigma_mode: SigmaMode::Known, ..ExperimentConfig::desk_default() };
    let exp = Experiment::new(cfg).unwrap();
    let checks: Vec<CheckResult> =
        family().models().iter().map(|m| penalty_vs_risk_check(&exp, m, RISK_REPS, SEED).unwrap()).collect();
    all_pass(7, "penalty below risk", &checks);
}

#[test]
fn criterion_08_noise_level_estimate_improves() {
    let s = Phantom::desk_default();
    let radii = [4, 8, 16];
    let checks: Vec<CheckResult> = family()
        .models()
        .iter()
        .map(|m| {
            let med = sigma_error_medians(&s, &radii, 2, m, 200, SEED).unwrap();
            let mut c = sigma_quality_check(&med, &radii);
            c.detail = format!("{}: {}", m.kind.name(), c.detail);
            c
        })
        .collect();
    all_pass(8, "noise level estimate", &checks);
}

fn risk_at(q: usize) -> RiskReport {
    let exp = Experiment::new(ExperimentConfig { q, ..ExperimentConfig::desk_default() }).unwrap();
    oracle_report(&exp, &family(), RISK_REPS, SEED).unwrap()
}

#[test]
fn criterion_09_oracle_behaviour() {
    // (a) noiseless: the selected weight attains the smallest error
    let exp = Experiment::new(ExperimentConfig { sigma_mode: SigmaMode::Known, ..ExperimentConfig::desk_default() }).unwrap();
    let silent = NoiseModel::new(NoiseKind::Gaussian, 0.0).unwrap();
    let rep = exp.score(&exp.plan().noiseless(), &silent).unwrap();
    let best = rep.errors.iter().copied().fold(f64::INFINITY, f64::min);
    let noiseless_ok = rep.selected_error == best;
    let mut lines = vec![format!("noiseless selected {:.6e} vs oracle {best:.6e}", rep.selected_error)];

    // (b) and (c): factor-2 inequality with a slack that does not grow with q
    let base = risk_at(34);
    let doubled = risk_at(68);
    let mut noisy_ok = true;
    for (a, b) in base.models.iter().zip(&doubled.models) {
        for r in [a, b] {
            noisy_ok &= r.selected.mean <= base.factor * r.oracle_risk + r.slack + 1e-15;
        }
        let band = 3.0 * ((a.slack_se * 34.0 * 0.1).powi(2) + (b.slack_se * 68.0 * 0.1).powi(2)).sqrt();
        let grows = b.slack_scaled > a.slack_scaled + band;
        noisy_ok &= !grows;
        lines.push(format!(
            "{}: ratio {:.3}/{:.3}, scaled slack {:.3e} -> {:.3e}",
            a.kind.name(),
            a.oracle_ratio,
            b.oracle_ratio,
            a.slack_scaled,
            b.slack_scaled
        ));
    }
    let mut robust_ok = true;
    for r in [&base.robust, &doubled.robust] {
        robust_ok &= r.sup <= base.factor * r.oracle_risk + r.slack + 1e-15;
    }
    let band = 3.0 * 0.1
        * base.models.iter().chain(&doubled.models).map(|m| m.slack_se * m.slack_se).sum::<f64>().sqrt()
        * 68.0;
    robust_ok &= doubled.robust.slack_scaled <= base.robust.slack_scaled + band;
    lines.push(format!(
        "robust: sup {:.4e} vs oracle {:.4e}, scaled slack {:.3e} -> {:.3e}",
        base.robust.sup, base.robust.oracle_risk, base.robust.slack_scaled, doubled.robust.slack_scaled
    ));
    let passed = noiseless_ok && noisy_ok && robust_ok;
    verdict(9, "oracle inequality", passed, &lines.join("; "));
    assert!(noiseless_ok, "noiseless selection missed the oracle");
    assert!(noisy_ok, "{lines:#?}");
    assert!(robust_ok, "{lines:#?}");
}

#[test]
fn criterion_10_coefficient_accuracy() {
    let s = Phantom::desk_default();
    let q = 256;
    let sets = IndexSets::new(2, 4).unwrap();
    let design = SinogramDesign::new(&s, &sets.s_n, q).unwrap();
    let plan = CoefficientPlan::new(&design, &sets.s_n, PhaseConvention::Conjugate).unwrap();
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for (j, a) in sets.s_n.iter().zip(plan.signal()) {
        let theta = polar_theta(&s, j, 128, 128).unwrap();
        let tol = f64::max(1e-3, 5.0 / q as f64 * theta.norm());
        let err = (a - theta).norm();
        worst = worst.max(err / tol);
        if err > tol {
            failures.push(j.clone());
        }
    }
    let passed = failures.is_empty();
    verdict(
        10,
        "noiseless coefficient accuracy",
        passed,
        &format!("{} of {} indices outside tolerance, worst error/tolerance {worst:.3}", failures.len(), sets.s_n.len()),
    );
    assert!(passed, "indices outside tolerance: {failures:?}");
}

#[test]
fn criterion_11_parseval_consistency() {
    let exp = Experiment::new(ExperimentConfig::desk_default()).unwrap();
    let noise = family().models()[0];
    let mut rng = ctselect::obsmodel::stream_rng(SEED, 0);
    let est = exp.plan().estimate(&exp.design().draw_noise(&noise, NoiseKeying::PerDirection, &mut rng));
    let sigma = ctselect::estimator::sigma_hat(&est, exp.sets()).unwrap();
    let sel = select(exp.family(), &est, 0.1, sigma).unwrap();
    let coeff_err = exp.error_of(&sel.weights, &est);

    let res = 512;
    let raster = reconstruct(&sel.weights, &est, 1.0, res).unwrap();
    let s = Phantom::desk_default();
    let cell = (2.0 / res as f64).powi(2);
    let mut sq: Vec<f64> = Vec::with_capacity(res * res);
    for a in 0..res {
        for b in 0..res {
            let diff = raster.values[a * res + b] - s.eval(&[raster.node(a), raster.node(b)]);
            sq.push(diff * diff * cell);
        }
    }
    let raster_err = ctselect::stats::pairwise_sum(&sq);
    let rel = (coeff_err - raster_err).abs() / raster_err;
    let passed = rel <= 0.01;
    verdict(
        11,
        "coefficient and raster error agree",
        passed,
        &format!("coefficient {coeff_err:.6e}, raster {raster_err:.6e}, relative gap {rel:.2e}"),
    );
    assert!(passed);
}
