//! Invariant suites behind the `validate` subcommand.

use std::f64::consts::{FRAC_PI_2, PI};
use std::time::{Duration, Instant};

use anyhow::Context;
use ion_nmpm::closed_form::{
    f_coefficients, f_coefficients_for, first_order_coherent_inverse_square, first_order_fock_excited,
    first_order_fock_excited_inverse_square, first_order_fock_ground, first_order_fock_ground_inverse_square,
    first_order_general, g_coefficients, p_excited_second_order, second_order_coherent_inverse_square,
    second_order_pe_explicit, small_rotation_pe, CoefficientSet, CoherentExcitedSolution,
};
use ion_nmpm::fock::sigma_x;
use ion_nmpm::ion::{hamiltonian_full, identity_defects, split_high_intensity, ExactEvolution, IonOperators};
use ion_nmpm::nmpm::{assemble_state, corrections_block_matrix, corrections_quadrature, PerturbativeKets};
use ion_nmpm::rabi::{build_t, conjugate, mapped_ion_hamiltonian, transform_solution};
use ion_nmpm::report::{DeviationContext, DeviationRecord};
use ion_nmpm::{
    DenseOperator, FockSpinState, InitialStateSpec, IonParams, QuadratureConfig, Spin, TimeGrid, TruncationConfig,
};

use crate::comparison::CoherentPoint;
use crate::config::RunConfig;

pub const IDENTITY_TOL: f64 = 1e-9;
pub const TWO_PATH_TOL: f64 = 1e-8;
pub const CLOSED_FORM_TOL: f64 = 1e-7;
pub const EXPLICIT_NORM_TOL: f64 = 1e-6;
pub const NORM_TOL: f64 = 1e-10;
pub const UNITARITY_TOL: f64 = 1e-9;
pub const CONJUGATION_TOL: f64 = 1e-8;
pub const FIG1_SMALL_LAMBDA_TOL: f64 = 0.05;

/// λ, η, κ, τ points of the validation grid.
pub fn ci_grid() -> Vec<(f64, f64, f64, f64)> {
    let mut out = Vec::new();
    for lambda in [0.05, 0.1] {
        for eta in [0.05, 0.1] {
            for kappa in [0.0, 1.0] {
                for tau in [0.3, 1.0, 2.0] {
                    out.push((lambda, eta, kappa, tau));
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutcome {
    pub name: &'static str,
    /// Hard suites decide the exit status; soft suites only report.
    pub hard: bool,
    pub passed: bool,
    pub detail: String,
    pub runtime: Duration,
}

impl SuiteOutcome {
    pub fn line(&self) -> String {
        let status = match (self.passed, self.hard) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "WARN",
        };
        format!("[{status}] {:<34} {:>8.2}s  {}", self.name, self.runtime.as_secs_f64(), self.detail)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub suites: Vec<SuiteOutcome>,
    pub deviations: Vec<DeviationRecord>,
}

impl ValidationReport {
    pub fn hard_failures(&self) -> usize {
        self.suites.iter().filter(|s| s.hard && !s.passed).count()
    }
}

/// Coherent initial state and its block-matrix kets on the validation grid.
struct CoherentEngine {
    alpha: f64,
    trunc: TruncationConfig,
    psi0: FockSpinState,
    kets: Vec<PerturbativeKets>,
}

impl CoherentEngine {
    fn new(alpha: f64, trunc: TruncationConfig) -> anyhow::Result<Self> {
        let psi0 = InitialStateSpec::CoherentExcited { alpha }.build(trunc)?;
        let kets = ci_grid()
            .into_iter()
            .map(|(lambda, eta, kappa, tau)| {
                let p = IonParams::from_lambda(lambda, kappa, eta)?;
                let (h0, hp) = split_high_intensity(&p, trunc);
                corrections_block_matrix(&h0, &hp, &psi0, tau, 2, lambda)
            })
            .collect::<ion_nmpm::Result<_>>()?;
        Ok(Self { alpha, trunc, psi0, kets })
    }
}

/// Runs every suite; suite errors count as failures.
pub fn run_all(cfg: &RunConfig) -> ValidationReport {
    let mut report = ValidationReport::default();
    let (alpha, cutoff) = (cfg.alpha, cfg.fock_cutoff);
    let d = &mut report.deviations;
    let mut suites = Vec::new();
    let mut engine = None;

    suites.push(timed("operator identities", true, operator_identities));
    suites.push(timed("engine two-path", true, || {
        let e = CoherentEngine::new(alpha, TruncationConfig::with_cutoff(cutoff)?)?;
        let out = engine_two_path(&e);
        engine = Some(e);
        out
    }));
    suites.push(timed("closed form vs engine", true, || closed_form_vs_engine(engine.as_ref(), d)));
    suites.push(timed("published second-order form", false, || published_second_order(engine.as_ref(), d)));
    suites.push(timed("explicit first-order norms", true, || explicit_norms(alpha, cutoff, d)));
    suites.push(timed("normalization", true, || normalization(alpha, cutoff)));
    suites.push(timed("rabi conjugation", true, || rabi_conjugation(cutoff)));
    suites.push(timed("rabi gamma form", true, || rabi_gamma_form(alpha, cutoff, d)));
    suites.push(timed("singularity safety", true, singularity_safety));
    suites.push(timed("figure shape", true, || figure_shape(cutoff)));
    report.suites = suites;
    report
}

fn timed(
    name: &'static str,
    hard: bool,
    run: impl FnOnce() -> anyhow::Result<(bool, String)>,
) -> SuiteOutcome {
    let start = Instant::now();
    let (passed, detail) = run().unwrap_or_else(|e| (false, format!("error: {e:#}")));
    let outcome = SuiteOutcome { name, hard, passed, detail, runtime: start.elapsed() };
    log::info!("{}", outcome.line());
    outcome
}

fn operator_identities() -> anyhow::Result<(bool, String)> {
    let trunc = TruncationConfig::with_cutoff(64)?;
    let mut worst = 0.0_f64;
    for eta in [0.05, 0.1, 0.3] {
        for kappa in [0.0, 1.0] {
            let ops = IonOperators::new(IonParams::from_lambda(0.1, kappa, eta)?, trunc);
            worst = worst.max(identity_defects(&ops, &[0.3, 1.0, 2.5]).worst());
        }
    }
    Ok((worst <= IDENTITY_TOL, format!("max residual {worst:.2e} (tol {IDENTITY_TOL:.0e})")))
}

fn engine_two_path(e: &CoherentEngine) -> anyhow::Result<(bool, String)> {
    let mut worst = 0.0_f64;
    for ((lambda, eta, kappa, tau), block) in ci_grid().into_iter().zip(&e.kets) {
        let p = IonParams::from_lambda(lambda, kappa, eta)?;
        let (h0, hp) = split_high_intensity(&p, e.trunc);
        let quad = corrections_quadrature(&h0, &hp, &e.psi0, tau, 2, QuadratureConfig::default(), lambda)?;
        for n in 1..=2 {
            worst = worst.max(block.ket(n).max_abs_diff(quad.ket(n)));
        }
    }
    Ok((worst <= TWO_PATH_TOL, format!("max |block - quadrature| {worst:.2e} (tol {TWO_PATH_TOL:.0e})")))
}

fn require_engine(e: Option<&CoherentEngine>) -> anyhow::Result<&CoherentEngine> {
    e.context("engine kets unavailable; the two-path suite failed to build them")
}

fn closed_form_vs_engine(
    e: Option<&CoherentEngine>,
    deviations: &mut Vec<DeviationRecord>,
) -> anyhow::Result<(bool, String)> {
    let e = require_engine(e)?;
    let fock = TruncationConfig::with_cutoff(32)?;
    let mut worst = 0.0_f64;
    for ((lambda, eta, kappa, tau), pk) in ci_grid().into_iter().zip(&e.kets) {
        let p = IonParams::from_lambda(lambda, kappa, eta)?;
        let sol = CoherentExcitedSolution::new(e.alpha, eta, e.trunc)?;
        let first = sol.first_order(&p, tau)?;
        let second = sol.second_order(&p, tau, CoefficientSet::Corrected)?;
        worst = worst.max(first.state.max_abs_diff(&assemble_state(&pk.truncated(1)?)?));
        worst = worst.max(second.state.max_abs_diff(&assemble_state(pk)?));
        deviations.extend(first.deviations);
        deviations.extend(second.deviations);

        let (h0, hp) = split_high_intensity(&p, fock);
        for (spin, r) in [
            (Spin::Ground, first_order_fock_ground(&p, 3, tau, fock)?),
            (Spin::Excited, first_order_fock_excited(&p, 3, tau, fock)?),
        ] {
            let psi0 = FockSpinState::number(3, spin, fock)?;
            let engine = assemble_state(&corrections_block_matrix(&h0, &hp, &psi0, tau, 1, lambda)?)?;
            let general = first_order_general(&p, &psi0, tau)?;
            worst = worst.max(r.state.max_abs_diff(&engine)).max(general.state.max_abs_diff(&engine));
            deviations.extend(r.deviations);
            deviations.extend(general.deviations);
        }
    }
    Ok((worst <= CLOSED_FORM_TOL, format!("max |closed form - engine| {worst:.2e} (tol {CLOSED_FORM_TOL:.0e})")))
}

/// The literal second-order coefficients against the engine; reported, not enforced.
fn published_second_order(
    e: Option<&CoherentEngine>,
    deviations: &mut Vec<DeviationRecord>,
) -> anyhow::Result<(bool, String)> {
    let e = require_engine(e)?;
    let mut worst = 0.0_f64;
    for ((lambda, eta, kappa, tau), pk) in ci_grid().into_iter().zip(&e.kets) {
        let p = IonParams::from_lambda(lambda, kappa, eta)?;
        let sol = CoherentExcitedSolution::new(e.alpha, eta, e.trunc)?;
        let published = sol.second_order(&p, tau, CoefficientSet::Published)?;
        let d = published.state.max_abs_diff(&assemble_state(pk)?);
        worst = worst.max(d);
        let ctx = DeviationContext {
            operation: "second_order_coherent_excited",
            order: 2,
            lambda,
            eta,
            kappa,
            alpha: e.alpha,
            tau,
        };
        if d > CLOSED_FORM_TOL {
            deviations.push(ctx.record("state_max_abs_diff", d, 0.0));
        }
        if let Some(rec) = p_excited_second_order(&p, e.alpha, tau, e.trunc)?.deviation {
            deviations.push(rec);
        }
    }
    Ok((
        worst <= CLOSED_FORM_TOL,
        format!("max |published form - engine| {worst:.2e}; see deviation report"),
    ))
}

fn explicit_norms(alpha: f64, cutoff: usize, deviations: &mut Vec<DeviationRecord>) -> anyhow::Result<(bool, String)> {
    let fock = TruncationConfig::with_cutoff(32)?;
    let coh = TruncationConfig::with_cutoff(cutoff)?;
    let mut worst = 0.0_f64;
    let before = deviations.len();
    for (lambda, eta, kappa, tau) in ci_grid() {
        let p = IonParams::from_lambda(lambda, kappa, eta)?;
        for n in [0, 3] {
            let g = first_order_fock_ground(&p, n, tau, fock)?;
            let e = first_order_fock_excited(&p, n, tau, fock)?;
            let ng = first_order_fock_ground_inverse_square(n, tau, lambda, eta, kappa);
            let ne = first_order_fock_excited_inverse_square(n, tau, lambda, eta, kappa);
            worst = worst.max((ng - g.unnormalized.norm().powi(2)).abs());
            worst = worst.max((ne - e.unnormalized.norm().powi(2)).abs());
            deviations.extend(g.deviations.into_iter().chain(e.deviations));
        }
        let c = CoherentExcitedSolution::new(alpha, eta, coh)?.first_order(&p, tau)?;
        let nc = first_order_coherent_inverse_square(alpha, tau, lambda, eta, kappa);
        worst = worst.max((nc - c.unnormalized.norm().powi(2)).abs());
        deviations.extend(c.deviations);
    }
    let recorded = deviations.len() - before;
    Ok((
        worst <= EXPLICIT_NORM_TOL && recorded == 0,
        format!("max |explicit - direct| {worst:.2e} (tol {EXPLICIT_NORM_TOL:.0e}), {recorded} deviations"),
    ))
}

fn normalization(alpha: f64, cutoff: usize) -> anyhow::Result<(bool, String)> {
    let trunc = TruncationConfig::with_cutoff(cutoff)?;
    let psi0 = InitialStateSpec::CoherentExcited { alpha }.build(trunc)?;
    let mut worst = 0.0_f64;
    for lambda in [0.1, 0.4] {
        let p = IonParams::from_lambda(lambda, 0.0, 0.1)?;
        let point = CoherentPoint::new(p, alpha, 2, trunc)?;
        let grid = TimeGrid::uniform(10.0, 101)?;
        worst = worst.max(point.rows(&grid)?.iter().map(|r| r.norm_defect).fold(0.0, f64::max));
        for psi in ExactEvolution::new(&p, trunc)?.evolve(&psi0, &grid)? {
            worst = worst.max((psi.norm() - 1.0).abs());
        }
    }
    Ok((worst <= NORM_TOL, format!("max |norm - 1| {worst:.2e} (tol {NORM_TOL:.0e})")))
}

fn rabi_conjugation(cutoff: usize) -> anyhow::Result<(bool, String)> {
    let trunc = TruncationConfig::with_cutoff(cutoff)?;
    let p = IonParams::new(10.0, 1.0, 0.0, 0.1)?;
    let t = build_t(p.eta(), trunc);
    let unitarity = (&(&t.adjoint() * &t) - &DenseOperator::identity(trunc)).guard_max_abs();
    let image = conjugate(&t, &hamiltonian_full(&p, trunc));
    let residual = image.guard_max_abs_diff(&mapped_ion_hamiltonian(&p, trunc));
    let sz_image = conjugate(&t, &ion_nmpm::fock::sigma_z(trunc));
    let sz_residual = sz_image.guard_max_abs_diff(&(&sigma_x(trunc) * -1.0));
    Ok((
        unitarity <= UNITARITY_TOL && residual <= CONJUGATION_TOL && sz_residual <= CONJUGATION_TOL,
        format!("unitarity {unitarity:.2e}, conjugation {residual:.2e}, detuning image {sz_residual:.2e}"),
    ))
}

fn rabi_gamma_form(alpha: f64, cutoff: usize, deviations: &mut Vec<DeviationRecord>) -> anyhow::Result<(bool, String)> {
    let trunc = TruncationConfig::with_cutoff(cutoff)?;
    let mut worst = 0.0_f64;
    let mut norm = 0.0_f64;
    for (lambda, eta, kappa, tau) in [(0.1, 0.1, 0.0, 0.0), (0.1, 0.1, 0.0, 1.0), (0.05, 0.05, 1.0, 2.0)] {
        let p = IonParams::from_lambda(lambda, kappa, eta)?;
        let r = CoherentExcitedSolution::new(alpha, eta, trunc)?.second_order(&p, tau, CoefficientSet::Corrected)?;
        let out = transform_solution(&r, eta)?;
        worst = worst.max(out.explicit_max_abs_diff);
        norm = norm.max((out.state.norm() - 1.0).abs());
        deviations.extend(out.deviations);
    }
    Ok((
        worst <= ion_nmpm::rabi::GAMMA_FORM_TOL && norm <= NORM_TOL,
        format!("max |numeric - gamma form| {worst:.2e}, max |norm - 1| {norm:.2e}"),
    ))
}

/// τ grid over [0, 4π] with extra points within 1e-8 of each pole of tan.
pub fn pole_grid() -> Vec<f64> {
    let n = 10_000;
    let mut taus: Vec<f64> = (0..n).map(|i| 4.0 * PI * i as f64 / (n - 1) as f64).collect();
    for m in 0..4 {
        let pole = FRAC_PI_2 + m as f64 * PI;
        taus.extend([-1e-8, -1e-12, 0.0, 1e-12, 1e-8].map(|d| pole + d));
    }
    taus
}

fn singularity_safety() -> anyhow::Result<(bool, String)> {
    let (alpha, eta, kappa, lambda) = (4.0, 0.1, 1.0, 0.1);
    let mut bad = 0usize;
    let taus = pole_grid();
    for &tau in &taus {
        let f = f_coefficients(alpha, tau, eta, kappa);
        let fc = f_coefficients_for(CoefficientSet::Corrected, alpha, tau, eta, kappa);
        let g = g_coefficients(alpha, tau, eta, kappa);
        let values = [
            f.f1,
            f.f2,
            f.f3,
            f.f4,
            f.f5,
            f.f6,
            fc.f1,
            fc.f4,
            g.g1,
            g.g2,
            g.g3,
            g.g4,
            first_order_coherent_inverse_square(alpha, tau, lambda, eta, kappa),
            first_order_fock_ground_inverse_square(3, tau, lambda, eta, kappa),
            first_order_fock_excited_inverse_square(3, tau, lambda, eta, kappa),
            second_order_coherent_inverse_square(alpha, tau, lambda, eta, kappa),
            second_order_pe_explicit(alpha, tau, lambda, eta, kappa),
            small_rotation_pe(alpha, eta, lambda, tau),
        ];
        bad += values.iter().filter(|v| !v.is_finite()).count();
    }
    Ok((bad == 0, format!("{bad} non-finite values over {} points", taus.len())))
}

/// Maximum |pe_pert − pe_small_rot| over τ ∈ [0, 10], and over [0, 5] and [5, 10] separately.
pub fn figure_errors(lambda: f64, cutoff: usize) -> anyhow::Result<(f64, f64, f64)> {
    let trunc = TruncationConfig::with_cutoff(cutoff)?;
    let p = IonParams::from_lambda(lambda, 0.0, 0.1)?;
    let rows = CoherentPoint::new(p, 4.0, 2, trunc)?.rows(&TimeGrid::uniform(10.0, 1000)?)?;
    let max_over = |lo: f64, hi: f64| {
        rows.iter().filter(|r| r.tau >= lo && r.tau <= hi).map(|r| r.err_pert_smallrot).fold(0.0, f64::max)
    };
    Ok((max_over(0.0, 10.0), max_over(0.0, 5.0), max_over(5.0, 10.0)))
}

fn figure_shape(cutoff: usize) -> anyhow::Result<(bool, String)> {
    let (small, _, _) = figure_errors(0.1, cutoff)?;
    let (_, early, late) = figure_errors(0.4, cutoff)?;
    Ok((
        small <= FIG1_SMALL_LAMBDA_TOL && late > early,
        format!("lambda 0.1 max err {small:.3}; lambda 0.4 max err [0,5] {early:.3}, [5,10] {late:.3}"),
    ))
}
