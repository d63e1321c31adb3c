//! Invariant checks with measured values against fixed tolerances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::eulerian::solve_eulerian;
use crate::experiments::check_scaling;
use crate::function_spaces::{
    make_divfree_from_stream, periodic_gaussian, ScalarField, SobolevIndex, VectorField2,
};
use crate::lagrangian::{compute_b, solve, unsplit_pressure_gradient, SolverParams};
use crate::spectral::{
    apply_multiplier, apply_multipliers, forward_transform, inverse_transform, Axis, Grid2D,
    Multiplier, SpectralCoeffs,
};

/// Round-trip, Riesz and pressure-form tolerance.
pub const SPECTRAL_TOLERANCE: f64 = 1e-12;
pub const DIVERGENCE_TOLERANCE: f64 = 1e-6;
pub const TRANSPORT_TOLERANCE: f64 = 1e-4;
pub const EULER_TOLERANCE: f64 = 1e-2;
pub const SCALING_TOLERANCE: f64 = 1e-6;
pub const PHI_T_TOLERANCE: f64 = 1e-5;
pub const DERIVATIVE_TOLERANCE: f64 = 1e-3;
/// Allowed deviation of the measured Richardson order from 2.
pub const RICHARDSON_ORDER_SLACK: f64 = 0.25;

/// The smooth test datum: a counter-rotating Gaussian vortex pair and a
/// warm Gaussian blob below it.
pub fn standard_datum(grid: Grid2D) -> (VectorField2, ScalarField) {
    let psi = periodic_gaussian(grid, [-2.0, 0.0], 2.5, 0.5)
        .axpy(-1.0, &periodic_gaussian(grid, [2.0, 0.0], 2.5, 0.5));
    let theta = periodic_gaussian(grid, [0.0, -3.0], 2.0, 0.1);
    (make_divfree_from_stream(&psi), theta)
}

/// Real field with independent Gaussian coefficients damped by
/// `exp(-|xi|^2 / (2 kappa^2))`; Nyquist modes are left empty.
pub fn random_smooth_field(grid: Grid2D, kappa: f64, rng: &mut ChaCha8Rng) -> ScalarField {
    let n = grid.n();
    let f = grid.frequencies();
    let mut c = SpectralCoeffs::zeros(grid);
    for j2 in 0..n {
        for j1 in 0..n {
            if j1 == n / 2 || j2 == n / 2 {
                continue;
            }
            let (m1, m2) = (grid.mirror(j1), grid.mirror(j2));
            // fill one representative of each conjugate pair
            if (j2, j1) > (m2, m1) {
                continue;
            }
            let damp = (-(f[j1] * f[j1] + f[j2] * f[j2]) / (2.0 * kappa * kappa)).exp();
            let z = if (j1, j2) == (m1, m2) {
                Complex64::new(rng.gen_range(-1.0..1.0) * damp, 0.0)
            } else {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * damp
            };
            c.values_mut()[grid.index(j1, j2)] = z;
            c.values_mut()[grid.index(m1, m2)] = z.conj();
        }
    }
    inverse_transform(&c).expect("conjugate-symmetric synthesis")
}

/// Divergence-free field from a random smooth stream function.
pub fn random_divfree_field(grid: Grid2D, kappa: f64, rng: &mut ChaCha8Rng) -> VectorField2 {
    make_divfree_from_stream(&random_smooth_field(grid, kappa, rng))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    AtMost,
    AtLeast,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub comparison: Comparison,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    pub fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            comparison: Comparison::AtMost,
            tolerance,
            passed: value <= tolerance,
            detail: String::new(),
        }
    }

    pub fn at_least(name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            comparison: Comparison::AtLeast,
            tolerance,
            passed: value >= tolerance,
            detail: String::new(),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    fn failed(name: &str, err: &Error) -> Self {
        Self {
            name: name.into(),
            value: f64::NAN,
            comparison: Comparison::AtMost,
            tolerance: f64::NAN,
            passed: false,
            detail: err.to_string(),
        }
    }

    /// `name value <= tol PASS`.
    pub fn line(&self) -> String {
        let op = match self.comparison {
            Comparison::AtMost => "<=",
            Comparison::AtLeast => ">=",
        };
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        if self.detail.is_empty() {
            format!("{verdict} {}: {:.3e} {op} {:.3e}", self.name, self.value, self.tolerance)
        } else {
            format!(
                "{verdict} {}: {:.3e} {op} {:.3e} ({})",
                self.name, self.value, self.tolerance, self.detail
            )
        }
    }
}

fn max_abs(values: &[Complex64]) -> f64 {
    values.iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

fn max_gap(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).norm()))
}

/// Round trip, Riesz identity, partition, multiplier composition and Hˢ
/// monotonicity on random smooth fields.
pub fn check_spectral_identities(grid: Grid2D, seed: u64) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut round_trip = 0.0f64;
    let mut riesz = 0.0f64;
    let mut partition = 0.0f64;
    let mut composition = 0.0f64;
    let mut monotone = true;
    let mut l2_gap = 0.0f64;
    for _ in 0..5 {
        let f = random_smooth_field(grid, 0.25 * grid.frequency(grid.n() / 2 - 1), &mut rng);
        let c = forward_transform(&f);
        let back = inverse_transform(&c).expect("real spectrum");
        round_trip = round_trip.max(back.max_abs_diff(&f) / f.max_abs());

        let mut zero_mean = c.clone();
        zero_mean.values_mut()[0] = Complex64::new(0.0, 0.0);
        let r1 = apply_multiplier(&apply_multiplier(&zero_mean, Multiplier::Riesz(Axis::X1)), Multiplier::Riesz(Axis::X1));
        let r2 = apply_multiplier(&apply_multiplier(&zero_mean, Multiplier::Riesz(Axis::X2)), Multiplier::Riesz(Axis::X2));
        let sum = r1.add(&r2).expect("same grid");
        let plus = sum.add(&zero_mean).expect("same grid");
        riesz = riesz.max(max_abs(plus.values()) / max_abs(zero_mean.values()));

        let low = apply_multiplier(&c, Multiplier::BallCutoff);
        let high = apply_multiplier(&c, Multiplier::BallCutoffComplement);
        partition = partition.max(max_gap(low.add(&high).expect("same grid").values(), c.values()));

        for axis in [Axis::X1, Axis::X2] {
            let seq = apply_multiplier(&apply_multiplier(&c, Multiplier::Gradient(axis)), Multiplier::InverseLaplacian);
            let combined = apply_multipliers(&c, &[Multiplier::Gradient(axis), Multiplier::InverseLaplacian]);
            composition = composition.max(max_gap(seq.values(), combined.values()) / max_abs(seq.values()));
        }

        let norms: Vec<f64> = [0.0, 0.5, 1.0, 2.0, 2.5, 3.0].iter().map(|&s| c.sobolev_norm(s)).collect();
        monotone &= norms.windows(2).all(|w| w[0] <= w[1]);
        l2_gap = l2_gap.max((norms[0] - f.l2_norm()).abs() / f.l2_norm());
    }
    vec![
        CheckResult::at_most("round_trip", round_trip, SPECTRAL_TOLERANCE),
        CheckResult::at_most("riesz_identity", riesz, SPECTRAL_TOLERANCE),
        CheckResult::at_most("ball_partition", partition, 0.0).with_detail("exact"),
        CheckResult::at_most("multiplier_composition", composition, 4.0 * f64::EPSILON),
        CheckResult::at_most("sobolev_monotone", if monotone { 0.0 } else { 1.0 }, 0.0),
        CheckResult::at_most("sobolev_s0_is_l2", l2_gap, SPECTRAL_TOLERANCE),
    ]
}

/// Largest relative max-norm gap between the χ-split pressure and the
/// unsplit form over `count` random divergence-free fields.
pub fn check_pressure_equivalence(grid: Grid2D, count: usize, seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kappa = 0.2 * grid.frequency(grid.n() / 2 - 1);
    let mut worst = 0.0f64;
    for _ in 0..count {
        let u = random_divfree_field(grid, kappa, &mut rng);
        let split = compute_b(&u);
        let unsplit = unsplit_pressure_gradient(&u);
        worst = worst.max(split.max_abs_diff(&unsplit) / unsplit.max_magnitude());
    }
    CheckResult::at_most("pressure_split_equivalence", worst, SPECTRAL_TOLERANCE)
        .with_detail(format!("{count} fields"))
}

/// Divergence, transport and split-form diagnostics over one run.
pub fn check_conservation(
    u0: &VectorField2,
    theta0: &ScalarField,
    params: &SolverParams,
) -> Result<Vec<CheckResult>> {
    let traj = solve(u0, theta0, params)?;
    let div = traj
        .diagnostics
        .iter()
        .map(|d| d.div_l2 / d.u_l2)
        .fold(0.0f64, f64::max);
    let transport = traj
        .diagnostics
        .iter()
        .map(|d| d.transport_residual)
        .fold(0.0f64, f64::max);
    let split = traj
        .diagnostics
        .iter()
        .map(|d| d.split_residual)
        .fold(0.0f64, f64::max);
    let saves = traj.diagnostics.len();
    Ok(vec![
        CheckResult::at_most("divergence_preservation", div, DIVERGENCE_TOLERANCE)
            .with_detail(format!("max over {saves} saves")),
        CheckResult::at_most("transport_identity", transport, TRANSPORT_TOLERANCE)
            .with_detail(format!("max over {saves} saves")),
        CheckResult::at_most("split_form_during_run", split, SPECTRAL_TOLERANCE)
            .with_detail(format!("max over {saves} saves")),
    ])
}

/// Relative H¹ gap between the Lagrangian and Eulerian solutions with
/// `theta0 = 0` at `grid` and at half resolution, and the observed order.
pub fn check_euler_reduction(
    grid: Grid2D,
    params: &SolverParams,
    horizon: f64,
) -> Result<Vec<CheckResult>> {
    let coarse = Grid2D::new(grid.n() / 2, grid.box_length())?;
    let gap = |g: Grid2D| -> Result<f64> {
        let (u0, _) = standard_datum(g);
        let zero = ScalarField::zeros(g);
        let traj = solve(&u0, &zero, &params.with_horizon(horizon))?;
        let (ue, _) = solve_eulerian(&u0, &zero, horizon, params.dt)?;
        Ok((&traj.final_velocity - &ue).sobolev_norm(1.0) / ue.sobolev_norm(1.0))
    };
    let fine_gap = gap(grid)?;
    let coarse_gap = gap(coarse)?;
    let order = (coarse_gap / fine_gap).log2();
    Ok(vec![
        CheckResult::at_most("euler_reduction", fine_gap, EULER_TOLERANCE)
            .with_detail(format!("n = {}, T = {horizon}", grid.n())),
        CheckResult::at_least("euler_refinement_order", order, 0.0).with_detail(format!(
            "gap {coarse_gap:.3e} at n = {} -> {fine_gap:.3e} at n = {}",
            coarse.n(),
            grid.n()
        )),
    ])
}

/// Scaling residuals for every `lambda`, plus the `Φ_T` identity at
/// `horizon`.
pub fn check_scaling_identity(
    u0: &VectorField2,
    theta0: &ScalarField,
    params: &SolverParams,
    horizon: f64,
    lambdas: &[f64],
) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    let mut phi_t = None;
    for &lambda in lambdas {
        let report = check_scaling(u0, theta0, horizon, lambda, params)?;
        out.push(
            CheckResult::at_most(&format!("scaling_lambda_{lambda}"), report.state_residual, SCALING_TOLERANCE)
                .with_detail(format!("t = {horizon}")),
        );
        phi_t = Some(report.phi_t_residual);
    }
    let phi_t = match phi_t {
        Some(v) => v,
        None => check_scaling(u0, theta0, horizon, 1.0, params)?.phi_t_residual,
    };
    out.push(
        CheckResult::at_most("phi_t_identity", phi_t, PHI_T_TOLERANCE).with_detail(format!("T = {horizon}")),
    );
    Ok(out)
}

/// `(Ψ(eps u0, 0) - Ψ(-eps u0, 0)) / (2 eps)` as a displacement field.
pub fn derivative_at_zero(u0: &VectorField2, epsilon: f64, params: &SolverParams) -> Result<VectorField2> {
    let zero = ScalarField::zeros(*u0.grid());
    let p = params.with_horizon(1.0);
    let plus = solve(&u0.scaled(epsilon), &zero, &p)?;
    let minus = solve(&u0.scaled(-epsilon), &zero, &p)?;
    Ok((plus.final_phi().displacement() - minus.final_phi().displacement()).scaled(0.5 / epsilon))
}

/// The derivative of `Ψ` at `(0, 0)` in direction `(u0, 0)` against `u0`,
/// and the Richardson order of the central difference over `steps`
/// (successive halvings).
pub fn check_derivative_identity(
    u0: &VectorField2,
    params: &SolverParams,
    epsilon: f64,
    steps: [f64; 3],
) -> Result<Vec<CheckResult>> {
    let s = params.s.value();
    let scale = u0.sobolev_norm(s);
    let d = derivative_at_zero(u0, epsilon, params)?;
    let error = (&d - u0).sobolev_norm(s) / scale;
    let ds = steps
        .iter()
        .map(|&e| derivative_at_zero(u0, e, params))
        .collect::<Result<Vec<_>>>()?;
    let coarse = (&ds[0] - &ds[1]).sobolev_norm(s);
    let fine = (&ds[1] - &ds[2]).sobolev_norm(s);
    let ratio = steps[0] / steps[1];
    let order = (coarse / fine).ln() / ratio.ln();
    Ok(vec![
        CheckResult::at_most("derivative_identity", error, DERIVATIVE_TOLERANCE)
            .with_detail(format!("eps = {epsilon:e}")),
        CheckResult::at_most("derivative_richardson_order", (order - 2.0).abs(), RICHARDSON_ORDER_SLACK)
            .with_detail(format!("observed order {order:.4} from eps = {steps:?}")),
    ])
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationConfig {
    pub grid: Grid2D,
    pub s: SobolevIndex,
    pub seed: u64,
    pub random_fields: usize,
    pub conservation_dt: f64,
    pub conservation_horizon: f64,
    pub conservation_save_every: usize,
    pub euler_dt: f64,
    pub euler_horizon: f64,
    pub scaling_dt: f64,
    pub scaling_horizon: f64,
    pub lambdas: Vec<f64>,
    pub derivative_dt: f64,
    pub derivative_epsilon: f64,
    pub richardson_steps: [f64; 3],
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            grid: Grid2D::standard(),
            s: SobolevIndex::new(2.5).expect("valid"),
            seed: 7,
            random_fields: 20,
            conservation_dt: 1e-3,
            conservation_horizon: 1.0,
            conservation_save_every: 50,
            euler_dt: 5e-3,
            euler_horizon: 0.5,
            scaling_dt: 1e-2,
            scaling_horizon: 0.5,
            lambdas: vec![0.5, 2.0],
            derivative_dt: 5e-2,
            derivative_epsilon: 1e-4,
            richardson_steps: [0.2, 0.1, 0.05],
        }
    }
}

impl ValidationConfig {
    pub fn solver(&self, dt: f64) -> SolverParams {
        SolverParams {
            s: self.s,
            dt,
            save_every: 0,
            ..SolverParams::default()
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
    /// First solver failure (blowup, CFL or inversion), if any.
    pub solver_error: Option<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Runs every check group; a failing solve marks its group failed and the
/// suite continues.
pub fn run_validation(config: &ValidationConfig) -> ValidationReport {
    let grid = config.grid;
    let (u0, theta0) = standard_datum(grid);
    let mut checks = check_spectral_identities(grid, config.seed);
    checks.push(check_pressure_equivalence(grid, config.random_fields, config.seed + 1));
    let mut solver_error = None;
    let mut group = |name: &str, r: Result<Vec<CheckResult>>, checks: &mut Vec<CheckResult>| match r {
        Ok(v) => checks.extend(v),
        Err(e) => {
            if matches!(
                e,
                Error::BlowupDetected { .. } | Error::CflViolation { .. } | Error::NoConvergence { .. }
            ) && solver_error.is_none()
            {
                solver_error = Some(e.to_string());
            }
            checks.push(CheckResult::failed(name, &e));
        }
    };
    let conservation = SolverParams {
        horizon: config.conservation_horizon,
        save_every: config.conservation_save_every,
        ..config.solver(config.conservation_dt)
    };
    group("conservation", check_conservation(&u0, &theta0, &conservation), &mut checks);
    group(
        "euler_reduction",
        check_euler_reduction(grid, &config.solver(config.euler_dt), config.euler_horizon),
        &mut checks,
    );
    group(
        "scaling",
        check_scaling_identity(
            &u0,
            &theta0,
            &config.solver(config.scaling_dt),
            config.scaling_horizon,
            &config.lambdas,
        ),
        &mut checks,
    );
    group(
        "derivative",
        check_derivative_identity(
            &u0,
            &config.solver(config.derivative_dt),
            config.derivative_epsilon,
            config.richardson_steps,
        ),
        &mut checks,
    );
    ValidationReport {
        checks,
        solver_error,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_fields_are_real_and_reproducible() {
        let grid = Grid2D::new(32, 10.0).unwrap();
        let a = random_smooth_field(grid, 2.0, &mut ChaCha8Rng::seed_from_u64(3));
        let b = random_smooth_field(grid, 2.0, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
        assert!(forward_transform(&a).symmetry_defect() < 1e-15);
        assert!(a.max_abs() > 0.0);
    }

    #[test]
    fn spectral_checks_pass_on_a_small_grid() {
        for c in check_spectral_identities(Grid2D::new(64, 20.0).unwrap(), 1) {
            assert!(c.passed, "{}", c.line());
        }
    }

    #[test]
    fn pressure_check_passes_on_a_small_grid() {
        let c = check_pressure_equivalence(Grid2D::new(64, 20.0).unwrap(), 3, 2);
        assert!(c.passed, "{}", c.line());
    }

    #[test]
    fn huge_step_reports_cfl_failure() {
        let grid = Grid2D::new(32, 32.0).unwrap();
        let (u0, theta0) = standard_datum(grid);
        let dt = grid.spacing() / u0.max_magnitude();
        let params = SolverParams {
            dt,
            horizon: 2.0 * dt,
            ..SolverParams::default()
        };
        let err = check_conservation(&u0, &theta0, &params).unwrap_err();
        assert!(matches!(err, Error::CflViolation { .. }));
    }

    #[test]
    fn check_lines() {
        let c = CheckResult::at_most("x", 1e-7, 1e-6);
        assert!(c.passed);
        assert!(c.line().starts_with("PASS x: "));
        assert!(!CheckResult::at_least("y", 0.1, 0.5).passed);
    }
}
