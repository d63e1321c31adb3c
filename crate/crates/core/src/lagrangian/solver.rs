use serde::Serialize;

use crate::error::{Error, Result};
use crate::function_spaces::{
    compose_with, divergence, invert_displacement, leray_project, Diffeo, Interpolant,
    InversionOptions, ScalarField, SobolevIndex, VectorField2,
};
use crate::lagrangian::pressure::{acceleration_spectra, compute_b, unsplit_pressure_gradient};

/// Flow map and its time derivative, `(phi, v = phi_t)`.
#[derive(Debug, Clone)]
pub struct LagrangianState {
    pub phi: Diffeo,
    pub v: VectorField2,
}

impl LagrangianState {
    /// `(id, u0)`.
    pub fn initial(u0: &VectorField2) -> Self {
        Self {
            phi: Diffeo::identity(*u0.grid()),
            v: u0.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverParams {
    pub s: SobolevIndex,
    pub dt: f64,
    pub horizon: f64,
    /// Steps between saved states and diagnostics; the endpoints are always
    /// saved.
    pub save_every: usize,
    pub inversion_tolerance: f64,
    pub inversion_max_iters: usize,
    /// Largest admitted L² divergence of `u0`; `None` skips the check.
    pub divergence_tolerance: Option<f64>,
    /// Abort when `max|v| dt` exceeds this fraction of the grid spacing.
    pub cfl_fraction: f64,
    /// Abort when `max |grad d|` reaches this bound.
    pub max_displacement_gradient: f64,
    /// Keep full states at save times, not only diagnostics.
    pub keep_states: bool,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            s: SobolevIndex::new(2.5).expect("valid"),
            dt: 1e-3,
            horizon: 1.0,
            save_every: 100,
            inversion_tolerance: crate::function_spaces::DEFAULT_INVERSION_TOLERANCE,
            inversion_max_iters: crate::function_spaces::DEFAULT_INVERSION_MAX_ITERS,
            divergence_tolerance: Some(1e-10),
            cfl_fraction: 0.5,
            max_displacement_gradient: 0.9,
            keep_states: false,
        }
    }
}

impl SolverParams {
    pub fn with_horizon(&self, horizon: f64) -> Self {
        Self {
            horizon,
            ..self.clone()
        }
    }

    pub fn with_dt(&self, dt: f64) -> Self {
        Self { dt, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParams(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "horizon = {} must be non-negative",
                self.horizon
            )));
        }
        if self.horizon > 0.0 && self.dt > self.horizon * (1.0 + 1e-12) {
            return Err(Error::InvalidParams(format!(
                "dt = {} exceeds the horizon {}",
                self.dt, self.horizon
            )));
        }
        if !(self.inversion_tolerance > 0.0) {
            return Err(Error::InvalidParams("inversion tolerance must be positive".into()));
        }
        Ok(())
    }

    /// Number of steps and the step actually used, `horizon / steps`.
    pub fn step_plan(&self) -> (usize, f64) {
        if self.horizon == 0.0 {
            return (0, self.dt);
        }
        let steps = ((self.horizon / self.dt).round() as usize).max(1);
        (steps, self.horizon / steps as f64)
    }

    fn inversion(&self) -> InversionOptions {
        InversionOptions {
            tolerance: self.inversion_tolerance,
            max_iters: self.inversion_max_iters,
        }
    }
}

/// Diagnostics at one save time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diagnostics {
    pub t: f64,
    /// `||div u||_{L2}` with `u = v ∘ phi^{-1}`.
    pub div_l2: f64,
    pub u_l2: f64,
    pub u_hs: f64,
    pub theta_hs: f64,
    pub min_det: f64,
    /// `||u||^2_{L2} / 2`.
    pub energy: f64,
    /// `||theta ∘ phi - theta0||_{L2} / ||theta0||_{L2}` (0 for `theta0 = 0`).
    pub transport_residual: f64,
    /// Relative L² gap between the split and unsplit pressure forms on the
    /// Leray projection of `u`.
    pub split_residual: f64,
    pub max_displacement_gradient: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub diagnostics: Vec<Diagnostics>,
    /// States at save times when [`SolverParams::keep_states`] is set.
    pub states: Vec<LagrangianState>,
    pub final_state: LagrangianState,
    /// Displacement of `phi(T)^{-1}`.
    pub final_inverse: VectorField2,
    pub final_velocity: VectorField2,
    pub final_theta: ScalarField,
    /// Total fixed-point updates spent inverting flow maps.
    pub inversion_iterations: usize,
}

impl Trajectory {
    /// `Ψ^T(u0, theta0) = phi(T)`.
    pub fn final_phi(&self) -> &Diffeo {
        &self.final_state.phi
    }
}

/// Evaluates the Lagrangian acceleration, reusing the last inverse as the
/// starting guess of the next inversion.
pub(crate) struct RhsEvaluator {
    theta0: ScalarField,
    theta0_interp: Interpolant<1>,
    inversion: InversionOptions,
    max_grad: f64,
    warm: Option<VectorField2>,
    pub iterations: usize,
}

impl RhsEvaluator {
    pub fn new(theta0: &ScalarField, inversion: InversionOptions, max_grad: f64) -> Self {
        Self {
            theta0: theta0.clone(),
            theta0_interp: Interpolant::from_fields([theta0]),
            inversion,
            max_grad,
            warm: None,
            iterations: 0,
        }
    }

    fn diffeo(&self, displacement: &VectorField2, t: f64) -> Result<Diffeo> {
        let phi = Diffeo::new(displacement.clone()).map_err(|e| match e {
            Error::DegenerateDiffeo { min_det } => Error::BlowupDetected {
                t,
                reason: format!("Jacobian determinant reached {min_det:e}"),
            },
            other => other,
        })?;
        if phi.max_displacement_gradient() >= self.max_grad {
            return Err(Error::BlowupDetected {
                t,
                reason: format!(
                    "max |grad d| = {:.4} left the contraction regime",
                    phi.max_displacement_gradient()
                ),
            });
        }
        Ok(phi)
    }

    fn inverse(&mut self, phi: &Diffeo) -> Result<VectorField2> {
        let (e, iters) = invert_displacement(phi, self.warm.as_ref(), self.inversion)?;
        self.iterations += iters;
        self.warm = Some(e.clone());
        Ok(e)
    }

    /// `dv/dt = [∇B(u,u) - Δ^{-1}∇d2(θ0 ∘ phi^{-1})] ∘ phi + (0, θ0)` with
    /// `u = v ∘ phi^{-1}`.
    pub fn acceleration(&mut self, phi: &Diffeo, v: &VectorField2) -> Result<VectorField2> {
        let e = self.inverse(phi)?;
        let mut uv = compose_with(&Interpolant::from_fields(v.components()), &e);
        let u2 = uv.pop().expect("two components");
        let u1 = uv.pop().expect("two components");
        let u = VectorField2::new(u1, u2)?;
        let theta = compose_with(&self.theta0_interp, &e).pop().expect("one component");
        let (g1, g2) = acceleration_spectra(&u, &theta);
        let mut a = compose_with(&Interpolant::from_coeffs([&g1, &g2]), phi.displacement());
        let a2 = a.pop().expect("two components").axpy(1.0, &self.theta0);
        let a1 = a.pop().expect("two components");
        VectorField2::new(a1, a2)
    }

    fn eval(&mut self, displacement: &VectorField2, v: &VectorField2, t: f64) -> Result<VectorField2> {
        let phi = self.diffeo(displacement, t)?;
        self.acceleration(&phi, v)
    }

    /// One classical RK4 step of `(d, v)`.
    pub fn step(&mut self, d: &VectorField2, v: &VectorField2, t: f64, dt: f64) -> Result<(VectorField2, VectorField2)> {
        let a1 = self.eval(d, v, t)?;
        let d2 = d.axpy(0.5 * dt, v);
        let v2 = v.axpy(0.5 * dt, &a1);
        let a2 = self.eval(&d2, &v2, t + 0.5 * dt)?;
        let d3 = d.axpy(0.5 * dt, &v2);
        let v3 = v.axpy(0.5 * dt, &a2);
        let a3 = self.eval(&d3, &v3, t + 0.5 * dt)?;
        let d4 = d.axpy(dt, &v3);
        let v4 = v.axpy(dt, &a3);
        let a4 = self.eval(&d4, &v4, t + dt)?;
        let sixth = dt / 6.0;
        let d_next = d
            .axpy(sixth, v)
            .axpy(2.0 * sixth, &v2)
            .axpy(2.0 * sixth, &v3)
            .axpy(sixth, &v4);
        let v_next = v
            .axpy(sixth, &a1)
            .axpy(2.0 * sixth, &a2)
            .axpy(2.0 * sixth, &a3)
            .axpy(sixth, &a4);
        Ok((d_next, v_next))
    }

    /// Eulerian fields and diagnostics of a state.
    fn observe(
        &mut self,
        phi: &Diffeo,
        v: &VectorField2,
        t: f64,
        s: f64,
    ) -> Result<(Diagnostics, VectorField2, ScalarField, VectorField2)> {
        let e = self.inverse(phi)?;
        let mut uv = compose_with(&Interpolant::from_fields(v.components()), &e);
        let u2 = uv.pop().expect("two components");
        let u1 = uv.pop().expect("two components");
        let u = VectorField2::new(u1, u2)?;
        let theta = compose_with(&self.theta0_interp, &e).pop().expect("one component");

        let theta0_l2 = self.theta0.l2_norm();
        let transport_residual = if theta0_l2 == 0.0 {
            0.0
        } else {
            let back = compose_with(&Interpolant::from_fields([&theta]), phi.displacement())
                .pop()
                .expect("one component");
            (&back - &self.theta0).l2_norm() / theta0_l2
        };
        let projected = leray_project(&u);
        let split = compute_b(&projected);
        let unsplit = unsplit_pressure_gradient(&projected);
        let scale = unsplit.l2_norm();
        let split_residual = if scale == 0.0 {
            (&split - &unsplit).l2_norm()
        } else {
            (&split - &unsplit).l2_norm() / scale
        };
        let u_l2 = u.l2_norm();
        let diag = Diagnostics {
            t,
            div_l2: divergence(&u).l2_norm(),
            u_l2,
            u_hs: u.sobolev_norm(s),
            theta_hs: theta.sobolev_norm(s),
            min_det: phi.min_jacobian_det(),
            energy: 0.5 * u_l2 * u_l2,
            transport_residual,
            split_residual,
            max_displacement_gradient: phi.max_displacement_gradient(),
        };
        Ok((diag, u, theta, e))
    }
}

/// Right-hand side of the first-order system at `state`:
/// `(dphi/dt, dv/dt)`.
pub fn vector_field(
    state: &LagrangianState,
    theta0: &ScalarField,
) -> Result<(VectorField2, VectorField2)> {
    let mut rhs = RhsEvaluator::new(theta0, InversionOptions::default(), f64::INFINITY);
    let a = rhs.acceleration(&state.phi, &state.v)?;
    Ok((state.v.clone(), a))
}

/// One RK4 step of size `params.dt`.
pub fn step_rk4(
    state: &LagrangianState,
    theta0: &ScalarField,
    params: &SolverParams,
) -> Result<LagrangianState> {
    params.validate()?;
    let mut rhs = RhsEvaluator::new(theta0, params.inversion(), params.max_displacement_gradient);
    let (d, v) = rhs.step(state.phi.displacement(), &state.v, 0.0, params.dt)?;
    Ok(LagrangianState {
        phi: rhs.diffeo(&d, params.dt)?,
        v,
    })
}

fn check_cfl(v: &VectorField2, dt: f64, fraction: f64, t: f64) -> Result<()> {
    let courant = v.max_magnitude() * dt;
    let limit = fraction * v.grid().spacing();
    if !(courant <= limit) {
        return Err(Error::CflViolation { t, courant, limit });
    }
    Ok(())
}

/// Integrates from `(id, u0)` to `params.horizon`.
pub fn solve(u0: &VectorField2, theta0: &ScalarField, params: &SolverParams) -> Result<Trajectory> {
    params.validate()?;
    if u0.grid() != theta0.grid() {
        return Err(Error::GridMismatch);
    }
    if !u0.is_finite() || !theta0.is_finite() {
        return Err(Error::NonFinite("initial data"));
    }
    if let Some(tol) = params.divergence_tolerance {
        let div = divergence(u0).l2_norm();
        if div > tol {
            return Err(Error::DivergentData(div));
        }
    }
    let s = params.s.value();
    let (steps, dt) = params.step_plan();
    let mut rhs = RhsEvaluator::new(theta0, params.inversion(), params.max_displacement_gradient);

    let mut d = VectorField2::zeros(*u0.grid());
    let mut v = u0.clone();
    let mut times = Vec::new();
    let mut diagnostics = Vec::new();
    let mut states = Vec::new();

    let mut phi = Diffeo::identity(*u0.grid());
    let mut record = |rhs: &mut RhsEvaluator, phi: &Diffeo, v: &VectorField2, t: f64| -> Result<_> {
        let (diag, u, theta, e) = rhs.observe(phi, v, t, s)?;
        times.push(t);
        diagnostics.push(diag);
        if params.keep_states {
            states.push(LagrangianState {
                phi: phi.clone(),
                v: v.clone(),
            });
        }
        Ok((u, theta, e))
    };
    let mut last = record(&mut rhs, &phi, &v, 0.0)?;
    for step in 0..steps {
        let t = step as f64 * dt;
        check_cfl(&v, dt, params.cfl_fraction, t)?;
        let (d_next, v_next) = rhs.step(&d, &v, t, dt)?;
        if !v_next.is_finite() {
            return Err(Error::BlowupDetected {
                t: t + dt,
                reason: "non-finite velocity".into(),
            });
        }
        d = d_next;
        v = v_next;
        phi = rhs.diffeo(&d, t + dt)?;
        let done = step + 1 == steps;
        if done || (params.save_every > 0 && (step + 1) % params.save_every == 0) {
            last = record(&mut rhs, &phi, &v, (step + 1) as f64 * dt)?;
        }
    }
    let (final_velocity, final_theta, final_inverse) = last;
    Ok(Trajectory {
        times,
        diagnostics,
        states,
        final_state: LagrangianState { phi, v },
        final_inverse,
        final_velocity,
        final_theta,
        inversion_iterations: rhs.iterations,
    })
}

/// `Ψ^T(u0, theta0)`, the flow map at the horizon.
pub fn flow_map(u0: &VectorField2, theta0: &ScalarField, params: &SolverParams) -> Result<Diffeo> {
    Ok(solve(u0, theta0, params)?.final_state.phi)
}

/// `(u(T), theta(T)) = (v(T) ∘ phi(T)^{-1}, theta0 ∘ phi(T)^{-1})`.
pub fn solution_map_phi(
    u0: &VectorField2,
    theta0: &ScalarField,
    params: &SolverParams,
) -> Result<(VectorField2, ScalarField)> {
    let traj = solve(u0, theta0, params)?;
    Ok((traj.final_velocity, traj.final_theta))
}

/// `Φ_T(u0, θ0) = (Φ¹(T u0, T² θ0) / T, Φ²(T u0, T² θ0) / T²)` through the
/// time-1 map, integrated with `params.dt`.
pub fn scaled_solution_map(
    u0: &VectorField2,
    theta0: &ScalarField,
    t: f64,
    params: &SolverParams,
) -> Result<(VectorField2, ScalarField)> {
    if t == 0.0 {
        return Ok((u0.clone(), theta0.clone()));
    }
    if !(t > 0.0) {
        return Err(Error::InvalidParams(format!("horizon {t} must be non-negative")));
    }
    let (u1, theta1) = solution_map_phi(&u0.scaled(t), &theta0.scaled(t * t), &params.with_horizon(1.0))?;
    Ok((u1.scaled(1.0 / t), theta1.scaled(1.0 / (t * t))))
}

/// `||div u(t)||_{L2}` at each save time.
pub fn div_diagnostic(trajectory: &Trajectory) -> Vec<f64> {
    trajectory.diagnostics.iter().map(|d| d.div_l2).collect()
}
