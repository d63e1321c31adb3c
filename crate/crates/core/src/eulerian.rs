//! Vorticity–temperature pseudo-spectral solver for the Eulerian equations,
//! kept as an independent reference for the Lagrangian solver.
//!
//! The state evolves `omega_t = -u·∇omega + d_1 theta` and
//! `theta_t = -u·∇theta` with `u = ∇^⊥ Δ^{-1} omega + ubar`. On the torus the
//! box-mean velocity `ubar` is not determined by `omega`; it obeys
//! `ubar_t = (0, mean theta)`.

use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::function_spaces::{curl, ScalarField, VectorField2};
use crate::spectral::{
    dealias_in_place, forward_pair_raw, forward_transform, inverse_pair_raw, inverse_transform,
    Grid2D, SpectralCoeffs,
};

/// Spectra of `omega` and `theta`, both 2/3-truncated, and the mean velocity.
#[derive(Debug, Clone)]
pub struct EulerianState {
    omega: SpectralCoeffs,
    theta: SpectralCoeffs,
    mean_velocity: [f64; 2],
}

impl EulerianState {
    pub fn new(u0: &VectorField2, theta0: &ScalarField) -> Result<Self> {
        if u0.grid() != theta0.grid() {
            return Err(Error::GridMismatch);
        }
        let mut omega = forward_transform(&curl(u0));
        let mut theta = forward_transform(theta0);
        omega.values_mut()[0] = Complex64::new(0.0, 0.0);
        dealias_in_place(&mut omega);
        dealias_in_place(&mut theta);
        Ok(Self {
            omega,
            theta,
            mean_velocity: [u0.c1().mean(), u0.c2().mean()],
        })
    }

    pub fn grid(&self) -> &Grid2D {
        self.omega.grid()
    }

    pub fn omega(&self) -> ScalarField {
        inverse_transform(&self.omega).expect("real spectrum")
    }

    pub fn theta(&self) -> ScalarField {
        inverse_transform(&self.theta).expect("real spectrum")
    }

    pub fn mean_velocity(&self) -> [f64; 2] {
        self.mean_velocity
    }

    /// Box mean of `omega`; zero by construction.
    pub fn omega_mean(&self) -> f64 {
        self.omega.values()[0].re
    }

    pub fn velocity(&self) -> VectorField2 {
        let (a, b) = velocity_spectra(&self.omega, self.mean_velocity);
        VectorField2::from_spectral(&a, &b)
    }

    fn axpy(&self, c: f64, rhs: &Tendency) -> Self {
        let comb = |x: &SpectralCoeffs, y: &[Complex64]| {
            let values = x.values().iter().zip(y).map(|(a, b)| a + b * c).collect();
            SpectralCoeffs::from_values(*x.grid(), values).expect("same shape")
        };
        Self {
            omega: comb(&self.omega, &rhs.omega),
            theta: comb(&self.theta, &rhs.theta),
            mean_velocity: [
                self.mean_velocity[0] + c * rhs.mean_velocity[0],
                self.mean_velocity[1] + c * rhs.mean_velocity[1],
            ],
        }
    }
}

struct Tendency {
    omega: Vec<Complex64>,
    theta: Vec<Complex64>,
    mean_velocity: [f64; 2],
}

/// `∇^⊥ Δ^{-1} omega` plus a constant, as spectra.
fn velocity_spectra(omega: &SpectralCoeffs, mean: [f64; 2]) -> (SpectralCoeffs, SpectralCoeffs) {
    let grid = *omega.grid();
    let f = grid.frequencies();
    let d = grid.derivative_frequencies();
    let inv = |j1: usize, j2: usize| {
        let xi2 = f[j1] * f[j1] + f[j2] * f[j2];
        if xi2 == 0.0 {
            0.0
        } else {
            -1.0 / xi2
        }
    };
    let mut a = omega.map_symbol(|j1, j2| Complex64::new(0.0, -d[j2] * inv(j1, j2)));
    let mut b = omega.map_symbol(|j1, j2| Complex64::new(0.0, d[j1] * inv(j1, j2)));
    a.values_mut()[0] = Complex64::new(mean[0], 0.0);
    b.values_mut()[0] = Complex64::new(mean[1], 0.0);
    (a, b)
}

/// Biot–Savart law `u = ∇^⊥ Δ^{-1} omega`, `∇^⊥ = (-d_2, d_1)`; the mean of
/// `omega` is ignored.
pub fn velocity_from_vorticity(omega: &ScalarField) -> VectorField2 {
    let (a, b) = velocity_spectra(&forward_transform(omega), [0.0, 0.0]);
    VectorField2::from_spectral(&a, &b)
}

fn derivatives(c: &SpectralCoeffs) -> (Vec<Complex64>, Vec<Complex64>) {
    let grid = *c.grid();
    let n = grid.n();
    let d = grid.derivative_frequencies();
    let mut g1 = c.values().to_vec();
    let mut g2 = c.values().to_vec();
    for j2 in 0..n {
        for j1 in 0..n {
            let k = j2 * n + j1;
            g1[k] *= Complex64::new(0.0, d[j1]);
            g2[k] *= Complex64::new(0.0, d[j2]);
        }
    }
    (g1, g2)
}

fn tendency(state: &EulerianState) -> Tendency {
    let grid = *state.grid();
    let (ua, ub) = velocity_spectra(&state.omega, state.mean_velocity);
    let (u1, u2) = inverse_pair_raw(ua.values(), ub.values(), grid);
    let (w1, w2) = derivatives(&state.omega);
    let (t1, t2) = derivatives(&state.theta);
    let (w1, w2) = inverse_pair_raw(&w1, &w2, grid);
    let (t1x, t2x) = inverse_pair_raw(&t1, &t2, grid);
    let adv_w: Vec<f64> = (0..grid.len()).map(|k| u1[k] * w1[k] + u2[k] * w2[k]).collect();
    let adv_t: Vec<f64> = (0..grid.len()).map(|k| u1[k] * t1x[k] + u2[k] * t2x[k]).collect();
    let (mut aw, mut at) = forward_pair_raw(grid, &adv_w, &adv_t);
    dealias_in_place(&mut aw);
    dealias_in_place(&mut at);
    let mut omega: Vec<Complex64> = aw.values().iter().zip(&t1).map(|(a, b)| b - a).collect();
    let mut theta: Vec<Complex64> = at.values().iter().map(|a| -a).collect();
    // the means are invariant; drop their rounding residue
    omega[0] = Complex64::new(0.0, 0.0);
    theta[0] = Complex64::new(0.0, 0.0);
    Tendency {
        omega,
        theta,
        mean_velocity: [0.0, state.theta.values()[0].re],
    }
}

/// One classical RK4 step.
pub fn step_eulerian(state: &EulerianState, dt: f64) -> EulerianState {
    let k1 = tendency(state);
    let k2 = tendency(&state.axpy(0.5 * dt, &k1));
    let k3 = tendency(&state.axpy(0.5 * dt, &k2));
    let k4 = tendency(&state.axpy(dt, &k3));
    state
        .axpy(dt / 6.0, &k1)
        .axpy(dt / 3.0, &k2)
        .axpy(dt / 3.0, &k3)
        .axpy(dt / 6.0, &k4)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EulerianDiagnostics {
    pub t: f64,
    /// `||u||^2_{L2}`.
    pub kinetic_energy: f64,
    pub theta_l2: f64,
    pub omega_mean: f64,
}

fn diagnose(state: &EulerianState, t: f64) -> EulerianDiagnostics {
    let (a, b) = velocity_spectra(&state.omega, state.mean_velocity);
    let e1 = a.sobolev_norm(0.0);
    let e2 = b.sobolev_norm(0.0);
    EulerianDiagnostics {
        t,
        kinetic_energy: e1 * e1 + e2 * e2,
        theta_l2: state.theta.sobolev_norm(0.0),
        omega_mean: state.omega_mean(),
    }
}

/// Integrates to `horizon` with `round(horizon / dt)` steps, recording
/// diagnostics every `save_every` steps and at both ends.
pub fn integrate_eulerian(
    initial: &EulerianState,
    horizon: f64,
    dt: f64,
    save_every: usize,
) -> Result<(EulerianState, Vec<EulerianDiagnostics>)> {
    if !(dt > 0.0) || !(horizon >= 0.0) {
        return Err(Error::InvalidParams(format!("dt = {dt}, horizon = {horizon}")));
    }
    let steps = if horizon == 0.0 {
        0
    } else {
        ((horizon / dt).round() as usize).max(1)
    };
    let dt = if steps == 0 { dt } else { horizon / steps as f64 };
    let h = initial.grid().spacing();
    let mut state = initial.clone();
    let mut diags = vec![diagnose(&state, 0.0)];
    for step in 0..steps {
        let t = step as f64 * dt;
        let courant = state.velocity().max_magnitude() * dt;
        if !(courant <= 0.5 * h) {
            return Err(Error::CflViolation {
                t,
                courant,
                limit: 0.5 * h,
            });
        }
        state = step_eulerian(&state, dt);
        let done = step + 1 == steps;
        if done || (save_every > 0 && (step + 1) % save_every == 0) {
            diags.push(diagnose(&state, (step + 1) as f64 * dt));
        }
    }
    Ok((state, diags))
}

/// `(u(T), theta(T))` of the Eulerian equations from `(u0, theta0)`.
pub fn solve_eulerian(
    u0: &VectorField2,
    theta0: &ScalarField,
    horizon: f64,
    dt: f64,
) -> Result<(VectorField2, ScalarField)> {
    let (state, _) = integrate_eulerian(&EulerianState::new(u0, theta0)?, horizon, dt, 0)?;
    Ok((state.velocity(), state.theta()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function_spaces::{
        divergence, gradient, leray_project, make_divfree_from_stream, periodic_gaussian,
    };
    use std::f64::consts::PI;

    #[test]
    fn single_mode_biot_savart() {
        let grid = Grid2D::new(32, 2.0 * PI).unwrap();
        assert_eq!(velocity_from_vorticity(&ScalarField::zeros(grid)).max_magnitude(), 0.0);
        let omega = ScalarField::from_fn(grid, |x| x[0].sin());
        let u = velocity_from_vorticity(&omega);
        let expected = VectorField2::from_fn(grid, |x| [0.0, -x[0].cos()]);
        assert!(u.max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn curl_round_trip() {
        let grid = Grid2D::new(64, 20.0).unwrap();
        let omega = periodic_gaussian(grid, [1.0, 2.0], 2.0, 1.0)
            .axpy(-0.5, &periodic_gaussian(grid, [-3.0, 0.0], 1.5, 1.0));
        let zero_mean = omega.map(|w| w - omega.mean());
        let u = velocity_from_vorticity(&zero_mean);
        assert!(divergence(&u).max_abs() < 1e-12);
        assert!(curl(&u).max_abs_diff(&zero_mean) < 1e-12);
    }

    #[test]
    fn zero_data_stays_zero() {
        let grid = Grid2D::new(32, 10.0).unwrap();
        let (u, theta) =
            solve_eulerian(&VectorField2::zeros(grid), &ScalarField::zeros(grid), 0.5, 0.05).unwrap();
        assert_eq!(u.max_magnitude(), 0.0);
        assert_eq!(theta.max_abs(), 0.0);
    }

    #[test]
    fn parallel_flow_is_stationary() {
        // u = (sin x2, 0) has u·∇omega = 0
        let grid = Grid2D::new(32, 2.0 * PI).unwrap();
        let u0 = VectorField2::from_fn(grid, |x| [0.3 * x[1].sin(), 0.0]);
        let (u, _) = solve_eulerian(&u0, &ScalarField::zeros(grid), 1.0, 0.01).unwrap();
        assert!(u.max_abs_diff(&u0) < 1e-10);
    }

    #[test]
    fn buoyancy_curl_matches_velocity_form() {
        // the velocity form u_t = P[-(u·∇)u + (0, theta)], P the Leray
        // projector; its curl must equal the vorticity tendency.
        let grid = Grid2D::new(64, 16.0).unwrap();
        let psi = periodic_gaussian(grid, [1.0, 0.0], 1.8, 0.5);
        let u = make_divfree_from_stream(&psi);
        let theta = periodic_gaussian(grid, [-2.0, 1.0], 1.5, 0.4);
        let state = EulerianState::new(&u, &theta).unwrap();
        let k = tendency(&state);
        let omega_t =
            inverse_transform(&SpectralCoeffs::from_values(grid, k.omega).unwrap()).unwrap();

        let u = state.velocity();
        let theta = state.theta();
        let g1 = gradient(u.c1());
        let g2 = gradient(u.c2());
        let dot = |g: &VectorField2| {
            u.c1()
                .zip_map(g.c1(), |a, b| a * b)
                .unwrap()
                .axpy(1.0, &u.c2().zip_map(g.c2(), |a, b| a * b).unwrap())
        };
        let force = VectorField2::new(dot(&g1).scaled(-1.0), theta.axpy(-1.0, &dot(&g2))).unwrap();
        let u_t = leray_project(&force);
        let dt = 1e-3;
        let stepped = u.axpy(dt, &u_t);
        let fd = (&curl(&stepped) - &curl(&u)).scaled(1.0 / dt);
        let scale = omega_t.max_abs();
        assert!(fd.max_abs_diff(&omega_t) < 1e-6 * scale);
        // the opposite buoyancy sign is far off
        let flipped = &omega_t - &gradient(&theta).c1().scaled(2.0);
        assert!(fd.max_abs_diff(&flipped) > 0.1 * scale);
    }

    #[test]
    fn conservation_without_buoyancy() {
        let grid = Grid2D::new(64, 16.0).unwrap();
        let psi = periodic_gaussian(grid, [1.0, 0.0], 1.5, 1.0)
            .axpy(-1.0, &periodic_gaussian(grid, [-1.5, 0.5], 1.2, 1.0));
        let u0 = make_divfree_from_stream(&psi);
        let theta0 = periodic_gaussian(grid, [0.0, -2.0], 1.5, 1.0);
        let state = EulerianState::new(&u0, &ScalarField::zeros(grid)).unwrap();
        let (_, diags) = integrate_eulerian(&state, 1.0, 0.01, 10).unwrap();
        let e0 = diags[0].kinetic_energy;
        for d in &diags {
            assert!((d.kinetic_energy - e0).abs() <= 1e-6 * e0);
            assert_eq!(d.omega_mean, 0.0);
        }
        let state = EulerianState::new(&u0, &theta0).unwrap();
        let (end, diags) = integrate_eulerian(&state, 1.0, 0.01, 10).unwrap();
        let t0 = diags[0].theta_l2;
        for d in &diags {
            assert!((d.theta_l2 - t0).abs() <= 1e-6 * t0);
            assert_eq!(d.omega_mean, 0.0);
        }
        // mean velocity picks up the mean buoyancy
        let mean = theta0.mean();
        assert!((end.mean_velocity()[1] - mean).abs() < 1e-12);
    }
}
