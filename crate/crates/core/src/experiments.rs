//! Shrinking-bump sequences for the non-uniform dependence of the time-1
//! solution map.
//!
//! Around a base datum `w0 = (u0, theta0)` the harness measures the
//! derivative of `Ψ` in a direction `w* = (u*, 0)` at a probe point `x*`,
//! derives the constants `m` and `L`, builds
//! `w0^(n) = w0 + (0, theta^(n))` with `theta^(n)` a bump of radius
//! `r_n = m ||w*||_s / (8 n L)` about `x*` normalized to `R / 2`, and
//! `w~0^(n) = w0^(n) + w* / n`, then compares the temperatures of the two
//! solutions at time 1.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::function_spaces::{
    bump, make_divfree_from_stream, normalize_hs, pair_sobolev_norm, periodic_gaussian,
    Diffeo, ScalarField, SobolevIndex, VectorField2,
};
use crate::lagrangian::{scaled_solution_map, solve, SolverParams, Trajectory};
use crate::spectral::Grid2D;

/// Minimum distance between `x*` and the support of `theta0`.
pub const MIN_SUPPORT_DISTANCE: f64 = 2.0;
/// Derivative magnitudes below this are treated as a degenerate direction.
pub const DEGENERATE_DERIVATIVE: f64 = 1e-8;
/// Boundary samples used to trace images of discs.
const BOUNDARY_SAMPLES: usize = 64;

/// Base datum with the disc containing the support of `theta0`, if any.
#[derive(Debug, Clone)]
pub struct BaseDatum {
    pub name: String,
    pub u0: VectorField2,
    pub theta0: ScalarField,
    pub theta_support: Option<([f64; 2], f64)>,
}

impl BaseDatum {
    pub fn zero(grid: Grid2D) -> Self {
        Self {
            name: "zero".into(),
            u0: VectorField2::zeros(grid),
            theta0: ScalarField::zeros(grid),
            theta_support: None,
        }
    }

    /// A weak vortex at `(-6, 0)` carrying a temperature bump of radius 2.5.
    pub fn smooth(grid: Grid2D) -> Result<Self> {
        let center = [-6.0, 0.0];
        let psi = periodic_gaussian(grid, center, 2.5, 0.05);
        let theta0 = bump(center, 2.5, grid)?.scaled(0.05);
        Ok(Self {
            name: "smooth".into(),
            u0: make_divfree_from_stream(&psi),
            theta0,
            theta_support: Some((center, 2.5)),
        })
    }

    /// Distance from `x` to the support disc of `theta0` (infinite when
    /// `theta0 = 0`).
    pub fn support_distance(&self, x: [f64; 2]) -> f64 {
        match self.theta_support {
            Some((c, r)) => {
                let grid = self.theta0.grid();
                let dx = grid.wrap_delta(x[0] - c[0]);
                let dy = grid.wrap_delta(x[1] - c[1]);
                (dx.hypot(dy) - r).max(0.0)
            }
            None => f64::INFINITY,
        }
    }
}

/// Velocity from the stream function
/// `(x2 - x*_2) exp(-|x - x*|^2 / (2 sigma^2))`, normalized so that
/// `||(u*, 0)||_s = 1`. At `x*` it points along `-x1`.
pub fn probe_direction(grid: Grid2D, x_star: [f64; 2], sigma: f64, s: f64) -> Result<VectorField2> {
    let psi = ScalarField::from_fn(grid, |x| {
        let dx = grid.wrap_delta(x[0] - x_star[0]);
        let dy = grid.wrap_delta(x[1] - x_star[1]);
        dy * (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp()
    });
    let u = make_divfree_from_stream(&psi);
    let norm = u.sobolev_norm(s);
    if norm == 0.0 {
        return Err(Error::ZeroField);
    }
    Ok(u.scaled(1.0 / norm))
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub base: BaseDatum,
    /// Ball radius `R`.
    pub radius: f64,
    pub n_list: Vec<usize>,
    pub s: SobolevIndex,
    /// Solver settings; the horizon is forced to 1.
    pub solver: SolverParams,
    pub x_star: [f64; 2],
    pub u_star: VectorField2,
    /// Finite-difference step of the directional derivative.
    pub epsilon: f64,
    /// Radius of the resolvable bump used in the ball probes.
    pub probe_bump_radius: f64,
}

/// Default probe point, to the right of the smooth datum's support.
pub const DEFAULT_X_STAR: [f64; 2] = [4.0, 0.0];
/// Width of the default probe direction.
pub const DEFAULT_PROBE_SIGMA: f64 = 2.0;
pub const DEFAULT_RADIUS: f64 = 0.1;
pub const DEFAULT_N_LIST: [usize; 4] = [2, 4, 8, 16];
pub const DEFAULT_EPSILON: f64 = 1e-4;
pub const DEFAULT_PROBE_BUMP_RADIUS: f64 = 1.5;
pub const DEFAULT_DT: f64 = 1e-2;

impl ExperimentConfig {
    /// `R = 0.1`, `n in {2, 4, 8, 16}`, `x* = (4, 0)`, `dt = 1e-2`.
    pub fn standard(base: BaseDatum, s: SobolevIndex) -> Result<Self> {
        let grid = *base.u0.grid();
        Ok(Self {
            u_star: probe_direction(grid, DEFAULT_X_STAR, DEFAULT_PROBE_SIGMA, s.value())?,
            base,
            radius: DEFAULT_RADIUS,
            n_list: DEFAULT_N_LIST.to_vec(),
            s,
            solver: SolverParams {
                s,
                dt: DEFAULT_DT,
                save_every: 0,
                ..SolverParams::default()
            },
            x_star: DEFAULT_X_STAR,
            epsilon: DEFAULT_EPSILON,
            probe_bump_radius: DEFAULT_PROBE_BUMP_RADIUS,
        })
    }

    /// Checks the separation of `x*` from `supp theta0` and `w* != 0`.
    pub fn validate(&self) -> Result<()> {
        let grid = self.base.u0.grid();
        if self.u_star.grid() != grid || self.base.theta0.grid() != grid {
            return Err(Error::GridMismatch);
        }
        let dist = self.base.support_distance(self.x_star);
        if !(dist > MIN_SUPPORT_DISTANCE) {
            return Err(Error::InvalidParams(format!(
                "x* is {dist:.3} from supp theta0, needs more than {MIN_SUPPORT_DISTANCE}"
            )));
        }
        if self.u_star.max_magnitude() == 0.0 {
            return Err(Error::DegenerateDirection(0.0));
        }
        if !(self.radius > 0.0) || self.n_list.is_empty() || self.n_list.contains(&0) {
            return Err(Error::InvalidParams(
                "R must be positive and n_list non-empty with positive entries".into(),
            ));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidParams("epsilon must be positive".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> &Grid2D {
        self.base.u0.grid()
    }

    fn params(&self) -> SolverParams {
        SolverParams {
            s: self.s,
            keep_states: false,
            ..self.solver.with_horizon(1.0)
        }
    }

    /// `||w*||_s = ||(u*, 0)||_s`.
    pub fn direction_norm(&self) -> f64 {
        self.u_star.sobolev_norm(self.s.value())
    }

    /// Distance used to bound probe excursions at `x*`: the separation from
    /// `supp theta0`, capped at a quarter box.
    pub fn excursion_scale(&self) -> f64 {
        self.base
            .support_distance(self.x_star)
            .min(0.25 * self.grid().box_length())
    }
}

fn time_one(u0: &VectorField2, theta0: &ScalarField, params: &SolverParams) -> Result<Trajectory> {
    solve(u0, theta0, &params.with_horizon(1.0))
}

fn periodic_distance(grid: &Grid2D, a: [f64; 2], b: [f64; 2]) -> f64 {
    grid.wrap_delta(a[0] - b[0]).hypot(grid.wrap_delta(a[1] - b[1]))
}

/// `(Ψ(w0 + eps w) - Ψ(w0 - eps w))(x*) / (2 eps)` with `w = (u, theta)`.
pub fn estimate_direction_derivative(
    base: (&VectorField2, &ScalarField),
    direction: (&VectorField2, &ScalarField),
    x_star: [f64; 2],
    epsilon: f64,
    params: &SolverParams,
) -> Result<[f64; 2]> {
    let (u0, theta0) = base;
    let (du, dtheta) = direction;
    let plus = time_one(&u0.axpy(epsilon, du), &theta0.axpy(epsilon, dtheta), params)?;
    let minus = time_one(&u0.axpy(-epsilon, du), &theta0.axpy(-epsilon, dtheta), params)?;
    let da = plus.final_phi().apply(x_star);
    let db = minus.final_phi().apply(x_star);
    Ok([
        (da[0] - db[0]) / (2.0 * epsilon),
        (da[1] - db[1]) / (2.0 * epsilon),
    ])
}

/// `m = |dΨ_{w0}(w*)(x*)| / (2 ||w*||_s)`.
pub fn estimate_m(config: &ExperimentConfig) -> Result<f64> {
    let zero = ScalarField::zeros(*config.grid());
    let d = estimate_direction_derivative(
        (&config.base.u0, &config.base.theta0),
        (&config.u_star, &zero),
        config.x_star,
        config.epsilon,
        &config.params(),
    )?;
    let mag = d[0].hypot(d[1]);
    if !(mag >= DEGENERATE_DERIVATIVE) {
        return Err(Error::DegenerateDirection(mag));
    }
    let norm = config.direction_norm();
    if norm == 0.0 {
        return Err(Error::DegenerateDirection(0.0));
    }
    Ok(0.5 * mag / norm)
}

/// `1.1 * max_phi max_x ||I + grad d(x)||_2` over the given flow maps.
pub fn estimate_lipschitz(maps: &[&Diffeo]) -> f64 {
    1.1 * maps
        .iter()
        .map(|phi| phi.max_jacobian_norm())
        .fold(1.0f64, f64::max)
}

/// Time-1 flow of the probes `w0`, `w0 + (R/2) w*`, `w0 + (0, R/2 b)` and
/// `w0 + (R/2)(w* + (0, b))`, `b` a unit-norm bump at `x*`.
pub fn ball_probes(config: &ExperimentConfig, radius: f64) -> Result<Vec<Trajectory>> {
    let s = config.s.value();
    let grid = *config.grid();
    let b = normalize_hs(&bump(config.x_star, config.probe_bump_radius, grid)?, s, 1.0)?;
    let w_norm = config.direction_norm();
    let u_step = config.u_star.scaled(0.5 * radius / w_norm);
    let t_step = b.scaled(0.5 * radius);
    let (u0, t0) = (&config.base.u0, &config.base.theta0);
    let probes = [
        (u0.clone(), t0.clone()),
        (u0 + &u_step, t0.clone()),
        (u0.clone(), t0 + &t_step),
        (u0 + &u_step, t0 + &t_step),
    ];
    let params = config.params();
    probes
        .par_iter()
        .map(|(u, t)| time_one(u, t, &params))
        .collect()
}

/// Largest `R* = R / 2^k` for which every ball probe solves and keeps
/// `|phi(x*) - phi_0(x*)| <= excursion_scale / 4`, together with the probe
/// flows at `R*`.
pub fn estimate_admissible_radius(config: &ExperimentConfig, max_halvings: usize) -> Result<(f64, Vec<Trajectory>)> {
    let limit = 0.25 * config.excursion_scale();
    let grid = *config.grid();
    let mut radius = config.radius;
    let mut last_err = None;
    for _ in 0..=max_halvings {
        match ball_probes(config, radius) {
            Ok(probes) => {
                let p0 = probes[0].final_phi().apply(config.x_star);
                let worst = probes
                    .iter()
                    .map(|t| periodic_distance(&grid, t.final_phi().apply(config.x_star), p0))
                    .fold(0.0f64, f64::max);
                if worst <= limit {
                    return Ok((radius, probes));
                }
                last_err = Some(Error::BlowupDetected {
                    t: 1.0,
                    reason: format!("probe excursion {worst:.3e} exceeds {limit:.3e}"),
                });
            }
            Err(e @ (Error::BlowupDetected { .. } | Error::CflViolation { .. } | Error::NoConvergence { .. })) => {
                last_err = Some(e);
            }
            Err(e) => return Err(e),
        }
        radius *= 0.5;
    }
    Err(last_err.expect("at least one attempt"))
}

/// `r_n = m ||w*||_s / (8 n L)`.
pub fn sequence_radius(m: f64, lipschitz: f64, direction_norm: f64, n: usize) -> f64 {
    m * direction_norm / (8.0 * n as f64 * lipschitz)
}

/// `(w0^(n), w~0^(n))` and `theta^(n)` for one `n` at bump radius `r`.
#[derive(Debug, Clone)]
pub struct SequenceMember {
    pub n: usize,
    pub r: f64,
    pub theta_n: ScalarField,
    pub w: (VectorField2, ScalarField),
    pub w_tilde: (VectorField2, ScalarField),
}

pub fn build_member(config: &ExperimentConfig, n: usize, r: f64) -> Result<SequenceMember> {
    let s = config.s.value();
    let theta_n = normalize_hs(&bump(config.x_star, r, *config.grid())?, s, 0.5 * config.radius)?;
    let u = config.base.u0.clone();
    let theta = &config.base.theta0 + &theta_n;
    let u_tilde = u.axpy(1.0 / n as f64, &config.u_star);
    Ok(SequenceMember {
        n,
        r,
        theta_n,
        w_tilde: (u_tilde, theta.clone()),
        w: (u, theta),
    })
}

/// One member per `n` of `n_list`, or the error that stopped it.
pub fn build_sequences(config: &ExperimentConfig, m: f64, lipschitz: f64) -> Vec<(usize, Result<SequenceMember>)> {
    let norm = config.direction_norm();
    config
        .n_list
        .iter()
        .map(|&n| (n, build_member(config, n, sequence_radius(m, lipschitz, norm, n))))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordStatus {
    Ok,
    Unresolvable,
    SolverFailure,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentRecord {
    pub n: usize,
    pub r_n: f64,
    pub status: RecordStatus,
    pub message: Option<String>,
    pub input_gap: Option<f64>,
    pub output_gap: Option<f64>,
    pub separation: Option<f64>,
    /// `m ||w*||_s / (2n)`.
    pub lower_bound_separation: f64,
    /// Largest distance from `phi(x*)` to the image of the bump boundary,
    /// for the two flows.
    pub image_radii: Option<[f64; 2]>,
    /// `m ||w*||_s / (8n)`.
    pub image_radius_bound: f64,
    pub supports_disjoint: Option<bool>,
    /// Distance between the image of `supp theta0` and the image bump,
    /// against half the initial separation.
    pub base_support_distance: Option<f64>,
    /// `||theta^(n) ∘ phi^{-1}||_s / ||theta^(n)||_s` for both flows.
    pub ratios: Option<[f64; 2]>,
}

impl ExperimentRecord {
    fn failed(n: usize, r_n: f64, status: RecordStatus, message: String, lb: f64, ib: f64) -> Self {
        Self {
            n,
            r_n,
            status,
            message: Some(message),
            input_gap: None,
            output_gap: None,
            separation: None,
            lower_bound_separation: lb,
            image_radii: None,
            image_radius_bound: ib,
            supports_disjoint: None,
            base_support_distance: None,
            ratios: None,
        }
    }

    pub fn ratio_min(&self) -> Option<f64> {
        self.ratios.map(|r| r[0].min(r[1]))
    }

    pub fn ratio_max(&self) -> Option<f64> {
        self.ratios.map(|r| r[0].max(r[1]))
    }
}

fn circle(center: [f64; 2], r: f64) -> Vec<[f64; 2]> {
    (0..BOUNDARY_SAMPLES)
        .map(|k| {
            let a = 2.0 * PI * k as f64 / BOUNDARY_SAMPLES as f64;
            [center[0] + r * a.cos(), center[1] + r * a.sin()]
        })
        .collect()
}

fn image_radius(grid: &Grid2D, phi: &Diffeo, center: [f64; 2], r: f64) -> f64 {
    let c = phi.apply(center);
    circle(center, r)
        .into_iter()
        .map(|p| periodic_distance(grid, phi.apply(p), c))
        .fold(0.0f64, f64::max)
}

fn image_set_distance(grid: &Grid2D, phi: &Diffeo, a: ([f64; 2], f64), b: ([f64; 2], f64)) -> f64 {
    let pa: Vec<_> = circle(a.0, a.1).into_iter().map(|p| phi.apply(p)).collect();
    let pb: Vec<_> = circle(b.0, b.1).into_iter().map(|p| phi.apply(p)).collect();
    pa.iter()
        .flat_map(|x| pb.iter().map(move |y| (x, y)))
        .map(|(x, y)| periodic_distance(grid, *x, *y))
        .fold(f64::INFINITY, f64::min)
}

/// Solves both members of the pair and measures gaps, separation, image
/// supports and norm ratios.
pub fn run_pair(config: &ExperimentConfig, m: f64, member: &SequenceMember) -> Result<ExperimentRecord> {
    let s = config.s.value();
    let grid = *config.grid();
    let params = config.params();
    let n = member.n;
    let w_norm = config.direction_norm();
    let lb = m * w_norm / (2.0 * n as f64);
    let ib = m * w_norm / (8.0 * n as f64);

    let input_gap = pair_sobolev_norm(
        &(&member.w_tilde.0 - &member.w.0),
        &(&member.w_tilde.1 - &member.w.1),
        s,
    );
    let a = time_one(&member.w.0, &member.w.1, &params)?;
    let b = time_one(&member.w_tilde.0, &member.w_tilde.1, &params)?;
    let output_gap = (&b.final_theta - &a.final_theta).sobolev_norm(s);
    let pa = a.final_phi().apply(config.x_star);
    let pb = b.final_phi().apply(config.x_star);
    let separation = periodic_distance(&grid, pa, pb);
    let ra = image_radius(&grid, a.final_phi(), config.x_star, member.r);
    let rb = image_radius(&grid, b.final_phi(), config.x_star, member.r);
    let supports_disjoint = separation > ra + rb;
    let base_support_distance = config.base.theta_support.map(|support| {
        image_set_distance(&grid, a.final_phi(), support, (config.x_star, member.r))
            .min(image_set_distance(&grid, b.final_phi(), support, (config.x_star, member.r)))
    });

    // theta^(n) ∘ phi^{-1}: the solution transports theta0 + theta^(n), and
    // theta^(n) alone is recovered by transporting it with the same inverse
    let theta_norm = member.theta_n.sobolev_norm(s);
    let transported = |t: &Trajectory| {
        crate::function_spaces::compose_scalar(
            &member.theta_n,
            &Diffeo::new(t.final_inverse.clone()).expect("inverse of a diffeomorphism"),
        )
        .sobolev_norm(s)
            / theta_norm
    };
    Ok(ExperimentRecord {
        n,
        r_n: member.r,
        status: RecordStatus::Ok,
        message: None,
        input_gap: Some(input_gap),
        output_gap: Some(output_gap),
        separation: Some(separation),
        lower_bound_separation: lb,
        image_radii: Some([ra, rb]),
        image_radius_bound: ib,
        supports_disjoint: Some(supports_disjoint),
        base_support_distance,
        ratios: Some([transported(&a), transported(&b)]),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentSummary {
    pub base: String,
    pub m: f64,
    #[serde(rename = "L")]
    pub lipschitz: f64,
    pub radius_requested: f64,
    /// `R` actually used, `min(R, R*)`.
    pub radius: f64,
    pub direction_norm: f64,
    pub resolvable_n: Vec<usize>,
    /// Smallest resolvable bump radius on the grid.
    pub min_resolvable_radius: f64,
    #[serde(rename = "C1_band")]
    pub c1_band: Option<[f64; 2]>,
    pub slope_input: Option<f64>,
    /// `min_n output_gap(n) / output_gap(n_min)` over resolvable n.
    pub gap_retention: Option<f64>,
    /// `input_gap(n_min) / input_gap(n_max)`.
    pub input_drop: Option<f64>,
    pub separation_ok: Option<bool>,
    pub supports_disjoint: Option<bool>,
    pub base_supports_separated: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub summary: ExperimentSummary,
    pub records: Vec<ExperimentRecord>,
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let k = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    Some(sxy / sxx)
}

/// Summary statistics over the successful records.
pub fn summarize(
    config: &ExperimentConfig,
    m: f64,
    lipschitz: f64,
    radius: f64,
    records: &[ExperimentRecord],
) -> ExperimentSummary {
    let ok: Vec<&ExperimentRecord> = records.iter().filter(|r| r.status == RecordStatus::Ok).collect();
    let ratios: Vec<f64> = ok.iter().flat_map(|r| r.ratios.into_iter().flatten()).collect();
    let c1_band = (!ratios.is_empty()).then(|| {
        [
            ratios.iter().copied().fold(f64::INFINITY, f64::min),
            ratios.iter().copied().fold(0.0, f64::max),
        ]
    });
    let inputs: Vec<(f64, f64)> = ok
        .iter()
        .filter_map(|r| r.input_gap.map(|g| (r.n as f64, g)))
        .collect();
    let first = ok.first();
    let last = ok.last();
    let gap_retention = first.and_then(|f| f.output_gap).filter(|_| ok.len() >= 2).map(|g0| {
        ok.iter()
            .filter_map(|r| r.output_gap)
            .map(|g| g / g0)
            .fold(f64::INFINITY, f64::min)
    });
    let input_drop = match (first.and_then(|r| r.input_gap), last.and_then(|r| r.input_gap)) {
        (Some(a), Some(b)) if ok.len() >= 2 => Some(a / b),
        _ => None,
    };
    let all = |f: &dyn Fn(&ExperimentRecord) -> Option<bool>| {
        (!ok.is_empty()).then(|| ok.iter().all(|r| f(r).unwrap_or(false)))
    };
    let support_half = 0.5 * config.base.support_distance(config.x_star);
    ExperimentSummary {
        base: config.base.name.clone(),
        m,
        lipschitz,
        radius_requested: config.radius,
        radius,
        direction_norm: config.direction_norm(),
        resolvable_n: ok.iter().map(|r| r.n).collect(),
        min_resolvable_radius: 2.0 * config.grid().spacing(),
        c1_band,
        slope_input: loglog_slope(&inputs),
        gap_retention,
        input_drop,
        separation_ok: all(&|r| r.separation.map(|s| s >= r.lower_bound_separation)),
        supports_disjoint: all(&|r| {
            Some(
                r.supports_disjoint?
                    && r.image_radii?.iter().all(|&x| x <= r.image_radius_bound),
            )
        }),
        base_supports_separated: config
            .base
            .theta_support
            .and_then(|_| all(&|r| r.base_support_distance.map(|d| d >= support_half))),
    }
}

/// The full experiment: constants, sequences, per-n solves and summary.
/// Failures of individual `n` are recorded and the run continues.
pub fn run_nonuniform(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let (radius, probes) = estimate_admissible_radius(config, 6)?;
    let config = &ExperimentConfig {
        radius,
        ..config.clone()
    };
    let m = estimate_m(config)?;
    let maps: Vec<&Diffeo> = probes.iter().map(|t| t.final_phi()).collect();
    let lipschitz = estimate_lipschitz(&maps);
    let norm = config.direction_norm();
    let lb = |n: usize| m * norm / (2.0 * n as f64);
    let ib = |n: usize| m * norm / (8.0 * n as f64);
    let records: Vec<ExperimentRecord> = build_sequences(config, m, lipschitz)
        .into_par_iter()
        .map(|(n, member)| {
            let r_n = sequence_radius(m, lipschitz, norm, n);
            match member {
                Ok(member) => run_pair(config, m, &member).unwrap_or_else(|e| {
                    ExperimentRecord::failed(n, r_n, RecordStatus::SolverFailure, e.to_string(), lb(n), ib(n))
                }),
                Err(e) => {
                    let status = match e {
                        Error::UnresolvableBump { .. } => RecordStatus::Unresolvable,
                        _ => RecordStatus::SolverFailure,
                    };
                    ExperimentRecord::failed(n, r_n, status, e.to_string(), lb(n), ib(n))
                }
            }
        })
        .collect();
    let summary = summarize(config, m, lipschitz, radius, &records);
    Ok(ExperimentReport { summary, records })
}

/// Relative Hˢ residuals of the two scaling routes.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScalingReport {
    pub lambda: f64,
    pub horizon: f64,
    /// `(λ u0, λ² θ0)` solved to `T / λ` and rescaled, against the direct
    /// solve to `T`.
    pub state_residual: f64,
    /// `Φ_T` through the time-1 map against the direct solve to `T`.
    pub phi_t_residual: f64,
}

/// Largest componentwise relative Hˢ distance between `(u, θ)` pairs;
/// components with zero reference norm are compared absolutely.
pub fn relative_pair_residual(
    a: (&VectorField2, &ScalarField),
    b: (&VectorField2, &ScalarField),
    s: f64,
) -> f64 {
    let rel = |diff: f64, scale: f64| if scale == 0.0 { diff } else { diff / scale };
    let du = rel((a.0 - b.0).sobolev_norm(s), b.0.sobolev_norm(s));
    let dt = rel((a.1 - b.1).sobolev_norm(s), b.1.sobolev_norm(s));
    du.max(dt)
}

pub fn check_scaling(
    u0: &VectorField2,
    theta0: &ScalarField,
    horizon: f64,
    lambda: f64,
    params: &SolverParams,
) -> Result<ScalingReport> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParams(format!("lambda = {lambda} must be positive")));
    }
    let s = params.s.value();
    let direct = solve(u0, theta0, &params.with_horizon(horizon))?;
    let reference = (&direct.final_velocity, &direct.final_theta);
    let scaled = solve(
        &u0.scaled(lambda),
        &theta0.scaled(lambda * lambda),
        &params.with_horizon(horizon / lambda),
    )?;
    let u = scaled.final_velocity.scaled(1.0 / lambda);
    let theta = scaled.final_theta.scaled(1.0 / (lambda * lambda));
    let state_residual = relative_pair_residual((&u, &theta), reference, s);
    let (pu, pt) = scaled_solution_map(u0, theta0, horizon, params)?;
    let phi_t_residual = relative_pair_residual((&pu, &pt), reference, s);
    Ok(ScalingReport {
        lambda,
        horizon,
        state_residual,
        phi_t_residual,
    })
}

/// Norm ratios over the experiment family and the band `[min, max]`.
#[derive(Debug, Clone, Serialize)]
pub struct NormEquivalenceTable {
    pub rows: Vec<(usize, [f64; 2])>,
    pub band: Option<[f64; 2]>,
}

impl NormEquivalenceTable {
    pub fn from_records(records: &[ExperimentRecord]) -> Self {
        let rows: Vec<(usize, [f64; 2])> = records.iter().filter_map(|r| Some((r.n, r.ratios?))).collect();
        let all: Vec<f64> = rows.iter().flat_map(|(_, r)| *r).collect();
        let band = (!all.is_empty()).then(|| {
            [
                all.iter().copied().fold(f64::INFINITY, f64::min),
                all.iter().copied().fold(0.0, f64::max),
            ]
        });
        Self { rows, band }
    }

    /// `max / min` of the band.
    pub fn spread(&self) -> Option<f64> {
        self.band.map(|[lo, hi]| hi / lo)
    }
}

pub fn check_norm_equivalence(config: &ExperimentConfig) -> Result<NormEquivalenceTable> {
    Ok(NormEquivalenceTable::from_records(&run_nonuniform(config)?.records))
}
