//! Run configuration: one JSON document, every field optional with a
//! default, validated into core types before any work starts.

use std::path::{Path, PathBuf};

use boussinesq_core::experiments::{self, probe_direction, BaseDatum, ExperimentConfig};
use boussinesq_core::function_spaces::{
    bump, make_divfree_from_stream, normalize_hs, taylor_green_stream,
};
use boussinesq_core::lagrangian::SolverParams;
use boussinesq_core::validation::{random_divfree_field, standard_datum, ValidationConfig};
use boussinesq_core::{dump, Grid2D, ScalarField, SobolevIndex, VectorField2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub n: usize,
    pub box_length: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            n: 256,
            box_length: 32.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub dt: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub s: f64,
    pub save_every: usize,
    pub inversion_tolerance: f64,
    pub inversion_max_iters: usize,
    /// `null` disables the divergence precondition on `u0`.
    pub divergence_tolerance: Option<f64>,
    pub cfl_fraction: f64,
    pub max_displacement_gradient: f64,
    /// Dump `phi` and `v` at every save time.
    pub dump_states: bool,
}

impl Default for SolverSection {
    fn default() -> Self {
        let p = SolverParams::default();
        Self {
            dt: p.dt,
            horizon: p.horizon,
            s: p.s.value(),
            save_every: p.save_every,
            inversion_tolerance: p.inversion_tolerance,
            inversion_max_iters: p.inversion_max_iters,
            divergence_tolerance: p.divergence_tolerance,
            cfl_fraction: p.cfl_fraction,
            max_displacement_gradient: p.max_displacement_gradient,
            dump_states: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatumSection {
    Rest,
    TaylorGreen {
        #[serde(default = "default_tg_amplitude")]
        amplitude: f64,
        #[serde(default = "default_tg_mode")]
        mode: u32,
    },
    BumpTheta {
        #[serde(default = "default_bump_center")]
        center: [f64; 2],
        #[serde(default = "default_bump_radius")]
        radius: f64,
        #[serde(default = "default_bump_amplitude")]
        amplitude: f64,
    },
    /// Vortex pair with a warm blob, the datum of the validation suite.
    Standard,
    /// Dump stems (without extension) of `u0` and `theta0`.
    Custom { u: PathBuf, theta: PathBuf },
}

fn default_tg_amplitude() -> f64 {
    0.2
}
fn default_tg_mode() -> u32 {
    1
}
fn default_bump_center() -> [f64; 2] {
    [0.0, -4.0]
}
fn default_bump_radius() -> f64 {
    6.0
}
fn default_bump_amplitude() -> f64 {
    0.1
}

impl Default for DatumSection {
    fn default() -> Self {
        DatumSection::Standard
    }
}

impl DatumSection {
    /// The preset named `name` with default parameters.
    pub fn from_name(name: &str) -> Result<Self, CliError> {
        Ok(match name {
            "rest" => DatumSection::Rest,
            "taylor_green" => DatumSection::TaylorGreen {
                amplitude: default_tg_amplitude(),
                mode: default_tg_mode(),
            },
            "bump_theta" => DatumSection::BumpTheta {
                center: default_bump_center(),
                radius: default_bump_radius(),
                amplitude: default_bump_amplitude(),
            },
            "standard" => DatumSection::Standard,
            "custom" => {
                return Err(CliError::Config(
                    "preset custom needs datum.u and datum.theta in a config file".into(),
                ))
            }
            other => {
                return Err(CliError::Config(format!(
                    "unknown preset {other:?}; expected rest, taylor_green, bump_theta, standard"
                )))
            }
        })
    }

    pub fn build(&self, grid: Grid2D, base_dir: &Path) -> Result<(VectorField2, ScalarField), CliError> {
        Ok(match self {
            DatumSection::Rest => (VectorField2::zeros(grid), ScalarField::zeros(grid)),
            DatumSection::TaylorGreen { amplitude, mode } => (
                make_divfree_from_stream(&taylor_green_stream(grid, *amplitude, *mode)),
                ScalarField::zeros(grid),
            ),
            DatumSection::BumpTheta {
                center,
                radius,
                amplitude,
            } => (
                VectorField2::zeros(grid),
                bump(*center, *radius, grid)
                    .map_err(|e| CliError::Config(format!("datum: {e}")))?
                    .scaled(*amplitude),
            ),
            DatumSection::Standard => standard_datum(grid),
            DatumSection::Custom { u, theta } => {
                let u0 = dump::read_vector(&base_dir.join(u))?;
                let t0 = dump::read_scalar(&base_dir.join(theta))?;
                if u0.grid() != &grid || t0.grid() != &grid {
                    return Err(CliError::Config(
                        "datum: custom fields do not live on the configured grid".into(),
                    ));
                }
                (u0, t0)
            }
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidationSection {
    pub seed: u64,
    pub random_fields: usize,
    pub conservation_dt: f64,
    #[serde(rename = "conservation_T")]
    pub conservation_horizon: f64,
    pub conservation_save_every: usize,
    pub euler_dt: f64,
    #[serde(rename = "euler_T")]
    pub euler_horizon: f64,
    pub scaling_dt: f64,
    #[serde(rename = "scaling_T")]
    pub scaling_horizon: f64,
    pub lambdas: Vec<f64>,
    pub derivative_dt: f64,
    pub derivative_epsilon: f64,
    pub richardson_steps: [f64; 3],
}

impl Default for ValidationSection {
    fn default() -> Self {
        let v = ValidationConfig::default();
        Self {
            seed: v.seed,
            random_fields: v.random_fields,
            conservation_dt: v.conservation_dt,
            conservation_horizon: v.conservation_horizon,
            conservation_save_every: v.conservation_save_every,
            euler_dt: v.euler_dt,
            euler_horizon: v.euler_horizon,
            scaling_dt: v.scaling_dt,
            scaling_horizon: v.scaling_horizon,
            lambdas: v.lambdas,
            derivative_dt: v.derivative_dt,
            derivative_epsilon: v.derivative_epsilon,
            richardson_steps: v.richardson_steps,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum DirectionSection {
    /// Localized dipole stream through `x*`.
    Probe {
        #[serde(default = "default_probe_sigma")]
        sigma: f64,
    },
    /// Random smooth divergence-free field drawn from `experiment.seed`.
    Random {
        #[serde(default = "default_random_kappa")]
        kappa: f64,
    },
    /// The zero direction; rejected at validation.
    Zero,
}

fn default_probe_sigma() -> f64 {
    experiments::DEFAULT_PROBE_SIGMA
}
fn default_random_kappa() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum BaseSection {
    Zero,
    Smooth,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    pub base: BaseSection,
    #[serde(rename = "R")]
    pub radius: f64,
    pub n_list: Vec<usize>,
    pub x_star: [f64; 2],
    pub u_star: DirectionSection,
    pub seed: u64,
    pub epsilon: f64,
    pub probe_bump_radius: f64,
    /// Step of the time-1 solves.
    pub dt: f64,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            base: BaseSection::Smooth,
            radius: experiments::DEFAULT_RADIUS,
            n_list: experiments::DEFAULT_N_LIST.to_vec(),
            x_star: experiments::DEFAULT_X_STAR,
            u_star: DirectionSection::Probe {
                sigma: default_probe_sigma(),
            },
            seed: 7,
            epsilon: experiments::DEFAULT_EPSILON,
            probe_bump_radius: experiments::DEFAULT_PROBE_BUMP_RADIUS,
            dt: experiments::DEFAULT_DT,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub grid: GridSection,
    pub solver: SolverSection,
    pub datum: DatumSection,
    pub validation: ValidationSection,
    pub experiment: ExperimentSection,
    /// Output directory, relative to the working directory.
    pub output: Option<PathBuf>,
}

/// Parses `text`, reporting the offending field path and position.
pub fn parse(text: &str) -> Result<RunConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        CliError::Config(format!(
            "at {path} (line {}, column {}): {inner}",
            inner.line(),
            inner.column()
        ))
    })
}

pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
    parse(&text).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn field_error(field: &str, err: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {err}"))
}

impl RunConfig {
    pub fn grid(&self) -> Result<Grid2D, CliError> {
        Grid2D::new(self.grid.n, self.grid.box_length).map_err(|e| field_error("grid", e))
    }

    pub fn sobolev(&self) -> Result<SobolevIndex, CliError> {
        SobolevIndex::new(self.solver.s).map_err(|e| field_error("solver.s", e))
    }

    pub fn solver_params(&self) -> Result<SolverParams, CliError> {
        let s = &self.solver;
        let params = SolverParams {
            s: self.sobolev()?,
            dt: s.dt,
            horizon: s.horizon,
            save_every: s.save_every,
            inversion_tolerance: s.inversion_tolerance,
            inversion_max_iters: s.inversion_max_iters,
            divergence_tolerance: s.divergence_tolerance,
            cfl_fraction: s.cfl_fraction,
            max_displacement_gradient: s.max_displacement_gradient,
            keep_states: s.dump_states,
        };
        params.validate().map_err(|e| field_error("solver", e))?;
        if !(s.cfl_fraction > 0.0) || !(s.max_displacement_gradient > 0.0) {
            return Err(field_error(
                "solver",
                "cfl_fraction and max_displacement_gradient must be positive",
            ));
        }
        Ok(params)
    }

    pub fn validation_config(&self) -> Result<ValidationConfig, CliError> {
        let v = &self.validation;
        let grid = self.grid()?;
        if grid.n() < 16 {
            return Err(field_error("grid.n", "validation needs n >= 16 for the refinement pair"));
        }
        let positive = [
            ("validation.conservation_dt", v.conservation_dt),
            ("validation.euler_dt", v.euler_dt),
            ("validation.scaling_dt", v.scaling_dt),
            ("validation.derivative_dt", v.derivative_dt),
            ("validation.derivative_epsilon", v.derivative_epsilon),
            ("validation.conservation_T", v.conservation_horizon),
            ("validation.euler_T", v.euler_horizon),
            ("validation.scaling_T", v.scaling_horizon),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(field_error(name, format!("{value} must be positive")));
            }
        }
        if v.lambdas.iter().any(|&l| !(l > 0.0)) {
            return Err(field_error("validation.lambdas", "entries must be positive"));
        }
        if v.richardson_steps.iter().any(|&e| !(e > 0.0)) {
            return Err(field_error("validation.richardson_steps", "entries must be positive"));
        }
        Ok(ValidationConfig {
            grid,
            s: self.sobolev()?,
            seed: v.seed,
            random_fields: v.random_fields,
            conservation_dt: v.conservation_dt,
            conservation_horizon: v.conservation_horizon,
            conservation_save_every: v.conservation_save_every,
            euler_dt: v.euler_dt,
            euler_horizon: v.euler_horizon,
            scaling_dt: v.scaling_dt,
            scaling_horizon: v.scaling_horizon,
            lambdas: v.lambdas.clone(),
            derivative_dt: v.derivative_dt,
            derivative_epsilon: v.derivative_epsilon,
            richardson_steps: v.richardson_steps,
        })
    }

    pub fn experiment_config(&self) -> Result<ExperimentConfig, CliError> {
        let e = &self.experiment;
        let grid = self.grid()?;
        let s = self.sobolev()?;
        let base = match e.base {
            BaseSection::Zero => BaseDatum::zero(grid),
            BaseSection::Smooth => {
                BaseDatum::smooth(grid).map_err(|err| field_error("experiment.base", err))?
            }
        };
        let u_star = match e.u_star {
            DirectionSection::Probe { sigma } => probe_direction(grid, e.x_star, sigma, s.value())
                .map_err(|err| field_error("experiment.u_star", err))?,
            DirectionSection::Random { kappa } => {
                let u = random_divfree_field(grid, kappa, &mut ChaCha8Rng::seed_from_u64(e.seed));
                let norm = u.sobolev_norm(s.value());
                if norm == 0.0 {
                    return Err(field_error("experiment.u_star", "random direction vanished"));
                }
                u.scaled(1.0 / norm)
            }
            DirectionSection::Zero => VectorField2::zeros(grid),
        };
        let mut config = ExperimentConfig::standard(base, s)
            .map_err(|err| field_error("experiment", err))?;
        config.u_star = u_star;
        config.radius = e.radius;
        config.n_list = e.n_list.clone();
        config.x_star = e.x_star;
        config.epsilon = e.epsilon;
        config.probe_bump_radius = e.probe_bump_radius;
        config.solver = SolverParams {
            dt: e.dt,
            ..self.solver_params_for_experiment()?
        };
        // the bump probe must itself be resolvable
        normalize_hs(
            &bump(e.x_star, e.probe_bump_radius, grid)
                .map_err(|err| field_error("experiment.probe_bump_radius", err))?,
            s.value(),
            1.0,
        )
        .map_err(|err| field_error("experiment.probe_bump_radius", err))?;
        config
            .validate()
            .map_err(|err| field_error("experiment", err))?;
        config
            .solver
            .with_horizon(1.0)
            .validate()
            .map_err(|err| field_error("experiment.dt", err))?;
        Ok(config)
    }

    fn solver_params_for_experiment(&self) -> Result<SolverParams, CliError> {
        let s = &self.solver;
        Ok(SolverParams {
            s: self.sobolev()?,
            horizon: 1.0,
            save_every: 0,
            inversion_tolerance: s.inversion_tolerance,
            inversion_max_iters: s.inversion_max_iters,
            divergence_tolerance: s.divergence_tolerance,
            cfl_fraction: s.cfl_fraction,
            max_displacement_gradient: s.max_displacement_gradient,
            keep_states: false,
            ..SolverParams::default()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_takes_every_default() {
        let c = parse("{}").unwrap();
        assert_eq!(c.grid.n, 256);
        assert_eq!(c.solver.horizon, 1.0);
        assert!(matches!(c.datum, DatumSection::Standard));
        assert_eq!(c.experiment.n_list, vec![2, 4, 8, 16]);
        assert!(c.solver_params().is_ok());
    }

    #[test]
    fn unknown_fields_name_their_path() {
        let err = parse("{\n  \"solver\": {\"dtt\": 0.1}\n}").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("solver"), "{msg}");
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn wrong_types_name_their_path() {
        let err = parse(r#"{"grid": {"n": "big"}}"#).unwrap_err().to_string();
        assert!(err.contains("grid.n"), "{err}");
    }

    #[test]
    fn sobolev_index_must_exceed_two() {
        let c = parse(r#"{"solver": {"s": 2.0}}"#).unwrap();
        let err = c.solver_params().unwrap_err().to_string();
        assert!(err.contains("solver.s"), "{err}");
    }

    #[test]
    fn presets_parse_with_parameters() {
        let c = parse(r#"{"datum": {"preset": "taylor_green", "amplitude": 0.5}}"#).unwrap();
        assert!(matches!(c.datum, DatumSection::TaylorGreen { amplitude, mode: 1 } if amplitude == 0.5));
        assert!(DatumSection::from_name("bump_theta").is_ok());
        assert!(DatumSection::from_name("custom").is_err());
        assert!(DatumSection::from_name("plume").is_err());
    }

    #[test]
    fn zero_direction_is_a_config_error() {
        let c = parse(
            r#"{"grid": {"n": 64, "box_length": 24.0}, "experiment": {"u_star": {"preset": "zero"}}}"#,
        )
        .unwrap();
        assert!(matches!(c.experiment_config(), Err(CliError::Config(_))));
    }

    #[test]
    fn round_trips_through_json() {
        let c = parse(r#"{"datum": {"preset": "bump_theta"}, "output": "out"}"#).unwrap();
        let text = serde_json::to_string(&c).unwrap();
        let again = parse(&text).unwrap();
        assert_eq!(serde_json::to_string(&again).unwrap(), text);
    }
}
