//! Periodic grid, 2D discrete Fourier transforms and Fourier multipliers.
//!
//! The plane is truncated to the periodic box `[-L/2, L/2)^2` sampled on an
//! `n x n` grid. Samples are stored row-major with the `x1` index running
//! fastest, i.e. sample `(i1, i2)` lives at `i2 * n + i1`. Spectral
//! coefficients use the same layout over wavenumber indices and are
//! normalized so that `f(x) = sum_k c_k exp(i xi_k . x)`; the `k = 0`
//! coefficient is the box mean.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::function_spaces::ScalarField;

/// Relative imaginary residue tolerated by [`inverse_transform`].
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid2D {
    n: usize,
    box_length: f64,
}

impl Grid2D {
    pub fn new(n: usize, box_length: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n = {n} must be a power of two and at least 8"
            )));
        }
        if !(box_length > 0.0 && box_length.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "box length {box_length} must be positive"
            )));
        }
        Ok(Self { n, box_length })
    }

    /// `n = 256` points on a box of side 32.
    pub fn standard() -> Self {
        Self {
            n: 256,
            box_length: 32.0,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    /// Total number of samples.
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.box_length / self.n as f64
    }

    pub fn cell_measure(&self) -> f64 {
        let h = self.spacing();
        h * h
    }

    /// Coordinate of the first sample along either axis.
    pub fn origin(&self) -> f64 {
        -0.5 * self.box_length
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.origin() + i as f64 * self.spacing()
    }

    pub fn point(&self, i1: usize, i2: usize) -> [f64; 2] {
        [self.coord(i1), self.coord(i2)]
    }

    pub fn index(&self, i1: usize, i2: usize) -> usize {
        i2 * self.n + i1
    }

    /// Signed integer wavenumber of index `j`, in `[-n/2, n/2)`.
    pub fn wavenumber(&self, j: usize) -> i64 {
        let n = self.n as i64;
        let j = j as i64;
        if j < n / 2 {
            j
        } else {
            j - n
        }
    }

    /// Angular frequency `2 pi k / L` of index `j`.
    pub fn frequency(&self, j: usize) -> f64 {
        2.0 * PI * self.wavenumber(j) as f64 / self.box_length
    }

    /// Frequency used by odd symbols: identical to [`Self::frequency`]
    /// except that the Nyquist index maps to zero, which keeps first
    /// derivatives of real fields real.
    pub fn derivative_frequency(&self, j: usize) -> f64 {
        if j == self.n / 2 {
            0.0
        } else {
            self.frequency(j)
        }
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.frequency(j)).collect()
    }

    pub fn derivative_frequencies(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.derivative_frequency(j)).collect()
    }

    /// Index of the wavenumber `-k` for index `j`.
    pub fn mirror(&self, j: usize) -> usize {
        (self.n - j) % self.n
    }

    /// Representative of `delta` modulo the box length in `[-L/2, L/2]`.
    pub fn wrap_delta(&self, delta: f64) -> f64 {
        let l = self.box_length;
        delta - l * (delta / l).round()
    }
}

/// Complex Fourier coefficients of a field on a [`Grid2D`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCoeffs {
    grid: Grid2D,
    values: Vec<Complex64>,
}

impl SpectralCoeffs {
    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_values(grid: Grid2D, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    /// Coefficient at wavenumber index `(j1, j2)`.
    pub fn at(&self, j1: usize, j2: usize) -> Complex64 {
        self.values[self.grid.index(j1, j2)]
    }

    /// Largest violation of `c(-k) = conj(c(k))`.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.grid.n;
        let mut worst = 0.0f64;
        for j2 in 0..n {
            for j1 in 0..n {
                let a = self.at(j1, j2);
                let b = self.at(self.grid.mirror(j1), self.grid.mirror(j2));
                worst = worst.max((a - b.conj()).norm());
            }
        }
        worst
    }

    /// Multiply every coefficient by `symbol(j1, j2)`.
    pub fn map_symbol(&self, mut symbol: impl FnMut(usize, usize) -> Complex64) -> Self {
        let n = self.grid.n;
        let mut values = self.values.clone();
        for j2 in 0..n {
            for j1 in 0..n {
                values[j2 * n + j1] *= symbol(j1, j2);
            }
        }
        Self {
            grid: self.grid,
            values,
        }
    }

    pub fn add(&self, other: &SpectralCoeffs) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self {
            grid: self.grid,
            values,
        })
    }

    /// Hˢ norm `(L^2 sum_k (1 + |xi|^2)^s |c_k|^2)^(1/2)`; `s = 0` is the
    /// grid L² norm by Parseval.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let n = self.grid.n;
        let freq = self.grid.frequencies();
        let mut acc = 0.0;
        for j2 in 0..n {
            for j1 in 0..n {
                let xi2 = freq[j1] * freq[j1] + freq[j2] * freq[j2];
                let weight = if s == 0.0 { 1.0 } else { (1.0 + xi2).powf(s) };
                acc += weight * self.values[j2 * n + j1].norm_sqr();
            }
        }
        self.grid.box_length * acc.sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Axis {
    X1,
    X2,
}

/// Fourier multipliers used by the pressure and buoyancy operators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Multiplier {
    /// `i xi_k`.
    Gradient(Axis),
    /// `-1 / |xi|^2`, zero at the mean mode.
    InverseLaplacian,
    /// `i xi_k / |xi|`, zero at the mean mode.
    Riesz(Axis),
    /// Indicator of the closed unit ball `|xi| <= 1`.
    BallCutoff,
    BallCutoffComplement,
    /// `(1 + |xi|^2)^(s/2)`.
    SobolevWeight(f64),
}

/// Slack on `|xi|^2 <= 1` so that frequencies landing on the unit circle
/// up to rounding count as inside.
const BALL_SLACK: f64 = 1e-12;

impl Multiplier {
    pub fn symbol(&self, grid: &Grid2D, j1: usize, j2: usize) -> Complex64 {
        let (f1, f2) = (grid.frequency(j1), grid.frequency(j2));
        let (d1, d2) = (grid.derivative_frequency(j1), grid.derivative_frequency(j2));
        let xi2 = f1 * f1 + f2 * f2;
        let zero = Complex64::new(0.0, 0.0);
        match *self {
            Multiplier::Gradient(Axis::X1) => Complex64::new(0.0, d1),
            Multiplier::Gradient(Axis::X2) => Complex64::new(0.0, d2),
            Multiplier::InverseLaplacian => {
                if xi2 == 0.0 {
                    zero
                } else {
                    Complex64::new(-1.0 / xi2, 0.0)
                }
            }
            Multiplier::Riesz(axis) => {
                let mag = (d1 * d1 + d2 * d2).sqrt();
                if mag == 0.0 {
                    return zero;
                }
                let d = match axis {
                    Axis::X1 => d1,
                    Axis::X2 => d2,
                };
                Complex64::new(0.0, d / mag)
            }
            Multiplier::BallCutoff => {
                Complex64::new(if xi2 <= 1.0 + BALL_SLACK { 1.0 } else { 0.0 }, 0.0)
            }
            Multiplier::BallCutoffComplement => {
                Complex64::new(if xi2 <= 1.0 + BALL_SLACK { 0.0 } else { 1.0 }, 0.0)
            }
            Multiplier::SobolevWeight(s) => Complex64::new((1.0 + xi2).powf(0.5 * s), 0.0),
        }
    }
}

/// Coefficientwise product with one symbol.
pub fn apply_multiplier(coeffs: &SpectralCoeffs, symbol: Multiplier) -> SpectralCoeffs {
    let grid = coeffs.grid;
    coeffs.map_symbol(|j1, j2| symbol.symbol(&grid, j1, j2))
}

/// Coefficientwise product with the combined symbol of `symbols`.
pub fn apply_multipliers(coeffs: &SpectralCoeffs, symbols: &[Multiplier]) -> SpectralCoeffs {
    let grid = coeffs.grid;
    coeffs.map_symbol(|j1, j2| {
        symbols
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, m| acc * m.symbol(&grid, j1, j2))
    })
}

/// 2/3 rule: zero every mode with `|k_i| > n/3` on either axis.
pub fn dealias(coeffs: &SpectralCoeffs) -> SpectralCoeffs {
    let mut out = coeffs.clone();
    dealias_in_place(&mut out);
    out
}

pub(crate) fn dealias_in_place(coeffs: &mut SpectralCoeffs) {
    let grid = coeffs.grid;
    let n = grid.n;
    let keep: Vec<bool> = (0..n)
        .map(|j| 3 * grid.wavenumber(j).unsigned_abs() as usize <= n)
        .collect();
    let zero = Complex64::new(0.0, 0.0);
    for j2 in 0..n {
        for j1 in 0..n {
            if !(keep[j1] && keep[j2]) {
                coeffs.values[j2 * n + j1] = zero;
            }
        }
    }
}

pub fn forward_transform(field: &ScalarField) -> SpectralCoeffs {
    let grid = *field.grid();
    let mut data: Vec<Complex64> = field
        .values()
        .iter()
        .map(|&x| Complex64::new(x, 0.0))
        .collect();
    fft2(&mut data, grid.n, Direction::Forward);
    let scale = 1.0 / grid.len() as f64;
    data.iter_mut().for_each(|c| *c *= scale);
    SpectralCoeffs { grid, values: data }
}

/// Inverse transform of coefficients of a real field. Fails with
/// [`Error::SymmetryViolation`] if the imaginary residue exceeds
/// [`SYMMETRY_TOLERANCE`] relative to the field magnitude.
pub fn inverse_transform(coeffs: &SpectralCoeffs) -> Result<ScalarField> {
    let grid = coeffs.grid;
    let mut data = coeffs.values.clone();
    fft2(&mut data, grid.n, Direction::Inverse);
    let magnitude = data.iter().fold(0.0f64, |m, c| m.max(c.re.abs()));
    let residual = data.iter().fold(0.0f64, |m, c| m.max(c.im.abs()));
    if residual > SYMMETRY_TOLERANCE * magnitude && residual > f64::MIN_POSITIVE {
        return Err(Error::SymmetryViolation {
            residual,
            magnitude,
        });
    }
    ScalarField::from_values(grid, data.into_iter().map(|c| c.re).collect())
}

/// Transforms two real fields with one complex FFT.
pub fn forward_pair(a: &ScalarField, b: &ScalarField) -> Result<(SpectralCoeffs, SpectralCoeffs)> {
    if a.grid() != b.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(forward_pair_raw(*a.grid(), a.values(), b.values()))
}

pub(crate) fn forward_pair_raw(
    grid: Grid2D,
    a: &[f64],
    b: &[f64],
) -> (SpectralCoeffs, SpectralCoeffs) {
    let n = grid.n;
    let mut z: Vec<Complex64> = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| Complex64::new(x, y))
        .collect();
    fft2(&mut z, n, Direction::Forward);
    let scale = 0.5 / grid.len() as f64;
    let mut ca = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut cb = vec![Complex64::new(0.0, 0.0); grid.len()];
    for j2 in 0..n {
        let m2 = grid.mirror(j2);
        for j1 in 0..n {
            let zk = z[j2 * n + j1];
            let zm = z[m2 * n + grid.mirror(j1)].conj();
            ca[j2 * n + j1] = (zk + zm) * scale;
            // (zk - zm) / (2i)
            let d = (zk - zm) * scale;
            cb[j2 * n + j1] = Complex64::new(d.im, -d.re);
        }
    }
    (
        SpectralCoeffs { grid, values: ca },
        SpectralCoeffs { grid, values: cb },
    )
}

/// Inverse of two conjugate-symmetric spectra with one complex FFT. The
/// imaginary residues are not inspected; callers guarantee the symmetry.
pub fn inverse_pair(a: &SpectralCoeffs, b: &SpectralCoeffs) -> Result<(ScalarField, ScalarField)> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch);
    }
    let (x, y) = inverse_pair_raw(&a.values, &b.values, a.grid);
    Ok((
        ScalarField::from_values_unchecked(a.grid, x),
        ScalarField::from_values_unchecked(a.grid, y),
    ))
}

pub(crate) fn inverse_pair_raw(
    a: &[Complex64],
    b: &[Complex64],
    grid: Grid2D,
) -> (Vec<f64>, Vec<f64>) {
    let mut z: Vec<Complex64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| Complex64::new(x.re - y.im, x.im + y.re))
        .collect();
    fft2(&mut z, grid.n, Direction::Inverse);
    let re = z.iter().map(|c| c.re).collect();
    let im = z.iter().map(|c| c.im).collect();
    (re, im)
}

/// Hˢ norm of a real field, see [`SpectralCoeffs::sobolev_norm`].
pub fn sobolev_norm(field: &ScalarField, s: f64) -> f64 {
    forward_transform(field).sobolev_norm(s)
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Direction {
    Forward,
    Inverse,
}

struct Plan {
    fft: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    transposed: Vec<Complex64>,
}

thread_local! {
    static PLANS: RefCell<HashMap<(usize, Direction), Plan>> = RefCell::new(HashMap::new());
}

/// Unnormalized in-place 2D FFT of an `n x n` row-major array.
fn fft2(data: &mut [Complex64], n: usize, direction: Direction) {
    PLANS.with(|plans| {
        let mut plans = plans.borrow_mut();
        let plan = plans.entry((n, direction)).or_insert_with(|| {
            let mut planner = FftPlanner::new();
            let fft = match direction {
                Direction::Forward => planner.plan_fft_forward(n),
                Direction::Inverse => planner.plan_fft_inverse(n),
            };
            let scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
            Plan {
                fft,
                scratch,
                transposed: vec![Complex64::new(0.0, 0.0); n * n],
            }
        });
        plan.fft.process_with_scratch(data, &mut plan.scratch);
        transpose(data, &mut plan.transposed, n);
        plan.fft
            .process_with_scratch(&mut plan.transposed, &mut plan.scratch);
        transpose(&plan.transposed, data, n);
    });
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    const BLOCK: usize = 16;
    for ib in (0..n).step_by(BLOCK) {
        for jb in (0..n).step_by(BLOCK) {
            for i in ib..(ib + BLOCK).min(n) {
                for j in jb..(jb + BLOCK).min(n) {
                    dst[j * n + i] = src[i * n + j];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_pi_grid(n: usize) -> Grid2D {
        Grid2D::new(n, 2.0 * PI).unwrap()
    }

    fn random_field(grid: Grid2D, seed: u64) -> ScalarField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        ScalarField::from_values(grid, values).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(Grid2D::new(4, 1.0).is_err());
        assert!(Grid2D::new(12, 1.0).is_err());
        assert!(Grid2D::new(16, 0.0).is_err());
        let g = Grid2D::new(16, 2.0).unwrap();
        assert_eq!(g.wavenumber(7), 7);
        assert_eq!(g.wavenumber(8), -8);
        assert_eq!(g.wavenumber(15), -1);
        assert_eq!(g.derivative_frequency(8), 0.0);
        assert_eq!(g.mirror(0), 0);
        assert_eq!(g.mirror(3), 13);
    }

    #[test]
    fn constant_field_has_only_mean_mode() {
        let grid = two_pi_grid(16);
        let c = forward_transform(&ScalarField::constant(grid, 1.0));
        assert!((c.at(0, 0).re - 1.0).abs() < 1e-15);
        let others = c
            .values()
            .iter()
            .skip(1)
            .fold(0.0f64, |m, z| m.max(z.norm()));
        assert!(others < 1e-15);
    }

    #[test]
    fn sine_has_two_modes() {
        let grid = two_pi_grid(32);
        let f = ScalarField::from_fn(grid, |x| x[0].sin());
        let c = forward_transform(&f);
        for j2 in 0..32 {
            for j1 in 0..32 {
                let (k1, k2) = (grid.wavenumber(j1), grid.wavenumber(j2));
                let mag = c.at(j1, j2).norm();
                if k2 == 0 && k1.abs() == 1 {
                    assert!((mag - 0.5).abs() < 1e-14);
                } else {
                    assert!(mag < 1e-14, "mode ({k1},{k2}) = {mag}");
                }
            }
        }
        let back = inverse_transform(&c).unwrap();
        assert!(back.max_abs_diff(&f) < 1e-12);
    }

    #[test]
    fn zero_coefficients_give_zero_field() {
        let grid = two_pi_grid(8);
        let f = inverse_transform(&SpectralCoeffs::zeros(grid)).unwrap();
        assert_eq!(f.max_abs(), 0.0);
    }

    #[test]
    fn round_trip_random_field() {
        let grid = Grid2D::standard();
        let f = random_field(grid, 7);
        let back = inverse_transform(&forward_transform(&f)).unwrap();
        assert!(back.max_abs_diff(&f) <= 1e-12 * f.max_abs());
    }

    #[test]
    fn asymmetric_coefficients_are_rejected() {
        let grid = two_pi_grid(8);
        let mut c = SpectralCoeffs::zeros(grid);
        c.values_mut()[grid.index(1, 0)] = Complex64::new(1.0, 0.0);
        assert!(matches!(
            inverse_transform(&c),
            Err(Error::SymmetryViolation { .. })
        ));
    }

    #[test]
    fn pair_transforms_match_single() {
        let grid = Grid2D::new(32, 5.0).unwrap();
        let a = random_field(grid, 1);
        let b = random_field(grid, 2);
        let (ca, cb) = forward_pair(&a, &b).unwrap();
        let sa = forward_transform(&a);
        let sb = forward_transform(&b);
        for i in 0..grid.len() {
            assert!((ca.values()[i] - sa.values()[i]).norm() < 1e-15);
            assert!((cb.values()[i] - sb.values()[i]).norm() < 1e-15);
        }
        let (ra, rb) = inverse_pair(&ca, &cb).unwrap();
        assert!(ra.max_abs_diff(&a) < 1e-14);
        assert!(rb.max_abs_diff(&b) < 1e-14);
    }

    #[test]
    fn single_mode_multipliers() {
        let grid = two_pi_grid(32);
        let sin1 = ScalarField::from_fn(grid, |x| x[0].sin());
        let cos1 = ScalarField::from_fn(grid, |x| x[0].cos());
        let c = forward_transform(&sin1);
        let riesz = inverse_transform(&apply_multiplier(&c, Multiplier::Riesz(Axis::X1))).unwrap();
        assert!(riesz.max_abs_diff(&cos1) < 1e-12);
        let lap = inverse_transform(&apply_multiplier(&c, Multiplier::InverseLaplacian)).unwrap();
        assert!(lap.max_abs_diff(&sin1.scaled(-1.0)) < 1e-12);
        let kept = inverse_transform(&apply_multiplier(&c, Multiplier::BallCutoff)).unwrap();
        assert!(kept.max_abs_diff(&sin1) < 1e-12);
        let sin2 = ScalarField::from_fn(grid, |x| (2.0 * x[0]).sin());
        let cut = apply_multiplier(&forward_transform(&sin2), Multiplier::BallCutoff);
        assert!(inverse_transform(&cut).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn mean_mode_is_annihilated() {
        let grid = two_pi_grid(16);
        let c = forward_transform(&ScalarField::constant(grid, 3.0));
        for m in [
            Multiplier::InverseLaplacian,
            Multiplier::Riesz(Axis::X1),
            Multiplier::Riesz(Axis::X2),
        ] {
            assert_eq!(apply_multiplier(&c, m).at(0, 0), Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn sobolev_norm_of_sine() {
        let grid = two_pi_grid(64);
        let f = ScalarField::from_fn(grid, |x| x[0].sin());
        let l2 = (2.0 * PI * PI).sqrt();
        assert!((sobolev_norm(&f, 0.0) - l2).abs() < 1e-12);
        assert!((f.l2_norm() - l2).abs() < 1e-12);
        for s in [0.5, 1.0, 2.5, 3.0] {
            let expected = 2f64.powf(0.5 * s) * l2;
            assert!((sobolev_norm(&f, s) - expected).abs() < 1e-11 * expected);
        }
    }

    #[test]
    fn dealias_keeps_low_and_drops_nyquist() {
        let grid = two_pi_grid(32);
        let gap = |a: &SpectralCoeffs, b: &SpectralCoeffs| {
            a.values().iter().zip(b.values()).fold(0.0f64, |m, (x, y)| m.max((x - y).norm()))
        };
        let low = ScalarField::from_fn(grid, |x| (3.0 * x[0]).cos() * (5.0 * x[1]).sin());
        let c = forward_transform(&low);
        assert!(gap(&dealias(&c), &c) < 1e-15);
        let nyquist = ScalarField::from_fn(grid, |x| (16.0 * x[0]).cos());
        let c = dealias(&forward_transform(&nyquist));
        assert!(c.values().iter().all(|z| z.norm() < 1e-15));
        let edge = 32 / 3;
        let f = ScalarField::from_fn(grid, |x| (edge as f64 * x[1]).cos());
        let c = forward_transform(&f);
        assert!(gap(&dealias(&c), &c) < 1e-15);
        let f = ScalarField::from_fn(grid, |x| ((edge + 1) as f64 * x[1]).cos());
        assert!(dealias(&forward_transform(&f)).values().iter().all(|z| z.norm() < 1e-15));
    }
}
