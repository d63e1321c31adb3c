use std::ops::{Add, Mul, Sub};

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{
    forward_pair, forward_transform, inverse_pair, inverse_pair_raw, Grid2D, SpectralCoeffs,
};

/// Real samples of a periodic field.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid2D,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid2D) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid2D, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
        }
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(grid: Grid2D, f: impl Fn([f64; 2]) -> f64) -> Self {
        let n = grid.n();
        let mut values = Vec::with_capacity(grid.len());
        for i2 in 0..n {
            for i1 in 0..n {
                values.push(f(grid.point(i1, i2)));
            }
        }
        Self { grid, values }
    }

    pub fn from_values(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("scalar field"));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_values_unchecked(grid: Grid2D, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i1: usize, i2: usize) -> f64 {
        self.values[self.grid.index(i1, i2)]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_diff(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Grid L² norm `(h^2 sum f^2)^(1/2)`.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.cell_measure() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    pub fn sobolev_norm(&self, s: f64) -> f64 {
        forward_transform(self).sobolev_norm(s)
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: f64, other: &ScalarField) -> Self {
        assert_eq!(self.grid, other.grid, "axpy across grids");
        self.zip_map(other, |a, b| a + c * b).expect("same grid")
    }
}

impl Add for &ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: &ScalarField) -> ScalarField {
        self.axpy(1.0, rhs)
    }
}

impl Sub for &ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: &ScalarField) -> ScalarField {
        self.axpy(-1.0, rhs)
    }
}

impl Mul<f64> for &ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: f64) -> ScalarField {
        self.scaled(rhs)
    }
}

/// A pair of scalar fields on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField2 {
    c1: ScalarField,
    c2: ScalarField,
}

impl VectorField2 {
    pub fn new(c1: ScalarField, c2: ScalarField) -> Result<Self> {
        if c1.grid != c2.grid {
            return Err(Error::GridMismatch);
        }
        Ok(Self { c1, c2 })
    }

    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            c1: ScalarField::zeros(grid),
            c2: ScalarField::zeros(grid),
        }
    }

    pub fn constant(grid: Grid2D, value: [f64; 2]) -> Self {
        Self {
            c1: ScalarField::constant(grid, value[0]),
            c2: ScalarField::constant(grid, value[1]),
        }
    }

    pub fn from_fn(grid: Grid2D, f: impl Fn([f64; 2]) -> [f64; 2]) -> Self {
        Self {
            c1: ScalarField::from_fn(grid, |x| f(x)[0]),
            c2: ScalarField::from_fn(grid, |x| f(x)[1]),
        }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.c1.grid
    }

    pub fn c1(&self) -> &ScalarField {
        &self.c1
    }

    pub fn c2(&self) -> &ScalarField {
        &self.c2
    }

    pub fn components(&self) -> [&ScalarField; 2] {
        [&self.c1, &self.c2]
    }

    pub fn into_components(self) -> (ScalarField, ScalarField) {
        (self.c1, self.c2)
    }

    pub fn at(&self, i1: usize, i2: usize) -> [f64; 2] {
        [self.c1.get(i1, i2), self.c2.get(i1, i2)]
    }

    pub fn is_finite(&self) -> bool {
        self.c1.is_finite() && self.c2.is_finite()
    }

    /// Largest pointwise Euclidean magnitude.
    pub fn max_magnitude(&self) -> f64 {
        self.c1
            .values
            .iter()
            .zip(&self.c2.values)
            .fold(0.0f64, |m, (a, b)| m.max(a.hypot(*b)))
    }

    pub fn max_abs_diff(&self, other: &VectorField2) -> f64 {
        self.c1.max_abs_diff(&other.c1).max(self.c2.max_abs_diff(&other.c2))
    }

    /// `(||u1||^2 + ||u2||^2)^(1/2)` in grid L².
    pub fn l2_norm(&self) -> f64 {
        self.c1.l2_norm().hypot(self.c2.l2_norm())
    }

    /// Max of the componentwise Hˢ norms.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let (a, b) = self.spectral();
        a.sobolev_norm(s).max(b.sobolev_norm(s))
    }

    pub fn spectral(&self) -> (SpectralCoeffs, SpectralCoeffs) {
        forward_pair(&self.c1, &self.c2).expect("components share a grid")
    }

    pub(crate) fn from_spectral(a: &SpectralCoeffs, b: &SpectralCoeffs) -> Self {
        let (c1, c2) = inverse_pair(a, b).expect("components share a grid");
        Self { c1, c2 }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            c1: self.c1.scaled(c),
            c2: self.c2.scaled(c),
        }
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: f64, other: &VectorField2) -> Self {
        Self {
            c1: self.c1.axpy(c, &other.c1),
            c2: self.c2.axpy(c, &other.c2),
        }
    }
}

impl Add for &VectorField2 {
    type Output = VectorField2;
    fn add(self, rhs: &VectorField2) -> VectorField2 {
        self.axpy(1.0, rhs)
    }
}

impl Sub for &VectorField2 {
    type Output = VectorField2;
    fn sub(self, rhs: &VectorField2) -> VectorField2 {
        self.axpy(-1.0, rhs)
    }
}

impl Mul<f64> for &VectorField2 {
    type Output = VectorField2;
    fn mul(self, rhs: f64) -> VectorField2 {
        self.scaled(rhs)
    }
}

/// `(i xi~_1, i xi~_2)` applied to one spectrum, returned as a pair.
fn spectral_gradient(c: &SpectralCoeffs) -> (SpectralCoeffs, SpectralCoeffs) {
    let grid = *c.grid();
    let d = grid.derivative_frequencies();
    (
        c.map_symbol(|j1, _| Complex64::new(0.0, d[j1])),
        c.map_symbol(|_, j2| Complex64::new(0.0, d[j2])),
    )
}

pub fn gradient(theta: &ScalarField) -> VectorField2 {
    let (g1, g2) = spectral_gradient(&forward_transform(theta));
    VectorField2::from_spectral(&g1, &g2)
}

/// `d1 v1 + d2 v2` by spectral differentiation.
pub fn divergence(v: &VectorField2) -> ScalarField {
    let (a, b) = v.spectral();
    let grid = *v.grid();
    let d = grid.derivative_frequencies();
    let n = grid.n();
    let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
    for j2 in 0..n {
        for j1 in 0..n {
            let k = j2 * n + j1;
            values[k] = Complex64::new(0.0, d[j1]) * a.values()[k]
                + Complex64::new(0.0, d[j2]) * b.values()[k];
        }
    }
    let zero = vec![Complex64::new(0.0, 0.0); grid.len()];
    let (div, _) = inverse_pair_raw(&values, &zero, grid);
    ScalarField::from_values_unchecked(grid, div)
}

/// Scalar curl `d1 v2 - d2 v1`.
pub fn curl(v: &VectorField2) -> ScalarField {
    let (a, b) = v.spectral();
    let grid = *v.grid();
    let d = grid.derivative_frequencies();
    let n = grid.n();
    let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
    for j2 in 0..n {
        for j1 in 0..n {
            let k = j2 * n + j1;
            values[k] = Complex64::new(0.0, d[j1]) * b.values()[k]
                - Complex64::new(0.0, d[j2]) * a.values()[k];
        }
    }
    let zero = vec![Complex64::new(0.0, 0.0); grid.len()];
    let (c, _) = inverse_pair_raw(&values, &zero, grid);
    ScalarField::from_values_unchecked(grid, c)
}

/// `u = (-d2 psi, d1 psi)`, divergence free by construction.
pub fn make_divfree_from_stream(psi: &ScalarField) -> VectorField2 {
    let (g1, g2) = spectral_gradient(&forward_transform(psi));
    let minus_g2 = g2.map_symbol(|_, _| Complex64::new(-1.0, 0.0));
    VectorField2::from_spectral(&minus_g2, &g1)
}

/// Leray projection onto divergence-free fields; the mean flow is kept.
pub fn leray_project(v: &VectorField2) -> VectorField2 {
    let (a, b) = v.spectral();
    let grid = *v.grid();
    let d = grid.derivative_frequencies();
    let n = grid.n();
    let mut pa = a.clone();
    let mut pb = b.clone();
    for j2 in 0..n {
        for j1 in 0..n {
            let k = j2 * n + j1;
            let mag2 = d[j1] * d[j1] + d[j2] * d[j2];
            if mag2 == 0.0 {
                continue;
            }
            let dot = a.values()[k] * d[j1] + b.values()[k] * d[j2];
            pa.values_mut()[k] -= dot * (d[j1] / mag2);
            pb.values_mut()[k] -= dot * (d[j2] / mag2);
        }
    }
    VectorField2::from_spectral(&pa, &pb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn centered_difference_divergence(v: &VectorField2) -> ScalarField {
        let grid = *v.grid();
        let n = grid.n();
        let h = grid.spacing();
        let mut out = vec![0.0; grid.len()];
        for i2 in 0..n {
            for i1 in 0..n {
                let (p1, m1) = ((i1 + 1) % n, (i1 + n - 1) % n);
                let (p2, m2) = ((i2 + 1) % n, (i2 + n - 1) % n);
                out[grid.index(i1, i2)] = (v.c1().get(p1, i2) - v.c1().get(m1, i2)) / (2.0 * h)
                    + (v.c2().get(i1, p2) - v.c2().get(i1, m2)) / (2.0 * h);
            }
        }
        ScalarField::from_values(grid, out).unwrap()
    }

    fn smooth_random_field(grid: Grid2D, seed: u64, kmax: i64) -> ScalarField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut terms = Vec::new();
        for k1 in -kmax..=kmax {
            for k2 in -kmax..=kmax {
                terms.push((k1 as f64, k2 as f64, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0 * PI)));
            }
        }
        let w = 2.0 * PI / grid.box_length();
        ScalarField::from_fn(grid, |x| {
            terms
                .iter()
                .map(|(a, b, amp, ph)| amp * (w * (a * x[0] + b * x[1]) + ph).cos())
                .sum()
        })
    }

    #[test]
    fn stream_function_of_sine() {
        let grid = Grid2D::new(32, 2.0 * PI).unwrap();
        let u = make_divfree_from_stream(&ScalarField::from_fn(grid, |x| x[0].sin()));
        assert!(u.c1().max_abs() < 1e-14);
        let cos1 = ScalarField::from_fn(grid, |x| x[0].cos());
        assert!(u.c2().max_abs_diff(&cos1) < 1e-13);
        let zero = make_divfree_from_stream(&ScalarField::zeros(grid));
        assert_eq!(zero.max_magnitude(), 0.0);
    }

    #[test]
    fn random_stream_gives_divergence_free_velocity() {
        let grid = Grid2D::new(64, 10.0).unwrap();
        let u = make_divfree_from_stream(&smooth_random_field(grid, 3, 6));
        let div = divergence(&u);
        assert!(div.max_abs() <= 1e-12 * u.max_magnitude().max(1.0));
    }

    #[test]
    fn constant_field_has_zero_divergence() {
        let grid = Grid2D::new(16, 3.0).unwrap();
        assert!(divergence(&VectorField2::constant(grid, [1.5, -2.0])).max_abs() < 1e-14);
    }

    #[test]
    fn divergence_matches_centered_differences() {
        let grid = Grid2D::new(128, 2.0 * PI).unwrap();
        let v = VectorField2::new(smooth_random_field(grid, 11, 3), smooth_random_field(grid, 12, 3)).unwrap();
        let spectral = divergence(&v);
        let fd = centered_difference_divergence(&v);
        // centered differences are second order: error ~ h^2 k^3 |a| / 6
        let h = grid.spacing();
        let tol = h * h * 27.0 / 6.0 * 49.0 * 2.0;
        assert!(spectral.max_abs_diff(&fd) < tol, "{} vs {tol}", spectral.max_abs_diff(&fd));
        // halving h reduces the discrepancy by about four
        let fine = Grid2D::new(256, 2.0 * PI).unwrap();
        let vf = VectorField2::new(smooth_random_field(fine, 11, 3), smooth_random_field(fine, 12, 3)).unwrap();
        let ratio = spectral.max_abs_diff(&fd) / divergence(&vf).max_abs_diff(&centered_difference_divergence(&vf));
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn leray_projection_removes_gradients() {
        let grid = Grid2D::new(64, 2.0 * PI).unwrap();
        let psi = smooth_random_field(grid, 5, 4);
        let phi = smooth_random_field(grid, 6, 4);
        let u = make_divfree_from_stream(&psi);
        let mixed = &u + &gradient(&phi);
        let projected = leray_project(&mixed);
        assert!(projected.max_abs_diff(&u) < 1e-11);
    }

    #[test]
    fn curl_of_stream_velocity_is_laplacian() {
        let grid = Grid2D::new(32, 2.0 * PI).unwrap();
        let psi = ScalarField::from_fn(grid, |x| (2.0 * x[0]).cos() * x[1].sin());
        let w = curl(&make_divfree_from_stream(&psi));
        assert!(w.max_abs_diff(&psi.scaled(-5.0)) < 1e-12);
    }
}
