use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::function_spaces::{ScalarField, VectorField2};
use crate::spectral::{inverse_transform, Grid2D, SpectralCoeffs};

/// Sobolev regularity index, restricted to `s > 2` so that Hˢ embeds in C¹.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct SobolevIndex(f64);

impl SobolevIndex {
    pub fn new(s: f64) -> Result<Self> {
        if s > 2.0 && s.is_finite() {
            Ok(Self(s))
        } else {
            Err(Error::InvalidSobolevIndex(s))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// `max(||u||_s, ||theta||_s)`.
pub fn pair_sobolev_norm(u: &VectorField2, theta: &ScalarField, s: f64) -> f64 {
    u.sobolev_norm(s).max(theta.sobolev_norm(s))
}

/// Mollifier `exp(-1 / (1 - |x - c|^2 / r^2))` supported in the closed ball
/// of radius `r` about `center`, using periodic distances. Its peak value is
/// `e^{-1}`.
pub fn bump(center: [f64; 2], radius: f64, grid: Grid2D) -> Result<ScalarField> {
    let min_radius = 2.0 * grid.spacing();
    if !(radius >= min_radius) {
        return Err(Error::UnresolvableBump { radius, min_radius });
    }
    Ok(ScalarField::from_fn(grid, |x| {
        let dx = grid.wrap_delta(x[0] - center[0]);
        let dy = grid.wrap_delta(x[1] - center[1]);
        let q = (dx * dx + dy * dy) / (radius * radius);
        if q < 1.0 {
            (-1.0 / (1.0 - q)).exp()
        } else {
            0.0
        }
    }))
}

/// Rescales `field` so that its Hˢ norm equals `target`.
pub fn normalize_hs(field: &ScalarField, s: f64, target: f64) -> Result<ScalarField> {
    if target == 0.0 {
        return Ok(ScalarField::zeros(*field.grid()));
    }
    let norm = field.sobolev_norm(s);
    if norm == 0.0 {
        return Err(Error::ZeroField);
    }
    Ok(field.scaled(target / norm))
}

/// Periodization of `amplitude * exp(-|x - center|^2 / (2 sigma^2))`,
/// synthesized from its Fourier series so that it is exactly periodic.
pub fn periodic_gaussian(grid: Grid2D, center: [f64; 2], sigma: f64, amplitude: f64) -> ScalarField {
    let n = grid.n();
    let l = grid.box_length();
    let freq = grid.frequencies();
    let shift = [center[0] - grid.origin(), center[1] - grid.origin()];
    let scale = amplitude * 2.0 * PI * sigma * sigma / (l * l);
    let mut c = SpectralCoeffs::zeros(grid);
    for j2 in 0..n {
        for j1 in 0..n {
            if j1 == n / 2 || j2 == n / 2 {
                continue;
            }
            let (f1, f2) = (freq[j1], freq[j2]);
            let mag = scale * (-0.5 * sigma * sigma * (f1 * f1 + f2 * f2)).exp();
            let phase = -(f1 * shift[0] + f2 * shift[1]);
            c.values_mut()[grid.index(j1, j2)] = Complex64::from_polar(mag, phase);
        }
    }
    inverse_transform(&c).expect("conjugate-symmetric synthesis")
}

/// Stream function `A sin(k x1) sin(k x2) / k`, `k = 2 pi m / L`, of the
/// Taylor–Green cellular flow `u = A (-sin kx1 cos kx2, cos kx1 sin kx2)`.
pub fn taylor_green_stream(grid: Grid2D, amplitude: f64, mode: u32) -> ScalarField {
    let k = 2.0 * PI * mode as f64 / grid.box_length();
    ScalarField::from_fn(grid, |x| amplitude * (k * x[0]).sin() * (k * x[1]).sin() / k)
}
