//! Pressure and buoyancy operators of the Lagrangian vector field.
//!
//! Taking the divergence of the momentum equation gives
//! `-Δp = Σ d_i u_j d_j u_i - d_2 θ`. The quadratic part is split with the
//! unit-ball cutoff `χ(D)`: the low modes use the conservative form
//! `Σ d_i d_j (u_i u_j)`, the high modes the product of gradients, and both
//! branches are inverted with `Δ^{-1}`. For divergence-free `u` the two
//! forms coincide, so `∇B(u,u)` is the θ-free part of `-∇p`.

use rustfft::num_complex::Complex64;

use crate::function_spaces::{ScalarField, VectorField2};
use crate::spectral::{
    dealias_in_place, forward_pair_raw, forward_transform, inverse_pair_raw, Grid2D,
    SpectralCoeffs,
};

/// Scalar right-hand sides before `∇Δ^{-1}`: the χ-split form and the
/// unsplit product-of-gradients form.
pub(crate) struct QuadraticSources {
    pub split: SpectralCoeffs,
    pub unsplit: SpectralCoeffs,
}

pub(crate) fn quadratic_sources(u: &VectorField2) -> QuadraticSources {
    let grid = *u.grid();
    let n = grid.n();
    let d = grid.derivative_frequencies();
    let f = grid.frequencies();
    let (mut a, mut b) = u.spectral();
    dealias_in_place(&mut a);
    dealias_in_place(&mut b);
    let (u1, u2) = inverse_pair_raw(a.values(), b.values(), grid);

    let deriv = |c: &SpectralCoeffs, axis2: bool| -> Vec<Complex64> {
        let mut out = c.values().to_vec();
        for j2 in 0..n {
            for j1 in 0..n {
                let k = if axis2 { d[j2] } else { d[j1] };
                out[j2 * n + j1] *= Complex64::new(0.0, k);
            }
        }
        out
    };
    // g_ij = d_i u_j
    let (g11, g21) = inverse_pair_raw(&deriv(&a, false), &deriv(&a, true), grid);
    let (g12, g22) = inverse_pair_raw(&deriv(&b, false), &deriv(&b, true), grid);

    let len = grid.len();
    let mut p11 = Vec::with_capacity(len);
    let mut p12 = Vec::with_capacity(len);
    let mut p22 = Vec::with_capacity(len);
    let mut q = Vec::with_capacity(len);
    for k in 0..len {
        p11.push(u1[k] * u1[k]);
        p12.push(u1[k] * u2[k]);
        p22.push(u2[k] * u2[k]);
        q.push(g11[k] * g11[k] + 2.0 * g12[k] * g21[k] + g22[k] * g22[k]);
    }
    let (mut s11, mut s12) = forward_pair_raw(grid, &p11, &p12);
    let (mut s22, mut unsplit) = forward_pair_raw(grid, &p22, &q);
    for c in [&mut s11, &mut s12, &mut s22, &mut unsplit] {
        dealias_in_place(c);
    }

    let mut split = SpectralCoeffs::zeros(grid);
    let out = split.values_mut();
    for j2 in 0..n {
        for j1 in 0..n {
            let k = j2 * n + j1;
            let xi2 = f[j1] * f[j1] + f[j2] * f[j2];
            out[k] = if xi2 <= 1.0 + 1e-12 {
                // Σ d_i d_j (u_i u_j), symbol -xi_i xi_j
                -(s11.values()[k] * (d[j1] * d[j1])
                    + s12.values()[k] * (2.0 * d[j1] * d[j2])
                    + s22.values()[k] * (d[j2] * d[j2]))
            } else {
                unsplit.values()[k]
            };
        }
    }
    QuadraticSources { split, unsplit }
}

/// `∇Δ^{-1} h` as a pair of spectra with the Nyquist-zeroed symbol
/// `xi~ / |xi~|^2`, so that the result pairs exactly with [`divergence`];
/// modes with `xi~ = 0` map to zero.
///
/// [`divergence`]: crate::function_spaces::divergence
pub(crate) fn grad_inverse_laplacian(h: &SpectralCoeffs) -> (SpectralCoeffs, SpectralCoeffs) {
    let grid = *h.grid();
    let d = grid.derivative_frequencies();
    let inv_lap = |j1: usize, j2: usize| {
        let xi2 = d[j1] * d[j1] + d[j2] * d[j2];
        if xi2 == 0.0 {
            0.0
        } else {
            -1.0 / xi2
        }
    };
    (
        h.map_symbol(|j1, j2| Complex64::new(0.0, d[j1] * inv_lap(j1, j2))),
        h.map_symbol(|j1, j2| Complex64::new(0.0, d[j2] * inv_lap(j1, j2))),
    )
}

/// Spectra of `-Δ^{-1} ∇ d_2 θ`, symbol `-xi~ xi~_2 / |xi~|^2`.
pub(crate) fn buoyancy_spectra(theta: &SpectralCoeffs) -> (SpectralCoeffs, SpectralCoeffs) {
    let grid = *theta.grid();
    let d = grid.derivative_frequencies();
    let sym = |j1: usize, j2: usize, dk: f64| {
        let xi2 = d[j1] * d[j1] + d[j2] * d[j2];
        if xi2 == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(-dk * d[j2] / xi2, 0.0)
        }
    };
    (
        theta.map_symbol(|j1, j2| sym(j1, j2, d[j1])),
        theta.map_symbol(|j1, j2| sym(j1, j2, d[j2])),
    )
}

/// `∇B(u,u)`: the χ(D)-split pressure acceleration of `u`.
pub fn compute_b(u: &VectorField2) -> VectorField2 {
    let (g1, g2) = grad_inverse_laplacian(&quadratic_sources(u).split);
    VectorField2::from_spectral(&g1, &g2)
}

/// `∇Δ^{-1} Σ d_i u_j d_j u_i` without the cutoff split.
pub fn unsplit_pressure_gradient(u: &VectorField2) -> VectorField2 {
    let (g1, g2) = grad_inverse_laplacian(&quadratic_sources(u).unsplit);
    VectorField2::from_spectral(&g1, &g2)
}

/// `-Δ^{-1} ∇ d_2 θ`.
pub fn buoyancy_pressure_term(theta: &ScalarField) -> VectorField2 {
    let (b1, b2) = buoyancy_spectra(&forward_transform(theta));
    VectorField2::from_spectral(&b1, &b2)
}

/// Spectra of `∇B(u,u) - Δ^{-1} ∇ d_2 θ`.
pub(crate) fn acceleration_spectra(
    u: &VectorField2,
    theta: &ScalarField,
) -> (SpectralCoeffs, SpectralCoeffs) {
    let grid: Grid2D = *u.grid();
    let (g1, g2) = grad_inverse_laplacian(&quadratic_sources(u).split);
    let zero = vec![0.0; grid.len()];
    let (t, _) = forward_pair_raw(grid, theta.values(), &zero);
    let (b1, b2) = buoyancy_spectra(&t);
    (
        g1.add(&b1).expect("same grid"),
        g2.add(&b2).expect("same grid"),
    )
}
