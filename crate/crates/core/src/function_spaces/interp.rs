//! Periodic bicubic Hermite interpolation.
//!
//! Node data are the sample value together with spectrally computed
//! `d1 f`, `d2 f` and `d1 d2 f`, so the interpolant is C¹, reproduces the
//! samples exactly and has an `O(h^4)` error on smooth fields.

use rustfft::num_complex::Complex64;

use crate::function_spaces::ScalarField;
use crate::spectral::{forward_pair_raw, inverse_pair_raw, Grid2D, SpectralCoeffs};

/// Hermite node data for `C` fields sharing a grid: per node and component
/// `[f, h d1 f, h d2 f, h^2 d1 d2 f]`.
#[derive(Debug, Clone)]
pub struct Interpolant<const C: usize> {
    grid: Grid2D,
    nodes: Vec<[[f64; 4]; C]>,
}

impl<const C: usize> Interpolant<C> {
    /// Builds node data from samples. Node values are the samples verbatim.
    pub fn from_fields(fields: [&ScalarField; C]) -> Self {
        let grid = *fields[0].grid();
        assert!(fields.iter().all(|f| *f.grid() == grid), "interpolant across grids");
        let mut spectra = Vec::with_capacity(C);
        for pair in fields.chunks(2) {
            let (a, b) = match pair {
                [a, b] => forward_pair_raw(grid, a.values(), b.values()),
                [a] => {
                    let zero = vec![0.0; grid.len()];
                    forward_pair_raw(grid, a.values(), &zero)
                }
                _ => unreachable!(),
            };
            spectra.push(a);
            if pair.len() == 2 {
                spectra.push(b);
            }
        }
        let refs: Vec<&SpectralCoeffs> = spectra.iter().collect();
        let mut out = Self::build(grid, &refs, false);
        for (c, f) in fields.iter().enumerate() {
            for (node, &v) in out.nodes.iter_mut().zip(f.values()) {
                node[c][0] = v;
            }
        }
        out
    }

    /// Builds node data from the spectra of real fields.
    pub fn from_coeffs(coeffs: [&SpectralCoeffs; C]) -> Self {
        let grid = *coeffs[0].grid();
        assert!(coeffs.iter().all(|c| *c.grid() == grid), "interpolant across grids");
        Self::build(grid, &coeffs, true)
    }

    fn build(grid: Grid2D, coeffs: &[&SpectralCoeffs], with_values: bool) -> Self {
        let n = grid.n();
        let h = grid.spacing();
        let d = grid.derivative_frequencies();
        // spectra to invert, tagged (component, slot)
        let mut jobs: Vec<(usize, usize, Vec<Complex64>)> = Vec::new();
        for (c, spec) in coeffs.iter().enumerate() {
            let v = spec.values();
            if with_values {
                jobs.push((c, 0, v.to_vec()));
            }
            let mut dx = Vec::with_capacity(grid.len());
            let mut dy = Vec::with_capacity(grid.len());
            let mut dxy = Vec::with_capacity(grid.len());
            for (j2, row) in v.chunks_exact(n).enumerate() {
                for (j1, &c) in row.iter().enumerate() {
                    dx.push(c * Complex64::new(0.0, h * d[j1]));
                    dy.push(c * Complex64::new(0.0, h * d[j2]));
                    dxy.push(c * (-h * h * d[j1] * d[j2]));
                }
            }
            jobs.push((c, 1, dx));
            jobs.push((c, 2, dy));
            jobs.push((c, 3, dxy));
        }
        let mut planes: Vec<Vec<f64>> = vec![Vec::new(); 4 * C];
        let mut iter = jobs.into_iter();
        while let Some((ca, sa, a)) = iter.next() {
            match iter.next() {
                Some((cb, sb, b)) => {
                    let (ra, rb) = inverse_pair_raw(&a, &b, grid);
                    planes[4 * ca + sa] = ra;
                    planes[4 * cb + sb] = rb;
                }
                None => {
                    let zero = vec![Complex64::new(0.0, 0.0); grid.len()];
                    let (ra, _) = inverse_pair_raw(&a, &zero, grid);
                    planes[4 * ca + sa] = ra;
                }
            }
        }
        // value planes are filled by the caller when not inverted here
        for p in planes.iter_mut().filter(|p| p.is_empty()) {
            *p = vec![0.0; grid.len()];
        }
        let nodes = (0..grid.len())
            .map(|k| std::array::from_fn(|c| std::array::from_fn(|s| planes[4 * c + s][k])))
            .collect();
        Self { grid, nodes }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    /// Interpolated values at an arbitrary point, wrapped into the box.
    pub fn eval(&self, x: [f64; 2]) -> [f64; C] {
        let h = self.grid.spacing();
        let o = self.grid.origin();
        self.eval_index_space((x[0] - o) / h, (x[1] - o) / h)
    }

    pub fn eval_many(&self, points: &[[f64; 2]]) -> Vec<[f64; C]> {
        points.iter().map(|&p| self.eval(p)).collect()
    }

    /// Values at `x_grid + displacement` for every grid node.
    pub fn eval_displaced(&self, disp1: &[f64], disp2: &[f64]) -> [Vec<f64>; C] {
        let n = self.grid.n();
        let inv_h = 1.0 / self.grid.spacing();
        let mut out: [Vec<f64>; C] = std::array::from_fn(|_| Vec::with_capacity(self.grid.len()));
        for i2 in 0..n {
            for i1 in 0..n {
                let k = i2 * n + i1;
                let v = self.eval_index_space(i1 as f64 + disp1[k] * inv_h, i2 as f64 + disp2[k] * inv_h);
                for c in 0..C {
                    out[c].push(v[c]);
                }
            }
        }
        out
    }

    /// Evaluation at fractional index coordinates `(s1, s2)`.
    #[inline]
    fn eval_index_space(&self, s1: f64, s2: f64) -> [f64; C] {
        let n = self.grid.n();
        let (i1, t) = locate(s1, n);
        let (i2, u) = locate(s2, n);
        let i1p = if i1 + 1 == n { 0 } else { i1 + 1 };
        let i2p = if i2 + 1 == n { 0 } else { i2 + 1 };
        let wx = hermite_basis(t);
        let wy = hermite_basis(u);
        let corners = [
            (i2 * n + i1, 0, 0),
            (i2 * n + i1p, 1, 0),
            (i2p * n + i1, 0, 1),
            (i2p * n + i1p, 1, 1),
        ];
        let mut out = [0.0; C];
        for &(k, a, b) in &corners {
            let (vx, dx) = (wx[a], wx[2 + a]);
            let (vy, dy) = (wy[b], wy[2 + b]);
            let w = [vx * vy, dx * vy, vx * dy, dx * dy];
            let node = &self.nodes[k];
            for c in 0..C {
                let d = &node[c];
                out[c] += w[0] * d[0] + w[1] * d[1] + w[2] * d[2] + w[3] * d[3];
            }
        }
        out
    }
}

impl Interpolant<2> {
    /// Matrix `I + grad d` at every node, as `[a11, a12, a21, a22]` with
    /// `a_ij = delta_ij + d_j c_i`.
    pub(crate) fn jacobians(&self) -> impl Iterator<Item = [f64; 4]> + '_ {
        let inv_h = 1.0 / self.grid.spacing();
        self.nodes.iter().map(move |node| {
            [
                1.0 + node[0][1] * inv_h,
                node[0][2] * inv_h,
                node[1][1] * inv_h,
                1.0 + node[1][2] * inv_h,
            ]
        })
    }
}

#[inline]
fn locate(s: f64, n: usize) -> (usize, f64) {
    // floor without a libm call; n is a power of two
    let mut k = s as i64;
    if k as f64 > s {
        k -= 1;
    }
    (k as usize & (n - 1), s - k as f64)
}

/// `[h00, h01, h10, h11]`: value weights for the left and right node, then
/// derivative weights for the left and right node.
#[inline]
fn hermite_basis(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        2.0 * t3 - 3.0 * t2 + 1.0,
        -2.0 * t3 + 3.0 * t2,
        t3 - 2.0 * t2 + t,
        t3 - t2,
    ]
}

/// Slow oracle: evaluates the trigonometric interpolant of `field` at
/// `points` by direct summation over all modes. `O(n^2)` per point.
pub fn eval_fourier_direct(field: &ScalarField, points: &[[f64; 2]]) -> Vec<f64> {
    let coeffs = crate::spectral::forward_transform(field);
    let grid = *field.grid();
    let n = grid.n();
    let freq = grid.frequencies();
    let o = grid.origin();
    points
        .iter()
        .map(|p| {
            let (x1, x2) = (p[0] - o, p[1] - o);
            let mut acc = 0.0;
            for j2 in 0..n {
                for j1 in 0..n {
                    let c = coeffs.at(j1, j2);
                    // Nyquist modes are split symmetrically so the sum stays real
                    let w = if j1 == n / 2 { 0.5 } else { 1.0 } * if j2 == n / 2 { 0.5 } else { 1.0 };
                    let mut add = |f1: f64, f2: f64| {
                        let arg = f1 * x1 + f2 * x2;
                        acc += w * (c.re * arg.cos() - c.im * arg.sin());
                    };
                    let f1 = freq[j1];
                    let f2 = freq[j2];
                    add(f1, f2);
                    if j1 == n / 2 {
                        add(-f1, f2);
                    }
                    if j2 == n / 2 {
                        add(f1, -f2);
                    }
                    if j1 == n / 2 && j2 == n / 2 {
                        add(-f1, -f2);
                    }
                }
            }
            acc
        })
        .collect()
}
