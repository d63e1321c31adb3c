use crate::error::{Error, Result};
use crate::function_spaces::interp::Interpolant;
use crate::function_spaces::{ScalarField, VectorField2};
use crate::spectral::Grid2D;

pub const DEFAULT_INVERSION_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_INVERSION_MAX_ITERS: usize = 100;

/// A map `phi = id + d` on the periodic box with `det(I + grad d) > 0` at
/// every node. The displacement carries the Hermite data used to evaluate
/// `phi` off the grid.
#[derive(Debug, Clone)]
pub struct Diffeo {
    displacement: VectorField2,
    interp: Interpolant<2>,
    min_det: f64,
    max_grad: f64,
}

impl Diffeo {
    pub fn identity(grid: Grid2D) -> Self {
        Self::new(VectorField2::zeros(grid)).expect("identity is a diffeomorphism")
    }

    pub fn translation(grid: Grid2D, offset: [f64; 2]) -> Self {
        Self::new(VectorField2::constant(grid, offset)).expect("translations are diffeomorphisms")
    }

    /// Validates `det(I + grad d) > 0` and finiteness.
    pub fn new(displacement: VectorField2) -> Result<Self> {
        if !displacement.is_finite() {
            return Err(Error::NonFinite("displacement"));
        }
        let interp = Interpolant::from_fields(displacement.components());
        let mut min_det = f64::INFINITY;
        let mut max_grad = 0.0f64;
        for [a11, a12, a21, a22] in interp.jacobians() {
            min_det = min_det.min(a11 * a22 - a12 * a21);
            max_grad = max_grad.max(spectral_norm_2x2(a11 - 1.0, a12, a21, a22 - 1.0));
        }
        if !(min_det > 0.0) {
            return Err(Error::DegenerateDiffeo { min_det });
        }
        Ok(Self {
            displacement,
            interp,
            min_det,
            max_grad,
        })
    }

    pub fn grid(&self) -> &Grid2D {
        self.displacement.grid()
    }

    pub fn displacement(&self) -> &VectorField2 {
        &self.displacement
    }

    pub fn into_displacement(self) -> VectorField2 {
        self.displacement
    }

    pub fn min_jacobian_det(&self) -> f64 {
        self.min_det
    }

    /// `max_x |grad d(x)|` in the 2-norm: the contraction constant of the
    /// inversion iteration.
    pub fn max_displacement_gradient(&self) -> f64 {
        self.max_grad
    }

    /// Largest operator norm of `I + grad d` over the nodes.
    pub fn max_jacobian_norm(&self) -> f64 {
        self.interp
            .jacobians()
            .map(|[a, b, c, d]| spectral_norm_2x2(a, b, c, d))
            .fold(0.0, f64::max)
    }

    /// `phi(x) = x + d(x)`.
    pub fn apply(&self, x: [f64; 2]) -> [f64; 2] {
        let d = self.interp.eval(x);
        [x[0] + d[0], x[1] + d[1]]
    }

    /// `self ∘ inner`, i.e. `x -> self(inner(x))`.
    pub fn compose(&self, inner: &Diffeo) -> Result<Diffeo> {
        if self.grid() != inner.grid() {
            return Err(Error::GridMismatch);
        }
        let d = inner.displacement();
        let [o1, o2] = self.interp.eval_displaced(d.c1().values(), d.c2().values());
        let grid = *d.grid();
        let c1 = d.c1().axpy(1.0, &ScalarField::from_values_unchecked(grid, o1));
        let c2 = d.c2().axpy(1.0, &ScalarField::from_values_unchecked(grid, o2));
        Diffeo::new(VectorField2::new(c1, c2)?)
    }
}

/// Largest singular value of `[[a, b], [c, d]]`.
pub(crate) fn spectral_norm_2x2(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let s = a * a + b * b + c * c + d * d;
    let det = a * d - b * c;
    let disc = (s * s - 4.0 * det * det).max(0.0).sqrt();
    (0.5 * (s + disc)).sqrt()
}

/// `det(I + grad d)` at every node.
pub fn jacobian_det(phi: &Diffeo) -> ScalarField {
    let values = phi
        .interp
        .jacobians()
        .map(|[a, b, c, d]| a * d - b * c)
        .collect();
    ScalarField::from_values_unchecked(*phi.grid(), values)
}

/// Bicubic evaluation of `field` at arbitrary points.
pub fn eval_offgrid(field: &ScalarField, points: &[[f64; 2]]) -> Vec<f64> {
    let interp = Interpolant::from_fields([field]);
    points.iter().map(|&p| interp.eval(p)[0]).collect()
}

/// `theta ∘ phi` sampled on the grid. The [`Diffeo`] type guarantees a
/// positive Jacobian determinant.
pub fn compose_scalar(theta: &ScalarField, phi: &Diffeo) -> ScalarField {
    assert_eq!(theta.grid(), phi.grid(), "composition across grids");
    compose_with(&Interpolant::from_fields([theta]), phi.displacement())
        .pop()
        .expect("one component")
}

pub fn compose_vector(v: &VectorField2, phi: &Diffeo) -> VectorField2 {
    assert_eq!(v.grid(), phi.grid(), "composition across grids");
    let mut parts = compose_with(&Interpolant::from_fields(v.components()), phi.displacement());
    let c2 = parts.pop().expect("two components");
    let c1 = parts.pop().expect("two components");
    VectorField2::new(c1, c2).expect("same grid")
}

/// Evaluates an interpolant at `x + d(x)` and wraps the components.
pub(crate) fn compose_with<const C: usize>(
    interp: &Interpolant<C>,
    displacement: &VectorField2,
) -> Vec<ScalarField> {
    let grid = *displacement.grid();
    interp
        .eval_displaced(displacement.c1().values(), displacement.c2().values())
        .into_iter()
        .map(|v| ScalarField::from_values_unchecked(grid, v))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionOptions {
    pub tolerance: f64,
    pub max_iters: usize,
}

impl Default for InversionOptions {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_INVERSION_TOLERANCE,
            max_iters: DEFAULT_INVERSION_MAX_ITERS,
        }
    }
}

/// Inverse of `phi` with `max |phi(psi(x)) - x| <= tol` at the nodes.
pub fn invert_diffeo(phi: &Diffeo, tol: f64) -> Result<Diffeo> {
    let options = InversionOptions {
        tolerance: tol,
        ..InversionOptions::default()
    };
    let (e, _) = invert_displacement(phi, None, options)?;
    Diffeo::new(e)
}

/// Fixed-point iteration `e <- -d(x + e)` for the displacement `e` of
/// `phi^{-1}`, started from `guess` (zero when absent). Returns `e` and the
/// number of updates performed. The residual `e + d(x + e)` is exactly
/// `phi(x + e) - x`.
pub fn invert_displacement(
    phi: &Diffeo,
    guess: Option<&VectorField2>,
    options: InversionOptions,
) -> Result<(VectorField2, usize)> {
    let grid = *phi.grid();
    let (mut e1, mut e2) = match guess {
        Some(g) => {
            if g.grid() != &grid {
                return Err(Error::GridMismatch);
            }
            (g.c1().values().to_vec(), g.c2().values().to_vec())
        }
        None => (vec![0.0; grid.len()], vec![0.0; grid.len()]),
    };
    let mut residual = f64::INFINITY;
    for iter in 0..=options.max_iters {
        let [d1, d2] = phi.interp.eval_displaced(&e1, &e2);
        residual = 0.0f64;
        for k in 0..grid.len() {
            residual = residual.max((e1[k] + d1[k]).abs()).max((e2[k] + d2[k]).abs());
        }
        if !residual.is_finite() {
            break;
        }
        if residual <= options.tolerance {
            let e = VectorField2::new(
                ScalarField::from_values_unchecked(grid, e1),
                ScalarField::from_values_unchecked(grid, e2),
            )?;
            return Ok((e, iter));
        }
        if iter == options.max_iters {
            break;
        }
        e1 = d1.into_iter().map(|v| -v).collect();
        e2 = d2.into_iter().map(|v| -v).collect();
    }
    Err(Error::NoConvergence {
        iterations: options.max_iters,
        residual,
    })
}
