//! Fields, diffeomorphisms of the periodic box and the operations between
//! them: composition, inversion, Jacobians and Hˢ-normalized data.

mod data;
mod diffeo;
mod field;
pub mod interp;

pub use data::{
    bump, normalize_hs, pair_sobolev_norm, periodic_gaussian, taylor_green_stream, SobolevIndex,
};
pub use diffeo::{
    compose_scalar, compose_vector, eval_offgrid, invert_diffeo, invert_displacement,
    jacobian_det, Diffeo, InversionOptions, DEFAULT_INVERSION_MAX_ITERS,
    DEFAULT_INVERSION_TOLERANCE,
};
pub(crate) use diffeo::compose_with;
pub use field::{
    curl, divergence, gradient, leray_project, make_divfree_from_stream, ScalarField,
    VectorField2,
};
pub use interp::Interpolant;
