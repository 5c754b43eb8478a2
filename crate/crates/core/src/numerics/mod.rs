//! Complex scalars, the odd theta function, dense linear algebra and
//! univariate root finding.

mod linalg;
mod roots;
mod series;
mod theta;

pub use linalg::{
    least_squares, null_space, null_space_of_dim, projective_distance, CMatrix, CVector, NullSpace,
};
pub use roots::{poly_eval, poly_roots, Roots};
pub use series::Series;
pub use theta::{theta, theta_with_derivative, Lattice};

pub type C64 = num_complex::Complex64;

/// Shorthand constructor.
#[inline]
pub const fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub(crate) fn is_finite(z: C64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}
