//! Bivariate polynomials of bidegree `(m, n)` on P1 x P1 and linear systems of
//! curves cut out by point, multiplicity, tangency and jet conditions.

mod bipoly;
mod family;

pub use bipoly::{exact_divide, monomial_derivative, BiPoly};
pub use family::{
    build_family, build_family_of_dim, detect_base_points, Arc, CurveCondition, CurveFamily,
    DIMENSION_TOL, FAMILY_MIN_GAP, FAMILY_TOL,
};
