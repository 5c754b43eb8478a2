use nalgebra::linalg::Schur;

use super::{CMatrix, C64};
use crate::error::{Error, Result};

/// Roots of a univariate polynomial with the residual `|p(root)|` of each.
#[derive(Debug, Clone)]
pub struct Roots {
    pub roots: Vec<C64>,
    pub residuals: Vec<f64>,
}

impl Roots {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Horner evaluation, coefficients in ascending order.
pub fn poly_eval(coeffs: &[C64], z: C64) -> C64 {
    coeffs
        .iter()
        .rev()
        .fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

fn poly_eval_with_derivative(coeffs: &[C64], z: C64) -> (C64, C64) {
    let mut p = C64::new(0.0, 0.0);
    let mut dp = C64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// All complex roots (with multiplicity) of `sum_k coeffs[k] z^k`, from the
/// eigenvalues of the companion matrix followed by a short Newton polish.
///
/// Leading coefficients below `1e-13` of the largest one are trimmed.
pub fn poly_roots(coeffs: &[C64]) -> Result<Roots> {
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::degenerate(
            "zero polynomial has no well-defined roots",
        ));
    }
    let mut deg = coeffs.len() - 1;
    while deg > 0 && coeffs[deg].norm() <= 1e-13 * scale {
        deg -= 1;
    }
    let p = &coeffs[..=deg];
    if deg == 0 {
        return Ok(Roots {
            roots: Vec::new(),
            residuals: Vec::new(),
        });
    }
    let lead = p[deg];
    let mut companion = CMatrix::zeros(deg, deg);
    for i in 1..deg {
        companion[(i, i - 1)] = C64::new(1.0, 0.0);
    }
    for i in 0..deg {
        companion[(i, deg - 1)] = -p[i] / lead;
    }
    let eig = Schur::new(companion)
        .eigenvalues()
        .ok_or_else(|| Error::degenerate("companion eigenvalue iteration failed"))?;
    let mut roots: Vec<C64> = eig.iter().copied().collect();
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let (v, d) = poly_eval_with_derivative(p, *r);
            if d.norm() == 0.0 {
                break;
            }
            let cand = *r - v / d;
            if poly_eval(p, cand).norm() < v.norm() {
                *r = cand;
            } else {
                break;
            }
        }
    }
    let residuals = roots.iter().map(|&r| poly_eval(p, r).norm()).collect();
    Ok(Roots { roots, residuals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn from_roots(roots: &[C64]) -> Vec<C64> {
        let mut p = vec![c(1.0, 0.0)];
        for &r in roots {
            let mut q = vec![c(0.0, 0.0); p.len() + 1];
            for (k, &a) in p.iter().enumerate() {
                q[k + 1] += a;
                q[k] -= a * r;
            }
            p = q;
        }
        p
    }

    #[test]
    fn quadratic() {
        let r = poly_roots(&[c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let mut re: Vec<f64> = r.roots.iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        assert!((re[0] + 1.0).abs() < 1e-14 && (re[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn constant_has_no_roots() {
        assert!(poly_roots(&[c(3.0, 1.0)]).unwrap().roots.is_empty());
    }

    #[test]
    fn zero_polynomial_is_degenerate() {
        assert!(matches!(
            poly_roots(&[c(0.0, 0.0), c(0.0, 0.0)]),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn quartic_round_trip() {
        let known = [c(0.3, -1.2), c(-2.0, 0.5), c(1.1, 1.1), c(0.0, 0.7)];
        let p: Vec<C64> = from_roots(&known)
            .iter()
            .map(|&a| a * c(2.0, -1.0))
            .collect();
        let r = poly_roots(&p).unwrap();
        for k in &known {
            let best = r
                .roots
                .iter()
                .map(|z| (z - k).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(best < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn reconstruction_matches_input(
            parts in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..=8)
        ) {
            let known: Vec<C64> = parts.iter().map(|&(a, b)| c(a, b)).collect();
            let p = from_roots(&known);
            let r = poly_roots(&p).unwrap();
            let q = from_roots(&r.roots);
            let scale = p.iter().map(|z| z.norm()).fold(0.0, f64::max);
            for (a, b) in p.iter().zip(&q) {
                prop_assert!((a - b).norm() < 1e-8 * scale);
            }
        }
    }
}
