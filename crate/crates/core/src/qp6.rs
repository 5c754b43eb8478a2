//! The q-difference sixth Painleve system: its birational step, the scalar
//! Lax pair, and the characterization of both Lax equations as curves in
//! `(f, g)` through prescribed points.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::curves::{build_family, BiPoly, CurveCondition, FAMILY_TOL};
use crate::error::{Error, Result};
use crate::numerics::{c64, is_finite, projective_distance, C64};
use crate::surface::SurfacePoint;

/// Parameters `a, b`, the shift `q`, the point `(f, g)` and the spectral
/// variable `z`. `q` is stored, never recomputed from the parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QP6State {
    pub a: [C64; 4],
    pub b: [C64; 4],
    pub q: C64,
    pub f: C64,
    pub g: C64,
    pub z: C64,
}

/// `y(z/q), y(z), y(qz)` and `T^-1(y)(z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QP6Waves {
    pub y_down: C64,
    pub y_0: C64,
    pub y_up: C64,
    pub y_prev: C64,
}

/// Relative size below which a denominator counts as a pole.
const POLE_TOL: f64 = 1e-12;

fn checked_div(num: C64, den: C64, what: &str) -> Result<C64> {
    let r = num / den;
    if den.norm() <= POLE_TOL * (1.0 + num.norm()) || !is_finite(r) {
        return Err(Error::degenerate(format!("q-P6: pole in {what}")));
    }
    Ok(r)
}

impl QP6State {
    /// Validates the parameter constraint `q = a3 a4 b1 b2 / (a1 a2 b3 b4)`.
    pub fn new(a: [C64; 4], b: [C64; 4], q: C64, f: C64, g: C64, z: C64) -> Result<Self> {
        let s = Self { a, b, q, f, g, z };
        if a.iter()
            .chain(&b)
            .any(|v| v.norm() == 0.0 || !is_finite(*v))
        {
            return Err(Error::invalid("q-P6 parameters must be finite and nonzero"));
        }
        if (q.norm() - 1.0).abs() < 1e-9 {
            log::warn!("|q| = 1: iteration does not separate scales");
        }
        let res = s.constraint_residual();
        if res > 1e-12 {
            return Err(Error::invalid(format!(
                "q-P6 constraint violated ({res:e})"
            )));
        }
        Ok(s)
    }

    /// Seeded generic state; `b4` is solved from the constraint.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Result<Self> {
        let mut draw = |lo: f64, hi: f64| {
            C64::from_polar(
                rng.gen_range(lo..hi),
                rng.gen_range(0.0..std::f64::consts::TAU),
            )
        };
        let a = [
            draw(0.5, 2.0),
            draw(0.5, 2.0),
            draw(0.5, 2.0),
            draw(0.5, 2.0),
        ];
        let (b1, b2, b3) = (draw(0.5, 2.0), draw(0.5, 2.0), draw(0.5, 2.0));
        let q = draw(0.6, 0.9);
        let b4 = a[2] * a[3] * b1 * b2 / (a[0] * a[1] * b3 * q);
        let (f, g, z) = (draw(0.3, 1.5), draw(0.3, 1.5), draw(0.3, 1.5));
        Self::new(a, [b1, b2, b3, b4], q, f, g, z)
    }

    pub fn constraint_residual(&self) -> f64 {
        let [a1, a2, a3, a4] = self.a;
        let [b1, b2, b3, b4] = self.b;
        let rhs = a3 * a4 * b1 * b2 / (a1 * a2 * b3 * b4);
        (self.q - rhs).norm() / self.q.norm()
    }

    pub fn with_point(&self, f: C64, g: C64) -> Self {
        Self {
            f,
            g,
            ..self.clone()
        }
    }

    /// The step `T`: `gdot` first, then `fdot` from `gdot`; parameters
    /// `(a1, a2, b1, b2)` scale by `q`.
    pub fn step(&self) -> Result<Self> {
        let [a1, a2, a3, a4] = self.a;
        let [b1, b2, b3, b4] = self.b;
        let (f, g) = (self.f, self.g);
        let gd = checked_div(
            b3 * b4 * (f - a1) * (f - a2),
            (f - a3) * (f - a4) * g,
            "gdot",
        )?;
        let fd = checked_div(
            a3 * a4 * (gd - b1) * (gd - b2),
            (gd - b3) * (gd - b4) * f,
            "fdot",
        )?;
        let q = self.q;
        Ok(Self {
            a: [q * a1, q * a2, a3, a4],
            b: [q * b1, q * b2, b3, b4],
            q,
            f: fd,
            g: gd,
            z: self.z,
        })
    }

    /// Coefficients `(A_up, A_0, A_down)` of `A_up y(qz) + A_0 y(z) +
    /// A_down y(z/q) = 0` at spectral value `z`.
    pub fn l1_coeffs(&self, z: C64) -> Result<[C64; 3]> {
        let [a1, a2, a3, a4] = self.a;
        let [b1, b2, b3, b4] = self.b;
        let (q, f, g) = (self.q, self.f, self.g);
        let one = c64(1.0, 0.0);
        let c0 = -(a1 * a2 / f) * (one / b1 + one / b2);
        let c1 = (one / b3 + one / b4) / q;
        let c2 = checked_div((f - a1) * (f - a2), q * f * g, "c2")?;
        let c3 = checked_div((f - a3) * (f - a4) * g, b3 * b4 * f, "c3")?;
        let up = checked_div((a1 - z) * (a2 - z), a1 * a2 * (z - f), "y(qz) coefficient")?;
        let mid = -(c0
            + c1 * z
            + checked_div(c2 * z, z - f, "c2 term")?
            + checked_div(c3 * z, z - q * f, "c3 term")?);
        let down = checked_div(
            a1 * a2 * (z - q * a3) * (z - q * a4),
            b3 * b4 * q * q * (z - q * f),
            "y(z/q) coefficient",
        )?;
        Ok([up, mid, down])
    }

    /// Coefficients of `q g y(qz) - a1 a2 y(z) + z (z - f) T^-1(y)(z) = 0`.
    pub fn l2_coeffs(&self, z: C64) -> [C64; 3] {
        [self.q * self.g, -self.a[0] * self.a[1], z * (z - self.f)]
    }

    /// `y(qz)` from `y(z)` and `y(z/q)`.
    pub fn solve_up(&self, z: C64, y_0: C64, y_down: C64) -> Result<C64> {
        let [up, mid, down] = self.l1_coeffs(z)?;
        checked_div(-(mid * y_0 + down * y_down), up, "forward solve")
    }

    /// `T^-1(y)(z)` from `y(qz)` and `y(z)`.
    pub fn solve_prev(&self, z: C64, y_up: C64, y_0: C64) -> Result<C64> {
        let [up, mid, prev] = self.l2_coeffs(z);
        checked_div(-(up * y_up + mid * y_0), prev, "T^-1 solve")
    }

    /// Waves at `self.z` from the seed `(y(z/q), y(z))`.
    pub fn waves(&self, y_down: C64, y_0: C64) -> Result<QP6Waves> {
        let y_up = self.solve_up(self.z, y_0, y_down)?;
        let y_prev = self.solve_prev(self.z, y_up, y_0)?;
        Ok(QP6Waves {
            y_down,
            y_0,
            y_up,
            y_prev,
        })
    }

    /// First Lax equation times `f g (z - f)(z - qf)`, as a bidegree (3,2)
    /// curve in `(f, g)` with the waves as parameters.
    pub fn l1_curve(&self, w: &QP6Waves) -> BiPoly {
        let [a1, a2, a3, a4] = self.a;
        let [b1, b2, b3, b4] = self.b;
        let (q, z) = (self.q, self.z);
        let one = c64(1.0, 0.0);
        let f = BiPoly::f_minus(c64(0.0, 0.0));
        let g = BiPoly::g_minus(c64(0.0, 0.0));
        let z_f = BiPoly::f_minus(z).scale(-one);
        let z_qf = BiPoly::f_minus(z / q).scale(-q);
        let fg = f.mul(&g);
        let up = fg.mul(&z_qf).scale((a1 - z) * (a2 - z) / (a1 * a2));
        let down = fg
            .mul(&z_f)
            .scale(a1 * a2 * (z - q * a3) * (z - q * a4) / (b3 * b4 * q * q));
        let t0 = g
            .mul(&z_f)
            .mul(&z_qf)
            .scale(-a1 * a2 * (one / b1 + one / b2));
        let t1 = fg.mul(&z_f).mul(&z_qf).scale(z * (one / b3 + one / b4) / q);
        let t2 = BiPoly::f_minus(a1)
            .mul(&BiPoly::f_minus(a2))
            .mul(&z_qf)
            .scale(z / q);
        let t3 = BiPoly::f_minus(a3)
            .mul(&BiPoly::f_minus(a4))
            .mul(&g)
            .mul(&g)
            .mul(&z_f)
            .scale(z / (b3 * b4));
        let mid = t0.add(&t1).add(&t2).add(&t3).scale(-one);
        up.scale(w.y_up)
            .add(&mid.scale(w.y_0))
            .add(&down.scale(w.y_down))
    }

    /// Second Lax equation as a bidegree (1,1) curve in `(f, g)`.
    pub fn l2_curve(&self, w: &QP6Waves) -> BiPoly {
        let z = self.z;
        // q g y_up - a1 a2 y_0 + z (z - f) y_prev
        BiPoly::from_fn(1, 1, |i, j| match (i, j) {
            (0, 0) => -self.a[0] * self.a[1] * w.y_0 + z * z * w.y_prev,
            (0, 1) => self.q * w.y_up,
            (1, 0) => -z * w.y_prev,
            _ => c64(0.0, 0.0),
        })
    }

    /// The twelve points characterizing the first Lax equation.
    pub fn l1_points(&self, w: &QP6Waves) -> Result<Vec<SurfacePoint>> {
        let [a1, a2, a3, a4] = self.a;
        let [b1, b2, b3, b4] = self.b;
        let (q, z) = (self.q, self.z);
        let zero = c64(0.0, 0.0);
        let fin = |x: C64| [x, c64(1.0, 0.0)];
        let inf = [c64(1.0, 0.0), zero];
        let pt = |x: [C64; 2], y: [C64; 2]| SurfacePoint::new(x, y);
        let ratio_z = checked_div(a1 * a2 * w.y_0, q * w.y_up, "y(z)/y(qz)")?;
        let ratio_down = checked_div(a1 * a2 * w.y_down, q * w.y_0, "y(z/q)/y(z)")?;
        Ok(vec![
            pt(fin(zero), fin(b1 / q)),
            pt(fin(zero), fin(b2 / q)),
            pt(inf, fin(b3)),
            pt(inf, fin(b4)),
            pt(fin(a1), fin(zero)),
            pt(fin(a2), fin(zero)),
            pt(fin(a3), inf),
            pt(fin(a4), inf),
            pt(fin(z), inf),
            pt(fin(z / q), fin(zero)),
            pt(fin(z), fin(ratio_z)),
            pt(fin(z / q), fin(ratio_down)),
        ])
    }

    /// The three points characterizing the second Lax equation.
    pub fn l2_points(&self, w: &QP6Waves) -> Result<Vec<SurfacePoint>> {
        let [a1, a2, ..] = self.a;
        let (q, z) = (self.q, self.z);
        let one = c64(1.0, 0.0);
        let ratio_z = checked_div(a1 * a2 * w.y_0, q * w.y_up, "y(z)/y(qz)")?;
        let f_prev = z - checked_div(a1 * a2 * w.y_0, z * w.y_prev, "y(z)/T^-1 y(z)")?;
        Ok(vec![
            SurfacePoint::new([one, c64(0.0, 0.0)], [one, c64(0.0, 0.0)]),
            SurfacePoint::affine(z, ratio_z),
            SurfacePoint::affine(f_prev, c64(0.0, 0.0)),
        ])
    }
}

/// Residuals of the curve characterization of both Lax equations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolationCheck {
    /// Interpolated vs assembled (3,2) curve, projective distance.
    pub l1_distance: f64,
    pub l1_dimension: usize,
    /// Largest relative value of the assembled (3,2) curve at the 12 points.
    pub l1_point_residual: f64,
    pub l2_distance: f64,
    pub l2_dimension: usize,
    pub l2_point_residual: f64,
}

pub fn verify_interpolation(s: &QP6State, w: &QP6Waves) -> Result<InterpolationCheck> {
    let side = |m: usize,
                n: usize,
                pts: Vec<SurfacePoint>,
                assembled: BiPoly|
     -> Result<(f64, usize, f64)> {
        let conds: Vec<CurveCondition> = pts.iter().cloned().map(CurveCondition::Vanish).collect();
        let fam = build_family(m, n, &conds, FAMILY_TOL)?;
        let dim = fam.dim();
        if dim != 1 {
            return Err(Error::Dimension {
                what: format!("q-P6 ({m},{n}) curve"),
                expected: 1,
                observed: dim,
            });
        }
        let assembled = assembled.padded(m, n);
        let dist = projective_distance(fam.basis[0].coeffs(), assembled.coeffs());
        let on = pts
            .iter()
            .map(|p| assembled.relative_eval_at(p))
            .fold(0.0, f64::max);
        Ok((dist, dim, on))
    };
    let (l1_distance, l1_dimension, l1_point_residual) =
        side(3, 2, s.l1_points(w)?, s.l1_curve(w))?;
    let (l2_distance, l2_dimension, l2_point_residual) =
        side(1, 1, s.l2_points(w)?, s.l2_curve(w))?;
    Ok(InterpolationCheck {
        l1_distance,
        l1_dimension,
        l1_point_residual,
        l2_distance,
        l2_dimension,
        l2_point_residual,
    })
}

/// One lattice cell of the zero-curvature condition. `y` solves the first
/// Lax equation of `T(s)` from the seed `(y(z/q), y(z))`; `T^-1(y)` is read
/// off the second Lax equation of `T(s)` at `z/q, z, qz` and must solve the
/// first Lax equation of `s` at `z`. Returns the relative residual.
pub fn square_residual(s: &QP6State, seed: (C64, C64)) -> Result<f64> {
    square_residual_with(s, &s.step()?, seed)
}

/// As [`square_residual`] with an arbitrary second state; a point that is
/// not the image under the step gives an O(1) residual.
pub fn square_residual_with(s: &QP6State, next: &QP6State, seed: (C64, C64)) -> Result<f64> {
    let (q, z) = (s.q, s.z);
    let (y_down, y_0) = seed;
    let y_up = next.solve_up(z, y_0, y_down)?;
    let y_upup = next.solve_up(q * z, y_up, y_0)?;
    let p_down = next.solve_prev(z / q, y_0, y_down)?;
    let p_0 = next.solve_prev(z, y_up, y_0)?;
    let p_up = next.solve_prev(q * z, y_upup, y_up)?;
    let [up, mid, down] = s.l1_coeffs(z)?;
    let terms = [up * p_up, mid * p_0, down * p_down];
    let scale: f64 = terms.iter().map(|t| t.norm()).sum();
    if scale == 0.0 {
        return Err(Error::degenerate("q-P6 square: all terms vanish"));
    }
    Ok(terms.iter().sum::<C64>().norm() / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn state(seed: u64) -> QP6State {
        QP6State::random(&mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    }

    #[test]
    fn step_updates_parameters_and_keeps_q() {
        let s = state(1);
        let t = s.step().unwrap();
        assert_eq!(t.a[2..], s.a[2..]);
        assert_eq!(t.b[2..], s.b[2..]);
        assert_eq!(t.a[0], s.q * s.a[0]);
        assert_eq!(t.b[1], s.q * s.b[1]);
        assert_eq!(t.q, s.q);
        assert!(t.constraint_residual() < 1e-14);
    }

    #[test]
    fn step_satisfies_the_defining_relations() {
        let s = state(2);
        let t = s.step().unwrap();
        let [a1, a2, a3, a4] = s.a;
        let [b1, b2, b3, b4] = s.b;
        // cleared denominators, compared against the larger side
        let lhs = t.g * s.g * (s.f - a3) * (s.f - a4);
        let rhs = b3 * b4 * (s.f - a1) * (s.f - a2);
        assert!((lhs - rhs).norm() < 1e-13 * lhs.norm().max(rhs.norm()));
        let lhs = t.f * s.f * (t.g - b3) * (t.g - b4);
        let rhs = a3 * a4 * (t.g - b1) * (t.g - b2);
        assert!((lhs - rhs).norm() < 1e-13 * lhs.norm().max(rhs.norm()));
    }

    #[test]
    fn f_at_a1_sends_gdot_to_zero() {
        let s = state(3);
        let s = s.with_point(s.a[0], s.g);
        assert!(s.step().unwrap().g.norm() < 1e-15);
    }

    #[test]
    fn constraint_is_enforced() {
        let s = state(4);
        let bad = QP6State::new(s.a, s.b, s.q * 1.01, s.f, s.g, s.z);
        assert!(matches!(bad, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn l1_middle_coefficient_constant() {
        let s = state(5);
        let one = c64(1.0, 0.0);
        // c1 multiplies z; read it off as a divided difference in z at large z
        let c1 = (one / s.b[2] + one / s.b[3]) / s.q;
        let mid = |z: C64| s.l1_coeffs(z).unwrap()[1];
        let (z1, z2) = (c64(1e4, 0.0), c64(2e4, 0.0));
        let slope = (mid(z2) - mid(z1)) / (z2 - z1);
        assert!((slope + c1).norm() < 1e-6 * c1.norm());
    }

    #[test]
    fn forward_solve_back_substitutes() {
        let s = state(6);
        let w = s.waves(c64(0.4, 0.3), c64(-0.2, 1.1)).unwrap();
        let [up, mid, down] = s.l1_coeffs(s.z).unwrap();
        let r = up * w.y_up + mid * w.y_0 + down * w.y_down;
        let scale = (up * w.y_up).norm() + (mid * w.y_0).norm() + (down * w.y_down).norm();
        assert!(r.norm() < 1e-12 * scale);
    }

    #[test]
    fn assembled_curves_pass_through_the_listed_points() {
        let s = state(7);
        let w = s.waves(c64(0.4, 0.3), c64(-0.2, 1.1)).unwrap();
        let c1 = s.l1_curve(&w);
        assert_eq!(c1.degree(), (3, 2));
        for p in s.l1_points(&w).unwrap() {
            assert!(c1.relative_eval_at(&p) < 1e-12, "{p:?}");
        }
        let c2 = s.l2_curve(&w);
        for p in s.l2_points(&w).unwrap() {
            assert!(c2.relative_eval_at(&p) < 1e-12, "{p:?}");
        }
    }

    #[test]
    fn interpolation_matches_the_assembled_curves() {
        for seed in 8..12 {
            let s = state(seed);
            let w = s.waves(c64(0.4, 0.3), c64(-0.2, 1.1)).unwrap();
            let c = verify_interpolation(&s, &w).unwrap();
            assert!(c.l1_distance < 1e-8, "seed {seed}: {c:?}");
            assert!(c.l2_distance < 1e-8, "seed {seed}: {c:?}");
        }
    }

    #[test]
    fn square_closes_only_for_the_painleve_step() {
        for seed in 12..16 {
            let s = state(seed);
            let seed_w = (c64(0.4, 0.3), c64(-0.2, 1.1));
            let r = square_residual(&s, seed_w).unwrap();
            assert!(r < 1e-8, "seed {seed}: {r:e}");
            let t = s.step().unwrap();
            let fake = t.with_point(t.f * c64(1.1, 0.05), t.g);
            assert!(square_residual_with(&s, &fake, seed_w).unwrap() > 1e-3);
        }
    }
}
