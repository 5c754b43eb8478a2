//! Elliptic data, the theta parametrization of the (2,2) curve `C0`, points of
//! P1 x P1, the Abel condition and the Picard lattice.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::curves::{build_family, BiPoly, CurveCondition, FAMILY_TOL};
use crate::error::{Error, Result};
use crate::numerics::{c64, is_finite, projective_distance, theta_with_derivative, Lattice, C64};

/// Minimum lattice-reduced separation between parameters.
pub const GENERICITY_MARGIN: f64 = 1e-3;
/// Largest admissible affine coordinate in the elliptic constructions.
pub const COORDINATE_BOUND: f64 = 1e6;

/// Point of P1 x P1 as `((x0 : x1), (y0 : y1))`; affine coordinates are
/// `f = x0/x1`, `g = y0/y1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub x: [C64; 2],
    pub y: [C64; 2],
    pub param: Option<C64>,
}

impl SurfacePoint {
    pub fn new(x: [C64; 2], y: [C64; 2]) -> Self {
        Self { x, y, param: None }
    }

    pub fn affine(f: C64, g: C64) -> Self {
        let one = c64(1.0, 0.0);
        Self::new([f, one], [g, one])
    }

    pub fn with_param(mut self, u: C64) -> Self {
        self.param = Some(u);
        self
    }

    /// Affine f-coordinate, `None` at `f = infinity`.
    pub fn f(&self) -> Option<C64> {
        ratio(self.x)
    }

    /// Affine g-coordinate, `None` at `g = infinity`.
    pub fn g(&self) -> Option<C64> {
        ratio(self.y)
    }

    /// Both affine coordinates; errors at infinity.
    pub fn fg(&self) -> Result<(C64, C64)> {
        match (self.f(), self.g()) {
            (Some(f), Some(g)) => Ok((f, g)),
            _ => Err(Error::degenerate("point outside the affine chart")),
        }
    }

    /// Largest of the two per-factor projective distances.
    pub fn distance(&self, other: &SurfacePoint) -> f64 {
        projective_distance(&self.x, &other.x).max(projective_distance(&self.y, &other.y))
    }

    pub fn is_valid(&self) -> bool {
        self.x.iter().chain(&self.y).all(|z| is_finite(*z))
            && (self.x[0].norm() > 0.0 || self.x[1].norm() > 0.0)
            && (self.y[0].norm() > 0.0 || self.y[1].norm() > 0.0)
    }
}

fn ratio(x: [C64; 2]) -> Option<C64> {
    if x[1].norm() == 0.0 || x[1].norm() < 1e-300 * x[0].norm() {
        return None;
    }
    let r = x[0] / x[1];
    is_finite(r).then_some(r)
}

/// Parameters of the elliptic system.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipticData {
    pub lattice: Lattice,
    pub h1: C64,
    pub h2: C64,
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
    pub u: [C64; 8],
    pub z: C64,
}

/// Theta numerator and denominator of one coordinate with derivatives.
#[derive(Debug, Clone, Copy)]
struct Fraction {
    num: C64,
    dnum: C64,
    den: C64,
    dden: C64,
}

fn theta_pair(u: C64, p: C64, q: C64, lattice: &Lattice) -> (C64, C64) {
    let (t1, d1) = theta_with_derivative(u + p, lattice);
    let (t2, d2) = theta_with_derivative(u - q, lattice);
    (t1 * t2, d1 * t2 + t1 * d2)
}

impl EllipticData {
    /// Validated construction.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        tau: C64,
        h1: C64,
        h2: C64,
        a: C64,
        b: C64,
        c: C64,
        d: C64,
        u: [C64; 8],
        z: C64,
    ) -> Result<Self> {
        let data = Self {
            lattice: Lattice::new(tau)?,
            h1,
            h2,
            a,
            b,
            c,
            d,
            u,
            z,
        };
        data.validate(GENERICITY_MARGIN, COORDINATE_BOUND)?;
        Ok(data)
    }

    /// Scalar shift `2 h1 + 2 h2 - sum u_i`.
    pub fn delta(&self) -> C64 {
        self.h1 * 2.0 + self.h2 * 2.0 - self.u.iter().sum::<C64>()
    }

    /// Data after one step of the dynamics: `u1 - delta`, `u2 + delta`.
    pub fn dotted(&self) -> Self {
        let mut out = self.clone();
        let delta = self.delta();
        out.u[0] -= delta;
        out.u[1] += delta;
        out
    }

    /// Same data with another spectral parameter.
    pub fn with_z(&self, z: C64) -> Self {
        let mut out = self.clone();
        out.z = z;
        out
    }

    fn f_fraction(&self, u: C64) -> Fraction {
        let (num, dnum) = theta_pair(u, self.a, self.h1 + self.a, &self.lattice);
        let (den, dden) = theta_pair(u, self.b, self.h1 + self.b, &self.lattice);
        Fraction {
            num,
            dnum,
            den,
            dden,
        }
    }

    fn g_fraction(&self, u: C64) -> Fraction {
        let (num, dnum) = theta_pair(u, self.c, self.h2 + self.c, &self.lattice);
        let (den, dden) = theta_pair(u, self.d, self.h2 + self.d, &self.lattice);
        Fraction {
            num,
            dnum,
            den,
            dden,
        }
    }

    /// `[u+a][u-h1-a] / ([u+b][u-h1-b])`.
    pub fn f_u(&self, u: C64) -> C64 {
        let fr = self.f_fraction(u);
        fr.num / fr.den
    }

    /// `[u+c][u-h2-c] / ([u+d][u-h2-d])`.
    pub fn g_u(&self, u: C64) -> C64 {
        let fr = self.g_fraction(u);
        fr.num / fr.den
    }

    /// The point `P_u` of `C0`.
    pub fn point(&self, u: C64) -> Result<SurfacePoint> {
        let (f, g) = (self.f_u(u), self.g_u(u));
        if !is_finite(f)
            || !is_finite(g)
            || f.norm() > COORDINATE_BOUND
            || g.norm() > COORDINATE_BOUND
        {
            return Err(Error::degenerate(format!(
                "parameter {u} is at a pole of the parametrization"
            )));
        }
        Ok(SurfacePoint::affine(f, g).with_param(u))
    }

    /// `P_1 .. P_8`.
    pub fn base_points(&self) -> Result<Vec<SurfacePoint>> {
        self.u.iter().map(|&u| self.point(u)).collect()
    }

    /// The (2,2) curve `C0` through `P_1 .. P_8`.
    pub fn phi22(&self) -> Result<BiPoly> {
        let conds: Vec<_> = self
            .base_points()?
            .into_iter()
            .map(CurveCondition::Vanish)
            .collect();
        build_family(2, 2, &conds, FAMILY_TOL)?.unique("phi22")
    }

    /// Parameters entering the Lax constructions for the current `z`, one
    /// per pair `{p, h1 - p}` of points sharing an f-coordinate.
    pub fn construction_parameters(&self) -> Vec<C64> {
        let delta = self.delta();
        let z = self.z;
        let shift = self.u[1] - self.u[0];
        let mut out: Vec<C64> = self.u.to_vec();
        out.push(self.u[0] - delta);
        out.push(self.u[1] + delta);
        for k in -2..=2 {
            out.push(z + delta * k as f64);
        }
        for k in -1..=1 {
            out.push(z + shift + delta * k as f64);
        }
        for k in -2..=0 {
            out.push(z - shift + delta * k as f64);
        }
        out
    }

    /// Lattice-reduced separation and coordinate-size checks over the
    /// construction parameters and their `h1`/`h2` partners.
    pub fn validate(&self, margin: f64, bound: f64) -> Result<()> {
        let scalars = [self.h1, self.h2, self.a, self.b, self.c, self.d, self.z];
        if !scalars.iter().chain(&self.u).all(|z| is_finite(*z)) {
            return Err(Error::invalid("non-finite parameter"));
        }
        if !is_finite(self.delta()) {
            return Err(Error::invalid("non-finite delta"));
        }
        let params = self.construction_parameters();
        let (h1, h2) = (self.h1, self.h2);
        for (i, &p) in params.iter().enumerate() {
            for &q in &params[i..] {
                let same = [("h1-", h1 - q), ("h2-", h2 - q)];
                let distinct = [("", q)];
                let checks: &[(&str, C64)] = if p == q {
                    &same
                } else {
                    &[distinct[0], same[0], same[1]]
                };
                for &(label, other) in checks {
                    let dist = self.lattice.distance(p, other);
                    if dist < margin {
                        return Err(Error::degenerate(format!(
                            "parameters {p} and {label}{q} closer than {margin:e} ({dist:e})"
                        )));
                    }
                }
            }
        }
        for &p in &params {
            for q in [p, h1 - p, h2 - p] {
                let (f, g) = (self.f_u(q), self.g_u(q));
                if !is_finite(f) || !is_finite(g) || f.norm() > bound || g.norm() > bound {
                    return Err(Error::degenerate(format!(
                        "point P_{q} leaves the affine chart"
                    )));
                }
                if f.norm() < 1.0 / bound || g.norm() < 1.0 / bound {
                    return Err(Error::degenerate(format!(
                        "point P_{q} is too close to a coordinate axis"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Uniform draw from the fundamental cell, resampled until the
    /// comfortable margins hold. Errors after 1000 draws.
    pub fn random<R: Rng + ?Sized>(tau: C64, rng: &mut R) -> Result<Self> {
        let lattice = Lattice::new(tau)?;
        for _ in 0..1000 {
            let mut draw = || {
                let (s, t): (f64, f64) = (rng.gen(), rng.gen());
                c64(s, 0.0) + tau * t
            };
            let data = Self {
                lattice,
                h1: draw(),
                h2: draw(),
                a: draw(),
                b: draw(),
                c: draw(),
                d: draw(),
                u: std::array::from_fn(|_| draw()),
                z: draw(),
            };
            if data.validate(GENERATOR_MARGIN, GENERATOR_BOUND).is_ok()
                && data.base_point_spread() >= GENERATOR_SPREAD
                && data.base_point_separation() >= GENERATOR_SEPARATION
            {
                return Ok(data);
            }
        }
        Err(Error::degenerate("no generic configuration in 1000 draws"))
    }

    /// Smaller of the relative spreads of the base points' f- and
    /// g-coordinates, `max |x_i - mean| / max(|mean|, max |x_i - mean|)`.
    /// Small values make every interpolation problem ill-conditioned.
    pub fn base_point_spread(&self) -> f64 {
        let Ok(pts) = self.base_points() else {
            return 0.0;
        };
        let Ok(fg) = pts.iter().map(|p| p.fg()).collect::<Result<Vec<_>>>() else {
            return 0.0;
        };
        let spread = |v: Vec<C64>| {
            let mean = v.iter().sum::<C64>() / v.len() as f64;
            let r = v.iter().map(|x| (x - mean).norm()).fold(0.0, f64::max);
            r / mean.norm().max(r)
        };
        spread(fg.iter().map(|p| p.0).collect()).min(spread(fg.iter().map(|p| p.1).collect()))
    }

    /// Closest pair of base points relative to the farthest pair, in the
    /// max-norm of the affine chart. Near-coincident base points are
    /// numerically non-generic.
    pub fn base_point_separation(&self) -> f64 {
        let Ok(pts) = self.base_points() else {
            return 0.0;
        };
        let Ok(fg) = pts.iter().map(|p| p.fg()).collect::<Result<Vec<_>>>() else {
            return 0.0;
        };
        let (mut near, mut far) = (f64::INFINITY, 0.0f64);
        for (i, a) in fg.iter().enumerate() {
            for b in &fg[..i] {
                let dist = (a.0 - b.0).norm().max((a.1 - b.1).norm());
                near = near.min(dist);
                far = far.max(dist);
            }
        }
        if far > 0.0 {
            near / far
        } else {
            0.0
        }
    }

    /// Inverse of the parametrization: `u` with `P_u = p`, chosen among the
    /// two solutions `{u, h1 - u}` of the f-equation by the g-coordinate.
    pub fn locate_parameter(&self, p: &SurfacePoint, hint: Option<C64>) -> Result<C64> {
        let (f, g) = p.fg()?;
        // scaled so that the equation stays O(1) for large |f|
        let eq = |u: C64| -> (C64, C64) {
            let fr = self.f_fraction(u);
            if f.norm() <= 1.0 {
                (fr.num - f * fr.den, fr.dnum - f * fr.dden)
            } else {
                (fr.num / f - fr.den, fr.dnum / f - fr.dden)
            }
        };
        let mut starts: Vec<C64> = hint.into_iter().collect();
        starts.extend(grid(&self.lattice, 8));
        let mut best: Option<(f64, C64)> = None;
        for s in starts {
            let Some(u) = newton(&eq, s, 60) else {
                continue;
            };
            let u = self.lattice.reduce(u);
            for cand in [u, self.lattice.reduce(self.h1 - u)] {
                let (fc, gc) = (self.f_u(cand), self.g_u(cand));
                let err =
                    ((fc - f).norm() / (1.0 + f.norm())).max((gc - g).norm() / (1.0 + g.norm()));
                if best.is_none_or(|(e, _)| err < e) {
                    best = Some((err, cand));
                }
            }
            if best.is_some_and(|(e, _)| e < 1e-12) {
                break;
            }
        }
        match best {
            Some((err, u)) if err < 1e-8 => Ok(u),
            Some((err, _)) => Err(Error::NotOnCurve(err)),
            None => Err(Error::NotOnCurve(f64::INFINITY)),
        }
    }

    /// Parameters of the `2(m+n)` intersections of `curve` with `C0` and the
    /// residual `|m h1 + n h2 - sum x_i|` modulo the lattice.
    pub fn abel_sum_check(&self, curve: &BiPoly) -> Result<AbelCheck> {
        let (m, n) = curve.degree();
        let expected = 2 * (m + n);
        if expected == 0 {
            return Err(Error::invalid("constant curve"));
        }
        let restricted = |u: C64| -> (C64, C64) {
            let fr = self.f_fraction(u);
            let gr = self.g_fraction(u);
            let fp = powers(fr.num, fr.dnum, m);
            let fq = powers(fr.den, fr.dden, m);
            let gp = powers(gr.num, gr.dnum, n);
            let gq = powers(gr.den, gr.dden, n);
            let (mut v, mut dv) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
            for i in 0..=m {
                let (a, da) = mul_d(fp[i], fq[m - i]);
                for j in 0..=n {
                    let (b, db) = mul_d(gp[j], gq[n - j]);
                    let (t, dt) = mul_d((a, da), (b, db));
                    v += curve.coeff(i, j) * t;
                    dv += curve.coeff(i, j) * dt;
                }
            }
            (v, dv)
        };
        // identically vanishing restriction means the curve contains C0
        let probe = grid(&self.lattice, 3);
        let scale: f64 = curve.coeffs().iter().map(|c| c.norm()).sum();
        let max_val = probe
            .iter()
            .map(|&u| restricted(u).0.norm())
            .fold(0.0, f64::max);
        let typical = probe
            .iter()
            .map(|&u| {
                let fr = self.f_fraction(u);
                let gr = self.g_fraction(u);
                (fr.num.norm() + fr.den.norm()).powi(m as i32)
                    * (gr.num.norm() + gr.den.norm()).powi(n as i32)
            })
            .fold(0.0, f64::max);
        if max_val <= 1e-10 * scale * typical {
            return Err(Error::degenerate("curve contains C0 as a component"));
        }
        let mut roots: Vec<C64> = Vec::new();
        for k in [10, 20, 40] {
            for s in grid(&self.lattice, k) {
                let Some(u) = newton(&restricted, s, 80) else {
                    continue;
                };
                let u = self.lattice.reduce(u);
                if roots.iter().all(|&r| self.lattice.distance(r, u) > 1e-7) {
                    roots.push(u);
                }
            }
            if roots.len() >= expected {
                break;
            }
        }
        if roots.len() != expected {
            return Err(Error::IntersectionSearch {
                expected,
                found: roots.len(),
            });
        }
        let target = self.h1 * m as f64 + self.h2 * n as f64;
        let sum: C64 = roots.iter().sum();
        let residual = self.lattice.distance(target, sum);
        Ok(AbelCheck {
            params: roots,
            residual,
        })
    }
}

pub(crate) const GENERATOR_MARGIN: f64 = 0.01;
/// Smallest relative base-point spread accepted by the generator.
const GENERATOR_SPREAD: f64 = 0.1;
const GENERATOR_SEPARATION: f64 = 0.02;
pub(crate) const GENERATOR_BOUND: f64 = 50.0;

/// Intersection parameters and the Abel residual.
#[derive(Debug, Clone)]
pub struct AbelCheck {
    pub params: Vec<C64>,
    pub residual: f64,
}

fn mul_d(a: (C64, C64), b: (C64, C64)) -> (C64, C64) {
    (a.0 * b.0, a.1 * b.0 + a.0 * b.1)
}

/// `(x^k, d x^k)` for `k = 0..=n`.
fn powers(x: C64, dx: C64, n: usize) -> Vec<(C64, C64)> {
    let mut out = vec![(c64(1.0, 0.0), c64(0.0, 0.0))];
    for k in 0..n {
        let prev = out[k];
        out.push(mul_d(prev, (x, dx)));
    }
    out
}

fn grid(lattice: &Lattice, k: usize) -> Vec<C64> {
    let tau = lattice.tau();
    let mut out = Vec::with_capacity(k * k);
    for i in 0..k {
        for j in 0..k {
            let s = (i as f64 + 0.5) / k as f64;
            let t = (j as f64 + 0.5) / k as f64;
            out.push(c64(s, 0.0) + tau * t);
        }
    }
    out
}

fn newton(eq: &impl Fn(C64) -> (C64, C64), start: C64, iters: usize) -> Option<C64> {
    let mut u = start;
    for _ in 0..iters {
        let (v, dv) = eq(u);
        if !is_finite(v) || !is_finite(dv) || dv.norm() == 0.0 {
            return None;
        }
        let mut step = v / dv;
        // damp wild steps; roots of interest live within one cell
        if step.norm() > 0.5 {
            step *= 0.5 / step.norm();
        }
        u -= step;
        if step.norm() < 1e-14 * (1.0 + u.norm()) {
            return Some(u);
        }
    }
    let (v, dv) = eq(u);
    (is_finite(v) && dv.norm() > 0.0 && (v / dv).norm() < 1e-11).then_some(u)
}

/// Class `a H1 + b H2 + sum e_i E_i`, stored as `(a, b, e_1, .., e_8)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PicardClass {
    pub coeffs: [i64; 10],
}

impl PicardClass {
    pub fn new(coeffs: [i64; 10]) -> Self {
        Self { coeffs }
    }

    pub fn h1() -> Self {
        Self::unit(0)
    }

    pub fn h2() -> Self {
        Self::unit(1)
    }

    /// Exceptional class `E_i`, `i` in `1..=8`.
    pub fn e(i: usize) -> Self {
        assert!((1..=8).contains(&i), "exceptional index out of range");
        Self::unit(i + 1)
    }

    fn unit(k: usize) -> Self {
        let mut c = [0; 10];
        c[k] = 1;
        Self { coeffs: c }
    }

    /// Anticanonical class `2H1 + 2H2 - E1 - .. - E8`.
    pub fn null_root() -> Self {
        Self::new([2, 2, -1, -1, -1, -1, -1, -1, -1, -1])
    }

    /// `(H1,H2) = 1`, `(Ei,Ei) = -1`.
    pub fn dot(&self, other: &Self) -> i64 {
        let (a, b) = (&self.coeffs, &other.coeffs);
        a[0] * b[1] + a[1] * b[0] - (2..10).map(|k| a[k] * b[k]).sum::<i64>()
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(std::array::from_fn(|k| self.coeffs[k] + other.coeffs[k]))
    }

    pub fn scale(&self, s: i64) -> Self {
        Self::new(self.coeffs.map(|c| c * s))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1))
    }
}

/// Kac translation `T_alpha(beta) = beta + (d,beta) alpha - ((d,beta)(alpha,alpha)/2 + (alpha,beta)) d`
/// with `d` the null root. Requires `(d,beta)(alpha,alpha)` even.
pub fn kac_translate(alpha: &PicardClass, beta: &PicardClass) -> Result<PicardClass> {
    let d = PicardClass::null_root();
    let db = d.dot(beta);
    let prod = db * alpha.dot(alpha);
    if prod % 2 != 0 {
        return Err(Error::invalid(
            "Kac translation leaves the integral lattice",
        ));
    }
    Ok(beta
        .add(&alpha.scale(db))
        .sub(&d.scale(prod / 2 + alpha.dot(beta))))
}

/// Linear involution `r(H1) = H1`, `r(H2) = 4H1 + H2 - sum E`, `r(Ei) = H1 - Ei`.
pub fn picard_r(beta: &PicardClass) -> PicardClass {
    let c = &beta.coeffs;
    let (a, b) = (c[0], c[1]);
    let esum: i64 = c[2..].iter().sum();
    let mut out = [0; 10];
    out[0] = a + 4 * b + esum;
    out[1] = b;
    for k in 2..10 {
        out[k] = -b - c[k];
    }
    PicardClass::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert_eq, proptest, Strategy};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn data(seed: u64) -> EllipticData {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        EllipticData::random(c64(0.1, 1.0), &mut rng).unwrap()
    }

    #[test]
    fn involutions_of_the_parametrization() {
        let d = data(1);
        for k in 0..10 {
            let u = c64(0.13 * k as f64, 0.07 * k as f64 + 0.05);
            assert!((d.f_u(u) - d.f_u(d.h1 - u)).norm() < 1e-11 * (1.0 + d.f_u(u).norm()));
            assert!((d.g_u(u) - d.g_u(d.h2 - u)).norm() < 1e-11 * (1.0 + d.g_u(u).norm()));
        }
    }

    #[test]
    fn c0_is_unique_and_contains_the_parametrized_points() {
        let d = data(2);
        let phi = d.phi22().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..10 {
            let u = c64(rng.gen(), 0.0) + d.lattice.tau() * rng.gen::<f64>();
            if let Ok(p) = d.point(u) {
                assert!(phi.relative_eval_at(&p) < 1e-10);
            }
        }
    }

    #[test]
    fn pole_is_degenerate() {
        let d = data(3);
        assert!(matches!(d.point(-d.b), Err(Error::Degenerate(_))));
    }

    #[test]
    fn generated_configurations_pass_validation() {
        for s in 0..5 {
            data(s)
                .validate(GENERICITY_MARGIN, COORDINATE_BOUND)
                .unwrap();
        }
    }

    #[test]
    fn coinciding_parameters_are_rejected() {
        let d = data(4);
        let mut u = d.u;
        u[3] = u[2] + c64(1e-5, 0.0);
        let r = EllipticData::new(d.lattice.tau(), d.h1, d.h2, d.a, d.b, d.c, d.d, u, d.z);
        assert!(matches!(r, Err(Error::Degenerate(_))));
    }

    #[test]
    fn locate_round_trips() {
        let d = data(5);
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let mut worst: f64 = 0.0;
        let mut done = 0;
        while done < 20 {
            let u = c64(rng.gen(), 0.0) + d.lattice.tau() * rng.gen::<f64>();
            let Ok(p) = d.point(u) else { continue };
            if p.f().unwrap().norm() > 1e3 || p.g().unwrap().norm() > 1e3 {
                continue;
            }
            let found = d.locate_parameter(&p, None).unwrap();
            worst = worst.max(d.lattice.distance(found, u));
            let conj = d.point(d.h1 - u).unwrap();
            let found = d.locate_parameter(&conj, None).unwrap();
            worst = worst.max(d.lattice.distance(found, d.h1 - u));
            done += 1;
        }
        assert!(worst < 1e-9, "worst round trip {worst:e}");
    }

    #[test]
    fn off_curve_point_is_rejected() {
        let d = data(6);
        let p = d.point(d.z).unwrap();
        let off = SurfacePoint::affine(p.f().unwrap(), p.g().unwrap() + 0.37);
        assert!(matches!(
            d.locate_parameter(&off, None),
            Err(Error::NotOnCurve(_))
        ));
    }

    fn curve_through(
        d: &EllipticData,
        m: usize,
        n: usize,
        params: &[C64],
        extra: &[SurfacePoint],
    ) -> BiPoly {
        let mut conds: Vec<_> = params
            .iter()
            .map(|&u| CurveCondition::Vanish(d.point(u).unwrap()))
            .collect();
        conds.extend(extra.iter().cloned().map(CurveCondition::Vanish));
        build_family(m, n, &conds, FAMILY_TOL).unwrap().basis[0].clone()
    }

    #[test]
    fn abel_sums_for_small_bidegrees() {
        let d = data(7);
        let ps = [d.u[0], d.u[1]];
        let off = [SurfacePoint::affine(c64(0.3, 0.2), c64(-0.5, 0.4))];
        for (m, n) in [(1, 1), (2, 1), (1, 2)] {
            let (params, extra): (&[C64], &[SurfacePoint]) = if (m, n) == (1, 1) {
                (&ps, &off)
            } else {
                (&d.u[..4], &off)
            };
            let curve = curve_through(&d, m, n, params, extra);
            let check = d.abel_sum_check(&curve).unwrap();
            assert_eq!(check.params.len(), 2 * (m + n));
            assert!(
                check.residual < 1e-7,
                "({m},{n}) residual {:e}",
                check.residual
            );
        }
    }

    #[test]
    fn c0_itself_is_rejected() {
        let d = data(8);
        let phi = d.phi22().unwrap();
        assert!(matches!(d.abel_sum_check(&phi), Err(Error::Degenerate(_))));
    }

    #[test]
    fn kac_examples() {
        let a = PicardClass::e(2).sub(&PicardClass::e(1));
        let d = PicardClass::null_root();
        assert_eq!(d.dot(&d), 0);
        assert_eq!(
            kac_translate(&a, &PicardClass::e(1)).unwrap(),
            PicardClass::e(2)
        );
        assert_eq!(kac_translate(&a, &d).unwrap(), d);
        let h1 = PicardClass::h1();
        let expected = h1.add(&a.scale(2)).add(&d.scale(2));
        assert_eq!(kac_translate(&a, &h1).unwrap(), expected);
    }

    #[test]
    fn r_fixes_the_translated_lambda() {
        // classes move contragrediently to points: the point map T acts on
        // classes through the inverse translation
        let lambda = PicardClass::new([3, 2, -2, 0, -1, -1, -1, -1, -1, -1]);
        let a = PicardClass::e(2).sub(&PicardClass::e(1));
        let t_inv = kac_translate(&a.scale(-1), &lambda).unwrap();
        assert_eq!(picard_r(&t_inv), lambda);
        assert_ne!(picard_r(&kac_translate(&a, &lambda).unwrap()), lambda);
    }

    fn class() -> impl Strategy<Value = PicardClass> {
        proptest::array::uniform10(-6i64..6).prop_map(PicardClass::new)
    }

    proptest! {
        #[test]
        fn r_is_an_isometric_involution(a in class(), b in class()) {
            prop_assert_eq!(picard_r(&picard_r(&a)), a);
            prop_assert_eq!(picard_r(&a).dot(&picard_r(&b)), a.dot(&b));
        }

        #[test]
        fn pairing_is_symmetric(a in class(), b in class()) {
            prop_assert_eq!(a.dot(&b), b.dot(&a));
        }

        #[test]
        fn translation_by_a_root_is_isometric(a in class(), b in class()) {
            let alpha = PicardClass::e(2).sub(&PicardClass::e(1));
            let (ta, tb) = (kac_translate(&alpha, &a).unwrap(), kac_translate(&alpha, &b).unwrap());
            prop_assert_eq!(ta.dot(&tb), a.dot(&b));
        }
    }
}
