//! The sixth Painleve equation: Hamiltonian flow, the Fuchsian equation it
//! deforms, and the quartic / conic curves in P2 that the two linear
//! equations define in the coordinates `q = Z/(Z - X)`, `p = Y(Z - X)/(XZ)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{c64, is_finite, least_squares, CMatrix, CVector, Series, C64};

/// Exponents `a0..a4` with `a0 + a1 + 2 a2 + a3 + a4 = 1`, the point `(q, p)`
/// at time `t`, a spectral point `z` and `s = y'(z)/y(z)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct P6State {
    pub a: [C64; 5],
    pub q: C64,
    pub p: C64,
    pub t: C64,
    pub z: C64,
    pub s: C64,
}

const POLE_TOL: f64 = 1e-10;

impl P6State {
    pub fn new(a: [C64; 5], q: C64, p: C64, t: C64, z: C64, s: C64) -> Result<Self> {
        let st = Self { a, q, p, t, z, s };
        let r = st.exponent_residual();
        if r > 1e-14 {
            return Err(Error::invalid(format!(
                "exponent constraint violated ({r:e})"
            )));
        }
        for (what, v) in [("t", t), ("t - 1", t - 1.0)] {
            if v.norm() < POLE_TOL {
                return Err(Error::invalid(format!("{what} must be nonzero")));
            }
        }
        for (what, v) in [
            ("z", z),
            ("z - 1", z - 1.0),
            ("z - t", z - t),
            ("z - q", z - q),
        ] {
            if v.norm() < POLE_TOL {
                return Err(Error::invalid(format!("{what} must be nonzero")));
            }
        }
        Ok(st)
    }

    /// Seeded generic state; `a0` is solved from the constraint.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Result<Self> {
        let mut draw = |r: f64| c64(rng.gen_range(-r..r), rng.gen_range(-r..r));
        let (a1, a2, a3, a4) = (draw(1.0), draw(1.0), draw(1.0), draw(1.0));
        let a0 = c64(1.0, 0.0) - a1 - a2 * 2.0 - a3 - a4;
        let t = c64(0.5, 0.0) + draw(0.3);
        let q = c64(0.3, 0.6) + draw(0.3);
        let p = draw(1.0);
        let z = c64(-0.4, -0.5) + draw(0.2);
        let s = draw(1.0);
        Self::new([a0, a1, a2, a3, a4], q, p, t, z, s)
    }

    pub fn exponent_residual(&self) -> f64 {
        let [a0, a1, a2, a3, a4] = self.a;
        (a0 + a1 + a2 * 2.0 + a3 + a4 - 1.0).norm()
    }

    fn tt(&self) -> C64 {
        self.t * (self.t - 1.0)
    }

    /// `H(q, p, t)`.
    pub fn hamiltonian_at(&self, q: C64, p: C64, t: C64) -> C64 {
        let [_, a1, a2, a3, a4] = self.a;
        let lin = (a1 + a2 * 2.0) * (q - 1.0) * q + a3 * (t - 1.0) * q + a4 * t * (q - 1.0);
        (q * (q - 1.0) * (q - t) * p * p + lin * p + a2 * (a1 + a2) * (q - t)) / (t * (t - 1.0))
    }

    pub fn hamiltonian(&self) -> C64 {
        self.hamiltonian_at(self.q, self.p, self.t)
    }

    /// `(dq/dt, dp/dt) = (dH/dp, -dH/dq)` by central differences.
    pub fn vector_field(&self) -> Result<(C64, C64)> {
        if self.tt().norm() < POLE_TOL {
            return Err(Error::degenerate("t(t - 1) = 0"));
        }
        let d = |x: C64| 1e-6 * (1.0 + x.norm());
        let (hq, hp) = (d(self.q), d(self.p));
        let h = |q: C64, p: C64| self.hamiltonian_at(q, p, self.t);
        let dh_dp = (h(self.q, self.p + hp) - h(self.q, self.p - hp)) / (2.0 * hp);
        let dh_dq = (h(self.q + hq, self.p) - h(self.q - hq, self.p)) / (2.0 * hq);
        Ok((dh_dp, -dh_dq))
    }

    /// Coefficients of `y'` and `y` in the Fuchsian equation at `z`,
    /// evaluated with the point `(q, p)`.
    pub fn fuchsian_coeffs(&self, z: C64, q: C64, p: C64) -> (C64, C64) {
        let [a0, a1, a2, a3, a4] = self.a;
        let t = self.t;
        let one = c64(1.0, 0.0);
        let pc = (one - a4) / z + (one - a3) / (z - 1.0) + (one - a0) / (z - t) - one / (z - q);
        let qc = a2 * (a1 + a2) / (z * (z - 1.0))
            - self.tt() * self.hamiltonian_at(q, p, t) / (z * (z - 1.0) * (z - t))
            + q * (q - 1.0) * p / (z * (z - 1.0) * (z - q));
        (pc, qc)
    }

    /// `y''/y` at `self.z` for a solution with `y'/y = s`.
    pub fn second_log_derivative(&self) -> C64 {
        let (pc, qc) = self.fuchsian_coeffs(self.z, self.q, self.p);
        -pc * self.s - qc
    }

    /// `z(z-1)(z-t)(z-q) (y'' + P y' + Q y)/y` as a function of the point
    /// `(q, p)`, with `z`, `s = y'/y` and `r = y''/y` held fixed.
    fn fuchsian_polynomial(&self, q: C64, p: C64, r: C64) -> C64 {
        let [a0, a1, a2, a3, a4] = self.a;
        let (t, z, s) = (self.t, self.z, self.s);
        let one = c64(1.0, 0.0);
        let zz = z * (z - 1.0) * (z - t);
        let regular = zz
            * (r + s * ((one - a4) / z + (one - a3) / (z - 1.0) + (one - a0) / (z - t)))
            + (z - t) * a2 * (a1 + a2)
            - self.tt() * self.hamiltonian_at(q, p, t);
        (z - q) * regular - zz * s + (z - t) * q * (q - 1.0) * p
    }

    /// The Fuchsian equation as a quartic `F(X, Y, Z)`.
    pub fn fuchsian_quartic(&self) -> Result<Ternary> {
        let r = self.second_log_derivative();
        Ternary::fit(4, |x, y, w| {
            let (q, p) = chart(x, y, w)?;
            Ok(x * w * (w - x) * (w - x) * self.fuchsian_polynomial(q, p, r))
        })
    }

    /// The deformation equation as a conic `R(X, Y, Z)`, given
    /// `u = (dy/dt)/y` at `z`.
    pub fn deformation_conic(&self, u: C64) -> Result<Ternary> {
        let (t, z, s) = (self.t, self.z, self.s);
        let tt = self.tt();
        // t(t-1)(q - z) (y_t + A y_z + B y)/y, cleared by Z (Z - X)
        Ternary::fit(2, |x, y, w| {
            let (q, p) = chart(x, y, w)?;
            let val = u * tt * (q - z) + z * (z - 1.0) * (q - t) * s - z * p * (q - 1.0) * (q - t);
            Ok(w * (w - x) * val)
        })
    }

    /// Local exponents of the Fuchsian equation at `z = q`, from the residues
    /// of `(z - q) P` and `(z - q)^2 Q` on a small circle.
    pub fn exponents_at_q(&self) -> Result<[C64; 2]> {
        let q = self.q;
        let nearest = [c64(0.0, 0.0), c64(1.0, 0.0), self.t]
            .iter()
            .map(|c| (q - c).norm())
            .fold(f64::INFINITY, f64::min);
        if nearest < POLE_TOL {
            return Err(Error::degenerate("q collides with a singular point"));
        }
        let radius = nearest / 4.0;
        let n = 64;
        let (mut p0, mut q0) = (c64(0.0, 0.0), c64(0.0, 0.0));
        for k in 0..n {
            let w = C64::from_polar(radius, std::f64::consts::TAU * k as f64 / n as f64);
            let (pc, qc) = self.fuchsian_coeffs(q + w, self.q, self.p);
            p0 += pc * w;
            q0 += qc * w * w;
        }
        p0 /= n as f64;
        q0 /= n as f64;
        // rho^2 + (p0 - 1) rho + q0 = 0
        let b = p0 - 1.0;
        let disc = (b * b - q0 * 4.0).sqrt();
        let mut roots = [(-b - disc) / 2.0, (-b + disc) / 2.0];
        roots.sort_by(|x, y| x.re.total_cmp(&y.re));
        Ok(roots)
    }

    /// Taylor coefficients of the solution with `y(z) = 1`, `y'(z) = s`,
    /// in powers of `eps = z' - z`, with `len` terms.
    pub fn series_solution(&self, len: usize) -> Result<Series> {
        if len < 2 {
            return Err(Error::invalid("series solution needs at least two terms"));
        }
        let z0 = self.z;
        let (t, q, p) = (self.t, self.q, self.p);
        let [a0, a1, a2, a3, a4] = self.a;
        let one = c64(1.0, 0.0);
        // 1/(z - c) around z0
        let inv = |c: C64| -> Result<Series> {
            Series::linear(z0 - c, one, len)
                .recip()
                .ok_or_else(|| Error::degenerate("series base point is singular"))
        };
        let (i0, i1, it, iq) = (inv(c64(0.0, 0.0))?, inv(one)?, inv(t)?, inv(q)?);
        let pc = &(&(&i0.scale(one - a4) + &i1.scale(one - a3)) + &it.scale(one - a0)) - &iq;
        let h = self.tt() * self.hamiltonian_at(q, p, t);
        let i01 = &i0 * &i1;
        let qc = &(&i01.scale(a2 * (a1 + a2)) - &(&i01 * &it).scale(h))
            + &(&i01 * &iq).scale(q * (q - 1.0) * p);
        let mut y = vec![c64(0.0, 0.0); len];
        y[0] = one;
        y[1] = self.s;
        for k in 0..len - 2 {
            // (k+2)(k+1) y_{k+2} = -[P y']_k - [Q y]_k
            let mut acc = c64(0.0, 0.0);
            for j in 0..=k {
                acc += pc.coeff(k - j) * y[j + 1] * (j + 1) as f64 + qc.coeff(k - j) * y[j];
            }
            y[k + 2] = -acc / ((k + 2) * (k + 1)) as f64;
        }
        let y = Series::new(y, len);
        if y.coeffs().iter().any(|c| !is_finite(*c)) {
            return Err(Error::degenerate("series solution overflowed"));
        }
        Ok(y)
    }
}

/// `(q, p)` for a point of P2; fails on the lines where the chart breaks.
fn chart(x: C64, y: C64, w: C64) -> Result<(C64, C64)> {
    let d = w - x;
    if d.norm() < POLE_TOL || (x * w).norm() < POLE_TOL {
        return Err(Error::degenerate("point outside the (q, p) chart"));
    }
    Ok((w / d, y * d / (x * w)))
}

/// Homogeneous polynomial in `(X, Y, Z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ternary {
    pub degree: usize,
    /// `(i, j, k)` exponents of `X^i Y^j Z^k`, with coefficients.
    pub terms: Vec<((usize, usize, usize), C64)>,
    /// Relative residual of the fit that produced this polynomial.
    pub fit_residual: f64,
}

fn monomials(d: usize) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for i in 0..=d {
        for j in 0..=d - i {
            out.push((i, j, d - i - j));
        }
    }
    out
}

impl Ternary {
    /// Coefficients of the degree-`d` form agreeing with `f` at generic
    /// points, by least squares over twice as many samples as monomials.
    fn fit(d: usize, mut f: impl FnMut(C64, C64, C64) -> Result<C64>) -> Result<Self> {
        let mons = monomials(d);
        let samples = 2 * mons.len();
        let mut rows = Vec::with_capacity(samples);
        let mut rhs = Vec::with_capacity(samples);
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        while rows.len() < samples {
            let mut draw = || {
                C64::from_polar(
                    rng.gen_range(0.5..1.5),
                    rng.gen_range(0.0..std::f64::consts::TAU),
                )
            };
            let (x, y, w) = (draw(), draw(), draw());
            let Ok(v) = f(x, y, w) else { continue };
            rows.push(
                mons.iter()
                    .map(|&(i, j, l)| x.powu(i as u32) * y.powu(j as u32) * w.powu(l as u32))
                    .collect::<Vec<_>>(),
            );
            rhs.push(v);
        }
        let a = CMatrix::from_fn(samples, mons.len(), |r, c| rows[r][c]);
        let b = CVector::from_vec(rhs);
        let (sol, fit_residual) = least_squares(&a, &b)?;
        Ok(Self {
            degree: d,
            terms: mons.into_iter().zip(sol.iter().copied()).collect(),
            fit_residual,
        })
    }

    pub fn eval(&self, x: C64, y: C64, w: C64) -> C64 {
        self.terms
            .iter()
            .map(|&((i, j, k), c)| c * x.powu(i as u32) * y.powu(j as u32) * w.powu(k as u32))
            .sum()
    }

    fn max_coeff(&self) -> f64 {
        self.terms.iter().map(|(_, c)| c.norm()).fold(0.0, f64::max)
    }

    /// `|F(x, y, w)|` relative to `max|c| * sum |monomial|`.
    pub fn relative_eval(&self, x: C64, y: C64, w: C64) -> f64 {
        let scale: f64 = self.max_coeff()
            * self
                .terms
                .iter()
                .map(|&((i, j, k), _)| {
                    (x.powu(i as u32) * y.powu(j as u32) * w.powu(k as u32)).norm()
                })
                .sum::<f64>();
        if scale == 0.0 {
            0.0
        } else {
            self.eval(x, y, w).norm() / scale
        }
    }

    /// Composition with power series arguments.
    pub fn eval_series(&self, x: &Series, y: &Series, w: &Series) -> Series {
        let len = x.len().min(y.len()).min(w.len());
        let mut acc = Series::constant(c64(0.0, 0.0), len);
        for &((i, j, k), c) in &self.terms {
            let term = &(&x.powi(i) * &y.powi(j)) * &w.powi(k);
            acc = &acc + &term.scale(c);
        }
        acc
    }

    /// Coefficientwise bound: every coefficient of the form replaced by
    /// `max|c|`, every coefficient of the arguments by its modulus.
    pub fn eval_series_bound(&self, x: &Series, y: &Series, w: &Series) -> Vec<f64> {
        let abs = |s: &Series| {
            Series::new(
                s.coeffs().iter().map(|c| c64(c.norm(), 0.0)).collect(),
                s.len(),
            )
        };
        let (x, y, w) = (abs(x), abs(y), abs(w));
        let mut bound = self.clone();
        let m = self.max_coeff();
        bound.terms.iter_mut().for_each(|(_, c)| *c = c64(m, 0.0));
        bound
            .eval_series(&x, &y, &w)
            .coeffs()
            .iter()
            .map(|c| c.re)
            .collect()
    }

    /// Largest of `|coeff_k| / bound_k` for `k < order`.
    pub fn jet_residual(&self, x: &Series, y: &Series, w: &Series, order: usize) -> f64 {
        let val = self.eval_series(x, y, w);
        let bound = self.eval_series_bound(x, y, w);
        (0..order)
            .map(|k| {
                if bound[k] == 0.0 {
                    0.0
                } else {
                    val.coeff(k).norm() / bound[k]
                }
            })
            .fold(0.0, f64::max)
    }

    pub fn norm(&self) -> f64 {
        self.terms
            .iter()
            .map(|(_, c)| c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// Residuals of every condition on the quartic and the conic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct P6Check {
    pub quartic_fit: f64,
    pub quartic_points: f64,
    pub quartic_jet_t: f64,
    pub quartic_jet_1: f64,
    pub quartic_jet_z: f64,
    /// The quartic passes through the state's own `(q, p)`.
    pub quartic_state_point: f64,
    pub conic_fit: f64,
    pub conic_points: f64,
    pub conic_jet_t: f64,
    pub conic_z_point: f64,
    pub exponents: [C64; 2],
    pub exponent_residual: f64,
}

impl P6Check {
    /// Largest of all residuals, with the exponents compared to `{0, 2}`.
    pub fn max_residual(&self) -> f64 {
        [
            self.quartic_fit,
            self.quartic_points,
            self.quartic_jet_t,
            self.quartic_jet_1,
            self.quartic_jet_z,
            self.quartic_state_point,
            self.conic_fit,
            self.conic_points,
            self.conic_jet_t,
            self.conic_z_point,
            self.exponent_residual,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Length of the series used for jets and the local solution.
const JET_LEN: usize = 7;

/// Evaluates every listed condition; `u` is the value of `(dy/dt)/y`.
pub fn verify_p6(s: &P6State, u: C64) -> Result<P6Check> {
    let [a0, a1, a2, a3, a4] = s.a;
    let (t, z) = (s.t, s.z);
    let one = c64(1.0, 0.0);
    let zero = c64(0.0, 0.0);
    let f = s.fuchsian_quartic()?;
    let r = s.deformation_conic(u)?;
    let quartic_points = [
        (zero, zero, one),
        (one, -a2, one),
        (one, zero, zero),
        (zero, a3, one),
        (one, -a1 - a2, one),
        (one, a4, zero),
    ]
    .iter()
    .map(|&(x, y, w)| f.relative_eval(x, y, w))
    .fold(0.0, f64::max);
    let ser = |c: &[C64]| Series::new(c.to_vec(), JET_LEN);
    let quartic_jet_t = f.jet_residual(
        &ser(&[zero, t - 1.0]),
        &ser(&[one]),
        &ser(&[zero, t, -a0 * t]),
        3,
    );
    let quartic_jet_1 =
        f.jet_residual(&ser(&[zero, z - 1.0]), &ser(&[one]), &ser(&[zero, z, z]), 4);
    // (1/z', s(z'), 1/(z'-1)) along the local solution, z' = z + eps
    let y = s.series_solution(JET_LEN + 1)?;
    let log_d = (&y.derivative() * &y.recip().ok_or_else(|| Error::degenerate("y(z) = 0"))?)
        .resized(JET_LEN);
    let inv_z = Series::linear(z, one, JET_LEN)
        .recip()
        .ok_or_else(|| Error::degenerate("z = 0"))?;
    let inv_z1 = Series::linear(z - 1.0, one, JET_LEN)
        .recip()
        .ok_or_else(|| Error::degenerate("z = 1"))?;
    let quartic_jet_z = f.jet_residual(&inv_z, &log_d, &inv_z1, 2);
    // (q, p) = (Z/(Z-X), Y(Z-X)/(XZ)) inverted at Z - X = 1
    let state_point = {
        let w = s.q;
        let x = s.q - 1.0;
        (x, s.p * x * w, w)
    };
    let quartic_state_point = f.relative_eval(state_point.0, state_point.1, state_point.2);
    let conic_points = r
        .relative_eval(zero, one, zero)
        .max(r.relative_eval(one, zero, zero));
    let c = t * t * (t - z) / z * u;
    let conic_jet_t = r.jet_residual(
        &ser(&[zero, t - 1.0]),
        &ser(&[one]),
        &ser(&[zero, t, -c]),
        3,
    );
    let conic_z_point = r.relative_eval(one / z, s.s, one / (z - 1.0));
    let exponents = s.exponents_at_q()?;
    let exponent_residual = exponents[0].norm().max((exponents[1] - 2.0).norm());
    Ok(P6Check {
        quartic_fit: f.fit_residual,
        quartic_points,
        quartic_jet_t,
        quartic_jet_1,
        quartic_jet_z,
        quartic_state_point,
        conic_fit: r.fit_residual,
        conic_points,
        conic_jet_t,
        conic_z_point,
        exponents,
        exponent_residual,
    })
}
