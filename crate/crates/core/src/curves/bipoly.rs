use std::fmt;

use crate::error::{Error, Result};
use crate::numerics::{least_squares, projective_distance, CMatrix, CVector, C64};
use crate::surface::SurfacePoint;

/// Polynomial `sum c_ij f^i g^j` with `i <= m`, `j <= n`.
#[derive(Clone, PartialEq)]
pub struct BiPoly {
    m: usize,
    n: usize,
    coeffs: Vec<C64>,
}

impl fmt::Debug for BiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "BiPoly({}, {})[norm {:.3e}]",
            self.m,
            self.n,
            self.norm()
        )
    }
}

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

/// `e!/(e-a)! s^(e-a)`, the a-th derivative of `s^e`.
pub fn monomial_derivative(s: C64, e: usize, a: usize) -> C64 {
    if a > e {
        return zero();
    }
    let mut fall = 1.0;
    for k in 0..a {
        fall *= (e - k) as f64;
    }
    s.powu((e - a) as u32) * fall
}

impl BiPoly {
    pub fn zeros(m: usize, n: usize) -> Self {
        Self {
            m,
            n,
            coeffs: vec![zero(); (m + 1) * (n + 1)],
        }
    }

    pub fn constant(c: C64) -> Self {
        Self {
            m: 0,
            n: 0,
            coeffs: vec![c],
        }
    }

    /// Coefficients in row-major `(i, j)` order, `i` the f-degree.
    pub fn from_coeffs(m: usize, n: usize, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != (m + 1) * (n + 1) {
            return Err(Error::invalid(format!(
                "bidegree ({m},{n}) needs {} coefficients, got {}",
                (m + 1) * (n + 1),
                coeffs.len()
            )));
        }
        Ok(Self { m, n, coeffs })
    }

    pub fn from_fn(m: usize, n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut p = Self::zeros(m, n);
        for i in 0..=m {
            for j in 0..=n {
                p.coeffs[i * (n + 1) + j] = f(i, j);
            }
        }
        p
    }

    /// The vertical line `f - c`.
    pub fn f_minus(c: C64) -> Self {
        Self {
            m: 1,
            n: 0,
            coeffs: vec![-c, C64::new(1.0, 0.0)],
        }
    }

    /// The horizontal line `g - c`.
    pub fn g_minus(c: C64) -> Self {
        Self {
            m: 0,
            n: 1,
            coeffs: vec![-c, C64::new(1.0, 0.0)],
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize, j: usize) -> C64 {
        if i > self.m || j > self.n {
            return zero();
        }
        self.coeffs[i * (self.n + 1) + j]
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.norm() == 0.0)
    }

    /// Same polynomial viewed in a larger bidegree.
    pub fn padded(&self, m: usize, n: usize) -> Self {
        assert!(
            m >= self.m && n >= self.n,
            "cannot pad to a smaller bidegree"
        );
        Self::from_fn(m, n, |i, j| self.coeff(i, j))
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            m: self.m,
            n: self.n,
            coeffs: self.coeffs.iter().map(|&c| c * s).collect(),
        }
    }

    /// Scaled so that the largest-modulus coefficient equals one.
    pub fn normalized(&self) -> Self {
        let (mut best, mut idx) = (0.0, 0);
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.norm() > best {
                best = c.norm();
                idx = k;
            }
        }
        if best == 0.0 {
            return self.clone();
        }
        self.scale(self.coeffs[idx].inv())
    }

    pub fn add(&self, other: &BiPoly) -> BiPoly {
        let (m, n) = (self.m.max(other.m), self.n.max(other.n));
        Self::from_fn(m, n, |i, j| self.coeff(i, j) + other.coeff(i, j))
    }

    pub fn sub(&self, other: &BiPoly) -> BiPoly {
        let (m, n) = (self.m.max(other.m), self.n.max(other.n));
        Self::from_fn(m, n, |i, j| self.coeff(i, j) - other.coeff(i, j))
    }

    pub fn mul(&self, other: &BiPoly) -> BiPoly {
        let mut out = Self::zeros(self.m + other.m, self.n + other.n);
        let stride = out.n + 1;
        for i in 0..=self.m {
            for j in 0..=self.n {
                let a = self.coeff(i, j);
                if a.norm() == 0.0 {
                    continue;
                }
                for k in 0..=other.m {
                    for l in 0..=other.n {
                        out.coeffs[(i + k) * stride + j + l] += a * other.coeff(k, l);
                    }
                }
            }
        }
        out
    }

    /// `sum_k scalars[k] * polys[k]`, in the smallest common bidegree.
    pub fn linear_combine(scalars: &[C64], polys: &[&BiPoly]) -> Result<BiPoly> {
        if scalars.len() != polys.len() || polys.is_empty() {
            return Err(Error::invalid("linear_combine: length mismatch"));
        }
        let m = polys.iter().map(|p| p.m).max().unwrap_or(0);
        let n = polys.iter().map(|p| p.n).max().unwrap_or(0);
        Ok(Self::from_fn(m, n, |i, j| {
            scalars
                .iter()
                .zip(polys)
                .map(|(s, p)| s * p.coeff(i, j))
                .sum()
        }))
    }

    pub fn eval_affine(&self, f: C64, g: C64) -> C64 {
        let mut acc = zero();
        for i in (0..=self.m).rev() {
            let mut row = zero();
            for j in (0..=self.n).rev() {
                row = row * g + self.coeff(i, j);
            }
            acc = acc * f + row;
        }
        acc
    }

    /// Bihomogeneous evaluation `sum c_ij x0^i x1^(m-i) y0^j y1^(n-j)`.
    pub fn eval(&self, p: &SurfacePoint) -> C64 {
        let (x0, x1) = (p.x[0], p.x[1]);
        let (y0, y1) = (p.y[0], p.y[1]);
        let mut acc = zero();
        for i in 0..=self.m {
            let xf = x0.powu(i as u32) * x1.powu((self.m - i) as u32);
            for j in 0..=self.n {
                let yf = y0.powu(j as u32) * y1.powu((self.n - j) as u32);
                acc += self.coeff(i, j) * xf * yf;
            }
        }
        acc
    }

    /// `|p(f,g)|` relative to `sum |c_ij| |f|^i |g|^j`.
    pub fn relative_eval(&self, f: C64, g: C64) -> f64 {
        let mut scale = 0.0;
        for i in 0..=self.m {
            for j in 0..=self.n {
                scale +=
                    self.coeff(i, j).norm() * f.norm().powi(i as i32) * g.norm().powi(j as i32);
            }
        }
        if scale == 0.0 {
            return 0.0;
        }
        self.eval_affine(f, g).norm() / scale
    }

    /// Relative value at a point of the affine chart.
    pub fn relative_eval_at(&self, p: &SurfacePoint) -> f64 {
        match (p.f(), p.g()) {
            (Some(f), Some(g)) => self.relative_eval(f, g),
            _ => {
                let v = self.local_row(p, 0, 0);
                let num: C64 = v.iter().zip(&self.coeffs).map(|(a, b)| a * b).sum();
                let den: f64 = v
                    .iter()
                    .zip(&self.coeffs)
                    .map(|(a, b)| (a * b).norm())
                    .sum();
                if den == 0.0 {
                    0.0
                } else {
                    num.norm() / den
                }
            }
        }
    }

    /// Affine partial derivative `d^df/df^df d^dg/dg^dg` at `(f, g)`.
    pub fn partial_affine(&self, f: C64, g: C64, df: usize, dg: usize) -> C64 {
        let mut acc = zero();
        for i in df..=self.m {
            let fi = monomial_derivative(f, i, df);
            for j in dg..=self.n {
                acc += self.coeff(i, j) * fi * monomial_derivative(g, j, dg);
            }
        }
        acc
    }

    /// Partial derivative at a point: affine when both coordinates are
    /// finite, otherwise taken in the local chart where the point is finite.
    pub fn partial(&self, p: &SurfacePoint, df: usize, dg: usize) -> C64 {
        match (p.f(), p.g()) {
            (Some(f), Some(g)) => self.partial_affine(f, g, df, dg),
            _ => {
                let row = self.local_row(p, df, dg);
                row.iter().zip(&self.coeffs).map(|(a, b)| a * b).sum()
            }
        }
    }

    /// Sum of the moduli of the terms of [`BiPoly::partial`]; the rounding
    /// floor of that derivative.
    pub fn partial_scale(&self, p: &SurfacePoint, df: usize, dg: usize) -> f64 {
        match (p.f(), p.g()) {
            (Some(f), Some(g)) => {
                let mut acc = 0.0;
                for i in df..=self.m {
                    let fi = monomial_derivative(f, i, df);
                    for j in dg..=self.n {
                        acc += (self.coeff(i, j) * fi * monomial_derivative(g, j, dg)).norm();
                    }
                }
                acc
            }
            _ => {
                let row = self.local_row(p, df, dg);
                row.iter()
                    .zip(&self.coeffs)
                    .map(|(a, b)| (a * b).norm())
                    .sum()
            }
        }
    }

    /// Linear functional (over coefficients) of the `(a, b)` derivative in
    /// the chart around `p` where each coordinate has modulus at most one.
    pub(crate) fn local_row(&self, p: &SurfacePoint, a: usize, b: usize) -> Vec<C64> {
        local_row(self.m, self.n, p, a, b)
    }

    /// Univariate polynomial in `g` obtained by fixing `f = x`.
    pub fn restrict_f(&self, x: C64) -> Vec<C64> {
        (0..=self.n)
            .map(|j| {
                (0..=self.m)
                    .rev()
                    .fold(zero(), |acc, i| acc * x + self.coeff(i, j))
            })
            .collect()
    }

    /// Univariate polynomial in `f` obtained by fixing `g = y`.
    pub fn restrict_g(&self, y: C64) -> Vec<C64> {
        (0..=self.m)
            .map(|i| {
                (0..=self.n)
                    .rev()
                    .fold(zero(), |acc, j| acc * y + self.coeff(i, j))
            })
            .collect()
    }

    /// Projective distance between coefficient vectors (padded to a common
    /// bidegree).
    pub fn projective_distance(&self, other: &BiPoly) -> f64 {
        let (m, n) = (self.m.max(other.m), self.n.max(other.n));
        let a = self.padded(m, n);
        let b = other.padded(m, n);
        projective_distance(&a.coeffs, &b.coeffs)
    }
}

pub(crate) fn local_row(m: usize, n: usize, p: &SurfacePoint, a: usize, b: usize) -> Vec<C64> {
    let (sf, flip_f) = chart_coordinate(p.x);
    let (sg, flip_g) = chart_coordinate(p.y);
    let mut row = Vec::with_capacity((m + 1) * (n + 1));
    for i in 0..=m {
        let ei = if flip_f { m - i } else { i };
        let fi = monomial_derivative(sf, ei, a);
        for j in 0..=n {
            let ej = if flip_g { n - j } else { j };
            row.push(fi * monomial_derivative(sg, ej, b));
        }
    }
    row
}

/// Local coordinate of `(x0 : x1)` of modulus at most one; `true` when the
/// chart at infinity (`x1/x0`) is used.
fn chart_coordinate(x: [C64; 2]) -> (C64, bool) {
    if x[1].norm() >= x[0].norm() {
        (x[0] / x[1], false)
    } else {
        (x[1] / x[0], true)
    }
}

/// Least-squares quotient `p / q` of bidegree `deg p - deg q` and the relative
/// residual `|p - q * quotient| / |p|`.
pub fn exact_divide(p: &BiPoly, q: &BiPoly) -> Result<(BiPoly, f64)> {
    if q.m > p.m || q.n > p.n {
        return Err(Error::invalid(format!(
            "cannot divide bidegree {:?} by {:?}",
            p.degree(),
            q.degree()
        )));
    }
    if q.is_zero() {
        return Err(Error::invalid("division by the zero polynomial"));
    }
    let (qm, qn) = (p.m - q.m, p.n - q.n);
    let cols = (qm + 1) * (qn + 1);
    let rows = (p.m + 1) * (p.n + 1);
    let mut a = CMatrix::zeros(rows, cols);
    for i in 0..=qm {
        for j in 0..=qn {
            let col = i * (qn + 1) + j;
            for k in 0..=q.m {
                for l in 0..=q.n {
                    a[((i + k) * (p.n + 1) + j + l, col)] = q.coeff(k, l);
                }
            }
        }
    }
    let b = CVector::from_column_slice(&p.coeffs);
    let (x, residual) = least_squares(&a, &b)?;
    Ok((
        BiPoly::from_coeffs(qm, qn, x.iter().copied().collect())?,
        residual,
    ))
}
