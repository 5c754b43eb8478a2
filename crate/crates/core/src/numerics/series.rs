use std::ops::{Add, Mul, Neg, Sub};

use super::C64;

/// Truncated power series `sum_{k < len} c_k eps^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    coeffs: Vec<C64>,
}

impl Series {
    pub fn new(mut coeffs: Vec<C64>, len: usize) -> Self {
        coeffs.resize(len, C64::new(0.0, 0.0));
        Self { coeffs }
    }

    pub fn constant(c: C64, len: usize) -> Self {
        Self::new(vec![c], len)
    }

    /// `c0 + c1 eps`.
    pub fn linear(c0: C64, c1: C64, len: usize) -> Self {
        Self::new(vec![c0, c1], len)
    }

    /// `c eps^k`.
    pub fn monomial(c: C64, k: usize, len: usize) -> Self {
        let mut coeffs = vec![C64::new(0.0, 0.0); len];
        if k < len {
            coeffs[k] = c;
        }
        Self { coeffs }
    }

    /// Same series with `len` coefficients (truncated or zero-extended).
    pub fn resized(&self, len: usize) -> Self {
        Self::new(self.coeffs.clone(), len)
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> C64 {
        self.coeffs.get(k).copied().unwrap_or_default()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|&c| c * s).collect(),
        }
    }

    pub fn powi(&self, k: usize) -> Self {
        let mut out = Self::constant(C64::new(1.0, 0.0), self.len());
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    /// Multiplicative inverse; requires a nonzero constant term.
    pub fn recip(&self) -> Option<Self> {
        let a0 = self.coeffs[0];
        if a0.norm() == 0.0 {
            return None;
        }
        let n = self.len();
        let mut b = vec![C64::new(0.0, 0.0); n];
        b[0] = a0.inv();
        for k in 1..n {
            let s: C64 = (1..=k).map(|j| self.coeffs[j] * b[k - j]).sum();
            b[k] = -s * b[0];
        }
        Some(Self { coeffs: b })
    }

    /// Formal derivative, keeping the length.
    pub fn derivative(&self) -> Self {
        let n = self.len();
        let mut d = vec![C64::new(0.0, 0.0); n];
        for k in 1..n {
            d[k - 1] = self.coeffs[k] * k as f64;
        }
        Self { coeffs: d }
    }

    /// Index of the first coefficient whose modulus exceeds `tol`.
    pub fn valuation(&self, tol: f64) -> usize {
        self.coeffs
            .iter()
            .position(|c| c.norm() > tol)
            .unwrap_or(self.len())
    }
}

impl Add for &Series {
    type Output = Series;
    fn add(self, rhs: &Series) -> Series {
        let n = self.len().min(rhs.len());
        Series {
            coeffs: (0..n).map(|k| self.coeffs[k] + rhs.coeffs[k]).collect(),
        }
    }
}

impl Sub for &Series {
    type Output = Series;
    fn sub(self, rhs: &Series) -> Series {
        let n = self.len().min(rhs.len());
        Series {
            coeffs: (0..n).map(|k| self.coeffs[k] - rhs.coeffs[k]).collect(),
        }
    }
}

impl Mul for &Series {
    type Output = Series;
    fn mul(self, rhs: &Series) -> Series {
        let n = self.len().min(rhs.len());
        let mut c = vec![C64::new(0.0, 0.0); n];
        for i in 0..n {
            for j in 0..n - i {
                c[i + j] += self.coeffs[i] * rhs.coeffs[j];
            }
        }
        Series { coeffs: c }
    }
}

impl Neg for &Series {
    type Output = Series;
    fn neg(self) -> Series {
        self.scale(C64::new(-1.0, 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_series() {
        let one_minus = Series::linear(C64::new(1.0, 0.0), C64::new(-1.0, 0.0), 6);
        let inv = one_minus.recip().unwrap();
        for k in 0..6 {
            assert!((inv.coeff(k) - 1.0).norm() < 1e-15);
        }
        let prod = &inv * &one_minus;
        assert_eq!(prod.valuation(1e-15), 0);
        assert!((1..6).all(|k| prod.coeff(k).norm() < 1e-15));
    }

    #[test]
    fn zero_constant_has_no_inverse() {
        assert!(Series::linear(C64::new(0.0, 0.0), C64::new(1.0, 0.0), 4)
            .recip()
            .is_none());
    }
}
