use std::f64::consts::PI;

use super::{c64, C64};
use crate::error::{Error, Result};

const MAX_TERMS: usize = 400;
const REL_CUTOFF: f64 = 1e-18;

/// Period lattice `Z + tau Z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    tau: C64,
}

impl Lattice {
    pub fn new(tau: C64) -> Result<Self> {
        if !(tau.im > 0.0) || !super::is_finite(tau) {
            return Err(Error::InvalidLattice(tau.im));
        }
        Ok(Self { tau })
    }

    pub fn tau(&self) -> C64 {
        self.tau
    }

    /// Coordinates `(s, t)` with `u = s + t tau`.
    pub fn coordinates(&self, u: C64) -> (f64, f64) {
        let t = u.im / self.tau.im;
        let s = u.re - t * self.tau.re;
        (s, t)
    }

    /// Representative of `u` in the fundamental cell `[0,1) + [0,1) tau`.
    pub fn reduce(&self, u: C64) -> C64 {
        let (s, t) = self.coordinates(u);
        let s = s - s.floor();
        let t = t - t.floor();
        c64(s, 0.0) + self.tau * t
    }

    /// Distance between `u` and `v` in `C / (Z + tau Z)`.
    pub fn distance(&self, u: C64, v: C64) -> f64 {
        let w = self.reduce(u - v);
        let mut best = f64::INFINITY;
        for k in -1..=1 {
            for l in -1..=1 {
                let d = (w - c64(k as f64, 0.0) - self.tau * l as f64).norm();
                best = best.min(d);
            }
        }
        best
    }
}

/// The odd theta function
/// `[u] = sum_n (-1)^n q^{(n+1/2)^2} e^{(2n+1) pi i u}`, `q = e^{pi i tau}`.
pub fn theta(u: C64, lattice: &Lattice) -> C64 {
    theta_with_derivative(u, lattice).0
}

/// `[u]` together with `d[u]/du`.
pub fn theta_with_derivative(u: C64, lattice: &Lattice) -> (C64, C64) {
    // Pairing n with -n-1 gives 2i sum_{n>=0} (-1)^n q^{(n+1/2)^2} sin((2n+1) pi u).
    let i_pi_tau = c64(0.0, PI) * lattice.tau;
    let mut value = C64::new(0.0, 0.0);
    let mut deriv = C64::new(0.0, 0.0);
    for n in 0..MAX_TERMS {
        let k = n as f64 + 0.5;
        let weight = (i_pi_tau * (k * k)).exp();
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let arg = u * ((2 * n + 1) as f64 * PI);
        let term = weight * arg.sin() * sign;
        let dterm = weight * arg.cos() * ((2 * n + 1) as f64 * PI) * sign;
        value += term;
        deriv += dterm;
        if n >= 2
            && term.norm() <= REL_CUTOFF * value.norm()
            && dterm.norm() <= REL_CUTOFF * deriv.norm()
        {
            break;
        }
    }
    let two_i = c64(0.0, 2.0);
    (value * two_i, deriv * two_i)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lat() -> Lattice {
        Lattice::new(c64(0.0, 0.8)).unwrap()
    }

    /// Bilateral exponential form summed over |n| <= 60.
    fn theta_bilateral(u: C64, tau: C64) -> C64 {
        let mut s = C64::new(0.0, 0.0);
        for n in -60i64..=60 {
            let k = n as f64 + 0.5;
            let sign = if n.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            s +=
                (c64(0.0, PI) * tau * (k * k) + c64(0.0, PI) * u * (2 * n + 1) as f64).exp() * sign;
        }
        s
    }

    #[test]
    fn rejects_lower_half_plane() {
        assert!(matches!(
            Lattice::new(c64(0.3, 0.0)),
            Err(Error::InvalidLattice(_))
        ));
        assert!(Lattice::new(c64(0.3, -1.0)).is_err());
    }

    #[test]
    fn vanishes_at_origin_and_is_odd() {
        let l = lat();
        assert!(theta(c64(0.0, 0.0), &l).norm() < 1e-15);
        let u = c64(0.3, 0.1);
        assert!((theta(-u, &l) + theta(u, &l)).norm() < 1e-12 * theta(u, &l).norm());
    }

    #[test]
    fn matches_bilateral_series() {
        let l = lat();
        for &u in &[c64(0.2, 0.05), c64(-0.7, 0.3), c64(1.3, -0.2)] {
            let a = theta(u, &l);
            let b = theta_bilateral(u, l.tau());
            assert!((a - b).norm() < 1e-13 * b.norm().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn antiperiodic_under_unit_shift() {
        let l = lat();
        let u = c64(0.2, 0.05);
        // independent summation for the shifted argument
        let shifted = theta_bilateral(u + 1.0, l.tau());
        assert!((shifted + theta(u, &l)).norm() < 1e-12);
        assert!((theta(u + 1.0, &l) + theta(u, &l)).norm() < 1e-12);
    }

    #[test]
    fn quasi_periodic_under_tau_shift() {
        // [u + tau] = -e^{-pi i tau - 2 pi i u} [u]
        let l = lat();
        let u = c64(0.15, 0.07);
        let factor = -(c64(0.0, -PI) * l.tau() - c64(0.0, 2.0 * PI) * u).exp();
        let lhs = theta(u + l.tau(), &l);
        assert!((lhs - factor * theta(u, &l)).norm() < 1e-12 * lhs.norm().max(1.0));
    }

    #[test]
    fn derivative_matches_central_difference() {
        let l = lat();
        let u = c64(0.31, 0.12);
        let h = 1e-6;
        let fd = (theta(u + h, &l) - theta(u - h, &l)) / (2.0 * h);
        let (_, d) = theta_with_derivative(u, &l);
        assert!((fd - d).norm() < 1e-7 * d.norm());
    }

    #[test]
    fn reduce_and_distance() {
        let l = Lattice::new(c64(0.3, 1.1)).unwrap();
        let u = c64(0.4, 0.2);
        let w = u + 3.0 - l.tau() * 2.0;
        assert!((l.reduce(w) - l.reduce(u)).norm() < 1e-12);
        assert!(l.distance(u, w) < 1e-12);
        assert!(l.distance(c64(0.0, 0.0), c64(0.999, 0.0)) < 2e-3);
    }
}
