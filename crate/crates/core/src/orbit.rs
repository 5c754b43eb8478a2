//! Orbits of the discrete dynamics as CSV rows.

use std::fmt::Write as _;

use rand::Rng;

use crate::dynamics::{elliptic_step, PainleveState};
use crate::error::Error;
use crate::numerics::C64;
use crate::qp6::QP6State;

pub const CSV_HEADER: &str = "step,u1_re,u1_im,u2_re,u2_im,f_re,f_im,g_re,g_im";

/// One iterate. For the q-system the `u` columns hold `a1, a2`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitRow {
    pub step: usize,
    pub u1: C64,
    pub u2: C64,
    /// `None` at infinity.
    pub f: Option<C64>,
    pub g: Option<C64>,
}

/// Rows computed before the first failure, and the failure.
#[derive(Debug, Clone)]
pub struct Orbit {
    pub rows: Vec<OrbitRow>,
    pub failure: Option<(usize, Error)>,
}

impl Orbit {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        let num = |v: Option<C64>| match v {
            Some(c) => format!("{:e},{:e}", c.re, c.im),
            None => "inf,inf".to_string(),
        };
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{:e},{:e},{:e},{:e},{},{}",
                r.step,
                r.u1.re,
                r.u1.im,
                r.u2.re,
                r.u2.im,
                num(r.f),
                num(r.g)
            );
        }
        out
    }
}

/// `steps` iterates of the elliptic step after the initial row.
pub fn elliptic_orbit<R: Rng + ?Sized>(start: PainleveState, steps: usize, rng: &mut R) -> Orbit {
    let row = |k: usize, s: &PainleveState| OrbitRow {
        step: k,
        u1: s.data.u[0],
        u2: s.data.u[1],
        f: s.p.f(),
        g: s.p.g(),
    };
    let mut rows = vec![row(0, &start)];
    let mut state = start;
    for k in 1..=steps {
        match elliptic_step(&state, rng) {
            Ok(next) => {
                rows.push(row(k, &next));
                state = next;
            }
            Err(e) => {
                return Orbit {
                    rows,
                    failure: Some((k, e)),
                }
            }
        }
    }
    Orbit {
        rows,
        failure: None,
    }
}

/// `steps` iterates of the q-difference step after the initial row.
pub fn qp6_orbit(start: QP6State, steps: usize) -> Orbit {
    let row = |k: usize, s: &QP6State| OrbitRow {
        step: k,
        u1: s.a[0],
        u2: s.a[1],
        f: Some(s.f),
        g: Some(s.g),
    };
    let mut rows = vec![row(0, &start)];
    let mut state = start;
    for k in 1..=steps {
        match state.step() {
            Ok(next) => {
                rows.push(row(k, &next));
                state = next;
            }
            Err(e) => {
                return Orbit {
                    rows,
                    failure: Some((k, e)),
                }
            }
        }
    }
    Orbit {
        rows,
        failure: None,
    }
}
