//! Verification strategies behind one trait, looked up by name.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::compat::{
    random_evaluation_point, run_chain, table_conformance, verify_compatibility, OperatorSet,
    CHAIN_TOL,
};
use crate::config::{Config, DEFAULT_TAU};
use crate::error::Result;
use crate::identities;
use crate::numerics::{c64, C64};
use crate::p6::{verify_p6, P6State};
use crate::qp6::{square_residual, verify_interpolation, QP6State};
use crate::surface::EllipticData;

/// One named residual against its threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    /// Non-finite residuals are stored as `f64::MAX` so reports stay valid
    /// JSON; they fail.
    pub fn new(name: impl Into<String>, residual: f64, threshold: f64) -> Self {
        let residual = if residual.is_finite() {
            residual
        } else {
            f64::MAX
        };
        Self {
            name: name.into(),
            residual,
            threshold,
            pass: residual < threshold,
        }
    }
}

/// Inputs of one trial.
#[derive(Debug, Clone)]
pub struct Trial {
    pub data: EllipticData,
    pub qp6: QP6State,
    pub p6: P6State,
    pub rng: ChaCha8Rng,
}

impl Trial {
    /// Trial 0 runs on the blocks of `cfg` (missing ones are drawn);
    /// later trials draw fresh configurations. Each trial owns a generator
    /// derived from `(seed, index)`.
    pub fn new(cfg: &Config, seed: u64, index: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let data = if index == 0 {
            cfg.elliptic.data()?
        } else {
            EllipticData::random(DEFAULT_TAU, &mut rng)?
        };
        let qp6 = match (&cfg.qp6, index) {
            (Some(s), 0) => s.clone(),
            _ => QP6State::random(&mut rng)?,
        };
        let p6 = match (&cfg.p6, index) {
            (Some(s), 0) => s.clone(),
            _ => P6State::random(&mut rng)?,
        };
        Ok(Self { data, qp6, p6, rng })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Options {
    /// Replaces every default threshold.
    pub tol: Option<f64>,
    /// Compares against an unrelated point; the affected check must fail.
    pub negative_control: bool,
    /// Samples per identity.
    pub samples: usize,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            tol: None,
            negative_control: false,
            samples: 10,
        }
    }
}

impl Options {
    fn threshold(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }
}

pub trait Verifier: Send + Sync {
    fn name(&self) -> &'static str;
    fn summary(&self) -> &'static str;
    /// Checks in a fixed order with fixed names.
    fn run(&self, trial: &mut Trial, opts: &Options) -> Result<Vec<Check>>;
}

const WAVE_SEED: (C64, C64) = (c64(0.7, 0.1), c64(-0.3, 0.5));

pub struct Compatibility;

impl Verifier for Compatibility {
    fn name(&self) -> &'static str {
        "verify-compat"
    }

    fn summary(&self) -> &'static str {
        "L6 at P against the dotted L1 at the image point"
    }

    fn run(&self, trial: &mut Trial, opts: &Options) -> Result<Vec<Check>> {
        let d = &trial.data;
        let p = random_evaluation_point(d, &mut trial.rng)?;
        let c = verify_compatibility(d, d.z, &p, WAVE_SEED, opts.negative_control, &mut trial.rng)?;
        let ops = OperatorSet::build(d, d.z)?;
        let chain = run_chain(d, &ops)?;
        let table = table_conformance(d, &ops, &chain)?;
        let worst =
            |f: fn(&crate::compat::TableEntry) -> f64| table.iter().map(f).fold(0.0, f64::max);
        let steps = c.step_residuals.iter().map(|(_, r)| *r).fold(0.0, f64::max);
        let mut out = vec![
            Check::new("compatibility_distance", c.distance, opts.threshold(1e-6)),
            Check::new(
                "dotted_wave_residual",
                c.dotted_wave_residual,
                opts.threshold(1e-6),
            ),
            Check::new("l6_wave_residual", c.l6_wave_residual, opts.threshold(1e-6)),
            Check::new(
                "dotted_middle_zero",
                c.dotted_zero_residual,
                opts.threshold(1e-8),
            ),
            Check::new("elimination_remainder", steps, opts.threshold(CHAIN_TOL)),
            Check::new(
                "table_divisor",
                worst(|e| e.divisor_residual),
                opts.threshold(1e-8),
            ),
            Check::new(
                "table_extra_zeros",
                worst(|e| e.zero_residual),
                opts.threshold(1e-8),
            ),
        ];
        if let Some(nc) = c.negative_control {
            out.push(Check::new(
                "negative_control_distance",
                nc,
                opts.threshold(1e-6),
            ));
        }
        Ok(out)
    }
}

pub struct Identities;

impl Verifier for Identities {
    fn name(&self) -> &'static str {
        "verify-lemmas"
    }

    fn summary(&self) -> &'static str {
        "auxiliary identities behind the elimination chain"
    }

    fn run(&self, trial: &mut Trial, opts: &Options) -> Result<Vec<Check>> {
        let seed = rand::Rng::gen(&mut trial.rng);
        identities::run_all(&trial.data, opts.samples, seed)
            .into_iter()
            .map(|(name, r)| Ok(Check::new(name, r?.residual, opts.threshold(1e-7))))
            .collect()
    }
}

pub struct QDifference;

impl Verifier for QDifference {
    fn name(&self) -> &'static str {
        "qp6-verify"
    }

    fn summary(&self) -> &'static str {
        "q-difference sixth Painleve: curve characterization and one lattice cell"
    }

    fn run(&self, trial: &mut Trial, opts: &Options) -> Result<Vec<Check>> {
        let s = &trial.qp6;
        let w = s.waves(WAVE_SEED.0, WAVE_SEED.1)?;
        let c = verify_interpolation(s, &w)?;
        let next = s.step()?;
        let tol = opts.threshold(1e-8);
        Ok(vec![
            Check::new("l1_interpolation_distance", c.l1_distance, tol),
            Check::new(
                "l1_dimension_excess",
                (c.l1_dimension as f64 - 1.0).abs(),
                0.5,
            ),
            Check::new("l1_point_residual", c.l1_point_residual, tol),
            Check::new("l2_interpolation_distance", c.l2_distance, tol),
            Check::new(
                "l2_dimension_excess",
                (c.l2_dimension as f64 - 1.0).abs(),
                0.5,
            ),
            Check::new("l2_point_residual", c.l2_point_residual, tol),
            Check::new("square_residual", square_residual(s, WAVE_SEED)?, tol),
            Check::new(
                "constraint_after_step",
                next.constraint_residual(),
                opts.threshold(1e-12),
            ),
        ])
    }
}

pub struct Continuous;

impl Verifier for Continuous {
    fn name(&self) -> &'static str {
        "p6-verify"
    }

    fn summary(&self) -> &'static str {
        "sixth Painleve: quartic and conic conditions, exponents at z = q"
    }

    fn run(&self, trial: &mut Trial, opts: &Options) -> Result<Vec<Check>> {
        let u = c64(0.4, 0.2);
        let c = verify_p6(&trial.p6, u)?;
        let tol = opts.threshold(1e-9);
        Ok(vec![
            Check::new("quartic_fit", c.quartic_fit, tol),
            Check::new("quartic_points", c.quartic_points, tol),
            Check::new("quartic_jet_t", c.quartic_jet_t, tol),
            Check::new("quartic_jet_1", c.quartic_jet_1, tol),
            Check::new("quartic_jet_z", c.quartic_jet_z, tol),
            Check::new("quartic_state_point", c.quartic_state_point, tol),
            Check::new("conic_fit", c.conic_fit, tol),
            Check::new("conic_points", c.conic_points, tol),
            Check::new("conic_jet_t", c.conic_jet_t, tol),
            Check::new("conic_z_point", c.conic_z_point, tol),
            Check::new("exponents_at_q", c.exponent_residual, tol),
        ])
    }
}

/// Strategies available by name.
pub struct Registry {
    entries: Vec<Box<dyn Verifier>>,
}

impl Default for Registry {
    fn default() -> Self {
        let mut r = Self {
            entries: Vec::new(),
        };
        r.register(Box::new(Compatibility));
        r.register(Box::new(Identities));
        r.register(Box::new(QDifference));
        r.register(Box::new(Continuous));
        r
    }
}

impl Registry {
    /// Later registrations replace earlier ones of the same name.
    pub fn register(&mut self, v: Box<dyn Verifier>) {
        self.entries.retain(|e| e.name() != v.name());
        self.entries.push(v);
    }

    pub fn get(&self, name: &str) -> Option<&dyn Verifier> {
        self.entries
            .iter()
            .find(|e| e.name() == name)
            .map(|b| b.as_ref())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name()).collect()
    }
}

/// Worst residual per check name over several trials, keeping the first
/// trial's order.
pub fn aggregate(trials: &[Vec<Check>]) -> Vec<Check> {
    let mut out: Vec<Check> = Vec::new();
    for checks in trials {
        for c in checks {
            match out.iter_mut().find(|o| o.name == c.name) {
                Some(o) => {
                    o.residual = o.residual.max(c.residual);
                    o.pass &= c.pass;
                }
                None => out.push(c.clone()),
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_knows_every_mode() {
        let r = Registry::default();
        assert_eq!(
            r.names(),
            ["verify-compat", "verify-lemmas", "qp6-verify", "p6-verify"]
        );
        assert!(r.get("flow").is_none());
        assert_eq!(r.get("p6-verify").unwrap().name(), "p6-verify");
    }

    #[test]
    fn later_registration_replaces() {
        struct Fake;
        impl Verifier for Fake {
            fn name(&self) -> &'static str {
                "p6-verify"
            }
            fn summary(&self) -> &'static str {
                "fake"
            }
            fn run(&self, _: &mut Trial, _: &Options) -> Result<Vec<Check>> {
                Ok(vec![])
            }
        }
        let mut r = Registry::default();
        r.register(Box::new(Fake));
        assert_eq!(r.names().len(), 4);
        assert_eq!(r.get("p6-verify").unwrap().summary(), "fake");
    }

    #[test]
    fn nan_fails_and_aggregation_keeps_the_worst() {
        let nan = Check::new("x", f64::NAN, 1.0);
        assert!(!nan.pass && nan.residual.is_finite());
        let a = vec![Check::new("x", 1e-9, 1e-6), Check::new("y", 1e-3, 1e-6)];
        let b = vec![Check::new("x", 1e-7, 1e-6), Check::new("y", f64::NAN, 1e-6)];
        let agg = aggregate(&[a, b]);
        assert_eq!(agg[0].residual, 1e-7);
        assert!(agg[0].pass);
        assert!(agg[1].residual == f64::MAX && !agg[1].pass);
    }

    #[test]
    fn q_and_continuous_modes_pass_on_a_generated_config() {
        let cfg = Config::generate(2).unwrap();
        let r = Registry::default();
        for mode in ["qp6-verify", "p6-verify"] {
            let mut t = Trial::new(&cfg, 2, 0).unwrap();
            let checks = r
                .get(mode)
                .unwrap()
                .run(&mut t, &Options::default())
                .unwrap();
            assert!(checks.iter().all(|c| c.pass), "{mode}: {checks:?}");
        }
    }
}
