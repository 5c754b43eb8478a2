//! JSON configuration. Complex numbers are `[re, im]` pairs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::C64;
use crate::p6::P6State;
use crate::qp6::QP6State;
use crate::surface::EllipticData;

/// Lattice parameter used for generated configurations.
pub const DEFAULT_TAU: C64 = C64 { re: 0.1, im: 1.0 };

/// Raw parameters of the elliptic system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipticConfig {
    pub tau: C64,
    pub h1: C64,
    pub h2: C64,
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
    pub u: [C64; 8],
    pub z: C64,
}

impl From<&EllipticData> for EllipticConfig {
    fn from(d: &EllipticData) -> Self {
        Self {
            tau: d.lattice.tau(),
            h1: d.h1,
            h2: d.h2,
            a: d.a,
            b: d.b,
            c: d.c,
            d: d.d,
            u: d.u,
            z: d.z,
        }
    }
}

impl EllipticConfig {
    /// Validated data; fails on the genericity margins.
    pub fn data(&self) -> Result<EllipticData> {
        EllipticData::new(
            self.tau, self.h1, self.h2, self.a, self.b, self.c, self.d, self.u, self.z,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub elliptic: EllipticConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qp6: Option<QP6State>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p6: Option<P6State>,
}

impl Config {
    /// Generic configuration with all three blocks, from one seeded stream.
    pub fn generate(seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::generate_with(&mut rng)
    }

    pub fn generate_with(rng: &mut ChaCha8Rng) -> Result<Self> {
        let data = EllipticData::random(DEFAULT_TAU, rng)?;
        Ok(Self {
            elliptic: EllipticConfig::from(&data),
            qp6: Some(QP6State::random(rng)?),
            p6: Some(P6State::random(rng)?),
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }

    /// Runs the constructors' checks on every present block.
    pub fn validate(&self) -> Result<()> {
        self.elliptic.data()?;
        if let Some(s) = &self.qp6 {
            QP6State::new(s.a, s.b, s.q, s.f, s.g, s.z)?;
        }
        if let Some(s) = &self.p6 {
            P6State::new(s.a, s.q, s.p, s.t, s.z, s.s)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_gives_identical_text() {
        assert_eq!(
            Config::generate(5).unwrap().to_json(),
            Config::generate(5).unwrap().to_json()
        );
        assert_ne!(
            Config::generate(5).unwrap().to_json(),
            Config::generate(6).unwrap().to_json()
        );
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]
        #[test]
        fn round_trip_preserves_every_bit(seed in proptest::prelude::any::<u64>()) {
            let cfg = Config::generate(seed).unwrap();
            let back = Config::from_json(&cfg.to_json()).unwrap();
            proptest::prop_assert_eq!(&cfg, &back);
            proptest::prop_assert_eq!(cfg.to_json(), back.to_json());
        }
    }

    #[test]
    fn complex_numbers_are_pairs() {
        let v: serde_json::Value =
            serde_json::from_str(&Config::generate(1).unwrap().to_json()).unwrap();
        let tau = &v["elliptic"]["tau"];
        assert!(tau.is_array() && tau.as_array().unwrap().len() == 2);
        assert_eq!(v["elliptic"]["u"].as_array().unwrap().len(), 8);
    }

    #[test]
    fn generated_blocks_pass_validation() {
        let cfg = Config::generate(3).unwrap();
        cfg.validate().unwrap();
        let q = cfg.qp6.unwrap();
        assert!(q.constraint_residual() < 1e-12);
    }

    #[test]
    fn malformed_json_is_a_config_error() {
        assert!(matches!(
            Config::from_json("{\"elliptic\": 3}"),
            Err(Error::Config(_))
        ));
    }
}
