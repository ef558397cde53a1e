//! Seeded uniform streams and the two variate families used by the study.
//!
//! Every replication owns a ChaCha20 stream keyed by the study seed and
//! selected by the replication index, so draws do not depend on scheduling.
//! Uniforms are `(b + 0.5) 2^-53` for the top 53 bits `b` of a 64-bit word
//! and never hit 0 or 1. Both families are drawn by inverse CDF, one uniform
//! per variate.

use std::f64::consts::SQRT_2;
use std::fmt;
use std::str::FromStr;

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::propensity::LinkFamily;
use crate::special::{normal_cdf, normal_quantile};

/// Substream for replication `rep_index` of a study seeded with `seed`.
pub fn substream(seed: u64, rep_index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(rep_index);
    rng
}

/// Uniform on the open interval (0, 1).
pub fn uniform(rng: &mut impl RngCore) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Mean-zero, unit-variance distributions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Distribution {
    #[serde(rename = "normal", alias = "stdnormal", alias = "gaussian")]
    StdNormal,
    /// Laplace with scale `1/sqrt(2)`.
    #[serde(rename = "laplace", alias = "unitlaplace")]
    UnitLaplace,
}

impl Distribution {
    pub fn quantile(self, u: f64) -> f64 {
        match self {
            Distribution::StdNormal => normal_quantile(u),
            Distribution::UnitLaplace => {
                if u < 0.5 {
                    (2.0 * u).ln() / SQRT_2
                } else {
                    -(2.0 * (1.0 - u)).ln() / SQRT_2
                }
            }
        }
    }

    pub fn cdf(self, r: f64) -> f64 {
        match self {
            Distribution::StdNormal => normal_cdf(r),
            Distribution::UnitLaplace => self.link().cdf_pair(r).0,
        }
    }

    pub fn draw(self, rng: &mut impl RngCore) -> f64 {
        self.quantile(uniform(rng))
    }

    /// Link family whose CDF is this distribution's CDF.
    pub fn link(self) -> LinkFamily {
        match self {
            Distribution::StdNormal => LinkFamily::Probit,
            Distribution::UnitLaplace => LinkFamily::Laplace,
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Distribution::StdNormal => "normal",
            Distribution::UnitLaplace => "laplace",
        })
    }
}

impl FromStr for Distribution {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "normal" | "stdnormal" | "gaussian" => Ok(Distribution::StdNormal),
            "laplace" | "unitlaplace" => Ok(Distribution::UnitLaplace),
            other => Err(format!("unknown distribution '{other}' (expected normal or laplace)")),
        }
    }
}
