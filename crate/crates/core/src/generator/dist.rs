use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Random distribution used at one generation or workload draw site.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionKind {
    Uniform,
    Constant(u32),
    /// Locality of reference: with `locality_probability` the target lies
    /// within `refzone` positions of the source, otherwise anywhere.
    Special {
        refzone: u32,
        locality_probability: f64,
    },
}

impl DistributionKind {
    /// Draws from `[lo, hi]`. Only meaningful for `Uniform` and `Constant`.
    pub(crate) fn draw<R: Rng>(&self, rng: &mut R, lo: u32, hi: u32) -> u32 {
        match *self {
            DistributionKind::Uniform => rng.gen_range(lo..=hi),
            DistributionKind::Constant(v) => v,
            DistributionKind::Special { .. } => unreachable!("validated: Special is object-reference only"),
        }
    }

    pub(crate) fn validate_scalar(&self, name: &str, lo: u32, hi: u32) -> Result<()> {
        match *self {
            DistributionKind::Uniform => Ok(()),
            DistributionKind::Constant(v) if (lo..=hi).contains(&v) => Ok(()),
            DistributionKind::Constant(v) => Err(Error::Param(format!(
                "{name}: constant {v} outside [{lo}, {hi}]"
            ))),
            DistributionKind::Special { .. } => Err(Error::Param(format!(
                "{name}: the special distribution only applies to object references"
            ))),
        }
    }

    pub(crate) fn validate_object_refs(&self, name: &str) -> Result<()> {
        match *self {
            DistributionKind::Uniform => Ok(()),
            DistributionKind::Constant(0) => {
                Err(Error::Param(format!("{name}: constant position must be >= 1")))
            }
            DistributionKind::Constant(_) => Ok(()),
            DistributionKind::Special {
                locality_probability: p,
                ..
            } if (0.0..=1.0).contains(&p) => Ok(()),
            DistributionKind::Special { .. } => Err(Error::Param(format!(
                "{name}: locality probability must lie in [0, 1]"
            ))),
        }
    }
}

impl fmt::Display for DistributionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistributionKind::Uniform => f.write_str("uniform"),
            DistributionKind::Constant(v) => write!(f, "constant:{v}"),
            DistributionKind::Special {
                refzone,
                locality_probability,
            } => write!(f, "special:{refzone}:{locality_probability}"),
        }
    }
}

impl FromStr for DistributionKind {
    type Err = Error;

    /// Parses `uniform`, `constant:V` or `special:REFZONE:PROBABILITY`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("bad distribution {s:?}"));
        let mut parts = s.trim().split(':');
        let kind = parts.next().unwrap_or_default().to_ascii_lowercase();
        let dist = match kind.as_str() {
            "uniform" => DistributionKind::Uniform,
            "constant" => {
                DistributionKind::Constant(parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?)
            }
            "special" => DistributionKind::Special {
                refzone: parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?,
                locality_probability: parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?,
            },
            _ => return Err(bad()),
        };
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(dist)
    }
}
