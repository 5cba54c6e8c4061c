//! Clustering policies.
//!
//! A policy watches the links that transactions cross and may, between
//! transactions, hand the run loop a new object placement. Policies never
//! influence which objects a traversal visits.

mod dstc;
mod union_find;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{Database, ObjectId};
use crate::storage::{Placement, Storage};

pub use dstc::{
    dstc_build_units, dstc_consolidate, dstc_layout, dstc_observe, dstc_reorganize, dstc_select,
    Dstc, DstcParams, DstcState, PairCounts, PairWeights,
};

pub trait ClusteringPolicy {
    fn name(&self) -> &'static str;

    /// A traversal moved from `source` to `target` through `slot`.
    fn on_link_crossing(&mut self, source: ObjectId, slot: u32, target: ObjectId);

    fn on_transaction_end(&mut self);

    /// Called after every transaction; `Some` asks the run loop to install a
    /// new placement, charged as clustering overhead.
    fn maybe_reorganize(&mut self, db: &Database, storage: &Storage) -> Result<Option<Placement>>;
}

/// Baseline: never reorganizes.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoClustering;

impl ClusteringPolicy for NoClustering {
    fn name(&self) -> &'static str {
        "none"
    }

    fn on_link_crossing(&mut self, _: ObjectId, _: u32, _: ObjectId) {}

    fn on_transaction_end(&mut self) {}

    fn maybe_reorganize(&mut self, _: &Database, _: &Storage) -> Result<Option<Placement>> {
        Ok(None)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    #[default]
    None,
    Dstc,
}

impl PolicyKind {
    pub fn build(self, dstc: &DstcParams) -> Result<Box<dyn ClusteringPolicy + Send>> {
        Ok(match self {
            PolicyKind::None => Box::new(NoClustering),
            PolicyKind::Dstc => Box::new(Dstc::new(dstc.clone())?),
        })
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolicyKind::None => "none",
            PolicyKind::Dstc => "dstc",
        })
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(PolicyKind::None),
            "dstc" => Ok(PolicyKind::Dstc),
            other => Err(Error::Config(format!(
                "unknown policy {other:?} (expected none or dstc)"
            ))),
        }
    }
}
