//! Transaction workload: four traversal families run under a cold/warm protocol.

mod protocol;
mod traversal;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{DistributionKind, ObjectId, RefType};

pub use protocol::{run_protocol, ExperimentLog, TransactionRecord};
pub use traversal::{
    choose_stochastic_slot, execute, hierarchy_traversal, plan_hierarchy, plan_set_oriented,
    plan_simple, plan_stochastic, set_oriented_access, simple_traversal, stochastic_traversal,
    Step,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransactionKind {
    SetOriented,
    Simple,
    Hierarchy,
    Stochastic,
}

impl TransactionKind {
    pub const ALL: [TransactionKind; 4] = [
        TransactionKind::SetOriented,
        TransactionKind::Simple,
        TransactionKind::Hierarchy,
        TransactionKind::Stochastic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TransactionKind::SetOriented => "set",
            TransactionKind::Simple => "simple",
            TransactionKind::Hierarchy => "hierarchy",
            TransactionKind::Stochastic => "stochastic",
        }
    }
}

impl fmt::Display for TransactionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TransactionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Report(format!("unknown transaction type {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    /// Follow reverse references.
    Reverse,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Reverse => "reverse",
        }
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forward" => Ok(Direction::Forward),
            "reverse" => Ok(Direction::Reverse),
            _ => Err(Error::Report(format!("unknown direction {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Phase {
    #[serde(rename = "COLD")]
    Cold,
    #[serde(rename = "HOT")]
    Hot,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Cold => "COLD",
            Phase::Hot => "HOT",
        }
    }
}

impl FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "COLD" => Ok(Phase::Cold),
            "HOT" => Ok(Phase::Hot),
            _ => Err(Error::Report(format!("unknown phase {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkloadParams {
    pub setdepth: u32,
    pub simdepth: u32,
    pub hiedepth: u32,
    pub stodepth: u32,
    /// Cold-run transactions per client.
    pub coldn: u64,
    /// Warm-run transactions per client.
    pub hotn: u64,
    /// Simulated idle time between transactions.
    pub think: f64,
    pub pset: f64,
    pub psimple: f64,
    pub phier: f64,
    pub pstoch: f64,
    /// Root object distribution.
    pub dist5: DistributionKind,
    pub clientn: u32,
    pub reverse_probability: f64,
    /// Reference type followed by hierarchy traversals.
    pub hierarchy_ref_type: RefType,
    pub seed: u64,
}

impl Default for WorkloadParams {
    fn default() -> Self {
        Self {
            setdepth: 3,
            simdepth: 3,
            hiedepth: 5,
            stodepth: 50,
            coldn: 1000,
            hotn: 10_000,
            think: 0.0,
            pset: 0.25,
            psimple: 0.25,
            phier: 0.25,
            pstoch: 0.25,
            dist5: DistributionKind::Uniform,
            clientn: 1,
            reverse_probability: 0.0,
            hierarchy_ref_type: 1,
            seed: 0,
        }
    }
}

impl WorkloadParams {
    pub fn validate(&self) -> Result<()> {
        let probs = [self.pset, self.psimple, self.phier, self.pstoch];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Param("transaction probabilities must lie in [0, 1]".into()));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Param(format!(
                "pset + psimple + phier + pstoch = {sum}, expected 1"
            )));
        }
        if !(0.0..=1.0).contains(&self.reverse_probability) {
            return Err(Error::Param("reverse_probability must lie in [0, 1]".into()));
        }
        if !(0.0..).contains(&self.think) {
            return Err(Error::Param("think must be >= 0".into()));
        }
        if self.clientn == 0 {
            return Err(Error::Param("clientn must be at least 1".into()));
        }
        if let DistributionKind::Special { .. } = self.dist5 {
            return Err(Error::Param(
                "dist5: the special distribution only applies to object references".into(),
            ));
        }
        Ok(())
    }

    pub fn depth(&self, kind: TransactionKind) -> u32 {
        match kind {
            TransactionKind::SetOriented => self.setdepth,
            TransactionKind::Simple => self.simdepth,
            TransactionKind::Hierarchy => self.hiedepth,
            TransactionKind::Stochastic => self.stodepth,
        }
    }

    /// Maps a uniform draw in `[0, 1)` to a transaction type by cumulative
    /// probability. Zero-probability types are never chosen.
    pub fn kind_for(&self, u: f64) -> TransactionKind {
        let weighted = [
            (TransactionKind::SetOriented, self.pset),
            (TransactionKind::Simple, self.psimple),
            (TransactionKind::Hierarchy, self.phier),
            (TransactionKind::Stochastic, self.pstoch),
        ];
        let mut acc = 0.0;
        for (kind, p) in weighted {
            acc += p;
            if u < acc && p > 0.0 {
                return kind;
            }
        }
        weighted
            .iter()
            .rev()
            .find(|(_, p)| *p > 0.0)
            .map(|(k, _)| *k)
            .expect("probabilities sum to 1")
    }
}

/// Outcome of one transaction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransactionResult {
    pub kind: TransactionKind,
    pub root: ObjectId,
    pub direction: Direction,
    /// Accesses including repeats.
    pub objects_accessed: u64,
    pub distinct_objects: u64,
    /// Pages read to serve the accesses.
    pub page_faults: u64,
    pub simulated_time: f64,
}
