use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{Database, DistributionKind, ObjectId};
use crate::policies::ClusteringPolicy;
use crate::rng::{self, StreamRng};
use crate::storage::Storage;

use super::traversal::{execute, plan_hierarchy, plan_set_oriented, plan_simple, plan_stochastic};
use super::{Direction, Phase, TransactionKind, WorkloadParams};

/// One logged transaction, plus any reorganization the policy ran right after it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransactionRecord {
    pub seq: u64,
    pub client: u32,
    pub phase: Phase,
    #[serde(rename = "type")]
    pub kind: TransactionKind,
    pub direction: Direction,
    pub root: u32,
    pub objects: u64,
    pub distinct: u64,
    pub faults: u64,
    pub sim_time: f64,
    pub reorganized: bool,
    pub overhead_reads: u64,
    pub overhead_writes: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentLog {
    pub records: Vec<TransactionRecord>,
}

impl ExperimentLog {
    /// Sum of transaction times plus `think` after each transaction.
    pub fn simulated_clock(&self, think: f64) -> f64 {
        let mut records: Vec<&TransactionRecord> = self.records.iter().collect();
        records.sort_by_key(|r| r.seq);
        records.iter().map(|r| r.sim_time).sum::<f64>() + think * records.len() as f64
    }
}

struct Client {
    id: u32,
    rng: StreamRng,
}

fn draw_root(rng: &mut StreamRng, dist: &DistributionKind, no: u32) -> Result<ObjectId> {
    let id = match *dist {
        DistributionKind::Uniform => rng.gen_range(1..=no),
        DistributionKind::Constant(v) if (1..=no).contains(&v) => v,
        _ => {
            return Err(Error::Param(format!(
                "dist5 {dist} cannot pick a root among {no} objects"
            )))
        }
    };
    Ok(ObjectId::new(id).expect("root id >= 1"))
}

/// Runs `coldn` then `hotn` transactions per client.
///
/// Each client draws from its own random stream: type, root, direction, then
/// (for stochastic walks) the walk itself. Clients take turns one transaction
/// at a time against the shared store. After each transaction the policy is
/// told the transaction ended and may reorganize the store; that I/O is
/// logged as overhead on the same record.
pub fn run_protocol(
    db: &Database,
    storage: &mut Storage,
    params: &WorkloadParams,
    policy: &mut dyn ClusteringPolicy,
) -> Result<ExperimentLog> {
    params.validate()?;
    if db.is_empty() && params.coldn + params.hotn > 0 {
        return Err(Error::Run("the database has no objects to traverse".into()));
    }
    let no = db.len() as u32;
    let mut clients: Vec<Client> = (0..params.clientn)
        .map(|id| Client {
            id,
            rng: rng::stream(params.seed, rng::CLIENT_BASE + u64::from(id)),
        })
        .collect();

    let total = (params.coldn + params.hotn) * u64::from(params.clientn);
    let mut log = ExperimentLog {
        records: Vec::with_capacity(total as usize),
    };
    let mut seq = 0;
    for (phase, rounds) in [(Phase::Cold, params.coldn), (Phase::Hot, params.hotn)] {
        for _ in 0..rounds {
            for client in &mut clients {
                let rng = &mut client.rng;
                let kind = params.kind_for(rng.gen());
                let root = draw_root(rng, &params.dist5, no)?;
                let direction = if rng.gen::<f64>() < params.reverse_probability {
                    Direction::Reverse
                } else {
                    Direction::Forward
                };
                let depth = params.depth(kind);
                let steps = match kind {
                    TransactionKind::SetOriented => plan_set_oriented(db, root, depth, direction)?,
                    TransactionKind::Simple => plan_simple(db, root, depth, direction)?,
                    TransactionKind::Hierarchy => {
                        plan_hierarchy(db, root, depth, params.hierarchy_ref_type, direction)?
                    }
                    TransactionKind::Stochastic => plan_stochastic(db, root, depth, direction, rng)?,
                };
                let result = execute(&steps, kind, direction, storage, policy)?;
                policy.on_transaction_end();
                let reorganization = match policy.maybe_reorganize(db, storage)? {
                    Some(placement) => Some(storage.rewrite_placement(placement)?),
                    None => None,
                };
                log.records.push(TransactionRecord {
                    seq,
                    client: client.id,
                    phase,
                    kind,
                    direction,
                    root: root.get(),
                    objects: result.objects_accessed,
                    distinct: result.distinct_objects,
                    faults: result.page_faults,
                    sim_time: result.simulated_time,
                    reorganized: reorganization.is_some(),
                    overhead_reads: reorganization.map_or(0, |r| r.pages_read),
                    overhead_writes: reorganization.map_or(0, |r| r.pages_written),
                });
                seq += 1;
            }
        }
    }
    Ok(log)
}
