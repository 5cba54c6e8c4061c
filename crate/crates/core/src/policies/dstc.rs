//! Dynamic statistical clustering in five phases: observe link crossings over
//! a period, keep the significant ones, fold them into long-lived weights,
//! group strongly linked objects into clustering units, and lay those units
//! out contiguously on disk.

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{Database, ObjectId};
use crate::storage::{Placement, RewriteStats, Storage, StorageParams};

use super::union_find::UnionFind;
use super::ClusteringPolicy;

/// Crossing counts keyed by (source, target).
pub type PairCounts = HashMap<(ObjectId, ObjectId), u32>;
pub type PairWeights = HashMap<(ObjectId, ObjectId), f64>;

/// Consolidated weights below this are forgotten.
const FORGET_BELOW: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DstcParams {
    /// Transactions per observation period.
    pub observation_period: u64,
    /// Minimum crossings in a period for a pair to be kept.
    pub selection_threshold: u32,
    /// Share of the new period in the consolidated weight.
    pub consolidation_weight: f64,
    /// Minimum consolidated weight for a pair to bind a clustering unit.
    pub unit_link_threshold: f64,
    /// Periods between physical reorganizations.
    pub reorganize_trigger: u32,
}

impl Default for DstcParams {
    fn default() -> Self {
        Self {
            observation_period: 1000,
            selection_threshold: 2,
            consolidation_weight: 0.5,
            unit_link_threshold: 1.0,
            reorganize_trigger: 1,
        }
    }
}

impl DstcParams {
    pub fn validate(&self) -> Result<()> {
        if self.observation_period == 0 {
            return Err(Error::Param("dstc observation_period must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.consolidation_weight) {
            return Err(Error::Param(
                "dstc consolidation_weight must lie in [0, 1]".into(),
            ));
        }
        if !(0.0..).contains(&self.unit_link_threshold) {
            return Err(Error::Param("dstc unit_link_threshold must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DstcState {
    /// Crossings in the current period.
    pub observation: PairCounts,
    /// Weights carried across periods.
    pub consolidated: PairWeights,
    /// Current clustering units, disjoint, each in layout order.
    pub units: Vec<Vec<ObjectId>>,
}

/// Phase 1: count one crossing of `source -> target`.
pub fn dstc_observe(state: &mut DstcState, source: ObjectId, target: ObjectId) {
    *state.observation.entry((source, target)).or_insert(0) += 1;
}

/// Phase 2: keep pairs crossed at least `selection_threshold` times and clear
/// the observation matrix.
pub fn dstc_select(state: &mut DstcState, params: &DstcParams) -> PairCounts {
    let mut kept = std::mem::take(&mut state.observation);
    kept.retain(|_, count| *count >= params.selection_threshold);
    kept
}

/// Phase 3: `c <- (1 - w) c + w f` for every pair, where absent entries count
/// as zero.
pub fn dstc_consolidate(state: &mut DstcState, filtered: &PairCounts, params: &DstcParams) {
    let w = params.consolidation_weight;
    for weight in state.consolidated.values_mut() {
        *weight *= 1.0 - w;
    }
    for (pair, &count) in filtered {
        *state.consolidated.entry(*pair).or_insert(0.0) += w * f64::from(count);
    }
    state.consolidated.retain(|_, weight| *weight >= FORGET_BELOW);
}

/// Phase 4: greedy agglomeration of consolidated pairs into units.
///
/// Directions are merged, so the weight of `{a, b}` is `c(a,b) + c(b,a)`.
/// Pairs at or above `unit_link_threshold` are taken heaviest first (ties by
/// ids) and joined with union-find. Units come out in the order their heaviest
/// pair was seen; members are ordered by a breadth-first walk that starts at
/// that pair and visits neighbours heaviest first.
pub fn dstc_build_units(state: &DstcState, params: &DstcParams) -> Vec<Vec<ObjectId>> {
    let mut undirected: BTreeMap<(ObjectId, ObjectId), f64> = BTreeMap::new();
    for (&(a, b), &w) in &state.consolidated {
        if a == b {
            continue;
        }
        let key = if a < b { (a, b) } else { (b, a) };
        *undirected.entry(key).or_insert(0.0) += w;
    }
    let mut edges: Vec<(ObjectId, ObjectId, f64)> = undirected
        .into_iter()
        .filter(|&(_, w)| w >= params.unit_link_threshold && w > 0.0)
        .map(|((a, b), w)| (a, b, w))
        .collect();
    edges.sort_by(|x, y| y.2.total_cmp(&x.2).then((x.0, x.1).cmp(&(y.0, y.1))));

    let mut local: HashMap<ObjectId, usize> = HashMap::new();
    let mut members: Vec<ObjectId> = Vec::new();
    let mut index = |id: ObjectId, local: &mut HashMap<ObjectId, usize>| {
        *local.entry(id).or_insert_with(|| {
            members.push(id);
            members.len() - 1
        })
    };
    let pairs: Vec<(usize, usize, f64)> = edges
        .iter()
        .map(|&(a, b, w)| (index(a, &mut local), index(b, &mut local), w))
        .collect();

    let n = members.len();
    let mut uf = UnionFind::new(n);
    let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for &(a, b, w) in &pairs {
        uf.union(a, b);
        adjacency[a].push((b, w));
        adjacency[b].push((a, w));
    }
    for list in &mut adjacency {
        list.sort_by(|x, y| y.1.total_cmp(&x.1).then(members[x.0].cmp(&members[y.0])));
    }

    let mut seen_root = vec![false; n];
    let mut visited = vec![false; n];
    let mut units = Vec::new();
    for &(a, b, _) in &pairs {
        let root = uf.find(a);
        if seen_root[root] {
            continue;
        }
        seen_root[root] = true;
        let mut unit = Vec::new();
        let mut queue = VecDeque::from([a, b]);
        visited[a] = true;
        visited[b] = true;
        while let Some(x) = queue.pop_front() {
            unit.push(members[x]);
            for &(y, _) in &adjacency[x] {
                if !visited[y] {
                    visited[y] = true;
                    queue.push_back(y);
                }
            }
        }
        units.push(unit);
    }
    units
}

/// Phase 5 layout: units back to back in order, then every object outside a
/// unit in id order.
pub fn dstc_layout(
    units: &[Vec<ObjectId>],
    db: &Database,
    params: &StorageParams,
) -> Result<Placement> {
    let mut in_unit = vec![false; db.len()];
    for id in units.iter().flatten() {
        match in_unit.get_mut(id.index()) {
            Some(flag) if !*flag => *flag = true,
            Some(_) => {
                return Err(Error::Placement(format!("object {id} in two units")));
            }
            None => return Err(Error::UnknownObject(*id)),
        }
    }
    let rest = db
        .objects
        .iter()
        .map(|o| o.id)
        .filter(|id| !in_unit[id.index()]);
    Placement::pack(units.iter().flatten().copied().chain(rest), db, params)
}

/// Phase 5: lay out the current units and install the placement, charging
/// the move to overhead I/O.
pub fn dstc_reorganize(state: &DstcState, db: &Database, storage: &mut Storage) -> Result<RewriteStats> {
    let placement = dstc_layout(&state.units, db, storage.params())?;
    storage.rewrite_placement(placement)
}

/// The DSTC policy driven by a transaction counter.
#[derive(Clone, Debug)]
pub struct Dstc {
    params: DstcParams,
    state: DstcState,
    in_period: u64,
    periods_since_reorganization: u32,
    pending: bool,
}

impl Dstc {
    pub fn new(params: DstcParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            state: DstcState::default(),
            in_period: 0,
            periods_since_reorganization: 0,
            pending: false,
        })
    }

    pub fn state(&self) -> &DstcState {
        &self.state
    }

    fn end_period(&mut self) {
        let filtered = dstc_select(&mut self.state, &self.params);
        dstc_consolidate(&mut self.state, &filtered, &self.params);
        self.state.units = dstc_build_units(&self.state, &self.params);
        self.periods_since_reorganization += 1;
        if self.periods_since_reorganization >= self.params.reorganize_trigger {
            self.periods_since_reorganization = 0;
            self.pending = true;
        }
    }
}

impl ClusteringPolicy for Dstc {
    fn name(&self) -> &'static str {
        "dstc"
    }

    fn on_link_crossing(&mut self, source: ObjectId, _slot: u32, target: ObjectId) {
        dstc_observe(&mut self.state, source, target);
    }

    fn on_transaction_end(&mut self) {
        self.in_period += 1;
        if self.in_period == self.params.observation_period {
            self.in_period = 0;
            self.end_period();
        }
    }

    fn maybe_reorganize(&mut self, db: &Database, storage: &Storage) -> Result<Option<Placement>> {
        if !std::mem::take(&mut self.pending) || self.state.units.is_empty() {
            return Ok(None);
        }
        dstc_layout(&self.state.units, db, storage.params()).map(Some)
    }
}
