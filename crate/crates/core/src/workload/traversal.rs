//! Traversal planning and execution.
//!
//! A traversal is first planned as the exact sequence of object visits, which
//! depends only on the object graph (and, for stochastic walks, the random
//! stream). Execution then replays the plan against the store and reports each
//! crossed link to the clustering policy, so policies cannot change what a
//! transaction visits.

use std::collections::{HashSet, VecDeque};

use rand::Rng;

use crate::error::{Error, Result};
use crate::generator::{Database, ObjectId, RefType};
use crate::policies::ClusteringPolicy;
use crate::storage::{IoClass, Storage};

use super::{Direction, TransactionKind, TransactionResult};

/// One object visit and the link it was reached through.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Step {
    pub object: ObjectId,
    /// `(from, slot)`; `None` for the root.
    pub via: Option<(ObjectId, u32)>,
}

impl Step {
    fn root(object: ObjectId) -> Self {
        Step { object, via: None }
    }
}

/// Linked neighbours of `id` as `(slot, neighbour)`, in slot order going
/// forward and in reverse-reference order going backward. With `only`, keeps
/// links whose slot has that reference type.
fn neighbours(
    db: &Database,
    id: ObjectId,
    direction: Direction,
    only: Option<RefType>,
) -> impl Iterator<Item = (u32, ObjectId)> + '_ {
    let object = db.object(id);
    let tref = &db.class(object.class_id).tref;
    let forward = (direction == Direction::Forward)
        .then(|| {
            object
                .oref
                .iter()
                .enumerate()
                .filter(move |(slot, _)| only.is_none_or(|t| tref[*slot] == t))
                .filter_map(|(slot, target)| target.map(|t| (slot as u32, t)))
        })
        .into_iter()
        .flatten();
    let reverse = (direction == Direction::Reverse)
        .then(|| {
            object
                .backref
                .iter()
                .filter(move |b| only.is_none_or(|t| db.slot_type(b.source, b.slot as usize) == t))
                .map(|b| (b.slot, b.source))
        })
        .into_iter()
        .flatten();
    forward.chain(reverse)
}

fn check_root(db: &Database, root: ObjectId) -> Result<()> {
    db.get_object(root)
        .map(|_| ())
        .ok_or(Error::UnknownObject(root))
}

/// Breadth-first expansion up to `depth` hops. Every object taken off the
/// queue is visited, repeats included, but each object is expanded at most
/// once, at its shallowest occurrence.
pub fn plan_set_oriented(
    db: &Database,
    root: ObjectId,
    depth: u32,
    direction: Direction,
) -> Result<Vec<Step>> {
    check_root(db, root)?;
    let mut expanded = HashSet::new();
    let mut steps = Vec::new();
    let mut queue = VecDeque::from([(Step::root(root), 0u32)]);
    while let Some((step, level)) = queue.pop_front() {
        steps.push(step);
        if level < depth && expanded.insert(step.object) {
            for (slot, next) in neighbours(db, step.object, direction, None) {
                queue.push_back((
                    Step {
                        object: next,
                        via: Some((step.object, slot)),
                    },
                    level + 1,
                ));
            }
        }
    }
    Ok(steps)
}

fn plan_depth_first(
    db: &Database,
    root: ObjectId,
    depth: u32,
    direction: Direction,
    only: Option<RefType>,
) -> Result<Vec<Step>> {
    check_root(db, root)?;
    let mut steps = Vec::new();
    let mut stack = vec![(Step::root(root), 0u32)];
    let mut children = Vec::new();
    while let Some((step, level)) = stack.pop() {
        steps.push(step);
        if level < depth {
            children.clear();
            children.extend(neighbours(db, step.object, direction, only));
            for &(slot, next) in children.iter().rev() {
                stack.push((
                    Step {
                        object: next,
                        via: Some((step.object, slot)),
                    },
                    level + 1,
                ));
            }
        }
    }
    Ok(steps)
}

/// Depth-first over every reference up to `depth` hops, without a visited
/// set: an object reached along several paths is visited once per path.
pub fn plan_simple(
    db: &Database,
    root: ObjectId,
    depth: u32,
    direction: Direction,
) -> Result<Vec<Step>> {
    plan_depth_first(db, root, depth, direction, None)
}

/// Like [`plan_simple`], following only references of type `ref_type`.
pub fn plan_hierarchy(
    db: &Database,
    root: ObjectId,
    depth: u32,
    ref_type: RefType,
    direction: Direction,
) -> Result<Vec<Step>> {
    plan_depth_first(db, root, depth, direction, Some(ref_type))
}

/// Picks slot `k` (0-based) with probability `1 / 2^(k+1)` among `slots`
/// candidates. The remaining `1 / 2^slots` is `None`, meaning stop.
pub fn choose_stochastic_slot<R: Rng + ?Sized>(rng: &mut R, slots: usize) -> Option<usize> {
    let u: f64 = rng.gen();
    let mut mass = 0.5;
    let mut cumulative = 0.0;
    for k in 0..slots {
        cumulative += mass;
        if u < cumulative {
            return Some(k);
        }
        mass *= 0.5;
    }
    None
}

/// Random walk of at most `depth` hops. Going forward the candidates are all
/// reference slots, NULL ones included (choosing one ends the walk); going
/// backward they are the reverse references.
pub fn plan_stochastic<R: Rng + ?Sized>(
    db: &Database,
    root: ObjectId,
    depth: u32,
    direction: Direction,
    rng: &mut R,
) -> Result<Vec<Step>> {
    check_root(db, root)?;
    let mut steps = vec![Step::root(root)];
    let mut current = root;
    for _ in 0..depth {
        let object = db.object(current);
        let next = match direction {
            Direction::Forward => choose_stochastic_slot(rng, object.oref.len())
                .and_then(|k| object.oref[k].map(|t| (k as u32, t))),
            Direction::Reverse => choose_stochastic_slot(rng, object.backref.len()).map(|k| {
                let b = object.backref[k];
                (b.slot, b.source)
            }),
        };
        let Some((slot, target)) = next else {
            break;
        };
        steps.push(Step {
            object: target,
            via: Some((current, slot)),
        });
        current = target;
    }
    Ok(steps)
}

/// Replays planned visits against the store, charging transaction I/O and
/// reporting every crossed link to `policy`.
pub fn execute(
    steps: &[Step],
    kind: TransactionKind,
    direction: Direction,
    storage: &mut Storage,
    policy: &mut dyn ClusteringPolicy,
) -> Result<TransactionResult> {
    let root = steps
        .first()
        .map(|s| s.object)
        .ok_or_else(|| Error::Run("empty traversal".into()))?;
    let mut faults = 0u64;
    let mut distinct = HashSet::with_capacity(steps.len());
    for step in steps {
        faults += u64::from(storage.access_object(step.object, IoClass::Transaction)?.pages_read);
        distinct.insert(step.object);
        if let Some((from, slot)) = step.via {
            policy.on_link_crossing(from, slot, step.object);
        }
    }
    let params = storage.params();
    let objects = steps.len() as u64;
    Ok(TransactionResult {
        kind,
        root,
        direction,
        objects_accessed: objects,
        distinct_objects: distinct.len() as u64,
        page_faults: faults,
        simulated_time: faults as f64 * params.io_cost + objects as f64 * params.cpu_cost,
    })
}

pub fn set_oriented_access(
    db: &Database,
    storage: &mut Storage,
    policy: &mut dyn ClusteringPolicy,
    root: ObjectId,
    depth: u32,
    direction: Direction,
) -> Result<TransactionResult> {
    let steps = plan_set_oriented(db, root, depth, direction)?;
    execute(&steps, TransactionKind::SetOriented, direction, storage, policy)
}

pub fn simple_traversal(
    db: &Database,
    storage: &mut Storage,
    policy: &mut dyn ClusteringPolicy,
    root: ObjectId,
    depth: u32,
    direction: Direction,
) -> Result<TransactionResult> {
    let steps = plan_simple(db, root, depth, direction)?;
    execute(&steps, TransactionKind::Simple, direction, storage, policy)
}

pub fn hierarchy_traversal(
    db: &Database,
    storage: &mut Storage,
    policy: &mut dyn ClusteringPolicy,
    root: ObjectId,
    depth: u32,
    ref_type: RefType,
    direction: Direction,
) -> Result<TransactionResult> {
    let steps = plan_hierarchy(db, root, depth, ref_type, direction)?;
    execute(&steps, TransactionKind::Hierarchy, direction, storage, policy)
}

pub fn stochastic_traversal<R: Rng + ?Sized>(
    db: &Database,
    storage: &mut Storage,
    policy: &mut dyn ClusteringPolicy,
    root: ObjectId,
    depth: u32,
    direction: Direction,
    rng: &mut R,
) -> Result<TransactionResult> {
    let steps = plan_stochastic(db, root, depth, direction, rng)?;
    execute(&steps, TransactionKind::Stochastic, direction, storage, policy)
}
