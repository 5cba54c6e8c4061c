//! Independent re-implementations used as test oracles. Nothing here calls
//! the library's traversal, packing or DSTC code.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use ocb::generator::{
    ClassId, Database, DistributionKind, GeneratorParams, ObjectId, PerClass, RefType,
};
use ocb::workload::Direction;
use rand::Rng;

pub fn oid(i: u32) -> ObjectId {
    ObjectId::new(i).unwrap()
}

/// Random small generator settings (at most 50 objects).
pub fn tiny_params<R: Rng>(rng: &mut R, seed: u64) -> GeneratorParams {
    let nc = rng.gen_range(1..=5);
    let no = rng.gen_range(1..=50);
    let nreft = rng.gen_range(2..=4);
    GeneratorParams {
        nc,
        maxnref: PerClass::All(rng.gen_range(1..=4)),
        basesize: PerClass::All(rng.gen_range(10..=200)),
        no,
        nreft,
        infclass: 1,
        supclass: nc,
        infref: 1,
        supref: no,
        seed,
        ..Default::default()
    }
}

/// 1-based position of every object in its class iterator, by object index.
pub fn iterator_positions(db: &Database) -> Vec<u32> {
    let mut pos = vec![0; db.len()];
    for class in &db.classes {
        for (i, o) in class.iterator.iter().enumerate() {
            pos[o.index()] = i as u32 + 1;
        }
    }
    pos
}

/// Links in generation order: class by class, iterator order, slot order.
pub fn links_in_generation_order(db: &Database) -> Vec<(ObjectId, u32, ObjectId)> {
    let mut out = Vec::new();
    for class in &db.classes {
        for &source in &class.iterator {
            for (slot, target) in db.object(source).oref.iter().enumerate() {
                if let Some(t) = target {
                    out.push((source, slot as u32, *t));
                }
            }
        }
    }
    out
}

/// Reverse adjacency rebuilt from forward links: `target -> [(slot, source)]`.
pub fn reverse_adjacency(db: &Database) -> HashMap<ObjectId, Vec<(u32, ObjectId)>> {
    let mut rev: HashMap<ObjectId, Vec<(u32, ObjectId)>> = HashMap::new();
    for (source, slot, target) in links_in_generation_order(db) {
        rev.entry(target).or_default().push((slot, source));
    }
    rev
}

/// Every class with an inheritance path down to `class`, excluding itself.
/// Two inheritance types may close a cycle between them, so this walks with
/// a visited set.
fn ancestors(class: usize, parents: &[Vec<usize>]) -> HashSet<usize> {
    let mut seen = HashSet::new();
    let mut stack = parents[class].clone();
    while let Some(p) = stack.pop() {
        if p != class && seen.insert(p) {
            stack.extend(&parents[p]);
        }
    }
    seen
}

fn is_dag(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut indegree = vec![0usize; n];
    let mut out = vec![Vec::new(); n];
    for &(a, b) in edges {
        indegree[b] += 1;
        out[a].push(b);
    }
    let mut ready: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut removed = 0;
    while let Some(x) = ready.pop() {
        removed += 1;
        for &y in &out[x] {
            indegree[y] -= 1;
            if indegree[y] == 0 {
                ready.push(y);
            }
        }
    }
    removed == n
}

/// Checks every structural invariant of a generated database. Returns the
/// first violation found.
pub fn check_database(db: &Database) -> Result<(), String> {
    let p = &db.params;
    let nc = p.nc as usize;
    if db.classes.len() != nc {
        return Err(format!("{} classes, expected {nc}", db.classes.len()));
    }
    if db.objects.len() != p.no as usize {
        return Err(format!("{} objects, expected {}", db.objects.len(), p.no));
    }

    // Schema: slot counts, type and class bounds.
    for (i, c) in db.classes.iter().enumerate() {
        let n = p.maxnref(c.id) as usize;
        if c.id.index() != i || c.tref.len() != n || c.cref.len() != n {
            return Err(format!("class {} has inconsistent slot vectors", c.id));
        }
        for (k, (&t, target)) in c.tref.iter().zip(&c.cref).enumerate() {
            if t < 1 || t > p.nreft {
                return Err(format!("class {} slot {k}: type {t} out of range", c.id));
            }
            if let Some(target) = target {
                let v = target.get();
                if v < p.infclass.max(1) || v > p.supclass || v as usize > nc {
                    return Err(format!("class {} slot {k}: target {v} out of bounds", c.id));
                }
            }
        }
    }

    // One graph per acyclic type must be a DAG.
    for &t in &p.acyclic_types {
        let edges: Vec<(usize, usize)> = db
            .classes
            .iter()
            .flat_map(|c| {
                c.tref
                    .iter()
                    .zip(&c.cref)
                    .filter(move |(&tt, _)| tt == t)
                    .filter_map(move |(_, target)| target.map(|d| (c.id.index(), d.index())))
            })
            .collect();
        if !is_dag(nc, &edges) {
            return Err(format!("type {t} graph has a cycle"));
        }
    }

    // Size: own base size plus every inheritance ancestor's base size.
    let mut parents = vec![Vec::new(); nc];
    for c in &db.classes {
        for (&t, target) in c.tref.iter().zip(&c.cref) {
            if let (true, Some(d)) = (p.inheritance_types.contains(&t), target) {
                if !parents[d.index()].contains(&c.id.index()) {
                    parents[d.index()].push(c.id.index());
                }
            }
        }
    }
    for c in &db.classes {
        let expected = c.basesize
            + ancestors(c.id.index(), &parents)
                .iter()
                .map(|&a| db.classes[a].basesize)
                .sum::<u32>();
        if c.instance_size != expected {
            return Err(format!(
                "class {}: instance size {} expected {expected}",
                c.id, c.instance_size
            ));
        }
        if c.basesize != p.basesize(c.id) {
            return Err(format!("class {}: wrong base size", c.id));
        }
    }

    // Iterators hold exactly their class's objects, in id order.
    let mut by_class: BTreeMap<ClassId, Vec<ObjectId>> = BTreeMap::new();
    for (i, o) in db.objects.iter().enumerate() {
        if o.id.index() != i {
            return Err(format!("object at index {i} has id {}", o.id));
        }
        by_class.entry(o.class_id).or_default().push(o.id);
    }
    for c in &db.classes {
        let expected = by_class.remove(&c.id).unwrap_or_default();
        if c.iterator != expected {
            return Err(format!("class {} iterator does not match its objects", c.id));
        }
    }

    // Object references.
    let positions = iterator_positions(db);
    for o in &db.objects {
        let class = db.class(o.class_id);
        if o.size != class.instance_size {
            return Err(format!("object {}: size {} != class size", o.id, o.size));
        }
        if o.oref.len() != class.cref.len() {
            return Err(format!("object {}: wrong slot count", o.id));
        }
        for (k, (target, cref)) in o.oref.iter().zip(&class.cref).enumerate() {
            let Some(cref) = cref else {
                if target.is_some() {
                    return Err(format!("object {} slot {k}: link without class ref", o.id));
                }
                continue;
            };
            let dest = db.class(*cref);
            let len = dest.iterator.len() as u32;
            let lo = p.infref.max(1);
            let hi = p.supref.min(len);
            let Some(target) = target else {
                let may_be_null = len == 0
                    || lo > hi
                    || matches!(p.dist4, DistributionKind::Constant(v) if v > len);
                if !may_be_null {
                    return Err(format!("object {} slot {k}: unexpected NULL", o.id));
                }
                continue;
            };
            if db.object(*target).class_id != *cref {
                return Err(format!("object {} slot {k}: target in wrong class", o.id));
            }
            let pos = positions[target.index()];
            let in_interval = (lo..=hi).contains(&pos);
            let ok = match p.dist4 {
                DistributionKind::Uniform => in_interval,
                DistributionKind::Constant(v) => pos == v,
                DistributionKind::Special { refzone, .. } => {
                    let center = positions[o.id.index()].min(len);
                    let zone = center.saturating_sub(refzone).max(1)..=(center + refzone).min(len);
                    in_interval || zone.contains(&pos)
                }
            };
            if !ok {
                return Err(format!("object {} slot {k}: position {pos} out of bounds", o.id));
            }
        }
    }

    // Reverse references mirror forward links exactly, in generation order.
    let rev = reverse_adjacency(db);
    for o in &db.objects {
        let mirrored: Vec<(u32, ObjectId)> = o.backref.iter().map(|b| (b.slot, b.source)).collect();
        if mirrored != rev.get(&o.id).cloned().unwrap_or_default() {
            return Err(format!("object {}: reverse references do not mirror links", o.id));
        }
    }
    Ok(())
}

fn neighbours(
    db: &Database,
    rev: &HashMap<ObjectId, Vec<(u32, ObjectId)>>,
    id: ObjectId,
    direction: Direction,
    only: Option<RefType>,
) -> Vec<(u32, ObjectId)> {
    let all: Vec<(u32, ObjectId, ObjectId)> = match direction {
        Direction::Forward => db
            .object(id)
            .oref
            .iter()
            .enumerate()
            .filter_map(|(k, t)| t.map(|t| (k as u32, t, id)))
            .collect(),
        Direction::Reverse => rev
            .get(&id)
            .into_iter()
            .flatten()
            .map(|&(k, s)| (k, s, s))
            .collect(),
    };
    all.into_iter()
        .filter(|&(k, _, owner)| {
            only.is_none_or(|t| db.class(db.object(owner).class_id).tref[k as usize] == t)
        })
        .map(|(k, n, _)| (k, n))
        .collect()
}

/// A visit: object plus `(from, slot)` it came through.
pub type Visit = (ObjectId, Option<(ObjectId, u32)>);

#[allow(clippy::too_many_arguments)]
fn dfs(
    db: &Database,
    rev: &HashMap<ObjectId, Vec<(u32, ObjectId)>>,
    visit: Visit,
    level: u32,
    depth: u32,
    direction: Direction,
    only: Option<RefType>,
    out: &mut Vec<Visit>,
) {
    out.push(visit);
    if level == depth {
        return;
    }
    for (slot, next) in neighbours(db, rev, visit.0, direction, only) {
        dfs(db, rev, (next, Some((visit.0, slot))), level + 1, depth, direction, only, out);
    }
}

/// Recursive depth-first walk with no visited set.
pub fn oracle_depth_first(
    db: &Database,
    root: ObjectId,
    depth: u32,
    direction: Direction,
    only: Option<RefType>,
) -> Vec<Visit> {
    let rev = reverse_adjacency(db);
    let mut out = Vec::new();
    dfs(db, &rev, (root, None), 0, depth, direction, only, &mut out);
    out
}

/// Level-by-level expansion: each level lists every arrival; an object's
/// children are generated only at its first arrival.
pub fn oracle_set_oriented(db: &Database, root: ObjectId, depth: u32, direction: Direction) -> Vec<Visit> {
    let rev = reverse_adjacency(db);
    let mut expanded = HashSet::new();
    let mut level: Vec<Visit> = vec![(root, None)];
    let mut out = Vec::new();
    for l in 0..=depth {
        let mut next = Vec::new();
        for &(o, via) in &level {
            out.push((o, via));
            if l < depth && expanded.insert(o) {
                for (slot, n) in neighbours(db, &rev, o, direction, None) {
                    next.push((n, Some((o, slot))));
                }
            }
        }
        level = next;
    }
    out
}

/// Slot index for a uniform draw `u`: slot `k` covers
/// `[1 - 2^-k, 1 - 2^-(k+1))`.
pub fn geometric_slot(u: f64, slots: usize) -> Option<usize> {
    let k = (-(1.0 - u).log2()).floor() as usize;
    (k < slots).then_some(k)
}

/// Random walk replayed from the same uniform draws.
pub fn oracle_stochastic<R: Rng>(
    db: &Database,
    root: ObjectId,
    depth: u32,
    direction: Direction,
    rng: &mut R,
) -> Vec<Visit> {
    let rev = reverse_adjacency(db);
    let mut out = vec![(root, None)];
    let mut current = root;
    for _ in 0..depth {
        let candidates: Vec<(u32, Option<ObjectId>)> = match direction {
            Direction::Forward => db
                .object(current)
                .oref
                .iter()
                .enumerate()
                .map(|(k, t)| (k as u32, *t))
                .collect(),
            Direction::Reverse => rev
                .get(&current)
                .into_iter()
                .flatten()
                .map(|&(k, s)| (k, Some(s)))
                .collect(),
        };
        let u: f64 = rng.gen();
        let Some((slot, Some(next))) = geometric_slot(u, candidates.len()).map(|k| candidates[k]) else {
            break;
        };
        out.push((next, Some((current, slot))));
        current = next;
    }
    out
}

/// Next-fit packing of `sizes` in order. Returns `(first page, page count)`
/// per object and the total number of pages.
pub fn oracle_pack(sizes: &[u32], page_size: u32) -> (Vec<(u32, u32)>, u32) {
    let mut pages: Vec<u32> = Vec::new(); // bytes used per page
    let mut out = Vec::new();
    let mut current_open = false;
    for &s in sizes {
        if s > page_size {
            let first = pages.len() as u32;
            let run = s.div_ceil(page_size);
            for _ in 0..run {
                pages.push(page_size);
            }
            out.push((first, run));
            current_open = false;
        } else {
            if !current_open || pages.last().unwrap() + s > page_size {
                pages.push(0);
                current_open = true;
            }
            *pages.last_mut().unwrap() += s;
            out.push((pages.len() as u32 - 1, 1));
        }
    }
    let n = pages.len() as u32;
    (out, n)
}

/// LRU as a plain most-recent-last list.
pub struct NaiveLru {
    pub capacity: usize,
    pub pages: Vec<u32>,
}

impl NaiveLru {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            pages: Vec::new(),
        }
    }

    /// Returns true on a hit.
    pub fn touch(&mut self, page: u32) -> bool {
        let hit = if let Some(i) = self.pages.iter().position(|&p| p == page) {
            self.pages.remove(i);
            true
        } else {
            if self.pages.len() == self.capacity {
                self.pages.remove(0);
            }
            false
        };
        self.pages.push(page);
        hit
    }

    pub fn invalidate(&mut self, page: u32) {
        self.pages.retain(|&p| p != page);
    }
}

/// Object-level view of a visit list.
pub fn objects(visits: &[Visit]) -> Vec<ObjectId> {
    visits.iter().map(|v| v.0).collect()
}

/// Breadth-first visit sets per level from `root`, used for reachability.
pub fn within_hops(db: &Database, root: ObjectId, depth: u32, direction: Direction) -> HashMap<ObjectId, u32> {
    let rev = reverse_adjacency(db);
    let mut dist = HashMap::from([(root, 0)]);
    let mut queue = VecDeque::from([root]);
    while let Some(o) = queue.pop_front() {
        let d = dist[&o];
        if d == depth {
            continue;
        }
        for (_, n) in neighbours(db, &rev, o, direction, None) {
            if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(n) {
                e.insert(d + 1);
                queue.push_back(n);
            }
        }
    }
    dist
}
