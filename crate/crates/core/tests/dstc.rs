mod common;

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use common::oid;
use ocb::generator::{Database, GeneratorParams, ObjectId, PerClass};
use ocb::policies::{
    dstc_build_units, dstc_consolidate, dstc_layout, dstc_select, ClusteringPolicy, Dstc,
    DstcParams, DstcState, NoClustering,
};
use ocb::storage::{Storage, StorageParams};
use ocb::workload::{
    plan_hierarchy, plan_set_oriented, plan_simple, run_protocol, TransactionKind, WorkloadParams,
};
use proptest::prelude::*;

fn small_db(seed: u64) -> Database {
    Database::generate(&GeneratorParams {
        nc: 5,
        supclass: 5,
        no: 500,
        supref: 500,
        maxnref: PerClass::All(4),
        seed,
        ..Default::default()
    })
    .unwrap()
}

fn no_stochastic(coldn: u64, hotn: u64, seed: u64) -> WorkloadParams {
    WorkloadParams {
        coldn,
        hotn,
        pset: 1.0 / 3.0,
        psimple: 1.0 / 3.0,
        phier: 1.0 / 3.0,
        pstoch: 0.0,
        seed,
        ..Default::default()
    }
}

#[test]
fn observation_matches_recount_from_log() {
    let db = small_db(1);
    let params = no_stochastic(0, 60, 9);
    let mut storage = Storage::place_sequential(&db, StorageParams::default()).unwrap();
    let mut policy = Dstc::new(DstcParams {
        observation_period: 1_000_000,
        ..Default::default()
    })
    .unwrap();
    let log = run_protocol(&db, &mut storage, &params, &mut policy).unwrap();

    let mut expected: HashMap<(ObjectId, ObjectId), u32> = HashMap::new();
    for r in &log.records {
        let root = oid(r.root);
        let steps = match r.kind {
            TransactionKind::SetOriented => plan_set_oriented(&db, root, params.setdepth, r.direction),
            TransactionKind::Simple => plan_simple(&db, root, params.simdepth, r.direction),
            TransactionKind::Hierarchy => {
                plan_hierarchy(&db, root, params.hiedepth, params.hierarchy_ref_type, r.direction)
            }
            TransactionKind::Stochastic => unreachable!(),
        }
        .unwrap();
        assert_eq!(steps.len() as u64, r.objects);
        for s in steps {
            if let Some((from, _)) = s.via {
                *expected.entry((from, s.object)).or_insert(0) += 1;
            }
        }
    }
    assert_eq!(policy.state().observation, expected);
}

#[test]
fn policy_never_changes_what_transactions_visit() {
    let db = small_db(2);
    let params = WorkloadParams {
        coldn: 100,
        hotn: 300,
        clientn: 2,
        reverse_probability: 0.3,
        seed: 4,
        ..Default::default()
    };
    let sp = StorageParams {
        buffer_pages: 4,
        ..Default::default()
    };
    let mut a = Storage::place_sequential(&db, sp.clone()).unwrap();
    let none = run_protocol(&db, &mut a, &params, &mut NoClustering).unwrap();
    let mut b = Storage::place_sequential(&db, sp).unwrap();
    let mut dstc = Dstc::new(DstcParams {
        observation_period: 50,
        ..Default::default()
    })
    .unwrap();
    let clustered = run_protocol(&db, &mut b, &params, &mut dstc).unwrap();
    assert!(clustered.records.iter().any(|r| r.reorganized));
    assert_eq!(none.records.len(), clustered.records.len());
    for (x, y) in none.records.iter().zip(&clustered.records) {
        assert_eq!(
            (x.seq, x.client, x.phase, x.kind, x.direction, x.root, x.objects, x.distinct),
            (y.seq, y.client, y.phase, y.kind, y.direction, y.root, y.objects, y.distinct)
        );
    }
}

#[test]
fn units_are_laid_out_first_and_contiguously() {
    let db = small_db(3);
    let units = vec![vec![oid(400), oid(3), oid(250)], vec![oid(17), oid(16)]];
    let p = StorageParams::default();
    let placement = dstc_layout(&units, &db, &p).unwrap();
    let mut order: Vec<(u32, u32, ObjectId)> = db
        .objects
        .iter()
        .map(|o| {
            let l = placement.location(o.id).unwrap();
            (l.page, l.offset, o.id)
        })
        .collect();
    order.sort();
    let ids: Vec<ObjectId> = order.iter().map(|x| x.2).collect();
    assert_eq!(&ids[..5], &[oid(400), oid(3), oid(250), oid(17), oid(16)]);
    let rest: Vec<ObjectId> = ids[5..].to_vec();
    let mut sorted = rest.clone();
    sorted.sort();
    assert_eq!(rest, sorted);
    assert!(dstc_layout(&[vec![oid(1)], vec![oid(1)]], &db, &p).is_err());
}

/// Components of the thresholded undirected graph, found by plain BFS.
fn components(weights: &HashMap<(ObjectId, ObjectId), f64>, threshold: f64) -> BTreeSet<BTreeSet<ObjectId>> {
    let mut undirected: HashMap<(ObjectId, ObjectId), f64> = HashMap::new();
    for (&(a, b), &w) in weights {
        if a != b {
            *undirected.entry((a.min(b), a.max(b))).or_insert(0.0) += w;
        }
    }
    let mut adj: HashMap<ObjectId, Vec<ObjectId>> = HashMap::new();
    for (&(a, b), &w) in &undirected {
        if w >= threshold && w > 0.0 {
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
    }
    let mut seen = HashSet::new();
    let mut out = BTreeSet::new();
    for &start in adj.keys() {
        if !seen.insert(start) {
            continue;
        }
        let mut comp = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(x) = queue.pop_front() {
            for &y in &adj[&x] {
                if seen.insert(y) {
                    comp.insert(y);
                    queue.push_back(y);
                }
            }
        }
        out.insert(comp);
    }
    out
}

fn pair_strategy() -> impl Strategy<Value = Vec<((u32, u32), u32)>> {
    prop::collection::vec(((1u32..40, 1u32..40), 0u32..10), 0..80)
}

proptest! {
    #[test]
    fn selection_keeps_exactly_frequent_pairs(pairs in pair_strategy(), threshold in 0u32..6) {
        let mut state = DstcState::default();
        let mut expected = HashMap::new();
        for ((a, b), c) in pairs {
            state.observation.insert((oid(a), oid(b)), c);
            expected.insert((oid(a), oid(b)), c);
        }
        expected.retain(|_, c| *c >= threshold);
        let params = DstcParams { selection_threshold: threshold, ..Default::default() };
        let kept = dstc_select(&mut state, &params);
        prop_assert_eq!(kept, expected);
        prop_assert!(state.observation.is_empty());
    }

    #[test]
    fn consolidation_has_closed_form(f in 1u32..100, w in 0.01f64..1.0, periods in 1usize..30, idle in 0usize..10) {
        let params = DstcParams { consolidation_weight: w, ..Default::default() };
        let pair = (oid(1), oid(2));
        let filtered = HashMap::from([(pair, f)]);
        let mut state = DstcState::default();
        for _ in 0..periods {
            dstc_consolidate(&mut state, &filtered, &params);
        }
        for _ in 0..idle {
            dstc_consolidate(&mut state, &HashMap::new(), &params);
        }
        let expected = f64::from(f) * (1.0 - (1.0 - w).powi(periods as i32)) * (1.0 - w).powi(idle as i32);
        let got = state.consolidated.get(&pair).copied().unwrap_or(0.0);
        if expected >= 1e-6 {
            prop_assert!((got - expected).abs() <= 1e-9 * expected.max(1.0), "{} vs {}", got, expected);
        }
    }

    #[test]
    fn units_are_the_connected_components(pairs in pair_strategy(), threshold in 0.5f64..8.0) {
        let mut state = DstcState::default();
        for ((a, b), c) in pairs {
            *state.consolidated.entry((oid(a), oid(b))).or_insert(0.0) += f64::from(c);
        }
        let params = DstcParams { unit_link_threshold: threshold, ..Default::default() };
        let units = dstc_build_units(&state, &params);
        let mut all = HashSet::new();
        for u in &units {
            prop_assert!(u.len() >= 2);
            for id in u {
                prop_assert!(all.insert(*id), "object in two units");
            }
        }
        let got: BTreeSet<BTreeSet<ObjectId>> = units.iter().map(|u| u.iter().copied().collect()).collect();
        prop_assert_eq!(got, components(&state.consolidated, threshold));
        prop_assert_eq!(dstc_build_units(&state, &params), units);
    }
}

#[test]
fn reorganization_overhead_is_logged_once_per_period() {
    let db = small_db(5);
    let params = no_stochastic(200, 400, 1);
    let mut storage = Storage::place_sequential(&db, StorageParams::default()).unwrap();
    let mut policy = Dstc::new(DstcParams {
        observation_period: 100,
        ..Default::default()
    })
    .unwrap();
    let log = run_protocol(&db, &mut storage, &params, &mut policy).unwrap();
    for r in &log.records {
        if r.reorganized {
            assert_eq!((r.seq + 1) % 100, 0);
        } else {
            assert_eq!((r.overhead_reads, r.overhead_writes), (0, 0));
        }
    }
    let reads: u64 = log.records.iter().map(|r| r.overhead_reads).sum();
    assert_eq!(reads, storage.counters().overhead_reads);
    assert_eq!(policy.name(), "dstc");
}
