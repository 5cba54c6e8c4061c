mod common;

use std::collections::BTreeSet;

use common::{oid, oracle_pack, NaiveLru};
use ocb::generator::{ClassId, Database, GeneratorParams, ObjectInstance};
use ocb::storage::{IoClass, LruBuffer, Oversize, Placement, Storage, StorageParams};
use proptest::prelude::*;

fn sized(sizes: &[u32]) -> Database {
    Database {
        params: GeneratorParams::default(),
        classes: Vec::new(),
        objects: sizes
            .iter()
            .enumerate()
            .map(|(i, &size)| ObjectInstance {
                id: oid(i as u32 + 1),
                class_id: ClassId::new(1).unwrap(),
                oref: Vec::new(),
                backref: Vec::new(),
                size,
            })
            .collect(),
        report: Default::default(),
    }
}

fn params(page_size: u32, buffer_pages: usize) -> StorageParams {
    StorageParams {
        page_size,
        buffer_pages,
        ..Default::default()
    }
}

#[test]
fn default_database_pages_match_oracle() {
    let db = Database::generate(&GeneratorParams {
        seed: 2,
        ..Default::default()
    })
    .unwrap();
    let sizes: Vec<u32> = db.objects.iter().map(|o| o.size).collect();
    let (slots, pages) = oracle_pack(&sizes, 4096);
    let placement = Placement::sequential(&db, &StorageParams::default()).unwrap();
    assert_eq!(placement.page_count(), pages);
    for (o, (page, run)) in db.objects.iter().zip(slots) {
        let loc = placement.location(o.id).unwrap();
        assert_eq!((loc.page, loc.pages), (page, run));
    }
}

#[test]
fn cyclic_access_within_capacity_faults_once() {
    let k = 9;
    let db = sized(&vec![4096; k]);
    let mut s = Storage::place_sequential(&db, params(4096, k)).unwrap();
    for round in 0..5 {
        for i in 1..=k as u32 {
            let a = s.access_object(oid(i), IoClass::Transaction).unwrap();
            assert_eq!(a.page_fault, round == 0);
        }
    }
    assert_eq!(s.counters().transaction_reads, k as u64);
}

#[test]
fn cyclic_access_beyond_capacity_always_faults() {
    let db = sized(&[4096; 4]);
    let mut s = Storage::place_sequential(&db, params(4096, 3)).unwrap();
    for _ in 0..10 {
        for i in 1..=4 {
            assert!(s.access_object(oid(i), IoClass::Transaction).unwrap().page_fault);
        }
    }
}

#[test]
fn reject_mode_refuses_oversize_objects() {
    let db = sized(&[100, 5000]);
    let p = StorageParams {
        oversize: Oversize::Reject,
        ..params(4096, 4)
    };
    assert!(Placement::sequential(&db, &p).is_err());
    let run = Placement::sequential(&db, &params(4096, 4)).unwrap();
    assert_eq!(run.location(oid(2)).unwrap().pages, 2);
    assert_eq!(run.page_count(), 3);
}

proptest! {
    #[test]
    fn packing_matches_oracle(sizes in prop::collection::vec(1u32..10_000, 0..200), page in 512u32..8192) {
        let db = sized(&sizes);
        let placement = Placement::sequential(&db, &params(page, 4)).unwrap();
        let (slots, pages) = oracle_pack(&sizes, page);
        prop_assert_eq!(placement.page_count(), pages);
        for (i, (p, run)) in slots.into_iter().enumerate() {
            let loc = placement.location(oid(i as u32 + 1)).unwrap();
            prop_assert_eq!((loc.page, loc.pages), (p, run));
        }
        // No page holds more bytes than fit, oversize runs aside.
        for residents in placement.residents() {
            let bytes: u32 = residents.iter().map(|id| sizes[id.index()]).sum();
            prop_assert!(residents.len() == 1 || bytes <= page);
        }
    }

    #[test]
    fn lru_matches_naive_list(cap in 1usize..8, ops in prop::collection::vec((0u32..12, any::<bool>()), 0..300)) {
        let mut lru = LruBuffer::new(cap);
        let mut naive = NaiveLru::new(cap);
        for (page, drop) in ops {
            if drop {
                lru.invalidate(page);
                naive.invalidate(page);
            } else {
                prop_assert_eq!(lru.touch(page), naive.touch(page));
            }
            prop_assert!(lru.len() <= cap);
            prop_assert_eq!(lru.len(), naive.pages.len());
            for p in 0..12 {
                prop_assert_eq!(lru.contains(p), naive.pages.contains(&p));
            }
        }
    }

    #[test]
    fn rewrite_charges_exactly_the_move_plan(
        sizes in prop::collection::vec(1u32..3000, 1..120),
        swaps in prop::collection::vec((any::<prop::sample::Index>(), any::<prop::sample::Index>()), 0..20),
    ) {
        let db = sized(&sizes);
        let p = params(4096, 4);
        let mut order: Vec<_> = db.objects.iter().map(|o| o.id).collect();
        for (a, b) in swaps {
            let (i, j) = (a.index(order.len()), b.index(order.len()));
            order.swap(i, j);
        }
        let old = Placement::sequential(&db, &p).unwrap();
        let new = Placement::pack(order, &db, &p).unwrap();

        let mut reads = BTreeSet::new();
        let mut writes = BTreeSet::new();
        let mut moved = 0;
        for o in &db.objects {
            let (a, b) = (old.location(o.id).unwrap(), new.location(o.id).unwrap());
            if a != b {
                moved += 1;
                reads.extend(a.page..a.page + a.pages);
                writes.extend(b.page..b.page + b.pages);
            }
        }

        let mut s = Storage::new(old, p).unwrap();
        for o in &db.objects {
            s.access_object(o.id, IoClass::Transaction).unwrap();
        }
        let before = s.counters();
        let stats = s.rewrite_placement(new).unwrap();
        prop_assert_eq!(stats.objects_moved, moved);
        prop_assert_eq!(stats.pages_read, reads.len() as u64);
        prop_assert_eq!(stats.pages_written, writes.len() as u64);
        let after = s.counters();
        prop_assert_eq!(after.transaction_reads, before.transaction_reads);
        prop_assert_eq!(after.accessed_objects, before.accessed_objects);
        prop_assert_eq!(after.overhead_reads - before.overhead_reads, reads.len() as u64);
        prop_assert_eq!(after.overhead_writes - before.overhead_writes, writes.len() as u64);
        for page in reads.iter().chain(&writes) {
            prop_assert!(!s.buffer().contains(*page));
        }
    }

    #[test]
    fn simulated_time_follows_counters(accesses in prop::collection::vec(1u32..=40, 0..200), io in 0.1f64..5.0, cpu in 0.0f64..1.0) {
        let db = sized(&[1500; 40]);
        let p = StorageParams { io_cost: io, cpu_cost: cpu, ..params(4096, 3) };
        let mut s = Storage::place_sequential(&db, p).unwrap();
        for i in accesses {
            s.access_object(oid(i), IoClass::Transaction).unwrap();
            let c = s.counters();
            prop_assert_eq!(c.overhead_reads, 0);
            let expected = c.transaction_reads as f64 * io + c.accessed_objects as f64 * cpu;
            prop_assert!((s.simulated_time() - expected).abs() < 1e-9);
        }
    }
}
