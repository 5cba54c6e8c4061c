//! Simulated paged disk with an LRU buffer.
//!
//! Objects are packed onto fixed-size pages; an object never shares a page
//! boundary. Objects larger than a page get a run of dedicated contiguous
//! pages. Every page miss in the buffer is one page read, charged either to
//! transactions or to clustering overhead.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{Database, ObjectId};

pub type PageId = u32;

/// What to do with an object bigger than one page.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Oversize {
    /// Give the object a run of dedicated contiguous pages.
    #[default]
    DedicatedRun,
    Reject,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StorageParams {
    pub page_size: u32,
    pub buffer_pages: usize,
    /// Simulated time per page read.
    pub io_cost: f64,
    /// Simulated time per object access.
    pub cpu_cost: f64,
    pub oversize: Oversize,
}

impl Default for StorageParams {
    fn default() -> Self {
        Self {
            page_size: 4096,
            buffer_pages: 12,
            io_cost: 1.0,
            cpu_cost: 0.01,
            oversize: Oversize::DedicatedRun,
        }
    }
}

impl StorageParams {
    pub fn validate(&self) -> Result<()> {
        if self.page_size == 0 {
            return Err(Error::Param("page_size must be positive".into()));
        }
        if self.buffer_pages == 0 {
            return Err(Error::Param("buffer_pages must be at least 1".into()));
        }
        if !(self.io_cost >= 0.0 && self.cpu_cost >= 0.0) {
            return Err(Error::Param("io_cost and cpu_cost must be >= 0".into()));
        }
        Ok(())
    }
}

/// Where one object lives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Location {
    pub page: PageId,
    pub offset: u32,
    /// Number of pages occupied, starting at `page`.
    pub pages: u32,
}

impl Location {
    pub fn page_range(&self) -> std::ops::Range<PageId> {
        self.page..self.page + self.pages
    }
}

/// Object-to-page map for a whole database.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Placement {
    locations: Vec<Location>,
    page_count: u32,
}

impl Placement {
    /// Packs objects onto pages in the given order. A new page is opened
    /// whenever the next object does not fit in the space left on the current
    /// one. `order` must list every object of `db` exactly once.
    pub fn pack(
        order: impl IntoIterator<Item = ObjectId>,
        db: &Database,
        params: &StorageParams,
    ) -> Result<Placement> {
        const UNPLACED: Location = Location {
            page: PageId::MAX,
            offset: 0,
            pages: 0,
        };
        let page_size = params.page_size;
        let mut locations = vec![UNPLACED; db.len()];
        let mut placed = 0usize;
        let mut page: PageId = 0;
        let mut used: u32 = 0;
        let mut open = false;
        for id in order {
            let size = db
                .get_object(id)
                .ok_or(Error::UnknownObject(id))?
                .size;
            if locations[id.index()].pages != 0 {
                return Err(Error::Placement(format!("object {id} placed twice")));
            }
            let loc = if size > page_size {
                if params.oversize == Oversize::Reject {
                    return Err(Error::Placement(format!(
                        "object {id} of {size} bytes exceeds the {page_size}-byte page"
                    )));
                }
                if open {
                    page += 1;
                }
                let run = size.div_ceil(page_size);
                let loc = Location {
                    page,
                    offset: 0,
                    pages: run,
                };
                page += run;
                used = 0;
                open = false;
                loc
            } else {
                if open && used + size > page_size {
                    page += 1;
                    used = 0;
                }
                let loc = Location {
                    page,
                    offset: used,
                    pages: 1,
                };
                used += size;
                open = true;
                loc
            };
            locations[id.index()] = loc;
            placed += 1;
        }
        if placed != db.len() {
            return Err(Error::Placement(format!(
                "{} of {} objects left unplaced",
                db.len() - placed,
                db.len()
            )));
        }
        Ok(Placement {
            locations,
            page_count: page + u32::from(open),
        })
    }

    /// Objects packed in id order.
    pub fn sequential(db: &Database, params: &StorageParams) -> Result<Placement> {
        Self::pack(db.objects.iter().map(|o| o.id), db, params)
    }

    pub fn location(&self, id: ObjectId) -> Option<Location> {
        self.locations.get(id.index()).copied()
    }

    pub fn page_count(&self) -> u32 {
        self.page_count
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    /// Objects resident on each page, in offset order. Pages in the middle
    /// of an oversize run list their owner.
    pub fn residents(&self) -> Vec<Vec<ObjectId>> {
        let mut pages = vec![Vec::new(); self.page_count as usize];
        let mut by_offset: Vec<(Location, ObjectId)> = self
            .locations
            .iter()
            .enumerate()
            .map(|(i, l)| (*l, ObjectId::from_index(i)))
            .collect();
        by_offset.sort_by_key(|(l, id)| (l.page, l.offset, *id));
        for (loc, id) in by_offset {
            for p in loc.page_range() {
                pages[p as usize].push(id);
            }
        }
        pages
    }
}

/// Fixed-capacity page buffer with least-recently-used eviction.
#[derive(Clone, Debug)]
pub struct LruBuffer {
    capacity: usize,
    tick: u64,
    stamp: HashMap<PageId, u64>,
    order: BTreeMap<u64, PageId>,
}

impl LruBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "buffer needs at least one frame");
        Self {
            capacity,
            tick: 0,
            stamp: HashMap::with_capacity(capacity + 1),
            order: BTreeMap::new(),
        }
    }

    /// Marks `page` most recently used. Returns `true` on a hit; on a miss the
    /// page is loaded, evicting the least recently used page if full.
    pub fn touch(&mut self, page: PageId) -> bool {
        self.tick += 1;
        if let Some(old) = self.stamp.insert(page, self.tick) {
            self.order.remove(&old);
            self.order.insert(self.tick, page);
            return true;
        }
        self.order.insert(self.tick, page);
        if self.stamp.len() > self.capacity {
            let (_, victim) = self.order.pop_first().expect("buffer is non-empty");
            self.stamp.remove(&victim);
        }
        false
    }

    pub fn contains(&self, page: PageId) -> bool {
        self.stamp.contains_key(&page)
    }

    pub fn invalidate(&mut self, page: PageId) {
        if let Some(stamp) = self.stamp.remove(&page) {
            self.order.remove(&stamp);
        }
    }

    pub fn clear(&mut self) {
        self.stamp.clear();
        self.order.clear();
    }

    pub fn len(&self) -> usize {
        self.stamp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stamp.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IoClass {
    Transaction,
    Overhead,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IoCounters {
    pub transaction_reads: u64,
    /// Objects accessed by transactions.
    pub accessed_objects: u64,
    pub overhead_reads: u64,
    pub overhead_writes: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Access {
    pub page_fault: bool,
    pub pages_read: u32,
}

/// Overhead I/O spent by one `rewrite_placement`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewriteStats {
    pub objects_moved: u64,
    pub pages_read: u64,
    pub pages_written: u64,
}

/// Pages read and written to move from `old` to `new`: every object whose
/// location changes is read from its old pages and written to its new ones.
pub fn move_plan(old: &Placement, new: &Placement) -> (Vec<ObjectId>, BTreeSet<PageId>, BTreeSet<PageId>) {
    let mut moved = Vec::new();
    let mut read = BTreeSet::new();
    let mut written = BTreeSet::new();
    for (i, (a, b)) in old.locations.iter().zip(&new.locations).enumerate() {
        if a != b {
            moved.push(ObjectId::from_index(i));
            read.extend(a.page_range());
            written.extend(b.page_range());
        }
    }
    (moved, read, written)
}

#[derive(Clone, Debug)]
pub struct Storage {
    params: StorageParams,
    placement: Placement,
    buffer: LruBuffer,
    counters: IoCounters,
}

impl Storage {
    pub fn new(placement: Placement, params: StorageParams) -> Result<Storage> {
        params.validate()?;
        Ok(Storage {
            buffer: LruBuffer::new(params.buffer_pages),
            params,
            placement,
            counters: IoCounters::default(),
        })
    }

    /// Baseline store: objects packed in id order, cold buffer, zero counters.
    pub fn place_sequential(db: &Database, params: StorageParams) -> Result<Storage> {
        params.validate()?;
        let placement = Placement::sequential(db, &params)?;
        Storage::new(placement, params)
    }

    pub fn params(&self) -> &StorageParams {
        &self.params
    }

    pub fn placement(&self) -> &Placement {
        &self.placement
    }

    pub fn buffer(&self) -> &LruBuffer {
        &self.buffer
    }

    pub fn counters(&self) -> IoCounters {
        self.counters
    }

    /// Reads the object's pages through the buffer, charging each miss to `io`.
    pub fn access_object(&mut self, id: ObjectId, io: IoClass) -> Result<Access> {
        let loc = self
            .placement
            .location(id)
            .ok_or(Error::UnknownObject(id))?;
        let mut pages_read = 0;
        for page in loc.page_range() {
            if !self.buffer.touch(page) {
                pages_read += 1;
            }
        }
        match io {
            IoClass::Transaction => {
                self.counters.transaction_reads += u64::from(pages_read);
                self.counters.accessed_objects += 1;
            }
            IoClass::Overhead => self.counters.overhead_reads += u64::from(pages_read),
        }
        Ok(Access {
            page_fault: pages_read > 0,
            pages_read,
        })
    }

    /// Installs a new placement. Reads of the moved objects' old pages and
    /// writes of their new pages are charged to overhead, and every page whose
    /// contents changed is dropped from the buffer.
    pub fn rewrite_placement(&mut self, new: Placement) -> Result<RewriteStats> {
        if new.len() != self.placement.len() {
            return Err(Error::Placement(format!(
                "new placement covers {} objects, store holds {}",
                new.len(),
                self.placement.len()
            )));
        }
        let (moved, read, written) = move_plan(&self.placement, &new);
        for page in read.iter().chain(&written) {
            self.buffer.invalidate(*page);
        }
        let stats = RewriteStats {
            objects_moved: moved.len() as u64,
            pages_read: read.len() as u64,
            pages_written: written.len() as u64,
        };
        self.counters.overhead_reads += stats.pages_read;
        self.counters.overhead_writes += stats.pages_written;
        self.placement = new;
        Ok(stats)
    }

    /// `transaction_reads * io_cost + accessed_objects * cpu_cost`.
    pub fn simulated_time(&self) -> f64 {
        self.counters.transaction_reads as f64 * self.params.io_cost
            + self.counters.accessed_objects as f64 * self.params.cpu_cost
    }

    pub fn clear_buffer(&mut self) {
        self.buffer.clear();
    }
}
