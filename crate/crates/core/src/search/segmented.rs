//! Expansion queue and visited table for best-first search.
//!
//! The segmented variants split storage into `m` fixed segments of 32 slots;
//! id `e` always lives in segment `e % m`. Queue segments are sorted circular
//! arrays that drop their most distant entry on overflow. Visited segments are
//! unsorted circular arrays that overwrite their oldest entry on overflow.
//! Both are lossy by construction.
//!
//! The unbounded variants keep everything and serve as the exact,
//! priority-queue style baseline.

use std::collections::{BTreeSet, HashSet};

use super::LANES;
use crate::neighbor::Neighbor;

/// Candidates waiting to be expanded.
pub trait ExpansionQueue {
    /// Inserts `item`, whose id must not be present. Returns the element
    /// dropped to make room, which may be `item` itself.
    fn push(&mut self, item: Neighbor) -> Option<Neighbor>;
    /// Removes and returns the smallest element by `(dist, id)`.
    fn pop_min(&mut self) -> Option<Neighbor>;
    fn contains(&self, id: u32) -> bool;
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Record of expanded nodes.
pub trait VisitedTable {
    /// Records `id`; a no-op if it is already present.
    fn add(&mut self, id: u32);
    fn contains(&self, id: u32) -> bool;
}

const MASK: usize = LANES - 1;

/// Sorted circular array of up to 32 entries.
#[derive(Clone, Debug)]
struct QueueSegment {
    slots: [Neighbor; LANES],
    head: usize,
    len: usize,
}

impl QueueSegment {
    fn new() -> Self {
        Self {
            slots: [Neighbor::NONE; LANES],
            head: 0,
            len: 0,
        }
    }

    #[inline]
    fn at(&self, i: usize) -> Neighbor {
        self.slots[(self.head + i) & MASK]
    }

    fn push(&mut self, item: Neighbor) -> Option<Neighbor> {
        let mut dropped = None;
        if self.len == LANES {
            let last = self.at(LANES - 1);
            if item >= last {
                return Some(item);
            }
            self.len -= 1;
            dropped = Some(last);
        }
        let mut i = self.len;
        while i > 0 && self.at(i - 1) > item {
            self.slots[(self.head + i) & MASK] = self.at(i - 1);
            i -= 1;
        }
        self.slots[(self.head + i) & MASK] = item;
        self.len += 1;
        dropped
    }

    fn pop_min(&mut self) -> Option<Neighbor> {
        if self.len == 0 {
            return None;
        }
        let head = self.slots[self.head];
        self.head = (self.head + 1) & MASK;
        self.len -= 1;
        Some(head)
    }

    fn head(&self) -> Option<Neighbor> {
        (self.len > 0).then(|| self.slots[self.head])
    }

    fn contains(&self, id: u32) -> bool {
        (0..self.len).any(|i| self.at(i).id == id)
    }
}

/// Expansion queue of `m` sorted circular segments of 32 slots.
#[derive(Clone, Debug)]
pub struct SegmentedQueue {
    segments: Vec<QueueSegment>,
    len: usize,
}

impl SegmentedQueue {
    pub fn new(m: usize) -> Self {
        assert!(m > 0, "at least one segment is required");
        Self {
            segments: vec![QueueSegment::new(); m],
            len: 0,
        }
    }

    #[inline]
    fn segment_of(&self, id: u32) -> usize {
        id as usize % self.segments.len()
    }

    /// Contents of segment `s`, smallest first.
    pub fn segment(&self, s: usize) -> Vec<Neighbor> {
        let seg = &self.segments[s];
        (0..seg.len).map(|i| seg.at(i)).collect()
    }

    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }
}

impl ExpansionQueue for SegmentedQueue {
    fn push(&mut self, item: Neighbor) -> Option<Neighbor> {
        let s = self.segment_of(item.id);
        let dropped = self.segments[s].push(item);
        if dropped.is_none() {
            self.len += 1;
        }
        dropped
    }

    fn pop_min(&mut self) -> Option<Neighbor> {
        let s = (0..self.segments.len())
            .filter_map(|s| self.segments[s].head().map(|h| (h, s)))
            .min()?
            .1;
        self.len -= 1;
        self.segments[s].pop_min()
    }

    fn contains(&self, id: u32) -> bool {
        self.segments[self.segment_of(id)].contains(id)
    }

    fn len(&self) -> usize {
        self.len
    }
}

/// Unsorted circular array of up to 32 ids, oldest overwritten first.
#[derive(Clone, Debug)]
struct VisitedSegment {
    slots: [u32; LANES],
    head: usize,
    len: usize,
}

impl VisitedSegment {
    fn new() -> Self {
        Self {
            slots: [0; LANES],
            head: 0,
            len: 0,
        }
    }

    fn contains(&self, id: u32) -> bool {
        (0..self.len).any(|i| self.slots[(self.head + i) & MASK] == id)
    }

    fn add(&mut self, id: u32) {
        if self.contains(id) {
            return;
        }
        if self.len == LANES {
            self.slots[self.head] = id;
            self.head = (self.head + 1) & MASK;
        } else {
            self.slots[(self.head + self.len) & MASK] = id;
            self.len += 1;
        }
    }
}

/// Visited table of `m` circular segments of 32 ids.
#[derive(Clone, Debug)]
pub struct SegmentedVisited {
    segments: Vec<VisitedSegment>,
}

impl SegmentedVisited {
    pub fn new(m: usize) -> Self {
        assert!(m > 0, "at least one segment is required");
        Self {
            segments: vec![VisitedSegment::new(); m],
        }
    }

    /// Contents of segment `s`, oldest first.
    pub fn segment(&self, s: usize) -> Vec<u32> {
        let seg = &self.segments[s];
        (0..seg.len).map(|i| seg.slots[(seg.head + i) & MASK]).collect()
    }
}

impl VisitedTable for SegmentedVisited {
    fn add(&mut self, id: u32) {
        let s = id as usize % self.segments.len();
        self.segments[s].add(id);
    }

    fn contains(&self, id: u32) -> bool {
        self.segments[id as usize % self.segments.len()].contains(id)
    }
}

/// Exact priority queue with no capacity limit.
#[derive(Clone, Debug, Default)]
pub struct UnboundedQueue {
    items: BTreeSet<Neighbor>,
    ids: HashSet<u32>,
}

impl ExpansionQueue for UnboundedQueue {
    fn push(&mut self, item: Neighbor) -> Option<Neighbor> {
        if self.ids.insert(item.id) {
            self.items.insert(item);
        }
        None
    }

    fn pop_min(&mut self) -> Option<Neighbor> {
        let item = self.items.pop_first()?;
        self.ids.remove(&item.id);
        Some(item)
    }

    fn contains(&self, id: u32) -> bool {
        self.ids.contains(&id)
    }

    fn len(&self) -> usize {
        self.items.len()
    }
}

/// Exact visited set.
#[derive(Clone, Debug, Default)]
pub struct UnboundedVisited {
    ids: HashSet<u32>,
}

impl VisitedTable for UnboundedVisited {
    fn add(&mut self, id: u32) {
        self.ids.insert(id);
    }

    fn contains(&self, id: u32) -> bool {
        self.ids.contains(&id)
    }
}
