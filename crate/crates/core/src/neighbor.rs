use std::cmp::Ordering;

/// Id used by empty slots in fixed-capacity rank lists.
pub const NONE_ID: u32 = u32::MAX;

/// An (id, distance) pair.
///
/// Ordering is by distance first, then by id, using `f32::total_cmp` so that
/// every sort and queue in the crate agrees on ties.
#[derive(Clone, Copy, Debug)]
pub struct Neighbor {
    pub id: u32,
    pub dist: f32,
}

impl Neighbor {
    /// Empty slot: `(NONE_ID, +inf)`. Sorts after every finite entry.
    pub const NONE: Neighbor = Neighbor {
        id: NONE_ID,
        dist: f32::INFINITY,
    };

    #[inline]
    pub fn new(id: u32, dist: f32) -> Self {
        Self { id, dist }
    }

    #[inline]
    pub fn is_none(&self) -> bool {
        self.id == NONE_ID
    }
}

impl PartialEq for Neighbor {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Neighbor {}

impl PartialOrd for Neighbor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Neighbor {
    #[inline]
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist.total_cmp(&other.dist).then_with(|| self.id.cmp(&other.id))
    }
}

/// Candidate edge from an owner node, as consumed by diversification.
pub type CandidateEdge = Neighbor;
