//! Server subsets as 64-bit masks, plus lexicographic k-subset enumeration.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Largest supported server count.
pub const MAX_SERVERS: usize = 64;

/// A set of server ids in `0..64`. Ids are zero-based throughout the crate.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ServerSet(u64);

impl ServerSet {
    pub const EMPTY: ServerSet = ServerSet(0);

    pub fn from_bits(bits: u64) -> Self {
        ServerSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    /// `{0, 1, .., n-1}`.
    pub fn first(n: usize) -> Self {
        assert!(n <= MAX_SERVERS);
        if n == MAX_SERVERS {
            ServerSet(u64::MAX)
        } else {
            ServerSet((1u64 << n) - 1)
        }
    }

    pub fn singleton(id: usize) -> Self {
        assert!(id < MAX_SERVERS, "server id {id} out of range");
        ServerSet(1u64 << id)
    }

    pub fn contains(self, id: usize) -> bool {
        id < MAX_SERVERS && self.0 & (1u64 << id) != 0
    }

    pub fn insert(&mut self, id: usize) {
        *self = self.with(id);
    }

    pub fn with(self, id: usize) -> Self {
        ServerSet(self.0 | Self::singleton(id).0)
    }

    pub fn without(self, id: usize) -> Self {
        ServerSet(self.0 & !Self::singleton(id).0)
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn intersection(self, other: ServerSet) -> ServerSet {
        ServerSet(self.0 & other.0)
    }

    pub fn union(self, other: ServerSet) -> ServerSet {
        ServerSet(self.0 | other.0)
    }

    pub fn is_subset(self, other: ServerSet) -> bool {
        self.0 & !other.0 == 0
    }

    /// Smallest id in the set.
    pub fn min(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    /// Ids in ascending order.
    pub fn iter(self) -> Ids {
        Ids(self.0)
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }

    /// Position of `id` among the members in ascending order.
    pub fn rank_of(self, id: usize) -> Option<usize> {
        if !self.contains(id) {
            return None;
        }
        let below = self.0 & ((1u64 << id) - 1);
        Some(below.count_ones() as usize)
    }
}

impl FromIterator<usize> for ServerSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        iter.into_iter().fold(ServerSet::EMPTY, ServerSet::with)
    }
}

impl fmt::Debug for ServerSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl fmt::Display for ServerSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (pos, id) in self.iter().enumerate() {
            if pos > 0 {
                write!(f, ",")?;
            }
            write!(f, "{id}")?;
        }
        write!(f, "}}")
    }
}

/// Orders sets by their sorted member lists, lexicographically.
impl Ord for ServerSet {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.iter().cmp(other.iter())
    }
}

impl PartialOrd for ServerSet {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Serialize for ServerSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for ServerSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let ids = Vec::<usize>::deserialize(deserializer)?;
        if let Some(bad) = ids.iter().find(|&&id| id >= MAX_SERVERS) {
            return Err(serde::de::Error::custom(format!(
                "server id {bad} exceeds the {MAX_SERVERS}-server limit"
            )));
        }
        Ok(ids.into_iter().collect())
    }
}

pub struct Ids(u64);

impl Iterator for Ids {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let id = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(id)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for Ids {}

/// All `size`-subsets of `base`, in lexicographic order of their sorted
/// member lists.
pub fn subsets_of(base: ServerSet, size: usize) -> Subsets {
    let members = base.to_vec();
    let cursor = if size <= members.len() {
        Some((0..size).collect())
    } else {
        None
    };
    Subsets {
        members,
        cursor,
        size,
    }
}

/// All `size`-subsets of `{0..n-1}` in lexicographic order.
pub fn combinations(n: usize, size: usize) -> Subsets {
    subsets_of(ServerSet::first(n), size)
}

pub struct Subsets {
    members: Vec<usize>,
    cursor: Option<Vec<usize>>,
    size: usize,
}

impl Iterator for Subsets {
    type Item = ServerSet;

    fn next(&mut self) -> Option<ServerSet> {
        let idx = self.cursor.as_mut()?;
        let out = idx.iter().map(|&i| self.members[i]).collect();
        let n = self.members.len();
        let k = self.size;
        // advance to the next index combination
        let mut pos = k;
        loop {
            if pos == 0 {
                self.cursor = None;
                break;
            }
            pos -= 1;
            if idx[pos] < n - k + pos {
                idx[pos] += 1;
                for later in pos + 1..k {
                    idx[later] = idx[later - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

/// Binomial coefficient; zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}
