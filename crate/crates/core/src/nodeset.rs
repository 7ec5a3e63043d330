use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Set of node indices, stored as a bitmask over nodes `0..32`.
///
/// Serializes as a sorted array of 0-based indices.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeSet(u32);

pub const MAX_NODES: usize = 32;

impl NodeSet {
    pub const EMPTY: NodeSet = NodeSet(0);

    pub fn from_bits(bits: u32) -> Self {
        NodeSet(bits)
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    /// All nodes `0..d`.
    pub fn full(d: usize) -> Self {
        debug_assert!(d <= MAX_NODES);
        if d == MAX_NODES {
            NodeSet(u32::MAX)
        } else {
            NodeSet((1u32 << d) - 1)
        }
    }

    pub fn singleton(k: usize) -> Self {
        NodeSet(1 << k)
    }

    pub fn from_slice(nodes: &[usize]) -> Self {
        nodes.iter().fold(NodeSet::EMPTY, |s, &k| s.with(k))
    }

    pub fn contains(self, k: usize) -> bool {
        k < MAX_NODES && self.0 & (1 << k) != 0
    }

    pub fn with(self, k: usize) -> Self {
        NodeSet(self.0 | (1 << k))
    }

    pub fn without(self, k: usize) -> Self {
        NodeSet(self.0 & !(1 << k))
    }

    pub fn union(self, other: NodeSet) -> Self {
        NodeSet(self.0 | other.0)
    }

    pub fn intersection(self, other: NodeSet) -> Self {
        NodeSet(self.0 & other.0)
    }

    pub fn difference(self, other: NodeSet) -> Self {
        NodeSet(self.0 & !other.0)
    }

    /// Complement relative to nodes `0..d`.
    pub fn complement(self, d: usize) -> Self {
        NodeSet::full(d).difference(self)
    }

    pub fn is_subset(self, other: NodeSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let k = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(k)
            }
        })
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }
}

impl fmt::Debug for NodeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl fmt::Display for NodeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (n, k) in self.iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{k}")?;
        }
        write!(f, "}}")
    }
}

impl FromIterator<usize> for NodeSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        iter.into_iter().fold(NodeSet::EMPTY, |s, k| s.with(k))
    }
}

impl Serialize for NodeSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for NodeSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let nodes = Vec::<usize>::deserialize(deserializer)?;
        if let Some(&k) = nodes.iter().find(|&&k| k >= MAX_NODES) {
            return Err(serde::de::Error::custom(format!("node index {k} out of range")));
        }
        Ok(NodeSet::from_slice(&nodes))
    }
}
