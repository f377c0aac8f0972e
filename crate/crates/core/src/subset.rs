//! Ground sets and bitset-backed subsets of dense element ids.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense element identifier, `0..n`.
pub type ElementId = usize;

/// The universe `0..size` with optional labels for reporting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundSet {
    size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

impl GroundSet {
    pub fn new(size: usize) -> Self {
        Self { size, labels: None }
    }

    pub fn with_labels(labels: Vec<String>) -> Self {
        Self {
            size: labels.len(),
            labels: Some(labels),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn label(&self, id: ElementId) -> String {
        match &self.labels {
            Some(l) if id < l.len() => l[id].clone(),
            _ => format!("e{id}"),
        }
    }

    pub fn empty_set(&self) -> Subset {
        Subset::empty(self.size)
    }

    pub fn full_set(&self) -> Subset {
        Subset::full(self.size)
    }
}

/// A subset of a ground set of fixed size, stored as a bitset.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Subset {
    n: usize,
    words: Vec<u64>,
}

fn word_count(n: usize) -> usize {
    n.div_ceil(64)
}

impl Subset {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            words: vec![0; word_count(n)],
        }
    }

    pub fn full(n: usize) -> Self {
        let mut s = Self::empty(n);
        for id in 0..n {
            s.insert(id);
        }
        s
    }

    /// Builds a subset from ids, rejecting out-of-range and duplicate ids.
    pub fn from_ids<I: IntoIterator<Item = ElementId>>(n: usize, ids: I) -> Result<Self> {
        let mut s = Self::empty(n);
        for id in ids {
            if id >= n {
                return Err(Error::InvalidElement { id, size: n });
            }
            if !s.insert(id) {
                return Err(Error::Input(format!("duplicate element id {id}")));
            }
        }
        Ok(s)
    }

    /// Bits of `mask` as a subset; `n` must be at most 64.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        debug_assert!(n <= 64);
        let mut s = Self::empty(n);
        if n > 0 {
            let keep = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
            s.words[0] = mask & keep;
        }
        s
    }

    /// Low 64 bits as a mask.
    pub fn mask(&self) -> u64 {
        self.words.first().copied().unwrap_or(0)
    }

    pub fn ground_size(&self) -> usize {
        self.n
    }

    pub fn contains(&self, id: ElementId) -> bool {
        id < self.n && self.words[id / 64] & (1 << (id % 64)) != 0
    }

    /// Inserts `id`, returning whether it was newly added. Panics on out-of-range ids.
    pub fn insert(&mut self, id: ElementId) -> bool {
        assert!(id < self.n, "element {id} out of range {}", self.n);
        let fresh = !self.contains(id);
        self.words[id / 64] |= 1 << (id % 64);
        fresh
    }

    pub fn remove(&mut self, id: ElementId) -> bool {
        let had = self.contains(id);
        if had {
            self.words[id / 64] &= !(1 << (id % 64));
        }
        had
    }

    pub fn with(&self, id: ElementId) -> Self {
        let mut s = self.clone();
        s.insert(id);
        s
    }

    pub fn without(&self, id: ElementId) -> Self {
        let mut s = self.clone();
        s.remove(id);
        s
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = ElementId> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut bits = w;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let tz = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(wi * 64 + tz)
            })
        })
    }

    pub fn to_vec(&self) -> Vec<ElementId> {
        self.iter().collect()
    }

    fn check_same(&self, other: &Self) {
        assert_eq!(self.n, other.n, "subsets over different ground sets");
    }

    pub fn union(&self, other: &Self) -> Self {
        self.check_same(other);
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a | b).collect();
        Self { n: self.n, words }
    }

    pub fn intersection(&self, other: &Self) -> Self {
        self.check_same(other);
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect();
        Self { n: self.n, words }
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.check_same(other);
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a & !b).collect();
        Self { n: self.n, words }
    }

    /// Complement within the ground set.
    pub fn complement(&self) -> Self {
        Subset::full(self.n).difference(self)
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.check_same(other);
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.check_same(other);
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }

    /// Lexicographic order on the sorted id lists.
    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        self.iter().cmp(other.iter())
    }

    /// `;`-joined ids, the encoding used in CSV output.
    pub fn encode(&self) -> String {
        self.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(";")
    }
}

impl fmt::Debug for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, id) in self.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{id}")?;
        }
        write!(f, "}}")
    }
}

/// Every subset of `items`, in binary-counter order over `items`' positions.
pub fn power_set(n: usize, items: &[ElementId]) -> impl Iterator<Item = Subset> + '_ {
    assert!(items.len() < 64);
    (0u64..(1u64 << items.len())).map(move |mask| {
        let mut s = Subset::empty(n);
        for (k, &id) in items.iter().enumerate() {
            if mask & (1 << k) != 0 {
                s.insert(id);
            }
        }
        s
    })
}

/// Number of subsets of size at most `k` drawn from `m` elements.
pub fn count_subsets_up_to(m: usize, k: usize) -> u128 {
    (0..=k.min(m)).map(|j| binomial(m, j)).sum()
}

pub fn binomial(m: usize, k: usize) -> u128 {
    if k > m {
        return 0;
    }
    let k = k.min(m - k);
    let mut acc: u128 = 1;
    for j in 0..k {
        acc = acc * (m - j) as u128 / (j + 1) as u128;
    }
    acc
}
