//! Matroid families behind a single independence oracle.
//!
//! All matroids are immutable after construction. The transversal family
//! decides independence by bipartite matching with per-query scratch state,
//! so every matroid can be shared across threads.

use std::fmt;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::subset::{ElementId, Subset};

/// Default ground-set size limit for exhaustive axiom checks.
pub const AXIOM_CHECK_LIMIT: usize = 12;

/// Anything that can answer "is this set independent?" over `0..ground_size()`.
pub trait IndependenceOracle {
    fn ground_size(&self) -> usize;

    /// Independence test. Callers guarantee `s` is drawn over `ground_size()` elements.
    fn is_independent(&self, s: &Subset) -> bool;

    /// Size of a maximum independent set, via the matroid greedy with
    /// lowest-id-first tie breaking.
    fn rank(&self) -> usize {
        greedy_basis(self).len()
    }
}

/// Maximal independent set built by scanning ids in increasing order.
pub fn greedy_basis<M: IndependenceOracle + ?Sized>(m: &M) -> Subset {
    let mut basis = Subset::empty(m.ground_size());
    for id in 0..m.ground_size() {
        basis.insert(id);
        if !m.is_independent(&basis) {
            basis.remove(id);
        }
    }
    basis
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniformMatroid {
    n: usize,
    alpha: usize,
}

impl UniformMatroid {
    pub fn new(n: usize, alpha: usize) -> Self {
        Self { n, alpha }
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }
}

impl IndependenceOracle for UniformMatroid {
    fn ground_size(&self) -> usize {
        self.n
    }

    fn is_independent(&self, s: &Subset) -> bool {
        s.len() <= self.alpha
    }

    fn rank(&self) -> usize {
        self.alpha.min(self.n)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionMatroid {
    n: usize,
    blocks: Vec<Vec<ElementId>>,
    caps: Vec<usize>,
    block_of: Vec<usize>,
}

impl PartitionMatroid {
    /// Blocks must partition `0..n` exactly. Caps larger than their block are
    /// clamped to the block size.
    pub fn new(blocks: Vec<Vec<ElementId>>, caps: Vec<usize>) -> Result<Self> {
        if blocks.len() != caps.len() {
            return Err(Error::Input(format!(
                "{} blocks but {} caps",
                blocks.len(),
                caps.len()
            )));
        }
        let n: usize = blocks.iter().map(Vec::len).sum();
        let mut block_of = vec![usize::MAX; n];
        for (b, block) in blocks.iter().enumerate() {
            for &id in block {
                if id >= n {
                    return Err(Error::InvalidElement { id, size: n });
                }
                if block_of[id] != usize::MAX {
                    return Err(Error::Input(format!("element {id} appears in two blocks")));
                }
                block_of[id] = b;
            }
        }
        let caps = caps
            .into_iter()
            .zip(&blocks)
            .enumerate()
            .map(|(b, (cap, block))| {
                if cap > block.len() {
                    warn!(
                        "partition block {b}: cap {cap} exceeds block size {}, clamping",
                        block.len()
                    );
                    block.len()
                } else {
                    cap
                }
            })
            .collect();
        Ok(Self {
            n,
            blocks,
            caps,
            block_of,
        })
    }

    pub fn blocks(&self) -> &[Vec<ElementId>] {
        &self.blocks
    }

    pub fn caps(&self) -> &[usize] {
        &self.caps
    }

    pub fn block_of(&self, id: ElementId) -> usize {
        self.block_of[id]
    }

    fn counts(&self, s: &Subset) -> Vec<usize> {
        let mut counts = vec![0; self.blocks.len()];
        for id in s.iter() {
            counts[self.block_of[id]] += 1;
        }
        counts
    }
}

impl IndependenceOracle for PartitionMatroid {
    fn ground_size(&self) -> usize {
        self.n
    }

    fn is_independent(&self, s: &Subset) -> bool {
        self.counts(s).iter().zip(&self.caps).all(|(c, cap)| c <= cap)
    }

    fn rank(&self) -> usize {
        self.caps.iter().sum()
    }
}

/// Partial transversals of a family of subsets `S_1..S_k` of `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransversalMatroid {
    n: usize,
    subsets: Vec<Vec<ElementId>>,
    // element -> indices of subsets containing it
    adjacency: Vec<Vec<usize>>,
}

impl TransversalMatroid {
    pub fn new(n: usize, subsets: Vec<Vec<ElementId>>) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n];
        for (j, set) in subsets.iter().enumerate() {
            for &id in set {
                if id >= n {
                    return Err(Error::InvalidElement { id, size: n });
                }
                if !adjacency[id].contains(&j) {
                    adjacency[id].push(j);
                }
            }
        }
        Ok(Self {
            n,
            subsets,
            adjacency,
        })
    }

    pub fn subsets(&self) -> &[Vec<ElementId>] {
        &self.subsets
    }

    /// Size of a maximum matching between the elements of `s` and the subsets.
    pub fn matching_size(&self, s: &Subset) -> usize {
        let mut owner: Vec<Option<ElementId>> = vec![None; self.subsets.len()];
        let mut matched = 0;
        for id in s.iter() {
            let mut seen = vec![false; self.subsets.len()];
            if self.augment(id, &mut owner, &mut seen) {
                matched += 1;
            }
        }
        matched
    }

    fn augment(&self, id: ElementId, owner: &mut [Option<ElementId>], seen: &mut [bool]) -> bool {
        for &j in &self.adjacency[id] {
            if seen[j] {
                continue;
            }
            seen[j] = true;
            let free = match owner[j] {
                None => true,
                Some(other) => self.augment(other, owner, seen),
            };
            if free {
                owner[j] = Some(id);
                return true;
            }
        }
        false
    }
}

impl IndependenceOracle for TransversalMatroid {
    fn ground_size(&self) -> usize {
        self.n
    }

    fn is_independent(&self, s: &Subset) -> bool {
        s.len() <= self.subsets.len() && self.matching_size(s) == s.len()
    }
}

/// `X` is independent iff `X` avoids the pinned set `Y` and `X ∪ Y` is
/// independent in the base matroid.
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictedMatroid {
    base: Box<Matroid>,
    pinned: Subset,
}

impl RestrictedMatroid {
    pub fn base(&self) -> &Matroid {
        &self.base
    }

    pub fn pinned(&self) -> &Subset {
        &self.pinned
    }
}

impl IndependenceOracle for RestrictedMatroid {
    fn ground_size(&self) -> usize {
        self.base.ground_size()
    }

    fn is_independent(&self, s: &Subset) -> bool {
        s.is_disjoint(&self.pinned) && self.base.is_independent(&s.union(&self.pinned))
    }
}

/// The base matroid restricted to subsets of `support`.
#[derive(Debug, Clone, PartialEq)]
pub struct WithinMatroid {
    base: Box<Matroid>,
    support: Subset,
}

impl WithinMatroid {
    pub fn base(&self) -> &Matroid {
        &self.base
    }

    pub fn support(&self) -> &Subset {
        &self.support
    }
}

impl IndependenceOracle for WithinMatroid {
    fn ground_size(&self) -> usize {
        self.base.ground_size()
    }

    fn is_independent(&self, s: &Subset) -> bool {
        s.is_subset(&self.support) && self.base.is_independent(s)
    }
}

/// Structural summary used to decide which guarantees apply.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Shape {
    Uniform { cap: usize },
    Partition { block_of: Vec<usize>, caps: Vec<usize> },
    Other,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Matroid {
    Uniform(UniformMatroid),
    Partition(PartitionMatroid),
    Transversal(TransversalMatroid),
    Restricted(RestrictedMatroid),
    Within(WithinMatroid),
}

impl Matroid {
    pub fn uniform(n: usize, alpha: usize) -> Self {
        Matroid::Uniform(UniformMatroid::new(n, alpha))
    }

    pub fn partition(blocks: Vec<Vec<ElementId>>, caps: Vec<usize>) -> Result<Self> {
        PartitionMatroid::new(blocks, caps).map(Matroid::Partition)
    }

    pub fn transversal(n: usize, subsets: Vec<Vec<ElementId>>) -> Result<Self> {
        TransversalMatroid::new(n, subsets).map(Matroid::Transversal)
    }

    fn oracle(&self) -> &dyn IndependenceOracle {
        match self {
            Matroid::Uniform(m) => m,
            Matroid::Partition(m) => m,
            Matroid::Transversal(m) => m,
            Matroid::Restricted(m) => m,
            Matroid::Within(m) => m,
        }
    }

    /// Independence with ground-set validation.
    pub fn check_independent(&self, s: &Subset) -> Result<bool> {
        self.check_ground(s)?;
        Ok(self.is_independent(s))
    }

    pub fn check_ground(&self, s: &Subset) -> Result<()> {
        if s.ground_size() != self.ground_size() {
            return Err(Error::GroundMismatch {
                expected: self.ground_size(),
                actual: s.ground_size(),
            });
        }
        Ok(())
    }

    /// The matroid whose independent sets are the `X ⊆ V∖pinned` with
    /// `X ∪ pinned` independent here.
    pub fn restrict(&self, pinned: &Subset) -> Result<Matroid> {
        self.check_ground(pinned)?;
        if !self.is_independent(pinned) {
            return Err(Error::Contract(format!(
                "pinned set {pinned} is not independent"
            )));
        }
        Ok(Matroid::Restricted(RestrictedMatroid {
            base: Box::new(self.clone()),
            pinned: pinned.clone(),
        }))
    }

    /// The matroid over `support` whose independent sets are the independent
    /// subsets of `support`.
    pub fn subset_matroid(&self, support: &Subset) -> Result<Matroid> {
        self.check_ground(support)?;
        Ok(Matroid::Within(WithinMatroid {
            base: Box::new(self.clone()),
            support: support.clone(),
        }))
    }

    pub fn shape(&self) -> Shape {
        match self {
            Matroid::Uniform(m) => Shape::Uniform { cap: m.alpha },
            Matroid::Partition(m) => Shape::Partition {
                block_of: m.block_of.clone(),
                caps: m.caps.clone(),
            },
            Matroid::Within(w) => match w.base.shape() {
                Shape::Uniform { cap } => Shape::Uniform { cap },
                other => other,
            },
            _ => Shape::Other,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Matroid::Uniform(_) => "uniform",
            Matroid::Partition(_) => "partition",
            Matroid::Transversal(_) => "transversal",
            Matroid::Restricted(_) => "restricted",
            Matroid::Within(_) => "within",
        }
    }

    pub fn to_descriptor(&self) -> Option<MatroidDescriptor> {
        match self {
            Matroid::Uniform(m) => Some(MatroidDescriptor::Uniform {
                n: m.n,
                alpha: m.alpha,
            }),
            Matroid::Partition(m) => Some(MatroidDescriptor::Partition {
                blocks: m.blocks.clone(),
                caps: m.caps.clone(),
            }),
            Matroid::Transversal(m) => Some(MatroidDescriptor::Transversal {
                n: m.n,
                subsets: m.subsets.clone(),
            }),
            _ => None,
        }
    }
}

impl IndependenceOracle for Matroid {
    fn ground_size(&self) -> usize {
        self.oracle().ground_size()
    }

    fn is_independent(&self, s: &Subset) -> bool {
        self.oracle().is_independent(s)
    }

    fn rank(&self) -> usize {
        self.oracle().rank()
    }
}

/// JSON form of the constructible matroid families.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MatroidDescriptor {
    Uniform {
        n: usize,
        alpha: usize,
    },
    Partition {
        blocks: Vec<Vec<ElementId>>,
        caps: Vec<usize>,
    },
    Transversal {
        n: usize,
        subsets: Vec<Vec<ElementId>>,
    },
}

impl MatroidDescriptor {
    pub fn build(&self) -> Result<Matroid> {
        match self {
            MatroidDescriptor::Uniform { n, alpha } => Ok(Matroid::uniform(*n, *alpha)),
            MatroidDescriptor::Partition { blocks, caps } => {
                Matroid::partition(blocks.clone(), caps.clone())
            }
            MatroidDescriptor::Transversal { n, subsets } => {
                Matroid::transversal(*n, subsets.clone())
            }
        }
    }
}

/// A failed matroid axiom with its witness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AxiomViolation {
    EmptySetDependent,
    NotDownwardClosed { set: Subset, subset: Subset },
    NoAugmentation { smaller: Subset, larger: Subset },
}

impl fmt::Display for AxiomViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AxiomViolation::EmptySetDependent => write!(f, "the empty set is not independent"),
            AxiomViolation::NotDownwardClosed { set, subset } => {
                write!(f, "{set} is independent but its subset {subset} is not")
            }
            AxiomViolation::NoAugmentation { smaller, larger } => write!(
                f,
                "no element of {larger} augments {smaller} to an independent set"
            ),
        }
    }
}

/// Exhaustively checks the independence axioms of the set system over `0..n`
/// described by `indep`. Returns `Ok(None)` when all axioms hold.
pub fn verify_matroid_axioms<F>(n: usize, indep: F, limit: usize) -> Result<Option<AxiomViolation>>
where
    F: Fn(&Subset) -> bool,
{
    if n > limit || n >= 63 {
        return Err(Error::GuardExceeded {
            what: "matroid axiom check",
            count: 1u128 << n.min(127),
            limit: 1u128 << limit,
        });
    }
    let family: Vec<u64> = (0u64..(1u64 << n))
        .filter(|&mask| indep(&Subset::from_mask(n, mask)))
        .collect();
    let member = |mask: u64| family.binary_search(&mask).is_ok();

    if !member(0) {
        return Ok(Some(AxiomViolation::EmptySetDependent));
    }
    // one-element-smaller subsets suffice for downward closure by induction
    for &mask in &family {
        let mut bits = mask;
        while bits != 0 {
            let low = bits & bits.wrapping_neg();
            bits ^= low;
            if !member(mask ^ low) {
                return Ok(Some(AxiomViolation::NotDownwardClosed {
                    set: Subset::from_mask(n, mask),
                    subset: Subset::from_mask(n, mask ^ low),
                }));
            }
        }
    }
    for &x in &family {
        for &z in &family {
            if z.count_ones() <= x.count_ones() {
                continue;
            }
            let mut candidates = z & !x;
            let mut ok = false;
            while candidates != 0 {
                let low = candidates & candidates.wrapping_neg();
                candidates ^= low;
                if member(x | low) {
                    ok = true;
                    break;
                }
            }
            if !ok {
                return Ok(Some(AxiomViolation::NoAugmentation {
                    smaller: Subset::from_mask(n, x),
                    larger: Subset::from_mask(n, z),
                }));
            }
        }
    }
    Ok(None)
}

/// Axiom check for a matroid with the default size limit.
pub fn verify_axioms_of(m: &Matroid) -> Result<Option<AxiomViolation>> {
    verify_matroid_axioms(m.ground_size(), |s| m.is_independent(s), AXIOM_CHECK_LIMIT)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(n: usize, ids: &[usize]) -> Subset {
        Subset::from_ids(n, ids.iter().copied()).unwrap()
    }

    #[test]
    fn uniform_independence_and_rank() {
        let m = Matroid::uniform(5, 2);
        assert!(m.is_independent(&set(5, &[0, 1])));
        assert!(!m.is_independent(&set(5, &[0, 1, 2])));
        assert_eq!(Matroid::uniform(5, 3).rank(), 3);
        assert_eq!(Matroid::uniform(2, 3).rank(), 2);
    }

    #[test]
    fn transversal_matching() {
        let m = Matroid::transversal(3, vec![vec![0, 1], vec![0]]).unwrap();
        assert!(m.is_independent(&set(3, &[0, 1])));
        assert!(!m.is_independent(&set(3, &[1, 2])));
        let m = Matroid::transversal(1, vec![vec![0], vec![0]]).unwrap();
        assert_eq!(m.rank(), 1);
    }

    #[test]
    fn transversal_needs_augmenting_paths() {
        // element 0 first grabs S_0, element 1 must push it to S_1
        let m = Matroid::transversal(2, vec![vec![0, 1], vec![0]]).unwrap();
        assert!(m.is_independent(&set(2, &[0, 1])));
        assert_eq!(m.rank(), 2);
    }

    #[test]
    fn partition_rank_and_clamping() {
        let m = Matroid::partition(vec![vec![0, 1], vec![2, 3, 4]], vec![1, 2]).unwrap();
        assert_eq!(m.rank(), 3);
        let clamped = Matroid::partition(vec![vec![0], vec![1, 2]], vec![4, 1]).unwrap();
        assert_eq!(clamped.rank(), 2);
        assert!(Matroid::partition(vec![vec![0, 1], vec![1]], vec![1, 1]).is_err());
        assert!(Matroid::partition(vec![vec![0, 5]], vec![1]).is_err());
    }

    #[test]
    fn restrict_examples() {
        let u = Matroid::uniform(5, 3);
        let r = u.restrict(&set(5, &[0])).unwrap();
        assert!(r.is_independent(&set(5, &[1, 2])));
        assert!(!r.is_independent(&set(5, &[1, 2, 3])));
        assert!(!r.is_independent(&set(5, &[0])));

        let p = Matroid::partition(vec![vec![0, 1], vec![2, 3]], vec![1, 1]).unwrap();
        let r = p.restrict(&set(4, &[0])).unwrap();
        assert!(r.is_independent(&set(4, &[2])));
        assert!(!r.is_independent(&set(4, &[1])));

        assert!(u.restrict(&set(5, &[0, 1, 2, 3])).is_err());
    }

    #[test]
    fn restrict_empty_is_identity() {
        let m = Matroid::transversal(4, vec![vec![0, 1], vec![1, 2], vec![3]]).unwrap();
        let r = m.restrict(&Subset::empty(4)).unwrap();
        for mask in 0..16u64 {
            let s = Subset::from_mask(4, mask);
            assert_eq!(m.is_independent(&s), r.is_independent(&s));
        }
    }

    #[test]
    fn subset_matroid_examples() {
        let a = set(8, &[1, 2, 4, 6, 7]);
        let w = Matroid::uniform(8, 2).subset_matroid(&a).unwrap();
        assert_eq!(w.rank(), 2);
        assert!(w.is_independent(&set(8, &[1, 7])));
        assert!(!w.is_independent(&set(8, &[0])));
        assert_eq!(w.shape(), Shape::Uniform { cap: 2 });

        let p = Matroid::partition(vec![vec![0, 1, 2], vec![3, 4]], vec![1, 1]).unwrap();
        let w = p.subset_matroid(&set(5, &[0, 1, 3])).unwrap();
        // blocks intersected with a: {0,1} cap 1, {3} cap 1
        assert!(w.is_independent(&set(5, &[0, 3])));
        assert!(!w.is_independent(&set(5, &[0, 1])));
        assert!(!w.is_independent(&set(5, &[4])));
        assert_eq!(w.rank(), 2);
    }

    #[test]
    fn axioms_hold_for_uniform() {
        assert_eq!(verify_axioms_of(&Matroid::uniform(4, 2)).unwrap(), None);
    }

    #[test]
    fn axioms_fail_for_non_matroid_family() {
        // I = {∅, {a}, {b}, {a,b}, {c}} with a=0, b=1, c=2
        let family = [0b000u64, 0b001, 0b010, 0b011, 0b100];
        let v = verify_matroid_axioms(3, |s| family.contains(&s.mask()), 12).unwrap();
        assert_eq!(
            v,
            Some(AxiomViolation::NoAugmentation {
                smaller: set(3, &[2]),
                larger: set(3, &[0, 1]),
            })
        );
    }

    #[test]
    fn axiom_check_refuses_large_ground() {
        assert!(matches!(
            verify_axioms_of(&Matroid::uniform(13, 2)),
            Err(Error::GuardExceeded { .. })
        ));
    }

    #[test]
    fn descriptors_parse() {
        let d: MatroidDescriptor =
            serde_json::from_str(r#"{"kind":"partition","blocks":[[0,1],[2,3,4]],"caps":[1,2]}"#)
                .unwrap();
        assert_eq!(d.build().unwrap().rank(), 3);
        let d: MatroidDescriptor =
            serde_json::from_str(r#"{"kind":"transversal","n":5,"subsets":[[0,1],[1,2]]}"#)
                .unwrap();
        assert_eq!(d.build().unwrap().rank(), 2);
        let d: MatroidDescriptor = serde_json::from_str(r#"{"kind":"uniform","n":14,"alpha":5}"#).unwrap();
        assert_eq!(d.build().unwrap().to_descriptor().unwrap(), d);
    }
}
