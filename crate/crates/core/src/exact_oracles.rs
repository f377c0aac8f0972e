//! Brute-force ground truth for small instances: the worst-case removal from
//! a fixed selection, the optimal resilient selection, the classical greedy,
//! and a seeded random feasible baseline.

use std::cmp::Ordering;

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matroid::{IndependenceOracle, Matroid, Shape};
use crate::setfn::SetFunction;
use crate::solver::{greedy_extend, ser_subset, GreedyMode};
use crate::subset::{binomial, count_subsets_up_to, ElementId, Subset};

/// Environment variable overriding both enumeration limits.
pub const GUARD_ENV: &str = "RESILIMAT_ORACLE_GUARD";
const MAX_SCAN_GROUND: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleOptions {
    /// Most removal candidates a single worst-case search may enumerate.
    pub removal_limit: u128,
    /// Most (selection, removal) pairs the optimal search may enumerate.
    pub pair_limit: u128,
    /// Assume `f` is monotone: only maximal removals (uniform removal matroid)
    /// and only bases of the selection matroid are enumerated.
    pub monotone_shortcut: bool,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            removal_limit: 1_000_000,
            pair_limit: 20_000_000,
            monotone_shortcut: true,
        }
    }
}

impl OracleOptions {
    /// Defaults, with limits taken from `RESILIMAT_ORACLE_GUARD` when set.
    pub fn from_env() -> Self {
        let mut opts = Self::default();
        if let Some(limit) = std::env::var(GUARD_ENV).ok().and_then(|v| v.parse().ok()) {
            opts.removal_limit = limit;
            opts.pair_limit = limit;
        }
        opts
    }

    pub fn exhaustive() -> Self {
        Self {
            monotone_shortcut: false,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    /// The optimizing set: the removal for worst-case searches, the selection
    /// for the optimal search.
    #[serde(serialize_with = "ser_subset")]
    pub argset: Subset,
    pub value: f64,
    /// Candidate sets whose value was taken.
    pub explored: u64,
    /// Worst-case removal from `argset` (optimal search only).
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "ser_opt_subset")]
    pub removal: Option<Subset>,
}

fn ser_opt_subset<S: serde::Serializer>(s: &Option<Subset>, ser: S) -> std::result::Result<S::Ok, S::Error> {
    match s {
        Some(s) => ser.collect_seq(s.iter()),
        None => ser.serialize_none(),
    }
}

fn removal_count(size: usize, removal: &Matroid, opts: &OracleOptions) -> u128 {
    match removal.shape() {
        Shape::Uniform { cap } if opts.monotone_shortcut => binomial(size, cap.min(size)),
        Shape::Uniform { cap } => count_subsets_up_to(size, cap),
        _ => 1u128 << size.min(127),
    }
}

/// `B*(a) ∈ argmin_{B ⊆ a, B ∈ I'} f(a ∖ B)`, ties broken toward the
/// lexicographically smallest `B`.
pub fn worst_case_removal(
    f: &SetFunction,
    a: &Subset,
    removal: &Matroid,
    opts: &OracleOptions,
) -> Result<OracleResult> {
    removal.check_ground(a)?;
    let count = removal_count(a.len(), removal, opts);
    if count > opts.removal_limit {
        return Err(Error::GuardExceeded {
            what: "worst-case removal",
            count,
            limit: opts.removal_limit,
        });
    }
    let ids = a.to_vec();
    let n = a.ground_size();
    let mut best: Option<(f64, Subset)> = None;
    let mut explored = 0u64;
    let mut consider = |b: Subset| -> Result<()> {
        let v = f.evaluate(&a.difference(&b))?;
        explored += 1;
        let better = match &best {
            None => true,
            Some((bv, bs)) => v < *bv || (v == *bv && b.lex_cmp(bs) == Ordering::Less),
        };
        if better {
            best = Some((v, b));
        }
        Ok(())
    };
    match removal.shape() {
        Shape::Uniform { cap } => {
            let sizes = if opts.monotone_shortcut {
                let k = cap.min(ids.len());
                k..=k
            } else {
                0..=cap.min(ids.len())
            };
            for k in sizes {
                for combo in ids.iter().copied().combinations(k) {
                    consider(Subset::from_ids(n, combo)?)?;
                }
            }
        }
        _ => {
            for mask in 0u64..(1u64 << ids.len()) {
                let b = Subset::from_ids(
                    n,
                    ids.iter()
                        .enumerate()
                        .filter(|(k, _)| mask & (1 << k) != 0)
                        .map(|(_, &id)| id),
                )?;
                if removal.is_independent(&b) {
                    consider(b)?;
                }
            }
        }
    }
    let (value, argset) = best.expect("the empty removal is always feasible");
    Ok(OracleResult {
        argset,
        value,
        explored,
        removal: None,
    })
}

fn is_maximal(m: &Matroid, s: &Subset) -> bool {
    (0..m.ground_size()).all(|id| s.contains(id) || !m.is_independent(&s.with(id)))
}

/// Selection candidates for the optimal search.
fn selections(selection: &Matroid, opts: &OracleOptions) -> Result<Vec<Subset>> {
    let n = selection.ground_size();
    if let (Shape::Uniform { cap }, true) = (selection.shape(), opts.monotone_shortcut) {
        let k = cap.min(n);
        let count = binomial(n, k);
        if count > opts.pair_limit {
            return Err(Error::GuardExceeded {
                what: "optimal resilient selection",
                count,
                limit: opts.pair_limit,
            });
        }
        return (0..n)
            .combinations(k)
            .map(|c| Subset::from_ids(n, c))
            .collect();
    }
    if n > MAX_SCAN_GROUND {
        return Err(Error::GuardExceeded {
            what: "optimal resilient selection",
            count: 1u128 << n,
            limit: 1u128 << MAX_SCAN_GROUND,
        });
    }
    Ok((0u64..(1u64 << n))
        .map(|mask| Subset::from_mask(n, mask))
        .filter(|s| selection.is_independent(s))
        .filter(|s| !opts.monotone_shortcut || is_maximal(selection, s))
        .collect())
}

/// Exact max-min value `f*` with a witness selection `A*` (ties toward the
/// lexicographically smallest selection) and its worst-case removal.
pub fn optimal_resilient(
    f: &SetFunction,
    selection: &Matroid,
    removal: &Matroid,
    opts: &OracleOptions,
) -> Result<OracleResult> {
    let n = f.ground_size();
    for m in [selection, removal] {
        if m.ground_size() != n {
            return Err(Error::GroundMismatch {
                expected: n,
                actual: m.ground_size(),
            });
        }
    }
    let candidates = selections(selection, opts)?;
    let pairs: u128 = candidates
        .iter()
        .map(|a| removal_count(a.len(), removal, opts))
        .sum();
    if pairs > opts.pair_limit {
        return Err(Error::GuardExceeded {
            what: "optimal resilient selection",
            count: pairs,
            limit: opts.pair_limit,
        });
    }
    let mut best: Option<(f64, Subset, Subset)> = None;
    let mut explored = 0u64;
    for a in candidates {
        let inner = worst_case_removal(f, &a, removal, opts)?;
        explored += inner.explored;
        let better = match &best {
            None => true,
            Some((bv, ba, _)) => {
                inner.value > *bv || (inner.value == *bv && a.lex_cmp(ba) == Ordering::Less)
            }
        };
        if better {
            best = Some((inner.value, a, inner.argset));
        }
    }
    let (value, argset, b) = best.expect("the empty selection is always feasible");
    Ok(OracleResult {
        argset,
        value,
        explored,
        removal: Some(b),
    })
}

/// The classical matroid greedy: repeatedly adds the feasible element
/// maximizing `f(A ∪ {y})`, lowest id on ties.
pub fn greedy_nonresilient(f: &SetFunction, selection: &Matroid) -> Result<Subset> {
    greedy_extend(f, selection, &Subset::empty(selection.ground_size()), GreedyMode::Full)
}

/// Scans a seeded shuffle of the ground set, keeping each element that
/// preserves independence.
pub fn random_feasible(selection: &Matroid, seed: u64) -> Subset {
    let n = selection.ground_size();
    let mut order: Vec<ElementId> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut s = Subset::empty(n);
    for id in order {
        s.insert(id);
        if !selection.is_independent(&s) {
            s.remove(id);
        }
    }
    s
}

/// `max f(X)` over `X ⊆ V ∖ pinned` with `X ∪ pinned` independent, by
/// enumeration.
pub fn best_extension(f: &SetFunction, selection: &Matroid, pinned: &Subset) -> Result<OracleResult> {
    let n = f.ground_size();
    if n > MAX_SCAN_GROUND {
        return Err(Error::GuardExceeded {
            what: "best extension",
            count: 1u128 << n,
            limit: 1u128 << MAX_SCAN_GROUND,
        });
    }
    let restricted = selection.restrict(pinned)?;
    let mut best: Option<(f64, Subset)> = None;
    let mut explored = 0;
    for mask in 0u64..(1u64 << n) {
        let x = Subset::from_mask(n, mask);
        if !restricted.is_independent(&x) {
            continue;
        }
        let v = f.evaluate(&x)?;
        explored += 1;
        if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
            best = Some((v, x));
        }
    }
    let (value, argset) = best.expect("the empty set is always feasible");
    Ok(OracleResult {
        argset,
        value,
        explored,
        removal: None,
    })
}
