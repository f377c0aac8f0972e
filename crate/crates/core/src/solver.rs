//! Two-phase resilient selection: a bait set of high-value elements that is
//! independent in both the selection and the removal matroid, completed by a
//! matroid greedy over the remaining elements.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use log::warn;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matroid::{IndependenceOracle, Matroid, Shape};
use crate::setfn::SetFunction;
use crate::subset::{ElementId, Subset};

pub const GUARANTEES_VOID: &str =
    "removal matroid is neither uniform nor a partition matroid sharing the selection partition; guarantees void";

/// How the greedy phase finds its argmax.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GreedyMode {
    /// Re-evaluate every candidate each round.
    #[default]
    Full,
    /// Lazy evaluation with stale marginal upper bounds. Only sound for
    /// submodular objectives; the caller vouches for that.
    LazyAssumeSubmodular,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverOutput {
    #[serde(serialize_with = "ser_subset")]
    pub a1: Subset,
    #[serde(serialize_with = "ser_subset")]
    pub a2: Subset,
    #[serde(serialize_with = "ser_subset")]
    pub a: Subset,
    pub eval_count: u64,
    pub warnings: Vec<String>,
}

pub(crate) fn ser_subset<S: serde::Serializer>(s: &Subset, ser: S) -> std::result::Result<S::Ok, S::Error> {
    ser.collect_seq(s.iter())
}

/// Upper bound on evaluator calls used by [`solve_resilient`]: `2n²`.
pub fn evaluation_budget(n: usize) -> u64 {
    2 * (n as u64) * (n as u64)
}

/// Whether the removal matroid is one of the families the guarantees cover.
pub fn guarantees_apply(selection: &Matroid, removal: &Matroid) -> bool {
    match (selection.shape(), removal.shape()) {
        (_, Shape::Uniform { .. }) => true,
        (Shape::Partition { block_of: a, .. }, Shape::Partition { block_of: b, .. }) => a == b,
        _ => false,
    }
}

pub fn solve_resilient(f: &SetFunction, selection: &Matroid, removal: &Matroid) -> Result<SolverOutput> {
    solve_resilient_with(f, selection, removal, GreedyMode::Full)
}

pub fn solve_resilient_with(
    f: &SetFunction,
    selection: &Matroid,
    removal: &Matroid,
    mode: GreedyMode,
) -> Result<SolverOutput> {
    let n = f.ground_size();
    for m in [selection, removal] {
        if m.ground_size() != n {
            return Err(Error::GroundMismatch {
                expected: n,
                actual: m.ground_size(),
            });
        }
    }
    let mut warnings = Vec::new();
    if !guarantees_apply(selection, removal) {
        warn!("{GUARANTEES_VOID}");
        warnings.push(GUARANTEES_VOID.to_string());
    }
    let start = f.eval_count();

    // Bait phase: the argmax of f(y) over unscanned y does not depend on the
    // selection so far, so one descending sort reproduces the scan order.
    let mut ranked: Vec<(ElementId, f64)> = (0..n)
        .map(|y| f.singleton(y).map(|v| (y, v)))
        .collect::<Result<_>>()?;
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut a1 = Subset::empty(n);
    for &(y, _) in &ranked {
        let candidate = a1.with(y);
        if selection.is_independent(&candidate) && removal.is_independent(&candidate) {
            a1 = candidate;
        }
    }

    let a2 = greedy_extend(f, selection, &a1, mode)?;
    let a = a1.union(&a2);
    Ok(SolverOutput {
        a1,
        a2,
        a,
        eval_count: f.eval_count() - start,
        warnings,
    })
}

/// Matroid greedy over `V ∖ pinned`: repeatedly takes the unscanned `y`
/// maximizing `f(S ∪ {y})` (lowest id on ties) and keeps it when
/// `pinned ∪ S ∪ {y}` is independent. Returns `S`.
pub fn greedy_extend(
    f: &SetFunction,
    matroid: &Matroid,
    pinned: &Subset,
    mode: GreedyMode,
) -> Result<Subset> {
    match mode {
        GreedyMode::Full => greedy_full(f, matroid, pinned),
        GreedyMode::LazyAssumeSubmodular => greedy_lazy(f, matroid, pinned),
    }
}

fn greedy_full(f: &SetFunction, matroid: &Matroid, pinned: &Subset) -> Result<Subset> {
    let n = f.ground_size();
    let mut chosen = Subset::empty(n);
    let mut remaining: Vec<ElementId> = pinned.complement().to_vec();
    while !remaining.is_empty() {
        let mut best: Option<(usize, f64)> = None;
        for (k, &y) in remaining.iter().enumerate() {
            let v = f.evaluate(&chosen.with(y))?;
            // strict comparison keeps the lowest id among ties
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((k, v));
            }
        }
        let (k, _) = best.expect("remaining is non-empty");
        let x = remaining.remove(k);
        if matroid.is_independent(&pinned.union(&chosen).with(x)) {
            chosen.insert(x);
        }
    }
    Ok(chosen)
}

#[derive(Debug, PartialEq)]
struct Candidate {
    gain: f64,
    id: ElementId,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .total_cmp(&other.gain)
            .then_with(|| other.id.cmp(&self.id))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn greedy_lazy(f: &SetFunction, matroid: &Matroid, pinned: &Subset) -> Result<Subset> {
    let n = f.ground_size();
    let mut chosen = Subset::empty(n);
    let mut base = 0.0;
    let mut heap: BinaryHeap<Candidate> = pinned
        .complement()
        .iter()
        .map(|id| Candidate {
            gain: f64::INFINITY,
            id,
        })
        .collect();
    while let Some(top) = heap.pop() {
        let gain = f.evaluate(&chosen.with(top.id))? - base;
        let fresh = Candidate { gain, id: top.id };
        if heap.peek().is_some_and(|next| *next > fresh) {
            heap.push(fresh);
            continue;
        }
        if matroid.is_independent(&pinned.union(&chosen).with(top.id)) {
            chosen.insert(top.id);
            base += gain;
        }
    }
    Ok(chosen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setfn::{make_coverage, make_modular};

    fn set(n: usize, ids: &[usize]) -> Subset {
        Subset::from_ids(n, ids.iter().copied()).unwrap()
    }

    #[test]
    fn modular_example() {
        let f = make_modular(vec![3.0, 2.0, 1.0]).unwrap();
        let out = solve_resilient(&f, &Matroid::uniform(3, 2), &Matroid::uniform(3, 1)).unwrap();
        assert_eq!(out.a1, set(3, &[0]));
        assert_eq!(out.a2, set(3, &[1]));
        assert_eq!(out.a, set(3, &[0, 1]));
        assert!(out.warnings.is_empty());
    }

    #[test]
    fn zero_removal_reduces_to_greedy() {
        let f = make_coverage(vec![vec![1, 2], vec![2, 3], vec![1], vec![3]]).unwrap();
        let i = Matroid::uniform(4, 2);
        let out = solve_resilient(&f, &i, &Matroid::uniform(4, 0)).unwrap();
        assert!(out.a1.is_empty());
        let greedy = greedy_extend(&f, &i, &Subset::empty(4), GreedyMode::Full).unwrap();
        assert_eq!(out.a, greedy);
        assert_eq!(out.a, set(4, &[0, 1]));
    }

    #[test]
    fn budget() {
        assert_eq!(evaluation_budget(0), 0);
        assert_eq!(evaluation_budget(10), 200);
    }

    #[test]
    fn degenerate_inputs() {
        let f = make_modular(vec![]).unwrap();
        let out = solve_resilient(&f, &Matroid::uniform(0, 3), &Matroid::uniform(0, 1)).unwrap();
        assert!(out.a.is_empty());
        let f = make_modular(vec![1.0, 2.0]).unwrap();
        let out = solve_resilient(&f, &Matroid::uniform(2, 0), &Matroid::uniform(2, 1)).unwrap();
        assert!(out.a.is_empty());
    }

    #[test]
    fn ground_mismatch_is_an_error() {
        let f = make_modular(vec![1.0, 2.0]).unwrap();
        assert!(matches!(
            solve_resilient(&f, &Matroid::uniform(3, 1), &Matroid::uniform(2, 1)),
            Err(Error::GroundMismatch { .. })
        ));
    }

    #[test]
    fn warns_for_unsupported_removal_matroid() {
        let f = make_modular(vec![1.0, 2.0, 3.0]).unwrap();
        let t = Matroid::transversal(3, vec![vec![0, 1], vec![2]]).unwrap();
        let out = solve_resilient(&f, &Matroid::uniform(3, 2), &t).unwrap();
        assert_eq!(out.warnings, vec![GUARANTEES_VOID.to_string()]);

        let p = Matroid::partition(vec![vec![0, 1], vec![2]], vec![1, 1]).unwrap();
        let q = Matroid::partition(vec![vec![0], vec![1, 2]], vec![1, 1]).unwrap();
        assert!(guarantees_apply(&p, &p));
        assert!(!guarantees_apply(&p, &q));
    }

    #[test]
    fn lazy_matches_full_on_coverage() {
        let sets = vec![vec![0, 1, 2], vec![2, 3], vec![3, 4, 5], vec![0, 5], vec![6], vec![1, 6]];
        let f = make_coverage(sets).unwrap();
        for alpha in 0..6 {
            for beta in 0..alpha {
                let i = Matroid::uniform(6, alpha);
                let r = Matroid::uniform(6, beta);
                let full = solve_resilient_with(&f, &i, &r, GreedyMode::Full).unwrap();
                let lazy = solve_resilient_with(&f, &i, &r, GreedyMode::LazyAssumeSubmodular).unwrap();
                assert_eq!(full.a, lazy.a);
                assert_eq!(full.a2, lazy.a2);
            }
        }
    }
}
