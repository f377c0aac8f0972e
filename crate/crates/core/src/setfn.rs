//! Set-function oracles, built-in objective families, curvature, and
//! structural checks.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use log::warn;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lqg::LqgObjectiveDescriptor;
use crate::subset::{ElementId, Subset};

/// Absolute tolerance for structural checks and the non-negativity contract.
pub const STRUCTURE_TOL: f64 = 1e-9;
/// Default ground-set limit for exhaustive checks and total curvature.
pub const EXHAUSTIVE_LIMIT: usize = 10;
/// Memo entries kept per memoized function before further values go uncached.
pub const MEMO_CAPACITY: usize = 1 << 20;

pub type Evaluator = dyn Fn(&Subset) -> f64 + Send + Sync;

/// Evaluation oracle for a set function, normalized so that `f(∅) = 0`.
///
/// Every call into the underlying evaluator bumps an atomic counter. An
/// optional memo (see [`SetFunction::memoized`]) answers repeated queries
/// without touching the evaluator.
pub struct SetFunction {
    n: usize,
    name: String,
    evaluator: Arc<Evaluator>,
    offset: f64,
    calls: AtomicU64,
    memo: Option<Mutex<HashMap<Subset, f64>>>,
}

impl fmt::Debug for SetFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SetFunction")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("offset", &self.offset)
            .field("calls", &self.eval_count())
            .finish()
    }
}

impl Clone for SetFunction {
    /// Shares the evaluator; the clone starts with a zero counter and an empty memo.
    fn clone(&self) -> Self {
        Self {
            n: self.n,
            name: self.name.clone(),
            evaluator: Arc::clone(&self.evaluator),
            offset: self.offset,
            calls: AtomicU64::new(0),
            memo: self.memo.as_ref().map(|_| Mutex::new(HashMap::new())),
        }
    }
}

impl SetFunction {
    /// Wraps a raw evaluator. The raw value of the empty set becomes the
    /// normalization offset; computing it is not counted.
    pub fn new<F>(n: usize, name: impl Into<String>, evaluator: F) -> Result<Self>
    where
        F: Fn(&Subset) -> f64 + Send + Sync + 'static,
    {
        let offset = evaluator(&Subset::empty(n));
        if !offset.is_finite() {
            return Err(Error::Contract(format!("f(∅) is not finite: {offset}")));
        }
        Ok(Self {
            n,
            name: name.into(),
            evaluator: Arc::new(evaluator),
            offset,
            calls: AtomicU64::new(0),
            memo: None,
        })
    }

    /// A copy sharing the evaluator but with no memo and a zero counter.
    pub fn unmemoized(&self) -> Self {
        let mut f = self.clone();
        f.memo = None;
        f
    }

    /// Enables a shared memo keyed by subset.
    pub fn memoized(mut self) -> Self {
        self.memo = Some(Mutex::new(HashMap::new()));
        self
    }

    pub fn ground_size(&self) -> usize {
        self.n
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of evaluator calls so far.
    pub fn eval_count(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn reset_count(&self) {
        self.calls.store(0, Ordering::Relaxed);
    }

    /// Normalized value `f(s)`.
    pub fn evaluate(&self, s: &Subset) -> Result<f64> {
        if s.ground_size() != self.n {
            return Err(Error::GroundMismatch {
                expected: self.n,
                actual: s.ground_size(),
            });
        }
        if let Some(memo) = &self.memo {
            if let Some(&v) = memo.lock().expect("memo poisoned").get(s) {
                return Ok(v);
            }
        }
        let raw = (self.evaluator)(s);
        self.calls.fetch_add(1, Ordering::Relaxed);
        let v = raw - self.offset;
        if v.is_nan() {
            return Err(Error::Contract(format!("{}: f({s}) is NaN", self.name)));
        }
        if v < -STRUCTURE_TOL {
            return Err(Error::Contract(format!(
                "{}: f({s}) = {v} is negative after normalization",
                self.name
            )));
        }
        if let Some(memo) = &self.memo {
            let mut memo = memo.lock().expect("memo poisoned");
            if memo.len() < MEMO_CAPACITY {
                memo.insert(s.clone(), v);
            }
        }
        Ok(v)
    }

    /// `f(x ∪ y) − f(y)`.
    pub fn marginal(&self, x: &Subset, y: &Subset) -> Result<f64> {
        Ok(self.evaluate(&x.union(y))? - self.evaluate(y)?)
    }

    pub fn singleton(&self, id: ElementId) -> Result<f64> {
        self.evaluate(&Subset::empty(self.n).with(id))
    }

    /// Values of `f` on every subset, indexed by bitmask.
    pub fn value_table(&self, limit: usize) -> Result<Vec<f64>> {
        guard(self.n, limit, "exhaustive evaluation")?;
        (0u64..(1u64 << self.n))
            .map(|mask| self.evaluate(&Subset::from_mask(self.n, mask)))
            .collect()
    }
}

fn guard(n: usize, limit: usize, what: &'static str) -> Result<()> {
    if n > limit || n >= 63 {
        return Err(Error::GuardExceeded {
            what,
            count: 1u128 << n.min(127),
            limit: 1u128 << limit,
        });
    }
    Ok(())
}

/// Per-operation memo that leaves the function's own memo untouched.
struct LocalMemo<'a> {
    f: &'a SetFunction,
    cache: HashMap<Subset, f64>,
}

impl<'a> LocalMemo<'a> {
    fn new(f: &'a SetFunction) -> Self {
        Self {
            f,
            cache: HashMap::new(),
        }
    }

    fn get(&mut self, s: &Subset) -> Result<f64> {
        if let Some(&v) = self.cache.get(s) {
            return Ok(v);
        }
        let v = self.f.evaluate(s)?;
        self.cache.insert(s.clone(), v);
        Ok(v)
    }
}

/// Curvature value with the element attaining the minimum ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct Curvature {
    pub value: f64,
    pub witness: Option<ElementId>,
    pub excluded: Vec<ElementId>,
}

/// `1 − min_v [f(V) − f(V∖{v})] / f(v)` over elements with `f(v) ≠ 0`.
pub fn curvature_kappa(f: &SetFunction) -> Result<Curvature> {
    let n = f.ground_size();
    let full = Subset::full(n);
    let mut memo = LocalMemo::new(f);
    let f_full = memo.get(&full)?;
    let mut best: Option<(f64, ElementId)> = None;
    let mut excluded = Vec::new();
    for v in 0..n {
        let single = memo.get(&Subset::empty(n).with(v))?;
        let rest = memo.get(&full.without(v))?;
        if single == 0.0 {
            excluded.push(v);
            continue;
        }
        let ratio = (f_full - rest) / single;
        if best.is_none_or(|(b, _)| ratio < b) {
            best = Some((ratio, v));
        }
    }
    if !excluded.is_empty() {
        warn!(
            "{}: elements {excluded:?} have zero singleton value and are excluded from the curvature",
            f.name()
        );
    }
    let (ratio, v) = best.ok_or(Error::UndefinedCurvature)?;
    Ok(Curvature {
        value: clamp_unit(1.0 - ratio, "curvature"),
        witness: Some(v),
        excluded,
    })
}

fn clamp_unit(x: f64, what: &str) -> f64 {
    if !(-1e-9..=1.0 + 1e-9).contains(&x) {
        warn!("{what} {x} outside [0, 1]; clamping");
    }
    x.clamp(0.0, 1.0)
}

/// Minimizing triple of the total-curvature ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct TotalCurvatureWitness {
    pub element: ElementId,
    pub numerator_context: Subset,
    pub denominator_context: Subset,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TotalCurvature {
    pub value: f64,
    pub witness: Option<TotalCurvatureWitness>,
}

/// Exact total curvature
/// `1 − min_v min_{A,B ⊆ V∖{v}} [f(A+v) − f(A)] / [f(B+v) − f(B)]`.
///
/// Pairs whose denominator marginal is zero are skipped. Fails with a
/// contract error if a negative marginal shows `f` is not monotone.
pub fn total_curvature_exact(f: &SetFunction, limit: usize) -> Result<TotalCurvature> {
    let n = f.ground_size();
    guard(n, limit, "total curvature")?;
    let table = f.value_table(limit)?;
    let mut best: Option<(f64, ElementId, u64, u64)> = None;
    for v in 0..n {
        let bit = 1u64 << v;
        let contexts: Vec<u64> = (0u64..(1u64 << n)).filter(|m| m & bit == 0).collect();
        let gains: Vec<f64> = contexts
            .iter()
            .map(|&m| table[(m | bit) as usize] - table[m as usize])
            .collect();
        if let Some((k, g)) = gains
            .iter()
            .enumerate()
            .find(|(_, &g)| g < -STRUCTURE_TOL)
        {
            return Err(Error::Contract(format!(
                "{}: marginal of {v} at {} is {g}; total curvature needs a monotone function",
                f.name(),
                Subset::from_mask(n, contexts[k])
            )));
        }
        for (ia, &num) in gains.iter().enumerate() {
            for (ib, &den) in gains.iter().enumerate() {
                if den <= 0.0 {
                    continue;
                }
                let ratio = num.max(0.0) / den;
                if best.is_none_or(|(b, ..)| ratio < b) {
                    best = Some((ratio, v, contexts[ia], contexts[ib]));
                }
            }
        }
    }
    Ok(match best {
        Some((ratio, v, a, b)) => TotalCurvature {
            value: clamp_unit(1.0 - ratio, "total curvature"),
            witness: Some(TotalCurvatureWitness {
                element: v,
                numerator_context: Subset::from_mask(n, a),
                denominator_context: Subset::from_mask(n, b),
            }),
        },
        // every marginal is zero: f is identically zero, hence modular
        None => TotalCurvature {
            value: 0.0,
            witness: None,
        },
    })
}

/// A set `A` and element `v ∉ A` with `f(A ∪ {v}) < f(A)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityViolation {
    pub set: Subset,
    pub element: ElementId,
    pub drop: f64,
}

/// Sets `A ⊂ A'` and `v ∉ A'` with `f(A+v) − f(A) < f(A'+v) − f(A')`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubmodularityViolation {
    pub smaller: Subset,
    pub larger: Subset,
    pub element: ElementId,
    pub gain_smaller: f64,
    pub gain_larger: f64,
}

/// Exhaustive monotonicity check over single-element extensions, which
/// implies the general `A ⊆ A'` condition by chaining.
pub fn check_monotone(f: &SetFunction, limit: usize) -> Result<Option<MonotonicityViolation>> {
    let n = f.ground_size();
    let table = f.value_table(limit)?;
    for mask in 0u64..(1u64 << n) {
        for v in 0..n {
            let bit = 1u64 << v;
            if mask & bit != 0 {
                continue;
            }
            let drop = table[mask as usize] - table[(mask | bit) as usize];
            if drop > STRUCTURE_TOL {
                return Ok(Some(MonotonicityViolation {
                    set: Subset::from_mask(n, mask),
                    element: v,
                    drop,
                }));
            }
        }
    }
    Ok(None)
}

/// Exhaustive diminishing-returns check on adjacent pairs `A ⊂ A ∪ {w}`,
/// which is equivalent to the condition over all `A ⊆ A'`.
pub fn check_submodular(
    f: &SetFunction,
    limit: usize,
) -> Result<Option<SubmodularityViolation>> {
    let n = f.ground_size();
    let table = f.value_table(limit)?;
    let t = |m: u64| table[m as usize];
    for mask in 0u64..(1u64 << n) {
        for w in 0..n {
            let wbit = 1u64 << w;
            if mask & wbit != 0 {
                continue;
            }
            let larger = mask | wbit;
            for v in 0..n {
                let vbit = 1u64 << v;
                if larger & vbit != 0 {
                    continue;
                }
                let gain_smaller = t(mask | vbit) - t(mask);
                let gain_larger = t(larger | vbit) - t(larger);
                if gain_smaller < gain_larger - STRUCTURE_TOL {
                    return Ok(Some(SubmodularityViolation {
                        smaller: Subset::from_mask(n, mask),
                        larger: Subset::from_mask(n, larger),
                        element: v,
                        gain_smaller,
                        gain_larger,
                    }));
                }
            }
        }
    }
    Ok(None)
}

fn check_weights(weights: &[f64]) -> Result<()> {
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(Error::Input(format!("weights must be finite and non-negative, got {w}")));
    }
    Ok(())
}

/// `f(S) = Σ_{i∈S} w_i`.
pub fn make_modular(weights: Vec<f64>) -> Result<SetFunction> {
    check_weights(&weights)?;
    let n = weights.len();
    SetFunction::new(n, "modular", move |s| s.iter().map(|i| weights[i]).sum())
}

/// Dense item-index form of a coverage family.
fn index_items(sets: &[Vec<usize>]) -> Vec<Subset> {
    let mut ids: Vec<usize> = sets.iter().flatten().copied().collect();
    ids.sort_unstable();
    ids.dedup();
    let universe = ids.len();
    sets.iter()
        .map(|set| {
            let mut s = Subset::empty(universe);
            for item in set {
                s.insert(ids.binary_search(item).expect("item indexed"));
            }
            s
        })
        .collect()
}

fn covered(cover: &[Subset], s: &Subset) -> usize {
    let Some(first) = cover.first() else {
        return 0;
    };
    let mut acc = Subset::empty(first.ground_size());
    for i in s.iter() {
        acc = acc.union(&cover[i]);
    }
    acc.len()
}

/// `f(S) = |⋃_{i∈S} sets_i|`; element `i` covers the items in `sets[i]`.
pub fn make_coverage(sets: Vec<Vec<usize>>) -> Result<SetFunction> {
    let n = sets.len();
    let cover = index_items(&sets);
    SetFunction::new(n, "coverage", move |s| covered(&cover, s) as f64)
}

/// `f(S) = |⋃_{i∈S} sets_i|^p`; monotone, and not submodular once `p > 1`
/// and sets can be combined.
pub fn make_power_coverage(sets: Vec<Vec<usize>>, p: f64) -> Result<SetFunction> {
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::Input(format!("exponent must be positive, got {p}")));
    }
    let n = sets.len();
    let cover = index_items(&sets);
    SetFunction::new(n, format!("coverage^{p}"), move |s| {
        (covered(&cover, s) as f64).powf(p)
    })
}

/// `f(S) = (Σ_{i∈S} w_i)^p`; supermodular for `p > 1`.
pub fn make_power_modular(weights: Vec<f64>, p: f64) -> Result<SetFunction> {
    check_weights(&weights)?;
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::Input(format!("exponent must be positive, got {p}")));
    }
    let n = weights.len();
    SetFunction::new(n, format!("modular^{p}"), move |s| {
        s.iter().map(|i| weights[i]).sum::<f64>().powf(p)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Concave {
    Sqrt,
    Log1p,
}

impl Concave {
    fn apply(self, x: f64) -> f64 {
        match self {
            Concave::Sqrt => x.sqrt(),
            Concave::Log1p => x.ln_1p(),
        }
    }
}

/// `f(S) = φ(Σ_{i∈S} w_i)` for a concave, non-decreasing `φ` with `φ(0) = 0`.
pub fn make_concave_over_modular(weights: Vec<f64>, concave: Concave) -> Result<SetFunction> {
    check_weights(&weights)?;
    let n = weights.len();
    SetFunction::new(n, format!("{concave:?}-over-modular").to_lowercase(), move |s| {
        concave.apply(s.iter().map(|i| weights[i]).sum())
    })
}

const PSD_TOL: f64 = 1e-10;

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

fn check_symmetric(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Input(format!("{what} is not square")));
    }
    if (m - m.transpose()).amax() > 1e-9 * (1.0 + m.amax()) {
        return Err(Error::Input(format!("{what} is not symmetric")));
    }
    Ok(())
}

pub(crate) fn log_det_spd(m: &DMatrix<f64>) -> Option<f64> {
    m.clone()
        .cholesky()
        .map(|c| 2.0 * c.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

/// `f(S) = log det(base + Σ_{i∈S} M_i) − log det(base)` with PSD `M_i` and
/// positive-definite `base`.
pub fn make_logdet(base: DMatrix<f64>, matrices: Vec<DMatrix<f64>>) -> Result<SetFunction> {
    check_symmetric(&base, "base matrix")?;
    let d = base.nrows();
    if min_eigenvalue(&base) <= 0.0 {
        return Err(Error::Input("base matrix is not positive definite".into()));
    }
    for (i, m) in matrices.iter().enumerate() {
        check_symmetric(m, &format!("matrix {i}"))?;
        if m.nrows() != d {
            return Err(Error::Input(format!(
                "matrix {i} is {}×{}, expected {d}×{d}",
                m.nrows(),
                m.ncols()
            )));
        }
        if min_eigenvalue(m) < -PSD_TOL {
            return Err(Error::Input(format!("matrix {i} is not positive semi-definite")));
        }
    }
    let n = matrices.len();
    SetFunction::new(n, "logdet", move |s| {
        let mut acc = base.clone();
        for i in s.iter() {
            acc += &matrices[i];
        }
        log_det_spd(&acc).unwrap_or(f64::NAN)
    })
}

/// Base matrix of a logdet descriptor: `"identity"` or an explicit matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LogdetBase {
    Named(String),
    Matrix(Vec<Vec<f64>>),
}

/// JSON form of the built-in objective families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectiveDescriptor {
    Modular {
        weights: Vec<f64>,
    },
    Coverage {
        sets: Vec<Vec<usize>>,
    },
    Logdet {
        dim: usize,
        matrices: Vec<Vec<Vec<f64>>>,
        #[serde(default = "identity_base")]
        base: LogdetBase,
    },
    ConcaveOverModular {
        weights: Vec<f64>,
        concave: Concave,
    },
    PowerModular {
        weights: Vec<f64>,
        exponent: f64,
    },
    PowerCoverage {
        sets: Vec<Vec<usize>>,
        exponent: f64,
    },
    LqgSensing(LqgObjectiveDescriptor),
}

fn identity_base() -> LogdetBase {
    LogdetBase::Named("identity".into())
}

pub(crate) fn matrix_from_rows(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::Input(format!("{what}: ragged rows")));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

pub(crate) fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

impl ObjectiveDescriptor {
    pub fn build(&self) -> Result<SetFunction> {
        match self {
            ObjectiveDescriptor::Modular { weights } => make_modular(weights.clone()),
            ObjectiveDescriptor::Coverage { sets } => make_coverage(sets.clone()),
            ObjectiveDescriptor::Logdet {
                dim,
                matrices,
                base,
            } => {
                let base = match base {
                    LogdetBase::Named(name) if name == "identity" => DMatrix::identity(*dim, *dim),
                    LogdetBase::Named(name) => {
                        return Err(Error::Input(format!("unknown logdet base {name:?}")))
                    }
                    LogdetBase::Matrix(rows) => matrix_from_rows(rows, "base")?,
                };
                let mats = matrices
                    .iter()
                    .enumerate()
                    .map(|(i, rows)| matrix_from_rows(rows, &format!("matrix {i}")))
                    .collect::<Result<Vec<_>>>()?;
                make_logdet(base, mats)
            }
            ObjectiveDescriptor::ConcaveOverModular { weights, concave } => {
                make_concave_over_modular(weights.clone(), *concave)
            }
            ObjectiveDescriptor::PowerModular { weights, exponent } => {
                make_power_modular(weights.clone(), *exponent)
            }
            ObjectiveDescriptor::PowerCoverage { sets, exponent } => {
                make_power_coverage(sets.clone(), *exponent)
            }
            ObjectiveDescriptor::LqgSensing(d) => d.build_scenario()?.objective(),
        }
    }

    /// Ground-set size implied by the descriptor.
    pub fn ground_size(&self) -> usize {
        match self {
            ObjectiveDescriptor::Modular { weights }
            | ObjectiveDescriptor::ConcaveOverModular { weights, .. }
            | ObjectiveDescriptor::PowerModular { weights, .. } => weights.len(),
            ObjectiveDescriptor::Coverage { sets } | ObjectiveDescriptor::PowerCoverage { sets, .. } => {
                sets.len()
            }
            ObjectiveDescriptor::Logdet { matrices, .. } => matrices.len(),
            ObjectiveDescriptor::LqgSensing(d) => d.sensors.len(),
        }
    }
}

/// Distinct universe items of a coverage family.
pub fn coverage_universe(sets: &[Vec<usize>]) -> usize {
    sets.iter().flatten().collect::<HashSet<_>>().len()
}
