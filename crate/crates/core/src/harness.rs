//! Monte Carlo comparison of four sensor-selection strategies on the UAV
//! landing scenario under worst-case sensor failures.
//!
//! Each run draws a fresh scenario (random ground sensors and start
//! position). For every `(α, β)` cell the selection matroid is uniform of
//! rank `α` over the catalog and the failure matroid is uniform of rank `β`.
//! Every strategy's selection is attacked by the exact worst-case removal
//! against the reward objective, and the surviving sensors are scored by
//! closed-loop simulation.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::Write;

use log::debug;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact_oracles::{greedy_nonresilient, optimal_resilient, random_feasible, worst_case_removal, OracleOptions};
use crate::lqg::{build_landing_scenario, simulate_closed_loop_cost, LqgWeights, Scenario, ScenarioConfig};
use crate::matroid::{IndependenceOracle, Matroid};
use crate::setfn::SetFunction;
use crate::solver::solve_resilient;
use crate::subset::Subset;

pub const CSV_HEADER: [&str; 8] = ["alpha", "beta", "run", "selector", "selected", "removed", "cost", "evals"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub alphas: Vec<usize>,
    pub betas: Vec<usize>,
    pub runs: usize,
    pub seed: u64,
    /// Closed-loop rollouts averaged per cost figure.
    pub rollouts: usize,
    #[serde(rename = "T", alias = "horizon")]
    pub horizon: usize,
    pub dt: f64,
    pub n_ground: usize,
    pub removal_limit: u128,
    pub pair_limit: u128,
    pub output: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let guards = OracleOptions::from_env();
        Self {
            alphas: (2..=12).collect(),
            betas: vec![1, 4, 7, 10],
            runs: 20,
            seed: 0,
            rollouts: 200,
            horizon: 20,
            dt: 1.0,
            n_ground: 12,
            removal_limit: guards.removal_limit,
            pair_limit: guards.pair_limit,
            output: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() || self.betas.is_empty() {
            return Err(Error::Input("alphas and betas must be non-empty".into()));
        }
        if self.alphas.contains(&0) || self.betas.contains(&0) {
            return Err(Error::Input("alphas and betas must be positive".into()));
        }
        if self.runs == 0 || self.rollouts == 0 {
            return Err(Error::Input("runs and rollouts must be at least 1".into()));
        }
        Ok(())
    }

    fn oracle_options(&self) -> OracleOptions {
        OracleOptions {
            removal_limit: self.removal_limit,
            pair_limit: self.pair_limit,
            monotone_shortcut: true,
        }
    }

    /// Scenario seed of run `run`.
    pub fn run_seed(&self, run: usize) -> u64 {
        mix(self.seed, run as u64)
    }
}

/// SplitMix64 finalizer over `seed ⊕ k`-style combinations.
fn mix(seed: u64, k: u64) -> u64 {
    let mut z = seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(k.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Selector {
    #[serde(rename = "optimal")]
    Optimal,
    #[serde(rename = "random*")]
    Random,
    #[serde(rename = "logdet")]
    Logdet,
    #[serde(rename = "s-LQG")]
    SLqg,
}

impl Selector {
    pub const ALL: [Selector; 4] = [Selector::Optimal, Selector::Random, Selector::Logdet, Selector::SLqg];

    pub fn as_str(self) -> &'static str {
        match self {
            Selector::Optimal => "optimal",
            Selector::Random => "random*",
            Selector::Logdet => "logdet",
            Selector::SLqg => "s-LQG",
        }
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub alpha: usize,
    pub beta: usize,
    pub run: usize,
    pub selector: Selector,
    pub selected: Subset,
    pub removed: Subset,
    /// Simulated cost of the surviving sensors; `+inf` when `β > α`, NaN
    /// when the selector could not complete.
    pub cost: f64,
    /// Reward objective of the surviving sensors.
    pub surrogate: f64,
    pub evals: u64,
    pub note: Option<String>,
}

impl ResultRow {
    pub fn completed(&self) -> bool {
        !self.cost.is_nan()
    }

    pub fn surviving(&self) -> Subset {
        self.selected.difference(&self.removed)
    }
}

/// Per-run state shared by all cells: the scenario, its weights, and a
/// memoized objective.
pub struct RunContext {
    pub run: usize,
    pub run_seed: u64,
    pub scenario: Scenario,
    pub weights: LqgWeights,
    pub objective: SetFunction,
    rollouts: usize,
    options: OracleOptions,
    costs: HashMap<Subset, f64>,
}

impl RunContext {
    pub fn new(run: usize, run_seed: u64, config: &ExperimentConfig) -> Result<Self> {
        let scenario = build_landing_scenario(&ScenarioConfig {
            seed: run_seed,
            horizon: config.horizon,
            dt: config.dt,
            n_ground: config.n_ground,
        })?;
        let weights = scenario.weights()?;
        let objective = scenario.objective()?.memoized();
        Ok(Self {
            run,
            run_seed,
            scenario,
            weights,
            objective,
            rollouts: config.rollouts,
            options: config.oracle_options(),
            costs: HashMap::new(),
        })
    }

    /// Seed of the closed-loop rollouts; shared by every row of the run.
    pub fn simulation_seed(&self) -> u64 {
        mix(self.run_seed, u64::MAX)
    }

    /// Simulated cost of a sensor set.
    pub fn cost_of(&mut self, sensors: &Subset) -> Result<f64> {
        if let Some(&c) = self.costs.get(sensors) {
            return Ok(c);
        }
        let c = simulate_closed_loop_cost(
            &self.scenario.system,
            &self.weights,
            &self.scenario.catalog,
            sensors,
            self.rollouts,
            self.simulation_seed(),
        )?;
        self.costs.insert(sensors.clone(), c);
        Ok(c)
    }

    fn select(&self, selector: Selector, alpha: usize, beta: usize) -> Result<(Subset, u64)> {
        let n = self.scenario.catalog.len();
        let i = Matroid::uniform(n, alpha);
        let iprime = Matroid::uniform(n, beta);
        match selector {
            Selector::Optimal => {
                let r = optimal_resilient(&self.objective, &i, &iprime, &self.options)?;
                Ok((r.argset, r.explored))
            }
            Selector::Random => Ok((random_feasible(&i, mix(self.run_seed, (alpha * 1000 + beta) as u64)), 0)),
            Selector::Logdet => {
                let f = self.objective.unmemoized();
                let s = greedy_nonresilient(&f, &i)?;
                Ok((s, f.eval_count()))
            }
            Selector::SLqg => {
                let f = self.objective.unmemoized();
                let out = solve_resilient(&f, &i, &iprime)?;
                Ok((out.a, out.eval_count))
            }
        }
    }

    /// The four rows of one `(α, β)` cell.
    pub fn run_cell(&mut self, alpha: usize, beta: usize) -> Vec<ResultRow> {
        let n = self.scenario.catalog.len();
        let iprime = Matroid::uniform(n, beta);
        Selector::ALL
            .iter()
            .map(|&selector| {
                let attempt = (|| -> Result<ResultRow> {
                    let (selected, evals) = self.select(selector, alpha, beta)?;
                    let removal = worst_case_removal(&self.objective, &selected, &iprime, &self.options)?;
                    let removed = removal.argset;
                    debug_assert!(iprime.is_independent(&removed));
                    let cost = if beta > alpha {
                        f64::INFINITY
                    } else {
                        self.cost_of(&selected.difference(&removed))?
                    };
                    Ok(ResultRow {
                        alpha,
                        beta,
                        run: self.run,
                        selector,
                        selected,
                        removed,
                        cost,
                        surrogate: removal.value,
                        evals,
                        note: None,
                    })
                })();
                attempt.unwrap_or_else(|e| {
                    debug!("run {} cell ({alpha},{beta}) {selector}: {e}", self.run);
                    ResultRow {
                        alpha,
                        beta,
                        run: self.run,
                        selector,
                        selected: Subset::empty(n),
                        removed: Subset::empty(n),
                        cost: f64::NAN,
                        surrogate: f64::NAN,
                        evals: 0,
                        note: Some(e.to_string()),
                    }
                })
            })
            .collect()
    }
}

/// One cell of one run with a freshly built scenario.
pub fn run_cell(alpha: usize, beta: usize, run: usize, config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let mut ctx = RunContext::new(run, config.run_seed(run), config)?;
    Ok(ctx.run_cell(alpha, beta))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectorSummary {
    pub alpha: usize,
    pub beta: usize,
    pub selector: Selector,
    pub completed_runs: usize,
    pub mean_cost: f64,
    pub mean_surrogate: f64,
}

/// s-LQG relative to the optimal selector in a cell with `β ≤ α`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellRatio {
    pub alpha: usize,
    pub beta: usize,
    /// Mean surviving reward of s-LQG over that of the optimal selector;
    /// 1 when both are zero.
    pub surrogate_ratio: f64,
    /// Mean optimal cost over mean s-LQG cost.
    pub cost_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub selectors: Vec<SelectorSummary>,
    pub ratios: Vec<CellRatio>,
}

impl Summary {
    pub fn get(&self, alpha: usize, beta: usize, selector: Selector) -> Option<&SelectorSummary> {
        self.selectors
            .iter()
            .find(|s| s.alpha == alpha && s.beta == beta && s.selector == selector)
    }
}

pub fn summarize(rows: &[ResultRow]) -> Summary {
    let mut groups: BTreeMap<(usize, usize, Selector), Vec<&ResultRow>> = BTreeMap::new();
    for row in rows {
        groups.entry((row.alpha, row.beta, row.selector)).or_default().push(row);
    }
    let selectors: Vec<SelectorSummary> = groups
        .into_iter()
        .map(|((alpha, beta, selector), rows)| {
            let done: Vec<&&ResultRow> = rows.iter().filter(|r| r.completed()).collect();
            let k = done.len();
            let mean = |g: fn(&ResultRow) -> f64| {
                if k == 0 {
                    f64::NAN
                } else {
                    done.iter().map(|r| g(r)).sum::<f64>() / k as f64
                }
            };
            SelectorSummary {
                alpha,
                beta,
                selector,
                completed_runs: k,
                mean_cost: mean(|r| r.cost),
                mean_surrogate: mean(|r| r.surrogate),
            }
        })
        .collect();
    let mut ratios = Vec::new();
    for opt in selectors.iter().filter(|s| s.selector == Selector::Optimal && s.beta <= s.alpha) {
        let Some(slqg) = selectors
            .iter()
            .find(|s| s.alpha == opt.alpha && s.beta == opt.beta && s.selector == Selector::SLqg)
        else {
            continue;
        };
        let surrogate_ratio = if opt.mean_surrogate == 0.0 && slqg.mean_surrogate == 0.0 {
            1.0
        } else {
            slqg.mean_surrogate / opt.mean_surrogate
        };
        ratios.push(CellRatio {
            alpha: opt.alpha,
            beta: opt.beta,
            surrogate_ratio,
            cost_ratio: opt.mean_cost / slqg.mean_cost,
        });
    }
    Summary { selectors, ratios }
}

/// Runs every cell of every run, in parallel across runs. Rows come back
/// sorted by `(α, β, run, selector)`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<(Vec<ResultRow>, Summary)> {
    config.validate()?;
    let per_run: Vec<Vec<ResultRow>> = (0..config.runs)
        .into_par_iter()
        .map(|run| -> Result<Vec<ResultRow>> {
            let mut ctx = RunContext::new(run, config.run_seed(run), config)?;
            let mut rows = Vec::new();
            for &alpha in &config.alphas {
                for &beta in &config.betas {
                    rows.extend(ctx.run_cell(alpha, beta));
                }
            }
            debug!("run {run} done");
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    let mut rows: Vec<ResultRow> = per_run.into_iter().flatten().collect();
    rows.sort_by_key(|r| (r.alpha, r.beta, r.run, r.selector));
    let summary = summarize(&rows);
    Ok((rows, summary))
}

fn format_cost(c: f64) -> String {
    if c == f64::INFINITY {
        "inf".into()
    } else if c.is_nan() {
        "nan".into()
    } else {
        format!("{c}")
    }
}

/// Writes the rows as CSV with the fixed header.
pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let io = |e: csv::Error| Error::Input(format!("csv: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in rows {
        w.write_record([
            r.alpha.to_string(),
            r.beta.to_string(),
            r.run.to_string(),
            r.selector.to_string(),
            r.selected.encode(),
            r.removed.encode(),
            format_cost(r.cost),
            r.evals.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Input(format!("csv: {e}")))?;
    Ok(())
}

pub fn csv_string(rows: &[ResultRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv is utf-8"))
}
