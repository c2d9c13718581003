//! Expert inspection heuristics and their grid search.
//!
//! A heuristic inspects the `n_inspect` components with the highest failure
//! probability every `interval` steps, and repairs any component whose
//! inspection detected damage in the step before.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::envs::{Action, EnvConfig, ImpEnv, ModelSet};
use crate::error::{Error, Result};
use crate::harness::{config_hash, evaluate, in_pool, run_batch, EvalReport, Policy, PolicyInput};
use crate::rng::derive_seed;

/// Large systems search this coarse set of inspection counts.
pub const COARSE_N_INSPECT: [usize; 7] = [0, 1, 5, 10, 25, 50, 100];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HeuristicParams {
    /// Steps between inspection campaigns; `horizon + 1` never inspects.
    pub interval: usize,
    /// Components inspected per campaign.
    pub n_inspect: usize,
}

impl HeuristicParams {
    pub fn never_inspect(horizon: usize) -> Self {
        Self {
            interval: horizon + 1,
            n_inspect: 0,
        }
    }

    pub fn validate(&self, horizon: usize, n_agents: usize) -> Result<()> {
        if self.interval == 0 || self.interval > horizon + 1 {
            return Err(Error::InvalidParameter(format!(
                "inspection interval {} outside 1..={}",
                self.interval,
                horizon + 1
            )));
        }
        if self.n_inspect > n_agents {
            return Err(Error::InvalidParameter(format!(
                "cannot inspect {} of {n_agents} components",
                self.n_inspect
            )));
        }
        Ok(())
    }
}

/// Per-agent actions of the heuristic at step `t`.
///
/// `failure_probs` and `detections` are indexed by agent; ties in failure
/// probability go to the lower index.
pub fn heuristic_act(params: HeuristicParams, failure_probs: &[f64], detections: &[bool], t: usize) -> Vec<Action> {
    let mut actions: Vec<Action> = detections
        .iter()
        .map(|&d| if d { Action::Repair } else { Action::DoNothing })
        .collect();
    if t > 0 && t.is_multiple_of(params.interval) && params.n_inspect > 0 {
        let mut order: Vec<usize> = (0..actions.len()).filter(|&a| actions[a] != Action::Repair).collect();
        order.sort_by(|&a, &b| failure_probs[b].total_cmp(&failure_probs[a]).then(a.cmp(&b)));
        for &a in order.iter().take(params.n_inspect) {
            actions[a] = Action::Inspect;
        }
    }
    actions
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeuristicPolicy {
    pub params: HeuristicParams,
}

impl HeuristicPolicy {
    pub fn new(params: HeuristicParams) -> Self {
        Self { params }
    }
}

impl Policy for HeuristicPolicy {
    fn name(&self) -> String {
        format!(
            "heuristic(interval={}, n_inspect={})",
            self.params.interval, self.params.n_inspect
        )
    }

    fn act(&self, input: &PolicyInput<'_>, _rng: &mut ChaCha8Rng) -> Vec<Action> {
        heuristic_act(self.params, input.failure_probs, input.detections, input.t)
    }
}

/// Default search grids: every interval plus "never", and every inspection
/// count up to 10 (a coarse set for larger systems).
pub fn default_grids(horizon: usize, n_agents: usize) -> (Vec<usize>, Vec<usize>) {
    let intervals = (1..=horizon + 1).collect();
    let counts = if n_agents <= 10 {
        (0..=n_agents).collect()
    } else {
        COARSE_N_INSPECT.iter().copied().filter(|&k| k <= n_agents).collect()
    };
    (intervals, counts)
}

/// One evaluated grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub interval: usize,
    pub n_inspect: usize,
    pub mean: f64,
    pub std: f64,
    pub n_episodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best: HeuristicParams,
    /// Mean of the best cell on the grid's episodes.
    pub best_grid_mean: f64,
    /// Independent re-evaluation of the best cell.
    pub report: EvalReport,
    pub table: Vec<GridCell>,
    pub grid_seed: u64,
    pub eval_seed: u64,
}

impl SearchResult {
    pub fn value(&self) -> f64 {
        self.report.mean
    }
}

/// Search options; `Default` matches the usual protocol of 500 episodes per
/// cell and 10 000 for the final estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpec {
    pub intervals: Vec<usize>,
    pub n_inspect: Vec<usize>,
    pub episodes_per_cell: usize,
    pub eval_episodes: usize,
    pub seed: u64,
}

impl SearchSpec {
    pub fn default_for(config: &EnvConfig, seed: u64) -> Self {
        let (intervals, n_inspect) = default_grids(config.horizon, config.n_agents());
        Self {
            intervals,
            n_inspect,
            episodes_per_cell: 500,
            eval_episodes: 10_000,
            seed,
        }
    }
}

/// Evaluate every `(interval, n_inspect)` cell on the same episode seeds and
/// re-evaluate the best one on fresh seeds.
///
/// The table is ordered by interval, then inspection count; the first of
/// equally good cells wins.
pub fn heuristic_search(
    config: &EnvConfig,
    models: &ModelSet,
    spec: &SearchSpec,
    parallelism: Option<usize>,
) -> Result<SearchResult> {
    if spec.intervals.is_empty() || spec.n_inspect.is_empty() {
        return Err(Error::InvalidParameter("search grids must be nonempty".into()));
    }
    if spec.episodes_per_cell == 0 || spec.eval_episodes == 0 {
        return Err(Error::InvalidParameter("episode counts must be >= 1".into()));
    }
    let cells: Vec<HeuristicParams> = spec
        .intervals
        .iter()
        .flat_map(|&interval| {
            spec.n_inspect
                .iter()
                .map(move |&n_inspect| HeuristicParams { interval, n_inspect })
        })
        .collect();
    for c in &cells {
        c.validate(config.horizon, config.n_agents())?;
    }
    let template = ImpEnv::new(config.clone(), models.clone())?;
    let grid_seed = derive_seed(spec.seed, 0);
    let eval_seed = derive_seed(spec.seed, 1);
    let hash = config_hash(config, models);
    let table = in_pool(parallelism, || {
        cells
            .iter()
            .map(|&params| {
                let policy = HeuristicPolicy::new(params);
                let eps = run_batch(&template, &policy, spec.episodes_per_cell, grid_seed)?;
                let returns: Vec<f64> = eps.iter().map(|e| e.discounted_return).collect();
                let r = EvalReport::from_returns(policy.name(), &returns, hash.clone(), grid_seed);
                Ok(GridCell {
                    interval: params.interval,
                    n_inspect: params.n_inspect,
                    mean: r.mean,
                    std: r.std,
                    n_episodes: r.n_episodes,
                })
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let best_cell = table
        .iter()
        .fold(&table[0], |best, c| if c.mean > best.mean { c } else { best });
    let best = HeuristicParams {
        interval: best_cell.interval,
        n_inspect: best_cell.n_inspect,
    };
    let (report, _) = evaluate(
        config,
        models,
        &HeuristicPolicy::new(best),
        spec.eval_episodes,
        eval_seed,
        parallelism,
    )?;
    Ok(SearchResult {
        best,
        best_grid_mean: best_cell.mean,
        report,
        table,
        grid_seed,
        eval_seed,
    })
}
