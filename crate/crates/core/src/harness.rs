//! Parallel, seed-deterministic policy evaluation.
//!
//! Episode `i` of a batch runs on seed `derive_seed(master_seed, i)`; the
//! environment and the policy draw from separate streams of that seed. An
//! episode therefore never depends on which thread ran it or on which other
//! episodes were in the batch, and reports are bit-identical for any degree
//! of parallelism.

use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::envs::{Action, EnvConfig, ImpEnv, ModelSet, StepInfo};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream_rng, POLICY_STREAM};

/// Everything a policy may condition on at step `t`.
#[derive(Debug, Clone, Copy)]
pub struct PolicyInput<'a> {
    pub t: usize,
    pub horizon: usize,
    pub observations: &'a [Vec<f64>],
    pub state: &'a [f64],
    /// Agents whose inspection in the previous step detected damage.
    pub detections: &'a [bool],
    /// Failure probability of each agent's component.
    pub failure_probs: &'a [f64],
}

/// Maps the current inputs to one action per agent.
pub trait Policy: Send + Sync {
    fn name(&self) -> String;

    fn act(&self, input: &PolicyInput<'_>, rng: &mut ChaCha8Rng) -> Vec<Action>;
}

/// Never acts.
#[derive(Debug, Clone, Copy, Default)]
pub struct DoNothingPolicy;

impl Policy for DoNothingPolicy {
    fn name(&self) -> String {
        "donothing".into()
    }

    fn act(&self, input: &PolicyInput<'_>, _rng: &mut ChaCha8Rng) -> Vec<Action> {
        vec![Action::DoNothing; input.observations.len()]
    }
}

/// Picks every agent's action uniformly at random.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformRandomPolicy;

impl Policy for UniformRandomPolicy {
    fn name(&self) -> String {
        "random".into()
    }

    fn act(&self, input: &PolicyInput<'_>, rng: &mut ChaCha8Rng) -> Vec<Action> {
        const ALL: [Action; 3] = [Action::DoNothing, Action::Inspect, Action::Repair];
        (0..input.observations.len())
            .map(|_| ALL[rng.random_range(0..3)])
            .collect()
    }
}

/// Replays a fixed action script, the same in every episode.
///
/// Steps past the end of the script do nothing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptedPolicy {
    steps: Vec<Vec<Action>>,
}

impl ScriptedPolicy {
    pub fn new(steps: Vec<Vec<Action>>) -> Self {
        Self { steps }
    }

    /// Parse JSON lines, each an array of action codes for one step.
    pub fn from_json_lines(text: &str) -> Result<Self> {
        let steps = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str::<Vec<Action>>(l).map_err(Error::from))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { steps })
    }

    pub fn steps(&self) -> &[Vec<Action>] {
        &self.steps
    }
}

impl Policy for ScriptedPolicy {
    fn name(&self) -> String {
        "external".into()
    }

    fn act(&self, input: &PolicyInput<'_>, _rng: &mut ChaCha8Rng) -> Vec<Action> {
        match self.steps.get(input.t) {
            Some(a) => a.clone(),
            None => vec![Action::DoNothing; input.observations.len()],
        }
    }
}

/// Discounted return of one episode and its decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeStats {
    pub episode: u64,
    pub seed: u64,
    pub discounted_return: f64,
    pub risk: f64,
    pub inspection: f64,
    pub repair: f64,
    pub campaign: f64,
    pub n_inspections: usize,
    pub n_repairs: usize,
}

/// Play one full episode.
pub fn run_episode(env: &mut ImpEnv, policy: &dyn Policy, seed: u64) -> Result<EpisodeStats> {
    run_episode_traced(env, policy, seed, |_| Ok(()))
}

/// Play one full episode, handing every step's record to `on_step`.
pub fn run_episode_traced(
    env: &mut ImpEnv,
    policy: &dyn Policy,
    seed: u64,
    mut on_step: impl FnMut(&StepInfo) -> Result<()>,
) -> Result<EpisodeStats> {
    let gamma = env.config().discount;
    let horizon = env.config().horizon;
    let mut obs = env.reset(seed)?;
    let mut state = env.state();
    let mut rng = stream_rng(seed, POLICY_STREAM);
    let mut stats = EpisodeStats {
        episode: 0,
        seed,
        discounted_return: 0.0,
        risk: 0.0,
        inspection: 0.0,
        repair: 0.0,
        campaign: 0.0,
        n_inspections: 0,
        n_repairs: 0,
    };
    let mut discount = 1.0;
    loop {
        let pf = env.agent_failure_probs();
        let input = PolicyInput {
            t: env.time(),
            horizon,
            observations: &obs,
            state: &state,
            detections: env.last_detections(),
            failure_probs: &pf,
        };
        let actions = policy.act(&input, &mut rng);
        if actions.len() != env.n_agents() {
            return Err(Error::IllegalAction {
                agent: actions.len().min(env.n_agents()),
                reason: format!(
                    "policy '{}' returned {} actions for {} agents",
                    policy.name(),
                    actions.len(),
                    env.n_agents()
                ),
            });
        }
        let out = env.step(&actions)?;
        let i = &out.info;
        stats.discounted_return += discount * out.reward;
        stats.risk += discount * i.risk;
        stats.inspection += discount * i.inspection;
        stats.repair += discount * i.repair;
        stats.campaign += discount * i.campaign;
        stats.n_inspections += actions.iter().filter(|&&a| a == Action::Inspect).count();
        stats.n_repairs += actions.iter().filter(|&&a| a == Action::Repair).count();
        on_step(i)?;
        discount *= gamma;
        if out.done {
            return Ok(stats);
        }
        obs = out.observations;
        state = out.state;
    }
}

/// Summary statistics of a batch of episodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub policy: String,
    pub n_episodes: usize,
    pub mean: f64,
    /// Sample standard deviation of the episode returns.
    pub std: f64,
    pub std_error: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub min: f64,
    pub max: f64,
    pub config_hash: String,
    pub master_seed: u64,
}

impl EvalReport {
    pub fn from_returns(policy: String, returns: &[f64], config_hash: String, master_seed: u64) -> Self {
        let n = returns.len();
        let mean = returns.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        let mut sorted = returns.to_vec();
        sorted.sort_by(f64::total_cmp);
        Self {
            policy,
            n_episodes: n,
            mean,
            std,
            std_error: std / (n as f64).sqrt(),
            p25: percentile(&sorted, 25.0),
            p50: percentile(&sorted, 50.0),
            p75: percentile(&sorted, 75.0),
            min: sorted[0],
            max: sorted[n - 1],
            config_hash,
            master_seed,
        }
    }
}

/// Linearly interpolated percentile of sorted data.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Stable fingerprint of a configuration and the models it runs on.
pub fn config_hash(config: &EnvConfig, models: &ModelSet) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(config).expect("config serialises"));
    for m in models.models() {
        h.update(serde_json::to_vec(&m.metadata).expect("metadata serialises"));
        for x in m.raw_tables() {
            h.update(x.to_le_bytes());
        }
    }
    h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Run episodes `0..n_episodes` on a thread pool of `parallelism` workers
/// (all cores when `None`).
pub fn evaluate(
    config: &EnvConfig,
    models: &ModelSet,
    policy: &dyn Policy,
    n_episodes: usize,
    master_seed: u64,
    parallelism: Option<usize>,
) -> Result<(EvalReport, Vec<EpisodeStats>)> {
    if n_episodes == 0 {
        return Err(Error::InvalidParameter("n_episodes must be >= 1".into()));
    }
    let template = ImpEnv::new(config.clone(), models.clone())?;
    let episodes = in_pool(parallelism, || run_batch(&template, policy, n_episodes, master_seed))??;
    let returns: Vec<f64> = episodes.iter().map(|e| e.discounted_return).collect();
    let report = EvalReport::from_returns(policy.name(), &returns, config_hash(config, models), master_seed);
    Ok((report, episodes))
}

pub(crate) fn in_pool<T: Send>(parallelism: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match parallelism {
        None => Ok(f()),
        Some(0) => Err(Error::InvalidParameter("parallelism must be >= 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidParameter(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

pub(crate) fn run_batch(
    template: &ImpEnv,
    policy: &dyn Policy,
    n_episodes: usize,
    master_seed: u64,
) -> Result<Vec<EpisodeStats>> {
    (0..n_episodes as u64)
        .into_par_iter()
        .map_init(
            || template.clone(),
            |env, i| {
                let mut s = run_episode(env, policy, derive_seed(master_seed, i))?;
                s.episode = i;
                Ok(s)
            },
        )
        .collect()
}

/// One repeat of a variance study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceRow {
    pub n_episodes: usize,
    pub repeat: usize,
    pub master_seed: u64,
    pub mean: f64,
}

/// Spread of the return estimate at one episode count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceSummary {
    pub n_episodes: usize,
    pub repeats: usize,
    pub mean_of_means: f64,
    /// Sample standard deviation of the repeat means.
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceStudy {
    pub rows: Vec<VarianceRow>,
    pub summary: Vec<VarianceSummary>,
}

impl VarianceStudy {
    pub fn spread(&self, n_episodes: usize) -> Option<f64> {
        self.summary
            .iter()
            .find(|s| s.n_episodes == n_episodes)
            .map(|s| s.spread)
    }
}

/// Repeat the evaluation `repeats` times per episode count on independent
/// master seeds and report how much the mean estimate moves.
pub fn variance_study(
    config: &EnvConfig,
    models: &ModelSet,
    policy: &dyn Policy,
    episode_counts: &[usize],
    repeats: usize,
    seed: u64,
) -> Result<VarianceStudy> {
    if repeats == 0 || episode_counts.is_empty() || episode_counts.contains(&0) {
        return Err(Error::InvalidParameter(
            "need repeats >= 1 and positive episode counts".into(),
        ));
    }
    let template = ImpEnv::new(config.clone(), models.clone())?;
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for &count in episode_counts {
        let mut means = Vec::with_capacity(repeats);
        for r in 0..repeats {
            let master = derive_seed(derive_seed(seed, count as u64), r as u64);
            let eps = run_batch(&template, policy, count, master)?;
            let mean = eps.iter().map(|e| e.discounted_return).sum::<f64>() / count as f64;
            rows.push(VarianceRow {
                n_episodes: count,
                repeat: r,
                master_seed: master,
                mean,
            });
            means.push(mean);
        }
        let s = EvalReport::from_returns(String::new(), &means, String::new(), 0);
        summary.push(VarianceSummary {
            n_episodes: count,
            repeats,
            mean_of_means: s.mean,
            spread: s.std,
        });
    }
    Ok(VarianceStudy { rows, summary })
}

/// Write serialisable rows as CSV with a header.
pub fn write_csv<T: Serialize>(path: impl AsRef<Path>, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::Format(format!("{other:?}")),
    }
}

/// Histogram of episode returns as `lower,upper,count` CSV rows.
pub fn write_histogram_csv(path: impl AsRef<Path>, returns: &[f64], n_bins: usize) -> Result<()> {
    #[derive(Serialize)]
    struct Bin {
        lower: f64,
        upper: f64,
        count: usize,
    }
    let lo = returns.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = returns.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let n_bins = n_bins.max(1);
    let width = if hi > lo { (hi - lo) / n_bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; n_bins];
    for &r in returns {
        let b = (((r - lo) / width) as usize).min(n_bins - 1);
        counts[b] += 1;
    }
    let bins: Vec<Bin> = counts
        .iter()
        .enumerate()
        .map(|(i, &count)| Bin {
            lower: lo + i as f64 * width,
            upper: lo + (i + 1) as f64 * width,
            count,
        })
        .collect();
    write_csv(path, &bins)
}

/// Write pretty-printed JSON.
pub fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}
