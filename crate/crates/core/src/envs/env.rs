//! The multi-agent inspection and maintenance environment.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::belief::{
    bayes_update, build_correlated_prior, marginal_belief, propagate, sample_inspection_outcome, BeliefVector,
    CorrelationBelief,
};
use crate::envs::config::{CorrelatedRisk, EnvConfig, Family, RiskMode};
use crate::envs::models::ModelSet;
use crate::error::{Error, Result};
use crate::models::Outcome;
use crate::reliability::{system_failure_prob, SystemFailure, SystemTopology};
use crate::rng::{stream_rng, ENV_STREAM};

/// Per-agent decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
#[repr(u8)]
pub enum Action {
    #[default]
    DoNothing = 0,
    Inspect = 1,
    Repair = 2,
}

impl Action {
    pub fn code(self) -> u8 {
        self as u8
    }
}

impl From<Action> for u8 {
    fn from(a: Action) -> u8 {
        a.code()
    }
}

impl TryFrom<u8> for Action {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            0 => Ok(Action::DoNothing),
            1 => Ok(Action::Inspect),
            2 => Ok(Action::Repair),
            _ => Err(format!("unknown action code {v}")),
        }
    }
}

/// Reward decomposition and diagnostics of one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    /// Step index the actions were applied at.
    pub t: usize,
    pub actions: Vec<Action>,
    pub reward: f64,
    pub risk: f64,
    pub inspection: f64,
    pub repair: f64,
    pub campaign: f64,
    /// System failure probability after the step (for wind farms, the
    /// probability that at least one turbine has failed).
    pub p_sys: f64,
    /// Per-agent inspection outcome, `Some(true)` for a detection.
    pub detections: Vec<Option<bool>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observations: Vec<Vec<f64>>,
    pub state: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

/// Cost class of a simulated component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CostClass {
    Structural,
    Upper,
    Middle,
    Mudline,
}

/// Decentralised POMDP over component damage beliefs.
///
/// Every step applies repairs, propagates all components one year,
/// performs the requested inspections and charges the failure risk.
/// Agents act on their own component's belief; the centralised state
/// exposes all of them.
///
/// In [`RiskMode::Increment`] the step's risk is the growth of the failure
/// probability predicted for the end of the year, before this step's
/// inspection outcomes are known, over the posterior of the previous step.
/// What an inspection reveals therefore lowers the charge of later steps.
/// [`RiskMode::Absolute`] charges `c_f · p_sys` of the updated beliefs.
#[derive(Debug, Clone)]
pub struct ImpEnv {
    config: EnvConfig,
    models: ModelSet,
    topology: SystemTopology,
    agent_comp: Vec<usize>,
    classes: Vec<CostClass>,
    prior: Option<CorrelationBelief>,
    beliefs: Vec<BeliefVector>,
    corr: Option<CorrelationBelief>,
    taus: Vec<usize>,
    t: usize,
    prev_units: Vec<f64>,
    last_detect: Vec<bool>,
    rng: ChaCha8Rng,
    started: bool,
}

impl ImpEnv {
    pub fn new(config: EnvConfig, models: ModelSet) -> Result<Self> {
        config.validate()?;
        models.check(config.family, config.horizon)?;
        let n_comp = config.n_components();
        let (topology, agent_comp, classes) = match config.family {
            Family::StructUc | Family::StructC => (
                SystemTopology::k_out_of_n(config.k_comp.expect("validated"), n_comp)?,
                (0..n_comp).collect(),
                vec![CostClass::Structural; n_comp],
            ),
            Family::Owf => {
                let n_t = config.n_comp;
                let agents = (0..n_t).flat_map(|i| [3 * i, 3 * i + 1]).collect();
                let classes = (0..n_t)
                    .flat_map(|_| [CostClass::Upper, CostClass::Middle, CostClass::Mudline])
                    .collect();
                (SystemTopology::wind_farm(n_t), agents, classes)
            }
        };
        let prior = if config.family == Family::StructC {
            Some(build_correlated_prior(
                models.for_component(0),
                n_comp,
                config.rho,
                config.n_alpha,
            )?)
        } else {
            None
        };
        let n_agents = config.n_agents();
        let beliefs = (0..n_comp).map(|c| models.for_component(c).initial_belief()).collect();
        Ok(Self {
            config,
            models,
            topology,
            agent_comp,
            classes,
            corr: prior.clone(),
            prior,
            beliefs,
            taus: vec![0; n_comp],
            t: 0,
            prev_units: Vec::new(),
            last_detect: vec![false; n_agents],
            rng: stream_rng(0, ENV_STREAM),
            started: false,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn models(&self) -> &ModelSet {
        &self.models
    }

    pub fn topology(&self) -> &SystemTopology {
        &self.topology
    }

    pub fn n_agents(&self) -> usize {
        self.agent_comp.len()
    }

    pub fn n_components(&self) -> usize {
        self.beliefs.len()
    }

    /// Simulated component controlled by `agent`.
    pub fn agent_component(&self, agent: usize) -> usize {
        self.agent_comp[agent]
    }

    pub fn time(&self) -> usize {
        self.t
    }

    pub fn is_done(&self) -> bool {
        self.started && self.t >= self.config.horizon
    }

    pub fn beliefs(&self) -> &[BeliefVector] {
        &self.beliefs
    }

    pub fn deterioration_rates(&self) -> &[usize] {
        &self.taus
    }

    pub fn correlation_belief(&self) -> Option<&CorrelationBelief> {
        self.corr.as_ref()
    }

    /// Current failure probability of every agent's component.
    pub fn agent_failure_probs(&self) -> Vec<f64> {
        self.agent_comp
            .iter()
            .map(|&c| self.beliefs[c].failure_prob())
            .collect()
    }

    /// Which agents detected damage in the previous step.
    pub fn last_detections(&self) -> &[bool] {
        &self.last_detect
    }

    /// Start an episode; all randomness of the episode derives from `seed`.
    pub fn reset(&mut self, seed: u64) -> Result<Vec<Vec<f64>>> {
        self.rng = stream_rng(seed, ENV_STREAM);
        for (c, b) in self.beliefs.iter_mut().enumerate() {
            *b = self.models.for_component(c).initial_belief();
        }
        self.corr = self.prior.clone();
        self.refresh_marginals();
        self.taus.iter_mut().for_each(|t| *t = 0);
        self.t = 0;
        self.last_detect.iter_mut().for_each(|d| *d = false);
        self.prev_units = self.failure()?.units().to_vec();
        self.started = true;
        Ok(self.observations())
    }

    /// Advance one step with one action per agent.
    pub fn step(&mut self, actions: &[Action]) -> Result<StepResult> {
        if !self.started || self.is_done() {
            return Err(Error::EpisodeDone);
        }
        if actions.len() != self.n_agents() {
            return Err(Error::IllegalAction {
                agent: actions.len().min(self.n_agents()),
                reason: format!("expected {} actions, got {}", self.n_agents(), actions.len()),
            });
        }
        let rewards = self.config.rewards.clone();
        let (mut r_ins, mut r_rep) = (0.0, 0.0);
        let costs = |class| match class {
            CostClass::Structural => rewards.structural,
            CostClass::Upper => rewards.upper,
            CostClass::Middle => rewards.middle,
            CostClass::Mudline => unreachable!("mudline components have no agent"),
        };

        for (a, &act) in actions.iter().enumerate() {
            if act == Action::Repair {
                let c = self.agent_comp[a];
                let init = self.models.for_component(c).initial_belief();
                if let Some(cb) = self.corr.as_mut() {
                    cb.reset_component(c, &init)?;
                }
                self.beliefs[c] = init;
                self.taus[c] = 0;
                r_rep += costs(self.classes[c]).repair;
            }
        }

        for c in 0..self.beliefs.len() {
            let model = self.models.for_component(c);
            match self.corr.as_mut() {
                Some(cb) => cb.propagate_component(c, model, self.taus[c])?,
                None => self.beliefs[c] = propagate(&self.beliefs[c], model, self.taus[c])?,
            }
            self.taus[c] += 1;
        }
        self.refresh_marginals();
        let predicted = match self.config.risk_mode {
            RiskMode::Increment => Some(self.failure()?),
            RiskMode::Absolute => None,
        };

        let mut detections = vec![None; self.n_agents()];
        for (a, &act) in actions.iter().enumerate() {
            if act != Action::Inspect {
                continue;
            }
            let c = self.agent_comp[a];
            let insp = self
                .models
                .for_component(c)
                .inspection()
                .expect("checked at construction");
            let outcome = sample_inspection_outcome(&self.beliefs[c], insp, &mut self.rng);
            match self.corr.as_mut() {
                Some(cb) => {
                    cb.update(c, insp, outcome)?;
                    self.refresh_marginals();
                }
                None => self.beliefs[c] = bayes_update(&self.beliefs[c], insp, outcome)?.0,
            }
            detections[a] = Some(outcome == Outcome::Detect);
            r_ins += costs(self.classes[c]).inspect;
        }

        let failure = self.failure()?;
        let c_f = rewards.c_f;
        let risk: f64 = match &predicted {
            None => failure.units().iter().map(|p| c_f * p).sum(),
            Some(pred) => pred
                .units()
                .iter()
                .zip(&self.prev_units)
                .map(|(&p, &prev)| if p >= prev { c_f * (p - prev) } else { c_f * p })
                .sum(),
        };
        self.prev_units = failure.units().to_vec();
        let active = actions.iter().any(|&a| a != Action::DoNothing);
        let campaign = if self.config.campaign_cost && active {
            rewards.campaign
        } else {
            0.0
        };
        let reward = risk + r_ins + r_rep + campaign;

        for (d, o) in self.last_detect.iter_mut().zip(&detections) {
            *d = *o == Some(true);
        }
        let info = StepInfo {
            t: self.t,
            actions: actions.to_vec(),
            reward,
            risk,
            inspection: r_ins,
            repair: r_rep,
            campaign,
            p_sys: failure.system_prob(),
            detections,
        };
        self.t += 1;
        Ok(StepResult {
            observations: self.observations(),
            state: self.state(),
            reward,
            done: self.is_done(),
            info,
        })
    }

    /// Convenience wrapper taking raw action codes.
    pub fn step_codes(&mut self, codes: &[u8]) -> Result<StepResult> {
        let actions = codes
            .iter()
            .enumerate()
            .map(|(agent, &c)| Action::try_from(c).map_err(|reason| Error::IllegalAction { agent, reason }))
            .collect::<Result<Vec<_>>>()?;
        self.step(&actions)
    }

    /// Failure probabilities of the risk units under the current beliefs.
    pub fn failure(&self) -> Result<SystemFailure> {
        let corr = match self.config.correlated_risk {
            CorrelatedRisk::Exact => self.corr.as_ref(),
            CorrelatedRisk::Independent => None,
        };
        system_failure_prob(&self.beliefs, &self.topology, corr)
    }

    fn refresh_marginals(&mut self) {
        if let Some(cb) = self.corr.as_ref() {
            for (c, b) in self.beliefs.iter_mut().enumerate() {
                *b = marginal_belief(cb, c);
            }
        }
    }

    fn horizon_f(&self) -> f64 {
        self.config.horizon as f64
    }

    /// Per-agent observation vectors.
    pub fn observations(&self) -> Vec<Vec<f64>> {
        let f = self.config.flags;
        let t_frac = self.t as f64 / self.horizon_f();
        (0..self.n_agents())
            .map(|a| {
                let c = self.agent_comp[a];
                let mut o = self.beliefs[c].probs().to_vec();
                if f.obs_d_rate {
                    o.push(self.taus[c] as f64 / self.horizon_f());
                }
                if f.obs_multiple {
                    self.beliefs.iter().for_each(|b| o.extend_from_slice(b.probs()));
                }
                if f.obs_all_d_rate {
                    o.extend(self.taus.iter().map(|&t| t as f64 / self.horizon_f()));
                }
                if f.obs_alphas {
                    o.extend_from_slice(self.corr.as_ref().expect("validated").alpha_probs());
                }
                o.push(t_frac);
                o
            })
            .collect()
    }

    /// Centralised state vector.
    pub fn state(&self) -> Vec<f64> {
        let f = self.config.flags;
        let mut s = Vec::new();
        if f.state_obs {
            self.beliefs.iter().for_each(|b| s.extend_from_slice(b.probs()));
        }
        if f.state_d_rate {
            s.extend(self.taus.iter().map(|&t| t as f64 / self.horizon_f()));
        }
        if f.state_alphas {
            s.extend_from_slice(self.corr.as_ref().expect("validated").alpha_probs());
        }
        s.push(self.t as f64 / self.horizon_f());
        s
    }

    pub fn obs_dim(&self) -> usize {
        let f = self.config.flags;
        let n = self.config.n_bins();
        let nc = self.n_components();
        n + usize::from(f.obs_d_rate)
            + if f.obs_multiple { nc * n } else { 0 }
            + if f.obs_all_d_rate { nc } else { 0 }
            + if f.obs_alphas { self.config.n_alpha } else { 0 }
            + 1
    }

    pub fn state_dim(&self) -> usize {
        let f = self.config.flags;
        let nc = self.n_components();
        (if f.state_obs { nc * self.config.n_bins() } else { 0 })
            + if f.state_d_rate { nc } else { 0 }
            + if f.state_alphas { self.config.n_alpha } else { 0 }
            + 1
    }
}
