//! System failure probability and risk.

use serde::{Deserialize, Serialize};

use crate::belief::{BeliefVector, CorrelationBelief};
use crate::error::{Error, Result};

/// How component failures combine into a system failure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemTopology {
    /// Fails when at least `k` of `n` components fail.
    KOutOfN { k: usize, n: usize },
    /// Independent turbines, each a series system of its members.
    WindFarm { turbines: Vec<[usize; 3]> },
}

impl SystemTopology {
    pub fn k_out_of_n(k: usize, n: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::InvalidParameter(format!(
                "need 1 <= k <= n, got k = {k}, n = {n}"
            )));
        }
        Ok(SystemTopology::KOutOfN { k, n })
    }

    /// Turbine `t` owns components `3t, 3t+1, 3t+2`.
    pub fn wind_farm(n_turbines: usize) -> Self {
        SystemTopology::WindFarm {
            turbines: (0..n_turbines).map(|t| [3 * t, 3 * t + 1, 3 * t + 2]).collect(),
        }
    }

    pub fn n_components(&self) -> usize {
        match self {
            SystemTopology::KOutOfN { n, .. } => *n,
            SystemTopology::WindFarm { turbines } => turbines.len() * 3,
        }
    }
}

/// System failure probability: one value for k-out-of-n systems, one value
/// per turbine for wind farms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemFailure {
    System(f64),
    PerTurbine(Vec<f64>),
}

impl SystemFailure {
    /// Probability that the whole system (any turbine, for farms) fails.
    pub fn system_prob(&self) -> f64 {
        match self {
            SystemFailure::System(p) => *p,
            SystemFailure::PerTurbine(ps) => 1.0 - ps.iter().map(|p| 1.0 - p).product::<f64>(),
        }
    }

    /// Values the risk is charged on.
    pub fn units(&self) -> &[f64] {
        match self {
            SystemFailure::System(p) => std::slice::from_ref(p),
            SystemFailure::PerTurbine(ps) => ps,
        }
    }
}

/// Probability mass of the failure bin.
pub fn component_failure_prob(b: &BeliefVector) -> f64 {
    b.failure_prob()
}

/// Probability that at least `k` of the independent components fail.
///
/// Runs the O(n·k) recursion over the distribution of the number of failed
/// components, truncated at `k - 1` and accumulating the tail directly so
/// small probabilities keep full relative precision.
pub fn k_out_of_n_prob(p: &[f64], k: usize) -> Result<f64> {
    if k == 0 || k > p.len() {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= k <= n, got k = {k}, n = {}",
            p.len()
        )));
    }
    if p.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::InvalidParameter(
            "component probabilities must lie in [0, 1]".into(),
        ));
    }
    // count[j] = P(exactly j failures so far), j < k
    let mut count = vec![0.0; k];
    count[0] = 1.0;
    let mut tail = 0.0;
    for &pi in p {
        tail += count[k - 1] * pi;
        for j in (1..k).rev() {
            count[j] = count[j] * (1.0 - pi) + count[j - 1] * pi;
        }
        count[0] *= 1.0 - pi;
    }
    Ok(tail.min(1.0))
}

/// `1 - Π (1 - p_i)`.
pub fn series_failure_prob(p: &[f64]) -> f64 {
    1.0 - p.iter().map(|x| 1.0 - x).product::<f64>()
}

/// System failure probability from component beliefs.
///
/// With a correlation belief the k-out-of-n probability is averaged over the
/// α cells, components being conditionally independent given α. Component
/// beliefs are then ignored in favour of the α-conditional rows.
pub fn system_failure_prob(
    beliefs: &[BeliefVector],
    topology: &SystemTopology,
    correlation: Option<&CorrelationBelief>,
) -> Result<SystemFailure> {
    if beliefs.len() != topology.n_components() {
        return Err(Error::DimensionMismatch(format!(
            "{} beliefs for a topology of {} components",
            beliefs.len(),
            topology.n_components()
        )));
    }
    match topology {
        SystemTopology::KOutOfN { k, n } => match correlation {
            None => {
                let pf: Vec<f64> = beliefs.iter().map(component_failure_prob).collect();
                Ok(SystemFailure::System(k_out_of_n_prob(&pf, *k)?))
            }
            Some(cb) => {
                if cb.n_components() != *n {
                    return Err(Error::DimensionMismatch("correlation belief component count".into()));
                }
                let cond: Vec<Vec<f64>> = (0..*n).map(|c| cb.conditional_failure_probs(c)).collect();
                let mut pf = vec![0.0; *n];
                let mut total = 0.0;
                for (a, &pa) in cb.alpha_probs().iter().enumerate() {
                    if pa == 0.0 {
                        continue;
                    }
                    for c in 0..*n {
                        pf[c] = cond[c][a];
                    }
                    total += pa * k_out_of_n_prob(&pf, *k)?;
                }
                Ok(SystemFailure::System(total.min(1.0)))
            }
        },
        SystemTopology::WindFarm { turbines } => {
            if correlation.is_some() {
                return Err(Error::Config("wind farms have no correlation structure".into()));
            }
            let per = turbines
                .iter()
                .map(|members| {
                    let p: Vec<f64> = members.iter().map(|&c| component_failure_prob(&beliefs[c])).collect();
                    series_failure_prob(&p)
                })
                .collect();
            Ok(SystemFailure::PerTurbine(per))
        }
    }
}

/// Failure risk `c_f · p` summed over risk units (`c_f` is negative).
pub fn risk_reward(p_sys: &SystemFailure, c_f: f64) -> f64 {
    p_sys.units().iter().map(|p| c_f * p).sum()
}
