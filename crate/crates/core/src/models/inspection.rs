//! Probability-of-detection curves and per-bin inspection likelihoods.

use serde::{Deserialize, Serialize};

use super::discretization::Discretization;
use crate::error::{Error, Result};

/// Exponential CDF PoD, `1 - exp(-d/μ)`.
pub fn pod_exponential(d: f64, mu: f64) -> f64 {
    debug_assert!(d >= 0.0 && mu > 0.0);
    if d.is_infinite() {
        return 1.0;
    }
    -(-d / mu).exp_m1()
}

/// Eddy-current PoD, `1 - 1/(1 + (d/χ)^b)`.
pub fn pod_eddy_current(d: f64, chi: f64, b: f64) -> f64 {
    debug_assert!(d >= 0.0 && chi > 0.0 && b > 0.0);
    if d.is_infinite() {
        return 1.0;
    }
    let r = (d / chi).powf(b);
    r / (1.0 + r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PodCurve {
    Exponential { mu: f64 },
    EddyCurrent { chi: f64, b: f64 },
}

impl PodCurve {
    pub fn eval(&self, d: f64) -> f64 {
        match *self {
            PodCurve::Exponential { mu } => pod_exponential(d, mu),
            PodCurve::EddyCurrent { chi, b } => pod_eddy_current(d, chi, b),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            PodCurve::Exponential { mu } => mu > 0.0 && mu.is_finite(),
            PodCurve::EddyCurrent { chi, b } => chi > 0.0 && b > 0.0 && chi.is_finite() && b.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid PoD curve {self:?}")))
        }
    }
}

/// Inspection outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    NoDetect,
    Detect,
}

/// Per-bin detection probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InspectionModel {
    pub curve: PodCurve,
    pub pod: Vec<f64>,
}

impl InspectionModel {
    /// Evaluate `curve` at a representative point of every bin: geometric
    /// midpoints for exponential PoD (log grids), arithmetic midpoints for
    /// eddy current (linear grids). The failure bin uses `d_crit`.
    pub fn from_curve(curve: PodCurve, disc: &Discretization) -> Result<Self> {
        curve.validate()?;
        let points = match curve {
            PodCurve::Exponential { .. } => disc.geometric_midpoints(),
            PodCurve::EddyCurrent { .. } => disc.arithmetic_midpoints(),
        };
        Ok(Self {
            curve,
            pod: points.iter().map(|&d| curve.eval(d)).collect(),
        })
    }

    /// Build directly from a likelihood vector (for tests and custom sensors).
    pub fn from_pod(curve: PodCurve, pod: Vec<f64>) -> Result<Self> {
        if pod.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidParameter("PoD values must lie in [0, 1]".into()));
        }
        Ok(Self { curve, pod })
    }

    pub fn n_bins(&self) -> usize {
        self.pod.len()
    }

    /// Likelihood of `outcome` in bin `i`.
    #[inline]
    pub fn likelihood(&self, i: usize, outcome: Outcome) -> f64 {
        match outcome {
            Outcome::Detect => self.pod[i],
            Outcome::NoDetect => 1.0 - self.pod[i],
        }
    }
}
