use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Crack size bins.
///
/// `edges` holds the finite lower edges of every bin, starting at 0. The last
/// bin is `[edges[n-1], ∞)` and is the failure bin, so `edges[n-1]` is the
/// critical crack size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    edges: Vec<f64>,
}

impl Discretization {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::InvalidDiscretization("need at least two bins".into()));
        }
        if edges[0] != 0.0 {
            return Err(Error::InvalidDiscretization("first edge must be 0".into()));
        }
        if edges.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidDiscretization("edges must be finite".into()));
        }
        if edges.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidDiscretization("edges must be strictly increasing".into()));
        }
        Ok(Self { edges })
    }

    /// 30 bins: `[0, 1e-4, …, d_crit, ∞)` with 29 log-spaced interior edges.
    pub fn log_spaced(d_crit: f64, n_bins: usize) -> Result<Self> {
        if n_bins < 3 || !d_crit.is_finite() || d_crit <= 1e-4 {
            return Err(Error::InvalidDiscretization(
                "log-spaced grid needs n_bins >= 3 and d_crit > 1e-4".into(),
            ));
        }
        let lo = 1e-4f64.ln();
        let hi = d_crit.ln();
        let k = n_bins - 2;
        let mut edges = Vec::with_capacity(n_bins);
        edges.push(0.0);
        edges.extend((0..=k).map(|i| (lo + (hi - lo) * i as f64 / k as f64).exp()));
        // pin the failure threshold exactly
        *edges.last_mut().unwrap() = d_crit;
        Self::new(edges)
    }

    /// 60 bins: `[0, d0, d0 + δ, …, d_crit, ∞)` with `δ = (d_crit - d0)/(n - 2)`.
    pub fn linear(d0: f64, d_crit: f64, n_bins: usize) -> Result<Self> {
        if n_bins < 3 || !(d0 > 0.0 && d_crit > d0) {
            return Err(Error::InvalidDiscretization(
                "linear grid needs n_bins >= 3 and 0 < d0 < d_crit".into(),
            ));
        }
        let k = n_bins - 2;
        let step = (d_crit - d0) / k as f64;
        let mut edges = Vec::with_capacity(n_bins);
        edges.push(0.0);
        edges.extend((0..=k).map(|i| d0 + step * i as f64));
        *edges.last_mut().unwrap() = d_crit;
        Self::new(edges)
    }

    pub fn n_bins(&self) -> usize {
        self.edges.len()
    }

    pub fn failure_bin(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn d_crit(&self) -> f64 {
        *self.edges.last().unwrap()
    }

    /// Finite lower edges.
    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    /// All bin boundaries including the trailing `∞`.
    pub fn boundaries(&self) -> Vec<f64> {
        let mut b = self.edges.clone();
        b.push(f64::INFINITY);
        b
    }

    /// Bin index of a crack size. Sizes at or above `d_crit` (including
    /// `∞`) map to the failure bin.
    pub fn bin_of(&self, d: f64) -> usize {
        // number of edges <= d, minus one
        let idx = self.edges.partition_point(|&e| e <= d);
        idx.saturating_sub(1)
    }

    /// Geometric midpoint of each bin; the failure bin uses `d_crit`.
    pub fn geometric_midpoints(&self) -> Vec<f64> {
        let n = self.n_bins();
        (0..n)
            .map(|i| {
                if i + 1 == n {
                    self.d_crit()
                } else {
                    (self.edges[i] * self.edges[i + 1]).sqrt()
                }
            })
            .collect()
    }

    /// Arithmetic midpoint of each bin; the failure bin uses `d_crit`.
    pub fn arithmetic_midpoints(&self) -> Vec<f64> {
        let n = self.n_bins();
        (0..n)
            .map(|i| {
                if i + 1 == n {
                    self.d_crit()
                } else {
                    0.5 * (self.edges[i] + self.edges[i + 1])
                }
            })
            .collect()
    }

    /// Probability mass of an exponential initial crack in every bin.
    pub fn exponential_masses(&self, mean: f64) -> Vec<f64> {
        let cdf = |x: f64| -(-x / mean).exp_m1();
        let b = self.boundaries();
        let mut probs: Vec<f64> = b
            .windows(2)
            .map(|w| {
                let hi = if w[1].is_infinite() { 1.0 } else { cdf(w[1]) };
                (hi - cdf(w[0])).max(0.0)
            })
            .collect();
        let s: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= s);
        probs
    }
}
