//! Discrete Bayesian belief arithmetic over crack-size bins.
//!
//! A belief is propagated one year at a time through the transition tables
//! and conditioned on inspection outcomes with Bayes' rule. For correlated
//! systems every component carries one belief row per value of a shared
//! latent factor α, and inspections update both the inspected component and
//! the distribution of α.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::models::{InspectionModel, Outcome, TransitionModel};

/// Number of cells used to discretise the correlation factor.
pub const DEFAULT_N_ALPHA: usize = 80;
/// Pearson coefficient of the initial crack sizes in correlated systems.
pub const DEFAULT_RHO: f64 = 0.8;

const NORM_TOL: f64 = 1e-9;

/// Probability distribution over crack-size bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BeliefVector(Vec<f64>);

impl BeliefVector {
    /// Validate and wrap a probability vector.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidParameter("belief must have at least one bin".into()));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidParameter(
                "belief entries must be finite and non-negative".into(),
            ));
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidParameter(format!("belief sums to {s}, not 1")));
        }
        Ok(Self(probs))
    }

    pub(crate) fn from_probs_unchecked(probs: Vec<f64>) -> Self {
        Self(probs)
    }

    pub fn point_mass(n_bins: usize, bin: usize) -> Self {
        let mut v = vec![0.0; n_bins];
        v[bin] = 1.0;
        Self(v)
    }

    pub fn uniform(n_bins: usize) -> Self {
        Self(vec![1.0 / n_bins as f64; n_bins])
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn n_bins(&self) -> usize {
        self.0.len()
    }

    /// Mass of the last (failure) bin.
    pub fn failure_prob(&self) -> f64 {
        *self.0.last().unwrap()
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        self.0.iter().filter(|p| **p > 0.0).map(|p| -p * p.ln()).sum()
    }
}

fn normalize(v: &mut [f64]) {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|p| *p /= s);
    }
}

/// `out_j = Σ_i table[i, j] · b_i`, visiting only each row's nonzero band.
fn propagate_into(b: &[f64], table: &[f64], bands: &[(usize, usize)], out: &mut [f64]) {
    let n = b.len();
    out.iter_mut().for_each(|x| *x = 0.0);
    for (i, (&bi, &(lo, hi))) in b.iter().zip(bands).enumerate() {
        if bi == 0.0 {
            continue;
        }
        let row = &table[i * n..(i + 1) * n];
        for j in lo..hi {
            out[j] += row[j] * bi;
        }
    }
    normalize(out);
}

fn check_dims(b: usize, model: &TransitionModel) -> Result<()> {
    if b != model.n_bins() {
        return Err(Error::DimensionMismatch(format!(
            "belief has {b} bins, model has {}",
            model.n_bins()
        )));
    }
    Ok(())
}

/// One year of deterioration at rate `tau`: `b'_j = Σ_i p(j | i, τ+1) b_i`.
pub fn propagate(b: &BeliefVector, model: &TransitionModel, tau: usize) -> Result<BeliefVector> {
    check_dims(b.n_bins(), model)?;
    let table = model.table(tau)?;
    let mut out = vec![0.0; b.n_bins()];
    propagate_into(&b.0, table, model.bands(tau), &mut out);
    Ok(BeliefVector(out))
}

/// Probability of `outcome` under belief `b`.
pub fn evidence(b: &BeliefVector, insp: &InspectionModel, outcome: Outcome) -> f64 {
    b.0.iter()
        .enumerate()
        .map(|(i, p)| insp.likelihood(i, outcome) * p)
        .sum()
}

/// Condition `b` on an inspection outcome. Returns the posterior and the
/// evidence `p(outcome)`.
pub fn bayes_update(b: &BeliefVector, insp: &InspectionModel, outcome: Outcome) -> Result<(BeliefVector, f64)> {
    if insp.n_bins() != b.n_bins() {
        return Err(Error::DimensionMismatch(
            "inspection model and belief sizes differ".into(),
        ));
    }
    let mut post: Vec<f64> =
        b.0.iter()
            .enumerate()
            .map(|(i, p)| insp.likelihood(i, outcome) * p)
            .collect();
    let ev: f64 = post.iter().sum();
    if ev <= 0.0 {
        return Err(Error::DegenerateUpdate);
    }
    post.iter_mut().for_each(|p| *p /= ev);
    Ok((BeliefVector(post), ev))
}

/// Draw an inspection outcome from the belief's predictive distribution.
pub fn sample_inspection_outcome<R: Rng + ?Sized>(b: &BeliefVector, insp: &InspectionModel, rng: &mut R) -> Outcome {
    let p_detect = evidence(b, insp, Outcome::Detect);
    if rng.random::<f64>() < p_detect {
        Outcome::Detect
    } else {
        Outcome::NoDetect
    }
}

/// Hierarchical belief of a correlated system: a distribution over the
/// latent factor α and, per component, the conditional beliefs `p(d | α)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationBelief {
    alpha: Vec<f64>,
    n_bins: usize,
    /// per component, `n_alpha × n_bins` row-major
    conditional: Vec<Vec<f64>>,
}

impl CorrelationBelief {
    /// Build from explicit parts; every row must be a distribution.
    pub fn new(alpha: Vec<f64>, conditional: Vec<Vec<f64>>, n_bins: usize) -> Result<Self> {
        BeliefVector::new(alpha.clone())?;
        for c in &conditional {
            if c.len() != alpha.len() * n_bins {
                return Err(Error::DimensionMismatch("conditional matrix shape".into()));
            }
            for row in c.chunks(n_bins) {
                BeliefVector::new(row.to_vec())?;
            }
        }
        Ok(Self {
            alpha,
            n_bins,
            conditional,
        })
    }

    pub fn alpha_probs(&self) -> &[f64] {
        &self.alpha
    }

    pub fn n_alpha(&self) -> usize {
        self.alpha.len()
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn n_components(&self) -> usize {
        self.conditional.len()
    }

    /// Conditional belief row `p(d | α_k)` of a component.
    pub fn conditional_row(&self, component: usize, k: usize) -> &[f64] {
        &self.conditional[component][k * self.n_bins..(k + 1) * self.n_bins]
    }

    /// Replace all α-rows of a component by `b` (component independent of α).
    pub fn reset_component(&mut self, component: usize, b: &BeliefVector) -> Result<()> {
        if b.n_bins() != self.n_bins {
            return Err(Error::DimensionMismatch("reset belief size".into()));
        }
        for row in self.conditional[component].chunks_mut(self.n_bins) {
            row.copy_from_slice(&b.0);
        }
        Ok(())
    }

    /// Propagate one component's rows in place.
    pub fn propagate_component(&mut self, component: usize, model: &TransitionModel, tau: usize) -> Result<()> {
        check_dims(self.n_bins, model)?;
        let table = model.table(tau)?;
        let bands = model.bands(tau);
        let n = self.n_bins;
        let mut buf = vec![0.0; n];
        for row in self.conditional[component].chunks_mut(n) {
            propagate_into(row, table, bands, &mut buf);
            row.copy_from_slice(&buf);
        }
        Ok(())
    }

    /// Failure probability of a component conditional on each α cell.
    pub fn conditional_failure_probs(&self, component: usize) -> Vec<f64> {
        self.conditional[component]
            .chunks(self.n_bins)
            .map(|r| r[self.n_bins - 1])
            .collect()
    }
}

/// Apply [`propagate`] to every α-row; `taus[c]` is component `c`'s rate.
pub fn correlated_propagate(
    cb: &CorrelationBelief,
    model: &TransitionModel,
    taus: &[usize],
) -> Result<CorrelationBelief> {
    if taus.len() != cb.n_components() {
        return Err(Error::DimensionMismatch(
            "one deterioration rate per component required".into(),
        ));
    }
    let mut out = cb.clone();
    for (c, &tau) in taus.iter().enumerate() {
        out.propagate_component(c, model, tau)?;
    }
    Ok(out)
}

/// Condition a correlated belief on one component's inspection outcome.
///
/// The α-conditional evidence `p(i | α) = Σ_d p(d | α) p(i | d)` updates the
/// factor distribution, and the inspected component's rows are updated by
/// Bayes' rule per α. Returns the posterior and the total evidence.
pub fn correlation_update(
    cb: &CorrelationBelief,
    component: usize,
    insp: &InspectionModel,
    outcome: Outcome,
) -> Result<(CorrelationBelief, f64)> {
    let mut out = cb.clone();
    let total = out.update(component, insp, outcome)?;
    Ok((out, total))
}

impl CorrelationBelief {
    /// In-place form of [`correlation_update`]; leaves `self` untouched on error.
    pub fn update(&mut self, component: usize, insp: &InspectionModel, outcome: Outcome) -> Result<f64> {
        if component >= self.n_components() {
            return Err(Error::DimensionMismatch(format!("no component {component}")));
        }
        if insp.n_bins() != self.n_bins {
            return Err(Error::DimensionMismatch(
                "inspection model and belief sizes differ".into(),
            ));
        }
        let n = self.n_bins;
        let lik: Vec<f64> = (0..n).map(|i| insp.likelihood(i, outcome)).collect();
        let l_alpha: Vec<f64> = self.conditional[component]
            .chunks(n)
            .map(|row| row.iter().zip(&lik).map(|(p, l)| p * l).sum())
            .collect();
        let total: f64 = self.alpha.iter().zip(&l_alpha).map(|(a, l)| a * l).sum();
        if total <= 0.0 {
            return Err(Error::DegenerateUpdate);
        }
        for (k, row) in self.conditional[component].chunks_mut(n).enumerate() {
            // a cell the outcome rules out keeps its prior row
            if l_alpha[k] > 0.0 {
                row.iter_mut().zip(&lik).for_each(|(p, l)| *p = *p * l / l_alpha[k]);
            }
        }
        self.alpha
            .iter_mut()
            .zip(&l_alpha)
            .for_each(|(a, l)| *a = *a * l / total);
        Ok(total)
    }
}

/// Marginal belief `p(d) = Σ_α p(d | α) p(α)` of a component.
pub fn marginal_belief(cb: &CorrelationBelief, component: usize) -> BeliefVector {
    let n = cb.n_bins;
    let mut out = vec![0.0; n];
    for (row, &a) in cb.conditional[component].chunks(n).zip(&cb.alpha) {
        if a == 0.0 {
            continue;
        }
        out.iter_mut().zip(row).for_each(|(o, p)| *o += a * p);
    }
    normalize(&mut out);
    BeliefVector(out)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Prior of a correlated system whose initial crack sizes follow a Gaussian
/// copula with correlation `rho`.
///
/// The latent variable of component `c` is `z_c = √ρ α + √(1-ρ) ε_c` with
/// standard normal `α, ε_c`, and its initial crack is the exponential
/// quantile of `Φ(z_c)`. The factor α is discretised into `n_alpha` cells of
/// equal probability; each conditional row is the exact cell average of the
/// conditional bin probabilities, so marginalising over the cells recovers
/// the unconditional initial belief.
pub fn build_correlated_prior(
    model: &TransitionModel,
    n_components: usize,
    rho: f64,
    n_alpha: usize,
) -> Result<CorrelationBelief> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::InvalidParameter(format!(
            "correlation must lie in [0, 1), got {rho}"
        )));
    }
    if n_alpha == 0 || n_components == 0 {
        return Err(Error::InvalidParameter(
            "need at least one α cell and one component".into(),
        ));
    }
    let n = model.n_bins();
    let alpha = vec![1.0 / n_alpha as f64; n_alpha];
    let rows: Vec<f64> = if rho == 0.0 {
        model
            .initial_probs()
            .iter()
            .copied()
            .cycle()
            .take(n_alpha * n)
            .collect()
    } else {
        let std = Normal::new(0.0, 1.0).unwrap();
        let mean = model.metadata.params.d0_mean;
        // latent thresholds for every bin edge
        let z: Vec<f64> = model
            .discretization()
            .boundaries()
            .iter()
            .map(|&e| {
                if e <= 0.0 {
                    f64::NEG_INFINITY
                } else if e.is_infinite() {
                    f64::INFINITY
                } else {
                    std.inverse_cdf(-(-e / mean).exp_m1())
                }
            })
            .collect();
        let (sr, sn) = (rho.sqrt(), (1.0 - rho).sqrt());
        let (gx, gw) = gauss_legendre(16);
        let mut rows = vec![0.0; n_alpha * n];
        for k in 0..n_alpha {
            let row = &mut rows[k * n..(k + 1) * n];
            for (x, w) in gx.iter().zip(&gw) {
                let u = (k as f64 + 0.5 + 0.5 * x) / n_alpha as f64;
                let a = std.inverse_cdf(u);
                for j in 0..n {
                    let lo = (z[j] - sr * a) / sn;
                    let hi = (z[j + 1] - sr * a) / sn;
                    row[j] += 0.5 * w * interval_mass(&std, lo, hi);
                }
            }
            normalize(row);
        }
        rows
    };
    Ok(CorrelationBelief {
        alpha,
        n_bins: n,
        conditional: vec![rows; n_components],
    })
}

/// `Φ(hi) - Φ(lo)` evaluated on the side that keeps precision.
fn interval_mass(std: &Normal, lo: f64, hi: f64) -> f64 {
    let cdf = |x: f64| {
        if x == f64::INFINITY {
            1.0
        } else if x == f64::NEG_INFINITY {
            0.0
        } else {
            std.cdf(x)
        }
    };
    let sf = |x: f64| {
        if x == f64::INFINITY {
            0.0
        } else if x == f64::NEG_INFINITY {
            1.0
        } else {
            std.sf(x)
        }
    };
    if lo > 0.0 {
        (sf(lo) - sf(hi)).max(0.0)
    } else {
        (cdf(hi) - cdf(lo)).max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{generate_component, ComponentKind, PodCurve, MIN_SAMPLES};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn insp(pod: Vec<f64>) -> InspectionModel {
        InspectionModel::from_pod(PodCurve::Exponential { mu: 8.0 }, pod).unwrap()
    }

    #[test]
    fn belief_validation() {
        assert!(BeliefVector::new(vec![0.5, 0.5]).is_ok());
        assert!(BeliefVector::new(vec![0.5, 0.6]).is_err());
        assert!(BeliefVector::new(vec![-0.1, 1.1]).is_err());
        assert!(BeliefVector::new(vec![]).is_err());
        assert_eq!(BeliefVector::uniform(30).failure_prob(), 1.0 / 30.0);
    }

    #[test]
    fn two_bin_bayes() {
        let b = BeliefVector::new(vec![0.5, 0.5]).unwrap();
        let (post, ev) = bayes_update(&b, &insp(vec![0.2, 0.8]), Outcome::Detect).unwrap();
        assert!((ev - 0.5).abs() < 1e-15);
        assert!((post.probs()[0] - 0.2).abs() < 1e-15);
        assert!((post.probs()[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn uninformative_update_is_identity() {
        let b = BeliefVector::new(vec![0.1, 0.2, 0.7]).unwrap();
        let (post, ev) = bayes_update(&b, &insp(vec![0.3; 3]), Outcome::NoDetect).unwrap();
        assert!((ev - 0.7).abs() < 1e-15);
        for (a, c) in post.probs().iter().zip(b.probs()) {
            assert!((a - c).abs() < 1e-15);
        }
    }

    #[test]
    fn impossible_outcome_is_degenerate() {
        let b = BeliefVector::new(vec![1.0, 0.0]).unwrap();
        assert!(matches!(
            bayes_update(&b, &insp(vec![0.0, 0.4]), Outcome::Detect),
            Err(Error::DegenerateUpdate)
        ));
    }

    #[test]
    fn sampling_extremes_and_frequency() {
        let b = BeliefVector::new(vec![0.5, 0.5]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(
                sample_inspection_outcome(&b, &insp(vec![0.0, 0.0]), &mut rng),
                Outcome::NoDetect
            );
            assert_eq!(
                sample_inspection_outcome(&b, &insp(vec![1.0, 1.0]), &mut rng),
                Outcome::Detect
            );
        }
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| sample_inspection_outcome(&b, &insp(vec![0.2, 0.8]), &mut rng) == Outcome::Detect)
            .count();
        let freq = hits as f64 / n as f64;
        let sigma = (0.25f64 / n as f64).sqrt();
        assert!((freq - 0.5).abs() < 3.0 * sigma, "{freq}");
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(16);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let i: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(30)).sum();
        assert!((i - 2.0 / 31.0).abs() < 1e-14);
    }

    #[test]
    fn correlated_prior_edge_cases() {
        let m = generate_component(ComponentKind::Structural, 2, MIN_SAMPLES, 1).unwrap();
        let cb0 = build_correlated_prior(&m, 2, 0.0, 80).unwrap();
        for k in 0..80 {
            assert_eq!(cb0.conditional_row(1, k), m.initial_probs());
        }
        assert!(build_correlated_prior(&m, 2, 1.0, 80).is_err());
        assert!(build_correlated_prior(&m, 2, -0.1, 80).is_err());

        let max_entropy = |cb: &CorrelationBelief| {
            (0..80)
                .map(|k| BeliefVector(cb.conditional_row(0, k).to_vec()).entropy())
                .fold(f64::MIN, f64::max)
        };
        let cb_hi = build_correlated_prior(&m, 1, 0.99, 80).unwrap();
        assert!(max_entropy(&cb_hi) < max_entropy(&cb0));
    }
}
