//! Monte Carlo estimation of non-stationary crack transition tables.

use rand::Rng;
use rand_distr::{Distribution, Exp, LogNormal, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::discretization::Discretization;
use super::fatigue::{crack_growth_step, expected_stress_owf, FatigueParams, StressModel, FAILED_CRACK};
use super::inspection::{InspectionModel, PodCurve};
use crate::belief::BeliefVector;
use crate::error::{Error, Result};
use crate::rng::{mix64, stream_rng};

/// Minimum number of Monte Carlo trajectories accepted by the generator.
pub const MIN_SAMPLES: usize = 100_000;
/// Default number of Monte Carlo trajectories.
pub const DEFAULT_SAMPLES: usize = 1_000_000;

const CHUNK: usize = 1 << 14;

/// Which physical component a model describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentKind {
    Structural,
    WindUpper,
    WindMiddle,
    WindMudline,
}

impl ComponentKind {
    pub fn fatigue_params(self) -> FatigueParams {
        match self {
            ComponentKind::Structural => FatigueParams::structural(),
            ComponentKind::WindUpper => FatigueParams::wind_upper(),
            ComponentKind::WindMiddle => FatigueParams::wind_middle(),
            ComponentKind::WindMudline => FatigueParams::wind_mudline(),
        }
    }

    pub fn discretization(self) -> Discretization {
        let p = self.fatigue_params();
        let d = match self {
            ComponentKind::Structural => Discretization::log_spaced(p.d_crit, 30),
            _ => Discretization::linear(p.d0_mean, p.d_crit, 60),
        };
        d.expect("preset discretization is valid")
    }

    /// PoD curve, or `None` for components that cannot be inspected.
    pub fn pod_curve(self) -> Option<PodCurve> {
        match self {
            ComponentKind::Structural => Some(PodCurve::Exponential { mu: 8.0 }),
            ComponentKind::WindUpper => Some(PodCurve::EddyCurrent { chi: 0.4, b: 1.43 }),
            ComponentKind::WindMiddle => Some(PodCurve::EddyCurrent { chi: 1.16, b: 0.90 }),
            ComponentKind::WindMudline => None,
        }
    }

    /// Default episode horizon for environments built from this component.
    pub fn default_horizon(self) -> usize {
        match self {
            ComponentKind::Structural => 30,
            _ => 20,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ComponentKind::Structural => "struct",
            ComponentKind::WindUpper => "owf_upper",
            ComponentKind::WindMiddle => "owf_middle",
            ComponentKind::WindMudline => "owf_mudline",
        }
    }
}

/// Provenance of a generated model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub component: Option<ComponentKind>,
    pub params: FatigueParams,
    pub seed: u64,
    pub n_samples: usize,
    /// Rows per step that had no visits and fell back to the identity row.
    pub fallback_rows: Vec<usize>,
}

/// Stack of row-stochastic matrices `p(d' | d, τ + 1)` for `τ = 0..tau_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionModel {
    n_bins: usize,
    tau_max: usize,
    /// `tables[(τ · n + i) · n + j] = p(j | i, τ + 1)`.
    tables: Vec<f64>,
    /// Per `(τ, i)`, the half-open column range holding the row's nonzeros.
    bands: Vec<(usize, usize)>,
    initial: Vec<f64>,
    discretization: Discretization,
    inspection: Option<InspectionModel>,
    pub metadata: ModelMetadata,
}

impl TransitionModel {
    /// Assemble a model from raw parts, checking shapes and stochasticity.
    pub fn from_parts(
        tables: Vec<f64>,
        tau_max: usize,
        initial: Vec<f64>,
        discretization: Discretization,
        inspection: Option<InspectionModel>,
        metadata: ModelMetadata,
    ) -> Result<Self> {
        let n = discretization.n_bins();
        if tables.len() != tau_max * n * n {
            return Err(Error::DimensionMismatch(format!(
                "expected {} table entries, got {}",
                tau_max * n * n,
                tables.len()
            )));
        }
        if initial.len() != n {
            return Err(Error::DimensionMismatch("initial belief length".into()));
        }
        if let Some(insp) = &inspection {
            if insp.n_bins() != n {
                return Err(Error::DimensionMismatch("inspection model length".into()));
            }
        }
        for (r, row) in tables.chunks(n).enumerate() {
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-9 || row.iter().any(|p| *p < 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "table row {r} is not stochastic (sum {s})"
                )));
            }
        }
        let bands = tables
            .chunks(n)
            .map(|row| {
                let lo = row.iter().position(|&p| p != 0.0).unwrap_or(0);
                let hi = row.iter().rposition(|&p| p != 0.0).map_or(lo, |j| j + 1);
                (lo, hi)
            })
            .collect();
        Ok(Self {
            n_bins: n,
            tau_max,
            tables,
            bands,
            initial,
            discretization,
            inspection,
            metadata,
        })
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn tau_max(&self) -> usize {
        self.tau_max
    }

    pub fn discretization(&self) -> &Discretization {
        &self.discretization
    }

    pub fn inspection(&self) -> Option<&InspectionModel> {
        self.inspection.as_ref()
    }

    pub fn with_inspection(mut self, inspection: Option<InspectionModel>) -> Result<Self> {
        if let Some(i) = &inspection {
            if i.n_bins() != self.n_bins {
                return Err(Error::DimensionMismatch("inspection model length".into()));
            }
        }
        self.inspection = inspection;
        Ok(self)
    }

    /// Raw table storage, step-major then row-major.
    pub fn raw_tables(&self) -> &[f64] {
        &self.tables
    }

    pub fn initial_probs(&self) -> &[f64] {
        &self.initial
    }

    pub fn initial_belief(&self) -> BeliefVector {
        BeliefVector::from_probs_unchecked(self.initial.clone())
    }

    /// Matrix used when advancing from deterioration rate `tau` to `tau + 1`.
    pub fn table(&self, tau: usize) -> Result<&[f64]> {
        if tau >= self.tau_max {
            return Err(Error::TauOutOfRange {
                tau,
                tau_max: self.tau_max,
            });
        }
        let nn = self.n_bins * self.n_bins;
        Ok(&self.tables[tau * nn..(tau + 1) * nn])
    }

    /// Nonzero column range of every row of [`table`](Self::table)`(tau)`.
    pub(crate) fn bands(&self, tau: usize) -> &[(usize, usize)] {
        &self.bands[tau * self.n_bins..(tau + 1) * self.n_bins]
    }

    /// `p(j | i, tau + 1)`.
    pub fn prob(&self, tau: usize, i: usize, j: usize) -> f64 {
        self.tables[(tau * self.n_bins + i) * self.n_bins + j]
    }
}

/// Per-trajectory draw of the random variables that stay fixed over time.
struct Trajectory {
    c_fm: f64,
    s_r: f64,
    d0: f64,
}

struct Sampler {
    ln_c: Normal<f64>,
    stress: StressSampler,
    d0: Exp<f64>,
}

enum StressSampler {
    Normal(Normal<f64>),
    Weibull {
        scale: Normal<f64>,
        shape: f64,
        geometry: Option<LogNormal<f64>>,
        geometry_mean: f64,
    },
}

impl Sampler {
    fn new(p: &FatigueParams) -> Result<Self> {
        let bad = |e: rand_distr::NormalError| Error::InvalidParameter(e.to_string());
        let stress = match p.stress {
            StressModel::Normal { mean, std } => StressSampler::Normal(Normal::new(mean, std).map_err(bad)?),
            StressModel::Weibull {
                scale_mean,
                scale_cov,
                shape,
                geometry_mean,
                geometry_std,
            } => {
                let geometry = if geometry_std > 0.0 {
                    let s2 = (1.0 + (geometry_std / geometry_mean).powi(2)).ln();
                    Some(LogNormal::new(geometry_mean.ln() - 0.5 * s2, s2.sqrt()).map_err(bad)?)
                } else {
                    None
                };
                StressSampler::Weibull {
                    scale: Normal::new(scale_mean, scale_cov * scale_mean).map_err(bad)?,
                    shape,
                    geometry,
                    geometry_mean,
                }
            }
        };
        Ok(Self {
            ln_c: Normal::new(p.ln_c_mean, p.ln_c_std).map_err(bad)?,
            stress,
            d0: Exp::new(1.0 / p.d0_mean).map_err(|e| Error::InvalidParameter(e.to_string()))?,
        })
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> Result<Trajectory> {
        let c_fm = self.ln_c.sample(rng).exp();
        let s_r = match &self.stress {
            StressSampler::Normal(n) => n.sample(rng).max(0.0),
            StressSampler::Weibull {
                scale,
                shape,
                geometry,
                geometry_mean,
            } => {
                let q = scale.sample(rng).max(0.0);
                let y = geometry.as_ref().map_or(*geometry_mean, |g| g.sample(rng));
                if q == 0.0 {
                    0.0
                } else {
                    expected_stress_owf(q, *shape, y)?
                }
            }
        };
        let d0 = self.d0.sample(rng).max(f64::MIN_POSITIVE);
        Ok(Trajectory { c_fm, s_r, d0 })
    }
}

/// Estimate the transition tables by Monte Carlo simulation of the crack
/// growth law.
///
/// Each trajectory keeps its material constant, stress range and initial
/// crack for the whole horizon. Row `i` of table `τ` is the empirical
/// distribution of the bin after step `τ + 1` among trajectories that were
/// in bin `i` after step `τ`. Unvisited rows fall back to the identity row.
///
/// Trajectories are split into fixed-size chunks, each drawing from its own
/// counter-based stream, and integer counts are merged; the result does not
/// depend on the number of threads.
pub fn generate_transition_model(
    params: &FatigueParams,
    disc: &Discretization,
    horizon: usize,
    n_samples: usize,
    seed: u64,
) -> Result<TransitionModel> {
    params.validate()?;
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be >= 1".into()));
    }
    if n_samples < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "n_samples must be >= {MIN_SAMPLES}, got {n_samples}"
        )));
    }
    if (disc.d_crit() - params.d_crit).abs() > 1e-12 * params.d_crit {
        return Err(Error::InvalidDiscretization(format!(
            "failure edge {} does not match critical crack size {}",
            disc.d_crit(),
            params.d_crit
        )));
    }

    let n = disc.n_bins();
    let nn = n * n;
    let sampler = Sampler::new(params)?;
    let n_chunks = n_samples.div_ceil(CHUNK);
    let key = mix64(seed);

    let counts = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| -> Result<Vec<u64>> {
            let mut rng = stream_rng(key, chunk as u64);
            let len = CHUNK.min(n_samples - chunk * CHUNK);
            let mut counts = vec![0u64; horizon * nn];
            for _ in 0..len {
                let tr = sampler.draw(&mut rng)?;
                let mut d = tr.d0;
                let mut bin = disc.bin_of(d);
                for tau in 0..horizon {
                    if d != FAILED_CRACK {
                        d = crack_growth_step(d, tr.c_fm, params.m, tr.s_r, params.cycles_per_year)?;
                    }
                    let next = disc.bin_of(d);
                    counts[tau * nn + bin * n + next] += 1;
                    bin = next;
                }
            }
            Ok(counts)
        })
        .try_reduce(
            || vec![0u64; horizon * nn],
            |mut a, b| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                Ok(a)
            },
        )?;

    let mut tables = vec![0.0; horizon * nn];
    let mut fallback_rows = vec![0usize; horizon];
    for tau in 0..horizon {
        for i in 0..n {
            let row = &counts[tau * nn + i * n..tau * nn + (i + 1) * n];
            let total: u64 = row.iter().sum();
            let out = &mut tables[tau * nn + i * n..tau * nn + (i + 1) * n];
            if total == 0 {
                out[i] = 1.0;
                fallback_rows[tau] += 1;
            } else {
                let t = total as f64;
                out.iter_mut().zip(row).for_each(|(p, &c)| *p = c as f64 / t);
            }
        }
    }

    let metadata = ModelMetadata {
        component: None,
        params: params.clone(),
        seed,
        n_samples,
        fallback_rows,
    };
    TransitionModel::from_parts(
        tables,
        horizon,
        disc.exponential_masses(params.d0_mean),
        disc.clone(),
        None,
        metadata,
    )
}

/// Generate the model of a preset component, including its inspection model.
pub fn generate_component(kind: ComponentKind, horizon: usize, n_samples: usize, seed: u64) -> Result<TransitionModel> {
    let disc = kind.discretization();
    let mut model = generate_transition_model(&kind.fatigue_params(), &disc, horizon, n_samples, seed)?;
    model.metadata.component = Some(kind);
    let inspection = kind
        .pod_curve()
        .map(|c| InspectionModel::from_curve(c, &disc))
        .transpose()?;
    model.with_inspection(inspection)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_struct(seed: u64) -> TransitionModel {
        generate_component(ComponentKind::Structural, 30, MIN_SAMPLES, seed).unwrap()
    }

    #[test]
    fn rows_are_stochastic_and_triangular() {
        let m = small_struct(3);
        let n = m.n_bins();
        for tau in 0..m.tau_max() {
            for i in 0..n {
                let s: f64 = (0..n).map(|j| m.prob(tau, i, j)).sum();
                assert!((s - 1.0).abs() <= 1e-9);
                for j in 0..i {
                    assert_eq!(m.prob(tau, i, j), 0.0);
                }
            }
        }
        // failure bin is absorbing
        for tau in 0..m.tau_max() {
            assert_eq!(m.prob(tau, n - 1, n - 1), 1.0);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        assert_eq!(small_struct(11), small_struct(11));
        assert_ne!(small_struct(11).raw_tables(), small_struct(12).raw_tables());
    }

    #[test]
    fn zero_stress_gives_identity() {
        let mut p = FatigueParams::structural();
        p.stress = StressModel::Normal { mean: 0.0, std: 0.0 };
        let disc = Discretization::log_spaced(20.0, 30).unwrap();
        let m = generate_transition_model(&p, &disc, 1, 200_000, 5).unwrap();
        for i in 0..30 {
            for j in 0..30 {
                assert_eq!(m.prob(0, i, j), if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn argument_validation() {
        let p = FatigueParams::structural();
        let disc = Discretization::log_spaced(20.0, 30).unwrap();
        assert!(generate_transition_model(&p, &disc, 0, MIN_SAMPLES, 1).is_err());
        assert!(generate_transition_model(&p, &disc, 5, 10, 1).is_err());
        let wrong = Discretization::log_spaced(25.0, 30).unwrap();
        assert!(matches!(
            generate_transition_model(&p, &wrong, 5, MIN_SAMPLES, 1),
            Err(Error::InvalidDiscretization(_))
        ));
    }

    #[test]
    fn tau_out_of_range() {
        let m = small_struct(1);
        assert!(m.table(29).is_ok());
        assert!(matches!(m.table(30), Err(Error::TauOutOfRange { .. })));
    }

    #[test]
    fn mudline_has_no_inspection() {
        let m = generate_component(ComponentKind::WindMudline, 20, MIN_SAMPLES, 1).unwrap();
        assert!(m.inspection().is_none());
        assert_eq!(m.n_bins(), 60);
    }
}
