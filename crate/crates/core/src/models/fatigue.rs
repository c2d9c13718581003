//! Fatigue crack growth physics.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

/// Crack size returned when the growth law diverges within a step.
///
/// Any crack at or above the critical size lands in the failure bin, so an
/// infinite size is a convenient sentinel for "failed".
pub const FAILED_CRACK: f64 = f64::INFINITY;

/// Load description driving the stress range `S_R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StressModel {
    /// `S_R ~ N(mean, std)` in N/mm², clamped at zero.
    Normal { mean: f64, std: f64 },
    /// Expected value of a Weibull-distributed stress, `S_R = q Γ(1 + 1/λ) Y`.
    ///
    /// `q ~ N(scale_mean, scale_cov · scale_mean)` (clamped at zero) and the
    /// geometry factor `Y` is lognormal with the given real-space mean and
    /// standard deviation.
    Weibull {
        scale_mean: f64,
        scale_cov: f64,
        shape: f64,
        geometry_mean: f64,
        geometry_std: f64,
    },
}

/// Random variables and constants of the crack growth law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FatigueParams {
    /// Mean of `ln C_FM`.
    pub ln_c_mean: f64,
    /// Standard deviation of `ln C_FM`.
    pub ln_c_std: f64,
    /// Crack growth exponent.
    pub m: f64,
    pub stress: StressModel,
    /// Stress cycles per year.
    pub cycles_per_year: f64,
    /// Mean of the exponential initial crack size (mm).
    pub d0_mean: f64,
    /// Critical crack size (mm).
    pub d_crit: f64,
}

impl FatigueParams {
    /// Generic k-out-of-n structural component.
    pub fn structural() -> Self {
        Self {
            ln_c_mean: -35.2,
            ln_c_std: 0.5,
            m: 3.5,
            stress: StressModel::Normal { mean: 70.0, std: 10.0 },
            cycles_per_year: 1e6,
            d0_mean: 1.0,
            d_crit: 20.0,
        }
    }

    fn wind(ln_c_mean: f64, ln_c_std: f64, scale_mean: f64, d_crit: f64) -> Self {
        Self {
            ln_c_mean,
            ln_c_std,
            m: 3.0,
            stress: StressModel::Weibull {
                scale_mean,
                scale_cov: 0.25,
                shape: 0.8,
                geometry_mean: 1.0,
                geometry_std: 0.1,
            },
            cycles_per_year: 5_049_216.0,
            d0_mean: 0.11,
            d_crit,
        }
    }

    /// Wind turbine component in the atmospheric zone.
    pub fn wind_upper() -> Self {
        Self::wind(-26.45, 0.12, 10.21, 20.0)
    }

    /// Wind turbine component in the splash zone.
    pub fn wind_middle() -> Self {
        Self::wind(-26.04, 0.4, 7.40, 60.0)
    }

    /// Wind turbine component below the seabed.
    pub fn wind_mudline() -> Self {
        Self::wind(-26.12, 0.39, 6.74, 60.0)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.ln_c_mean,
            self.ln_c_std,
            self.m,
            self.cycles_per_year,
            self.d0_mean,
            self.d_crit,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("fatigue parameters must be finite".into()));
        }
        if self.m <= 2.0 {
            return Err(Error::InvalidParameter(format!(
                "crack growth exponent m = {} must exceed 2",
                self.m
            )));
        }
        if self.ln_c_std < 0.0 {
            return Err(Error::InvalidParameter("ln C standard deviation must be >= 0".into()));
        }
        if self.cycles_per_year <= 0.0 {
            return Err(Error::InvalidParameter("cycles per year must be > 0".into()));
        }
        if self.d0_mean <= 0.0 || self.d_crit <= self.d0_mean {
            return Err(Error::InvalidParameter(format!(
                "need 0 < d0_mean ({}) < d_crit ({})",
                self.d0_mean, self.d_crit
            )));
        }
        match self.stress {
            StressModel::Normal { mean, std } => {
                if !(mean.is_finite() && std.is_finite() && std >= 0.0) {
                    return Err(Error::InvalidParameter(
                        "normal stress needs finite mean and std >= 0".into(),
                    ));
                }
            }
            StressModel::Weibull {
                scale_mean,
                scale_cov,
                shape,
                geometry_mean,
                geometry_std,
            } => {
                if !(scale_mean > 0.0 && scale_cov >= 0.0 && shape > 0.0 && geometry_mean > 0.0 && geometry_std >= 0.0)
                {
                    return Err(Error::InvalidParameter("weibull stress parameters out of range".into()));
                }
            }
        }
        Ok(())
    }
}

/// Advance a crack by one year of fatigue loading.
///
/// `d' = [(1 - m/2) C S^m π^{m/2} n + d^{1-m/2}]^{2/(2-m)}`. When the
/// bracket is not positive the crack has grown without bound within the
/// step and [`FAILED_CRACK`] is returned.
pub fn crack_growth_step(d: f64, c_fm: f64, m: f64, s_r: f64, n_s: f64) -> Result<f64> {
    if !(d.is_finite() && c_fm.is_finite() && m.is_finite() && s_r.is_finite() && n_s.is_finite()) {
        return Err(Error::InvalidParameter("crack growth inputs must be finite".into()));
    }
    if d <= 0.0 {
        return Err(Error::InvalidParameter(format!("crack size must be positive, got {d}")));
    }
    if m == 2.0 {
        return Err(Error::InvalidParameter(
            "crack growth exponent m = 2 is singular".into(),
        ));
    }
    let growth = (1.0 - m / 2.0) * c_fm * s_r.powf(m) * std::f64::consts::PI.powf(m / 2.0) * n_s;
    if growth == 0.0 {
        return Ok(d);
    }
    let base = growth + d.powf(1.0 - m / 2.0);
    if base <= 0.0 {
        return Ok(FAILED_CRACK);
    }
    Ok(base.powf(2.0 / (2.0 - m)))
}

/// Expected stress range of a Weibull load weighted by a geometry factor.
pub fn expected_stress_owf(q: f64, lambda: f64, y: f64) -> Result<f64> {
    if !(q > 0.0 && lambda > 0.0 && y > 0.0) || !(q.is_finite() && lambda.is_finite() && y.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "expected stress needs positive finite q, lambda, y (got {q}, {lambda}, {y})"
        )));
    }
    Ok(q * gamma(1.0 + 1.0 / lambda) * y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_cycles_leaves_crack_unchanged() {
        for c in [1e-20, 1e-12, 3.0] {
            assert_eq!(crack_growth_step(1.0, c, 3.5, 80.0, 0.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn golden_growth_value() {
        // 50-digit evaluation of the growth law, rounded to f64.
        let d = crack_growth_step(1.0, (-35.2f64).exp(), 3.5, 70.0, 1e6).unwrap();
        assert!(d > 1.0);
        assert!((d - 1.011_088_715_021_290_2).abs() < 1e-12, "{d}");
    }

    #[test]
    fn divergent_bracket_is_failure() {
        let d = crack_growth_step(1.0, 1.0, 3.5, 70.0, 1e6).unwrap();
        assert_eq!(d, FAILED_CRACK);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(crack_growth_step(f64::NAN, 1e-15, 3.5, 70.0, 1e6).is_err());
        assert!(crack_growth_step(1.0, f64::INFINITY, 3.5, 70.0, 1e6).is_err());
        assert!(crack_growth_step(0.0, 1e-15, 3.5, 70.0, 1e6).is_err());
        assert!(crack_growth_step(1.0, 1e-15, 2.0, 70.0, 1e6).is_err());
    }

    #[test]
    fn expected_stress_values() {
        assert!((expected_stress_owf(1.0, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((expected_stress_owf(1.0, 0.5, 1.0).unwrap() - 2.0).abs() < 1e-12);
        // Γ(2.25) = 1.25 · Γ(1.25) = 1.25 · 0.906402477055477...
        let expect = 10.21 * 1.25 * 0.906_402_477_055_477 * 1.1;
        let got = expected_stress_owf(10.21, 0.8, 1.1).unwrap();
        assert!(got > 10.21);
        assert!((got - expect).abs() < 1e-9, "{got} vs {expect}");
        assert!(expected_stress_owf(0.0, 0.8, 1.0).is_err());
        assert!(expected_stress_owf(1.0, -0.8, 1.0).is_err());
        assert!(expected_stress_owf(1.0, 0.8, 0.0).is_err());
    }

    #[test]
    fn presets_validate() {
        for p in [
            FatigueParams::structural(),
            FatigueParams::wind_upper(),
            FatigueParams::wind_middle(),
            FatigueParams::wind_mudline(),
        ] {
            p.validate().unwrap();
        }
        let mut bad = FatigueParams::structural();
        bad.m = 2.0;
        assert!(bad.validate().is_err());
    }
}
