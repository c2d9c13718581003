//! Environment options and the key-value config file.

use serde::{Deserialize, Serialize};

use crate::belief::{DEFAULT_N_ALPHA, DEFAULT_RHO};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// k-out-of-n system with independent components.
    StructUc,
    /// k-out-of-n system with correlated initial damage.
    StructC,
    /// Offshore wind farm.
    Owf,
}

impl Family {
    pub fn is_struct(self) -> bool {
        matches!(self, Family::StructUc | Family::StructC)
    }

    pub fn default_horizon(self) -> usize {
        if self.is_struct() {
            30
        } else {
            20
        }
    }

    pub fn n_bins(self) -> usize {
        if self.is_struct() {
            30
        } else {
            60
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::StructUc => "struct_uc",
            Family::StructC => "struct_c",
            Family::Owf => "owf",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "struct_uc" => Ok(Family::StructUc),
            "struct_c" => Ok(Family::StructC),
            "owf" => Ok(Family::Owf),
            _ => Err(Error::Config(format!(
                "unknown family '{s}' (expected struct_uc, struct_c or owf)"
            ))),
        }
    }
}

/// How the failure risk is charged each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskMode {
    /// `c_f · (p_t - p_{t-1})` while the failure probability grows and
    /// `c_f · p_t` in a step where it drops, with `p_t` predicted before
    /// the step's inspections and `p_{t-1}` the previous posterior.
    /// Evaluated per turbine for wind farms.
    #[default]
    Increment,
    /// `c_f · p_t` of the updated beliefs every step.
    Absolute,
}

/// System failure probability in correlated systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelatedRisk {
    /// Average the k-out-of-n probability over the α cells.
    Exact,
    /// Treat the marginal component failure probabilities as independent.
    #[default]
    Independent,
}

/// Inspection and repair costs of one component class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionCosts {
    pub inspect: f64,
    pub repair: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardTable {
    /// k-out-of-n components.
    pub structural: ActionCosts,
    /// Wind turbine upper level.
    pub upper: ActionCosts,
    /// Wind turbine middle level.
    pub middle: ActionCosts,
    /// Consequence of a failure (system, or per turbine).
    pub c_f: f64,
    /// Campaign cost, charged once per step with any inspection or repair.
    pub campaign: f64,
}

impl RewardTable {
    pub fn defaults(family: Family, campaign_cost: bool) -> Self {
        let (s_ins, u_ins, m_ins, camp) = if campaign_cost {
            (-0.2, -0.2, -1.0, -5.0)
        } else {
            (-1.0, -1.0, -4.0, 0.0)
        };
        Self {
            structural: ActionCosts {
                inspect: s_ins,
                repair: -20.0,
            },
            upper: ActionCosts {
                inspect: u_ins,
                repair: -10.0,
            },
            middle: ActionCosts {
                inspect: m_ins,
                repair: -30.0,
            },
            c_f: if family.is_struct() { -10_000.0 } else { -1_000.0 },
            campaign: camp,
        }
    }
}

/// Optional observation and state content.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObsFlags {
    pub obs_d_rate: bool,
    pub obs_multiple: bool,
    pub obs_all_d_rate: bool,
    pub obs_alphas: bool,
    pub state_obs: bool,
    pub state_d_rate: bool,
    pub state_alphas: bool,
}

impl ObsFlags {
    pub fn defaults(family: Family) -> Self {
        let correlated = family == Family::StructC;
        Self {
            obs_d_rate: false,
            obs_multiple: false,
            obs_all_d_rate: false,
            obs_alphas: correlated,
            state_obs: true,
            state_d_rate: family.is_struct(),
            state_alphas: correlated,
        }
    }
}

/// Validated environment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub family: Family,
    /// Components (struct) or turbines (owf).
    pub n_comp: usize,
    /// Failure threshold of k-out-of-n systems.
    pub k_comp: Option<usize>,
    /// Modelled components per turbine.
    pub lev: usize,
    pub campaign_cost: bool,
    pub horizon: usize,
    pub discount: f64,
    pub rewards: RewardTable,
    pub flags: ObsFlags,
    pub risk_mode: RiskMode,
    pub correlated_risk: CorrelatedRisk,
    pub rho: f64,
    pub n_alpha: usize,
}

impl EnvConfig {
    fn base(family: Family, n_comp: usize, k_comp: Option<usize>) -> Self {
        Self {
            family,
            n_comp,
            k_comp,
            lev: 3,
            campaign_cost: false,
            horizon: family.default_horizon(),
            discount: 0.95,
            rewards: RewardTable::defaults(family, false),
            flags: ObsFlags::defaults(family),
            risk_mode: RiskMode::default(),
            correlated_risk: CorrelatedRisk::default(),
            rho: DEFAULT_RHO,
            n_alpha: DEFAULT_N_ALPHA,
        }
    }

    pub fn struct_uc(n_comp: usize, k_comp: usize) -> Self {
        Self::base(Family::StructUc, n_comp, Some(k_comp))
    }

    pub fn struct_c(n_comp: usize, k_comp: usize) -> Self {
        Self::base(Family::StructC, n_comp, Some(k_comp))
    }

    pub fn owf(n_turbines: usize) -> Self {
        Self::base(Family::Owf, n_turbines, None)
    }

    /// Switch the reward model, resetting costs to that model's defaults.
    pub fn with_campaign_cost(mut self, campaign_cost: bool) -> Self {
        self.campaign_cost = campaign_cost;
        self.rewards = RewardTable::defaults(self.family, campaign_cost);
        self
    }

    pub fn n_agents(&self) -> usize {
        match self.family {
            Family::Owf => 2 * self.n_comp,
            _ => self.n_comp,
        }
    }

    /// Simulated components (three per turbine for wind farms).
    pub fn n_components(&self) -> usize {
        match self.family {
            Family::Owf => self.lev * self.n_comp,
            _ => self.n_comp,
        }
    }

    pub fn n_bins(&self) -> usize {
        self.family.n_bins()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_comp == 0 {
            return bad("n_comp must be >= 1".into());
        }
        match self.family {
            Family::StructUc | Family::StructC => match self.k_comp {
                None => return bad("k_comp is required for k-out-of-n systems".into()),
                Some(k) if k == 0 || k > self.n_comp => {
                    return bad(format!(
                        "k_comp = {k} must satisfy 1 <= k_comp <= n_comp = {}",
                        self.n_comp
                    ))
                }
                _ => {}
            },
            Family::Owf => {
                if self.k_comp.is_some() {
                    return bad("k_comp is not an option of the wind farm".into());
                }
                if self.lev != 3 {
                    return bad(format!(
                        "lev = {} unsupported; wind turbines model 3 components",
                        self.lev
                    ));
                }
            }
        }
        if self.horizon == 0 {
            return bad("horizon must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.discount) {
            return bad(format!("discount {} outside [0, 1]", self.discount));
        }
        let correlated = self.family == Family::StructC;
        if !correlated && (self.flags.obs_alphas || self.flags.state_alphas) {
            return bad("alpha observations require the correlated family".into());
        }
        if correlated && !(0.0..1.0).contains(&self.rho) {
            return bad(format!("rho = {} must lie in [0, 1)", self.rho));
        }
        if correlated && self.n_alpha == 0 {
            return bad("n_alpha must be >= 1".into());
        }
        Ok(())
    }

    /// Parse a key-value (TOML) config file.
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        file.resolve()
    }

    /// Write every option as key-value pairs.
    pub fn to_toml_string(&self) -> String {
        let f = ConfigFile::from(self);
        toml::to_string(&f).expect("config serialises")
    }
}

/// On-disk form: keys mirror the environment option names.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub family: Option<String>,
    pub n_comp: Option<usize>,
    pub k_comp: Option<usize>,
    pub env_correlation: Option<bool>,
    pub campaign_cost: Option<bool>,
    pub lev: Option<usize>,
    pub discount: Option<f64>,
    pub horizon: Option<usize>,
    pub risk_mode: Option<RiskMode>,
    pub correlated_risk: Option<CorrelatedRisk>,
    pub rho: Option<f64>,
    pub n_alpha: Option<usize>,
    pub r_ins: Option<f64>,
    pub r_rep: Option<f64>,
    pub r_ins_upper: Option<f64>,
    pub r_rep_upper: Option<f64>,
    pub r_ins_middle: Option<f64>,
    pub r_rep_middle: Option<f64>,
    pub c_f: Option<f64>,
    pub r_camp: Option<f64>,
    pub obs_d_rate: Option<bool>,
    pub obs_multiple: Option<bool>,
    pub obs_all_d_rate: Option<bool>,
    pub obs_alphas: Option<bool>,
    pub state_obs: Option<bool>,
    pub state_d_rate: Option<bool>,
    pub state_alphas: Option<bool>,
}

impl ConfigFile {
    pub fn resolve(self) -> Result<EnvConfig> {
        let family = match (self.family.as_deref(), self.env_correlation) {
            (Some("struct"), corr) => {
                if corr.unwrap_or(false) {
                    Family::StructC
                } else {
                    Family::StructUc
                }
            }
            (Some(f), corr) => {
                let fam: Family = f.parse()?;
                if let Some(c) = corr {
                    if c != (fam == Family::StructC) {
                        return Err(Error::Config(format!("env_correlation = {c} contradicts family {f}")));
                    }
                }
                fam
            }
            (None, _) => return Err(Error::Config("missing key 'family'".into())),
        };
        if family == Family::Owf && self.n_alpha.is_some() {
            return Err(Error::Config("n_alpha only applies to the correlated family".into()));
        }
        let n_comp = self
            .n_comp
            .ok_or_else(|| Error::Config("missing key 'n_comp'".into()))?;
        let mut cfg = EnvConfig::base(family, n_comp, self.k_comp);
        cfg = cfg.with_campaign_cost(self.campaign_cost.unwrap_or(false));
        if let Some(v) = self.lev {
            cfg.lev = v;
        }
        if let Some(v) = self.discount {
            cfg.discount = v;
        }
        if let Some(v) = self.horizon {
            cfg.horizon = v;
        }
        if let Some(v) = self.risk_mode {
            cfg.risk_mode = v;
        }
        if let Some(v) = self.correlated_risk {
            cfg.correlated_risk = v;
        }
        if let Some(v) = self.rho {
            cfg.rho = v;
        }
        if let Some(v) = self.n_alpha {
            cfg.n_alpha = v;
        }
        let r = &mut cfg.rewards;
        let struct_only = [("r_ins", self.r_ins), ("r_rep", self.r_rep)];
        let owf_only = [
            ("r_ins_upper", self.r_ins_upper),
            ("r_rep_upper", self.r_rep_upper),
            ("r_ins_middle", self.r_ins_middle),
            ("r_rep_middle", self.r_rep_middle),
        ];
        let misplaced = if family.is_struct() {
            owf_only.iter()
        } else {
            struct_only.iter()
        }
        .find(|(_, v)| v.is_some());
        if let Some((k, _)) = misplaced {
            return Err(Error::Config(format!(
                "key '{k}' does not apply to family {}",
                family.name()
            )));
        }
        if let Some(v) = self.r_ins {
            r.structural.inspect = v;
        }
        if let Some(v) = self.r_rep {
            r.structural.repair = v;
        }
        if let Some(v) = self.r_ins_upper {
            r.upper.inspect = v;
        }
        if let Some(v) = self.r_rep_upper {
            r.upper.repair = v;
        }
        if let Some(v) = self.r_ins_middle {
            r.middle.inspect = v;
        }
        if let Some(v) = self.r_rep_middle {
            r.middle.repair = v;
        }
        if let Some(v) = self.c_f {
            r.c_f = v;
        }
        if let Some(v) = self.r_camp {
            r.campaign = v;
        }
        let f = &mut cfg.flags;
        for (slot, v) in [
            (&mut f.obs_d_rate, self.obs_d_rate),
            (&mut f.obs_multiple, self.obs_multiple),
            (&mut f.obs_all_d_rate, self.obs_all_d_rate),
            (&mut f.obs_alphas, self.obs_alphas),
            (&mut f.state_obs, self.state_obs),
            (&mut f.state_d_rate, self.state_d_rate),
            (&mut f.state_alphas, self.state_alphas),
        ] {
            if let Some(v) = v {
                *slot = v;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl From<&EnvConfig> for ConfigFile {
    fn from(c: &EnvConfig) -> Self {
        let is_struct = c.family.is_struct();
        let correlated = c.family == Family::StructC;
        let r = &c.rewards;
        Self {
            family: Some(c.family.name().to_string()),
            n_comp: Some(c.n_comp),
            k_comp: c.k_comp,
            env_correlation: is_struct.then_some(correlated),
            campaign_cost: Some(c.campaign_cost),
            lev: (!is_struct).then_some(c.lev),
            discount: Some(c.discount),
            horizon: Some(c.horizon),
            risk_mode: Some(c.risk_mode),
            correlated_risk: correlated.then_some(c.correlated_risk),
            rho: correlated.then_some(c.rho),
            n_alpha: correlated.then_some(c.n_alpha),
            r_ins: is_struct.then_some(r.structural.inspect),
            r_rep: is_struct.then_some(r.structural.repair),
            r_ins_upper: (!is_struct).then_some(r.upper.inspect),
            r_rep_upper: (!is_struct).then_some(r.upper.repair),
            r_ins_middle: (!is_struct).then_some(r.middle.inspect),
            r_rep_middle: (!is_struct).then_some(r.middle.repair),
            c_f: Some(r.c_f),
            r_camp: Some(r.campaign),
            obs_d_rate: Some(c.flags.obs_d_rate),
            obs_multiple: Some(c.flags.obs_multiple),
            obs_all_d_rate: Some(c.flags.obs_all_d_rate),
            obs_alphas: Some(c.flags.obs_alphas),
            state_obs: Some(c.flags.state_obs),
            state_d_rate: Some(c.flags.state_d_rate),
            state_alphas: Some(c.flags.state_alphas),
        }
    }
}
