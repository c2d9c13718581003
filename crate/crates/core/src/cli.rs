//! The `imp` command-line tool.
//!
//! Exit codes: 0 on success, 1 for usage errors, 2 for runtime failures.
//! Every subcommand that writes files also writes a JSON run manifest
//! recording the resolved configuration, seeds, model provenance and the
//! exact arguments.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::envs::{ConfigFile, CorrelatedRisk, EnvConfig, Family, ImpEnv, ModelSet, RiskMode};
use crate::error::{Error, Result};
use crate::harness::{
    config_hash, evaluate, run_episode_traced, variance_study, write_csv, write_histogram_csv, write_json,
    DoNothingPolicy, Policy, ScriptedPolicy, UniformRandomPolicy,
};
use crate::heuristics::{heuristic_search, HeuristicParams, HeuristicPolicy, SearchSpec};
use crate::models::DEFAULT_SAMPLES;

/// Colon-separated directories searched for model files.
pub const MODEL_DIR_VAR: &str = "IMP_MODEL_DIR";

#[derive(Debug, Parser)]
#[command(name = "imp", version, about = "Inspection and maintenance planning simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate transition models by Monte Carlo simulation.
    GenModel(GenModelArgs),
    /// Grid-search the expert heuristic.
    HeuristicSearch(SearchArgs),
    /// Play one episode and emit a JSON-lines trace.
    Rollout(RolloutArgs),
    /// Evaluate a policy over many episodes.
    Eval(EvalArgs),
    /// Measure how the return estimate spreads with the episode count.
    VarianceStudy(VarianceArgs),
    /// Print the fully resolved environment configuration.
    ExportConfig(ExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelFamily {
    Struct,
    Owf,
}

#[derive(Debug, Args)]
pub struct GenModelArgs {
    #[arg(long, value_enum)]
    pub family: ModelFamily,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    pub samples: usize,
    #[arg(long)]
    pub seed: u64,
    /// Steps covered by the tables (defaults to the family's horizon).
    #[arg(long)]
    pub horizon: Option<usize>,
}

/// Environment options; flags override keys of `--config`.
#[derive(Debug, Clone, Args)]
pub struct EnvArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// struct_uc, struct_c or owf.
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub n_comp: Option<usize>,
    #[arg(long)]
    pub k_comp: Option<usize>,
    #[arg(long)]
    pub campaign_cost: Option<bool>,
    #[arg(long)]
    pub discount: Option<f64>,
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long, value_enum)]
    pub risk_mode: Option<RiskModeArg>,
    #[arg(long, value_enum)]
    pub correlated_risk: Option<CorrelatedRiskArg>,
    /// Directory with model files; otherwise the model search path is used,
    /// and failing that models are generated.
    #[arg(long)]
    pub models: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    pub model_samples: usize,
    #[arg(long, default_value_t = 0)]
    pub model_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RiskModeArg {
    Increment,
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CorrelatedRiskArg {
    Exact,
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyKind {
    Heuristic,
    Donothing,
    Random,
    External,
}

#[derive(Debug, Clone, Args)]
pub struct PolicyArgs {
    #[arg(long, value_enum, default_value = "heuristic")]
    pub policy: PolicyKind,
    /// Heuristic inspection interval.
    #[arg(long)]
    pub interval: Option<usize>,
    /// Heuristic components per inspection campaign.
    #[arg(long)]
    pub n_inspect: Option<usize>,
    /// JSON-lines action script for the external policy.
    #[arg(long)]
    pub actions: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[command(flatten)]
    pub env: EnvArgs,
    #[arg(long, default_value = "heuristic_table.csv")]
    pub out: PathBuf,
    /// Summary JSON (defaults to the table path with a .json extension).
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub intervals: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub n_inspect: Option<Vec<usize>>,
    #[arg(long, default_value_t = 500)]
    pub episodes_per_cell: usize,
    #[arg(long, default_value_t = 10_000)]
    pub eval_episodes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RolloutArgs {
    #[command(flatten)]
    pub env: EnvArgs,
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Trace file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub env: EnvArgs,
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[arg(long, default_value_t = 10_000)]
    pub episodes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "eval_out")]
    pub out_dir: PathBuf,
    /// Also write a return histogram with this many bins.
    #[arg(long)]
    pub histogram: Option<usize>,
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct VarianceArgs {
    #[command(flatten)]
    pub env: EnvArgs,
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[arg(long, value_delimiter = ',', default_value = "100,1000,10000")]
    pub counts: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "variance_out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub env: EnvArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Where a run's models came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSource {
    Directory(PathBuf),
    Generated { seed: u64, samples: usize, horizon: usize },
}

/// Record of one invocation, sufficient to repeat it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub args: Vec<String>,
    pub config: Option<EnvConfig>,
    pub config_hash: Option<String>,
    pub models: Option<ModelSource>,
    pub seeds: BTreeMap<String, u64>,
    pub artifacts: Vec<PathBuf>,
}

impl RunManifest {
    fn new(subcommand: &str, args: &[String]) -> Self {
        Self {
            subcommand: subcommand.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            args: args.to_vec(),
            config: None,
            config_hash: None,
            models: None,
            seeds: BTreeMap::new(),
            artifacts: Vec::new(),
        }
    }

    fn with_env(mut self, env: &ResolvedEnv) -> Self {
        self.config_hash = Some(config_hash(&env.config, &env.models));
        self.config = Some(env.config.clone());
        self.models = Some(env.source.clone());
        self
    }
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let argv: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match run(cli, &argv) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

pub fn run(cli: Cli, argv: &[String]) -> Result<()> {
    match cli.command {
        Command::GenModel(a) => cmd_gen_model(a, argv),
        Command::HeuristicSearch(a) => cmd_heuristic_search(a, argv),
        Command::Rollout(a) => cmd_rollout(a, argv),
        Command::Eval(a) => cmd_eval(a, argv),
        Command::VarianceStudy(a) => cmd_variance_study(a, argv),
        Command::ExportConfig(a) => cmd_export_config(a),
    }
}

fn manifest_beside(path: &Path) -> PathBuf {
    let mut name = path.file_stem().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    path.with_file_name(name)
}

pub fn cmd_gen_model(a: GenModelArgs, argv: &[String]) -> Result<()> {
    let family = match a.family {
        ModelFamily::Struct => Family::StructUc,
        ModelFamily::Owf => Family::Owf,
    };
    let horizon = a.horizon.unwrap_or(family.default_horizon());
    let set = ModelSet::generate(family, horizon, a.samples, a.seed)?;
    let paths = set.save_dir(&a.out)?;
    let mut m = RunManifest::new("gen-model", argv);
    m.models = Some(ModelSource::Generated {
        seed: a.seed,
        samples: a.samples,
        horizon,
    });
    m.seeds.insert("model".into(), a.seed);
    m.artifacts = paths.clone();
    write_json(a.out.join("gen-model.manifest.json"), &m)?;
    for p in paths {
        println!("{}", p.display());
    }
    Ok(())
}

/// A configuration together with the models it runs on.
pub struct ResolvedEnv {
    pub config: EnvConfig,
    pub models: ModelSet,
    pub source: ModelSource,
}

impl EnvArgs {
    /// Merge the config file with flags and validate.
    pub fn resolve_config(&self) -> Result<EnvConfig> {
        let mut file = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                toml::from_str::<ConfigFile>(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
            None => ConfigFile::default(),
        };
        if let Some(f) = &self.family {
            file.family = Some(f.clone());
        }
        file.n_comp = self.n_comp.or(file.n_comp);
        file.k_comp = self.k_comp.or(file.k_comp);
        file.campaign_cost = self.campaign_cost.or(file.campaign_cost);
        file.discount = self.discount.or(file.discount);
        file.horizon = self.horizon.or(file.horizon);
        if let Some(r) = self.risk_mode {
            file.risk_mode = Some(match r {
                RiskModeArg::Increment => RiskMode::Increment,
                RiskModeArg::Absolute => RiskMode::Absolute,
            });
        }
        if let Some(r) = self.correlated_risk {
            file.correlated_risk = Some(match r {
                CorrelatedRiskArg::Exact => CorrelatedRisk::Exact,
                CorrelatedRiskArg::Independent => CorrelatedRisk::Independent,
            });
        }
        file.resolve()
    }

    /// Resolve the configuration and locate or generate its models.
    pub fn resolve(&self) -> Result<ResolvedEnv> {
        let config = self.resolve_config()?;
        let family = config.family;
        let has_files = |d: &Path| ModelSet::file_names(family).iter().all(|n| d.join(n).is_file());
        let dir = match &self.models {
            Some(d) => Some(d.clone()),
            None => std::env::var_os(MODEL_DIR_VAR).and_then(|v| std::env::split_paths(&v).find(|d| has_files(d))),
        };
        let (models, source) = match dir {
            Some(d) => (ModelSet::load_dir(family, &d)?, ModelSource::Directory(d)),
            None => {
                let horizon = config.horizon.max(family.default_horizon());
                let set = ModelSet::generate(family, horizon, self.model_samples, self.model_seed)?;
                (
                    set,
                    ModelSource::Generated {
                        seed: self.model_seed,
                        samples: self.model_samples,
                        horizon,
                    },
                )
            }
        };
        models.check(family, config.horizon)?;
        Ok(ResolvedEnv { config, models, source })
    }
}

impl PolicyArgs {
    pub fn build(&self, config: &EnvConfig) -> Result<Box<dyn Policy>> {
        match self.policy {
            PolicyKind::Heuristic => {
                let (interval, n_inspect) = match (self.interval, self.n_inspect) {
                    (Some(i), Some(k)) => (i, k),
                    _ => {
                        return Err(Error::Config(
                            "the heuristic policy needs --interval and --n-inspect".into(),
                        ))
                    }
                };
                let params = HeuristicParams { interval, n_inspect };
                params.validate(config.horizon, config.n_agents())?;
                Ok(Box::new(HeuristicPolicy::new(params)))
            }
            PolicyKind::Donothing => Ok(Box::new(DoNothingPolicy)),
            PolicyKind::Random => Ok(Box::new(UniformRandomPolicy)),
            PolicyKind::External => {
                let p = self
                    .actions
                    .as_ref()
                    .ok_or_else(|| Error::Config("the external policy needs --actions".into()))?;
                let script = ScriptedPolicy::from_json_lines(&std::fs::read_to_string(p)?)?;
                if let Some((t, bad)) = script
                    .steps()
                    .iter()
                    .enumerate()
                    .find(|(_, s)| s.len() != config.n_agents())
                {
                    return Err(Error::Config(format!(
                        "action script step {t} has {} actions for {} agents",
                        bad.len(),
                        config.n_agents()
                    )));
                }
                Ok(Box::new(script))
            }
        }
    }
}

pub fn cmd_heuristic_search(a: SearchArgs, argv: &[String]) -> Result<()> {
    let env = a.env.resolve()?;
    let mut spec = SearchSpec::default_for(&env.config, a.seed);
    if let Some(i) = a.intervals {
        spec.intervals = i;
    }
    if let Some(k) = a.n_inspect {
        spec.n_inspect = k;
    }
    spec.episodes_per_cell = a.episodes_per_cell;
    spec.eval_episodes = a.eval_episodes;
    let result = heuristic_search(&env.config, &env.models, &spec, a.threads)?;
    write_csv(&a.out, &result.table)?;
    let summary_path = a.summary.unwrap_or_else(|| a.out.with_extension("json"));
    write_json(&summary_path, &result)?;
    let mut m = RunManifest::new("heuristic-search", argv).with_env(&env);
    m.seeds.insert("search".into(), a.seed);
    m.seeds.insert("grid".into(), result.grid_seed);
    m.seeds.insert("eval".into(), result.eval_seed);
    m.artifacts = vec![a.out.clone(), summary_path.clone()];
    write_json(manifest_beside(&a.out), &m)?;
    println!(
        "best interval={} n_inspect={} value={:.4} (se {:.4}, {} episodes)",
        result.best.interval,
        result.best.n_inspect,
        result.value(),
        result.report.std_error,
        result.report.n_episodes
    );
    Ok(())
}

pub fn cmd_rollout(a: RolloutArgs, argv: &[String]) -> Result<()> {
    let env_r = a.env.resolve()?;
    let policy = a.policy.build(&env_r.config)?;
    let mut env = ImpEnv::new(env_r.config.clone(), env_r.models.clone())?;
    let mut sink: Box<dyn Write> = match &a.out {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    };
    let stats = run_episode_traced(&mut env, policy.as_ref(), a.seed, |info| {
        serde_json::to_writer(&mut sink, info)?;
        sink.write_all(b"\n")?;
        Ok(())
    })?;
    sink.flush()?;
    if let Some(p) = &a.out {
        let mut m = RunManifest::new("rollout", argv).with_env(&env_r);
        m.seeds.insert("episode".into(), a.seed);
        m.artifacts = vec![p.clone()];
        write_json(manifest_beside(p), &m)?;
        println!("discounted return {:.6}", stats.discounted_return);
    }
    Ok(())
}

pub fn cmd_eval(a: EvalArgs, argv: &[String]) -> Result<()> {
    let env = a.env.resolve()?;
    let policy = a.policy.build(&env.config)?;
    let (report, episodes) = evaluate(&env.config, &env.models, policy.as_ref(), a.episodes, a.seed, a.threads)?;
    std::fs::create_dir_all(&a.out_dir)?;
    let csv = a.out_dir.join("episodes.csv");
    let json = a.out_dir.join("report.json");
    write_csv(&csv, &episodes)?;
    write_json(&json, &report)?;
    let mut artifacts = vec![csv, json];
    if let Some(bins) = a.histogram {
        let h = a.out_dir.join("histogram.csv");
        let returns: Vec<f64> = episodes.iter().map(|e| e.discounted_return).collect();
        write_histogram_csv(&h, &returns, bins)?;
        artifacts.push(h);
    }
    let mut m = RunManifest::new("eval", argv).with_env(&env);
    m.seeds.insert("master".into(), a.seed);
    m.artifacts = artifacts;
    write_json(a.out_dir.join("manifest.json"), &m)?;
    println!(
        "{}: mean {:.4} std {:.4} se {:.4} over {} episodes",
        report.policy, report.mean, report.std, report.std_error, report.n_episodes
    );
    Ok(())
}

pub fn cmd_variance_study(a: VarianceArgs, argv: &[String]) -> Result<()> {
    let env = a.env.resolve()?;
    let policy = a.policy.build(&env.config)?;
    let study = variance_study(&env.config, &env.models, policy.as_ref(), &a.counts, a.repeats, a.seed)?;
    std::fs::create_dir_all(&a.out_dir)?;
    let rows = a.out_dir.join("repeats.csv");
    let summary = a.out_dir.join("summary.csv");
    write_csv(&rows, &study.rows)?;
    write_csv(&summary, &study.summary)?;
    let mut m = RunManifest::new("variance-study", argv).with_env(&env);
    m.seeds.insert("study".into(), a.seed);
    m.artifacts = vec![rows, summary];
    write_json(a.out_dir.join("manifest.json"), &m)?;
    for s in &study.summary {
        println!(
            "{:>8} episodes: mean {:.4} spread {:.4}",
            s.n_episodes, s.mean_of_means, s.spread
        );
    }
    Ok(())
}

pub fn cmd_export_config(a: ExportArgs) -> Result<()> {
    let text = a.env.resolve_config()?.to_toml_string();
    match a.out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}
