//! The transition models an environment family runs on.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::envs::config::Family;
use crate::error::{Error, Result};
use crate::models::{generate_component, load_model, save_model, ComponentKind, TransitionModel};
use crate::rng::derive_seed;

/// Shared, read-only transition models.
///
/// Cloning is cheap, so one set can back any number of environments.
#[derive(Debug, Clone)]
pub enum ModelSet {
    Structural(Arc<TransitionModel>),
    Wind {
        upper: Arc<TransitionModel>,
        middle: Arc<TransitionModel>,
        mudline: Arc<TransitionModel>,
    },
}

impl ModelSet {
    /// File names inside a model directory.
    pub fn file_names(family: Family) -> &'static [&'static str] {
        if family.is_struct() {
            &["struct.impm"]
        } else {
            &["owf_upper.impm", "owf_middle.impm", "owf_mudline.impm"]
        }
    }

    /// Generate the family's models by Monte Carlo simulation.
    ///
    /// Wind farm components use independent seeds derived from `seed`.
    pub fn generate(family: Family, horizon: usize, n_samples: usize, seed: u64) -> Result<Self> {
        if family.is_struct() {
            let m = generate_component(ComponentKind::Structural, horizon, n_samples, seed)?;
            Ok(ModelSet::Structural(Arc::new(m)))
        } else {
            let gen = |kind, i| generate_component(kind, horizon, n_samples, derive_seed(seed, i)).map(Arc::new);
            Ok(ModelSet::Wind {
                upper: gen(ComponentKind::WindUpper, 0)?,
                middle: gen(ComponentKind::WindMiddle, 1)?,
                mudline: gen(ComponentKind::WindMudline, 2)?,
            })
        }
    }

    pub fn family_is_struct(&self) -> bool {
        matches!(self, ModelSet::Structural(_))
    }

    pub fn models(&self) -> Vec<&TransitionModel> {
        match self {
            ModelSet::Structural(m) => vec![m],
            ModelSet::Wind { upper, middle, mudline } => vec![upper, middle, mudline],
        }
    }

    /// Model of simulated component `c` (wind components cycle upper, middle, mudline).
    pub fn for_component(&self, c: usize) -> &TransitionModel {
        match self {
            ModelSet::Structural(m) => m,
            ModelSet::Wind { upper, middle, mudline } => match c % 3 {
                0 => upper,
                1 => middle,
                _ => mudline,
            },
        }
    }

    /// Smallest step coverage over all models.
    pub fn tau_max(&self) -> usize {
        self.models().iter().map(|m| m.tau_max()).min().unwrap_or(0)
    }

    /// Write every model to `dir`, returning the paths.
    pub fn save_dir(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let family = if self.family_is_struct() {
            Family::StructUc
        } else {
            Family::Owf
        };
        let mut out = Vec::new();
        for (name, m) in Self::file_names(family).iter().zip(self.models()) {
            let p = dir.join(name);
            save_model(m, &p)?;
            out.push(p);
        }
        Ok(out)
    }

    /// Load the family's models from `dir`.
    pub fn load_dir(family: Family, dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let load = |name: &str| -> Result<Arc<TransitionModel>> {
            let p = dir.join(name);
            if !p.exists() {
                return Err(Error::Config(format!("model file {} not found", p.display())));
            }
            load_model(&p).map(Arc::new)
        };
        let names = Self::file_names(family);
        if family.is_struct() {
            Ok(ModelSet::Structural(load(names[0])?))
        } else {
            Ok(ModelSet::Wind {
                upper: load(names[0])?,
                middle: load(names[1])?,
                mudline: load(names[2])?,
            })
        }
    }

    /// Check that the models fit a family and horizon.
    pub fn check(&self, family: Family, horizon: usize) -> Result<()> {
        if self.family_is_struct() != family.is_struct() {
            return Err(Error::Config(format!(
                "models do not belong to family {}",
                family.name()
            )));
        }
        let expected: Vec<ComponentKind> = if family.is_struct() {
            vec![ComponentKind::Structural]
        } else {
            vec![
                ComponentKind::WindUpper,
                ComponentKind::WindMiddle,
                ComponentKind::WindMudline,
            ]
        };
        for (m, kind) in self.models().iter().zip(expected) {
            if let Some(k) = m.metadata.component {
                if k != kind {
                    return Err(Error::Config(format!(
                        "expected a {} model, found {}",
                        kind.name(),
                        k.name()
                    )));
                }
            }
            if m.n_bins() != family.n_bins() {
                return Err(Error::DimensionMismatch(format!(
                    "{} model has {} bins, family {} uses {}",
                    kind.name(),
                    m.n_bins(),
                    family.name(),
                    family.n_bins()
                )));
            }
            if m.tau_max() < horizon {
                return Err(Error::Config(format!(
                    "{} model covers {} steps, horizon is {horizon}",
                    kind.name(),
                    m.tau_max()
                )));
            }
            if kind != ComponentKind::WindMudline && m.inspection().is_none() {
                return Err(Error::Config(format!(
                    "{} model lacks an inspection model",
                    kind.name()
                )));
            }
        }
        Ok(())
    }
}
