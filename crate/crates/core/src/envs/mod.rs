//! Decentralised inspection and maintenance environments.
//!
//! Three families share one step loop:
//!
//! | family      | agents         | risk unit    | observation size |
//! |-------------|----------------|--------------|------------------|
//! | `struct_uc` | one per component | k-out-of-n system | 31 |
//! | `struct_c`  | one per component | k-out-of-n system | 111 |
//! | `owf`       | two per turbine   | each turbine      | 61 |

pub mod config;
pub mod env;
pub mod models;

pub use config::{ActionCosts, ConfigFile, CorrelatedRisk, EnvConfig, Family, ObsFlags, RewardTable, RiskMode};
pub use env::{Action, ImpEnv, StepInfo, StepResult};
pub use models::ModelSet;
