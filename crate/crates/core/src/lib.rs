//! Belief-state simulation of deteriorating engineering systems under
//! inspection and maintenance.
//!
//! Components accumulate fatigue damage, tracked as a discrete belief over
//! crack-size bins. Agents choose per step whether to do nothing, inspect or
//! repair their component; the environment charges action costs and the
//! failure risk of the system. The crate provides:
//!
//! * [`models`]: crack growth Monte Carlo, transition tables and the model file format
//! * [`belief`]: Bayesian propagation and updates, including correlated components
//! * [`reliability`]: k-out-of-n and wind farm failure probabilities
//! * [`envs`]: the multi-agent environments
//! * [`heuristics`] and [`harness`]: expert policies, grid search and evaluation
//!
//! ```
//! use imp_core::envs::{Action, EnvConfig, ImpEnv, ModelSet, Family};
//!
//! let models = ModelSet::generate(Family::StructUc, 30, 100_000, 7).unwrap();
//! let mut env = ImpEnv::new(EnvConfig::struct_uc(3, 2), models).unwrap();
//! let obs = env.reset(42).unwrap();
//! assert_eq!(obs[0].len(), 31);
//! let out = env.step(&[Action::Inspect, Action::DoNothing, Action::DoNothing]).unwrap();
//! assert!(out.reward < 0.0);
//! ```

pub mod belief;
pub mod cli;
pub mod envs;
pub mod error;
pub mod harness;
pub mod heuristics;
pub mod models;
pub mod reliability;
pub mod rng;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/models.md")]
    mod models {}
    #[doc = include_str!("../../../book/src/beliefs.md")]
    mod beliefs {}
    #[doc = include_str!("../../../book/src/reliability.md")]
    mod reliability {}
    #[doc = include_str!("../../../book/src/environments.md")]
    mod environments {}
    #[doc = include_str!("../../../book/src/heuristics.md")]
    mod heuristics {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
}
