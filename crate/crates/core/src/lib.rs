//! Multi-armed bandits with the double-sampling policy.
//!
//! The crate is organized bottom-up:
//!
//! - [`bandit`], [`history`], [`rng`]: ground-truth environments, interaction
//!   records and splittable seeded streams.
//! - [`conjugate`]: Beta and Normal-Inverse-Gamma posteriors with sequential
//!   and batch updates and joint posterior sampling.
//! - [`numerics`]: normal, truncated-normal, Beta and Student-t functions.
//! - [`policy`]: double sampling, Thompson sampling and Bayes-UCB.
//! - [`bench`]: episodes, regret aggregation, KL difficulty index and
//!   parameter sweeps.

pub mod bandit;
pub mod bench;
pub mod conjugate;
pub mod error;
pub mod history;
pub mod numerics;
pub mod policy;
pub mod rng;

pub use bandit::{ArmIndex, BanditInstance, BernoulliBandit, Context, LinearGaussianBandit};
pub use conjugate::{BetaPosterior, NigArm, NigPosterior, Posterior, PosteriorDraws, PriorSpec};
pub use error::{BanditError, Result};
pub use history::History;
pub use policy::{OptimalityEstimate, PolicyConfig, PolicyDecision};
pub use rng::RngStream;
