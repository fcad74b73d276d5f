use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::bandit::{ArmIndex, BanditInstance};
use crate::conjugate::{Posterior, PriorSpec};
use crate::error::{invalid, BanditError, Result};
use crate::history::History;
use crate::policy::{bayes_ucb_select, double_sampling_select, thompson_select, PolicyConfig};
use crate::rng::{BanditRng, RngStream};

/// Seed-derivation tag for environment noise (contexts and rewards).
pub const ENV_TAG: u64 = 0x0045_4e56;
/// Seed-derivation tag for the policy's own randomness.
pub const POLICY_TAG: u64 = 0x504f_4c49;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    DoubleSampling,
    Thompson,
    BayesUcb,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Self::DoubleSampling, Self::Thompson, Self::BayesUcb];

    pub fn name(self) -> &'static str {
        match self {
            Self::DoubleSampling => "double-sampling",
            Self::Thompson => "thompson",
            Self::BayesUcb => "bayes-ucb",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = BanditError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "double-sampling" | "ds" => Ok(Self::DoubleSampling),
            "thompson" | "ts" => Ok(Self::Thompson),
            "bayes-ucb" | "bucb" => Ok(Self::BayesUcb),
            other => Err(invalid(format!(
                "unknown algorithm `{other}` (expected double-sampling, thompson or bayes-ucb)"
            ))),
        }
    }
}

/// How each step's regret increment is measured.
///
/// `Pseudo` uses `μ*_t − μ_{a_t}(x_t)`; `Observed` uses `μ*_t − y_t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RegretMode {
    #[default]
    Pseudo,
    Observed,
}

impl RegretMode {
    pub fn name(self) -> &'static str {
        match self {
            Self::Pseudo => "pseudo",
            Self::Observed => "observed",
        }
    }
}

impl fmt::Display for RegretMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RegretMode {
    type Err = BanditError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pseudo" => Ok(Self::Pseudo),
            "observed" => Ok(Self::Observed),
            other => Err(invalid(format!(
                "unknown regret mode `{other}` (expected pseudo or observed)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub instance: BanditInstance,
    pub algorithm: Algorithm,
    pub horizon: usize,
    pub realizations: usize,
    pub seed: u64,
    pub policy: PolicyConfig,
    pub regret_mode: RegretMode,
    pub prior: PriorSpec,
}

impl ExperimentConfig {
    pub const DEFAULT_HORIZON: usize = 1500;
    pub const DEFAULT_REALIZATIONS: usize = 500;

    pub fn new(instance: BanditInstance, algorithm: Algorithm) -> Self {
        Self {
            instance,
            algorithm,
            horizon: Self::DEFAULT_HORIZON,
            realizations: Self::DEFAULT_REALIZATIONS,
            seed: 0,
            policy: PolicyConfig::default(),
            regret_mode: RegretMode::Pseudo,
            prior: PriorSpec::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(invalid("horizon must be >= 1"));
        }
        if self.realizations < 1 {
            return Err(invalid("realizations must be >= 1"));
        }
        self.policy.validate()?;
        self.prior.validate()
    }

    pub fn with_algorithm(&self, algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            ..self.clone()
        }
    }

    pub fn with_instance(&self, instance: BanditInstance) -> Self {
        Self {
            instance,
            ..self.clone()
        }
    }
}

/// Per-step double-sampling internals, row-major `(step, arm)` for the
/// per-arm series.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DoubleSamplingTrace {
    pub arms: usize,
    pub n_candidates: Vec<usize>,
    pub p_fa: Vec<f64>,
    pub p_hat: Vec<f64>,
    pub sigma_hat: Vec<f64>,
}

impl DoubleSamplingTrace {
    pub fn p_hat_at(&self, step: usize) -> &[f64] {
        &self.p_hat[step * self.arms..(step + 1) * self.arms]
    }

    pub fn sigma_hat_at(&self, step: usize) -> &[f64] {
        &self.sigma_hat[step * self.arms..(step + 1) * self.arms]
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RegretTrace {
    pub optimal_mean: Vec<f64>,
    pub arms: Vec<ArmIndex>,
    pub rewards: Vec<f64>,
    pub increments: Vec<f64>,
    pub cumulative: Vec<f64>,
    pub diagnostics: Option<DoubleSamplingTrace>,
}

impl RegretTrace {
    pub fn len(&self) -> usize {
        self.cumulative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cumulative.is_empty()
    }

    /// Cumulative regret after `t` steps (1-based).
    pub fn regret_at(&self, t: usize) -> f64 {
        self.cumulative[t - 1]
    }
}

/// One realization of a bandit run, advanced a step at a time.
pub struct Episode<'a> {
    config: &'a ExperimentConfig,
    stream: u64,
    posterior: Posterior,
    history: History,
    env: RngStream,
    policy_rng: BanditRng,
    trace: RegretTrace,
}

impl<'a> Episode<'a> {
    pub fn new(config: &'a ExperimentConfig, stream_id: u64) -> Result<Self> {
        config.validate()?;
        let root = RngStream::new(config.seed, stream_id);
        let trace = RegretTrace {
            diagnostics: (config.algorithm == Algorithm::DoubleSampling).then(|| {
                DoubleSamplingTrace {
                    arms: config.instance.arms(),
                    ..Default::default()
                }
            }),
            ..Default::default()
        };
        Ok(Self {
            config,
            stream: stream_id,
            posterior: Posterior::prior_for(&config.instance, &config.prior)?,
            history: History::new(),
            env: root.derive(ENV_TAG),
            policy_rng: root.derive(POLICY_TAG).rng(),
            trace,
        })
    }

    pub fn posterior(&self) -> &Posterior {
        &self.posterior
    }

    pub fn history(&self) -> &History {
        &self.history
    }

    pub fn trace(&self) -> &RegretTrace {
        &self.trace
    }

    pub fn steps_taken(&self) -> usize {
        self.history.len()
    }

    /// Plays one step. Environment draws for step `t` come from a stream
    /// keyed by `(seed, ENV, t)`, so every algorithm sees the same context and
    /// reward noise at the same step.
    pub fn step(&mut self) -> Result<ArmIndex> {
        let t = self.history.len() + 1;
        self.step_inner(t).map_err(|e| BanditError::EpisodeFailed {
            stream: self.stream,
            step: t,
            source: Box::new(e),
        })
    }

    fn step_inner(&mut self, t: usize) -> Result<ArmIndex> {
        let instance = &self.config.instance;
        let mut env = self.env.derive(t as u64).rng();
        let context = instance.generate_context(&mut env);
        let ctx = context.as_ref();

        let arm = match self.config.algorithm {
            Algorithm::DoubleSampling => {
                let d = double_sampling_select(
                    &self.posterior,
                    ctx,
                    &self.config.policy,
                    &mut self.policy_rng,
                )?;
                let diag = self
                    .trace
                    .diagnostics
                    .as_mut()
                    .expect("double sampling keeps diagnostics");
                diag.n_candidates.push(d.n_candidates);
                diag.p_fa.push(d.p_fa);
                diag.p_hat.extend_from_slice(&d.estimate.p_hat);
                diag.sigma_hat.extend_from_slice(&d.estimate.sigma_hat);
                d.chosen
            }
            Algorithm::Thompson => thompson_select(&self.posterior, ctx, &mut self.policy_rng)?,
            Algorithm::BayesUcb => bayes_ucb_select(&self.posterior, t, ctx)?,
        };

        let reward = instance.draw_reward(arm, ctx, &mut env)?;
        self.posterior.update(arm, ctx, reward)?;

        let optimal = instance.optimal_reward(ctx)?;
        let increment = match self.config.regret_mode {
            RegretMode::Pseudo => optimal - instance.expected_reward(arm, ctx)?,
            RegretMode::Observed => optimal - reward,
        };
        let previous = self.trace.cumulative.last().copied().unwrap_or(0.0);
        self.trace.optimal_mean.push(optimal);
        self.trace.arms.push(arm);
        self.trace.rewards.push(reward);
        self.trace.increments.push(increment);
        self.trace.cumulative.push(previous + increment);
        self.history.record(arm, context, reward)?;
        Ok(arm)
    }

    pub fn run(mut self) -> Result<RegretTrace> {
        while self.history.len() < self.config.horizon {
            self.step()?;
        }
        Ok(self.trace)
    }
}

pub fn run_episode(config: &ExperimentConfig, stream_id: u64) -> Result<RegretTrace> {
    Episode::new(config, stream_id)?.run()
}

/// All realizations `0..R`, in parallel on the current rayon pool; the
/// output order is the realization order.
pub fn run_realizations(config: &ExperimentConfig) -> Result<Vec<RegretTrace>> {
    config.validate()?;
    (0..config.realizations as u64)
        .into_par_iter()
        .map(|r| run_episode(config, r))
        .collect()
}
