//! Arm-selection policies.
//!
//! Double sampling draws `M` joint parameter samples, estimates each arm's
//! probability of being optimal (`p̂_a`) and its indicator spread (`σ̂_a`),
//! turns the leader's margin into a false-alarm probability `p_FA`, and then
//! plays the mode of `N ∝ ln(1/p_FA)` candidates drawn from `Categorical(p̂)`.
//! With `N = 1` it reduces to Thompson sampling over the Monte-Carlo measure.

use rand::Rng;

use crate::bandit::{check_context, ArmIndex, Context};
use crate::conjugate::{Posterior, PosteriorDraws};
use crate::error::{invalid, BanditError, Result};
use crate::numerics::{
    beta_quantile, student_t_quantile, truncated_normal_sf, TruncatedGaussianSpec,
};

/// Smallest quantile level Bayes-UCB evaluates; `t = 1` would otherwise ask
/// for the 0-quantile.
pub const BAYES_UCB_MIN_LEVEL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyConfig {
    /// Monte-Carlo posterior draws per decision (`M`).
    pub mc_samples: usize,
    /// Proportionality constant `c` in `N = ⌈c · ln(1/p_FA)⌉`.
    pub n_scale: f64,
    /// Lower clamp on `p_FA` before taking the log.
    pub p_fa_floor: f64,
    /// Upper clamp on `N`.
    pub n_max: usize,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self::with_samples(1000)
    }
}

impl PolicyConfig {
    /// `c = 1`, floor `1/M` and cap `M`.
    pub fn with_samples(mc_samples: usize) -> Self {
        let m = mc_samples.max(1);
        Self {
            mc_samples,
            n_scale: 1.0,
            p_fa_floor: 1.0 / m as f64,
            n_max: m,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mc_samples < 1 {
            return Err(invalid("mc_samples must be >= 1"));
        }
        if !(self.n_scale > 0.0 && self.n_scale.is_finite()) {
            return Err(invalid(format!(
                "n_scale must be positive, got {}",
                self.n_scale
            )));
        }
        if !(self.p_fa_floor > 0.0 && self.p_fa_floor < 1.0) {
            return Err(invalid(format!(
                "p_fa_floor must be in (0, 1), got {}",
                self.p_fa_floor
            )));
        }
        if self.n_max < 1 {
            return Err(invalid("n_max must be >= 1"));
        }
        Ok(())
    }
}

/// Monte-Carlo estimate of each arm's probability of being optimal.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalityEstimate {
    pub p_hat: Vec<f64>,
    pub sigma_hat: Vec<f64>,
    /// Lowest-index arm attaining `best_prob`.
    pub best_arm: ArmIndex,
    pub best_prob: f64,
    pub sample_count: usize,
    /// Number of draws each arm won.
    pub wins: Vec<usize>,
}

impl OptimalityEstimate {
    pub fn from_wins(wins: Vec<usize>) -> Result<Self> {
        let m: usize = wins.iter().sum();
        if m == 0 {
            return Err(invalid("optimality estimate needs at least one sample"));
        }
        let mf = m as f64;
        let p_hat: Vec<f64> = wins.iter().map(|&c| c as f64 / mf).collect();
        // (1/M) Σ_m (1[winner = a] − p̂)², grouped by indicator value
        let sigma_hat = wins
            .iter()
            .zip(&p_hat)
            .map(|(&c, &p)| {
                let var = (c as f64 * (1.0 - p).powi(2) + (m - c) as f64 * p * p) / mf;
                var.sqrt()
            })
            .collect();
        let mut best = 0;
        for (a, &c) in wins.iter().enumerate() {
            if c > wins[best] {
                best = a;
            }
        }
        Ok(Self {
            best_prob: p_hat[best],
            p_hat,
            sigma_hat,
            best_arm: ArmIndex(best),
            sample_count: m,
            wins,
        })
    }

    pub fn arms(&self) -> usize {
        self.p_hat.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FalseAlarm {
    /// `p_FA⁽ᵃ⁾` for every arm, including the leader.
    pub per_arm: Vec<f64>,
    /// Mean over the arms other than the leader.
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyDecision {
    pub chosen: ArmIndex,
    pub n_candidates: usize,
    pub p_fa: f64,
    pub per_arm_p_fa: Vec<f64>,
    pub estimate: OptimalityEstimate,
}

/// Index of the maximum; ties are resolved uniformly at random by reservoir
/// sampling, so no randomness is consumed unless a tie occurs.
pub fn argmax_random_tie<R: Rng + ?Sized>(values: &[f64], rng: &mut R) -> usize {
    let mut best = 0;
    let mut ties = 1u32;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
            ties = 1;
        } else if v == values[best] {
            ties += 1;
            if rng.random_range(0..ties) == 0 {
                best = i;
            }
        }
    }
    best
}

fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub fn estimate_optimality<R: Rng + ?Sized>(
    draws: &PosteriorDraws,
    context: Option<&Context>,
    rng: &mut R,
) -> Result<OptimalityEstimate> {
    draws.check_context(context)?;
    if draws.is_empty() {
        return Err(invalid("optimality estimate needs at least one sample"));
    }
    let arms = draws.arms();
    let mut wins = vec![0usize; arms];
    let mut mu = vec![0.0; arms];
    for m in 0..draws.len() {
        draws.expected_rewards_into(m, context, &mut mu);
        wins[argmax_random_tie(&mu, rng)] += 1;
    }
    OptimalityEstimate::from_wins(wins)
}

/// `p_FA⁽ᵃ⁾ = 1 − F(p̂*)` with `F` the CDF of `N(p̂_a, σ̂_a²)` truncated to
/// [0, 1]. A zero `σ̂_a` is a point mass at `p̂_a`: 0 below the leader, 1
/// otherwise.
pub fn false_alarm_probs(estimate: &OptimalityEstimate) -> Result<FalseAlarm> {
    let arms = estimate.arms();
    if arms < 2 {
        return Err(BanditError::TooFewArms(arms));
    }
    let top = estimate.best_prob;
    let per_arm = estimate
        .p_hat
        .iter()
        .zip(&estimate.sigma_hat)
        .map(|(&p, &s)| {
            if s > 0.0 {
                truncated_normal_sf(top, &TruncatedGaussianSpec::unit(p, s)?)
            } else if p < top {
                Ok(0.0)
            } else {
                Ok(1.0)
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    let leader = estimate.best_arm.0;
    let mean = per_arm
        .iter()
        .enumerate()
        .filter(|&(a, _)| a != leader)
        .map(|(_, &v)| v)
        .sum::<f64>()
        / (arms - 1) as f64;
    Ok(FalseAlarm { per_arm, mean })
}

/// `N = clamp(⌈c · ln(1 / max(p_FA, floor))⌉, 1, n_max)`.
pub fn num_candidates(p_fa: f64, cfg: &PolicyConfig) -> usize {
    let p = if p_fa.is_nan() {
        1.0
    } else {
        p_fa.clamp(cfg.p_fa_floor, 1.0)
    };
    let raw = (cfg.n_scale * (1.0 / p).ln()).ceil();
    if raw >= 1.0 {
        (raw as usize).min(cfg.n_max).max(1)
    } else {
        1
    }
}

fn mode_of_candidates<R: Rng + ?Sized>(
    estimate: &OptimalityEstimate,
    n: usize,
    rng: &mut R,
) -> ArmIndex {
    let m = estimate.sample_count;
    let mut tally = vec![0.0; estimate.arms()];
    for _ in 0..n {
        let mut u = rng.random_range(0..m);
        let mut arm = 0;
        while u >= estimate.wins[arm] {
            u -= estimate.wins[arm];
            arm += 1;
        }
        tally[arm] += 1.0;
    }
    ArmIndex(argmax_random_tie(&tally, rng))
}

/// Second half of double sampling, given the step's posterior draws.
pub fn double_sampling_from_draws<R: Rng + ?Sized>(
    draws: &PosteriorDraws,
    context: Option<&Context>,
    cfg: &PolicyConfig,
    rng: &mut R,
) -> Result<PolicyDecision> {
    let estimate = estimate_optimality(draws, context, rng)?;
    let fa = false_alarm_probs(&estimate)?;
    let n_candidates = num_candidates(fa.mean, cfg);
    let chosen = mode_of_candidates(&estimate, n_candidates, rng);
    Ok(PolicyDecision {
        chosen,
        n_candidates,
        p_fa: fa.mean,
        per_arm_p_fa: fa.per_arm,
        estimate,
    })
}

pub fn double_sampling_select<R: Rng + ?Sized>(
    posterior: &Posterior,
    context: Option<&Context>,
    cfg: &PolicyConfig,
    rng: &mut R,
) -> Result<PolicyDecision> {
    cfg.validate()?;
    check_context(posterior.context_dim(), context)?;
    let draws = posterior.sample(cfg.mc_samples, rng)?;
    double_sampling_from_draws(&draws, context, cfg, rng)
}

/// One posterior draw, then the greedy arm for it.
pub fn thompson_select<R: Rng + ?Sized>(
    posterior: &Posterior,
    context: Option<&Context>,
    rng: &mut R,
) -> Result<ArmIndex> {
    check_context(posterior.context_dim(), context)?;
    let draws = posterior.sample(1, rng)?;
    let mut mu = vec![0.0; draws.arms()];
    draws.expected_rewards_into(0, context, &mut mu);
    Ok(ArmIndex(argmax_random_tie(&mu, rng)))
}

/// Posterior `(1 − 1/t)`-quantile of each arm's expected reward.
pub fn bayes_ucb_indices(
    posterior: &Posterior,
    t: usize,
    context: Option<&Context>,
) -> Result<Vec<f64>> {
    if t < 1 {
        return Err(invalid("Bayes-UCB step must be >= 1"));
    }
    check_context(posterior.context_dim(), context)?;
    let q = (1.0 - 1.0 / t as f64).max(BAYES_UCB_MIN_LEVEL);
    match posterior {
        Posterior::Beta(p) => (0..p.arms())
            .map(|a| beta_quantile(q, p.alpha(ArmIndex(a)), p.beta(ArmIndex(a))))
            .collect(),
        Posterior::Nig(p) => {
            let x = context.expect("checked").as_slice();
            (0..p.arms())
                .map(|a| {
                    let arm = p.arm(ArmIndex(a));
                    let location = arm.mean_at(x);
                    let scale = (arm.beta() / arm.alpha() * arm.scale_at(x)).sqrt();
                    if scale > 0.0 {
                        student_t_quantile(q, 2.0 * arm.alpha(), location, scale)
                    } else {
                        Ok(location)
                    }
                })
                .collect()
        }
    }
}

/// Deterministic; ties go to the lowest index.
pub fn bayes_ucb_select(
    posterior: &Posterior,
    t: usize,
    context: Option<&Context>,
) -> Result<ArmIndex> {
    bayes_ucb_indices(posterior, t, context).map(|idx| ArmIndex(argmax_lowest(&idx)))
}
