//! Conjugate posteriors for both reward models.
//!
//! Bernoulli arms use a Beta prior. Linear-Gaussian arms use a
//! Normal-Inverse-Gamma prior `w | σ² ~ N(u, σ²V)`, `σ² ~ IG(α, β)`, kept in
//! precision form (`V⁻¹` plus its Cholesky factor) because the updates are
//! additive there. Every posterior supports a sequential update (one
//! observation) and a batch update (a whole history from the prior); the two
//! agree.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::bandit::{check_arm, check_context, ArmIndex, BanditInstance, Context};
use crate::error::{invalid, BanditError, Result};
use crate::history::History;

/// Hyperparameters shared by both prior families.
///
/// Bernoulli arms get `Beta(alpha, beta)`; linear-Gaussian arms get
/// `NIG(u = mean·1, V = scale·I, alpha, beta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorSpec {
    pub alpha: f64,
    pub beta: f64,
    pub mean: f64,
    pub scale: f64,
}

impl Default for PriorSpec {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            mean: 0.0,
            scale: 1.0,
        }
    }
}

impl PriorSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.alpha) || !positive(self.beta) || !positive(self.scale) {
            return Err(invalid(format!(
                "prior alpha, beta and scale must be positive, got {self:?}"
            )));
        }
        if !self.mean.is_finite() {
            return Err(invalid("prior mean must be finite"));
        }
        Ok(())
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive, got {v}")))
    }
}

fn check_binary(y: f64) -> Result<bool> {
    if y == 1.0 {
        Ok(true)
    } else if y == 0.0 {
        Ok(false)
    } else {
        Err(BanditError::NonBinaryReward(y))
    }
}

/// Per-arm `Beta(α, β)` posteriors, stored as the prior plus success and
/// failure counts.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaPosterior {
    prior_alpha: Vec<f64>,
    prior_beta: Vec<f64>,
    successes: Vec<u64>,
    failures: Vec<u64>,
}

impl BetaPosterior {
    pub fn new(alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        if alpha.len() != beta.len() {
            return Err(BanditError::LengthMismatch(format!(
                "{} alphas but {} betas",
                alpha.len(),
                beta.len()
            )));
        }
        if alpha.is_empty() {
            return Err(BanditError::TooFewArms(0));
        }
        for (&a, &b) in alpha.iter().zip(&beta) {
            check_positive("beta posterior alpha", a)?;
            check_positive("beta posterior beta", b)?;
        }
        let arms = alpha.len();
        Ok(Self {
            prior_alpha: alpha,
            prior_beta: beta,
            successes: vec![0; arms],
            failures: vec![0; arms],
        })
    }

    pub fn with_prior(arms: usize, alpha: f64, beta: f64) -> Result<Self> {
        Self::new(vec![alpha; arms], vec![beta; arms])
    }

    /// Beta(1, 1) on every arm.
    pub fn uniform(arms: usize) -> Self {
        Self::with_prior(arms, 1.0, 1.0).expect("uniform prior is valid")
    }

    pub fn arms(&self) -> usize {
        self.prior_alpha.len()
    }

    pub fn alpha(&self, arm: ArmIndex) -> f64 {
        self.prior_alpha[arm.0] + self.successes[arm.0] as f64
    }

    pub fn beta(&self, arm: ArmIndex) -> f64 {
        self.prior_beta[arm.0] + self.failures[arm.0] as f64
    }

    pub fn plays(&self, arm: ArmIndex) -> u64 {
        self.successes[arm.0] + self.failures[arm.0]
    }

    pub fn update(&mut self, arm: ArmIndex, reward: f64) -> Result<()> {
        check_arm(arm, self.arms())?;
        if check_binary(reward)? {
            self.successes[arm.0] += 1;
        } else {
            self.failures[arm.0] += 1;
        }
        Ok(())
    }

    /// Posterior after `history`, starting from `self` as the prior.
    pub fn batch_update(&self, history: &History) -> Result<Self> {
        let mut out = self.clone();
        for a in 0..self.arms() {
            let mut s = 0u64;
            let mut n = 0u64;
            for (ctx, y) in history.observations_of(ArmIndex(a)) {
                if ctx.is_some() {
                    return Err(BanditError::UnexpectedContext);
                }
                s += u64::from(check_binary(y)?);
                n += 1;
            }
            out.successes[a] += s;
            out.failures[a] += n - s;
        }
        if let Some(&bad) = history.arms().iter().find(|a| a.0 >= self.arms()) {
            return Err(BanditError::ArmOutOfRange {
                arm: bad.0,
                arms: self.arms(),
            });
        }
        Ok(out)
    }

    /// `m` joint draws; each arm's θ is `G_α / (G_α + G_β)` from two Gamma
    /// variates.
    pub fn sample<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> Result<PosteriorDraws> {
        check_sample_count(m)?;
        let arms = self.arms();
        let mut theta = vec![0.0; m * arms];
        for a in 0..arms {
            let (alpha, beta) = (self.alpha(ArmIndex(a)), self.beta(ArmIndex(a)));
            let ga = Gamma::new(alpha, 1.0).map_err(|e| invalid(e.to_string()))?;
            let gb = Gamma::new(beta, 1.0).map_err(|e| invalid(e.to_string()))?;
            for row in 0..m {
                let x: f64 = ga.sample(rng);
                let y: f64 = gb.sample(rng);
                let s = x + y;
                theta[row * arms + a] = if s > 0.0 {
                    x / s
                } else {
                    alpha / (alpha + beta)
                };
            }
        }
        Ok(PosteriorDraws::Bernoulli { arms, theta })
    }
}

/// One arm's Normal-Inverse-Gamma posterior.
#[derive(Debug, Clone)]
pub struct NigArm {
    mean: DVector<f64>,
    precision: DMatrix<f64>,
    factor: Cholesky<f64, Dyn>,
    alpha: f64,
    beta: f64,
}

impl PartialEq for NigArm {
    fn eq(&self, other: &Self) -> bool {
        self.mean == other.mean
            && self.precision == other.precision
            && self.alpha == other.alpha
            && self.beta == other.beta
    }
}

fn factorize(precision: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    let n = precision.nrows();
    if precision.ncols() != n {
        return Err(BanditError::NumericalFailure(
            "precision is not square".into(),
        ));
    }
    if precision.iter().any(|v| !v.is_finite()) {
        return Err(BanditError::NumericalFailure(
            "precision has non-finite entries".into(),
        ));
    }
    for i in 0..n {
        for j in 0..i {
            let (a, b) = (precision[(i, j)], precision[(j, i)]);
            if (a - b).abs() > 1e-12 * (1.0 + a.abs().max(b.abs())) {
                return Err(BanditError::NumericalFailure(format!(
                    "precision is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    Cholesky::new(precision.clone()).ok_or_else(|| {
        BanditError::NumericalFailure("precision matrix is not positive definite".into())
    })
}

impl NigArm {
    pub fn from_precision(
        mean: Vec<f64>,
        precision: DMatrix<f64>,
        alpha: f64,
        beta: f64,
    ) -> Result<Self> {
        check_positive("NIG alpha", alpha)?;
        check_positive("NIG beta", beta)?;
        if mean.is_empty() || precision.nrows() != mean.len() {
            return Err(BanditError::DimensionMismatch {
                expected: precision.nrows(),
                got: mean.len(),
            });
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(invalid("NIG mean must be finite"));
        }
        let factor = factorize(&precision)?;
        Ok(Self {
            mean: DVector::from_vec(mean),
            precision,
            factor,
            alpha,
            beta,
        })
    }

    /// Builds the arm from the covariance scale `V` instead of `V⁻¹`.
    pub fn new(mean: Vec<f64>, covariance: DMatrix<f64>, alpha: f64, beta: f64) -> Result<Self> {
        let precision = factorize(&covariance)?.inverse();
        let precision = 0.5 * (&precision + precision.transpose());
        Self::from_precision(mean, precision, alpha, beta)
    }

    /// `u = 0`, `V = I`, `α = β = 1`.
    pub fn standard(dim: usize) -> Self {
        Self::from_precision(vec![0.0; dim], DMatrix::identity(dim, dim), 1.0, 1.0)
            .expect("standard prior is valid")
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    /// `V`, materialized from the cached factor.
    pub fn covariance(&self) -> DMatrix<f64> {
        self.factor.inverse()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `xᵀ V x`.
    pub fn scale_at(&self, x: &[f64]) -> f64 {
        let x = DVector::from_column_slice(x);
        x.dot(&self.factor.solve(&x))
    }

    pub fn mean_at(&self, x: &[f64]) -> f64 {
        self.mean.iter().zip(x).map(|(u, x)| u * x).sum()
    }

    fn update(&mut self, x: &[f64], y: f64) -> Result<()> {
        if !y.is_finite() {
            return Err(BanditError::NumericalFailure(format!(
                "non-finite reward {y}"
            )));
        }
        let xv = DVector::from_column_slice(x);
        let quad = xv.dot(&self.factor.solve(&xv));
        let resid = y - xv.dot(&self.mean);
        let rhs = &self.precision * &self.mean + &xv * y;
        let precision = &self.precision + &xv * xv.transpose();
        let factor = factorize(&precision)?;
        self.mean = factor.solve(&rhs);
        self.precision = precision;
        self.factor = factor;
        self.alpha += 0.5;
        self.beta += resid * resid / (2.0 * (1.0 + quad));
        if !(self.beta > 0.0 && self.beta.is_finite()) || self.mean.iter().any(|v| !v.is_finite()) {
            return Err(BanditError::NumericalFailure(format!(
                "NIG update produced beta {} / non-finite mean",
                self.beta
            )));
        }
        Ok(())
    }

    fn batch_update<'a>(&self, obs: impl Iterator<Item = (&'a [f64], f64)>) -> Result<Self> {
        let d = self.dim();
        let mut precision = self.precision.clone();
        let prior_rhs = &self.precision * &self.mean;
        let mut rhs = prior_rhs.clone();
        let mut yy = 0.0;
        let mut n = 0usize;
        for (x, y) in obs {
            let xv = DVector::from_column_slice(x);
            precision += &xv * xv.transpose();
            rhs += &xv * y;
            yy += y * y;
            n += 1;
        }
        if n == 0 {
            return Ok(self.clone());
        }
        debug_assert_eq!(precision.nrows(), d);
        let factor = factorize(&precision)?;
        let mean = factor.solve(&rhs);
        let beta = self.beta + 0.5 * (yy + self.mean.dot(&prior_rhs) - mean.dot(&rhs));
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(BanditError::NumericalFailure(format!(
                "batch NIG beta {beta}"
            )));
        }
        Ok(Self {
            mean,
            precision,
            factor,
            alpha: self.alpha + 0.5 * n as f64,
            beta,
        })
    }
}

/// Per-arm NIG posteriors over a shared context dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct NigPosterior {
    arms: Vec<NigArm>,
    dim: usize,
}

impl NigPosterior {
    pub fn new(arms: Vec<NigArm>) -> Result<Self> {
        let dim = arms.first().ok_or(BanditError::TooFewArms(0))?.dim();
        if let Some(bad) = arms.iter().find(|a| a.dim() != dim) {
            return Err(BanditError::DimensionMismatch {
                expected: dim,
                got: bad.dim(),
            });
        }
        Ok(Self { arms, dim })
    }

    pub fn standard(arms: usize, dim: usize) -> Self {
        Self::new(vec![NigArm::standard(dim); arms]).expect("standard prior is valid")
    }

    pub fn with_prior(arms: usize, dim: usize, prior: &PriorSpec) -> Result<Self> {
        prior.validate()?;
        let arm = NigArm::from_precision(
            vec![prior.mean; dim],
            DMatrix::identity(dim, dim) / prior.scale,
            prior.alpha,
            prior.beta,
        )?;
        Self::new(vec![arm; arms])
    }

    pub fn arms(&self) -> usize {
        self.arms.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn arm(&self, arm: ArmIndex) -> &NigArm {
        &self.arms[arm.0]
    }

    pub fn update(&mut self, arm: ArmIndex, context: &Context, reward: f64) -> Result<()> {
        check_arm(arm, self.arms())?;
        check_context(Some(self.dim), Some(context))?;
        self.arms[arm.0].update(context.as_slice(), reward)
    }

    pub fn batch_update(&self, history: &History) -> Result<Self> {
        if let Some(&bad) = history.arms().iter().find(|a| a.0 >= self.arms()) {
            return Err(BanditError::ArmOutOfRange {
                arm: bad.0,
                arms: self.arms(),
            });
        }
        let mut arms = Vec::with_capacity(self.arms());
        for (a, prior) in self.arms.iter().enumerate() {
            let mut obs = Vec::new();
            for (ctx, y) in history.observations_of(ArmIndex(a)) {
                check_context(Some(self.dim), ctx)?;
                obs.push((ctx.expect("checked").as_slice(), y));
            }
            arms.push(prior.batch_update(obs.into_iter())?);
        }
        Ok(Self {
            arms,
            dim: self.dim,
        })
    }

    /// `m` joint draws: per arm `σ² = β / G` with `G ~ Gamma(α, 1)`, then
    /// `w = u + σ L⁻ᵀ z` where `L Lᵀ = V⁻¹`, so `Cov(w) = σ² V`.
    pub fn sample<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> Result<PosteriorDraws> {
        check_sample_count(m)?;
        let (arms, d) = (self.arms(), self.dim);
        let mut weights = vec![0.0; m * arms * d];
        let mut noise_var = vec![0.0; m * arms];
        let mut z = vec![0.0; d];
        for (a, arm) in self.arms.iter().enumerate() {
            let gamma = Gamma::new(arm.alpha, 1.0).map_err(|e| invalid(e.to_string()))?;
            let l_inv = arm
                .factor
                .l()
                .solve_lower_triangular(&DMatrix::identity(d, d))
                .ok_or_else(|| BanditError::NumericalFailure("singular precision factor".into()))?;
            for row in 0..m {
                let g: f64 = gamma.sample(rng);
                let var = arm.beta / g;
                let sd = var.sqrt();
                for zi in z.iter_mut() {
                    *zi = StandardNormal.sample(rng);
                }
                let out = &mut weights[(row * arms + a) * d..(row * arms + a + 1) * d];
                for i in 0..d {
                    let mut acc = 0.0;
                    for (j, zj) in z.iter().enumerate().skip(i) {
                        acc += l_inv[(j, i)] * zj;
                    }
                    out[i] = arm.mean[i] + sd * acc;
                }
                noise_var[row * arms + a] = var;
            }
        }
        Ok(PosteriorDraws::LinearGaussian {
            arms,
            dim: d,
            weights,
            noise_var,
        })
    }
}

fn check_sample_count(m: usize) -> Result<()> {
    if m >= 1 {
        Ok(())
    } else {
        Err(invalid("need at least one posterior sample"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Posterior {
    Beta(BetaPosterior),
    Nig(NigPosterior),
}

impl Posterior {
    /// The conjugate prior matching `instance`'s reward model.
    pub fn prior_for(instance: &BanditInstance, prior: &PriorSpec) -> Result<Self> {
        prior.validate()?;
        Ok(match instance.context_dim() {
            None => Self::Beta(BetaPosterior::with_prior(
                instance.arms(),
                prior.alpha,
                prior.beta,
            )?),
            Some(d) => Self::Nig(NigPosterior::with_prior(instance.arms(), d, prior)?),
        })
    }

    pub fn arms(&self) -> usize {
        match self {
            Self::Beta(p) => p.arms(),
            Self::Nig(p) => p.arms(),
        }
    }

    pub fn context_dim(&self) -> Option<usize> {
        match self {
            Self::Beta(_) => None,
            Self::Nig(p) => Some(p.dim()),
        }
    }

    pub fn update(&mut self, arm: ArmIndex, context: Option<&Context>, reward: f64) -> Result<()> {
        match (self, context) {
            (Self::Beta(p), None) => p.update(arm, reward),
            (Self::Beta(_), Some(_)) => Err(BanditError::UnexpectedContext),
            (Self::Nig(p), Some(x)) => p.update(arm, x, reward),
            (Self::Nig(_), None) => Err(BanditError::MissingContext),
        }
    }

    pub fn batch_update(&self, history: &History) -> Result<Self> {
        Ok(match self {
            Self::Beta(p) => Self::Beta(p.batch_update(history)?),
            Self::Nig(p) => Self::Nig(p.batch_update(history)?),
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> Result<PosteriorDraws> {
        match self {
            Self::Beta(p) => p.sample(m, rng),
            Self::Nig(p) => p.sample(m, rng),
        }
    }
}

/// One joint parameter draw for all arms.
#[derive(Debug, Clone, PartialEq)]
pub enum ParameterSample {
    Bernoulli(Vec<f64>),
    LinearGaussian {
        weights: Vec<Vec<f64>>,
        noise_var: Vec<f64>,
    },
}

/// `M` joint parameter draws stored row-major (draw, arm[, dim]).
#[derive(Debug, Clone, PartialEq)]
pub enum PosteriorDraws {
    Bernoulli {
        arms: usize,
        theta: Vec<f64>,
    },
    LinearGaussian {
        arms: usize,
        dim: usize,
        weights: Vec<f64>,
        noise_var: Vec<f64>,
    },
}

impl PosteriorDraws {
    pub fn len(&self) -> usize {
        match self {
            Self::Bernoulli { arms, theta } => theta.len() / arms,
            Self::LinearGaussian {
                arms, noise_var, ..
            } => noise_var.len() / arms,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn arms(&self) -> usize {
        match self {
            Self::Bernoulli { arms, .. } | Self::LinearGaussian { arms, .. } => *arms,
        }
    }

    pub fn context_dim(&self) -> Option<usize> {
        match self {
            Self::Bernoulli { .. } => None,
            Self::LinearGaussian { dim, .. } => Some(*dim),
        }
    }

    pub fn sample(&self, m: usize) -> ParameterSample {
        match self {
            Self::Bernoulli { arms, theta } => {
                ParameterSample::Bernoulli(theta[m * arms..(m + 1) * arms].to_vec())
            }
            Self::LinearGaussian {
                arms,
                dim,
                weights,
                noise_var,
            } => ParameterSample::LinearGaussian {
                weights: weights[m * arms * dim..(m + 1) * arms * dim]
                    .chunks(*dim)
                    .map(<[f64]>::to_vec)
                    .collect(),
                noise_var: noise_var[m * arms..(m + 1) * arms].to_vec(),
            },
        }
    }

    /// Writes μ_a(θ⁽ᵐ⁾) at `context` for every arm into `out`. The context
    /// must already have been checked with [`PosteriorDraws::check_context`].
    pub fn expected_rewards_into(&self, m: usize, context: Option<&Context>, out: &mut [f64]) {
        match self {
            Self::Bernoulli { arms, theta } => {
                out.copy_from_slice(&theta[m * arms..(m + 1) * arms]);
            }
            Self::LinearGaussian {
                arms, dim, weights, ..
            } => {
                let x = context.expect("context checked").as_slice();
                let row = &weights[m * arms * dim..(m + 1) * arms * dim];
                for (o, w) in out.iter_mut().zip(row.chunks_exact(*dim)) {
                    *o = w.iter().zip(x).map(|(w, x)| w * x).sum();
                }
            }
        }
    }

    pub fn check_context(&self, context: Option<&Context>) -> Result<()> {
        check_context(self.context_dim(), context)
    }
}
