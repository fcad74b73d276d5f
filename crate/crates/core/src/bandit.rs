//! Ground-truth bandit environments.
//!
//! Two reward models are supported: Bernoulli arms with success probability
//! `theta[a]`, and contextual linear-Gaussian arms whose reward at context `x`
//! is `N(x·w_a, sigma_a²)`.

use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, BanditError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ArmIndex(pub usize);

impl ArmIndex {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for ArmIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub(crate) fn check_arm(arm: ArmIndex, arms: usize) -> Result<()> {
    if arm.0 < arms {
        Ok(())
    } else {
        Err(BanditError::ArmOutOfRange { arm: arm.0, arms })
    }
}

/// A context vector observed before each decision of a contextual bandit.
#[derive(Debug, Clone, PartialEq)]
pub struct Context(Vec<f64>);

impl Context {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("context must have dimension >= 1"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("context entries must be finite"));
        }
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, w: &[f64]) -> f64 {
        self.0.iter().zip(w).map(|(x, w)| x * w).sum()
    }
}

/// `d` independent U(0, 1) draws.
pub fn generate_context<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<Context> {
    if d < 1 {
        return Err(invalid("context dimension must be >= 1"));
    }
    Ok(Context((0..d).map(|_| rng.random::<f64>()).collect()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BernoulliBandit {
    theta: Vec<f64>,
}

impl BernoulliBandit {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.len() < 2 {
            return Err(BanditError::TooFewArms(theta.len()));
        }
        if let Some((a, t)) = theta
            .iter()
            .enumerate()
            .find(|(_, t)| !(0.0..=1.0).contains(*t))
        {
            return Err(invalid(format!("theta[{a}] = {t} is outside [0, 1]")));
        }
        Ok(Self { theta })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearGaussianBandit {
    weights: Vec<Vec<f64>>,
    noise_std: Vec<f64>,
    context_dim: usize,
}

impl LinearGaussianBandit {
    pub fn new(weights: Vec<Vec<f64>>, noise_std: Vec<f64>) -> Result<Self> {
        if weights.len() < 2 {
            return Err(BanditError::TooFewArms(weights.len()));
        }
        if noise_std.len() != weights.len() {
            return Err(BanditError::LengthMismatch(format!(
                "{} weight vectors but {} noise scales",
                weights.len(),
                noise_std.len()
            )));
        }
        let context_dim = weights[0].len();
        if context_dim < 1 {
            return Err(invalid("weight vectors must have dimension >= 1"));
        }
        for (a, w) in weights.iter().enumerate() {
            if w.len() != context_dim {
                return Err(BanditError::DimensionMismatch {
                    expected: context_dim,
                    got: w.len(),
                });
            }
            if w.iter().any(|v| !v.is_finite()) {
                return Err(invalid(format!("weights of arm {a} must be finite")));
            }
        }
        if let Some((a, s)) = noise_std
            .iter()
            .enumerate()
            .find(|(_, s)| !(s.is_finite() && **s > 0.0))
        {
            return Err(invalid(format!("noise_std[{a}] = {s} must be positive")));
        }
        Ok(Self {
            weights,
            noise_std,
            context_dim,
        })
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn noise_std(&self) -> &[f64] {
        &self.noise_std
    }

    pub fn context_dim(&self) -> usize {
        self.context_dim
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BanditInstance {
    Bernoulli(BernoulliBandit),
    LinearGaussian(LinearGaussianBandit),
}

impl From<BernoulliBandit> for BanditInstance {
    fn from(b: BernoulliBandit) -> Self {
        Self::Bernoulli(b)
    }
}

impl From<LinearGaussianBandit> for BanditInstance {
    fn from(b: LinearGaussianBandit) -> Self {
        Self::LinearGaussian(b)
    }
}

impl BanditInstance {
    pub fn bernoulli(theta: Vec<f64>) -> Result<Self> {
        BernoulliBandit::new(theta).map(Self::from)
    }

    pub fn linear_gaussian(weights: Vec<Vec<f64>>, noise_std: Vec<f64>) -> Result<Self> {
        LinearGaussianBandit::new(weights, noise_std).map(Self::from)
    }

    pub fn arms(&self) -> usize {
        match self {
            Self::Bernoulli(b) => b.theta.len(),
            Self::LinearGaussian(g) => g.weights.len(),
        }
    }

    /// `None` for non-contextual instances.
    pub fn context_dim(&self) -> Option<usize> {
        match self {
            Self::Bernoulli(_) => None,
            Self::LinearGaussian(g) => Some(g.context_dim),
        }
    }

    pub fn is_contextual(&self) -> bool {
        self.context_dim().is_some()
    }

    pub fn check_arm(&self, arm: ArmIndex) -> Result<()> {
        check_arm(arm, self.arms())
    }

    pub fn check_context(&self, context: Option<&Context>) -> Result<()> {
        check_context(self.context_dim(), context)
    }

    pub fn expected_reward(&self, arm: ArmIndex, context: Option<&Context>) -> Result<f64> {
        self.check_arm(arm)?;
        self.check_context(context)?;
        Ok(self.expected_reward_unchecked(arm.0, context))
    }

    fn expected_reward_unchecked(&self, arm: usize, context: Option<&Context>) -> f64 {
        match (self, context) {
            (Self::Bernoulli(b), _) => b.theta[arm],
            (Self::LinearGaussian(g), Some(x)) => x.dot(&g.weights[arm]),
            (Self::LinearGaussian(_), None) => unreachable!("context checked by caller"),
        }
    }

    pub fn expected_rewards(&self, context: Option<&Context>) -> Result<Vec<f64>> {
        self.check_context(context)?;
        Ok((0..self.arms())
            .map(|a| self.expected_reward_unchecked(a, context))
            .collect())
    }

    /// Arm with the highest expected reward; ties go to the lowest index.
    pub fn optimal_arm(&self, context: Option<&Context>) -> Result<ArmIndex> {
        let rewards = self.expected_rewards(context)?;
        let mut best = 0;
        for (a, &r) in rewards.iter().enumerate().skip(1) {
            if r > rewards[best] {
                best = a;
            }
        }
        Ok(ArmIndex(best))
    }

    pub fn optimal_reward(&self, context: Option<&Context>) -> Result<f64> {
        let rewards = self.expected_rewards(context)?;
        Ok(rewards.into_iter().fold(f64::NEG_INFINITY, f64::max))
    }

    /// Draws one reward for `arm`.
    ///
    /// Bernoulli arms consume a single uniform and return 1 iff it falls below
    /// `theta`; Gaussian arms consume a single standard normal. Sharing the
    /// generator across algorithms therefore gives common random numbers.
    pub fn draw_reward<R: Rng + ?Sized>(
        &self,
        arm: ArmIndex,
        context: Option<&Context>,
        rng: &mut R,
    ) -> Result<f64> {
        self.check_arm(arm)?;
        self.check_context(context)?;
        Ok(match self {
            Self::Bernoulli(b) => {
                let u: f64 = rng.random();
                if u < b.theta[arm.0] {
                    1.0
                } else {
                    0.0
                }
            }
            Self::LinearGaussian(g) => {
                let z: f64 = StandardNormal.sample(rng);
                self.expected_reward_unchecked(arm.0, context) + g.noise_std[arm.0] * z
            }
        })
    }

    /// Fresh uniform context for contextual instances, `None` otherwise.
    pub fn generate_context<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<Context> {
        self.context_dim()
            .map(|d| generate_context(d, rng).expect("instance dimension is >= 1"))
    }
}

pub(crate) fn check_context(dim: Option<usize>, context: Option<&Context>) -> Result<()> {
    match (dim, context) {
        (None, None) => Ok(()),
        (None, Some(_)) => Err(BanditError::UnexpectedContext),
        (Some(_), None) => Err(BanditError::MissingContext),
        (Some(d), Some(x)) if x.dim() != d => Err(BanditError::DimensionMismatch {
            expected: d,
            got: x.dim(),
        }),
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn ctx(v: &[f64]) -> Context {
        Context::new(v.to_vec()).unwrap()
    }

    fn two_arm_gaussian() -> BanditInstance {
        BanditInstance::linear_gaussian(vec![vec![0.4, 0.4], vec![0.8, 0.8]], vec![0.2, 0.2])
            .unwrap()
    }

    #[test]
    fn expected_rewards() {
        let b = BanditInstance::bernoulli(vec![0.4, 0.8]).unwrap();
        assert_eq!(b.expected_reward(ArmIndex(1), None).unwrap(), 0.8);
        let g = two_arm_gaussian();
        let x = ctx(&[0.5, 0.5]);
        assert!((g.expected_reward(ArmIndex(1), Some(&x)).unwrap() - 0.8).abs() < 1e-15);
        let z =
            BanditInstance::linear_gaussian(vec![vec![0.0, 0.0], vec![1.0, 0.0]], vec![1.0, 1.0])
                .unwrap();
        assert_eq!(
            z.expected_reward(ArmIndex(0), Some(&ctx(&[0.3, 0.9])))
                .unwrap(),
            0.0
        );
    }

    #[test]
    fn optimal_arm_examples() {
        let b = BanditInstance::bernoulli(vec![0.4, 0.7, 0.8]).unwrap();
        assert_eq!(b.optimal_arm(None).unwrap(), ArmIndex(2));
        let tie = BanditInstance::bernoulli(vec![0.5, 0.5]).unwrap();
        assert_eq!(tie.optimal_arm(None).unwrap(), ArmIndex(0));
        assert_eq!(
            two_arm_gaussian()
                .optimal_arm(Some(&ctx(&[0.5, 0.5])))
                .unwrap(),
            ArmIndex(1)
        );
    }

    #[test]
    fn context_errors() {
        let b = BanditInstance::bernoulli(vec![0.4, 0.8]).unwrap();
        assert_eq!(
            b.expected_reward(ArmIndex(0), Some(&ctx(&[1.0]))),
            Err(BanditError::UnexpectedContext)
        );
        let g = two_arm_gaussian();
        assert_eq!(
            g.expected_reward(ArmIndex(0), None),
            Err(BanditError::MissingContext)
        );
        assert_eq!(
            g.optimal_arm(Some(&ctx(&[1.0, 2.0, 3.0]))),
            Err(BanditError::DimensionMismatch {
                expected: 2,
                got: 3
            })
        );
        assert!(matches!(
            b.expected_reward(ArmIndex(2), None),
            Err(BanditError::ArmOutOfRange { arm: 2, arms: 2 })
        ));
    }

    #[test]
    fn invalid_instances() {
        assert!(BanditInstance::bernoulli(vec![1.2, 0.3]).is_err());
        assert_eq!(
            BanditInstance::bernoulli(vec![0.5]),
            Err(BanditError::TooFewArms(1))
        );
        assert!(
            BanditInstance::linear_gaussian(vec![vec![0.0], vec![1.0]], vec![0.1, 0.0]).is_err()
        );
        assert!(
            BanditInstance::linear_gaussian(vec![vec![0.0], vec![1.0, 2.0]], vec![0.1, 0.1])
                .is_err()
        );
        assert!(generate_context(0, &mut RngStream::new(0, 0).rng()).is_err());
    }

    #[test]
    fn degenerate_bernoulli_rewards() {
        let b = BanditInstance::bernoulli(vec![0.0, 1.0]).unwrap();
        let mut rng = RngStream::new(3, 0).rng();
        for _ in 0..1000 {
            assert_eq!(b.draw_reward(ArmIndex(1), None, &mut rng).unwrap(), 1.0);
            assert_eq!(b.draw_reward(ArmIndex(0), None, &mut rng).unwrap(), 0.0);
        }
    }

    #[test]
    fn bernoulli_reward_moments() {
        let b = BanditInstance::bernoulli(vec![0.1, 0.8]).unwrap();
        let mut rng = RngStream::new(11, 0).rng();
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let y = b.draw_reward(ArmIndex(1), None, &mut rng).unwrap();
            assert!(y == 0.0 || y == 1.0);
            sum += y;
        }
        let tol = 3.0 * (0.16f64 / n as f64).sqrt();
        assert!((sum / n as f64 - 0.8).abs() < tol);
    }

    #[test]
    fn gaussian_reward_moments() {
        let g = two_arm_gaussian();
        let x = ctx(&[0.3, 0.6]);
        let mut rng = RngStream::new(12, 0).rng();
        let n = 100_000;
        let ys: Vec<f64> = (0..n)
            .map(|_| g.draw_reward(ArmIndex(0), Some(&x), &mut rng).unwrap())
            .collect();
        let mean = ys.iter().sum::<f64>() / n as f64;
        let var = ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n as f64;
        assert!((mean - 0.36).abs() < 3.0 * 0.2 / (n as f64).sqrt());
        assert!((var.sqrt() - 0.2).abs() < 0.01 * 0.2);
    }

    #[test]
    fn uniform_context_moments() {
        let mut rng = RngStream::new(5, 0).rng();
        let n = 100_000;
        let d = 3;
        let mut sum = vec![0.0; d];
        let mut sq = vec![0.0; d];
        for _ in 0..n {
            let x = generate_context(d, &mut rng).unwrap();
            for (i, &v) in x.as_slice().iter().enumerate() {
                assert!((0.0..=1.0).contains(&v));
                sum[i] += v;
                sq[i] += v * v;
            }
        }
        for i in 0..d {
            let mean = sum[i] / n as f64;
            let var = sq[i] / n as f64 - mean * mean;
            assert!((mean - 0.5).abs() < 0.005, "mean {mean}");
            assert!((var - 1.0 / 12.0).abs() < 0.05 / 12.0, "var {var}");
        }
    }

    #[test]
    fn optimal_arm_maximizes_exhaustively() {
        let mut rng = RngStream::new(9, 0).rng();
        for _ in 0..200 {
            let arms = rng.random_range(2..6);
            let d = rng.random_range(1..4);
            let weights: Vec<Vec<f64>> = (0..arms)
                .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let g = BanditInstance::linear_gaussian(weights, vec![0.5; arms]).unwrap();
            let x = g.generate_context(&mut rng);
            let best = g.optimal_arm(x.as_ref()).unwrap();
            let mu_best = g.expected_reward(best, x.as_ref()).unwrap();
            for a in 0..arms {
                let mu = g.expected_reward(ArmIndex(a), x.as_ref()).unwrap();
                assert!(mu <= mu_best);
                if a < best.0 {
                    assert!(mu < mu_best);
                }
            }
        }
    }
}
