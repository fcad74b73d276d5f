use crate::bandit::{ArmIndex, Context};
use crate::error::{BanditError, Result};

/// Append-only record of played arms, observed contexts and rewards.
///
/// Either every step carries a context of one fixed dimension or none does.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct History {
    arms: Vec<ArmIndex>,
    contexts: Vec<Option<Context>>,
    rewards: Vec<f64>,
}

impl History {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.arms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }

    pub fn arms(&self) -> &[ArmIndex] {
        &self.arms
    }

    pub fn contexts(&self) -> &[Option<Context>] {
        &self.contexts
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn context_dim(&self) -> Option<usize> {
        self.contexts
            .first()
            .and_then(|c| c.as_ref().map(Context::dim))
    }

    pub fn record(&mut self, arm: ArmIndex, context: Option<Context>, reward: f64) -> Result<()> {
        if !self.is_empty() {
            match (self.context_dim(), context.as_ref()) {
                (None, None) => {}
                (Some(d), Some(x)) if x.dim() == d => {}
                (Some(d), Some(x)) => {
                    return Err(BanditError::DimensionMismatch {
                        expected: d,
                        got: x.dim(),
                    })
                }
                (Some(_), None) => return Err(BanditError::MissingContext),
                (None, Some(_)) => return Err(BanditError::UnexpectedContext),
            }
        }
        self.arms.push(arm);
        self.contexts.push(context);
        self.rewards.push(reward);
        Ok(())
    }

    /// The 1-based time indices at which `arm` was played.
    pub fn times_of(&self, arm: ArmIndex) -> Vec<usize> {
        self.arms
            .iter()
            .enumerate()
            .filter(|(_, &a)| a == arm)
            .map(|(t, _)| t + 1)
            .collect()
    }

    /// Steps `(context, reward)` for one arm, in time order.
    pub fn observations_of(&self, arm: ArmIndex) -> impl Iterator<Item = (Option<&Context>, f64)> {
        self.arms
            .iter()
            .zip(&self.contexts)
            .zip(&self.rewards)
            .filter(move |((&a, _), _)| a == arm)
            .map(|((_, c), &y)| (c.as_ref(), y))
    }
}
