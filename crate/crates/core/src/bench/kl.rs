//! Minimum KL divergence between a suboptimal arm and the optimal one, used
//! as a difficulty index for sweep rows.

use crate::bandit::BanditInstance;

/// `KL(Bern(p) ‖ Bern(q))` with `0 ln 0 = 0`; `+∞` when `q` puts zero mass
/// where `p` does not.
pub fn bernoulli_kl(p: f64, q: f64) -> f64 {
    let term = |a: f64, b: f64| {
        if a == 0.0 {
            0.0
        } else if b == 0.0 {
            f64::INFINITY
        } else {
            a * (a / b).ln()
        }
    };
    term(p, q) + term(1.0 - p, 1.0 - q)
}

/// `E_x KL(N(xᵀw_a, σ_a²) ‖ N(xᵀw_b, σ_b²))` for `x ~ U(0,1)^d`, using
/// `E[x xᵀ] = I/12 + J/4`.
pub fn gaussian_expected_kl(w_a: &[f64], sigma_a: f64, w_b: &[f64], sigma_b: f64) -> f64 {
    let delta: Vec<f64> = w_a.iter().zip(w_b).map(|(a, b)| a - b).collect();
    let sq: f64 = delta.iter().map(|d| d * d).sum();
    let sum: f64 = delta.iter().sum();
    let second_moment = sq / 12.0 + sum * sum / 4.0;
    (sigma_b / sigma_a).ln() + (sigma_a * sigma_a + second_moment) / (2.0 * sigma_b * sigma_b) - 0.5
}

/// Minimum over arms `a ≠ a*` of `KL(f_a ‖ f_{a*})`.
///
/// For contextual instances `a*` is the best arm at the mean context
/// `(1/2, …, 1/2)`, i.e. the best arm on average over uniform contexts, and
/// the divergence is averaged over the context distribution.
pub fn min_kl(instance: &BanditInstance) -> f64 {
    match instance {
        BanditInstance::Bernoulli(b) => {
            let theta = b.theta();
            let best = argmax(theta);
            (0..theta.len())
                .filter(|&a| a != best)
                .map(|a| bernoulli_kl(theta[a], theta[best]))
                .fold(f64::INFINITY, f64::min)
        }
        BanditInstance::LinearGaussian(g) => {
            let mean_reward: Vec<f64> = g
                .weights()
                .iter()
                .map(|w| 0.5 * w.iter().sum::<f64>())
                .collect();
            let best = argmax(&mean_reward);
            let (w, s) = (g.weights(), g.noise_std());
            (0..w.len())
                .filter(|&a| a != best)
                .map(|a| gaussian_expected_kl(&w[a], s[a], &w[best], s[best]))
                .fold(f64::INFINITY, f64::min)
        }
    }
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
