//! KL-indexed parameter sweeps comparing double sampling with both baselines.

use rayon::prelude::*;

use crate::bandit::BanditInstance;
use crate::error::{invalid, Result};

use super::aggregate::{aggregate_series, relative_regret_diff};
use super::episode::{run_episode, Algorithm, ExperimentConfig};
use super::kl::min_kl;

/// Evenly spaced values `min, min + step, …, max`, rounded to 1e-10 so that
/// decimal grids print cleanly.
pub fn grid_values(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if step.is_nan() || step <= 0.0 || !min.is_finite() || !max.is_finite() || max < min {
        return Err(invalid(format!(
            "bad grid range [{min}, {max}] step {step}"
        )));
    }
    let n = ((max - min) / step + 1e-9).floor() as usize;
    Ok((0..=n)
        .map(|i| ((min + i as f64 * step) * 1e10).round() / 1e10)
        .collect())
}

/// The set of instances a sweep visits.
///
/// With `unique` set, per-arm parameter tuples are restricted to
/// nondecreasing order, which drops arm relabelings (they have the same KL
/// and, up to tie-breaking, the same regret). Without it every ordered tuple
/// is visited.
#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec {
    Bernoulli {
        arms: Vec<usize>,
        values: Vec<f64>,
        unique: bool,
    },
    /// One noise level shared by all arms of a point.
    LinearGaussian {
        arms: usize,
        dim: usize,
        weight_values: Vec<f64>,
        sigma_values: Vec<f64>,
        unique: bool,
    },
}

impl GridSpec {
    /// Two-armed Bernoulli, θ step 0.2, relabelings removed.
    pub fn desk_bernoulli() -> Self {
        Self::Bernoulli {
            arms: vec![2],
            values: grid_values(0.0, 1.0, 0.2).unwrap(),
            unique: true,
        }
    }

    /// Two and three arms, θ step 0.05, every ordered tuple.
    pub fn full_bernoulli() -> Self {
        Self::Bernoulli {
            arms: vec![2, 3],
            values: grid_values(0.0, 1.0, 0.05).unwrap(),
            unique: false,
        }
    }

    /// Two arms in two dimensions, weights step 0.5, σ ∈ {0.2, 0.6, 1.0}.
    pub fn desk_gaussian() -> Self {
        Self::LinearGaussian {
            arms: 2,
            dim: 2,
            weight_values: grid_values(-1.0, 1.0, 0.5).unwrap(),
            sigma_values: vec![0.2, 0.6, 1.0],
            unique: true,
        }
    }

    /// Two arms in two dimensions, weights step 0.1, σ step 0.1.
    pub fn full_gaussian() -> Self {
        Self::LinearGaussian {
            arms: 2,
            dim: 2,
            weight_values: grid_values(-1.0, 1.0, 0.1).unwrap(),
            sigma_values: grid_values(0.1, 1.0, 0.1).unwrap(),
            unique: false,
        }
    }

    pub fn points(&self) -> Result<Vec<BanditInstance>> {
        let points = match self {
            Self::Bernoulli {
                arms,
                values,
                unique,
            } => {
                let mut out = Vec::new();
                for &a in arms {
                    for idx in index_tuples(values.len(), a, *unique) {
                        out.push(BanditInstance::bernoulli(
                            idx.iter().map(|&i| values[i]).collect(),
                        )?);
                    }
                }
                out
            }
            Self::LinearGaussian {
                arms,
                dim,
                weight_values,
                sigma_values,
                unique,
            } => {
                let vectors: Vec<Vec<f64>> = index_tuples(weight_values.len(), *dim, false)
                    .into_iter()
                    .map(|idx| idx.iter().map(|&i| weight_values[i]).collect())
                    .collect();
                let mut out = Vec::new();
                for &sigma in sigma_values {
                    for idx in index_tuples(vectors.len(), *arms, *unique) {
                        out.push(BanditInstance::linear_gaussian(
                            idx.iter().map(|&i| vectors[i].clone()).collect(),
                            vec![sigma; *arms],
                        )?);
                    }
                }
                out
            }
        };
        if points.is_empty() {
            return Err(invalid("sweep grid is empty"));
        }
        Ok(points)
    }
}

/// All length-`k` tuples over `0..n` in lexicographic order; nondecreasing
/// ones only when `sorted`.
fn index_tuples(n: usize, k: usize, sorted: bool) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    let mut cur = vec![0; k];
    loop {
        out.push(cur.clone());
        // advance like an odometer, rightmost digit fastest
        let mut pos = k;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            if cur[pos] + 1 < n {
                cur[pos] += 1;
                let reset = if sorted { cur[pos] } else { 0 };
                cur[pos + 1..].iter_mut().for_each(|c| *c = reset);
                break;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub instance: BanditInstance,
    pub kl: f64,
    pub regret_ds: f64,
    pub regret_ts: f64,
    pub regret_bucb: f64,
    pub delta_ts: Option<f64>,
    pub delta_bucb: Option<f64>,
}

impl SweepRow {
    /// Both relative differences exist.
    pub fn defined(&self) -> bool {
        self.delta_ts.is_some() && self.delta_bucb.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Sorted by `kl` ascending; ties keep grid order.
    pub rows: Vec<SweepRow>,
    /// The step `t` at which cumulative regret is compared.
    pub eval_step: usize,
}

/// Runs all three algorithms on every grid point and compares mean
/// cumulative regret at the configured horizon.
///
/// Instance and algorithm fields of `config` are overridden per job; every
/// algorithm at a point uses the same realization streams, so environment
/// noise is shared. The result does not depend on rayon scheduling.
pub fn run_sweep(grid: &GridSpec, config: &ExperimentConfig) -> Result<SweepResult> {
    let points = grid.points()?;
    config.validate()?;
    let (r, t) = (config.realizations, config.horizon);
    let algos = Algorithm::ALL.len();
    let jobs = points.len() * algos * r;
    let finals: Vec<f64> = (0..jobs)
        .into_par_iter()
        .map(|job| {
            let (p, rest) = (job / (algos * r), job % (algos * r));
            let cfg = ExperimentConfig {
                instance: points[p].clone(),
                algorithm: Algorithm::ALL[rest / r],
                ..config.clone()
            };
            run_episode(&cfg, (rest % r) as u64).map(|trace| trace.regret_at(t))
        })
        .collect::<Result<_>>()?;

    // Same reduction as `aggregate`, so a row matches the regret curves of
    // separate runs bit for bit.
    let mean = |p: usize, a: usize| {
        let start = (p * algos + a) * r;
        let series: Vec<&[f64]> = finals[start..start + r].chunks(1).collect();
        aggregate_series(&series).map(|agg| agg.mean[0])
    };
    let mut rows: Vec<SweepRow> = points
        .into_iter()
        .enumerate()
        .map(|(p, instance)| {
            let (ds, ts, bucb) = (mean(p, 0)?, mean(p, 1)?, mean(p, 2)?);
            Ok(SweepRow {
                kl: min_kl(&instance),
                instance,
                regret_ds: ds,
                regret_ts: ts,
                regret_bucb: bucb,
                delta_ts: relative_regret_diff(ds, ts),
                delta_bucb: relative_regret_diff(ds, bucb),
            })
        })
        .collect::<Result<_>>()?;
    rows.sort_by(|a, b| a.kl.total_cmp(&b.kl));
    Ok(SweepResult { rows, eval_step: t })
}
