use crate::error::{invalid, BanditError, Result};

use super::episode::RegretTrace;

/// Pointwise mean and population standard deviation of cumulative regret.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateCurve {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub realizations: usize,
}

impl AggregateCurve {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }
}

/// Mean and population std of equal-length series, reduced in input order.
pub fn aggregate_series(series: &[&[f64]]) -> Result<AggregateCurve> {
    let first = series
        .first()
        .ok_or_else(|| invalid("nothing to aggregate"))?;
    let len = first.len();
    if let Some(bad) = series.iter().find(|s| s.len() != len) {
        return Err(BanditError::LengthMismatch(format!(
            "series of length {} and {}",
            len,
            bad.len()
        )));
    }
    let n = series.len() as f64;
    // Accumulate offsets from the first series so identical inputs give an
    // exact mean and hence an exact zero spread.
    let mut shift = vec![0.0; len];
    for s in series {
        for ((acc, v), p) in shift.iter_mut().zip(s.iter()).zip(first.iter()) {
            *acc += v - p;
        }
    }
    let mean: Vec<f64> = first.iter().zip(&shift).map(|(p, d)| p + d / n).collect();
    let mut var = vec![0.0; len];
    for s in series {
        for ((acc, v), m) in var.iter_mut().zip(s.iter()).zip(&mean) {
            *acc += (v - m) * (v - m);
        }
    }
    Ok(AggregateCurve {
        mean,
        std: var.into_iter().map(|v| (v / n).sqrt()).collect(),
        realizations: series.len(),
    })
}

pub fn aggregate(traces: &[RegretTrace]) -> Result<AggregateCurve> {
    let series: Vec<&[f64]> = traces.iter().map(|t| t.cumulative.as_slice()).collect();
    aggregate_series(&series)
}

/// Per-step means of the double-sampling diagnostics across realizations.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsCurve {
    pub mean_n: Vec<f64>,
    pub mean_p_fa: Vec<f64>,
    /// `mean_p_hat[a][t]`.
    pub mean_p_hat: Vec<Vec<f64>>,
}

/// `None` when the traces carry no double-sampling diagnostics.
pub fn aggregate_diagnostics(traces: &[RegretTrace]) -> Result<Option<DiagnosticsCurve>> {
    let diags: Vec<_> = traces
        .iter()
        .filter_map(|t| t.diagnostics.as_ref())
        .collect();
    if diags.is_empty() {
        return Ok(None);
    }
    if diags.len() != traces.len() {
        return Err(invalid("some traces lack double-sampling diagnostics"));
    }
    let steps = diags[0].n_candidates.len();
    let arms = diags[0].arms;
    if diags
        .iter()
        .any(|d| d.n_candidates.len() != steps || d.arms != arms)
    {
        return Err(BanditError::LengthMismatch(
            "diagnostic traces differ in shape".into(),
        ));
    }
    let n = diags.len() as f64;
    let mut mean_n = vec![0.0; steps];
    let mut mean_p_fa = vec![0.0; steps];
    let mut mean_p_hat = vec![vec![0.0; steps]; arms];
    for d in &diags {
        for t in 0..steps {
            mean_n[t] += d.n_candidates[t] as f64;
            mean_p_fa[t] += d.p_fa[t];
            for (a, p) in d.p_hat_at(t).iter().enumerate() {
                mean_p_hat[a][t] += p;
            }
        }
    }
    mean_n
        .iter_mut()
        .chain(mean_p_fa.iter_mut())
        .for_each(|v| *v /= n);
    mean_p_hat.iter_mut().flatten().for_each(|v| *v /= n);
    Ok(Some(DiagnosticsCurve {
        mean_n,
        mean_p_fa,
        mean_p_hat,
    }))
}

/// `R_DS / R_other − 1`; `None` when the baseline regret is not positive.
pub fn relative_regret_diff(r_ds: f64, r_other: f64) -> Option<f64> {
    (r_other > 0.0).then(|| r_ds / r_other - 1.0)
}
