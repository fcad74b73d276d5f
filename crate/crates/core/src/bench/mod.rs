//! Episode runner, aggregation and parameter sweeps.

mod aggregate;
mod episode;
mod kl;
mod sweep;

pub use aggregate::{
    aggregate, aggregate_diagnostics, aggregate_series, relative_regret_diff, AggregateCurve,
    DiagnosticsCurve,
};
pub use episode::{
    run_episode, run_realizations, Algorithm, DoubleSamplingTrace, Episode, ExperimentConfig,
    RegretMode, RegretTrace, ENV_TAG, POLICY_TAG,
};
pub use kl::{bernoulli_kl, gaussian_expected_kl, min_kl};
pub use sweep::{grid_values, run_sweep, GridSpec, SweepResult, SweepRow};
