//! Front end for running bandit experiments from config files.
//!
//! `run` writes per-algorithm regret curves (plus double-sampling
//! diagnostics); `sweep` writes one KL-indexed comparison row per grid point.
//! Both start by writing `manifest.json` and `config.resolved`.

pub mod config;
pub mod output;

use std::fs;
use std::path::{Path, PathBuf};

use dsbandit::bench::{aggregate, aggregate_diagnostics, run_realizations, run_sweep, Algorithm};
use dsbandit::BanditError;

use config::{ConfigError, Settings};
use output::{now_unix, to_json, RunManifest};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Bandit(#[from] BanditError),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("thread pool: {0}")]
    Pool(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    output::write_file(path, contents).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Runs `f` on a private pool when a thread count is configured.
fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> Result<T, CliError> + Send,
) -> Result<T, CliError> {
    match threads {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Pool(e.to_string()))?
            .install(f),
    }
}

struct Recorder<'a> {
    settings: &'a Settings,
    manifest: RunManifest,
}

impl<'a> Recorder<'a> {
    fn start(
        settings: &'a Settings,
        command: &'static str,
        outputs: Vec<String>,
    ) -> Result<Self, CliError> {
        fs::create_dir_all(&settings.out).map_err(|e| CliError::Io {
            path: settings.out.clone(),
            message: e.to_string(),
        })?;
        write(
            &settings.out.join("config.resolved"),
            &settings.to_config_text(),
        )?;
        let recorder = Self {
            settings,
            manifest: RunManifest {
                tool: "dsbandit",
                version: output::VERSION,
                command,
                status: "running",
                seed: settings.experiment.seed,
                threads: settings.threads,
                started_unix: now_unix(),
                finished_unix: None,
                config: settings
                    .entries()
                    .iter()
                    .map(|(k, v)| (k.clone(), to_json(v)))
                    .collect(),
                outputs,
            },
        };
        recorder.write_manifest()?;
        Ok(recorder)
    }

    fn write_manifest(&self) -> Result<(), CliError> {
        let json = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        write(&self.settings.out.join("manifest.json"), &(json + "\n"))
    }

    fn finish(mut self) -> Result<Vec<PathBuf>, CliError> {
        self.manifest.status = "complete";
        self.manifest.finished_unix = Some(now_unix());
        self.write_manifest()?;
        Ok(self
            .manifest
            .outputs
            .iter()
            .map(|f| self.settings.out.join(f))
            .collect())
    }
}

pub fn regret_file(algorithm: Algorithm) -> String {
    format!("regret_{}.csv", algorithm.name())
}

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const SWEEP_FILE: &str = "sweep.csv";

/// Writes `regret_<algorithm>.csv` for each configured algorithm and
/// `diagnostics.csv` when double sampling is among them. Returns the paths
/// of the data files.
pub fn cmd_run(settings: &Settings) -> Result<Vec<PathBuf>, CliError> {
    let mut files: Vec<String> = settings
        .algorithms
        .iter()
        .map(|&a| regret_file(a))
        .collect();
    if settings.algorithms.contains(&Algorithm::DoubleSampling) {
        files.push(DIAGNOSTICS_FILE.into());
    }
    let recorder = Recorder::start(settings, "run", files)?;
    for &algorithm in &settings.algorithms {
        let cfg = settings.experiment.with_algorithm(algorithm);
        let traces = with_threads(settings.threads, || Ok(run_realizations(&cfg)?))?;
        write(
            &settings.out.join(regret_file(algorithm)),
            &output::regret_csv(&aggregate(&traces)?),
        )?;
        if let Some(diag) = aggregate_diagnostics(&traces)? {
            write(
                &settings.out.join(DIAGNOSTICS_FILE),
                &output::diagnostics_csv(&diag),
            )?;
        }
    }
    recorder.finish()
}

/// Writes `sweep.csv`, rows sorted by KL ascending.
pub fn cmd_sweep(settings: &Settings) -> Result<Vec<PathBuf>, CliError> {
    let grid = settings
        .grid
        .as_ref()
        .ok_or_else(|| ConfigError::General("sweep needs a grid".into()))?;
    let recorder = Recorder::start(settings, "sweep", vec![SWEEP_FILE.into()])?;
    let result = with_threads(settings.threads, || {
        Ok(run_sweep(grid, &settings.experiment)?)
    })?;
    write(&settings.out.join(SWEEP_FILE), &output::sweep_csv(&result))?;
    recorder.finish()
}
