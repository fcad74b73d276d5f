//! Flat `key = value` configuration files.
//!
//! ```text
//! # comments run to end of line
//! model = bernoulli
//! theta = [0.4, 0.8]
//! algorithm = [double-sampling, thompson]
//! weights = [[0.4, 0.4], [0.8, 0.8]]
//! out = "results/two-arm"
//! ```
//!
//! Values are numbers, bare words, quoted strings or bracketed lists (which
//! may nest). Each key may appear once per file. Command-line flags are
//! layered on top of the file, and defaults fill the rest.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use dsbandit::bench::{grid_values, Algorithm, ExperimentConfig, GridSpec, RegretMode};
use dsbandit::{BanditInstance, PolicyConfig, PriorSpec};

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Word(String),
    List(Vec<Value>),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(x) => write!(f, "{x}"),
            Value::Word(w) if needs_quotes(w) => write!(f, "\"{w}\""),
            Value::Word(w) => f.write_str(w),
            Value::List(items) => {
                f.write_str("[")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
        }
    }
}

fn needs_quotes(w: &str) -> bool {
    w.is_empty()
        || w.parse::<f64>().is_ok()
        || w.chars()
            .any(|c| matches!(c, ',' | '[' | ']' | '#' | '"' | '=') || c.is_whitespace())
}

/// Where a setting came from, for error messages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Source {
    Line(usize),
    Flag(String),
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Line(n) => write!(f, "line {n}"),
            Source::Flag(name) => write!(f, "{name}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("{origin}: {message}")]
    At { origin: Source, message: String },
    #[error("{0}")]
    General(String),
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
}

fn at(source: &Source, message: impl Into<String>) -> ConfigError {
    ConfigError::At {
        origin: source.clone(),
        message: message.into(),
    }
}

pub const KEYS: &[&str] = &[
    "model",
    "theta",
    "weights",
    "noise_std",
    "algorithm",
    "horizon",
    "realizations",
    "seed",
    "mc_samples",
    "n_scale",
    "p_fa_floor",
    "n_max",
    "regret_mode",
    "threads",
    "out",
    "prior_alpha",
    "prior_beta",
    "prior_mean",
    "prior_scale",
    "grid_preset",
    "grid_arms",
    "grid_dim",
    "grid_values",
    "grid_min",
    "grid_max",
    "grid_step",
    "grid_unique",
    "sigma_values",
    "sigma_min",
    "sigma_max",
    "sigma_step",
];

/// Unresolved settings, keyed by name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, (Value, Source)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut raw = Self::default();
        for (i, line) in text.lines().enumerate() {
            let source = Source::Line(i + 1);
            let body = strip_comment(line).trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| at(&source, format!("expected `key = value`, got `{body}`")))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(at(&source, format!("unknown key `{key}`")));
            }
            if let Some((_, first)) = raw.entries.get(key) {
                return Err(at(&source, format!("`{key}` already set on {first}")));
            }
            let value = parse_value(value).map_err(|m| at(&source, m))?;
            raw.entries.insert(key.to_string(), (value, source));
        }
        Ok(raw)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    /// Overrides `key` with a command-line value, parsed with the file syntax.
    pub fn set_flag(&mut self, key: &str, value: &str, flag: &str) -> Result<(), ConfigError> {
        let source = Source::Flag(flag.to_string());
        if !KEYS.contains(&key) {
            return Err(at(&source, format!("unknown key `{key}`")));
        }
        let value = parse_value(value).map_err(|m| at(&source, m))?;
        self.entries.insert(key.to_string(), (value, source));
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.get(key).map(|(v, _)| v)
    }

    fn entry(&self, key: &str) -> Option<(&Value, &Source)> {
        self.entries.get(key).map(|(v, s)| (v, s))
    }

    fn num(&self, key: &str) -> Result<Option<(f64, &Source)>, ConfigError> {
        match self.entry(key) {
            None => Ok(None),
            Some((Value::Num(x), s)) => Ok(Some((*x, s))),
            Some((v, s)) => Err(at(s, format!("`{key}` must be a number, got `{v}`"))),
        }
    }

    fn count(&self, key: &str) -> Result<Option<usize>, ConfigError> {
        self.num(key)?
            .map(|(x, s)| {
                as_count(x).ok_or_else(|| {
                    at(
                        s,
                        format!("`{key}` must be a non-negative integer, got {x}"),
                    )
                })
            })
            .transpose()
    }

    fn positive(&self, key: &str) -> Result<Option<usize>, ConfigError> {
        self.num(key)?
            .map(|(x, s)| {
                as_count(x)
                    .filter(|&n| n >= 1)
                    .ok_or_else(|| at(s, format!("`{key}` must be a positive integer, got {x}")))
            })
            .transpose()
    }

    fn word(&self, key: &str) -> Result<Option<(&str, &Source)>, ConfigError> {
        match self.entry(key) {
            None => Ok(None),
            Some((Value::Word(w), s)) => Ok(Some((w.as_str(), s))),
            Some((v, s)) => Err(at(s, format!("`{key}` must be a word, got `{v}`"))),
        }
    }

    fn numbers(&self, key: &str) -> Result<Option<(Vec<f64>, &Source)>, ConfigError> {
        let Some((value, s)) = self.entry(key) else {
            return Ok(None);
        };
        Ok(Some((
            number_list(value).ok_or_else(|| {
                at(
                    s,
                    format!("`{key}` must be a list of numbers, got `{value}`"),
                )
            })?,
            s,
        )))
    }

    fn flag(&self, key: &str) -> Result<Option<bool>, ConfigError> {
        match self.word(key)? {
            None => Ok(None),
            Some(("true", _)) => Ok(Some(true)),
            Some(("false", _)) => Ok(Some(false)),
            Some((w, s)) => Err(at(s, format!("`{key}` must be true or false, got `{w}`"))),
        }
    }
}

fn as_count(x: f64) -> Option<usize> {
    (x >= 0.0 && x.fract() == 0.0 && x < 1e15).then_some(x as usize)
}

fn number_list(value: &Value) -> Option<Vec<f64>> {
    match value {
        Value::Num(x) => Some(vec![*x]),
        Value::List(items) => items
            .iter()
            .map(|v| match v {
                Value::Num(x) => Some(*x),
                _ => None,
            })
            .collect(),
        Value::Word(_) => None,
    }
}

fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

pub fn parse_value(text: &str) -> Result<Value, String> {
    let chars: Vec<char> = text.chars().collect();
    let mut pos = 0;
    let value = parse_item(&chars, &mut pos)?;
    skip_ws(&chars, &mut pos);
    if pos != chars.len() {
        let rest: String = chars[pos..].iter().collect();
        return Err(format!("unexpected trailing `{rest}`"));
    }
    Ok(value)
}

fn skip_ws(chars: &[char], pos: &mut usize) {
    while *pos < chars.len() && chars[*pos].is_whitespace() {
        *pos += 1;
    }
}

fn parse_item(chars: &[char], pos: &mut usize) -> Result<Value, String> {
    skip_ws(chars, pos);
    match chars.get(*pos) {
        None => Err("missing value".into()),
        Some('[') => {
            *pos += 1;
            let mut items = Vec::new();
            skip_ws(chars, pos);
            if chars.get(*pos) == Some(&']') {
                *pos += 1;
                return Ok(Value::List(items));
            }
            loop {
                items.push(parse_item(chars, pos)?);
                skip_ws(chars, pos);
                match chars.get(*pos) {
                    Some(',') => *pos += 1,
                    Some(']') => {
                        *pos += 1;
                        return Ok(Value::List(items));
                    }
                    _ => return Err("unterminated list, expected `,` or `]`".into()),
                }
            }
        }
        Some('"') => {
            let start = *pos + 1;
            let end = chars[start..]
                .iter()
                .position(|&c| c == '"')
                .ok_or("unterminated string")?;
            *pos = start + end + 1;
            Ok(Value::Word(chars[start..start + end].iter().collect()))
        }
        Some(_) => {
            let start = *pos;
            while *pos < chars.len() && !matches!(chars[*pos], ',' | ']' | '[' | '"') {
                *pos += 1;
            }
            let token: String = chars[start..*pos]
                .iter()
                .collect::<String>()
                .trim()
                .to_string();
            if token.is_empty() {
                return Err("empty value".into());
            }
            // integers too large for an exact f64 (seeds) stay textual
            if matches!(token.parse::<u64>(), Ok(n) if n > 1 << 53) {
                return Ok(Value::Word(token));
            }
            Ok(match token.parse::<f64>() {
                Ok(x) if token.chars().any(|c| c.is_ascii_digit()) => Value::Num(x),
                _ => Value::Word(token),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Bernoulli,
    LinearGaussian,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Bernoulli => "bernoulli",
            Model::LinearGaussian => "linear-gaussian",
        }
    }
}

/// Fully resolved settings for either command.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub model: Model,
    /// The bandit to run; for sweeps, the first grid point.
    pub experiment: ExperimentConfig,
    pub algorithms: Vec<Algorithm>,
    pub threads: Option<usize>,
    pub out: PathBuf,
    pub grid: Option<GridSpec>,
}

pub const DEFAULT_OUT: &str = "out";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Run,
    Sweep,
}

pub fn resolve(raw: &RawConfig, mode: Mode) -> Result<Settings, ConfigError> {
    let model = match raw.word("model")? {
        None | Some(("bernoulli", _)) => Model::Bernoulli,
        Some(("linear-gaussian" | "gaussian", _)) => Model::LinearGaussian,
        Some((w, s)) => {
            return Err(at(
                s,
                format!("unknown model `{w}` (expected bernoulli or linear-gaussian)"),
            ))
        }
    };

    let grid = match mode {
        Mode::Sweep => Some(resolve_grid(raw, model)?),
        Mode::Run => None,
    };
    let instance = match &grid {
        Some(g) => g
            .points()
            .map_err(|e| ConfigError::General(e.to_string()))?
            .swap_remove(0),
        None => resolve_instance(raw, model)?,
    };

    let algorithms = match raw.entry("algorithm") {
        None => Algorithm::ALL.to_vec(),
        Some((Value::Word(w), _)) if w == "all" => Algorithm::ALL.to_vec(),
        Some((v, s)) => {
            let items = match v {
                Value::List(items) => items.clone(),
                other => vec![other.clone()],
            };
            let mut out = Vec::new();
            for item in items {
                let Value::Word(w) = &item else {
                    return Err(at(
                        s,
                        format!("`algorithm` entries must be names, got `{item}`"),
                    ));
                };
                let a: Algorithm = w
                    .parse()
                    .map_err(|e: dsbandit::BanditError| at(s, e.to_string()))?;
                if !out.contains(&a) {
                    out.push(a);
                }
            }
            if out.is_empty() {
                return Err(at(s, "`algorithm` list is empty"));
            }
            out
        }
    };

    let mut policy = PolicyConfig::with_samples(raw.positive("mc_samples")?.unwrap_or(1000));
    if let Some((x, _)) = raw.num("n_scale")? {
        policy.n_scale = x;
    }
    if let Some((x, _)) = raw.num("p_fa_floor")? {
        policy.p_fa_floor = x;
    }
    if let Some(n) = raw.positive("n_max")? {
        policy.n_max = n;
    }

    let mut prior = PriorSpec::default();
    for (key, field) in [
        ("prior_alpha", &mut prior.alpha),
        ("prior_beta", &mut prior.beta),
        ("prior_mean", &mut prior.mean),
        ("prior_scale", &mut prior.scale),
    ] {
        if let Some((x, _)) = raw.num(key)? {
            *field = x;
        }
    }

    let regret_mode = match raw.word("regret_mode")? {
        None => RegretMode::Pseudo,
        Some((w, s)) => w
            .parse()
            .map_err(|e: dsbandit::BanditError| at(s, e.to_string()))?,
    };

    let experiment = ExperimentConfig {
        horizon: raw
            .positive("horizon")?
            .unwrap_or(ExperimentConfig::DEFAULT_HORIZON),
        realizations: raw
            .positive("realizations")?
            .unwrap_or(ExperimentConfig::DEFAULT_REALIZATIONS),
        seed: resolve_seed(raw)?,
        policy,
        regret_mode,
        prior,
        ..ExperimentConfig::new(instance, algorithms[0])
    };
    experiment
        .validate()
        .map_err(|e| ConfigError::General(e.to_string()))?;

    let threads = raw.positive("threads")?;
    let out = match raw.entry("out") {
        None => PathBuf::from(DEFAULT_OUT),
        Some((Value::Word(w), _)) => PathBuf::from(w),
        Some((Value::Num(x), _)) => PathBuf::from(x.to_string()),
        Some((v, s)) => return Err(at(s, format!("`out` must be a path, got `{v}`"))),
    };

    Ok(Settings {
        model,
        experiment,
        algorithms,
        threads,
        out,
        grid,
    })
}

fn resolve_seed(raw: &RawConfig) -> Result<u64, ConfigError> {
    let parsed = match raw.entry("seed") {
        None => return Ok(0),
        Some((Value::Num(x), s)) => (*x >= 0.0 && x.fract() == 0.0)
            .then_some(*x as u64)
            .ok_or(s),
        Some((Value::Word(w), s)) => w.parse::<u64>().map_err(|_| s),
        Some((_, s)) => Err(s),
    };
    parsed.map_err(|s| at(s, "`seed` must be an integer in [0, 2^64)"))
}

fn resolve_instance(raw: &RawConfig, model: Model) -> Result<BanditInstance, ConfigError> {
    match model {
        Model::Bernoulli => {
            let (theta, s) = raw
                .numbers("theta")?
                .ok_or_else(|| ConfigError::General("bernoulli model needs `theta`".into()))?;
            if let Some(bad) = theta.iter().find(|t| !(0.0..=1.0).contains(*t)) {
                return Err(at(
                    s,
                    format!("theta entries must lie in [0, 1], got {bad}"),
                ));
            }
            BanditInstance::bernoulli(theta).map_err(|e| at(s, e.to_string()))
        }
        Model::LinearGaussian => {
            let (value, s) = raw.entry("weights").ok_or_else(|| {
                ConfigError::General("linear-gaussian model needs `weights`".into())
            })?;
            let weights = match value {
                Value::List(rows) => rows.iter().map(number_list).collect::<Option<Vec<_>>>(),
                _ => None,
            }
            .ok_or_else(|| at(s, "`weights` must be a list of per-arm lists"))?;
            let arms = weights.len();
            let (mut noise, ns) = raw.numbers("noise_std")?.ok_or_else(|| {
                ConfigError::General("linear-gaussian model needs `noise_std`".into())
            })?;
            if noise.len() == 1 {
                noise = vec![noise[0]; arms];
            }
            if noise.len() != arms {
                return Err(at(
                    ns,
                    format!("`noise_std` has {} entries for {arms} arms", noise.len()),
                ));
            }
            BanditInstance::linear_gaussian(weights, noise).map_err(|e| at(s, e.to_string()))
        }
    }
}

fn values_from(
    raw: &RawConfig,
    list_key: &str,
    prefix: &str,
    default: Vec<f64>,
) -> Result<Vec<f64>, ConfigError> {
    let range_keys = [
        format!("{prefix}_min"),
        format!("{prefix}_max"),
        format!("{prefix}_step"),
    ];
    let given: Vec<_> = range_keys
        .iter()
        .map(|k| raw.num(k))
        .collect::<Result<_, _>>()?;
    match (raw.numbers(list_key)?, given.iter().any(Option::is_some)) {
        (Some((_, s)), true) => Err(at(
            s,
            format!("`{list_key}` conflicts with `{prefix}_min/max/step`"),
        )),
        (Some((v, _)), false) => Ok(v),
        (None, true) => {
            let (Some((lo, _)), Some((hi, _)), Some((step, s))) = (given[0], given[1], given[2])
            else {
                return Err(ConfigError::General(format!(
                    "`{prefix}_min`, `{prefix}_max` and `{prefix}_step` must be given together"
                )));
            };
            grid_values(lo, hi, step).map_err(|e| at(s, e.to_string()))
        }
        (None, false) => Ok(default),
    }
}

fn resolve_grid(raw: &RawConfig, model: Model) -> Result<GridSpec, ConfigError> {
    let full = match raw.word("grid_preset")? {
        None | Some(("desk", _)) => false,
        Some(("full", _)) => true,
        Some((w, s)) => {
            return Err(at(
                s,
                format!("unknown grid preset `{w}` (expected desk or full)"),
            ))
        }
    };
    let preset = match (model, full) {
        (Model::Bernoulli, false) => GridSpec::desk_bernoulli(),
        (Model::Bernoulli, true) => GridSpec::full_bernoulli(),
        (Model::LinearGaussian, false) => GridSpec::desk_gaussian(),
        (Model::LinearGaussian, true) => GridSpec::full_gaussian(),
    };
    let arm_counts = raw
        .numbers("grid_arms")?
        .map(|(v, s)| {
            v.iter()
                .map(|&x| as_count(x).filter(|&n| n >= 2))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| at(s, "`grid_arms` entries must be integers >= 2"))
        })
        .transpose()?;
    let grid = match preset {
        GridSpec::Bernoulli {
            arms,
            values,
            unique,
        } => GridSpec::Bernoulli {
            arms: arm_counts.unwrap_or(arms),
            values: values_from(raw, "grid_values", "grid", values)?,
            unique: raw.flag("grid_unique")?.unwrap_or(unique),
        },
        GridSpec::LinearGaussian {
            arms,
            dim,
            weight_values,
            sigma_values,
            unique,
        } => {
            let arms = match arm_counts.as_deref() {
                None => arms,
                Some([n]) => *n,
                Some(_) => {
                    return Err(at(
                        &raw.entry("grid_arms").unwrap().1.clone(),
                        "linear-gaussian grids take a single arm count",
                    ))
                }
            };
            GridSpec::LinearGaussian {
                arms,
                dim: match raw.count("grid_dim")? {
                    Some(0) => return Err(ConfigError::General("`grid_dim` must be >= 1".into())),
                    Some(d) => d,
                    None => dim,
                },
                weight_values: values_from(raw, "grid_values", "grid", weight_values)?,
                sigma_values: values_from(raw, "sigma_values", "sigma", sigma_values)?,
                unique: raw.flag("grid_unique")?.unwrap_or(unique),
            }
        }
    };
    if let GridSpec::Bernoulli { values, .. } = &grid {
        if let Some(bad) = values.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return Err(ConfigError::General(format!(
                "grid values must lie in [0, 1], got {bad}"
            )));
        }
    }
    Ok(grid)
}

impl Settings {
    /// The settings as a config file that resolves back to the same values.
    pub fn to_config_text(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| match (k.as_str(), &v) {
                // seeds can exceed f64's exact integer range; keep them verbatim
                ("seed", Value::Word(w)) => format!("{k} = {w}\n"),
                _ => format!("{k} = {v}\n"),
            })
            .collect()
    }

    /// Every resolved key in file order.
    pub fn entries(&self) -> Vec<(String, Value)> {
        let mut lines: Vec<(String, Value)> =
            vec![("model".into(), Value::Word(self.model.name().into()))];
        let nums = |v: &[f64]| Value::List(v.iter().map(|&x| Value::Num(x)).collect());
        let e = &self.experiment;
        if let Some(grid) = &self.grid {
            match grid {
                GridSpec::Bernoulli {
                    arms,
                    values,
                    unique,
                } => {
                    lines.push((
                        "grid_arms".into(),
                        Value::List(arms.iter().map(|&a| Value::Num(a as f64)).collect()),
                    ));
                    lines.push(("grid_values".into(), nums(values)));
                    lines.push(("grid_unique".into(), Value::Word(unique.to_string())));
                }
                GridSpec::LinearGaussian {
                    arms,
                    dim,
                    weight_values,
                    sigma_values,
                    unique,
                } => {
                    lines.push((
                        "grid_arms".into(),
                        Value::List(vec![Value::Num(*arms as f64)]),
                    ));
                    lines.push(("grid_dim".into(), Value::Num(*dim as f64)));
                    lines.push(("grid_values".into(), nums(weight_values)));
                    lines.push(("sigma_values".into(), nums(sigma_values)));
                    lines.push(("grid_unique".into(), Value::Word(unique.to_string())));
                }
            }
        } else {
            match &e.instance {
                BanditInstance::Bernoulli(b) => lines.push(("theta".into(), nums(b.theta()))),
                BanditInstance::LinearGaussian(g) => {
                    lines.push((
                        "weights".into(),
                        Value::List(g.weights().iter().map(|w| nums(w)).collect()),
                    ));
                    lines.push(("noise_std".into(), nums(g.noise_std())));
                }
            }
            lines.push((
                "algorithm".into(),
                Value::List(
                    self.algorithms
                        .iter()
                        .map(|a| Value::Word(a.name().into()))
                        .collect(),
                ),
            ));
        }
        for (key, value) in [
            ("horizon", Value::Num(e.horizon as f64)),
            ("realizations", Value::Num(e.realizations as f64)),
            ("seed", Value::Word(e.seed.to_string())),
            ("mc_samples", Value::Num(e.policy.mc_samples as f64)),
            ("n_scale", Value::Num(e.policy.n_scale)),
            ("p_fa_floor", Value::Num(e.policy.p_fa_floor)),
            ("n_max", Value::Num(e.policy.n_max as f64)),
            ("regret_mode", Value::Word(e.regret_mode.name().into())),
            ("prior_alpha", Value::Num(e.prior.alpha)),
            ("prior_beta", Value::Num(e.prior.beta)),
            ("prior_mean", Value::Num(e.prior.mean)),
            ("prior_scale", Value::Num(e.prior.scale)),
        ] {
            lines.push((key.into(), value));
        }
        if let Some(t) = self.threads {
            lines.push(("threads".into(), Value::Num(t as f64)));
        }
        lines.push(("out".into(), Value::Word(self.out.display().to_string())));
        lines
    }
}
