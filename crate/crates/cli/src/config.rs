//! Flat `key = value` experiment configs.
//!
//! One assignment per line, `#` starts a comment. Command-line flags are
//! applied on top with [`RawConfig::set`] and always win over the file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use isopt_core::grid::DEFAULT_GRID_POINTS;
use isopt_core::{MisScheme, NoiseFamily, NoiseSpec};
use thiserror::Error;

use crate::expr::Expr;
use crate::specs::{parse_f_list, DensitySpec, FSpec, ProposalSpec};

/// Where a value came from, for error messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    Flag,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Line(n) => write!(f, "line {n}"),
            Origin::Flag => f.write_str("command-line override"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("{origin}: unknown key '{key}'")]
    UnknownKey { origin: Origin, key: String },
    #[error("line {line}: key '{key}' already set on line {first}")]
    Duplicate {
        line: usize,
        key: String,
        first: usize,
    },
    #[error("{origin}: field '{field}': {msg}")]
    Field {
        origin: Origin,
        field: String,
        msg: String,
    },
    #[error("estimator '{estimator}' requires field '{field}'")]
    Missing { estimator: String, field: String },
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
}

pub const KEYS: &[&str] = &[
    "estimator",
    "target",
    "targets",
    "proposal",
    "proposal2",
    "proposal3",
    "phi",
    "bank",
    "f",
    "n",
    "budgets",
    "replications",
    "reps",
    "seed",
    "grid_points",
    "mis_weights",
    "noise_family",
    "noise_scale",
    "z_init",
    "t_max",
    "rel_tol",
    "plugin",
    "n_pilot",
    "pilot_proposal",
    "output",
    "runs_output",
];

/// Untyped assignments with their origins.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, (Origin, String)>,
    /// Relative file paths inside values resolve against this directory.
    pub base_dir: PathBuf,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut raw = RawConfig {
            base_dir: PathBuf::from("."),
            ..Default::default()
        };
        for (k, line) in text.lines().enumerate() {
            let n = k + 1;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: n,
                msg: format!("expected 'key = value', got '{body}'"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(ConfigError::Syntax {
                    line: n,
                    msg: "empty key or value".into(),
                });
            }
            if !KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey {
                    origin: Origin::Line(n),
                    key: key.into(),
                });
            }
            if let Some((Origin::Line(first), _)) = raw.entries.get(key) {
                return Err(ConfigError::Duplicate {
                    line: n,
                    key: key.into(),
                    first: *first,
                });
            }
            raw.entries
                .insert(key.into(), (Origin::Line(n), value.into()));
        }
        Ok(raw)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        let mut raw = Self::parse(&text).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        raw.base_dir = path
            .parent()
            .map_or_else(|| PathBuf::from("."), Path::to_path_buf);
        Ok(raw)
    }

    /// Override from the command line.
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<(), ConfigError> {
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey {
                origin: Origin::Flag,
                key: key.into(),
            });
        }
        self.entries
            .insert(key.into(), (Origin::Flag, value.into()));
        Ok(())
    }

    /// `key=value` override as typed on the command line.
    pub fn set_pair(&mut self, pair: &str) -> Result<(), ConfigError> {
        let (k, v) = pair.split_once('=').ok_or_else(|| ConfigError::Field {
            origin: Origin::Flag,
            field: pair.into(),
            msg: "expected key=value".into(),
        })?;
        self.set(k.trim(), v.trim())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    fn typed<T>(
        &self,
        key: &str,
        parse: impl FnOnce(&str) -> Result<T, String>,
    ) -> Result<Option<T>, ConfigError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((origin, v)) => parse(v).map(Some).map_err(|msg| ConfigError::Field {
                origin: *origin,
                field: key.into(),
                msg,
            }),
        }
    }

    fn expr<T>(
        &self,
        key: &str,
        parse: impl FnOnce(&Expr) -> Result<T, String>,
    ) -> Result<Option<T>, ConfigError> {
        self.typed(key, |v| Expr::parse(v).and_then(|e| parse(&e)))
    }
}

fn from_str<T: FromStr>(v: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    v.parse::<T>().map_err(|e| format!("'{v}': {e}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    Mc,
    Is,
    Z,
    Snis,
    Ris,
    Umbrella,
    UmbrellaIterative,
    Bridge,
    BridgeIterative,
    Is2q,
    Snis2q,
    Snis3q,
    Mis,
    NoisyZ,
    NoisyIs,
    NoisySnis,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 16] = [
        EstimatorKind::Mc,
        EstimatorKind::Is,
        EstimatorKind::Z,
        EstimatorKind::Snis,
        EstimatorKind::Ris,
        EstimatorKind::Umbrella,
        EstimatorKind::UmbrellaIterative,
        EstimatorKind::Bridge,
        EstimatorKind::BridgeIterative,
        EstimatorKind::Is2q,
        EstimatorKind::Snis2q,
        EstimatorKind::Snis3q,
        EstimatorKind::Mis,
        EstimatorKind::NoisyZ,
        EstimatorKind::NoisyIs,
        EstimatorKind::NoisySnis,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Mc => "mc",
            EstimatorKind::Is => "is",
            EstimatorKind::Z => "z",
            EstimatorKind::Snis => "snis",
            EstimatorKind::Ris => "ris",
            EstimatorKind::Umbrella => "umbrella",
            EstimatorKind::UmbrellaIterative => "umbrella_iterative",
            EstimatorKind::Bridge => "bridge",
            EstimatorKind::BridgeIterative => "bridge_iterative",
            EstimatorKind::Is2q => "is2q",
            EstimatorKind::Snis2q => "snis2q",
            EstimatorKind::Snis3q => "snis3q",
            EstimatorKind::Mis => "mis",
            EstimatorKind::NoisyZ => "noisy_z",
            EstimatorKind::NoisyIs => "noisy_is",
            EstimatorKind::NoisySnis => "noisy_snis",
        }
    }

    /// Whether the estimand is the normalizing constant rather than `I`.
    pub fn estimates_z(self) -> bool {
        use EstimatorKind::*;
        matches!(
            self,
            Z | Ris | Umbrella | UmbrellaIterative | Bridge | BridgeIterative | NoisyZ
        )
    }

    pub fn is_noisy(self) -> bool {
        matches!(
            self,
            EstimatorKind::NoisyZ | EstimatorKind::NoisyIs | EstimatorKind::NoisySnis
        )
    }

    /// Number of budget branches.
    pub fn branches(self) -> usize {
        use EstimatorKind::*;
        match self {
            Bridge | BridgeIterative | Is2q | Snis2q => 2,
            Snis3q => 3,
            _ => 1,
        }
    }

    fn required(self) -> &'static [&'static str] {
        use EstimatorKind::*;
        match self {
            Mc | BridgeIterative => &[],
            Ris => &["phi"],
            Umbrella | UmbrellaIterative | Bridge => &["proposal", "phi"],
            Mis => &["bank"],
            _ => &["proposal"],
        }
    }
}

impl FromStr for EstimatorKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        EstimatorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = EstimatorKind::ALL.iter().map(|k| k.name()).collect();
                format!(
                    "unknown estimator '{s}'; expected one of {}",
                    names.join(", ")
                )
            })
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How unknown constants in optimal-proposal formulas are filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PluginMode {
    /// Quadrature truth.
    Oracle,
    /// One SNIS pilot run of `n_pilot` draws.
    Pilot,
}

impl FromStr for PluginMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "oracle" => Ok(PluginMode::Oracle),
            "pilot" => Ok(PluginMode::Pilot),
            _ => Err(format!(
                "unknown plug-in mode '{s}'; expected oracle or pilot"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub estimator: EstimatorKind,
    pub target: DensitySpec,
    pub proposal: Option<ProposalSpec>,
    pub proposal2: Option<ProposalSpec>,
    pub proposal3: Option<ProposalSpec>,
    pub phi: Option<ProposalSpec>,
    pub bank: Vec<DensitySpec>,
    pub f: Vec<FSpec>,
    /// Total sample budget; per-proposal count for `mis`.
    pub n: usize,
    pub budgets: Option<Vec<usize>>,
    pub replications: usize,
    pub seed: u64,
    pub grid_points: usize,
    pub mis_weights: MisScheme,
    pub noise: NoiseSpec,
    pub z_init: f64,
    pub t_max: usize,
    pub rel_tol: f64,
    pub plugin: PluginMode,
    pub n_pilot: Option<usize>,
    pub pilot_proposal: Option<DensitySpec>,
    pub output: Option<PathBuf>,
    pub runs_output: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Benchmark defaults: target `N(-1, 1)`, `f(θ) = θ`.
    pub fn benchmark(estimator: EstimatorKind) -> Self {
        Self {
            estimator,
            target: DensitySpec::Gaussian {
                mu: -1.0,
                sigma: 1.0,
            },
            proposal: None,
            proposal2: None,
            proposal3: None,
            phi: None,
            bank: Vec::new(),
            f: vec![FSpec::Theta],
            n: 1000,
            budgets: None,
            replications: 1000,
            seed: 0,
            grid_points: DEFAULT_GRID_POINTS,
            mis_weights: MisScheme::FullDm,
            noise: NoiseSpec::none(),
            z_init: 1.0,
            t_max: 20,
            rel_tol: isopt_core::estimators::DEFAULT_REL_TOL,
            plugin: PluginMode::Oracle,
            n_pilot: None,
            pilot_proposal: None,
            output: None,
            runs_output: None,
        }
    }

    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigError> {
        let base = raw.base_dir.as_path();
        let estimator = raw
            .typed("estimator", from_str::<EstimatorKind>)?
            .ok_or_else(|| ConfigError::Missing {
                estimator: "?".into(),
                field: "estimator".into(),
            })?;
        let mut c = Self::benchmark(estimator);
        for field in estimator.required() {
            if raw.get(field).is_none() {
                return Err(ConfigError::Missing {
                    estimator: estimator.name().into(),
                    field: (*field).into(),
                });
            }
        }
        let proposal = |key| raw.expr(key, |e| ProposalSpec::from_expr(e, base));
        if let Some(t) = raw.expr("target", |e| DensitySpec::from_expr(e, base))? {
            c.target = t;
        }
        c.proposal = proposal("proposal")?;
        c.proposal2 = proposal("proposal2")?;
        c.proposal3 = proposal("proposal3")?;
        c.phi = proposal("phi")?;
        if let Some(b) = raw.expr("bank", |e| {
            e.list()?
                .iter()
                .map(|d| DensitySpec::from_expr(d, base))
                .collect::<Result<Vec<_>, _>>()
        })? {
            c.bank = b;
        }
        if let Some(f) = raw.expr("f", parse_f_list)? {
            c.f = f;
        }
        if let Some(n) = raw.typed("n", from_str::<usize>)? {
            c.n = n;
        }
        c.budgets = raw.typed("budgets", |v| {
            v.split(',').map(|s| from_str::<usize>(s.trim())).collect()
        })?;
        let reps = raw
            .typed("replications", from_str::<usize>)?
            .or(raw.typed("reps", from_str::<usize>)?);
        if let Some(r) = reps {
            c.replications = r;
        }
        if let Some(s) = raw.typed("seed", from_str::<u64>)? {
            c.seed = s;
        }
        if let Some(g) = raw.typed("grid_points", from_str::<usize>)? {
            c.grid_points = g;
        }
        if let Some(m) = raw.typed("mis_weights", from_str::<MisScheme>)? {
            c.mis_weights = m;
        }
        let family = raw
            .typed("noise_family", from_str::<NoiseFamily>)?
            .unwrap_or_default();
        let scale = raw.typed("noise_scale", from_str::<f64>)?.unwrap_or(0.0);
        c.noise = NoiseSpec::new(family, scale).map_err(|e| ConfigError::Field {
            origin: Origin::Flag,
            field: "noise_scale".into(),
            msg: e.to_string(),
        })?;
        if let Some(z) = raw.typed("z_init", from_str::<f64>)? {
            c.z_init = z;
        }
        if let Some(t) = raw.typed("t_max", from_str::<usize>)? {
            c.t_max = t;
        }
        if let Some(t) = raw.typed("rel_tol", from_str::<f64>)? {
            c.rel_tol = t;
        }
        if let Some(p) = raw.typed("plugin", from_str::<PluginMode>)? {
            c.plugin = p;
        }
        c.n_pilot = raw.typed("n_pilot", from_str::<usize>)?;
        c.pilot_proposal = raw.expr("pilot_proposal", |e| DensitySpec::from_expr(e, base))?;
        c.output = raw.typed("output", |v| Ok(PathBuf::from(v)))?;
        c.runs_output = raw.typed("runs_output", |v| Ok(PathBuf::from(v)))?;
        c.validate(raw)?;
        Ok(c)
    }

    fn validate(&self, raw: &RawConfig) -> Result<(), ConfigError> {
        let origin = |key: &str| raw.entries.get(key).map_or(Origin::Flag, |(o, _)| *o);
        let bad = |key: &str, msg: String| {
            Err(ConfigError::Field {
                origin: origin(key),
                field: key.into(),
                msg,
            })
        };
        if self.replications == 0 {
            return bad(
                if raw.get("reps").is_some() {
                    "reps"
                } else {
                    "replications"
                },
                "must be at least 1".into(),
            );
        }
        if self.n == 0 {
            return bad("n", "must be at least 1".into());
        }
        if self.grid_points < 2 {
            return bad("grid_points", "must be at least 2".into());
        }
        if let Some(b) = &self.budgets {
            if b.len() != self.estimator.branches() {
                return bad(
                    "budgets",
                    format!(
                        "{} takes {} budgets, got {}",
                        self.estimator,
                        self.estimator.branches(),
                        b.len()
                    ),
                );
            }
        }
        if self.f.len() != 1 {
            return bad("f", "estimators take a single scalar function".into());
        }
        if self.estimator == EstimatorKind::Mis && self.bank.is_empty() {
            return bad("bank", "needs at least one proposal".into());
        }
        if !self.estimator.is_noisy() && self.noise.scale != 0.0 {
            return bad(
                "noise_scale",
                format!("estimator {} has no noise model", self.estimator),
            );
        }
        if !(self.rel_tol > 0.0) {
            return bad("rel_tol", "must be positive".into());
        }
        Ok(())
    }

    /// Per-branch sample counts.
    pub fn branch_budgets(&self) -> Vec<usize> {
        self.budgets.clone().unwrap_or_else(|| {
            isopt_core::estimators::split_budget(self.n, self.estimator.branches())
        })
    }

    pub fn total_budget(&self) -> usize {
        match self.estimator {
            EstimatorKind::Mis => self.n * self.bank.len(),
            _ => self.branch_budgets().iter().sum(),
        }
    }
}
