//! Experiment configuration: a TOML document naming the environment, the
//! interaction model, the update weights, the initial state and the claims a
//! Monte Carlo batch should check.
//!
//! ```toml
//! [schedule]
//! n = 3
//! frames = ["triangle.graph"]       # or `manifest = "..."`, or `inline = ["n 3\n0 1 -\n..."]`
//!
//! [interaction]
//! kind = "per_arc_bernoulli"
//! p = 0.5
//!
//! [params]
//! alpha = 0.1
//! beta = 0.1
//! b = 0.5
//! d = 0.5
//!
//! [initial]
//! kind = "uniform"                  # or kind = "explicit", values = [...]
//!
//! [run]
//! horizon = 100000
//! seed = 1
//!
//! [[claims]]
//! name = "converges"
//! ```
//!
//! The weights, attention means and `n` have no defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{DynamicsError, Regime, UpdateParams, DEFAULT_CEILING};
use crate::environment::{ArcScope, GraphSchedule, ScheduleError, ScheduleManifest, TotalGraph};
use crate::graph::{BalanceMode, GraphError, SignedDigraph};
use crate::sampler::{AssumptionStatus, AttentionProcess, InteractionModel};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Semantic(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

impl From<GraphError> for ConfigError {
    fn from(e: GraphError) -> Self {
        ConfigError::Schedule(ScheduleError::Graph(e))
    }
}

/// Claims a batch can check on every run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Claim {
    /// The run converged.
    Converges,
    /// The run converged and all `|limit|` agree.
    AbsoluteConsensus,
    /// The limits follow the balance split of the total graph (or are all
    /// zero when it is not balanced).
    LimitPattern,
    /// `M(t)` hit the ceiling.
    Diverges,
    /// `M(t)` never hit the ceiling.
    Bounded,
    /// If `M(t)` diverged, every node passed `no_survivor_factor · M(0)`.
    NoSurvivor,
}

impl fmt::Display for Claim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Claim::Converges => "converges",
            Claim::AbsoluteConsensus => "absolute_consensus",
            Claim::LimitPattern => "limit_pattern",
            Claim::Diverges => "diverges",
            Claim::Bounded => "bounded",
            Claim::NoSurvivor => "no_survivor",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClaimSpec {
    pub name: Claim,
    /// Fraction of runs that must pass; 1 means every run.
    #[serde(default = "one")]
    pub min_pass_fraction: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frames: Option<Vec<PathBuf>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inline: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    pub alpha: f64,
    pub beta: f64,
    pub b: f64,
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    Explicit { values: Vec<f64> },
    Uniform {
        #[serde(default = "minus_one")]
        low: f64,
        #[serde(default = "one")]
        high: f64,
    },
}

fn minus_one() -> f64 {
    -1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub horizon: u64,
    pub seed: u64,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default = "default_stride")]
    pub probe_stride: u64,
    /// Stop a run once it has been stable for the convergence window.
    #[serde(default = "yes")]
    pub stop_when_stable: bool,
    #[serde(default)]
    pub step_log_cap: usize,
    /// Debug override of the attention draws, cycled: `[[B, D], ...]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forced_attention: Option<Vec<[bool; 2]>>,
}

fn default_runs() -> usize {
    200
}

fn default_stride() -> u64 {
    1
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub eps_conv: f64,
    pub window: u64,
    pub eps_cluster: f64,
    pub ceiling: f64,
    pub no_survivor_factor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eps_conv: 1e-9,
            window: 1000,
            eps_cluster: 1e-6,
            ceiling: DEFAULT_CEILING,
            no_survivor_factor: 1e6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub balance_mode: BalanceMode,
    pub schedule: ScheduleSpec,
    pub interaction: InteractionModel,
    pub params: ParamsSpec,
    pub initial: InitialSpec,
    pub run: RunSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub claims: Vec<ClaimSpec>,
}

/// Where referenced graph and manifest files come from.
pub trait SourceLoader {
    fn load(&self, path: &Path) -> io::Result<String>;
}

/// Reads files relative to a base directory.
pub struct FsLoader {
    pub base: PathBuf,
}

impl SourceLoader for FsLoader {
    fn load(&self, path: &Path) -> io::Result<String> {
        std::fs::read_to_string(self.base.join(path))
    }
}

/// In-memory files, keyed by path.
pub struct MapLoader(pub BTreeMap<PathBuf, String>);

impl SourceLoader for MapLoader {
    fn load(&self, path: &Path) -> io::Result<String> {
        self.0
            .get(path)
            .cloned()
            .ok_or_else(|| io::Error::new(io::ErrorKind::NotFound, format!("{} not bundled", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    Explicit(Vec<f64>),
    Uniform { low: f64, high: f64 },
}

/// A validated config with every file resolved.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub schedule: GraphSchedule,
    /// `None` when the schedule is not sign consistent.
    pub total_graph: Option<TotalGraph>,
    pub model: InteractionModel,
    pub attention: AttentionProcess,
    pub initial: InitialState,
    pub forced_attention: Option<Vec<(bool, bool)>>,
    pub claims: Vec<ClaimSpec>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    /// Parses `path` and resolves its references relative to its directory.
    pub fn load(path: &Path) -> Result<Experiment, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.to_owned(), source })?;
        let base = path.parent().map(Path::to_owned).unwrap_or_default();
        Self::from_toml(&text)?.resolve(&FsLoader { base })
    }

    pub fn resolve(&self, loader: &dyn SourceLoader) -> Result<Experiment, ConfigError> {
        let schedule = self.load_schedule(loader)?;
        let n = schedule.node_count();
        if n != self.schedule.n {
            return Err(ConfigError::Semantic(format!(
                "schedule.n = {} but the graphs have {n} nodes",
                self.schedule.n
            )));
        }
        self.interaction.validate().map_err(|e| ConfigError::Semantic(e.to_string()))?;
        let attention = AttentionProcess::new(self.params.b, self.params.d)
            .map_err(|e| ConfigError::Semantic(e.to_string()))?;
        UpdateParams::new(self.params.alpha, self.params.beta, attention)
            .map_err(|e| ConfigError::Semantic(e.to_string()))?;
        if self.run.horizon == 0 {
            return Err(ConfigError::Semantic("run.horizon must be at least 1".into()));
        }
        if self.run.runs == 0 {
            return Err(ConfigError::Semantic("run.runs must be at least 1".into()));
        }
        if self.run.probe_stride == 0 {
            return Err(ConfigError::Semantic("run.probe_stride must be at least 1".into()));
        }
        let tol = &self.tolerances;
        if !(tol.eps_conv > 0.0 && tol.eps_cluster > 0.0 && tol.ceiling > 0.0 && tol.no_survivor_factor > 0.0)
            || tol.window == 0
        {
            return Err(ConfigError::Semantic("tolerances must be positive".into()));
        }
        for c in &self.claims {
            if !(0.0..=1.0).contains(&c.min_pass_fraction) {
                return Err(ConfigError::Semantic(format!(
                    "claim {}: min_pass_fraction {} outside [0, 1]",
                    c.name, c.min_pass_fraction
                )));
            }
        }
        let initial = match &self.initial {
            InitialSpec::Explicit { values } => {
                if values.len() != n {
                    return Err(ConfigError::Semantic(format!(
                        "initial state has {} entries, network has {n} nodes",
                        values.len()
                    )));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(ConfigError::Semantic("initial state must be finite".into()));
                }
                InitialState::Explicit(values.clone())
            }
            InitialSpec::Uniform { low, high } => {
                if !(low.is_finite() && high.is_finite() && low < high) {
                    return Err(ConfigError::Semantic(format!("empty uniform range [{low}, {high})")));
                }
                InitialState::Uniform { low: *low, high: *high }
            }
        };
        let forced_attention = match &self.run.forced_attention {
            Some(seq) if seq.is_empty() => {
                return Err(ConfigError::Semantic("run.forced_attention is empty".into()))
            }
            Some(seq) => Some(seq.iter().map(|[b, d]| (*b, *d)).collect()),
            None => None,
        };
        Ok(Experiment {
            config: self.clone(),
            total_graph: schedule.total_graph().ok(),
            schedule,
            model: self.interaction.clone(),
            attention,
            initial,
            forced_attention,
            claims: self.claims.clone(),
        })
    }

    fn load_schedule(&self, loader: &dyn SourceLoader) -> Result<GraphSchedule, ConfigError> {
        let spec = &self.schedule;
        let read = |path: &Path| {
            loader.load(path).map_err(|source| ConfigError::Io { path: path.to_owned(), source })
        };
        let parse = |text: &str, frame: usize| {
            SignedDigraph::parse_text(text).map_err(|source| ScheduleError::Frame { frame, source })
        };
        let frames = match (&spec.frames, &spec.manifest, &spec.inline) {
            (Some(paths), None, None) => paths
                .iter()
                .enumerate()
                .map(|(i, p)| parse(&read(p)?, i).map_err(ConfigError::from))
                .collect::<Result<Vec<_>, _>>()?,
            (None, Some(path), None) => {
                let manifest: ScheduleManifest = toml::from_str(&read(path)?)
                    .map_err(|e| ConfigError::Parse(format!("{}: {e}", path.display())))?;
                if manifest.period != manifest.frames.len() {
                    return Err(ScheduleError::PeriodMismatch {
                        declared: manifest.period,
                        listed: manifest.frames.len(),
                    }
                    .into());
                }
                let dir = path.parent().unwrap_or_else(|| Path::new(""));
                manifest
                    .frames
                    .iter()
                    .enumerate()
                    .map(|(i, p)| parse(&read(&dir.join(p))?, i).map_err(ConfigError::from))
                    .collect::<Result<Vec<_>, _>>()?
            }
            (None, None, Some(texts)) => texts
                .iter()
                .enumerate()
                .map(|(i, t)| parse(t, i).map_err(ConfigError::from))
                .collect::<Result<Vec<_>, _>>()?,
            _ => {
                return Err(ConfigError::Semantic(
                    "schedule needs exactly one of `frames`, `manifest` or `inline`".into(),
                ))
            }
        };
        Ok(GraphSchedule::new(frames)?)
    }
}

impl Experiment {
    pub fn node_count(&self) -> usize {
        self.schedule.node_count()
    }

    pub fn params<S: Scalar>(&self) -> Result<UpdateParams<S>, DynamicsError> {
        UpdateParams::new(
            S::from_f64_lossy(self.config.params.alpha),
            S::from_f64_lossy(self.config.params.beta),
            self.attention,
        )
    }

    pub fn regime(&self) -> Regime {
        self.params::<f64>().expect("validated on resolve").regime(self.node_count())
    }

    pub fn with_beta(&self, beta: f64) -> Result<Experiment, ConfigError> {
        UpdateParams::new(self.config.params.alpha, beta, self.attention)
            .map_err(|e| ConfigError::Semantic(e.to_string()))?;
        let mut out = self.clone();
        out.config.params.beta = beta;
        Ok(out)
    }

    pub fn with_claims(mut self, claims: Vec<ClaimSpec>) -> Experiment {
        self.config.claims = claims.clone();
        self.claims = claims;
        self
    }
}

/// Which hypotheses hold for a resolved experiment and which results apply.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub n: usize,
    pub period: usize,
    pub a1: AssumptionStatus,
    /// Smallest window making the union graph strongly connected.
    pub a2_window: Option<usize>,
    pub a3_sign_consistent: bool,
    pub a4_window: Option<usize>,
    pub a5_window: Option<usize>,
    pub a6: AssumptionStatus,
    pub total_has_negative_arc: bool,
    pub negative_arcs_recurrent: bool,
    pub strongly_balanced: Option<bool>,
    pub regime: Regime,
    pub convergence_applies: bool,
    pub limit_pattern_applies: bool,
    pub divergence_applies: bool,
    pub no_survivor_applies: bool,
    pub warnings: Vec<String>,
}

pub fn validate_config(exp: &Experiment) -> ValidationReport {
    let sched = &exp.schedule;
    let assumptions = exp.model.verify_assumptions(sched);
    let a2_window = sched.minimal_connectivity_window(ArcScope::All);
    let a4_window = sched.minimal_connectivity_window(ArcScope::PositiveOnly);
    let a5_window = sched.minimal_connectivity_window(ArcScope::NegativeOnly);
    let a3 = exp.total_graph.is_some();
    let regime = exp.regime();
    let total_has_negative_arc = exp.total_graph.as_ref().is_some_and(|t| t.graph.has_negative_arc());
    let negative_arcs_recurrent = exp.total_graph.as_ref().is_some_and(|t| t.all_negative_arcs_recurrent());
    let strongly_balanced = exp
        .total_graph
        .as_ref()
        .map(|t| t.graph.is_strongly_balanced(exp.config.balance_mode));

    let a1 = assumptions.a1.holds();
    let a6 = assumptions.a6.holds();
    let convergence_applies = a1 && a2_window.is_some() && regime.contractive;
    let limit_pattern_applies = convergence_applies && a3 && total_has_negative_arc && negative_arcs_recurrent;
    let beta_above = exp.config.params.beta > regime.divergence_beta_threshold;
    let divergence_applies = a1
        && a4_window.is_some()
        && a5_window.is_some()
        && a6
        && regime.divergence_candidate
        && beta_above;
    let no_survivor_applies = a1 && a2_window.is_some() && a6;

    let mut warnings = Vec::new();
    for spec in &exp.claims {
        match spec.name {
            Claim::Converges | Claim::AbsoluteConsensus if !convergence_applies => {
                warnings.push(format!(
                    "claim {}: convergence is only guaranteed under A1, A2 and alpha + beta < 1/(n-1)",
                    spec.name
                ));
            }
            Claim::LimitPattern => {
                if !a3 {
                    warnings.push("claim limit_pattern: A3 violated, the schedule is not sign consistent".into());
                } else if !total_has_negative_arc {
                    warnings.push("claim limit_pattern: the total graph has no negative arc".into());
                }
                if !convergence_applies {
                    warnings.push("claim limit_pattern: convergence hypotheses (A1, A2, regime) not met".into());
                }
            }
            Claim::Diverges if !divergence_applies => {
                warnings.push(format!(
                    "claim diverges: needs A1, A4, A5, A6, alpha <= {} and beta > {}",
                    regime.divergence_alpha_bound, regime.divergence_beta_threshold
                ));
            }
            Claim::NoSurvivor if !no_survivor_applies => {
                warnings.push("claim no_survivor: needs A1, A2 and A6".into());
            }
            Claim::Bounded if !regime.nonexpansive => {
                warnings.push("claim bounded: alpha + beta exceeds 1/(n-1), M(t) may grow".into());
            }
            _ => {}
        }
    }

    ValidationReport {
        n: sched.node_count(),
        period: sched.period(),
        a1: assumptions.a1,
        a2_window,
        a3_sign_consistent: a3,
        a4_window,
        a5_window,
        a6: assumptions.a6,
        total_has_negative_arc,
        negative_arcs_recurrent,
        strongly_balanced,
        regime,
        convergence_applies,
        limit_pattern_applies,
        divergence_applies,
        no_survivor_applies,
        warnings,
    }
}
