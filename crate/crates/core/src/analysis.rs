//! Verdicts on finished trajectories and Monte Carlo aggregation.
//!
//! "Almost surely" claims are checked by running many independently seeded
//! trajectories and requiring every one of them (or a configured fraction)
//! to pass. Fractions carry Wilson 95% intervals.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::config::{Claim, Experiment, ExperimentConfig, InitialState};
use crate::dynamics::{run_trajectory, Regime, RunOptions, Stability, StateVector, Termination, TrajectoryRecord};
use crate::environment::TotalGraph;
use crate::graph::{BalanceMode, NodeId};
use crate::sampler::{RngStream, StreamPurpose};
use crate::scalar::Scalar;

/// Absolute slack on `y* ≤ ‖s(0)‖₁`.
pub const Y_BOUND_SLACK: f64 = 1e-9;

const WILSON_Z: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("node {node} with limit {value} is neither near +y*, -y* nor 0 (y* = {y_star})")]
    InconsistentLimits { node: usize, value: f64, y_star: f64 },
    #[error("hypothesis not met: {0}")]
    HypothesisViolation(String),
    #[error("invalid sweep grid: {0}")]
    InvalidGrid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict<S> {
    /// Every node stayed within `eps` over the final window. `settled_at` is
    /// the first probe time from which all later probes stay within `eps` of
    /// the limits.
    Converged { limits: StateVector<S>, settled_at: u64 },
    Diverged { peak: Option<S>, step: u64 },
    Undecided { reason: String },
}

impl<S> Verdict<S> {
    pub fn kind(&self) -> &'static str {
        match self {
            Verdict::Converged { .. } => "converged",
            Verdict::Diverged { .. } => "diverged",
            Verdict::Undecided { .. } => "undecided",
        }
    }
}

pub fn detect_convergence<S: Scalar>(traj: &TrajectoryRecord<S>, eps: f64, window: u64) -> Verdict<S> {
    if let Termination::Diverged { t, peak } = traj.termination {
        return Verdict::Diverged { peak, step: t };
    }
    if traj.steps < window {
        return Verdict::Undecided {
            reason: format!("only {} steps executed, window is {window}", traj.steps),
        };
    }
    let eps = S::from_f64_lossy(eps);
    let start = traj.steps - window;
    let tail: Vec<&StateVector<S>> =
        traj.probes.iter().filter(|p| p.t >= start).map(|p| &p.state).collect();
    let n = traj.final_state.len();
    let stable = (0..n).all(|i| {
        let (lo, hi) = tail.iter().fold((S::infinity(), S::neg_infinity()), |(lo, hi), s| {
            let v = s.values()[i];
            (lo.min(v), hi.max(v))
        });
        hi - lo < eps
    });
    if !stable {
        return Verdict::Undecided { reason: "horizon".into() };
    }
    let limits = traj.final_state.clone();
    let near = |s: &StateVector<S>| {
        s.values().iter().zip(limits.values()).all(|(a, b)| (*a - *b).abs() < eps)
    };
    let settled_at = traj
        .probes
        .iter()
        .rev()
        .take_while(|p| near(&p.state))
        .last()
        .map_or(traj.steps, |p| p.t);
    Verdict::Converged { limits, settled_at }
}

/// Whether all `|s_i|` agree with `M* = max_i |s_i|` to within `eps`.
pub fn check_absolute_consensus<S: Scalar>(limits: &StateVector<S>, eps: f64) -> (bool, S) {
    let m_star = limits.max_abs();
    let eps = S::from_f64_lossy(eps);
    let holds = limits.values().iter().all(|v| (v.abs() - m_star).abs() < eps);
    (holds, m_star)
}

/// Limits sorted into `+y*`, `-y*` and `0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterClassification<S> {
    pub plus_set: BTreeSet<NodeId>,
    pub minus_set: BTreeSet<NodeId>,
    pub zero_set: BTreeSet<NodeId>,
    pub y_star: S,
}

pub fn classify_limits<S: Scalar>(
    limits: &StateVector<S>,
    eps: f64,
) -> Result<ClusterClassification<S>, AnalysisError> {
    let y_star = limits.max_abs();
    let tol = S::from_f64_lossy(eps);
    let mut out = ClusterClassification {
        plus_set: BTreeSet::new(),
        minus_set: BTreeSet::new(),
        zero_set: BTreeSet::new(),
        y_star,
    };
    if y_star < tol {
        out.zero_set = (0..limits.len()).map(NodeId).collect();
        return Ok(out);
    }
    for (i, &v) in limits.values().iter().enumerate() {
        if (v - y_star).abs() < tol {
            out.plus_set.insert(NodeId(i));
        } else if (v + y_star).abs() < tol {
            out.minus_set.insert(NodeId(i));
        } else {
            return Err(AnalysisError::InconsistentLimits {
                node: i,
                value: v.to_f64_lossy(),
                y_star: y_star.to_f64_lossy(),
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitPatternCheck {
    pub strongly_balanced: bool,
    /// Balanced case: `{plus, minus}` equals the balance split.
    pub sides_match: Option<bool>,
    /// Balanced case: `y* ≤ ‖s(0)‖₁`.
    pub y_bound_holds: Option<bool>,
    /// Unbalanced case: every limit is zero.
    pub all_zero: Option<bool>,
}

impl LimitPatternCheck {
    pub fn passed(&self) -> bool {
        if self.strongly_balanced {
            self.sides_match == Some(true) && self.y_bound_holds == Some(true)
        } else {
            self.all_zero == Some(true)
        }
    }
}

/// Checks the limit pattern against the total graph: bipolar split along
/// the balance sides when strongly balanced, all-zero otherwise.
pub fn check_theorem2<S: Scalar>(
    classification: &ClusterClassification<S>,
    total: &TotalGraph,
    s0: &StateVector<S>,
    mode: BalanceMode,
) -> Result<LimitPatternCheck, AnalysisError> {
    if !total.graph.has_negative_arc() {
        return Err(AnalysisError::HypothesisViolation("the total graph has no negative arc".into()));
    }
    if !total.all_negative_arcs_recurrent() {
        return Err(AnalysisError::HypothesisViolation("some negative arc does not recur".into()));
    }
    Ok(match total.graph.strong_balance_bipartition(mode) {
        Some(split) => LimitPatternCheck {
            strongly_balanced: true,
            sides_match: Some(
                classification.zero_set.is_empty()
                    && split.same_split(&classification.plus_set, &classification.minus_set),
            ),
            y_bound_holds: Some(
                classification.y_star.to_f64_lossy() <= s0.l1_norm().to_f64_lossy() + Y_BOUND_SLACK,
            ),
            all_zero: None,
        },
        None => LimitPatternCheck {
            strongly_balanced: false,
            sides_match: None,
            y_bound_holds: None,
            all_zero: Some(classification.zero_set.len() == s0.len()),
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoSurvivorCheck {
    pub max_diverged: bool,
    pub per_node_exceeded: Vec<bool>,
}

impl NoSurvivorCheck {
    /// A diverging maximum drags every node past the threshold.
    pub fn holds(&self) -> bool {
        !self.max_diverged || self.per_node_exceeded.iter().all(|&x| x)
    }
}

pub fn no_survivor_check<S: Scalar>(traj: &TrajectoryRecord<S>, threshold: f64) -> NoSurvivorCheck {
    let threshold = S::from_f64_lossy(threshold);
    NoSurvivorCheck {
        max_diverged: traj.diverged(),
        per_node_exceeded: traj.peak_abs.iter().map(|&p| p >= threshold).collect(),
    }
}

/// Wilson score interval at 95% for `successes` out of `trials`.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let low = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let high = if successes == trials { 1.0 } else { (centre + half).min(1.0) };
    (low, high)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fraction {
    pub count: usize,
    pub runs: usize,
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Fraction {
    pub fn new(count: usize, runs: usize) -> Self {
        let (ci_low, ci_high) = wilson_interval(count, runs);
        let value = if runs == 0 { 0.0 } else { count as f64 / runs as f64 };
        Fraction { count, runs, value, ci_low, ci_high }
    }

    pub fn width(&self) -> f64 {
        self.ci_high - self.ci_low
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub run: u64,
    pub verdict: &'static str,
    pub steps: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub settled_at: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub limits: Option<Vec<f64>>,
    pub initial_max_abs: f64,
    pub claims: BTreeMap<Claim, bool>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClaimTally {
    pub passed: Fraction,
    pub required_fraction: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Spread {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

impl Spread {
    fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(Spread { min, mean: values.iter().sum::<f64>() / values.len() as f64, max })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub converged: Fraction,
    pub diverged: Fraction,
    pub undecided: Fraction,
    /// Runs that could not be executed at all.
    pub errored: Fraction,
    pub claims: BTreeMap<Claim, ClaimTally>,
    pub settle_time: Option<Spread>,
    pub y_star: Option<Spread>,
    pub error_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloReport {
    pub config: ExperimentConfig,
    pub runs: usize,
    pub base_seed: u64,
    pub regime: Regime,
    /// Excluded from determinism comparisons.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
    pub aggregate: Aggregate,
    pub per_run: Vec<RunSummary>,
    pub all_claims_ok: bool,
}

impl MonteCarloReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

/// Initial state of run `run`: the explicit vector, or uniform draws from
/// the `(seed, run, 0, InitialState)` stream.
pub fn initial_state<S: Scalar>(exp: &Experiment, base_seed: u64, run: u64) -> StateVector<S> {
    match &exp.initial {
        InitialState::Explicit(values) => StateVector::from_f64(values).expect("validated finite"),
        InitialState::Uniform { low, high } => {
            let mut rng = RngStream::new(base_seed, run, 0, StreamPurpose::InitialState).rng();
            let values: Vec<f64> =
                (0..exp.schedule.node_count()).map(|_| rng.gen_range(*low..*high)).collect();
            StateVector::from_f64(&values).expect("finite draws")
        }
    }
}

pub fn run_options<S: Scalar>(exp: &Experiment, base_seed: u64, run: u64) -> RunOptions<S> {
    let tol = &exp.config.tolerances;
    RunOptions {
        horizon: exp.config.run.horizon,
        seed: base_seed,
        run,
        probe_stride: exp.config.run.probe_stride,
        ceiling: S::from_f64_lossy(tol.ceiling),
        stop_when_stable: exp
            .config
            .run
            .stop_when_stable
            .then_some(Stability { eps: tol.eps_conv, window: tol.window }),
        forced_attention: exp.forced_attention.clone(),
        step_log_cap: exp.config.run.step_log_cap,
    }
}

/// Result of one seeded run, before aggregation.
pub struct RunOutcome<S> {
    pub record: Option<TrajectoryRecord<S>>,
    pub summary: RunSummary,
}

pub fn execute_run<S: Scalar>(exp: &Experiment, base_seed: u64, run: u64) -> RunOutcome<S> {
    let s0 = initial_state::<S>(exp, base_seed, run);
    let mut summary = RunSummary {
        run,
        verdict: "error",
        steps: 0,
        settled_at: None,
        y_star: None,
        limits: None,
        initial_max_abs: s0.max_abs().to_f64_lossy(),
        claims: BTreeMap::new(),
        errors: Vec::new(),
    };
    let params = match exp.params::<S>() {
        Ok(p) => p,
        Err(e) => {
            summary.errors.push(e.to_string());
            summary.claims = exp.claims.iter().map(|c| (c.name, false)).collect();
            return RunOutcome { record: None, summary };
        }
    };
    let opts = run_options::<S>(exp, base_seed, run);
    let record = match run_trajectory(&exp.schedule, &exp.model, &params, &s0, &opts) {
        Ok(r) => r,
        Err(e) => {
            summary.errors.push(e.to_string());
            summary.claims = exp.claims.iter().map(|c| (c.name, false)).collect();
            return RunOutcome { record: None, summary };
        }
    };
    let tol = &exp.config.tolerances;
    let verdict = detect_convergence(&record, tol.eps_conv, tol.window);
    summary.verdict = verdict.kind();
    summary.steps = record.steps;
    if let Verdict::Converged { limits, settled_at } = &verdict {
        summary.settled_at = Some(*settled_at);
        summary.y_star = Some(limits.max_abs().to_f64_lossy());
        summary.limits = Some(limits.to_f64());
    }
    for spec in &exp.claims {
        let outcome = evaluate_claim(exp, spec.name, &verdict, &record, &s0);
        let passed = match outcome {
            Ok(p) => p,
            Err(e) => {
                summary.errors.push(format!("{}: {e}", spec.name));
                false
            }
        };
        summary.claims.insert(spec.name, passed);
    }
    RunOutcome { record: Some(record), summary }
}

fn evaluate_claim<S: Scalar>(
    exp: &Experiment,
    claim: Claim,
    verdict: &Verdict<S>,
    record: &TrajectoryRecord<S>,
    s0: &StateVector<S>,
) -> Result<bool, AnalysisError> {
    let tol = &exp.config.tolerances;
    let limits = match verdict {
        Verdict::Converged { limits, .. } => Some(limits),
        _ => None,
    };
    Ok(match claim {
        Claim::Converges => limits.is_some(),
        Claim::AbsoluteConsensus => limits.is_some_and(|l| check_absolute_consensus(l, tol.eps_cluster).0),
        Claim::LimitPattern => match limits {
            Some(l) => {
                let total = exp.total_graph.as_ref().ok_or_else(|| {
                    AnalysisError::HypothesisViolation("schedule is not sign consistent".into())
                })?;
                let classes = classify_limits(l, tol.eps_cluster)?;
                check_theorem2(&classes, total, s0, exp.config.balance_mode)?.passed()
            }
            None => false,
        },
        Claim::Diverges => record.diverged(),
        Claim::Bounded => !record.diverged(),
        Claim::NoSurvivor => {
            let threshold = tol.no_survivor_factor * s0.max_abs().to_f64_lossy();
            if threshold > 0.0 {
                no_survivor_check(record, threshold).holds()
            } else {
                !record.diverged()
            }
        }
    })
}

/// Runs `runs` seeded trajectories (concurrently) and aggregates verdicts
/// and claim outcomes. Deterministic in `base_seed`.
pub fn monte_carlo<S: Scalar>(exp: &Experiment, runs: usize, base_seed: u64) -> MonteCarloReport {
    let per_run: Vec<RunSummary> = (0..runs as u64)
        .into_par_iter()
        .map(|run| execute_run::<S>(exp, base_seed, run).summary)
        .collect();
    let count = |kind: &str| per_run.iter().filter(|r| r.verdict == kind).count();
    let claims: BTreeMap<Claim, ClaimTally> = exp
        .claims
        .iter()
        .map(|spec| {
            let passed = per_run.iter().filter(|r| r.claims.get(&spec.name) == Some(&true)).count();
            let fraction = Fraction::new(passed, runs);
            let ok = runs > 0 && fraction.value >= spec.min_pass_fraction;
            (spec.name, ClaimTally { passed: fraction, required_fraction: spec.min_pass_fraction, ok })
        })
        .collect();
    let settle: Vec<f64> = per_run.iter().filter_map(|r| r.settled_at.map(|t| t as f64)).collect();
    let y_star: Vec<f64> = per_run.iter().filter_map(|r| r.y_star).collect();
    let aggregate = Aggregate {
        converged: Fraction::new(count("converged"), runs),
        diverged: Fraction::new(count("diverged"), runs),
        undecided: Fraction::new(count("undecided"), runs),
        errored: Fraction::new(count("error"), runs),
        claims,
        settle_time: Spread::of(&settle),
        y_star: Spread::of(&y_star),
        error_count: per_run.iter().filter(|r| !r.errors.is_empty()).count(),
    };
    let all_claims_ok = aggregate.claims.values().all(|c| c.ok);
    MonteCarloReport {
        config: exp.config.clone(),
        runs,
        base_seed,
        regime: exp.regime(),
        timestamp: None,
        aggregate,
        per_run,
        all_claims_ok,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub beta: f64,
    pub diverged: Fraction,
}

/// Diverged fraction of `runs` seeded runs at each `beta` of an ascending
/// grid.
pub fn beta_sweep(exp: &Experiment, grid: &[f64], runs: usize, base_seed: u64) -> Result<Vec<SweepRow>, AnalysisError> {
    if grid.is_empty() {
        return Err(AnalysisError::InvalidGrid("empty".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(AnalysisError::InvalidGrid("values must be strictly ascending".into()));
    }
    grid.iter()
        .map(|&beta| {
            let variant = exp.with_beta(beta).map_err(|e| AnalysisError::InvalidGrid(e.to_string()))?;
            let report = monte_carlo::<f64>(&variant, runs, base_seed);
            Ok(SweepRow { beta, diverged: report.aggregate.diverged })
        })
        .collect()
}

/// Diverged fraction never drops by more than two interval widths between
/// neighbouring grid points.
pub fn sweep_is_monotone(rows: &[SweepRow]) -> bool {
    rows.windows(2).all(|w| {
        let allowance = 2.0 * w[0].diverged.width().max(w[1].diverged.width());
        w[1].diverged.value >= w[0].diverged.value - allowance
    })
}
