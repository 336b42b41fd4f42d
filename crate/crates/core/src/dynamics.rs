//! The state-flipping update and trajectory execution.
//!
//! At step `t` node `i` receives
//!
//! ```text
//! h+_i = -Σ_{j ∈ N+_i} (s_i - s_j)      (positive in-neighbours)
//! h-_i = -Σ_{j ∈ N-_i} (s_i + s_j)      (negative in-neighbours)
//! ```
//!
//! and moves to `s_i + α·B_t·h+_i + β·D_t·h-_i`. All nodes update at once
//! from the time-`t` states. The deterministic bounds on `M(t) = max_i
//! |s_i(t)|` that the convergence and divergence results are built on are
//! exposed as checkers at the bottom of this module.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::environment::GraphSchedule;
use crate::graph::{NodeId, Sign, SignedArc};
use crate::sampler::{AttentionProcess, InteractionModel, RngStream, StreamPurpose};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("state of node {node} is not finite")]
    NonFiniteState { node: usize },
    #[error("expected {expected} node states, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("arc ({tail}, {head}) references a node outside 0..{n}")]
    ArcOutOfRange { tail: usize, head: usize, n: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parameter regime not met: {0}")]
    RegimeViolation(String),
}

/// Node states `s(t)`. Every entry is finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateVector<S>(Vec<S>);

impl<S: Scalar> StateVector<S> {
    pub fn new(values: Vec<S>) -> Result<Self, DynamicsError> {
        if let Some(node) = values.iter().position(|v| !v.is_finite()) {
            return Err(DynamicsError::NonFiniteState { node });
        }
        Ok(StateVector(values))
    }

    pub fn zeros(n: usize) -> Self {
        StateVector(vec![S::zero(); n])
    }

    pub fn from_f64(values: &[f64]) -> Result<Self, DynamicsError> {
        Self::new(values.iter().map(|&v| S::from_f64_lossy(v)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[S] {
        &self.0
    }

    pub fn get(&self, node: NodeId) -> S {
        self.0[node.0]
    }

    /// `M = max_i |s_i|`.
    pub fn max_abs(&self) -> S {
        max_abs(&self.0)
    }

    pub fn l1_norm(&self) -> S {
        self.0.iter().fold(S::zero(), |acc, v| acc + v.abs())
    }

    pub fn negated(&self) -> Self {
        StateVector(self.0.iter().map(|v| -*v).collect())
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|v| v.to_f64_lossy()).collect()
    }
}

pub fn max_abs<S: Scalar>(values: &[S]) -> S {
    values.iter().fold(S::zero(), |acc, v| acc.max(v.abs()))
}

/// Thresholds that decide which bounds apply for a given `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Regime {
    pub n: usize,
    pub alpha_plus_beta: f64,
    /// `1/(n-1)`.
    pub nonexpansive_bound: f64,
    /// `1 - (α+β)(n-1)`.
    pub gamma_star: f64,
    /// `(4n)^-1`.
    pub divergence_alpha_bound: f64,
    /// `16 n^(n+1)`.
    pub divergence_beta_threshold: f64,
    /// `α+β < 1/(n-1)`: almost-sure convergence.
    pub contractive: bool,
    /// `α+β ≤ 1/(n-1)`: `M(t)` never increases.
    pub nonexpansive: bool,
    /// `α ≤ (4n)^-1`: large enough β makes `M(t)` diverge.
    pub divergence_candidate: bool,
    /// `α < (4n)^-1` and `β > 16 n^(n+1)`: `M(t+1) ≥ M(t)/(2n)` surely.
    pub floor_applies: bool,
}

/// Weights on positive and negative recommendations plus the attention
/// process gating them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UpdateParams<S> {
    alpha: S,
    beta: S,
    attention: AttentionProcess,
}

impl<S: Scalar> UpdateParams<S> {
    pub fn new(alpha: S, beta: S, attention: AttentionProcess) -> Result<Self, DynamicsError> {
        for (name, v) in [("alpha", alpha), ("beta", beta)] {
            if !(v.is_finite() && v > S::zero()) {
                return Err(DynamicsError::InvalidParameter(format!("{name} = {v} must be positive")));
            }
        }
        Ok(UpdateParams { alpha, beta, attention })
    }

    pub fn alpha(&self) -> S {
        self.alpha
    }

    pub fn beta(&self) -> S {
        self.beta
    }

    pub fn attention(&self) -> &AttentionProcess {
        &self.attention
    }

    pub fn with_beta(&self, beta: S) -> Result<Self, DynamicsError> {
        Self::new(self.alpha, beta, self.attention)
    }

    pub fn regime(&self, n: usize) -> Regime {
        let alpha = self.alpha.to_f64_lossy();
        let beta = self.beta.to_f64_lossy();
        let sum = alpha + beta;
        let nf = n as f64;
        let bound = 1.0 / (nf - 1.0);
        let alpha_bound = 1.0 / (4.0 * nf);
        let beta_threshold = 16.0 * nf.powi(n as i32 + 1);
        let slack = S::RELATIVE_SLACK.to_f64_lossy();
        Regime {
            n,
            alpha_plus_beta: sum,
            nonexpansive_bound: bound,
            gamma_star: 1.0 - sum * (nf - 1.0),
            divergence_alpha_bound: alpha_bound,
            divergence_beta_threshold: beta_threshold,
            contractive: sum < bound,
            nonexpansive: sum <= bound * (1.0 + slack),
            divergence_candidate: alpha <= alpha_bound,
            floor_applies: alpha < alpha_bound && beta > beta_threshold,
        }
    }

    fn require_nonexpansive(&self, n: usize) -> Result<Regime, DynamicsError> {
        let regime = self.regime(n);
        if !regime.nonexpansive {
            return Err(DynamicsError::RegimeViolation(format!(
                "alpha + beta = {} exceeds 1/(n-1) = {}",
                regime.alpha_plus_beta, regime.nonexpansive_bound
            )));
        }
        Ok(regime)
    }
}

/// `h+_i = -Σ_{j ∈ N+} (s_i - s_j)`; zero for an empty set.
pub fn positive_recommendation<S: Scalar>(i: NodeId, s: &StateVector<S>, plus: &BTreeSet<NodeId>) -> S {
    let si = s.get(i);
    -plus.iter().fold(S::zero(), |acc, &j| acc + (si - s.get(j)))
}

/// `h-_i = -Σ_{j ∈ N-} (s_i + s_j)`; zero for an empty set.
pub fn negative_recommendation<S: Scalar>(i: NodeId, s: &StateVector<S>, minus: &BTreeSet<NodeId>) -> S {
    let si = s.get(i);
    -minus.iter().fold(S::zero(), |acc, &j| acc + (si + s.get(j)))
}

/// One synchronous update given the sampled arcs and attention bits.
pub fn step<S: Scalar>(
    s: &StateVector<S>,
    sampled: &[SignedArc],
    positive_attention: bool,
    negative_attention: bool,
    params: &UpdateParams<S>,
) -> Result<StateVector<S>, DynamicsError> {
    let n = s.len();
    for arc in sampled {
        if arc.tail.0 >= n || arc.head.0 >= n {
            return Err(DynamicsError::ArcOutOfRange { tail: arc.tail.0, head: arc.head.0, n });
        }
    }
    if !positive_attention && !negative_attention {
        return Ok(s.clone());
    }
    let values = s.values();
    let mut h_plus = vec![S::zero(); n];
    let mut h_minus = vec![S::zero(); n];
    for arc in sampled {
        let (j, i) = (arc.tail.0, arc.head.0);
        match arc.sign {
            Sign::Positive if positive_attention => h_plus[i] = h_plus[i] - (values[i] - values[j]),
            Sign::Negative if negative_attention => h_minus[i] = h_minus[i] - (values[i] + values[j]),
            _ => {}
        }
    }
    let next: Vec<S> = (0..n)
        .map(|i| {
            let mut v = values[i];
            if positive_attention {
                v = v + params.alpha * h_plus[i];
            }
            if negative_attention {
                v = v + params.beta * h_minus[i];
            }
            v
        })
        .collect();
    StateVector::new(next)
}

/// Minimum trailing stretch over which every node moved less than `eps`
/// before a run may stop early.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stability {
    pub eps: f64,
    pub window: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions<S> {
    pub horizon: u64,
    pub seed: u64,
    pub run: u64,
    /// Full states are kept every `probe_stride` steps, plus the final step.
    pub probe_stride: u64,
    /// A run stops as diverged once `M(t)` exceeds this.
    pub ceiling: S,
    pub stop_when_stable: Option<Stability>,
    /// Replaces the random `(B_t, D_t)` draws, cycling through the list.
    pub forced_attention: Option<Vec<(bool, bool)>>,
    pub step_log_cap: usize,
}

impl<S: Scalar> RunOptions<S> {
    pub fn new(horizon: u64, seed: u64) -> Self {
        RunOptions {
            horizon,
            seed,
            run: 0,
            probe_stride: 1,
            ceiling: S::from_f64_lossy(DEFAULT_CEILING),
            stop_when_stable: None,
            forced_attention: None,
            step_log_cap: 0,
        }
    }
}

pub const DEFAULT_CEILING: f64 = 1e30;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Probe<S> {
    pub t: u64,
    pub state: StateVector<S>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord<S> {
    pub t: u64,
    pub sampled: Vec<SignedArc>,
    pub positive_attention: bool,
    pub negative_attention: bool,
    /// `M(t+1)`.
    pub m: S,
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination<S> {
    Horizon,
    /// Every node stayed within the stability tolerance for the required
    /// window ending at `t`.
    Stable { t: u64 },
    /// `M(t)` exceeded the ceiling (or stopped being finite, `peak = None`).
    Diverged { t: u64, peak: Option<S> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParamsSnapshot {
    pub alpha: f64,
    pub beta: f64,
    pub b: f64,
    pub d: f64,
}

/// Everything recorded about one seeded run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRecord<S> {
    pub params: ParamsSnapshot,
    pub seed: u64,
    pub run: u64,
    pub horizon: u64,
    /// Number of updates applied.
    pub steps: u64,
    pub initial: StateVector<S>,
    /// `M(0), …, M(steps)`.
    pub m_series: Vec<S>,
    pub probes: Vec<Probe<S>>,
    /// Last finite state.
    pub final_state: StateVector<S>,
    /// `max_t |s_i(t)|` per node over every executed step.
    pub peak_abs: Vec<S>,
    pub step_log: Vec<StepRecord<S>>,
    pub termination: Termination<S>,
    pub ceiling: S,
}

impl<S: Scalar> TrajectoryRecord<S> {
    pub fn diverged(&self) -> bool {
        matches!(self.termination, Termination::Diverged { .. })
    }
}

/// Tracks how long every coordinate has stayed inside an `eps`-wide band.
/// Declares stability late, never early.
struct StabilityTracker<S> {
    eps: S,
    window: u64,
    anchor: u64,
    low: Vec<S>,
    high: Vec<S>,
}

impl<S: Scalar> StabilityTracker<S> {
    fn new(rule: Stability, s0: &StateVector<S>) -> Self {
        StabilityTracker {
            eps: S::from_f64_lossy(rule.eps),
            window: rule.window,
            anchor: 0,
            low: s0.values().to_vec(),
            high: s0.values().to_vec(),
        }
    }

    fn observe(&mut self, t: u64, s: &StateVector<S>) -> bool {
        let widens = s.values().iter().enumerate().any(|(i, &v)| {
            self.high[i].max(v) - self.low[i].min(v) >= self.eps
        });
        if widens {
            self.anchor = t;
            self.low.copy_from_slice(s.values());
            self.high.copy_from_slice(s.values());
        } else {
            for (i, &v) in s.values().iter().enumerate() {
                self.low[i] = self.low[i].min(v);
                self.high[i] = self.high[i].max(v);
            }
        }
        t - self.anchor >= self.window
    }
}

/// Runs the dynamics for up to `opts.horizon` steps. Arc and attention draws
/// at step `t` come from the streams `(seed, run, t, Arcs)` and
/// `(seed, run, t, Attention)`, so the record is a pure function of the
/// inputs.
pub fn run_trajectory<S: Scalar>(
    sched: &GraphSchedule,
    model: &InteractionModel,
    params: &UpdateParams<S>,
    s0: &StateVector<S>,
    opts: &RunOptions<S>,
) -> Result<TrajectoryRecord<S>, DynamicsError> {
    let n = sched.node_count();
    if s0.len() != n {
        return Err(DynamicsError::DimensionMismatch { expected: n, found: s0.len() });
    }
    if opts.horizon == 0 || opts.probe_stride == 0 {
        return Err(DynamicsError::InvalidParameter("horizon and probe stride must be at least 1".into()));
    }
    if matches!(&opts.forced_attention, Some(seq) if seq.is_empty()) {
        return Err(DynamicsError::InvalidParameter("forced attention sequence is empty".into()));
    }

    let mut state = s0.clone();
    let mut m_series = vec![state.max_abs()];
    let mut probes = vec![Probe { t: 0, state: state.clone() }];
    let mut peak_abs: Vec<S> = state.values().iter().map(|v| v.abs()).collect();
    let mut step_log = Vec::new();
    let mut tracker = opts.stop_when_stable.map(|rule| StabilityTracker::new(rule, &state));
    let mut termination = Termination::Horizon;
    let mut steps = 0;

    for t in 0..opts.horizon {
        let g = sched.graph_at(t);
        let sampled = model.sample(g, &mut RngStream::new(opts.seed, opts.run, t, StreamPurpose::Arcs).rng());
        let (b, d) = match &opts.forced_attention {
            Some(seq) => seq[(t % seq.len() as u64) as usize],
            None => params
                .attention
                .sample(&mut RngStream::new(opts.seed, opts.run, t, StreamPurpose::Attention).rng()),
        };
        let next = match step(&state, &sampled, b, d, params) {
            Ok(next) => next,
            Err(DynamicsError::NonFiniteState { .. }) => {
                termination = Termination::Diverged { t: t + 1, peak: None };
                break;
            }
            Err(e) => return Err(e),
        };
        steps = t + 1;
        let m = next.max_abs();
        m_series.push(m);
        for (peak, v) in peak_abs.iter_mut().zip(next.values()) {
            *peak = peak.max(v.abs());
        }
        if step_log.len() < opts.step_log_cap {
            step_log.push(StepRecord {
                t,
                sampled,
                positive_attention: b,
                negative_attention: d,
                m,
            });
        }
        state = next;
        if steps % opts.probe_stride == 0 {
            probes.push(Probe { t: steps, state: state.clone() });
        }
        if m > opts.ceiling {
            termination = Termination::Diverged { t: steps, peak: Some(m) };
            break;
        }
        if let Some(tracker) = tracker.as_mut() {
            if tracker.observe(steps, &state) {
                termination = Termination::Stable { t: steps };
                break;
            }
        }
    }
    if probes.last().map(|p| p.t) != Some(steps) {
        probes.push(Probe { t: steps, state: state.clone() });
    }

    Ok(TrajectoryRecord {
        params: ParamsSnapshot {
            alpha: params.alpha.to_f64_lossy(),
            beta: params.beta.to_f64_lossy(),
            b: params.attention.b(),
            d: params.attention.d(),
        },
        seed: opts.seed,
        run: opts.run,
        horizon: opts.horizon,
        steps,
        initial: s0.clone(),
        m_series,
        probes,
        final_state: state,
        peak_abs,
        step_log,
        termination,
        ceiling: opts.ceiling,
    })
}

fn check_len<S: Scalar>(a: &StateVector<S>, b: &StateVector<S>) -> Result<(), DynamicsError> {
    if a.len() != b.len() {
        return Err(DynamicsError::DimensionMismatch { expected: a.len(), found: b.len() });
    }
    Ok(())
}

/// Non-expansiveness: `M(t+1) ≤ M(t)` whenever `α+β ≤ 1/(n-1)`.
pub fn check_lemma1<S: Scalar>(
    before: &StateVector<S>,
    after: &StateVector<S>,
    params: &UpdateParams<S>,
) -> Result<bool, DynamicsError> {
    check_len(before, after)?;
    params.require_nonexpansive(before.len())?;
    let m = before.max_abs();
    Ok(after.max_abs() <= m + m * S::RELATIVE_SLACK)
}

/// Contraction of a node that starts below the maximum:
/// `|s_i(t+k)| ≤ (1 - (1-ζ0)·γ*^k)·M(t)` for every `k`, with
/// `states[k] = s(t+k)`.
pub fn check_lemma2_contraction<S: Scalar>(
    states: &[StateVector<S>],
    node: NodeId,
    zeta0: S,
    params: &UpdateParams<S>,
) -> Result<bool, DynamicsError> {
    let first = states
        .first()
        .ok_or_else(|| DynamicsError::InvalidParameter("need at least the starting state".into()))?;
    for s in states {
        check_len(first, s)?;
    }
    let regime = params.require_nonexpansive(first.len())?;
    if !(zeta0 >= S::zero() && zeta0 < S::one()) {
        return Err(DynamicsError::InvalidParameter(format!("zeta0 = {zeta0} outside [0, 1)")));
    }
    let m = first.max_abs();
    let slack = m * S::RELATIVE_SLACK;
    if first.get(node).abs() > zeta0 * m + slack {
        return Err(DynamicsError::RegimeViolation(format!(
            "|s_{node}| = {} is above zeta0 * M = {}",
            first.get(node).abs(),
            zeta0 * m
        )));
    }
    let gamma = S::from_f64_lossy(regime.gamma_star);
    let mut gamma_k = S::one();
    for s in states {
        let bound = (S::one() - (S::one() - zeta0) * gamma_k) * m;
        if s.get(node).abs() > bound + slack {
            return Ok(false);
        }
        gamma_k = gamma_k * gamma;
    }
    Ok(true)
}

/// Single-arc pull: if `|s_i(t)| ≤ ζ0·M(t)`, the arc `i -> j` was sampled
/// and the attention bit of its sign was set, then
/// `|s_j(t+1)| ≤ (1 - (1-ζ0)·min(α, β))·M(t)`.
pub fn check_lemma3_pull<S: Scalar>(
    before: &StateVector<S>,
    after: &StateVector<S>,
    arc: SignedArc,
    attention: (bool, bool),
    zeta0: S,
    params: &UpdateParams<S>,
) -> Result<bool, DynamicsError> {
    check_len(before, after)?;
    params.require_nonexpansive(before.len())?;
    let active = match arc.sign {
        Sign::Positive => attention.0,
        Sign::Negative => attention.1,
    };
    if !active {
        return Err(DynamicsError::RegimeViolation("the arc's attention bit is not set".into()));
    }
    let m = before.max_abs();
    let slack = m * S::RELATIVE_SLACK;
    if before.get(arc.tail).abs() > zeta0 * m + slack {
        return Err(DynamicsError::RegimeViolation(format!("|s_{}| is above zeta0 * M", arc.tail)));
    }
    let pull = params.alpha.min(params.beta);
    let bound = (S::one() - (S::one() - zeta0) * pull) * m;
    Ok(after.get(arc.head).abs() <= bound + slack)
}

/// Floor under strong negative weights: `M(t+1) ≥ M(t)/(2n)` whenever
/// `α < (4n)^-1` and `β > 16 n^(n+1)`.
pub fn check_lemma5_floor<S: Scalar>(
    before: &StateVector<S>,
    after: &StateVector<S>,
    params: &UpdateParams<S>,
) -> Result<bool, DynamicsError> {
    check_len(before, after)?;
    let n = before.len();
    let regime = params.regime(n);
    if !regime.floor_applies {
        return Err(DynamicsError::RegimeViolation(format!(
            "need alpha < {} and beta > {}",
            regime.divergence_alpha_bound, regime.divergence_beta_threshold
        )));
    }
    let m = before.max_abs();
    let two_n = S::from_usize(2 * n).expect("small integer");
    Ok(after.max_abs() >= m / two_n - m * S::RELATIVE_SLACK)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::SignedDigraph;
    use crate::sampler::neighbor_sets;

    fn attention() -> AttentionProcess {
        AttentionProcess::new(0.5, 0.5).unwrap()
    }

    fn params(alpha: f64, beta: f64) -> UpdateParams<f64> {
        UpdateParams::new(alpha, beta, attention()).unwrap()
    }

    fn state(v: &[f64]) -> StateVector<f64> {
        StateVector::new(v.to_vec()).unwrap()
    }

    fn nodes(v: &[usize]) -> BTreeSet<NodeId> {
        v.iter().map(|&i| NodeId(i)).collect()
    }

    #[test]
    fn recommendations_by_hand() {
        let s = state(&[1.0, -0.5, 0.25]);
        assert_eq!(positive_recommendation(NodeId(0), &s, &nodes(&[])), 0.0);
        assert_eq!(positive_recommendation(NodeId(0), &s, &nodes(&[1, 2])), -2.25);
        assert_eq!(negative_recommendation(NodeId(0), &s, &nodes(&[])), 0.0);
        assert_eq!(negative_recommendation(NodeId(0), &s, &nodes(&[2])), -1.25);

        let flat = state(&[1.0, 1.0, 1.0]);
        assert_eq!(positive_recommendation(NodeId(1), &flat, &nodes(&[0, 2])), 0.0);
        let pair = state(&[1.0, -1.0, 0.0]);
        assert_eq!(negative_recommendation(NodeId(0), &pair, &nodes(&[1])), 0.0);
    }

    #[test]
    fn step_by_hand() {
        let s = state(&[1.0, -0.5, 0.25]);
        let sampled = [SignedArc::positive(1, 0), SignedArc::negative(2, 0)];
        let next = step(&s, &sampled, true, true, &params(0.1, 0.05)).unwrap();
        // 1 + 0.1 * (-1.5) + 0.05 * (-1.25)
        assert!((next.values()[0] - 0.7875).abs() < 1e-15);
        assert_eq!(next.values()[1], -0.5);
        assert_eq!(next.values()[2], 0.25);
    }

    #[test]
    fn step_identity_cases() {
        let s = state(&[0.3, -0.2, 0.9]);
        let all = [SignedArc::positive(0, 1), SignedArc::negative(1, 2), SignedArc::negative(2, 0)];
        assert_eq!(step(&s, &all, false, false, &params(0.2, 0.2)).unwrap(), s);

        let complete: Vec<SignedArc> = (0..3)
            .flat_map(|i| (0..3).filter(move |&j| j != i).map(move |j| SignedArc::positive(i, j)))
            .collect();
        let c = state(&[0.4, 0.4, 0.4]);
        assert_eq!(step(&c, &complete, true, true, &params(0.2, 0.2)).unwrap(), c);
    }

    #[test]
    fn step_matches_per_node_formula() {
        let s = state(&[0.7, -0.1, 0.35, -0.9]);
        let sampled = [
            SignedArc::positive(1, 0),
            SignedArc::negative(2, 0),
            SignedArc::negative(3, 0),
            SignedArc::positive(0, 3),
            SignedArc::negative(1, 3),
            SignedArc::positive(2, 1),
        ];
        let p = params(0.1, 0.15);
        for (b, d) in [(true, true), (true, false), (false, true)] {
            let next = step(&s, &sampled, b, d, &p).unwrap();
            for i in 0..4 {
                let (plus, minus) = neighbor_sets(&sampled, NodeId(i));
                let mut expected = s.values()[i];
                if b {
                    expected += 0.1 * positive_recommendation(NodeId(i), &s, &plus);
                }
                if d {
                    expected += 0.15 * negative_recommendation(NodeId(i), &s, &minus);
                }
                assert!((next.values()[i] - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn step_rejects_bad_input() {
        let s = state(&[1.0, 2.0, 3.0]);
        assert!(matches!(
            step(&s, &[SignedArc::positive(0, 5)], true, true, &params(0.1, 0.1)),
            Err(DynamicsError::ArcOutOfRange { .. })
        ));
        let huge = state(&[f64::MAX, -f64::MAX, 0.0]);
        let sampled = [SignedArc::negative(0, 2), SignedArc::negative(2, 0), SignedArc::positive(1, 0)];
        assert!(matches!(
            step(&huge, &sampled, true, true, &params(3.0, 3.0)),
            Err(DynamicsError::NonFiniteState { .. })
        ));
        assert!(StateVector::new(vec![0.0, f64::NAN]).is_err());
        assert!(UpdateParams::new(0.0, 0.1, attention()).is_err());
        assert!(UpdateParams::new(0.1, -1.0, attention()).is_err());
    }

    #[test]
    fn max_abs_examples() {
        assert_eq!(state(&[0.0, 0.0, 0.0]).max_abs(), 0.0);
        assert_eq!(state(&[1.0, -2.0, 0.5]).max_abs(), 2.0);
    }

    #[test]
    fn regimes() {
        let r = params(0.1, 0.1).regime(5);
        assert!(r.contractive && r.nonexpansive);
        assert!((r.gamma_star - 0.2).abs() < 1e-12);

        // boundary: α+β = 1/(n-1) exactly
        let r = params(0.25, 0.25).regime(3);
        assert!(!r.contractive && r.nonexpansive);

        let r = params(0.08, 1300.0).regime(3);
        assert_eq!(r.divergence_beta_threshold, 1296.0);
        assert!(r.divergence_candidate && r.floor_applies);
        assert!(!params(0.08, 1296.0).regime(3).floor_applies);
        assert!(!params(1.0 / 12.0, 1300.0).regime(3).floor_applies);
    }

    fn ring(n: usize) -> GraphSchedule {
        GraphSchedule::constant(
            SignedDigraph::new(
                n,
                (0..n).map(|i| {
                    if i % 2 == 0 {
                        SignedArc::positive(i, (i + 1) % n)
                    } else {
                        SignedArc::negative(i, (i + 1) % n)
                    }
                }),
            )
            .unwrap(),
        )
    }

    #[test]
    fn frozen_attention_keeps_initial_state() {
        let s0 = state(&[0.5, -0.25, 1.0, 0.1]);
        let mut opts = RunOptions::new(50, 1);
        opts.forced_attention = Some(vec![(false, false)]);
        let rec = run_trajectory(&ring(4), &InteractionModel::FullActivation, &params(0.1, 0.1), &s0, &opts)
            .unwrap();
        assert_eq!(rec.steps, 50);
        assert_eq!(rec.m_series.len(), 51);
        assert!(rec.probes.iter().all(|p| p.state == s0));
        assert_eq!(rec.final_state, s0);
    }

    #[test]
    fn origin_is_fixed() {
        let s0 = StateVector::<f64>::zeros(4);
        let opts = RunOptions::new(200, 9);
        let rec = run_trajectory(&ring(4), &InteractionModel::bernoulli(0.5), &params(0.1, 0.2), &s0, &opts)
            .unwrap();
        assert!(rec.m_series.iter().all(|&m| m == 0.0));
        assert_eq!(rec.termination, Termination::Horizon);
    }

    #[test]
    fn replay_is_bit_identical() {
        let s0 = state(&[0.5, -0.25, 1.0, 0.1]);
        let mut opts = RunOptions::new(500, 42);
        opts.step_log_cap = 20;
        opts.probe_stride = 7;
        let run = || {
            run_trajectory(&ring(4), &InteractionModel::bernoulli(0.5), &params(0.1, 0.2), &s0, &opts).unwrap()
        };
        let a = run();
        assert_eq!(a, run());
        assert_eq!(a.step_log.len(), 20);
        assert_eq!(a.probes.last().unwrap().t, 500);

        opts.run = 1;
        let c = run_trajectory(&ring(4), &InteractionModel::bernoulli(0.5), &params(0.1, 0.2), &s0, &opts)
            .unwrap();
        assert_ne!(a.m_series, c.m_series);
    }

    #[test]
    fn ceiling_stops_divergent_runs() {
        let s0 = state(&[1.0, -0.3, 0.2]);
        let mut opts = RunOptions::new(10_000, 3);
        opts.ceiling = 1e10;
        let rec = run_trajectory(&ring(3), &InteractionModel::bernoulli(0.5), &params(0.08, 1400.0), &s0, &opts)
            .unwrap();
        let Termination::Diverged { t, peak: Some(peak) } = rec.termination else {
            panic!("expected divergence, got {:?}", rec.termination);
        };
        assert!(peak > 1e10);
        assert_eq!(t, rec.steps);
        assert_eq!(rec.m_series.len() as u64, rec.steps + 1);
    }

    #[test]
    fn stability_rule_stops_early() {
        let s0 = state(&[0.9, -0.4, 0.3, 0.6]);
        let mut opts = RunOptions::new(100_000, 5);
        opts.stop_when_stable = Some(Stability { eps: 1e-9, window: 100 });
        let rec = run_trajectory(&ring(4), &InteractionModel::bernoulli(0.5), &params(0.1, 0.1), &s0, &opts)
            .unwrap();
        assert!(matches!(rec.termination, Termination::Stable { .. }));
        assert!(rec.steps < 100_000);
        let tail: Vec<_> = rec.probes.iter().filter(|p| p.t + 100 >= rec.steps).collect();
        for p in &tail {
            for (a, b) in p.state.values().iter().zip(rec.final_state.values()) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn generic_over_f32() {
        let s0 = StateVector::<f32>::from_f64(&[0.5, -0.25, 1.0]).unwrap();
        let p = UpdateParams::<f32>::new(0.2, 0.2, attention()).unwrap();
        let opts = RunOptions::<f32>::new(300, 11);
        let rec = run_trajectory(&ring(3), &InteractionModel::bernoulli(0.5), &p, &s0, &opts).unwrap();
        for w in rec.m_series.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + f32::RELATIVE_SLACK));
        }
    }

    #[test]
    fn bound_checkers_guard_their_regimes() {
        let s = state(&[1.0, 0.0, -0.5]);
        assert!(matches!(check_lemma1(&s, &s, &params(0.3, 0.3)), Err(DynamicsError::RegimeViolation(_))));
        assert!(check_lemma1(&s, &s, &params(0.25, 0.25)).unwrap());
        assert!(!check_lemma1(&s, &state(&[1.1, 0.0, 0.0]), &params(0.1, 0.1)).unwrap());

        assert!(matches!(
            check_lemma5_floor(&s, &s, &params(0.08, 1000.0)),
            Err(DynamicsError::RegimeViolation(_))
        ));
        assert!(check_lemma5_floor(&s, &s, &params(0.08, 1300.0)).unwrap());
        let zero = StateVector::<f64>::zeros(3);
        assert!(check_lemma5_floor(&zero, &zero, &params(0.08, 1300.0)).unwrap());
        assert!(!check_lemma5_floor(&s, &state(&[0.1, 0.0, 0.0]), &params(0.08, 1300.0)).unwrap());

        // k = 0 reduces to the precondition
        assert!(check_lemma2_contraction(std::slice::from_ref(&s), NodeId(1), 0.0, &params(0.1, 0.1)).unwrap());
        assert!(matches!(
            check_lemma2_contraction(std::slice::from_ref(&s), NodeId(0), 0.5, &params(0.1, 0.1)),
            Err(DynamicsError::RegimeViolation(_))
        ));
        assert!(matches!(
            check_lemma3_pull(&s, &s, SignedArc::positive(1, 0), (false, true), 0.0, &params(0.1, 0.1)),
            Err(DynamicsError::RegimeViolation(_))
        ));
    }

    mod properties {
        use super::super::*;
        use crate::graph::strategies::signed_digraph;
        use crate::graph::SignedDigraph;
        use proptest::prelude::*;

        fn scenario() -> impl Strategy<Value = (SignedDigraph, Vec<f64>, bool, bool, f64)> {
            signed_digraph().prop_flat_map(|g| {
                let n = g.node_count();
                (
                    Just(g),
                    prop::collection::vec(-10.0f64..10.0, n),
                    prop::bool::ANY,
                    prop::bool::ANY,
                    0.0f64..=1.0,
                )
            })
        }

        fn params_within(n: usize, share: f64, split: f64) -> UpdateParams<f64> {
            let sum = share.max(1e-3) / (n as f64 - 1.0);
            let alpha = (sum * split.clamp(0.01, 0.99)).max(1e-6);
            UpdateParams::new(alpha, sum - alpha, AttentionProcess::new(0.5, 0.5).unwrap()).unwrap()
        }

        proptest! {
            #[test]
            fn step_is_odd((g, s, b, d, share) in scenario(), split in 0.0f64..1.0) {
                let p = params_within(g.node_count(), share, split);
                let s = StateVector::new(s).unwrap();
                let up = step(&s, g.arcs(), b, d, &p).unwrap();
                let down = step(&s.negated(), g.arcs(), b, d, &p).unwrap();
                prop_assert_eq!(up.negated(), down);
            }

            #[test]
            fn step_commutes_with_relabelling(
                (g, s, b, d, share) in scenario(),
                split in 0.0f64..1.0,
                seed in any::<u64>(),
            ) {
                let n = g.node_count();
                let mut perm: Vec<usize> = (0..n).collect();
                let mut x = seed;
                for i in (1..n).rev() {
                    x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    perm.swap(i, (x >> 33) as usize % (i + 1));
                }
                let relabelled = SignedDigraph::new(
                    n,
                    g.arcs().iter().map(|a| SignedArc::new(perm[a.tail.0], perm[a.head.0], a.sign)),
                )
                .unwrap();
                let mut moved = vec![0.0; n];
                for (i, v) in s.iter().enumerate() {
                    moved[perm[i]] = *v;
                }
                let p = params_within(n, share, split);
                let next = step(&StateVector::new(s).unwrap(), g.arcs(), b, d, &p).unwrap();
                let next_moved = step(&StateVector::new(moved).unwrap(), relabelled.arcs(), b, d, &p).unwrap();
                for (i, &pi) in perm.iter().enumerate() {
                    prop_assert!((next.values()[i] - next_moved.values()[pi]).abs() <= 1e-12 * (1.0 + next.max_abs()));
                }
            }

            #[test]
            fn maximum_never_grows_in_the_nonexpansive_regime(
                (g, s, b, d, share) in scenario(),
                split in 0.0f64..1.0,
            ) {
                let p = params_within(g.node_count(), share, split);
                let before = StateVector::new(s).unwrap();
                let after = step(&before, g.arcs(), b, d, &p).unwrap();
                prop_assert!(check_lemma1(&before, &after, &p).unwrap());
            }
        }
    }
}
