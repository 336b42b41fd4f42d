//! Random ingredients of the model: which arcs interact at a step, and
//! whether nodes pay attention to positive/negative recommendations.
//!
//! All randomness comes from [`RngStream`]s keyed by `(seed, run, t,
//! purpose)`. Arc draws and attention draws never share a generator, and a
//! draw at step `t` never depends on what was drawn before it, so a
//! trajectory can be replayed (or evaluated out of order) from its key alone.

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::environment::GraphSchedule;
use crate::graph::{NodeId, Sign, SignedArc, SignedDigraph};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplerError {
    #[error("probability {0} outside (0, 1]")]
    ArcProbability(f64),
    #[error("attention probability {name} = {value} outside (0, 1)")]
    AttentionProbability { name: &'static str, value: f64 },
}

/// What a stream is used for. Distinct purposes give independent streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum StreamPurpose {
    Arcs = 1,
    Attention = 2,
    InitialState = 3,
}

/// Key of one independent random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub run: u64,
    pub t: u64,
    pub purpose: StreamPurpose,
}

const KEY_DOMAIN: u64 = 0x5349_474e_4459_4e31; // "SIGNDYN1"

impl RngStream {
    pub fn new(seed: u64, run: u64, t: u64, purpose: StreamPurpose) -> Self {
        RngStream { seed, run, t, purpose }
    }

    /// ChaCha8 keyed by `(seed, run, purpose)`, positioned on stream `t`.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[0..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.run.to_le_bytes());
        key[16..24].copy_from_slice(&(self.purpose as u64).to_le_bytes());
        key[24..32].copy_from_slice(&KEY_DOMAIN.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.t);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcProbability {
    pub tail: usize,
    pub head: usize,
    pub p: f64,
}

/// Distribution of the interacting arc set `E_t` given the frame `G_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InteractionModel {
    /// Each arc independently, with probability `p` unless overridden.
    PerArcBernoulli {
        p: f64,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        overrides: Vec<ArcProbability>,
    },
    /// Exactly one arc of the frame, uniformly.
    GossipSingleArc,
    /// Every arc of the frame.
    FullActivation,
}

impl InteractionModel {
    pub fn bernoulli(p: f64) -> Self {
        InteractionModel::PerArcBernoulli { p, overrides: Vec::new() }
    }

    pub fn validate(&self) -> Result<(), SamplerError> {
        if let InteractionModel::PerArcBernoulli { p, overrides } = self {
            for q in std::iter::once(*p).chain(overrides.iter().map(|o| o.p)) {
                if !(q > 0.0 && q <= 1.0) {
                    return Err(SamplerError::ArcProbability(q));
                }
            }
        }
        Ok(())
    }

    fn arc_probability(&self, arc: &SignedArc) -> f64 {
        match self {
            InteractionModel::PerArcBernoulli { p, overrides } => overrides
                .iter()
                .rev()
                .find(|o| o.tail == arc.tail.0 && o.head == arc.head.0)
                .map_or(*p, |o| o.p),
            InteractionModel::GossipSingleArc => f64::NAN,
            InteractionModel::FullActivation => 1.0,
        }
    }

    /// Draws `E_t` from `g`. The result is a subset of `g`'s arcs, in `g`'s
    /// arc order.
    pub fn sample<R: Rng + ?Sized>(&self, g: &SignedDigraph, rng: &mut R) -> Vec<SignedArc> {
        match self {
            InteractionModel::PerArcBernoulli { p, overrides } if overrides.is_empty() => {
                g.arcs().iter().copied().filter(|_| rng.gen_bool(*p)).collect()
            }
            InteractionModel::PerArcBernoulli { .. } => g
                .arcs()
                .iter()
                .copied()
                .filter(|a| rng.gen_bool(self.arc_probability(a)))
                .collect(),
            InteractionModel::GossipSingleArc => {
                if g.arc_count() == 0 {
                    Vec::new()
                } else {
                    vec![g.arcs()[rng.gen_range(0..g.arc_count())]]
                }
            }
            InteractionModel::FullActivation => g.arcs().to_vec(),
        }
    }

    /// Static check of the arc-selection lower bound (A1) and the
    /// independence / upper bound condition (A6) over the frames of `sched`.
    pub fn verify_assumptions(&self, sched: &GraphSchedule) -> AssumptionReport {
        match self {
            InteractionModel::PerArcBernoulli { .. } => {
                let probs: Vec<f64> = sched
                    .frames()
                    .iter()
                    .flat_map(|g| g.arcs().iter().map(|a| self.arc_probability(a)))
                    .collect();
                let lower = probs.iter().copied().fold(f64::INFINITY, f64::min);
                let upper = probs.iter().copied().fold(0.0, f64::max);
                if probs.is_empty() {
                    let reason = "schedule has no arcs".to_string();
                    return AssumptionReport {
                        a1: AssumptionStatus::Holds { constant: 1.0, note: Some(reason.clone()) },
                        a6: AssumptionStatus::Holds { constant: 0.0, note: Some(reason) },
                    };
                }
                AssumptionReport {
                    a1: AssumptionStatus::Holds { constant: lower, note: None },
                    a6: if upper < 1.0 {
                        AssumptionStatus::Holds { constant: upper, note: None }
                    } else {
                        AssumptionStatus::Boundary {
                            constant: upper,
                            note: "some arc is always selected; the upper bound must be < 1".into(),
                        }
                    },
                }
            }
            InteractionModel::GossipSingleArc => {
                let widest = sched.frames().iter().map(|g| g.arc_count()).max().unwrap_or(0);
                AssumptionReport {
                    a1: AssumptionStatus::Holds {
                        constant: if widest == 0 { 1.0 } else { 1.0 / widest as f64 },
                        note: None,
                    },
                    a6: AssumptionStatus::Violated {
                        reason: "exactly one arc is drawn per step, so arc events are dependent".into(),
                    },
                }
            }
            InteractionModel::FullActivation => AssumptionReport {
                a1: AssumptionStatus::Holds {
                    constant: 1.0,
                    note: Some("every arc is selected; any lower bound below 1 works".into()),
                },
                a6: AssumptionStatus::Boundary {
                    constant: 1.0,
                    note: "every arc is always selected; the upper bound must be < 1".into(),
                },
            },
        }
    }
}

pub fn sample_arcs(g: &SignedDigraph, model: &InteractionModel, stream: &RngStream) -> Vec<SignedArc> {
    model.sample(g, &mut stream.rng())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum AssumptionStatus {
    Holds {
        constant: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        note: Option<String>,
    },
    /// Satisfied only in a limiting sense the results exclude.
    Boundary { constant: f64, note: String },
    Violated { reason: String },
}

impl AssumptionStatus {
    pub fn holds(&self) -> bool {
        matches!(self, AssumptionStatus::Holds { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub a1: AssumptionStatus,
    pub a6: AssumptionStatus,
}

/// Means of the attention processes: `b = E[B_t]`, `d = E[D_t]`, constant
/// in time and shared by all nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttentionProcess {
    b: f64,
    d: f64,
}

impl AttentionProcess {
    pub fn new(b: f64, d: f64) -> Result<Self, SamplerError> {
        for (name, value) in [("b", b), ("d", d)] {
            if !(value > 0.0 && value < 1.0) {
                return Err(SamplerError::AttentionProbability { name, value });
            }
        }
        Ok(AttentionProcess { b, d })
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (bool, bool) {
        let positive = rng.gen_bool(self.b);
        let negative = rng.gen_bool(self.d);
        (positive, negative)
    }
}

pub fn sample_attention(process: &AttentionProcess, stream: &RngStream) -> (bool, bool) {
    process.sample(&mut stream.rng())
}

/// In-neighbours of `i` in the sampled arc set, split by sign.
pub fn neighbor_sets(sampled: &[SignedArc], i: NodeId) -> (BTreeSet<NodeId>, BTreeSet<NodeId>) {
    let mut plus = BTreeSet::new();
    let mut minus = BTreeSet::new();
    for arc in sampled.iter().filter(|a| a.head == i) {
        match arc.sign {
            Sign::Positive => plus.insert(arc.tail),
            Sign::Negative => minus.insert(arc.tail),
        };
    }
    (plus, minus)
}
