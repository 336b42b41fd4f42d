//! Discrete-time opinion dynamics over dynamic signed random networks under
//! the state-flipping model.
//!
//! Nodes hold real states and, at every step, listen to a random subset of
//! the arcs of the current graph. A positive arc pulls the head towards the
//! tail's state; a negative arc pulls it towards the *negated* tail state.
//! The crate covers the graph structure that governs the long-run behaviour
//! (positive clusters, strong balance, windowed connectivity), the random
//! interaction and attention processes, the update engine with its
//! deterministic bounds, and Monte Carlo verdicts for convergence, bipolar
//! clustering, divergence and the no-survivor property.
//!
//! Node states are generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix `f64`, which the bundled experiments use.

pub mod analysis;
pub mod config;
pub mod dynamics;
pub mod environment;
pub mod export;
pub mod graph;
pub mod sampler;
pub mod scalar;
pub mod verify;

pub use analysis::{ClusterClassification, MonteCarloReport, Verdict};
pub use config::{Experiment, ExperimentConfig};
pub use dynamics::{StateVector, TrajectoryRecord, UpdateParams};
pub use environment::GraphSchedule;
pub use graph::{BalanceMode, NodeId, Sign, SignedArc, SignedDigraph};
pub use sampler::{AttentionProcess, InteractionModel};
pub use scalar::Scalar;

pub type State = StateVector<f64>;
pub type State32 = StateVector<f32>;
pub type Params = UpdateParams<f64>;
pub type Params32 = UpdateParams<f32>;
pub type Trajectory = TrajectoryRecord<f64>;
pub type Trajectory32 = TrajectoryRecord<f32>;
pub type Classification = ClusterClassification<f64>;
