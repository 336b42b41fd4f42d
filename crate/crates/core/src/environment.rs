//! Periodic deterministic environments: a finite list of frames repeated
//! forever, plus the checks on them the convergence results rely on.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{union_graph, GraphError, NodeId, Sign, SignedDigraph, UnionMode};

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("a schedule needs at least one frame")]
    NoFrames,
    #[error("manifest declares period {declared} but lists {listed} frames")]
    PeriodMismatch { declared: usize, listed: usize },
    #[error("frame {frame}: {source}")]
    Frame { frame: usize, source: GraphError },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Manifest { path: PathBuf, message: String },
}

/// `{G_t}` with `G_t = frames[t mod period]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphSchedule {
    frames: Vec<SignedDigraph>,
}

impl GraphSchedule {
    pub fn new(frames: Vec<SignedDigraph>) -> Result<Self, ScheduleError> {
        let n = frames.first().ok_or(ScheduleError::NoFrames)?.node_count();
        for g in &frames {
            if g.node_count() != n {
                return Err(GraphError::NodeCountMismatch { expected: n, found: g.node_count() }.into());
            }
        }
        Ok(GraphSchedule { frames })
    }

    pub fn constant(graph: SignedDigraph) -> Self {
        GraphSchedule { frames: vec![graph] }
    }

    pub fn period(&self) -> usize {
        self.frames.len()
    }

    pub fn node_count(&self) -> usize {
        self.frames[0].node_count()
    }

    pub fn frames(&self) -> &[SignedDigraph] {
        &self.frames
    }

    pub fn graph_at(&self, t: u64) -> &SignedDigraph {
        &self.frames[(t % self.frames.len() as u64) as usize]
    }

    /// No ordered pair appears with different signs in two frames.
    pub fn is_sign_consistent(&self) -> bool {
        self.first_sign_conflict().is_none()
    }

    fn first_sign_conflict(&self) -> Option<(NodeId, NodeId)> {
        let mut seen: BTreeMap<(NodeId, NodeId), Sign> = BTreeMap::new();
        for g in &self.frames {
            for arc in g.arcs() {
                match seen.insert(arc.pair(), arc.sign) {
                    Some(previous) if previous != arc.sign => return Some(arc.pair()),
                    _ => {}
                }
            }
        }
        None
    }

    pub fn total_graph(&self) -> Result<TotalGraph, GraphError> {
        if let Some((tail, head)) = self.first_sign_conflict() {
            return Err(GraphError::SignConflict { tail: tail.0, head: head.0 });
        }
        let graph = union_graph(&self.frames, UnionMode::SignSensitive)?;
        let mut frame_hits: BTreeMap<(NodeId, NodeId), BTreeSet<usize>> = BTreeMap::new();
        for (idx, g) in self.frames.iter().enumerate() {
            for arc in g.arcs() {
                frame_hits.entry(arc.pair()).or_default().insert(idx);
            }
        }
        Ok(TotalGraph { graph, frame_hits })
    }

    /// Frames `start .. start + window` (wrapping), restricted to `scope`,
    /// merged with signs erased.
    pub fn window_union(&self, start: usize, window: usize, scope: ArcScope) -> SignedDigraph {
        let frames: Vec<SignedDigraph> = (start..start + window)
            .map(|t| {
                let g = &self.frames[t % self.frames.len()];
                match scope {
                    ArcScope::All => g.clone(),
                    ArcScope::PositiveOnly => g.positive_subgraph(),
                    ArcScope::NegativeOnly => g.negative_subgraph(),
                }
            })
            .collect();
        union_graph(&frames, UnionMode::SignErased).expect("frames share a node count")
    }

    /// Whether every window of `window` consecutive frames has a strongly
    /// connected union. One period of start offsets covers all `t`.
    pub fn check_window_connectivity(&self, window: usize, scope: ArcScope) -> bool {
        assert!(window >= 1, "window length must be at least 1");
        (0..self.period()).all(|start| self.window_union(start, window, scope).is_strongly_connected())
    }

    /// Smallest window length that passes [`Self::check_window_connectivity`].
    /// A window of `period` frames already sees every arc, so longer windows
    /// never help.
    pub fn minimal_connectivity_window(&self, scope: ArcScope) -> Option<usize> {
        (1..=self.period()).find(|&k| self.check_window_connectivity(k, scope))
    }

    /// Loads a TOML manifest `period = <p>` / `frames = ["a.graph", ...]`;
    /// frame paths resolve relative to the manifest.
    pub fn load_manifest(path: &Path) -> Result<Self, ScheduleError> {
        let text = read(path)?;
        let manifest: ScheduleManifest = toml::from_str(&text)
            .map_err(|e| ScheduleError::Manifest { path: path.to_owned(), message: e.to_string() })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        manifest.resolve(base)
    }

    pub fn load_graph_file(path: &Path) -> Result<SignedDigraph, ScheduleError> {
        SignedDigraph::parse_text(&read(path)?).map_err(|source| match source {
            GraphError::Parse { line, message } => {
                ScheduleError::Manifest { path: path.to_owned(), message: format!("line {line}: {message}") }
            }
            other => ScheduleError::Graph(other),
        })
    }
}

fn read(path: &Path) -> Result<String, ScheduleError> {
    std::fs::read_to_string(path).map_err(|source| ScheduleError::Io { path: path.to_owned(), source })
}

/// On-disk schedule description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleManifest {
    pub period: usize,
    pub frames: Vec<PathBuf>,
}

impl ScheduleManifest {
    pub fn resolve(&self, base: &Path) -> Result<GraphSchedule, ScheduleError> {
        if self.period != self.frames.len() {
            return Err(ScheduleError::PeriodMismatch { declared: self.period, listed: self.frames.len() });
        }
        let frames = self
            .frames
            .iter()
            .map(|p| GraphSchedule::load_graph_file(&base.join(p)))
            .collect::<Result<Vec<_>, _>>()?;
        GraphSchedule::new(frames)
    }
}

/// Which arcs a window union keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ArcScope {
    All,
    PositiveOnly,
    NegativeOnly,
}

/// Union of every frame's arcs, well defined when the schedule is sign
/// consistent, with the frames each arc occurs in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TotalGraph {
    pub graph: SignedDigraph,
    pub frame_hits: BTreeMap<(NodeId, NodeId), BTreeSet<usize>>,
}

impl TotalGraph {
    /// An arc of a periodic schedule recurs forever iff some frame holds it.
    pub fn is_recurrent(&self, tail: NodeId, head: NodeId) -> bool {
        self.frame_hits.get(&(tail, head)).is_some_and(|hits| !hits.is_empty())
    }

    pub fn all_negative_arcs_recurrent(&self) -> bool {
        self.graph
            .arcs()
            .iter()
            .filter(|a| a.sign == Sign::Negative)
            .all(|a| self.is_recurrent(a.tail, a.head))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::SignedArc;

    fn g(n: usize, arcs: &[SignedArc]) -> SignedDigraph {
        SignedDigraph::new(n, arcs.iter().copied()).unwrap()
    }

    fn cycle(n: usize, sign: Sign) -> SignedDigraph {
        g(n, &(0..n).map(|i| SignedArc::new(i, (i + 1) % n, sign)).collect::<Vec<_>>())
    }

    /// Directed 4-cycle split into two frames of two arcs each.
    fn half_cycles() -> GraphSchedule {
        GraphSchedule::new(vec![
            g(4, &[SignedArc::positive(0, 1), SignedArc::negative(2, 3)]),
            g(4, &[SignedArc::positive(1, 2), SignedArc::negative(3, 0)]),
        ])
        .unwrap()
    }

    #[test]
    fn frame_lookup_wraps() {
        let a = cycle(3, Sign::Positive);
        let b = cycle(3, Sign::Negative);
        let c = g(3, &[]);
        let constant = GraphSchedule::constant(a.clone());
        assert!((0..10).all(|t| constant.graph_at(t) == &a));

        let two = GraphSchedule::new(vec![a.clone(), b.clone()]).unwrap();
        assert_eq!(two.graph_at(5), &b);
        let three = GraphSchedule::new(vec![a.clone(), b, c]).unwrap();
        assert_eq!(three.graph_at(3), &a);
    }

    #[test]
    fn rejects_empty_or_mixed_sizes() {
        assert!(matches!(GraphSchedule::new(vec![]), Err(ScheduleError::NoFrames)));
        assert!(matches!(
            GraphSchedule::new(vec![g(3, &[]), g(4, &[])]),
            Err(ScheduleError::Graph(GraphError::NodeCountMismatch { .. }))
        ));
    }

    #[test]
    fn sign_consistency() {
        assert!(GraphSchedule::constant(cycle(3, Sign::Negative)).is_sign_consistent());
        let flip = GraphSchedule::new(vec![
            g(3, &[SignedArc::positive(0, 1)]),
            g(3, &[SignedArc::negative(0, 1)]),
        ])
        .unwrap();
        assert!(!flip.is_sign_consistent());
        assert_eq!(flip.total_graph(), Err(GraphError::SignConflict { tail: 0, head: 1 }));

        let reverse = GraphSchedule::new(vec![
            g(3, &[SignedArc::positive(0, 1)]),
            g(3, &[SignedArc::negative(1, 0)]),
        ])
        .unwrap();
        assert!(reverse.is_sign_consistent());
    }

    #[test]
    fn total_graph_tracks_hits() {
        let single = GraphSchedule::constant(cycle(3, Sign::Positive));
        let total = single.total_graph().unwrap();
        assert_eq!(total.graph, cycle(3, Sign::Positive));
        assert!(total.frame_hits.values().all(|h| h == &BTreeSet::from([0])));

        let total = half_cycles().total_graph().unwrap();
        assert_eq!(total.graph.arc_count(), 4);
        assert_eq!(total.frame_hits[&(NodeId(0), NodeId(1))], BTreeSet::from([0]));
        assert_eq!(total.frame_hits[&(NodeId(3), NodeId(0))], BTreeSet::from([1]));
        assert!(total.all_negative_arcs_recurrent());
    }

    #[test]
    fn window_connectivity_examples() {
        let ring = GraphSchedule::constant(cycle(4, Sign::Positive));
        assert!(ring.check_window_connectivity(1, ArcScope::All));
        assert!(ring.check_window_connectivity(1, ArcScope::PositiveOnly));
        for k in 1..4 {
            assert!(!ring.check_window_connectivity(k, ArcScope::NegativeOnly));
        }

        let halves = half_cycles();
        assert!(!halves.check_window_connectivity(1, ArcScope::All));
        assert!(halves.check_window_connectivity(2, ArcScope::All));
        assert!(halves.check_window_connectivity(3, ArcScope::All));
        assert_eq!(halves.minimal_connectivity_window(ArcScope::All), Some(2));
        assert_eq!(halves.minimal_connectivity_window(ArcScope::PositiveOnly), None);
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let halves = half_cycles();
        for (i, frame) in halves.frames().iter().enumerate() {
            std::fs::write(dir.path().join(format!("f{i}.graph")), frame.to_text()).unwrap();
        }
        let manifest = dir.path().join("schedule.toml");
        std::fs::write(&manifest, "period = 2\nframes = [\"f0.graph\", \"f1.graph\"]\n").unwrap();
        assert_eq!(GraphSchedule::load_manifest(&manifest).unwrap(), halves);

        std::fs::write(&manifest, "period = 3\nframes = [\"f0.graph\", \"f1.graph\"]\n").unwrap();
        assert!(matches!(
            GraphSchedule::load_manifest(&manifest),
            Err(ScheduleError::PeriodMismatch { declared: 3, listed: 2 })
        ));
    }

    mod properties {
        use super::super::*;
        use crate::graph::strategies::signed_family;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn window_connectivity_is_monotone_in_length(frames in signed_family(4)) {
                let sched = GraphSchedule::new(frames).unwrap();
                for scope in [ArcScope::All, ArcScope::PositiveOnly, ArcScope::NegativeOnly] {
                    let ok: Vec<bool> = (1..=6).map(|k| sched.check_window_connectivity(k, scope)).collect();
                    for w in ok.windows(2) {
                        prop_assert!(!w[0] || w[1]);
                    }
                    if let Some(k) = sched.minimal_connectivity_window(scope) {
                        prop_assert!(ok[k - 1]);
                        prop_assert!(ok[..k - 1].iter().all(|x| !x));
                    }
                }
            }
        }
    }
}
