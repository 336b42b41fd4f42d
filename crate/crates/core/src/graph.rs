//! Signed directed graphs and the structural algorithms run on them:
//! sign-filtered subgraphs, weak/strong connectivity, positive clusters and
//! strong structural balance.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Smallest network size the model is defined for.
pub const MIN_NODES: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("a signed network needs at least {MIN_NODES} nodes, got {0}")]
    TooFewNodes(usize),
    #[error("node {node} out of range for a graph with {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("self-loop at node {0}")]
    SelfLoop(usize),
    #[error("arc ({tail}, {head}) listed more than once")]
    DuplicateArc { tail: usize, head: usize },
    #[error("arc ({tail}, {head}) carries both signs")]
    SignConflict { tail: usize, head: usize },
    #[error("graphs disagree on node count: {expected} vs {found}")]
    NodeCountMismatch { expected: usize, found: usize },
    #[error("union of an empty list of graphs")]
    EmptyUnion,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Index of a node in `0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl From<usize> for NodeId {
    fn from(index: usize) -> Self {
        NodeId(index)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Positive,
    #[serde(rename = "-")]
    Negative,
}

impl Sign {
    pub fn symbol(self) -> char {
        match self {
            Sign::Positive => '+',
            Sign::Negative => '-',
        }
    }
}

/// Directed arc `tail -> head`. The head is the node that receives the
/// recommendation carried by the arc.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SignedArc {
    pub tail: NodeId,
    pub head: NodeId,
    pub sign: Sign,
}

impl SignedArc {
    pub fn new(tail: usize, head: usize, sign: Sign) -> Self {
        SignedArc { tail: NodeId(tail), head: NodeId(head), sign }
    }

    pub fn positive(tail: usize, head: usize) -> Self {
        Self::new(tail, head, Sign::Positive)
    }

    pub fn negative(tail: usize, head: usize) -> Self {
        Self::new(tail, head, Sign::Negative)
    }

    pub fn pair(&self) -> (NodeId, NodeId) {
        (self.tail, self.head)
    }
}

/// Simple signed digraph on nodes `0..n`.
///
/// Each ordered pair carries at most one arc, so the positive and negative
/// arc sets are disjoint. The two directions between a pair of nodes are
/// independent and may carry different signs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedDigraph {
    n: usize,
    /// Sorted by `(tail, head)`.
    arcs: Vec<SignedArc>,
    out_adj: Vec<Vec<(NodeId, Sign)>>,
    in_adj: Vec<Vec<(NodeId, Sign)>>,
}

impl SignedDigraph {
    pub fn new<I>(n: usize, arcs: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = SignedArc>,
    {
        if n < MIN_NODES {
            return Err(GraphError::TooFewNodes(n));
        }
        let mut arcs: Vec<SignedArc> = arcs.into_iter().collect();
        for arc in &arcs {
            for node in [arc.tail, arc.head] {
                if node.0 >= n {
                    return Err(GraphError::NodeOutOfRange { node: node.0, n });
                }
            }
            if arc.tail == arc.head {
                return Err(GraphError::SelfLoop(arc.tail.0));
            }
        }
        arcs.sort();
        for w in arcs.windows(2) {
            if w[0].pair() == w[1].pair() {
                let (tail, head) = (w[0].tail.0, w[0].head.0);
                return Err(if w[0].sign == w[1].sign {
                    GraphError::DuplicateArc { tail, head }
                } else {
                    GraphError::SignConflict { tail, head }
                });
            }
        }
        Ok(Self::from_sorted_unchecked(n, arcs))
    }

    pub fn empty(n: usize) -> Result<Self, GraphError> {
        Self::new(n, std::iter::empty())
    }

    fn from_sorted_unchecked(n: usize, arcs: Vec<SignedArc>) -> Self {
        let mut out_adj = vec![Vec::new(); n];
        let mut in_adj = vec![Vec::new(); n];
        for arc in &arcs {
            out_adj[arc.tail.0].push((arc.head, arc.sign));
            in_adj[arc.head.0].push((arc.tail, arc.sign));
        }
        SignedDigraph { n, arcs, out_adj, in_adj }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.n).map(NodeId)
    }

    pub fn arcs(&self) -> &[SignedArc] {
        &self.arcs
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn sign_of(&self, tail: NodeId, head: NodeId) -> Option<Sign> {
        self.arcs
            .binary_search_by(|a| a.pair().cmp(&(tail, head)))
            .ok()
            .map(|idx| self.arcs[idx].sign)
    }

    /// Arcs pointing into `node`, as `(tail, sign)`.
    pub fn in_arcs(&self, node: NodeId) -> &[(NodeId, Sign)] {
        &self.in_adj[node.0]
    }

    /// Arcs leaving `node`, as `(head, sign)`.
    pub fn out_arcs(&self, node: NodeId) -> &[(NodeId, Sign)] {
        &self.out_adj[node.0]
    }

    pub fn has_negative_arc(&self) -> bool {
        self.arcs.iter().any(|a| a.sign == Sign::Negative)
    }

    /// Same node set, only the arcs carrying `sign`.
    pub fn signed_subgraph(&self, sign: Sign) -> SignedDigraph {
        let arcs = self.arcs.iter().copied().filter(|a| a.sign == sign).collect();
        Self::from_sorted_unchecked(self.n, arcs)
    }

    pub fn positive_subgraph(&self) -> SignedDigraph {
        self.signed_subgraph(Sign::Positive)
    }

    pub fn negative_subgraph(&self) -> SignedDigraph {
        self.signed_subgraph(Sign::Negative)
    }

    /// Every arc flipped to `head -> tail`, signs kept.
    pub fn reversed(&self) -> SignedDigraph {
        let mut arcs: Vec<_> = self
            .arcs
            .iter()
            .map(|a| SignedArc { tail: a.head, head: a.tail, sign: a.sign })
            .collect();
        arcs.sort();
        Self::from_sorted_unchecked(self.n, arcs)
    }

    /// Maximal node sets connected once arc directions are ignored, ordered
    /// by smallest member.
    pub fn weakly_connected_components(&self) -> Vec<BTreeSet<NodeId>> {
        let mut component = vec![usize::MAX; self.n];
        let mut components = Vec::new();
        for start in 0..self.n {
            if component[start] != usize::MAX {
                continue;
            }
            let id = components.len();
            let mut members = BTreeSet::new();
            let mut queue = VecDeque::from([start]);
            component[start] = id;
            while let Some(v) = queue.pop_front() {
                members.insert(NodeId(v));
                let neighbours = self.out_adj[v].iter().chain(&self.in_adj[v]);
                for &(w, _) in neighbours {
                    if component[w.0] == usize::MAX {
                        component[w.0] = id;
                        queue.push_back(w.0);
                    }
                }
            }
            components.push(members);
        }
        components
    }

    pub fn positive_cluster_partition(&self) -> PositiveClusterPartition {
        PositiveClusterPartition {
            clusters: self.positive_subgraph().weakly_connected_components(),
        }
    }

    /// True iff every node reaches every other one along directed paths.
    /// Signs are ignored.
    pub fn is_strongly_connected(&self) -> bool {
        let forward = self.reach_count(NodeId(0), |v| &self.out_adj[v]);
        forward == self.n && self.reach_count(NodeId(0), |v| &self.in_adj[v]) == self.n
    }

    fn reach_count<'a, F>(&'a self, from: NodeId, next: F) -> usize
    where
        F: Fn(usize) -> &'a [(NodeId, Sign)],
    {
        let mut seen = vec![false; self.n];
        seen[from.0] = true;
        let mut stack = vec![from.0];
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &(w, _) in next(v) {
                if !seen[w.0] {
                    seen[w.0] = true;
                    count += 1;
                    stack.push(w.0);
                }
            }
        }
        count
    }

    /// Splits the nodes into two nonempty sides so that every negative arc
    /// crosses between them (and, in [`BalanceMode::Classical`], every
    /// positive arc stays inside one side). Returns `None` when no such split
    /// exists.
    ///
    /// Sides are fixed by two-colouring constraint components in ascending
    /// order of their smallest node, which always lands on `side_one`.
    pub fn strong_balance_bipartition(&self, mode: BalanceMode) -> Option<BalanceBipartition> {
        // colour[v]: false = side one, true = side two
        let mut colour: Vec<Option<bool>> = vec![None; self.n];
        let constrains = |sign: Sign| match mode {
            BalanceMode::Literal => sign == Sign::Negative,
            BalanceMode::Classical => true,
        };
        let mut component_of_zero = BTreeSet::new();
        for start in 0..self.n {
            if colour[start].is_some() {
                continue;
            }
            colour[start] = Some(false);
            let mut queue = VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                if start == 0 {
                    component_of_zero.insert(NodeId(v));
                }
                let cv = colour[v].expect("queued nodes are coloured");
                let neighbours = self.out_adj[v].iter().chain(&self.in_adj[v]);
                for &(w, sign) in neighbours {
                    if !constrains(sign) {
                        continue;
                    }
                    let want = cv ^ (sign == Sign::Negative);
                    match colour[w.0] {
                        None => {
                            colour[w.0] = Some(want);
                            queue.push_back(w.0);
                        }
                        Some(c) if c != want => return None,
                        Some(_) => {}
                    }
                }
            }
        }
        let mut side_one = BTreeSet::new();
        let mut side_two = BTreeSet::new();
        for (v, c) in colour.into_iter().enumerate() {
            if c == Some(true) {
                side_two.insert(NodeId(v));
            } else {
                side_one.insert(NodeId(v));
            }
        }
        if side_two.is_empty() {
            // No arc forces a split: node 0's constraint component alone
            // against the rest, if that leaves both sides nonempty.
            if component_of_zero.len() == self.n {
                return None;
            }
            side_two = side_one.difference(&component_of_zero).copied().collect();
            side_one = component_of_zero;
        }
        Some(BalanceBipartition { side_one, side_two })
    }

    pub fn is_strongly_balanced(&self, mode: BalanceMode) -> bool {
        self.strong_balance_bipartition(mode).is_some()
    }

    /// Text form: `n <count>` header, then one `<tail> <head> <+|->` line
    /// per arc.
    pub fn to_text(&self) -> String {
        self.to_string()
    }

    pub fn parse_text(text: &str) -> Result<Self, GraphError> {
        let mut n = None;
        let mut arcs = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parse_err = |message: String| GraphError::Parse { line: line_no, message };
            match (n, fields.as_slice()) {
                (None, ["n", count]) => {
                    let count = count
                        .parse::<usize>()
                        .map_err(|e| parse_err(format!("bad node count {count:?}: {e}")))?;
                    n = Some(count);
                }
                (None, _) => return Err(parse_err("expected header `n <count>`".into())),
                (Some(_), [tail, head, sign]) => {
                    let node = |s: &str| {
                        s.parse::<usize>()
                            .map_err(|e| parse_err(format!("bad node index {s:?}: {e}")))
                    };
                    let sign = match *sign {
                        "+" => Sign::Positive,
                        "-" => Sign::Negative,
                        other => return Err(parse_err(format!("bad sign {other:?}"))),
                    };
                    arcs.push(SignedArc::new(node(tail)?, node(head)?, sign));
                }
                (Some(_), _) => {
                    return Err(parse_err("expected `<tail> <head> <+|->`".into()))
                }
            }
        }
        let n = n.ok_or(GraphError::Parse { line: 0, message: "missing header `n <count>`".into() })?;
        Self::new(n, arcs)
    }
}

impl fmt::Display for SignedDigraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n {}", self.n)?;
        for arc in &self.arcs {
            writeln!(f, "{} {} {}", arc.tail, arc.head, arc.sign.symbol())?;
        }
        Ok(())
    }
}

impl FromStr for SignedDigraph {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse_text(s)
    }
}

/// How a union treats the same ordered pair showing up with both signs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnionMode {
    /// Conflicting signs are an error.
    SignSensitive,
    /// Signs are dropped; every arc of the result is marked positive. Only
    /// meaningful for connectivity questions.
    SignErased,
}

/// Graph whose arc set is the union of the inputs' arc sets.
pub fn union_graph(graphs: &[SignedDigraph], mode: UnionMode) -> Result<SignedDigraph, GraphError> {
    let first = graphs.first().ok_or(GraphError::EmptyUnion)?;
    let n = first.n;
    let mut arcs: Vec<SignedArc> = Vec::new();
    for g in graphs {
        if g.n != n {
            return Err(GraphError::NodeCountMismatch { expected: n, found: g.n });
        }
        arcs.extend(g.arcs.iter().map(|a| match mode {
            UnionMode::SignSensitive => *a,
            UnionMode::SignErased => SignedArc { sign: Sign::Positive, ..*a },
        }));
    }
    arcs.sort();
    arcs.dedup();
    for w in arcs.windows(2) {
        if w[0].pair() == w[1].pair() {
            return Err(GraphError::SignConflict { tail: w[0].tail.0, head: w[0].head.0 });
        }
    }
    Ok(SignedDigraph::from_sorted_unchecked(n, arcs))
}

/// Nodes split into the weakly connected components of the positive
/// subgraph. Negative arcs may run inside a cluster.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PositiveClusterPartition {
    pub clusters: Vec<BTreeSet<NodeId>>,
}

impl PositiveClusterPartition {
    pub fn count(&self) -> usize {
        self.clusters.len()
    }
}

/// Which arcs a strong-balance split has to respect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BalanceMode {
    /// Negative arcs must cross between the sides; positive arcs are free.
    #[default]
    Literal,
    /// Additionally positive arcs must stay within a side (Harary balance).
    Classical,
}

impl FromStr for BalanceMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "literal" => Ok(BalanceMode::Literal),
            "classical" => Ok(BalanceMode::Classical),
            other => Err(format!("unknown balance mode {other:?} (literal|classical)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BalanceBipartition {
    pub side_one: BTreeSet<NodeId>,
    pub side_two: BTreeSet<NodeId>,
}

impl BalanceBipartition {
    /// Whether this split is a valid strong-balance witness for `g`.
    pub fn is_witness_for(&self, g: &SignedDigraph, mode: BalanceMode) -> bool {
        if self.side_one.is_empty() || self.side_two.is_empty() {
            return false;
        }
        if !self.side_one.is_disjoint(&self.side_two)
            || self.side_one.len() + self.side_two.len() != g.node_count()
        {
            return false;
        }
        g.arcs().iter().all(|a| {
            let crosses = self.side_one.contains(&a.tail) != self.side_one.contains(&a.head);
            match (a.sign, mode) {
                (Sign::Negative, _) => crosses,
                (Sign::Positive, BalanceMode::Literal) => true,
                (Sign::Positive, BalanceMode::Classical) => !crosses,
            }
        })
    }

    /// Equality as an unordered pair of sides.
    pub fn same_split(&self, a: &BTreeSet<NodeId>, b: &BTreeSet<NodeId>) -> bool {
        (&self.side_one == a && &self.side_two == b) || (&self.side_one == b && &self.side_two == a)
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    fn set(nodes: &[usize]) -> BTreeSet<NodeId> {
        nodes.iter().map(|&v| NodeId(v)).collect()
    }

    fn triangle(sign: Sign) -> SignedDigraph {
        SignedDigraph::new(3, [(0, 1), (1, 2), (2, 0)].map(|(t, h)| SignedArc::new(t, h, sign)))
            .unwrap()
    }

    #[test]
    fn rejects_malformed_graphs() {
        assert_eq!(SignedDigraph::empty(2), Err(GraphError::TooFewNodes(2)));
        assert_eq!(
            SignedDigraph::new(3, [SignedArc::positive(1, 1)]),
            Err(GraphError::SelfLoop(1))
        );
        assert_eq!(
            SignedDigraph::new(3, [SignedArc::positive(0, 3)]),
            Err(GraphError::NodeOutOfRange { node: 3, n: 3 })
        );
        assert_eq!(
            SignedDigraph::new(3, [SignedArc::positive(0, 1), SignedArc::negative(0, 1)]),
            Err(GraphError::SignConflict { tail: 0, head: 1 })
        );
        assert_eq!(
            SignedDigraph::new(3, [SignedArc::positive(0, 1), SignedArc::positive(0, 1)]),
            Err(GraphError::DuplicateArc { tail: 0, head: 1 })
        );
        // opposite directions are distinct arcs and may differ in sign
        assert!(SignedDigraph::new(3, [SignedArc::positive(0, 1), SignedArc::negative(1, 0)]).is_ok());
    }

    #[test]
    fn sign_filters() {
        let neg = triangle(Sign::Negative);
        let pos = triangle(Sign::Positive);
        assert_eq!(neg.positive_subgraph().arc_count(), 0);
        assert_eq!(pos.positive_subgraph(), pos);
        assert_eq!(pos.negative_subgraph().arc_count(), 0);
        assert_eq!(neg.negative_subgraph(), neg);

        let mixed =
            SignedDigraph::new(3, [SignedArc::positive(0, 1), SignedArc::negative(1, 2)]).unwrap();
        assert_eq!(mixed.positive_subgraph().arcs(), &[SignedArc::positive(0, 1)]);
        assert_eq!(mixed.negative_subgraph().arcs(), &[SignedArc::negative(1, 2)]);
    }

    #[test]
    fn weak_components_examples() {
        let g = SignedDigraph::empty(4).unwrap();
        assert_eq!(g.weakly_connected_components(), vec![set(&[0]), set(&[1]), set(&[2]), set(&[3])]);

        let g = SignedDigraph::new(4, [SignedArc::positive(0, 1), SignedArc::positive(2, 3)]).unwrap();
        assert_eq!(g.weakly_connected_components(), vec![set(&[0, 1]), set(&[2, 3])]);

        let g = SignedDigraph::new(
            5,
            [SignedArc::positive(0, 1), SignedArc::positive(1, 2), SignedArc::positive(3, 4)],
        )
        .unwrap();
        assert_eq!(g.weakly_connected_components(), vec![set(&[0, 1, 2]), set(&[3, 4])]);
    }

    #[test]
    fn cluster_partition_examples() {
        assert_eq!(triangle(Sign::Negative).positive_cluster_partition().count(), 3);
        assert_eq!(
            triangle(Sign::Positive).positive_cluster_partition().clusters,
            vec![set(&[0, 1, 2])]
        );
        let g = SignedDigraph::new(
            5,
            [
                SignedArc::positive(0, 1),
                SignedArc::positive(1, 2),
                SignedArc::negative(0, 2),
                SignedArc::negative(3, 4),
            ],
        )
        .unwrap();
        assert_eq!(
            g.positive_cluster_partition().clusters,
            vec![set(&[0, 1, 2]), set(&[3]), set(&[4])]
        );
    }

    #[test]
    fn strong_connectivity_examples() {
        assert!(triangle(Sign::Positive).is_strongly_connected());
        let path =
            SignedDigraph::new(3, [SignedArc::positive(0, 1), SignedArc::negative(1, 2)]).unwrap();
        assert!(!path.is_strongly_connected());
        assert!(!SignedDigraph::empty(3).unwrap().is_strongly_connected());
    }

    #[test]
    fn balance_examples() {
        assert_eq!(triangle(Sign::Negative).strong_balance_bipartition(BalanceMode::Literal), None);

        let square = SignedDigraph::new(
            4,
            [
                SignedArc::negative(0, 1),
                SignedArc::negative(1, 2),
                SignedArc::negative(2, 3),
                SignedArc::negative(3, 0),
                SignedArc::positive(0, 2),
                SignedArc::positive(2, 0),
                SignedArc::positive(1, 3),
                SignedArc::positive(3, 1),
            ],
        )
        .unwrap();
        for mode in [BalanceMode::Literal, BalanceMode::Classical] {
            let split = square.strong_balance_bipartition(mode).unwrap();
            assert_eq!(split.side_one, set(&[0, 2]));
            assert_eq!(split.side_two, set(&[1, 3]));
            assert!(split.is_witness_for(&square, mode));
        }

        let split = triangle(Sign::Positive).strong_balance_bipartition(BalanceMode::Literal).unwrap();
        assert_eq!(split.side_one, set(&[0]));
        assert_eq!(split.side_two, set(&[1, 2]));
        // a connected all-positive graph cannot be split classically
        assert_eq!(triangle(Sign::Positive).strong_balance_bipartition(BalanceMode::Classical), None);
    }

    #[test]
    fn literal_and_classical_modes() {
        let g = SignedDigraph::new(
            3,
            [SignedArc::negative(0, 1), SignedArc::positive(1, 2), SignedArc::negative(0, 2)],
        )
        .unwrap();
        for mode in [BalanceMode::Literal, BalanceMode::Classical] {
            let split = g.strong_balance_bipartition(mode).unwrap();
            assert_eq!(split.side_one, set(&[0]));
            assert_eq!(split.side_two, set(&[1, 2]));
        }

        // the positive arcs tie 0 and 1 together, which only classical
        // balance cares about
        let g = SignedDigraph::new(
            3,
            [SignedArc::negative(0, 1), SignedArc::positive(0, 2), SignedArc::positive(1, 2)],
        )
        .unwrap();
        let split = g.strong_balance_bipartition(BalanceMode::Literal).unwrap();
        assert_eq!(split.side_one, set(&[0, 2]));
        assert_eq!(split.side_two, set(&[1]));
        assert!(!g.is_strongly_balanced(BalanceMode::Classical));
    }

    #[test]
    fn union_examples() {
        let a = SignedDigraph::new(3, [SignedArc::positive(0, 1)]).unwrap();
        let b = SignedDigraph::new(3, [SignedArc::negative(1, 0)]).unwrap();
        let u = union_graph(&[a.clone(), b], UnionMode::SignSensitive).unwrap();
        assert_eq!(u.arcs(), &[SignedArc::positive(0, 1), SignedArc::negative(1, 0)]);

        assert_eq!(union_graph(&[a.clone(), a.clone(), a.clone()], UnionMode::SignSensitive).unwrap(), a);

        let c = SignedDigraph::new(3, [SignedArc::negative(0, 1)]).unwrap();
        assert_eq!(
            union_graph(&[a.clone(), c.clone()], UnionMode::SignSensitive),
            Err(GraphError::SignConflict { tail: 0, head: 1 })
        );
        let erased = union_graph(&[a, c], UnionMode::SignErased).unwrap();
        assert_eq!(erased.arcs(), &[SignedArc::positive(0, 1)]);

        let d = SignedDigraph::empty(4).unwrap();
        assert!(matches!(
            union_graph(&[triangle(Sign::Positive), d], UnionMode::SignSensitive),
            Err(GraphError::NodeCountMismatch { .. })
        ));
    }

    #[test]
    fn text_format() {
        let g = SignedDigraph::parse_text(
            "# three nodes\nn 3\n0 1 +   # trust\n\n1 2 -\n2 0 +\n",
        )
        .unwrap();
        assert_eq!(g.arc_count(), 3);
        assert_eq!(g.sign_of(NodeId(1), NodeId(2)), Some(Sign::Negative));
        assert_eq!(g.to_text(), "n 3\n0 1 +\n1 2 -\n2 0 +\n");
        assert_eq!(g.to_text().parse::<SignedDigraph>().unwrap(), g);

        assert!(matches!(SignedDigraph::parse_text("0 1 +"), Err(GraphError::Parse { line: 1, .. })));
        assert!(matches!(
            SignedDigraph::parse_text("n 3\n0 1 *"),
            Err(GraphError::Parse { line: 2, .. })
        ));
        assert!(matches!(SignedDigraph::parse_text(""), Err(GraphError::Parse { .. })));
        assert_eq!(SignedDigraph::parse_text("n 3\n0 0 +"), Err(GraphError::SelfLoop(0)));
    }

    mod properties {
        use super::super::strategies::{signed_digraph, signed_family};
        use super::super::*;
        use proptest::prelude::*;

        fn union(gs: &[SignedDigraph]) -> SignedDigraph {
            union_graph(gs, UnionMode::SignSensitive).unwrap()
        }

        proptest! {
            #[test]
            fn union_is_commutative_associative_idempotent(gs in signed_family(3)) {
                let (a, b, c) = (&gs[0], &gs[1], &gs[2]);
                prop_assert_eq!(union(&[a.clone(), b.clone()]), union(&[b.clone(), a.clone()]));
                let left = union(&[union(&[a.clone(), b.clone()]), c.clone()]);
                let right = union(&[a.clone(), union(&[b.clone(), c.clone()])]);
                prop_assert_eq!(&left, &right);
                prop_assert_eq!(&left, &union(&gs));
                prop_assert_eq!(&union(&[a.clone(), a.clone()]), a);
            }

            #[test]
            fn weak_components_ignore_direction(g in signed_digraph()) {
                prop_assert_eq!(g.weakly_connected_components(), g.reversed().weakly_connected_components());
            }

            #[test]
            fn clusters_partition_the_nodes(g in signed_digraph()) {
                let part = g.positive_cluster_partition();
                let mut seen = BTreeSet::new();
                for cluster in &part.clusters {
                    prop_assert!(!cluster.is_empty());
                    for v in cluster {
                        prop_assert!(seen.insert(*v));
                    }
                }
                prop_assert_eq!(seen.len(), g.node_count());
                let cluster_of = |v: NodeId| part.clusters.iter().position(|c| c.contains(&v));
                for arc in g.arcs().iter().filter(|a| a.sign == Sign::Positive) {
                    prop_assert_eq!(cluster_of(arc.tail), cluster_of(arc.head));
                }
            }

            #[test]
            fn balance_witness_is_valid(g in signed_digraph()) {
                for mode in [BalanceMode::Literal, BalanceMode::Classical] {
                    if let Some(split) = g.strong_balance_bipartition(mode) {
                        prop_assert!(split.is_witness_for(&g, mode));
                    }
                }
            }

            #[test]
            fn text_format_round_trips(g in signed_digraph()) {
                prop_assert_eq!(SignedDigraph::parse_text(&g.to_text()).unwrap(), g);
            }
        }
    }
}
