//! Bundled fixtures and the acceptance suites run by `sigdyn verify` and
//! the `acceptance` test target.
//!
//! Each suite yields one [`CriterionOutcome`] per acceptance criterion it
//! covers. Random scenarios are drawn from a ChaCha8 generator seeded with
//! the suite seed, so every outcome is reproducible.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::monte_carlo;
use crate::config::{Claim, ConfigError, Experiment, ExperimentConfig, MapLoader};
use crate::dynamics::{
    check_lemma1, check_lemma2_contraction, check_lemma3_pull, check_lemma5_floor, step, StateVector, UpdateParams,
};
use crate::graph::{BalanceMode, NodeId, Sign, SignedArc, SignedDigraph};
use crate::sampler::AttentionProcess;

/// Fixture files compiled into the library, keyed by file name.
pub mod fixtures {
    use super::*;

    pub const FILES: &[(&str, &str)] = &[
        ("three_clusters.graph", include_str!("../fixtures/three_clusters.graph")),
        ("balanced_square_a.graph", include_str!("../fixtures/balanced_square_a.graph")),
        ("balanced_square_b.graph", include_str!("../fixtures/balanced_square_b.graph")),
        ("balanced_square.toml", include_str!("../fixtures/balanced_square.toml")),
        ("negative_triangle.graph", include_str!("../fixtures/negative_triangle.graph")),
        ("balanced_ring_a.graph", include_str!("../fixtures/balanced_ring_a.graph")),
        ("balanced_ring_b.graph", include_str!("../fixtures/balanced_ring_b.graph")),
        ("mixed_ring_a.graph", include_str!("../fixtures/mixed_ring_a.graph")),
        ("mixed_ring_b.graph", include_str!("../fixtures/mixed_ring_b.graph")),
        ("mixed_ring.toml", include_str!("../fixtures/mixed_ring.toml")),
        ("opposed_cycles.graph", include_str!("../fixtures/opposed_cycles.graph")),
        ("connected_ring.toml", include_str!("../fixtures/connected_ring.toml")),
        ("bipolar_square.toml", include_str!("../fixtures/bipolar_square.toml")),
        ("collapsing_triangle.toml", include_str!("../fixtures/collapsing_triangle.toml")),
        ("divergence.toml", include_str!("../fixtures/divergence.toml")),
        ("divergence_control.toml", include_str!("../fixtures/divergence_control.toml")),
        ("frozen.toml", include_str!("../fixtures/frozen.toml")),
    ];

    pub fn text(name: &str) -> Option<&'static str> {
        FILES.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
    }

    pub fn loader() -> MapLoader {
        MapLoader(FILES.iter().map(|(n, t)| (PathBuf::from(n), t.to_string())).collect())
    }

    /// Resolves a bundled experiment config such as `"connected_ring.toml"`.
    pub fn experiment(name: &str) -> Result<Experiment, ConfigError> {
        let text = text(name).ok_or_else(|| ConfigError::Semantic(format!("no bundled config {name}")))?;
        ExperimentConfig::from_toml(text)?.resolve(&loader())
    }

    pub fn graph(name: &str) -> Result<SignedDigraph, ConfigError> {
        let text = text(name).ok_or_else(|| ConfigError::Semantic(format!("no bundled graph {name}")))?;
        Ok(SignedDigraph::parse_text(text)?)
    }
}

pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Suite {
    Lemma1,
    Lemma23,
    Theorem1,
    Theorem2i,
    Theorem2ii,
    Lemma5,
    Prop3,
    Structural,
    Determinism,
    All,
}

impl Suite {
    pub const EACH: [Suite; 9] = [
        Suite::Lemma1,
        Suite::Lemma23,
        Suite::Theorem1,
        Suite::Theorem2i,
        Suite::Theorem2ii,
        Suite::Lemma5,
        Suite::Prop3,
        Suite::Structural,
        Suite::Determinism,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Lemma1 => "lemma1",
            Suite::Lemma23 => "lemma23",
            Suite::Theorem1 => "theorem1",
            Suite::Theorem2i => "theorem2i",
            Suite::Theorem2ii => "theorem2ii",
            Suite::Lemma5 => "lemma5",
            Suite::Prop3 => "prop3",
            Suite::Structural => "structural",
            Suite::Determinism => "determinism",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::EACH
            .into_iter()
            .chain([Suite::All])
            .find(|suite| suite.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Suite::EACH.iter().map(|s| s.name()).collect();
                format!("unknown suite {s:?} (expected one of {}, all)", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    #[serde(serialize_with = "seconds")]
    pub elapsed: Duration,
}

fn seconds<S: serde::Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] criterion {:>2}: {} ({:.2}s) {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.elapsed.as_secs_f64(),
            self.detail
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub name: &'static str,
    pub criteria: Vec<CriterionOutcome>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }
}

/// Runs one suite, or every suite for [`Suite::All`].
pub fn run_suite(suite: Suite, seed: u64) -> Vec<SuiteReport> {
    if suite == Suite::All {
        return Suite::EACH.iter().flat_map(|&s| run_suite(s, seed)).collect();
    }
    let criteria = match suite {
        Suite::Lemma1 => vec![nonexpansive_fuzz(seed)],
        Suite::Lemma23 => vec![contraction_bounds(seed)],
        Suite::Theorem1 => vec![absolute_consensus_criterion(seed)],
        Suite::Theorem2i => vec![bipolar_split_criterion(seed)],
        Suite::Theorem2ii => vec![collapse_criterion(seed)],
        Suite::Lemma5 => vec![divergence_floor(seed)],
        Suite::Prop3 => divergence_criteria(seed).to_vec(),
        Suite::Structural => vec![structural_oracles(seed)],
        Suite::Determinism => vec![determinism(seed)],
        Suite::All => unreachable!(),
    };
    vec![SuiteReport { name: suite.name(), criteria }]
}

fn timed(id: u8, title: &'static str, body: impl FnOnce() -> (bool, String)) -> CriterionOutcome {
    let start = Instant::now();
    let (passed, detail) = body();
    CriterionOutcome { id, title, passed, detail, elapsed: start.elapsed() }
}

fn rng_for(seed: u64, criterion: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ criterion.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Each ordered pair becomes an arc with probability `density`, negative
/// with probability `negative_share`.
pub fn random_signed_digraph<R: Rng>(n: usize, density: f64, negative_share: f64, rng: &mut R) -> SignedDigraph {
    let mut arcs = Vec::new();
    for tail in 0..n {
        for head in 0..n {
            if tail != head && rng.gen_bool(density) {
                let sign = if rng.gen_bool(negative_share) { Sign::Negative } else { Sign::Positive };
                arcs.push(SignedArc::new(tail, head, sign));
            }
        }
    }
    SignedDigraph::new(n, arcs).expect("random arcs are valid")
}

fn random_state<R: Rng>(n: usize, rng: &mut R) -> StateVector<f64> {
    let scale = 10f64.powf(rng.gen_range(-3.0..3.0));
    let values: Vec<f64> = (0..n).map(|_| rng.gen_range(-scale..scale)).collect();
    StateVector::new(values).expect("finite")
}

fn attention() -> AttentionProcess {
    AttentionProcess::new(0.5, 0.5).expect("valid means")
}

/// `α + β` anywhere in `(0, 1/(n-1)]`, with the boundary itself drawn often.
fn nonexpansive_params<R: Rng>(n: usize, rng: &mut R) -> UpdateParams<f64> {
    let bound = 1.0 / (n as f64 - 1.0);
    let sum = if rng.gen_bool(0.25) { bound } else { rng.gen_range(1e-4..=bound) };
    let alpha = sum * rng.gen_range(0.01..0.99);
    UpdateParams::new(alpha, sum - alpha, attention()).expect("positive weights")
}

const FUZZ_STEPS: usize = 10_000;
const BOUND_RUNTIME: Duration = Duration::from_secs(10);

fn nonexpansive_fuzz(seed: u64) -> CriterionOutcome {
    timed(1, "maximum never grows for alpha + beta <= 1/(n-1)", || {
        let mut rng = rng_for(seed, 1);
        let start = Instant::now();
        let mut failures = 0;
        for k in 0..FUZZ_STEPS {
            let n = [3, 6, 10][k % 3];
            let g = random_signed_digraph(n, rng.gen_range(0.1..1.0), rng.gen_range(0.0..=1.0), &mut rng);
            let params = nonexpansive_params(n, &mut rng);
            let before = random_state(n, &mut rng);
            let after = step(&before, g.arcs(), rng.gen(), rng.gen(), &params).expect("finite step");
            if !check_lemma1(&before, &after, &params).expect("nonexpansive regime") {
                failures += 1;
            }
        }
        let elapsed = start.elapsed();
        (
            failures == 0 && elapsed < BOUND_RUNTIME,
            format!("{} of {FUZZ_STEPS} steps violated the bound", failures),
        )
    })
}

const BOUND_SCENARIOS: usize = 1_000;

fn contraction_bounds(seed: u64) -> CriterionOutcome {
    timed(2, "contraction and single-arc pull bounds", || {
        let mut rng = rng_for(seed, 2);
        let start = Instant::now();
        let (mut contraction_failures, mut pull_failures) = (0, 0);
        for _ in 0..BOUND_SCENARIOS {
            let n = rng.gen_range(3..=10);
            let params = nonexpansive_params(n, &mut rng);
            let zeta0: f64 = if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.0..1.0) };

            // a node pinned below zeta0 * M, followed for several steps
            let mut s = random_state(n, &mut rng);
            let node = NodeId(rng.gen_range(0..n));
            let m = s.max_abs();
            let mut values = s.values().to_vec();
            values[node.0] = rng.gen_range(-1.0..=1.0) * zeta0 * m;
            if values.iter().all(|v| v.abs() < m) {
                let other = (node.0 + 1) % n;
                values[other] = m;
            }
            s = StateVector::new(values).expect("finite");
            let mut states = vec![s.clone()];
            for _ in 0..rng.gen_range(1..=25) {
                let g = random_signed_digraph(n, rng.gen_range(0.1..1.0), rng.gen_range(0.0..=1.0), &mut rng);
                let next = step(states.last().expect("nonempty"), g.arcs(), rng.gen(), rng.gen(), &params)
                    .expect("finite step");
                states.push(next);
            }
            if !check_lemma2_contraction(&states, node, zeta0, &params).expect("valid scenario") {
                contraction_failures += 1;
            }

            // the pinned node is the tail of a sampled arc whose sign is attended
            let head = NodeId((node.0 + rng.gen_range(1..n)) % n);
            let sign = if rng.gen_bool(0.5) { Sign::Positive } else { Sign::Negative };
            let forced = SignedArc { tail: node, head, sign };
            let base = random_signed_digraph(n, rng.gen_range(0.0..1.0), rng.gen_range(0.0..=1.0), &mut rng);
            let arcs: Vec<SignedArc> =
                base.arcs().iter().copied().filter(|a| a.pair() != forced.pair()).chain([forced]).collect();
            let g = SignedDigraph::new(n, arcs).expect("valid arcs");
            let attention = match sign {
                Sign::Positive => (true, rng.gen()),
                Sign::Negative => (rng.gen(), true),
            };
            let after = step(&s, g.arcs(), attention.0, attention.1, &params).expect("finite step");
            if !check_lemma3_pull(&s, &after, forced, attention, zeta0, &params).expect("valid scenario") {
                pull_failures += 1;
            }
        }
        let elapsed = start.elapsed();
        (
            contraction_failures == 0 && pull_failures == 0 && elapsed < BOUND_RUNTIME,
            format!(
                "contraction: {contraction_failures}/{BOUND_SCENARIOS} violations, pull: {pull_failures}/{BOUND_SCENARIOS} violations"
            ),
        )
    })
}

fn claim_line(report: &crate::analysis::MonteCarloReport, claim: Claim) -> String {
    match report.aggregate.claims.get(&claim) {
        Some(t) => format!(
            "{claim}: {}/{} [{:.3}, {:.3}]",
            t.passed.count, t.passed.runs, t.passed.ci_low, t.passed.ci_high
        ),
        None => format!("{claim}: not evaluated"),
    }
}

/// Runs a bundled Monte Carlo config and requires every listed claim to
/// hold in every run.
fn every_run(id: u8, title: &'static str, config: &'static str, claims: &[Claim], seed: u64) -> CriterionOutcome {
    timed(id, title, || {
        let exp = match fixtures::experiment(config) {
            Ok(e) => e,
            Err(e) => return (false, format!("{config}: {e}")),
        };
        let report = monte_carlo::<f64>(&exp, exp.config.run.runs, seed);
        let all = claims.iter().all(|c| {
            report.aggregate.claims.get(c).is_some_and(|t| t.passed.count == t.passed.runs && t.passed.runs > 0)
        });
        let mut detail: Vec<String> = claims.iter().map(|&c| claim_line(&report, c)).collect();
        if report.aggregate.error_count > 0 {
            detail.push(format!("{} runs reported errors", report.aggregate.error_count));
        }
        (all && report.aggregate.error_count == 0, detail.join("; "))
    })
}

fn absolute_consensus_criterion(seed: u64) -> CriterionOutcome {
    every_run(
        3,
        "connected schedule reaches consensus in absolute value",
        "connected_ring.toml",
        &[Claim::Converges, Claim::AbsoluteConsensus],
        seed,
    )
}

fn bipolar_split_criterion(seed: u64) -> CriterionOutcome {
    every_run(
        4,
        "strongly balanced schedule splits along the balance sides",
        "bipolar_square.toml",
        &[Claim::Converges, Claim::LimitPattern],
        seed,
    )
}

fn collapse_criterion(seed: u64) -> CriterionOutcome {
    every_run(
        5,
        "unbalanced schedule drives every state to zero",
        "collapsing_triangle.toml",
        &[Claim::Converges, Claim::LimitPattern],
        seed,
    )
}

const FLOOR_STEPS: usize = 1_000;

fn divergence_floor(seed: u64) -> CriterionOutcome {
    timed(6, "maximum keeps at least 1/(2n) of itself under large beta", || {
        let mut rng = rng_for(seed, 6);
        let n = 3;
        let params = UpdateParams::new(0.08, 1300.0, attention()).expect("positive weights");
        let mut failures = 0;
        for _ in 0..FLOOR_STEPS {
            let g = random_signed_digraph(n, rng.gen_range(0.0..=1.0), rng.gen_range(0.0..=1.0), &mut rng);
            let before = random_state(n, &mut rng);
            let after = step(&before, g.arcs(), rng.gen(), rng.gen(), &params).expect("finite step");
            if !check_lemma5_floor(&before, &after, &params).expect("floor regime") {
                failures += 1;
            }
        }
        (failures == 0, format!("{failures} of {FLOOR_STEPS} steps fell below the floor"))
    })
}

fn divergence_criteria(seed: u64) -> [CriterionOutcome; 2] {
    let start = Instant::now();
    let loaded = fixtures::experiment("divergence.toml").and_then(|e| Ok((e, fixtures::experiment("divergence_control.toml")?)));
    let (exp, control) = match loaded {
        Ok(pair) => pair,
        Err(e) => {
            let fail = |id, title| CriterionOutcome {
                id,
                title,
                passed: false,
                detail: e.to_string(),
                elapsed: start.elapsed(),
            };
            return [fail(7, DIVERGENCE_TITLE), fail(8, NO_SURVIVOR_TITLE)];
        }
    };
    let report = monte_carlo::<f64>(&exp, exp.config.run.runs, seed);
    let control_report = monte_carlo::<f64>(&control, control.config.run.runs, seed);
    let diverged = report.aggregate.diverged;
    let control_diverged = control_report.aggregate.diverged;
    let divergence = CriterionOutcome {
        id: 7,
        title: DIVERGENCE_TITLE,
        passed: diverged.count * 100 >= 99 * diverged.runs && control_diverged.count == 0,
        detail: format!(
            "diverged {}/{} [{:.3}, {:.3}], control diverged {}/{}",
            diverged.count, diverged.runs, diverged.ci_low, diverged.ci_high, control_diverged.count, control_diverged.runs
        ),
        elapsed: start.elapsed(),
    };
    let diverged_runs: Vec<_> = report.per_run.iter().filter(|r| r.verdict == "diverged").collect();
    let survivors = diverged_runs.iter().filter(|r| r.claims.get(&Claim::NoSurvivor) != Some(&true)).count();
    let no_survivor = CriterionOutcome {
        id: 8,
        title: NO_SURVIVOR_TITLE,
        passed: !diverged_runs.is_empty() && survivors == 0,
        detail: format!("{survivors} of {} diverged runs left a node behind", diverged_runs.len()),
        elapsed: start.elapsed(),
    };
    [divergence, no_survivor]
}

const DIVERGENCE_TITLE: &str = "large beta diverges, small beta stays bounded";
const NO_SURVIVOR_TITLE: &str = "every node follows a diverging maximum";

const STRUCTURAL_GRAPHS: usize = 500;

fn structural_oracles(seed: u64) -> CriterionOutcome {
    timed(9, "balance, clusters and strong connectivity match brute force", || {
        let mut rng = rng_for(seed, 9);
        let mut mismatches = BTreeMap::<&str, usize>::new();
        let mut balanced = 0;
        for k in 0..STRUCTURAL_GRAPHS {
            let n = rng.gen_range(3..=10);
            let g = if k % 2 == 0 {
                planted_balance_graph(n, &mut rng)
            } else {
                random_signed_digraph(n, rng.gen_range(0.05..0.6), rng.gen_range(0.0..=1.0), &mut rng)
            };
            for mode in [BalanceMode::Literal, BalanceMode::Classical] {
                let expected = oracle::balance_exists(&g, mode);
                let found = g.strong_balance_bipartition(mode);
                let ok = match &found {
                    Some(split) => expected && oracle::is_balance_witness(&g, &split.side_one, &split.side_two, mode),
                    None => !expected,
                };
                if mode == BalanceMode::Literal && expected {
                    balanced += 1;
                }
                if !ok {
                    *mismatches.entry(if mode == BalanceMode::Literal { "literal" } else { "classical" }).or_default() +=
                        1;
                }
            }
            if g.positive_cluster_partition().clusters != oracle::positive_clusters(&g) {
                *mismatches.entry("clusters").or_default() += 1;
            }
            if g.is_strongly_connected() != oracle::strongly_connected(&g) {
                *mismatches.entry("strong connectivity").or_default() += 1;
            }
        }
        (
            mismatches.is_empty(),
            format!("{STRUCTURAL_GRAPHS} graphs ({balanced} literally balanced), mismatches: {mismatches:?}"),
        )
    })
}

/// Negative arcs across a hidden split, positive arcs mostly inside it,
/// with an occasional stray arc that may break balance.
fn planted_balance_graph<R: Rng>(n: usize, rng: &mut R) -> SignedDigraph {
    let side: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
    let density = rng.gen_range(0.1..0.7);
    let stray = if rng.gen_bool(0.5) { 0.0 } else { 0.05 };
    let mut arcs = Vec::new();
    for tail in 0..n {
        for head in 0..n {
            if tail == head || !rng.gen_bool(density) {
                continue;
            }
            let across = side[tail] != side[head];
            let mut sign = if across { Sign::Negative } else { Sign::Positive };
            if rng.gen_bool(stray) {
                sign = if sign == Sign::Positive { Sign::Negative } else { Sign::Positive };
            }
            arcs.push(SignedArc::new(tail, head, sign));
        }
    }
    SignedDigraph::new(n, arcs).expect("valid arcs")
}

/// Exhaustive reference implementations used to cross-check the graph
/// algorithms.
pub mod oracle {
    use super::*;

    pub fn is_balance_witness(
        g: &SignedDigraph,
        one: &BTreeSet<NodeId>,
        two: &BTreeSet<NodeId>,
        mode: BalanceMode,
    ) -> bool {
        if one.is_empty() || two.is_empty() || !one.is_disjoint(two) || one.len() + two.len() != g.node_count() {
            return false;
        }
        g.arcs().iter().all(|a| {
            let crosses = one.contains(&a.tail) == two.contains(&a.head);
            match a.sign {
                Sign::Negative => crosses,
                Sign::Positive => mode == BalanceMode::Literal || !crosses,
            }
        })
    }

    /// Tries all `2^n - 2` splits into two nonempty sides.
    pub fn balance_exists(g: &SignedDigraph, mode: BalanceMode) -> bool {
        let n = g.node_count();
        (1..(1u32 << n) - 1).any(|mask| {
            let (one, two): (Vec<usize>, Vec<usize>) = (0..n).partition(|&v| mask & (1 << v) != 0);
            let one: BTreeSet<NodeId> = one.into_iter().map(NodeId).collect();
            let two: BTreeSet<NodeId> = two.into_iter().map(NodeId).collect();
            is_balance_witness(g, &one, &two, mode)
        })
    }

    fn closure(n: usize, edges: impl Iterator<Item = (usize, usize)>) -> Vec<Vec<bool>> {
        let mut reach = vec![vec![false; n]; n];
        for (v, row) in reach.iter_mut().enumerate() {
            row[v] = true;
        }
        for (a, b) in edges {
            reach[a][b] = true;
        }
        for k in 0..n {
            let via = reach[k].clone();
            for row in reach.iter_mut().filter(|row| row[k]) {
                for (cell, &r) in row.iter_mut().zip(&via) {
                    *cell |= r;
                }
            }
        }
        reach
    }

    /// Classes of mutual reachability over undirected positive arcs, ordered
    /// by smallest member.
    pub fn positive_clusters(g: &SignedDigraph) -> Vec<BTreeSet<NodeId>> {
        let n = g.node_count();
        let positive = g.arcs().iter().filter(|a| a.sign == Sign::Positive);
        let reach = closure(n, positive.flat_map(|a| [(a.tail.0, a.head.0), (a.head.0, a.tail.0)]));
        let mut clusters: Vec<BTreeSet<NodeId>> = Vec::new();
        for (v, row) in reach.iter().enumerate() {
            if clusters.iter().any(|c| c.contains(&NodeId(v))) {
                continue;
            }
            clusters.push((0..n).filter(|&w| row[w]).map(NodeId).collect());
        }
        clusters
    }

    pub fn strongly_connected(g: &SignedDigraph) -> bool {
        let n = g.node_count();
        let reach = closure(n, g.arcs().iter().map(|a| (a.tail.0, a.head.0)));
        reach.iter().all(|row| row.iter().all(|&r| r))
    }
}

fn determinism(seed: u64) -> CriterionOutcome {
    timed(10, "Monte Carlo reports replay byte for byte", || {
        let mut details = Vec::new();
        let mut ok = true;
        for (config, runs) in [("connected_ring.toml", 40), ("bipolar_square.toml", 40), ("divergence.toml", 40)] {
            let exp = match fixtures::experiment(config) {
                Ok(e) => e,
                Err(e) => return (false, format!("{config}: {e}")),
            };
            let first = monte_carlo::<f64>(&exp, runs, seed).to_json();
            let second = monte_carlo::<f64>(&exp, runs, seed).to_json();
            let same = first == second;
            ok &= same;
            details.push(format!("{config}: {}", if same { "identical" } else { "differs" }));
        }
        (ok, details.join("; "))
    })
}
