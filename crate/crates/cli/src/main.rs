//! `sigdyn`: analyse signed graphs and schedules, run single trajectories,
//! Monte Carlo batches and beta sweeps, and the bundled acceptance suites.
//!
//! Exit codes: 0 when everything checked passes, 1 when a claim or
//! criterion fails, 2 on usage or configuration errors.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use signed_dynamics::analysis::{beta_sweep, detect_convergence, execute_run, monte_carlo, sweep_is_monotone};
use signed_dynamics::config::{validate_config, Experiment, ExperimentConfig};
use signed_dynamics::environment::{ArcScope, GraphSchedule};
use signed_dynamics::export::{run_summary_json, write_m_series_csv, write_probes_csv};
use signed_dynamics::verify::{run_suite, Suite, DEFAULT_SEED};
use signed_dynamics::{BalanceMode, SignedDigraph};

#[derive(Parser)]
#[command(name = "sigdyn", version, about = "Signed-network state-flipping dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Structural report for a graph, a schedule manifest or an experiment config.
    Analyze {
        /// `.graph` file, schedule manifest, or experiment config.
        path: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_parser = parse_mode)]
        mode: Option<BalanceMode>,
    },
    /// One trajectory: probes.csv, m_series.csv and summary.json.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Run index within the seeded batch.
        #[arg(long, default_value_t = 0)]
        run: u64,
    },
    /// Seeded batch of trajectories aggregated into report.json.
    Montecarlo {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Diverged fraction over a grid of beta values, written to sweep.csv.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        runs: Option<usize>,
        /// Comma separated ascending beta values.
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<f64>,
    },
    /// Bundled acceptance suites.
    Verify {
        #[arg(default_value = "all", value_parser = parse_suite)]
        suite: Suite,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Base seed; defaults to the config's `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<BalanceMode>,
}

fn parse_mode(s: &str) -> Result<BalanceMode, String> {
    s.parse()
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse()
}

/// Failure classes mapped onto exit codes.
enum Outcome {
    Pass,
    ClaimFailure,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::ClaimFailure) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> Result<Outcome> {
    match command {
        Command::Analyze { path, config, mode } => analyze(path, config, mode),
        Command::Simulate { common, run } => simulate(&common, run),
        Command::Montecarlo { common, runs } => montecarlo(&common, runs),
        Command::Sweep { common, runs, grid } => sweep(&common, runs, &grid),
        Command::Verify { suite, seed, out } => verify(suite, seed, out.as_deref()),
    }
}

fn load_experiment(path: &Path, mode: Option<BalanceMode>) -> Result<Experiment> {
    let mut exp = ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(mode) = mode {
        exp.config.balance_mode = mode;
    }
    Ok(exp)
}

fn create_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn analyze(path: Option<PathBuf>, config: Option<PathBuf>, mode: Option<BalanceMode>) -> Result<Outcome> {
    let (schedule, exp) = match (path, config) {
        (Some(_), Some(_)) => bail!("give either a path or --config, not both"),
        (None, None) => bail!("nothing to analyze: give a path or --config"),
        (None, Some(cfg)) => {
            let exp = load_experiment(&cfg, mode)?;
            (exp.schedule.clone(), Some(exp))
        }
        (Some(p), None) => {
            if p.extension().is_some_and(|e| e == "toml") {
                let text = fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
                let table: toml::Table = text.parse().with_context(|| format!("parsing {}", p.display()))?;
                if table.contains_key("period") {
                    (GraphSchedule::load_manifest(&p)?, None)
                } else {
                    let exp = load_experiment(&p, mode)?;
                    (exp.schedule.clone(), Some(exp))
                }
            } else {
                (GraphSchedule::constant(GraphSchedule::load_graph_file(&p)?), None)
            }
        }
    };
    let mode = mode.or(exp.as_ref().map(|e| e.config.balance_mode)).unwrap_or_default();
    print_structure(&schedule, mode);
    if let Some(exp) = exp {
        let report = validate_config(&exp);
        println!("validation:");
        println!("{}", serde_json::to_string_pretty(&report)?);
        for w in &report.warnings {
            eprintln!("warning: {w}");
        }
    }
    Ok(Outcome::Pass)
}

fn print_structure(schedule: &GraphSchedule, mode: BalanceMode) {
    println!("nodes: {}", schedule.node_count());
    println!("period: {}", schedule.period());
    match schedule.total_graph() {
        Ok(total) => {
            let g: &SignedDigraph = &total.graph;
            let clusters = g.positive_cluster_partition();
            println!("arcs in total graph: {}", g.arc_count());
            println!("positive clusters: T_p = {}", clusters.count());
            for (k, c) in clusters.clusters.iter().enumerate() {
                println!("  cluster {k}: {}", format_set(c.iter().map(|v| v.0)));
            }
            let mode_name = match mode {
                BalanceMode::Literal => "literal",
                BalanceMode::Classical => "classical",
            };
            match g.strong_balance_bipartition(mode) {
                Some(split) => println!(
                    "strongly balanced ({mode_name}): {} | {}",
                    format_set(split.side_one.iter().map(|v| v.0)),
                    format_set(split.side_two.iter().map(|v| v.0))
                ),
                None => println!("not strongly balanced ({mode_name})"),
            }
            if !total.all_negative_arcs_recurrent() {
                println!("some negative arcs do not recur");
            }
        }
        Err(e) => println!("sign consistency (A3) violated: {e}"),
    }
    for (label, scope) in [("A2", ArcScope::All), ("A4", ArcScope::PositiveOnly), ("A5", ArcScope::NegativeOnly)] {
        match schedule.minimal_connectivity_window(scope) {
            Some(k) => println!("{label} holds with K={k}"),
            None => println!("{label} fails for every window up to the period"),
        }
    }
}

fn format_set(items: impl Iterator<Item = usize>) -> String {
    let parts: Vec<String> = items.map(|v| v.to_string()).collect();
    format!("{{{}}}", parts.join(", "))
}

fn simulate(common: &Common, run: u64) -> Result<Outcome> {
    let exp = load_experiment(&common.config, common.mode)?;
    let seed = common.seed.unwrap_or(exp.config.run.seed);
    let outcome = execute_run::<f64>(&exp, seed, run);
    for e in &outcome.summary.errors {
        eprintln!("run {run}: {e}");
    }
    let Some(record) = outcome.record else {
        bail!("run {run} could not be executed");
    };
    create_out(&common.out)?;
    let probes = common.out.join("probes.csv");
    write_probes_csv(&record, BufWriter::new(File::create(&probes)?)).context("writing probes.csv")?;
    let series = common.out.join("m_series.csv");
    write_m_series_csv(&record, BufWriter::new(File::create(&series)?)).context("writing m_series.csv")?;
    let tol = &exp.config.tolerances;
    let verdict = detect_convergence(&record, tol.eps_conv, tol.window);
    write_text(&common.out.join("summary.json"), &run_summary_json(&exp.config, &record, verdict.kind()))?;

    println!("verdict: {} after {} steps", verdict.kind(), record.steps);
    let mut all_ok = true;
    for (claim, passed) in &outcome.summary.claims {
        println!("claim {claim}: {}", if *passed { "pass" } else { "fail" });
        all_ok &= passed;
    }
    println!("wrote {}", common.out.display());
    Ok(if all_ok { Outcome::Pass } else { Outcome::ClaimFailure })
}

fn montecarlo(common: &Common, runs: Option<usize>) -> Result<Outcome> {
    let exp = load_experiment(&common.config, common.mode)?;
    let seed = common.seed.unwrap_or(exp.config.run.seed);
    let runs = runs.unwrap_or(exp.config.run.runs);
    if runs == 0 {
        bail!("--runs must be at least 1");
    }
    let mut report = monte_carlo::<f64>(&exp, runs, seed);
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or_default();
    report.timestamp = Some(format!("unix:{stamp}"));
    create_out(&common.out)?;
    let path = common.out.join("report.json");
    write_text(&path, &report.to_json())?;

    let agg = &report.aggregate;
    println!(
        "runs: {runs}  converged: {}  diverged: {}  undecided: {}  errored: {}",
        agg.converged.count, agg.diverged.count, agg.undecided.count, agg.errored.count
    );
    for (claim, tally) in &agg.claims {
        println!(
            "claim {claim}: {}/{} (95% CI [{:.3}, {:.3}], need {:.2}) {}",
            tally.passed.count,
            tally.passed.runs,
            tally.passed.ci_low,
            tally.passed.ci_high,
            tally.required_fraction,
            if tally.ok { "pass" } else { "fail" }
        );
    }
    println!("wrote {}", path.display());
    Ok(if report.all_claims_ok { Outcome::Pass } else { Outcome::ClaimFailure })
}

fn sweep(common: &Common, runs: Option<usize>, grid: &[f64]) -> Result<Outcome> {
    let exp = load_experiment(&common.config, common.mode)?;
    let seed = common.seed.unwrap_or(exp.config.run.seed);
    let runs = runs.unwrap_or(exp.config.run.runs);
    if runs == 0 {
        bail!("--runs must be at least 1");
    }
    let rows = beta_sweep(&exp, grid, runs, seed)?;
    create_out(&common.out)?;
    let path = common.out.join("sweep.csv");
    let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(["beta", "diverged_fraction", "diverged", "runs", "ci_low", "ci_high"])?;
    for row in &rows {
        let f = row.diverged;
        w.write_record([
            row.beta.to_string(),
            f.value.to_string(),
            f.count.to_string(),
            f.runs.to_string(),
            f.ci_low.to_string(),
            f.ci_high.to_string(),
        ])?;
        println!("beta {:>12}: diverged {}/{}", row.beta, f.count, f.runs);
    }
    w.flush()?;
    if !sweep_is_monotone(&rows) {
        eprintln!("warning: diverged fraction drops along the grid beyond interval noise");
    }
    println!("wrote {}", path.display());
    Ok(Outcome::Pass)
}

fn verify(suite: Suite, seed: u64, out: Option<&Path>) -> Result<Outcome> {
    let reports = run_suite(suite, seed);
    for c in reports.iter().flat_map(|r| &r.criteria) {
        println!("{c}");
    }
    if let Some(dir) = out {
        create_out(dir)?;
        write_text(&dir.join("verify.json"), &serde_json::to_string_pretty(&reports)?)?;
    }
    Ok(if reports.iter().all(|r| r.passed()) { Outcome::Pass } else { Outcome::ClaimFailure })
}
