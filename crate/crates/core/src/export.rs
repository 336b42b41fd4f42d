//! File outputs for single trajectories: probe CSV, full `M(t)` CSV and a
//! JSON run summary.

use std::io::Write;

use serde::Serialize;

use crate::dynamics::{ParamsSnapshot, Termination, TrajectoryRecord};
use crate::scalar::Scalar;

/// `t, M, s_0, …, s_{n-1}` at every probe time.
pub fn write_probes_csv<S: Scalar, W: Write>(record: &TrajectoryRecord<S>, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let n = record.initial.len();
    let mut header = vec!["t".to_string(), "M".to_string()];
    header.extend((0..n).map(|i| format!("s_{i}")));
    w.write_record(&header)?;
    for probe in &record.probes {
        let mut row = vec![probe.t.to_string(), probe.state.max_abs().to_string()];
        row.extend(probe.state.values().iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `t, M` for every executed step.
pub fn write_m_series_csv<S: Scalar, W: Write>(record: &TrajectoryRecord<S>, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "M"])?;
    for (t, m) in record.m_series.iter().enumerate() {
        w.write_record([t.to_string(), m.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummaryJson<'a, C: Serialize, S: Scalar> {
    pub config: &'a C,
    pub seed: u64,
    pub run: u64,
    pub params: ParamsSnapshot,
    pub steps: u64,
    pub termination: Termination<S>,
    pub verdict: &'a str,
    pub initial: &'a [S],
    pub final_state: &'a [S],
}

pub fn run_summary_json<C: Serialize, S: Scalar>(
    config: &C,
    record: &TrajectoryRecord<S>,
    verdict: &str,
) -> String {
    let summary = RunSummaryJson {
        config,
        seed: record.seed,
        run: record.run,
        params: record.params,
        steps: record.steps,
        termination: record.termination,
        verdict,
        initial: record.initial.values(),
        final_state: record.final_state.values(),
    };
    serde_json::to_string_pretty(&summary).expect("summary serialises")
}
