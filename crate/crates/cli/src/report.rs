//! Machine-readable run reports, the human summary and CSV traces.

use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;

use crate::scenario::{Kind, Mode, Scenario};
use crate::suites::{Check, Outcome};

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub instances: usize,
    /// Largest deviation measured by any check; `null` when infinite.
    pub max_deviation: f64,
    pub iterations: Option<usize>,
    pub final_fitness: Option<f64>,
}

/// Everything except `wall_time_ms` is a function of the scenario, the seed
/// and the mode.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub report_version: u32,
    pub scenario: String,
    pub kind: Kind,
    pub seed: u64,
    pub mode: Mode,
    pub checks: Vec<Check>,
    pub summary: Summary,
    pub pass: bool,
    pub wall_time_ms: u64,
}

impl Report {
    pub fn new(s: &Scenario, seed: u64, outcome: &Outcome, wall_time_ms: u64) -> Self {
        Report {
            report_version: REPORT_VERSION,
            scenario: s.id.clone(),
            kind: s.kind,
            seed,
            mode: outcome.mode,
            checks: outcome.checks.clone(),
            summary: Summary {
                instances: outcome.instances,
                max_deviation: outcome.max_deviation,
                iterations: outcome.iterations,
                final_fitness: outcome.final_fitness,
            },
            pass: outcome.pass(),
            wall_time_ms,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports are plain data");
        s.push('\n');
        s
    }

    pub fn write_summary(&self, out: &mut impl Write) -> io::Result<()> {
        writeln!(
            out,
            "{} ({}, seed {}, {} mode): {} instance{}",
            self.scenario,
            self.kind,
            self.seed,
            self.mode,
            self.summary.instances,
            if self.summary.instances == 1 { "" } else { "s" }
        )?;
        for c in &self.checks {
            let verdict = if c.pass { "PASS" } else { "FAIL" };
            writeln!(out, "  {verdict} {}: {}", c.name, c.detail)?;
        }
        let passed = self.checks.iter().filter(|c| c.pass).count();
        writeln!(
            out,
            "{} ({passed}/{} checks) in {} ms",
            if self.pass { "PASS" } else { "FAIL" },
            self.checks.len(),
            self.wall_time_ms
        )
    }
}

/// `iteration,fitness` rows, with a leading `instance` column when the run
/// optimized several instances.
pub fn write_trace(path: &Path, traces: &[Vec<f64>]) -> csv::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let batch = traces.len() > 1;
    if batch {
        w.write_record(["instance", "iteration", "fitness"])?;
    } else {
        w.write_record(["iteration", "fitness"])?;
    }
    for (i, trace) in traces.iter().enumerate() {
        for (t, f) in trace.iter().enumerate() {
            let (t, f) = (t.to_string(), f.to_string());
            if batch {
                w.write_record([i.to_string(), t, f])?;
            } else {
                w.write_record([t, f])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
