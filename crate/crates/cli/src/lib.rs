//! Scenario runner: loads JSON scenarios, runs each experiment separately,
//! certifies the requested macrorealism conditions and emits JSON/CSV.

pub mod certify;
pub mod error;
pub mod scenario;
pub mod sweep;

use macroreal::macrocert::Verdict;
use macroreal::protocols::{format_tuple, OutcomeTable};
use serde::Serialize;

pub use certify::{
    run_certification, run_oracle, CertificationReport, Experiment, SIGMA_THRESHOLD,
};
pub use error::CliError;
pub use scenario::{load_scenario, Check, Scenario};
pub use sweep::{load_sweep, run_sweep, sweep_csv, SweepRow, SweepSpec};

/// Pretty JSON with keys sorted and shortest round-trip floats.
pub fn canonical_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("report serializes");
    let mut s = serde_json::to_string_pretty(&v).expect("value serializes");
    s.push('\n');
    s
}

/// Shortest round-trip text for a float, in exponent form when that is
/// shorter (same rendering as the JSON output).
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        serde_json::to_string(&x).expect("finite float")
    } else {
        x.to_string()
    }
}

/// `id,margin,verdict` rows for a certification report.
pub fn report_csv(report: &CertificationReport) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(["id", "margin", "verdict"])
        .expect("in-memory write");
    for (id, margin, verdict) in report.flat_entries() {
        let v = match verdict {
            Verdict::Satisfied => "satisfied",
            Verdict::Violated => "violated",
        };
        w.write_record([id, format_float(margin), v.to_string()])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

/// `experiment,outcome,probability` rows for the raw tables of `oracle`.
pub fn oracle_csv(experiments: &[Experiment]) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(["experiment", "outcome", "probability"])
        .expect("in-memory write");
    for e in experiments {
        let table = OutcomeTable::from_json(&e.table.to_string())?;
        for (tuple, p) in table.entries() {
            w.write_record([e.id.clone(), format_tuple(&tuple), format_float(p)])
                .expect("in-memory write");
        }
    }
    Ok(String::from_utf8(w.into_inner().expect("flush")).expect("utf-8"))
}
