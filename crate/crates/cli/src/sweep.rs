use std::fs;
use std::path::Path;

use macroreal::macrocert::Verdict;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::certify::run_certification;
use crate::error::CliError;
use crate::format_float;
use crate::scenario::Scenario;

/// A scenario template with one numeric field varied over `values`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub template: Value,
    /// Dot-separated path into the template, e.g. `schedule.gap` or `times.1`.
    pub parameter: String,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub entries: Vec<(String, f64)>,
    pub all_satisfied: Option<bool>,
    pub error: Option<String>,
}

fn slot<'a>(v: &'a mut Value, path: &str) -> Option<&'a mut Value> {
    path.split('.').try_fold(v, |v, key| match v {
        Value::Object(m) => m.get_mut(key),
        Value::Array(a) => key.parse::<usize>().ok().and_then(|i| a.get_mut(i)),
        _ => None,
    })
}

impl SweepSpec {
    pub fn from_json_str(text: &str) -> Result<Self, CliError> {
        let value: Value = serde_json::from_str(text).map_err(CliError::from_json)?;
        let spec: SweepSpec = serde_json::from_value(value).map_err(CliError::from_json)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.values.is_empty() {
            return Err(CliError::Invalid {
                field: "values".into(),
                message: "sweep needs at least one value".into(),
            });
        }
        let mut probe = self.template.clone();
        match slot(&mut probe, &self.parameter) {
            Some(v) if v.is_number() => Ok(()),
            Some(_) => Err(CliError::Invalid {
                field: "parameter".into(),
                message: format!(
                    "`{}` is not a numeric field of the template",
                    self.parameter
                ),
            }),
            None => Err(CliError::Invalid {
                field: "parameter".into(),
                message: format!("`{}` does not resolve in the template", self.parameter),
            }),
        }
    }

    /// Template with the parameter set to `value`.
    pub fn instantiate(&self, value: f64) -> Result<Value, CliError> {
        let mut v = self.template.clone();
        let target = slot(&mut v, &self.parameter).ok_or_else(|| CliError::Invalid {
            field: "parameter".into(),
            message: format!("`{}` does not resolve", self.parameter),
        })?;
        *target = serde_json::json!(value);
        Ok(v)
    }
}

pub fn load_sweep(path: &Path) -> Result<SweepSpec, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    SweepSpec::from_json_str(&text)
}

fn evaluate(spec: &SweepSpec, value: f64) -> SweepRow {
    let result = spec
        .instantiate(value)
        .and_then(Scenario::from_value)
        .and_then(|s| run_certification(&s));
    match result {
        Ok(report) => {
            let flat = report.flat_entries();
            SweepRow {
                value,
                all_satisfied: Some(flat.iter().all(|(_, _, v)| *v == Verdict::Satisfied)),
                entries: flat.into_iter().map(|(id, m, _)| (id, m)).collect(),
                error: None,
            }
        }
        Err(e) => SweepRow {
            value,
            entries: Vec::new(),
            all_satisfied: None,
            error: Some(e.to_string()),
        },
    }
}

/// Evaluates every sweep point in parallel; rows stay in sweep order.
pub fn run_sweep(spec: &SweepSpec) -> Vec<SweepRow> {
    spec.values.par_iter().map(|&v| evaluate(spec, v)).collect()
}

/// Column order: condition ids in order of first appearance.
pub fn columns(rows: &[SweepRow]) -> Vec<String> {
    let mut cols: Vec<String> = Vec::new();
    for row in rows {
        for (id, _) in &row.entries {
            if !cols.contains(id) {
                cols.push(id.clone());
            }
        }
    }
    cols
}

/// `value,<condition ids>,all_satisfied,error`; witness columns carry max |W|.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let cols = columns(rows);
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let mut header = vec!["value".to_string()];
    header.extend(cols.iter().cloned());
    header.push("all_satisfied".into());
    header.push("error".into());
    w.write_record(&header).expect("in-memory write");
    for row in rows {
        let mut record = vec![format_float(row.value)];
        for c in &cols {
            record.push(
                row.entries
                    .iter()
                    .find(|(id, _)| id == c)
                    .map_or(String::new(), |(_, m)| format_float(*m)),
            );
        }
        record.push(row.all_satisfied.map_or(String::new(), |b| b.to_string()));
        record.push(row.error.clone().unwrap_or_default());
        w.write_record(&record).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}
