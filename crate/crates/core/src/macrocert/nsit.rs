use serde::Serialize;

use super::inequalities::{sign_label, time_label};
use super::stats::linear_variance;
use crate::error::{Error, Result};
use crate::protocols::OutcomeTable;

/// Default invasiveness threshold on |W| for exact tables.
pub const WITNESS_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Defect {
    pub outcome: String,
    #[serde(skip)]
    pub tuple: Vec<i32>,
    pub w: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
    /// |W| above this is a violation.
    pub threshold: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum NsitVerdict {
    #[serde(rename = "non-invasive")]
    NonInvasive,
    #[serde(rename = "invasive")]
    Invasive,
}

/// Per-outcome NSIT defects W = reduced - (marginal of full).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WitnessReport {
    pub id: String,
    pub defects: Vec<Defect>,
    pub max_abs: f64,
    pub verdict: NsitVerdict,
}

impl WitnessReport {
    pub fn w(&self, outcome: &[i32]) -> Option<f64> {
        self.defects
            .iter()
            .find(|d| d.tuple == outcome)
            .map(|d| d.w)
    }

    fn rejudge(mut self) -> Self {
        self.verdict = if self.defects.iter().all(|d| d.w.abs() <= d.threshold) {
            NsitVerdict::NonInvasive
        } else {
            NsitVerdict::Invasive
        };
        self
    }

    /// Fixed threshold on every |W|.
    pub fn with_threshold(mut self, threshold: f64) -> Self {
        for d in &mut self.defects {
            d.threshold = threshold;
        }
        self.rejudge()
    }

    /// Threshold of k standard errors per outcome (never below
    /// [`WITNESS_TOL`]).
    pub fn with_statistical_threshold(mut self, k: f64) -> Self {
        for d in &mut self.defects {
            d.threshold = d
                .std_error
                .map_or(WITNESS_TOL, |se| (k * se).max(WITNESS_TOL));
        }
        self.rejudge()
    }

    pub fn is_non_invasive(&self) -> bool {
        self.verdict == NsitVerdict::NonInvasive
    }
}

/// Compares `reduced` with `full` summed over the 0-based slot positions in
/// `marginalize_over`. The remaining slots of `full` must match `reduced` in
/// order, times and labels.
pub fn check_nsit(
    full: &OutcomeTable,
    reduced: &OutcomeTable,
    marginalize_over: &[usize],
) -> Result<WitnessReport> {
    if marginalize_over.iter().any(|&k| k >= full.num_slots()) {
        return Err(Error::ArityMismatch(format!(
            "slot positions {marginalize_over:?} outside the full table"
        )));
    }
    let keep: Vec<usize> = (0..full.num_slots())
        .filter(|k| !marginalize_over.contains(k))
        .collect();
    if keep.is_empty() || keep.len() == full.num_slots() {
        return Err(Error::ArityMismatch(
            "must marginalize some but not all slots".into(),
        ));
    }
    let kept_times: Vec<usize> = keep.iter().map(|&k| full.times()[k]).collect();
    if reduced.num_slots() != keep.len()
        || reduced.times() != kept_times.as_slice()
        || keep
            .iter()
            .zip(reduced.slots())
            .any(|(&k, s)| &full.slots()[k] != s)
    {
        return Err(Error::ArityMismatch(format!(
            "reduced table over {:?} does not match full table over {:?} without slots {:?}",
            reduced.times(),
            full.times(),
            marginalize_over
        )));
    }
    let id = format!(
        "NSIT-({};{})",
        time_label(reduced.times()),
        time_label(full.times())
    );
    let marginal = full.marginal(&keep)?;
    let defects = reduced
        .entries()
        .into_iter()
        .map(|(t, p)| {
            let vr = linear_variance(reduced, |x| f64::from(u8::from(x == t.as_slice())));
            let vf = linear_variance(full, |x| {
                let tail: Vec<i32> = keep.iter().map(|&k| x[k]).collect();
                f64::from(u8::from(tail == t))
            });
            let std_error = match (vr, vf) {
                (None, None) => None,
                (a, b) => Some((a.unwrap_or(0.0) + b.unwrap_or(0.0)).sqrt()),
            };
            Defect {
                outcome: sign_label(&t),
                w: p - marginal.raw(&t).unwrap_or(0.0),
                tuple: t,
                std_error,
                threshold: WITNESS_TOL,
            }
        })
        .collect::<Vec<_>>();
    let max_abs = defects.iter().map(|d| d.w.abs()).fold(0.0, f64::max);
    Ok(WitnessReport {
        id,
        defects,
        max_abs,
        verdict: NsitVerdict::NonInvasive,
    }
    .rejudge())
}
