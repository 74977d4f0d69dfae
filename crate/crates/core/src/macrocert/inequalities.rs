use serde::Serialize;

use super::moments::{CandidateProbability, MomentKey, MomentSet};
use super::stats::linear_variance;
use crate::error::{Error, Result};
use crate::protocols::{format_tuple, OutcomeTable};

/// Margins at or above `-MARGIN_TOL` count as satisfied.
pub const MARGIN_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Satisfied,
    Violated,
}

/// One condition in "margin >= 0" form.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionResult {
    pub id: String,
    pub margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InequalityReport {
    pub entries: Vec<ConditionResult>,
    /// Violation threshold in standard errors, when statistical.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_threshold: Option<f64>,
}

fn judge(margin: f64, std_error: Option<f64>, sigma: Option<f64>) -> Verdict {
    let slack = match (sigma, std_error) {
        (Some(k), Some(se)) => (k * se).max(MARGIN_TOL),
        _ => MARGIN_TOL,
    };
    if margin >= -slack {
        Verdict::Satisfied
    } else {
        Verdict::Violated
    }
}

impl InequalityReport {
    pub fn from_margins(margins: Vec<(String, f64, Option<f64>)>) -> Self {
        let entries = margins
            .into_iter()
            .map(|(id, margin, std_error)| ConditionResult {
                id,
                margin,
                std_error,
                verdict: judge(margin, std_error, None),
            })
            .collect();
        InequalityReport {
            entries,
            sigma_threshold: None,
        }
    }

    /// Re-judges every entry: violated only below -k standard errors.
    pub fn with_statistical_threshold(mut self, k: f64) -> Self {
        self.sigma_threshold = Some(k);
        for e in &mut self.entries {
            e.verdict = judge(e.margin, e.std_error, Some(k));
        }
        self
    }

    pub fn all_satisfied(&self) -> bool {
        self.entries.iter().all(|e| e.verdict == Verdict::Satisfied)
    }

    pub fn min_margin(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.margin)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn violations(&self) -> impl Iterator<Item = &ConditionResult> {
        self.entries
            .iter()
            .filter(|e| e.verdict == Verdict::Violated)
    }

    pub fn get(&self, id: &str) -> Option<&ConditionResult> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn margin(&self, id: &str) -> Option<f64> {
        self.get(id).map(|e| e.margin)
    }
}

/// constant + Sum coef * moment, with the propagated standard error.
fn linear_margin(
    m: &MomentSet,
    constant: f64,
    terms: &[(f64, &[usize])],
) -> Result<(f64, Option<f64>)> {
    let mut value = constant;
    let mut var = 0.0;
    let mut statistical = false;
    for (coef, times) in terms {
        let key = MomentKey::new(times.to_vec())?;
        value += coef * m.require(&key)?;
        if let Some(se) = m.std_error(&key) {
            statistical = true;
            var += coef * coef * se * se;
        }
    }
    Ok((value, statistical.then(|| var.sqrt())))
}

pub(crate) fn time_label(times: &[usize]) -> String {
    let sep = if times.iter().any(|&t| t > 9) {
        ","
    } else {
        ""
    };
    times
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(sep)
}

pub(crate) fn sign_label(t: &[i32]) -> String {
    if t.iter().all(|v| v.abs() == 1) {
        t.iter()
            .map(|&v| if v > 0 { "+" } else { "-" })
            .collect::<Vec<_>>()
            .join(",")
    } else {
        format_tuple(t)
    }
}

/// Three-time LG inequalities over C12, C23, C13.
pub fn check_lg3(m: &MomentSet) -> Result<InequalityReport> {
    let patterns = [
        (1.0, 1.0, 1.0),
        (-1.0, -1.0, 1.0),
        (1.0, -1.0, -1.0),
        (-1.0, 1.0, -1.0),
    ];
    let margins = patterns
        .iter()
        .enumerate()
        .map(|(k, (a, b, c))| {
            let (v, se) = linear_margin(m, 1.0, &[(*a, &[1, 2]), (*b, &[2, 3]), (*c, &[1, 3])])?;
            Ok((format!("LG3-{}", k + 1), v, se))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(InequalityReport::from_margins(margins))
}

fn lg2_pairs(n: usize) -> Vec<(usize, usize)> {
    match n {
        2 => vec![(1, 2)],
        3 => vec![(1, 2), (2, 3), (1, 3)],
        _ => vec![(1, 2), (2, 3), (3, 4), (1, 4)],
    }
}

/// Two-time LG inequalities 1 + s_i<Q_i> + s_j<Q_j> + s_i s_j C_ij >= 0 for
/// every adjacent pair and the outer pair. Per pair the sign patterns run
/// (+,+), (-,-), (+,-), (-,+).
pub fn check_lg2(m: &MomentSet) -> Result<InequalityReport> {
    let mut margins = Vec::new();
    for (i, j) in lg2_pairs(m.n()) {
        for (k, (si, sj)) in [(1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)]
            .iter()
            .enumerate()
        {
            let (v, se) = linear_margin(m, 1.0, &[(*si, &[i]), (*sj, &[j]), (si * sj, &[i, j])])?;
            margins.push((format!("LG2-{}-{}", time_label(&[i, j]), k + 1), v, se));
        }
    }
    Ok(InequalityReport::from_margins(margins))
}

/// Four-time CHSH-type inequalities |C12 + C23 + C34 + C14 - 2 C_k| <= 2,
/// each of the four correlators negated in turn, both overall signs.
pub fn check_lg4(m: &MomentSet) -> Result<InequalityReport> {
    if m.n() != 4 {
        return Err(Error::InvalidMoments(format!(
            "four-time inequalities need n = 4, got {}",
            m.n()
        )));
    }
    let pairs: [[usize; 2]; 4] = [[1, 2], [2, 3], [3, 4], [1, 4]];
    let mut margins = Vec::new();
    for flipped in 0..4 {
        let signs: Vec<f64> = (0..4)
            .map(|k| if k == flipped { -1.0 } else { 1.0 })
            .collect();
        for (half, overall) in [-1.0, 1.0].iter().enumerate() {
            let terms: Vec<(f64, &[usize])> = pairs
                .iter()
                .zip(&signs)
                .map(|(p, s)| (overall * s, p.as_slice()))
                .collect();
            let (v, se) = linear_margin(m, 2.0, &terms)?;
            margins.push((format!("LG4-{}", 2 * flipped + half + 1), v, se));
        }
    }
    Ok(InequalityReport::from_margins(margins))
}

/// Every candidate entry must be non-negative.
pub fn check_nonnegativity(c: &CandidateProbability) -> InequalityReport {
    let margins = c
        .entries()
        .iter()
        .enumerate()
        .map(|(k, (t, v))| {
            (
                format!("NONNEG-({})", sign_label(t)),
                *v,
                c.std_errors().map(|se| se[k]),
            )
        })
        .collect();
    InequalityReport::from_margins(margins)
}

/// reduced(tail) - full(head, tail) >= 0 for every outcome of `full`, where
/// the reduced experiment omits some of the full experiment's times.
pub fn check_monotonicity(full: &OutcomeTable, reduced: &OutcomeTable) -> Result<InequalityReport> {
    let positions = reduced
        .times()
        .iter()
        .map(|t| full.position_of_time(*t))
        .collect::<Option<Vec<usize>>>()
        .ok_or_else(|| {
            Error::ArityMismatch(format!(
                "times {:?} are not a subset of {:?}",
                reduced.times(),
                full.times()
            ))
        })?;
    if positions.len() >= full.num_slots() || positions.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::ArityMismatch(format!(
            "{:?} is not a proper ordered sub-experiment of {:?}",
            reduced.times(),
            full.times()
        )));
    }
    if positions
        .iter()
        .zip(reduced.slots())
        .any(|(&p, s)| &full.slots()[p] != s)
    {
        return Err(Error::ArityMismatch(
            "outcome labels differ between the experiments".into(),
        ));
    }
    let prefix = format!(
        "MONO-({};{})",
        time_label(reduced.times()),
        time_label(full.times())
    );
    let margins = full
        .entries()
        .into_iter()
        .map(|(t, p)| {
            let tail: Vec<i32> = positions.iter().map(|&k| t[k]).collect();
            let r = reduced.get(&tail);
            let vr = linear_variance(reduced, |x| f64::from(u8::from(x == tail.as_slice())));
            let vf = linear_variance(full, |x| f64::from(u8::from(x == t.as_slice())));
            let se = match (vr, vf) {
                (None, None) => None,
                (a, b) => Some((a.unwrap_or(0.0) + b.unwrap_or(0.0)).sqrt()),
            };
            (format!("{prefix}-({})", sign_label(&t)), r - p, se)
        })
        .collect();
    Ok(InequalityReport::from_margins(margins))
}
