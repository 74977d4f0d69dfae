use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the probabilities of a table were obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sampling {
    /// Exact quantum probabilities.
    Exact,
    /// counts/shots from one multinomial experiment.
    Multinomial { shots: u64 },
    /// Entries sharing all but the last outcome come from one experiment of
    /// `shots` runs; different prefixes come from different experiments.
    PrefixAssembled { shots: u64 },
}

impl Sampling {
    pub fn shots(&self) -> Option<u64> {
        match self {
            Sampling::Exact => None,
            Sampling::Multinomial { shots } | Sampling::PrefixAssembled { shots } => Some(*shots),
        }
    }
}

const RANGE_TOL: f64 = 1e-12;
const EXACT_SUM_TOL: f64 = 1e-10;

/// Probability distribution over outcome tuples, one slot per measured time.
///
/// `times` carries the 1-based schedule index of each slot. Entries are stored
/// densely in row-major order over the slots' label lists.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeTable {
    times: Vec<usize>,
    slots: Vec<Vec<i32>>,
    probs: Vec<f64>,
    sampling: Sampling,
}

impl OutcomeTable {
    pub fn new(
        times: Vec<usize>,
        slots: Vec<Vec<i32>>,
        probs: Vec<f64>,
        sampling: Sampling,
    ) -> Result<Self> {
        if slots.is_empty() {
            return Err(Error::InvalidTable(
                "a table needs at least one slot".into(),
            ));
        }
        if times.len() != slots.len() {
            return Err(Error::InvalidTable(format!(
                "{} time labels for {} slots",
                times.len(),
                slots.len()
            )));
        }
        for labels in &slots {
            let mut sorted = labels.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if labels.is_empty() || sorted.len() != labels.len() {
                return Err(Error::InvalidTable(
                    "slot labels must be non-empty and distinct".into(),
                ));
            }
        }
        let size: usize = slots.iter().map(Vec::len).product();
        if probs.len() != size {
            return Err(Error::InvalidTable(format!(
                "expected {size} probabilities, got {}",
                probs.len()
            )));
        }
        if let Some(p) = probs
            .iter()
            .find(|p| !p.is_finite() || **p < -RANGE_TOL || **p > 1.0 + RANGE_TOL)
        {
            return Err(Error::InvalidTable(format!(
                "probability {p} outside [0, 1]"
            )));
        }
        let table = OutcomeTable {
            times,
            slots,
            probs,
            sampling,
        };
        let total = table.total();
        match sampling {
            Sampling::Exact if (total - 1.0).abs() > EXACT_SUM_TOL => {
                Err(Error::InvalidTable(format!("exact table sums to {total}")))
            }
            Sampling::Multinomial { .. } if (total - 1.0).abs() > RANGE_TOL => Err(
                Error::InvalidTable(format!("empirical table sums to {total}")),
            ),
            Sampling::Multinomial { shots: 0 } | Sampling::PrefixAssembled { shots: 0 } => Err(
                Error::InvalidTable("empirical table with zero shots".into()),
            ),
            _ => Ok(table),
        }
    }

    /// Builds a table by evaluating `f` on every outcome tuple.
    pub fn from_fn(
        times: Vec<usize>,
        slots: Vec<Vec<i32>>,
        sampling: Sampling,
        mut f: impl FnMut(&[i32]) -> f64,
    ) -> Result<Self> {
        let probs = tuples(&slots).iter().map(|t| f(t)).collect();
        Self::new(times, slots, probs, sampling)
    }

    /// Dichotomic table over the given schedule indices.
    pub fn dichotomic(times: Vec<usize>, f: impl FnMut(&[i32]) -> f64) -> Result<Self> {
        let slots = vec![vec![1, -1]; times.len()];
        Self::from_fn(times, slots, Sampling::Exact, f)
    }

    pub(crate) fn from_parts_unchecked(
        times: Vec<usize>,
        slots: Vec<Vec<i32>>,
        probs: Vec<f64>,
        sampling: Sampling,
    ) -> Self {
        OutcomeTable {
            times,
            slots,
            probs,
            sampling,
        }
    }

    pub fn times(&self) -> &[usize] {
        &self.times
    }

    pub fn slots(&self) -> &[Vec<i32>] {
        &self.slots
    }

    pub fn num_slots(&self) -> usize {
        self.slots.len()
    }

    pub fn sampling(&self) -> Sampling {
        self.sampling
    }

    pub fn is_exact(&self) -> bool {
        self.sampling == Sampling::Exact
    }

    pub fn is_dichotomic(&self) -> bool {
        self.slots.iter().all(|s| s == &[1, -1])
    }

    /// Same table with different schedule labels.
    pub fn with_times(mut self, times: Vec<usize>) -> Result<Self> {
        if times.len() != self.slots.len() {
            return Err(Error::InvalidTable(
                "time label count differs from slot count".into(),
            ));
        }
        self.times = times;
        Ok(self)
    }

    fn index_of(&self, outcome: &[i32]) -> Option<usize> {
        if outcome.len() != self.slots.len() {
            return None;
        }
        let mut index = 0;
        for (labels, value) in self.slots.iter().zip(outcome) {
            let k = labels.iter().position(|l| l == value)?;
            index = index * labels.len() + k;
        }
        Some(index)
    }

    /// Stored value for an outcome tuple, unclamped; `None` for unknown tuples.
    pub fn raw(&self, outcome: &[i32]) -> Option<f64> {
        self.index_of(outcome).map(|i| self.probs[i])
    }

    /// Probability clamped to [0, 1]; 0 for tuples outside the table.
    pub fn get(&self, outcome: &[i32]) -> f64 {
        self.raw(outcome).map_or(0.0, |p| p.clamp(0.0, 1.0))
    }

    /// All (tuple, clamped probability) pairs in row-major order.
    pub fn entries(&self) -> Vec<(Vec<i32>, f64)> {
        tuples(&self.slots)
            .into_iter()
            .zip(&self.probs)
            .map(|(t, p)| (t, p.clamp(0.0, 1.0)))
            .collect()
    }

    pub fn raw_probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Sums over every slot not listed in `keep` (0-based slot positions).
    pub fn marginal(&self, keep: &[usize]) -> Result<OutcomeTable> {
        if keep.is_empty() {
            return Err(Error::InvalidTable(
                "marginal needs at least one kept slot".into(),
            ));
        }
        let mut keep = keep.to_vec();
        keep.sort_unstable();
        if keep.windows(2).any(|w| w[0] == w[1]) || keep.iter().any(|&k| k >= self.slots.len()) {
            return Err(Error::InvalidTable(format!("invalid kept slots {keep:?}")));
        }
        let times: Vec<usize> = keep.iter().map(|&k| self.times[k]).collect();
        let slots: Vec<Vec<i32>> = keep.iter().map(|&k| self.slots[k].clone()).collect();
        let mut sums: BTreeMap<Vec<i32>, f64> = BTreeMap::new();
        for (t, p) in tuples(&self.slots).into_iter().zip(&self.probs) {
            let key: Vec<i32> = keep.iter().map(|&k| t[k]).collect();
            *sums.entry(key).or_insert(0.0) += p;
        }
        let probs = tuples(&slots).iter().map(|t| sums[t]).collect();
        Ok(OutcomeTable {
            times,
            slots,
            probs,
            sampling: self.sampling,
        })
    }

    /// Slot position of a schedule index.
    pub fn position_of_time(&self, time: usize) -> Option<usize> {
        self.times.iter().position(|&t| t == time)
    }

    /// JSON object `{"times", "slots", "probabilities", ["shots"], ["assembled_by_prefix"]}`.
    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(TableJson::from(self)).expect("table serializes")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&TableJson::from(self)).expect("table serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: TableJson =
            serde_json::from_str(s).map_err(|e| Error::Serialization(e.to_string()))?;
        raw.try_into()
    }

    /// CSV with one column per slot (`t<k>`) and a `probability` column.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = self.times.iter().map(|t| format!("t{t}")).collect();
        let _ = writeln!(out, "{},probability", header.join(","));
        for (t, p) in tuples(&self.slots).iter().zip(&self.probs) {
            let cells: Vec<String> = t.iter().map(|v| format_label(*v)).collect();
            let _ = writeln!(out, "{},{}", cells.join(","), p);
        }
        out
    }

    /// Parses [`OutcomeTable::to_csv`] output. Slot label sets are taken in
    /// order of first appearance; the sampling mode is supplied by the caller.
    pub fn from_csv(s: &str, sampling: Sampling) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(s.as_bytes());
        let ser = |e: csv::Error| Error::Serialization(e.to_string());
        let headers = reader.headers().map_err(ser)?.clone();
        let n = headers.len().saturating_sub(1);
        if n == 0 || &headers[n] != "probability" {
            return Err(Error::Serialization(
                "expected slot columns followed by `probability`".into(),
            ));
        }
        let times = (0..n)
            .map(|k| {
                headers[k]
                    .strip_prefix('t')
                    .and_then(|v| v.parse::<usize>().ok())
                    .ok_or_else(|| {
                        Error::Serialization(format!("bad slot header `{}`", &headers[k]))
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut slots: Vec<Vec<i32>> = vec![Vec::new(); n];
        let mut values: BTreeMap<Vec<i32>, f64> = BTreeMap::new();
        for record in reader.records() {
            let record = record.map_err(ser)?;
            let mut tuple = Vec::with_capacity(n);
            for k in 0..n {
                let v = parse_label(&record[k])?;
                if !slots[k].contains(&v) {
                    slots[k].push(v);
                }
                tuple.push(v);
            }
            let p: f64 = record[n]
                .parse()
                .map_err(|_| Error::Serialization(format!("bad probability `{}`", &record[n])))?;
            if values.insert(tuple, p).is_some() {
                return Err(Error::Serialization("duplicate outcome row".into()));
            }
        }
        let probs = tuples(&slots)
            .iter()
            .map(|t| {
                values
                    .get(t)
                    .copied()
                    .ok_or_else(|| Error::Serialization(format!("missing row {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(times, slots, probs, sampling)
    }
}

/// Every outcome tuple in row-major order.
pub(crate) fn tuples(slots: &[Vec<i32>]) -> Vec<Vec<i32>> {
    let mut out: Vec<Vec<i32>> = vec![Vec::new()];
    for labels in slots {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                labels.iter().map(move |l| {
                    let mut t = prefix.clone();
                    t.push(*l);
                    t
                })
            })
            .collect();
    }
    out
}

/// "+1", "-1", "+2", ...
pub fn format_label(v: i32) -> String {
    format!("{v:+}")
}

pub fn format_tuple(t: &[i32]) -> String {
    t.iter()
        .map(|v| format_label(*v))
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_label(s: &str) -> Result<i32> {
    s.trim()
        .parse()
        .map_err(|_| Error::Serialization(format!("bad outcome label `{s}`")))
}

#[derive(Serialize, Deserialize)]
struct TableJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    times: Option<Vec<usize>>,
    slots: Vec<Vec<String>>,
    probabilities: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    shots: Option<u64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    assembled_by_prefix: bool,
}

impl From<&OutcomeTable> for TableJson {
    fn from(t: &OutcomeTable) -> Self {
        TableJson {
            times: Some(t.times.clone()),
            slots: t
                .slots
                .iter()
                .map(|s| s.iter().map(|v| format_label(*v)).collect())
                .collect(),
            probabilities: tuples(&t.slots)
                .iter()
                .zip(&t.probs)
                .map(|(k, p)| (format_tuple(k), *p))
                .collect(),
            shots: t.sampling.shots(),
            assembled_by_prefix: matches!(t.sampling, Sampling::PrefixAssembled { .. }),
        }
    }
}

impl TryFrom<TableJson> for OutcomeTable {
    type Error = Error;

    fn try_from(raw: TableJson) -> Result<Self> {
        let slots = raw
            .slots
            .iter()
            .map(|s| s.iter().map(|v| parse_label(v)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let times = raw.times.unwrap_or_else(|| (1..=slots.len()).collect());
        let mut values = BTreeMap::new();
        for (key, p) in &raw.probabilities {
            let tuple = key
                .split(',')
                .map(parse_label)
                .collect::<Result<Vec<_>>>()?;
            values.insert(tuple, *p);
        }
        let probs = tuples(&slots)
            .iter()
            .map(|t| {
                values.remove(t).ok_or_else(|| {
                    Error::Serialization(format!("missing probability for {}", format_tuple(t)))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(extra) = values.keys().next() {
            return Err(Error::Serialization(format!(
                "unexpected outcome {}",
                format_tuple(extra)
            )));
        }
        let sampling = match (raw.shots, raw.assembled_by_prefix) {
            (None, false) => Sampling::Exact,
            (Some(shots), false) => Sampling::Multinomial { shots },
            (Some(shots), true) => Sampling::PrefixAssembled { shots },
            (None, true) => {
                return Err(Error::Serialization("assembled table without shots".into()))
            }
        };
        OutcomeTable::new(times, slots, probs, sampling)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_pair() -> OutcomeTable {
        OutcomeTable::dichotomic(vec![1, 2], |_| 0.25).unwrap()
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(OutcomeTable::dichotomic(vec![1], |_| 0.6).is_err());
        assert!(OutcomeTable::dichotomic(vec![1], |t| if t[0] == 1 { 1.2 } else { -0.2 }).is_err());
        assert!(
            OutcomeTable::new(vec![1], vec![vec![1, 1]], vec![0.5, 0.5], Sampling::Exact).is_err()
        );
        assert!(OutcomeTable::new(
            vec![1, 2],
            vec![vec![1, -1]],
            vec![0.5, 0.5],
            Sampling::Exact
        )
        .is_err());
    }

    #[test]
    fn get_clamps_and_defaults() {
        let t = OutcomeTable::new(
            vec![1],
            vec![vec![1, -1]],
            vec![1.0 + 5e-13, -5e-13],
            Sampling::Exact,
        )
        .unwrap();
        assert_eq!(t.get(&[1]), 1.0);
        assert_eq!(t.get(&[-1]), 0.0);
        assert_eq!(t.get(&[3]), 0.0);
        assert_eq!(t.raw(&[-1]), Some(-5e-13));
    }

    #[test]
    fn marginal_examples() {
        let t = uniform_pair();
        assert_eq!(t.marginal(&[0, 1]).unwrap(), t);
        let m = t.marginal(&[1]).unwrap();
        assert_eq!(m.times(), &[2]);
        assert_eq!(m.raw_probabilities(), &[0.5, 0.5]);
        assert!(t.marginal(&[]).is_err());
        assert!(t.marginal(&[2]).is_err());
        assert!(t.marginal(&[0, 0]).is_err());
    }

    #[test]
    fn json_layout() {
        let t = OutcomeTable::dichotomic(vec![1], |s| if s[0] == 1 { 0.75 } else { 0.25 }).unwrap();
        assert_eq!(
            t.to_json(),
            r#"{"times":[1],"slots":[["+1","-1"]],"probabilities":{"+1":0.75,"-1":0.25}}"#
        );
        let minimal = r#"{"slots":[["+1","-1"]],"probabilities":{"+1":0.75,"-1":0.25}}"#;
        assert_eq!(OutcomeTable::from_json(minimal).unwrap(), t);
        let missing = r#"{"slots":[["+1","-1"]],"probabilities":{"+1":1.0}}"#;
        assert!(OutcomeTable::from_json(missing).is_err());
    }

    #[test]
    fn csv_layout() {
        let t = OutcomeTable::from_fn(
            vec![1, 3],
            vec![vec![1, 2, 3], vec![1, -1]],
            Sampling::Exact,
            |s| {
                if s == [2, -1] {
                    1.0
                } else {
                    0.0
                }
            },
        )
        .unwrap();
        let csv = t.to_csv();
        assert!(csv.starts_with("t1,t3,probability\n+1,+1,0\n"));
        assert_eq!(OutcomeTable::from_csv(&csv, Sampling::Exact).unwrap(), t);
    }
}
