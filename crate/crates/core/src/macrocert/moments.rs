use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use super::stats::linear_variance;
use crate::error::{Error, Result};
use crate::protocols::OutcomeTable;

/// Product moment <Q_i Q_j ...> identified by its strictly increasing,
/// 1-based time indices. Displayed as `Q1`, `C12`, `D123`, `E1234`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MomentKey(Vec<usize>);

impl MomentKey {
    pub fn new(times: impl Into<Vec<usize>>) -> Result<Self> {
        let times = times.into();
        if times.is_empty() || times.len() > 4 {
            return Err(Error::InvalidMoments(format!(
                "moment order {} outside 1..=4",
                times.len()
            )));
        }
        if times[0] == 0 || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidMoments(format!(
                "indices {times:?} must be strictly increasing from 1"
            )));
        }
        Ok(MomentKey(times))
    }

    pub fn times(&self) -> &[usize] {
        &self.0
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    /// Every moment over times 1..=n, by order then lexicographically.
    pub fn all(n: usize) -> Vec<MomentKey> {
        let mut keys: Vec<MomentKey> = (1u32..1 << n)
            .map(|mask| MomentKey((1..=n).filter(|i| mask & (1 << (i - 1)) != 0).collect()))
            .collect();
        keys.sort_by(|a, b| a.order().cmp(&b.order()).then_with(|| a.0.cmp(&b.0)));
        keys
    }
}

impl fmt::Display for MomentKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let letter = ['Q', 'C', 'D', 'E'][self.0.len() - 1];
        write!(f, "{letter}")?;
        let sep = if self.0.iter().any(|&t| t > 9) {
            ","
        } else {
            ""
        };
        let idx: Vec<String> = self.0.iter().map(usize::to_string).collect();
        write!(f, "{}", idx.join(sep))
    }
}

impl FromStr for MomentKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidMoments(format!("cannot parse moment `{s}`"));
        let mut chars = s.chars();
        let order = match chars.next() {
            Some('Q') => 1,
            Some('C') => 2,
            Some('D') => 3,
            Some('E') => 4,
            _ => return Err(bad()),
        };
        let rest = chars.as_str();
        let times: Vec<usize> = if rest.contains(',') {
            rest.split(',')
                .map(|t| t.parse().map_err(|_| bad()))
                .collect::<Result<_>>()?
        } else {
            rest.chars()
                .map(|c| c.to_digit(10).map(|d| d as usize).ok_or_else(bad))
                .collect::<Result<_>>()?
        };
        if times.len() != order {
            return Err(bad());
        }
        MomentKey::new(times)
    }
}

impl Serialize for MomentKey {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Averages and correlators over n = 2..=4 times. A moment absent from the
/// set is unfixed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentSet {
    n: usize,
    values: BTreeMap<MomentKey, f64>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    std_errors: BTreeMap<MomentKey, f64>,
}

const RANGE_TOL: f64 = 1e-12;

impl MomentSet {
    pub fn new(n: usize) -> Result<Self> {
        if !(2..=4).contains(&n) {
            return Err(Error::InvalidMoments(format!("n = {n} outside 2..=4")));
        }
        Ok(MomentSet {
            n,
            values: BTreeMap::new(),
            std_errors: BTreeMap::new(),
        })
    }

    /// Moment set with every moment fixed, in [`MomentKey::all`] order.
    pub fn from_values(n: usize, values: &[f64]) -> Result<Self> {
        let keys = MomentKey::all(n);
        if values.len() != keys.len() {
            return Err(Error::InvalidMoments(format!(
                "{} values for {} moments",
                values.len(),
                keys.len()
            )));
        }
        let mut m = Self::new(n)?;
        for (k, v) in keys.into_iter().zip(values) {
            m.set(k, *v)?;
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn set(&mut self, key: MomentKey, value: f64) -> Result<()> {
        if key.times().iter().any(|&t| t > self.n) {
            return Err(Error::InvalidMoments(format!(
                "{key} refers to a time beyond n = {}",
                self.n
            )));
        }
        if !value.is_finite() || value.abs() > 1.0 + RANGE_TOL {
            return Err(Error::InvalidMoments(format!(
                "{key} = {value} outside [-1, 1]"
            )));
        }
        self.values.insert(key, value);
        Ok(())
    }

    /// Convenience for `set(MomentKey::new(times)?, value)`.
    pub fn fix(&mut self, times: &[usize], value: f64) -> Result<()> {
        self.set(MomentKey::new(times.to_vec())?, value)
    }

    pub fn set_std_error(&mut self, key: MomentKey, se: f64) {
        self.std_errors.insert(key, se);
    }

    pub fn unfix(&mut self, key: &MomentKey) {
        self.values.remove(key);
        self.std_errors.remove(key);
    }

    pub fn get(&self, key: &MomentKey) -> Option<f64> {
        self.values.get(key).copied()
    }

    pub fn require(&self, key: &MomentKey) -> Result<f64> {
        self.get(key)
            .ok_or_else(|| Error::UnfixedMoment(key.to_string()))
    }

    /// Value of the moment over `times`, if fixed.
    pub fn moment(&self, times: &[usize]) -> Option<f64> {
        MomentKey::new(times.to_vec())
            .ok()
            .and_then(|k| self.get(&k))
    }

    pub fn std_error(&self, key: &MomentKey) -> Option<f64> {
        self.std_errors.get(key).copied()
    }

    pub fn is_fixed(&self, key: &MomentKey) -> bool {
        self.values.contains_key(key)
    }

    /// Fixed/unfixed flag for every moment over n times.
    pub fn fixed_mask(&self) -> Vec<(MomentKey, bool)> {
        MomentKey::all(self.n)
            .into_iter()
            .map(|k| (k.clone(), self.is_fixed(&k)))
            .collect()
    }

    pub fn unfixed(&self) -> Vec<MomentKey> {
        MomentKey::all(self.n)
            .into_iter()
            .filter(|k| !self.is_fixed(k))
            .collect()
    }

    pub fn values(&self) -> &BTreeMap<MomentKey, f64> {
        &self.values
    }
}

/// Sum of the slot-product over `positions` weighted by the table entries.
pub(crate) fn product_moment(table: &OutcomeTable, positions: &[usize]) -> f64 {
    table
        .entries()
        .iter()
        .map(|(t, p)| positions.iter().map(|&k| t[k]).product::<i32>() as f64 * p)
        .sum()
}

/// Fills moments from dichotomic tables. A table over times T supplies the
/// moment over T; with `derive_lower` it also supplies every sub-moment not
/// supplied directly (first table wins).
pub fn moments_from_tables(
    n: usize,
    tables: &[OutcomeTable],
    derive_lower: bool,
) -> Result<MomentSet> {
    let mut m = MomentSet::new(n)?;
    let mut direct = BTreeMap::new();
    for (k, t) in tables.iter().enumerate() {
        if !t.is_dichotomic() {
            return Err(Error::ArityMismatch(format!(
                "table over {:?} is not dichotomic",
                t.times()
            )));
        }
        let key = MomentKey::new(t.times().to_vec()).map_err(|_| {
            Error::ArityMismatch(format!("table times {:?} are not increasing", t.times()))
        })?;
        if key.times().iter().any(|&i| i > n) {
            return Err(Error::ArityMismatch(format!(
                "table over {:?} exceeds n = {n}",
                t.times()
            )));
        }
        if direct.insert(key.clone(), k).is_some() {
            return Err(Error::DuplicateMoment(key.to_string()));
        }
    }
    let mut sources: BTreeMap<MomentKey, (usize, Vec<usize>)> = direct
        .iter()
        .map(|(key, &k)| (key.clone(), (k, (0..key.order()).collect())))
        .collect();
    if derive_lower {
        for (k, t) in tables.iter().enumerate() {
            let slots = t.num_slots();
            for mask in 1u32..(1 << slots) - 1 {
                let positions: Vec<usize> = (0..slots).filter(|p| mask & (1 << p) != 0).collect();
                let key = MomentKey(positions.iter().map(|&p| t.times()[p]).collect());
                sources.entry(key).or_insert((k, positions));
            }
        }
    }
    for (key, (k, positions)) in sources {
        let t = &tables[k];
        m.set(key.clone(), product_moment(t, &positions).clamp(-1.0, 1.0))?;
        if let Some(var) = linear_variance(t, |tuple| {
            positions.iter().map(|&p| tuple[p]).product::<i32>() as f64
        }) {
            m.set_std_error(key, var.sqrt());
        }
    }
    Ok(m)
}

/// Real-valued function on outcome tuples that need not be a probability:
/// candidate probabilities and quasi-probabilities.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SignedDistribution {
    times: Vec<usize>,
    #[serde(serialize_with = "serialize_entries")]
    entries: Vec<(Vec<i32>, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    std_errors: Option<Vec<f64>>,
}

fn serialize_entries<S: Serializer>(
    entries: &[(Vec<i32>, f64)],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut map = s.serialize_map(Some(entries.len()))?;
    for (t, v) in entries {
        map.serialize_entry(&crate::protocols::format_tuple(t), v)?;
    }
    map.end()
}

/// Candidate n-time probability built from moments.
pub type CandidateProbability = SignedDistribution;

impl SignedDistribution {
    pub(crate) fn new(
        times: Vec<usize>,
        entries: Vec<(Vec<i32>, f64)>,
        std_errors: Option<Vec<f64>>,
    ) -> Self {
        SignedDistribution {
            times,
            entries,
            std_errors,
        }
    }

    pub fn n(&self) -> usize {
        self.times.len()
    }

    pub fn times(&self) -> &[usize] {
        &self.times
    }

    pub fn get(&self, tuple: &[i32]) -> Option<f64> {
        self.entries
            .iter()
            .find(|(t, _)| t == tuple)
            .map(|(_, v)| *v)
    }

    pub fn entries(&self) -> &[(Vec<i32>, f64)] {
        &self.entries
    }

    pub fn std_errors(&self) -> Option<&[f64]> {
        self.std_errors.as_deref()
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v).sum()
    }

    pub fn min(&self) -> f64 {
        self.entries
            .iter()
            .map(|(_, v)| *v)
            .fold(f64::INFINITY, f64::min)
    }

    /// Sums over the slot at 0-based `position`.
    pub fn sum_over(&self, position: usize) -> SignedDistribution {
        let mut sums: BTreeMap<Vec<i32>, f64> = BTreeMap::new();
        let mut order = Vec::new();
        for (t, v) in &self.entries {
            let mut key = t.clone();
            key.remove(position);
            if !sums.contains_key(&key) {
                order.push(key.clone());
            }
            *sums.entry(key).or_insert(0.0) += v;
        }
        let mut times = self.times.clone();
        times.remove(position);
        let entries = order.into_iter().map(|k| (k.clone(), sums[&k])).collect();
        SignedDistribution {
            times,
            entries,
            std_errors: None,
        }
    }
}

pub(crate) fn sign_tuples(n: usize) -> Vec<Vec<i32>> {
    (0..1u32 << n)
        .map(|j| {
            (0..n)
                .map(|k| if (j >> (n - 1 - k)) & 1 == 0 { 1 } else { -1 })
                .collect()
        })
        .collect()
}

/// p(s) = 2^-n Sum_S Prod_{i in S} s_i m_S over every subset S of the n
/// times (m_{} = 1).
pub fn candidate_probability(m: &MomentSet) -> Result<CandidateProbability> {
    let n = m.n();
    let keys = MomentKey::all(n);
    let values = keys
        .iter()
        .map(|k| m.require(k))
        .collect::<Result<Vec<f64>>>()?;
    let scale = 0.5f64.powi(n as i32);
    let entries = sign_tuples(n)
        .into_iter()
        .map(|s| {
            let sum: f64 = keys
                .iter()
                .zip(&values)
                .map(|(k, v)| k.times().iter().map(|&i| s[i - 1]).product::<i32>() as f64 * v)
                .sum();
            (s, scale * (1.0 + sum))
        })
        .collect::<Vec<_>>();
    let has_se = keys.iter().any(|k| m.std_error(k).is_some());
    let std_errors = has_se.then(|| {
        let var: f64 = keys
            .iter()
            .map(|k| m.std_error(k).unwrap_or(0.0).powi(2))
            .sum();
        vec![scale * var.sqrt(); entries.len()]
    });
    Ok(SignedDistribution::new(
        (1..=n).collect(),
        entries,
        std_errors,
    ))
}
