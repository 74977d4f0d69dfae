use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::ClumsinessModel;

/// Measurement times t_1 <= t_2 <= ... <= t_m, all positive.
///
/// Coincident times are accepted (two measurements at the same instant);
/// decreasing times are not.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Schedule(Vec<f64>);

impl Schedule {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidSchedule("schedule is empty".into()));
        }
        if let Some(t) = times.iter().find(|t| !t.is_finite() || **t <= 0.0) {
            return Err(Error::InvalidSchedule(format!(
                "time {t} must be finite and > 0"
            )));
        }
        if let Some(k) = times.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::InvalidSchedule(format!(
                "times must be increasing: t{} = {} > t{} = {}",
                k + 1,
                times[k],
                k + 2,
                times[k + 1]
            )));
        }
        Ok(Schedule(times))
    }

    /// t, t + gap, t + 2 gap, ...
    pub fn equally_spaced(first: f64, gap: f64, count: usize) -> Result<Self> {
        Self::new((0..count).map(|k| first + gap * k as f64).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Time of the 1-based schedule index `k`.
    pub fn time(&self, k: usize) -> f64 {
        self.0[k - 1]
    }

    pub fn times(&self) -> &[f64] {
        &self.0
    }
}

/// Which protocol produces the multi-time statistics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolMode {
    /// Sequential projective measurements.
    Projective,
    /// Ideal negative measurements, assembled over detector couplings.
    Inrm,
    /// Projective measurements with a dephasing channel at the diagonalization times.
    ProjectiveDephased,
    /// Ideal negative measurements with a dephasing channel at the diagonalization times.
    InrmDephased,
    /// Projective measurements with an ancilla blind measurement at the diagonalization times.
    AncillaBlind,
}

impl ProtocolMode {
    pub const ALL: [ProtocolMode; 5] = [
        ProtocolMode::Projective,
        ProtocolMode::Inrm,
        ProtocolMode::ProjectiveDephased,
        ProtocolMode::InrmDephased,
        ProtocolMode::AncillaBlind,
    ];

    pub fn is_inrm(self) -> bool {
        matches!(self, ProtocolMode::Inrm | ProtocolMode::InrmDephased)
    }

    /// Whether a diagonalization mechanism acts before chosen measurements.
    pub fn diagonalizes(self) -> bool {
        !matches!(self, ProtocolMode::Projective | ProtocolMode::Inrm)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolMode::Projective => "projective",
            ProtocolMode::Inrm => "inrm",
            ProtocolMode::ProjectiveDephased => "projective_dephased",
            ProtocolMode::InrmDephased => "inrm_dephased",
            ProtocolMode::AncillaBlind => "ancilla_blind",
        }
    }
}

impl fmt::Display for ProtocolMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProtocolMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProtocolMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown protocol mode `{s}`")))
    }
}

/// Protocol choice, diagonalization placement, clumsiness and sampling.
///
/// `dephase_times` holds 1-based schedule indices at which the
/// diagonalization acts immediately before the measurement time (or, for an
/// experiment that does not measure there, in place of it). Clumsiness acts
/// immediately before the first measurement of any experiment that measures
/// more than once. `shots = 0` requests exact probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolConfig {
    pub mode: ProtocolMode,
    pub dephase_times: BTreeSet<usize>,
    pub clumsiness: ClumsinessModel,
    pub shots: u64,
    pub seed: u64,
}

impl ProtocolConfig {
    pub fn new(mode: ProtocolMode) -> Self {
        ProtocolConfig {
            mode,
            dephase_times: BTreeSet::new(),
            clumsiness: ClumsinessModel::None,
            shots: 0,
            seed: 0,
        }
    }

    pub fn projective() -> Self {
        Self::new(ProtocolMode::Projective)
    }

    pub fn inrm() -> Self {
        Self::new(ProtocolMode::Inrm)
    }

    pub fn dephased(times: impl IntoIterator<Item = usize>) -> Self {
        Self::new(ProtocolMode::ProjectiveDephased).with_dephase_times(times)
    }

    pub fn inrm_dephased(times: impl IntoIterator<Item = usize>) -> Self {
        Self::new(ProtocolMode::InrmDephased).with_dephase_times(times)
    }

    pub fn ancilla_blind(times: impl IntoIterator<Item = usize>) -> Self {
        Self::new(ProtocolMode::AncillaBlind).with_dephase_times(times)
    }

    pub fn with_dephase_times(mut self, times: impl IntoIterator<Item = usize>) -> Self {
        self.dephase_times = times.into_iter().collect();
        self
    }

    pub fn with_clumsiness(mut self, clumsiness: ClumsinessModel) -> Self {
        self.clumsiness = clumsiness;
        self
    }

    pub fn with_shots(mut self, shots: u64, seed: u64) -> Self {
        self.shots = shots;
        self.seed = seed;
        self
    }

    pub fn is_exact(&self) -> bool {
        self.shots == 0
    }

    pub fn validate(&self, schedule: &Schedule) -> Result<()> {
        if let Some(&k) = self
            .dephase_times
            .iter()
            .find(|&&k| k == 0 || k > schedule.len())
        {
            return Err(Error::InvalidConfig(format!(
                "diagonalization index {k} outside schedule 1..={}",
                schedule.len()
            )));
        }
        if self.mode.diagonalizes() && self.dephase_times.is_empty() {
            return Err(Error::InvalidConfig(format!(
                "mode {} needs at least one diagonalization index",
                self.mode
            )));
        }
        if !self.mode.diagonalizes() && !self.dephase_times.is_empty() {
            return Err(Error::InvalidConfig(format!(
                "mode {} takes no diagonalization indices",
                self.mode
            )));
        }
        self.clumsiness.validate(None)
    }
}
