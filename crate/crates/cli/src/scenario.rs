use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use macroreal::protocols::{ProtocolConfig, ProtocolMode, Schedule};
use macroreal::qcore::{
    ClumsinessModel, ComplexMatrix, DensityOperator, DichotomicObservable, Hamiltonian, C64,
};
use serde::Deserialize;
use serde_json::Value;

use crate::error::CliError;

/// Conditions a scenario can request.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Deserialize)]
pub enum Check {
    #[serde(rename = "LG2")]
    Lg2,
    #[serde(rename = "LG3")]
    Lg3,
    #[serde(rename = "LG4")]
    Lg4,
    #[serde(rename = "NSIT")]
    Nsit,
    #[serde(rename = "NSIT3")]
    Nsit3,
    #[serde(rename = "NONNEG")]
    Nonneg,
    #[serde(rename = "MONO")]
    Mono,
    #[serde(rename = "FEASIBLE")]
    Feasible,
    #[serde(rename = "APPENDIX")]
    Appendix,
}

impl Check {
    pub fn name(self) -> &'static str {
        match self {
            Check::Lg2 => "LG2",
            Check::Lg3 => "LG3",
            Check::Lg4 => "LG4",
            Check::Nsit => "NSIT",
            Check::Nsit3 => "NSIT3",
            Check::Nonneg => "NONNEG",
            Check::Mono => "MONO",
            Check::Feasible => "FEASIBLE",
            Check::Appendix => "APPENDIX",
        }
    }
}

/// A validated scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub rho: DensityOperator,
    pub h: Hamiltonian,
    pub q: DichotomicObservable,
    pub schedule: Schedule,
    pub config: ProtocolConfig,
    pub checks: Vec<Check>,
    pub derive_lower_moments: bool,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

type MatrixSpec = Vec<Vec<Entry>>;

#[derive(Deserialize)]
#[serde(untagged)]
enum StateSpec {
    Preset(String),
    Matrix { matrix: MatrixSpec },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum HamiltonianSpec {
    Matrix { matrix: MatrixSpec },
    Preset { preset: String, omega: Option<f64> },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ObservableSpec {
    Preset(String),
    Matrix { matrix: MatrixSpec },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleSpec {
    start: f64,
    gap: f64,
    count: usize,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum TimeUnit {
    Factor(f64),
    Name(String),
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum ClumsinessSpec {
    None,
    Depolarizing { strength: f64 },
    UnitaryKick { angle: f64, generator: MatrixSpec },
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ProtocolSpec {
    #[serde(default)]
    mode: Option<ProtocolMode>,
    #[serde(default)]
    dephase_at: Option<Vec<usize>>,
    #[serde(default)]
    clumsiness: Option<ClumsinessSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    dimension: usize,
    initial_state: StateSpec,
    hamiltonian: HamiltonianSpec,
    #[serde(default)]
    observable: Option<ObservableSpec>,
    #[serde(default)]
    times: Option<Vec<f64>>,
    #[serde(default)]
    schedule: Option<ScheduleSpec>,
    #[serde(default)]
    time_unit: Option<TimeUnit>,
    #[serde(default)]
    protocol: ProtocolSpec,
    #[serde(default)]
    checks: Vec<Check>,
    #[serde(default)]
    shots: u64,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    derive_lower_moments: bool,
}

fn invalid(field: &str, e: macroreal::Error) -> CliError {
    let message = e.to_string();
    let message = match message.strip_prefix(&format!("invalid {field}: ")) {
        Some(rest) => rest.to_string(),
        None => message,
    };
    CliError::Invalid {
        field: field.to_string(),
        message,
    }
}

fn invalid_msg(field: &str, message: impl Into<String>) -> CliError {
    CliError::Invalid {
        field: field.to_string(),
        message: message.into(),
    }
}

fn matrix(field: &str, spec: &MatrixSpec) -> Result<ComplexMatrix, CliError> {
    let rows: Vec<Vec<C64>> = spec
        .iter()
        .map(|r| {
            r.iter()
                .map(|e| match e {
                    Entry::Real(x) => C64::new(*x, 0.0),
                    Entry::Complex([re, im]) => C64::new(*re, *im),
                })
                .collect()
        })
        .collect();
    ComplexMatrix::from_rows(&rows).map_err(|e| invalid(field, e))
}

fn check_dim(field: &str, m: &ComplexMatrix, d: usize) -> Result<(), CliError> {
    if m.dim() != d {
        return Err(invalid(
            field,
            macroreal::Error::DimensionMismatch {
                expected: d,
                found: m.dim(),
            },
        ));
    }
    Ok(())
}

fn qubit_only(field: &str, preset: &str, d: usize) -> Result<(), CliError> {
    if d != 2 {
        return Err(invalid_msg(
            field,
            format!("preset `{preset}` needs dimension 2, got {d}"),
        ));
    }
    Ok(())
}

impl Scenario {
    /// Parses and validates scenario JSON.
    pub fn from_json_str(text: &str) -> Result<Self, CliError> {
        let value: Value = serde_json::from_str(text).map_err(CliError::from_json)?;
        Self::from_value(value)
    }

    pub fn from_value(value: Value) -> Result<Self, CliError> {
        let file: ScenarioFile = serde_json::from_value(value).map_err(CliError::from_json)?;
        file.validate()
    }
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    Scenario::from_json_str(&text)
}

impl ScenarioFile {
    fn validate(self) -> Result<Scenario, CliError> {
        let d = self.dimension;
        if !(2..=16).contains(&d) {
            return Err(invalid_msg("dimension", format!("{d} outside 2..=16")));
        }
        let rho = match &self.initial_state {
            StateSpec::Preset(name) => match name.as_str() {
                "maximally_mixed" => DensityOperator::maximally_mixed(d),
                "ground" => {
                    DensityOperator::basis_state(d, 0).map_err(|e| invalid("initial_state", e))?
                }
                "plus_x" => {
                    qubit_only("initial_state", name, d)?;
                    DensityOperator::plus_x()
                }
                other => {
                    return Err(invalid_msg(
                        "initial_state",
                        format!("unknown preset `{other}`"),
                    ))
                }
            },
            StateSpec::Matrix { matrix: m } => {
                let m = matrix("initial_state", m)?;
                check_dim("initial_state", &m, d)?;
                DensityOperator::new(m).map_err(|e| invalid("initial_state", e))?
            }
        };
        let h = match &self.hamiltonian {
            HamiltonianSpec::Preset { preset, omega } => match preset.as_str() {
                "precession" => {
                    qubit_only("hamiltonian", preset, d)?;
                    let omega = omega
                        .ok_or_else(|| invalid_msg("hamiltonian", "precession needs `omega`"))?;
                    Hamiltonian::precession(omega).map_err(|e| invalid("hamiltonian", e))?
                }
                "zero" => Hamiltonian::zero(d),
                other => {
                    return Err(invalid_msg(
                        "hamiltonian",
                        format!("unknown preset `{other}`"),
                    ))
                }
            },
            HamiltonianSpec::Matrix { matrix: m } => {
                let m = matrix("hamiltonian", m)?;
                check_dim("hamiltonian", &m, d)?;
                Hamiltonian::new(m).map_err(|e| invalid("hamiltonian", e))?
            }
        };
        let q = match &self.observable {
            None => {
                qubit_only("observable", "sigma_z", d)?;
                DichotomicObservable::sigma_z()
            }
            Some(ObservableSpec::Preset(name)) if name == "sigma_z" => {
                qubit_only("observable", name, d)?;
                DichotomicObservable::sigma_z()
            }
            Some(ObservableSpec::Preset(other)) => {
                return Err(invalid_msg(
                    "observable",
                    format!("unknown preset `{other}`"),
                ))
            }
            Some(ObservableSpec::Matrix { matrix: m }) => {
                let m = matrix("observable", m)?;
                check_dim("observable", &m, d)?;
                DichotomicObservable::new(m).map_err(|e| invalid("observable", e))?
            }
        };
        let unit = match &self.time_unit {
            None => 1.0,
            Some(TimeUnit::Factor(f)) if f.is_finite() && *f > 0.0 => *f,
            Some(TimeUnit::Name(n)) if n == "pi" => std::f64::consts::PI,
            Some(_) => {
                return Err(invalid_msg(
                    "time_unit",
                    "expected a positive number or \"pi\"",
                ))
            }
        };
        let times: Vec<f64> = match (&self.times, &self.schedule) {
            (Some(t), None) => t.clone(),
            (None, Some(s)) => (0..s.count).map(|k| s.start + s.gap * k as f64).collect(),
            _ => {
                return Err(invalid_msg(
                    "times",
                    "give exactly one of `times` and `schedule`",
                ))
            }
        };
        let schedule = Schedule::new(times.iter().map(|t| t * unit).collect()).map_err(|e| {
            let field = if self.times.is_some() {
                "times"
            } else {
                "schedule"
            };
            invalid(field, e)
        })?;

        let mode = self.protocol.mode.unwrap_or(ProtocolMode::Projective);
        let dephase_times: BTreeSet<usize> = match &self.protocol.dephase_at {
            Some(at) => at.iter().copied().collect(),
            None if mode.diagonalizes() => (1..schedule.len()).collect(),
            None => BTreeSet::new(),
        };
        let clumsiness = match &self.protocol.clumsiness {
            None | Some(ClumsinessSpec::None) => ClumsinessModel::None,
            Some(ClumsinessSpec::Depolarizing { strength }) => {
                ClumsinessModel::depolarizing(*strength)
                    .map_err(|e| invalid("protocol.clumsiness", e))?
            }
            Some(ClumsinessSpec::UnitaryKick { angle, generator }) => {
                let g = matrix("protocol.clumsiness.generator", generator)?;
                ClumsinessModel::unitary_kick(*angle, g)
                    .map_err(|e| invalid("protocol.clumsiness", e))?
            }
        };
        clumsiness
            .validate(Some(d))
            .map_err(|e| invalid("protocol.clumsiness", e))?;
        let config = ProtocolConfig {
            mode,
            dephase_times,
            clumsiness,
            shots: self.shots,
            seed: self.seed,
        };
        config
            .validate(&schedule)
            .map_err(|e| invalid("protocol", e))?;

        let mut checks = self.checks.clone();
        let mut seen = BTreeSet::new();
        checks.retain(|c| seen.insert(*c));
        Ok(Scenario {
            rho,
            h,
            q,
            schedule,
            config,
            checks,
            derive_lower_moments: self.derive_lower_moments,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{"dimension": 2, "initial_state": "maximally_mixed",
        "hamiltonian": {"preset": "precession", "omega": 1.0}, "times": [1.0, 2.0, 3.0], "checks": ["LG3"]}"#;

    fn with(field: &str, value: Value) -> Result<Scenario, CliError> {
        let mut v: Value = serde_json::from_str(BASE).unwrap();
        v[field] = value;
        Scenario::from_value(v)
    }

    #[test]
    fn presets_resolve() {
        let s = Scenario::from_json_str(BASE).unwrap();
        let half = ComplexMatrix::identity(2).scale(0.5);
        assert!(s.rho.matrix().max_abs_diff(&half) < 1e-15);
        assert_eq!(s.checks, vec![Check::Lg3]);
        assert_eq!(s.config.mode, ProtocolMode::Projective);
    }

    #[test]
    fn trace_violation_is_named() {
        let err = with(
            "initial_state",
            serde_json::json!({"matrix": [[0.99, 0.0], [0.0, 0.0]]}),
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("initial_state") && msg.contains("trace"),
            "{msg}"
        );
    }

    #[test]
    fn schedule_ordering_is_named() {
        let msg = with("times", serde_json::json!([2.0, 1.0]))
            .unwrap_err()
            .to_string();
        assert!(msg.contains("times") && msg.contains("increasing"), "{msg}");
    }

    #[test]
    fn unknown_presets_and_fields() {
        assert!(with("initial_state", serde_json::json!("excited"))
            .unwrap_err()
            .to_string()
            .contains("excited"));
        assert!(with("checks", serde_json::json!(["LG9"])).is_err());
        assert!(with("colour", serde_json::json!(1)).is_err());
        let err = Scenario::from_json_str("{\n  \"dimension\": 2,\n  oops\n}").unwrap_err();
        assert!(matches!(err, CliError::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn default_diagonalization_excludes_last_time() {
        let s = with("protocol", serde_json::json!({"mode": "ancilla_blind"})).unwrap();
        assert_eq!(s.config.dephase_times, BTreeSet::from([1, 2]));
        assert!(with(
            "protocol",
            serde_json::json!({"mode": "projective", "dephase_at": [1]})
        )
        .is_err());
    }

    #[test]
    fn schedule_and_units() {
        let mut v: Value = serde_json::from_str(BASE).unwrap();
        v.as_object_mut().unwrap().remove("times");
        v["schedule"] = serde_json::json!({"start": 0.5, "gap": 0.25, "count": 3});
        v["time_unit"] = serde_json::json!("pi");
        let s = Scenario::from_value(v).unwrap();
        let pi = std::f64::consts::PI;
        assert_eq!(s.schedule.times(), &[0.5 * pi, 0.75 * pi, pi]);
    }

    #[test]
    fn clumsiness_models() {
        let s = with(
            "protocol",
            serde_json::json!({"mode": "projective_dephased",
            "clumsiness": {"kind": "depolarizing", "strength": 0.05}}),
        )
        .unwrap();
        assert_eq!(
            s.config.clumsiness,
            ClumsinessModel::Depolarizing { strength: 0.05 }
        );
        assert!(with(
            "protocol",
            serde_json::json!({"clumsiness": {"kind": "depolarizing", "strength": 2.0}})
        )
        .is_err());
        let kick = with(
            "protocol",
            serde_json::json!({"clumsiness": {"kind": "unitary_kick", "angle": 0.1,
            "generator": [[0, 1], [1, 0]]}}),
        );
        assert!(kick.is_ok());
    }
}
