use std::collections::{BTreeMap, BTreeSet};

use macroreal::macrocert::{
    candidate_probability, check_appendix_identities, check_lg2, check_lg3, check_lg4,
    check_monotonicity, check_nonnegativity, check_nsit, feasible_completion, moments_from_tables,
    CandidateProbability, Completion, InequalityReport, MomentKey, MomentSet, Verdict,
    WitnessReport,
};
use macroreal::protocols::{derive_seed, run_experiment, OutcomeTable, ProtocolConfig};
use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;
use crate::scenario::{Check, Scenario};

/// Standard errors beyond which an empirical margin counts as violated.
pub const SIGMA_THRESHOLD: f64 = 3.0;

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum CheckDetail {
    Inequalities { report: InequalityReport },
    Witnesses { reports: Vec<WitnessReport> },
    Feasibility { completion: Completion },
}

/// One requested check: its worst margin, verdict and full detail.
#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub margin: f64,
    pub verdict: Verdict,
    #[serde(flatten)]
    pub detail: CheckDetail,
}

#[derive(Clone, Debug, Serialize)]
pub struct Experiment {
    pub id: String,
    pub times: Vec<usize>,
    pub seed: u64,
    pub table: Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificationReport {
    pub mode: String,
    pub exact: bool,
    pub shots: u64,
    pub seed: u64,
    pub schedule: Vec<f64>,
    pub experiments: Vec<Experiment>,
    pub moments: MomentSet,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidate: Option<CandidateProbability>,
    pub checks: BTreeMap<String, CheckOutcome>,
    pub all_satisfied: bool,
}

fn label(times: &[usize]) -> String {
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

fn pairs_for_lg2(n: usize) -> Vec<[usize; 2]> {
    match n {
        2 => vec![[1, 2]],
        3 => vec![[1, 2], [2, 3], [1, 3]],
        _ => vec![[1, 2], [2, 3], [3, 4], [1, 4]],
    }
}

/// Moment experiments each check needs, before availability is checked.
fn moment_needs(check: Check, n: usize) -> Vec<Vec<usize>> {
    match check {
        Check::Lg2 => pairs_for_lg2(n)
            .into_iter()
            .flat_map(|[i, j]| [vec![i], vec![j], vec![i, j]])
            .collect(),
        Check::Lg3 => vec![vec![1, 2], vec![2, 3], vec![1, 3]],
        Check::Lg4 => vec![vec![1, 2], vec![2, 3], vec![3, 4], vec![1, 4]],
        Check::Nonneg => MomentKey::all(n.clamp(2, 4))
            .into_iter()
            .map(|k| k.times().to_vec())
            .collect(),
        Check::Feasible => {
            let mut needs = moment_needs(Check::Lg2, n);
            needs.extend(moment_needs(
                if n >= 4 { Check::Lg4 } else { Check::Lg3 },
                n,
            ));
            needs
        }
        _ => Vec::new(),
    }
}

/// Non-moment experiments each check needs.
fn table_needs(check: Check, n: usize) -> Vec<Vec<usize>> {
    match check {
        Check::Nsit => vec![vec![1, 2], vec![2]],
        Check::Nsit3 => vec![vec![1, 2, 3], vec![1, 3], vec![2, 3], vec![3]],
        Check::Mono if n >= 3 => vec![vec![1, 2], vec![2], vec![1, 2, 3], vec![2, 3]],
        Check::Mono => vec![vec![1, 2], vec![2]],
        _ => Vec::new(),
    }
}

/// Number of times the moment set covers.
fn moment_n(s: &Scenario) -> usize {
    s.schedule.len().clamp(2, 4)
}

/// Sets of measured times (1-based), one per experiment.
pub type ExperimentSet = BTreeSet<Vec<usize>>;

/// Every experiment the scenario's checks require, each run once with its
/// own seed stream (keyed by the measured times). Returns the experiments
/// feeding the moment set and all experiments.
pub fn required_experiments(s: &Scenario) -> Result<(ExperimentSet, ExperimentSet), CliError> {
    let n = s.schedule.len();
    let mn = moment_n(s);
    let mut moments = BTreeSet::new();
    let mut all = BTreeSet::new();
    for &check in &s.checks {
        let mut needs = moment_needs(check, mn);
        if s.derive_lower_moments && !needs.is_empty() {
            needs = vec![(1..=mn).collect()];
        }
        let other = table_needs(check, n);
        let missing: Vec<Vec<usize>> = needs
            .iter()
            .chain(&other)
            .filter(|t| t.iter().any(|&k| k > n))
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let lg4_short = check == Check::Lg4 && n < 4;
        if !missing.is_empty() || lg4_short || (check == Check::Appendix && n < 2) {
            return Err(CliError::MissingExperiments {
                check: check.name().into(),
                missing,
                available: n,
            });
        }
        moments.extend(needs.iter().cloned());
        all.extend(needs);
        all.extend(other);
    }
    Ok((all, moments))
}

fn stream(times: &[usize]) -> u64 {
    times.iter().map(|&t| 1u64 << (t - 1).min(63)).sum()
}

fn run_one(s: &Scenario, times: &[usize]) -> Result<(u64, OutcomeTable), CliError> {
    let seed = derive_seed(s.config.seed, stream(times));
    let config = ProtocolConfig {
        seed,
        ..s.config.clone()
    };
    Ok((
        seed,
        run_experiment(&s.rho, &s.h, &s.q, &s.schedule, &config, times)?,
    ))
}

fn order(a: &Vec<usize>, b: &Vec<usize>) -> std::cmp::Ordering {
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

/// Runs every experiment the checks need and returns them in order of size.
pub fn run_oracle(s: &Scenario) -> Result<Vec<Experiment>, CliError> {
    let (mut needed, _) = required_experiments(s)?;
    if needed.is_empty() {
        needed.insert((1..=s.schedule.len()).collect());
    }
    let mut list: Vec<Vec<usize>> = needed.into_iter().collect();
    list.sort_by(order);
    list.into_iter()
        .map(|times| {
            let (seed, table) = run_one(s, &times)?;
            Ok(Experiment {
                id: format!("p{}", label(&times)),
                times,
                seed,
                table: table.to_json_value(),
            })
        })
        .collect()
}

fn inequality(report: InequalityReport, exact: bool) -> CheckOutcome {
    let report = if exact {
        report
    } else {
        report.with_statistical_threshold(SIGMA_THRESHOLD)
    };
    let verdict = if report.all_satisfied() {
        Verdict::Satisfied
    } else {
        Verdict::Violated
    };
    CheckOutcome {
        margin: report.min_margin(),
        verdict,
        detail: CheckDetail::Inequalities { report },
    }
}

fn witnesses(reports: Vec<WitnessReport>, exact: bool) -> CheckOutcome {
    let reports: Vec<WitnessReport> = if exact {
        reports
    } else {
        reports
            .into_iter()
            .map(|r| r.with_statistical_threshold(SIGMA_THRESHOLD))
            .collect()
    };
    let margin = reports
        .iter()
        .flat_map(|r| r.defects.iter().map(|d| d.threshold - d.w.abs()))
        .fold(f64::INFINITY, f64::min);
    let verdict = if reports.iter().all(WitnessReport::is_non_invasive) {
        Verdict::Satisfied
    } else {
        Verdict::Violated
    };
    CheckOutcome {
        margin,
        verdict,
        detail: CheckDetail::Witnesses { reports },
    }
}

/// Executes every experiment the scenario needs, assembles the moments and
/// evaluates each requested check.
pub fn run_certification(s: &Scenario) -> Result<CertificationReport, CliError> {
    let (needed, moment_tables) = required_experiments(s)?;
    let mut tables: BTreeMap<Vec<usize>, (u64, OutcomeTable)> = BTreeMap::new();
    for times in &needed {
        tables.insert(times.clone(), run_one(s, times)?);
    }
    let table = |t: &[usize]| &tables[t].1;
    let exact = s.config.is_exact();
    let mn = moment_n(s);

    let sources: Vec<OutcomeTable> = moment_tables.iter().map(|t| table(t).clone()).collect();
    let moments = if sources.is_empty() {
        MomentSet::new(mn).map_err(CliError::Run)?
    } else {
        moments_from_tables(mn, &sources, s.derive_lower_moments)?
    };

    let mut checks = BTreeMap::new();
    let mut candidate = None;
    for &check in &s.checks {
        let outcome = match check {
            Check::Lg2 => inequality(check_lg2(&moments)?, exact),
            Check::Lg3 => inequality(check_lg3(&moments)?, exact),
            Check::Lg4 => inequality(check_lg4(&moments)?, exact),
            Check::Nonneg => {
                let c = candidate_probability(&moments)?;
                let out = inequality(check_nonnegativity(&c), exact);
                candidate = Some(c);
                out
            }
            Check::Nsit => witnesses(vec![check_nsit(table(&[1, 2]), table(&[2]), &[0])?], exact),
            Check::Nsit3 => {
                let full = table(&[1, 2, 3]);
                witnesses(
                    vec![
                        check_nsit(table(&[2, 3]), table(&[3]), &[0])?,
                        check_nsit(full, table(&[1, 3]), &[1])?,
                        check_nsit(full, table(&[2, 3]), &[0])?,
                    ],
                    exact,
                )
            }
            Check::Mono => {
                let mut report = check_monotonicity(table(&[1, 2]), table(&[2]))?;
                if s.schedule.len() >= 3 {
                    report
                        .entries
                        .extend(check_monotonicity(table(&[1, 2, 3]), table(&[2, 3]))?.entries);
                }
                inequality(report, exact)
            }
            Check::Feasible => {
                let mut partial = MomentSet::new(mn)?;
                let keep: BTreeSet<Vec<usize>> =
                    moment_needs(Check::Feasible, mn).into_iter().collect();
                for (key, v) in moments.values() {
                    if keep.contains(key.times()) {
                        partial.set(key.clone(), *v)?;
                    }
                }
                let completion = feasible_completion(&partial)?;
                let (margin, verdict) = match &completion {
                    Completion::Feasible { witness } => {
                        for (k, v) in witness {
                            partial.set(k.clone(), *v)?;
                        }
                        (candidate_probability(&partial)?.min(), Verdict::Satisfied)
                    }
                    Completion::Infeasible { certificate } => (-certificate.gap, Verdict::Violated),
                };
                CheckOutcome {
                    margin,
                    verdict,
                    detail: CheckDetail::Feasibility { completion },
                }
            }
            Check::Appendix => {
                let r = check_appendix_identities(
                    &s.rho,
                    &s.h,
                    &s.q,
                    s.schedule.time(1),
                    s.schedule.time(2),
                )?;
                inequality(r, true)
            }
        };
        checks.insert(check.name().to_string(), outcome);
    }

    let mut list: Vec<(&Vec<usize>, &(u64, OutcomeTable))> = tables.iter().collect();
    list.sort_by(|a, b| order(a.0, b.0));
    let experiments = list
        .into_iter()
        .map(|(times, (seed, t))| Experiment {
            id: format!("p{}", label(times)),
            times: times.clone(),
            seed: *seed,
            table: t.to_json_value(),
        })
        .collect();
    let all_satisfied = checks.values().all(|c| c.verdict == Verdict::Satisfied);
    Ok(CertificationReport {
        mode: s.config.mode.to_string(),
        exact,
        shots: s.config.shots,
        seed: s.config.seed,
        schedule: s.schedule.times().to_vec(),
        experiments,
        moments,
        candidate,
        checks,
        all_satisfied,
    })
}

impl CertificationReport {
    /// (condition id, margin, verdict) for every entry of every check, in
    /// check order. Witness reports contribute `max|W|` under their id.
    pub fn flat_entries(&self) -> Vec<(String, f64, Verdict)> {
        let mut out = Vec::new();
        for (name, c) in &self.checks {
            match &c.detail {
                CheckDetail::Inequalities { report } => {
                    out.extend(
                        report
                            .entries
                            .iter()
                            .map(|e| (e.id.clone(), e.margin, e.verdict)),
                    );
                }
                CheckDetail::Witnesses { reports } => {
                    out.extend(reports.iter().map(|r| {
                        let v = if r.is_non_invasive() {
                            Verdict::Satisfied
                        } else {
                            Verdict::Violated
                        };
                        (r.id.clone(), r.max_abs, v)
                    }));
                }
                CheckDetail::Feasibility { .. } => out.push((name.clone(), c.margin, c.verdict)),
            }
        }
        out
    }
}
