use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::engine::propagate;
use super::sampling::{derive_seed, multinomial_counts};
use super::table::{OutcomeTable, Sampling};
use super::{plan_steps, validate_plan, ProtocolConfig, Schedule};
use crate::error::{Error, Result};
use crate::qcore::{DensityOperator, DichotomicObservable, Hamiltonian, Observable, Sign};

/// Surviving-branch statistics of one ideal-negative-measurement experiment.
///
/// Detector k couples to outcome `couplings[k]`; a run is kept only when no
/// detector fires, i.e. the system was found with outcome `-couplings[k]` at
/// every detector time. The last time is read out projectively.
#[derive(Clone, Debug, PartialEq)]
pub struct InrmPartial {
    times: Vec<usize>,
    couplings: Vec<Sign>,
    final_labels: Vec<i32>,
    surviving: Vec<f64>,
    discarded: f64,
    sampling: Sampling,
}

impl InrmPartial {
    pub fn times(&self) -> &[usize] {
        &self.times
    }

    pub fn couplings(&self) -> &[Sign] {
        &self.couplings
    }

    /// Outcome prefix inferred from the null results.
    pub fn prefix(&self) -> Vec<i32> {
        self.couplings.iter().map(|c| c.flip().value()).collect()
    }

    pub fn final_labels(&self) -> &[i32] {
        &self.final_labels
    }

    /// p(prefix, s_m) for final outcome `label`.
    pub fn surviving(&self, label: i32) -> f64 {
        self.final_labels
            .iter()
            .position(|&l| l == label)
            .map_or(0.0, |k| self.surviving[k])
    }

    pub fn surviving_total(&self) -> f64 {
        self.surviving.iter().sum()
    }

    /// Fraction of runs in which some detector fired.
    pub fn discarded(&self) -> f64 {
        self.discarded
    }

    pub fn sampling(&self) -> Sampling {
        self.sampling
    }
}

/// One INRM experiment over the whole schedule, detectors at every time but
/// the last.
pub fn inrm_distribution(
    rho: &DensityOperator,
    h: &Hamiltonian,
    q: &DichotomicObservable,
    schedule: &Schedule,
    couplings: &[Sign],
    config: &ProtocolConfig,
) -> Result<InrmPartial> {
    if couplings.len() + 1 != schedule.len() {
        return Err(Error::InvalidConfig(format!(
            "{} detector couplings for a schedule of {} times (expected {})",
            couplings.len(),
            schedule.len(),
            schedule.len().saturating_sub(1)
        )));
    }
    if !config.mode.is_inrm() {
        return Err(Error::InvalidConfig(format!(
            "mode {} is not an INRM mode",
            config.mode
        )));
    }
    config.validate(schedule)?;
    let plan: Vec<(usize, &dyn Observable)> = (1..=schedule.len())
        .map(|k| (k, q as &dyn Observable))
        .collect();
    partial(rho, h, q, schedule, config, &plan, couplings, config.seed)
}

#[allow(clippy::too_many_arguments)]
fn partial(
    rho: &DensityOperator,
    h: &Hamiltonian,
    default: &dyn Observable,
    schedule: &Schedule,
    config: &ProtocolConfig,
    plan: &[(usize, &dyn Observable)],
    couplings: &[Sign],
    seed: u64,
) -> Result<InrmPartial> {
    validate_plan(schedule, plan)?;
    if plan.iter().any(|(_, o)| o.labels() != [1, -1]) {
        return Err(Error::InvalidConfig(
            "ideal negative measurements need dichotomic observables".into(),
        ));
    }
    // projector index 0 is +1, index 1 is -1; the null result keeps -c
    let keep: Vec<usize> = couplings
        .iter()
        .map(|c| match c {
            Sign::Plus => 1,
            Sign::Minus => 0,
        })
        .collect();
    let steps = plan_steps(default, schedule, config, plan, Some(&keep));
    let weights = propagate(rho, h, &steps)?;
    let mut surviving: Vec<f64> = weights.into_iter().map(|(_, w)| w).collect();
    let final_labels = plan.last().expect("non-empty plan").1.labels().to_vec();
    let mut discarded = (1.0 - surviving.iter().sum::<f64>()).max(0.0);
    let mut sampling = Sampling::Exact;
    if !config.is_exact() {
        let mut cells = surviving.clone();
        cells.push(discarded);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let counts = multinomial_counts(&cells, config.shots, &mut rng);
        let n = config.shots as f64;
        surviving = counts[..final_labels.len()]
            .iter()
            .map(|&c| c as f64 / n)
            .collect();
        discarded = counts[final_labels.len()] as f64 / n;
        sampling = Sampling::Multinomial {
            shots: config.shots,
        };
    }
    Ok(InrmPartial {
        times: plan.iter().map(|(k, _)| *k).collect(),
        couplings: couplings.to_vec(),
        final_labels,
        surviving,
        discarded,
        sampling,
    })
}

/// Every detector-coupling configuration for the plan, in the order
/// (+,...,+), (+,...,-), ..., with independent seeds.
pub(crate) fn all_partials(
    rho: &DensityOperator,
    h: &Hamiltonian,
    default: &dyn Observable,
    schedule: &Schedule,
    config: &ProtocolConfig,
    plan: &[(usize, &dyn Observable)],
) -> Result<Vec<InrmPartial>> {
    let detectors = plan.len().saturating_sub(1);
    (0..1usize << detectors)
        .map(|j| {
            let couplings: Vec<Sign> = (0..detectors)
                .map(|k| {
                    if (j >> (detectors - 1 - k)) & 1 == 0 {
                        Sign::Plus
                    } else {
                        Sign::Minus
                    }
                })
                .collect();
            partial(
                rho,
                h,
                default,
                schedule,
                config,
                plan,
                &couplings,
                derive_seed(config.seed, j as u64),
            )
        })
        .collect()
}

/// Merges the surviving branches of every coupling configuration into the
/// full sequential table.
pub fn assemble_inrm(partials: &[InrmPartial]) -> Result<OutcomeTable> {
    let first = partials
        .first()
        .ok_or_else(|| Error::InrmCoverage("no partial tables supplied".into()))?;
    let detectors = first.couplings.len();
    if partials
        .iter()
        .any(|p| p.times != first.times || p.final_labels != first.final_labels)
    {
        return Err(Error::InrmCoverage(
            "partials describe different experiments".into(),
        ));
    }
    let mut seen = BTreeSet::new();
    for p in partials {
        if !seen.insert(p.prefix()) {
            return Err(Error::InrmCoverage(format!(
                "configuration {:?} supplied twice",
                p.couplings
            )));
        }
    }
    if seen.len() != 1usize << detectors {
        return Err(Error::InrmCoverage(format!(
            "{} of {} coupling configurations supplied",
            seen.len(),
            1usize << detectors
        )));
    }
    let sampling = match (first.sampling, detectors) {
        (Sampling::Exact, _) => Sampling::Exact,
        (Sampling::Multinomial { shots }, 0) => Sampling::Multinomial { shots },
        (Sampling::Multinomial { shots }, _) => Sampling::PrefixAssembled { shots },
        (other, _) => other,
    };
    if partials.iter().any(|p| p.sampling != first.sampling) {
        return Err(Error::InrmCoverage(
            "partials mix exact and empirical statistics".into(),
        ));
    }
    let mut slots = vec![vec![1, -1]; detectors];
    slots.push(first.final_labels.clone());
    OutcomeTable::from_fn(first.times.clone(), slots, sampling, |tuple| {
        let (prefix, last) = tuple.split_at(detectors);
        partials
            .iter()
            .find(|p| p.prefix() == prefix)
            .map_or(0.0, |p| p.surviving(last[0]))
    })
}
