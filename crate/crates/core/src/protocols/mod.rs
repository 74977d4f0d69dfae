//! Measurement protocols: single-time, sequential projective, ideal negative
//! measurement (INRM), the dephased and ancilla-blind modifications,
//! clumsiness injection and finite-shot sampling.

mod config;
mod engine;
mod inrm;
mod sampling;
mod table;

pub use config::{ProtocolConfig, ProtocolMode, Schedule};
pub use inrm::{assemble_inrm, inrm_distribution, InrmPartial};
pub use sampling::{derive_seed, sample_counts};
pub use table::{format_label, format_tuple, OutcomeTable, Sampling};

use engine::{propagate, Diagonalizer, Readout, Step};

use crate::error::{Error, Result};
use crate::qcore::{
    ancilla_blind_measurement, evolve, DensityOperator, DichotomicObservable, Hamiltonian,
    Observable,
};

/// p(s) = Tr(P_s(t) rho).
pub fn single_time_distribution(
    rho: &DensityOperator,
    h: &Hamiltonian,
    q: &dyn Observable,
    t: f64,
) -> Result<OutcomeTable> {
    if !t.is_finite() {
        return Err(Error::NonFinite {
            what: "measurement time",
        });
    }
    let step = Step {
        time: t,
        observable: q,
        diagonalize: None,
        clumsiness: None,
        readout: Some(Readout::Projective),
    };
    let probs = propagate(rho, h, &[step])?
        .into_iter()
        .map(|(_, w)| w)
        .collect();
    OutcomeTable::new(vec![1], vec![q.labels().to_vec()], probs, Sampling::Exact)
}

/// Sequential measurement at every schedule time (projective, dephased or
/// ancilla-blind modes).
pub fn sequential_distribution(
    rho: &DensityOperator,
    h: &Hamiltonian,
    q: &dyn Observable,
    schedule: &Schedule,
    config: &ProtocolConfig,
) -> Result<OutcomeTable> {
    if config.mode.is_inrm() {
        return Err(Error::InvalidConfig(
            "sequential_distribution takes projective modes; use inrm_distribution".into(),
        ));
    }
    let all: Vec<usize> = (1..=schedule.len()).collect();
    run_experiment(rho, h, q, schedule, config, &all)
}

/// One experiment measuring `q` at the listed 1-based schedule indices.
///
/// Diagonalizations in `config` act at their indices up to the last measured
/// time; in INRM modes the table is assembled from every detector coupling.
pub fn run_experiment(
    rho: &DensityOperator,
    h: &Hamiltonian,
    q: &dyn Observable,
    schedule: &Schedule,
    config: &ProtocolConfig,
    measured: &[usize],
) -> Result<OutcomeTable> {
    let plan: Vec<(usize, &dyn Observable)> = measured.iter().map(|&k| (k, q)).collect();
    run_experiment_with(rho, h, q, schedule, config, &plan)
}

/// Like [`run_experiment`], with a separate observable per measured time.
/// `default` is diagonalized at unmeasured diagonalization indices.
pub fn run_experiment_with(
    rho: &DensityOperator,
    h: &Hamiltonian,
    default: &dyn Observable,
    schedule: &Schedule,
    config: &ProtocolConfig,
    plan: &[(usize, &dyn Observable)],
) -> Result<OutcomeTable> {
    config.validate(schedule)?;
    validate_plan(schedule, plan)?;
    if config.mode.is_inrm() {
        let partials = inrm::all_partials(rho, h, default, schedule, config, plan)?;
        return assemble_inrm(&partials);
    }
    let steps = plan_steps(default, schedule, config, plan, None);
    let weights = propagate(rho, h, &steps)?;
    let times: Vec<usize> = plan.iter().map(|(k, _)| *k).collect();
    let slots: Vec<Vec<i32>> = plan.iter().map(|(_, o)| o.labels().to_vec()).collect();
    let probs: Vec<f64> = weights.into_iter().map(|(_, w)| w).collect();
    let exact = OutcomeTable::new(times, slots, probs, Sampling::Exact)?;
    if config.is_exact() {
        Ok(exact)
    } else {
        sample_counts(&exact, config.shots, config.seed)
    }
}

fn validate_plan(schedule: &Schedule, plan: &[(usize, &dyn Observable)]) -> Result<()> {
    if plan.is_empty() {
        return Err(Error::InvalidConfig(
            "an experiment must measure at least once".into(),
        ));
    }
    if plan.iter().any(|(k, _)| *k == 0 || *k > schedule.len()) {
        return Err(Error::InvalidConfig(format!(
            "measurement index outside 1..={}",
            schedule.len()
        )));
    }
    if plan.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::InvalidConfig(
            "measurement indices must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Step list for one experiment; `null_keep` turns every readout but the
/// last into an ideal negative measurement keeping that projector index.
fn plan_steps<'a>(
    default: &'a dyn Observable,
    schedule: &Schedule,
    config: &'a ProtocolConfig,
    plan: &[(usize, &'a dyn Observable)],
    null_keep: Option<&[usize]>,
) -> Vec<Step<'a>> {
    let last = plan.last().map(|(k, _)| *k).unwrap_or(0);
    let first = plan[0].0;
    let diagonalizer = match config.mode {
        crate::protocols::ProtocolMode::AncillaBlind => Some(Diagonalizer::AncillaBlind),
        m if m.diagonalizes() => Some(Diagonalizer::Dephase),
        _ => None,
    };
    let clumsy = plan.len() >= 2 && !config.clumsiness.is_none();
    let mut indices: Vec<usize> = plan.iter().map(|(k, _)| *k).collect();
    if diagonalizer.is_some() {
        indices.extend(config.dephase_times.iter().copied().filter(|&k| k <= last));
    }
    indices.sort_unstable();
    indices.dedup();

    let mut readout_count = 0;
    indices
        .into_iter()
        .map(|k| {
            let measured = plan.iter().find(|(j, _)| *j == k).map(|(_, o)| *o);
            let readout = measured.map(|_| {
                let r = match null_keep {
                    Some(keep) if readout_count < keep.len() => Readout::NullResult {
                        keep: keep[readout_count],
                    },
                    _ => Readout::Projective,
                };
                readout_count += 1;
                r
            });
            Step {
                time: schedule.time(k),
                observable: measured.unwrap_or(default),
                diagonalize: diagonalizer.filter(|_| config.dephase_times.contains(&k)),
                clumsiness: (clumsy && k == first).then_some(&config.clumsiness),
                readout,
            }
        })
        .collect()
}

/// Reduced system state after a CNOT-coupled ancilla records Q at t1 and is
/// traced out: Sum_s P_s rho(t1) P_s.
pub fn ancilla_blind_reduced_state(
    rho: &DensityOperator,
    h: &Hamiltonian,
    q: &DichotomicObservable,
    t1: f64,
) -> Result<DensityOperator> {
    ancilla_blind_measurement(&evolve(rho, h, t1)?, q)
}

/// Sums out every slot not in `keep` (0-based slot positions).
pub fn marginal_distribution(table: &OutcomeTable, keep: &[usize]) -> Result<OutcomeTable> {
    table.marginal(keep)
}

/// The two experiments of a two-time NSIT check under one configuration:
/// the two-time table and the single-time table at t2, with the same
/// diagonalization placement.
pub fn run_nsit_pair(
    rho: &DensityOperator,
    h: &Hamiltonian,
    q: &dyn Observable,
    t1: f64,
    t2: f64,
    config: &ProtocolConfig,
) -> Result<(OutcomeTable, OutcomeTable)> {
    if t1.partial_cmp(&t2) != Some(std::cmp::Ordering::Less) {
        return Err(Error::TimeOrder { t1, t2 });
    }
    let schedule = Schedule::new(vec![t1, t2])?;
    let pair_config = ProtocolConfig {
        seed: derive_seed(config.seed, 0),
        ..config.clone()
    };
    let single_config = ProtocolConfig {
        seed: derive_seed(config.seed, 1),
        ..config.clone()
    };
    let p12 = run_experiment(rho, h, q, &schedule, &pair_config, &[1, 2])?;
    let p2 = run_experiment(rho, h, q, &schedule, &single_config, &[2])?;
    Ok((p12, p2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{dephase, ClumsinessModel, ComplexMatrix, ManyValuedObservable, C64};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};

    fn ground() -> DensityOperator {
        DensityOperator::basis_state(2, 0).unwrap()
    }

    fn sz() -> DichotomicObservable {
        DichotomicObservable::sigma_z()
    }

    fn prec() -> Hamiltonian {
        Hamiltonian::precession(1.0).unwrap()
    }

    #[test]
    fn single_time_examples() {
        let mixed = DensityOperator::maximally_mixed(2);
        let t = single_time_distribution(&mixed, &prec(), &sz(), 0.77).unwrap();
        assert!((t.get(&[1]) - 0.5).abs() < 1e-15 && (t.get(&[-1]) - 0.5).abs() < 1e-15);
        let t = single_time_distribution(&ground(), &Hamiltonian::zero(2), &sz(), 3.0).unwrap();
        assert_eq!(t.raw_probabilities(), &[1.0, 0.0]);
        let t = single_time_distribution(&ground(), &prec(), &sz(), PI).unwrap();
        assert!(t.get(&[1]) < 1e-15 && (t.get(&[-1]) - 1.0).abs() < 1e-12);
        // p(+) = (1 + cos t)/2
        for time in [0.3, 1.1, 2.9] {
            let t = single_time_distribution(&ground(), &prec(), &sz(), time).unwrap();
            assert!((t.get(&[1]) - 0.5 * (1.0 + time.cos())).abs() < 1e-12);
        }
    }

    #[test]
    fn sequential_frozen_dynamics() {
        let s = Schedule::new(vec![1.0, 2.0]).unwrap();
        let t = sequential_distribution(
            &ground(),
            &Hamiltonian::zero(2),
            &sz(),
            &s,
            &ProtocolConfig::projective(),
        )
        .unwrap();
        assert_eq!(t.raw_probabilities(), &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn sequential_mixed_state_oracle() {
        let mixed = DensityOperator::maximally_mixed(2);
        for tau in [0.0, FRAC_PI_3, FRAC_PI_2, PI] {
            let s = Schedule::new(vec![0.4, 0.4 + tau]).unwrap();
            let t =
                sequential_distribution(&mixed, &prec(), &sz(), &s, &ProtocolConfig::projective())
                    .unwrap();
            for (tuple, p) in t.entries() {
                let expected = 0.25 * (1.0 + (tuple[0] * tuple[1]) as f64 * tau.cos());
                assert!((p - expected).abs() < 1e-12, "tau {tau} {tuple:?}");
            }
        }
    }

    #[test]
    fn dephased_mode_equals_pre_dephased_state() {
        let rho = DensityOperator::pure(&[C64::new(0.8, 0.1), C64::new(0.2, -0.55)]).unwrap();
        let h = Hamiltonian::precession(1.3).unwrap();
        let s = Schedule::new(vec![0.7, 1.9, 2.2]).unwrap();
        let dephased =
            sequential_distribution(&rho, &h, &sz(), &s, &ProtocolConfig::dephased([1])).unwrap();
        // evolve to t1, dephase, evolve back: the replaced initial state
        let at_t1 = dephase(&evolve(&rho, &h, 0.7).unwrap(), &sz()).unwrap();
        let replaced = evolve(&at_t1, &h, -0.7).unwrap();
        let plain =
            sequential_distribution(&replaced, &h, &sz(), &s, &ProtocolConfig::projective())
                .unwrap();
        for (a, b) in dephased
            .raw_probabilities()
            .iter()
            .zip(plain.raw_probabilities())
        {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn sequential_rejects_inrm_and_bad_configs() {
        let s = Schedule::new(vec![1.0, 2.0]).unwrap();
        assert!(
            sequential_distribution(&ground(), &prec(), &sz(), &s, &ProtocolConfig::inrm())
                .is_err()
        );
        assert!(sequential_distribution(
            &ground(),
            &prec(),
            &sz(),
            &s,
            &ProtocolConfig::dephased([5])
        )
        .is_err());
        let qutrit = ManyValuedObservable::computational_basis(3);
        assert!(matches!(
            sequential_distribution(
                &ground(),
                &prec(),
                &qutrit,
                &s,
                &ProtocolConfig::projective()
            ),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn ancilla_reduced_state_examples() {
        let diag = DensityOperator::new(ComplexMatrix::diagonal(&[0.6, 0.4])).unwrap();
        let out = ancilla_blind_reduced_state(&diag, &Hamiltonian::zero(2), &sz(), 2.5).unwrap();
        assert!(out.matrix().max_abs_diff(diag.matrix()) < 1e-15);
        let out = ancilla_blind_reduced_state(&ground(), &prec(), &sz(), FRAC_PI_2).unwrap();
        assert!(
            out.matrix()
                .max_abs_diff(&ComplexMatrix::identity(2).scale(0.5))
                < 1e-12
        );
        let rho = DensityOperator::pure(&[C64::new(0.3, 0.4), C64::new(-0.5, 0.2)]).unwrap();
        let h = Hamiltonian::precession(0.8).unwrap();
        let via_ancilla = ancilla_blind_reduced_state(&rho, &h, &sz(), 1.7).unwrap();
        let via_dephase = dephase(&evolve(&rho, &h, 1.7).unwrap(), &sz()).unwrap();
        assert!(via_ancilla.matrix().max_abs_diff(via_dephase.matrix()) < 1e-12);
    }

    #[test]
    fn marginal_of_markov_chain() {
        let mixed = DensityOperator::maximally_mixed(2);
        let gap = 2.0 * PI / 3.0;
        let s = Schedule::equally_spaced(0.5, gap, 3).unwrap();
        let p123 =
            sequential_distribution(&mixed, &prec(), &sz(), &s, &ProtocolConfig::projective())
                .unwrap();
        let p23 = marginal_distribution(&p123, &[1, 2]).unwrap();
        assert_eq!(p23.times(), &[2, 3]);
        for (t, p) in p23.entries() {
            assert!((p - 0.25 * (1.0 + (t[0] * t[1]) as f64 * gap.cos())).abs() < 1e-12);
        }
        assert!(marginal_distribution(&p123, &[]).is_err());
    }

    #[test]
    fn nsit_pair_examples() {
        let mixed = DensityOperator::maximally_mixed(2);
        let (p12, p2) = run_nsit_pair(
            &mixed,
            &prec(),
            &sz(),
            0.4,
            1.3,
            &ProtocolConfig::projective(),
        )
        .unwrap();
        let m = p12.marginal(&[1]).unwrap();
        for (a, b) in m.raw_probabilities().iter().zip(p2.raw_probabilities()) {
            assert!((a - b).abs() < 1e-12);
        }

        let (p12, p2) = run_nsit_pair(
            &ground(),
            &prec(),
            &sz(),
            FRAC_PI_2,
            PI,
            &ProtocolConfig::projective(),
        )
        .unwrap();
        assert!(p2.get(&[1]) < 1e-12);
        assert!((p12.get(&[1, 1]) + p12.get(&[-1, 1]) - 0.5).abs() < 1e-12);

        for config in [
            ProtocolConfig::dephased([1]),
            ProtocolConfig::ancilla_blind([1]),
        ] {
            let (p12, p2) =
                run_nsit_pair(&ground(), &prec(), &sz(), FRAC_PI_2, PI, &config).unwrap();
            let m = p12.marginal(&[1]).unwrap();
            for (a, b) in m.raw_probabilities().iter().zip(p2.raw_probabilities()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        assert!(matches!(
            run_nsit_pair(
                &ground(),
                &prec(),
                &sz(),
                2.0,
                2.0,
                &ProtocolConfig::projective()
            ),
            Err(Error::TimeOrder { .. })
        ));
    }

    #[test]
    fn clumsiness_only_disturbs_multi_measurement_experiments() {
        // rho_diag(t1) = diag(3/4, 1/4) at t1 = pi/3; W(+) = eps/4 cos(t2 - t1)
        let eps = 0.05;
        let config = ProtocolConfig::dephased([1])
            .with_clumsiness(ClumsinessModel::depolarizing(eps).unwrap());
        let (p12, p2) = run_nsit_pair(
            &ground(),
            &prec(),
            &sz(),
            FRAC_PI_3,
            2.0 * FRAC_PI_3,
            &config,
        )
        .unwrap();
        let w_plus = p2.get(&[1]) - p12.get(&[1, 1]) - p12.get(&[-1, 1]);
        assert!(
            (w_plus - eps / 4.0 * FRAC_PI_3.cos()).abs() < 1e-12,
            "{w_plus}"
        );
    }

    #[test]
    fn empirical_experiments_are_seeded() {
        let s = Schedule::new(vec![0.5, 1.0]).unwrap();
        let config = ProtocolConfig::projective().with_shots(1000, 5);
        let a = sequential_distribution(&ground(), &prec(), &sz(), &s, &config).unwrap();
        let b = sequential_distribution(&ground(), &prec(), &sz(), &s, &config).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.sampling(), Sampling::Multinomial { shots: 1000 });
    }

    #[test]
    fn mixed_observable_plan() {
        // coarse-grained dichotomic variable at t1, three-valued measurement at t2
        let three = ManyValuedObservable::computational_basis(3);
        let coarse = three.coarse_grain(&[1]).unwrap();
        let v = [C64::new(0.6, 0.0), C64::new(0.0, 0.6), C64::new(0.5, 0.1)];
        let rho = DensityOperator::pure(&v).unwrap();
        let gen =
            ComplexMatrix::from_real_rows(&[&[0.0, 1.0, 0.3], &[1.0, 0.2, 0.5], &[0.3, 0.5, -0.4]])
                .unwrap();
        let h = Hamiltonian::new(gen).unwrap();
        let s = Schedule::new(vec![0.6, 1.4]).unwrap();
        let plan: Vec<(usize, &dyn Observable)> = vec![(1, &coarse), (2, &three)];
        let t = run_experiment_with(&rho, &h, &three, &s, &ProtocolConfig::projective(), &plan)
            .unwrap();
        assert_eq!(t.slots(), &[vec![1, -1], vec![1, 2, 3]]);
        assert!((t.total() - 1.0).abs() < 1e-12);
    }
}
