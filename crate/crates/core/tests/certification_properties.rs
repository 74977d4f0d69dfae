mod common;

use common::qubit_strategy;
use macroreal::macrocert::{
    candidate_probability, check_appendix_identities, check_lg2, check_lg3, check_monotonicity,
    check_nsit, decoherence_functional, feasible_completion, fine_extension, moments_from_tables,
    quasi_probability, MomentKey, MomentSet, Verdict,
};
use macroreal::protocols::{run_experiment, sequential_distribution, ProtocolConfig, Schedule};
use macroreal::qcore::Sign;
use proptest::prelude::*;

/// Brute-force oracle: some D123 on a 0.001 grid makes all eight entries
/// non-negative (up to `slack`).
fn grid_feasible(m: &MomentSet, slack: f64) -> bool {
    (0..=2000).any(|k| {
        let mut filled = m.clone();
        filled.fix(&[1, 2, 3], -1.0 + 0.001 * f64::from(k)).unwrap();
        candidate_probability(&filled).unwrap().min() >= -slack
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn candidate_inverts_genuine_tables(sc in qubit_strategy(3)) {
        let t = sequential_distribution(&sc.rho, &sc.h, &sc.q, &sc.schedule, &ProtocolConfig::projective()).unwrap();
        let m = moments_from_tables(3, std::slice::from_ref(&t), true).unwrap();
        let c = candidate_probability(&m).unwrap();
        for (tuple, p) in t.entries() {
            prop_assert!((c.get(&tuple).unwrap() - p).abs() < 1e-12);
        }
    }

    #[test]
    fn quasi_probability_satisfies_nsit_formally(sc in qubit_strategy(3)) {
        let q123 = quasi_probability(&sc.rho, &sc.h, &sc.q, &sc.schedule).unwrap();
        prop_assert!((q123.total() - 1.0).abs() < 1e-10);
        let later = Schedule::new(sc.schedule.times()[1..].to_vec()).unwrap();
        let q23 = quasi_probability(&sc.rho, &sc.h, &sc.q, &later).unwrap();
        let summed = q123.sum_over(0);
        for (t, v) in q23.entries() {
            prop_assert!((summed.get(t).unwrap() - v).abs() < 1e-12);
        }
    }

    #[test]
    fn two_time_lg_margins_are_four_q(sc in qubit_strategy(2)) {
        let exact = ProtocolConfig::projective();
        let tables = vec![
            run_experiment(&sc.rho, &sc.h, &sc.q, &sc.schedule, &exact, &[1]).unwrap(),
            run_experiment(&sc.rho, &sc.h, &sc.q, &sc.schedule, &exact, &[2]).unwrap(),
            run_experiment(&sc.rho, &sc.h, &sc.q, &sc.schedule, &exact, &[1, 2]).unwrap(),
        ];
        let m = moments_from_tables(2, &tables, false).unwrap();
        let report = check_lg2(&m).unwrap();
        let q = quasi_probability(&sc.rho, &sc.h, &sc.q, &sc.schedule).unwrap();
        for (k, s) in [[1, 1], [-1, -1], [1, -1], [-1, 1]].iter().enumerate() {
            let margin = report.margin(&format!("LG2-12-{}", k + 1)).unwrap();
            prop_assert!((margin - 4.0 * q.get(s).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn fine_theorem_for_three_times(values in proptest::collection::vec(-1.0..1.0f64, 6)) {
        let mut m = MomentSet::new(3).unwrap();
        for (key, v) in MomentKey::all(3).into_iter().zip(&values) {
            m.set(key, *v).unwrap();
        }
        let lg = check_lg2(&m).unwrap().min_margin().min(check_lg3(&m).unwrap().min_margin());
        let feasible = feasible_completion(&m).unwrap().is_feasible();
        if lg.abs() > 2e-3 {
            prop_assert_eq!(feasible, lg >= 0.0);
            prop_assert_eq!(grid_feasible(&m, 0.0), lg >= 0.0);
        }
    }

    #[test]
    fn fine_extension_reproduces_both_tables(sc in qubit_strategy(4)) {
        let proj = ProtocolConfig::projective();
        let p123 = run_experiment(&sc.rho, &sc.h, &sc.q, &sc.schedule, &proj, &[1, 2, 3]).unwrap();
        let p124 = run_experiment(&sc.rho, &sc.h, &sc.q, &sc.schedule, &proj, &[1, 2, 4]).unwrap();
        let p = fine_extension(&p123, &p124).unwrap();
        prop_assert!((p.total() - 1.0).abs() < 1e-10);
        prop_assert!(p.raw_probabilities().iter().all(|&v| v >= 0.0));
        for (table, keep) in [(&p123, [0, 1, 2]), (&p124, [0, 1, 3])] {
            let m = p.marginal(&keep).unwrap();
            for (a, b) in m.raw_probabilities().iter().zip(table.raw_probabilities()) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn witness_is_sum_of_off_diagonal_terms(sc in qubit_strategy(2)) {
        let proj = ProtocolConfig::projective();
        let p12 = run_experiment(&sc.rho, &sc.h, &sc.q, &sc.schedule, &proj, &[1, 2]).unwrap();
        let p2 = run_experiment(&sc.rho, &sc.h, &sc.q, &sc.schedule, &proj, &[2]).unwrap();
        let report = check_nsit(&p12, &p2, &[0]).unwrap();
        let (t1, t2) = (sc.schedule.time(1), sc.schedule.time(2));
        for s2 in Sign::BOTH {
            let off: f64 = [(Sign::Plus, Sign::Minus), (Sign::Minus, Sign::Plus)]
                .iter()
                .map(|&(a, b)| decoherence_functional(&sc.rho, &sc.h, &sc.q, t1, t2, a, b, s2).unwrap().re)
                .sum();
            prop_assert!((report.w(&[s2.value()]).unwrap() - off).abs() < 1e-12);
        }
    }

    #[test]
    fn appendix_identities_hold(sc in qubit_strategy(2)) {
        let r = check_appendix_identities(&sc.rho, &sc.h, &sc.q, sc.schedule.time(1), sc.schedule.time(2)).unwrap();
        for e in r.entries.iter().filter(|e| e.id.starts_with("QUASI-SPLIT") || e.id.starts_with("WITNESS-BOUND") || e.id == "MONO-W-EQUIV") {
            prop_assert_eq!(e.verdict, Verdict::Satisfied, "{}", e.id);
        }
    }

    #[test]
    fn monotonicity_bounds_negative_witness(sc in qubit_strategy(2)) {
        let proj = ProtocolConfig::projective();
        let p12 = run_experiment(&sc.rho, &sc.h, &sc.q, &sc.schedule, &proj, &[1, 2]).unwrap();
        let p2 = run_experiment(&sc.rho, &sc.h, &sc.q, &sc.schedule, &proj, &[2]).unwrap();
        if check_monotonicity(&p12, &p2).unwrap().all_satisfied() {
            let report = check_nsit(&p12, &p2, &[0]).unwrap();
            for d in report.defects.iter().filter(|d| d.w < 0.0) {
                let min_p = p12.get(&[1, d.tuple[0]]).min(p12.get(&[-1, d.tuple[0]]));
                prop_assert!(d.w.abs() <= min_p + 1e-10);
            }
        }
    }
}
