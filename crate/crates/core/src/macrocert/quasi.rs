use super::inequalities::{sign_label, ConditionResult, InequalityReport, Verdict};
use super::moments::SignedDistribution;
use crate::error::{Error, Result};
use crate::protocols::{
    sequential_distribution, single_time_distribution, ProtocolConfig, Schedule,
};
use crate::qcore::{
    heisenberg, ComplexMatrix, DensityOperator, DichotomicObservable, Hamiltonian, Observable,
    Sign, C64,
};

/// Residual allowed in the algebraic identities.
pub const IDENTITY_TOL: f64 = 1e-12;

pub type QuasiProbability = SignedDistribution;

/// q(s_1..s_n) = Re Tr(P_{s_n}(t_n) ... P_{s_1}(t_1) rho) with Heisenberg
/// projectors P(t) = U(t)^dagger P U(t).
pub fn quasi_probability(
    rho: &DensityOperator,
    h: &Hamiltonian,
    q: &dyn Observable,
    schedule: &Schedule,
) -> Result<QuasiProbability> {
    rho.matrix().check_dim(h.dim())?;
    q.projectors()[0].check_dim(h.dim())?;
    let heis: Vec<Vec<ComplexMatrix>> = schedule
        .times()
        .iter()
        .map(|&t| {
            q.projectors()
                .iter()
                .map(|p| heisenberg(p, h, t))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let n = schedule.len();
    let labels = q.labels();
    let mut entries = Vec::new();
    let mut index = vec![0usize; n];
    loop {
        let mut m = rho.matrix().clone();
        for (k, &j) in index.iter().enumerate() {
            m = &heis[k][j] * &m;
        }
        entries.push((index.iter().map(|&j| labels[j]).collect(), m.trace().re));
        // row-major increment
        let mut k = n;
        loop {
            if k == 0 {
                return Ok(SignedDistribution::new((1..=n).collect(), entries, None));
            }
            k -= 1;
            index[k] += 1;
            if index[k] < labels.len() {
                break;
            }
            index[k] = 0;
        }
    }
}

/// D(s1, s2 | s1', s2) = Tr(P_{s2}(t2) P_{s1}(t1) rho P_{s1'}(t1)).
#[allow(clippy::too_many_arguments)]
pub fn decoherence_functional(
    rho: &DensityOperator,
    h: &Hamiltonian,
    q: &DichotomicObservable,
    t1: f64,
    t2: f64,
    s1: Sign,
    s1_prime: Sign,
    s2: Sign,
) -> Result<C64> {
    if t1.partial_cmp(&t2) != Some(std::cmp::Ordering::Less) {
        return Err(Error::TimeOrder { t1, t2 });
    }
    rho.matrix().check_dim(h.dim())?;
    q.matrix().check_dim(h.dim())?;
    let a = heisenberg(q.projector(s1), h, t1)?;
    let b = heisenberg(q.projector(s1_prime), h, t1)?;
    let c = heisenberg(q.projector(s2), h, t2)?;
    Ok((&(&(&c * &a) * rho.matrix()) * &b).trace())
}

fn strict(id: String, residual: f64) -> ConditionResult {
    let margin = IDENTITY_TOL - residual;
    let verdict = if margin >= 0.0 {
        Verdict::Satisfied
    } else {
        Verdict::Violated
    };
    ConditionResult {
        id,
        margin,
        std_error: None,
        verdict,
    }
}

/// Numerical check of the two-time relations between the sequential table
/// p12, the single-time table p2, the quasi-probability q and the witness
/// W(s2) = p2(s2) - Sum_{s1} p12(s1, s2):
///
/// * `QUASI-SPLIT-(s1,s2)`: |p12 - (q - W/2)| <= 1e-12 (margin 1e-12 - residual);
/// * `WITNESS-BOUND-(s1,s2)`: 2 p12 - |W| >= 0, present only when every q >= 0 and W(s2) < 0;
/// * `MONO-W-(s1,s2)`: p12 + W >= 0;
/// * `MONO-W-EQUIV`: per s2, min_{s1}(p2 - p12) equals min_{s1}(p12 + W) to 1e-12,
///   so the monotonicity condition holds exactly when the `MONO-W` margins do.
pub fn check_appendix_identities(
    rho: &DensityOperator,
    h: &Hamiltonian,
    q: &DichotomicObservable,
    t1: f64,
    t2: f64,
) -> Result<InequalityReport> {
    if t1.partial_cmp(&t2) != Some(std::cmp::Ordering::Less) {
        return Err(Error::TimeOrder { t1, t2 });
    }
    let schedule = Schedule::new(vec![t1, t2])?;
    let p12 = sequential_distribution(rho, h, q, &schedule, &ProtocolConfig::projective())?;
    let p2 = single_time_distribution(rho, h, q, t2)?;
    let quasi = quasi_probability(rho, h, q, &schedule)?;
    let w = |s2: i32| {
        p2.raw(&[s2]).unwrap_or(0.0)
            - p12.raw(&[1, s2]).unwrap_or(0.0)
            - p12.raw(&[-1, s2]).unwrap_or(0.0)
    };
    let all_q_nonnegative = quasi.min() >= -IDENTITY_TOL;

    let mut entries = Vec::new();
    let mut margins = Vec::new();
    let mut eq_residual: f64 = 0.0;
    for s2 in [1, -1] {
        let w2 = w(s2);
        let mut min_mono = f64::INFINITY;
        let mut min_w = f64::INFINITY;
        for s1 in [1, -1] {
            let label = sign_label(&[s1, s2]);
            let p = p12.raw(&[s1, s2]).unwrap_or(0.0);
            let qv = quasi.get(&[s1, s2]).unwrap_or(0.0);
            entries.push(strict(
                format!("QUASI-SPLIT-({label})"),
                (p - (qv - 0.5 * w2)).abs(),
            ));
            if all_q_nonnegative && w2 < 0.0 {
                margins.push((format!("WITNESS-BOUND-({label})"), 2.0 * p - w2.abs(), None));
            }
            margins.push((format!("MONO-W-({label})"), p + w2, None));
            min_mono = min_mono.min(p2.raw(&[s2]).unwrap_or(0.0) - p);
            min_w = min_w.min(p + w2);
        }
        eq_residual = eq_residual.max((min_mono - min_w).abs());
    }
    entries.extend(InequalityReport::from_margins(margins).entries);
    entries.push(strict("MONO-W-EQUIV".into(), eq_residual));
    Ok(InequalityReport {
        entries,
        sigma_threshold: None,
    })
}
