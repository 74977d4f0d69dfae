//! Completion of partially specified moment sets by Fourier-Motzkin
//! elimination over the 2^n non-negativity constraints of the candidate
//! probability.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use super::moments::{sign_tuples, MomentKey, MomentSet};
use crate::error::{Error, Result};

/// Slack on derived constraints.
pub const FM_SLACK: f64 = 1e-10;
const ZERO: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Lower,
    Upper,
}

/// `variable >= constant + Sum coef * other` (or `<=`), derived from the
/// non-negativity of the listed candidate entries.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Bound {
    pub variable: MomentKey,
    pub kind: BoundKind,
    pub constant: f64,
    pub terms: Vec<(MomentKey, f64)>,
    pub sources: Vec<Vec<i32>>,
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.kind {
            BoundKind::Lower => ">=",
            BoundKind::Upper => "<=",
        };
        write!(f, "{} {op} {}", self.variable, self.constant)?;
        for (k, c) in &self.terms {
            write!(f, " {} {} {k}", if *c < 0.0 { "-" } else { "+" }, c.abs())?;
        }
        Ok(())
    }
}

/// Two derived bounds on one variable that cannot both hold; `gap` is
/// lower minus upper.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub lower: Bound,
    pub upper: Bound,
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum Completion {
    Feasible { witness: BTreeMap<MomentKey, f64> },
    Infeasible { certificate: Certificate },
}

impl Completion {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Completion::Feasible { .. })
    }

    pub fn witness(&self) -> Option<&BTreeMap<MomentKey, f64>> {
        match self {
            Completion::Feasible { witness } => Some(witness),
            Completion::Infeasible { .. } => None,
        }
    }

    pub fn certificate(&self) -> Option<&Certificate> {
        match self {
            Completion::Infeasible { certificate } => Some(certificate),
            Completion::Feasible { .. } => None,
        }
    }
}

/// Sum coef[v] x[v] + constant >= 0.
#[derive(Clone, Debug)]
struct Row {
    coef: Vec<f64>,
    constant: f64,
    ancestors: u32,
}

impl Row {
    fn is_empty(&self) -> bool {
        self.coef.iter().all(|c| c.abs() <= ZERO)
    }
}

/// Elimination order: E, then D_ijk, then C_ij, then <Q_i>, each group
/// lexicographic.
fn elimination_order(mut keys: Vec<MomentKey>) -> Vec<MomentKey> {
    keys.sort_by(|a, b| {
        b.order()
            .cmp(&a.order())
            .then_with(|| a.times().cmp(b.times()))
    });
    keys
}

fn bound(row: &Row, v: usize, vars: &[MomentKey], sources: &[Vec<i32>]) -> Bound {
    let a = row.coef[v];
    let kind = if a > 0.0 {
        BoundKind::Lower
    } else {
        BoundKind::Upper
    };
    let terms = row
        .coef
        .iter()
        .enumerate()
        .filter(|(u, c)| *u != v && c.abs() > ZERO)
        .map(|(u, c)| (vars[u].clone(), -c / a))
        .collect();
    Bound {
        variable: vars[v].clone(),
        kind,
        constant: -row.constant / a,
        terms,
        sources: (0..sources.len())
            .filter(|k| row.ancestors & (1 << k) != 0)
            .map(|k| sources[k].clone())
            .collect(),
    }
}

/// Decides whether the unfixed moments of `m` (n = 3 or 4) admit values
/// making every candidate entry non-negative. Returns a witness assignment
/// (midpoints of the back-substituted intervals) or a contradictory pair of
/// bounds.
pub fn feasible_completion(m: &MomentSet) -> Result<Completion> {
    let n = m.n();
    if !(3..=4).contains(&n) {
        return Err(Error::InvalidMoments(format!(
            "completion needs n = 3 or 4, got {n}"
        )));
    }
    let vars = elimination_order(m.unfixed());
    if vars.is_empty() {
        return Err(Error::NothingUnfixed);
    }
    let sources = sign_tuples(n);
    let parity = |key: &MomentKey, s: &[i32]| {
        f64::from(key.times().iter().map(|&i| s[i - 1]).product::<i32>())
    };
    let mut rows: Vec<Row> = sources
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let constant = 1.0
                + m.values()
                    .iter()
                    .map(|(key, v)| parity(key, s) * v)
                    .sum::<f64>();
            Row {
                coef: vars.iter().map(|key| parity(key, s)).collect(),
                constant,
                ancestors: 1 << k,
            }
        })
        .collect();

    let mut stages: Vec<Vec<Row>> = Vec::with_capacity(vars.len());
    for v in 0..vars.len() {
        let (pos, rest): (Vec<&Row>, Vec<&Row>) = rows.iter().partition(|r| r.coef[v] > ZERO);
        let (neg, zero): (Vec<&Row>, Vec<&Row>) = rest.into_iter().partition(|r| r.coef[v] < -ZERO);
        let mut next: Vec<Row> = zero.into_iter().cloned().collect();
        let mut worst: Option<(f64, &Row, &Row)> = None;
        for p in &pos {
            for q in &neg {
                let (a, b) = (p.coef[v], -q.coef[v]);
                let ancestors = p.ancestors | q.ancestors;
                if ancestors.count_ones() as usize > v + 2 {
                    continue;
                }
                let mut coef: Vec<f64> = p
                    .coef
                    .iter()
                    .zip(&q.coef)
                    .map(|(x, y)| x / a + y / b)
                    .collect();
                coef[v] = 0.0;
                let row = Row {
                    coef,
                    constant: p.constant / a + q.constant / b,
                    ancestors,
                };
                if row.is_empty() {
                    if row.constant < -FM_SLACK && worst.is_none_or(|(c, _, _)| row.constant < c) {
                        worst = Some((row.constant, p, q));
                    }
                    continue;
                }
                next.push(row);
            }
        }
        if let Some((_, p, q)) = worst {
            let lower = bound(p, v, &vars, &sources);
            let upper = bound(q, v, &vars, &sources);
            let gap = lower.constant - upper.constant;
            return Ok(Completion::Infeasible {
                certificate: Certificate { lower, upper, gap },
            });
        }
        // keep the tightest row per coefficient pattern
        let mut unique: Vec<Row> = Vec::with_capacity(next.len());
        for row in next {
            match unique.iter_mut().find(|u| {
                u.coef
                    .iter()
                    .zip(&row.coef)
                    .all(|(x, y)| (x - y).abs() <= ZERO)
            }) {
                Some(u) if row.constant < u.constant => *u = row,
                Some(_) => {}
                None => unique.push(row),
            }
        }
        stages.push(std::mem::replace(&mut rows, unique));
    }

    let mut x = vec![0.0; vars.len()];
    for v in (0..vars.len()).rev() {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for row in &stages[v] {
            let a = row.coef[v];
            if a.abs() <= ZERO {
                continue;
            }
            let rest: f64 =
                row.constant + (v + 1..vars.len()).map(|u| row.coef[u] * x[u]).sum::<f64>();
            let b = -rest / a;
            if a > 0.0 {
                lo = lo.max(b);
            } else {
                hi = hi.min(b);
            }
        }
        x[v] = match (lo.is_finite(), hi.is_finite()) {
            (true, true) => 0.5 * (lo + hi),
            (true, false) => lo,
            (false, true) => hi,
            (false, false) => 0.0,
        }
        .clamp(-1.0, 1.0);
    }
    Ok(Completion::Feasible {
        witness: vars.into_iter().zip(x).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::macrocert::candidate_probability;

    fn d123() -> MomentKey {
        MomentKey::new(vec![1, 2, 3]).unwrap()
    }

    fn with_d_unfixed(values: [f64; 6]) -> MomentSet {
        let mut all = values.to_vec();
        all.push(0.0);
        let mut m = MomentSet::from_values(3, &all).unwrap();
        m.unfix(&d123());
        m
    }

    #[test]
    fn zero_moments_give_midpoint() {
        let c = feasible_completion(&with_d_unfixed([0.0; 6])).unwrap();
        assert_eq!(c.witness().unwrap()[&d123()], 0.0);
    }

    #[test]
    fn negative_correlators_certificate() {
        let c = feasible_completion(&with_d_unfixed([0.0, 0.0, 0.0, -0.5, -0.5, -0.5])).unwrap();
        let cert = c.certificate().expect("infeasible");
        assert_eq!(cert.lower.variable, d123());
        assert!((cert.lower.constant - 0.5).abs() < 1e-15 && cert.lower.terms.is_empty());
        assert!((cert.upper.constant + 0.5).abs() < 1e-15 && cert.upper.terms.is_empty());
        assert_eq!(cert.lower.sources, vec![vec![1, 1, 1]]);
        assert_eq!(cert.upper.sources, vec![vec![-1, -1, -1]]);
        assert_eq!(cert.lower.to_string(), "D123 >= 0.5");
        assert!((cert.gap - 1.0).abs() < 1e-15);
    }

    #[test]
    fn every_moment_unfixed_is_feasible() {
        for n in [3, 4] {
            let m = MomentSet::new(n).unwrap();
            let c = feasible_completion(&m).unwrap();
            let mut filled = m.clone();
            for (k, v) in c.witness().unwrap() {
                filled.set(k.clone(), *v).unwrap();
            }
            assert!(candidate_probability(&filled).unwrap().min() >= -FM_SLACK);
        }
    }

    #[test]
    fn witness_is_feasible_with_several_unknowns() {
        // pairwise data of a genuine distribution; C13, D123 left open
        let mut m = MomentSet::new(3).unwrap();
        for (t, v) in [
            (&[1][..], 0.2),
            (&[2][..], -0.1),
            (&[3][..], 0.3),
            (&[1, 2][..], 0.4),
            (&[2, 3][..], -0.2),
        ] {
            m.fix(t, v).unwrap();
        }
        let c = feasible_completion(&m).unwrap();
        let mut filled = m.clone();
        for (k, v) in c.witness().unwrap() {
            filled.set(k.clone(), *v).unwrap();
        }
        assert!(candidate_probability(&filled).unwrap().min() >= -FM_SLACK);
    }

    #[test]
    fn preconditions() {
        assert!(matches!(
            feasible_completion(&MomentSet::from_values(3, &[0.0; 7]).unwrap()),
            Err(Error::NothingUnfixed)
        ));
        assert!(feasible_completion(&MomentSet::new(2).unwrap()).is_err());
    }

    #[test]
    fn elimination_order_is_highest_order_first() {
        let keys = elimination_order(MomentKey::all(4));
        let names: Vec<String> = keys.iter().map(|k| k.to_string()).collect();
        assert_eq!(names[0], "E1234");
        assert_eq!(&names[1..5], ["D123", "D124", "D134", "D234"]);
        assert_eq!(names[5], "C12");
        assert_eq!(names.last().unwrap(), "Q4");
    }
}
