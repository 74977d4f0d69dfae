use std::collections::BTreeMap;

use crate::protocols::{OutcomeTable, Sampling};

/// Sampling variance of Sum_t f(t) p(t) for an empirical table; `None` for
/// exact tables.
///
/// A multinomial table contributes (Sum f^2 p - (Sum f p)^2) / N. A
/// prefix-assembled table is a sum of independent experiments, one per
/// prefix, each contributing the same expression over its own entries (the
/// discarded runs count with f = 0).
pub(crate) fn linear_variance(table: &OutcomeTable, f: impl Fn(&[i32]) -> f64) -> Option<f64> {
    let (shots, grouped) = match table.sampling() {
        Sampling::Exact => return None,
        Sampling::Multinomial { shots } => (shots, false),
        Sampling::PrefixAssembled { shots } => (shots, true),
    };
    let mut groups: BTreeMap<Vec<i32>, (f64, f64)> = BTreeMap::new();
    for (t, p) in table.entries() {
        let key = if grouped {
            t[..t.len() - 1].to_vec()
        } else {
            Vec::new()
        };
        let v = f(&t);
        let g = groups.entry(key).or_insert((0.0, 0.0));
        g.0 += v * p;
        g.1 += v * v * p;
    }
    let n = shots as f64;
    Some(
        groups
            .values()
            .map(|(m1, m2)| (m2 - m1 * m1).max(0.0) / n)
            .sum(),
    )
}
