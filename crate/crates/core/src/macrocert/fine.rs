use crate::error::{Error, Result};
use crate::protocols::{OutcomeTable, Sampling};

const TOL: f64 = 1e-10;

fn check_input(t: &OutcomeTable, name: &str) -> Result<()> {
    if t.num_slots() != 3 || !t.is_dichotomic() {
        return Err(Error::ArityMismatch(format!(
            "{name} must be a dichotomic three-time table"
        )));
    }
    if let Some(p) = t.raw_probabilities().iter().find(|p| **p < -TOL) {
        return Err(Error::InvalidTable(format!(
            "{name} has negative entry {p}"
        )));
    }
    if (t.total() - 1.0).abs() > TOL {
        return Err(Error::InvalidTable(format!("{name} sums to {}", t.total())));
    }
    Ok(())
}

/// Joint four-time distribution p123 p124 / p12 from two three-time tables
/// that share their first two times (zero wherever p12 vanishes).
pub fn fine_extension(p123: &OutcomeTable, p124: &OutcomeTable) -> Result<OutcomeTable> {
    check_input(p123, "p123")?;
    check_input(p124, "p124")?;
    if p123.times()[..2] != p124.times()[..2] {
        return Err(Error::ArityMismatch(format!(
            "tables share no common leading pair: {:?} vs {:?}",
            p123.times(),
            p124.times()
        )));
    }
    let a = p123.marginal(&[0, 1])?;
    let b = p124.marginal(&[0, 1])?;
    let residual = a
        .raw_probabilities()
        .iter()
        .zip(b.raw_probabilities())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    if residual > TOL {
        return Err(Error::MarginalMismatch { residual });
    }
    let mut times = p123.times().to_vec();
    times.push(p124.times()[2]);
    OutcomeTable::from_fn(times, vec![vec![1, -1]; 4], Sampling::Exact, |s| {
        let p12 = 0.5 * (a.get(&s[..2]) + b.get(&s[..2]));
        if p12 <= 0.0 {
            0.0
        } else {
            p123.get(&s[..3]) * p124.get(&[s[0], s[1], s[3]]) / p12
        }
    })
}
