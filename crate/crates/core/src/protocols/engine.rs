//! Unnormalized branch propagation shared by every protocol.

use crate::error::Result;
use crate::qcore::{
    ancilla_blind_raw, dephase_raw, ClumsinessModel, ComplexMatrix, DensityOperator, Hamiltonian,
    Observable,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Diagonalizer {
    Dephase,
    AncillaBlind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Readout {
    /// Branch on every outcome.
    Projective,
    /// Ideal negative measurement: only the branch with projector index
    /// `keep` survives, the rest is discarded.
    NullResult { keep: usize },
}

pub(crate) struct Step<'a> {
    pub time: f64,
    pub observable: &'a dyn Observable,
    pub diagonalize: Option<Diagonalizer>,
    pub clumsiness: Option<&'a ClumsinessModel>,
    pub readout: Option<Readout>,
}

/// Weight of each recorded outcome history (projector indices, one per
/// readout step). Zero-weight branches are carried, never renormalized.
pub(crate) fn propagate(
    rho: &DensityOperator,
    h: &Hamiltonian,
    steps: &[Step<'_>],
) -> Result<Vec<(Vec<usize>, f64)>> {
    let d = rho.dim();
    rho.matrix().check_dim(h.dim())?;
    let mut branches: Vec<(Vec<usize>, ComplexMatrix)> = vec![(Vec::new(), rho.matrix().clone())];
    let mut now = 0.0;
    for step in steps {
        step.observable.projectors()[0].check_dim(d)?;
        let u = h.propagator(step.time - now)?;
        now = step.time;
        let projectors = step.observable.projectors();
        let mut next = Vec::with_capacity(branches.len() * projectors.len());
        for (history, m) in branches {
            let mut m = m.conjugate_by(&u);
            match step.diagonalize {
                Some(Diagonalizer::Dephase) => m = dephase_raw(&m, projectors),
                Some(Diagonalizer::AncillaBlind) => m = ancilla_blind_raw(&m, projectors),
                None => {}
            }
            if let Some(model) = step.clumsiness {
                m = model.apply_raw(&m)?;
            }
            match step.readout {
                None => next.push((history, m)),
                Some(Readout::Projective) => {
                    for (k, p) in projectors.iter().enumerate() {
                        let mut h = history.clone();
                        h.push(k);
                        next.push((h, &(p * &m) * p));
                    }
                }
                Some(Readout::NullResult { keep }) => {
                    let p = &projectors[keep];
                    let mut h = history;
                    h.push(keep);
                    next.push((h, &(p * &m) * p));
                }
            }
        }
        branches = next;
    }
    Ok(branches
        .into_iter()
        .map(|(hist, m)| (hist, m.trace().re))
        .collect())
}
