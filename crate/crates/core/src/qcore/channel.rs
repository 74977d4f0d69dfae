use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::matrix::{ComplexMatrix, C64};
use super::observable::{DichotomicObservable, Observable};
use super::state::{DensityOperator, Hamiltonian};
use crate::error::{Error, Result};

/// Unintended disturbance injected by a measuring device.
#[derive(Clone, Debug, PartialEq, Default)]
pub enum ClumsinessModel {
    #[default]
    None,
    /// rho -> (1 - strength) rho + strength 1/d, strength in [0, 1].
    Depolarizing { strength: f64 },
    /// rho -> exp(-i angle G) rho exp(i angle G).
    UnitaryKick { angle: f64, generator: Hamiltonian },
}

impl ClumsinessModel {
    pub fn depolarizing(strength: f64) -> Result<Self> {
        let model = ClumsinessModel::Depolarizing { strength };
        model.validate(None)?;
        Ok(model)
    }

    pub fn unitary_kick(angle: f64, generator: ComplexMatrix) -> Result<Self> {
        let generator = Hamiltonian::new(generator)
            .map_err(|e| Error::InvalidClumsiness(format!("kick generator: {e}")))?;
        let model = ClumsinessModel::UnitaryKick { angle, generator };
        model.validate(None)?;
        Ok(model)
    }

    pub fn is_none(&self) -> bool {
        matches!(self, ClumsinessModel::None)
    }

    /// Checks the parameter ranges and, when given, the system dimension.
    pub fn validate(&self, dim: Option<usize>) -> Result<()> {
        match self {
            ClumsinessModel::None => Ok(()),
            ClumsinessModel::Depolarizing { strength } => {
                if !(0.0..=1.0).contains(strength) {
                    return Err(Error::InvalidClumsiness(format!(
                        "depolarizing strength {strength} outside [0, 1]"
                    )));
                }
                Ok(())
            }
            ClumsinessModel::UnitaryKick { angle, generator } => {
                if !angle.is_finite() {
                    return Err(Error::InvalidClumsiness("kick angle must be finite".into()));
                }
                if let Some(d) = dim {
                    if generator.dim() != d {
                        return Err(Error::DimensionMismatch {
                            expected: d,
                            found: generator.dim(),
                        });
                    }
                }
                Ok(())
            }
        }
    }

    /// Applies the channel to an unnormalized operator (linear extension).
    pub(crate) fn apply_raw(&self, m: &ComplexMatrix) -> Result<ComplexMatrix> {
        Ok(match self {
            ClumsinessModel::None => m.clone(),
            ClumsinessModel::Depolarizing { strength } => {
                let d = m.dim();
                let mixed = ComplexMatrix::identity(d).scale_complex(m.trace() / d as f64);
                &m.scale(1.0 - strength) + &mixed.scale(*strength)
            }
            ClumsinessModel::UnitaryKick { angle, generator } => {
                m.conjugate_by(&generator.propagator(*angle)?)
            }
        })
    }
}

/// Sum_k P_k M P_k over a projective decomposition.
pub(crate) fn dephase_raw(m: &ComplexMatrix, projectors: &[ComplexMatrix]) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(m.dim());
    for p in projectors {
        out = &out + &(&(p * m) * p);
    }
    out
}

/// Blind measurement through an N-level ancilla: controlled shift
/// U = Sum_k P_k (x) X^k on M (x) |0><0|, then the ancilla is traced out.
pub(crate) fn ancilla_blind_raw(m: &ComplexMatrix, projectors: &[ComplexMatrix]) -> ComplexMatrix {
    let d = m.dim();
    let n = projectors.len();
    let mut control = ComplexMatrix::zeros(d * n);
    for (k, p) in projectors.iter().enumerate() {
        let shift = ComplexMatrix::from_inner(nalgebra::DMatrix::from_fn(n, n, |i, j| {
            if i == (j + k) % n {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }));
        control = &control + &p.kron(&shift);
    }
    let mut ancilla_ready = vec![0.0; n];
    ancilla_ready[0] = 1.0;
    let joint = m
        .kron(&ComplexMatrix::diagonal(&ancilla_ready))
        .conjugate_by(&control);
    partial_trace_second(&joint, d, n)
}

/// Tr_B of an operator on A (x) B with dim A = da, dim B = db.
pub(crate) fn partial_trace_second(m: &ComplexMatrix, da: usize, db: usize) -> ComplexMatrix {
    let inner = m.as_inner();
    ComplexMatrix::from_inner(nalgebra::DMatrix::from_fn(da, da, |i, j| {
        (0..db).map(|b| inner[(i * db + b, j * db + b)]).sum()
    }))
}

/// e^{-iHt} rho e^{iHt}.
pub fn evolve(rho: &DensityOperator, h: &Hamiltonian, t: f64) -> Result<DensityOperator> {
    rho.matrix().check_dim(h.dim())?;
    let u = h.propagator(t)?;
    Ok(DensityOperator::from_matrix_unchecked(
        rho.matrix().conjugate_by(&u),
    ))
}

/// Heisenberg-picture projector e^{iHt} P_s e^{-iHt}.
pub fn heisenberg_projector(
    q: &DichotomicObservable,
    s: super::Sign,
    h: &Hamiltonian,
    t: f64,
) -> Result<ComplexMatrix> {
    q.matrix().check_dim(h.dim())?;
    heisenberg(q.projector(s), h, t)
}

pub(crate) fn heisenberg(p: &ComplexMatrix, h: &Hamiltonian, t: f64) -> Result<ComplexMatrix> {
    let u = h.propagator(t)?;
    Ok(p.conjugate_by(&u.adjoint()))
}

/// Removes coherences between eigenspaces of the observable.
pub fn dephase(rho: &DensityOperator, q: &dyn Observable) -> Result<DensityOperator> {
    rho.matrix().check_dim(q.dim())?;
    Ok(DensityOperator::from_matrix_unchecked(dephase_raw(
        rho.matrix(),
        q.projectors(),
    )))
}

/// Blind measurement of `q` through an ancilla whose record is discarded.
pub fn ancilla_blind_measurement(
    rho: &DensityOperator,
    q: &dyn Observable,
) -> Result<DensityOperator> {
    rho.matrix().check_dim(q.dim())?;
    Ok(DensityOperator::from_matrix_unchecked(ancilla_blind_raw(
        rho.matrix(),
        q.projectors(),
    )))
}

/// Monte-Carlo average of U_phi rho U_phi^dagger with U_phi = exp(-i phi Q / 2),
/// phi uniform on [0, 2pi).
pub fn random_phase_dephase(
    rho: &DensityOperator,
    q: &DichotomicObservable,
    samples: usize,
    seed: u64,
) -> Result<DensityOperator> {
    if samples == 0 {
        return Err(Error::ZeroSamples);
    }
    rho.matrix().check_dim(q.dim())?;
    // With Q^2 = 1, U_phi = c - i s Q (c = cos phi/2, s = sin phi/2) and
    // U rho U^dagger = c^2 rho + s^2 Q rho Q + i c s (rho Q - Q rho);
    // only the sample means of c^2, s^2 and c s are needed.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut cc, mut ss, mut cs) = (0.0, 0.0, 0.0);
    for _ in 0..samples {
        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let (s, c) = (phi / 2.0).sin_cos();
        cc += c * c;
        ss += s * s;
        cs += c * s;
    }
    let n = samples as f64;
    let (cc, ss, cs) = (cc / n, ss / n, cs / n);
    let r = rho.matrix();
    let qm = q.matrix();
    let flipped = &(qm * r) * qm;
    let commutator = &(r * qm) - &(qm * r);
    let out = &(&r.scale(cc) + &flipped.scale(ss)) + &commutator.scale_complex(C64::new(0.0, cs));
    Ok(DensityOperator::from_matrix_unchecked(out))
}

pub fn apply_clumsiness(rho: &DensityOperator, model: &ClumsinessModel) -> Result<DensityOperator> {
    model.validate(Some(rho.dim()))?;
    Ok(DensityOperator::from_matrix_unchecked(
        model.apply_raw(rho.matrix())?,
    ))
}
