use std::fmt;

use super::matrix::{pauli, ComplexMatrix};
use super::IDENTITY_TOL;
use crate::error::{Error, Result};

/// Outcome of a dichotomic measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];

    pub fn value(self) -> i32 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn from_value(v: i32) -> Option<Sign> {
        match v {
            1 => Some(Sign::Plus),
            -1 => Some(Sign::Minus),
            _ => None,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

/// A projective decomposition of the identity with integer outcome labels.
pub trait Observable: Send + Sync {
    fn dim(&self) -> usize;
    fn labels(&self) -> &[i32];
    /// Projectors aligned with [`Observable::labels`].
    fn projectors(&self) -> &[ComplexMatrix];
}

/// Observable Q with Q^2 = 1; outcomes +1 and -1 with P_s = (1 + s Q)/2.
#[derive(Clone, Debug, PartialEq)]
pub struct DichotomicObservable {
    matrix: ComplexMatrix,
    projectors: [ComplexMatrix; 2],
}

const DICHOTOMIC_LABELS: [i32; 2] = [1, -1];

impl DichotomicObservable {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let residual = matrix.hermiticity_residual();
        if residual > IDENTITY_TOL {
            return Err(Error::NotHermitian {
                what: "observable",
                residual,
            });
        }
        let d = matrix.dim();
        let residual = (&matrix * &matrix).max_abs_diff(&ComplexMatrix::identity(d));
        if residual > IDENTITY_TOL {
            return Err(Error::NotInvolutory { residual });
        }
        let id = ComplexMatrix::identity(d);
        let plus = (&id + &matrix).scale(0.5);
        let minus = (&id - &matrix).scale(0.5);
        Ok(DichotomicObservable {
            matrix,
            projectors: [plus, minus],
        })
    }

    pub fn sigma_z() -> Self {
        Self::new(pauli::z()).expect("sigma_z is dichotomic")
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// P_s = (1 + s Q)/2.
    pub fn projector(&self, s: Sign) -> &ComplexMatrix {
        match s {
            Sign::Plus => &self.projectors[0],
            Sign::Minus => &self.projectors[1],
        }
    }
}

impl Observable for DichotomicObservable {
    fn dim(&self) -> usize {
        self.matrix.dim()
    }

    fn labels(&self) -> &[i32] {
        &DICHOTOMIC_LABELS
    }

    fn projectors(&self) -> &[ComplexMatrix] {
        &self.projectors
    }
}

/// N-outcome projective measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct ManyValuedObservable {
    projectors: Vec<ComplexMatrix>,
    labels: Vec<i32>,
}

impl ManyValuedObservable {
    pub fn new(projectors: Vec<ComplexMatrix>, labels: Vec<i32>) -> Result<Self> {
        if projectors.is_empty() {
            return Err(Error::InvalidProjectors("no projectors supplied".into()));
        }
        if projectors.len() != labels.len() {
            return Err(Error::InvalidProjectors(format!(
                "{} projectors but {} labels",
                projectors.len(),
                labels.len()
            )));
        }
        let mut sorted = labels.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != labels.len() {
            return Err(Error::InvalidProjectors(
                "outcome labels must be distinct".into(),
            ));
        }
        let d = projectors[0].dim();
        let mut sum = ComplexMatrix::zeros(d);
        for (k, p) in projectors.iter().enumerate() {
            p.check_dim(d)?;
            let herm = p.hermiticity_residual();
            if herm > IDENTITY_TOL {
                return Err(Error::InvalidProjectors(format!(
                    "projector {k} not Hermitian ({herm:e})"
                )));
            }
            let idem = (p * p).max_abs_diff(p);
            if idem > IDENTITY_TOL {
                return Err(Error::InvalidProjectors(format!(
                    "projector {k} not idempotent ({idem:e})"
                )));
            }
            for (l, q) in projectors.iter().enumerate().skip(k + 1) {
                let overlap = (p * q).max_abs_diff(&ComplexMatrix::zeros(d));
                if overlap > IDENTITY_TOL {
                    return Err(Error::InvalidProjectors(format!(
                        "projectors {k} and {l} not orthogonal ({overlap:e})"
                    )));
                }
            }
            sum = &sum + p;
        }
        let completeness = sum.max_abs_diff(&ComplexMatrix::identity(d));
        if completeness > IDENTITY_TOL {
            return Err(Error::InvalidProjectors(format!(
                "projectors do not sum to the identity ({completeness:e})"
            )));
        }
        Ok(ManyValuedObservable { projectors, labels })
    }

    /// Projective measurement in the computational basis, labels 1..=d.
    pub fn computational_basis(d: usize) -> Self {
        let projectors = (0..d)
            .map(|k| {
                let mut diag = vec![0.0; d];
                diag[k] = 1.0;
                ComplexMatrix::diagonal(&diag)
            })
            .collect();
        ManyValuedObservable {
            projectors,
            labels: (1..=d as i32).collect(),
        }
    }

    pub fn projector_for(&self, label: i32) -> Option<&ComplexMatrix> {
        self.labels
            .iter()
            .position(|&l| l == label)
            .map(|k| &self.projectors[k])
    }

    /// Dichotomic variable equal to +1 on `plus_labels` and -1 elsewhere.
    pub fn coarse_grain(&self, plus_labels: &[i32]) -> Result<DichotomicObservable> {
        if let Some(bad) = plus_labels.iter().find(|l| !self.labels.contains(l)) {
            return Err(Error::InvalidProjectors(format!(
                "unknown outcome label {bad}"
            )));
        }
        let d = self.dim();
        let mut q = ComplexMatrix::zeros(d);
        for (label, p) in self.labels.iter().zip(&self.projectors) {
            let sign = if plus_labels.contains(label) {
                1.0
            } else {
                -1.0
            };
            q = &q + &p.scale(sign);
        }
        DichotomicObservable::new(q)
    }
}

impl Observable for ManyValuedObservable {
    fn dim(&self) -> usize {
        self.projectors[0].dim()
    }

    fn labels(&self) -> &[i32] {
        &self.labels
    }

    fn projectors(&self) -> &[ComplexMatrix] {
        &self.projectors
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dichotomic_requires_involution() {
        let not_involutive = ComplexMatrix::diagonal(&[1.0, 0.5]);
        assert!(matches!(
            DichotomicObservable::new(not_involutive),
            Err(Error::NotInvolutory { .. })
        ));
        let not_hermitian = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        assert!(matches!(
            DichotomicObservable::new(not_hermitian),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn sigma_z_projectors() {
        let q = DichotomicObservable::sigma_z();
        assert_eq!(
            q.projector(Sign::Plus),
            &ComplexMatrix::diagonal(&[1.0, 0.0])
        );
        assert_eq!(
            q.projector(Sign::Minus),
            &ComplexMatrix::diagonal(&[0.0, 1.0])
        );
        assert_eq!(q.labels(), &[1, -1]);
    }

    #[test]
    fn many_valued_validation() {
        let p1 = ComplexMatrix::diagonal(&[1.0, 0.0, 0.0]);
        let p2 = ComplexMatrix::diagonal(&[0.0, 1.0, 0.0]);
        let p3 = ComplexMatrix::diagonal(&[0.0, 0.0, 1.0]);
        assert!(ManyValuedObservable::new(vec![p1.clone(), p2.clone()], vec![1, 2]).is_err());
        assert!(
            ManyValuedObservable::new(vec![p1.clone(), p1.clone(), p3.clone()], vec![1, 2, 3])
                .is_err()
        );
        assert!(
            ManyValuedObservable::new(vec![p1.clone(), p2.clone(), p3.clone()], vec![1, 1, 3])
                .is_err()
        );
        let obs = ManyValuedObservable::new(vec![p1, p2, p3], vec![1, 2, 3]).unwrap();
        assert_eq!(obs, ManyValuedObservable::computational_basis(3));
    }

    #[test]
    fn coarse_graining_builds_dichotomic_variable() {
        let obs = ManyValuedObservable::computational_basis(3);
        let q = obs.coarse_grain(&[1]).unwrap();
        assert_eq!(q.matrix(), &ComplexMatrix::diagonal(&[1.0, -1.0, -1.0]));
        assert!(obs.coarse_grain(&[7]).is_err());
    }
}
