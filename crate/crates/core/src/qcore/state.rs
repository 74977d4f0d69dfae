use nalgebra::{DMatrix, SymmetricEigen};

use super::matrix::{pauli, ComplexMatrix, C64};
use super::{EIGEN_TOL, IDENTITY_TOL};
use crate::error::{Error, Result};

/// Hermitian, positive semidefinite, unit-trace operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    matrix: ComplexMatrix,
}

impl DensityOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let residual = matrix.hermiticity_residual();
        if residual > IDENTITY_TOL {
            return Err(Error::NotHermitian {
                what: "density operator",
                residual,
            });
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > IDENTITY_TOL || trace.im.abs() > IDENTITY_TOL {
            return Err(Error::TraceNotUnit { trace: trace.re });
        }
        let min_eigenvalue = matrix.hermitian_eigenvalues()[0];
        if min_eigenvalue < -EIGEN_TOL {
            return Err(Error::NotPositive { min_eigenvalue });
        }
        Ok(DensityOperator { matrix })
    }

    /// Wraps a matrix that is a density operator by construction.
    pub(crate) fn from_matrix_unchecked(matrix: ComplexMatrix) -> Self {
        DensityOperator { matrix }
    }

    pub fn maximally_mixed(d: usize) -> Self {
        DensityOperator {
            matrix: ComplexMatrix::identity(d).scale(1.0 / d as f64),
        }
    }

    /// |k><k| in the computational basis.
    pub fn basis_state(d: usize, k: usize) -> Result<Self> {
        if k >= d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: k + 1,
            });
        }
        let mut diag = vec![0.0; d];
        diag[k] = 1.0;
        Ok(DensityOperator {
            matrix: ComplexMatrix::diagonal(&diag),
        })
    }

    /// Pure state from an amplitude vector; normalized here.
    pub fn pure(amplitudes: &[C64]) -> Result<Self> {
        let norm_sq: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if amplitudes.is_empty() || !norm_sq.is_finite() || norm_sq == 0.0 {
            return Err(Error::InvalidConfig(
                "pure state needs a non-zero finite amplitude vector".into(),
            ));
        }
        let scale = 1.0 / norm_sq.sqrt();
        let v: Vec<C64> = amplitudes.iter().map(|a| a * scale).collect();
        Ok(DensityOperator {
            matrix: ComplexMatrix::outer(&v),
        })
    }

    /// (|0> + |1>)/sqrt(2) for a qubit.
    pub fn plus_x() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::pure(&[C64::new(h, 0.0), C64::new(h, 0.0)]).expect("fixed amplitudes")
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Tr(A rho).
    pub fn expectation(&self, op: &ComplexMatrix) -> C64 {
        (op * &self.matrix).trace()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.matrix.hermitian_eigenvalues()[0]
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }
}

/// Hermitian generator of the dynamics (hbar = 1). The eigendecomposition is
/// computed once at construction and reused for every propagator.
#[derive(Clone, Debug)]
pub struct Hamiltonian {
    matrix: ComplexMatrix,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<C64>,
}

impl PartialEq for Hamiltonian {
    fn eq(&self, other: &Self) -> bool {
        self.matrix == other.matrix
    }
}

impl Hamiltonian {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let residual = matrix.hermiticity_residual();
        if residual > IDENTITY_TOL {
            return Err(Error::NotHermitian {
                what: "Hamiltonian",
                residual,
            });
        }
        let eig = SymmetricEigen::new(matrix.hermitian_part().into_inner());
        Ok(Hamiltonian {
            matrix,
            eigenvalues: eig.eigenvalues.iter().copied().collect(),
            eigenvectors: eig.eigenvectors,
        })
    }

    pub fn zero(d: usize) -> Self {
        Self::new(ComplexMatrix::zeros(d)).expect("zero matrix is Hermitian")
    }

    /// Qubit precession (omega/2) sigma_x.
    pub fn precession(omega: f64) -> Result<Self> {
        if !omega.is_finite() {
            return Err(Error::NonFinite {
                what: "precession frequency",
            });
        }
        Self::new(pauli::x().scale(omega / 2.0))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// exp(-i H t) from the stored eigendecomposition.
    pub fn propagator(&self, t: f64) -> Result<ComplexMatrix> {
        if !t.is_finite() {
            return Err(Error::NonFinite {
                what: "evolution time",
            });
        }
        if t == 0.0 {
            return Ok(ComplexMatrix::identity(self.dim()));
        }
        let phases = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.eigenvalues.len(),
            self.eigenvalues
                .iter()
                .map(|&e| C64::from_polar(1.0, -e * t)),
        ));
        let v = &self.eigenvectors;
        Ok(ComplexMatrix::from_inner(v * phases * v.adjoint()))
    }
}
