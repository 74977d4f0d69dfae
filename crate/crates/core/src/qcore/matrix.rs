use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::de::{self, Deserializer};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Dense square complex matrix used for every operator in the crate.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl ComplexMatrix {
    /// Wraps a dense matrix after checking it is square with finite entries.
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite { what: "matrix" });
        }
        Ok(ComplexMatrix(m))
    }

    pub(crate) fn from_inner(m: DMatrix<C64>) -> Self {
        debug_assert_eq!(m.nrows(), m.ncols());
        ComplexMatrix(m)
    }

    /// Builds a matrix from row-major complex entries.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let d = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::NotSquare {
                rows: d,
                cols: bad.len(),
            });
        }
        Self::new(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
    }

    /// Builds a matrix from row-major real entries.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let complex: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&complex)
    }

    pub fn identity(d: usize) -> Self {
        ComplexMatrix(DMatrix::identity(d, d))
    }

    pub fn zeros(d: usize) -> Self {
        ComplexMatrix(DMatrix::zeros(d, d))
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        let d = entries.len();
        ComplexMatrix(DMatrix::from_fn(d, d, |i, j| {
            if i == j {
                C64::new(entries[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    }

    /// Rank-one projector |v><v| (not normalized).
    pub fn outer(v: &[C64]) -> Self {
        let d = v.len();
        ComplexMatrix(DMatrix::from_fn(d, d, |i, j| v[i] * v[j].conj()))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_inner(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<C64> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn adjoint(&self) -> Self {
        ComplexMatrix(self.0.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn scale(&self, factor: f64) -> Self {
        ComplexMatrix(self.0.map(|z| z * factor))
    }

    pub fn scale_complex(&self, factor: C64) -> Self {
        ComplexMatrix(self.0.map(|z| z * factor))
    }

    /// Entrywise maximum of |M - M^dagger|.
    pub fn hermiticity_residual(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0_f64;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.0[(i, j)] - self.0[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Entrywise maximum of |A - B|. Panics on dimension mismatch.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!(self.dim(), other.dim(), "max_abs_diff: dimension mismatch");
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Hermitian part (M + M^dagger)/2.
    pub fn hermitian_part(&self) -> Self {
        ComplexMatrix((&self.0 + self.0.adjoint()) * C64::new(0.5, 0.0))
    }

    pub fn kron(&self, other: &ComplexMatrix) -> Self {
        ComplexMatrix(self.0.kronecker(&other.0))
    }

    /// Real eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let mut eig: Vec<f64> = self
            .hermitian_part()
            .0
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        eig.sort_by(f64::total_cmp);
        eig
    }

    /// Conjugation U M U^dagger.
    pub fn conjugate_by(&self, u: &ComplexMatrix) -> Self {
        ComplexMatrix(&u.0 * &self.0 * u.0.adjoint())
    }

    pub(crate) fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() == expected {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected,
                found: self.dim(),
            })
        }
    }

    /// Row-major nested `[re, im]` pairs.
    pub fn to_pairs(&self) -> Vec<Vec<[f64; 2]>> {
        let d = self.dim();
        (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| [self.0[(i, j)].re, self.0[(i, j)].im])
                    .collect()
            })
            .collect()
    }

    pub fn from_pairs(rows: &[Vec<[f64; 2]>]) -> Result<Self> {
        let complex: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|p| C64::new(p[0], p[1])).collect())
            .collect();
        Self::from_rows(&complex)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{})", self.dim(), self.dim())?;
        for i in 0..self.dim() {
            let row: Vec<String> = (0..self.dim())
                .map(|j| {
                    let z = self.0[(i, j)];
                    format!("{:+.6}{:+.6}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl<'a> Mul<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

impl<'a> Add<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl<'a> Sub<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows = self.to_pairs();
        let mut seq = serializer.serialize_seq(Some(rows.len()))?;
        for row in &rows {
            seq.serialize_element(row)?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(deserializer)?;
        ComplexMatrix::from_pairs(&rows).map_err(de::Error::custom)
    }
}

/// Pauli matrices.
pub mod pauli {
    use super::{ComplexMatrix, C64};
    use nalgebra::DMatrix;

    pub fn x() -> ComplexMatrix {
        ComplexMatrix::from_inner(DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(0.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(0.0, 0.0),
            ],
        ))
    }

    pub fn y() -> ComplexMatrix {
        ComplexMatrix::from_inner(DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(0.0, 0.0),
                C64::new(0.0, -1.0),
                C64::new(0.0, 1.0),
                C64::new(0.0, 0.0),
            ],
        ))
    }

    pub fn z() -> ComplexMatrix {
        ComplexMatrix::diagonal(&[1.0, -1.0])
    }
}
