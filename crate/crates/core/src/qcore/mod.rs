//! Dense complex linear algebra for d-level systems: states, observables,
//! unitary evolution and the dephasing / clumsiness channels.

mod channel;
mod matrix;
mod observable;
mod state;

pub use channel::{
    ancilla_blind_measurement, apply_clumsiness, dephase, evolve, heisenberg_projector,
    random_phase_dephase, ClumsinessModel,
};
pub(crate) use channel::{ancilla_blind_raw, dephase_raw, heisenberg};
pub use matrix::{pauli, ComplexMatrix, C64};
pub use observable::{DichotomicObservable, ManyValuedObservable, Observable, Sign};
pub use state::{DensityOperator, Hamiltonian};

/// Tolerance for algebraic identities (hermiticity, unit trace, Q^2 = 1).
pub const IDENTITY_TOL: f64 = 1e-12;
/// Tolerance for eigenvalue positivity.
pub const EIGEN_TOL: f64 = 1e-10;
