#![allow(dead_code)]

use macroreal::protocols::Schedule;
use macroreal::qcore::{pauli, ComplexMatrix, DensityOperator, DichotomicObservable, Hamiltonian};
use proptest::prelude::*;
use rand::Rng;

/// A random qubit experiment: state, Hamiltonian, observable and times.
#[derive(Clone, Debug)]
pub struct Qubit {
    pub rho: DensityOperator,
    pub h: Hamiltonian,
    pub q: DichotomicObservable,
    pub schedule: Schedule,
}

/// Number of raw parameters consumed by [`qubit`] for `n` times.
pub fn param_count(n: usize) -> usize {
    9 + n
}

fn bloch(theta: f64, phi: f64) -> [f64; 3] {
    [
        theta.sin() * phi.cos(),
        theta.sin() * phi.sin(),
        theta.cos(),
    ]
}

fn pauli_combination(c0: f64, v: [f64; 3]) -> ComplexMatrix {
    let m = &(&ComplexMatrix::identity(2).scale(c0) + &pauli::x().scale(v[0]))
        + &(&pauli::y().scale(v[1]) + &pauli::z().scale(v[2]));
    m.hermitian_part()
}

/// Builds a scenario from unit-interval parameters.
pub fn qubit(p: &[f64]) -> Qubit {
    use std::f64::consts::PI;
    let n = p.len() - 9;
    let r = p[0];
    let n_rho = bloch(p[1] * PI, p[2] * 2.0 * PI);
    let rho = DensityOperator::new(pauli_combination(0.5, n_rho.map(|c| 0.5 * r * c))).unwrap();
    let h = Hamiltonian::new(pauli_combination(
        4.0 * p[3] - 2.0,
        [4.0 * p[4] - 2.0, 4.0 * p[5] - 2.0, 4.0 * p[6] - 2.0],
    ))
    .unwrap();
    let axis = bloch(p[7] * PI, p[8] * 2.0 * PI);
    let q = DichotomicObservable::new(pauli_combination(0.0, axis)).unwrap();
    let mut t = 0.0;
    let times = (0..n).map(|k| {
        t += 0.05 + 3.0 * p[9 + k];
        t
    });
    Qubit {
        rho,
        h,
        q,
        schedule: Schedule::new(times.collect()).unwrap(),
    }
}

pub fn qubit_strategy(n: usize) -> impl Strategy<Value = Qubit> {
    proptest::collection::vec(0.0..1.0f64, param_count(n)).prop_map(|p| qubit(&p))
}

pub fn random_qubit<R: Rng>(rng: &mut R, n: usize) -> Qubit {
    let p: Vec<f64> = (0..param_count(n)).map(|_| rng.random::<f64>()).collect();
    qubit(&p)
}
