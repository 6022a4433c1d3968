use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{check_qubit, qubit_mask};
use crate::error::{Error, Result};

/// Row-major single-qubit operator.
pub type Mat2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// The gate set used by the feature map and ansatz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    H(usize),
    Ry { qubit: usize, theta: f64 },
    Phase { qubit: usize, phi: f64 },
    Cnot { control: usize, target: usize },
}

impl Gate {
    pub fn ry(qubit: usize, theta: f64) -> Self {
        Gate::Ry { qubit, theta }
    }

    pub fn phase(qubit: usize, phi: f64) -> Self {
        Gate::Phase { qubit, phi }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Gate::Cnot { control, target }
    }

    /// Qubits the gate acts on; CNOT lists control then target.
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::H(q) | Gate::Ry { qubit: q, .. } | Gate::Phase { qubit: q, .. } => vec![q],
            Gate::Cnot { control, target } => vec![control, target],
        }
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        for q in self.qubits() {
            check_qubit(q, n_qubits)?;
        }
        if let Gate::Cnot { control, target } = *self {
            if control == target {
                return Err(Error::DuplicateQubit(control));
            }
        }
        Ok(())
    }

    /// 2x2 matrix of a single-qubit gate, `None` for CNOT.
    pub fn matrix(&self) -> Option<Mat2> {
        match *self {
            Gate::H(_) => {
                let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
                Some([[h, h], [h, -h]])
            }
            Gate::Ry { theta, .. } => {
                let (s, c) = (theta / 2.0).sin_cos();
                Some([
                    [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
                    [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
                ])
            }
            Gate::Phase { phi, .. } => Some([[ONE, ZERO], [ZERO, Complex64::from_polar(1.0, phi)]]),
            Gate::Cnot { .. } => None,
        }
    }

    /// Dense `2^n x 2^n` unitary, row-major. Used for verification only.
    pub fn full_unitary(&self, n_qubits: usize) -> Result<Vec<Complex64>> {
        self.validate(n_qubits)?;
        let dim = 1usize << n_qubits;
        let mut u = vec![ZERO; dim * dim];
        match (*self, self.matrix()) {
            (Gate::Cnot { control, target }, _) => {
                let (cm, tm) = (qubit_mask(control, n_qubits), qubit_mask(target, n_qubits));
                for col in 0..dim {
                    let row = if col & cm != 0 { col ^ tm } else { col };
                    u[row * dim + col] = ONE;
                }
            }
            (gate, Some(m)) => {
                let mask = qubit_mask(gate.qubits()[0], n_qubits);
                for col in 0..dim {
                    let cb = usize::from(col & mask != 0);
                    for rb in 0..2 {
                        let row = if rb == 1 { col | mask } else { col & !mask };
                        u[row * dim + col] = m[rb][cb];
                    }
                }
            }
            (_, None) => unreachable!(),
        }
        Ok(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_unitarity_defect(u: &[Complex64], dim: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                let mut acc = ZERO;
                for k in 0..dim {
                    acc += u[k * dim + i].conj() * u[k * dim + j];
                }
                let expected = if i == j { ONE } else { ZERO };
                worst = worst.max((acc - expected).norm());
            }
        }
        worst
    }

    #[test]
    fn every_gate_is_unitary() {
        let gates = [
            Gate::H(1),
            Gate::ry(0, 0.37),
            Gate::ry(2, -2.9),
            Gate::phase(1, 1.234),
            Gate::cnot(2, 0),
            Gate::cnot(0, 1),
        ];
        for g in gates {
            let u = g.full_unitary(3).unwrap();
            assert!(max_unitarity_defect(&u, 8) < 1e-12, "{g:?}");
        }
    }

    #[test]
    fn rejects_bad_targets() {
        assert!(matches!(
            Gate::H(3).validate(3),
            Err(Error::QubitOutOfRange { index: 3, .. })
        ));
        assert!(matches!(Gate::cnot(1, 1).validate(3), Err(Error::DuplicateQubit(1))));
    }
}
