use num_complex::Complex64;

use super::{check_qubit, check_register, qubit_mask, Gate, Mat2, MixedState, QuantumState, STATE_TOL};
use crate::error::{Error, Result};

/// State vector of an `n`-qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl PureState {
    /// `|0...0>`.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_register(n_qubits)?;
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::InvalidParameter(format!(
                "basis index {index} out of range for {n_qubits} qubits"
            )));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amplitudes })
    }

    pub fn from_amplitudes(n_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        check_register(n_qubits)?;
        if amplitudes.len() != 1 << n_qubits {
            return Err(Error::InvalidParameter(format!(
                "expected {} amplitudes, found {}",
                1usize << n_qubits,
                amplitudes.len()
            )));
        }
        let state = Self { n_qubits, amplitudes };
        if (state.norm_sqr() - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidParameter(format!(
                "state is not normalised (norm^2 = {})",
                state.norm_sqr()
            )));
        }
        Ok(state)
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `|psi><psi|`.
    pub fn to_mixed(&self) -> MixedState {
        let dim = self.amplitudes.len();
        let mut matrix = Vec::with_capacity(dim * dim);
        for a in &self.amplitudes {
            for b in &self.amplitudes {
                matrix.push(a * b.conj());
            }
        }
        MixedState::from_raw(self.n_qubits, matrix)
    }

    fn apply_single(&mut self, m: &Mat2, qubit: usize) {
        let mask = qubit_mask(qubit, self.n_qubits);
        for i in 0..self.amplitudes.len() {
            if i & mask != 0 {
                continue;
            }
            let j = i | mask;
            let (a, b) = (self.amplitudes[i], self.amplitudes[j]);
            self.amplitudes[i] = m[0][0] * a + m[0][1] * b;
            self.amplitudes[j] = m[1][0] * a + m[1][1] * b;
        }
    }
}

impl QuantumState for PureState {
    fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        match *gate {
            Gate::Cnot { control, target } => {
                let cm = qubit_mask(control, self.n_qubits);
                let tm = qubit_mask(target, self.n_qubits);
                for i in 0..self.amplitudes.len() {
                    if i & cm != 0 && i & tm == 0 {
                        self.amplitudes.swap(i, i | tm);
                    }
                }
            }
            Gate::Phase { qubit, phi } => {
                let mask = qubit_mask(qubit, self.n_qubits);
                let w = Complex64::from_polar(1.0, phi);
                for (i, a) in self.amplitudes.iter_mut().enumerate() {
                    if i & mask != 0 {
                        *a *= w;
                    }
                }
            }
            _ => {
                let m = gate.matrix().expect("single-qubit gate");
                self.apply_single(&m, gate.qubits()[0]);
            }
        }
        Ok(())
    }

    fn expval_z(&self, qubit: usize) -> Result<f64> {
        check_qubit(qubit, self.n_qubits)?;
        let mask = qubit_mask(qubit, self.n_qubits);
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| if i & mask == 0 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum())
    }

    fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }
}
