use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{check_qubit, check_register, qubit_mask, Gate, Mat2, QuantumState, NEG_TOL, STATE_TOL};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Density operator of an `n`-qubit register, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedState {
    n_qubits: usize,
    matrix: Vec<Complex64>,
}

impl MixedState {
    pub(crate) fn from_raw(n_qubits: usize, matrix: Vec<Complex64>) -> Self {
        debug_assert_eq!(matrix.len(), 1 << (2 * n_qubits));
        Self { n_qubits, matrix }
    }

    /// `|0...0><0...0|`.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        let mut diag = vec![0.0; 1 << n_qubits.min(24)];
        diag[0] = 1.0;
        Self::from_diagonal(n_qubits, &diag)
    }

    /// `1 / 2^n`.
    pub fn maximally_mixed(n_qubits: usize) -> Result<Self> {
        check_register(n_qubits)?;
        let dim = 1usize << n_qubits;
        Self::from_diagonal(n_qubits, &vec![1.0 / dim as f64; dim])
    }

    /// Diagonal state with the given basis-state populations.
    pub fn from_diagonal(n_qubits: usize, diagonal: &[f64]) -> Result<Self> {
        check_register(n_qubits)?;
        let dim = 1usize << n_qubits;
        if diagonal.len() != dim {
            return Err(Error::InvalidParameter(format!(
                "expected {dim} diagonal entries, found {}",
                diagonal.len()
            )));
        }
        let mut matrix = vec![ZERO; dim * dim];
        for (i, p) in diagonal.iter().enumerate() {
            matrix[i * dim + i] = Complex64::new(*p, 0.0);
        }
        let state = Self { n_qubits, matrix };
        state.validate()?;
        Ok(state)
    }

    /// Builds and validates a density matrix from row-major entries.
    pub fn from_matrix(n_qubits: usize, matrix: Vec<Complex64>) -> Result<Self> {
        check_register(n_qubits)?;
        if matrix.len() != 1 << (2 * n_qubits) {
            return Err(Error::InvalidParameter(format!(
                "expected {} matrix entries, found {}",
                1usize << (2 * n_qubits),
                matrix.len()
            )));
        }
        let state = Self { n_qubits, matrix };
        state.validate()?;
        Ok(state)
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn matrix(&self) -> &[Complex64] {
        &self.matrix
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[row * self.dim() + col]
    }

    pub fn trace(&self) -> Complex64 {
        let dim = self.dim();
        (0..dim).map(|i| self.matrix[i * dim + i]).sum()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let dim = self.dim();
        let m = DMatrix::from_row_slice(dim, dim, &self.matrix);
        m.symmetric_eigenvalues().iter().copied().collect()
    }

    /// Checks hermiticity, unit trace and positivity.
    pub fn validate(&self) -> Result<()> {
        let dim = self.dim();
        for r in 0..dim {
            for c in r..dim {
                let d = (self.get(r, c) - self.get(c, r).conj()).norm();
                if d > STATE_TOL {
                    return Err(Error::Numeric(format!("density matrix not Hermitian at ({r}, {c})")));
                }
            }
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::Numeric(format!("density matrix trace is {tr}")));
        }
        if let Some(min) = self.eigenvalues().into_iter().reduce(f64::min) {
            if min < -NEG_TOL {
                return Err(Error::Numeric(format!("negative eigenvalue {min:e}")));
            }
        }
        Ok(())
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &MixedState) -> f64 {
        self.matrix
            .iter()
            .zip(&other.matrix)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `K rho K^dagger` for a single-qubit operator `K` on `qubit`.
    fn sandwich(&self, k: &Mat2, qubit: usize) -> Vec<Complex64> {
        let dim = self.dim();
        let mask = qubit_mask(qubit, self.n_qubits);
        let mut out = self.matrix.clone();
        // K rho
        for col in 0..dim {
            for i in (0..dim).filter(|i| i & mask == 0) {
                let j = i | mask;
                let (a, b) = (out[i * dim + col], out[j * dim + col]);
                out[i * dim + col] = k[0][0] * a + k[0][1] * b;
                out[j * dim + col] = k[1][0] * a + k[1][1] * b;
            }
        }
        // (K rho) K^dagger
        for row in 0..dim {
            let base = row * dim;
            for i in (0..dim).filter(|i| i & mask == 0) {
                let j = i | mask;
                let (x, y) = (out[base + i], out[base + j]);
                out[base + i] = x * k[0][0].conj() + y * k[0][1].conj();
                out[base + j] = x * k[1][0].conj() + y * k[1][1].conj();
            }
        }
        out
    }

    /// `rho -> sum_i K_i rho K_i^dagger` with single-qubit Kraus operators on `qubit`.
    pub fn apply_kraus(&mut self, kraus: &[Mat2], qubit: usize) -> Result<()> {
        check_qubit(qubit, self.n_qubits)?;
        let mut acc = vec![ZERO; self.matrix.len()];
        for k in kraus {
            for (a, t) in acc.iter_mut().zip(self.sandwich(k, qubit)) {
                *a += t;
            }
        }
        self.matrix = acc;
        Ok(())
    }

    /// Reduced state of a single qubit (trace over every other qubit).
    pub fn partial_trace_keep(&self, qubit: usize) -> Result<MixedState> {
        check_qubit(qubit, self.n_qubits)?;
        let dim = self.dim();
        let mask = qubit_mask(qubit, self.n_qubits);
        let mut out = [ZERO; 4];
        for i in (0..dim).filter(|i| i & mask == 0) {
            let j = i | mask;
            out[0] += self.matrix[i * dim + i];
            out[1] += self.matrix[i * dim + j];
            out[2] += self.matrix[j * dim + i];
            out[3] += self.matrix[j * dim + j];
        }
        Ok(MixedState::from_raw(1, out.to_vec()))
    }

    /// Completely dephasing channel: drop every off-diagonal entry.
    pub fn dephase(&self) -> MixedState {
        let dim = self.dim();
        let mut matrix = vec![ZERO; dim * dim];
        for i in 0..dim {
            matrix[i * dim + i] = self.matrix[i * dim + i];
        }
        MixedState::from_raw(self.n_qubits, matrix)
    }

    /// `tr(rho P)` for the diagonal projector onto `accepted` basis states.
    pub fn diagonal_weight<F: Fn(usize) -> bool>(&self, accepted: F) -> f64 {
        let dim = self.dim();
        (0..dim).filter(|&b| accepted(b)).map(|b| self.matrix[b * dim + b].re).sum()
    }
}

impl QuantumState for MixedState {
    fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        match *gate {
            Gate::Cnot { control, target } => {
                let dim = self.dim();
                let cm = qubit_mask(control, self.n_qubits);
                let tm = qubit_mask(target, self.n_qubits);
                let perm = |i: usize| if i & cm != 0 { i ^ tm } else { i };
                let old = std::mem::take(&mut self.matrix);
                self.matrix = (0..dim * dim)
                    .map(|idx| old[perm(idx / dim) * dim + perm(idx % dim)])
                    .collect();
            }
            _ => {
                let m = gate.matrix().expect("single-qubit gate");
                self.matrix = self.sandwich(&m, gate.qubits()[0]);
            }
        }
        Ok(())
    }

    fn expval_z(&self, qubit: usize) -> Result<f64> {
        check_qubit(qubit, self.n_qubits)?;
        let mask = qubit_mask(qubit, self.n_qubits);
        let dim = self.dim();
        Ok((0..dim)
            .map(|b| {
                let p = self.matrix[b * dim + b].re;
                if b & mask == 0 {
                    p
                } else {
                    -p
                }
            })
            .sum())
    }

    fn probabilities(&self) -> Vec<f64> {
        let dim = self.dim();
        (0..dim).map(|b| self.matrix[b * dim + b].re).collect()
    }
}
