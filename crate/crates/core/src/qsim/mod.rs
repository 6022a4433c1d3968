//! Dense state-vector and density-matrix simulation.
//!
//! Basis index `b` of an `n`-qubit register is read as `|b_0 b_1 ... b_{n-1}>`
//! with qubit 0 the most significant bit. Every backend, sampler and
//! decision rule in the crate uses this ordering.

mod circuit;
mod gate;
mod mixed;
mod pure;
mod sample;

pub use circuit::Circuit;
pub use gate::{Gate, Mat2};
pub use mixed::MixedState;
pub use pure::PureState;
pub use sample::{sample, ShotSample, ShotSampler};

pub use num_complex::Complex64;

use crate::error::{Error, Result};

/// Absolute tolerance for norm, trace and hermiticity checks.
pub const STATE_TOL: f64 = 1e-10;
/// Smallest eigenvalue (or diagonal entry) accepted as non-negative.
pub const NEG_TOL: f64 = 1e-9;

/// Bit mask selecting `qubit` inside a basis index of an `n_qubits` register.
#[inline]
pub fn qubit_mask(qubit: usize, n_qubits: usize) -> usize {
    1 << (n_qubits - 1 - qubit)
}

pub(crate) fn check_qubit(qubit: usize, n_qubits: usize) -> Result<()> {
    if qubit >= n_qubits {
        return Err(Error::QubitOutOfRange {
            index: qubit,
            n_qubits,
        });
    }
    Ok(())
}

pub(crate) fn check_register(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 {
        return Err(Error::InvalidParameter("register needs at least one qubit".into()));
    }
    if n_qubits > 24 {
        return Err(Error::InvalidParameter(format!(
            "{n_qubits} qubits exceeds the dense simulator limit"
        )));
    }
    Ok(())
}

/// Common surface of the two simulation backends.
pub trait QuantumState {
    fn n_qubits(&self) -> usize;

    fn apply_gate(&mut self, gate: &Gate) -> Result<()>;

    /// `<Z_qubit>`.
    fn expval_z(&self, qubit: usize) -> Result<f64>;

    /// Z-basis outcome distribution, indexed by basis state.
    fn probabilities(&self) -> Vec<f64>;

    fn apply_gates<'a, I>(&mut self, gates: I) -> Result<()>
    where
        I: IntoIterator<Item = &'a Gate>,
        Self: Sized,
    {
        for gate in gates {
            self.apply_gate(gate)?;
        }
        Ok(())
    }

    /// `<Z_i>` for every qubit.
    fn expval_z_all(&self) -> Vec<f64> {
        let n = self.n_qubits();
        let probs = self.probabilities();
        let mut out = vec![0.0; n];
        for (b, p) in probs.iter().enumerate() {
            for (q, z) in out.iter_mut().enumerate() {
                if b & qubit_mask(q, n) == 0 {
                    *z += p;
                } else {
                    *z -= p;
                }
            }
        }
        out
    }
}
