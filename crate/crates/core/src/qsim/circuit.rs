use serde::{Deserialize, Serialize};

use super::{check_register, Gate, MixedState, PureState, QuantumState};
use crate::error::Result;

/// Ordered gate list on a fixed register.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Result<Self> {
        check_register(n_qubits)?;
        Ok(Self {
            n_qubits,
            gates: Vec::new(),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        self.gates.push(gate);
        Ok(())
    }

    /// Appends every gate of `other` (same register size required).
    pub fn extend(&mut self, other: &Circuit) -> Result<()> {
        if other.n_qubits != self.n_qubits {
            return Err(crate::error::Error::QubitCountMismatch {
                expected: self.n_qubits,
                found: other.n_qubits,
            });
        }
        self.gates.extend_from_slice(&other.gates);
        Ok(())
    }

    /// `U |0...0>` on the state-vector backend.
    pub fn run_pure(&self) -> Result<PureState> {
        let mut state = PureState::zero(self.n_qubits)?;
        state.apply_gates(&self.gates)?;
        Ok(state)
    }

    /// `U |0...0><0...0| U^dagger` on the density-matrix backend.
    pub fn run_mixed(&self) -> Result<MixedState> {
        let mut state = MixedState::zero(self.n_qubits)?;
        state.apply_gates(&self.gates)?;
        Ok(state)
    }
}
