use std::fmt;

use rand::{Rng, RngCore};

use super::{qubit_mask, QuantumState, NEG_TOL};
use crate::error::{Error, Result};

/// One Z-basis measurement of the whole register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ShotSample {
    n_qubits: usize,
    index: usize,
}

impl ShotSample {
    pub fn new(n_qubits: usize, index: usize) -> Self {
        debug_assert!(index < 1 << n_qubits);
        Self { n_qubits, index }
    }

    /// Parses a bitstring such as `"101"` (qubit 0 first).
    pub fn parse(bits: &str) -> Result<Self> {
        if bits.is_empty() || bits.len() > 24 {
            return Err(Error::InvalidParameter(format!("bad bitstring {bits:?}")));
        }
        let index = usize::from_str_radix(bits, 2)
            .map_err(|_| Error::InvalidParameter(format!("bad bitstring {bits:?}")))?;
        Ok(Self::new(bits.len(), index))
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Basis-state index (qubit 0 = most significant bit).
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn bit(&self, qubit: usize) -> bool {
        self.index & qubit_mask(qubit, self.n_qubits) != 0
    }

    /// Hamming distance to the all-zeros string.
    pub fn weight(&self) -> usize {
        self.index.count_ones() as usize
    }
}

impl fmt::Display for ShotSample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:0width$b}", self.index, width = self.n_qubits)
    }
}

/// Draws shots from a fixed outcome distribution and counts every draw.
#[derive(Debug, Clone)]
pub struct ShotSampler {
    n_qubits: usize,
    cumulative: Vec<f64>,
    draws: u64,
}

impl ShotSampler {
    pub fn from_probabilities(n_qubits: usize, probabilities: &[f64]) -> Result<Self> {
        if probabilities.len() != 1 << n_qubits {
            return Err(Error::InvalidParameter(format!(
                "expected {} probabilities, found {}",
                1usize << n_qubits,
                probabilities.len()
            )));
        }
        let mut cumulative = Vec::with_capacity(probabilities.len());
        let mut acc = 0.0;
        for (index, &p) in probabilities.iter().enumerate() {
            if p < -NEG_TOL || !p.is_finite() {
                return Err(Error::NegativeProbability { index, value: p });
            }
            acc += p.max(0.0);
            cumulative.push(acc);
        }
        if acc <= 0.0 {
            return Err(Error::Numeric("outcome distribution has zero mass".into()));
        }
        for c in &mut cumulative {
            *c /= acc;
        }
        Ok(Self {
            n_qubits,
            cumulative,
            draws: 0,
        })
    }

    pub fn from_state<S: QuantumState>(state: &S) -> Result<Self> {
        Self::from_probabilities(state.n_qubits(), &state.probabilities())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Normalised outcome probability of basis state `index`.
    pub fn probability(&self, index: usize) -> f64 {
        let prev = if index == 0 { 0.0 } else { self.cumulative[index - 1] };
        self.cumulative[index] - prev
    }

    /// Number of shots drawn so far.
    pub fn draws(&self) -> u64 {
        self.draws
    }

    pub fn draw<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> ShotSample {
        let u: f64 = rng.random();
        let last = self.cumulative.len() - 1;
        // first index whose cumulative mass exceeds u; skips zero-mass outcomes
        let index = self.cumulative.partition_point(|&c| c <= u).min(last);
        self.draws += 1;
        ShotSample::new(self.n_qubits, index)
    }
}

/// Single shot from `state`.
pub fn sample<S: QuantumState, R: RngCore + ?Sized>(state: &S, rng: &mut R) -> Result<ShotSample> {
    Ok(ShotSampler::from_state(state)?.draw(rng))
}
