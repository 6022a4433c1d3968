//! Single-qubit Kraus channels and per-gate noise insertion.
//!
//! Two depolarizing parameterisations are provided. `DepolarizingMixing(eps)`
//! is the mixing form `(1 - eps) rho + eps 1/2`; `DepolarizingPauli(p)` is the
//! Pauli-error form `(1 - p) rho + p/3 (X rho X + Y rho Y + Z rho Z)`. They
//! coincide when `eps = 4p/3`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qsim::{Circuit, Gate, Mat2, MixedState, PureState, QuantumState};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn pauli_kraus(weight_identity: f64, weight_pauli: f64) -> Vec<Mat2> {
    let (a, b) = (weight_identity.sqrt(), weight_pauli.sqrt());
    let i = Complex64::new(0.0, b);
    vec![
        [[real(a), ZERO], [ZERO, real(a)]],
        [[ZERO, real(b)], [real(b), ZERO]],
        [[ZERO, -i], [i, ZERO]],
        [[real(b), ZERO], [ZERO, real(-b)]],
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "parameter", rename_all = "snake_case")]
pub enum Channel {
    DepolarizingPauli(f64),
    DepolarizingMixing(f64),
    AmplitudeDamping(f64),
    PhaseDamping(f64),
}

impl Channel {
    pub fn parameter(&self) -> f64 {
        match *self {
            Channel::DepolarizingPauli(x)
            | Channel::DepolarizingMixing(x)
            | Channel::AmplitudeDamping(x)
            | Channel::PhaseDamping(x) => x,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Channel::DepolarizingPauli(_) => "depolarizing_pauli",
            Channel::DepolarizingMixing(_) => "depolarizing_mixing",
            Channel::AmplitudeDamping(_) => "amplitude_damping",
            Channel::PhaseDamping(_) => "phase_damping",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.parameter();
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidProbability {
                name: self.name(),
                value: p,
            });
        }
        Ok(())
    }

    pub fn kraus(&self) -> Result<Vec<Mat2>> {
        self.validate()?;
        Ok(match *self {
            Channel::DepolarizingPauli(p) => pauli_kraus(1.0 - p, p / 3.0),
            Channel::DepolarizingMixing(eps) => pauli_kraus(1.0 - 0.75 * eps, eps / 4.0),
            Channel::AmplitudeDamping(g) => vec![
                [[real(1.0), ZERO], [ZERO, real((1.0 - g).sqrt())]],
                [[ZERO, real(g.sqrt())], [ZERO, ZERO]],
            ],
            Channel::PhaseDamping(g) => vec![
                [[real(1.0), ZERO], [ZERO, real((1.0 - g).sqrt())]],
                [[ZERO, ZERO], [ZERO, real(g.sqrt())]],
            ],
        })
    }

    /// A channel whose parameter is zero acts as the identity.
    pub fn is_identity(&self) -> bool {
        self.parameter() == 0.0
    }
}

/// `rho -> sum_i K_i rho K_i^dagger` on one qubit.
pub fn apply_channel(state: &mut MixedState, channel: Channel, qubit: usize) -> Result<()> {
    let kraus = channel.kraus()?;
    state.apply_kraus(&kraus, qubit)
}

/// `DepolarizingMixing(eps)` applied independently to every qubit.
pub fn global_depolarize(state: &MixedState, eps: f64) -> Result<MixedState> {
    let channel = Channel::DepolarizingMixing(eps);
    let kraus = channel.kraus()?;
    let mut out = state.clone();
    if channel.is_identity() {
        return Ok(out);
    }
    for q in 0..out.n_qubits() {
        out.apply_kraus(&kraus, q)?;
    }
    Ok(out)
}

/// Channels inserted after every gate, on every qubit the gate touches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub channels: Vec<Channel>,
}

impl Default for NoiseSpec {
    /// Depolarizing 0.02, then amplitude damping 0.05, then phase damping 0.03.
    fn default() -> Self {
        Self {
            channels: vec![
                Channel::DepolarizingPauli(0.02),
                Channel::AmplitudeDamping(0.05),
                Channel::PhaseDamping(0.03),
            ],
        }
    }
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        self.channels.iter().try_for_each(Channel::validate)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Op {
    Gate(Gate),
    Channel { channel: Channel, qubit: usize },
}

/// A circuit with channel applications interleaved between gates.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyCircuit {
    n_qubits: usize,
    ops: Vec<Op>,
}

impl NoisyCircuit {
    pub fn ops(&self) -> &[Op] {
        &self.ops
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn channel_count(&self) -> usize {
        self.ops.iter().filter(|op| matches!(op, Op::Channel { .. })).count()
    }

    pub fn gate_count(&self) -> usize {
        self.ops.len() - self.channel_count()
    }

    /// Runs the program on `|0...0><0...0|`.
    pub fn run(&self) -> Result<MixedState> {
        let mut state = MixedState::zero(self.n_qubits)?;
        self.apply(&mut state)?;
        Ok(state)
    }

    pub fn apply(&self, state: &mut MixedState) -> Result<()> {
        // kraus sets are rebuilt per op; channels are few and tiny
        for op in &self.ops {
            match op {
                Op::Gate(g) => state.apply_gate(g)?,
                Op::Channel { channel, qubit } => apply_channel(state, *channel, *qubit)?,
            }
        }
        Ok(())
    }

    /// State-vector execution; refuses programs that contain channels.
    pub fn apply_pure(&self, state: &mut PureState) -> Result<()> {
        if self.channel_count() > 0 {
            return Err(Error::NoiseOnPureState);
        }
        for op in &self.ops {
            if let Op::Gate(g) = op {
                state.apply_gate(g)?;
            }
        }
        Ok(())
    }
}

/// Inserts `spec`'s channels, in order, after each gate on each touched qubit.
pub fn noisy_transform(circuit: &Circuit, spec: &NoiseSpec) -> Result<NoisyCircuit> {
    spec.validate()?;
    let mut ops = Vec::with_capacity(circuit.len() * (1 + 2 * spec.channels.len()));
    for gate in circuit.gates() {
        ops.push(Op::Gate(*gate));
        for qubit in gate.qubits() {
            for channel in &spec.channels {
                ops.push(Op::Channel {
                    channel: *channel,
                    qubit,
                });
            }
        }
    }
    Ok(NoisyCircuit {
        n_qubits: circuit.n_qubits(),
        ops,
    })
}
