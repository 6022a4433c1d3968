//! Feature map, data re-uploading ansatz, their composition, and
//! parameter-shift gradients.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{noisy_transform, NoiseSpec};
use crate::qsim::{Circuit, Gate, MixedState, PureState, QuantumState};

/// Circuit shape: `n_qubits` (one per feature), feature-map layers and
/// ansatz re-uploading layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitSpec {
    pub n_qubits: usize,
    pub feature_layers: usize,
    pub ansatz_layers: usize,
}

impl CircuitSpec {
    pub fn new(n_qubits: usize, feature_layers: usize, ansatz_layers: usize) -> Result<Self> {
        let spec = Self {
            n_qubits,
            feature_layers,
            ansatz_layers,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits < 2 {
            return Err(Error::InvalidParameter(format!(
                "entangling layers need at least 2 qubits, got {}",
                self.n_qubits
            )));
        }
        if self.feature_layers == 0 || self.ansatz_layers == 0 {
            return Err(Error::InvalidParameter("layer counts must be at least 1".into()));
        }
        Ok(())
    }

    pub fn feature_map_gate_count(&self) -> usize {
        let k = self.n_qubits;
        self.feature_layers * (2 * k + 3 * (k - 1))
    }

    pub fn ansatz_gate_count(&self) -> usize {
        let k = self.n_qubits;
        k + self.ansatz_layers * (3 * k - 1)
    }

    pub fn gate_count(&self) -> usize {
        self.feature_map_gate_count() + self.ansatz_gate_count()
    }

    pub fn parameter_count(&self) -> usize {
        (self.ansatz_layers + 1) * self.n_qubits
    }
}

/// Trainable RY angles; row 0 is the initial rotation column, rows
/// `1..=ansatz_layers` follow each re-uploading block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnsatzWeights {
    rows: Vec<Vec<f64>>,
}

impl AnsatzWeights {
    pub fn zeros(spec: &CircuitSpec) -> Self {
        Self {
            rows: vec![vec![0.0; spec.n_qubits]; spec.ansatz_layers + 1],
        }
    }

    /// Uniform on `[0, pi)`.
    pub fn random<R: RngCore + ?Sized>(spec: &CircuitSpec, rng: &mut R) -> Self {
        let rows = (0..=spec.ansatz_layers)
            .map(|_| (0..spec.n_qubits).map(|_| rng.random::<f64>() * PI).collect())
            .collect();
        Self { rows }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.len() < 2 || cols == 0 || rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidParameter("weights must be a non-empty rectangular matrix with at least 2 rows".into()));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite weight".into()));
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.rows[0].len()
    }

    pub fn len(&self) -> usize {
        self.n_rows() * self.n_cols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, layer: usize, qubit: usize) -> f64 {
        self.rows[layer][qubit]
    }

    pub fn set(&mut self, layer: usize, qubit: usize, value: f64) {
        self.rows[layer][qubit] = value;
    }

    /// Row-major flat view.
    pub fn to_flat(&self) -> Vec<f64> {
        self.rows.iter().flatten().copied().collect()
    }

    pub fn from_flat(&self, flat: &[f64]) -> Self {
        debug_assert_eq!(flat.len(), self.len());
        Self {
            rows: flat.chunks(self.n_cols()).map(<[f64]>::to_vec).collect(),
        }
    }

    pub fn check_shape(&self, spec: &CircuitSpec) -> Result<()> {
        if self.n_rows() != spec.ansatz_layers + 1 || self.n_cols() != spec.n_qubits {
            return Err(Error::ShapeMismatch {
                expected_rows: spec.ansatz_layers + 1,
                expected_cols: spec.n_qubits,
                rows: self.n_rows(),
                cols: self.n_cols(),
            });
        }
        Ok(())
    }
}

fn check_features(features: &[f64], n_qubits: usize) -> Result<()> {
    if features.len() != n_qubits {
        return Err(Error::QubitCountMismatch {
            expected: n_qubits,
            found: features.len(),
        });
    }
    Ok(())
}

/// ZZ-entangling feature map over a linear chain of neighbouring pairs.
///
/// Per layer: `H` on every qubit, `P(2 x_j)` on every qubit, then for each
/// pair `(j, j+1)` in ascending order `CNOT(j+1 -> j)`,
/// `P(2 (pi - x_j)(pi - x_{j+1}))` on qubit `j+1`, `CNOT(j+1 -> j)`.
pub fn build_feature_map(features: &[f64], layers: usize) -> Result<Circuit> {
    let k = features.len();
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "feature map needs at least 2 features, got {k}"
        )));
    }
    let mut c = Circuit::new(k)?;
    for _ in 0..layers {
        for q in 0..k {
            c.push(Gate::H(q))?;
        }
        for (q, x) in features.iter().enumerate() {
            c.push(Gate::phase(q, 2.0 * x))?;
        }
        for j in 0..k - 1 {
            let angle = 2.0 * (PI - features[j]) * (PI - features[j + 1]);
            c.push(Gate::cnot(j + 1, j))?;
            c.push(Gate::phase(j + 1, angle))?;
            c.push(Gate::cnot(j + 1, j))?;
        }
    }
    Ok(c)
}

/// Reverse-entangling RY ansatz with data re-uploading.
///
/// `RY(theta_0j)` on every qubit, then per layer `l`: `RY(x_j)` on every
/// qubit, `CNOT(j+1 -> j)` for `j = k-2 .. 0`, `RY(theta_lj)` on every qubit.
pub fn build_ansatz(features: &[f64], weights: &AnsatzWeights) -> Result<Circuit> {
    let k = weights.n_cols();
    check_features(features, k)?;
    let mut c = Circuit::new(k)?;
    for q in 0..k {
        c.push(Gate::ry(q, weights.get(0, q)))?;
    }
    for layer in 1..weights.n_rows() {
        for (q, x) in features.iter().enumerate() {
            c.push(Gate::ry(q, *x))?;
        }
        for j in (0..k - 1).rev() {
            c.push(Gate::cnot(j + 1, j))?;
        }
        for q in 0..k {
            c.push(Gate::ry(q, weights.get(layer, q)))?;
        }
    }
    Ok(c)
}

/// Feature map followed by ansatz.
pub fn build_vqc(features: &[f64], weights: &AnsatzWeights, spec: &CircuitSpec) -> Result<Circuit> {
    spec.validate()?;
    weights.check_shape(spec)?;
    check_features(features, spec.n_qubits)?;
    let mut c = build_feature_map(features, spec.feature_layers)?;
    c.extend(&build_ansatz(features, weights)?)?;
    Ok(c)
}

/// Output of [`run_vqc`]: pure when noiseless, mixed when a noise model is set.
#[derive(Debug, Clone, PartialEq)]
pub enum VqcState {
    Pure(PureState),
    Mixed(MixedState),
}

impl VqcState {
    pub fn backend(&self) -> &'static str {
        match self {
            VqcState::Pure(_) => "statevector",
            VqcState::Mixed(_) => "density_matrix",
        }
    }

    pub fn to_mixed(&self) -> MixedState {
        match self {
            VqcState::Pure(p) => p.to_mixed(),
            VqcState::Mixed(m) => m.clone(),
        }
    }
}

impl QuantumState for VqcState {
    fn n_qubits(&self) -> usize {
        match self {
            VqcState::Pure(s) => s.n_qubits(),
            VqcState::Mixed(s) => s.n_qubits(),
        }
    }

    fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        match self {
            VqcState::Pure(s) => s.apply_gate(gate),
            VqcState::Mixed(s) => s.apply_gate(gate),
        }
    }

    fn expval_z(&self, qubit: usize) -> Result<f64> {
        match self {
            VqcState::Pure(s) => s.expval_z(qubit),
            VqcState::Mixed(s) => s.expval_z(qubit),
        }
    }

    fn probabilities(&self) -> Vec<f64> {
        match self {
            VqcState::Pure(s) => s.probabilities(),
            VqcState::Mixed(s) => s.probabilities(),
        }
    }
}

/// `U_A(x, theta) U_FM(x) |0...0>`, with noise channels interleaved after every
/// gate when `noise` is given.
pub fn run_vqc(
    features: &[f64],
    weights: &AnsatzWeights,
    spec: &CircuitSpec,
    noise: Option<&NoiseSpec>,
) -> Result<VqcState> {
    let circuit = build_vqc(features, weights, spec)?;
    match noise {
        None => Ok(VqcState::Pure(circuit.run_pure()?)),
        Some(noise) => Ok(VqcState::Mixed(noisy_transform(&circuit, noise)?.run()?)),
    }
}

/// Observable differentiated by [`parameter_shift_grad`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    Z(usize),
    ZSum,
}

impl Observable {
    pub fn evaluate(&self, z: &[f64]) -> f64 {
        match *self {
            Observable::Z(q) => z[q],
            Observable::ZSum => z.iter().sum(),
        }
    }
}

/// `<Z_i>` at `weights` and their parameter-shift Jacobian.
///
/// `jacobian[p][i]` is `d<Z_i>/d theta_p` with `p` the row-major parameter index.
#[derive(Debug, Clone)]
pub struct ZJacobian {
    pub values: Vec<f64>,
    pub jacobian: Vec<Vec<f64>>,
}

pub fn z_jacobian(features: &[f64], weights: &AnsatzWeights, spec: &CircuitSpec) -> Result<ZJacobian> {
    spec.validate()?;
    weights.check_shape(spec)?;
    let encoded = build_feature_map(features, spec.feature_layers)?.run_pure()?;
    let eval = |w: &AnsatzWeights| -> Result<Vec<f64>> {
        let mut state = encoded.clone();
        state.apply_gates(build_ansatz(features, w)?.gates())?;
        Ok(state.expval_z_all())
    };
    let values = eval(weights)?;
    let mut jacobian = Vec::with_capacity(weights.len());
    let mut shifted = weights.clone();
    for layer in 0..weights.n_rows() {
        for q in 0..weights.n_cols() {
            let theta = weights.get(layer, q);
            shifted.set(layer, q, theta + FRAC_PI_2);
            let plus = eval(&shifted)?;
            shifted.set(layer, q, theta - FRAC_PI_2);
            let minus = eval(&shifted)?;
            shifted.set(layer, q, theta);
            jacobian.push(plus.iter().zip(&minus).map(|(p, m)| (p - m) / 2.0).collect());
        }
    }
    Ok(ZJacobian { values, jacobian })
}

/// Gradient of `<observable>` with respect to every ansatz angle, via the
/// two-point `+-pi/2` shift rule. Only defined on the noiseless backend.
pub fn parameter_shift_grad(
    features: &[f64],
    weights: &AnsatzWeights,
    spec: &CircuitSpec,
    observable: Observable,
    noise: Option<&NoiseSpec>,
) -> Result<AnsatzWeights> {
    if noise.is_some() {
        return Err(Error::GradientWithNoise);
    }
    let jac = z_jacobian(features, weights, spec)?;
    let flat: Vec<f64> = jac.jacobian.iter().map(|row| observable.evaluate(row)).collect();
    Ok(weights.from_flat(&flat))
}
