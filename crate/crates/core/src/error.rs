use thiserror::Error;

/// Errors raised by the simulator, the decision procedures and the
/// classification pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit index {index} out of range for {n_qubits}-qubit register")]
    QubitOutOfRange { index: usize, n_qubits: usize },

    #[error("CNOT control and target must differ (both are qubit {0})")]
    DuplicateQubit(usize),

    #[error("register size mismatch: expected {expected} qubits, found {found}")]
    QubitCountMismatch { expected: usize, found: usize },

    #[error("probability {value} for {name} is outside [0, 1]")]
    InvalidProbability { name: &'static str, value: f64 },

    #[error("diagonal entry {index} is negative ({value:e}) beyond tolerance")]
    NegativeProbability { index: usize, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("weights shape mismatch: expected {expected_rows}x{expected_cols}, found {rows}x{cols}")]
    ShapeMismatch {
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },

    #[error("noise channels require the mixed-state backend")]
    NoiseOnPureState,

    #[error("parameter-shift gradients are only available on the noiseless backend")]
    GradientWithNoise,

    #[error("degenerate acceptance policy: both class probabilities are zero")]
    DegeneratePolicy,

    #[error("reject fallback requested with no recorded attempts")]
    NoAttempts,

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("row {row}: {message}")]
    Row { row: usize, message: String },

    #[error("training diverged at epoch {epoch}: non-finite cost")]
    Diverged {
        epoch: usize,
        last_good: Box<crate::circuits::AnsatzWeights>,
    },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Whether the error stems from a numerical breakdown rather than bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Diverged { .. } | Error::Numeric(_) | Error::NegativeProbability { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
