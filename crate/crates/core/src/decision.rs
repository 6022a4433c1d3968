//! Postprocessing of measured bitstrings into class labels.
//!
//! * M1 reads qubit 0 only, T shots.
//! * M2 votes per shot by Hamming weight (majority of zeros => class 0), T shots.
//! * M3 is the unambiguous loop: one shot at a time, accepted only when the
//!   weight falls in a class region of [`ThresholdPolicy`], at most `T_c` tries.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qsim::ShotSampler;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Class0,
    Class1,
}

impl Label {
    pub fn from_bit(bit: u8) -> Result<Self> {
        match bit {
            0 => Ok(Label::Class0),
            1 => Ok(Label::Class1),
            other => Err(Error::InvalidParameter(format!("label {other} is not binary"))),
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Label::Class0 => 0,
            Label::Class1 => 1,
        }
    }

    /// Class 1 iff `p_class1 >= 0.5`; ties go to class 1.
    pub fn from_probability(p_class1: f64) -> Self {
        if p_class1 >= 0.5 {
            Label::Class1
        } else {
            Label::Class0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Class0,
    Class1,
    Reject,
}

impl From<Label> for Verdict {
    fn from(l: Label) -> Self {
        match l {
            Label::Class0 => Verdict::Class0,
            Label::Class1 => Verdict::Class1,
        }
    }
}

impl Verdict {
    pub fn label(self) -> Option<Label> {
        match self {
            Verdict::Class0 => Some(Label::Class0),
            Verdict::Class1 => Some(Label::Class1),
            Verdict::Reject => None,
        }
    }
}

/// Result of a many-shot classification (M1, M2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManyShotPrediction {
    pub label: Label,
    /// Fraction of shots voting class 1.
    pub p_class1: f64,
    pub shots: u64,
}

/// Result of one unambiguous (M3) classification.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionOutcome {
    pub verdict: Verdict,
    pub shots_used: u32,
    pub accepted: bool,
    /// Hamming weight of every shot drawn, in order.
    pub attempt_weights: Vec<usize>,
}

/// Acceptance threshold `l` and retry cap `T_c` for M3.
///
/// Class 0 accepts weights `<= n - l`, class 1 accepts weights `>= l`, and
/// everything in between is rejected. `l = n` accepts only all-identical
/// bitstrings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdPolicy {
    pub acceptance: usize,
    pub max_attempts: u32,
}

impl ThresholdPolicy {
    /// The all-identical rule (`l = n`) with the given cap.
    pub fn unanimous(n_qubits: usize, max_attempts: u32) -> Self {
        Self {
            acceptance: n_qubits,
            max_attempts,
        }
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        if self.acceptance > n_qubits || 2 * self.acceptance <= n_qubits {
            return Err(Error::InvalidParameter(format!(
                "acceptance threshold {} invalid for {n_qubits} qubits (need n/2 < l <= n)",
                self.acceptance
            )));
        }
        if self.max_attempts == 0 {
            return Err(Error::InvalidParameter("max attempts must be at least 1".into()));
        }
        Ok(())
    }

    pub fn verdict(&self, weight: usize, n_qubits: usize) -> Verdict {
        if weight + self.acceptance <= n_qubits {
            Verdict::Class0
        } else if weight >= self.acceptance {
            Verdict::Class1
        } else {
            Verdict::Reject
        }
    }
}

/// What to report after `T_c` consecutive rejections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectFallback {
    /// M2 majority vote over the rejected shots.
    #[default]
    MajorityOfAttempts,
    FixedClass0,
}

/// Per-shot M2 vote: class 0 iff strictly fewer than half the bits are set.
pub fn m2_vote(weight: usize, n_qubits: usize) -> Label {
    if 2 * weight < n_qubits {
        Label::Class0
    } else {
        Label::Class1
    }
}

/// M1 class-1 probability from expectation values: `(1 - <Z_0>) / 2`.
pub fn m1_probability(z: &[f64]) -> f64 {
    (1.0 - z[0]) / 2.0
}

/// M2 class-1 probability from expectation values: `(1 - mean_i <Z_i>) / 2`.
pub fn m2_probability(z: &[f64]) -> f64 {
    let mean = z.iter().sum::<f64>() / z.len() as f64;
    (1.0 - mean) / 2.0
}

fn check_shots(shots: u64) -> Result<()> {
    if shots == 0 {
        return Err(Error::InvalidParameter("shot count must be at least 1".into()));
    }
    Ok(())
}

/// M1: `shots` draws, vote by the value of qubit 0.
pub fn classify_m1<R: RngCore + ?Sized>(
    sampler: &mut ShotSampler,
    shots: u64,
    rng: &mut R,
) -> Result<ManyShotPrediction> {
    check_shots(shots)?;
    let ones = (0..shots).filter(|_| sampler.draw(rng).bit(0)).count();
    let p_class1 = ones as f64 / shots as f64;
    Ok(ManyShotPrediction {
        label: Label::from_probability(p_class1),
        p_class1,
        shots,
    })
}

/// M2: `shots` draws, each voting by Hamming weight.
pub fn classify_m2<R: RngCore + ?Sized>(
    sampler: &mut ShotSampler,
    shots: u64,
    rng: &mut R,
) -> Result<ManyShotPrediction> {
    check_shots(shots)?;
    let n = sampler.n_qubits();
    let ones = (0..shots)
        .filter(|_| m2_vote(sampler.draw(rng).weight(), n) == Label::Class1)
        .count();
    let p_class1 = ones as f64 / shots as f64;
    Ok(ManyShotPrediction {
        label: Label::from_probability(p_class1),
        p_class1,
        shots,
    })
}

/// M3: draw one shot at a time until a class region is hit or the cap is reached.
pub fn classify_m3<R: RngCore + ?Sized>(
    sampler: &mut ShotSampler,
    policy: &ThresholdPolicy,
    rng: &mut R,
) -> Result<DecisionOutcome> {
    let n = sampler.n_qubits();
    policy.validate(n)?;
    let mut attempt_weights = Vec::new();
    for t in 1..=policy.max_attempts {
        let weight = sampler.draw(rng).weight();
        attempt_weights.push(weight);
        let verdict = policy.verdict(weight, n);
        if verdict != Verdict::Reject {
            return Ok(DecisionOutcome {
                verdict,
                shots_used: t,
                accepted: true,
                attempt_weights,
            });
        }
    }
    Ok(DecisionOutcome {
        verdict: Verdict::Reject,
        shots_used: policy.max_attempts,
        accepted: false,
        attempt_weights,
    })
}

/// Expectation-value form of the M3 acceptance test on one shot's `+-1`
/// outcomes: accept iff `|sum z_i| >= 2l - n`, sign decides the class.
pub fn classify_spins(spins: &[i8], policy: &ThresholdPolicy) -> Verdict {
    let n = spins.len() as i64;
    let sum: i64 = spins.iter().map(|&s| i64::from(s)).sum();
    let needed = 2 * policy.acceptance as i64 - n;
    if sum.abs() < needed {
        Verdict::Reject
    } else if sum > 0 {
        Verdict::Class0
    } else {
        Verdict::Class1
    }
}

/// Final label for a rejected outcome.
pub fn reject_fallback(outcome: &DecisionOutcome, fallback: RejectFallback, n_qubits: usize) -> Result<Label> {
    if outcome.attempt_weights.is_empty() {
        return Err(Error::NoAttempts);
    }
    Ok(match fallback {
        RejectFallback::FixedClass0 => Label::Class0,
        RejectFallback::MajorityOfAttempts => {
            let ones = outcome
                .attempt_weights
                .iter()
                .filter(|&&w| m2_vote(w, n_qubits) == Label::Class1)
                .count();
            Label::from_probability(ones as f64 / outcome.attempt_weights.len() as f64)
        }
    })
}

/// Accepted label, or the fallback's answer when rejected.
pub fn resolve(outcome: &DecisionOutcome, fallback: RejectFallback, n_qubits: usize) -> Result<Label> {
    match outcome.verdict.label() {
        Some(l) => Ok(l),
        None => reject_fallback(outcome, fallback, n_qubits),
    }
}

/// `C(n, k)` exactly.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Diagonal projector onto bitstrings of weight `<= n - r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HammingProjector {
    pub n_qubits: usize,
    pub r: usize,
}

impl HammingProjector {
    pub fn new(n_qubits: usize, r: usize) -> Result<Self> {
        if r == 0 || r > n_qubits {
            return Err(Error::InvalidParameter(format!(
                "projector threshold {r} outside [1, {n_qubits}]"
            )));
        }
        Ok(Self { n_qubits, r })
    }

    pub fn contains(&self, index: usize) -> bool {
        index.count_ones() as usize + self.r <= self.n_qubits
    }

    pub fn trace(&self) -> BigUint {
        (0..=(self.n_qubits - self.r) as u64)
            .map(|j| binomial(self.n_qubits as u64, j))
            .sum()
    }
}

/// `tr(Pi_r) = sum_{j=0}^{n-r} C(n, j)`.
pub fn projector_trace(n_qubits: usize, r: usize) -> Result<BigUint> {
    Ok(HammingProjector::new(n_qubits, r)?.trace())
}

/// `num / den` for exact integers, evaluated in floating point at the end.
pub(crate) fn big_ratio(num: &BigUint, den: &BigUint) -> f64 {
    // shift both to keep the mantissas in range
    let shift = num.bits().max(den.bits()).saturating_sub(1000);
    let (n, d) = (num >> shift, den >> shift);
    n.to_f64().unwrap_or(f64::INFINITY) / d.to_f64().unwrap_or(f64::INFINITY)
}
