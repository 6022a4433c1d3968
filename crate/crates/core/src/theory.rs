//! Closed-form success probabilities and shot counts, plus Monte Carlo
//! estimators that check them against the simulator.
//!
//! Register size is `n = 2k + 1`. Second-order noise terms are not
//! modelled; comparisons at small `eps` use a band of `max(3 sigma, 10 eps^2)`.

use num_bigint::BigUint;
use num_traits::One;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use libm::erfc;

use crate::decision::{big_ratio, binomial, classify_m3, projector_trace, ThresholdPolicy, Verdict};
use crate::error::{Error, Result};
use crate::noise::global_depolarize;
use crate::qsim::{MixedState, QuantumState, ShotSampler};
use crate::rng::DetRng;

fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::InvalidProbability { name, value });
    }
    Ok(())
}

/// `k` for an odd register `n = 2k + 1`.
pub fn half_size(n_qubits: usize) -> Result<usize> {
    if n_qubits.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "register size {n_qubits} is not odd"
        )));
    }
    Ok((n_qubits - 1) / 2)
}

fn check_threshold(n_qubits: usize, l: usize) -> Result<usize> {
    let k = half_size(n_qubits)?;
    if l <= k || l > n_qubits {
        return Err(Error::InvalidParameter(format!(
            "threshold {l} outside [{}, {n_qubits}]",
            k + 1
        )));
    }
    Ok(k)
}

/// One-shot success probability `(1 + delta) / 2`.
pub fn p_succ_oneshot(delta: f64) -> Result<f64> {
    check_unit("delta", delta)?;
    Ok((1.0 + delta) / 2.0)
}

/// First-qubit success probability under `eps`-depolarizing noise:
/// `(1 + delta)/2 - delta eps / 2`.
pub fn p_succ_noisy_first_qubit(delta: f64, eps: f64) -> Result<f64> {
    check_unit("eps", eps)?;
    Ok(p_succ_oneshot(delta)? - delta * eps / 2.0)
}

/// Exact first-order noise coefficient `C(n, k)(k + 1) / 2^n` of the
/// average-case state.
pub fn avg_noise_coefficient(n_qubits: usize) -> Result<f64> {
    let k = half_size(n_qubits)?;
    let num = binomial(n_qubits as u64, k as u64) * BigUint::from(k + 1);
    Ok(big_ratio(&num, &(BigUint::one() << n_qubits)))
}

/// Average-case success probability to first order in `eps`.
pub fn p_succ_avg_noisy(n_qubits: usize, delta: f64, eps: f64) -> Result<f64> {
    check_unit("eps", eps)?;
    Ok(p_succ_oneshot(delta)? - avg_noise_coefficient(n_qubits)? * delta * eps)
}

/// Stirling form `sqrt(k / pi)` of [`avg_noise_coefficient`].
pub fn stirling_coefficient(k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidParameter("Stirling form needs k >= 1".into()));
    }
    Ok((k as f64 / std::f64::consts::PI).sqrt())
}

/// `(exact - stirling) / exact` at `n = 2k + 1`.
pub fn stirling_relative_error(k: usize) -> Result<f64> {
    let exact = avg_noise_coefficient(2 * k + 1)?;
    Ok((exact - stirling_coefficient(k)?) / exact)
}

/// Success probability of lifted training, `(1 + delta)/2` up to `O(eps^2)`.
pub fn p_lifted(delta: f64, eps: f64) -> Result<f64> {
    check_unit("eps", eps)?;
    p_succ_oneshot(delta)
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Majority-vote success over `shots` repetitions, normal approximation:
/// `Phi(sqrt(T) (p - 1/2) / sqrt(p (1 - p)))`. Exact 0 / 1 at the endpoints.
pub fn p_multishot(p: f64, shots: u64) -> Result<f64> {
    check_unit("p", p)?;
    if shots == 0 {
        return Err(Error::InvalidParameter("shot count must be at least 1".into()));
    }
    if p == 0.0 || p == 1.0 {
        return Ok(p);
    }
    let z = (shots as f64).sqrt() * (p - 0.5) / (p * (1.0 - p)).sqrt();
    Ok(normal_cdf(z))
}

/// Zeroth-order acceptance probabilities `(p0, p1)` of the unambiguous rule
/// with threshold `l` on the average-case state.
pub fn unambiguous_probs(n_qubits: usize, delta: f64, l: usize) -> Result<(f64, f64)> {
    check_threshold(n_qubits, l)?;
    check_unit("delta", delta)?;
    let frac = big_ratio(&projector_trace(n_qubits, l)?, &(BigUint::one() << (n_qubits - 1)));
    Ok(((1.0 + delta) / 2.0 * frac, (1.0 - delta) / 2.0 * frac))
}

/// `p0 / (p0 + p1)`.
pub fn p_unambiguous(p0: f64, p1: f64) -> Result<f64> {
    if p0 < 0.0 || p1 < 0.0 {
        return Err(Error::InvalidParameter("negative acceptance probability".into()));
    }
    if p0 + p1 == 0.0 {
        return Err(Error::DegeneratePolicy);
    }
    Ok(p0 / (p0 + p1))
}

/// Expected shots until acceptance, `2^{n-1} / tr(Pi_l)`.
pub fn expected_shots(n_qubits: usize, l: usize) -> Result<f64> {
    check_threshold(n_qubits, l)?;
    Ok(big_ratio(&(BigUint::one() << (n_qubits - 1)), &projector_trace(n_qubits, l)?))
}

/// Diagonal of the average-case state: mass `(1 + delta)/2` spread evenly
/// over weights `<= k`, the rest evenly over weights `> k`.
pub fn average_case_diagonal(n_qubits: usize, delta: f64) -> Result<Vec<f64>> {
    let k = half_size(n_qubits)?;
    check_unit("delta", delta)?;
    let half = (1usize << (n_qubits - 1)) as f64;
    Ok((0..1usize << n_qubits)
        .map(|b| {
            if b.count_ones() as usize <= k {
                (1.0 + delta) / 2.0 / half
            } else {
                (1.0 - delta) / 2.0 / half
            }
        })
        .collect())
}

pub fn average_case_state(n_qubits: usize, delta: f64) -> Result<MixedState> {
    MixedState::from_diagonal(n_qubits, &average_case_diagonal(n_qubits, delta)?)
}

/// `(1 + delta)/2 |0...0><0...0| + (1 - delta)/2 |1...1><1...1|`.
pub fn lifted_state(n_qubits: usize, delta: f64) -> Result<MixedState> {
    check_unit("delta", delta)?;
    let dim = 1usize << n_qubits;
    let mut diag = vec![0.0; dim];
    diag[0] = (1.0 + delta) / 2.0;
    diag[dim - 1] += (1.0 - delta) / 2.0;
    MixedState::from_diagonal(n_qubits, &diag)
}

/// `tr(rho Pi_r)`: probability of a weight `<= n - r` outcome.
pub fn success_probability(state: &MixedState, r: usize) -> f64 {
    let n = state.n_qubits();
    state.diagonal_weight(|b| b.count_ones() as usize + r <= n)
}

/// Monte Carlo estimate with standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub p_unambiguous: f64,
    pub p_unambiguous_se: f64,
    pub mean_shots: f64,
    pub mean_shots_se: f64,
    pub trials: u64,
}

const MC_CHUNK: u64 = 4096;

/// Runs the unambiguous loop (unbounded retries) on the depolarized
/// average-case state; class 0 is the correct answer.
pub fn mc_unambiguous(
    n_qubits: usize,
    delta: f64,
    l: usize,
    eps: f64,
    trials: u64,
    rng: &DetRng,
) -> Result<McEstimate> {
    check_threshold(n_qubits, l)?;
    if trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    let state = global_depolarize(&average_case_state(n_qubits, delta)?, eps)?;
    let policy = ThresholdPolicy {
        acceptance: l,
        max_attempts: u32::MAX,
    };
    let accept_mass = state.diagonal_weight(|b| policy.verdict(b.count_ones() as usize, n_qubits) != Verdict::Reject);
    if accept_mass <= 0.0 {
        return Err(Error::DegeneratePolicy);
    }
    let sampler = ShotSampler::from_state(&state)?;
    let chunks = trials.div_ceil(MC_CHUNK);
    let tallies = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<(u64, f64, f64)> {
            let mut local = sampler.clone();
            let mut rng = rng.fork(c);
            let count = MC_CHUNK.min(trials - c * MC_CHUNK);
            let (mut correct, mut sum, mut sum_sq) = (0u64, 0.0, 0.0);
            for _ in 0..count {
                let out = classify_m3(&mut local, &policy, &mut rng)?;
                correct += u64::from(out.verdict == Verdict::Class0);
                let s = f64::from(out.shots_used);
                sum += s;
                sum_sq += s * s;
            }
            Ok((correct, sum, sum_sq))
        })
        .collect::<Result<Vec<_>>>()?;
    let (correct, sum, sum_sq) = tallies
        .into_iter()
        .fold((0u64, 0.0, 0.0), |a, t| (a.0 + t.0, a.1 + t.1, a.2 + t.2));
    let n = trials as f64;
    let p = correct as f64 / n;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
    Ok(McEstimate {
        p_unambiguous: p,
        p_unambiguous_se: (p * (1.0 - p) / n).sqrt(),
        mean_shots: mean,
        mean_shots_se: (var / n).sqrt(),
        trials,
    })
}

/// Fraction of trials in which a strict majority of `shots` Bernoulli(`p`)
/// outcomes is correct, with its binomial standard error.
pub fn mc_majority_vote(p: f64, shots: u64, trials: u64, rng: &DetRng) -> Result<(f64, f64)> {
    check_unit("p", p)?;
    if trials == 0 || shots == 0 {
        return Err(Error::InvalidParameter("need at least one trial and one shot".into()));
    }
    let chunks = trials.div_ceil(MC_CHUNK);
    let wins: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng.fork(c);
            let count = MC_CHUNK.min(trials - c * MC_CHUNK);
            (0..count)
                .filter(|_| {
                    let right = (0..shots).filter(|_| rng.random::<f64>() < p).count() as u64;
                    2 * right > shots
                })
                .count() as u64
        })
        .sum();
    let est = wins as f64 / trials as f64;
    Ok((est, (est * (1.0 - est) / trials as f64).sqrt()))
}

/// Parameters of one row of the theory sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoryPoint {
    pub n_qubits: usize,
    pub l: usize,
    pub delta: f64,
    pub eps: f64,
    pub shots: u64,
}

/// Every closed form evaluated at a [`TheoryPoint`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoryRow {
    pub n_qubits: usize,
    pub k: usize,
    pub l: usize,
    pub delta: f64,
    pub eps: f64,
    pub shots: u64,
    pub p_succ: f64,
    pub p_succ_noisy_first_qubit: f64,
    pub p_avg_noisy: f64,
    pub p_multishot: f64,
    pub p_unambiguous: f64,
    pub expected_shots: f64,
    pub avg_coefficient: f64,
    pub stirling_coefficient: f64,
    pub stirling_relative_error: f64,
}

impl TheoryPoint {
    pub fn evaluate(&self) -> Result<TheoryRow> {
        let k = check_threshold(self.n_qubits, self.l)?;
        let p_succ = p_succ_oneshot(self.delta)?;
        let (p0, p1) = unambiguous_probs(self.n_qubits, self.delta, self.l)?;
        // Stirling's form is undefined at k = 0; report the exact coefficient there.
        let avg = avg_noise_coefficient(self.n_qubits)?;
        let (stirling, rel) = if k == 0 {
            (avg, 0.0)
        } else {
            (stirling_coefficient(k)?, stirling_relative_error(k)?)
        };
        Ok(TheoryRow {
            n_qubits: self.n_qubits,
            k,
            l: self.l,
            delta: self.delta,
            eps: self.eps,
            shots: self.shots,
            p_succ,
            p_succ_noisy_first_qubit: p_succ_noisy_first_qubit(self.delta, self.eps)?,
            p_avg_noisy: p_succ_avg_noisy(self.n_qubits, self.delta, self.eps)?,
            p_multishot: p_multishot(p_succ, self.shots)?,
            p_unambiguous: p_unambiguous(p0, p1)?,
            expected_shots: expected_shots(self.n_qubits, self.l)?,
            avg_coefficient: avg,
            stirling_coefficient: stirling,
            stirling_relative_error: rel,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(p_succ_oneshot(0.0).unwrap(), 0.5);
        assert_eq!(p_succ_oneshot(1.0).unwrap(), 1.0);
        assert_eq!(p_succ_oneshot(0.5).unwrap(), 0.75);
        assert!(p_succ_oneshot(1.5).is_err());
        assert!(close(p_succ_noisy_first_qubit(0.5, 0.1).unwrap(), 0.725, 1e-15));
        assert_eq!(p_succ_noisy_first_qubit(0.3, 0.0).unwrap(), p_succ_oneshot(0.3).unwrap());
        assert_eq!(p_lifted(0.5, 0.01).unwrap(), 0.75);
    }

    #[test]
    fn average_case_expansion_values() {
        assert!(close(avg_noise_coefficient(3).unwrap(), 0.75, 1e-15));
        assert!(close(p_succ_avg_noisy(3, 0.4, 0.01).unwrap(), 0.697, 1e-12));
        assert_eq!(p_succ_avg_noisy(5, 0.4, 0.0).unwrap(), 0.7);
        assert!(avg_noise_coefficient(4).is_err());
    }

    #[test]
    fn stirling_values() {
        assert!(close(stirling_coefficient(1).unwrap(), 0.5642, 1e-4));
        assert!(close(stirling_coefficient(50).unwrap(), 3.9894, 1e-4));
        // exact coefficient at k = 50: C(101,50)*51/2^101
        assert!(close(avg_noise_coefficient(101).unwrap(), 4.019256488, 1e-8));
        assert!(close(stirling_relative_error(1).unwrap(), 0.2477, 1e-4));
        assert!(stirling_coefficient(0).is_err());
    }

    #[test]
    fn multishot_values() {
        assert_eq!(p_multishot(0.5, 77).unwrap(), 0.5);
        let tail = 1.0 - p_multishot(0.75, 100).unwrap();
        assert!(close(tail, 3.882018e-9, 1e-14), "{tail:e}");
        assert_eq!(p_multishot(0.0, 3).unwrap(), 0.0);
        assert_eq!(p_multishot(1.0, 3).unwrap(), 1.0);
        assert!(close(normal_cdf(0.0), 0.5, 1e-16));
        let phi1 = normal_cdf(1.0);
        assert!(close(phi1, 0.841344746068543, 1e-13), "{phi1:.17}");
    }

    #[test]
    fn unambiguous_values() {
        let (p0, p1) = unambiguous_probs(3, 0.5, 2).unwrap();
        assert!(close(p0, 0.75, 1e-15) && close(p1, 0.25, 1e-15));
        let (p0, p1) = unambiguous_probs(3, 0.5, 3).unwrap();
        assert!(close(p0, 0.1875, 1e-15) && close(p1, 0.0625, 1e-15));
        assert!(close(p_unambiguous(p0, p1).unwrap(), 0.75, 1e-15));
        let (p0, p1) = unambiguous_probs(7, 0.0, 6).unwrap();
        assert_eq!(p0, p1);
        assert_eq!(p_unambiguous(0.3, 0.0).unwrap(), 1.0);
        assert!(close(p_unambiguous(0.3, 0.1).unwrap(), p_unambiguous(3.0, 1.0).unwrap(), 1e-15));
        assert!(matches!(p_unambiguous(0.0, 0.0), Err(Error::DegeneratePolicy)));
        assert!(unambiguous_probs(5, 0.5, 2).is_err());
    }

    #[test]
    fn expected_shot_values() {
        assert_eq!(expected_shots(3, 2).unwrap(), 1.0);
        assert_eq!(expected_shots(3, 3).unwrap(), 4.0);
        assert!(close(expected_shots(5, 4).unwrap(), 16.0 / 6.0, 1e-15));
        assert!(close(expected_shots(101, 52).unwrap(), 1.1871097, 1e-6));
    }

    #[test]
    fn average_case_state_shape() {
        for n in [1usize, 3, 5, 7] {
            let d = average_case_diagonal(n, 0.3).unwrap();
            assert!(close(d.iter().sum::<f64>(), 1.0, 1e-14));
            let k = (n - 1) / 2;
            let low = (0..1usize << n).filter(|b| b.count_ones() as usize <= k).count();
            assert_eq!(low, 1 << (n - 1));
        }
        let rho = average_case_state(3, 0.5).unwrap();
        assert!(close(success_probability(&rho, 2), 0.75, 1e-14));
    }

    #[test]
    fn lifted_state_noiseless_is_exact() {
        let rho = lifted_state(3, 0.5).unwrap();
        assert!(close(success_probability(&rho, 2), p_lifted(0.5, 0.0).unwrap(), 1e-12));
    }

    #[test]
    fn deterministic_state_needs_one_shot() {
        let est = mc_unambiguous(5, 1.0, 3, 0.0, 2000, &DetRng::seed_from_u64(3)).unwrap();
        assert_eq!(est.p_unambiguous, 1.0);
        assert_eq!(est.mean_shots, 1.0);
    }

    #[test]
    fn theory_row_consistency() {
        let row = TheoryPoint { n_qubits: 5, l: 5, delta: 0.5, eps: 0.01, shots: 1024 }.evaluate().unwrap();
        assert_eq!(row.k, 2);
        assert!(close(row.p_unambiguous, 0.75, 1e-12));
        assert_eq!(row.expected_shots, 16.0);
        let first = TheoryPoint { n_qubits: 1, l: 1, delta: 0.2, eps: 0.0, shots: 1 }.evaluate().unwrap();
        assert_eq!(first.expected_shots, 1.0);
    }
}
