use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::DetRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam with bias-corrected moments.
#[derive(Debug, Clone)]
pub struct Adam {
    cfg: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(cfg: AdamConfig, dim: usize) -> Self {
        Self {
            cfg,
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.cfg;
        let bc1 = 1.0 - beta1.powi(self.t);
        let bc2 = 1.0 - beta2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * grad[i];
            self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

/// SPSA gains `a_k = a / (k + 1 + A)^alpha`, `c_k = c / (k + 1)^gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpsaConfig {
    pub a: f64,
    pub c: f64,
    pub stability: f64,
    pub alpha: f64,
    pub gamma: f64,
}

impl Default for SpsaConfig {
    fn default() -> Self {
        Self {
            a: 0.2,
            c: 0.2,
            stability: 10.0,
            alpha: 0.602,
            gamma: 0.101,
        }
    }
}

/// Simultaneous-perturbation stochastic approximation.
#[derive(Debug, Clone)]
pub struct Spsa {
    cfg: SpsaConfig,
    k: u64,
}

impl Spsa {
    pub fn new(cfg: SpsaConfig) -> Self {
        Self { cfg, k: 0 }
    }

    pub fn iteration(&self) -> u64 {
        self.k
    }

    pub fn gain(&self) -> f64 {
        self.cfg.a / (self.k as f64 + 1.0 + self.cfg.stability).powf(self.cfg.alpha)
    }

    pub fn perturbation_size(&self) -> f64 {
        self.cfg.c / (self.k as f64 + 1.0).powf(self.cfg.gamma)
    }

    /// Rademacher direction for this iteration.
    pub fn direction(&self, dim: usize, rng: &mut DetRng) -> Vec<f64> {
        (0..dim).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
    }

    /// Applies one update from the two perturbed losses `y_plus = f(x + c_k d)`
    /// and `y_minus = f(x - c_k d)`.
    pub fn step(&mut self, params: &mut [f64], direction: &[f64], y_plus: f64, y_minus: f64) {
        let (ak, ck) = (self.gain(), self.perturbation_size());
        let diff = (y_plus - y_minus) / (2.0 * ck);
        for (p, d) in params.iter_mut().zip(direction) {
            // d is +-1, so 1/d == d
            *p -= ak * diff * d;
        }
        self.k += 1;
    }
}
