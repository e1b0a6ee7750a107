//! Seeded ARMA process generator.
//!
//! The random source is SplitMix64: the state advances by the constant
//! `0x9E3779B97F4A7C15` and each output is the state passed through the
//! finalizer
//!
//! ```text
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! z =  z ^ (z >> 31)
//! ```
//!
//! Uniforms take the top 53 bits: `u = (x >> 11) * 2^-53`, in `[0, 1)`.
//! Gaussians come from Box-Muller on consecutive pairs `(u1, u2)` with
//! `r = sqrt(-2 ln(1 - u1))`, yielding `r cos(2 pi u2)` then `r sin(2 pi u2)`.
//! The stream is fully specified so ports in other languages reproduce the
//! same fixtures.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polynomial::is_stationary;
use crate::series::TimeSeries;

/// SplitMix64 generator.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Standard normal draws via Box-Muller.
#[derive(Debug, Clone)]
pub struct GaussianStream {
    rng: SplitMix64,
    spare: Option<f64>,
}

impl GaussianStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: SplitMix64::new(seed),
            spare: None,
        }
    }

    pub fn next_standard(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.rng.next_f64();
        let u2 = self.rng.next_f64();
        let r = (-2.0 * (1.0 - u1).ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}

/// ARMA simulation settings. MA coefficients use the plus-sign convention
/// `y_t = mean + ... + u_t + ma_1 u_{t-1} + ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    /// Process mean.
    pub constant: f64,
    pub sigma: f64,
    pub n: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl SimSpec {
    /// Spec with the default burn-in of `10 * (p + q + 1)`.
    pub fn new(ar: Vec<f64>, ma: Vec<f64>, constant: f64, sigma: f64, n: usize, seed: u64) -> Self {
        let burn_in = 10 * (ar.len() + ma.len() + 1);
        Self {
            ar,
            ma,
            constant,
            sigma,
            n,
            burn_in,
            seed,
        }
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidSimulation("n must be at least 1".into()));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidSimulation(format!("sigma {} must be finite and >= 0", self.sigma)));
        }
        let all = self.ar.iter().chain(&self.ma).chain(std::iter::once(&self.constant));
        if all.clone().any(|c| !c.is_finite()) {
            return Err(Error::InvalidSimulation("coefficients must be finite".into()));
        }
        if !is_stationary(&self.ar) {
            return Err(Error::InvalidSimulation(format!(
                "AR coefficients {:?} are explosive or on the unit circle",
                self.ar
            )));
        }
        Ok(())
    }
}

/// Generates an ARMA series. Pre-sample values sit at the mean with zero
/// innovations; the first `burn_in` generated values are discarded.
pub fn simulate_arma(spec: &SimSpec) -> Result<TimeSeries> {
    spec.validate()?;
    let total = spec.n + spec.burn_in;
    let p = spec.ar.len();
    let q = spec.ma.len();
    let mut noise = GaussianStream::new(spec.seed);
    let mut dev = vec![0.0; total];
    let mut shocks = vec![0.0; total];
    for t in 0..total {
        let u = spec.sigma * noise.next_standard();
        let mut value = u;
        for i in 1..=p.min(t) {
            value += spec.ar[i - 1] * dev[t - i];
        }
        for j in 1..=q.min(t) {
            value += spec.ma[j - 1] * shocks[t - j];
        }
        dev[t] = value;
        shocks[t] = u;
    }
    let values = dev[spec.burn_in..].iter().map(|d| spec.constant + d).collect();
    TimeSeries::from_values(values)
}

/// I.i.d. Gaussian(0, sigma^2) draws.
pub fn white_noise(n: usize, sigma: f64, seed: u64) -> Result<TimeSeries> {
    simulate_arma(&SimSpec::new(vec![], vec![], 0.0, sigma, n, seed).with_burn_in(0))
}
