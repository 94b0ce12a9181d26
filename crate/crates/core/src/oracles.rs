//! Independent reference computations used to verify the samplers and the
//! gradient estimator.
//!
//! Nothing here feeds a sampler's own gradient path back into a reference
//! value: stationary checks compare against closed-form Gaussians, landscape
//! checks use direct quadrature and finite differences use forward
//! simulation only.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, ContinuousCDF, DiscreteCDF, Normal};

use crate::error::{Error, Result};
use crate::network::{NetworkBuilder, NeuronSpec, SpikingNetwork, Synapse, WeightMapping};
use crate::rng::{bernoulli, seeded, splitmix64, stream_rng, Rng, Stream};
use crate::sampler::{Mode, ParameterState, Sampler, SamplerConfig, TemperatureSchedule};

/// 1-D Gaussian log-posterior `−(θ − μ)²/(2σ²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianTarget {
    pub mu: f64,
    pub sigma: f64,
}

impl GaussianTarget {
    #[inline]
    pub fn log_gradient(&self, theta: f64) -> f64 {
        -(theta - self.mu) / (self.sigma * self.sigma)
    }

    /// Stationary variance at temperature `T`.
    pub fn tempered_variance(&self, temperature: f64) -> f64 {
        temperature * self.sigma * self.sigma
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryCheck {
    pub sampler: SamplerConfig,
    pub target: GaussianTarget,
    pub temperature: f64,
    /// Independent chains, run as the coordinates of one parameter vector.
    pub chains: usize,
    pub samples_per_chain: usize,
    /// Steps between retained samples.
    pub thin: usize,
    /// Steps discarded before the first sample.
    pub burn_in: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryReport {
    pub mean: f64,
    pub variance: f64,
    /// Sample variance of the momentum variables (0 in Langevin mode).
    pub gamma_variance: f64,
    pub ks_statistic: f64,
    pub ks_critical: f64,
    pub n_samples: usize,
    pub steps: usize,
    #[serde(skip)]
    pub samples: Vec<f64>,
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Samples the tempered Gaussian target and compares the θ-samples with
/// `Normal(μ, Tσ²)`. The KS critical value is for α = 0.01.
pub fn stationary_moments_check(check: &StationaryCheck) -> Result<StationaryReport> {
    if check.temperature <= 0.0 || check.chains == 0 || check.samples_per_chain == 0 || check.thin == 0 {
        return Err(Error::InvalidParams(
            "stationary check needs T > 0 and non-empty sampling".into(),
        ));
    }
    let d = check.chains;
    let mut sampler = Sampler::new(check.sampler, stream_rng(check.seed, Stream::Sampler))?;
    let mut state = ParameterState::new(vec![check.target.mu; d]);
    let mut grad = vec![0.0; d];
    let mut samples = Vec::with_capacity(d * check.samples_per_chain);
    let mut gamma_samples = Vec::with_capacity(d * check.samples_per_chain);
    let total = check.burn_in + check.samples_per_chain * check.thin;
    for step in 1..=total {
        for (g, th) in grad.iter_mut().zip(state.theta()) {
            *g = check.target.log_gradient(*th);
        }
        sampler.step(&mut state, &grad, check.temperature)?;
        if let Some((what, i)) = state.first_non_finite() {
            return Err(Error::NonFinite {
                what: format!("{what}[{i}]"),
                step: step as u64,
            });
        }
        if step > check.burn_in && (step - check.burn_in).is_multiple_of(check.thin) {
            samples.extend_from_slice(state.theta());
            gamma_samples.extend_from_slice(state.gamma());
        }
    }
    let (mean, variance) = mean_var(&samples);
    let gamma_variance = if check.sampler.mode == Mode::Langevin {
        0.0
    } else {
        mean_var(&gamma_samples).1
    };
    let sd = check.target.tempered_variance(check.temperature).sqrt();
    let normal =
        Normal::new(check.target.mu, sd).map_err(|e| Error::InvalidParams(format!("reference normal: {e}")))?;
    let ks_statistic = ks_statistic(&samples, |x| normal.cdf(x));
    Ok(StationaryReport {
        mean,
        variance,
        gamma_variance,
        ks_statistic,
        ks_critical: ks_critical_value(samples.len(), 0.01),
        n_samples: samples.len(),
        steps: total,
        samples,
    })
}

/// `c(α) = sqrt(−ln(α/2)/2)`, the asymptotic Kolmogorov quantile.
pub fn kolmogorov_quantile(alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt()
}

pub fn ks_critical_value(n: usize, alpha: f64) -> f64 {
    kolmogorov_quantile(alpha) / (n as f64).sqrt()
}

pub fn ks_two_sample_critical_value(n: usize, m: usize, alpha: f64) -> f64 {
    let (n, m) = (n as f64, m as f64);
    kolmogorov_quantile(alpha) * ((n + m) / (n * m)).sqrt()
}

/// One-sample statistic `sup |F_n(x) − F(x)|`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    x.iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Two-sample statistic `sup |F_n(x) − G_m(x)|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// One-sided sign-test p-value `P(X >= wins)` for `X ~ Binomial(n, 1/2)`.
pub fn sign_test_p_value(wins: u64, n: u64) -> f64 {
    if wins == 0 {
        return 1.0;
    }
    let b = Binomial::new(0.5, n).expect("valid binomial");
    1.0 - b.cdf(wins - 1)
}

/// Reward probability `p(R = 1 | θ)` tabulated on a grid of 1-D or 2-D points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteRewardLandscape {
    pub dims: usize,
    /// Flattened point coordinates, `dims` values per point.
    pub coords: Vec<f64>,
    pub reward: Vec<f64>,
}

pub const MAX_LANDSCAPE_POINTS: usize = 10_000;

impl DiscreteRewardLandscape {
    pub fn new(dims: usize, coords: Vec<f64>, reward: Vec<f64>) -> Result<Self> {
        let l = Self { dims, coords, reward };
        l.validate()?;
        Ok(l)
    }

    /// `n` equally spaced points on `[lo, hi]`.
    pub fn from_fn_1d(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let coords: Vec<f64> = (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n.max(2) - 1) as f64)
            .collect();
        let reward = coords.iter().map(|&x| f(x)).collect();
        Self::new(1, coords, reward)
    }

    /// `n × n` grid on `[lo, hi]²`.
    pub fn from_fn_2d(lo: f64, hi: f64, n: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let axis: Vec<f64> = (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n.max(2) - 1) as f64)
            .collect();
        let mut coords = Vec::with_capacity(2 * n * n);
        let mut reward = Vec::with_capacity(n * n);
        for &x in &axis {
            for &y in &axis {
                coords.extend([x, y]);
                reward.push(f(x, y));
            }
        }
        Self::new(2, coords, reward)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dims == 1 || self.dims == 2) {
            return Err(Error::InvalidParams(format!(
                "landscape must be 1-D or 2-D, got {}",
                self.dims
            )));
        }
        if self.reward.is_empty() || self.reward.len() > MAX_LANDSCAPE_POINTS {
            return Err(Error::InvalidParams(format!(
                "landscape needs 1..={MAX_LANDSCAPE_POINTS} points, got {}",
                self.reward.len()
            )));
        }
        if self.coords.len() != self.dims * self.reward.len() {
            return Err(Error::DimensionMismatch {
                what: "landscape coordinates",
                expected: self.dims * self.reward.len(),
                got: self.coords.len(),
            });
        }
        if let Some(p) = self.reward.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidParams(format!("reward probability {p} outside [0, 1]")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.reward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reward.is_empty()
    }

    pub fn r_max(&self) -> f64 {
        self.reward.iter().cloned().fold(0.0, f64::max)
    }

    pub fn argmax_set(&self) -> Vec<usize> {
        let m = self.r_max();
        (0..self.len()).filter(|&i| self.reward[i] == m).collect()
    }

    /// Normalized `p^{1/T}` over the grid.
    pub fn tempered_distribution(&self, temperature: f64) -> Result<Vec<f64>> {
        let w = self.log_weights(temperature)?;
        let z: f64 = w.iter().sum();
        Ok(w.into_iter().map(|v| v / z).collect())
    }

    /// `p^{1/T} / max p^{1/T}` computed in log space.
    fn log_weights(&self, temperature: f64) -> Result<Vec<f64>> {
        if !(temperature > 0.0) {
            return Err(Error::InvalidParams(format!(
                "temperature must be > 0, got {temperature}"
            )));
        }
        let m = self.r_max();
        if m <= 0.0 {
            return Err(Error::InvalidParams("all-zero reward landscape".into()));
        }
        let lm = m.ln();
        Ok(self
            .reward
            .iter()
            .map(|&p| {
                if p > 0.0 {
                    ((p.ln() - lm) / temperature).exp()
                } else {
                    0.0
                }
            })
            .collect())
    }
}

/// `E[R_T] = Σ p^{1+1/T} / Σ p^{1/T}` under an uninformative prior.
pub fn expected_reward_at_t(landscape: &DiscreteRewardLandscape, temperature: f64) -> Result<f64> {
    let w = landscape.log_weights(temperature)?;
    let z: f64 = w.iter().sum();
    Ok(w.iter().zip(&landscape.reward).map(|(w, p)| w * p).sum::<f64>() / z)
}

/// Tempered distributions for a decreasing temperature sequence.
pub fn t_zero_concentration(landscape: &DiscreteRewardLandscape, temperatures: &[f64]) -> Result<Vec<Vec<f64>>> {
    if temperatures.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::InvalidParams(
            "temperature sequence must be non-increasing".into(),
        ));
    }
    temperatures
        .iter()
        .map(|&t| landscape.tempered_distribution(t))
        .collect()
}

/// Probability mass a distribution over the grid puts on the argmax set.
pub fn mass_on_argmax(landscape: &DiscreteRewardLandscape, dist: &[f64]) -> f64 {
    landscape.argmax_set().iter().map(|&i| dist[i]).sum()
}

/// Gaussian bump in a 1-D reward landscape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: f64,
    pub height: f64,
    pub width: f64,
}

/// Smooth 1-D reward landscape `base + Σ bumps` on a bounded interval, with a
/// global and an inferior local optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpLandscape {
    pub base: f64,
    pub global: Bump,
    pub local: Bump,
    pub bounds: (f64, f64),
}

impl Default for BumpLandscape {
    fn default() -> Self {
        Self {
            base: 0.05,
            global: Bump {
                center: 2.0,
                height: 0.85,
                width: 0.3,
            },
            local: Bump {
                center: -2.0,
                height: 0.55,
                width: 0.6,
            },
            bounds: (-4.0, 4.0),
        }
    }
}

impl BumpLandscape {
    fn terms(&self, x: f64) -> [(f64, &Bump); 2] {
        [&self.global, &self.local].map(|b| {
            let z = (x - b.center) / b.width;
            (b.height * (-0.5 * z * z).exp(), b)
        })
    }

    pub fn value(&self, x: f64) -> f64 {
        self.base + self.terms(x).iter().map(|(v, _)| v).sum::<f64>()
    }

    /// `d/dx log p(x)`.
    pub fn log_gradient(&self, x: f64) -> f64 {
        let d: f64 = self
            .terms(x)
            .iter()
            .map(|(v, b)| -v * (x - b.center) / (b.width * b.width))
            .sum();
        d / self.value(x)
    }

    pub fn discretize(&self, n: usize) -> Result<DiscreteRewardLandscape> {
        DiscreteRewardLandscape::from_fn_1d(self.bounds.0, self.bounds.1, n, |x| self.value(x))
    }

    /// Final positions are counted as optimal when their reward exceeds
    /// everything the inferior optimum can offer.
    pub fn is_optimal(&self, x: f64) -> bool {
        self.value(x) > self.value(self.local.center) + 0.05
    }
}

/// Langevin sampling of `p(x)^{1/T}` under a temperature schedule, starting
/// at the local optimum. Returns the final position.
pub fn anneal_on_landscape(
    landscape: &BumpLandscape,
    schedule: &TemperatureSchedule,
    beta: f64,
    dt: f64,
    steps: usize,
    seed: u64,
) -> Result<f64> {
    let mut sampler = Sampler::new(SamplerConfig::langevin(beta, dt), seeded(seed))?;
    let mut state = ParameterState::new(vec![landscape.local.center]);
    let (lo, hi) = landscape.bounds;
    for k in 0..steps {
        let t = schedule.at(k as f64 * dt);
        let g = [landscape.log_gradient(state.theta()[0])];
        sampler.step(&mut state, &g, t)?;
        let x = &mut state.theta_mut()[0];
        // reflect at the interval ends
        if *x < lo {
            *x = (2.0 * lo - *x).min(hi);
        } else if *x > hi {
            *x = (2.0 * hi - *x).max(lo);
        }
    }
    Ok(state.theta()[0])
}

/// Small feed-forward spiking network for gradient checks: Poisson inputs
/// project onto one output neuron whose spike count is the reward, delivered
/// at the last tick of each episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdNetwork {
    pub input_rates: Vec<f64>,
    pub thetas: Vec<f64>,
    pub mapping: WeightMapping,
    pub multiplicative: bool,
    pub bias: f64,
    pub refractory: f64,
    pub episode_ticks: u32,
    pub tau_e: f64,
    pub dt: f64,
}

impl Default for FdNetwork {
    fn default() -> Self {
        Self {
            input_rates: vec![60.0, 40.0],
            thetas: vec![6.0, -4.0],
            mapping: WeightMapping::Identity,
            multiplicative: false,
            bias: -5.0,
            refractory: 0.005,
            episode_ticks: 200,
            tau_e: 1e6,
            dt: 0.001,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdReport {
    pub theta_index: usize,
    pub fd_gradient: f64,
    pub estimator_gradient: f64,
    /// `|est − fd| / |fd|`, or the absolute difference when `|fd|` is tiny.
    pub relative_error: f64,
    pub absolute: bool,
}

impl FdNetwork {
    fn build(&self, thetas: &[f64]) -> Result<SpikingNetwork> {
        let mut b = NetworkBuilder::new(self.dt);
        for _ in &self.input_rates {
            b.neuron(NeuronSpec::input());
        }
        let out = b.neuron(NeuronSpec::excitatory(self.bias, self.refractory));
        for (i, &th) in thetas.iter().enumerate() {
            b.synapse(Synapse::plastic(i, out, th, self.mapping));
        }
        b.build()
    }

    fn episode_rngs(seed: u64, episode: u64) -> (Rng, Rng) {
        let s = splitmix64(seed ^ splitmix64(episode));
        (stream_rng(s, Stream::Task), stream_rng(s, Stream::Network))
    }

    fn run_episode(&self, net: &mut SpikingNetwork, seed: u64, episode: u64, learn: bool) -> Result<f64> {
        net.reset_dynamics();
        let (mut input_rng, mut net_rng) = Self::episode_rngs(seed, episode);
        let mut inputs = vec![false; self.input_rates.len()];
        let out = self.input_rates.len();
        let mut count = 0.0;
        for _ in 0..self.episode_ticks {
            for (z, &rate) in inputs.iter_mut().zip(&self.input_rates) {
                *z = bernoulli(&mut input_rng, rate * self.dt);
            }
            if net.step(&inputs, &mut net_rng)?[out] {
                count += 1.0;
            }
            if learn {
                net.update_eligibility(self.tau_e, self.multiplicative);
            }
        }
        Ok(count)
    }

    /// Monte-Carlo estimate of `V(θ) = E[spike count]`. Episode `k` uses the
    /// same random numbers for every `θ`.
    pub fn value(&self, thetas: &[f64], n_episodes: u64, seed: u64) -> Result<f64> {
        let mut net = self.build(thetas)?;
        let mut total = 0.0;
        for k in 0..n_episodes {
            total += self.run_episode(&mut net, seed, k, false)?;
        }
        Ok(total / n_episodes as f64)
    }

    /// Episode average of `Σ_t r(t) e(t)`; the reward arrives at the last tick.
    pub fn estimator_gradient(&self, n_episodes: u64, seed: u64) -> Result<Vec<f64>> {
        let mut net = self.build(&self.thetas)?;
        let mut acc = vec![0.0; self.thetas.len()];
        for k in 0..n_episodes {
            let r = self.run_episode(&mut net, seed, k, true)?;
            net.accumulate_reward_gradient(r, &mut acc);
        }
        Ok(acc.into_iter().map(|a| a / n_episodes as f64).collect())
    }
}

/// Central finite difference of `V` for one parameter against the online
/// estimator. `shared_seed` drives both sides with common random numbers.
pub fn finite_difference_check(
    network: &FdNetwork,
    theta_index: usize,
    epsilon: f64,
    n_episodes: u64,
    shared_seed: u64,
) -> Result<FdReport> {
    if theta_index >= network.thetas.len() {
        return Err(Error::DimensionMismatch {
            what: "theta index",
            expected: network.thetas.len(),
            got: theta_index,
        });
    }
    let mut plus = network.thetas.clone();
    let mut minus = network.thetas.clone();
    plus[theta_index] += epsilon;
    minus[theta_index] -= epsilon;
    let fd = (network.value(&plus, n_episodes, shared_seed)? - network.value(&minus, n_episodes, shared_seed)?)
        / (2.0 * epsilon);
    let est = network.estimator_gradient(n_episodes, shared_seed ^ 0x5DEE_CE66)?[theta_index];
    let absolute = fd.abs() < 1e-9;
    let relative_error = if absolute {
        (est - fd).abs()
    } else {
        (est - fd).abs() / fd.abs()
    };
    Ok(FdReport {
        theta_index,
        fd_gradient: fd,
        estimator_gradient: est,
        relative_error,
        absolute,
    })
}
