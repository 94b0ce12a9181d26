//! The oracle suite: sampler and estimator checks with known answers.

use serde::{Deserialize, Serialize};

use super::config::OracleSuiteConfig;
use crate::error::Result;
use crate::oracles::{
    expected_reward_at_t, finite_difference_check, mass_on_argmax, stationary_moments_check, DiscreteRewardLandscape,
    FdNetwork, GaussianTarget, StationaryCheck,
};
use crate::rng::{fill_standard_normal, seeded, uniform};
use crate::sampler::{hamiltonian_step, langevin_step, ParameterState, SamplerConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub name: String,
    pub passed: bool,
    pub detail: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSuiteReport {
    pub seed: u64,
    pub results: Vec<OracleResult>,
}

impl OracleSuiteReport {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }
}

/// Samplers used for the stationary checks.
pub fn stationary_samplers() -> [(SamplerConfig, usize); 2] {
    [
        (SamplerConfig::langevin(1.0, 0.01), 500),
        (SamplerConfig::hamiltonian(1.0, 2.0, 0.02), 300),
    ]
}

fn stationary(cfg: &OracleSuiteConfig, seed: u64) -> Result<Vec<OracleResult>> {
    let target = GaussianTarget { mu: 0.0, sigma: 1.0 };
    let mut out = Vec::new();
    for (sampler, thin) in stationary_samplers() {
        for temperature in [0.25, 1.0] {
            let rep = stationary_moments_check(&StationaryCheck {
                sampler,
                target,
                temperature,
                chains: cfg.chains,
                samples_per_chain: cfg.samples_per_chain,
                thin,
                burn_in: 2000,
                seed,
            })?;
            let expected = target.tempered_variance(temperature);
            let rel = (rep.variance - expected).abs() / expected;
            out.push(OracleResult {
                name: format!("stationary {} T={temperature}", sampler.mode),
                passed: rel < 0.05 && rep.ks_statistic < rep.ks_critical,
                detail: serde_json::json!({
                    "variance": rep.variance,
                    "expected_variance": expected,
                    "relative_error": rel,
                    "ks_statistic": rep.ks_statistic,
                    "ks_critical": rep.ks_critical,
                    "n_samples": rep.n_samples,
                }),
            });
        }
    }
    Ok(out)
}

/// Largest relative disagreement between one Hamiltonian step with `bΔt = 1`
/// and the Langevin step with `β = a²/b`, over random triples.
pub fn reduction_identity_error(triples: usize, seed: u64) -> Result<f64> {
    let mut rng = seeded(seed);
    let mut worst: f64 = 0.0;
    let mut buf = [0.0; 4];
    for _ in 0..triples {
        fill_standard_normal(&mut rng, &mut buf);
        let [theta, g, xi, gamma] = buf;
        let b = 0.5 + 4.0 * uniform(&mut rng);
        let a = 0.1 + 3.0 * uniform(&mut rng);
        let dt = 1.0 / b;
        let temperature = 0.05 + 2.0 * uniform(&mut rng);
        let beta = a * a / b;
        let h = hamiltonian_step(
            &ParameterState::with_gamma(vec![theta], vec![gamma])?,
            &[g],
            &SamplerConfig::hamiltonian(a, b, dt),
            temperature,
            &[xi],
        )?;
        let l = langevin_step(
            &ParameterState::new(vec![theta]),
            &[g],
            &SamplerConfig::langevin(beta, dt),
            temperature,
            &[xi],
        )?;
        let scale = theta.abs() + (beta * dt * g).abs() + ((2.0 * temperature * beta * dt).sqrt() * xi).abs();
        worst = worst.max((h.theta()[0] - l.theta()[0]).abs() / scale);
    }
    Ok(worst)
}

/// Landscape with a planted three-point optimum at reward 1 and every other
/// point at most 0.98.
pub fn planted_landscape(points: usize, seed: u64) -> Result<DiscreteRewardLandscape> {
    let mut rng = seeded(seed);
    let coords: Vec<f64> = (0..points).map(|i| i as f64).collect();
    let mut reward: Vec<f64> = (0..points).map(|_| 0.98 * uniform(&mut rng)).collect();
    for k in 0..3 {
        reward[(points / 3 + 97 * k) % points] = 1.0;
    }
    DiscreteRewardLandscape::new(1, coords, reward)
}

/// Runs the whole suite.
pub fn run_oracle_suite(cfg: &OracleSuiteConfig, seed: u64) -> Result<OracleSuiteReport> {
    let mut results = stationary(cfg, seed)?;

    let err = reduction_identity_error(cfg.reduction_triples, seed)?;
    results.push(OracleResult {
        name: "hamiltonian reduces to langevin".into(),
        passed: err <= 1e-12,
        detail: serde_json::json!({ "max_relative_error": err, "triples": cfg.reduction_triples }),
    });

    let land = planted_landscape(cfg.landscape_points, seed)?;
    let t = 1e-3;
    let mass = mass_on_argmax(&land, &land.tempered_distribution(t)?);
    let er = expected_reward_at_t(&land, t)?;
    results.push(OracleResult {
        name: "low temperature concentrates on the optimum".into(),
        passed: mass > 0.999 && (land.r_max() - er).abs() <= 1e-3,
        detail: serde_json::json!({ "mass_on_argmax": mass, "expected_reward": er, "r_max": land.r_max() }),
    });

    let net = FdNetwork::default();
    let mut fd = Vec::new();
    let mut ok = true;
    for i in 0..net.thetas.len() {
        let r = finite_difference_check(&net, i, cfg.fd_epsilon, cfg.fd_episodes, seed)?;
        let sign = r.fd_gradient.signum() == r.estimator_gradient.signum();
        ok &= sign && (r.fd_gradient.abs() <= 0.01 || r.relative_error < 0.1);
        fd.push(r);
    }
    results.push(OracleResult {
        name: "eligibility estimator matches finite differences".into(),
        passed: ok,
        detail: serde_json::to_value(&fd)?,
    });
    Ok(OracleSuiteReport { seed, results })
}
