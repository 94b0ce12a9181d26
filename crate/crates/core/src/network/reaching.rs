//! Recurrent excitatory/inhibitory network used by the reaching task.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{HomeostasisParams, NetworkBuilder, NeuronSpec, SpikingNetwork, Synapse, WeightMapping};
use crate::error::{Error, Result};
use crate::rng::{binomial, normal_at_least, normal_at_most, standard_normal, uniform, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReachingNetworkConfig {
    pub n_input: usize,
    pub n_exc: usize,
    pub n_inh: usize,
    /// Excitatory neurons receiving afferent input.
    pub n_receivers: usize,
    /// Size of the cursor-control pool, drawn from the non-receivers.
    pub n_control: usize,
    pub p_ee: f64,
    pub p_ei: f64,
    pub p_ie: f64,
    pub p_ii: f64,
    /// Potential synapses per connected pair ~ Binomial(n, p).
    pub multiplicity_n: u32,
    pub multiplicity_p: f64,
    pub ei_weight_mean: f64,
    pub ei_weight_std: f64,
    pub inh_weight_mean: f64,
    pub inh_weight_std: f64,
    pub theta0: f64,
    pub theta_init_mean: f64,
    pub theta_init_std: f64,
    pub exc_bias: f64,
    pub inh_bias: f64,
    pub exc_refractory: f64,
    pub inh_refractory: f64,
    pub homeostasis: HomeostasisParams,
    pub dt: f64,
}

impl Default for ReachingNetworkConfig {
    fn default() -> Self {
        Self {
            n_input: 200,
            n_exc: 100,
            n_inh: 20,
            n_receivers: 30,
            n_control: 50,
            p_ee: 0.575,
            p_ei: 0.575,
            p_ie: 0.6,
            p_ii: 0.55,
            multiplicity_n: 10,
            multiplicity_p: 0.5,
            ei_weight_mean: 1.0,
            ei_weight_std: 0.1,
            inh_weight_mean: -2.0,
            inh_weight_std: 0.2,
            theta0: 3.0,
            theta_init_mean: -0.5,
            theta_init_std: 0.5,
            exc_bias: -3.0,
            inh_bias: -3.0,
            exc_refractory: 0.005,
            inh_refractory: 0.002,
            homeostasis: HomeostasisParams {
                enabled: true,
                ..HomeostasisParams::default()
            },
            dt: 0.001,
        }
    }
}

impl ReachingNetworkConfig {
    pub fn validate(&self) -> Result<()> {
        let probs = [self.p_ee, self.p_ei, self.p_ie, self.p_ii, self.multiplicity_p];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidParams(
                "connection probabilities must lie in [0, 1]".into(),
            ));
        }
        if self.n_receivers > self.n_exc || self.n_control > self.n_exc - self.n_receivers {
            return Err(Error::InvalidParams(format!(
                "{} receivers and {} control neurons do not fit in {} excitatory neurons",
                self.n_receivers, self.n_control, self.n_exc
            )));
        }
        Ok(())
    }
}

/// Reaching network plus its neuron groups. Ids: inputs `0..n_input`,
/// excitatory next, inhibitory last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReachingNetwork {
    pub net: SpikingNetwork,
    pub config: ReachingNetworkConfig,
    pub receivers: Vec<usize>,
    pub control: Vec<usize>,
}

impl ReachingNetwork {
    pub fn exc_range(&self) -> std::ops::Range<usize> {
        self.config.n_input..self.config.n_input + self.config.n_exc
    }

    pub fn inh_range(&self) -> std::ops::Range<usize> {
        let s = self.config.n_input + self.config.n_exc;
        s..s + self.config.n_inh
    }
}

pub fn build_reaching_network(cfg: &ReachingNetworkConfig, rng: &mut Rng) -> Result<ReachingNetwork> {
    cfg.validate()?;
    let mut b = NetworkBuilder::new(cfg.dt);
    b.homeostasis(cfg.homeostasis);
    for _ in 0..cfg.n_input {
        b.neuron(NeuronSpec::input());
    }
    let exc: Vec<usize> = (0..cfg.n_exc)
        .map(|_| {
            let mut spec = NeuronSpec::excitatory(cfg.exc_bias, cfg.exc_refractory);
            spec.homeostatic = cfg.homeostasis.enabled;
            b.neuron(spec)
        })
        .collect();
    let inh: Vec<usize> = (0..cfg.n_inh)
        .map(|_| b.neuron(NeuronSpec::inhibitory(cfg.inh_bias, cfg.inh_refractory)))
        .collect();

    let mut shuffled = exc.clone();
    shuffled.shuffle(rng);
    let mut receivers = shuffled[..cfg.n_receivers].to_vec();
    let mut control = shuffled[cfg.n_receivers..cfg.n_receivers + cfg.n_control].to_vec();
    receivers.sort_unstable();
    control.sort_unstable();

    let mapping = WeightMapping::Exponential {
        theta0: cfg.theta0,
        clamp_negative: true,
    };
    let plastic_pair = |b: &mut NetworkBuilder, pre: usize, post: usize, rng: &mut Rng| {
        let count = binomial(rng, cfg.multiplicity_n, cfg.multiplicity_p);
        for _ in 0..count {
            let theta = cfg.theta_init_mean + cfg.theta_init_std * standard_normal(rng);
            b.synapse(Synapse::plastic(pre, post, theta, mapping));
        }
    };
    for &post in &receivers {
        for pre in 0..cfg.n_input {
            plastic_pair(&mut b, pre, post, rng);
        }
    }
    for &pre in &exc {
        for &post in &exc {
            if pre != post && uniform(rng) < cfg.p_ee {
                plastic_pair(&mut b, pre, post, rng);
            }
        }
    }
    for &pre in &exc {
        for &post in &inh {
            if uniform(rng) < cfg.p_ei {
                let w = normal_at_least(rng, cfg.ei_weight_mean, cfg.ei_weight_std, 0.0);
                b.synapse(Synapse::fixed(pre, post, w));
            }
        }
    }
    for &pre in &inh {
        for &post in exc.iter().chain(&inh) {
            let p = if post < inh[0] { cfg.p_ie } else { cfg.p_ii };
            if pre != post && uniform(rng) < p {
                let w = normal_at_most(rng, cfg.inh_weight_mean, cfg.inh_weight_std, 0.0);
                b.synapse(Synapse::fixed(pre, post, w));
            }
        }
    }
    Ok(ReachingNetwork {
        net: b.build()?,
        config: cfg.clone(),
        receivers,
        control,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::NeuronKind;
    use crate::rng::seeded;

    #[test]
    fn counts_and_groups() {
        let cfg = ReachingNetworkConfig::default();
        let r = build_reaching_network(&cfg, &mut seeded(3)).unwrap();
        let kinds = |k: NeuronKind| r.net.neurons().iter().filter(|n| n.kind == k).count();
        assert_eq!(kinds(NeuronKind::Excitatory), 100);
        assert_eq!(kinds(NeuronKind::Inhibitory), 20);
        assert_eq!(kinds(NeuronKind::Input), 200);
        assert_eq!(r.receivers.len(), 30);
        assert_eq!(r.control.len(), 50);
        assert!(r.control.iter().all(|c| !r.receivers.contains(c)));
    }

    #[test]
    fn dale_and_plasticity_roles() {
        let cfg = ReachingNetworkConfig::default();
        let r = build_reaching_network(&cfg, &mut seeded(5)).unwrap();
        let inh = r.inh_range();
        for s in r.net.synapses() {
            let pre = s.pre as usize;
            if inh.contains(&pre) {
                assert!(s.weight_w <= 0.0);
                assert!(!s.plastic);
            } else {
                assert!(s.weight_w >= 0.0);
            }
            if s.plastic {
                assert!(!inh.contains(&(s.post as usize)));
                if pre < cfg.n_input {
                    assert!(r.receivers.contains(&(s.post as usize)));
                }
            }
        }
    }

    #[test]
    fn rejects_oversized_pools() {
        let cfg = ReachingNetworkConfig {
            n_control: 71,
            ..Default::default()
        };
        assert!(build_reaching_network(&cfg, &mut seeded(0)).is_err());
    }
}
