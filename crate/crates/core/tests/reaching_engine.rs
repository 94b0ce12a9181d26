//! The pair-grouped reaching engine against the generic network + learner.

use synsample::network::{build_reaching_network, ReachingNetworkConfig};
use synsample::plasticity::{ClipConfig, EligibilityConfig, LearnerConfig, PriorConfig, SynapticLearner};
use synsample::rng::{bernoulli, seeded};
use synsample::tasks::ReachingSim;
use synsample::{SamplerConfig, TemperatureSchedule};

fn small_config() -> ReachingNetworkConfig {
    ReachingNetworkConfig {
        n_input: 12,
        n_exc: 10,
        n_inh: 4,
        n_receivers: 4,
        n_control: 3,
        theta_init_mean: 2.5,
        theta_init_std: 1.0,
        exc_bias: -2.0,
        inh_bias: -2.0,
        ..Default::default()
    }
}

fn learner_config(sampler: SamplerConfig, k: u32, multiplicative: bool) -> LearnerConfig {
    LearnerConfig {
        sampler,
        eligibility: EligibilityConfig {
            tau_e: 0.2,
            multiplicative,
        },
        prior: PriorConfig::Gaussian { mu: 0.0, sigma: 2.0 },
        clip: Some(ClipConfig {
            max_step: 40.0,
            theta_bounds: (-2.0, 5.0),
        }),
        schedule: TemperatureSchedule::constant(0.1),
        update_every: k,
    }
}

fn compare(sampler: SamplerConfig, k: u32, multiplicative: bool) {
    let cfg = small_config();
    let rn = build_reaching_network(&cfg, &mut seeded(11)).unwrap();
    let lc = learner_config(sampler, k, multiplicative);
    let mut net = rn.net.clone();
    let mut learner = SynapticLearner::new(&net, lc, seeded(5)).unwrap();
    let mut sim = ReachingSim::new(&rn.net, lc, seeded(5)).unwrap();
    assert!(sim.n_pairs() < net.n_plastic());

    let (mut rng_a, mut rng_b, mut input_rng) = (seeded(1), seeded(1), seeded(2));
    let mut inputs = vec![false; cfg.n_input];
    for t in 0..4000u32 {
        for z in inputs.iter_mut() {
            *z = bernoulli(&mut input_rng, 0.04);
        }
        let reward = if (t / 100) % 3 == 2 { 1.0 } else { 0.0 };
        let za = net.step(&inputs, &mut rng_a).unwrap().to_vec();
        let zb = sim.step(&inputs, &mut rng_b).unwrap().to_vec();
        assert_eq!(za, zb, "spikes diverged at tick {t}");
        for (pa, pb) in net.firing_probabilities().iter().zip(sim.firing_probabilities()) {
            assert!((pa - pb).abs() < 1e-9, "probabilities diverged at tick {t}");
        }
        learner.after_tick(&mut net, reward).unwrap();
        sim.after_tick(reward).unwrap();
    }
    let (ta, tb) = (learner.state.theta(), sim.state.theta());
    let moved = ta
        .iter()
        .zip(rn.net.plastic_thetas())
        .filter(|(a, b)| (*a - b).abs() > 0.05)
        .count();
    assert!(
        moved > ta.len() / 2,
        "parameters barely moved ({moved} of {})",
        ta.len()
    );
    for (i, (a, b)) in ta.iter().zip(tb).enumerate() {
        assert!((a - b).abs() < 1e-8, "theta[{i}] {a} vs {b}");
    }
    for (a, b) in learner.state.gamma().iter().zip(sim.state.gamma()) {
        assert!((a - b).abs() < 1e-8);
    }
    for (a, b) in net.plastic_eligibilities().iter().zip(sim.eligibilities()) {
        assert!((a - b).abs() < 1e-8 * (1.0 + a.abs()), "eligibility {a} vs {b}");
    }
    assert_eq!(
        net.neurons().iter().map(|n| n.bias_phi).collect::<Vec<_>>(),
        sim.biases()
    );
}

#[test]
fn matches_generic_engine_hamiltonian_blocks() {
    compare(SamplerConfig::hamiltonian(5.0, 0.02, 0.005), 5, true);
}

#[test]
fn matches_generic_engine_langevin_every_tick() {
    compare(SamplerConfig::langevin(2.0, 0.001), 1, true);
}

#[test]
fn matches_generic_engine_additive_trace() {
    compare(SamplerConfig::hamiltonian(5.0, 0.02, 0.01), 10, false);
}
