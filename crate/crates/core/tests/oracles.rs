use synsample::network::{psp_kernel, NetworkBuilder, NeuronSpec, PspKernelParams, Synapse};
use synsample::oracles::{anneal_on_landscape, expected_reward_at_t, Bump, BumpLandscape};
use synsample::rng::{bernoulli, seeded};
use synsample::TemperatureSchedule;

#[test]
fn slow_cooling_finds_the_global_optimum() {
    // equal widths and a shallow barrier; the optima differ by 0.9 in reward
    let land = BumpLandscape {
        base: 0.3,
        global: Bump {
            center: 2.0,
            height: 1.2,
            width: 0.6,
        },
        local: Bump {
            center: -2.0,
            height: 0.3,
            width: 0.6,
        },
        bounds: (-4.0, 4.0),
    };
    let (dt, steps) = (0.01, 200_000);
    let duration = steps as f64 * dt;
    let count = |schedule: TemperatureSchedule| {
        (0..20)
            .filter(|&seed| land.is_optimal(anneal_on_landscape(&land, &schedule, 1.0, dt, steps, seed).unwrap()))
            .count()
    };
    let cooled = count(TemperatureSchedule::linear(1.0, 0.005, duration));
    let hot = count(TemperatureSchedule::constant(1.0));
    assert!(cooled >= 18, "cooling reached the optimum in {cooled}/20 runs");
    assert!(hot < cooled, "constant T {hot}/20 vs cooling {cooled}/20");
}

#[test]
fn quadrature_converges_with_grid_resolution() {
    let land = BumpLandscape::default();
    for t in [1.0, 0.3, 0.1] {
        let coarse = expected_reward_at_t(&land.discretize(2001).unwrap(), t).unwrap();
        let fine = expected_reward_at_t(&land.discretize(4001).unwrap(), t).unwrap();
        assert!((coarse - fine).abs() < 1e-4, "T={t}: {coarse} vs {fine}");
    }
}

#[test]
fn psp_trace_is_the_kernel_convolution() {
    let params = PspKernelParams::EXCITATORY;
    let dt = 0.001;
    let mut b = NetworkBuilder::new(dt);
    b.neuron(NeuronSpec::input());
    let out = b.neuron(NeuronSpec::excitatory(-5.0, 0.005));
    b.synapse(Synapse::fixed(0, out, 1.0));
    let mut net = b.build().unwrap();
    let mut rng = seeded(9);
    let mut spikes = Vec::new();
    for k in 0..1000usize {
        let s = bernoulli(&mut rng, 0.05);
        if s {
            spikes.push(k);
        }
        net.step(&[s], &mut rng).unwrap();
        let direct: f64 = spikes
            .iter()
            .map(|&s| psp_kernel((k - s) as f64 * dt, &params).unwrap())
            .sum();
        assert!((net.psp_used()[0] - direct).abs() < 1e-9, "tick {k}");
    }
}
