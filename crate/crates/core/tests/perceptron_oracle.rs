//! The immediate-reward estimator against exact expectations over all `2^H`
//! hidden configurations of small networks.

use synsample::network::sigmoid;
use synsample::perceptron::{immediate_gradient, immediate_reward, softmax, Forward, PerceptronNet, PerceptronShape};
use synsample::rng::{seeded, standard_normal};

const SHAPE: PerceptronShape = PerceptronShape {
    inputs: 4,
    hidden: 2,
    outputs: 3,
};
const IMAGE: [f64; 4] = [0.9, 0.1, 0.6, 0.3];
const LABEL: usize = 1;

fn random_net(seed: u64) -> PerceptronNet {
    let mut rng = seeded(seed);
    let theta = (0..SHAPE.n_params()).map(|_| 1.5 * standard_normal(&mut rng)).collect();
    PerceptronNet::new(SHAPE, theta).unwrap()
}

fn hidden_probs(net: &PerceptronNet) -> Vec<f64> {
    (0..SHAPE.hidden)
        .map(|j| {
            let row = &net.theta()[SHAPE.hidden_index(j, 0)..=SHAPE.hidden_index(j, SHAPE.inputs)];
            sigmoid(row[..SHAPE.inputs].iter().zip(IMAGE).map(|(w, x)| w * x).sum::<f64>() + row[SHAPE.inputs])
        })
        .collect()
}

/// `(P(z), z)` for every hidden configuration.
fn configurations(p: &[f64]) -> Vec<(f64, Vec<bool>)> {
    (0..1usize << p.len())
        .map(|mask| {
            let z: Vec<bool> = (0..p.len()).map(|j| mask >> j & 1 == 1).collect();
            let prob = z.iter().zip(p).map(|(&b, &q)| if b { q } else { 1.0 - q }).product();
            (prob, z)
        })
        .collect()
}

fn expected_reward(net: &PerceptronNet) -> f64 {
    let p = hidden_probs(net);
    configurations(&p)
        .into_iter()
        .map(|(prob, z)| prob * immediate_reward(net.forward_given_hidden(p.clone(), z).winner, LABEL))
        .sum()
}

fn expected_estimator(net: &PerceptronNet) -> Vec<f64> {
    let p = hidden_probs(net);
    let mut total = vec![0.0; SHAPE.n_params()];
    let mut g = vec![0.0; SHAPE.n_params()];
    for (prob, z) in configurations(&p) {
        let fwd = net.forward_given_hidden(p.clone(), z);
        immediate_gradient(&SHAPE, &IMAGE, &fwd, immediate_reward(fwd.winner, LABEL), &mut g);
        total.iter_mut().zip(&g).for_each(|(t, v)| *t += prob * v);
    }
    total
}

#[test]
fn hidden_gradient_matches_finite_differences_of_exact_reward() {
    let mut checked = 0;
    for seed in 0..20 {
        let net = random_net(seed);
        let est = expected_estimator(&net);
        for idx in 0..SHAPE.hidden_params() {
            let eps = 1e-5;
            let mut plus = net.clone();
            plus.params.theta_mut()[idx] += eps;
            let mut minus = net.clone();
            minus.params.theta_mut()[idx] -= eps;
            let fd = (expected_reward(&plus) - expected_reward(&minus)) / (2.0 * eps);
            if fd.abs() > 1e-4 {
                assert!(
                    fd.signum() == est[idx].signum(),
                    "seed {seed} param {idx}: fd {fd} est {}",
                    est[idx]
                );
                assert!(
                    (fd - est[idx]).abs() / fd.abs() < 0.1,
                    "seed {seed} param {idx}: fd {fd} est {}",
                    est[idx]
                );
                checked += 1;
            } else {
                assert!(est[idx].abs() < 1e-3);
            }
        }
    }
    assert!(checked >= 40, "only {checked} informative parameters");
}

#[test]
fn sampled_estimator_converges_to_exact_expectation() {
    let net = random_net(3);
    let exact = expected_estimator(&net);
    let mut rng = seeded(11);
    let n = 200_000;
    let mut mean = vec![0.0; SHAPE.n_params()];
    let mut g = vec![0.0; SHAPE.n_params()];
    for _ in 0..n {
        let fwd = net.forward(&IMAGE, &mut rng);
        immediate_gradient(&SHAPE, &IMAGE, &fwd, immediate_reward(fwd.winner, LABEL), &mut g);
        mean.iter_mut().zip(&g).for_each(|(m, v)| *m += v / n as f64);
    }
    for idx in 0..SHAPE.hidden_params() {
        assert!(
            (mean[idx] - exact[idx]).abs() < 0.1 * exact[idx].abs() + 3e-3,
            "param {idx}"
        );
    }
}

#[test]
fn reward_indifferent_parameters_have_zero_expected_gradient() {
    let net = random_net(5);
    let p = hidden_probs(&net);
    let mut total = vec![0.0; SHAPE.n_params()];
    let mut g = vec![0.0; SHAPE.n_params()];
    for (prob, z) in configurations(&p) {
        let zf: Vec<f64> = z.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        let out = softmax(&net.output_drives(&zf));
        // every possible winner, weighted by its soft winner-take-all probability, with r = 1
        for (k, &pk) in out.iter().enumerate() {
            let fwd = Forward {
                hidden_p: p.clone(),
                hidden_z: z.clone(),
                output_p: out.clone(),
                winner: k,
            };
            immediate_gradient(&SHAPE, &IMAGE, &fwd, 1.0, &mut g);
            total.iter_mut().zip(&g).for_each(|(t, v)| *t += prob * pk * v);
        }
    }
    assert!(total.iter().all(|t| t.abs() < 1e-12), "{total:?}");
}
