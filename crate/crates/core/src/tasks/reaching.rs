//! Blind reaching: a recurrent E/I network steers a cursor from S to G via
//! population-vector decoding of a control pool, guided only by a cue during
//! the movement phase and a sparse binary reward.
//!
//! [`ReachingSim`] is a fast engine specialised for this network. Synapses
//! that share a (pre, post) pair are summed into one connection, and within
//! a block of `update_every` ticks (where weights are constant) the per
//! synapse eligibility traces are carried by one trace per pair:
//!
//! ```text
//! e_i(t0 + j) = κ^j e_i(t0) + s_i B_p(j),      B_p(j) = κ B_p(j−1) + y_pre (z_post − f_post)
//! Σ_j r(j) e_i(t0 + j) = e_i(t0) ρ + s_i R_p,  ρ = Σ_j r(j) κ^j,  R_p = Σ_j r(j) B_p(j)
//! ```
//!
//! with `κ = 1 − dt/τ_e` and `s_i = w_i` (or 1 for the additive trace). This
//! reproduces [`SynapticLearner`](crate::plasticity::SynapticLearner) on the
//! same network up to floating-point rounding.

use serde::{Deserialize, Serialize};

use super::{poisson_inputs, Experiment, MetricsRow, RunParams, WindowMean};
use crate::error::{Error, Result};
use crate::network::{
    build_reaching_network, sigmoid, HomeostasisParams, ReachingNetworkConfig, SpikingNetwork, WeightMapping,
};
use crate::plasticity::{
    clip_and_apply, posterior_gradient, ClipConfig, EligibilityConfig, LearnerConfig, PriorConfig,
};
use crate::rng::{standard_normal, stream_rng, uniform, Rng, Stream};
use crate::sampler::{Mode, ParameterState, Sampler, TemperatureSchedule};

const NO_PAIR: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct SimNeuron {
    bias: f64,
    ticks_since_spike: u32,
    refractory_ticks: u32,
    homeostatic: bool,
    decay_m: f64,
    decay_r: f64,
    scale: f64,
}

/// Pair-grouped simulator with block-exact reward learning.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReachingSim {
    dt: f64,
    n_inputs: usize,
    homeostasis: HomeostasisParams,
    neurons: Vec<SimNeuron>,
    trace_m: Vec<f64>,
    trace_r: Vec<f64>,
    psp: Vec<f64>,
    psp_used: Vec<f64>,
    prob: Vec<f64>,
    spikes: Vec<bool>,
    spike_counts: Vec<u64>,
    /// Connections sorted by post; `conn_range[k]` indexes those of neuron `k`.
    conn_range: Vec<(u32, u32)>,
    conn_pre: Vec<u32>,
    conn_w: Vec<f64>,
    conn_pair: Vec<u32>,
    pair_pre: Vec<u32>,
    pair_post: Vec<u32>,
    pair_conn: Vec<u32>,
    pair_b: Vec<f64>,
    pair_r: Vec<f64>,
    /// Pair of every plastic parameter, in parameter order.
    syn_pair: Vec<u32>,
    mapping: Vec<WeightMapping>,
    syn_w: Vec<f64>,
    syn_e: Vec<f64>,
    pub state: ParameterState,
    pub sampler: Sampler,
    pub eligibility: EligibilityConfig,
    pub prior: PriorConfig,
    pub clip: Option<ClipConfig>,
    pub schedule: TemperatureSchedule,
    pub update_every: u32,
    /// Learning is skipped entirely when false (frozen weights).
    pub learning: bool,
    pub time: f64,
    ticks: u64,
    block_tick: u32,
    rho: f64,
    keep_pow: f64,
    #[serde(skip)]
    grad: Vec<f64>,
    #[serde(skip)]
    before: Vec<f64>,
}

impl ReachingSim {
    /// Takes topology, weights and neuron parameters from a freshly built network.
    pub fn new(net: &SpikingNetwork, cfg: LearnerConfig, rng: Rng) -> Result<Self> {
        cfg.eligibility.validate()?;
        cfg.prior.validate()?;
        cfg.schedule.validate()?;
        if let Some(c) = &cfg.clip {
            c.validate()?;
        }
        if cfg.update_every == 0 {
            return Err(Error::InvalidParams("update_every must be >= 1".into()));
        }
        let dt = net.dt();
        let expected = dt * cfg.update_every as f64;
        if (cfg.sampler.dt - expected).abs() > 1e-9 * expected {
            return Err(Error::InvalidSampler(format!(
                "sampler dt {} must equal update_every * tick = {expected}",
                cfg.sampler.dt
            )));
        }
        let n = net.n_neurons();
        let neurons: Vec<SimNeuron> = net
            .neurons()
            .iter()
            .map(|nr| SimNeuron {
                bias: nr.bias_phi,
                ticks_since_spike: nr.ticks_since_spike,
                refractory_ticks: nr.refractory_ticks,
                homeostatic: nr.homeostatic,
                decay_m: (-dt / nr.kernel.tau_m).exp(),
                decay_r: (-dt / nr.kernel.tau_r).exp(),
                scale: nr.kernel.scale(),
            })
            .collect();

        // group synapses of each post by pre; parameters keep the network's order
        let mut conn_range = vec![(0u32, 0u32); n];
        let (mut conn_pre, mut conn_w, mut conn_pair) = (Vec::new(), Vec::new(), Vec::new());
        let (mut pair_pre, mut pair_post, mut pair_conn) = (Vec::new(), Vec::new(), Vec::new());
        let mut plastic_pair_of_syn = vec![NO_PAIR; net.synapses().len()];
        let mut mapping = Vec::new();
        for (k, range) in conn_range.iter_mut().enumerate() {
            let start = conn_pre.len() as u32;
            let offset = net.incoming_range(k).start;
            let syns = net.incoming(k);
            let mut order: Vec<usize> = (0..syns.len()).collect();
            order.sort_by_key(|&i| (syns[i].plastic, syns[i].pre));
            let mut last: Option<(bool, u32)> = None;
            for i in order {
                let s = &syns[i];
                if last != Some((s.plastic, s.pre)) {
                    last = Some((s.plastic, s.pre));
                    conn_pre.push(s.pre);
                    conn_w.push(0.0);
                    if s.plastic {
                        conn_pair.push(pair_pre.len() as u32);
                        pair_pre.push(s.pre);
                        pair_post.push(k as u32);
                        pair_conn.push(conn_pre.len() as u32 - 1);
                    } else {
                        conn_pair.push(NO_PAIR);
                    }
                }
                *conn_w.last_mut().expect("pushed") += s.weight_w;
                if s.plastic {
                    plastic_pair_of_syn[offset + i] = pair_pre.len() as u32 - 1;
                }
            }
            *range = (start, conn_pre.len() as u32);
        }
        let syn_pair: Vec<u32> = net.plastic_indices().iter().map(|&i| plastic_pair_of_syn[i]).collect();
        for &i in net.plastic_indices() {
            mapping.push(net.synapses()[i].mapping);
        }
        let syn_w: Vec<f64> = net
            .plastic_indices()
            .iter()
            .map(|&i| net.synapses()[i].weight_w)
            .collect();
        let syn_e = net.plastic_eligibilities();
        let n_pairs = pair_pre.len();
        Ok(Self {
            dt,
            n_inputs: net.n_inputs(),
            homeostasis: *net.homeostasis(),
            neurons,
            trace_m: vec![0.0; n],
            trace_r: vec![0.0; n],
            psp: net.psp().to_vec(),
            psp_used: vec![0.0; n],
            prob: vec![0.0; n],
            spikes: vec![false; n],
            spike_counts: vec![0; n],
            conn_range,
            conn_pre,
            conn_w,
            conn_pair,
            pair_pre,
            pair_post,
            pair_conn,
            pair_b: vec![0.0; n_pairs],
            pair_r: vec![0.0; n_pairs],
            syn_pair,
            mapping,
            syn_w,
            syn_e,
            state: ParameterState::new(net.plastic_thetas()),
            sampler: Sampler::new(cfg.sampler, rng)?,
            eligibility: cfg.eligibility,
            prior: cfg.prior,
            clip: cfg.clip,
            schedule: cfg.schedule,
            update_every: cfg.update_every,
            learning: true,
            time: 0.0,
            ticks: 0,
            block_tick: 0,
            rho: 0.0,
            keep_pow: 1.0,
            grad: Vec::new(),
            before: Vec::new(),
        })
    }

    pub fn n_neurons(&self) -> usize {
        self.neurons.len()
    }

    pub fn n_pairs(&self) -> usize {
        self.pair_pre.len()
    }

    pub fn spikes(&self) -> &[bool] {
        &self.spikes
    }

    pub fn firing_probabilities(&self) -> &[f64] {
        &self.prob
    }

    pub fn biases(&self) -> Vec<f64> {
        self.neurons.iter().map(|n| n.bias).collect()
    }

    /// Spikes per neuron since the last [`ReachingSim::reset_spike_counts`].
    pub fn spike_counts(&self) -> &[u64] {
        &self.spike_counts
    }

    pub fn reset_spike_counts(&mut self) {
        self.spike_counts.iter_mut().for_each(|c| *c = 0);
    }

    pub fn temperature(&self) -> f64 {
        self.schedule.at(self.time)
    }

    /// Switches the dynamics; `Γ` restarts from zero.
    pub fn set_mode(&mut self, mode: Mode) -> Result<()> {
        self.sampler.set_mode(mode)?;
        self.state.reset_momentum();
        Ok(())
    }

    /// Advances the network one tick; same semantics and random draws as
    /// [`SpikingNetwork::step`].
    pub fn step(&mut self, input_spikes: &[bool], rng: &mut Rng) -> Result<&[bool]> {
        if input_spikes.len() != self.n_inputs {
            return Err(Error::DimensionMismatch {
                what: "input spikes",
                expected: self.n_inputs,
                got: input_spikes.len(),
            });
        }
        self.spikes[..self.n_inputs].copy_from_slice(input_spikes);
        for k in self.n_inputs..self.neurons.len() {
            let nr = &self.neurons[k];
            let f = if nr.ticks_since_spike >= nr.refractory_ticks {
                let (a, b) = self.conn_range[k];
                let mut u = nr.bias;
                for c in a as usize..b as usize {
                    u += self.conn_w[c] * self.psp[self.conn_pre[c] as usize];
                }
                sigmoid(u)
            } else {
                0.0
            };
            self.prob[k] = f;
            self.spikes[k] = uniform(rng) < f;
        }
        std::mem::swap(&mut self.psp, &mut self.psp_used);
        let dt = self.dt;
        for k in 0..self.neurons.len() {
            let z = self.spikes[k];
            let nr = &mut self.neurons[k];
            if z {
                nr.ticks_since_spike = 1;
                self.spike_counts[k] += 1;
            } else {
                nr.ticks_since_spike = nr.ticks_since_spike.saturating_add(1).min(crate::network::NEVER_SPIKED);
            }
            if nr.homeostatic {
                nr.bias = crate::network::homeostasis_step(nr.bias, z, &self.homeostasis, dt);
            }
            let zf = if z { 1.0 } else { 0.0 };
            self.trace_m[k] = (self.trace_m[k] + zf) * nr.decay_m;
            self.trace_r[k] = (self.trace_r[k] + zf) * nr.decay_r;
            self.psp[k] = nr.scale * (self.trace_m[k] - self.trace_r[k]);
        }
        Ok(&self.spikes)
    }

    /// Learning for the tick just simulated under reward `r`.
    pub fn after_tick(&mut self, reward: f64) -> Result<()> {
        if !self.learning {
            return Ok(());
        }
        let keep = 1.0 - self.dt / self.eligibility.tau_e;
        for p in 0..self.pair_pre.len() {
            let post = self.pair_post[p] as usize;
            let g = if self.spikes[post] { 1.0 } else { 0.0 } - self.prob[post];
            self.pair_b[p] = self.pair_b[p] * keep + self.psp_used[self.pair_pre[p] as usize] * g;
        }
        self.keep_pow *= keep;
        if reward != 0.0 {
            self.rho += reward * self.keep_pow;
            for (r, b) in self.pair_r.iter_mut().zip(&self.pair_b) {
                *r += reward * b;
            }
        }
        self.ticks += 1;
        self.block_tick += 1;
        if self.block_tick == self.update_every {
            self.update()?;
        }
        Ok(())
    }

    fn update(&mut self) -> Result<()> {
        let n = self.state.len();
        let inv = 1.0 / self.update_every as f64;
        let mult = self.eligibility.multiplicative;
        self.grad.resize(n, 0.0);
        for i in 0..n {
            let p = self.syn_pair[i] as usize;
            let s = if mult { self.syn_w[i] } else { 1.0 };
            let acc = self.syn_e[i] * self.rho + s * self.pair_r[p];
            self.grad[i] = posterior_gradient(acc * inv, self.state.theta()[i], &self.prior);
            self.syn_e[i] = self.keep_pow * self.syn_e[i] + s * self.pair_b[p];
        }
        self.pair_b.iter_mut().for_each(|b| *b = 0.0);
        self.pair_r.iter_mut().for_each(|r| *r = 0.0);
        self.rho = 0.0;
        self.keep_pow = 1.0;
        self.block_tick = 0;

        let temperature = self.schedule.at(self.time);
        if self.clip.is_some() {
            self.before.clear();
            self.before.extend_from_slice(self.state.theta());
        }
        self.sampler.step(&mut self.state, &self.grad, temperature)?;
        if let Some(clip) = &self.clip {
            for (th, old) in self.state.theta_mut().iter_mut().zip(&self.before) {
                *th = clip_and_apply(*old, *th - *old, clip);
            }
        }
        self.time += self.sampler.config().dt;
        if let Some((what, i)) = self.state.first_non_finite() {
            return Err(Error::NonFinite {
                what: format!("{what}[{i}]"),
                step: self.ticks,
            });
        }
        for &c in &self.pair_conn {
            self.conn_w[c as usize] = 0.0;
        }
        for (i, th) in self.state.theta().iter().enumerate() {
            let w = self.mapping[i].weight(*th);
            self.syn_w[i] = w;
            let c = self.pair_conn[self.syn_pair[i] as usize] as usize;
            self.conn_w[c] += w;
        }
        Ok(())
    }

    /// Eligibility traces of the plastic synapses at the current tick.
    pub fn eligibilities(&self) -> Vec<f64> {
        let mult = self.eligibility.multiplicative;
        (0..self.syn_e.len())
            .map(|i| {
                let s = if mult { self.syn_w[i] } else { 1.0 };
                self.keep_pow * self.syn_e[i] + s * self.pair_b[self.syn_pair[i] as usize]
            })
            .collect()
    }
}

/// `cursor + Σ_{k spiking} d_k`, clamped to the unit square.
pub fn population_vector_update(cursor: [f64; 2], spiking: &[bool], dirs: &[[f64; 2]]) -> [f64; 2] {
    let mut c = cursor;
    for (&z, d) in spiking.iter().zip(dirs) {
        if z {
            c[0] += d[0];
            c[1] += d[1];
        }
    }
    [c[0].clamp(0.0, 1.0), c[1].clamp(0.0, 1.0)]
}

/// Afferent rate patterns from Gaussian tuning curves over the unit cube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CueGenerator {
    pub centers: Vec<[f64; 3]>,
    pub cue: [f64; 3],
    pub tuning_sigma: f64,
    pub jitter: f64,
    pub max_rate: f64,
    pub background: f64,
}

impl CueGenerator {
    pub fn random(n: usize, cfg: &ReachingTaskConfig, rng: &mut Rng) -> Self {
        let mut point = || [uniform(rng), uniform(rng), uniform(rng)];
        let centers = (0..n).map(|_| point()).collect();
        let cue = point();
        Self {
            centers,
            cue,
            tuning_sigma: cfg.tuning_sigma,
            jitter: cfg.cue_jitter,
            max_rate: cfg.max_rate,
            background: cfg.background_rate,
        }
    }

    /// Rate of a neuron tuned to `center` for stimulus point `s`.
    pub fn rate(&self, center: &[f64; 3], s: &[f64; 3]) -> f64 {
        let d2: f64 = center.iter().zip(s).map(|(c, x)| (c - x) * (c - x)).sum();
        self.background + self.max_rate * (-d2 / (2.0 * self.tuning_sigma * self.tuning_sigma)).exp()
    }

    /// Rates for one cue presentation with fresh jitter.
    pub fn presentation(&self, rng: &mut Rng, out: &mut [f64]) {
        let s = self.cue.map(|c| c + self.jitter * standard_normal(rng));
        for (o, c) in out.iter_mut().zip(&self.centers) {
            *o = self.rate(c, &s);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    Timeout,
    HoldFailure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    /// Cursor must stay in S; cue off.
    HoldStart { held: u32 },
    /// Cue on until the cursor has stayed in G long enough or time runs out.
    Movement { elapsed: u32, in_goal: u32 },
    /// Reward window after success, or a silent window after a failure.
    Post { remaining: u32, success: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialEvent {
    None,
    MovementStarted,
    Ended(Outcome),
    /// Post window over; the cursor goes back to S.
    Restart,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialStateMachine {
    pub hold_ticks: u32,
    pub timeout_ticks: u32,
    pub post_ticks: u32,
    pub phase: Phase,
}

impl TrialStateMachine {
    pub fn new(hold_ticks: u32, timeout_ticks: u32, post_ticks: u32) -> Self {
        Self {
            hold_ticks,
            timeout_ticks,
            post_ticks,
            phase: Phase::HoldStart { held: 0 },
        }
    }

    pub fn cue_on(&self) -> bool {
        matches!(self.phase, Phase::Movement { .. })
    }

    pub fn cursor_moves(&self) -> bool {
        !matches!(self.phase, Phase::Post { .. })
    }

    pub fn reward(&self) -> f64 {
        match self.phase {
            Phase::Post { success: true, .. } => 1.0,
            _ => 0.0,
        }
    }

    /// Advances one tick given where the cursor is after this tick's movement.
    pub fn advance(&mut self, in_start: bool, in_goal: bool) -> TrialEvent {
        let post = |success| Phase::Post {
            remaining: self.post_ticks,
            success,
        };
        match self.phase {
            Phase::HoldStart { held } => {
                if !in_start {
                    self.phase = post(false);
                    TrialEvent::Ended(Outcome::HoldFailure)
                } else if held + 1 >= self.hold_ticks {
                    self.phase = Phase::Movement { elapsed: 0, in_goal: 0 };
                    TrialEvent::MovementStarted
                } else {
                    self.phase = Phase::HoldStart { held: held + 1 };
                    TrialEvent::None
                }
            }
            Phase::Movement { elapsed, in_goal: g } => {
                let elapsed = elapsed + 1;
                let outcome = if in_goal {
                    (g + 1 >= self.hold_ticks).then_some(Outcome::Success)
                } else if g > 0 {
                    Some(Outcome::HoldFailure)
                } else {
                    None
                };
                let outcome = outcome.or((elapsed >= self.timeout_ticks).then_some(Outcome::Timeout));
                match outcome {
                    Some(o) => {
                        self.phase = post(o == Outcome::Success);
                        TrialEvent::Ended(o)
                    }
                    None => {
                        self.phase = Phase::Movement {
                            elapsed,
                            in_goal: if in_goal { g + 1 } else { 0 },
                        };
                        TrialEvent::None
                    }
                }
            }
            Phase::Post { remaining, success } => {
                if remaining <= 1 {
                    self.phase = Phase::HoldStart { held: 0 };
                    TrialEvent::Restart
                } else {
                    self.phase = Phase::Post {
                        remaining: remaining - 1,
                        success,
                    };
                    TrialEvent::None
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReachingTaskConfig {
    pub network: ReachingNetworkConfig,
    pub start: [f64; 2],
    pub goal: [f64; 2],
    pub start_radius: f64,
    pub goal_radius: f64,
    pub hold: f64,
    pub timeout: f64,
    pub reward_window: f64,
    pub tuning_sigma: f64,
    pub cue_jitter: f64,
    pub max_rate: f64,
    pub background_rate: f64,
    /// Preferred directions are uniform in `±direction_range` per axis.
    pub direction_range: f64,
    pub tau_e: f64,
    pub prior: PriorConfig,
    pub clip: ClipConfig,
    /// Ticks per parameter update.
    pub update_every: u32,
    /// Simulated duration (s).
    pub duration: f64,
    /// Weights stay frozen when false.
    pub plastic: bool,
}

impl Default for ReachingTaskConfig {
    fn default() -> Self {
        Self {
            network: ReachingNetworkConfig::default(),
            start: [0.25, 0.25],
            goal: [0.75, 0.75],
            start_radius: 0.05,
            goal_radius: 0.05,
            hold: 0.05,
            timeout: 5.0,
            reward_window: 0.4,
            tuning_sigma: 0.2,
            cue_jitter: 0.05,
            max_rate: 60.0,
            background_rate: 2.0,
            direction_range: 0.025,
            tau_e: 1.0,
            prior: PriorConfig::Gaussian { mu: 0.0, sigma: 2.0 },
            clip: ClipConfig {
                max_step: 40.0,
                theta_bounds: (-2.0, 5.0),
            },
            update_every: 50,
            duration: 1800.0,
            plastic: true,
        }
    }
}

impl ReachingTaskConfig {
    fn ticks(&self, seconds: f64) -> u32 {
        (seconds / self.network.dt).round() as u32
    }

    pub fn total_ticks(&self) -> u64 {
        (self.duration / self.network.dt).round() as u64
    }

    pub fn trial_machine(&self) -> TrialStateMachine {
        TrialStateMachine::new(
            self.ticks(self.hold).max(1),
            self.ticks(self.timeout).max(1),
            self.ticks(self.reward_window).max(1),
        )
    }
}

fn inside(p: [f64; 2], center: [f64; 2], radius: f64) -> bool {
    let (dx, dy) = (p[0] - center[0], p[1] - center[1]);
    dx * dx + dy * dy <= radius * radius
}

/// Counts of trial outcomes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub success: u64,
    pub timeout: u64,
    pub hold_failure: u64,
}

impl OutcomeCounts {
    pub fn record(&mut self, o: Outcome) {
        match o {
            Outcome::Success => self.success += 1,
            Outcome::Timeout => self.timeout += 1,
            Outcome::HoldFailure => self.hold_failure += 1,
        }
    }

    pub fn trials(&self) -> u64 {
        self.success + self.timeout + self.hold_failure
    }

    pub fn success_rate(&self) -> Option<f64> {
        (self.trials() > 0).then(|| self.success as f64 / self.trials() as f64)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReachingExperiment {
    pub cfg: ReachingTaskConfig,
    pub params: RunParams,
    pub sim: ReachingSim,
    pub control: Vec<usize>,
    pub directions: Vec<[f64; 2]>,
    pub cue: CueGenerator,
    pub trial: TrialStateMachine,
    pub cursor: [f64; 2],
    net_rng: Rng,
    task_rng: Rng,
    tick: u64,
    pub totals: OutcomeCounts,
    window: OutcomeCounts,
    /// `(tick, outcome)` of every finished trial.
    pub outcomes: Vec<(u64, Outcome)>,
    window_reward: WindowMean,
    rows: Vec<MetricsRow>,
    rates: Vec<f64>,
    #[serde(skip)]
    inputs: Vec<bool>,
    #[serde(skip)]
    control_spikes: Vec<bool>,
}

impl ReachingExperiment {
    pub fn new(cfg: ReachingTaskConfig, params: RunParams) -> Result<Self> {
        if cfg.duration <= 0.0 {
            return Err(Error::InvalidConfig("reaching duration must be > 0".into()));
        }
        let mut init = stream_rng(params.seed, Stream::Init);
        let rn = build_reaching_network(&cfg.network, &mut init)?;
        let directions = (0..rn.control.len())
            .map(|_| {
                let r = cfg.direction_range;
                [
                    r * (2.0 * uniform(&mut init) - 1.0),
                    r * (2.0 * uniform(&mut init) - 1.0),
                ]
            })
            .collect();
        let cue = CueGenerator::random(cfg.network.n_input, &cfg, &mut init);
        let mut sim = ReachingSim::new(
            &rn.net,
            LearnerConfig {
                sampler: params.sampler,
                eligibility: EligibilityConfig {
                    tau_e: cfg.tau_e,
                    multiplicative: true,
                },
                prior: cfg.prior,
                clip: Some(cfg.clip),
                schedule: params.schedule,
                update_every: cfg.update_every,
            },
            stream_rng(params.seed, Stream::Sampler),
        )?;
        sim.learning = cfg.plastic;
        let n_input = cfg.network.n_input;
        Ok(Self {
            trial: cfg.trial_machine(),
            cursor: cfg.start,
            rates: vec![cfg.background_rate; n_input],
            cfg,
            params,
            sim,
            control: rn.control,
            directions,
            cue,
            net_rng: stream_rng(params.seed, Stream::Network),
            task_rng: stream_rng(params.seed, Stream::Task),
            tick: 0,
            totals: OutcomeCounts::default(),
            window: OutcomeCounts::default(),
            outcomes: Vec::new(),
            window_reward: WindowMean::default(),
            rows: Vec::new(),
            inputs: Vec::new(),
            control_spikes: Vec::new(),
        })
    }

    fn step(&mut self) -> Result<()> {
        self.inputs.resize(self.cfg.network.n_input, false);
        poisson_inputs(&self.rates, self.cfg.network.dt, &mut self.task_rng, &mut self.inputs);
        let r = self.trial.reward();
        let spikes = self.sim.step(&self.inputs, &mut self.net_rng)?;
        self.control_spikes.clear();
        self.control_spikes.extend(self.control.iter().map(|&k| spikes[k]));
        self.sim.after_tick(r)?;
        self.window_reward.push(r);
        if self.trial.cursor_moves() {
            self.cursor = population_vector_update(self.cursor, &self.control_spikes, &self.directions);
        }
        let event = self.trial.advance(
            inside(self.cursor, self.cfg.start, self.cfg.start_radius),
            inside(self.cursor, self.cfg.goal, self.cfg.goal_radius),
        );
        self.tick += 1;
        match event {
            TrialEvent::None => {}
            TrialEvent::MovementStarted => self.cue.presentation(&mut self.task_rng, &mut self.rates),
            TrialEvent::Ended(o) => {
                self.rates.iter_mut().for_each(|r| *r = self.cfg.background_rate);
                self.totals.record(o);
                self.window.record(o);
                self.outcomes.push((self.tick, o));
            }
            TrialEvent::Restart => self.cursor = self.cfg.start,
        }
        Ok(())
    }

    fn log_row(&mut self) {
        let row = MetricsRow {
            reward: self.window_reward.take(),
            success: self.window.success_rate(),
            ..MetricsRow::new(
                self.tick,
                self.tick as f64 * self.cfg.network.dt,
                self.sim.sampler.config().mode,
                self.sim.temperature(),
            )
        }
        .with_params(&self.sim.state);
        self.window = OutcomeCounts::default();
        self.rows.push(row);
    }

    /// Success rate over trials that ended at or after `from_tick`.
    pub fn success_rate_since(&self, from_tick: u64) -> Option<f64> {
        let mut c = OutcomeCounts::default();
        for &(_, o) in self.outcomes.iter().filter(|(t, _)| *t >= from_tick) {
            c.record(o);
        }
        c.success_rate()
    }

    /// Firing rates (Hz) of the excitatory neurons since the counters were reset
    /// `seconds` ago.
    pub fn excitatory_rates(&self, seconds: f64) -> Vec<f64> {
        let n = &self.cfg.network;
        self.sim.spike_counts()[n.n_input..n.n_input + n.n_exc]
            .iter()
            .map(|&c| c as f64 / seconds)
            .collect()
    }
}

impl Experiment for ReachingExperiment {
    fn progress(&self) -> u64 {
        self.tick
    }

    fn total(&self) -> u64 {
        self.cfg.total_ticks()
    }

    fn advance(&mut self, until: u64) -> Result<()> {
        let until = until.min(self.total());
        while self.tick < until {
            self.step()?;
            if self.tick.is_multiple_of(self.params.log_stride) || self.tick == self.total() {
                self.log_row();
            }
        }
        Ok(())
    }

    fn rows(&self) -> &[MetricsRow] {
        &self.rows
    }

    fn set_mode(&mut self, mode: Mode) -> Result<()> {
        self.sim.set_mode(mode)
    }

    fn summary(&self) -> serde_json::Value {
        let last_third = self.total() * 2 / 3;
        serde_json::json!({
            "trials": self.totals.trials(),
            "outcomes": self.totals,
            "success_rate": self.totals.success_rate(),
            "success_rate_last_third": self.success_rate_since(last_third),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn population_vector_examples() {
        let dirs = [[0.01, -0.02], [0.02, 0.03]];
        assert_eq!(population_vector_update([0.5, 0.5], &[false, false], &dirs), [0.5, 0.5]);
        let c = population_vector_update([0.5, 0.5], &[true, false], &dirs);
        assert!((c[0] - 0.51).abs() < 1e-15 && (c[1] - 0.48).abs() < 1e-15);
        let c = population_vector_update([0.5, 0.5], &[true, true], &dirs);
        assert!((c[0] - 0.53).abs() < 1e-15 && (c[1] - 0.51).abs() < 1e-15);
        assert_eq!(
            population_vector_update([0.995, 0.0], &[true, false], &dirs),
            [1.0, 0.0]
        );
    }

    #[test]
    fn trial_machine_success_path() {
        let mut m = TrialStateMachine::new(3, 10, 2);
        assert_eq!(m.advance(true, false), TrialEvent::None);
        assert_eq!(m.advance(true, false), TrialEvent::None);
        assert_eq!(m.advance(true, false), TrialEvent::MovementStarted);
        assert!(m.cue_on());
        assert_eq!(m.advance(false, true), TrialEvent::None);
        assert_eq!(m.advance(false, true), TrialEvent::None);
        assert_eq!(m.advance(false, true), TrialEvent::Ended(Outcome::Success));
        assert_eq!(m.reward(), 1.0);
        assert!(!m.cursor_moves());
        assert_eq!(m.advance(false, false), TrialEvent::None);
        assert_eq!(m.advance(false, false), TrialEvent::Restart);
        assert_eq!(m.reward(), 0.0);
    }

    #[test]
    fn trial_machine_failures() {
        let mut m = TrialStateMachine::new(3, 4, 1);
        assert_eq!(m.advance(false, false), TrialEvent::Ended(Outcome::HoldFailure));
        m.advance(false, false);
        for _ in 0..3 {
            m.advance(true, false);
        }
        assert_eq!(m.advance(false, true), TrialEvent::None);
        assert_eq!(m.advance(false, false), TrialEvent::Ended(Outcome::HoldFailure));
        m.advance(false, false);
        for _ in 0..3 {
            m.advance(true, false);
        }
        for _ in 0..3 {
            assert_eq!(m.advance(false, false), TrialEvent::None);
        }
        assert_eq!(m.advance(false, false), TrialEvent::Ended(Outcome::Timeout));
    }

    #[test]
    fn cue_rate_formula() {
        let cfg = ReachingTaskConfig::default();
        let g = CueGenerator::random(5, &cfg, &mut seeded(1));
        assert_eq!(g.rate(&g.cue, &g.cue), 62.0);
        let far = g.rate(&[10.0, 10.0, 10.0], &g.cue);
        assert!((far - 2.0).abs() < 1e-12);
    }
}
