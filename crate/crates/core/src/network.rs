//! Stochastic spike-response network engine.
//!
//! Each neuron `k` has membrane potential `u_k = Σ_i y_pre(i) w_i + φ_k` and
//! fires within a tick with probability `σ(u_k) Θ(ρ_k − t_ref)`, where `ρ_k` is
//! the time since its last spike. Postsynaptic potentials use the
//! double-exponential kernel `ε(t) = τ_r/(τ_m − τ_r) (e^{−t/τ_m} − e^{−t/τ_r})`,
//! kept as two decaying accumulators per presynaptic neuron and shared by all
//! of its outgoing synapses.
//!
//! Updates are tick-synchronous: spikes emitted at tick `n` reach their
//! targets from tick `n + 1` on (`ε(0) = 0`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{uniform, Rng};

pub mod reaching;

pub use reaching::{build_reaching_network, ReachingNetwork, ReachingNetworkConfig};

/// Time constants of the double-exponential PSP kernel, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PspKernelParams {
    pub tau_m: f64,
    pub tau_r: f64,
}

impl PspKernelParams {
    pub const EXCITATORY: Self = Self {
        tau_m: 0.020,
        tau_r: 0.002,
    };
    pub const INHIBITORY: Self = Self {
        tau_m: 0.010,
        tau_r: 0.001,
    };

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_r > 0.0 && self.tau_m > self.tau_r && self.tau_m.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "PSP kernel requires tau_m > tau_r > 0, got tau_m={} tau_r={}",
                self.tau_m, self.tau_r
            )));
        }
        Ok(())
    }

    /// Normalisation `τ_r/(τ_m − τ_r)` that puts the kernel peak below 1.
    pub fn scale(&self) -> f64 {
        self.tau_r / (self.tau_m - self.tau_r)
    }

    /// Time of the kernel maximum, `τ_m τ_r/(τ_m − τ_r) ln(τ_m/τ_r)`.
    pub fn peak_time(&self) -> f64 {
        self.tau_m * self.tau_r / (self.tau_m - self.tau_r) * (self.tau_m / self.tau_r).ln()
    }
}

/// Kernel value `ε(t)` for `t >= 0`.
pub fn psp_kernel(t: f64, params: &PspKernelParams) -> Result<f64> {
    params.validate()?;
    if t < 0.0 {
        return Err(Error::InvalidParams(format!("PSP kernel needs t >= 0, got {t}")));
    }
    Ok(params.scale() * ((-t / params.tau_m).exp() - (-t / params.tau_r).exp()))
}

#[inline]
pub fn sigmoid(u: f64) -> f64 {
    1.0 / (1.0 + (-u).exp())
}

/// `u = Σ y_i w_i + φ` over `(weight_w, psp_value)` pairs.
pub fn membrane_potential(bias_phi: f64, incoming: &[(f64, f64)]) -> f64 {
    incoming.iter().map(|(w, y)| w * y).sum::<f64>() + bias_phi
}

/// Per-tick spike probability `σ(u) Θ(ρ − t_ref)`.
pub fn firing_probability(u: f64, rho: f64, t_ref: f64, dt: f64) -> f64 {
    // ρ and t_ref are multiples of dt; compare with a tolerance well below one tick
    if rho + 1e-6 * dt >= t_ref {
        sigmoid(u)
    } else {
        0.0
    }
}

/// Homeostatic bias-potential dynamics `τ dφ/dt = ν0 − z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomeostasisParams {
    /// Time constant (s).
    pub tau_theta: f64,
    /// Target rate (Hz).
    pub nu0: f64,
    pub enabled: bool,
}

impl Default for HomeostasisParams {
    fn default() -> Self {
        Self {
            tau_theta: 50.0,
            nu0: 5.0,
            enabled: false,
        }
    }
}

/// One tick of the bias dynamics. A spike contributes 1 and the target rate
/// contributes `ν0 dt`, so a neuron firing at exactly `ν0` has zero mean drift.
pub fn homeostasis_step(phi: f64, spiked: bool, params: &HomeostasisParams, dt: f64) -> f64 {
    if !params.enabled {
        return phi;
    }
    let z = if spiked { 1.0 } else { 0.0 };
    phi + (params.nu0 * dt - z) / params.tau_theta
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NeuronKind {
    Excitatory,
    Inhibitory,
    Input,
}

/// Mapping from synaptic parameter θ to efficacy w.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WeightMapping {
    /// `w = θ`; weights may take either sign.
    Identity,
    /// `w = exp(θ − θ0)`, or `0` for `θ < 0` when `clamp_negative` is set.
    Exponential { theta0: f64, clamp_negative: bool },
}

impl WeightMapping {
    #[inline]
    pub fn weight(&self, theta: f64) -> f64 {
        match *self {
            WeightMapping::Identity => theta,
            WeightMapping::Exponential { theta0, clamp_negative } => {
                if clamp_negative && theta < 0.0 {
                    0.0
                } else {
                    (theta - theta0).exp()
                }
            }
        }
    }
}

/// Dynamic and static state of one neuron.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuronState {
    pub kind: NeuronKind,
    pub membrane_u: f64,
    pub bias_phi: f64,
    /// Ticks elapsed since the last spike (saturating).
    pub ticks_since_spike: u32,
    pub refractory_ticks: u32,
    pub homeostatic: bool,
    pub kernel: PspKernelParams,
}

impl NeuronState {
    /// Time since the last spike, `ρ`, in seconds.
    pub fn time_since_spike(&self, dt: f64) -> f64 {
        self.ticks_since_spike as f64 * dt
    }

    pub fn refractory_time(&self, dt: f64) -> f64 {
        self.refractory_ticks as f64 * dt
    }
}

pub(crate) const NEVER_SPIKED: u32 = u32::MAX / 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Synapse {
    pub pre: u32,
    pub post: u32,
    pub theta: f64,
    pub weight_w: f64,
    pub eligibility: f64,
    pub plastic: bool,
    pub mapping: WeightMapping,
}

impl Synapse {
    /// Non-plastic synapse with a fixed weight.
    pub fn fixed(pre: usize, post: usize, w: f64) -> Self {
        Self {
            pre: pre as u32,
            post: post as u32,
            theta: w,
            weight_w: w,
            eligibility: 0.0,
            plastic: false,
            mapping: WeightMapping::Identity,
        }
    }

    pub fn plastic(pre: usize, post: usize, theta: f64, mapping: WeightMapping) -> Self {
        Self {
            pre: pre as u32,
            post: post as u32,
            theta,
            weight_w: mapping.weight(theta),
            eligibility: 0.0,
            plastic: true,
            mapping,
        }
    }
}

/// Neuron description used by [`NetworkBuilder`].
#[derive(Debug, Clone, Copy)]
pub struct NeuronSpec {
    pub kind: NeuronKind,
    pub bias_phi: f64,
    pub refractory: f64,
    pub kernel: PspKernelParams,
    pub homeostatic: bool,
}

impl NeuronSpec {
    pub fn input() -> Self {
        Self {
            kind: NeuronKind::Input,
            bias_phi: 0.0,
            refractory: 0.0,
            kernel: PspKernelParams::EXCITATORY,
            homeostatic: false,
        }
    }

    pub fn excitatory(bias_phi: f64, refractory: f64) -> Self {
        Self {
            kind: NeuronKind::Excitatory,
            bias_phi,
            refractory,
            kernel: PspKernelParams::EXCITATORY,
            homeostatic: false,
        }
    }

    pub fn inhibitory(bias_phi: f64, refractory: f64) -> Self {
        Self {
            kind: NeuronKind::Inhibitory,
            bias_phi,
            refractory,
            kernel: PspKernelParams::INHIBITORY,
            homeostatic: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NetworkBuilder {
    dt: f64,
    neurons: Vec<NeuronSpec>,
    synapses: Vec<Synapse>,
    homeostasis: HomeostasisParams,
}

impl NetworkBuilder {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            neurons: Vec::new(),
            synapses: Vec::new(),
            homeostasis: HomeostasisParams::default(),
        }
    }

    /// Adds a neuron and returns its id. Input neurons must come first.
    pub fn neuron(&mut self, spec: NeuronSpec) -> usize {
        self.neurons.push(spec);
        self.neurons.len() - 1
    }

    pub fn synapse(&mut self, synapse: Synapse) -> &mut Self {
        self.synapses.push(synapse);
        self
    }

    pub fn homeostasis(&mut self, params: HomeostasisParams) -> &mut Self {
        self.homeostasis = params;
        self
    }

    pub fn build(self) -> Result<SpikingNetwork> {
        let dt = self.dt;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParams(format!("dt must be > 0, got {dt}")));
        }
        let n_inputs = self.neurons.iter().take_while(|s| s.kind == NeuronKind::Input).count();
        if self.neurons[n_inputs..].iter().any(|s| s.kind == NeuronKind::Input) {
            return Err(Error::InvalidParams(
                "input neurons must precede all other neurons".into(),
            ));
        }
        let n = self.neurons.len();
        let mut neurons = Vec::with_capacity(n);
        for spec in &self.neurons {
            spec.kernel.validate()?;
            neurons.push(NeuronState {
                kind: spec.kind,
                membrane_u: 0.0,
                bias_phi: spec.bias_phi,
                ticks_since_spike: NEVER_SPIKED,
                refractory_ticks: (spec.refractory / dt).round() as u32,
                homeostatic: spec.homeostatic,
                kernel: spec.kernel,
            });
        }
        let mut synapses = self.synapses;
        for s in &synapses {
            if s.pre as usize >= n || s.post as usize >= n {
                return Err(Error::InvalidParams(format!(
                    "synapse {}->{} references a missing neuron",
                    s.pre, s.post
                )));
            }
            if (s.post as usize) < n_inputs {
                return Err(Error::InvalidParams("input neurons cannot receive synapses".into()));
            }
        }
        synapses.sort_by_key(|s| s.post);
        let mut net = SpikingNetwork {
            dt,
            n_inputs,
            neurons,
            synapses,
            incoming: Vec::new(),
            plastic: Vec::new(),
            homeostasis: self.homeostasis,
            trace_m: vec![0.0; n],
            trace_r: vec![0.0; n],
            psp: vec![0.0; n],
            psp_used: vec![0.0; n],
            prob: vec![0.0; n],
            spikes: vec![false; n],
            decay: Vec::new(),
        };
        net.rebuild_index();
        Ok(net)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct TraceDecay {
    m: f64,
    r: f64,
    scale: f64,
}

/// Spike-response network. Input neurons occupy ids `0..n_inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "NetworkData")]
pub struct SpikingNetwork {
    dt: f64,
    n_inputs: usize,
    neurons: Vec<NeuronState>,
    /// Sorted by postsynaptic neuron.
    synapses: Vec<Synapse>,
    homeostasis: HomeostasisParams,
    trace_m: Vec<f64>,
    trace_r: Vec<f64>,
    /// PSP values `y` for the upcoming tick.
    psp: Vec<f64>,
    /// PSP values that were used during the last completed tick.
    psp_used: Vec<f64>,
    /// Firing probabilities `f` of the last completed tick.
    prob: Vec<f64>,
    /// Spikes `z` of the last completed tick.
    spikes: Vec<bool>,
    #[serde(skip)]
    incoming: Vec<(usize, usize)>,
    #[serde(skip)]
    plastic: Vec<usize>,
    #[serde(skip)]
    decay: Vec<TraceDecay>,
}

/// Serialized form of [`SpikingNetwork`]; derived indices are rebuilt on load.
#[derive(Deserialize)]
struct NetworkData {
    dt: f64,
    n_inputs: usize,
    neurons: Vec<NeuronState>,
    synapses: Vec<Synapse>,
    homeostasis: HomeostasisParams,
    trace_m: Vec<f64>,
    trace_r: Vec<f64>,
    psp: Vec<f64>,
    psp_used: Vec<f64>,
    prob: Vec<f64>,
    spikes: Vec<bool>,
}

impl From<NetworkData> for SpikingNetwork {
    fn from(d: NetworkData) -> Self {
        let mut net = SpikingNetwork {
            dt: d.dt,
            n_inputs: d.n_inputs,
            neurons: d.neurons,
            synapses: d.synapses,
            homeostasis: d.homeostasis,
            trace_m: d.trace_m,
            trace_r: d.trace_r,
            psp: d.psp,
            psp_used: d.psp_used,
            prob: d.prob,
            spikes: d.spikes,
            incoming: Vec::new(),
            plastic: Vec::new(),
            decay: Vec::new(),
        };
        net.rebuild_index();
        net
    }
}

impl SpikingNetwork {
    /// Recomputes derived indices.
    fn rebuild_index(&mut self) {
        let n = self.neurons.len();
        self.incoming = vec![(0, 0); n];
        let mut start = 0;
        while start < self.synapses.len() {
            let post = self.synapses[start].post as usize;
            let mut end = start;
            while end < self.synapses.len() && self.synapses[end].post as usize == post {
                end += 1;
            }
            self.incoming[post] = (start, end);
            start = end;
        }
        self.plastic = self
            .synapses
            .iter()
            .enumerate()
            .filter(|(_, s)| s.plastic)
            .map(|(i, _)| i)
            .collect();
        let dt = self.dt;
        self.decay = self
            .neurons
            .iter()
            .map(|nr| TraceDecay {
                m: (-dt / nr.kernel.tau_m).exp(),
                r: (-dt / nr.kernel.tau_r).exp(),
                scale: nr.kernel.scale(),
            })
            .collect();
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_neurons(&self) -> usize {
        self.neurons.len()
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn neurons(&self) -> &[NeuronState] {
        &self.neurons
    }

    pub fn neuron_mut(&mut self, k: usize) -> &mut NeuronState {
        &mut self.neurons[k]
    }

    pub fn synapses(&self) -> &[Synapse] {
        &self.synapses
    }

    pub fn homeostasis(&self) -> &HomeostasisParams {
        &self.homeostasis
    }

    pub fn set_homeostasis_enabled(&mut self, enabled: bool) {
        self.homeostasis.enabled = enabled;
    }

    /// Indices (into [`Self::synapses`]) of plastic synapses, in table order.
    pub fn plastic_indices(&self) -> &[usize] {
        &self.plastic
    }

    pub fn n_plastic(&self) -> usize {
        self.plastic.len()
    }

    pub fn plastic_thetas(&self) -> Vec<f64> {
        self.plastic.iter().map(|&i| self.synapses[i].theta).collect()
    }

    /// Writes θ for every plastic synapse and refreshes its weight.
    pub fn set_plastic_thetas(&mut self, thetas: &[f64]) -> Result<()> {
        if thetas.len() != self.plastic.len() {
            return Err(Error::DimensionMismatch {
                what: "plastic thetas",
                expected: self.plastic.len(),
                got: thetas.len(),
            });
        }
        for (&i, &theta) in self.plastic.iter().zip(thetas) {
            let s = &mut self.synapses[i];
            s.theta = theta;
            s.weight_w = s.mapping.weight(theta);
        }
        Ok(())
    }

    /// Indices into [`SpikingNetwork::synapses`] of the synapses onto `k`.
    pub fn incoming_range(&self, k: usize) -> std::ops::Range<usize> {
        let (a, b) = self.incoming[k];
        a..b
    }

    pub fn incoming(&self, k: usize) -> &[Synapse] {
        let (a, b) = self.incoming[k];
        &self.synapses[a..b]
    }

    /// PSP values for the upcoming tick.
    pub fn psp(&self) -> &[f64] {
        &self.psp
    }

    /// PSP values used during the last completed tick.
    pub fn psp_used(&self) -> &[f64] {
        &self.psp_used
    }

    pub fn firing_probabilities(&self) -> &[f64] {
        &self.prob
    }

    pub fn spikes(&self) -> &[bool] {
        &self.spikes
    }

    /// Clears traces, refractory state and eligibilities; keeps weights and biases.
    pub fn reset_dynamics(&mut self) {
        self.trace_m.iter_mut().for_each(|x| *x = 0.0);
        self.trace_r.iter_mut().for_each(|x| *x = 0.0);
        self.psp.iter_mut().for_each(|x| *x = 0.0);
        self.psp_used.iter_mut().for_each(|x| *x = 0.0);
        self.prob.iter_mut().for_each(|x| *x = 0.0);
        self.spikes.iter_mut().for_each(|x| *x = false);
        for nr in &mut self.neurons {
            nr.ticks_since_spike = NEVER_SPIKED;
            nr.membrane_u = 0.0;
        }
        self.reset_eligibility();
    }

    pub fn reset_eligibility(&mut self) {
        for &i in &self.plastic {
            self.synapses[i].eligibility = 0.0;
        }
    }

    /// Advances one tick. `input_spikes[i]` is the spike of input neuron `i`.
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
            let (a, b) = self.incoming[k];
            let mut u = self.neurons[k].bias_phi;
            for s in &self.synapses[a..b] {
                u += s.weight_w * self.psp[s.pre as usize];
            }
            let nr = &mut self.neurons[k];
            nr.membrane_u = u;
            let f = if nr.ticks_since_spike >= nr.refractory_ticks {
                sigmoid(u)
            } else {
                0.0
            };
            self.prob[k] = f;
            // one draw per neuron and tick keeps streams aligned across parameter values
            self.spikes[k] = uniform(rng) < f;
        }

        std::mem::swap(&mut self.psp, &mut self.psp_used);
        let dt = self.dt;
        for k in 0..self.neurons.len() {
            let z = self.spikes[k];
            let nr = &mut self.neurons[k];
            nr.ticks_since_spike = if z {
                1
            } else {
                nr.ticks_since_spike.saturating_add(1).min(NEVER_SPIKED)
            };
            if nr.homeostatic {
                nr.bias_phi = homeostasis_step(nr.bias_phi, z, &self.homeostasis, dt);
            }
            let d = self.decay[k];
            let zf = if z { 1.0 } else { 0.0 };
            self.trace_m[k] = (self.trace_m[k] + zf) * d.m;
            self.trace_r[k] = (self.trace_r[k] + zf) * d.r;
            self.psp[k] = d.scale * (self.trace_m[k] - self.trace_r[k]);
        }
        Ok(&self.spikes)
    }

    /// Eligibility update of every plastic synapse for the last completed tick:
    /// `e ← e (1 − dt/τ_e) + s y_pre (z_post − f_post)` with `s = w` when
    /// `multiplicative`, else `s = 1`.
    pub fn update_eligibility(&mut self, tau_e: f64, multiplicative: bool) {
        let keep = 1.0 - self.dt / tau_e;
        for &i in &self.plastic {
            let s = &mut self.synapses[i];
            let post = s.post as usize;
            let z = if self.spikes[post] { 1.0 } else { 0.0 };
            let drive = self.psp_used[s.pre as usize] * (z - self.prob[post]);
            let scale = if multiplicative { s.weight_w } else { 1.0 };
            s.eligibility = s.eligibility * keep + scale * drive;
        }
    }

    /// Adds `reward * e_i` for every plastic synapse into `acc`.
    pub fn accumulate_reward_gradient(&self, reward: f64, acc: &mut [f64]) {
        for (a, &i) in acc.iter_mut().zip(&self.plastic) {
            *a += reward * self.synapses[i].eligibility;
        }
    }

    pub fn plastic_eligibilities(&self) -> Vec<f64> {
        self.plastic.iter().map(|&i| self.synapses[i].eligibility).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn kernel_endpoints() {
        let p = PspKernelParams::EXCITATORY;
        assert_eq!(psp_kernel(0.0, &p).unwrap(), 0.0);
        assert!(psp_kernel(10.0, &p).unwrap().abs() < 1e-200);
        assert!(psp_kernel(0.005, &p).unwrap() > 0.0);
        assert!(psp_kernel(-1.0, &p).is_err());
        let bad = PspKernelParams {
            tau_m: 0.002,
            tau_r: 0.002,
        };
        assert!(psp_kernel(0.001, &bad).is_err());
    }

    #[test]
    fn kernel_peak_matches_dense_scan() {
        let p = PspKernelParams::EXCITATORY;
        let analytic = p.peak_time();
        assert!((analytic - 0.005_117).abs() < 1e-6);
        let (mut best_t, mut best) = (0.0, 0.0);
        for i in 0..200_000 {
            let t = i as f64 * 1e-7;
            let v = psp_kernel(t, &p).unwrap();
            if v > best {
                best = v;
                best_t = t;
            }
        }
        assert!((best_t - analytic).abs() < 2e-7);
    }

    #[test]
    fn membrane_potential_is_linear() {
        assert_eq!(membrane_potential(-3.0, &[]), -3.0);
        assert_eq!(membrane_potential(0.0, &[(2.0, 1.0)]), 2.0);
        assert_eq!(membrane_potential(0.0, &[(1.0, 1.0), (-2.0, 1.0)]), -1.0);
    }

    #[test]
    fn firing_probability_cases() {
        assert_eq!(firing_probability(0.0, 0.010, 0.005, 0.001), 0.5);
        assert_eq!(firing_probability(0.0, 0.005, 0.005, 0.001), 0.5);
        assert_eq!(firing_probability(40.0, 0.002, 0.005, 0.001), 0.0);
        assert!(firing_probability(800.0, 1.0, 0.005, 0.001) == 1.0);
    }

    #[test]
    fn homeostasis_arithmetic() {
        let p = HomeostasisParams {
            enabled: true,
            ..Default::default()
        };
        let up = homeostasis_step(0.0, false, &p, 0.001);
        assert!((up - 1e-4).abs() < 1e-15);
        let down = homeostasis_step(0.0, true, &p, 0.001);
        assert!((down + (1.0 - 0.005) / 50.0).abs() < 1e-15);
        // 5 spikes over 1000 ticks: net drift zero
        let mut phi = 0.0;
        for t in 0..1000 {
            phi = homeostasis_step(phi, t % 200 == 0, &p, 0.001);
        }
        assert!(phi.abs() < 1e-12);
        let off = HomeostasisParams::default();
        assert_eq!(homeostasis_step(1.0, true, &off, 0.001), 1.0);
    }

    #[test]
    fn exponential_mapping() {
        let m = WeightMapping::Exponential {
            theta0: 3.0,
            clamp_negative: false,
        };
        assert!((m.weight(3.0) - 1.0).abs() < 1e-15);
        assert!(m.weight(-50.0) > 0.0);
        let c = WeightMapping::Exponential {
            theta0: 3.0,
            clamp_negative: true,
        };
        assert_eq!(c.weight(-0.1), 0.0);
        assert!(c.weight(0.0) > 0.0);
        assert_eq!(WeightMapping::Identity.weight(-2.5), -2.5);
    }

    fn single_neuron(bias: f64, refractory: f64) -> SpikingNetwork {
        let mut b = NetworkBuilder::new(0.001);
        b.neuron(NeuronSpec::input());
        let k = b.neuron(NeuronSpec::excitatory(bias, refractory));
        b.synapse(Synapse::plastic(0, k, 1.0, WeightMapping::Identity));
        b.build().unwrap()
    }

    #[test]
    fn silent_network_traces_decay_monotonically() {
        let mut net = single_neuron(-1e3, 0.005);
        let mut rng = seeded(0);
        net.step(&[true], &mut rng).unwrap();
        let mut prev = f64::INFINITY;
        let mut peaked = false;
        for _ in 0..500 {
            net.step(&[false], &mut rng).unwrap();
            let y = net.psp()[0];
            assert!(y >= 0.0);
            if peaked {
                assert!(y <= prev);
            } else if y < prev && prev.is_finite() {
                peaked = true;
            }
            prev = y;
        }
        assert!(net.psp()[0] < 1e-9);
    }

    #[test]
    fn refractory_blocks_spikes() {
        let mut net = single_neuron(50.0, 0.005);
        let mut rng = seeded(1);
        let mut times = Vec::new();
        for t in 0..100 {
            if net.step(&[false], &mut rng).unwrap()[1] {
                times.push(t);
            }
        }
        // saturated neuron fires exactly every t_ref
        assert_eq!(times[0], 0);
        assert!(times.windows(2).all(|w| w[1] - w[0] == 5));
        assert_eq!(times.len(), 20);
    }

    #[test]
    fn builder_rejects_bad_topology() {
        let mut b = NetworkBuilder::new(0.001);
        b.neuron(NeuronSpec::excitatory(0.0, 0.005));
        b.neuron(NeuronSpec::input());
        assert!(b.build().is_err());

        let mut b = NetworkBuilder::new(0.001);
        b.neuron(NeuronSpec::input());
        b.synapse(Synapse::fixed(0, 5, 1.0));
        assert!(b.build().is_err());
    }

    #[test]
    fn json_roundtrip_preserves_dynamics() {
        let mut net = single_neuron(0.0, 0.005);
        let mut rng = seeded(4);
        for t in 0..50 {
            net.step(&[t % 3 == 0], &mut rng).unwrap();
        }
        let mut copy = SpikingNetwork::from_json(&net.to_json().unwrap()).unwrap();
        let mut r1 = rng.clone();
        let mut r2 = rng;
        for t in 0..200 {
            let a = net.step(&[t % 7 == 0], &mut r1).unwrap().to_vec();
            let b = copy.step(&[t % 7 == 0], &mut r2).unwrap().to_vec();
            assert_eq!(a, b);
        }
        assert_eq!(net, copy);
    }

    #[test]
    fn eligibility_uses_the_psp_of_the_same_tick() {
        let mut net = single_neuron(0.0, 0.005);
        let mut rng = seeded(2);
        net.step(&[true], &mut rng).unwrap();
        net.step(&[false], &mut rng).unwrap();
        let y = net.psp_used()[0];
        assert!(y > 0.0);
        let z = if net.spikes()[1] { 1.0 } else { 0.0 };
        let f = net.firing_probabilities()[1];
        let before = net.synapses()[0].eligibility;
        net.update_eligibility(0.2, false);
        let after = net.synapses()[0].eligibility;
        assert!((after - (before * (1.0 - 0.001 / 0.2) + y * (z - f))).abs() < 1e-15);
    }
}
