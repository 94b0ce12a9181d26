//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export takes plain numbers or strings and returns a JSON string, so
//! the page needs no glue beyond `JSON.parse`.

use serde::Serialize;
use synsample::oracles::{anneal_on_landscape, BumpLandscape};
use synsample::rng::seeded;
use synsample::{Mode, ParameterState, SamplerConfig, TemperatureSchedule};
use wasm_bindgen::prelude::*;

pub const GRID: usize = 200;

#[derive(Debug, Serialize)]
pub struct Landscape {
    pub x: Vec<f64>,
    pub reward: Vec<f64>,
    /// Tempered distribution `p(x)^(1/T)` on the grid, normalized.
    pub density: Vec<f64>,
    pub expected_reward: f64,
}

#[derive(Debug, Serialize)]
pub struct Trace {
    pub theta: Vec<f64>,
    pub reward: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct AnnealOutcome {
    pub finals: Vec<f64>,
    pub optimal_fraction: f64,
}

/// The bump landscape and its tempered distribution at `temperature`.
pub fn landscape(temperature: f64) -> synsample::Result<Landscape> {
    let land = BumpLandscape::default();
    let grid = land.discretize(GRID)?;
    let density = grid.tempered_distribution(temperature)?;
    let x: Vec<f64> = (0..GRID)
        .map(|i| land.bounds.0 + (land.bounds.1 - land.bounds.0) * i as f64 / (GRID - 1) as f64)
        .collect();
    let reward: Vec<f64> = x.iter().map(|&v| land.value(v)).collect();
    let expected_reward = density.iter().zip(&reward).map(|(p, r)| p * r).sum();
    Ok(Landscape {
        x,
        reward,
        density,
        expected_reward,
    })
}

/// One sampler trajectory on the bump landscape, started at the local optimum.
pub fn trace(mode: &str, temperature: f64, steps: usize, seed: u64) -> synsample::Result<Trace> {
    let land = BumpLandscape::default();
    let mode: Mode = mode.parse()?;
    let cfg = match mode {
        Mode::Langevin => SamplerConfig::langevin(1.0, 0.01),
        _ => SamplerConfig::hamiltonian(1.0, 1.0, 0.01),
    };
    let mut sampler = synsample::sampler::Sampler::new(cfg, seeded(seed))?;
    let mut state = ParameterState::new(vec![land.local.center]);
    let (lo, hi) = land.bounds;
    let mut out = Trace {
        theta: Vec::with_capacity(steps),
        reward: Vec::with_capacity(steps),
    };
    for _ in 0..steps {
        let g = [land.log_gradient(state.theta()[0])];
        sampler.step(&mut state, &g, temperature)?;
        let x = &mut state.theta_mut()[0];
        *x = x.clamp(lo, hi);
        out.theta.push(*x);
        out.reward.push(land.value(*x));
    }
    Ok(out)
}

/// Repeated annealing runs under a `kind:T0:Tfinal[:duration]` schedule.
pub fn anneal(schedule: &str, runs: usize, steps: usize, seed: u64) -> synsample::Result<AnnealOutcome> {
    let land = BumpLandscape::default();
    let dt = 0.01;
    let schedule = TemperatureSchedule::parse(schedule, steps as f64 * dt)?;
    let finals = (0..runs as u64)
        .map(|k| anneal_on_landscape(&land, &schedule, 1.0, dt, steps, seed.wrapping_add(k)))
        .collect::<synsample::Result<Vec<f64>>>()?;
    let hits = finals.iter().filter(|&&x| land.is_optimal(x)).count();
    Ok(AnnealOutcome {
        optimal_fraction: hits as f64 / runs.max(1) as f64,
        finals,
    })
}

fn to_js<T: Serialize>(r: synsample::Result<T>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e.to_string()))
        .and_then(|v| serde_json::to_string(&v).map_err(|e| JsValue::from_str(&e.to_string())))
}

#[wasm_bindgen(js_name = landscape)]
pub fn landscape_js(temperature: f64) -> Result<String, JsValue> {
    to_js(landscape(temperature))
}

#[wasm_bindgen(js_name = trace)]
pub fn trace_js(mode: &str, temperature: f64, steps: u32, seed: u32) -> Result<String, JsValue> {
    to_js(trace(mode, temperature, steps as usize, seed as u64))
}

#[wasm_bindgen(js_name = anneal)]
pub fn anneal_js(schedule: &str, runs: u32, steps: u32, seed: u32) -> Result<String, JsValue> {
    to_js(anneal(schedule, runs as usize, steps as usize, seed as u64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_sharpens_as_temperature_drops() {
        let hot = landscape(1.0).unwrap();
        let cold = landscape(0.01).unwrap();
        assert!((cold.density.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(cold.expected_reward > hot.expected_reward);
        let peak = cold.density.iter().cloned().fold(0.0, f64::max);
        assert!(peak > hot.density.iter().cloned().fold(0.0, f64::max));
    }

    #[test]
    fn trace_stays_in_bounds_and_is_seeded() {
        let a = trace("hamiltonian", 0.2, 500, 3).unwrap();
        let b = trace("hamiltonian", 0.2, 500, 3).unwrap();
        assert_eq!(a.theta, b.theta);
        assert!(a.theta.iter().all(|x| (-4.0..=4.0).contains(x)));
        assert!(trace("newtonian", 0.2, 10, 0).is_err());
    }

    #[test]
    fn anneal_reports_fraction() {
        let out = anneal("linear:1.0:0.01", 8, 3000, 1).unwrap();
        assert_eq!(out.finals.len(), 8);
        assert!((0.0..=1.0).contains(&out.optimal_fraction));
        assert!(anneal("bogus", 1, 10, 0).is_err());
    }
}
