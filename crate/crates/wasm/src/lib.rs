//! Browser demo bindings: small interactive runs of the simulator, returned
//! as JSON strings for a static page to plot.
//!
//! Three operations are exposed: population dynamics against the analytic
//! trace, stationary spectrum against the input spectrum, and the dynamical
//! surfaces S(ω,t) / I(ω,t). Settings are desk-scale (coarser bins, smaller
//! frequency window) so every interaction stays interactive in the browser.

use fockpulse::experiment::{run_case, RunConfig};
use fockpulse::observables::SpectrumKind;
use fockpulse::pulse::{PulseShape, PulseSpec};
use wasm_bindgen::prelude::*;

fn parse_shape(shape: &str) -> Result<PulseShape, String> {
    match shape {
        "rectangular" => Ok(PulseShape::Rectangular),
        "gaussian" => Ok(PulseShape::Gaussian),
        other => Err(format!("unknown shape `{other}`")),
    }
}

fn demo_config(
    shape: &str,
    photon_number: u8,
    gamma_tp: f64,
    emitter_on: bool,
) -> Result<RunConfig, String> {
    let shape = parse_shape(shape)?;
    if !(0.1..=10.0).contains(&gamma_tp) {
        return Err(format!("gamma_tp = {gamma_tp} outside the demo range 0.1–10"));
    }
    // Gaussian widths above ~1.5/γ push the bin count past interactive
    // latency (the envelope spans ~11σ).
    let t_p = match shape {
        PulseShape::Rectangular => gamma_tp,
        PulseShape::Gaussian => gamma_tp.min(1.5),
    };
    let pulse =
        PulseSpec::new(shape, t_p, photon_number).map_err(|e| e.to_string())?;
    let mut cfg = RunConfig::new("demo", pulse);
    cfg.emitter_on = emitter_on;
    cfg.numerics.dt = match shape {
        PulseShape::Rectangular => 0.04,
        PulseShape::Gaussian => 0.05,
    };
    cfg.numerics.tail = 10.0;
    cfg.omega = fockpulse::experiment::OmegaWindow {
        min: -8.0,
        max: 8.0,
        points: 161,
    };
    cfg.compute_spectra = false;
    cfg.compute_dynamical = false;
    Ok(cfg)
}

/// Population dynamics: `{t, mps, analytic, oracle, flux}`.
pub fn population_payload(
    shape: &str,
    photon_number: u8,
    gamma_tp: f64,
) -> Result<String, String> {
    let cfg = demo_config(shape, photon_number, gamma_tp, true)?;
    let a = run_case(&cfg).map_err(|e| e.to_string())?;
    let payload = serde_json::json!({
        "t": a.population.times(),
        "mps": a.population.values,
        "analytic": a.population_oracle.as_ref().map(|s| &s.values),
        "oracle": a.oracle_kind.map(|k| format!("{k:?}")),
        "flux_t": (0..a.grid.n_bins).map(|k| a.grid.bin_center(k)).collect::<Vec<_>>(),
        "flux": a.flux,
        "pulse_end": a.config.pulse.support().1,
        "max_bond_dim": a.metadata.max_bond_dim,
    });
    Ok(payload.to_string())
}

/// Stationary spectrum: `{omega, s, input}` (input scaled by photon number).
pub fn spectrum_payload(shape: &str, photon_number: u8, gamma_tp: f64) -> Result<String, String> {
    let mut cfg = demo_config(shape, photon_number, gamma_tp, true)?;
    cfg.compute_spectra = true;
    let a = run_case(&cfg).map_err(|e| e.to_string())?;
    let s = a.stationary.as_ref().expect("stationary spectrum");
    let payload = serde_json::json!({
        "omega": s.omega,
        "s": s.values,
        "input": a.input_spectrum,
        "photon_number": photon_number,
    });
    Ok(payload.to_string())
}

/// Dynamical surface: `{omega, times, values, kind, min, max}` with values
/// in ω-major rows.
pub fn dynamical_payload(
    shape: &str,
    photon_number: u8,
    gamma_tp: f64,
    kind: &str,
    emitter_on: bool,
) -> Result<String, String> {
    let mut cfg = demo_config(shape, photon_number, gamma_tp, emitter_on)?;
    cfg.compute_spectra = true;
    cfg.compute_dynamical = true;
    cfg.time_stride = (cfg.grid().map_err(|e| e.to_string())?.n_bins / 120).max(1);
    let a = run_case(&cfg).map_err(|e| e.to_string())?;
    let surface = match kind {
        "s_of_t" => a.s_of_t.as_ref(),
        "intensity" => a.intensity.as_ref(),
        other => return Err(format!("unknown kind `{other}`")),
    }
    .expect("dynamical surface");
    let stationary = a.stationary.as_ref().expect("stationary spectrum");
    let payload = serde_json::json!({
        "omega": surface.omega,
        "times": surface.times,
        "values": surface.values,
        "kind": match surface.kind {
            SpectrumKind::TimeDependentSpectrum => "s_of_t",
            SpectrumKind::SpectralIntensity => "intensity",
        },
        "min": surface.min_value(),
        "max": surface.max_value(),
        "stationary": stationary.values,
        "pulse_end": a.config.pulse.support().1,
    });
    Ok(payload.to_string())
}

#[wasm_bindgen]
pub fn simulate_population(shape: &str, photon_number: u8, gamma_tp: f64) -> Result<String, JsValue> {
    population_payload(shape, photon_number, gamma_tp).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn simulate_spectrum(shape: &str, photon_number: u8, gamma_tp: f64) -> Result<String, JsValue> {
    spectrum_payload(shape, photon_number, gamma_tp).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn simulate_dynamical(
    shape: &str,
    photon_number: u8,
    gamma_tp: f64,
    kind: &str,
    emitter_on: bool,
) -> Result<String, JsValue> {
    dynamical_payload(shape, photon_number, gamma_tp, kind, emitter_on)
        .map_err(|e| JsValue::from_str(&e))
}
