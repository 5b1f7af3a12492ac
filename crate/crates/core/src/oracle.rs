//! Closed-form solutions for the chiral emitter driven by resonant
//! rectangular Fock pulses, plus an independent one-excitation-sector ODE
//! propagator.
//!
//! These are the verification layer: every tensor-network observable with a
//! known analytic counterpart is checked against the functions here.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pulse::{PulseSpec, PulseShape, TimeGrid};

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("decay rate must be positive and finite, got {0}")]
    InvalidGamma(f64),
    #[error("closed form requires resonance (delta = 0), got delta = {0}")]
    OffResonance(f64),
    #[error("time arguments must be finite, t >= 0 and t_p > 0 (t = {t}, t_p = {t_p})")]
    InvalidTimes { t: f64, t_p: f64 },
    #[error("closed form only valid after the pulse (t = {t} <= t_p = {t_p})")]
    BeforePulseEnd { t: f64, t_p: f64 },
    #[error("negative delay tau = {0}")]
    NegativeDelay(f64),
    #[error("sector propagator supports photon_number = 1, got {0}")]
    UnsupportedPhotonNumber(u8),
    #[error(transparent)]
    Pulse(#[from] crate::pulse::PulseError),
}

/// Emitter and coupling parameters. The coupling is chiral: the emitter
/// decays into right-moving modes only, so `gamma` is the full decay rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Decay rate γ = γ_R (the left-moving rate is identically zero).
    pub gamma: f64,
    /// Emitter detuning δ = ω_a − ω_0 from the frame reference.
    #[serde(default)]
    pub delta: f64,
}

impl SystemParams {
    pub fn new(gamma: f64) -> Result<Self, OracleError> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(OracleError::InvalidGamma(gamma));
        }
        Ok(Self { gamma, delta: 0.0 })
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }
}

/// A population trace sampled on the boundaries of a time grid:
/// `values[k]` is the excited-state population at `t = k·dt`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PopulationSeries {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    pub label: String,
}

impl PopulationSeries {
    pub fn times(&self) -> Vec<f64> {
        self.grid.boundaries()
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }
}

fn check_common(p: &SystemParams, t_p: f64, t: f64) -> Result<(), OracleError> {
    if !(p.gamma.is_finite() && p.gamma > 0.0) {
        return Err(OracleError::InvalidGamma(p.gamma));
    }
    if p.delta != 0.0 {
        return Err(OracleError::OffResonance(p.delta));
    }
    if !(t.is_finite() && t >= 0.0 && t_p.is_finite() && t_p > 0.0) {
        return Err(OracleError::InvalidTimes { t, t_p });
    }
    Ok(())
}

/// Emitter population for a resonant rectangular 1-photon pulse of
/// duration `t_p`.
///
/// During the pulse: `(4/(γ t_p))·(e^{−γt/2} − 1)²`. After the pulse the
/// population decays as a pure exponential from its value at `t_p`,
/// `(4/(γ t_p))·(e^{γ t_p/2} − 1)²·e^{−γt}`. The `e^{γ t_p}` variant of that
/// prefactor is discontinuous at `t = t_p` and inconsistent with the output
/// flux identity, so the continuous half-exponent form is used.
pub fn n_tls_one_photon(p: &SystemParams, t_p: f64, t: f64) -> Result<f64, OracleError> {
    check_common(p, t_p, t)?;
    let g = p.gamma;
    let pref = 4.0 / (g * t_p);
    if t <= t_p {
        let a = (-0.5 * g * t).exp() - 1.0;
        Ok(pref * a * a)
    } else {
        let a = (0.5 * g * t_p).exp() - 1.0;
        Ok(pref * a * a * (-g * t).exp())
    }
}

/// Emitter population for a resonant rectangular 2-photon pulse; both
/// branches are continuous at `t = t_p`.
pub fn n_tls_two_photon(p: &SystemParams, t_p: f64, t: f64) -> Result<f64, OracleError> {
    check_common(p, t_p, t)?;
    let g = p.gamma;
    let gtp = g * t_p;
    let pref = 8.0 / gtp;
    if t <= t_p {
        let c_half = -32.0 / gtp + 16.0 * t / t_p - 2.0;
        let c_const = -8.0 / gtp + 1.0;
        let c_full = 40.0 / gtp + 8.0 * t / t_p + 1.0;
        Ok(pref * (c_half * (-0.5 * g * t).exp() + c_const + c_full * (-g * t).exp()))
    } else {
        let c = (-32.0 / gtp + 14.0) * (0.5 * gtp).exp()
            + (-8.0 / gtp + 1.0) * gtp.exp()
            + (40.0 / gtp + 9.0);
        Ok(pref * c * (-g * t).exp())
    }
}

/// Transmitted long-time spectrum for any 1-photon pulse: identical to the
/// input envelope spectrum `|f(ω)|²`; every emitter contribution cancels.
pub fn stationary_spectrum_one_photon(
    spec: &PulseSpec,
    _p: &SystemParams,
    omega: &[f64],
) -> Result<Vec<f64>, OracleError> {
    Ok(crate::pulse::envelope_spectrum(spec, omega)?)
}

/// Post-pulse two-time flux correlation `v_g⟨a_R†(t) a_R(t+τ)⟩` for the
/// resonant rectangular 1-photon pulse:
/// `(4/t_p)·(e^{γ t_p/2} − 1)²·e^{−γ(t + τ/2)}`.
///
/// Valid from the end of the pulse onward (the boundary `t = t_p` included,
/// where it joins the during-pulse solution continuously).
pub fn correlation_after_pulse(
    p: &SystemParams,
    t_p: f64,
    t: f64,
    tau: f64,
) -> Result<C64, OracleError> {
    check_common(p, t_p, t)?;
    if t < t_p {
        return Err(OracleError::BeforePulseEnd { t, t_p });
    }
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(OracleError::NegativeDelay(tau));
    }
    let g = p.gamma;
    let a = (0.5 * g * t_p).exp() - 1.0;
    Ok(C64::from(4.0 / t_p * a * a * (-g * (t + 0.5 * tau)).exp()))
}

/// Post-pulse output flux `v_g⟨a_R†(t) a_R(t)⟩`; equals
/// `γ·n_tls_one_photon(t)` since all decay goes into right-movers.
pub fn flux_after_pulse(p: &SystemParams, t_p: f64, t: f64) -> Result<f64, OracleError> {
    Ok(correlation_after_pulse(p, t_p, t, 0.0)?.re)
}

/// Result of the one-excitation-sector propagation: the emitter amplitude
/// equation `ė = −(γ/2 + iδ)e − √γ f(t)` integrated with fixed-step RK4,
/// together with the output field `f_out = f + √γ e`.
#[derive(Debug, Clone)]
pub struct SectorSolution {
    pub grid: TimeGrid,
    /// Excited-state amplitude at the grid boundaries (length `n_bins + 1`).
    pub amplitude: Vec<C64>,
    /// Output-field amplitude at the grid boundaries.
    pub output: Vec<C64>,
    /// `∫|f_out(t)|² dt` over the grid, accumulated on the fine internal
    /// steps (piecewise, so envelope jumps do not degrade the quadrature).
    pub output_norm: f64,
}

impl SectorSolution {
    pub fn population(&self) -> PopulationSeries {
        PopulationSeries {
            grid: self.grid,
            values: self.amplitude.iter().map(|e| e.norm_sqr()).collect(),
            label: "one-photon sector (RK4)".into(),
        }
    }
}

/// Number of RK4 substeps per grid bin.
const SUBSTEPS_PER_BIN: usize = 10;

/// Integrate the one-excitation sector for an arbitrary pulse shape and
/// detuning. Supports 1-photon specs only.
pub fn propagate_one_photon_sector(
    spec: &PulseSpec,
    p: &SystemParams,
    grid: &TimeGrid,
) -> Result<SectorSolution, OracleError> {
    if spec.photon_number != 1 {
        return Err(OracleError::UnsupportedPhotonNumber(spec.photon_number));
    }
    spec.validate()?;
    if !(p.gamma.is_finite() && p.gamma >= 0.0) {
        return Err(OracleError::InvalidGamma(p.gamma));
    }
    let spec = *spec;
    let envelope = move |t: f64, inside: bool| -> C64 {
        if !inside {
            return C64::new(0.0, 0.0);
        }
        let base = match spec.shape {
            PulseShape::Rectangular => 1.0 / spec.t_p.sqrt(),
            PulseShape::Gaussian => {
                let sigma = spec.t_p;
                let center = crate::pulse::GAUSSIAN_CENTER_SIGMAS * sigma;
                let x = (t - center) / sigma;
                (-0.5 * x * x).exp() / (std::f64::consts::PI.powf(0.25) * sigma.sqrt())
            }
        };
        C64::new(0.0, -spec.carrier_detuning * t).exp() * base
    };
    Ok(rk4_sector(p, &envelope, spec.support(), grid))
}

/// RK4 over the sector equation for an arbitrary frame envelope. The
/// `support` interval splits integration cells at envelope discontinuities,
/// so every RK4 stage samples a smooth piece (the `inside` flag tells the
/// envelope which side of an edge a degenerate stage time belongs to).
fn rk4_sector(
    p: &SystemParams,
    envelope: &dyn Fn(f64, bool) -> C64,
    support: (f64, f64),
    grid: &TimeGrid,
) -> SectorSolution {
    let g = p.gamma;
    let sqrt_g = g.sqrt();
    let lam = C64::new(-0.5 * g, -p.delta);
    let (lo, hi) = support;
    let deriv = |t: f64, e: C64, inside: bool| -> C64 { lam * e - sqrt_g * envelope(t, inside) };

    let mut e = C64::new(0.0, 0.0);
    let mut amplitude = Vec::with_capacity(grid.n_bins + 1);
    let mut output = Vec::with_capacity(grid.n_bins + 1);
    let mut output_norm = 0.0f64;
    let t0_inside = 0.0 >= lo && 0.0 <= hi;
    amplitude.push(e);
    output.push(envelope(0.0, t0_inside) + sqrt_g * e);

    let h_target = grid.dt / SUBSTEPS_PER_BIN as f64;
    for k in 0..grid.n_bins {
        let cell_lo = grid.boundary(k);
        let cell_hi = grid.boundary(k + 1);
        let mut cuts = vec![cell_lo];
        for edge in [lo, hi] {
            if edge > cell_lo + 1e-15 && edge < cell_hi - 1e-15 {
                cuts.push(edge);
            }
        }
        cuts.push(cell_hi);
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for w in 0..cuts.len() - 1 {
            let (a, b) = (cuts[w], cuts[w + 1]);
            if b - a < 1e-15 {
                continue;
            }
            let mid = 0.5 * (a + b);
            let inside = mid >= lo && mid <= hi;
            let steps = ((b - a) / h_target).ceil().max(1.0) as usize;
            let h = (b - a) / steps as f64;
            for s in 0..steps {
                let t = a + s as f64 * h;
                let f_here = envelope(t, inside) + sqrt_g * e;
                let k1 = deriv(t, e, inside);
                let k2 = deriv(t + 0.5 * h, e + 0.5 * h * k1, inside);
                let k3 = deriv(t + 0.5 * h, e + 0.5 * h * k2, inside);
                let k4 = deriv(t + h, e + h * k3, inside);
                e += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                let f_next = envelope(t + h, inside) + sqrt_g * e;
                output_norm += 0.5 * h * (f_here.norm_sqr() + f_next.norm_sqr());
            }
        }
        amplitude.push(e);
        let inside_b = cell_hi >= lo && cell_hi <= hi;
        output.push(envelope(cell_hi, inside_b) + sqrt_g * e);
    }

    SectorSolution {
        grid: *grid,
        amplitude,
        output,
        output_norm,
    }
}
