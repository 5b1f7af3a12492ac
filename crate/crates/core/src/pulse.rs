//! Quantum pulse envelopes: definition, normalization, discretization onto
//! time bins, and envelope power spectra.
//!
//! Envelopes are normalized so that the continuous intensity integrates to
//! one photon, `∫|f(t)|² dt = 1`. Discretized coefficients follow the
//! convention `f_k = f(t_k)·√dt` sampled at bin centers, renormalized so the
//! resulting number-state amplitudes are exactly unit norm at any bin width.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Minimum number of bins the pulse support must span before discretization
/// is considered meaningful.
pub const DEFAULT_MIN_SUPPORT_BINS: usize = 20;

/// Relative amplitude below which the Gaussian envelope is truncated to zero.
pub const GAUSSIAN_TRUNCATION: f64 = 1e-8;

/// The Gaussian envelope is centered at `5σ` so the clipped weight at `t = 0`
/// is negligible (~1e-11 of the pulse energy).
pub const GAUSSIAN_CENTER_SIGMAS: f64 = 5.0;

#[derive(Debug, Error, PartialEq)]
pub enum PulseError {
    #[error("pulse duration must be positive and finite, got {0}")]
    InvalidDuration(f64),
    #[error("photon number must be 1 or 2, got {0}")]
    InvalidPhotonNumber(u8),
    #[error("time argument must be finite and non-negative, got {0}")]
    InvalidTime(f64),
    #[error("frequency grid must be finite and sorted")]
    InvalidFrequencyGrid,
    #[error("time grid must have positive finite dt and at least one bin")]
    InvalidGrid,
    #[error("grid too coarse: {found} bins inside the pulse support, need at least {needed}")]
    GridTooCoarse { found: usize, needed: usize },
    #[error("grid ends at t = {grid_end} but the pulse support extends to t = {support_end}")]
    SupportNotCovered { support_end: f64, grid_end: f64 },
}

/// Pulse shape family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseShape {
    Rectangular,
    Gaussian,
}

/// Specification of an incident `n`-photon pulse.
///
/// `t_p` is the duration of a rectangular pulse or the width parameter σ of
/// a Gaussian one; `carrier_detuning` is `ω_p − ω_0` (zero means the carrier
/// sits on the waveguide reference frequency).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    pub shape: PulseShape,
    pub t_p: f64,
    #[serde(default)]
    pub carrier_detuning: f64,
    pub photon_number: u8,
}

impl PulseSpec {
    pub fn new(shape: PulseShape, t_p: f64, photon_number: u8) -> Result<Self, PulseError> {
        let spec = Self {
            shape,
            t_p,
            carrier_detuning: 0.0,
            photon_number,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_carrier_detuning(mut self, detuning: f64) -> Self {
        self.carrier_detuning = detuning;
        self
    }

    pub fn validate(&self) -> Result<(), PulseError> {
        if !(self.t_p.is_finite() && self.t_p > 0.0) {
            return Err(PulseError::InvalidDuration(self.t_p));
        }
        if !(self.photon_number == 1 || self.photon_number == 2) {
            return Err(PulseError::InvalidPhotonNumber(self.photon_number));
        }
        Ok(())
    }

    /// Interval outside of which the envelope is identically zero.
    ///
    /// For the Gaussian this is the truncation window clipped to `t ≥ 0`.
    pub fn support(&self) -> (f64, f64) {
        match self.shape {
            PulseShape::Rectangular => (0.0, self.t_p),
            PulseShape::Gaussian => {
                let sigma = self.t_p;
                let center = GAUSSIAN_CENTER_SIGMAS * sigma;
                let radius = sigma * (-2.0 * GAUSSIAN_TRUNCATION.ln()).sqrt();
                ((center - radius).max(0.0), center + radius)
            }
        }
    }

    /// Raw (un-truncated) envelope value inside the support; callers are
    /// responsible for the support check.
    fn envelope_inside(&self, t: f64) -> f64 {
        match self.shape {
            PulseShape::Rectangular => 1.0 / self.t_p.sqrt(),
            PulseShape::Gaussian => {
                let sigma = self.t_p;
                let center = GAUSSIAN_CENTER_SIGMAS * sigma;
                let x = (t - center) / sigma;
                (-0.5 * x * x).exp() / (std::f64::consts::PI.powf(0.25) * sigma.sqrt())
            }
        }
    }
}

/// Uniform time grid of `n_bins` bins of width `dt` starting at `t = 0`.
///
/// Bin `k` covers `[k·dt, (k+1)·dt]`; field samples live on bin centers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub dt: f64,
    pub n_bins: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, n_bins: usize) -> Result<Self, PulseError> {
        if !(dt.is_finite() && dt > 0.0) || n_bins == 0 {
            return Err(PulseError::InvalidGrid);
        }
        Ok(Self { dt, n_bins })
    }

    /// Grid covering the pulse support plus a decay tail (in the same time
    /// units; with γ = 1 a tail of 8 means `8/γ`).
    pub fn for_pulse(spec: &PulseSpec, dt: f64, tail: f64) -> Result<Self, PulseError> {
        let (_, hi) = spec.support();
        let span = hi + tail.max(0.0);
        let n_bins = (span / dt).ceil() as usize;
        Self::new(dt, n_bins.max(1))
    }

    pub fn span(&self) -> f64 {
        self.dt * self.n_bins as f64
    }

    pub fn bin_center(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.dt
    }

    pub fn boundary(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_bins).map(|k| self.bin_center(k)).collect()
    }

    pub fn boundaries(&self) -> Vec<f64> {
        (0..=self.n_bins).map(|k| self.boundary(k)).collect()
    }
}

/// Envelope amplitude `f(t)` of the pulse at time `t`.
pub fn sample_envelope(spec: &PulseSpec, t: f64) -> Result<C64, PulseError> {
    spec.validate()?;
    if !t.is_finite() || t < 0.0 {
        return Err(PulseError::InvalidTime(t));
    }
    let (lo, hi) = spec.support();
    if t < lo || t > hi {
        return Ok(C64::new(0.0, 0.0));
    }
    Ok(C64::from(spec.envelope_inside(t)))
}

/// Discretized coefficients `f_k` over the bins of `grid`, renormalized so
/// `Σ|f_k|² = 1` exactly.
///
/// A nonzero carrier detuning shows up as the frame phase `e^{-i Δc t_k}` on
/// the coefficients. Errors if the grid does not cover the support or if
/// fewer than [`DEFAULT_MIN_SUPPORT_BINS`] bins fall inside it.
pub fn discretize(spec: &PulseSpec, grid: &TimeGrid) -> Result<Vec<C64>, PulseError> {
    discretize_with_min_support(spec, grid, DEFAULT_MIN_SUPPORT_BINS)
}

pub fn discretize_with_min_support(
    spec: &PulseSpec,
    grid: &TimeGrid,
    min_support_bins: usize,
) -> Result<Vec<C64>, PulseError> {
    spec.validate()?;
    let (lo, hi) = spec.support();
    if grid.span() + 0.5 * grid.dt < hi {
        return Err(PulseError::SupportNotCovered {
            support_end: hi,
            grid_end: grid.span(),
        });
    }
    let sqrt_dt = grid.dt.sqrt();
    let mut coeffs = Vec::with_capacity(grid.n_bins);
    let mut inside = 0usize;
    for k in 0..grid.n_bins {
        let t = grid.bin_center(k);
        let amp = if t < lo || t > hi {
            0.0
        } else {
            inside += 1;
            spec.envelope_inside(t)
        };
        let phase = C64::new(0.0, -spec.carrier_detuning * t).exp();
        coeffs.push(phase * amp * sqrt_dt);
    }
    if inside < min_support_bins {
        return Err(PulseError::GridTooCoarse {
            found: inside,
            needed: min_support_bins,
        });
    }
    let norm: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    for c in coeffs.iter_mut() {
        *c /= norm;
    }
    Ok(coeffs)
}

/// Envelope power spectrum `|f(ω)|²` on a grid of detunings `Δ = ω − ω_p`.
///
/// Rectangular pulses use the closed form `t_p·sinc²(Δ t_p / 2)`; Gaussian
/// ones are Fourier-transformed by quadrature on an internal fine grid.
pub fn envelope_spectrum(spec: &PulseSpec, omega: &[f64]) -> Result<Vec<f64>, PulseError> {
    spec.validate()?;
    if omega.iter().any(|w| !w.is_finite()) || omega.windows(2).any(|w| w[0] > w[1]) {
        return Err(PulseError::InvalidFrequencyGrid);
    }
    match spec.shape {
        PulseShape::Rectangular => Ok(omega
            .iter()
            .map(|&dw| {
                let x = 0.5 * dw * spec.t_p;
                spec.t_p * sinc(x).powi(2)
            })
            .collect()),
        PulseShape::Gaussian => {
            let (lo, hi) = spec.support();
            let n = ((hi - lo) / (spec.t_p / 200.0)).ceil() as usize;
            let h = (hi - lo) / n as f64;
            Ok(omega
                .iter()
                .map(|&dw| {
                    let mut acc = C64::new(0.0, 0.0);
                    for i in 0..n {
                        let t = lo + (i as f64 + 0.5) * h;
                        let phase = C64::new(0.0, dw * t).exp();
                        acc += phase * spec.envelope_inside(t);
                    }
                    (acc * h).norm_sqr()
                })
                .collect())
        }
    }
}

/// Power spectrum of an already-discretized coefficient vector, using the
/// same bin centers and normalization as the simulator's output spectra.
pub fn grid_envelope_spectrum(coeffs: &[C64], grid: &TimeGrid, omega: &[f64]) -> Vec<f64> {
    omega
        .iter()
        .map(|&dw| {
            let mut acc = C64::new(0.0, 0.0);
            for (k, &c) in coeffs.iter().enumerate() {
                let t = grid.bin_center(k);
                acc += c * C64::new(0.0, dw * t).exp();
            }
            acc.norm_sqr() * grid.dt
        })
        .collect()
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(t_p: f64) -> PulseSpec {
        PulseSpec::new(PulseShape::Rectangular, t_p, 1).unwrap()
    }

    fn gauss(sigma: f64) -> PulseSpec {
        PulseSpec::new(PulseShape::Gaussian, sigma, 1).unwrap()
    }

    #[test]
    fn rectangular_sample_values() {
        let spec = rect(2.0);
        let v = sample_envelope(&spec, 1.0).unwrap();
        assert!((v.re - 1.0 / 2.0f64.sqrt()).abs() < 1e-12);
        assert!((v.re - 0.70711).abs() < 5e-6);
        assert_eq!(sample_envelope(&spec, 3.0).unwrap(), C64::new(0.0, 0.0));
        assert!(sample_envelope(&spec, f64::NAN).is_err());
        assert!(sample_envelope(&spec, -0.1).is_err());
    }

    #[test]
    fn gaussian_is_normalized_on_grid() {
        let spec = gauss(1.0);
        let grid = TimeGrid::for_pulse(&spec, 0.01, 2.0).unwrap();
        let total: f64 = (0..grid.n_bins)
            .map(|k| {
                sample_envelope(&spec, grid.bin_center(k))
                    .unwrap()
                    .norm_sqr()
                    * grid.dt
            })
            .sum();
        assert!((total - 1.0).abs() < 1e-6, "grid norm {total}");
    }

    #[test]
    fn discretize_rectangular_flat_coefficients() {
        let spec = rect(2.0);
        let grid = TimeGrid::new(0.01, 400).unwrap();
        let coeffs = discretize(&spec, &grid).unwrap();
        let expect = (0.01f64 / 2.0).sqrt();
        assert!((coeffs[10].re - expect).abs() < 1e-12);
        assert!((coeffs[10].re - 0.07071).abs() < 5e-6);
        assert_eq!(coeffs[250], C64::new(0.0, 0.0));
        let total: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn discretize_rejects_bad_grids() {
        let spec = rect(2.0);
        // Support not covered.
        let short = TimeGrid::new(0.01, 100).unwrap();
        assert!(matches!(
            discretize(&spec, &short),
            Err(PulseError::SupportNotCovered { .. })
        ));
        // Too coarse.
        let coarse = TimeGrid::new(0.5, 10).unwrap();
        assert!(matches!(
            discretize(&spec, &coarse),
            Err(PulseError::GridTooCoarse { .. })
        ));
        // Gaussian clipped at the grid edge.
        let spec_g = gauss(1.0);
        let clipped = TimeGrid::new(0.01, 700).unwrap();
        assert!(matches!(
            discretize(&spec_g, &clipped),
            Err(PulseError::SupportNotCovered { .. })
        ));
    }

    #[test]
    fn discretize_norm_is_stable_under_refinement() {
        for spec in [rect(2.0), gauss(0.7)] {
            let grid_a = TimeGrid::for_pulse(&spec, 0.02, 4.0).unwrap();
            let grid_b = TimeGrid::for_pulse(&spec, 0.01, 4.0).unwrap();
            for grid in [grid_a, grid_b] {
                let total: f64 = discretize(&spec, &grid)
                    .unwrap()
                    .iter()
                    .map(|c| c.norm_sqr())
                    .sum();
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rectangular_spectrum_closed_form() {
        let spec = rect(2.0);
        let omega = vec![0.0, std::f64::consts::PI];
        let s = envelope_spectrum(&spec, &omega).unwrap();
        assert!((s[0] - 2.0).abs() < 1e-12);
        assert!(s[1].abs() < 1e-12, "first sinc zero, got {}", s[1]);
    }

    #[test]
    fn rectangular_spectrum_matches_direct_quadrature_at_peak() {
        let spec = rect(2.0);
        let grid = TimeGrid::new(1e-4, 20_000).unwrap();
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..grid.n_bins {
            acc += sample_envelope(&spec, grid.bin_center(k)).unwrap() * grid.dt;
        }
        let direct = acc.norm_sqr();
        let closed = envelope_spectrum(&spec, &[0.0]).unwrap()[0];
        assert!(
            ((direct - closed) / closed).abs() < 1e-6,
            "direct {direct} vs closed {closed}"
        );
    }

    #[test]
    fn parseval_holds_for_all_shapes() {
        // Wide frequency window with resolution fine enough for the sinc lobes.
        for spec in [rect(2.0), rect(0.5), gauss(1.0)] {
            // The rectangular sinc² tail decays like 1/Δ², so the window has
            // to be wide; the closed form keeps that cheap. The Gaussian is
            // compact but each evaluation is a quadrature, so fewer points.
            let (w_max, n) = match spec.shape {
                PulseShape::Rectangular => (4000.0 / spec.t_p, 800_001usize),
                PulseShape::Gaussian => (14.0 / spec.t_p, 4_001usize),
            };
            let dw = 2.0 * w_max / (n - 1) as f64;
            let omega: Vec<f64> = (0..n).map(|i| -w_max + i as f64 * dw).collect();
            let s = envelope_spectrum(&spec, &omega).unwrap();
            let integral: f64 = s.iter().sum::<f64>() * dw / (2.0 * std::f64::consts::PI);
            assert!(
                (integral - 1.0).abs() < 1e-3,
                "parseval {integral} for {:?}",
                spec.shape
            );
        }
    }

    #[test]
    fn grid_spectrum_matches_closed_form_for_fine_bins() {
        let spec = rect(2.0);
        let grid = TimeGrid::for_pulse(&spec, 0.005, 1.0).unwrap();
        let coeffs = discretize(&spec, &grid).unwrap();
        let omega: Vec<f64> = (-20..=20).map(|i| i as f64 * 0.25).collect();
        let discrete = grid_envelope_spectrum(&coeffs, &grid, &omega);
        let closed = envelope_spectrum(&spec, &omega).unwrap();
        for (d, c) in discrete.iter().zip(closed.iter()) {
            assert!((d - c).abs() < 2e-4 * 2.0, "discrete {d} closed {c}");
        }
    }

    #[test]
    fn carrier_detuning_only_adds_phase() {
        let spec = rect(2.0).with_carrier_detuning(1.5);
        let grid = TimeGrid::for_pulse(&spec, 0.01, 1.0).unwrap();
        let coeffs = discretize(&spec, &grid).unwrap();
        let flat = (grid.dt / 2.0).sqrt();
        for (k, c) in coeffs.iter().enumerate() {
            let t = grid.bin_center(k);
            if t < 2.0 {
                assert!((c.norm() - flat).abs() < 1e-12);
                let expect = C64::new(0.0, -1.5 * t).exp() * flat;
                assert!((c - expect).norm() < 1e-12);
            }
        }
    }
}
