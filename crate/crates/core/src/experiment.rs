//! Config-driven experiment runs: pulse → engine → observables, with the
//! analytic layer attached wherever a closed form or the sector ODE applies.
//!
//! A [`RunConfig`] describes one simulation case; figure presets expand to
//! one or more cases (including emitter-off references). All physics is in
//! units of γ = 1.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mps::{build_input_mps, CollisionConfig, MpsError};
use crate::observables::{
    self, CorrelationMatrix, DynamicalSpectrum, ObservablesError, SpectrumResult,
};
use crate::oracle::{self, OracleError, PopulationSeries, SystemParams};
use crate::pulse::{self, PulseError, PulseShape, PulseSpec, TimeGrid};

/// Decay tail appended after the pulse support, in units of 1/γ.
pub const DEFAULT_TAIL: f64 = 8.0;
/// Longer tail used by the figure presets so the photon-number sum rules
/// close to ≤1e-6 (the emitter still holds ~3e-4 of a photon 8/γ after a
/// γt_p = 2 pulse).
pub const PRESET_TAIL: f64 = 16.0;
/// Default width parameter σ of the Gaussian pulse, in units of 1/γ.
pub const DEFAULT_GAUSSIAN_SIGMA: f64 = 1.0;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("`{field}` = {given} contradicts preset {preset} (expects {expected})")]
    PresetConflict {
        field: String,
        given: String,
        preset: String,
        expected: String,
    },
    #[error("unknown preset `{0}` (expected fig2a, fig2b, fig2c, fig2d, fig3, fig5 or none)")]
    UnknownPreset(String),
    #[error("sweep values must be monotone")]
    NonMonotoneSweep,
    #[error("no analytic oracle for this configuration: {0}")]
    NoOracle(String),
    #[error(transparent)]
    Pulse(#[from] PulseError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Engine(#[from] MpsError),
    #[error(transparent)]
    Observables(#[from] ObservablesError),
}

/// Numerical settings for one run.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Numerics {
    pub dt: f64,
    pub chi_max: usize,
    pub svd_tol: f64,
    /// Photons representable per bin; `None` resolves to `photon_number + 1`.
    pub bin_cutoff: Option<usize>,
    /// Decay tail after the pulse support, units of 1/γ.
    pub tail: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            dt: 0.01,
            chi_max: CollisionConfig::DEFAULT_CHI_MAX,
            svd_tol: CollisionConfig::DEFAULT_SVD_TOL,
            bin_cutoff: None,
            tail: DEFAULT_TAIL,
        }
    }
}

/// Frequency window for spectra, as detunings from the pulse carrier.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OmegaWindow {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for OmegaWindow {
    fn default() -> Self {
        // ±10γ covers the γt_p = 0.5 sinc side lobes and the γ-wide
        // nonlinear feature; 401 points resolve both.
        Self {
            min: -10.0,
            max: 10.0,
            points: 401,
        }
    }
}

impl OmegaWindow {
    pub fn grid(&self) -> Vec<f64> {
        let n = self.points.max(2);
        let step = (self.max - self.min) / (n - 1) as f64;
        (0..n).map(|i| self.min + i as f64 * step).collect()
    }
}

/// Fully resolved configuration for a single simulation case.
///
/// Scalar fields precede the nested tables so the struct serializes
/// directly to TOML.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub label: String,
    /// Emit every `time_stride`-th time sample in dynamical surfaces.
    pub time_stride: usize,
    /// Collision coupling on (false reruns the same pulse with the emitter
    /// switched off, the reference configuration).
    pub emitter_on: bool,
    /// Build the correlation matrix and stationary spectrum.
    pub compute_spectra: bool,
    /// Also build the S(ω,t) and I(ω,t) surfaces.
    pub compute_dynamical: bool,
    /// Keep the final matrix product state in the artifacts (for
    /// checkpointing).
    pub keep_final_state: bool,
    pub system: SystemParams,
    pub pulse: PulseSpec,
    pub numerics: Numerics,
    pub omega: OmegaWindow,
}

impl RunConfig {
    pub fn new(label: &str, pulse: PulseSpec) -> Self {
        Self {
            label: label.to_string(),
            time_stride: 20,
            emitter_on: true,
            compute_spectra: true,
            compute_dynamical: false,
            keep_final_state: false,
            system: SystemParams { gamma: 1.0, delta: 0.0 },
            pulse,
            numerics: Numerics::default(),
            omega: OmegaWindow::default(),
        }
    }

    pub fn grid(&self) -> Result<TimeGrid, PulseError> {
        TimeGrid::for_pulse(&self.pulse, self.numerics.dt, self.numerics.tail)
    }

    pub fn bin_cutoff(&self) -> usize {
        self.numerics
            .bin_cutoff
            .unwrap_or(self.pulse.photon_number as usize + 1)
    }

    pub fn collision_config(&self, grid: &TimeGrid) -> CollisionConfig {
        CollisionConfig {
            dt: grid.dt,
            n_bins: grid.n_bins,
            chi_max: self.numerics.chi_max,
            svd_tol: self.numerics.svd_tol,
            bin_cutoff: self.bin_cutoff(),
        }
    }
}

/// Figure-reproduction presets; each expands to the cases of the panel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Fig2a,
    Fig2b,
    Fig2c,
    Fig2d,
    Fig3,
    Fig5,
}

impl Preset {
    pub fn parse(name: &str) -> Result<Option<Self>, ExperimentError> {
        Ok(Some(match name.to_ascii_lowercase().as_str() {
            "fig2a" => Preset::Fig2a,
            "fig2b" => Preset::Fig2b,
            "fig2c" => Preset::Fig2c,
            "fig2d" => Preset::Fig2d,
            "fig3" => Preset::Fig3,
            "fig5" => Preset::Fig5,
            "none" => return Ok(None),
            other => return Err(ExperimentError::UnknownPreset(other.to_string())),
        }))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Fig2a => "fig2a",
            Preset::Fig2b => "fig2b",
            Preset::Fig2c => "fig2c",
            Preset::Fig2d => "fig2d",
            Preset::Fig3 => "fig3",
            Preset::Fig5 => "fig5",
        }
    }

    /// Panel cases: (label, photon number, γ·t_p, emitter on, dynamical).
    pub fn cases(&self) -> Vec<(String, u8, f64, bool, bool)> {
        match self {
            Preset::Fig2a => vec![("n1_tp2.0".into(), 1, 2.0, true, false)],
            Preset::Fig2b => vec![("n2_tp2.0".into(), 2, 2.0, true, false)],
            Preset::Fig2c => vec![
                ("n1_tp2.0".into(), 1, 2.0, true, false),
                ("n1_tp0.5".into(), 1, 0.5, true, false),
            ],
            Preset::Fig2d => vec![
                ("n2_tp2.0".into(), 2, 2.0, true, false),
                ("n2_tp0.5".into(), 2, 0.5, true, false),
            ],
            Preset::Fig3 => vec![
                ("n1_tp2.0".into(), 1, 2.0, true, true),
                ("n2_tp2.0".into(), 2, 2.0, true, true),
                ("n1_tp2.0_no_tls".into(), 1, 2.0, false, true),
            ],
            Preset::Fig5 => vec![
                ("n1_tp10.0".into(), 1, 10.0, true, true),
                ("n2_tp10.0".into(), 2, 10.0, true, true),
            ],
        }
    }

    /// Resolved run configurations for the preset (rectangular, resonant,
    /// γ = 1, preset tail).
    pub fn run_configs(&self) -> Vec<RunConfig> {
        self.cases()
            .into_iter()
            .map(|(label, n, t_p, emitter_on, dynamical)| {
                let pulse = PulseSpec::new(PulseShape::Rectangular, t_p, n).expect("preset pulse");
                let mut cfg = RunConfig::new(&label, pulse);
                cfg.numerics.tail = PRESET_TAIL;
                cfg.emitter_on = emitter_on;
                cfg.compute_dynamical = dynamical;
                cfg
            })
            .collect()
    }
}

/// Which analytic trace sits next to the simulated population.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OracleKind {
    ClosedForm,
    SectorOde,
    EmitterOff,
}

/// Stage wall times, bond growth and conservation diagnostics of one run.
#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata {
    pub label: String,
    pub photon_number: u8,
    pub emitter_on: bool,
    pub n_bins: usize,
    pub dt: f64,
    pub max_bond_dim: usize,
    pub truncation_error: f64,
    pub chi_overflows: usize,
    pub norm_drift: f64,
    pub excitation_drift: f64,
    /// `Σ n_R^out dt` over all output bins.
    pub flux_sum: f64,
    pub trace_photon_number: Option<f64>,
    pub coarse_dt_warning: bool,
    pub tail_warning: Option<bool>,
    pub evolve_seconds: f64,
    pub correlation_seconds: f64,
    pub spectra_seconds: f64,
    /// Desk choices that the source material leaves open, echoed so output
    /// consumers see them: Gaussian width convention and ω window.
    pub conventions: Conventions,
}

#[derive(Debug, Clone, Serialize)]
pub struct Conventions {
    /// Gaussian envelope: σ = t_p, centered at 5σ, truncated at |f| < 1e-8.
    pub gaussian_sigma: Option<f64>,
    pub omega_window: (f64, f64, usize),
    pub f_k_convention: &'static str,
}

/// Everything a run produces, in memory.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub config: RunConfig,
    pub grid: TimeGrid,
    /// Simulated emitter population at bin boundaries.
    pub population: PopulationSeries,
    pub population_oracle: Option<PopulationSeries>,
    pub oracle_kind: Option<OracleKind>,
    /// Output flux `n_R^out` at bin centers.
    pub flux: Vec<f64>,
    /// Post-pulse closed-form flux where defined (rectangular resonant).
    pub flux_oracle: Vec<Option<f64>>,
    pub correlation: Option<CorrelationMatrix>,
    /// Continuum input spectrum `n·|f(ω)|²`.
    pub input_spectrum: Option<Vec<f64>>,
    /// Same, from the discretized coefficients on the simulation grid.
    pub input_spectrum_grid: Option<Vec<f64>>,
    pub stationary: Option<SpectrumResult>,
    pub s_of_t: Option<DynamicalSpectrum>,
    pub intensity: Option<DynamicalSpectrum>,
    pub final_state: Option<crate::mps::TimeBinState>,
    pub metadata: RunMetadata,
}

/// Input-side bin occupations `n·|f_k|²` (what each pending bin holds
/// before its collision).
pub fn input_bin_occupations(coeffs: &[num_complex::Complex64], photon_number: u8) -> Vec<f64> {
    coeffs
        .iter()
        .map(|c| photon_number as f64 * c.norm_sqr())
        .collect()
}

/// Execute one fully resolved case.
pub fn run_case(cfg: &RunConfig) -> Result<RunArtifacts, ExperimentError> {
    cfg.pulse.validate()?;
    if !(cfg.system.gamma.is_finite() && cfg.system.gamma > 0.0) {
        return Err(ExperimentError::Config {
            field: "system.gamma".into(),
            message: format!("must be positive, got {}", cfg.system.gamma),
        });
    }
    let grid = cfg.grid()?;
    let coeffs = pulse::discretize(&cfg.pulse, &grid)?;
    let ccfg = cfg.collision_config(&grid);
    ccfg.validate(cfg.pulse.photon_number)?;

    let t0 = Instant::now();
    let mut state = build_input_mps(&coeffs, cfg.pulse.photon_number, &ccfg)?;
    let coupling = if cfg.emitter_on { cfg.system.gamma } else { 0.0 };
    let record = state.evolve_with_coupling(coupling, cfg.system.delta, &ccfg)?;
    let evolve_seconds = t0.elapsed().as_secs_f64();

    let population = observables::population_series(&record, &grid, &cfg.label);
    let flux: Vec<f64> = record.occupations.iter().map(|o| o / grid.dt).collect();
    let flux_sum: f64 = record.occupations.iter().sum();
    let pending = input_bin_occupations(&coeffs, cfg.pulse.photon_number);
    let excitation_drift =
        record.excitation_drift(&pending, cfg.pulse.photon_number as f64);

    let (population_oracle, oracle_kind) = population_oracle(cfg, &grid)?;
    let flux_oracle = flux_oracle(cfg, &grid);

    let mut correlation = None;
    let mut input_spectrum = None;
    let mut input_spectrum_grid = None;
    let mut stationary = None;
    let mut s_of_t = None;
    let mut intensity = None;
    let mut correlation_seconds = 0.0;
    let mut spectra_seconds = 0.0;
    let mut tail_warning = None;

    if cfg.compute_spectra {
        let t1 = Instant::now();
        let gm = CorrelationMatrix::from_state(&state, &grid)?;
        correlation_seconds = t1.elapsed().as_secs_f64();

        let omega = cfg.omega.grid();
        let n_phot = cfg.pulse.photon_number as f64;
        let t2 = Instant::now();
        let envelope = pulse::envelope_spectrum(&cfg.pulse, &omega)?;
        input_spectrum = Some(envelope.iter().map(|v| n_phot * v).collect());
        input_spectrum_grid = Some(
            pulse::grid_envelope_spectrum(&coeffs, &grid, &omega)
                .iter()
                .map(|v| n_phot * v)
                .collect(),
        );
        let s = observables::stationary_spectrum(&gm, &omega, cfg.pulse.carrier_detuning)?;
        tail_warning = Some(s.meta.tail_warning);
        if cfg.compute_dynamical {
            let stride = cfg.time_stride.max(1);
            let mut boundaries: Vec<usize> = (0..=grid.n_bins).step_by(stride).collect();
            if boundaries.last() != Some(&grid.n_bins) {
                boundaries.push(grid.n_bins);
            }
            let bins: Vec<usize> = (0..grid.n_bins).step_by(stride).collect();
            s_of_t = Some(observables::time_dependent_spectrum(
                &gm,
                &omega,
                &boundaries,
                cfg.pulse.carrier_detuning,
            )?);
            intensity = Some(observables::spectral_intensity(
                &gm,
                &omega,
                &bins,
                cfg.pulse.carrier_detuning,
            )?);
        }
        spectra_seconds = t2.elapsed().as_secs_f64();
        stationary = Some(s);
        correlation = Some(gm);
    }

    let metadata = RunMetadata {
        label: cfg.label.clone(),
        photon_number: cfg.pulse.photon_number,
        emitter_on: cfg.emitter_on,
        n_bins: grid.n_bins,
        dt: grid.dt,
        max_bond_dim: record.max_bond_dim,
        truncation_error: record.truncation_error,
        chi_overflows: record.chi_overflows,
        norm_drift: record.max_norm_drift(),
        excitation_drift,
        flux_sum,
        trace_photon_number: correlation.as_ref().map(|g| g.trace_photon_number()),
        coarse_dt_warning: record.coarse_dt_warning,
        tail_warning,
        evolve_seconds,
        correlation_seconds,
        spectra_seconds,
        conventions: Conventions {
            gaussian_sigma: match cfg.pulse.shape {
                PulseShape::Gaussian => Some(cfg.pulse.t_p),
                PulseShape::Rectangular => None,
            },
            omega_window: (cfg.omega.min, cfg.omega.max, cfg.omega.points),
            f_k_convention: "f_k = f(t_k + dt/2)·sqrt(dt), renormalized",
        },
    };

    Ok(RunArtifacts {
        config: cfg.clone(),
        grid,
        population,
        population_oracle,
        oracle_kind,
        flux,
        flux_oracle,
        correlation,
        input_spectrum,
        input_spectrum_grid,
        stationary,
        s_of_t,
        intensity,
        final_state: if cfg.keep_final_state { Some(state) } else { None },
        metadata,
    })
}

/// Rerun a case with the emitter switched off (same pulse, same grid).
pub fn compare_no_tls(cfg: &RunConfig) -> Result<RunArtifacts, ExperimentError> {
    let mut reference = cfg.clone();
    reference.emitter_on = false;
    reference.label = format!("{}_no_tls", cfg.label);
    run_case(&reference)
}

fn population_oracle(
    cfg: &RunConfig,
    grid: &TimeGrid,
) -> Result<(Option<PopulationSeries>, Option<OracleKind>), ExperimentError> {
    if !cfg.emitter_on {
        return Ok((
            Some(PopulationSeries {
                grid: *grid,
                values: vec![0.0; grid.n_bins + 1],
                label: "emitter off".into(),
            }),
            Some(OracleKind::EmitterOff),
        ));
    }
    let resonant_rect = cfg.pulse.shape == PulseShape::Rectangular
        && cfg.system.delta == 0.0
        && cfg.pulse.carrier_detuning == 0.0;
    if resonant_rect {
        let f = match cfg.pulse.photon_number {
            1 => oracle::n_tls_one_photon,
            _ => oracle::n_tls_two_photon,
        };
        let values = (0..=grid.n_bins)
            .map(|k| f(&cfg.system, cfg.pulse.t_p, grid.boundary(k)))
            .collect::<Result<Vec<_>, _>>()?;
        return Ok((
            Some(PopulationSeries {
                grid: *grid,
                values,
                label: "closed form".into(),
            }),
            Some(OracleKind::ClosedForm),
        ));
    }
    if cfg.pulse.photon_number == 1 {
        let sol = oracle::propagate_one_photon_sector(&cfg.pulse, &cfg.system, grid)?;
        return Ok((Some(sol.population()), Some(OracleKind::SectorOde)));
    }
    Ok((None, None))
}

fn flux_oracle(cfg: &RunConfig, grid: &TimeGrid) -> Vec<Option<f64>> {
    let applicable = cfg.emitter_on
        && cfg.pulse.shape == PulseShape::Rectangular
        && cfg.system.delta == 0.0
        && cfg.pulse.carrier_detuning == 0.0;
    (0..grid.n_bins)
        .map(|k| {
            let t = grid.bin_center(k);
            if !applicable || t <= cfg.pulse.t_p {
                return None;
            }
            // Chiral identity: post-pulse flux is γ·n_TLS for either photon
            // number.
            let n = match cfg.pulse.photon_number {
                1 => oracle::n_tls_one_photon(&cfg.system, cfg.pulse.t_p, t),
                _ => oracle::n_tls_two_photon(&cfg.system, cfg.pulse.t_p, t),
            };
            n.ok().map(|v| cfg.system.gamma * v)
        })
        .collect()
}

/// Convergence sweep axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Dt,
    Chi,
    Cutoff,
}

impl SweepAxis {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dt" => Some(SweepAxis::Dt),
            "chi" | "chi_max" => Some(SweepAxis::Chi),
            "cutoff" | "bin_cutoff" => Some(SweepAxis::Cutoff),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Dt => "dt",
            SweepAxis::Chi => "chi_max",
            SweepAxis::Cutoff => "bin_cutoff",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub setting: f64,
    /// Max abs deviation of the simulated population from the oracle.
    pub error: f64,
    pub max_bond_dim: usize,
    pub truncation_error: f64,
    pub wall_seconds: f64,
}

/// Rerun the case per axis value and report the population error against
/// the analytic oracle.
pub fn sweep_convergence(
    base: &RunConfig,
    axis: SweepAxis,
    values: &[f64],
) -> Result<Vec<SweepPoint>, ExperimentError> {
    if values.len() < 2 {
        return Err(ExperimentError::Config {
            field: "sweep.values".into(),
            message: "need at least two values".into(),
        });
    }
    let increasing = values.windows(2).all(|w| w[1] > w[0]);
    let decreasing = values.windows(2).all(|w| w[1] < w[0]);
    if !increasing && !decreasing {
        return Err(ExperimentError::NonMonotoneSweep);
    }
    let mut points = Vec::with_capacity(values.len());
    for &v in values {
        let mut cfg = base.clone();
        cfg.compute_spectra = false;
        cfg.compute_dynamical = false;
        match axis {
            SweepAxis::Dt => cfg.numerics.dt = v,
            SweepAxis::Chi => cfg.numerics.chi_max = v.round() as usize,
            SweepAxis::Cutoff => cfg.numerics.bin_cutoff = Some(v.round() as usize),
        }
        let t0 = Instant::now();
        let artifacts = run_case(&cfg)?;
        let wall = t0.elapsed().as_secs_f64();
        let oracle_series = artifacts.population_oracle.as_ref().ok_or_else(|| {
            ExperimentError::NoOracle(format!(
                "{:?} pulse with {} photons off-oracle",
                cfg.pulse.shape, cfg.pulse.photon_number
            ))
        })?;
        let error = artifacts
            .population
            .values
            .iter()
            .zip(&oracle_series.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        points.push(SweepPoint {
            setting: v,
            error,
            max_bond_dim: artifacts.metadata.max_bond_dim,
            truncation_error: artifacts.metadata.truncation_error,
            wall_seconds: wall,
        });
    }
    Ok(points)
}

/// Max abs deviation between a simulated population series and its oracle.
pub fn population_error(artifacts: &RunArtifacts) -> Option<f64> {
    let oracle_series = artifacts.population_oracle.as_ref()?;
    Some(
        artifacts
            .population
            .values
            .iter()
            .zip(&oracle_series.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desk_config(label: &str, n: u8, t_p: f64) -> RunConfig {
        let pulse = PulseSpec::new(PulseShape::Rectangular, t_p, n).unwrap();
        let mut cfg = RunConfig::new(label, pulse);
        cfg.numerics.dt = 0.05;
        cfg.numerics.tail = 10.0;
        cfg.omega.points = 81;
        cfg
    }

    #[test]
    fn preset_cases_match_the_panels() {
        assert_eq!(Preset::Fig2a.cases().len(), 1);
        assert_eq!(Preset::Fig2c.cases()[1].2, 0.5);
        assert_eq!(Preset::Fig2d.cases()[0].1, 2);
        let fig3 = Preset::Fig3.cases();
        assert_eq!(fig3.len(), 3);
        assert!(!fig3[2].3, "third fig3 case is the emitter-off reference");
        assert_eq!(Preset::Fig5.cases()[0].2, 10.0);
        assert!(Preset::parse("fig5").unwrap().is_some());
        assert!(Preset::parse("none").unwrap().is_none());
        assert!(Preset::parse("fig9").is_err());
    }

    #[test]
    fn desk_scale_run_is_consistent() {
        let cfg = desk_config("desk", 1, 2.0);
        let artifacts = run_case(&cfg).unwrap();
        assert_eq!(artifacts.oracle_kind, Some(OracleKind::ClosedForm));
        let err = population_error(&artifacts).unwrap();
        // Coarse dt = 0.05: first-order collision error stays within ~2%.
        assert!(err < 0.02, "population error {err}");
        assert!((artifacts.metadata.flux_sum
            + artifacts.population.values.last().unwrap()
            - 1.0)
            .abs()
            < 1e-6);
        assert!(artifacts.metadata.excitation_drift < 1e-8);
        let trace = artifacts.metadata.trace_photon_number.unwrap();
        assert!((trace - artifacts.metadata.flux_sum).abs() < 1e-9);
        let s = artifacts.stationary.as_ref().unwrap();
        assert!(s.peak() > 1.5 && s.peak() < 2.5);
    }

    #[test]
    fn emitter_off_reference_is_transparent() {
        let mut cfg = desk_config("ref", 1, 2.0);
        cfg.compute_dynamical = true;
        cfg.time_stride = 10;
        let artifacts = compare_no_tls(&cfg).unwrap();
        assert!(artifacts.population.values.iter().all(|&v| v == 0.0));
        let s = artifacts.stationary.as_ref().unwrap();
        let input_grid = artifacts.input_spectrum_grid.as_ref().unwrap();
        let peak = s.peak();
        for (a, b) in s.values.iter().zip(input_grid) {
            assert!((a - b).abs() < 1e-9 * peak, "{a} vs {b}");
        }
        // Dynamical reference spectrum dips negative mid-pulse.
        let st = artifacts.s_of_t.as_ref().unwrap();
        assert!(st.min_value() < -0.01 * peak);
        assert_eq!(artifacts.metadata.label, "ref_no_tls");
    }

    #[test]
    fn sweep_requires_monotone_values_and_tracks_error() {
        let cfg = desk_config("sweep", 1, 2.0);
        assert!(matches!(
            sweep_convergence(&cfg, SweepAxis::Dt, &[0.05, 0.025, 0.1]),
            Err(ExperimentError::NonMonotoneSweep)
        ));
        let points = sweep_convergence(&cfg, SweepAxis::Dt, &[0.1, 0.05, 0.025]).unwrap();
        assert_eq!(points.len(), 3);
        assert!(points[0].error > points[2].error);
    }

    #[test]
    fn cutoff_is_inert_in_the_one_photon_sector() {
        let base = desk_config("cut", 1, 2.0);
        let points = sweep_convergence(&base, SweepAxis::Cutoff, &[1.0, 2.0]).unwrap();
        assert!((points[0].error - points[1].error).abs() < 1e-10);
    }
}
