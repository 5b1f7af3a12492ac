//! Cross-layer physics checks that tie the engine, the observables and the
//! analytic layer together on moderately sized runs.

use fockpulse::experiment::{population_error, run_case, OracleKind, RunConfig};
use fockpulse::observables;
use fockpulse::oracle;
use fockpulse::pulse::{PulseShape, PulseSpec};

fn reference_run(compute_dynamical: bool) -> fockpulse::experiment::RunArtifacts {
    let pulse = PulseSpec::new(PulseShape::Rectangular, 2.0, 1).unwrap();
    let mut cfg = RunConfig::new("physics_ref", pulse);
    cfg.numerics.tail = 16.0;
    cfg.compute_dynamical = compute_dynamical;
    cfg.time_stride = 25;
    run_case(&cfg).unwrap()
}

/// Post-pulse spectral intensity rows follow the closed-form correlation
/// kernel: an exponentially decaying amplitude under a Lorentzian-like
/// frequency profile, compared here against direct quadrature of the
/// analytic correlation on the same τ lattice and truncation window.
#[test]
fn intensity_rows_match_analytic_kernel_quadrature() {
    let a = reference_run(false);
    let gm = a.correlation.as_ref().unwrap();
    let grid = &a.grid;
    let p = &a.config.system;
    let t_p = a.config.pulse.t_p;
    let dt = grid.dt;

    let omega = [0.0, 0.5, 1.0, 2.0];
    let rows: Vec<usize> = (0..grid.n_bins)
        .filter(|&j| {
            let t = grid.bin_center(j);
            t > t_p + 0.3 && t < t_p + 4.0
        })
        .step_by(40)
        .collect();
    let surface = observables::spectral_intensity(gm, &omega, &rows, 0.0).unwrap();

    for (ri, &j) in rows.iter().enumerate() {
        let tj = grid.bin_center(j);
        for (wi, &dw) in omega.iter().enumerate() {
            // Same one-sided τ sum over the analytic kernel.
            let mut expect = dt * oracle::flux_after_pulse(p, t_p, tj).unwrap();
            for k in j + 1..grid.n_bins {
                let tau = grid.bin_center(k) - tj;
                let corr = oracle::correlation_after_pulse(p, t_p, tj, tau).unwrap();
                expect += 2.0 * dt * (corr * num_complex::Complex64::new(0.0, dw * tau).exp()).re;
            }
            let got = surface.values[wi][ri];
            let rel = (got - expect).abs() / expect.abs().max(1e-6);
            assert!(
                rel < 0.02,
                "I(ω={dw}, t={tj:.2}) = {got:.5} vs analytic {expect:.5} (rel {rel:.3})"
            );
        }
    }

    // The long-delay profile is the emitter line: near ω_p the row value
    // follows flux(t)·γ/(Δ² + γ²/4) up to window truncation, so the ratio
    // between Δ = 0 and Δ = 2γ is (4Δ²+γ²)/γ² = 17.
    let at0 = surface.values[0][0];
    let at2 = surface.values[3][0];
    let ratio = at0 / at2;
    assert!(
        (ratio - 17.0).abs() < 2.0,
        "Lorentzian peak-to-wing ratio {ratio}"
    );
}

/// Detuned emitter and detuned carrier against the independent sector ODE:
/// nothing else in the suite drives the off-resonant machinery.
#[test]
fn detuned_run_matches_sector_ode() {
    let pulse = PulseSpec::new(PulseShape::Rectangular, 2.0, 1)
        .unwrap()
        .with_carrier_detuning(0.3);
    let mut cfg = RunConfig::new("detuned", pulse);
    cfg.system.delta = 0.7;
    cfg.numerics.tail = 12.0;
    cfg.compute_spectra = false;
    let a = run_case(&cfg).unwrap();
    assert_eq!(a.oracle_kind, Some(OracleKind::SectorOde));
    let err = population_error(&a).unwrap();
    assert!(err < 5e-3, "detuned population error {err}");
    // Detuning suppresses the excitation relative to resonance.
    let peak = a.population.peak();
    assert!(peak > 0.1 && peak < 0.79, "detuned peak {peak}");
}

#[test]
fn populations_stay_in_the_unit_interval() {
    let a = reference_run(false);
    for series in [Some(&a.population), a.population_oracle.as_ref()]
        .into_iter()
        .flatten()
    {
        for &v in &series.values {
            assert!(v >= -1e-12 && v <= 1.0 + 1e-12, "population {v} out of range");
        }
    }
}

/// The time-dependent spectrum of the interacting run carries population
/// signatures: mid-pulse it deviates from the bare-pulse running spectrum
/// by far more than the stationary spectra differ at the end.
#[test]
fn dynamical_spectrum_sees_the_population_while_stationary_does_not() {
    let a = reference_run(true);
    let mut ref_cfg = a.config.clone();
    ref_cfg.label = "physics_ref_no_tls".into();
    ref_cfg.emitter_on = false;
    let b = run_case(&ref_cfg).unwrap();

    let s_a = a.stationary.as_ref().unwrap();
    let s_b = b.stationary.as_ref().unwrap();
    let peak = s_a.peak();
    let stationary_gap = s_a
        .values
        .iter()
        .zip(&s_b.values)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0f64, f64::max)
        / peak;

    let st_a = a.s_of_t.as_ref().unwrap();
    let st_b = b.s_of_t.as_ref().unwrap();
    let mid = st_a.times.iter().position(|&t| t >= 1.5).unwrap();
    let center = st_a.omega.iter().position(|&w| w.abs() < 1e-9).unwrap();
    let mid_gap = (st_a.values[center][mid] - st_b.values[center][mid]).abs() / peak;

    assert!(stationary_gap < 0.01, "stationary gap {stationary_gap}");
    assert!(
        mid_gap > 10.0 * stationary_gap,
        "mid-pulse gap {mid_gap} vs stationary {stationary_gap}"
    );
}
