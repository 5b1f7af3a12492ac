//! The named verification suite: every criterion the project promises is a
//! check here, evaluated against the analytic layer at reference settings.
//! The CLI `validate` subcommand and the acceptance test target both run
//! [`acceptance_suite`]; per-run reports reuse the same check type.

use std::time::Instant;

use serde::Serialize;

use crate::experiment::{
    self, population_error, run_case, OracleKind, RunArtifacts, RunConfig, PRESET_TAIL,
};
use crate::observables;
use crate::oracle;
use crate::pulse::{PulseShape, PulseSpec};

/// One named check with its oracle/simulated values and verdict.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub description: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulated: Option<f64>,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    pub fn line(&self) -> String {
        format!(
            "{} {} — {} ({})",
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.description,
            self.detail
        )
    }
}

/// Machine-readable validation report (schema_version 1).
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub schema_version: u32,
    pub generator: String,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
    pub metadata: serde_json::Value,
}

impl ValidationReport {
    pub fn new(checks: Vec<CheckResult>, metadata: serde_json::Value) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        Self {
            schema_version: 1,
            generator: format!("fockpulse {}", env!("CARGO_PKG_VERSION")),
            passed,
            checks,
            metadata,
        }
    }

    pub fn lines(&self) -> Vec<String> {
        self.checks.iter().map(|c| c.line()).collect()
    }

    pub fn failed_names(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect()
    }
}

fn check(
    name: &str,
    description: &str,
    oracle: Option<f64>,
    simulated: Option<f64>,
    tolerance: f64,
    passed: bool,
    detail: String,
) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        description: description.to_string(),
        oracle,
        simulated,
        tolerance,
        passed,
        detail,
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Full width at half maximum of a curve around its maximum, by linear
/// interpolation of the half crossings. Returns `None` when a flank never
/// drops below half within the grid.
fn fwhm(omega: &[f64], values: &[f64]) -> Option<f64> {
    let (imax, &peak) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())?;
    if peak <= 0.0 {
        return None;
    }
    let half = 0.5 * peak;
    let mut left = None;
    for i in (1..=imax).rev() {
        if values[i - 1] < half && values[i] >= half {
            let frac = (half - values[i - 1]) / (values[i] - values[i - 1]);
            left = Some(omega[i - 1] + frac * (omega[i] - omega[i - 1]));
            break;
        }
    }
    let mut right = None;
    for i in imax..values.len() - 1 {
        if values[i] >= half && values[i + 1] < half {
            let frac = (values[i] - half) / (values[i] - values[i + 1]);
            right = Some(omega[i] + frac * (omega[i + 1] - omega[i]));
            break;
        }
    }
    Some(right? - left?)
}

struct TimedRun {
    artifacts: RunArtifacts,
    wall_seconds: f64,
}

fn timed(cfg: &RunConfig) -> TimedRun {
    let t0 = Instant::now();
    let artifacts = run_case(cfg).expect("reference run failed");
    TimedRun {
        artifacts,
        wall_seconds: t0.elapsed().as_secs_f64(),
    }
}

fn reference_config(label: &str, n: u8, t_p: f64) -> RunConfig {
    let pulse = PulseSpec::new(PulseShape::Rectangular, t_p, n).unwrap();
    let mut cfg = RunConfig::new(label, pulse);
    cfg.numerics.tail = PRESET_TAIL;
    cfg
}

/// Run the complete reference-settings verification suite (A1–A10).
pub fn acceptance_suite() -> ValidationReport {
    let mut checks = Vec::new();

    // Shared reference runs.
    let mut fig2a_cfg = reference_config("fig2a", 1, 2.0);
    fig2a_cfg.compute_dynamical = true;
    fig2a_cfg.time_stride = 50;
    let fig2a = timed(&fig2a_cfg);

    let fig2b_cfg = reference_config("fig2b", 2, 2.0);
    let fig2b = timed(&fig2b_cfg);

    let tp05_n1 = timed(&reference_config("n1_tp0.5", 1, 0.5));
    let tp05_n2 = timed(&reference_config("n2_tp0.5", 2, 0.5));

    let gauss_cfg = {
        let pulse = PulseSpec::new(
            PulseShape::Gaussian,
            experiment::DEFAULT_GAUSSIAN_SIGMA,
            1,
        )
        .unwrap();
        let mut cfg = RunConfig::new("gaussian", pulse);
        cfg.numerics.tail = PRESET_TAIL;
        cfg
    };
    let gauss = timed(&gauss_cfg);

    let mut no_tls_cfg = reference_config("no_tls", 1, 2.0);
    no_tls_cfg.emitter_on = false;
    no_tls_cfg.compute_dynamical = true;
    no_tls_cfg.time_stride = 20;
    let no_tls = timed(&no_tls_cfg);

    checks.push(a1_one_photon_population(&fig2a));
    checks.push(a2_two_photon_population(&fig2a, &fig2b));
    checks.push(a3_one_photon_cancellation(&fig2a, &tp05_n1, &gauss));
    checks.push(a4_two_photon_nonlinearity(&fig2b, &tp05_n2));
    checks.push(a5_spectral_identity(&fig2a));
    checks.push(a6_two_time_oracle(&fig2a));
    checks.push(a7_conservation(&fig2a, &fig2b));
    checks.push(a8_independent_oracle(&gauss));
    checks.push(a9_reference_panels(&no_tls));
    checks.push(a10_convergence(&fig2a));

    let metadata = serde_json::json!({
        "runs": [
            fig2a.artifacts.metadata,
            fig2b.artifacts.metadata,
            tp05_n1.artifacts.metadata,
            tp05_n2.artifacts.metadata,
            gauss.artifacts.metadata,
            no_tls.artifacts.metadata,
        ],
        "wall_seconds": {
            "fig2a": fig2a.wall_seconds,
            "fig2b": fig2b.wall_seconds,
            "n1_tp0.5": tp05_n1.wall_seconds,
            "n2_tp0.5": tp05_n2.wall_seconds,
            "gaussian": gauss.wall_seconds,
            "no_tls": no_tls.wall_seconds,
        },
    });
    ValidationReport::new(checks, metadata)
}

fn a1_one_photon_population(fig2a: &TimedRun) -> CheckResult {
    let a = &fig2a.artifacts;
    let err = population_error(a).unwrap();
    let peak_expect = oracle::n_tls_one_photon(&a.config.system, 2.0, 2.0).unwrap();
    let peak = a.population.peak();
    let runtime = a.metadata.evolve_seconds;
    let passed = err < 5e-3
        && (peak - peak_expect).abs() <= 0.01 * peak_expect
        && runtime < 10.0
        && a.oracle_kind == Some(OracleKind::ClosedForm);
    check(
        "A1",
        "1-photon population matches the closed form",
        Some(peak_expect),
        Some(peak),
        5e-3,
        passed,
        format!("max abs err {err:.2e}, peak {peak:.5} vs {peak_expect:.5}, evolve {runtime:.2}s"),
    )
}

fn a2_two_photon_population(fig2a: &TimedRun, fig2b: &TimedRun) -> CheckResult {
    let a = &fig2b.artifacts;
    let err = population_error(a).unwrap();
    // The reference value is the population at the end of the pulse; the
    // trace itself crests ~5% higher slightly earlier.
    let at_tp_expect = oracle::n_tls_two_photon(&a.config.system, 2.0, 2.0).unwrap();
    let k_tp = (2.0 / a.grid.dt).round() as usize;
    let at_tp = a.population.values[k_tp];
    let peak = a.population.peak();
    let peak_one = fig2a.artifacts.population.peak();
    let runtime = a.metadata.evolve_seconds;
    let passed = err < 5e-3
        && (at_tp - at_tp_expect).abs() <= 0.01 * at_tp_expect
        && peak_one > peak
        && runtime < 30.0;
    check(
        "A2",
        "2-photon population matches the closed form and sits below 1-photon",
        Some(at_tp_expect),
        Some(at_tp),
        5e-3,
        passed,
        format!(
            "max abs err {err:.2e}, n(t_p) {at_tp:.5} vs {at_tp_expect:.5}, peaks: 1-photon {peak_one:.5} > 2-photon {peak:.5}, evolve {runtime:.2}s"
        ),
    )
}

fn cancellation_error(run: &TimedRun) -> f64 {
    let a = &run.artifacts;
    let s = a.stationary.as_ref().unwrap();
    let input = a.input_spectrum.as_ref().unwrap();
    let peak = input.iter().cloned().fold(0.0, f64::max);
    max_abs_diff(&s.values, input) / peak
}

fn a3_one_photon_cancellation(fig2a: &TimedRun, tp05: &TimedRun, gauss: &TimedRun) -> CheckResult {
    let errs = [
        ("tp2.0", cancellation_error(fig2a)),
        ("tp0.5", cancellation_error(tp05)),
        ("gaussian", cancellation_error(gauss)),
    ];
    let worst = errs.iter().map(|(_, e)| *e).fold(0.0, f64::max);
    let spectra_seconds: f64 = [fig2a, tp05, gauss]
        .iter()
        .map(|r| {
            r.artifacts.metadata.evolve_seconds
                + r.artifacts.metadata.correlation_seconds
                + r.artifacts.metadata.spectra_seconds
        })
        .sum();
    let passed = worst <= 0.01 && spectra_seconds < 120.0;
    check(
        "A3",
        "1-photon stationary spectrum equals the input spectrum for all pulse shapes",
        None,
        Some(worst),
        0.01,
        passed,
        format!(
            "peak-relative sup errors: {} = {:.2e}, {} = {:.2e}, {} = {:.2e}; total {spectra_seconds:.1}s",
            errs[0].0, errs[0].1, errs[1].0, errs[1].1, errs[2].0, errs[2].1
        ),
    )
}

fn nonlinear_feature(run: &TimedRun) -> (f64, Option<f64>) {
    let a = &run.artifacts;
    let s = a.stationary.as_ref().unwrap();
    let input = a.input_spectrum.as_ref().unwrap();
    let excess: Vec<f64> = s.values.iter().zip(input).map(|(a, b)| a - b).collect();
    let center = s.omega.iter().position(|&w| w.abs() < 1e-9).unwrap();
    // Restrict the width measurement to the central feature region.
    let region: Vec<usize> = (0..s.omega.len())
        .filter(|&i| s.omega[i].abs() <= 4.0)
        .collect();
    let omega_r: Vec<f64> = region.iter().map(|&i| s.omega[i]).collect();
    let excess_r: Vec<f64> = region.iter().map(|&i| excess[i]).collect();
    (excess[center], fwhm(&omega_r, &excess_r))
}

fn a4_two_photon_nonlinearity(tp2: &TimedRun, tp05: &TimedRun) -> CheckResult {
    let (e2, w2) = nonlinear_feature(tp2);
    let (e05, w05) = nonlinear_feature(tp05);
    let widths_ok = |w: Option<f64>| w.map(|w| (0.5..=2.0).contains(&w)).unwrap_or(false);
    let passed = e2 > 0.0 && e05 > 0.0 && widths_ok(w2) && widths_ok(w05);
    check(
        "A4",
        "2-photon spectra grow a γ-wide central feature above the input spectrum",
        None,
        Some(e2),
        0.0,
        passed,
        format!(
            "excess at ω_p: tp2.0 = {e2:.4}, tp0.5 = {e05:.4}; FWHM tp2.0 = {:?}, tp0.5 = {:?} (need 0.5γ–2γ)",
            w2, w05
        ),
    )
}

fn a5_spectral_identity(fig2a: &TimedRun) -> CheckResult {
    let a = &fig2a.artifacts;
    let gm = a.correlation.as_ref().unwrap();
    let s = a.stationary.as_ref().unwrap();
    let integral =
        observables::intensity_time_integral(gm, &s.omega, a.config.pulse.carrier_detuning)
            .unwrap();
    let final_col = a.s_of_t.as_ref().unwrap().final_column();
    let mut worst: f64 = 0.0;
    for i in 0..s.omega.len() {
        let sv = s.values[i];
        let rel1 = (sv - integral[i]).abs() / sv.abs().max(integral[i].abs()).max(1e-300);
        let rel2 = (sv - final_col[i]).abs() / sv.abs().max(final_col[i].abs()).max(1e-300);
        worst = worst.max(rel1).max(rel2);
    }
    let passed = worst <= 1e-6;
    check(
        "A5",
        "∫I(ω,t)dt = S(ω) = S(ω,t→∞) at every ω grid point",
        None,
        Some(worst),
        1e-6,
        passed,
        format!("worst pointwise relative deviation {worst:.2e}"),
    )
}

fn a6_two_time_oracle(fig2a: &TimedRun) -> CheckResult {
    let a = &fig2a.artifacts;
    let gm = a.correlation.as_ref().unwrap();
    let t_p = a.config.pulse.t_p;
    let p = &a.config.system;
    let grid = &a.grid;
    let block: Vec<usize> = (0..grid.n_bins)
        .filter(|&j| {
            let t = grid.bin_center(j);
            t > t_p + 0.25 && t < t_p + 6.0
        })
        .collect();
    let mut worst_offdiag: f64 = 0.0;
    for (ji, &j) in block.iter().enumerate().step_by(3) {
        let tj = grid.bin_center(j);
        for &k in block.iter().skip(ji).step_by(3) {
            let tk = grid.bin_center(k);
            let expect = oracle::correlation_after_pulse(p, t_p, tj, tk - tj).unwrap();
            let rel = (gm.g[[j, k]] - expect).norm() / expect.norm();
            worst_offdiag = worst_offdiag.max(rel);
        }
    }
    let mut worst_diag: f64 = 0.0;
    for &j in &block {
        let tj = grid.bin_center(j);
        let eq9 = oracle::flux_after_pulse(p, t_p, tj).unwrap();
        let gamma_n = p.gamma * oracle::n_tls_one_photon(p, t_p, tj).unwrap();
        debug_assert!((eq9 - gamma_n).abs() < 1e-12 * eq9);
        let rel = (gm.g[[j, j]].re - eq9).abs() / eq9;
        worst_diag = worst_diag.max(rel);
    }
    let passed = worst_offdiag < 0.02 && worst_diag < 0.02;
    check(
        "A6",
        "post-pulse correlations match the closed form, diagonal equals γ·n_TLS",
        None,
        Some(worst_offdiag.max(worst_diag)),
        0.02,
        passed,
        format!(
            "relative errors: off-diagonal {worst_offdiag:.2e}, diagonal {worst_diag:.2e} over {} post-pulse bins",
            block.len()
        ),
    )
}

fn a7_conservation(fig2a: &TimedRun, fig2b: &TimedRun) -> CheckResult {
    let mut detail = String::new();
    let mut passed = true;
    for run in [fig2a, fig2b] {
        let m = &run.artifacts.metadata;
        let n = m.photon_number as f64;
        let flux_gap = (m.flux_sum - n).abs();
        let ok = m.excitation_drift <= 1e-8 && m.norm_drift < 1e-6 && flux_gap <= 1e-4;
        passed &= ok;
        detail.push_str(&format!(
            "[{}] excitation drift {:.1e}, norm drift {:.1e}, |Σ n_out dt − n| {:.1e}; ",
            m.label, m.excitation_drift, m.norm_drift, flux_gap
        ));
    }
    check(
        "A7",
        "excitation conserved, norm stable, output flux sums to the photon number",
        None,
        None,
        1e-4,
        passed,
        detail.trim_end().to_string(),
    )
}

fn a8_independent_oracle(gauss: &TimedRun) -> CheckResult {
    // RK4 against the closed form on the rectangular reference.
    let p = oracle::SystemParams::new(1.0).unwrap();
    let spec = PulseSpec::new(PulseShape::Rectangular, 2.0, 1).unwrap();
    let grid = crate::pulse::TimeGrid::for_pulse(&spec, 0.01, PRESET_TAIL).unwrap();
    let sol = oracle::propagate_one_photon_sector(&spec, &p, &grid).unwrap();
    let mut rk4_err: f64 = 0.0;
    for (k, v) in sol.population().values.iter().enumerate() {
        let exact = oracle::n_tls_one_photon(&p, 2.0, grid.boundary(k)).unwrap();
        rk4_err = rk4_err.max((v - exact).abs());
    }
    // RK4 against the engine where no closed form exists (Gaussian pulse).
    let mps_vs_ode = population_error(&gauss.artifacts).unwrap();
    let is_ode = gauss.artifacts.oracle_kind == Some(OracleKind::SectorOde);
    let passed = rk4_err < 1e-6 && mps_vs_ode < 5e-3 && is_ode;
    check(
        "A8",
        "sector ODE matches the closed form and the engine on a Gaussian pulse",
        Some(0.0),
        Some(rk4_err),
        1e-6,
        passed,
        format!("RK4 vs closed form {rk4_err:.2e}; engine vs RK4 (Gaussian) {mps_vs_ode:.2e}"),
    )
}

fn a9_reference_panels(no_tls: &TimedRun) -> CheckResult {
    let a = &no_tls.artifacts;
    let pop_max = a
        .population
        .values
        .iter()
        .cloned()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let s = a.stationary.as_ref().unwrap();
    let input_grid = a.input_spectrum_grid.as_ref().unwrap();
    let peak = s.peak();
    let spec_err = max_abs_diff(&s.values, input_grid) / peak;
    let min_dyn = a.s_of_t.as_ref().unwrap().min_value();
    let passed = pop_max <= 1e-12 && spec_err <= 1e-6 && min_dyn < -0.01 * peak;
    check(
        "A9",
        "emitter-off reference: zero population, exact input spectrum, negative S(ω,t)",
        None,
        Some(min_dyn),
        1e-6,
        passed,
        format!(
            "max population {pop_max:.1e}, spectrum deviation {spec_err:.1e} of peak, min S(ω,t) {min_dyn:.3}"
        ),
    )
}

fn a10_convergence(fig2a: &TimedRun) -> CheckResult {
    let base = &fig2a.artifacts.config;
    let mut errors = Vec::new();
    for dt in [0.02, 0.01, 0.005] {
        if (dt - 0.01f64).abs() < 1e-12 {
            errors.push(population_error(&fig2a.artifacts).unwrap());
            continue;
        }
        let mut cfg = base.clone();
        cfg.label = format!("fig2a_dt{dt}");
        cfg.numerics.dt = dt;
        cfg.compute_spectra = false;
        cfg.compute_dynamical = false;
        let run = run_case(&cfg).expect("dt sweep run");
        errors.push(population_error(&run).unwrap());
    }
    let r1 = errors[0] / errors[1];
    let r2 = errors[1] / errors[2];
    let ratios_ok = (1.5..=2.5).contains(&r1) && (1.5..=2.5).contains(&r2);

    // Invariance under cutoff and bond-dimension headroom.
    let variant = |f: &dyn Fn(&mut RunConfig)| -> Vec<f64> {
        let mut cfg = base.clone();
        cfg.compute_spectra = false;
        cfg.compute_dynamical = false;
        f(&mut cfg);
        run_case(&cfg).expect("variant run").population.values
    };
    let pop_ref = variant(&|cfg: &mut RunConfig| {
        cfg.label = "fig2a_plain".into();
    });
    let pop_cutoff = variant(&|cfg: &mut RunConfig| {
        cfg.label = "fig2a_cutoff3".into();
        cfg.numerics.bin_cutoff = Some(3);
    });
    let pop_chi = variant(&|cfg: &mut RunConfig| {
        cfg.label = "fig2a_chi8".into();
        cfg.numerics.chi_max = 8;
    });
    let cutoff_dev = max_abs_diff(&pop_ref, &pop_cutoff);
    let chi_dev = max_abs_diff(&pop_ref, &pop_chi);
    let invariance_ok = cutoff_dev <= 1e-8 && chi_dev <= 1e-8;

    let passed = ratios_ok && invariance_ok;
    check(
        "A10",
        "first-order convergence in dt; invariance under cutoff and χ headroom",
        None,
        Some(r1),
        2.5,
        passed,
        format!(
            "errors {:.2e}/{:.2e}/{:.2e}, ratios {r1:.2}, {r2:.2}; cutoff dev {cutoff_dev:.1e}, chi dev {chi_dev:.1e}",
            errors[0], errors[1], errors[2]
        ),
    )
}

/// Per-run consistency report for arbitrary user configurations: every
/// check that applies to the artifacts produced.
pub fn run_report(artifact_sets: &[RunArtifacts]) -> ValidationReport {
    let mut checks = Vec::new();
    for a in artifact_sets {
        let label = &a.metadata.label;
        let n = a.metadata.photon_number as f64;
        if let Some(err) = population_error(a) {
            // The 5e-3 reference tolerance is stated at dt = 0.01; the
            // collision scheme is first order, so scale for coarser grids.
            let tol = 5e-3 * (a.metadata.dt / 0.01).max(1.0);
            checks.push(check(
                &format!("{label}/population_vs_oracle"),
                "simulated population against the analytic trace",
                None,
                Some(err),
                tol,
                err < tol,
                format!("max abs err {err:.2e} (oracle: {:?})", a.oracle_kind.unwrap()),
            ));
        }
        let m = &a.metadata;
        checks.push(check(
            &format!("{label}/excitation_conservation"),
            "total excitation number constant over the run",
            Some(n),
            Some(n + m.excitation_drift),
            1e-8,
            m.excitation_drift <= 1e-8,
            format!("max drift {:.1e}", m.excitation_drift),
        ));
        checks.push(check(
            &format!("{label}/norm_drift"),
            "state norm stays within the truncation budget",
            Some(1.0),
            Some(1.0 + m.norm_drift),
            1e-6,
            m.norm_drift < 1e-6,
            format!("max |1 − ‖ψ‖| = {:.1e}", m.norm_drift),
        ));
        if a.config.emitter_on {
            let flux_gap = (m.flux_sum - n).abs();
            checks.push(check(
                &format!("{label}/flux_sum_rule"),
                "output flux integrates to the photon number",
                Some(n),
                Some(m.flux_sum),
                1e-4,
                flux_gap <= 1e-4,
                format!("Σ n_out dt = {:.8}", m.flux_sum),
            ));
        }
        if let Some(trace) = m.trace_photon_number {
            checks.push(check(
                &format!("{label}/trace_sum_rule"),
                "correlation-matrix trace equals the photon number",
                Some(n),
                Some(trace),
                1e-4,
                (trace - n).abs() <= 1e-4,
                format!("Σ G[j][j] dt = {trace:.8}"),
            ));
        }
        if let (Some(s), Some(st)) = (&a.stationary, &a.s_of_t) {
            let final_col = st.final_column();
            let mut worst: f64 = 0.0;
            for i in 0..s.values.len() {
                let rel = (s.values[i] - final_col[i]).abs()
                    / s.values[i].abs().max(final_col[i].abs()).max(1e-300);
                worst = worst.max(rel);
            }
            checks.push(check(
                &format!("{label}/spectral_identity"),
                "S(ω,t→∞) equals the stationary spectrum",
                None,
                Some(worst),
                1e-6,
                worst <= 1e-6,
                format!("worst pointwise relative deviation {worst:.1e}"),
            ));
        }
    }
    let metadata = serde_json::json!({
        "runs": artifact_sets.iter().map(|a| &a.metadata).collect::<Vec<_>>(),
    });
    ValidationReport::new(checks, metadata)
}
