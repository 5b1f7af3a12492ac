//! CSV and JSON artifact writers.
//!
//! Every CSV starts with a `#`-prefixed comment block echoing the resolved
//! case configuration, so a plot file is self-describing and diff-able.
//! Formatting is fixed-width scientific notation; identical configs produce
//! bit-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use fockpulse::experiment::RunArtifacts;
use fockpulse::observables::SpectrumKind;

fn fmt(v: f64) -> String {
    format!("{v:.12e}")
}

fn header(a: &RunArtifacts) -> String {
    let mut h = String::new();
    let _ = writeln!(h, "# fockpulse {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(h, "# case: {}", a.config.label);
    let _ = writeln!(
        h,
        "# config: {}",
        serde_json::to_string(&a.config).expect("config echo")
    );
    let _ = writeln!(
        h,
        "# conventions: {}",
        serde_json::to_string(&a.metadata.conventions).expect("conventions echo")
    );
    h
}

pub fn write_population(a: &RunArtifacts, dir: &Path) -> std::io::Result<()> {
    let mut out = header(a);
    out.push_str("t,n_tls,n_analytic\n");
    let oracle = a.population_oracle.as_ref().map(|s| &s.values);
    for (k, &v) in a.population.values.iter().enumerate() {
        let t = a.grid.boundary(k);
        let analytic = oracle
            .and_then(|vals| vals.get(k))
            .map(|x| fmt(*x))
            .unwrap_or_default();
        let _ = writeln!(out, "{},{},{}", fmt(t), fmt(v), analytic);
    }
    fs::write(dir.join("population.csv"), out)
}

pub fn write_flux(a: &RunArtifacts, dir: &Path) -> std::io::Result<()> {
    let mut out = header(a);
    out.push_str("t,n_r_out,flux_analytic\n");
    for (k, &v) in a.flux.iter().enumerate() {
        let t = a.grid.bin_center(k);
        let analytic = a
            .flux_oracle
            .get(k)
            .and_then(|o| o.map(fmt))
            .unwrap_or_default();
        let _ = writeln!(out, "{},{},{}", fmt(t), fmt(v), analytic);
    }
    fs::write(dir.join("flux.csv"), out)
}

pub fn write_input_spectrum(a: &RunArtifacts, dir: &Path) -> std::io::Result<()> {
    let (Some(input), Some(input_grid), Some(s)) =
        (&a.input_spectrum, &a.input_spectrum_grid, &a.stationary)
    else {
        return Ok(());
    };
    let mut out = header(a);
    out.push_str("delta_omega,input,input_grid\n");
    for (i, &w) in s.omega.iter().enumerate() {
        let _ = writeln!(out, "{},{},{}", fmt(w), fmt(input[i]), fmt(input_grid[i]));
    }
    fs::write(dir.join("input_spectrum.csv"), out)
}

pub fn write_stationary(a: &RunArtifacts, dir: &Path) -> std::io::Result<()> {
    let (Some(s), Some(input)) = (&a.stationary, &a.input_spectrum) else {
        return Ok(());
    };
    let mut out = header(a);
    out.push_str("delta_omega,s,input\n");
    for (i, &w) in s.omega.iter().enumerate() {
        let _ = writeln!(out, "{},{},{}", fmt(w), fmt(s.values[i]), fmt(input[i]));
    }
    fs::write(dir.join("stationary_spectrum.csv"), out)
}

pub fn write_dynamical(a: &RunArtifacts, dir: &Path) -> std::io::Result<()> {
    let mut out = header(a);
    out.push_str("delta_omega,t,value,kind\n");
    let mut any = false;
    for surface in [&a.s_of_t, &a.intensity].into_iter().flatten() {
        any = true;
        let kind = match surface.kind {
            SpectrumKind::TimeDependentSpectrum => "s_of_t",
            SpectrumKind::SpectralIntensity => "intensity",
        };
        for (wi, &w) in surface.omega.iter().enumerate() {
            for (ti, &t) in surface.times.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{},{kind}",
                    fmt(w),
                    fmt(t),
                    fmt(surface.values[wi][ti])
                );
            }
        }
    }
    if !any {
        return Ok(());
    }
    fs::write(dir.join("dynamical_spectrum.csv"), out)
}

pub fn write_checkpoint(a: &RunArtifacts, dir: &Path) -> std::io::Result<()> {
    let Some(state) = &a.final_state else {
        return Ok(());
    };
    let mut buf = Vec::new();
    state
        .write_checkpoint(&mut buf)
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    fs::write(dir.join("state.mpsbin"), buf)
}

pub fn write_sweep_csv(
    points: &[fockpulse::experiment::SweepPoint],
    axis: &str,
    dir: &Path,
) -> std::io::Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "# fockpulse {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "# axis: {axis}");
    out.push_str("setting,error,max_bond_dim,truncation_error,wall_seconds\n");
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt(p.setting),
            fmt(p.error),
            p.max_bond_dim,
            fmt(p.truncation_error),
            fmt(p.wall_seconds)
        );
    }
    fs::write(dir.join("sweep.csv"), out)
}
