//! Command-line front end: preset and config-driven simulation runs with
//! CSV artifacts and a machine-readable validation report.
//!
//! Subcommands:
//!   run      — execute a configuration or figure preset, emit CSV + report
//!   sweep    — convergence sweep over dt, chi_max or bin_cutoff
//!   validate — full reference verification suite (A1–A10)
//!
//! Exit status: 0 success, 1 failed validation checks, 2 usage/config error.

mod config;
mod emit;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use fockpulse::experiment::{self, RunArtifacts, SweepAxis};
use fockpulse::validate::{self, ValidationReport};

const USAGE: &str = "\
fockpulse — Fock-state pulses on a chiral waveguide emitter

USAGE:
    fockpulse run [--config <file>] [--preset <name>] [--out <dir>]
                  [--compare-no-tls] [--dump-config]
    fockpulse sweep --axis <dt|chi|cutoff> --values <v1,v2,...>
                  [--config <file>] [--preset <name>] [--out <dir>]
    fockpulse validate [--out <dir>]
    fockpulse help

Presets: fig2a fig2b fig2c fig2d fig3 fig5 (population panels, stationary
spectra, dynamical surfaces; see README for the panel map).

The output directory is resolved as --out, then $FOCKPULSE_OUT, then the
config's [outputs].dir, then ./out. Each case writes into <out>/<label>/.";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match dispatch(&args) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(args: &[String]) -> Result<ExitCode, String> {
    match args.first().map(String::as_str) {
        Some("run") => cmd_run(&args[1..]),
        Some("sweep") => cmd_sweep(&args[1..]),
        Some("validate") => cmd_validate(&args[1..]),
        Some("help") | Some("--help") | Some("-h") | None => {
            println!("{USAGE}");
            Ok(ExitCode::SUCCESS)
        }
        Some(other) => Err(format!("unknown subcommand `{other}`\n{USAGE}")),
    }
}

#[derive(Default)]
struct CommonArgs {
    config: Option<String>,
    preset: Option<String>,
    out: Option<String>,
    compare_no_tls: bool,
    dump_config: bool,
    axis: Option<String>,
    values: Option<String>,
}

fn parse_args(args: &[String], allow: &[&str]) -> Result<CommonArgs, String> {
    let mut out = CommonArgs::default();
    let mut it = args.iter().peekable();
    fn take_value(
        it: &mut std::iter::Peekable<std::slice::Iter<String>>,
        flag: &str,
    ) -> Result<String, String> {
        it.next()
            .cloned()
            .ok_or_else(|| format!("{flag} needs a value"))
    }
    while let Some(arg) = it.next() {
        let flag = arg.as_str();
        if !allow.contains(&flag) {
            return Err(format!("unexpected argument `{flag}`\n{USAGE}"));
        }
        match flag {
            "--config" => out.config = Some(take_value(&mut it, flag)?),
            "--preset" => out.preset = Some(take_value(&mut it, flag)?),
            "--out" => out.out = Some(take_value(&mut it, flag)?),
            "--axis" => out.axis = Some(take_value(&mut it, flag)?),
            "--values" => out.values = Some(take_value(&mut it, flag)?),
            "--compare-no-tls" => out.compare_no_tls = true,
            "--dump-config" => out.dump_config = true,
            _ => unreachable!(),
        }
    }
    Ok(out)
}

fn load_resolved(common: &CommonArgs) -> Result<config::Resolved, String> {
    let raw = match &common.config {
        Some(path) => config::parse_file(path)?,
        None => config::RawConfig::default(),
    };
    config::resolve(&raw, common.preset.as_deref()).map_err(|e| e.to_string())
}

fn out_dir(common: &CommonArgs, resolved_dir: Option<&str>) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| std::env::var("FOCKPULSE_OUT").ok())
        .or_else(|| resolved_dir.map(String::from))
        .unwrap_or_else(|| "out".into())
        .into()
}

fn write_report(report: &ValidationReport, dir: &Path) -> Result<(), String> {
    let json = serde_json::to_string_pretty(report).map_err(|e| e.to_string())?;
    std::fs::write(dir.join("report.json"), json)
        .map_err(|e| format!("writing report.json: {e}"))
}

fn emit_case(
    artifacts: &RunArtifacts,
    selection: &config::OutputSelection,
    root: &Path,
) -> Result<(), String> {
    let dir = root.join(&artifacts.config.label);
    std::fs::create_dir_all(&dir).map_err(|e| format!("creating {}: {e}", dir.display()))?;
    let io = |e: std::io::Error| format!("writing artifacts for {}: {e}", artifacts.config.label);
    if selection.population {
        emit::write_population(artifacts, &dir).map_err(io)?;
    }
    if selection.flux {
        emit::write_flux(artifacts, &dir).map_err(io)?;
    }
    if selection.input_spectrum {
        emit::write_input_spectrum(artifacts, &dir).map_err(io)?;
    }
    if selection.stationary_spectrum {
        emit::write_stationary(artifacts, &dir).map_err(io)?;
    }
    if selection.dynamical_spectrum {
        emit::write_dynamical(artifacts, &dir).map_err(io)?;
    }
    if selection.checkpoint {
        emit::write_checkpoint(artifacts, &dir).map_err(io)?;
    }
    Ok(())
}

fn cmd_run(args: &[String]) -> Result<ExitCode, String> {
    let common = parse_args(
        args,
        &[
            "--config",
            "--preset",
            "--out",
            "--compare-no-tls",
            "--dump-config",
        ],
    )?;
    let resolved = load_resolved(&common)?;

    if common.dump_config {
        let text = toml::to_string_pretty(&resolved).map_err(|e| e.to_string())?;
        println!("{text}");
        return Ok(ExitCode::SUCCESS);
    }

    let root = out_dir(&common, resolved.out_dir.as_deref());
    std::fs::create_dir_all(&root).map_err(|e| format!("creating {}: {e}", root.display()))?;
    std::fs::write(
        root.join("resolved_config.toml"),
        toml::to_string_pretty(&resolved).map_err(|e| e.to_string())?,
    )
    .map_err(|e| format!("writing resolved_config.toml: {e}"))?;

    let mut all = Vec::new();
    for case in &resolved.cases {
        eprintln!("running {} ...", case.label);
        let artifacts = experiment::run_case(case).map_err(|e| e.to_string())?;
        emit_case(&artifacts, &resolved.outputs, &root)?;
        all.push(artifacts);
        if (common.compare_no_tls || resolved.outputs.compare_no_tls) && case.emitter_on {
            let label = format!("{}_no_tls", case.label);
            eprintln!("running {label} ...");
            let reference = experiment::compare_no_tls(case).map_err(|e| e.to_string())?;
            emit_case(&reference, &resolved.outputs, &root)?;
            all.push(reference);
        }
    }

    let report = validate::run_report(&all);
    write_report(&report, &root)?;
    for line in report.lines() {
        println!("{line}");
    }
    println!(
        "{} checks, {} failed; artifacts in {}",
        report.checks.len(),
        report.checks.iter().filter(|c| !c.passed).count(),
        root.display()
    );
    Ok(if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn cmd_sweep(args: &[String]) -> Result<ExitCode, String> {
    let common = parse_args(args, &["--config", "--preset", "--out", "--axis", "--values"])?;
    let axis_name = common
        .axis
        .clone()
        .ok_or_else(|| format!("sweep needs --axis\n{USAGE}"))?;
    let axis = SweepAxis::parse(&axis_name)
        .ok_or_else(|| format!("unknown axis `{axis_name}` (dt, chi or cutoff)"))?;
    let values: Vec<f64> = common
        .values
        .clone()
        .ok_or_else(|| format!("sweep needs --values\n{USAGE}"))?
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| format!("bad value `{v}`: {e}"))
        })
        .collect::<Result<_, _>>()?;

    let resolved = load_resolved(&common)?;
    let base = resolved
        .cases
        .first()
        .ok_or("configuration resolved to no cases")?;
    eprintln!(
        "sweeping {} over {:?} on case {} ...",
        axis.name(),
        values,
        base.label
    );
    let points = experiment::sweep_convergence(base, axis, &values).map_err(|e| e.to_string())?;

    let root = out_dir(&common, resolved.out_dir.as_deref());
    std::fs::create_dir_all(&root).map_err(|e| format!("creating {}: {e}", root.display()))?;
    emit::write_sweep_csv(&points, axis.name(), &root).map_err(|e| e.to_string())?;

    println!(
        "{:>12} {:>12} {:>8} {:>12} {:>9}",
        "setting", "error", "chi", "trunc_err", "wall_s"
    );
    for p in &points {
        println!(
            "{:>12.6} {:>12.3e} {:>8} {:>12.3e} {:>9.3}",
            p.setting, p.error, p.max_bond_dim, p.truncation_error, p.wall_seconds
        );
    }
    println!("sweep.csv written to {}", root.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(args: &[String]) -> Result<ExitCode, String> {
    let common = parse_args(args, &["--out"])?;
    eprintln!("running the reference verification suite (A1–A10) ...");
    let report = validate::acceptance_suite();
    let root = out_dir(&common, None);
    std::fs::create_dir_all(&root).map_err(|e| format!("creating {}: {e}", root.display()))?;
    write_report(&report, &root)?;
    for line in report.lines() {
        println!("{line}");
    }
    println!(
        "overall: {} (report.json in {})",
        if report.passed { "PASS" } else { "FAIL" },
        root.display()
    );
    Ok(if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}
