//! TOML experiment configuration and its resolution against a preset.
//!
//! Every physics field is optional in the file; a preset pins them all
//! (γ = 1 units, rectangular resonant pulses per figure panel) and any
//! explicit value that contradicts the preset is rejected with the field
//! path. Numerical and output settings always merge over the defaults.

use serde::{Deserialize, Serialize};

use fockpulse::experiment::{
    ExperimentError, Numerics, OmegaWindow, Preset, RunConfig, DEFAULT_TAIL, PRESET_TAIL,
};
use fockpulse::oracle::SystemParams;
use fockpulse::pulse::{PulseShape, PulseSpec};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub preset: Option<String>,
    #[serde(default)]
    pub system: RawSystem,
    #[serde(default)]
    pub pulse: RawPulse,
    #[serde(default)]
    pub numerics: RawNumerics,
    #[serde(default)]
    pub observables: RawObservables,
    #[serde(default)]
    pub outputs: RawOutputs,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSystem {
    pub gamma: Option<f64>,
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawPulse {
    pub shape: Option<PulseShape>,
    pub t_p: Option<f64>,
    pub photon_number: Option<u8>,
    pub carrier_detuning: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawNumerics {
    pub dt: Option<f64>,
    pub chi_max: Option<usize>,
    pub svd_tol: Option<f64>,
    pub bin_cutoff: Option<usize>,
    pub tail: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawObservables {
    pub omega_min: Option<f64>,
    pub omega_max: Option<f64>,
    pub omega_points: Option<usize>,
    pub time_stride: Option<usize>,
    pub dynamical: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawOutputs {
    pub dir: Option<String>,
    pub population: Option<bool>,
    pub flux: Option<bool>,
    pub input_spectrum: Option<bool>,
    pub stationary_spectrum: Option<bool>,
    pub dynamical_spectrum: Option<bool>,
    pub checkpoint: Option<bool>,
    pub compare_no_tls: Option<bool>,
}

/// Which artifact files to write.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct OutputSelection {
    pub population: bool,
    pub flux: bool,
    pub input_spectrum: bool,
    pub stationary_spectrum: bool,
    pub dynamical_spectrum: bool,
    pub checkpoint: bool,
    pub compare_no_tls: bool,
}

/// Fully resolved experiment: the cases to run plus output behavior.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub preset: Option<String>,
    pub cases: Vec<RunConfig>,
    pub outputs: OutputSelection,
    #[serde(skip)]
    pub out_dir: Option<String>,
}

fn conflict<T: PartialEq + std::fmt::Debug>(
    field: &str,
    given: &Option<T>,
    preset: Preset,
    expected: &T,
) -> Result<(), ExperimentError> {
    if let Some(v) = given {
        if v != expected {
            return Err(ExperimentError::PresetConflict {
                field: field.to_string(),
                given: format!("{v:?}"),
                preset: preset.name().to_string(),
                expected: format!("{expected:?}"),
            });
        }
    }
    Ok(())
}

pub fn resolve(raw: &RawConfig, preset_flag: Option<&str>) -> Result<Resolved, ExperimentError> {
    let preset_name = preset_flag.or(raw.preset.as_deref());
    let preset = match preset_name {
        Some(name) => Preset::parse(name)?,
        None => None,
    };

    let mut cases: Vec<RunConfig> = match preset {
        Some(p) => {
            // Physics fields are pinned by the preset.
            conflict("system.gamma", &raw.system.gamma, p, &1.0)?;
            conflict("system.delta", &raw.system.delta, p, &0.0)?;
            conflict("pulse.carrier_detuning", &raw.pulse.carrier_detuning, p, &0.0)?;
            conflict(
                "pulse.shape",
                &raw.pulse.shape,
                p,
                &PulseShape::Rectangular,
            )?;
            let configs = p.run_configs();
            for case in &configs {
                if let Some(tp) = raw.pulse.t_p {
                    if (tp - case.pulse.t_p).abs() > 1e-12 {
                        return Err(ExperimentError::PresetConflict {
                            field: "pulse.t_p".into(),
                            given: format!("{tp}"),
                            preset: p.name().into(),
                            expected: format!("{} (case {})", case.pulse.t_p, case.label),
                        });
                    }
                }
                if let Some(n) = raw.pulse.photon_number {
                    if n != case.pulse.photon_number {
                        return Err(ExperimentError::PresetConflict {
                            field: "pulse.photon_number".into(),
                            given: format!("{n}"),
                            preset: p.name().into(),
                            expected: format!(
                                "{} (case {})",
                                case.pulse.photon_number, case.label
                            ),
                        });
                    }
                }
            }
            configs
        }
        None => {
            let shape = raw.pulse.shape.unwrap_or(PulseShape::Rectangular);
            let t_p = raw.pulse.t_p.unwrap_or(2.0);
            let n = raw.pulse.photon_number.unwrap_or(1);
            let pulse = PulseSpec::new(shape, t_p, n)
                .map_err(|e| ExperimentError::Config {
                    field: "pulse".into(),
                    message: e.to_string(),
                })?
                .with_carrier_detuning(raw.pulse.carrier_detuning.unwrap_or(0.0));
            let label = format!(
                "{}{}_tp{}",
                match shape {
                    PulseShape::Rectangular => "n",
                    PulseShape::Gaussian => "gauss_n",
                },
                n,
                t_p
            );
            let mut cfg = RunConfig::new(&label, pulse);
            cfg.system = SystemParams {
                gamma: raw.system.gamma.unwrap_or(1.0),
                delta: raw.system.delta.unwrap_or(0.0),
            };
            cfg.numerics.tail = DEFAULT_TAIL;
            vec![cfg]
        }
    };

    for cfg in cases.iter_mut() {
        let n = &raw.numerics;
        let defaults = Numerics {
            tail: if preset.is_some() { PRESET_TAIL } else { DEFAULT_TAIL },
            ..Numerics::default()
        };
        cfg.numerics = Numerics {
            dt: n.dt.unwrap_or(defaults.dt),
            chi_max: n.chi_max.unwrap_or(defaults.chi_max),
            svd_tol: n.svd_tol.unwrap_or(defaults.svd_tol),
            bin_cutoff: n.bin_cutoff.or(defaults.bin_cutoff),
            tail: n.tail.unwrap_or(defaults.tail),
        };
        let o = &raw.observables;
        let dw = OmegaWindow::default();
        cfg.omega = OmegaWindow {
            min: o.omega_min.unwrap_or(dw.min),
            max: o.omega_max.unwrap_or(dw.max),
            points: o.omega_points.unwrap_or(dw.points),
        };
        if let Some(stride) = o.time_stride {
            cfg.time_stride = stride.max(1);
        }
        if let Some(dynamical) = o.dynamical {
            cfg.compute_dynamical = dynamical;
        }
        if raw.outputs.checkpoint.unwrap_or(false) {
            cfg.keep_final_state = true;
        }
    }

    let out = &raw.outputs;
    let dynamical_any = cases.iter().any(|c| c.compute_dynamical);
    let outputs = OutputSelection {
        population: out.population.unwrap_or(true),
        flux: out.flux.unwrap_or(true),
        input_spectrum: out.input_spectrum.unwrap_or(true),
        stationary_spectrum: out.stationary_spectrum.unwrap_or(true),
        dynamical_spectrum: out.dynamical_spectrum.unwrap_or(dynamical_any),
        checkpoint: out.checkpoint.unwrap_or(false),
        compare_no_tls: out.compare_no_tls.unwrap_or(false),
    };
    // Writing the dynamical CSV requires computing the surfaces.
    if outputs.dynamical_spectrum {
        for cfg in cases.iter_mut() {
            cfg.compute_dynamical = true;
        }
    }

    Ok(Resolved {
        preset: preset.map(|p| p.name().to_string()),
        cases,
        outputs,
        out_dir: out.dir.clone(),
    })
}

pub fn parse_file(path: &str) -> Result<RawConfig, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config `{path}`: {e}"))?;
    toml::from_str(&text).map_err(|e| format!("config `{path}`: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_resolves_to_defaults() {
        let resolved = resolve(&RawConfig::default(), None).unwrap();
        assert_eq!(resolved.cases.len(), 1);
        let cfg = &resolved.cases[0];
        assert_eq!(cfg.pulse.photon_number, 1);
        assert_eq!(cfg.numerics.dt, 0.01);
        assert_eq!(cfg.numerics.tail, DEFAULT_TAIL);
    }

    #[test]
    fn preset_flag_expands_cases() {
        let resolved = resolve(&RawConfig::default(), Some("fig2c")).unwrap();
        assert_eq!(resolved.preset.as_deref(), Some("fig2c"));
        assert_eq!(resolved.cases.len(), 2);
        assert_eq!(resolved.cases[0].numerics.tail, PRESET_TAIL);
    }

    #[test]
    fn preset_conflicts_are_rejected_with_field_path() {
        let raw: RawConfig = toml::from_str(
            r#"
            preset = "fig2a"
            [pulse]
            photon_number = 2
            "#,
        )
        .unwrap();
        let err = resolve(&raw, None).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("pulse.photon_number"), "{msg}");
        assert!(msg.contains("fig2a"), "{msg}");
    }

    #[test]
    fn matching_explicit_fields_are_allowed_with_preset() {
        let raw: RawConfig = toml::from_str(
            r#"
            preset = "fig2a"
            [pulse]
            t_p = 2.0
            photon_number = 1
            [numerics]
            dt = 0.02
            "#,
        )
        .unwrap();
        let resolved = resolve(&raw, None).unwrap();
        assert_eq!(resolved.cases[0].numerics.dt, 0.02);
    }

    #[test]
    fn unknown_fields_are_descriptive_errors() {
        let err = toml::from_str::<RawConfig>("[pulse]\nwidth = 2.0\n").unwrap_err();
        assert!(err.to_string().contains("width"));
    }

    #[test]
    fn cli_preset_flag_wins_over_file() {
        let raw: RawConfig = toml::from_str("preset = \"fig2a\"").unwrap();
        let resolved = resolve(&raw, Some("fig2b")).unwrap();
        assert_eq!(resolved.preset.as_deref(), Some("fig2b"));
        assert_eq!(resolved.cases[0].pulse.photon_number, 2);
    }
}
