//! Simulation and analytics for one- and two-photon Fock-state pulses
//! scattering off a chiral two-level emitter in a one-dimensional waveguide.
//!
//! The crate has three layers:
//!
//! * closed-form results and an independent one-excitation-sector ODE
//!   propagator ([`oracle`]), used to verify everything else;
//! * an exact matrix-product-state time-bin collision engine ([`mps`])
//!   built from pulse envelopes ([`pulse`]);
//! * measurable quantities derived from the output-field two-time
//!   correlation matrix ([`observables`]): stationary spectra `S(ω)`,
//!   time-dependent spectra `S(ω,t)`, and spectral intensities `I(ω,t)`.
//!
//! [`experiment`] wires the layers into config-driven runs (figure presets,
//! convergence sweeps, emitter-off references) and [`validate`] holds the
//! named verification suite the CLI and the integration tests share.
//!
//! Throughout, γ = 1 fixes the time unit, frequencies are detunings from
//! the pulse carrier, and the emitter couples to right-movers only.

pub mod experiment;
pub mod linalg;
pub mod mps;
pub mod observables;
pub mod oracle;
pub mod pulse;
pub mod validate;

#[cfg(test)]
pub(crate) mod densesim;
