//! Matrix-product-state time-bin collision engine.
//!
//! The joint state of the emitter and the discretized waveguide field is a
//! chain of rank-3 tensors `[left bond, physical, right bond]`, ordered as
//!
//! ```text
//! [scattered bins] [TLS] [pending bins]
//! ```
//!
//! Each collision contracts the emitter site with the next pending bin,
//! applies the exact two-site unitary, and re-splits with the physical legs
//! swapped so the freshly scattered bin lands to the left of the emitter.
//! The coupling is chiral: scattered bins are never touched again, so their
//! reduced states are final and the whole evolution uses nearest-neighbor
//! gates only. The orthogonality center rides on the emitter throughout,
//! which makes the per-step population readout a single-tensor contraction.
//!
//! Truncation discards singular values below `svd_tol` (up to `chi_max`)
//! and the accumulated discarded weight is tracked; the state is never
//! renormalized, so the norm drift doubles as a convergence diagnostic.

use std::io::{Read, Write};

use ndarray::{Array2, Array3};
use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::linalg;
use crate::oracle::SystemParams;
use crate::pulse::TimeGrid;

#[derive(Debug, Error)]
pub enum MpsError {
    #[error("bin photon cutoff {cutoff} is below the pulse photon number {photons}")]
    CutoffTooSmall { cutoff: usize, photons: u8 },
    #[error("input coefficients are not normalized: sum |f_k|^2 = {0}")]
    UnnormalizedCoefficients(f64),
    #[error("photon number must be 1 or 2, got {0}")]
    UnsupportedPhotonNumber(u8),
    #[error("invalid collision configuration: {0}")]
    InvalidConfig(String),
    #[error("site {site} out of range for {n_sites} sites")]
    SiteOutOfRange { site: usize, n_sites: usize },
    #[error("operator is {got}x{got2} but site {site} has physical dimension {expect}")]
    OperatorDimensionMismatch {
        site: usize,
        got: usize,
        got2: usize,
        expect: usize,
    },
    #[error("bin {bin} has not been scattered yet (emitter at position {tls_pos})")]
    BinNotScattered { bin: usize, tls_pos: usize },
    #[error("collision {expected} is next, cannot apply collision {got}")]
    OutOfOrderCollision { expected: usize, got: usize },
    #[error("evolution incomplete: emitter at position {tls_pos} of {n_sites} sites")]
    EvolutionIncomplete { tls_pos: usize, n_sites: usize },
    #[error("checkpoint io: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid checkpoint: {0}")]
    BadCheckpoint(String),
}

/// Numerical controls for the collision evolution.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CollisionConfig {
    /// Bin width (collision duration).
    pub dt: f64,
    /// Number of waveguide time bins.
    pub n_bins: usize,
    /// Maximum bond dimension kept in any split.
    pub chi_max: usize,
    /// Singular values at or below this threshold are discarded.
    pub svd_tol: f64,
    /// Maximum photons representable per bin (physical dimension − 1).
    pub bin_cutoff: usize,
}

impl CollisionConfig {
    pub const DEFAULT_CHI_MAX: usize = 32;
    pub const DEFAULT_SVD_TOL: f64 = 1e-10;

    pub fn new(grid: &TimeGrid, bin_cutoff: usize) -> Self {
        Self {
            dt: grid.dt,
            n_bins: grid.n_bins,
            chi_max: Self::DEFAULT_CHI_MAX,
            svd_tol: Self::DEFAULT_SVD_TOL,
            bin_cutoff,
        }
    }

    pub fn validate(&self, photon_number: u8) -> Result<(), MpsError> {
        if self.bin_cutoff < photon_number as usize {
            return Err(MpsError::CutoffTooSmall {
                cutoff: self.bin_cutoff,
                photons: photon_number,
            });
        }
        if !(self.dt.is_finite() && self.dt > 0.0) || self.n_bins == 0 {
            return Err(MpsError::InvalidConfig(format!(
                "dt = {}, n_bins = {}",
                self.dt, self.n_bins
            )));
        }
        if self.chi_max < 2 {
            return Err(MpsError::InvalidConfig(format!(
                "chi_max = {} (need at least 2)",
                self.chi_max
            )));
        }
        if !(self.svd_tol >= 0.0) {
            return Err(MpsError::InvalidConfig(format!(
                "svd_tol = {}",
                self.svd_tol
            )));
        }
        Ok(())
    }
}

/// Truncated bosonic annihilator `b|m⟩ = √m |m−1⟩` on `d` levels; the bin
/// noise operator is `ΔB = √dt · b`.
pub fn annihilator(d: usize) -> Array2<C64> {
    let mut b = Array2::<C64>::zeros((d, d));
    for m in 1..d {
        b[[m - 1, m]] = C64::from((m as f64).sqrt());
    }
    b
}

/// Bin number operator `b†b`.
pub fn number_op(d: usize) -> Array2<C64> {
    let mut n = Array2::<C64>::zeros((d, d));
    for m in 0..d {
        n[[m, m]] = C64::from(m as f64);
    }
    n
}

/// Emitter excited-state projector in the `{|g⟩, |e⟩}` basis.
pub fn excited_projector() -> Array2<C64> {
    let mut p = Array2::<C64>::zeros((2, 2));
    p[[1, 1]] = C64::from(1.0);
    p
}

/// Exact collision unitary on the joint (TLS ⊗ bin) space,
/// `U = exp(−i δ σ⁺σ⁻ dt + √γ (σ⁺ΔB − σ⁻ΔB†))`,
/// computed by spectral decomposition of the (anti-Hermitian) generator.
/// Basis index is TLS-major: `s·(cutoff+1) + m`.
pub fn collision_unitary(p: &SystemParams, dt: f64, bin_cutoff: usize) -> Array2<C64> {
    collision_unitary_with_coupling(p.gamma, p.delta, dt, bin_cutoff)
}

/// Same as [`collision_unitary`] with the coupling passed explicitly, which
/// lets reference runs switch the emitter off (`gamma_coupling = 0`) while
/// the rest of the setup stays fixed.
pub fn collision_unitary_with_coupling(
    gamma_coupling: f64,
    delta: f64,
    dt: f64,
    bin_cutoff: usize,
) -> Array2<C64> {
    let d = bin_cutoff + 1;
    let dim = 2 * d;
    let root = (gamma_coupling * dt).sqrt();
    // K = i·generator is Hermitian: δ·dt on the excited block plus
    // i·√(γdt)(σ⁺b − σ⁻b†); then U = exp(−iK).
    let mut k = Array2::<C64>::zeros((dim, dim));
    for m in 0..d {
        k[[d + m, d + m]] = C64::from(delta * dt);
    }
    let b = annihilator(d);
    for m_out in 0..d {
        for m_in in 0..d {
            let amp = b[[m_out, m_in]];
            if amp == C64::new(0.0, 0.0) {
                continue;
            }
            // i·√(γdt)·σ⁺⊗b  on |g, m_in⟩ → |e, m_out⟩
            k[[d + m_out, m_in]] += C64::new(0.0, root) * amp;
            // −i·√(γdt)·σ⁻⊗b† = hermitian conjugate
            k[[m_in, d + m_out]] += C64::new(0.0, -root) * amp.conj();
        }
    }
    linalg::expm_neg_i_hermitian(&k)
}

/// Per-collision readout, measured on the post-unitary two-site tensor
/// (before the truncating split).
#[derive(Debug, Clone, Copy)]
pub struct StepRecord {
    /// Emitter excited-state population after the collision.
    pub population: f64,
    /// Photon occupation `⟨b†b⟩` of the freshly scattered bin.
    pub bin_occupation: f64,
    /// Squared norm of the state after the split (drops under truncation).
    pub norm_sqr: f64,
}

/// Full evolution record: one entry per collision.
#[derive(Debug, Clone)]
pub struct EvolveRecord {
    pub populations: Vec<f64>,
    pub occupations: Vec<f64>,
    pub norms_sqr: Vec<f64>,
    pub max_bond_dim: usize,
    pub truncation_error: f64,
    pub chi_overflows: usize,
    /// Set when `γ·dt` exceeds 0.05 and the collision expansion is suspect.
    pub coarse_dt_warning: bool,
}

impl EvolveRecord {
    /// Maximum deviation of `⟨σ⁺σ⁻⟩ + Σ_scattered ⟨b†b⟩` from `n` over the
    /// run. Pending bins hold exactly the not-yet-delivered photons, so the
    /// conserved quantity at step k is population + scattered + pending.
    pub fn excitation_drift(&self, pending: &[f64], n: f64) -> f64 {
        let mut cum = 0.0;
        let mut rest: f64 = pending.iter().sum();
        let mut worst = 0.0f64;
        for (k, (&p, &occ)) in self.populations.iter().zip(&self.occupations).enumerate() {
            cum += occ;
            rest -= pending[k];
            worst = worst.max((p + cum + rest - n).abs());
        }
        worst
    }

    pub fn max_norm_drift(&self) -> f64 {
        self.norms_sqr
            .iter()
            .map(|&n2| (n2.sqrt() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// The evolving matrix product state over waveguide bins plus the emitter.
#[derive(Debug, Clone)]
pub struct TimeBinState {
    tensors: Vec<Array3<C64>>,
    tls_pos: usize,
    center: usize,
    bin_dim: usize,
    truncation_error: f64,
    chi_overflows: usize,
}

/// Input `n`-photon wave packet over the bins, with the emitter appended in
/// its ground state at the head of the chain.
///
/// For one photon the bond dimension is 2 (photon placed / pending); for two
/// photons it is 3, carrying the number of photons still to place. The
/// chain is compressed and brought to canonical form with the center on the
/// emitter, ready for the first collision.
pub fn build_input_mps(
    coeffs: &[C64],
    photon_number: u8,
    cfg: &CollisionConfig,
) -> Result<TimeBinState, MpsError> {
    if !(photon_number == 1 || photon_number == 2) {
        return Err(MpsError::UnsupportedPhotonNumber(photon_number));
    }
    cfg.validate(photon_number)?;
    let total: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(MpsError::UnnormalizedCoefficients(total));
    }
    let n_bins = coeffs.len();
    if n_bins != cfg.n_bins {
        return Err(MpsError::InvalidConfig(format!(
            "{} coefficients for {} bins",
            n_bins, cfg.n_bins
        )));
    }
    let d = cfg.bin_cutoff + 1;
    let n = photon_number as usize;
    let chi = n + 1; // bond value = photons still to place

    let mut tensors: Vec<Array3<C64>> = Vec::with_capacity(n_bins + 1);
    let mut tls = Array3::<C64>::zeros((1, 2, 1));
    tls[[0, 0, 0]] = C64::from(1.0);
    tensors.push(tls);

    for (k, &f) in coeffs.iter().enumerate() {
        let left = if k == 0 { 1 } else { chi };
        let right = if k == n_bins - 1 { 1 } else { chi };
        let mut t = Array3::<C64>::zeros((left, d, right));
        // Transition amplitude for placing p photons in this bin when r
        // photons remain: chosen so the symmetric two-photon state
        // (Σ f_k ΔB_k†/√dt)²/√2 |vac⟩ comes out exactly unit-norm.
        let entry = |remaining: usize, placed: usize| -> Option<C64> {
            match (photon_number, remaining, placed) {
                (_, r, 0) => Some(C64::from(1.0)).filter(|_| r <= n),
                (1, 1, 1) => Some(f),
                (2, 2, 1) => Some(f),
                (2, 1, 1) => Some(f * 2.0f64.sqrt()),
                (2, 2, 2) => Some(f * f),
                _ => None,
            }
        };
        for r_in in 0..=n {
            for placed in 0..=n.min(d - 1) {
                if placed > r_in {
                    continue;
                }
                let r_out = r_in - placed;
                if let Some(amp) = entry(r_in, placed) {
                    let li = if k == 0 {
                        if r_in != n {
                            continue;
                        }
                        0
                    } else {
                        r_in
                    };
                    let ri = if k == n_bins - 1 {
                        if r_out != 0 {
                            continue;
                        }
                        0
                    } else {
                        r_out
                    };
                    t[[li, placed, ri]] = amp;
                }
            }
        }
        tensors.push(t);
    }

    let mut state = TimeBinState {
        tensors,
        tls_pos: 0,
        center: 0,
        bin_dim: d,
        truncation_error: 0.0,
        chi_overflows: 0,
    };
    // Two passes: after the left-to-right sweep the singular values of the
    // return sweep are genuine Schmidt coefficients, so zero-purging leaves
    // minimal bonds (a concentrated pulse compresses to a product state).
    state.canonicalize_to_tail();
    state.canonicalize_to_head();
    Ok(state)
}

/// All-bins-empty state with the emitter in its ground state; exact vacuum.
pub fn vacuum_state(n_bins: usize, cfg: &CollisionConfig) -> TimeBinState {
    let d = cfg.bin_cutoff + 1;
    let mut tensors = Vec::with_capacity(n_bins + 1);
    let mut tls = Array3::<C64>::zeros((1, 2, 1));
    tls[[0, 0, 0]] = C64::from(1.0);
    tensors.push(tls);
    for _ in 0..n_bins {
        let mut t = Array3::<C64>::zeros((1, d, 1));
        t[[0, 0, 0]] = C64::from(1.0);
        tensors.push(t);
    }
    TimeBinState {
        tensors,
        tls_pos: 0,
        center: 0,
        bin_dim: d,
        truncation_error: 0.0,
        chi_overflows: 0,
    }
}

impl TimeBinState {
    pub fn n_sites(&self) -> usize {
        self.tensors.len()
    }

    pub fn n_bins(&self) -> usize {
        self.tensors.len() - 1
    }

    pub fn tls_pos(&self) -> usize {
        self.tls_pos
    }

    pub fn orthogonality_center(&self) -> usize {
        self.center
    }

    pub fn bin_dim(&self) -> usize {
        self.bin_dim
    }

    pub fn truncation_error(&self) -> f64 {
        self.truncation_error
    }

    pub fn chi_overflows(&self) -> usize {
        self.chi_overflows
    }

    /// Physical dimension at a site (2 on the emitter, cutoff + 1 on bins).
    pub fn phys_dim(&self, site: usize) -> usize {
        self.tensors[site].dim().1
    }

    /// Bond dimensions across the chain (length `n_sites − 1`).
    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors
            .iter()
            .take(self.n_sites() - 1)
            .map(|t| t.dim().2)
            .collect()
    }

    pub fn max_bond_dim(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// State norm, read off the orthogonality-center tensor.
    pub fn norm(&self) -> f64 {
        self.tensors[self.center]
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Chain position of waveguide bin `k` given how far the emitter has
    /// swept: scattered bins sit at their own index, pending bins one to
    /// the right.
    pub fn bin_site(&self, k: usize) -> usize {
        if k < self.tls_pos {
            k
        } else {
            k + 1
        }
    }

    fn check_site(&self, site: usize) -> Result<(), MpsError> {
        if site >= self.n_sites() {
            return Err(MpsError::SiteOutOfRange {
                site,
                n_sites: self.n_sites(),
            });
        }
        Ok(())
    }

    /// Move the orthogonality center to the last site by left-to-right
    /// splits, dropping exactly-zero singular values along the way.
    fn canonicalize_to_tail(&mut self) {
        for s in 0..self.n_sites() - 1 {
            let t = &self.tensors[s];
            let (dl, d, dr) = t.dim();
            let mut m = Array2::<C64>::zeros((dl * d, dr));
            for l in 0..dl {
                for p in 0..d {
                    for r in 0..dr {
                        m[[l * d + p, r]] = t[[l, p, r]];
                    }
                }
            }
            let (u, sig, vt) = linalg::svd(&m);
            let keep = purge_keep(&sig);
            let mut left = Array3::<C64>::zeros((dl, d, keep));
            for l in 0..dl {
                for p in 0..d {
                    for a in 0..keep {
                        left[[l, p, a]] = u[[l * d + p, a]];
                    }
                }
            }
            self.tensors[s] = left;
            let nxt = &self.tensors[s + 1];
            let (nl, nd, nr) = nxt.dim();
            debug_assert_eq!(nl, dr);
            let mut merged = Array3::<C64>::zeros((keep, nd, nr));
            for a in 0..keep {
                for p in 0..nd {
                    for r in 0..nr {
                        let mut acc = C64::new(0.0, 0.0);
                        for lold in 0..nl {
                            acc += C64::from(sig[a]) * vt[[a, lold]] * nxt[[lold, p, r]];
                        }
                        merged[[a, p, r]] = acc;
                    }
                }
            }
            self.tensors[s + 1] = merged;
        }
        self.center = self.n_sites() - 1;
    }

    /// Bring the orthogonality center to site 0 by right-to-left splits,
    /// dropping exactly-zero singular values along the way.
    fn canonicalize_to_head(&mut self) {
        for s in (1..self.n_sites()).rev() {
            let t = &self.tensors[s];
            let (dl, d, dr) = t.dim();
            let mut m = Array2::<C64>::zeros((dl, d * dr));
            for l in 0..dl {
                for p in 0..d {
                    for r in 0..dr {
                        m[[l, p * dr + r]] = t[[l, p, r]];
                    }
                }
            }
            let (u, sig, vt) = linalg::svd(&m);
            let keep = purge_keep(&sig);
            let mut right = Array3::<C64>::zeros((keep, d, dr));
            for a in 0..keep {
                for p in 0..d {
                    for r in 0..dr {
                        right[[a, p, r]] = vt[[a, p * dr + r]];
                    }
                }
            }
            self.tensors[s] = right;
            // Absorb U·Σ into the left neighbor.
            let prev = &self.tensors[s - 1];
            let (pl, pd, pr) = prev.dim();
            debug_assert_eq!(pr, dl);
            let mut merged = Array3::<C64>::zeros((pl, pd, keep));
            for l in 0..pl {
                for p in 0..pd {
                    for a in 0..keep {
                        let mut acc = C64::new(0.0, 0.0);
                        for r in 0..pr {
                            acc += prev[[l, p, r]] * u[[r, a]] * sig[a];
                        }
                        merged[[l, p, a]] = acc;
                    }
                }
            }
            self.tensors[s - 1] = merged;
        }
        self.center = 0;
    }

    /// One collision: apply `u` to the (emitter, bin `k`) pair and re-split
    /// with the bin moved to the scattered side. `k` must be the next
    /// pending bin and the center must sit on the emitter.
    pub fn step(&mut self, k: usize, u: &Array2<C64>, cfg: &CollisionConfig) -> Result<StepRecord, MpsError> {
        if k != self.tls_pos {
            return Err(MpsError::OutOfOrderCollision {
                expected: self.tls_pos,
                got: k,
            });
        }
        if self.tls_pos + 1 >= self.n_sites() {
            return Err(MpsError::EvolutionIncomplete {
                tls_pos: self.tls_pos,
                n_sites: self.n_sites(),
            });
        }
        debug_assert_eq!(self.center, self.tls_pos);
        let d = self.bin_dim;
        let dim = 2 * d;
        if u.dim() != (dim, dim) {
            return Err(MpsError::OperatorDimensionMismatch {
                site: self.tls_pos,
                got: u.dim().0,
                got2: u.dim().1,
                expect: dim,
            });
        }

        let pos = self.tls_pos;
        let tls = &self.tensors[pos];
        let bin = &self.tensors[pos + 1];
        let (chi_l, _, chi_m) = tls.dim();
        let (chi_m2, _, chi_r) = bin.dim();
        debug_assert_eq!(chi_m, chi_m2);

        // θ[(s·d + m), (l·χr + r)] = Σ_mid tls[l,s,mid]·bin[mid,m,r]
        let cols = chi_l * chi_r;
        let mut theta = Array2::<C64>::zeros((dim, cols));
        for l in 0..chi_l {
            for s in 0..2 {
                for mid in 0..chi_m {
                    let a = tls[[l, s, mid]];
                    if a == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for m in 0..d {
                        for r in 0..chi_r {
                            theta[[s * d + m, l * chi_r + r]] += a * bin[[mid, m, r]];
                        }
                    }
                }
            }
        }
        let theta = linalg::matmul(u, &theta);

        // Readout on the exact post-collision two-site state.
        let mut population = 0.0;
        let mut occupation = 0.0;
        for s in 0..2 {
            for m in 0..d {
                let row = s * d + m;
                let w: f64 = (0..cols).map(|c| theta[[row, c]].norm_sqr()).sum();
                if s == 1 {
                    population += w;
                }
                occupation += m as f64 * w;
            }
        }

        // Swap-split: rows (l, m) on the left, columns (s, r) on the right.
        let mut m2 = Array2::<C64>::zeros((chi_l * d, 2 * chi_r));
        for s in 0..2 {
            for m in 0..d {
                for l in 0..chi_l {
                    for r in 0..chi_r {
                        m2[[l * d + m, s * chi_r + r]] = theta[[s * d + m, l * chi_r + r]];
                    }
                }
            }
        }
        let (u_m, sig, vt) = linalg::svd(&m2);
        let above_tol = sig.iter().filter(|&&s| s > cfg.svd_tol).count().max(1);
        let keep = above_tol.min(cfg.chi_max);
        if above_tol > cfg.chi_max {
            self.chi_overflows += 1;
        }
        // Count genuine discarded weight, not the SVD's numerical zeros.
        let noise_floor = 1e-16 * sig.first().copied().unwrap_or(0.0);
        let discarded: f64 = sig
            .iter()
            .skip(keep)
            .filter(|&&s| s > noise_floor)
            .map(|s| s * s)
            .sum();
        self.truncation_error += discarded;
        let norm_sqr: f64 = sig.iter().take(keep).map(|s| s * s).sum();

        let mut bin_new = Array3::<C64>::zeros((chi_l, d, keep));
        for l in 0..chi_l {
            for m in 0..d {
                for a in 0..keep {
                    bin_new[[l, m, a]] = u_m[[l * d + m, a]];
                }
            }
        }
        let mut tls_new = Array3::<C64>::zeros((keep, 2, chi_r));
        for a in 0..keep {
            for s in 0..2 {
                for r in 0..chi_r {
                    tls_new[[a, s, r]] = C64::from(sig[a]) * vt[[a, s * chi_r + r]];
                }
            }
        }
        self.tensors[pos] = bin_new;
        self.tensors[pos + 1] = tls_new;
        self.tls_pos += 1;
        self.center += 1;

        Ok(StepRecord {
            population,
            bin_occupation: occupation,
            norm_sqr,
        })
    }

    /// Sweep all pending collisions with the unitary built from `p`.
    pub fn evolve(&mut self, p: &SystemParams, cfg: &CollisionConfig) -> Result<EvolveRecord, MpsError> {
        self.evolve_with_coupling(p.gamma, p.delta, cfg)
    }

    /// Sweep with an explicit coupling rate (0 turns the emitter off).
    pub fn evolve_with_coupling(
        &mut self,
        gamma_coupling: f64,
        delta: f64,
        cfg: &CollisionConfig,
    ) -> Result<EvolveRecord, MpsError> {
        let u = collision_unitary_with_coupling(gamma_coupling, delta, cfg.dt, self.bin_dim - 1);
        let n_steps = self.n_bins() - self.tls_pos;
        let mut record = EvolveRecord {
            populations: Vec::with_capacity(n_steps),
            occupations: Vec::with_capacity(n_steps),
            norms_sqr: Vec::with_capacity(n_steps),
            max_bond_dim: self.max_bond_dim(),
            truncation_error: 0.0,
            chi_overflows: 0,
            coarse_dt_warning: gamma_coupling * cfg.dt > 0.05,
        };
        while self.tls_pos < self.n_bins() {
            let rec = self.step(self.tls_pos, &u, cfg)?;
            record.populations.push(rec.population);
            record.occupations.push(rec.bin_occupation);
            record.norms_sqr.push(rec.norm_sqr);
            record.max_bond_dim = record.max_bond_dim.max(self.max_bond_dim());
        }
        record.truncation_error = self.truncation_error;
        record.chi_overflows = self.chi_overflows;
        Ok(record)
    }

    /// Expectation value of a single-site operator via canonical-form
    /// contraction (environments on the non-canonical side are built from
    /// the center outward).
    pub fn expectation_local(&self, site: usize, op: &Array2<C64>) -> Result<C64, MpsError> {
        self.check_site(site)?;
        let d = self.phys_dim(site);
        if op.dim() != (d, d) {
            return Err(MpsError::OperatorDimensionMismatch {
                site,
                got: op.dim().0,
                got2: op.dim().1,
                expect: d,
            });
        }
        let left = self.left_env(site);
        let right = self.right_env(site);
        Ok(op_env_value(&self.tensors[site], op, &left, &right))
    }

    /// Occupations `⟨b†b⟩` of every bin (emitter site excluded), in bin
    /// order.
    pub fn bin_occupations(&self) -> Vec<f64> {
        let renv = self.right_environments();
        let nop = number_op(self.bin_dim);
        let mut occ = Vec::with_capacity(self.n_bins());
        // Left of the center every site is left-canonical, so the left
        // environment is the identity; from the center on it accumulates.
        let mut env: Option<Array2<C64>> = None;
        for site in 0..self.n_sites() {
            if site >= self.center && env.is_none() {
                env = Some(Array2::<C64>::eye(self.tensors[site].dim().0));
            }
            if site != self.tls_pos {
                let value = match &env {
                    None => {
                        let eye = Array2::<C64>::eye(self.tensors[site].dim().0);
                        op_env_value(&self.tensors[site], &nop, &eye, &renv[site]).re
                    }
                    Some(e) => op_env_value(&self.tensors[site], &nop, e, &renv[site]).re,
                };
                occ.push(value);
            }
            env = env.map(|e| transfer_left_env(&self.tensors[site], &e));
        }
        occ
    }

    /// Total excitation `⟨σ⁺σ⁻⟩ + Σ_k ⟨b_k†b_k⟩`.
    pub fn total_excitation(&self) -> f64 {
        let pop = self
            .expectation_local(self.tls_pos, &excited_projector())
            .expect("emitter site")
            .re;
        pop + self.bin_occupations().iter().sum::<f64>()
    }

    /// Two-time output-field correlation `⟨ΔB_j† ΔB_k⟩ / dt²` between
    /// scattered bins `j ≤ k` (flux units).
    pub fn two_point_correlation(&self, j: usize, k: usize, dt: f64) -> Result<C64, MpsError> {
        let (j, k, conjugate) = if j <= k { (j, k, false) } else { (k, j, true) };
        for bin in [j, k] {
            if bin >= self.n_bins() {
                return Err(MpsError::SiteOutOfRange {
                    site: bin,
                    n_sites: self.n_bins(),
                });
            }
            if bin >= self.tls_pos {
                return Err(MpsError::BinNotScattered {
                    bin,
                    tls_pos: self.tls_pos,
                });
            }
        }
        let b = annihilator(self.bin_dim);
        let val = if j == k {
            let nop = number_op(self.bin_dim);
            let left = Array2::<C64>::eye(self.tensors[j].dim().0);
            op_env_value(&self.tensors[j], &nop, &left, &self.right_env(j))
        } else {
            let bdag = linalg::adjoint(&b);
            let mut env = op_transfer_left(&self.tensors[j], &bdag);
            for s in j + 1..k {
                env = transfer_left_env(&self.tensors[s], &env);
            }
            close_with_op(&self.tensors[k], &b, &env, &self.right_env(k))
        };
        // ⟨ΔB_j†ΔB_k⟩ = dt·⟨b_j†b_k⟩, so flux units divide by dt once.
        let val = val / dt;
        Ok(if conjugate { val.conj() } else { val })
    }

    /// Dense matrix of output-field correlations `G[j][k] = ⟨ΔB_j†ΔB_k⟩/dt²`
    /// over all bins; requires a fully evolved state. The upper triangle is
    /// computed by row sweeps over cached right environments and mirrored.
    pub fn output_correlations(&self, dt: f64) -> Result<Array2<C64>, MpsError> {
        if self.tls_pos != self.n_sites() - 1 || self.center != self.tls_pos {
            return Err(MpsError::EvolutionIncomplete {
                tls_pos: self.tls_pos,
                n_sites: self.n_sites(),
            });
        }
        let nb = self.n_bins();
        let b = annihilator(self.bin_dim);
        let bdag = linalg::adjoint(&b);
        let nop = number_op(self.bin_dim);
        let renv = self.right_environments();
        let mut g = Array2::<C64>::zeros((nb, nb));
        for j in 0..nb {
            let eye = Array2::<C64>::eye(self.tensors[j].dim().0);
            g[[j, j]] =
                C64::from(op_env_value(&self.tensors[j], &nop, &eye, &renv[j]).re / dt);
            let mut env = op_transfer_left(&self.tensors[j], &bdag);
            for k in j + 1..nb {
                let val = close_with_op(&self.tensors[k], &b, &env, &renv[k]) / dt;
                g[[j, k]] = val;
                g[[k, j]] = val.conj();
                if k + 1 < nb {
                    env = transfer_left_env(&self.tensors[k], &env);
                }
            }
        }
        Ok(g)
    }

    /// Reduced density matrix `ρ[p][q] = ⟨p|ρ_site|q⟩` of a single site
    /// (brute-force environments; intended for diagnostics and tests).
    pub fn reduced_density(&self, site: usize) -> Result<Array2<C64>, MpsError> {
        self.check_site(site)?;
        let d = self.phys_dim(site);
        let left = self.left_env(site);
        let right = self.right_env(site);
        let t = &self.tensors[site];
        let (dl, _, dr) = t.dim();
        let mut rho = Array2::<C64>::zeros((d, d));
        for p in 0..d {
            for q in 0..d {
                // ⟨p|ρ|q⟩: ket leg carries p, bra leg carries q.
                let mut acc = C64::new(0.0, 0.0);
                for lb in 0..dl {
                    for lk in 0..dl {
                        let w = left[[lb, lk]];
                        if w == C64::new(0.0, 0.0) {
                            continue;
                        }
                        for rb in 0..dr {
                            for rk in 0..dr {
                                acc += t[[lk, p, rk]] * t[[lb, q, rb]].conj() * w * right[[rb, rk]];
                            }
                        }
                    }
                }
                rho[[p, q]] = acc;
            }
        }
        Ok(rho)
    }

    /// Maximum deviation from the expected isometry conditions on both
    /// sides of the orthogonality center.
    pub fn verify_canonical(&self) -> f64 {
        let mut worst = 0.0f64;
        for (s, t) in self.tensors.iter().enumerate() {
            let (dl, d, dr) = t.dim();
            if s < self.center {
                // left isometry: Σ_{l,p} T*[l,p,a] T[l,p,b] = δ_ab
                for a in 0..dr {
                    for bidx in 0..dr {
                        let mut acc = C64::new(0.0, 0.0);
                        for l in 0..dl {
                            for p in 0..d {
                                acc += t[[l, p, a]].conj() * t[[l, p, bidx]];
                            }
                        }
                        let expect = if a == bidx { 1.0 } else { 0.0 };
                        worst = worst.max((acc - C64::from(expect)).norm());
                    }
                }
            } else if s > self.center {
                // right isometry: Σ_{p,r} T[a,p,r] T*[b,p,r] = δ_ab
                for a in 0..dl {
                    for bidx in 0..dl {
                        let mut acc = C64::new(0.0, 0.0);
                        for p in 0..d {
                            for r in 0..dr {
                                acc += t[[a, p, r]] * t[[bidx, p, r]].conj();
                            }
                        }
                        let expect = if a == bidx { 1.0 } else { 0.0 };
                        worst = worst.max((acc - C64::from(expect)).norm());
                    }
                }
            }
        }
        worst
    }

    /// Left environment of `site` (identity when everything to the left is
    /// left-canonical, otherwise built from the center outward).
    fn left_env(&self, site: usize) -> Array2<C64> {
        if site <= self.center {
            return Array2::<C64>::eye(self.tensors[site].dim().0);
        }
        let tc = &self.tensors[self.center];
        let (dl, d, dr) = tc.dim();
        let mut env = Array2::<C64>::zeros((dr, dr));
        for a in 0..dr {
            for b in 0..dr {
                let mut acc = C64::new(0.0, 0.0);
                for l in 0..dl {
                    for p in 0..d {
                        acc += tc[[l, p, a]].conj() * tc[[l, p, b]];
                    }
                }
                env[[a, b]] = acc;
            }
        }
        for s in self.center + 1..site {
            env = transfer_left_env(&self.tensors[s], &env);
        }
        env
    }

    /// Right environment of `site` (identity when everything to the right
    /// is right-canonical).
    fn right_env(&self, site: usize) -> Array2<C64> {
        if site >= self.center {
            return Array2::<C64>::eye(self.tensors[site].dim().2);
        }
        let tc = &self.tensors[self.center];
        let (dl, d, dr) = tc.dim();
        let mut env = Array2::<C64>::zeros((dl, dl));
        for a in 0..dl {
            for b in 0..dl {
                let mut acc = C64::new(0.0, 0.0);
                for p in 0..d {
                    for r in 0..dr {
                        acc += tc[[a, p, r]].conj() * tc[[b, p, r]];
                    }
                }
                env[[a, b]] = acc;
            }
        }
        let mut s = self.center;
        while s > site + 1 {
            s -= 1;
            env = transfer_right_env(&self.tensors[s], &env);
        }
        env
    }

    /// Right environments for every site, assuming all sites right of the
    /// center are right-canonical and the center is rightmost when used for
    /// correlation sweeps. `renv[s]` closes sites `s+1..`.
    fn right_environments(&self) -> Vec<Array2<C64>> {
        let n = self.n_sites();
        let mut renv: Vec<Array2<C64>> = vec![Array2::zeros((0, 0)); n];
        renv[n - 1] = Array2::<C64>::eye(self.tensors[n - 1].dim().2);
        for s in (1..n).rev() {
            let env = transfer_right_env(&self.tensors[s], &renv[s]);
            renv[s - 1] = env;
        }
        renv
    }

    /// Versioned binary checkpoint: header (magic, version, layout) followed
    /// by row-major complex tensors as little-endian 64-bit floats.
    pub fn write_checkpoint<W: Write>(&self, w: &mut W) -> Result<(), MpsError> {
        w.write_all(b"FPMPS")?;
        w.write_all(&1u32.to_le_bytes())?;
        for v in [
            self.n_sites() as u64,
            self.tls_pos as u64,
            self.center as u64,
            self.bin_dim as u64,
            self.chi_overflows as u64,
        ] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&self.truncation_error.to_le_bytes())?;
        for t in &self.tensors {
            let (dl, d, dr) = t.dim();
            for v in [dl as u64, d as u64, dr as u64] {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        for t in &self.tensors {
            for z in t.iter() {
                w.write_all(&z.re.to_le_bytes())?;
                w.write_all(&z.im.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_checkpoint<R: Read>(r: &mut R) -> Result<Self, MpsError> {
        let mut magic = [0u8; 5];
        r.read_exact(&mut magic)?;
        if &magic != b"FPMPS" {
            return Err(MpsError::BadCheckpoint("wrong magic".into()));
        }
        let mut u32buf = [0u8; 4];
        r.read_exact(&mut u32buf)?;
        let version = u32::from_le_bytes(u32buf);
        if version != 1 {
            return Err(MpsError::BadCheckpoint(format!(
                "unsupported version {version}"
            )));
        }
        let mut u64buf = [0u8; 8];
        let mut read_u64 = |r: &mut R| -> Result<u64, MpsError> {
            r.read_exact(&mut u64buf)?;
            Ok(u64::from_le_bytes(u64buf))
        };
        let n_sites = read_u64(r)? as usize;
        let tls_pos = read_u64(r)? as usize;
        let center = read_u64(r)? as usize;
        let bin_dim = read_u64(r)? as usize;
        let chi_overflows = read_u64(r)? as usize;
        if n_sites == 0 || tls_pos >= n_sites || center >= n_sites {
            return Err(MpsError::BadCheckpoint("inconsistent layout".into()));
        }
        let mut f64buf = [0u8; 8];
        r.read_exact(&mut f64buf)?;
        let truncation_error = f64::from_le_bytes(f64buf);
        let mut dims = Vec::with_capacity(n_sites);
        {
            let mut buf = [0u8; 8];
            for _ in 0..n_sites {
                let mut triple = [0usize; 3];
                for t in triple.iter_mut() {
                    r.read_exact(&mut buf)?;
                    *t = u64::from_le_bytes(buf) as usize;
                }
                dims.push((triple[0], triple[1], triple[2]));
            }
        }
        let mut tensors = Vec::with_capacity(n_sites);
        for &(dl, d, dr) in &dims {
            let mut t = Array3::<C64>::zeros((dl, d, dr));
            for z in t.iter_mut() {
                let mut re = [0u8; 8];
                let mut im = [0u8; 8];
                r.read_exact(&mut re)?;
                r.read_exact(&mut im)?;
                *z = C64::new(f64::from_le_bytes(re), f64::from_le_bytes(im));
            }
            tensors.push(t);
        }
        Ok(Self {
            tensors,
            tls_pos,
            center,
            bin_dim,
            truncation_error,
            chi_overflows,
        })
    }
}

fn purge_keep(sig: &ndarray::Array1<f64>) -> usize {
    let max = sig.iter().cloned().fold(0.0, f64::max);
    sig.iter()
        .filter(|&&s| s > 1e-14 * max)
        .count()
        .max(1)
}

/// `E'[a', b'] = Σ_p A_p† E A_p` moving a bra/ket bond pair one site right.
fn transfer_left_env(t: &Array3<C64>, env: &Array2<C64>) -> Array2<C64> {
    let (dl, d, dr) = t.dim();
    let mut out = Array2::<C64>::zeros((dr, dr));
    // tmp[a_bra, p, b'] = Σ_b E[a_bra, b] T[b, p, b']
    let mut tmp = vec![C64::new(0.0, 0.0); dl * d * dr];
    for ab in 0..dl {
        for b in 0..dl {
            let w = env[[ab, b]];
            if w == C64::new(0.0, 0.0) {
                continue;
            }
            for p in 0..d {
                for bp in 0..dr {
                    tmp[(ab * d + p) * dr + bp] += w * t[[b, p, bp]];
                }
            }
        }
    }
    for ab in 0..dl {
        for p in 0..d {
            for ap in 0..dr {
                let c = t[[ab, p, ap]].conj();
                if c == C64::new(0.0, 0.0) {
                    continue;
                }
                for bp in 0..dr {
                    out[[ap, bp]] += c * tmp[(ab * d + p) * dr + bp];
                }
            }
        }
    }
    out
}

/// Same as [`transfer_left_env`] with an operator inserted on the ket and
/// bra (single ket-side operator `op`), starting from an identity left
/// environment: `E[a, b] = Σ_{l,p',p} T*[l,p',a]·op[p',p]·T[l,p,b]`.
fn op_transfer_left(t: &Array3<C64>, op: &Array2<C64>) -> Array2<C64> {
    let (dl, d, dr) = t.dim();
    let mut out = Array2::<C64>::zeros((dr, dr));
    for l in 0..dl {
        for pb in 0..d {
            for pk in 0..d {
                let o = op[[pb, pk]];
                if o == C64::new(0.0, 0.0) {
                    continue;
                }
                for a in 0..dr {
                    let c = t[[l, pb, a]].conj() * o;
                    for b in 0..dr {
                        out[[a, b]] += c * t[[l, pk, b]];
                    }
                }
            }
        }
    }
    out
}

/// Move a right environment one site left:
/// `E'[a, b] = Σ_{p} A_p E A_p†` with `A_p = T[:, p, :]`.
fn transfer_right_env(t: &Array3<C64>, env: &Array2<C64>) -> Array2<C64> {
    let (dl, d, dr) = t.dim();
    let mut out = Array2::<C64>::zeros((dl, dl));
    // tmp[a_bra, p, b_ket_left] -> contract env over right bonds first:
    // tmp[l_ket, p, r_bra] = Σ_{r_ket} T[l_ket, p, r_ket] env[r_bra, r_ket]^T?
    // env is [bra, ket]; out[a_bra, b_ket] = Σ_{p, r_bra, r_ket}
    //   T*[a_bra, p, r_bra] env[r_bra, r_ket] T[b_ket, p, r_ket]
    let mut tmp = vec![C64::new(0.0, 0.0); dl * d * dr];
    for bk in 0..dl {
        for p in 0..d {
            for rk in 0..dr {
                let v = t[[bk, p, rk]];
                if v == C64::new(0.0, 0.0) {
                    continue;
                }
                for rb in 0..dr {
                    tmp[(bk * d + p) * dr + rb] += env[[rb, rk]] * v;
                }
            }
        }
    }
    for ab in 0..dl {
        for p in 0..d {
            for rb in 0..dr {
                let c = t[[ab, p, rb]].conj();
                if c == C64::new(0.0, 0.0) {
                    continue;
                }
                for bk in 0..dl {
                    out[[ab, bk]] += c * tmp[(bk * d + p) * dr + rb];
                }
            }
        }
    }
    out
}

/// Close an operator insertion: left environment `env` (bra, ket), ket-side
/// operator `op` at this site, right environment `renv` (bra, ket).
///
/// `val = Σ T*[ab,pb,rb] · env[ab,bk] · op[pb,pk] · T[bk,pk,rk] · renv[rb,rk]`,
/// evaluated in stages so the cost stays O(χ³d + χ²d²).
fn close_with_op(
    t: &Array3<C64>,
    op: &Array2<C64>,
    env: &Array2<C64>,
    renv: &Array2<C64>,
) -> C64 {
    let (dl, d, dr) = t.dim();
    let zero = C64::new(0.0, 0.0);
    // S1: tk[bk, pb, rk] = Σ_pk op[pb, pk]·T[bk, pk, rk]
    let mut tk = vec![zero; dl * d * dr];
    for bk in 0..dl {
        for pb in 0..d {
            for pk in 0..d {
                let o = op[[pb, pk]];
                if o == zero {
                    continue;
                }
                for rk in 0..dr {
                    tk[(bk * d + pb) * dr + rk] += o * t[[bk, pk, rk]];
                }
            }
        }
    }
    // S2: m[bk, pb, rb] = Σ_rk tk[bk, pb, rk]·renv[rb, rk]
    let mut m = vec![zero; dl * d * dr];
    for bk in 0..dl {
        for pb in 0..d {
            for rb in 0..dr {
                let mut acc = zero;
                for rk in 0..dr {
                    acc += tk[(bk * d + pb) * dr + rk] * renv[[rb, rk]];
                }
                m[(bk * d + pb) * dr + rb] = acc;
            }
        }
    }
    // S3 + S4: val = Σ_{ab,pb,rb} T*[ab,pb,rb] · Σ_bk env[ab,bk]·m[bk,pb,rb]
    let mut val = zero;
    for ab in 0..dl {
        for bk in 0..dl {
            let w = env[[ab, bk]];
            if w == zero {
                continue;
            }
            for pb in 0..d {
                for rb in 0..dr {
                    val += t[[ab, pb, rb]].conj() * w * m[(bk * d + pb) * dr + rb];
                }
            }
        }
    }
    val
}

/// Single-site expectation with explicit environments.
fn op_env_value(t: &Array3<C64>, op: &Array2<C64>, env: &Array2<C64>, renv: &Array2<C64>) -> C64 {
    close_with_op(t, op, env, renv)
}

#[cfg(test)]
impl TimeBinState {
    /// Flip the emitter tensor to the excited state (test setup).
    fn set_tls_excited(&mut self) {
        let t = &mut self.tensors[self.tls_pos];
        let (dl, _, dr) = t.dim();
        assert_eq!((dl, dr), (1, 1));
        t[[0, 0, 0]] = C64::new(0.0, 0.0);
        t[[0, 1, 0]] = C64::from(1.0);
    }

    /// Contract the full chain into a dense amplitude vector, little-endian
    /// over chain sites (first site fastest). Exponential; tests only.
    fn to_dense_chain(&self) -> Vec<C64> {
        let mut m: Vec<Vec<C64>> = vec![vec![C64::from(1.0)]];
        for t in &self.tensors {
            let (dl, d, dr) = t.dim();
            debug_assert_eq!(m[0].len(), dl);
            let mut next: Vec<Vec<C64>> = Vec::with_capacity(m.len() * d);
            for p in 0..d {
                for row in &m {
                    let mut out = vec![C64::new(0.0, 0.0); dr];
                    for (l, &v) in row.iter().enumerate() {
                        if v == C64::new(0.0, 0.0) {
                            continue;
                        }
                        for (r, o) in out.iter_mut().enumerate() {
                            *o += v * t[[l, p, r]];
                        }
                    }
                    next.push(out);
                }
            }
            // Interleave so earlier sites vary fastest: next is ordered
            // (p, previous-config); reorder to (previous-config, p) = keep.
            // Built as p-major over the *new* site, which makes the newest
            // site the slowest index; that matches little-endian chain order
            // only if we treat the *first* site as fastest, so flip below.
            m = {
                let rows = m.len();
                let mut flipped = Vec::with_capacity(next.len());
                for cfg in 0..rows {
                    for p in 0..d {
                        flipped.push(next[p * rows + cfg].clone());
                    }
                }
                flipped
            };
        }
        m.into_iter().map(|row| row[0]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densesim::DenseSim;
    use crate::pulse::{discretize, PulseShape, PulseSpec, TimeGrid};

    fn test_coeffs(n_bins: usize) -> Vec<C64> {
        // Smooth, asymmetric, deterministic profile.
        let raw: Vec<C64> = (0..n_bins)
            .map(|k| {
                let x = (k as f64 + 0.5) / n_bins as f64;
                C64::new((std::f64::consts::PI * x).sin() + 0.3 * x, 0.1 * (3.0 * x).cos())
            })
            .collect();
        let norm: f64 = raw.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        raw.into_iter().map(|c| c / norm).collect()
    }

    fn cfg_for(n_bins: usize, dt: f64, cutoff: usize) -> CollisionConfig {
        CollisionConfig {
            dt,
            n_bins,
            chi_max: 32,
            svd_tol: 1e-12,
            bin_cutoff: cutoff,
        }
    }

    #[test]
    fn one_photon_input_state() {
        let coeffs = test_coeffs(30);
        let cfg = cfg_for(30, 0.1, 1);
        let state = build_input_mps(&coeffs, 1, &cfg).unwrap();
        assert!((state.norm() - 1.0).abs() < 1e-12);
        assert!(state.verify_canonical() < 1e-12);
        assert!((state.total_excitation() - 1.0).abs() < 1e-10);
        assert!(state.max_bond_dim() <= 2);
        // Occupations are |f_k|^2.
        let occ = state.bin_occupations();
        for (o, c) in occ.iter().zip(&coeffs) {
            assert!((o - c.norm_sqr()).abs() < 1e-12);
        }
    }

    #[test]
    fn two_photon_input_state_matches_dense_amplitudes() {
        let n_bins = 4;
        let coeffs = test_coeffs(n_bins);
        let cfg = cfg_for(n_bins, 0.1, 2);
        let state = build_input_mps(&coeffs, 2, &cfg).unwrap();
        assert!((state.norm() - 1.0).abs() < 1e-12);
        assert!((state.total_excitation() - 2.0).abs() < 1e-10);
        assert!(state.max_bond_dim() <= 3);

        let dense = DenseSim::from_coeffs(&coeffs, 2, 3);
        assert!((dense.norm_sqr() - 1.0).abs() < 1e-12);
        // Chain contraction is big-endian in chain order [TLS][bin0..]:
        // the TLS is the most significant digit, bin 0 the next, and so on.
        let chain = state.to_dense_chain();
        let d = 3usize;
        let bins_dim = d.pow(n_bins as u32);
        for (i, &amp) in chain.iter().enumerate() {
            let s = i / bins_dim;
            let mut rest = i % bins_dim;
            let mut dense_idx = 0usize;
            for k in (0..n_bins).rev() {
                let digit = rest / d.pow(k as u32);
                rest %= d.pow(k as u32);
                // chain digit order: bin (n_bins-1-k) is at weight d^k
                dense_idx += digit * d.pow((n_bins - 1 - k) as u32);
            }
            let expect = dense.amps[s * bins_dim + dense_idx];
            assert!(
                (amp - expect).norm() < 1e-12,
                "amplitude mismatch at {i}: {amp} vs {expect}"
            );
        }
    }

    #[test]
    fn concentrated_pulse_is_product_state() {
        let mut coeffs = vec![C64::new(0.0, 0.0); 12];
        coeffs[5] = C64::from(1.0);
        let cfg = cfg_for(12, 0.1, 1);
        let state = build_input_mps(&coeffs, 1, &cfg).unwrap();
        assert!(state.bond_dims().iter().all(|&b| b == 1));
        assert!((state.total_excitation() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn build_rejects_bad_inputs() {
        let coeffs = test_coeffs(10);
        let cfg = cfg_for(10, 0.1, 1);
        assert!(matches!(
            build_input_mps(&coeffs, 2, &cfg),
            Err(MpsError::CutoffTooSmall { .. })
        ));
        let mut unnorm = coeffs.clone();
        unnorm[0] *= 2.0;
        assert!(matches!(
            build_input_mps(&unnorm, 1, &cfg),
            Err(MpsError::UnnormalizedCoefficients(_))
        ));
        assert!(matches!(
            build_input_mps(&coeffs, 3, &cfg_for(10, 0.1, 4)),
            Err(MpsError::UnsupportedPhotonNumber(3))
        ));
        let mut bad = cfg_for(10, 0.1, 1);
        bad.chi_max = 1;
        assert!(matches!(
            build_input_mps(&coeffs, 1, &bad),
            Err(MpsError::InvalidConfig(_))
        ));
        let mut bad_tol = cfg_for(10, 0.1, 1);
        bad_tol.svd_tol = f64::NAN;
        assert!(matches!(
            build_input_mps(&coeffs, 1, &bad_tol),
            Err(MpsError::InvalidConfig(_))
        ));
    }

    #[test]
    fn collisions_must_run_in_order() {
        let coeffs = test_coeffs(8);
        let cfg = cfg_for(8, 0.2, 1);
        let mut state = build_input_mps(&coeffs, 1, &cfg).unwrap();
        let p = crate::oracle::SystemParams::new(1.0).unwrap();
        let u = collision_unitary(&p, 0.2, 1);
        assert!(matches!(
            state.step(3, &u, &cfg),
            Err(MpsError::OutOfOrderCollision { expected: 0, got: 3 })
        ));
        state.step(0, &u, &cfg).unwrap();
        assert!(matches!(
            state.step(0, &u, &cfg),
            Err(MpsError::OutOfOrderCollision { expected: 1, got: 0 })
        ));
    }

    #[test]
    fn collision_unitary_is_unitary_and_decouples_at_zero_coupling() {
        let p = crate::oracle::SystemParams::new(1.0).unwrap().with_delta(0.3);
        let u = collision_unitary(&p, 0.01, 3);
        let uhu = crate::linalg::matmul(&crate::linalg::adjoint(&u), &u);
        for i in 0..8 {
            for j in 0..8 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((uhu[[i, j]] - C64::from(expect)).norm() < 1e-12);
            }
        }
        let u0 = collision_unitary_with_coupling(0.0, 0.5, 0.01, 2);
        let phase = C64::new(0.0, -0.5 * 0.01).exp();
        for s in 0..2 {
            for m in 0..3 {
                for s2 in 0..2 {
                    for m2 in 0..3 {
                        let expect = if s == s2 && m == m2 {
                            if s == 1 {
                                phase
                            } else {
                                C64::from(1.0)
                            }
                        } else {
                            C64::new(0.0, 0.0)
                        };
                        assert!((u0[[s * 3 + m, s2 * 3 + m2]] - expect).norm() < 1e-13);
                    }
                }
            }
        }
    }

    #[test]
    fn excited_emitter_decays_one_collision() {
        let dt = 1e-3;
        let cfg = cfg_for(6, dt, 1);
        let mut state = vacuum_state(6, &cfg);
        state.set_tls_excited();
        let p = crate::oracle::SystemParams::new(1.0).unwrap();
        let u = collision_unitary(&p, dt, 1);
        let rec = state.step(0, &u, &cfg).unwrap();
        let theta = (1.0f64 * dt).sqrt();
        assert!((rec.population - theta.cos().powi(2)).abs() < 1e-14);
        assert!((rec.population - (1.0 - dt)).abs() < dt * dt);
        assert!((rec.population + rec.bin_occupation - 1.0).abs() < 1e-14);
    }

    #[test]
    fn identity_collision_changes_nothing() {
        let coeffs = test_coeffs(10);
        let cfg = cfg_for(10, 0.1, 1);
        let mut state = build_input_mps(&coeffs, 1, &cfg).unwrap();
        let before_occ = state.bin_occupations();
        let eye = Array2::<C64>::eye(4);
        for k in 0..4 {
            let rec = state.step(k, &eye, &cfg).unwrap();
            assert!((rec.norm_sqr - 1.0).abs() < 1e-12);
            assert!(rec.population.abs() < 1e-14);
        }
        let after_occ = state.bin_occupations();
        for (a, b) in before_occ.iter().zip(&after_occ) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(state.verify_canonical() < 1e-12);
    }

    #[test]
    fn vacuum_is_a_fixed_point() {
        let cfg = cfg_for(20, 0.05, 2);
        let mut state = vacuum_state(20, &cfg);
        let p = crate::oracle::SystemParams::new(1.0).unwrap();
        let record = state.evolve(&p, &cfg).unwrap();
        for (&pop, &occ) in record.populations.iter().zip(&record.occupations) {
            assert_eq!(pop, 0.0);
            assert_eq!(occ, 0.0);
        }
        assert_eq!(state.norm(), 1.0);
        let g = state.output_correlations(cfg.dt).unwrap();
        assert!(g.iter().all(|z| z.norm() == 0.0));
    }

    /// The engine against the dense reference, one photon.
    #[test]
    fn matches_dense_simulator_one_photon() {
        let n_bins = 10;
        let dt = 0.25;
        let coeffs = test_coeffs(n_bins);
        let cfg = cfg_for(n_bins, dt, 1);
        let mut state = build_input_mps(&coeffs, 1, &cfg).unwrap();
        let p = crate::oracle::SystemParams::new(1.0).unwrap().with_delta(0.2);
        let u = collision_unitary(&p, dt, 1);

        let mut dense = DenseSim::from_coeffs(&coeffs, 1, 2);
        for k in 0..n_bins {
            let rec = state.step(k, &u, &cfg).unwrap();
            dense.apply_collision(k, &u);
            assert!(
                (rec.population - dense.population()).abs() < 1e-10,
                "population mismatch at step {k}"
            );
            assert!((rec.bin_occupation - dense.bin_occupation(k)).abs() < 1e-10);
        }
        let g = state.output_correlations(dt).unwrap();
        for j in 0..n_bins {
            for k in 0..n_bins {
                let expect = dense.two_point(j, k) / dt;
                assert!(
                    (g[[j, k]] - expect).norm() < 1e-10,
                    "G[{j}][{k}] = {} vs {}",
                    g[[j, k]],
                    expect
                );
            }
        }
        // Per-pair entry point agrees with the batch sweep.
        let val = state.two_point_correlation(2, 7, dt).unwrap();
        assert!((val - g[[2, 7]]).norm() < 1e-12);
        let herm = state.two_point_correlation(7, 2, dt).unwrap();
        assert!((herm - g[[2, 7]].conj()).norm() < 1e-12);
    }

    /// The engine against the dense reference, two photons (entangling).
    #[test]
    fn matches_dense_simulator_two_photons() {
        let n_bins = 7;
        let dt = 0.3;
        let coeffs = test_coeffs(n_bins);
        let cfg = cfg_for(n_bins, dt, 2);
        let mut state = build_input_mps(&coeffs, 2, &cfg).unwrap();
        let p = crate::oracle::SystemParams::new(1.0).unwrap();
        let u = collision_unitary(&p, dt, 2);

        let mut dense = DenseSim::from_coeffs(&coeffs, 2, 3);
        for k in 0..n_bins {
            let rec = state.step(k, &u, &cfg).unwrap();
            dense.apply_collision(k, &u);
            assert!((rec.population - dense.population()).abs() < 1e-9);
            assert!((rec.bin_occupation - dense.bin_occupation(k)).abs() < 1e-9);
        }
        let g = state.output_correlations(dt).unwrap();
        for j in 0..n_bins {
            for k in j..n_bins {
                let expect = dense.two_point(j, k) / dt;
                assert!(
                    (g[[j, k]] - expect).norm() < 1e-9,
                    "G[{j}][{k}] = {} vs {}",
                    g[[j, k]],
                    expect
                );
            }
        }
        assert!((state.total_excitation() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn correlations_require_scattered_bins() {
        let coeffs = test_coeffs(8);
        let cfg = cfg_for(8, 0.2, 1);
        let mut state = build_input_mps(&coeffs, 1, &cfg).unwrap();
        let p = crate::oracle::SystemParams::new(1.0).unwrap();
        let u = collision_unitary(&p, 0.2, 1);
        for k in 0..4 {
            state.step(k, &u, &cfg).unwrap();
        }
        assert!(state.two_point_correlation(1, 3, 0.2).is_ok());
        assert!(matches!(
            state.two_point_correlation(1, 5, 0.2),
            Err(MpsError::BinNotScattered { .. })
        ));
        assert!(matches!(
            state.output_correlations(0.2),
            Err(MpsError::EvolutionIncomplete { .. })
        ));
    }

    #[test]
    fn scattered_bins_are_frozen() {
        let n_bins = 12;
        let coeffs = test_coeffs(n_bins);
        let cfg = cfg_for(n_bins, 0.15, 1);
        let mut state = build_input_mps(&coeffs, 1, &cfg).unwrap();
        let p = crate::oracle::SystemParams::new(1.0).unwrap();
        let u = collision_unitary(&p, 0.15, 1);
        for k in 0..6 {
            state.step(k, &u, &cfg).unwrap();
        }
        let rho_before = state.reduced_density(2).unwrap();
        for k in 6..n_bins {
            state.step(k, &u, &cfg).unwrap();
        }
        let rho_after = state.reduced_density(2).unwrap();
        for (a, b) in rho_before.iter().zip(rho_after.iter()) {
            assert!((a - b).norm() < 1e-12, "scattered bin state changed");
        }
    }

    #[test]
    fn conservation_and_bond_growth_one_photon() {
        let spec = PulseSpec::new(PulseShape::Rectangular, 2.0, 1).unwrap();
        let grid = TimeGrid::for_pulse(&spec, 0.02, 6.0).unwrap();
        let coeffs = discretize(&spec, &grid).unwrap();
        let cfg = CollisionConfig {
            svd_tol: 1e-10,
            ..CollisionConfig::new(&grid, 2)
        };
        let mut state = build_input_mps(&coeffs, 1, &cfg).unwrap();
        let p = crate::oracle::SystemParams::new(1.0).unwrap();
        let record = state.evolve(&p, &cfg).unwrap();

        assert!(record.max_bond_dim <= 4, "bond grew to {}", record.max_bond_dim);
        assert!(!record.coarse_dt_warning);
        let pending: Vec<f64> = coeffs.iter().map(|c| c.norm_sqr()).collect();
        let drift = record.excitation_drift(&pending, 1.0);
        assert!(drift < 1e-8, "excitation drift {drift}");
        assert!(record.max_norm_drift() < 1e-8);
        // All photons delivered to the output field.
        let total_out: f64 = record.occupations.iter().sum::<f64>();
        let leftover = record.populations.last().unwrap();
        assert!((total_out + leftover - 1.0).abs() < 1e-8);
    }

    #[test]
    fn checkpoint_roundtrip_is_bit_exact() {
        let coeffs = test_coeffs(9);
        let cfg = cfg_for(9, 0.2, 2);
        let mut state = build_input_mps(&coeffs, 2, &cfg).unwrap();
        let p = crate::oracle::SystemParams::new(1.0).unwrap();
        state.evolve(&p, &cfg).unwrap();

        let mut buf = Vec::new();
        state.write_checkpoint(&mut buf).unwrap();
        let loaded = TimeBinState::read_checkpoint(&mut buf.as_slice()).unwrap();
        assert_eq!(loaded.tls_pos, state.tls_pos);
        assert_eq!(loaded.center, state.center);
        assert_eq!(loaded.bin_dim, state.bin_dim);
        assert_eq!(loaded.tensors.len(), state.tensors.len());
        for (a, b) in loaded.tensors.iter().zip(&state.tensors) {
            assert_eq!(a.dim(), b.dim());
            for (x, y) in a.iter().zip(b.iter()) {
                assert_eq!(x.re.to_bits(), y.re.to_bits());
                assert_eq!(x.im.to_bits(), y.im.to_bits());
            }
        }
        // Same observables after reload.
        let g1 = state.output_correlations(0.2).unwrap();
        let g2 = loaded.output_correlations(0.2).unwrap();
        assert_eq!(g1, g2);

        let mut garbage: &[u8] = b"NOTMPS00";
        assert!(matches!(
            TimeBinState::read_checkpoint(&mut garbage),
            Err(MpsError::BadCheckpoint(_))
        ));
    }

    #[test]
    fn expectation_local_dimension_checks() {
        let coeffs = test_coeffs(6);
        let cfg = cfg_for(6, 0.2, 1);
        let state = build_input_mps(&coeffs, 1, &cfg).unwrap();
        let wrong = Array2::<C64>::eye(5);
        assert!(matches!(
            state.expectation_local(1, &wrong),
            Err(MpsError::OperatorDimensionMismatch { .. })
        ));
        assert!(matches!(
            state.expectation_local(99, &wrong),
            Err(MpsError::SiteOutOfRange { .. })
        ));
        // Ground emitter at start.
        let pop = state.expectation_local(0, &excited_projector()).unwrap();
        assert!(pop.norm() < 1e-15);
    }
}
