//! Test-only dense reference simulator: the same collision model evolved on
//! the full (emitter ⊗ bins) Hilbert space, with no tensor-network
//! machinery. Tractable only for a handful of bins, which is exactly what
//! the engine tests need to pin down index conventions and truncation
//! behavior independently of the closed-form oracles.

use ndarray::Array2;
use num_complex::Complex64 as C64;

/// Full state vector over `2 · d^n_bins` amplitudes, indexed as
/// `tls · d^n_bins + Σ_k m_k · d^k`.
pub struct DenseSim {
    pub d: usize,
    pub amps: Vec<C64>,
}

impl DenseSim {
    /// `n`-photon wave packet `(Σ_k f_k b_k†)^n / √(n!) |vac⟩` with the
    /// emitter in the ground state.
    pub fn from_coeffs(coeffs: &[C64], photon_number: u8, d: usize) -> Self {
        let n_bins = coeffs.len();
        let dim = 2 * d.pow(n_bins as u32);
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        let stride = |k: usize| d.pow(k as u32);
        match photon_number {
            1 => {
                for (k, &f) in coeffs.iter().enumerate() {
                    amps[stride(k)] = f;
                }
            }
            2 => {
                assert!(d >= 3, "two photons need cutoff >= 2");
                for (j, &fj) in coeffs.iter().enumerate() {
                    for (k, &fk) in coeffs.iter().enumerate().skip(j) {
                        if j == k {
                            amps[2 * stride(k)] = fk * fk;
                        } else {
                            amps[stride(j) + stride(k)] = 2.0f64.sqrt() * fj * fk;
                        }
                    }
                }
            }
            _ => panic!("unsupported photon number"),
        }
        Self { d, amps }
    }

    /// Apply the joint (TLS ⊗ bin k) unitary, TLS-major indexing
    /// `s·d + m` to match [`crate::mps::collision_unitary`].
    pub fn apply_collision(&mut self, k: usize, u: &Array2<C64>) {
        let d = self.d;
        let half = self.amps.len() / 2;
        let stride = d.pow(k as u32);
        let block = stride * d;
        let mut gather = vec![C64::new(0.0, 0.0); 2 * d];
        let mut base = 0;
        while base < half {
            for low in base..base + stride {
                for (s, g) in gather.chunks_mut(d).enumerate() {
                    for (m, gm) in g.iter_mut().enumerate() {
                        *gm = self.amps[s * half + low + m * stride];
                    }
                }
                for s in 0..2 {
                    for m in 0..d {
                        let mut acc = C64::new(0.0, 0.0);
                        for s2 in 0..2 {
                            for m2 in 0..d {
                                acc += u[[s * d + m, s2 * d + m2]] * gather[s2 * d + m2];
                            }
                        }
                        self.amps[s * half + low + m * stride] = acc;
                    }
                }
            }
            base += block;
        }
    }

    pub fn population(&self) -> f64 {
        let half = self.amps.len() / 2;
        self.amps[half..].iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    fn lowered(&self, k: usize) -> Vec<C64> {
        let d = self.d;
        let stride = d.pow(k as u32);
        let mut out = vec![C64::new(0.0, 0.0); self.amps.len()];
        for (i, o) in out.iter_mut().enumerate() {
            let half = self.amps.len() / 2;
            let idx = i % half;
            let m = (idx / stride) % d;
            if m + 1 < d {
                *o = ((m + 1) as f64).sqrt() * self.amps[i + stride];
            }
        }
        out
    }

    pub fn bin_occupation(&self, k: usize) -> f64 {
        self.lowered(k).iter().map(|z| z.norm_sqr()).sum()
    }

    /// `⟨b_j† b_k⟩`.
    pub fn two_point(&self, j: usize, k: usize) -> C64 {
        let bj = self.lowered(j);
        let bk = self.lowered(k);
        bj.iter().zip(&bk).map(|(a, b)| a.conj() * b).sum()
    }
}
