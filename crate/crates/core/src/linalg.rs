//! Dense complex linear algebra for small matrices.
//!
//! Everything the tensor-network engine needs fits in matrices of a few
//! hundred entries at most (collision unitaries are at most 8x8, two-site
//! splits a few dozen rows), so the kernels here are plain cyclic Jacobi
//! iterations: deterministic, dependency-free, and accurate to machine
//! precision at these sizes.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

/// Eigendecomposition of a Hermitian matrix, `a = v · diag(λ) · v†`.
///
/// Eigenvalues are returned in ascending order with the matching column
/// order in `v`. The input is assumed Hermitian; only numerical symmetry
/// within roundoff is required.
pub fn eigh(a: &Array2<C64>) -> (Array1<f64>, Array2<C64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "eigh requires a square matrix");
    let mut h = a.clone();
    let mut v = Array2::<C64>::eye(n);
    if n <= 1 {
        let lam = Array1::from_elem(n.min(1), if n == 1 { h[[0, 0]].re } else { 0.0 });
        return (lam, v);
    }

    let frob: f64 = h.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let tol = 1e-15 * frob.max(f64::MIN_POSITIVE);
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = h[[p, q]];
                let beta = apq.norm();
                off = off.max(beta);
                if beta <= tol {
                    continue;
                }
                let phase = apq / beta;
                let alpha = h[[p, p]].re;
                let gamma = h[[q, q]].re;
                let tau = (gamma - alpha) / (2.0 * beta);
                let t = if tau == 0.0 {
                    1.0
                } else {
                    tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Column rotation: (p, q) <- (c·p − s·conj(phase)·q, s·phase·p + c·q),
                // then the conjugate row rotation; diagonal entries stay real.
                for i in 0..n {
                    let hip = h[[i, p]];
                    let hiq = h[[i, q]];
                    h[[i, p]] = c * hip - s * phase.conj() * hiq;
                    h[[i, q]] = s * phase * hip + c * hiq;
                }
                for j in 0..n {
                    let hpj = h[[p, j]];
                    let hqj = h[[q, j]];
                    h[[p, j]] = c * hpj - s * phase * hqj;
                    h[[q, j]] = s * phase.conj() * hpj + c * hqj;
                }
                for i in 0..n {
                    let vip = v[[i, p]];
                    let viq = v[[i, q]];
                    v[[i, p]] = c * vip - s * phase.conj() * viq;
                    v[[i, q]] = s * phase * vip + c * viq;
                }
            }
        }
        if off <= tol {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| h[[i, i]].re.partial_cmp(&h[[j, j]].re).unwrap());
    let lam = Array1::from_iter(order.iter().map(|&i| h[[i, i]].re));
    let mut vs = Array2::<C64>::zeros((n, n));
    for (new, &old) in order.iter().enumerate() {
        for i in 0..n {
            vs[[i, new]] = v[[i, old]];
        }
    }
    (lam, vs)
}

/// Unitary exponential `exp(-i·k)` of a Hermitian matrix `k`.
///
/// Exact up to roundoff (spectral decomposition), so the result is unitary
/// to machine precision regardless of the norm of `k`.
pub fn expm_neg_i_hermitian(k: &Array2<C64>) -> Array2<C64> {
    let n = k.nrows();
    let (lam, v) = eigh(k);
    let mut out = Array2::<C64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for m in 0..n {
                let phase = C64::new(0.0, -lam[m]).exp();
                acc += v[[i, m]] * phase * v[[j, m]].conj();
            }
            out[[i, j]] = acc;
        }
    }
    out
}

/// Thin singular value decomposition `a = u · diag(s) · v†`.
///
/// `u` is `m × r`, `s` has length `r = min(m, n)`, `vt` is `r × n`; singular
/// values come out in descending order. Uses one-sided Jacobi on the wider
/// side, which keeps small singular values accurate without forming `a†a`
/// at full size.
pub fn svd(a: &Array2<C64>) -> (Array2<C64>, Array1<f64>, Array2<C64>) {
    let (m, n) = a.dim();
    if m >= n {
        svd_tall(a)
    } else {
        // a = u s v†  <=>  a† = v s u†
        let ah = adjoint(a);
        let (u2, s, vt2) = svd_tall(&ah);
        (adjoint(&vt2), s, adjoint(&u2))
    }
}

/// Conjugate transpose.
pub fn adjoint(a: &Array2<C64>) -> Array2<C64> {
    let (m, n) = a.dim();
    let mut out = Array2::<C64>::zeros((n, m));
    for i in 0..m {
        for j in 0..n {
            out[[j, i]] = a[[i, j]].conj();
        }
    }
    out
}

/// One-sided Jacobi SVD for `m >= n`: rotate column pairs of a working copy
/// until mutually orthogonal, accumulating the rotations in `v`.
fn svd_tall(a: &Array2<C64>) -> (Array2<C64>, Array1<f64>, Array2<C64>) {
    let (m, n) = a.dim();
    debug_assert!(m >= n);
    let mut b = a.clone();
    let mut v = Array2::<C64>::eye(n);
    if n == 0 {
        return (b, Array1::zeros(0), v);
    }

    let eps = 1e-14;
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let mut hpp = 0.0f64;
                let mut hqq = 0.0f64;
                let mut hpq = C64::new(0.0, 0.0);
                for i in 0..m {
                    let bp = b[[i, p]];
                    let bq = b[[i, q]];
                    hpp += bp.norm_sqr();
                    hqq += bq.norm_sqr();
                    hpq += bp.conj() * bq;
                }
                let beta = hpq.norm();
                if beta * beta <= eps * eps * hpp * hqq || beta == 0.0 {
                    continue;
                }
                rotated = true;
                let phase = hpq / beta;
                let tau = (hqq - hpp) / (2.0 * beta);
                let t = if tau == 0.0 {
                    1.0
                } else {
                    tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for i in 0..m {
                    let bp = b[[i, p]];
                    let bq = b[[i, q]];
                    b[[i, p]] = c * bp - s * phase.conj() * bq;
                    b[[i, q]] = s * phase * bp + c * bq;
                }
                for i in 0..n {
                    let vp = v[[i, p]];
                    let vq = v[[i, q]];
                    v[[i, p]] = c * vp - s * phase.conj() * vq;
                    v[[i, q]] = s * phase * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let r = n.min(m);
    let mut sig: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|i| b[[i, j]].norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sig[j].partial_cmp(&sig[i]).unwrap().then(i.cmp(&j)));
    sig = order.iter().map(|&j| sig[j]).collect();

    let mut u = Array2::<C64>::zeros((m, r));
    let mut vt = Array2::<C64>::zeros((r, n));
    for (new, &old) in order.iter().enumerate().take(r) {
        let s = sig[new];
        if s > 0.0 {
            for i in 0..m {
                u[[i, new]] = b[[i, old]] / s;
            }
        }
        for i in 0..n {
            vt[[new, i]] = v[[i, old]].conj();
        }
    }
    (u, Array1::from_vec(sig[..r].to_vec()), vt)
}

/// Dense matrix product (row-major loops; fine at the sizes used here).
pub fn matmul(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (m, k) = a.dim();
    let (k2, n) = b.dim();
    assert_eq!(k, k2, "matmul dimension mismatch");
    let mut out = Array2::<C64>::zeros((m, n));
    for i in 0..m {
        for l in 0..k {
            let ail = a[[i, l]];
            if ail == C64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..n {
                out[[i, j]] += ail * b[[l, j]];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Deterministic pseudo-random complex matrix (splitmix64 stream).
    fn pseudo_random(m: usize, n: usize, seed: u64) -> Array2<C64> {
        let mut state = seed;
        let mut next = move || {
            state = state.wrapping_add(0x9e3779b97f4a7c15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
            z = z ^ (z >> 31);
            (z as f64 / u64::MAX as f64) * 2.0 - 1.0
        };
        Array2::from_shape_fn((m, n), |_| C64::new(next(), next()))
    }

    #[test]
    fn eigh_reconstructs_random_hermitian() {
        for (n, seed) in [(2usize, 7u64), (5, 21), (8, 3)] {
            let g = pseudo_random(n, n, seed);
            let mut h = Array2::<C64>::zeros((n, n));
            for i in 0..n {
                for j in 0..n {
                    h[[i, j]] = 0.5 * (g[[i, j]] + g[[j, i]].conj());
                }
            }
            let (lam, v) = eigh(&h);
            // v diag(lam) v† == h
            let mut rec = Array2::<C64>::zeros((n, n));
            for i in 0..n {
                for j in 0..n {
                    for m in 0..n {
                        rec[[i, j]] += v[[i, m]] * C64::from(lam[m]) * v[[j, m]].conj();
                    }
                }
            }
            let err: f64 = (&rec - &h).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(err < 1e-12, "reconstruction error {err}");
            for w in lam.windows(2) {
                assert!(w[0] <= w[1] + 1e-14);
            }
        }
    }

    #[test]
    fn eigh_known_pauli_x() {
        let h = ndarray::array![[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]];
        let (lam, _) = eigh(&h);
        assert!((lam[0] + 1.0).abs() < 1e-14);
        assert!((lam[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn expm_is_unitary_and_matches_rotation() {
        // exp(-i θ σ_y) = [[cos θ, -sin θ], [sin θ, cos θ]]
        let theta = 0.731;
        let sy = ndarray::array![[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]];
        let u = expm_neg_i_hermitian(&sy.mapv(|z| z * theta));
        assert!((u[[0, 0]].re - theta.cos()).abs() < 1e-14);
        assert!((u[[0, 1]].re + theta.sin()).abs() < 1e-14);
        assert!((u[[1, 0]].re - theta.sin()).abs() < 1e-14);
        let uhu = matmul(&adjoint(&u), &u);
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((uhu[[i, j]] - C64::from(expect)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn svd_reconstructs_and_is_isometric() {
        for (m, n, seed) in [(6usize, 4usize, 11u64), (4, 7, 5), (12, 12, 9), (3, 1, 2)] {
            let a = pseudo_random(m, n, seed);
            let (u, s, vt) = svd(&a);
            let r = m.min(n);
            assert_eq!(u.dim(), (m, r));
            assert_eq!(vt.dim(), (r, n));
            let mut us = Array2::<C64>::zeros((m, r));
            for i in 0..m {
                for j in 0..r {
                    us[[i, j]] = u[[i, j]] * s[j];
                }
            }
            let rec = matmul(&us, &vt);
            let err: f64 = (&rec - &a).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(err < 1e-12, "svd reconstruction error {err} for {m}x{n}");
            let uhu = matmul(&adjoint(&u), &u);
            let vvh = matmul(&vt, &adjoint(&vt));
            for i in 0..r {
                for j in 0..r {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((uhu[[i, j]] - C64::from(expect)).norm() < 1e-12);
                    assert!((vvh[[i, j]] - C64::from(expect)).norm() < 1e-12);
                }
            }
            for w in s.windows(2) {
                assert!(w[0] >= w[1] - 1e-14);
            }
        }
    }

    #[test]
    fn svd_handles_rank_deficiency() {
        // Rank-1 outer product: exactly one nonzero singular value.
        let m = 5;
        let n = 4;
        let x = pseudo_random(m, 1, 31);
        let y = pseudo_random(1, n, 32);
        let a = matmul(&x, &y);
        let (_, s, _) = svd(&a);
        assert!(s[0] > 1e-3);
        for &v in s.iter().skip(1) {
            assert!(v < 1e-12 * s[0]);
        }
    }
}
