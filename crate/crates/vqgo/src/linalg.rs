//! Dense complex linear algebra for small Hilbert spaces.
//!
//! Everything here is sized for dimensions up to a few hundred, which covers
//! the truncated transmon chains this crate simulates. All routines are
//! deterministic single-threaded kernels so that seeded runs reproduce
//! bit-identically.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type CMat = Array2<C64>;
pub type CVec = Array1<C64>;

pub const ONE: C64 = C64::new(1.0, 0.0);
pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Conjugate transpose.
pub fn dagger(m: &CMat) -> CMat {
    m.t().mapv(|z| z.conj())
}

/// Kronecker product, row-major convention: `(a ⊗ b)[i*p+k, j*q+l] = a[i,j] b[k,l]`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    ndarray::linalg::kron(a, b)
}

pub fn trace(m: &CMat) -> C64 {
    m.diag().sum()
}

/// Max-norm of `m† m − 1`; zero for exactly unitary matrices.
pub fn unitarity_error(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut g = dagger(m).dot(m);
    for k in 0..n {
        g[[k, k]] -= ONE;
    }
    g.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Max entrywise |m − m†|.
pub fn hermiticity_error(m: &CMat) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    worst
}

pub fn is_hermitian(m: &CMat, tol: f64) -> bool {
    m.nrows() == m.ncols() && hermiticity_error(m) <= tol
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn frob_norm(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations. Returns eigenvalues in ascending order and the matching
/// orthonormal eigenvectors as columns.
pub fn eigh(a: &CMat) -> Result<(Array1<f64>, CMat)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimMismatch(format!("eigh on {}x{}", n, a.ncols())));
    }
    if !is_hermitian(a, 1e-9 * (1.0 + frob_norm(a))) {
        return Err(Error::InvalidArg("eigh requires a Hermitian matrix".into()));
    }
    let mut m = a.clone();
    // enforce exact Hermiticity so rotations stay consistent
    for i in 0..n {
        m[[i, i]] = C64::new(m[[i, i]].re, 0.0);
        for j in (i + 1)..n {
            let avg = 0.5 * (m[[i, j]] + m[[j, i]].conj());
            m[[i, j]] = avg;
            m[[j, i]] = avg.conj();
        }
    }
    let mut v = CMat::eye(n);
    let scale = frob_norm(&m).max(f64::MIN_POSITIVE);
    for _sweep in 0..64 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[[p, q]].norm_sqr();
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                let r = apq.norm();
                if r <= 1e-300 {
                    continue;
                }
                let phase = apq / r;
                let app = m[[p, p]].re;
                let aqq = m[[q, q]].re;
                let tau = (app - aqq) / (2.0 * r);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // columns: col_p <- c col_p + s phase* col_q ; col_q <- -s phase col_p + c col_q
                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = c * mkp + s * phase.conj() * mkq;
                    m[[k, q]] = -s * phase * mkp + c * mkq;
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp + s * phase.conj() * vkq;
                    v[[k, q]] = -s * phase * vkp + c * vkq;
                }
                // rows: row_p <- c row_p + s phase row_q ; row_q <- -s phase* row_p + c row_q
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = c * mpk + s * phase * mqk;
                    m[[q, k]] = -s * phase.conj() * mpk + c * mqk;
                }
                m[[p, q]] = ZERO;
                m[[q, p]] = ZERO;
                m[[p, p]] = C64::new(m[[p, p]].re, 0.0);
                m[[q, q]] = C64::new(m[[q, q]].re, 0.0);
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[[i, i]].re.total_cmp(&m[[j, j]].re));
    let mut w = Array1::zeros(n);
    let mut vs = CMat::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        w[dst] = m[[src, src]].re;
        for k in 0..n {
            vs[[k, dst]] = v[[k, src]];
        }
    }
    Ok((w, vs))
}

/// `exp(−i h t)` for Hermitian `h`, via eigendecomposition. Unitary to
/// machine precision regardless of `‖h t‖`.
pub fn expm_hermitian(h: &CMat, t: f64) -> Result<CMat> {
    let (w, v) = eigh(h)?;
    Ok(evolve_from_eigh(&w, &v, t))
}

/// `exp(−i h t)` from a precomputed eigensystem of `h`.
pub fn evolve_from_eigh(w: &Array1<f64>, v: &CMat, t: f64) -> CMat {
    let n = w.len();
    let mut scaled = v.clone();
    for (k, &wk) in w.iter().enumerate() {
        let ph = C64::from_polar(1.0, -wk * t);
        for r in 0..n {
            scaled[[r, k]] *= ph;
        }
    }
    scaled.dot(&dagger(v))
}

/// Time-ordered product of midpoint-sampled piecewise-constant exponentials:
/// `U = Π_k exp(−i h(t_k + dt/2) dt)` with the latest factor leftmost.
///
/// The step is shrunk so it divides `t1 − t0` exactly. Accuracy is O(dt²)
/// in the time variation of `h`; each factor is exactly unitary.
pub fn propagate_piecewise<F>(h_of_t: F, t0: f64, t1: f64, dt: f64) -> Result<CMat>
where
    F: Fn(f64) -> CMat,
{
    if t1 < t0 {
        return Err(Error::InvalidArg(format!("time window [{t0}, {t1}] reversed")));
    }
    if dt <= 0.0 {
        return Err(Error::InvalidArg("dt must be positive".into()));
    }
    let span = t1 - t0;
    let probe = h_of_t(t0);
    let dim = probe.nrows();
    if span == 0.0 {
        return Ok(CMat::eye(dim));
    }
    let steps = (span / dt).ceil().max(1.0) as usize;
    let step = span / steps as f64;
    let mut u = CMat::eye(dim);
    for k in 0..steps {
        let tm = t0 + (k as f64 + 0.5) * step;
        let h = h_of_t(tm);
        let uk = expm_hermitian(&h, step)?;
        u = uk.dot(&u);
    }
    Ok(u)
}

/// Eigenphases of a unitary: returns `(θ, V)` with `U = V diag(e^{iθ}) V†`
/// and `θ ∈ (−π, π]`.
///
/// Works by simultaneous diagonalization of the commuting Hermitian pair
/// `(U + U†)/2` and `(U − U†)/2i`, resolving degenerate cosine clusters with
/// a second diagonalization pass.
pub fn unitary_eigenphases(u: &CMat) -> Result<(Array1<f64>, CMat)> {
    let n = u.nrows();
    let uerr = unitarity_error(u);
    if uerr > 1e-6 {
        return Err(Error::InvalidArg(format!(
            "unitary_eigenphases on a matrix with unitarity error {uerr:.2e}"
        )));
    }
    let ud = dagger(u);
    let hc = (u + &ud).mapv(|z| 0.5 * z);
    let hs = (u - &ud).mapv(|z| z * C64::new(0.0, -0.5));
    let (wc, mut v) = eigh(&hc)?;
    // resolve clusters of equal cos θ by diagonalizing the projected sine part
    let ctol = 1e-7;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (wc[end] - wc[start]).abs() <= ctol {
            end += 1;
        }
        if end - start > 1 {
            let cols = v.slice(ndarray::s![.., start..end]).to_owned();
            let block = dagger(&cols).dot(&hs).dot(&cols);
            let (_, wv) = eigh(&block)?;
            let rotated = cols.dot(&wv);
            v.slice_mut(ndarray::s![.., start..end]).assign(&rotated);
        }
        start = end;
    }
    let mut theta = Array1::zeros(n);
    for k in 0..n {
        let col = v.column(k).to_owned();
        let ucol = u.dot(&col);
        let lam: C64 = col.iter().zip(ucol.iter()).map(|(a, b)| a.conj() * b).sum();
        theta[k] = lam.im.atan2(lam.re);
    }
    // residual check: V e^{iθ} V† must reproduce U
    let mut rec = v.clone();
    for k in 0..n {
        let ph = C64::from_polar(1.0, theta[k]);
        for r in 0..n {
            rec[[r, k]] *= ph;
        }
    }
    let rec = rec.dot(&dagger(&v));
    let resid = max_abs_diff(&rec, u);
    if resid > 1e-7 {
        return Err(Error::Linalg(format!(
            "simultaneous diagonalization residual {resid:.2e}"
        )));
    }
    Ok((theta, v))
}

/// Hermitian generator `G` with `u = exp(−i G)`, principal branch
/// (eigenphases of `G` in `[−π, π)`).
pub fn hermitian_log(u: &CMat) -> Result<CMat> {
    let (theta, v) = unitary_eigenphases(u)?;
    let n = u.nrows();
    let mut scaled = v.clone();
    for k in 0..n {
        let g = C64::new(-theta[k], 0.0);
        for r in 0..n {
            scaled[[r, k]] *= g;
        }
    }
    Ok(scaled.dot(&dagger(&v)))
}

/// Polar decomposition of a near-unitary square matrix: returns the closest
/// unitary factor together with the smallest singular value of `m`.
pub fn polar_unitary(m: &CMat) -> Result<(CMat, f64)> {
    let g = dagger(m).dot(m);
    let (w, v) = eigh(&g)?;
    let smin = w.iter().cloned().fold(f64::INFINITY, f64::min);
    if smin < 1e-12 {
        return Err(Error::Linalg(format!(
            "polar decomposition of a rank-deficient matrix (σ²_min = {smin:.2e})"
        )));
    }
    let n = m.nrows();
    let mut inv_sqrt = v.clone();
    for k in 0..n {
        let f = C64::new(1.0 / w[k].sqrt().max(f64::MIN_POSITIVE), 0.0);
        for r in 0..n {
            inv_sqrt[[r, k]] *= f;
        }
    }
    let gi = inv_sqrt.dot(&dagger(&v));
    Ok((m.dot(&gi), smin.max(0.0).sqrt()))
}

/// Solve `a x = b` for complex square `a` by LU with partial pivoting.
pub fn lu_solve(a: &CMat, b: &CMat) -> Result<CMat> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n {
        return Err(Error::DimMismatch("lu_solve shapes".into()));
    }
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for col in 0..n {
        let (mut pivot, mut best) = (col, lu[[col, col]].norm());
        for r in (col + 1)..n {
            let mag = lu[[r, col]].norm();
            if mag > best {
                pivot = r;
                best = mag;
            }
        }
        if best < 1e-300 {
            return Err(Error::Linalg("singular matrix in lu_solve".into()));
        }
        if pivot != col {
            perm.swap(pivot, col);
            for c in 0..n {
                let tmp = lu[[col, c]];
                lu[[col, c]] = lu[[pivot, c]];
                lu[[pivot, c]] = tmp;
            }
        }
        let diag = lu[[col, col]];
        for r in (col + 1)..n {
            let f = lu[[r, col]] / diag;
            lu[[r, col]] = f;
            for c in (col + 1)..n {
                let sub = f * lu[[col, c]];
                lu[[r, c]] -= sub;
            }
        }
    }
    let m = b.ncols();
    let mut x = CMat::zeros((n, m));
    for rhs in 0..m {
        // forward substitution on permuted b
        let mut y = vec![ZERO; n];
        for r in 0..n {
            let mut acc = b[[perm[r], rhs]];
            for c in 0..r {
                acc -= lu[[r, c]] * y[c];
            }
            y[r] = acc;
        }
        for r in (0..n).rev() {
            let mut acc = y[r];
            for c in (r + 1)..n {
                acc -= lu[[r, c]] * x[[c, rhs]];
            }
            x[[r, rhs]] = acc / lu[[r, r]];
        }
    }
    Ok(x)
}

/// Cholesky factor (lower triangular) of a real SPD matrix.
pub fn cholesky(a: &Array2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    let mut l = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut acc = a[[i, j]];
            for k in 0..j {
                acc -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if acc <= 0.0 {
                    return Err(Error::Conditioning(format!(
                        "cholesky pivot {acc:.3e} at index {i}"
                    )));
                }
                l[[i, j]] = acc.sqrt();
            } else {
                l[[i, j]] = acc / l[[j, j]];
            }
        }
    }
    Ok(l)
}

/// Solve `L L^T x = b` given the Cholesky factor `L`.
pub fn cholesky_solve(l: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let n = l.nrows();
    let mut y = Array1::zeros(n);
    for i in 0..n {
        let mut acc = b[i];
        for k in 0..i {
            acc -= l[[i, k]] * y[k];
        }
        y[i] = acc / l[[i, i]];
    }
    let mut x = Array1::zeros(n);
    for i in (0..n).rev() {
        let mut acc = y[i];
        for k in (i + 1)..n {
            acc -= l[[k, i]] * x[k];
        }
        x[i] = acc / l[[i, i]];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_hermitian, random_unitary};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn eigh_reconstructs_and_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for dim in [2usize, 3, 5, 8, 16] {
            let h = random_hermitian(dim, &mut rng);
            let (w, v) = eigh(&h).unwrap();
            assert!(unitarity_error(&v) < 1e-12, "eigenvectors not orthonormal");
            let mut rec = v.clone();
            for k in 0..dim {
                for r in 0..dim {
                    rec[[r, k]] *= C64::new(w[k], 0.0);
                }
            }
            let rec = rec.dot(&dagger(&v));
            assert!(max_abs_diff(&rec, &h) < 1e-11, "dim {dim} reconstruction");
            for k in 1..dim {
                assert!(w[k] >= w[k - 1]);
            }
        }
    }

    #[test]
    fn expm_half_rabi_period_is_minus_i_x() {
        // h = (Ω/2) X evolved for t = π/Ω gives exp(−iπX/2) = −iX
        let omega = 3.0;
        let x = crate::pauli::Pauli::X.matrix();
        let h = x.mapv(|z| z * C64::new(omega / 2.0, 0.0));
        let u = expm_hermitian(&h, std::f64::consts::PI / omega).unwrap();
        let expect = x.mapv(|z| z * C64::new(0.0, -1.0));
        assert!(max_abs_diff(&u, &expect) < 1e-12);
    }

    #[test]
    fn expm_zero_time_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random_hermitian(6, &mut rng);
        let u = expm_hermitian(&h, 0.0).unwrap();
        assert!(max_abs_diff(&u, &CMat::eye(6)) < 1e-14);
    }

    #[test]
    fn expm_inverse_product_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let h = random_hermitian(4, &mut rng);
            let t = 0.7;
            let u = expm_hermitian(&h, t).unwrap();
            let ui = expm_hermitian(&h, -t).unwrap();
            assert!(max_abs_diff(&u.dot(&ui), &CMat::eye(4)) < 1e-12);
        }
    }

    #[test]
    fn expm_rejects_non_hermitian() {
        let mut m = CMat::eye(2);
        m[[0, 1]] = C64::new(1.0, 0.0);
        assert!(expm_hermitian(&m, 1.0).is_err());
    }

    #[test]
    fn piecewise_constant_matches_expm() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = random_hermitian(4, &mut rng);
        let u_ref = expm_hermitian(&h, 1.3).unwrap();
        let u = propagate_piecewise(|_| h.clone(), 0.0, 1.3, 0.01).unwrap();
        assert!(max_abs_diff(&u, &u_ref) < 1e-9);
        assert!(unitarity_error(&u) < 1e-10);
    }

    #[test]
    fn piecewise_rejects_reversed_window() {
        let h = CMat::eye(2);
        assert!(propagate_piecewise(|_| h.clone(), 1.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn piecewise_commuting_slices_equal_integrated_exponential() {
        // h(t) = f(t) Z with scalar f: product equals exp(−i Z ∫f)
        let z = crate::pauli::Pauli::Z.matrix();
        let f = |t: f64| 1.0 + 0.5 * t;
        let h = |t: f64| z.mapv(|v| v * C64::new(f(t), 0.0));
        let u = propagate_piecewise(h, 0.0, 2.0, 1e-3).unwrap();
        let integral = 2.0 + 0.25 * 4.0; // ∫₀² f dt
        let u_ref = expm_hermitian(&z, integral).unwrap();
        assert!(max_abs_diff(&u, &u_ref) < 1e-8);
    }

    #[test]
    fn piecewise_second_order_convergence() {
        // driven single qubit: error vs an 8x-finer reference shrinks ≥ quadratically
        let x = crate::pauli::Pauli::X.matrix();
        let z = crate::pauli::Pauli::Z.matrix();
        let h = |t: f64| {
            let hx = x.mapv(|v| v * C64::new((3.0 * t).cos(), 0.0));
            let hz = z.mapv(|v| v * C64::new(1.0 + (2.0 * t).sin(), 0.0));
            hx + hz
        };
        let fine = propagate_piecewise(h, 0.0, 2.0, 1e-4 / 8.0).unwrap();
        let e1 = max_abs_diff(&propagate_piecewise(h, 0.0, 2.0, 4e-2).unwrap(), &fine);
        let e2 = max_abs_diff(&propagate_piecewise(h, 0.0, 2.0, 2e-2).unwrap(), &fine);
        let order = (e1 / e2).log2();
        assert!(order > 1.9, "observed order {order:.2} from e1={e1:.2e} e2={e2:.2e}");
    }

    #[test]
    fn eigenphases_roundtrip_random_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for dim in [2usize, 4, 8] {
            let u = random_unitary(dim, &mut rng);
            let (theta, v) = unitary_eigenphases(&u).unwrap();
            let mut rec = v.clone();
            for k in 0..dim {
                let ph = C64::from_polar(1.0, theta[k]);
                for r in 0..dim {
                    rec[[r, k]] *= ph;
                }
            }
            let rec = rec.dot(&dagger(&v));
            assert!(max_abs_diff(&rec, &u) < 1e-9);
        }
    }

    #[test]
    fn hermitian_log_inverts_expm() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let h = random_hermitian(4, &mut rng);
        // scale so the spectrum stays inside the principal branch
        let h = h.mapv(|z| z * C64::new(0.2, 0.0));
        let u = expm_hermitian(&h, 1.0).unwrap();
        let g = hermitian_log(&u).unwrap();
        assert!(max_abs_diff(&g, &h) < 1e-9);
    }

    #[test]
    fn hermitian_log_handles_degenerate_cosines() {
        // generator with ±θ eigenphase pairs: cos degenerate, sine resolves
        let y = crate::pauli::Pauli::Y.matrix();
        let h = y.mapv(|z| z * C64::new(0.8, 0.0));
        let u = expm_hermitian(&h, 1.0).unwrap();
        let g = hermitian_log(&u).unwrap();
        assert!(max_abs_diff(&g, &h) < 1e-10);
    }

    #[test]
    fn polar_recovers_unitary_factor() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let u = random_unitary(4, &mut rng);
        // shrink one column pair: m = u * diag(1, 1, 0.9, 0.8)
        let mut d = CMat::eye(4);
        d[[2, 2]] = C64::new(0.9, 0.0);
        d[[3, 3]] = C64::new(0.8, 0.0);
        let m = u.dot(&d);
        let (up, smin) = polar_unitary(&m).unwrap();
        assert!((smin - 0.8).abs() < 1e-10);
        assert!(unitarity_error(&up) < 1e-10);
        assert!(max_abs_diff(&up, &u) < 1e-9);
    }

    #[test]
    fn lu_solve_random_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for _ in 0..10 {
            let a = random_unitary(6, &mut rng) + &(CMat::eye(6).mapv(|z| z * C64::new(0.3, 0.1)));
            let x_true = random_unitary(6, &mut rng);
            let b = a.dot(&x_true);
            let x = lu_solve(&a, &b).unwrap();
            assert!(max_abs_diff(&x, &x_true) < 1e-10);
        }
    }

    #[test]
    fn cholesky_solve_spd() {
        let a = ndarray::arr2(&[[4.0, 1.0, 0.2], [1.0, 3.0, 0.5], [0.2, 0.5, 2.0]]);
        let l = cholesky(&a).unwrap();
        let b = ndarray::arr1(&[1.0, 2.0, 3.0]);
        let x = cholesky_solve(&l, &b);
        let r = a.dot(&x) - &b;
        assert!(r.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn kron_mixed_product_property() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let a = random_unitary(2, &mut rng);
        let b = random_unitary(2, &mut rng);
        let c = random_unitary(2, &mut rng);
        let d = random_unitary(2, &mut rng);
        let lhs = kron(&a, &b).dot(&kron(&c, &d));
        let rhs = kron(&a.dot(&c), &b.dot(&d));
        assert!(max_abs_diff(&lhs, &rhs) < 1e-12);
    }
}
