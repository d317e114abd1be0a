//! Computational and X-basis product states, density matrices and their
//! validity checks.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{eigh, hermiticity_error, trace, CMat, CVec};

pub fn density_from_pure(psi: &CVec) -> CMat {
    let d = psi.len();
    let mut rho = CMat::zeros((d, d));
    for i in 0..d {
        for j in 0..d {
            rho[[i, j]] = psi[i] * psi[j].conj();
        }
    }
    rho
}

/// |0…0⟩ with qubit `k` optionally flipped: bits given most-significant-first.
pub fn basis_state(n: usize, bits: usize) -> CVec {
    let d = 1 << n;
    let mut v = CVec::zeros(d);
    v[bits] = C64::new(1.0, 0.0);
    v
}

/// Single-qubit |+⟩ / |−⟩.
pub fn plus() -> CVec {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ndarray::arr1(&[C64::new(s, 0.0), C64::new(s, 0.0)])
}

pub fn minus() -> CVec {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ndarray::arr1(&[C64::new(s, 0.0), C64::new(-s, 0.0)])
}

pub fn ket0() -> CVec {
    ndarray::arr1(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)])
}

pub fn ket1() -> CVec {
    ndarray::arr1(&[C64::new(0.0, 0.0), C64::new(1.0, 0.0)])
}

/// Tensor product of single-qubit kets, leftmost = qubit 1.
pub fn product_state(factors: &[CVec]) -> CVec {
    let mut out: CVec = ndarray::arr1(&[C64::new(1.0, 0.0)]);
    for f in factors {
        let mut next = CVec::zeros(out.len() * f.len());
        for (i, a) in out.iter().enumerate() {
            for (j, b) in f.iter().enumerate() {
                next[i * f.len() + j] = a * b;
            }
        }
        out = next;
    }
    out
}

/// Check the density-matrix contract: unit trace, Hermitian, PSD to
/// numerical tolerance.
pub fn validate_density(rho: &CMat) -> Result<()> {
    if rho.nrows() != rho.ncols() {
        return Err(Error::DimMismatch("density matrix must be square".into()));
    }
    let tr = trace(rho);
    if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
        return Err(Error::InvalidArg(format!("density trace {tr}")));
    }
    if hermiticity_error(rho) > 1e-12 {
        return Err(Error::InvalidArg("density matrix not Hermitian".into()));
    }
    let (w, _) = eigh(rho)?;
    if w.iter().any(|&x| x < -1e-9) {
        return Err(Error::InvalidArg(format!(
            "density matrix has negative eigenvalue {:.3e}",
            w.iter().cloned().fold(f64::INFINITY, f64::min)
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_plus_zero() {
        let s = product_state(&[plus(), ket0()]);
        assert_eq!(s.len(), 4);
        assert!((s[0].re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((s[2].re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(s[1], C64::new(0.0, 0.0));
        validate_density(&density_from_pure(&s)).unwrap();
    }

    #[test]
    fn invalid_density_rejected() {
        let mut rho = density_from_pure(&ket0());
        rho[[0, 0]] = C64::new(2.0, 0.0);
        assert!(validate_density(&rho).is_err());
    }
}
