//! Seeded random matrices and states, plus the stream-splitting scheme that
//! keeps concurrent tasks reproducible.

use ndarray::Array1;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{CMat, CVec};

/// Master RNG for a run. Child streams are split off by task index so that
/// concurrent evaluation order cannot change the draws any task sees.
pub fn master_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream for task `index` under `seed`.
pub fn task_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index.wrapping_add(1));
    rng
}

pub fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

fn ginibre(dim: usize, rng: &mut impl Rng) -> CMat {
    let mut m = CMat::zeros((dim, dim));
    for i in 0..dim {
        for j in 0..dim {
            m[[i, j]] = C64::new(standard_normal(rng), standard_normal(rng));
        }
    }
    m
}

/// Haar-distributed unitary via QR of a Ginibre matrix (modified
/// Gram–Schmidt with the phase convention fixed by positive diagonals).
pub fn random_unitary(dim: usize, rng: &mut impl Rng) -> CMat {
    let g = ginibre(dim, rng);
    let mut q = g;
    for k in 0..dim {
        for prev in 0..k {
            let proj: C64 = (0..dim).map(|r| q[[r, prev]].conj() * q[[r, k]]).sum();
            for r in 0..dim {
                let sub = proj * q[[r, prev]];
                q[[r, k]] -= sub;
            }
        }
        let norm: f64 = (0..dim).map(|r| q[[r, k]].norm_sqr()).sum::<f64>().sqrt();
        for r in 0..dim {
            q[[r, k]] /= norm;
        }
        // fix the phase so the decomposition is unique given the draw
        let ph = q[[k, k]] / q[[k, k]].norm().max(f64::MIN_POSITIVE);
        for r in 0..dim {
            q[[r, k]] /= ph;
        }
    }
    q
}

/// Random Hermitian matrix with O(1) entries.
pub fn random_hermitian(dim: usize, rng: &mut impl Rng) -> CMat {
    let g = ginibre(dim, rng);
    let gd = crate::linalg::dagger(&g);
    (g + gd).mapv(|z| z * C64::new(0.5, 0.0))
}

/// Haar-ish random pure state.
pub fn random_state(dim: usize, rng: &mut impl Rng) -> CVec {
    let mut v: CVec = Array1::zeros(dim);
    for k in 0..dim {
        v[k] = C64::new(standard_normal(rng), standard_normal(rng));
    }
    let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.mapv(|z| z / norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::unitarity_error;

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = master_rng(99);
        for dim in [2, 4, 8] {
            let u = random_unitary(dim, &mut rng);
            assert!(unitarity_error(&u) < 1e-12);
        }
    }

    #[test]
    fn task_streams_are_independent_and_reproducible() {
        let a1: Vec<f64> = {
            let mut r = task_rng(5, 0);
            (0..4).map(|_| standard_normal(&mut r)).collect()
        };
        let a2: Vec<f64> = {
            let mut r = task_rng(5, 0);
            (0..4).map(|_| standard_normal(&mut r)).collect()
        };
        let b: Vec<f64> = {
            let mut r = task_rng(5, 1);
            (0..4).map(|_| standard_normal(&mut r)).collect()
        };
        assert_eq!(a1, a2);
        assert_ne!(a1, b);
    }
}
