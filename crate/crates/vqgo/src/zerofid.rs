//! Zero-fidelity estimation: an importance-sampled fidelity proxy built
//! from SIC input states and Pauli observables.
//!
//! With `W_j = σ_j/√d` orthonormal and `ρ_i` running over SIC product
//! states, `F₀ = (1/d²) Σ_ij tr[Uρ_iU†W_j]·tr[Γ(ρ_i)W_j]`. Sampling pairs
//! with probability `Pr(i,j) = tr[Uρ_iU†W_j]²/d²` — which sums to exactly 1
//! for any unitary target — makes the ratio estimator
//! `X(i,j) = tr[Γ(ρ_i)W_j]/tr[Uρ_iU†W_j]` unbiased for F₀, with variance
//! that vanishes as the channel approaches the target.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{unitarity_error, CMat};
use crate::pauli::pauli_basis;
use crate::random::task_rng;
use crate::tomography::{sic_product, ChannelOracle};

/// One sampled (preparation, observable) pair with its ideal value
/// `tr[Uρ_iU†W_j]` and draw probability.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PlanSample {
    pub prep: usize,
    pub obs: usize,
    pub ideal: f64,
    pub prob: f64,
}

/// A frozen sampling plan: replayable from (target, l, seed).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ZeroFidelityPlan {
    pub n: usize,
    pub l: usize,
    pub seed: u64,
    pub samples: Vec<PlanSample>,
}

/// All ideal values `t_ij = tr[Uρ_iU†W_j]` for the plan support.
fn ideal_values(u: &CMat, n: usize) -> Result<Vec<Vec<f64>>> {
    let d = 1usize << n;
    let basis = pauli_basis(n)?;
    let sqrt_d = (d as f64).sqrt();
    let n_preps = 4usize.pow(n as u32);
    let rows: Vec<Vec<f64>> = (0..n_preps)
        .into_par_iter()
        .map(|prep| {
            let psi = u.dot(&sic_product(n, prep));
            let rho = crate::states::density_from_pure(&psi);
            basis
                .iter()
                .map(|obs| obs.expectation(&rho) / sqrt_d)
                .collect()
        })
        .collect();
    Ok(rows)
}

impl ZeroFidelityPlan {
    /// Build a plan for target `u` with `l` draws under `seed`.
    pub fn build(u: &CMat, l: usize, seed: u64) -> Result<Self> {
        if l == 0 {
            return Err(Error::InvalidArg("plan needs l ≥ 1".into()));
        }
        if unitarity_error(u) > 1e-8 {
            return Err(Error::InvalidArg("zero-fidelity target must be unitary".into()));
        }
        let d = u.nrows();
        let n = (d as f64).log2().round() as usize;
        let t = ideal_values(u, n)?;
        let d2 = (d * d) as f64;
        // Pr(i,j) = t²/d²; exact normalization is a structural identity
        let mut flat: Vec<(usize, usize, f64, f64)> = Vec::new();
        let mut total = 0.0;
        for (i, row) in t.iter().enumerate() {
            for (j, &tij) in row.iter().enumerate() {
                let p = tij * tij / d2;
                total += p;
                if tij.abs() > 1e-12 {
                    flat.push((i, j, tij, p));
                }
            }
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Linalg(format!(
                "sampling distribution sums to {total:.12}, expected 1"
            )));
        }
        let mut cdf = Vec::with_capacity(flat.len());
        let mut acc = 0.0;
        for &(_, _, _, p) in &flat {
            acc += p;
            cdf.push(acc);
        }
        let mut rng = task_rng(seed, 0);
        let mut samples = Vec::with_capacity(l);
        for _ in 0..l {
            let r: f64 = rand::Rng::gen::<f64>(&mut rng) * acc;
            let mut k = cdf.partition_point(|&c| c < r);
            if k >= flat.len() {
                k = flat.len() - 1;
            }
            let (prep, obs, ideal, prob) = flat[k];
            samples.push(PlanSample { prep, obs, ideal, prob });
        }
        Ok(ZeroFidelityPlan { n, l, seed, samples })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Exhaustive zero-fidelity: `F₀ = (1/d²) Σ_ij t_ij · g_ij` with `g`
/// evaluated through the oracle (exact for noiseless oracles).
pub fn zero_fidelity_exact(u: &CMat, oracle: &dyn ChannelOracle) -> Result<f64> {
    let d = u.nrows();
    let n = (d as f64).log2().round() as usize;
    if oracle.n_qubits() != n {
        return Err(Error::DimMismatch("oracle size vs target".into()));
    }
    let t = ideal_values(u, n)?;
    let basis = pauli_basis(n)?;
    let sqrt_d = (d as f64).sqrt();
    let n_preps = 4usize.pow(n as u32);
    let contributions: Vec<Result<f64>> = (0..n_preps)
        .into_par_iter()
        .map(|prep| {
            let input = sic_product(n, prep);
            let mut acc = 0.0;
            for (j, obs) in basis.iter().enumerate() {
                if t[prep][j].abs() < 1e-14 {
                    continue;
                }
                let setting = (prep * basis.len() + j) as u64;
                let g = oracle.expect(&input, obs, setting)? / sqrt_d;
                acc += t[prep][j] * g;
            }
            Ok(acc)
        })
        .collect();
    let mut f0 = 0.0;
    for c in contributions {
        f0 += c?;
    }
    Ok(f0 / (d * d) as f64)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ZeroFidelityEstimate {
    pub value: f64,
    pub std_error: f64,
    pub l: usize,
}

/// Monte-Carlo zero-fidelity: mean of `X = g/t` over the plan's draws, with
/// the standard error of the mean. `replica` decorrelates the oracle's shot
/// noise between independent repetitions of the same plan.
pub fn zero_fidelity_estimate(
    plan: &ZeroFidelityPlan,
    oracle: &dyn ChannelOracle,
    replica: u64,
) -> Result<ZeroFidelityEstimate> {
    if oracle.n_qubits() != plan.n {
        return Err(Error::DimMismatch("oracle size vs plan".into()));
    }
    let sqrt_d = ((1usize << plan.n) as f64).sqrt();
    let basis = pauli_basis(plan.n)?;
    let xs: Vec<Result<f64>> = plan
        .samples
        .par_iter()
        .enumerate()
        .map(|(k, s)| {
            let input = sic_product(plan.n, s.prep);
            let setting = replica
                .wrapping_mul(0x9e37_79b9_7f4a_7c15)
                .wrapping_add(k as u64);
            let g = oracle.expect(&input, &basis[s.obs], setting)? / sqrt_d;
            Ok(g / s.ideal)
        })
        .collect();
    let mut vals = Vec::with_capacity(xs.len());
    for x in xs {
        vals.push(x?);
    }
    let l = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / l;
    let var = if vals.len() > 1 {
        vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (l - 1.0)
    } else {
        0.0
    };
    Ok(ZeroFidelityEstimate {
        value: mean,
        std_error: (var / l).sqrt(),
        l: vals.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::expm_hermitian;
    use crate::pauli::{Pauli, PauliString};
    use crate::random::{master_rng, random_unitary};
    use crate::tomography::UnitaryChannel;

    fn zx(theta: f64) -> CMat {
        let m = PauliString(vec![Pauli::Z, Pauli::X]).matrix();
        expm_hermitian(&m, -theta).unwrap()
    }

    #[test]
    fn plan_probabilities_normalize_and_exclude_zeros() {
        let u = zx(0.3);
        let plan = ZeroFidelityPlan::build(&u, 100, 5).unwrap();
        assert_eq!(plan.samples.len(), 100);
        for s in &plan.samples {
            assert!(s.ideal.abs() > 1e-12);
            assert!(s.prob > 0.0);
        }
    }

    #[test]
    fn perfect_channel_every_draw_is_one() {
        let u = zx(std::f64::consts::FRAC_PI_4);
        let plan = ZeroFidelityPlan::build(&u, 50, 1).unwrap();
        let oracle = UnitaryChannel::exact(u.clone());
        let est = zero_fidelity_estimate(&plan, &oracle, 0).unwrap();
        assert!((est.value - 1.0).abs() < 1e-10);
        assert!(est.std_error < 1e-10);
        let exact = zero_fidelity_exact(&u, &oracle).unwrap();
        assert!((exact - 1.0).abs() < 1e-10);
    }

    #[test]
    fn identity_channel_against_x_target_brute_force() {
        // n = 1: exhaustive 4 preps × 4 observables against the analytic sum
        let u = Pauli::X.matrix();
        let oracle = UnitaryChannel::exact(CMat::eye(2));
        let f0 = zero_fidelity_exact(&u, &oracle).unwrap();
        // brute force with dense algebra
        let basis = pauli_basis(1).unwrap();
        let mut acc = 0.0;
        for prep in 0..4 {
            let psi = sic_product(1, prep);
            let rho = crate::states::density_from_pure(&psi);
            let urho = crate::states::density_from_pure(&u.dot(&psi));
            for obs in &basis {
                let t = obs.expectation(&urho) / 2.0f64.sqrt();
                let g = obs.expectation(&rho) / 2.0f64.sqrt();
                acc += t * g;
            }
        }
        let expect = acc / 4.0;
        assert!((f0 - expect).abs() < 1e-12, "{f0} vs {expect}");
    }

    #[test]
    fn zero_fidelity_bounded_by_one_on_random_pairs() {
        let mut rng = master_rng(77);
        for _ in 0..12 {
            let u = random_unitary(4, &mut rng);
            let v = random_unitary(4, &mut rng);
            let f0 = zero_fidelity_exact(&u, &UnitaryChannel::exact(v)).unwrap();
            assert!(f0 <= 1.0 + 1e-9, "F0 = {f0}");
        }
    }

    #[test]
    fn estimator_is_unbiased_for_miscalibrated_channel() {
        let target = zx(std::f64::consts::FRAC_PI_4);
        let gamma = zx(std::f64::consts::FRAC_PI_4 + 0.25);
        let oracle = UnitaryChannel::exact(gamma.clone());
        let exact = zero_fidelity_exact(&target, &oracle).unwrap();
        let reps = 300;
        let mut means = Vec::new();
        for r in 0..reps {
            let plan = ZeroFidelityPlan::build(&target, 200, 1000 + r).unwrap();
            let est = zero_fidelity_estimate(&plan, &oracle, r).unwrap();
            means.push(est.value);
        }
        let grand = means.iter().sum::<f64>() / reps as f64;
        let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (reps as f64 - 1.0);
        let se = (var / reps as f64).sqrt();
        assert!(
            (grand - exact).abs() <= 3.0 * se.max(1e-6),
            "mean {grand:.6} vs exact {exact:.6} (se {se:.2e})"
        );
    }

    #[test]
    fn variance_shrinks_as_fidelity_approaches_one() {
        let target = zx(std::f64::consts::FRAC_PI_4);
        // same channel family, two detunings
        let near = zx(std::f64::consts::FRAC_PI_4 + 0.11);
        let far = zx(std::f64::consts::FRAC_PI_4 + 0.80);
        let plan = ZeroFidelityPlan::build(&target, 4000, 3).unwrap();
        let var_of = |g: &CMat| {
            let oracle = UnitaryChannel::exact(g.clone());
            let basis = pauli_basis(2).unwrap();
            let sqrt_d = 2.0;
            let xs: Vec<f64> = plan
                .samples
                .iter()
                .map(|s| {
                    let input = sic_product(2, s.prep);
                    let gg = oracle.expect(&input, &basis[s.obs], 0).unwrap() / sqrt_d;
                    gg / s.ideal
                })
                .collect();
            let m = xs.iter().sum::<f64>() / xs.len() as f64;
            (
                m,
                xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0),
            )
        };
        let (f_near, v_near) = var_of(&near);
        let (f_far, v_far) = var_of(&far);
        assert!(f_near > 0.9 && f_far < 0.6, "{f_near} {f_far}");
        assert!(v_near < v_far, "var {v_near:.4} !< {v_far:.4}");
    }

    #[test]
    fn plan_json_roundtrip_replays() {
        let u = zx(0.3);
        let plan = ZeroFidelityPlan::build(&u, 64, 9).unwrap();
        let json = plan.to_json().unwrap();
        let back = ZeroFidelityPlan::from_json(&json).unwrap();
        assert_eq!(plan.samples.len(), back.samples.len());
        let rebuilt = ZeroFidelityPlan::build(&u, 64, 9).unwrap();
        for (a, b) in plan.samples.iter().zip(rebuilt.samples.iter()) {
            assert_eq!(a.prep, b.prep);
            assert_eq!(a.obs, b.obs);
        }
    }
}
