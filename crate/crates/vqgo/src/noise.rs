//! The stochastic layer: projective shot sampling with readout error,
//! drive-line distortion, and slow parameter drift.

use num_complex::Complex64 as C64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::pauli::{Pauli, PauliString};
use crate::pulse::PulseProgram;
use crate::random::{standard_normal, task_rng};

/// Per-qubit readout confusion: p01 = P(read 1 | prepared 0),
/// p10 = P(read 0 | prepared 1). Both in [0, 0.5).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ReadoutModel {
    pub p01: Vec<f64>,
    pub p10: Vec<f64>,
}

impl ReadoutModel {
    pub fn ideal(n: usize) -> Self {
        ReadoutModel {
            p01: vec![0.0; n],
            p10: vec![0.0; n],
        }
    }

    pub fn symmetric(p: f64, n: usize) -> Self {
        ReadoutModel {
            p01: vec![p; n],
            p10: vec![p; n],
        }
    }

    pub fn n(&self) -> usize {
        self.p01.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.p01.len() != self.p10.len() {
            return Err(Error::InvalidArg("readout vectors differ in length".into()));
        }
        for p in self.p01.iter().chain(self.p10.iter()) {
            if !(0.0..0.5).contains(p) {
                return Err(Error::InvalidArg(format!("readout probability {p} outside [0, 0.5)")));
            }
        }
        Ok(())
    }

    pub fn is_ideal(&self) -> bool {
        self.p01.iter().chain(self.p10.iter()).all(|&p| p == 0.0)
    }

    fn is_symmetric(&self) -> bool {
        self.p01
            .iter()
            .zip(&self.p10)
            .all(|(a, b)| (a - b).abs() < 1e-15)
    }
}

/// Basis-change unitary mapping the eigenbasis of a single-qubit Pauli onto
/// the computational basis: B σ B† = Z (identity positions measure Z).
fn measurement_rotation(p: Pauli) -> CMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    match p {
        // Hadamard
        Pauli::X => ndarray::arr2(&[
            [C64::new(s, 0.0), C64::new(s, 0.0)],
            [C64::new(s, 0.0), C64::new(-s, 0.0)],
        ]),
        // maps |±i⟩ onto |0/1⟩
        Pauli::Y => ndarray::arr2(&[
            [C64::new(s, 0.0), C64::new(0.0, -s)],
            [C64::new(s, 0.0), C64::new(0.0, s)],
        ]),
        _ => CMat::eye(2),
    }
}

fn born_probabilities(rho: &CMat, obs: &PauliString) -> Vec<f64> {
    let n = obs.n_qubits();
    let mut b = ndarray::arr2(&[[C64::new(1.0, 0.0)]]);
    for p in &obs.0 {
        b = crate::linalg::kron(&b, &measurement_rotation(*p));
    }
    let rot = b.dot(rho).dot(&crate::linalg::dagger(&b));
    (0..1usize << n).map(|k| rot[[k, k]].re.max(0.0)).collect()
}

/// Estimate `tr[ρ σ]` from `shots` projective measurements in the σ
/// eigenbasis, with independent per-qubit readout bit flips. `shots = None`
/// returns the analytic expectation with the readout contraction folded in
/// (symmetric readout only). Identity observables cost nothing and read 1.
pub fn sample_shots(
    rho: &CMat,
    obs: &PauliString,
    shots: Option<u64>,
    readout: &ReadoutModel,
    rng: &mut impl Rng,
) -> Result<f64> {
    readout.validate()?;
    let n = obs.n_qubits();
    if readout.n() != n {
        return Err(Error::DimMismatch("readout size vs observable".into()));
    }
    if obs.is_identity() {
        return Ok(1.0);
    }
    match shots {
        None => {
            if !readout.is_symmetric() {
                return Err(Error::InvalidArg(
                    "analytic expectations require symmetric readout".into(),
                ));
            }
            let mut shrink = 1.0;
            for (k, p) in obs.0.iter().enumerate() {
                if *p != Pauli::I {
                    shrink *= 1.0 - 2.0 * readout.p01[k];
                }
            }
            Ok(shrink * obs.expectation(rho))
        }
        Some(shots) => {
            if shots == 0 {
                return Err(Error::InvalidArg("need at least one shot".into()));
            }
            let probs = born_probabilities(rho, obs);
            let mut cdf = Vec::with_capacity(probs.len());
            let mut acc = 0.0;
            for p in &probs {
                acc += p;
                cdf.push(acc);
            }
            let total = acc.max(f64::MIN_POSITIVE);
            let mut sum = 0i64;
            for _ in 0..shots {
                let r: f64 = rng.gen::<f64>() * total;
                let mut outcome = cdf.partition_point(|&c| c < r);
                if outcome >= probs.len() {
                    outcome = probs.len() - 1;
                }
                // readout flips on measured qubits only; flips on identity
                // positions cannot change the parity
                let mut parity = 1i64;
                for (k, p) in obs.0.iter().enumerate() {
                    if *p == Pauli::I {
                        continue;
                    }
                    let mut bit = (outcome >> (n - 1 - k)) & 1;
                    let flip = if bit == 0 { readout.p01[k] } else { readout.p10[k] };
                    if rng.gen::<f64>() < flip {
                        bit ^= 1;
                    }
                    if bit == 1 {
                        parity = -parity;
                    }
                }
                sum += parity;
            }
            Ok(sum as f64 / shots as f64)
        }
    }
}

/// Static drive-line imperfections: a per-channel phase offset, an amplitude
/// scale, and a phase bend that activates at low pulse amplitude.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LineDistortion {
    /// Static phase offset δφ (rad).
    pub phase_offset: f64,
    /// Amplitude scale s > 0.
    pub amplitude_scale: f64,
    /// Phase bend κ (rad) per unit of (1 − A/threshold), active for A below
    /// the threshold.
    pub kappa: f64,
    /// Amplitude threshold (rad/s) for the low-amplitude bend.
    pub threshold: f64,
}

impl LineDistortion {
    pub fn identity() -> Self {
        LineDistortion {
            phase_offset: 0.0,
            amplitude_scale: 1.0,
            kappa: 0.0,
            threshold: 0.0,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.phase_offset == 0.0 && self.amplitude_scale == 1.0 && self.kappa == 0.0
    }
}

/// Apply a per-channel distortion: φ → φ + δφ + κ·max(0, 1 − A/threshold)
/// and Ω → s·Ω, with A the channel's peak physical amplitude.
pub fn apply_distortion(prog: &PulseProgram, d: &LineDistortion) -> PulseProgram {
    let mut out = prog.clone();
    if d.is_identity() {
        return out;
    }
    for ch in &mut out.channels {
        let a = ch.peak_amplitude();
        let bend = if d.threshold > 0.0 && a < d.threshold {
            d.kappa * (1.0 - a / d.threshold)
        } else {
            0.0
        };
        ch.phase += d.phase_offset + bend;
        ch.amplitude *= d.amplitude_scale;
    }
    out
}

/// Brownian drift of device parameters across wall-clock ticks.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DriftProcess {
    /// Std-dev of the per-tick step on each qubit frequency (rad/s).
    pub freq_step: f64,
    /// Std-dev of the per-tick step on each drive-line phase (rad).
    pub phase_step: f64,
    /// Wall-clock duration of one tick (s); bookkeeping only.
    pub tick_seconds: f64,
    pub seed: u64,
}

impl DriftProcess {
    pub fn frozen() -> Self {
        DriftProcess {
            freq_step: 0.0,
            phase_step: 0.0,
            tick_seconds: 1.0,
            seed: 0,
        }
    }

    /// Accumulated random-walk offsets after `ticks` ticks for `n_freqs`
    /// frequencies and `n_phases` line phases. Per-parameter streams make
    /// the result independent of query order; the walk at tick k is a
    /// prefix sum, so trajectories are consistent across queries.
    pub fn offsets_at(&self, n_freqs: usize, n_phases: usize, ticks: u64) -> (Vec<f64>, Vec<f64>) {
        let walk = |param: u64, step: f64| -> f64 {
            if step == 0.0 || ticks == 0 {
                return 0.0;
            }
            let mut rng = task_rng(self.seed, 0x5eed_0000 + param);
            let mut acc = 0.0;
            for _ in 0..ticks {
                acc += step * standard_normal(&mut rng);
            }
            acc
        };
        let freqs = (0..n_freqs).map(|k| walk(k as u64, self.freq_step)).collect();
        let phases = (0..n_phases)
            .map(|k| walk(1000 + k as u64, self.phase_step))
            .collect();
        (freqs, phases)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::master_rng;
    use crate::states::{density_from_pure, ket0, plus, product_state};

    #[test]
    fn ground_state_z_estimate_converges() {
        let rho = density_from_pure(&ket0());
        let obs: PauliString = "Z".parse().unwrap();
        let mut rng = master_rng(1);
        let est = sample_shots(&rho, &obs, Some(10_000), &ReadoutModel::ideal(1), &mut rng).unwrap();
        assert!((est - 1.0).abs() <= 0.03);
    }

    #[test]
    fn readout_error_biases_by_one_minus_two_p() {
        let rho = density_from_pure(&ket0());
        let obs: PauliString = "Z".parse().unwrap();
        let p = 0.07;
        let ro = ReadoutModel::symmetric(p, 1);
        // analytic path
        let mut rng = master_rng(2);
        let exact = sample_shots(&rho, &obs, None, &ro, &mut rng).unwrap();
        assert!((exact - (1.0 - 2.0 * p)).abs() < 1e-12);
        // sampled path: binomial mean matches within 4σ
        let shots = 200_000u64;
        let est = sample_shots(&rho, &obs, Some(shots), &ro, &mut rng).unwrap();
        let sigma = (1.0f64 - exact * exact).sqrt() / (shots as f64).sqrt();
        assert!((est - exact).abs() < 4.0 * sigma, "est {est} exact {exact}");
    }

    #[test]
    fn plus_state_z_centred_on_zero() {
        let rho = density_from_pure(&plus());
        let obs: PauliString = "Z".parse().unwrap();
        let mut rng = master_rng(3);
        let est = sample_shots(&rho, &obs, Some(20_000), &ReadoutModel::ideal(1), &mut rng).unwrap();
        assert!(est.abs() < 0.03);
    }

    #[test]
    fn multi_qubit_expectation_with_identity_positions() {
        let psi = product_state(&[plus(), ket0()]);
        let rho = density_from_pure(&psi);
        let mut rng = master_rng(4);
        for (label, expect) in [("XI", 1.0), ("IZ", 1.0), ("XZ", 1.0), ("ZI", 0.0)] {
            let obs: PauliString = label.parse().unwrap();
            let est = sample_shots(&rho, &obs, Some(40_000), &ReadoutModel::ideal(2), &mut rng).unwrap();
            assert!((est - expect).abs() < 0.03, "{label}: {est}");
        }
    }

    #[test]
    fn identity_observable_is_free_and_exact() {
        let rho = density_from_pure(&ket0());
        let obs = PauliString::identity(1);
        let mut rng = master_rng(5);
        let v = sample_shots(&rho, &obs, Some(1), &ReadoutModel::symmetric(0.3, 1), &mut rng).unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn seeded_sampling_reproduces() {
        let rho = density_from_pure(&plus());
        let obs: PauliString = "Z".parse().unwrap();
        let ro = ReadoutModel::symmetric(0.02, 1);
        let a = sample_shots(&rho, &obs, Some(500), &ro, &mut master_rng(42)).unwrap();
        let b = sample_shots(&rho, &obs, Some(500), &ro, &mut master_rng(42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn identity_distortion_is_bitwise_noop() {
        let ch = crate::pulse::DriveChannel {
            target: 0,
            carrier: 1.0,
            phase: 0.25,
            amplitude: 2.0,
            dx: 0.5,
            dy: 0.1,
            shape: crate::pulse::Envelope::Constant,
            virtual_z: crate::pulse::VirtualZ::Off,
            ramp: crate::pulse::Ramp::none(),
            start: 0.0,
            duration: 1e-6,
        };
        let prog = PulseProgram::new(vec![ch], 1e-6, 1e-9).unwrap();
        let out = apply_distortion(&prog, &LineDistortion::identity());
        assert_eq!(format!("{:?}", prog.channels), format!("{:?}", out.channels));
    }

    #[test]
    fn low_amplitude_phase_bend_activates_below_threshold() {
        let mk = |amp: f64| {
            let ch = crate::pulse::DriveChannel {
                target: 0,
                carrier: 1.0,
                phase: 0.0,
                amplitude: amp,
                dx: 1.0,
                dy: 0.0,
                shape: crate::pulse::Envelope::Constant,
                virtual_z: crate::pulse::VirtualZ::Off,
                ramp: crate::pulse::Ramp::none(),
                start: 0.0,
                duration: 1e-6,
            };
            PulseProgram::new(vec![ch], 1e-6, 1e-9).unwrap()
        };
        let d = LineDistortion {
            phase_offset: 0.0,
            amplitude_scale: 1.0,
            kappa: 0.3,
            threshold: 10.0,
        };
        let low = apply_distortion(&mk(2.0), &d);
        let high = apply_distortion(&mk(20.0), &d);
        assert!((low.channels[0].phase - 0.3 * (1.0 - 0.2)).abs() < 1e-12);
        assert_eq!(high.channels[0].phase, 0.0);
    }

    #[test]
    fn drift_zero_ticks_is_identity_and_variance_scales() {
        let drift = DriftProcess {
            freq_step: 2.0,
            phase_step: 0.0,
            tick_seconds: 1.0,
            seed: 7,
        };
        let (f0, _) = drift.offsets_at(1, 0, 0);
        assert_eq!(f0[0], 0.0);
        // variance of the accumulated offset over seeded trials ≈ ticks·step²
        let ticks = 50u64;
        let trials = 1000;
        let mut acc = 0.0;
        for s in 0..trials {
            let d = DriftProcess { seed: s as u64, ..drift.clone() };
            let (f, _) = d.offsets_at(1, 0, ticks);
            acc += f[0] * f[0];
        }
        let var = acc / trials as f64;
        let expect = ticks as f64 * drift.freq_step * drift.freq_step;
        assert!(
            (var - expect).abs() / expect < 0.10,
            "var {var:.2} vs {expect:.2}"
        );
    }

    #[test]
    fn drift_walk_is_prefix_consistent() {
        let drift = DriftProcess {
            freq_step: 1.0,
            phase_step: 0.5,
            tick_seconds: 1.0,
            seed: 11,
        };
        let (f5, p5) = drift.offsets_at(2, 1, 5);
        let (f5b, p5b) = drift.offsets_at(2, 1, 5);
        assert_eq!(f5, f5b);
        assert_eq!(p5, p5b);
        // a longer walk shares its prefix draws: difference is the later steps
        let (f9, _) = drift.offsets_at(2, 1, 9);
        assert_ne!(f5[0], f9[0]);
    }
}
