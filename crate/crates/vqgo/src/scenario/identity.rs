//! Readout-error baseline: calibrate the symmetric flip probability so the
//! measured two-qubit identity process fidelity hits a target, and report
//! the three-qubit identity fidelity the same strength implies.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::noise::ReadoutModel;
use crate::tomography::{chi_from_unitary, process_fidelity, process_tomography, UnitaryChannel};
use super::Workbench;

/// Measured identity-gate fidelity for a symmetric readout strength, using
/// exact (infinite-shot) expectations so the calibration is deterministic.
pub fn identity_fidelity(p: f64, n: usize, shots: Option<u64>, seed: u64) -> Result<f64> {
    let d = 1usize << n;
    let oracle = UnitaryChannel {
        u: CMat::eye(d),
        readout: ReadoutModel::symmetric(p, n),
        shots,
        seed,
    };
    let chi = process_tomography(&oracle, n)?;
    let ideal = chi_from_unitary(&CMat::eye(d))?;
    process_fidelity(&chi, &ideal)
}

/// Bisection on the symmetric flip probability until the simulated
/// two-qubit identity tomography returns `target` within 0.005.
pub fn calibrate_readout_to_baseline(target: f64, n: usize) -> Result<ReadoutModel> {
    if !(0.5..=1.0).contains(&target) {
        return Err(Error::Calibration(format!(
            "identity baseline {target} outside (0.5, 1]"
        )));
    }
    if (target - 1.0).abs() < 1e-12 {
        return Ok(ReadoutModel::ideal(n));
    }
    let mut lo = 0.0f64;
    let mut hi = 0.2f64;
    let f_hi = identity_fidelity(hi, n, None, 0)?;
    if f_hi > target {
        return Err(Error::Calibration(format!(
            "baseline {target} unreachable: fidelity at p = 0.2 is {f_hi:.4}"
        )));
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let f = identity_fidelity(mid, n, None, 0)?;
        if (f - target).abs() <= 0.0005 {
            return Ok(ReadoutModel::symmetric(mid, n));
        }
        if f > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let p = 0.5 * (lo + hi);
    let f = identity_fidelity(p, n, None, 0)?;
    if (f - target).abs() > 0.005 {
        return Err(Error::Calibration(format!(
            "bisection stalled at p = {p:.5} (fidelity {f:.4} vs target {target})"
        )));
    }
    Ok(ReadoutModel::symmetric(p, n))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IdentityBaselineOutput {
    pub p: f64,
    pub two_qubit_fidelity: f64,
    pub three_qubit_fidelity: f64,
    pub shots: u64,
}

/// Full baseline scenario: calibrate to the configured target (default
/// 0.95), then measure both identity fidelities with the configured shot
/// budget.
pub fn run_identity_baseline(bench: &Workbench) -> Result<IdentityBaselineOutput> {
    let target = bench.config.noise.identity_baseline.unwrap_or(0.95);
    let ro = calibrate_readout_to_baseline(target, 2)?;
    let p = ro.p01[0];
    let shots = bench.config.scenario.shots.max(1);
    let f2 = identity_fidelity(p, 2, Some(shots), bench.seed().wrapping_add(2))?;
    let f3 = identity_fidelity(p, 3, Some(shots), bench.seed().wrapping_add(3))?;
    Ok(IdentityBaselineOutput {
        p,
        two_qubit_fidelity: f2,
        three_qubit_fidelity: f3,
        shots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_target_needs_no_flips() {
        let ro = calibrate_readout_to_baseline(1.0, 2).unwrap();
        assert!(ro.is_ideal());
    }

    #[test]
    fn ninety_five_percent_baseline() {
        let ro = calibrate_readout_to_baseline(0.95, 2).unwrap();
        let p = ro.p01[0];
        assert!(p > 0.0 && p < 0.05, "p = {p}");
        let f = identity_fidelity(p, 2, None, 0).unwrap();
        assert!((f - 0.95).abs() < 0.005, "f = {f}");
        // the analytic value: F = [(1 + 3(1−2p))/4]² → p ≈ 0.0169
        assert!((p - 0.01689).abs() < 0.002, "p = {p}");
    }

    #[test]
    fn three_qubit_fidelity_brackets_reported_value() {
        let ro = calibrate_readout_to_baseline(0.95, 2).unwrap();
        let f3 = identity_fidelity(ro.p01[0], 3, None, 0).unwrap();
        assert!(f3 > 0.85 && f3 < 0.93, "three-qubit identity {f3}");
    }
}
