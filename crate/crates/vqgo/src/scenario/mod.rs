//! Scenario layer: wires the device tiers, pulse programs, noise models,
//! tomography and the optimizer into the experiment flows, plus the
//! calibration procedures they rely on.

mod calibrate;
mod drift;
mod floquet;
mod identity;
mod three_qubit;
mod zx;

pub use calibrate::{
    calibrate_omega_c, calibrate_phase, dressed_qubit_freqs, ramsey_frame_rates, CalibrationResult,
    OmegaCalibration,
};
pub use drift::{run_drift_study, DriftStudyOutput};
pub use floquet::{run_floquet_zyz_scenario, FloquetOutput, FloquetSetup};
pub use identity::{calibrate_readout_to_baseline, run_identity_baseline, IdentityBaselineOutput};
pub use three_qubit::{run_zx1_1yz_scenario, ThreeQubitOutput};
pub use zx::{run_zx_scenario, ZxOutput, ZxSetup};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::device::{QubitModel, QubitSim};
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::noise::{apply_distortion, LineDistortion, ReadoutModel};
use crate::pauli::Pauli;
use crate::pulse::{DriveChannel, Envelope, PulseProgram, Ramp, VirtualZ};

pub(crate) const TAU: f64 = std::f64::consts::TAU;

/// A fully specified gate on the qubit tier: physical channels plus the
/// software frame in which the gate is reported (per-qubit Z rates absorb
/// calibrated Stark/dressing shifts; angles realize virtual-Z corrections).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GateSpec {
    pub channels: Vec<DriveChannel>,
    pub duration: f64,
    pub sample_period: f64,
    /// Reported-frame Z rates per qubit (rad/s): the correction
    /// `exp(+i Σ rate_q · t · Z_q)` is applied to the propagator.
    pub frame_rates: Vec<f64>,
    /// Static virtual-Z angles per qubit (rad): `exp(+i θ_q Z_q / 2)`.
    pub frame_angles: Vec<f64>,
}

impl GateSpec {
    pub fn program(&self) -> Result<PulseProgram> {
        PulseProgram::new(self.channels.clone(), self.duration, self.sample_period)
    }

    /// Software-frame correction at time `t`.
    pub fn frame_correction(&self, t: f64) -> CMat {
        let n = self.frame_rates.len();
        let dim = 1usize << n;
        let mut diag = vec![C64::new(1.0, 0.0); dim];
        for (q, (&rate, &ang)) in self.frame_rates.iter().zip(&self.frame_angles).enumerate() {
            let phi = rate * t + ang / 2.0;
            for (idx, d) in diag.iter_mut().enumerate() {
                let bit = (idx >> (n - 1 - q)) & 1;
                let sign = if bit == 0 { 1.0 } else { -1.0 };
                *d *= C64::from_polar(1.0, sign * phi);
            }
        }
        let mut m = CMat::zeros((dim, dim));
        for (k, d) in diag.into_iter().enumerate() {
            m[[k, k]] = d;
        }
        m
    }
}

/// Shared scenario context: the configured device, noise layers and seed.
pub struct Workbench {
    pub config: RunConfig,
    pub model: QubitModel,
    pub readout: ReadoutModel,
    pub distortion: LineDistortion,
}

impl Workbench {
    pub fn new(config: RunConfig) -> Result<Self> {
        let model = config.device.qubit_model();
        model.validate()?;
        let readout = config.noise.readout(model.n());
        let distortion = config.noise.distortion.distortion();
        Ok(Workbench {
            config,
            model,
            readout,
            distortion,
        })
    }

    /// Two-qubit restriction (first pair of the chain) used by the pairwise
    /// scenarios.
    pub fn pair_model(&self) -> QubitModel {
        QubitModel {
            freqs: self.model.freqs[..2].to_vec(),
            couplings: self.model.couplings[..1].to_vec(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.config.master_seed
    }
}

/// Propagate a gate spec on a model and return the reported unitary
/// (rotating frame, software-frame corrected). The line distortion is
/// applied to the program first, mimicking what the hardware does to the
/// requested pulses.
pub fn reported_unitary(
    model: &QubitModel,
    spec: &GateSpec,
    distortion: &LineDistortion,
) -> Result<CMat> {
    let prog = apply_distortion(&spec.program()?, distortion);
    let sim = QubitSim::new(model, &prog)?;
    let u = sim.propagate(0.0, spec.duration)?;
    Ok(spec.frame_correction(spec.duration).dot(&u))
}

/// Reported unitaries at several times (cumulative), frame-corrected.
pub fn reported_checkpoints(
    model: &QubitModel,
    spec: &GateSpec,
    distortion: &LineDistortion,
    times: &[f64],
) -> Result<Vec<CMat>> {
    let prog = apply_distortion(&spec.program()?, distortion);
    let sim = QubitSim::new(model, &prog)?;
    let us = sim.propagate_checkpoints(0.0, times)?;
    Ok(us
        .into_iter()
        .zip(times)
        .map(|(u, &t)| spec.frame_correction(t).dot(&u))
        .collect())
}

/// Convenience constructors for the channel kinds the scenarios use.
pub fn cr_channel(
    control: usize,
    carrier: f64,
    phase: f64,
    amplitude: f64,
    d: f64,
    duration: f64,
    ramp: Ramp,
) -> DriveChannel {
    DriveChannel {
        target: control,
        carrier,
        phase,
        amplitude,
        dx: d,
        dy: 0.0,
        shape: Envelope::Constant,
        virtual_z: VirtualZ::Off,
        ramp,
        start: 0.0,
        duration,
    }
}

pub fn resonant_channel(
    qubit: usize,
    carrier: f64,
    phase: f64,
    amplitude: f64,
    dx: f64,
    dy: f64,
    duration: f64,
    ramp: Ramp,
) -> DriveChannel {
    DriveChannel {
        target: qubit,
        carrier,
        phase,
        amplitude,
        dx,
        dy,
        shape: Envelope::Constant,
        virtual_z: VirtualZ::Off,
        ramp,
        start: 0.0,
        duration,
    }
}

/// Round a duration onto the sample grid.
pub fn grid_duration(duration: f64, dt: f64) -> f64 {
    (duration / dt).round().max(1.0) * dt
}

/// The target `exp(iθ Z⊗A)` for pairwise scenarios.
pub fn pair_target(theta: f64, axis: crate::tomography::ReducedAxis) -> CMat {
    let a = match axis {
        crate::tomography::ReducedAxis::X => Pauli::X,
        crate::tomography::ReducedAxis::Y => Pauli::Y,
    };
    let za = crate::pauli::PauliString(vec![Pauli::Z, a]).matrix();
    crate::linalg::expm_hermitian(&za, -theta).expect("pauli is hermitian")
}

/// The three-qubit target `exp(iθ(ZX𝟙 + 𝟙YZ))`.
pub fn zx1_1yz_target(theta: f64) -> CMat {
    let zx1: crate::pauli::PauliString = "ZXI".parse().expect("static");
    let iyz: crate::pauli::PauliString = "IYZ".parse().expect("static");
    let h = zx1.matrix() + iyz.matrix();
    crate::linalg::expm_hermitian(&h, -theta).expect("hermitian")
}

/// The stroboscopic three-body target `exp(−iθ ZYZ)`.
pub fn zyz_target(theta: f64) -> CMat {
    let zyz: crate::pauli::PauliString = "ZYZ".parse().expect("static");
    crate::linalg::expm_hermitian(&zyz.matrix(), theta).expect("hermitian")
}

/// Figure-of-merit legality: the reduced-χ overlap is only defined for
/// targets inside the pairwise span; everything else must use
/// zero-fidelity or exact overlaps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FigureOfMerit {
    ReducedChi,
    ZeroFidelity,
    Exact,
}

pub fn check_fom_legality(fom: FigureOfMerit, target: &CMat) -> Result<()> {
    if fom != FigureOfMerit::ReducedChi {
        return Ok(());
    }
    if target.nrows() != 4 {
        return Err(Error::InvalidArg(
            "reduced-χ figure of merit is only defined for two-qubit targets".into(),
        ));
    }
    // the target must decompose inside one of the two pair spans
    for axis in [crate::tomography::ReducedAxis::X, crate::tomography::ReducedAxis::Y] {
        let red = crate::tomography::reduced_chi_of_unitary(target, axis)?;
        let full = crate::tomography::chi_from_unitary(target)?;
        let overlap = crate::tomography::reduced_overlap(&red, &red);
        let trace_full = crate::linalg::trace(&full.chi).re;
        if (overlap - trace_full).abs() < 1e-9 {
            return Ok(());
        }
    }
    Err(Error::InvalidArg(
        "target leaves the {𝟙𝟙, Z𝟙, 𝟙A, ZA} span; reduced-χ overlap is not a valid figure of merit"
            .into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tomography::ReducedAxis;

    #[test]
    fn fom_legality_enforced() {
        let zx = pair_target(std::f64::consts::FRAC_PI_4, ReducedAxis::X);
        assert!(check_fom_legality(FigureOfMerit::ReducedChi, &zx).is_ok());
        let zyz = zyz_target(6.0 * std::f64::consts::PI / 25.0);
        assert!(check_fom_legality(FigureOfMerit::ReducedChi, &zyz).is_err());
        assert!(check_fom_legality(FigureOfMerit::ZeroFidelity, &zyz).is_ok());
    }

    #[test]
    fn frame_correction_is_diagonal_unitary() {
        let spec = GateSpec {
            channels: vec![],
            duration: 1e-6,
            sample_period: 1e-9,
            frame_rates: vec![TAU * 1e5, 0.0],
            frame_angles: vec![0.0, 0.7],
        };
        let c = spec.frame_correction(1e-6);
        assert!(crate::linalg::unitarity_error(&c) < 1e-12);
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert_eq!(c[[i, j]], C64::new(0.0, 0.0));
                }
            }
        }
    }
}
