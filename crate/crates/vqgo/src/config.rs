//! Declarative run configuration: device, noise and scenario sections in
//! one TOML document. Frequencies are written in MHz and converted to
//! angular rad/s on load; every emitted artifact embeds the full snapshot
//! so a run can be replayed bit-exactly.

use serde::{Deserialize, Serialize};

use crate::device::{DeviceModel, QubitModel};
use crate::error::{Error, Result};
use crate::noise::{DriftProcess, LineDistortion, ReadoutModel};

const TAU: f64 = std::f64::consts::TAU;

pub fn mhz(f: f64) -> f64 {
    TAU * f * 1e6
}

pub fn to_mhz(w: f64) -> f64 {
    w / TAU / 1e6
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DeviceSection {
    /// "qubit" (rotating-frame two-level chain) or "transmon" (full model).
    #[serde(default = "default_tier")]
    pub tier: String,
    /// Qubit frequencies in MHz (qubit tier) — also used as fallback labels
    /// for the transmon tier's expected first-excitation frequencies.
    #[serde(default = "default_freqs")]
    pub freqs_mhz: Vec<f64>,
    #[serde(default = "default_couplings")]
    pub couplings_mhz: Vec<f64>,
    /// Transmon-tier harmonic frequencies in MHz.
    #[serde(default = "default_omega_h")]
    pub omega_h_mhz: Vec<f64>,
    #[serde(default = "default_epsilon")]
    pub epsilon: Vec<f64>,
    #[serde(default = "default_levels")]
    pub levels_per_transmon: usize,
    #[serde(default = "default_truncation")]
    pub global_truncation: usize,
}

fn default_tier() -> String {
    "qubit".into()
}
fn default_freqs() -> Vec<f64> {
    vec![5236.6, 5014.2, 5177.1]
}
fn default_couplings() -> Vec<f64> {
    vec![1.955, 2.052]
}
fn default_omega_h() -> Vec<f64> {
    vec![5544.0, 5323.0, 5486.0]
}
fn default_epsilon() -> Vec<f64> {
    vec![0.209, 0.218, 0.212]
}
fn default_levels() -> usize {
    4
}
fn default_truncation() -> usize {
    64
}

impl Default for DeviceSection {
    fn default() -> Self {
        DeviceSection {
            tier: default_tier(),
            freqs_mhz: default_freqs(),
            couplings_mhz: default_couplings(),
            omega_h_mhz: default_omega_h(),
            epsilon: default_epsilon(),
            levels_per_transmon: default_levels(),
            global_truncation: default_truncation(),
        }
    }
}

impl DeviceSection {
    pub fn qubit_model(&self) -> QubitModel {
        QubitModel {
            freqs: self.freqs_mhz.iter().map(|f| mhz(*f)).collect(),
            couplings: self.couplings_mhz.iter().map(|f| mhz(*f)).collect(),
        }
    }

    pub fn device_model(&self) -> DeviceModel {
        DeviceModel {
            omega_h: self.omega_h_mhz.iter().map(|f| mhz(*f)).collect(),
            epsilon: self.epsilon.clone(),
            couplings: self.couplings_mhz.iter().map(|f| mhz(*f)).collect(),
            levels_per_transmon: self.levels_per_transmon,
            global_truncation: self.global_truncation,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DistortionSection {
    #[serde(default)]
    pub phase_offset: f64,
    #[serde(default = "one")]
    pub amplitude_scale: f64,
    #[serde(default)]
    pub kappa: f64,
    #[serde(default)]
    pub threshold_mhz: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for DistortionSection {
    fn default() -> Self {
        DistortionSection {
            phase_offset: 0.0,
            amplitude_scale: 1.0,
            kappa: 0.0,
            threshold_mhz: 0.0,
        }
    }
}

impl DistortionSection {
    pub fn distortion(&self) -> LineDistortion {
        LineDistortion {
            phase_offset: self.phase_offset,
            amplitude_scale: self.amplitude_scale,
            kappa: self.kappa,
            threshold: mhz(self.threshold_mhz),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DriftSection {
    /// Per-tick frequency step, kHz.
    #[serde(default)]
    pub freq_step_khz: f64,
    /// Per-tick line-phase step, rad.
    #[serde(default)]
    pub phase_step: f64,
    #[serde(default = "default_tick")]
    pub tick_seconds: f64,
}

fn default_tick() -> f64 {
    60.0
}

impl Default for DriftSection {
    fn default() -> Self {
        DriftSection {
            freq_step_khz: 0.0,
            phase_step: 0.0,
            tick_seconds: default_tick(),
        }
    }
}

impl DriftSection {
    pub fn process(&self, seed: u64) -> DriftProcess {
        DriftProcess {
            freq_step: TAU * self.freq_step_khz * 1e3,
            phase_step: self.phase_step,
            tick_seconds: self.tick_seconds,
            seed,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    /// Symmetric per-qubit readout flip probability. When
    /// `identity_baseline` is set it wins and this is ignored.
    #[serde(default)]
    pub readout_p: f64,
    /// Target two-qubit identity process fidelity; the readout strength is
    /// calibrated to it at run time.
    #[serde(default)]
    pub identity_baseline: Option<f64>,
    #[serde(default)]
    pub distortion: DistortionSection,
    #[serde(default)]
    pub drift: DriftSection,
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection {
            readout_p: 0.0,
            identity_baseline: None,
            distortion: DistortionSection::default(),
            drift: DriftSection::default(),
        }
    }
}

impl NoiseSection {
    pub fn readout(&self, n: usize) -> ReadoutModel {
        ReadoutModel::symmetric(self.readout_p, n)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    /// phase-calibration | zx-gate | zx1-1yz-gate | floquet-zyz |
    /// identity-baseline | drift-study
    #[serde(default = "default_scenario")]
    pub name: String,
    /// Shots per expectation value for tomography-style measurements;
    /// 0 means exact expectations.
    #[serde(default = "default_shots")]
    pub shots: u64,
    /// Optimization budget (total evaluations).
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default = "default_exploration")]
    pub exploration_fraction: f64,
    /// Zero-fidelity sampling plan size l.
    #[serde(default = "default_zf_samples")]
    pub zero_fidelity_samples: usize,
    /// Shots per sampled zero-fidelity expectation.
    #[serde(default = "default_zf_shots")]
    pub zero_fidelity_shots: u64,
    /// CR base amplitude Ω in MHz (peak at |d| = 1).
    #[serde(default = "default_cr_amp")]
    pub cr_amplitude_mhz: f64,
    /// Resonant correction-channel base amplitude in MHz.
    #[serde(default = "default_sq_amp")]
    pub sq_amplitude_mhz: f64,
    /// Gaussian ramp length in sample periods.
    #[serde(default = "default_ramp")]
    pub ramp_samples: usize,
    /// Envelope sample period in ns.
    #[serde(default = "default_dt_ns")]
    pub sample_period_ns: f64,
    /// Floquet drive frequency in MHz and period count.
    #[serde(default = "default_floquet_freq")]
    pub floquet_freq_mhz: f64,
    #[serde(default = "default_floquet_periods")]
    pub floquet_periods: u32,
    /// Target pairwise interaction rate for the engineered gate, MHz.
    #[serde(default = "default_jzx")]
    pub j_zx_mhz: f64,
    /// Floquet drive weights Ω_k in MHz (cosine harmonics).
    #[serde(default = "default_weights")]
    pub floquet_weights_mhz: Vec<f64>,
    /// Wall-clock ticks advanced per optimizer evaluation.
    #[serde(default = "default_ticks")]
    pub ticks_per_eval: u64,
    /// Drift ticks between the two tomography passes of the drift study.
    #[serde(default = "default_study_ticks")]
    pub drift_study_ticks: u64,
}

fn default_scenario() -> String {
    "zx-gate".into()
}
fn default_shots() -> u64 {
    10_000
}
fn default_budget() -> usize {
    200
}
fn default_exploration() -> f64 {
    0.25
}
fn default_zf_samples() -> usize {
    200
}
fn default_zf_shots() -> u64 {
    1024
}
fn default_cr_amp() -> f64 {
    60.0
}
fn default_sq_amp() -> f64 {
    4.0
}
fn default_ramp() -> usize {
    10
}
fn default_dt_ns() -> f64 {
    1.0
}
fn default_floquet_freq() -> f64 {
    1.0
}
fn default_floquet_periods() -> u32 {
    3
}
fn default_jzx() -> f64 {
    0.2
}
fn default_weights() -> Vec<f64> {
    vec![0.080, 2.170, 2.491]
}
fn default_ticks() -> u64 {
    1
}
fn default_study_ticks() -> u64 {
    480
}

impl Default for ScenarioSection {
    fn default() -> Self {
        toml::from_str("").expect("empty section uses defaults")
    }
}

/// Top-level run configuration.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub device: DeviceSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub scenario: ScenarioSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }
}
