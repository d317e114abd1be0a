//! Drive pulses: envelopes, carriers, virtual-Z frame trajectories and the
//! materialized lab-frame field.
//!
//! A channel drives one transmon with the field
//!
//! ```text
//! D(t) = Ω · Re[ (dˣ − i dʸ) s(t) · exp(−2i ∫₀ᵗ dᶻ dt′) · e^{i(ω_c t + φ)} ]
//! ```
//!
//! where `s(t)` is the dimensionless envelope shape (|s| ≤ 1) including the
//! Gaussian ramps. With this normalization a resonant channel with `dˣ = 1`
//! produces the rotating-frame generator `(Ω/2) X` after the rotating-wave
//! approximation, which fixes the factor-of-two convention used everywhere.
//! The virtual-Z trajectory `dᶻ` only ever enters through the envelope
//! phase; it never contributes to the physical field amplitude.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dimensionless envelope shape, |shape| ≤ 1 on the channel window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Envelope {
    /// Unit amplitude across the window.
    Constant,
    /// Normalized cosine series `Σ_k w_k cos(k ω t) / Σ_k |w_k|`, evaluated
    /// with `t` measured from the start of the channel window.
    CosineSeries { omega: f64, weights: Vec<f64> },
}

impl Envelope {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Envelope::Constant => 1.0,
            Envelope::CosineSeries { omega, weights } => {
                let norm: f64 = weights.iter().map(|w| w.abs()).sum();
                if norm == 0.0 {
                    return 0.0;
                }
                weights
                    .iter()
                    .enumerate()
                    .map(|(k, w)| w * (k as f64 * omega * t).cos())
                    .sum::<f64>()
                    / norm
            }
        }
    }

    /// Peak of |shape| over the window (1 for the supported shapes).
    pub fn peak(&self) -> f64 {
        match self {
            Envelope::Constant => 1.0,
            Envelope::CosineSeries { .. } => 1.0,
        }
    }

    /// Highest angular frequency present in the shape.
    pub fn bandwidth(&self) -> f64 {
        match self {
            Envelope::Constant => 0.0,
            Envelope::CosineSeries { omega, weights } => omega * (weights.len().max(1) - 1) as f64,
        }
    }
}

/// Virtual-Z frame trajectory dᶻ(t) in rad/s. Applied as a frame rotation
/// through the envelope phase factor `exp(−2i ∫ dᶻ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum VirtualZ {
    Off,
    /// Constant frame rate in rad/s; equivalently a software retuning of the
    /// qubit frequency by `2 · rate`.
    ConstantRate(f64),
    /// Instantaneous frame jump of the given angle (rad) at time `at`:
    /// `∫ dᶻ` steps by `angle / 2`.
    Impulse { at: f64, angle: f64 },
}

impl VirtualZ {
    /// `∫₀ᵗ dᶻ dt′` in radians.
    pub fn accumulated(&self, t: f64) -> f64 {
        match self {
            VirtualZ::Off => 0.0,
            VirtualZ::ConstantRate(r) => r * t,
            VirtualZ::Impulse { at, angle } => {
                if t > *at {
                    angle / 2.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Gaussian rise/fall multiplying the envelope, lifted so the pulse starts
/// and ends at zero. `length` is the rise (= fall) duration; σ = length/2.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ramp {
    pub length: f64,
}

impl Ramp {
    pub fn none() -> Self {
        Ramp { length: 0.0 }
    }

    pub fn factor(&self, t: f64, duration: f64) -> f64 {
        let l = self.length;
        if l <= 0.0 {
            return 1.0;
        }
        let sigma = l / 2.0;
        let lifted = |x: f64| {
            let g = (-(x - l).powi(2) / (2.0 * sigma * sigma)).exp();
            let floor = (-2.0f64).exp();
            ((g - floor) / (1.0 - floor)).clamp(0.0, 1.0)
        };
        if t < 0.0 || t > duration {
            0.0
        } else if t < l {
            lifted(t)
        } else if t > duration - l {
            lifted(duration - t)
        } else {
            1.0
        }
    }
}

/// One drive line: carrier, static phase, envelope axis and shape, virtual-Z
/// trajectory and ramps. The channel is active on `[start, start+duration]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DriveChannel {
    pub target: usize,
    /// Carrier ω_c in rad/s: the target's own frequency for resonant drives
    /// or a neighbour's for cross-resonant drives.
    pub carrier: f64,
    /// Static phase offset φ in rad (calibration phase folds in here).
    pub phase: f64,
    /// Base amplitude Ω in rad/s, > 0 whenever the envelope is nonzero.
    pub amplitude: f64,
    /// Static in-phase/quadrature amplitudes, |dx|, |dy| ≤ 1.
    pub dx: f64,
    pub dy: f64,
    pub shape: Envelope,
    pub virtual_z: VirtualZ,
    pub ramp: Ramp,
    pub start: f64,
    pub duration: f64,
}

impl DriveChannel {
    /// Complex envelope `(dˣ − i dʸ) s(t) ramp(t) e^{−2i∫dᶻ} e^{iφ}` at
    /// absolute program time `t` (no carrier factor).
    pub fn complex_envelope(&self, t: f64) -> C64 {
        let tl = t - self.start;
        if tl < 0.0 || tl > self.duration {
            return C64::new(0.0, 0.0);
        }
        let s = self.shape.value(tl) * self.ramp.factor(tl, self.duration);
        let base = C64::new(self.dx, -self.dy) * s;
        let zeta = self.virtual_z.accumulated(tl);
        base * C64::from_polar(1.0, -2.0 * zeta + self.phase)
    }

    /// Materialized lab-frame field coefficient D(t) in rad/s.
    pub fn field(&self, t: f64) -> f64 {
        let g = self.complex_envelope(t);
        if g == C64::new(0.0, 0.0) {
            return 0.0;
        }
        self.amplitude * (g * C64::from_polar(1.0, self.carrier * t)).re
    }

    /// Peak physical amplitude Ω·|d| in rad/s, used by the distortion model.
    pub fn peak_amplitude(&self) -> f64 {
        self.amplitude * self.dx.hypot(self.dy) * self.shape.peak()
    }

    pub fn validate(&self, total_duration: f64) -> Result<()> {
        if self.dx.abs() > 1.0 + 1e-12 || self.dy.abs() > 1.0 + 1e-12 {
            return Err(Error::InvalidArg(format!(
                "channel on transmon {}: |dx|,|dy| must be ≤ 1",
                self.target
            )));
        }
        if self.amplitude <= 0.0 && (self.dx != 0.0 || self.dy != 0.0) {
            return Err(Error::InvalidArg(format!(
                "channel on transmon {}: amplitude must be positive",
                self.target
            )));
        }
        if self.start < -1e-15 || self.start + self.duration > total_duration * (1.0 + 1e-9) {
            return Err(Error::InvalidArg(format!(
                "channel window [{}, {}] outside program [0, {}]",
                self.start,
                self.start + self.duration,
                total_duration
            )));
        }
        Ok(())
    }
}

/// A set of drive channels with a common clock.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PulseProgram {
    pub channels: Vec<DriveChannel>,
    pub total_duration: f64,
    /// Sample period of the envelope grid; must divide `total_duration`.
    pub sample_period: f64,
}

impl PulseProgram {
    pub fn new(channels: Vec<DriveChannel>, total_duration: f64, sample_period: f64) -> Result<Self> {
        let prog = PulseProgram {
            channels,
            total_duration,
            sample_period,
        };
        prog.validate()?;
        Ok(prog)
    }

    pub fn validate(&self) -> Result<()> {
        if self.total_duration < 0.0 {
            return Err(Error::InvalidArg("negative program duration".into()));
        }
        if self.sample_period <= 0.0 {
            return Err(Error::InvalidArg("sample period must be positive".into()));
        }
        let ratio = self.total_duration / self.sample_period;
        if (ratio - ratio.round()).abs() > 1e-6 {
            return Err(Error::InvalidArg(format!(
                "sample period {} does not divide duration {}",
                self.sample_period, self.total_duration
            )));
        }
        for ch in &self.channels {
            ch.validate(self.total_duration)?;
        }
        Ok(())
    }

    /// Largest angular frequency of envelope variation across channels,
    /// used when picking propagation steps.
    pub fn envelope_bandwidth(&self) -> f64 {
        self.channels
            .iter()
            .map(|c| c.shape.bandwidth())
            .fold(0.0, f64::max)
    }
}

/// Cosine-series drive for the central-qubit resonant channel:
/// `Ω(t) = Σ_k w_k cos(k ω t)` over `periods` full periods `T = 2π/ω`.
/// Returns (envelope shape, base amplitude in rad/s, duration in s).
pub fn make_floquet_drive(weights: &[f64], omega: f64, periods: u32) -> Result<(Envelope, f64, f64)> {
    if omega <= 0.0 {
        return Err(Error::InvalidArg("floquet frequency must be positive".into()));
    }
    if periods < 1 {
        return Err(Error::InvalidArg("need at least one floquet period".into()));
    }
    let norm: f64 = weights.iter().map(|w| w.abs()).sum();
    if norm == 0.0 {
        return Err(Error::InvalidArg("all floquet weights are zero".into()));
    }
    let duration = periods as f64 * std::f64::consts::TAU / omega;
    Ok((
        Envelope::CosineSeries {
            omega,
            weights: weights.to_vec(),
        },
        norm,
        duration,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TAU: f64 = std::f64::consts::TAU;

    #[test]
    fn constant_weights_give_constant_drive() {
        let (env, amp, dur) = make_floquet_drive(&[3.0], TAU * 1e6, 2).unwrap();
        assert_eq!(amp, 3.0);
        assert!((dur - 2e-6).abs() < 1e-18);
        for k in 0..10 {
            assert!((env.value(k as f64 * 1e-7) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn table_weights_duration_one_microsecond_per_period() {
        let w = [TAU * 0.080e6, TAU * 2.170e6, TAU * 2.491e6];
        let (env, amp, dur) = make_floquet_drive(&w, TAU * 1.0e6, 1).unwrap();
        assert!((dur - 1.0e-6).abs() / 1.0e-6 < 1e-12);
        assert!((amp - w.iter().sum::<f64>()).abs() < 1e-9);
        // envelope periodic on the sample grid
        let t_per = 1.0e-6;
        for k in 0..20 {
            let t = k as f64 * 3.7e-8;
            assert!((env.value(t) - env.value(t + t_per)).abs() < 1e-9);
        }
    }

    #[test]
    fn floquet_drive_rejects_bad_args() {
        assert!(make_floquet_drive(&[1.0], -1.0, 1).is_err());
        assert!(make_floquet_drive(&[1.0], 1.0, 0).is_err());
        assert!(make_floquet_drive(&[0.0, 0.0], 1.0, 1).is_err());
    }

    #[test]
    fn ramp_lifts_to_zero_at_edges() {
        let r = Ramp { length: 1e-8 };
        assert!(r.factor(0.0, 1e-7).abs() < 1e-12);
        assert!((r.factor(5e-8, 1e-7) - 1.0).abs() < 1e-12);
        assert!(r.factor(1e-7, 1e-7).abs() < 1e-12);
        let mid = r.factor(5e-9, 1e-7);
        assert!(mid > 0.0 && mid < 1.0);
    }

    #[test]
    fn virtual_z_never_changes_amplitude() {
        let ch = DriveChannel {
            target: 0,
            carrier: TAU * 5e9,
            phase: 0.3,
            amplitude: TAU * 10e6,
            dx: 0.8,
            dy: 0.0,
            shape: Envelope::Constant,
            virtual_z: VirtualZ::ConstantRate(TAU * 1e5),
            ramp: Ramp::none(),
            start: 0.0,
            duration: 1e-6,
        };
        let mut plain = ch.clone();
        plain.virtual_z = VirtualZ::Off;
        for k in 1..50 {
            let t = k as f64 * 2e-8;
            assert!((ch.complex_envelope(t).norm() - plain.complex_envelope(t).norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn materialized_field_matches_definition() {
        let ch = DriveChannel {
            target: 0,
            carrier: TAU * 1e9,
            phase: 0.7,
            amplitude: 2.0,
            dx: 0.5,
            dy: -0.25,
            shape: Envelope::Constant,
            virtual_z: VirtualZ::Off,
            ramp: Ramp::none(),
            start: 0.0,
            duration: 1e-6,
        };
        let t = 3.3e-10;
        let expect = 2.0 * (C64::new(0.5, 0.25) * C64::from_polar(1.0, 0.7 + TAU * 1e9 * t)).re;
        assert!((ch.field(t) - expect).abs() < 1e-12);
    }

    #[test]
    fn program_validation() {
        let ch = DriveChannel {
            target: 0,
            carrier: 1.0,
            phase: 0.0,
            amplitude: 1.0,
            dx: 1.0,
            dy: 0.0,
            shape: Envelope::Constant,
            virtual_z: VirtualZ::Off,
            ramp: Ramp::none(),
            start: 0.0,
            duration: 1e-6,
        };
        assert!(PulseProgram::new(vec![ch.clone()], 1e-6, 1e-9).is_ok());
        assert!(PulseProgram::new(vec![ch.clone()], 1e-6, 3e-10).is_err());
        let mut bad = ch;
        bad.dx = 1.5;
        assert!(PulseProgram::new(vec![bad], 1e-6, 1e-9).is_err());
    }
}
