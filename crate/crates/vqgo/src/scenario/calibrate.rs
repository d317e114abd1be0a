//! Calibration procedures: drive-phase alignment, software-frame rates and
//! the compensating-drive amplitude search on the full transmon tier.

use ndarray::Array1;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::{cr_channel, grid_duration, resonant_channel, GateSpec, Workbench, TAU};
use crate::bayesopt::{optimize, Evaluation, OptimizeConfig, ParamSpec, SearchSpace};
use crate::device::{QubitModel, QubitSim, TransmonDevice};
use crate::error::{Error, Result};
use crate::linalg::CVec;
use crate::noise::{apply_distortion, sample_shots};
use crate::pauli::PauliString;
use crate::pulse::{PulseProgram, Ramp};
use crate::random::task_rng;
use crate::rates::slope_through_origin;
use crate::states::{density_from_pure, ket0, plus, product_state};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub quantity: String,
    pub value: f64,
    pub residual: f64,
    pub iterations: usize,
    pub failed: bool,
}

/// Dressed single-excitation frequencies of the static chain: diagonalizes
/// Σ (ω/2)Z + Σ J YY and reads the splitting of each qubit against the
/// fully relaxed reference state.
pub fn dressed_qubit_freqs(model: &QubitModel) -> Result<Vec<f64>> {
    let n = model.n();
    let prog = PulseProgram::new(vec![], 1e-9, 1e-9)?;
    let sim = QubitSim::new(model, &prog)?;
    let h = sim.hamiltonian_lab(0.0);
    let (w, v) = crate::linalg::eigh(&h)?;
    let dim = 1 << n;
    let mut energy_of = vec![f64::NAN; dim];
    for s in 0..dim {
        let col = v.column(s);
        let (mut best, mut best_w) = (0usize, -1.0);
        for (idx, z) in col.iter().enumerate() {
            if z.norm_sqr() > best_w {
                best_w = z.norm_sqr();
                best = idx;
            }
        }
        energy_of[best] = w[s];
    }
    let all_ones = dim - 1;
    let mut out = Vec::with_capacity(n);
    for q in 0..n {
        let flipped = all_ones ^ (1 << (n - 1 - q));
        let e = energy_of[flipped] - energy_of[all_ones];
        if !e.is_finite() {
            return Err(Error::Linalg("dressed-state labelling failed".into()));
        }
        out.push(e);
    }
    Ok(out)
}

/// Phase calibration of a cross-resonance channel: drive the pair from
/// |++⟩, measure in the X eigenbasis on both qubits, and minimize the
/// summed projection onto |+−⟩ and |−−⟩ — i.e. the probability that the
/// target qubit reads |−⟩ — over the envelope phase with a 1-D Bayesian
/// search plus a parabolic refinement through the best samples.
pub fn calibrate_phase(
    bench: &Workbench,
    model: &QubitModel,
    control: usize,
    target: usize,
    amplitude: f64,
    duration: f64,
) -> Result<CalibrationResult> {
    let dressed = dressed_qubit_freqs(model)?;
    let carrier = dressed[target];
    let dt = bench.config.scenario.sample_period_ns * 1e-9;
    let dur = grid_duration(duration, dt);
    let ramp = Ramp {
        length: bench.config.scenario.ramp_samples as f64 * dt,
    };
    let n = model.n();
    let shots = match bench.config.scenario.shots {
        0 => None,
        s => Some(s),
    };

    // |+⟩ on control and target, |0⟩ elsewhere
    let mut factors: Vec<CVec> = (0..n).map(|_| ket0()).collect();
    factors[control] = plus();
    factors[target] = plus();
    let input = product_state(&factors);
    let mut obs_labels = vec![crate::pauli::Pauli::I; n];
    obs_labels[target] = crate::pauli::Pauli::X;
    let obs = PauliString(obs_labels);

    let minus_prob = |phase: f64, setting: u64| -> Result<f64> {
        let ch = cr_channel(control, carrier, phase, amplitude, 1.0, dur, ramp.clone());
        let prog = apply_distortion(
            &PulseProgram::new(vec![ch], dur, dt)?,
            &bench.distortion,
        );
        let sim = QubitSim::new(model, &prog)?;
        let u = sim.propagate(0.0, dur)?;
        let rho = density_from_pure(&u.dot(&input));
        let mut rng = task_rng(bench.seed(), 0xca11 ^ setting);
        let ex = sample_shots(&rho, &obs, shots, &bench.readout, &mut rng)?;
        Ok((1.0 - ex) / 2.0)
    };

    let space = SearchSpace::new(vec![ParamSpec {
        name: "phase".into(),
        lo: -std::f64::consts::FRAC_PI_2,
        hi: std::f64::consts::FRAC_PI_2,
        unit: "rad".into(),
    }])?;
    let budget = 40;
    let cfg = OptimizeConfig {
        budget,
        seed: bench.seed().wrapping_add(17),
        ..Default::default()
    };
    let trace = optimize(
        &|x: &[f64], tick: u64| -> Result<Evaluation> {
            let p = minus_prob(x[0], tick)?;
            Ok(Evaluation {
                value: -p,
                std_error: 0.0,
            })
        },
        &space,
        &cfg,
    )?;
    // parabolic refinement around the incumbent on a fine local grid
    let inc = trace.incumbent().expect("budget ≥ 1");
    let mut best_phase = inc.incumbent_params[0];
    let mut best_p = -inc.incumbent_value;
    let mut width = 0.12f64;
    for round in 0..3 {
        let mut local: Vec<(f64, f64)> = Vec::new();
        for k in -3i64..=3 {
            let ph = (best_phase + k as f64 * width / 3.0)
                .clamp(-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2);
            let p = minus_prob(ph, 1000 + round * 16 + (k + 3) as u64)?;
            local.push((ph, p));
        }
        local.sort_by(|a, b| a.1.total_cmp(&b.1));
        if local[0].1 < best_p {
            best_p = local[0].1;
            best_phase = local[0].0;
        }
        width /= 3.0;
    }

    let failed = best_p > 0.05;
    Ok(CalibrationResult {
        quantity: format!("cr-phase[{control}->{target}]"),
        value: best_phase,
        residual: best_p,
        iterations: budget + 21,
        failed,
    })
}

/// Software-frame Z rates measured in the operating configuration: prepare
/// |+⟩ on one qubit (|0⟩ elsewhere), run the full program, and fit the
/// stroboscopic phase of ⟨X⟩ + i⟨Y⟩. The Z coefficient c of the effective
/// Hamiltonian satisfies phase-rate = −2c.
pub fn ramsey_frame_rates(
    model: &QubitModel,
    spec: &GateSpec,
    distortion: &crate::noise::LineDistortion,
    qubits: &[usize],
    strobe: f64,
    points: usize,
) -> Result<Vec<f64>> {
    let times: Vec<f64> = (1..=points).map(|k| k as f64 * strobe).collect();
    let prog = apply_distortion(&spec.program()?, distortion);
    let sim = QubitSim::new(model, &prog)?;
    let us = sim.propagate_checkpoints(0.0, &times)?;
    let n = model.n();
    let mut rates = Vec::with_capacity(qubits.len());
    for &q in qubits {
        let mut factors: Vec<CVec> = (0..n).map(|_| ket0()).collect();
        factors[q] = plus();
        let psi0 = product_state(&factors);
        let mut xl = vec![crate::pauli::Pauli::I; n];
        xl[q] = crate::pauli::Pauli::X;
        let mut yl = xl.clone();
        yl[q] = crate::pauli::Pauli::Y;
        let (xq, yq) = (PauliString(xl), PauliString(yl));
        let mut phases = Vec::with_capacity(points);
        let mut prev = 0.0f64;
        for u in &us {
            let rho = density_from_pure(&u.dot(&psi0));
            let ex = xq.expectation(&rho);
            let ey = yq.expectation(&rho);
            let mut th = ey.atan2(ex);
            // unwrap against the previous sample
            while th - prev > std::f64::consts::PI {
                th -= TAU;
            }
            while th - prev < -std::f64::consts::PI {
                th += TAU;
            }
            phases.push(th);
            prev = th;
        }
        let t = Array1::from(times.clone());
        let ph = Array1::from(phases);
        rates.push(-slope_through_origin(&t, &ph) / 2.0);
    }
    Ok(rates)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OmegaCalibration {
    /// Compensating-drive amplitude (rad/s).
    pub omega_c: f64,
    /// Side-drive amplitudes after matching the pair rates (rad/s).
    pub omega_side: [f64; 2],
    /// |r₀| and |r₁| at convergence (rad/s).
    pub rabi_rates: [f64; 2],
    pub rate_imbalance: f64,
    pub pair_rates: [f64; 2],
    pub iterations: usize,
}

/// Rabi rate |r| of the centre transmon from the population curve
/// P₁(t) = sin²(r t): least-squares over a rate grid with refinement.
fn fit_rabi_rate(times: &[f64], pops: &[f64], r_max: f64) -> f64 {
    let loss = |r: f64| -> f64 {
        times
            .iter()
            .zip(pops)
            .map(|(&t, &p)| {
                let m = (r * t).sin().powi(2);
                (m - p) * (m - p)
            })
            .sum()
    };
    let mut best_r = 0.0;
    let mut best_l = loss(0.0);
    let coarse = 400;
    for k in 1..=coarse {
        let r = r_max * k as f64 / coarse as f64;
        let l = loss(r);
        if l < best_l {
            best_l = l;
            best_r = r;
        }
    }
    // golden-section refinement around the best coarse grid point
    let (mut lo, mut hi) = (
        (best_r - r_max / coarse as f64).max(0.0),
        best_r + r_max / coarse as f64,
    );
    for _ in 0..40 {
        let m1 = lo + 0.382 * (hi - lo);
        let m2 = lo + 0.618 * (hi - lo);
        if loss(m1) < loss(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    0.5 * (lo + hi)
}

/// Measure the centre-qubit Rabi rate with the side spectator prepared in
/// |0⟩ or |1⟩, on the full transmon tier.
fn center_rabi_rate(
    dev: &TransmonDevice,
    prog: &PulseProgram,
    spectator: usize,
    spectator_bit: usize,
    window: f64,
    n_samples: usize,
) -> Result<f64> {
    let n = dev.n();
    let mut bits = 0usize;
    if spectator_bit == 1 {
        bits |= 1 << (n - 1 - spectator);
    }
    let mut psi = CVec::zeros(1 << n);
    psi[bits] = C64::new(1.0, 0.0);
    let init = dev.lift_state(&psi);
    let samples: Vec<f64> = (1..=n_samples).map(|k| window * k as f64 / n_samples as f64).collect();
    let mut init_block = crate::linalg::CMat::zeros((dev.dim, 1));
    for r in 0..dev.dim {
        init_block[[r, 0]] = init[r];
    }
    let blocks = dev.propagate_columns(prog, &init_block, &samples, 1.0)?;
    let center = 1; // chain centre
    let pops: Vec<f64> = blocks
        .iter()
        .map(|b| {
            let mut p = 0.0;
            for (cb, &s) in dev.comp_states.iter().enumerate() {
                if (cb >> (n - 1 - center)) & 1 == 1 {
                    p += b[[s, 0]].norm_sqr();
                }
            }
            p
        })
        .collect();
    Ok(fit_rabi_rate(&samples, &pops, TAU * 2e6))
}

/// Compensating-amplitude calibration on the full transmon tier.
///
/// Drives one side transmon cross-resonantly plus the centre compensation
/// channel, measures the centre Rabi rates r₀/r₁ with the spectator in
/// |0⟩/|1⟩ and bisects the compensation amplitude until |r₀| = |r₁|, then
/// rescales the side amplitudes until the two pair rates match.
pub fn calibrate_omega_c(
    dev: &TransmonDevice,
    omega_side_init: [f64; 2],
    omega_c_init: f64,
    dt_scale: f64,
) -> Result<OmegaCalibration> {
    let carrier = dev.qubit_freqs[1];
    let dt = 1e-9;
    let window = 1.0e-6;
    let dur = grid_duration(window, dt);
    let mut omega_side = omega_side_init;
    let omega_c;
    let _ = omega_c_init;
    let mut iterations = 0usize;

    // phases mapped from the sin(ωt − φ) convention with φ = (π, π/2, π):
    // sin(ωt − φ) = cos(ωt − φ − π/2) ⇒ envelope phase −φ − π/2
    let side_phase = -std::f64::consts::PI - std::f64::consts::FRAC_PI_2;
    // compensation drive −Ω_c sin(ω t − π) ŷ = +Ω_c sin(ω t) ŷ ⇒ phase −π/2
    let comp_phase = -std::f64::consts::FRAC_PI_2;

    let rates_for = |omega_side: f64, omega_c: f64, side: usize| -> Result<(f64, f64)> {
        let mut channels = vec![cr_channel(side, carrier, side_phase, omega_side, 1.0, dur, Ramp::none())];
        if omega_c > 0.0 {
            channels.push(resonant_channel(1, carrier, comp_phase, omega_c, 1.0, 0.0, dur, Ramp::none()));
        }
        let prog = PulseProgram::new(channels, dur, dt)?;
        let r0 = center_rabi_rate(dev, &prog, side, 0, window, 24)?;
        let r1 = center_rabi_rate(dev, &prog, side, 1, window, 24)?;
        Ok((r0, r1))
    };

    // bisection on Ω_c for the first side drive; |r₀| − |r₁| changes sign
    // across the balancing point
    let imbalance = |oc: f64| -> Result<f64> {
        let (r0, r1) = rates_for(omega_side[0], oc, 0)?;
        Ok(r0.abs() - r1.abs())
    };
    let mut lo = 0.0f64;
    let mut hi = TAU * 1.5e6;
    let mut f_lo = imbalance(lo)?;
    let f_hi = imbalance(hi)?;
    if f_lo * f_hi > 0.0 {
        // the balanced point may sit at zero compensation
        if f_lo.abs() < 0.01 * TAU * 0.2e6 {
            omega_c = 0.0;
        } else {
            return Err(Error::Calibration(format!(
                "no sign change for the compensation search: f(0) = {:.1} kHz, f(hi) = {:.1} kHz",
                f_lo / TAU / 1e3,
                f_hi / TAU / 1e3
            )));
        }
    } else {
        for _ in 0..50 {
            iterations += 1;
            let mid = 0.5 * (lo + hi);
            let fm = imbalance(mid)?;
            if f_lo * fm <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
                f_lo = fm;
            }
            let (r0, r1) = rates_for(omega_side[0], 0.5 * (lo + hi), 0)?;
            if (r0.abs() - r1.abs()).abs() <= 0.01 * r0.abs().max(TAU * 1e3) {
                break;
            }
        }
        omega_c = 0.5 * (lo + hi);
    }
    if iterations >= 50 {
        return Err(Error::Calibration("compensation bisection did not converge".into()));
    }

    // pair rates c_ZA = (|r₀| + |r₁|)/2 per side; rescale side amplitudes
    // until they match within 2%
    let (r0a, r1a) = rates_for(omega_side[0], omega_c, 0)?;
    let mut c_pair0 = 0.5 * (r0a.abs() + r1a.abs());
    let (r0b, r1b) = rates_for(omega_side[1], omega_c, 1)?;
    let mut c_pair1 = 0.5 * (r0b.abs() + r1b.abs());
    let mut guard = 0;
    while (c_pair0 - c_pair1).abs() > 0.02 * c_pair0.max(c_pair1) && guard < 8 {
        guard += 1;
        omega_side[1] *= c_pair0 / c_pair1;
        let (r0, r1) = rates_for(omega_side[1], omega_c, 1)?;
        c_pair1 = 0.5 * (r0.abs() + r1.abs());
        let (r0n, r1n) = rates_for(omega_side[0], omega_c, 0)?;
        c_pair0 = 0.5 * (r0n.abs() + r1n.abs());
    }

    let (r0, r1) = rates_for(omega_side[0], omega_c, 0)?;
    let imb = (r0.abs() - r1.abs()).abs() / r0.abs().max(1e-12);
    let _ = dt_scale;
    Ok(OmegaCalibration {
        omega_c,
        omega_side,
        rabi_rates: [r0.abs(), r1.abs()],
        rate_imbalance: imb,
        pair_rates: [c_pair0, c_pair1],
        iterations,
    })
}
