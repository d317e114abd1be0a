//! Drift study: repeat process tomography of a frozen pulse configuration
//! after a configured number of drift ticks and compare, for both the
//! engineered stroboscopic gate and a static cross-resonance control gate.

use serde::{Deserialize, Serialize};

use super::{
    floquet::{floquet_gate_spec, operational_frames, prepare_floquet},
    reported_unitary,
    zx::{prepare_zx, zx_gate_spec},
    GateSpec, Workbench, TAU,
};
use crate::device::{shift_qubit_freqs, QubitModel};
use crate::error::Result;
use crate::noise::DriftProcess;
use crate::tomography::{process_fidelity, process_tomography, ProcessMatrix, ReducedAxis, UnitaryChannel};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DriftComparison {
    pub overlap: f64,
    pub max_entry_distance: f64,
    pub self_fidelity_before: f64,
}

#[derive(Debug)]
pub struct DriftStudyOutput {
    pub floquet: DriftComparison,
    pub static_zx: DriftComparison,
    pub ticks: u64,
    pub chi_floquet: [ProcessMatrix; 2],
    pub chi_static: [ProcessMatrix; 2],
}

/// Tomography of a frozen gate spec on a drift-shifted device; carriers,
/// frames and phases stay at their tick-0 calibration (plus drifted line
/// phases), exactly as a stale-calibrated experiment would behave.
fn tomography_at_tick(
    bench: &Workbench,
    model: &QubitModel,
    spec: &GateSpec,
    drift: &DriftProcess,
    tick: u64,
    seed_salt: u64,
) -> Result<ProcessMatrix> {
    let (df, dphi) = drift.offsets_at(model.n(), spec.channels.len(), tick);
    let mut spec = spec.clone();
    for (ch, off) in spec.channels.iter_mut().zip(&dphi) {
        ch.phase += off;
    }
    let drifted = shift_qubit_freqs(model, &df);
    let u = reported_unitary(&drifted, &spec, &bench.distortion)?;
    let oracle = UnitaryChannel {
        u,
        readout: bench.readout.clone(),
        shots: match bench.config.scenario.shots {
            0 => None,
            s => Some(s),
        },
        seed: bench.seed().wrapping_add(seed_salt).wrapping_add(tick),
    };
    process_tomography(&oracle, model.n())
}

fn compare(a: &ProcessMatrix, b: &ProcessMatrix) -> Result<(f64, f64)> {
    let overlap = process_fidelity(a, b)?;
    Ok((overlap, a.max_entry_distance(b)))
}

/// Run the two-pass study for both pulse schemes under the configured
/// drift process. The engineered gate and the static control share the
/// drift realization, so the comparison isolates pulse-scheme sensitivity.
pub fn run_drift_study(bench: &Workbench, drift: &DriftProcess) -> Result<DriftStudyOutput> {
    let ticks = bench.config.scenario.drift_study_ticks;
    let model = bench.model.clone();

    // engineered gate, calibrated at tick 0
    let mut fl_setup = prepare_floquet(bench, &model)?;
    let weights: Vec<f64> = bench
        .config
        .scenario
        .floquet_weights_mhz
        .iter()
        .map(|w| TAU * w * 1e6)
        .collect();
    operational_frames(bench, &model, &mut fl_setup, &weights, 0.0)?;
    let fl_spec = floquet_gate_spec(bench, &fl_setup, &weights, 0.0)?;

    // static cross-resonance control gate on the first pair, embedded in
    // the three-qubit chain so both gates face identical drift
    let pair = QubitModel {
        freqs: vec![model.freqs[0], model.freqs[1]],
        couplings: vec![model.couplings[0]],
    };
    let zx_setup = prepare_zx(
        bench,
        &pair,
        0,
        1,
        ReducedAxis::X,
        std::f64::consts::FRAC_PI_4,
    )?;
    let d_star = std::f64::consts::FRAC_PI_4 / (zx_setup.zx_rate_slope.abs() * zx_setup.duration);
    let pair_spec = zx_gate_spec(
        bench,
        &pair,
        &zx_setup,
        0,
        1,
        ReducedAxis::X,
        d_star.min(1.0),
        0.0,
        0.0,
    )?;
    // lift the pair gate spec onto the chain (third qubit idles)
    let zx_spec = GateSpec {
        channels: pair_spec.channels.clone(),
        duration: pair_spec.duration,
        sample_period: pair_spec.sample_period,
        frame_rates: vec![pair_spec.frame_rates[0], pair_spec.frame_rates[1], 0.0],
        frame_angles: vec![pair_spec.frame_angles[0], pair_spec.frame_angles[1], 0.0],
    };

    let fl_before = tomography_at_tick(bench, &model, &fl_spec, drift, 0, 0xd1)?;
    let fl_after = tomography_at_tick(bench, &model, &fl_spec, drift, ticks, 0xd2)?;
    let zx_before = tomography_at_tick(bench, &model, &zx_spec, drift, 0, 0xd3)?;
    let zx_after = tomography_at_tick(bench, &model, &zx_spec, drift, ticks, 0xd4)?;

    let (fo, fd) = compare(&fl_before, &fl_after)?;
    let (zo, zd) = compare(&zx_before, &zx_after)?;
    let f_self = process_fidelity(&fl_before, &fl_before)?;
    let z_self = process_fidelity(&zx_before, &zx_before)?;
    Ok(DriftStudyOutput {
        floquet: DriftComparison {
            overlap: fo,
            max_entry_distance: fd,
            self_fidelity_before: f_self,
        },
        static_zx: DriftComparison {
            overlap: zo,
            max_entry_distance: zd,
            self_fidelity_before: z_self,
        },
        ticks,
        chi_floquet: [fl_before, fl_after],
        chi_static: [zx_before, zx_after],
    })
}
