//! The staged three-qubit gate exp(iπ/4(ZX𝟙 + 𝟙YZ)): each two-body block
//! is optimized on its own against the reduced-χ overlap, then the shared
//! centre-qubit correction is optimized against the zero-fidelity of the
//! full target.

use serde::{Deserialize, Serialize};

use super::{
    calibrate::dressed_qubit_freqs,
    cr_channel, grid_duration, pair_target, reported_unitary, resonant_channel, zx1_1yz_target,
    zx::{prepare_zx, shot_stderr, ZxSetup},
    GateSpec, Workbench, TAU,
};
use crate::bayesopt::{optimize, Evaluation, OptimizationTrace, OptimizeConfig, ParamSpec, SearchSpace};
use crate::device::QubitModel;
use crate::error::{Error, Result};
use crate::pulse::Ramp;
use crate::tomography::{
    chi_from_unitary, process_fidelity, process_tomography, reduced_chi_of_unitary,
    reduced_overlap, reduced_process_tomography, ProcessMatrix, ReducedAxis, UnitaryChannel,
};
use crate::zerofid::{zero_fidelity_estimate, ZeroFidelityPlan};

/// One optimized two-body block: which pair, which axis, and the incumbent
/// (amplitude fraction, virtual-Z residual angle).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlockResult {
    pub control: usize,
    pub target: usize,
    pub axis: ReducedAxis,
    pub setup: ZxSetup,
    pub d_cr: f64,
    pub theta_z: f64,
    pub block_overlap: f64,
}

#[derive(Debug)]
pub struct ThreeQubitOutput {
    pub blocks: [BlockResult; 2],
    pub stage1_traces: [OptimizationTrace; 2],
    pub stage2_trace: OptimizationTrace,
    pub final_chi: ProcessMatrix,
    pub final_fidelity: f64,
    pub incumbent_comp: (f64, f64),
}

/// Pair restriction of the chain: (control, 1) with the matching coupling.
fn pair_of(model: &QubitModel, control: usize) -> QubitModel {
    match control {
        0 => QubitModel {
            freqs: vec![model.freqs[0], model.freqs[1]],
            couplings: vec![model.couplings[0]],
        },
        2 => QubitModel {
            freqs: vec![model.freqs[2], model.freqs[1]],
            couplings: vec![model.couplings[1]],
        },
        _ => unreachable!("controls are the chain ends"),
    }
}

/// The three-qubit gate spec: both CR blocks at their stage-1 parameters,
/// running simultaneously for the common duration, plus the optional
/// centre correction drive with amplitude fraction and phase.
#[allow(clippy::too_many_arguments)]
pub fn joint_gate_spec(
    bench: &Workbench,
    model: &QubitModel,
    blocks: &[BlockResult; 2],
    duration: f64,
    d_comp: f64,
    comp_phase: f64,
) -> Result<GateSpec> {
    let scenario = &bench.config.scenario;
    let dt = scenario.sample_period_ns * 1e-9;
    let ramp = Ramp {
        length: scenario.ramp_samples as f64 * dt,
    };
    let omega = TAU * scenario.cr_amplitude_mhz * 1e6;
    let dressed = dressed_qubit_freqs(model)?;
    let mut channels = Vec::new();
    let mut frame_angles = vec![0.0; 3];
    for b in blocks {
        channels.push(cr_channel(
            b.control,
            b.setup.carrier,
            b.setup.phase,
            omega,
            b.d_cr,
            duration,
            ramp.clone(),
        ));
        let stark = b.setup.stark_curvature * b.d_cr * b.d_cr * duration;
        frame_angles[b.control] = 2.0 * stark + b.theta_z;
    }
    if d_comp.abs() > 1e-9 {
        let sq = TAU * scenario.sq_amplitude_mhz * 1e6;
        channels.push(resonant_channel(
            1,
            dressed[1],
            comp_phase,
            sq,
            d_comp,
            0.0,
            duration,
            ramp,
        ));
    }
    Ok(GateSpec {
        channels,
        duration,
        sample_period: dt,
        frame_rates: vec![0.0; 3],
        frame_angles,
    })
}

/// Stage 1 for one block: optimize (d_cr, θ_z) against the pairwise
/// reduced-χ overlap with exp(iθ ZA), evaluated on the two-qubit
/// restriction of the chain.
fn optimize_block(
    bench: &Workbench,
    model: &QubitModel,
    control: usize,
    axis: ReducedAxis,
    theta: f64,
    duration: f64,
    budget: usize,
    seed_salt: u64,
) -> Result<(BlockResult, OptimizationTrace)> {
    let pair = pair_of(model, control);
    let mut setup = prepare_zx(bench, &pair, 0, 1, axis, theta)?;
    // all blocks share the joint gate duration
    setup.duration = duration;
    let d_mid = theta / (setup.zx_rate_slope.abs() * duration);
    if d_mid > 0.95 {
        return Err(Error::Calibration(format!(
            "block {control}: required amplitude fraction {d_mid:.2} out of range"
        )));
    }
    let target_red = reduced_chi_of_unitary(&pair_target(theta, axis), axis)?;
    let shots = match bench.config.scenario.shots {
        0 => None,
        s => Some(s),
    };
    let space = SearchSpace::new(vec![
        ParamSpec {
            name: "d_cr".into(),
            lo: (0.5 * d_mid).max(0.02),
            hi: (1.6 * d_mid).min(1.0),
            unit: "fraction".into(),
        },
        ParamSpec {
            name: "theta_z".into(),
            lo: -std::f64::consts::PI,
            hi: std::f64::consts::PI,
            unit: "rad".into(),
        },
    ])?;
    let objective = |x: &[f64], tick: u64| -> Result<Evaluation> {
        let spec = super::zx::zx_gate_spec(bench, &pair, &setup, 0, 1, axis, x[0], 0.0, x[1])?;
        let u = reported_unitary(&pair, &spec, &bench.distortion)?;
        let oracle = UnitaryChannel {
            u,
            readout: crate::noise::ReadoutModel::symmetric(bench.readout.p01[0], 2),
            shots,
            seed: bench
                .seed()
                .wrapping_add(seed_salt)
                .wrapping_add(tick.wrapping_mul(0x77)),
        };
        let red = reduced_process_tomography(&oracle, axis)?;
        Ok(Evaluation {
            value: reduced_overlap(&red, &target_red),
            std_error: shot_stderr(shots),
        })
    };
    let cfg = OptimizeConfig {
        budget,
        exploration_fraction: bench.config.scenario.exploration_fraction,
        seed: bench.seed().wrapping_add(seed_salt),
        refit_every: 4,
        ticks_per_eval: bench.config.scenario.ticks_per_eval,
    };
    let trace = optimize(&objective, &space, &cfg)?;
    let inc = trace.incumbent().expect("budget ≥ 1");
    let (d_cr, theta_z) = (inc.incumbent_params[0], inc.incumbent_params[1]);
    // noiseless audit of the block quality at the incumbent
    let spec = super::zx::zx_gate_spec(bench, &pair, &setup, 0, 1, axis, d_cr, 0.0, theta_z)?;
    let u = reported_unitary(&pair, &spec, &bench.distortion)?;
    let red = reduced_process_tomography(&UnitaryChannel::exact(u), axis)?;
    let block_overlap = reduced_overlap(&red, &target_red);
    Ok((
        BlockResult {
            control,
            target: 1,
            axis,
            setup,
            d_cr,
            theta_z,
            block_overlap,
        },
        trace,
    ))
}

/// The full staged scenario.
pub fn run_zx1_1yz_scenario(bench: &Workbench) -> Result<ThreeQubitOutput> {
    let model = bench.model.clone();
    if model.n() != 3 {
        return Err(Error::InvalidArg("the staged gate runs on a three-qubit chain".into()));
    }
    let theta = std::f64::consts::FRAC_PI_4;
    let scenario = &bench.config.scenario;
    let stage1_budget = (scenario.budget / 3).max(20);
    let stage2_budget = scenario.budget.saturating_sub(2 * stage1_budget).max(20);

    // common duration from the slower pair, estimated with a throwaway
    // pre-scan on each block
    let pre0 = prepare_zx(bench, &pair_of(&model, 0), 0, 1, ReducedAxis::X, theta)?;
    let pre2 = prepare_zx(bench, &pair_of(&model, 2), 0, 1, ReducedAxis::Y, theta)?;
    let dt = scenario.sample_period_ns * 1e-9;
    let duration = grid_duration(pre0.duration.max(pre2.duration), dt);

    let (block0, trace0) =
        optimize_block(bench, &model, 0, ReducedAxis::X, theta, duration, stage1_budget, 0xb10c0)?;
    let (block2, trace2) =
        optimize_block(bench, &model, 2, ReducedAxis::Y, theta, duration, stage1_budget, 0xb10c2)?;
    for b in [&block0, &block2] {
        if b.block_overlap < 0.8 {
            return Err(Error::Calibration(format!(
                "stage-1 block on control {} reached only {:.3}; aborting stage 2",
                b.control, b.block_overlap
            )));
        }
    }

    let blocks = [block0, block2];
    let target = zx1_1yz_target(theta);
    let plan = ZeroFidelityPlan::build(&target, scenario.zero_fidelity_samples, bench.seed())?;
    let zf_shots = match scenario.zero_fidelity_shots {
        0 => None,
        s => Some(s),
    };
    let space = SearchSpace::new(vec![
        ParamSpec {
            name: "d_comp".into(),
            lo: -0.25,
            hi: 0.25,
            unit: "fraction".into(),
        },
        ParamSpec {
            name: "comp_phase".into(),
            lo: -std::f64::consts::PI,
            hi: std::f64::consts::PI,
            unit: "rad".into(),
        },
    ])?;
    let objective = |x: &[f64], tick: u64| -> Result<Evaluation> {
        let spec = joint_gate_spec(bench, &model, &blocks, duration, x[0], x[1])?;
        let u = reported_unitary(&model, &spec, &bench.distortion)?;
        let oracle = UnitaryChannel {
            u,
            readout: bench.readout.clone(),
            shots: zf_shots,
            seed: bench.seed().wrapping_add(0x57a2).wrapping_add(tick.wrapping_mul(3)),
        };
        let est = zero_fidelity_estimate(&plan, &oracle, tick)?;
        Ok(Evaluation {
            value: est.value,
            std_error: est.std_error.max(1e-6),
        })
    };
    let cfg = OptimizeConfig {
        budget: stage2_budget,
        exploration_fraction: scenario.exploration_fraction,
        seed: bench.seed().wrapping_add(0x57a9e2),
        refit_every: 4,
        ticks_per_eval: scenario.ticks_per_eval,
    };
    let stage2_trace = optimize(&objective, &space, &cfg)?;
    let inc = stage2_trace.incumbent().expect("budget ≥ 1");
    let (d_comp, comp_phase) = (inc.incumbent_params[0], inc.incumbent_params[1]);

    let spec = joint_gate_spec(bench, &model, &blocks, duration, d_comp, comp_phase)?;
    let u = reported_unitary(&model, &spec, &bench.distortion)?;
    let oracle = UnitaryChannel {
        u,
        readout: bench.readout.clone(),
        shots: match scenario.shots {
            0 => None,
            s => Some(s),
        },
        seed: bench.seed().wrapping_add(0x3f1d),
    };
    let final_chi = process_tomography(&oracle, 3)?;
    let final_fidelity = process_fidelity(&final_chi, &chi_from_unitary(&target)?)?;

    Ok(ThreeQubitOutput {
        blocks,
        stage1_traces: [trace0, trace2],
        stage2_trace,
        final_chi,
        final_fidelity,
        incumbent_comp: (d_comp, comp_phase),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunConfig;

    #[test]
    fn joint_target_structure() {
        // exp(iπ/4(ZX𝟙+𝟙YZ)): the nine dominant χ elements are indexed by
        // products of {𝟙𝟙𝟙, ZX𝟙, 𝟙YZ}
        let u = zx1_1yz_target(std::f64::consts::FRAC_PI_4);
        let chi = chi_from_unitary(&u).unwrap();
        let idx = |s: &str| s.parse::<crate::pauli::PauliString>().unwrap().index();
        // ZX𝟙 and 𝟙YZ anticommute, so the exponential expands on
        // {𝟙𝟙𝟙, ZX𝟙, 𝟙YZ} and χ has 3 × 3 dominant elements
        let dominant = [idx("III"), idx("ZXI"), idx("IYZ")];
        let mut total_dom = 0.0;
        for &i in &dominant {
            for &j in &dominant {
                total_dom += chi.chi[[i, j]].norm_sqr();
            }
        }
        let total: f64 = chi.chi.iter().map(|z| z.norm_sqr()).sum();
        assert!(total_dom / total > 0.999, "dominant fraction {}", total_dom / total);
    }

    #[test]
    fn pair_restrictions_are_consistent() {
        let cfg = RunConfig::from_toml("").unwrap();
        let bench = Workbench::new(cfg).unwrap();
        let p0 = pair_of(&bench.model, 0);
        let p2 = pair_of(&bench.model, 2);
        assert_eq!(p0.freqs[1], bench.model.freqs[1]);
        assert_eq!(p2.freqs[1], bench.model.freqs[1]);
        assert_eq!(p2.freqs[0], bench.model.freqs[2]);
    }
}
