//! Physical models of the transmon chain at two tiers: a rotating-frame
//! qubit model used inside optimization loops, and the full anharmonic
//! lab-frame model used for validation and slow-dynamics reproduction.

use ndarray::Array1;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, dagger, eigh, kron, polar_unitary, CMat};
use crate::pauli::Pauli;
use crate::pulse::PulseProgram;

const TAU: f64 = std::f64::consts::TAU;

/// Rotating-frame qubit chain: frequencies and nearest-neighbour couplings.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QubitModel {
    /// Qubit angular frequencies ω_i (rad/s).
    pub freqs: Vec<f64>,
    /// Coupling J between qubits (i, i+1), rad/s; length n−1.
    pub couplings: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Frame {
    Lab,
    Rotating,
}

impl QubitModel {
    pub fn n(&self) -> usize {
        self.freqs.len()
    }

    pub fn dim(&self) -> usize {
        1 << self.n()
    }

    /// Validity check; returns human-readable warnings for regimes where the
    /// qubit reduction is questionable (J not small against the detuning).
    pub fn validate(&self) -> Result<Vec<String>> {
        if self.freqs.is_empty() {
            return Err(Error::InvalidArg("qubit model needs at least one qubit".into()));
        }
        if self.couplings.len() + 1 != self.freqs.len() {
            return Err(Error::InvalidArg(format!(
                "{} qubits need {} couplings, got {}",
                self.freqs.len(),
                self.freqs.len() - 1,
                self.couplings.len()
            )));
        }
        let mut warnings = Vec::new();
        for (k, &j) in self.couplings.iter().enumerate() {
            let det = (self.freqs[k] - self.freqs[k + 1]).abs();
            if det == 0.0 || j.abs() / det > 0.1 {
                warnings.push(format!(
                    "coupling {k}: J/Δ = {:.3} exceeds 0.1; qubit reduction dubious",
                    if det == 0.0 { f64::INFINITY } else { j.abs() / det }
                ));
            }
        }
        Ok(warnings)
    }
}

/// Prepared simulator for one (model, program) pair: embedded operators are
/// cached so the per-step Hamiltonian assembly stays cheap.
pub struct QubitSim<'a> {
    pub model: &'a QubitModel,
    pub prog: &'a PulseProgram,
    xs: Vec<CMat>,
    ys: Vec<CMat>,
    zs: Vec<CMat>,
    /// per coupled pair: σ⁺_i σ⁻_{i+1} embedded, and the beat ω_i − ω_{i+1}
    flip: Vec<(CMat, f64)>,
}

fn embed_single(op: &CMat, q: usize, n: usize) -> CMat {
    let mut out = ndarray::arr2(&[[C64::new(1.0, 0.0)]]);
    for k in 0..n {
        let f = if k == q { op.clone() } else { CMat::eye(2) };
        out = kron(&out, &f);
    }
    out
}

impl<'a> QubitSim<'a> {
    pub fn new(model: &'a QubitModel, prog: &'a PulseProgram) -> Result<Self> {
        model.validate()?;
        prog.validate()?;
        let n = model.n();
        for ch in &prog.channels {
            if ch.target >= n {
                return Err(Error::InvalidArg(format!(
                    "channel targets qubit {} of {n}",
                    ch.target
                )));
            }
        }
        let sp = ndarray::arr2(&[
            [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            [C64::new(0.0, 0.0), C64::new(0.0, 0.0)],
        ]);
        let sm = dagger(&sp);
        let xs = (0..n).map(|q| embed_single(&Pauli::X.matrix(), q, n)).collect();
        let ys = (0..n).map(|q| embed_single(&Pauli::Y.matrix(), q, n)).collect();
        let zs = (0..n).map(|q| embed_single(&Pauli::Z.matrix(), q, n)).collect();
        let mut flip = Vec::new();
        for k in 0..n.saturating_sub(1) {
            let a = embed_single(&sp, k, n).dot(&embed_single(&sm, k + 1, n));
            flip.push((a, model.freqs[k] - model.freqs[k + 1]));
        }
        Ok(QubitSim { model, prog, xs, ys, zs, flip })
    }

    /// Eq.-form lab Hamiltonian: Σ (ω_i/2) Z_i + Σ J Y_i Y_{i+1} + Σ D_i(t) X_i.
    pub fn hamiltonian_lab(&self, t: f64) -> CMat {
        let d = self.model.dim();
        let mut h = CMat::zeros((d, d));
        for (q, &w) in self.model.freqs.iter().enumerate() {
            h.scaled_add(C64::new(0.5 * w, 0.0), &self.zs[q]);
        }
        for (k, &j) in self.model.couplings.iter().enumerate() {
            let yy = self.ys[k].dot(&self.ys[k + 1]);
            h.scaled_add(C64::new(j, 0.0), &yy);
        }
        for ch in &self.prog.channels {
            let f = ch.field(t);
            if f != 0.0 {
                h.scaled_add(C64::new(f, 0.0), &self.xs[ch.target]);
            }
        }
        h
    }

    /// Rotating-frame Hamiltonian with the rotating-wave approximation:
    /// counter-rotating terms at carrier-sum frequencies are dropped, slow
    /// beats at detunings and coupling splittings are kept.
    ///
    /// Drive on qubit q: (Ω/2)(Re[G] X_q + Im[G] Y_q) with
    /// G = envelope(t) · e^{i(ω_c − ω_q)t}; coupling (i,j):
    /// J (σ⁺_i σ⁻_j e^{i(ω_i−ω_j)t} + h.c.).
    pub fn hamiltonian_rotating(&self, t: f64) -> CMat {
        let d = self.model.dim();
        let mut h = CMat::zeros((d, d));
        for ch in &self.prog.channels {
            let g = ch.complex_envelope(t);
            if g == C64::new(0.0, 0.0) {
                continue;
            }
            let q = ch.target;
            let gg = g * C64::from_polar(1.0, (ch.carrier - self.model.freqs[q]) * t);
            let half = 0.5 * ch.amplitude;
            h.scaled_add(C64::new(half * gg.re, 0.0), &self.xs[q]);
            h.scaled_add(C64::new(half * gg.im, 0.0), &self.ys[q]);
        }
        for (k, &j) in self.model.couplings.iter().enumerate() {
            let (ref op, beat) = self.flip[k];
            let ph = C64::from_polar(j, beat * t);
            for i in 0..d {
                for jj in 0..d {
                    let v = op[[i, jj]];
                    if v != C64::new(0.0, 0.0) {
                        h[[i, jj]] += ph * v;
                        h[[jj, i]] += (ph * v).conj();
                    }
                }
            }
        }
        h
    }

    /// Fastest beat present in the rotating-frame generator, used to pick dt.
    fn max_beat(&self) -> f64 {
        let mut nu: f64 = self.prog.envelope_bandwidth();
        for ch in &self.prog.channels {
            nu = nu.max((ch.carrier - self.model.freqs[ch.target]).abs());
        }
        for &(_, beat) in &self.flip {
            nu = nu.max(beat.abs());
        }
        nu
    }

    fn max_norm(&self, t0: f64, t1: f64, frame: Frame) -> f64 {
        let mut worst = 0.0f64;
        for k in 0..=32 {
            let t = t0 + (t1 - t0) * k as f64 / 32.0;
            let h = match frame {
                Frame::Lab => self.hamiltonian_lab(t),
                Frame::Rotating => self.hamiltonian_rotating(t),
            };
            let n = h.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            worst = worst.max(n);
        }
        worst
    }

    /// Step size honoring both the ‖H‖·dt ≤ 0.1 unitary-expansion rule and
    /// the sampling of the fastest rotating-frame beat.
    pub fn default_dt(&self, t0: f64, t1: f64) -> f64 {
        let hmax = self.max_norm(t0, t1, Frame::Rotating).max(1.0);
        let beat = self.max_beat();
        let dt_norm = 0.1 / hmax;
        let dt_beat = if beat > 0.0 { 0.02 / beat } else { f64::INFINITY };
        dt_norm.min(dt_beat).min((t1 - t0).max(1e-12))
    }

    /// Rotating-frame propagator over [t0, t1] via midpoint-sampled
    /// piecewise-constant exponentials.
    pub fn propagate(&self, t0: f64, t1: f64) -> Result<CMat> {
        let dt = self.default_dt(t0, t1);
        self.propagate_with(t0, t1, dt, Frame::Rotating)
    }

    pub fn propagate_with(&self, t0: f64, t1: f64, dt: f64, frame: Frame) -> Result<CMat> {
        linalg::propagate_piecewise(
            |t| match frame {
                Frame::Lab => self.hamiltonian_lab(t),
                Frame::Rotating => self.hamiltonian_rotating(t),
            },
            t0,
            t1,
            dt,
        )
    }

    /// Cumulative rotating-frame propagators at the requested times
    /// (ascending, all ≥ t0). Entry k is U(times[k] ← t0).
    pub fn propagate_checkpoints(&self, t0: f64, times: &[f64]) -> Result<Vec<CMat>> {
        let mut out = Vec::with_capacity(times.len());
        let t_end = times.last().copied().unwrap_or(t0);
        let dt = self.default_dt(t0, t_end);
        let mut u = CMat::eye(self.model.dim());
        let mut t_prev = t0;
        for &t in times {
            if t < t_prev - 1e-18 {
                return Err(Error::InvalidArg("checkpoint times must ascend".into()));
            }
            let seg = self.propagate_with(t_prev, t, dt, Frame::Rotating)?;
            u = seg.dot(&u);
            out.push(u.clone());
            t_prev = t;
        }
        Ok(out)
    }
}

/// Spec-level entry point selecting the frame explicitly.
pub fn build_qubit_hamiltonian(
    model: &QubitModel,
    prog: &PulseProgram,
    t: f64,
    frame: Frame,
) -> Result<CMat> {
    let sim = QubitSim::new(model, prog)?;
    Ok(match frame {
        Frame::Lab => sim.hamiltonian_lab(t),
        Frame::Rotating => sim.hamiltonian_rotating(t),
    })
}

// ---------------------------------------------------------------------------
// full transmon tier
// ---------------------------------------------------------------------------

/// Physical parameters of an n-transmon chain in the anharmonic-cosine model.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DeviceModel {
    /// Harmonic frequencies ω_h,j (rad/s).
    pub omega_h: Vec<f64>,
    /// Dimensionless anharmonicity parameters ε_j.
    pub epsilon: Vec<f64>,
    /// Nearest-neighbour couplings J (rad/s), length n−1, coupling ŷ_k ŷ_{k+1}.
    pub couplings: Vec<f64>,
    /// Per-transmon eigenlevels kept, m ≥ 2.
    pub levels_per_transmon: usize,
    /// Total low-energy states retained in the composite space, ≤ mⁿ.
    pub global_truncation: usize,
}

impl DeviceModel {
    pub fn n(&self) -> usize {
        self.omega_h.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if n == 0 {
            return Err(Error::InvalidArg("device needs at least one transmon".into()));
        }
        if self.epsilon.len() != n || self.couplings.len() + 1 != n.max(1) {
            return Err(Error::InvalidArg("device parameter lengths inconsistent".into()));
        }
        if self.levels_per_transmon < 2 {
            return Err(Error::InvalidArg("need at least two levels per transmon".into()));
        }
        let full = self.levels_per_transmon.pow(n as u32);
        if self.global_truncation > full {
            return Err(Error::InvalidArg(format!(
                "global truncation {} exceeds m^n = {full}",
                self.global_truncation
            )));
        }
        if self.global_truncation < 1 << n {
            return Err(Error::InvalidArg(
                "global truncation smaller than the computational subspace".into(),
            ));
        }
        Ok(())
    }
}

/// Single-transmon Hamiltonian (ω_h/4)[ŷ² − (2/ε)cos(√ε x̂)] in a harmonic
/// basis of `m_build` levels. Returns (eigenvalues, eigenvectors, ŷ).
fn transmon_single(omega_h: f64, epsilon: f64, m_build: usize) -> Result<(Array1<f64>, CMat, CMat)> {
    let m = m_build;
    let mut b = CMat::zeros((m, m));
    for k in 1..m {
        b[[k - 1, k]] = C64::new((k as f64).sqrt(), 0.0);
    }
    let bd = dagger(&b);
    let x = &b + &bd;
    let y = (&b - &bd).mapv(|z| z * C64::new(0.0, -1.0));
    // cos(√ε x̂) through the eigendecomposition of x̂
    let xe = x.mapv(|z| z * C64::new(epsilon.sqrt(), 0.0));
    let (w, v) = eigh(&xe)?;
    let mut cosx = v.clone();
    for k in 0..m {
        let c = C64::new(w[k].cos(), 0.0);
        for r in 0..m {
            cosx[[r, k]] *= c;
        }
    }
    let cosx = cosx.dot(&dagger(&v));
    let y2 = y.dot(&y);
    let h = (&y2 - &cosx.mapv(|z| z * C64::new(2.0 / epsilon, 0.0)))
        .mapv(|z| z * C64::new(omega_h / 4.0, 0.0));
    let (e, vh) = eigh(&h)?;
    Ok((e, vh, y))
}

/// A diagonalized device: dressed spectrum, drive operators and the
/// computational-subspace bookkeeping.
pub struct TransmonDevice {
    pub model: DeviceModel,
    pub dim: usize,
    /// Dressed energies (rad/s), ground state shifted to zero.
    pub energies: Array1<f64>,
    /// Dominant bare occupation of each kept dressed state.
    pub labels: Vec<Vec<usize>>,
    /// ŷ_j in the truncated dressed basis.
    pub drive_ops: Vec<CMat>,
    /// Kept-state index of each computational bitstring (qubit 1 = MSB).
    pub comp_states: Vec<usize>,
    /// Dressed first-excitation frequencies (rad/s).
    pub qubit_freqs: Vec<f64>,
    /// Isolated-transmon first-excitation frequencies (rad/s).
    pub bare_freqs: Vec<f64>,
    /// Isolated-transmon anharmonicities (rad/s).
    pub anharmonicities: Vec<f64>,
}

impl TransmonDevice {
    pub fn build(model: DeviceModel) -> Result<Self> {
        model.validate()?;
        let n = model.n();
        let m = model.levels_per_transmon;
        let m_build = (m + 12).max(16);

        let mut energies_1 = Vec::new();
        let mut y_trunc = Vec::new();
        let mut bare_freqs = Vec::new();
        let mut anharms = Vec::new();
        for j in 0..n {
            let (e, v, y) = transmon_single(model.omega_h[j], model.epsilon[j], m_build)?;
            bare_freqs.push(e[1] - e[0]);
            anharms.push((e[2] - e[1]) - (e[1] - e[0]));
            let vm = v.slice(ndarray::s![.., 0..m]).to_owned();
            let ym = dagger(&vm).dot(&y).dot(&vm);
            let em: Array1<f64> = (0..m).map(|k| e[k] - e[0]).collect();
            energies_1.push(em);
            y_trunc.push(ym);
        }

        // composite static Hamiltonian in the product eigenbasis
        let full = m.pow(n as u32);
        let mut h0 = CMat::zeros((full, full));
        let embed = |op: &CMat, q: usize| -> CMat {
            let mut out = ndarray::arr2(&[[C64::new(1.0, 0.0)]]);
            for k in 0..n {
                let f = if k == q {
                    op.clone()
                } else {
                    CMat::eye(m)
                };
                out = kron(&out, &f);
            }
            out
        };
        for j in 0..n {
            let mut diag = CMat::zeros((m, m));
            for k in 0..m {
                diag[[k, k]] = C64::new(energies_1[j][k], 0.0);
            }
            h0 = h0 + embed(&diag, j);
        }
        let y_embedded: Vec<CMat> = (0..n).map(|j| embed(&y_trunc[j], j)).collect();
        for (k, &jc) in model.couplings.iter().enumerate() {
            let yy = y_embedded[k].dot(&y_embedded[k + 1]);
            h0 = h0 + yy.mapv(|z| z * C64::new(jc, 0.0));
        }

        let (lam, v) = eigh(&h0)?;
        let dim = model.global_truncation;
        let vk = v.slice(ndarray::s![.., 0..dim]).to_owned();
        let e0 = lam[0];
        let energies: Array1<f64> = (0..dim).map(|s| lam[s] - e0).collect();

        // label kept states by dominant bare occupation
        let mut labels = Vec::with_capacity(dim);
        for s in 0..dim {
            let col = vk.column(s);
            let (mut best, mut best_w) = (0usize, -1.0);
            for (idx, z) in col.iter().enumerate() {
                let w = z.norm_sqr();
                if w > best_w {
                    best_w = w;
                    best = idx;
                }
            }
            let mut occ = vec![0usize; n];
            let mut rem = best;
            for q in (0..n).rev() {
                occ[q] = rem % m;
                rem /= m;
            }
            labels.push(occ);
        }

        // computational states: all occupations in {0,1}
        let mut comp_states = Vec::with_capacity(1 << n);
        for bits in 0..(1usize << n) {
            let want: Vec<usize> = (0..n).map(|q| (bits >> (n - 1 - q)) & 1).collect();
            let found: Vec<usize> = (0..dim).filter(|&s| labels[s] == want).collect();
            match found.len() {
                1 => comp_states.push(found[0]),
                0 => {
                    return Err(Error::Linalg(format!(
                        "computational state {want:?} not found in the retained spectrum"
                    )))
                }
                _ => {
                    return Err(Error::Linalg(format!(
                        "computational state {want:?} is ambiguous after truncation"
                    )))
                }
            }
        }

        let ground = comp_states[0];
        let mut qubit_freqs = Vec::with_capacity(n);
        for q in 0..n {
            let bits = 1usize << (n - 1 - q);
            qubit_freqs.push(energies[comp_states[bits]] - energies[ground]);
        }

        let drive_ops = (0..n)
            .map(|j| dagger(&vk).dot(&y_embedded[j]).dot(&vk))
            .collect();

        Ok(TransmonDevice {
            model,
            dim,
            energies,
            labels,
            drive_ops,
            comp_states,
            qubit_freqs,
            bare_freqs,
            anharmonicities: anharms,
        })
    }

    pub fn n(&self) -> usize {
        self.model.n()
    }

    /// Full lab-frame Hamiltonian at time `t` in the truncated dressed
    /// basis: diag(λ) plus the materialized drives on ŷ_j.
    pub fn lab_hamiltonian(&self, prog: &PulseProgram, t: f64) -> CMat {
        let mut h = CMat::zeros((self.dim, self.dim));
        for s in 0..self.dim {
            h[[s, s]] = C64::new(self.energies[s], 0.0);
        }
        for ch in &prog.channels {
            let f = ch.field(t);
            if f != 0.0 {
                h.scaled_add(C64::new(f, 0.0), &self.drive_ops[ch.target]);
            }
        }
        h
    }

    /// Fastest matrix-element oscillation of the interaction-picture
    /// generator, restricted to drive-matrix entries of non-negligible
    /// weight.
    fn max_rhs_frequency(&self, prog: &PulseProgram) -> f64 {
        let mut spread = 0.0f64;
        for op in &self.drive_ops {
            let peak = op.iter().map(|z| z.norm()).fold(0.0, f64::max);
            for i in 0..self.dim {
                for j in 0..self.dim {
                    if op[[i, j]].norm() >= 1e-3 * peak {
                        spread = spread.max((self.energies[i] - self.energies[j]).abs());
                    }
                }
            }
        }
        let wc = prog
            .channels
            .iter()
            .map(|c| c.carrier.abs())
            .fold(0.0, f64::max);
        spread + wc + prog.envelope_bandwidth()
    }

    /// Propagate a block of interaction-picture columns through the driven
    /// dynamics, returning the block at each requested sample time.
    ///
    /// Classic fixed-step RK4 on ψ̇ = −i Σ_j D_j(t) (Φ(t) ∘ Y_j) ψ with the
    /// phase dressing applied as diagonal factors. `dt_scale` shrinks the
    /// step for convergence studies.
    pub fn propagate_columns(
        &self,
        prog: &PulseProgram,
        init: &CMat,
        samples: &[f64],
        dt_scale: f64,
    ) -> Result<Vec<CMat>> {
        prog.validate()?;
        for ch in &prog.channels {
            if ch.target >= self.n() {
                return Err(Error::InvalidArg(format!(
                    "channel targets transmon {} of {}",
                    ch.target,
                    self.n()
                )));
            }
        }
        if init.nrows() != self.dim {
            return Err(Error::DimMismatch(format!(
                "initial block has {} rows, device dim {}",
                init.nrows(),
                self.dim
            )));
        }
        let nu = self.max_rhs_frequency(prog).max(1.0);
        let dt = dt_scale * 0.35 / nu;
        let ncols = init.ncols();
        let mut psi = init.clone();
        let mut out = Vec::with_capacity(samples.len());
        let mut t = 0.0f64;

        let rhs = |t: f64, psi: &CMat, buf: &mut CMat| {
            // M = Σ_j D_j(t) Y_j ; ψ' = −i diag(u) M diag(ū) ψ, u = e^{iλt}
            let mut m = CMat::zeros((self.dim, self.dim));
            for ch in &prog.channels {
                let f = ch.field(t);
                if f != 0.0 {
                    m.scaled_add(C64::new(f, 0.0), &self.drive_ops[ch.target]);
                }
            }
            let mut scaled = psi.clone();
            for r in 0..self.dim {
                let ph = C64::from_polar(1.0, -self.energies[r] * t);
                for c in 0..ncols {
                    scaled[[r, c]] *= ph;
                }
            }
            let prod = m.dot(&scaled);
            for r in 0..self.dim {
                let ph = C64::from_polar(1.0, self.energies[r] * t) * C64::new(0.0, -1.0);
                for c in 0..ncols {
                    buf[[r, c]] = ph * prod[[r, c]];
                }
            }
        };

        let mut k1 = CMat::zeros((self.dim, ncols));
        let mut k2 = k1.clone();
        let mut k3 = k1.clone();
        let mut k4 = k1.clone();
        for &ts in samples {
            if ts < t - 1e-18 {
                return Err(Error::InvalidArg("sample times must ascend".into()));
            }
            let span = ts - t;
            if span > 0.0 {
                let steps = (span / dt).ceil().max(1.0) as usize;
                let h = span / steps as f64;
                for _ in 0..steps {
                    rhs(t, &psi, &mut k1);
                    let p2 = &psi + &k1.mapv(|z| z * C64::new(0.5 * h, 0.0));
                    rhs(t + 0.5 * h, &p2, &mut k2);
                    let p3 = &psi + &k2.mapv(|z| z * C64::new(0.5 * h, 0.0));
                    rhs(t + 0.5 * h, &p3, &mut k3);
                    let p4 = &psi + &k3.mapv(|z| z * C64::new(h, 0.0));
                    rhs(t + h, &p4, &mut k4);
                    for r in 0..self.dim {
                        for c in 0..ncols {
                            psi[[r, c]] += (h / 6.0)
                                * (k1[[r, c]]
                                    + C64::new(2.0, 0.0) * (k2[[r, c]] + k3[[r, c]])
                                    + k4[[r, c]]);
                        }
                    }
                    t += h;
                }
                t = ts;
            }
            out.push(psi.clone());
        }
        Ok(out)
    }

    /// Propagate the computational basis and project back onto it:
    /// returns the closest-unitary qubit-subspace propagator and the
    /// leakage 1 − σ²_min. Errors above `leakage_threshold`.
    pub fn qubit_subspace_unitary(
        &self,
        prog: &PulseProgram,
        leakage_threshold: f64,
        dt_scale: f64,
    ) -> Result<(CMat, f64)> {
        let nq = self.n();
        let dcomp = 1 << nq;
        let mut init = CMat::zeros((self.dim, dcomp));
        for (b, &s) in self.comp_states.iter().enumerate() {
            init[[s, b]] = C64::new(1.0, 0.0);
        }
        let fin = self
            .propagate_columns(prog, &init, &[prog.total_duration], dt_scale)?
            .pop()
            .expect("one sample requested");
        let mut block = CMat::zeros((dcomp, dcomp));
        for (b_out, &s_out) in self.comp_states.iter().enumerate() {
            for b_in in 0..dcomp {
                block[[b_out, b_in]] = fin[[s_out, b_in]];
            }
        }
        let (u, smin) = polar_unitary(&block)?;
        let leakage = (1.0 - smin * smin).max(0.0);
        if leakage > leakage_threshold {
            return Err(Error::Leakage {
                leakage,
                threshold: leakage_threshold,
            });
        }
        Ok((u, leakage))
    }

    /// Populations of the given interaction-picture states for an initial
    /// state, sampled on a time grid. Used for stroboscopic/micromotion
    /// traces.
    pub fn population_trace(
        &self,
        prog: &PulseProgram,
        initial: &crate::linalg::CVec,
        targets: &[crate::linalg::CVec],
        samples: &[f64],
        dt_scale: f64,
    ) -> Result<Vec<Vec<f64>>> {
        let mut init = CMat::zeros((self.dim, 1));
        for r in 0..self.dim {
            init[[r, 0]] = initial[r];
        }
        let blocks = self.propagate_columns(prog, &init, samples, dt_scale)?;
        Ok(blocks
            .iter()
            .map(|b| {
                targets
                    .iter()
                    .map(|tv| {
                        let amp: C64 = (0..self.dim).map(|r| tv[r].conj() * b[[r, 0]]).sum();
                        amp.norm_sqr()
                    })
                    .collect()
            })
            .collect())
    }

    /// Lift a computational-subspace state (2ⁿ amplitudes) into the device
    /// Hilbert space on the dressed computational states.
    pub fn lift_state(&self, psi: &crate::linalg::CVec) -> crate::linalg::CVec {
        let mut out = crate::linalg::CVec::zeros(self.dim);
        for (b, &s) in self.comp_states.iter().enumerate() {
            out[s] = psi[b];
        }
        out
    }
}

/// Apply per-parameter offsets to a qubit model (used by the drift layer).
pub fn shift_qubit_freqs(model: &QubitModel, offsets: &[f64]) -> QubitModel {
    let mut m = model.clone();
    for (f, o) in m.freqs.iter_mut().zip(offsets) {
        *f += o;
    }
    m
}

pub const TABLE_OMEGA_H_MHZ: [f64; 3] = [5544.0, 5323.0, 5486.0];
pub const TABLE_EPSILON: [f64; 3] = [0.209, 0.218, 0.212];
pub const TABLE_COUPLING_MHZ: [f64; 2] = [1.955, 2.052];

/// The reference three-transmon chain used across examples and tests.
pub fn reference_device(levels: usize, truncation: usize) -> DeviceModel {
    DeviceModel {
        omega_h: TABLE_OMEGA_H_MHZ.iter().map(|f| TAU * f * 1e6).collect(),
        epsilon: TABLE_EPSILON.to_vec(),
        couplings: TABLE_COUPLING_MHZ.iter().map(|f| TAU * f * 1e6).collect(),
        levels_per_transmon: levels,
        global_truncation: truncation,
    }
}

/// Qubit-tier companion of [`reference_device`]: the dressed first-excitation
/// frequencies with the same couplings.
pub fn reference_qubit_model() -> QubitModel {
    QubitModel {
        freqs: vec![TAU * 5236.6e6, TAU * 5014.2e6, TAU * 5177.1e6],
        couplings: vec![TAU * 1.955e6, TAU * 2.052e6],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, unitarity_error};
    use crate::pulse::{DriveChannel, Envelope, Ramp, VirtualZ};

    fn resonant_channel(q: usize, freq: f64, amp: f64, dx: f64, dy: f64, dur: f64) -> DriveChannel {
        DriveChannel {
            target: q,
            carrier: freq,
            phase: 0.0,
            amplitude: amp,
            dx,
            dy,
            shape: Envelope::Constant,
            virtual_z: VirtualZ::Off,
            ramp: Ramp::none(),
            start: 0.0,
            duration: dur,
        }
    }

    #[test]
    fn resonant_drive_rotating_frame_is_half_omega_x() {
        let model = QubitModel {
            freqs: vec![TAU * 5e9, TAU * 4.8e9],
            couplings: vec![0.0],
        };
        let amp = TAU * 10e6;
        let prog = PulseProgram::new(
            vec![resonant_channel(0, model.freqs[0], amp, 1.0, 0.0, 1e-6)],
            1e-6,
            1e-9,
        )
        .unwrap();
        let sim = QubitSim::new(&model, &prog).unwrap();
        let h = sim.hamiltonian_rotating(0.37e-6);
        let expect = embed_single(&Pauli::X.matrix(), 0, 2).mapv(|z| z * C64::new(amp / 2.0, 0.0));
        assert!(max_abs_diff(&h, &expect) < 1e-9);
    }

    #[test]
    fn no_drive_rotating_frame_has_only_coupling_terms() {
        let model = reference_qubit_model();
        let prog = PulseProgram::new(vec![], 1e-6, 1e-9).unwrap();
        let sim = QubitSim::new(&model, &prog).unwrap();
        let h = sim.hamiltonian_rotating(0.0);
        // at t = 0 the RWA coupling is J(σ⁺σ⁻ + σ⁻σ⁺) = J(XX + YY)/2 per pair
        let mut expect = CMat::zeros((8, 8));
        for (k, &j) in model.couplings.iter().enumerate() {
            let xx = embed_single(&Pauli::X.matrix(), k, 3)
                .dot(&embed_single(&Pauli::X.matrix(), k + 1, 3));
            let yy = embed_single(&Pauli::Y.matrix(), k, 3)
                .dot(&embed_single(&Pauli::Y.matrix(), k + 1, 3));
            expect.scaled_add(C64::new(j / 2.0, 0.0), &xx);
            expect.scaled_add(C64::new(j / 2.0, 0.0), &yy);
        }
        assert!(max_abs_diff(&h, &expect) < 1e-9);
        // no single-qubit terms at any time
        let h2 = sim.hamiltonian_rotating(3.3e-9);
        for q in 0..3 {
            let z = embed_single(&Pauli::Z.matrix(), q, 3);
            let overlap: C64 = (0..8)
                .map(|i| z[[i, i]] * h2[[i, i]])
                .sum();
            assert!(overlap.norm() < 1e-9);
        }
    }

    #[test]
    fn lab_and_rotating_agree_after_frame_rotation() {
        // single qubit, resonant drive, Ω/ω = 0.01: RWA error O(Ω/ω)
        let w0 = TAU * 5e9;
        let omega = TAU * 50e6;
        let model = QubitModel {
            freqs: vec![w0],
            couplings: vec![],
        };
        let t_pi = std::f64::consts::PI / (omega / 2.0) / 2.0; // π-pulse at rate Ω/2
        let prog = PulseProgram::new(
            vec![resonant_channel(0, w0, omega, 1.0, 0.0, t_pi)],
            t_pi,
            t_pi / 1024.0,
        )
        .unwrap();
        let sim = QubitSim::new(&model, &prog).unwrap();
        let u_rot = sim
            .propagate_with(0.0, t_pi, 1.0 / (TAU * 250e9), Frame::Rotating)
            .unwrap();
        let u_lab = sim
            .propagate_with(0.0, t_pi, 1.0 / (TAU * 250e9), Frame::Lab)
            .unwrap();
        // frame rotation R = exp(i ω t Z / 2)
        let z = Pauli::Z.matrix();
        let r = crate::linalg::expm_hermitian(&z, -w0 * t_pi / 2.0).unwrap();
        let u_lab_rot = r.dot(&u_lab);
        // compare as gates: overlap |tr(a† b)|/d
        let ov = crate::linalg::trace(&dagger(&u_lab_rot).dot(&u_rot)).norm() / 2.0;
        assert!(
            1.0 - ov < 0.01,
            "RWA mismatch: gate overlap {ov:.5} (expected within 0.01 of 1)"
        );
        assert!(unitarity_error(&u_rot) < 1e-8);
    }

    #[test]
    fn virtual_z_impulse_conjugates_subsequent_dynamics() {
        // impulse of angle θ before a resonant pulse ≡ conjugation of that
        // pulse segment by exp(+iθZ/2) (envelope phase shifts by e^{−iθ})
        let w0 = TAU * 5e9;
        let omega = TAU * 8e6;
        let model = QubitModel {
            freqs: vec![w0],
            couplings: vec![],
        };
        let theta = 0.83;
        let dur = 0.5e-6;
        let mk = |vz: VirtualZ| {
            let mut ch = resonant_channel(0, w0, omega, 1.0, 0.0, dur);
            ch.virtual_z = vz;
            PulseProgram::new(vec![ch], dur, 1e-9).unwrap()
        };
        let prog_imp = mk(VirtualZ::Impulse { at: 0.0, angle: theta });
        let prog_plain = mk(VirtualZ::Off);
        let sim_i = QubitSim::new(&model, &prog_imp).unwrap();
        let sim_p = QubitSim::new(&model, &prog_plain).unwrap();
        let dt = 1e-10;
        let u_i = sim_i.propagate_with(0.0, dur, dt, Frame::Rotating).unwrap();
        let u_p = sim_p.propagate_with(0.0, dur, dt, Frame::Rotating).unwrap();
        let z = Pauli::Z.matrix();
        let rot = crate::linalg::expm_hermitian(&z, -theta / 2.0).unwrap(); // exp(+iθZ/2)
        let conj = rot.dot(&u_p).dot(&dagger(&rot));
        assert!(max_abs_diff(&u_i, &conj) < 1e-9);
    }

    #[test]
    fn reference_transmon_spectrum_matches_reported_values() {
        let dev = TransmonDevice::build(reference_device(4, 64)).unwrap();
        let expect_f = [5.2366e9, 5.0142e9, 5.1771e9];
        let expect_a = [-0.340e9, -0.342e9, -0.341e9];
        for j in 0..3 {
            let f = dev.bare_freqs[j] / TAU;
            let a = dev.anharmonicities[j] / TAU;
            assert!(
                (f - expect_f[j]).abs() / expect_f[j] < 1e-3,
                "freq {j}: {f:.4e}"
            );
            assert!(
                (a - expect_a[j]).abs() / expect_a[j].abs() < 0.03,
                "anharmonicity {j}: {a:.4e}"
            );
        }
        // dressed frequencies shift only slightly from bare ones
        for j in 0..3 {
            assert!((dev.qubit_freqs[j] - dev.bare_freqs[j]).abs() / TAU < 1e6);
        }
    }

    #[test]
    fn undriven_uncoupled_device_hamiltonian_is_diagonal() {
        let mut model = reference_device(3, 20);
        model.couplings = vec![0.0, 0.0];
        let dev = TransmonDevice::build(model).unwrap();
        let prog = PulseProgram::new(vec![], 1e-7, 1e-9).unwrap();
        let h = dev.lab_hamiltonian(&prog, 0.0);
        for i in 0..dev.dim {
            for j in 0..dev.dim {
                if i != j {
                    assert!(h[[i, j]].norm() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn truncation_rejected_when_too_large() {
        let mut model = reference_device(2, 9);
        model.global_truncation = 9; // 2^3 = 8 max
        assert!(TransmonDevice::build(model).is_err());
    }

    #[test]
    fn undriven_subspace_unitary_is_identity() {
        let mut model = reference_device(3, 27);
        model.couplings = vec![0.0, 0.0];
        let dev = TransmonDevice::build(model).unwrap();
        let prog = PulseProgram::new(vec![], 1e-7, 1e-9).unwrap();
        let (u, leak) = dev.qubit_subspace_unitary(&prog, 0.05, 1.0).unwrap();
        assert!(leak < 1e-9);
        assert!(max_abs_diff(&u, &CMat::eye(8)) < 1e-7);
    }

    #[test]
    fn driven_transmon_rabi_flop() {
        // resonant drive on an isolated transmon: after a π-time the ground
        // state population transfers to the first excited state
        let model = DeviceModel {
            omega_h: vec![TAU * 5544e6],
            epsilon: vec![0.209],
            couplings: vec![],
            levels_per_transmon: 4,
            global_truncation: 4,
        };
        let dev = TransmonDevice::build(model).unwrap();
        let w01 = dev.qubit_freqs[0];
        let omega = TAU * 5e6;
        // rotating-frame Rabi rate is Ω/2 · |⟨0|ŷ|1⟩| ≈ Ω/2
        let y01 = dev.drive_ops[0][[dev.comp_states[0], dev.comp_states[1]]].norm();
        let t_pi = std::f64::consts::PI / (omega * y01 / 2.0) / 2.0;
        let steps = (t_pi / 1e-9).round() * 1e-9;
        let prog = PulseProgram::new(
            vec![resonant_channel(0, w01, omega, 1.0, 0.0, steps)],
            steps,
            1e-9,
        )
        .unwrap();
        let init = dev.lift_state(&crate::states::ket0());
        let e1 = dev.lift_state(&crate::states::ket1());
        let pops = dev
            .population_trace(&prog, &init, &[e1], &[steps], 1.0)
            .unwrap();
        assert!(
            pops[0][0] > 0.97,
            "π-pulse transferred only {:.4}",
            pops[0][0]
        );
    }

    #[test]
    fn leakage_converges_with_per_transmon_levels() {
        // strong fast drive on transmon 1 of a coupled pair; the computed
        // leakage settles as the local truncation grows
        let mut leaks = Vec::new();
        for m in [2usize, 3, 4] {
            let model = DeviceModel {
                omega_h: vec![TAU * 5544e6, TAU * 5323e6],
                epsilon: vec![0.209, 0.218],
                couplings: vec![TAU * 1.955e6],
                levels_per_transmon: m,
                global_truncation: m * m,
            };
            let dev = TransmonDevice::build(model).unwrap();
            let omega = TAU * 60e6;
            let dur = 50e-9;
            let prog = PulseProgram::new(
                vec![resonant_channel(0, dev.qubit_freqs[0], omega, 1.0, 0.0, dur)],
                dur,
                1e-9,
            )
            .unwrap();
            let (_, leak) = dev.qubit_subspace_unitary(&prog, 0.5, 1.0).unwrap();
            leaks.push(leak);
        }
        // m = 2 cannot represent leakage at all; from m = 3 on it converges
        assert!(leaks[0] < 1e-4, "two-level truncation shows no leakage");
        assert!(leaks[1] > leaks[0]);
        assert!(
            (leaks[2] - leaks[1]).abs() < leaks[1],
            "leakage not converging: {leaks:?}"
        );
    }
}
