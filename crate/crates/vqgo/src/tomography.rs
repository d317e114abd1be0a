//! Gate characterization: process matrices, full and reduced process
//! tomography, and the fidelities built from them.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dagger, lu_solve, trace, unitarity_error, CMat, CVec};
use crate::noise::{sample_shots, ReadoutModel};
use crate::pauli::{pauli_basis, Pauli, PauliString};
use crate::random::task_rng;
use crate::states::{density_from_pure, ket0, plus, product_state};

/// χ over the n-qubit Pauli basis: the universal gate descriptor.
#[derive(Clone, Debug)]
pub struct ProcessMatrix {
    pub n: usize,
    /// 4ⁿ×4ⁿ complex entries indexed by `pauli_basis(n)`.
    pub chi: CMat,
}

impl ProcessMatrix {
    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn basis_size(&self) -> usize {
        4usize.pow(self.n as u32)
    }

    /// Largest violation of χ = χ†.
    pub fn hermiticity_error(&self) -> f64 {
        crate::linalg::hermiticity_error(&self.chi)
    }

    /// Max-norm of Σ_ij χ_ij σ_j σ_i − 𝟙 (trace preservation).
    pub fn trace_preservation_error(&self) -> Result<f64> {
        let basis = pauli_basis(self.n)?;
        let d = self.dim();
        let mut acc = CMat::zeros((d, d));
        for (i, si) in basis.iter().enumerate() {
            for (j, sj) in basis.iter().enumerate() {
                let w = self.chi[[i, j]];
                if w.norm() < 1e-15 {
                    continue;
                }
                let prod = sj.matrix().dot(&si.matrix());
                acc.scaled_add(w, &prod);
            }
        }
        for k in 0..d {
            acc[[k, k]] -= C64::new(1.0, 0.0);
        }
        Ok(acc.iter().map(|z| z.norm()).fold(0.0, f64::max))
    }

    pub fn max_entry_distance(&self, other: &ProcessMatrix) -> f64 {
        crate::linalg::max_abs_diff(&self.chi, &other.chi)
    }
}

/// χ of a unitary gate: rank one, `χ_ij = u_i u_j*` with
/// `u_i = tr[σ_i† U]/d`.
pub fn chi_from_unitary(u: &CMat) -> Result<ProcessMatrix> {
    let uerr = unitarity_error(u);
    if uerr > 1e-8 {
        return Err(Error::InvalidArg(format!(
            "chi_from_unitary on non-unitary input (error {uerr:.2e})"
        )));
    }
    let d = u.nrows();
    let n = (d as f64).log2().round() as usize;
    if 1 << n != d {
        return Err(Error::DimMismatch("unitary dimension is not a power of two".into()));
    }
    let basis = pauli_basis(n)?;
    let coeffs: Vec<C64> = basis
        .iter()
        .map(|p| {
            let mut acc = C64::new(0.0, 0.0);
            for r in 0..d {
                let (c, v) = p.row_entry(r);
                acc += v * u[[c, r]];
            }
            acc / d as f64
        })
        .collect();
    let m = basis.len();
    let mut chi = CMat::zeros((m, m));
    for i in 0..m {
        for j in 0..m {
            chi[[i, j]] = coeffs[i] * coeffs[j].conj();
        }
    }
    Ok(ProcessMatrix { n, chi })
}

/// `Re tr[a b†]`: the χ overlap, equal to the process fidelity when `b` is
/// the rank-one χ of a unitary target.
pub fn process_fidelity(a: &ProcessMatrix, b: &ProcessMatrix) -> Result<f64> {
    if a.n != b.n {
        return Err(Error::DimMismatch(format!(
            "process matrices on {} vs {} qubits",
            a.n, b.n
        )));
    }
    let prod = a.chi.dot(&dagger(&b.chi));
    Ok(trace(&prod).re)
}

/// Anything that can be interrogated like an experimental gate: prepare a
/// pure input, apply the channel, estimate one Pauli expectation.
///
/// `setting` keys the oracle's internal randomness; calls with the same
/// setting replay identically, so concurrent evaluation order can never
/// change results.
pub trait ChannelOracle: Sync {
    fn n_qubits(&self) -> usize;
    fn expect(&self, input: &CVec, obs: &PauliString, setting: u64) -> Result<f64>;
}

/// A unitary gate behind projective sampling with readout error. `shots =
/// None` yields exact (infinite-shot) expectations.
pub struct UnitaryChannel {
    pub u: CMat,
    pub readout: ReadoutModel,
    pub shots: Option<u64>,
    pub seed: u64,
}

impl UnitaryChannel {
    pub fn exact(u: CMat) -> Self {
        let n = (u.nrows() as f64).log2().round() as usize;
        UnitaryChannel {
            u,
            readout: ReadoutModel::ideal(n),
            shots: None,
            seed: 0,
        }
    }
}

impl ChannelOracle for UnitaryChannel {
    fn n_qubits(&self) -> usize {
        (self.u.nrows() as f64).log2().round() as usize
    }

    fn expect(&self, input: &CVec, obs: &PauliString, setting: u64) -> Result<f64> {
        let out = self.u.dot(input);
        let rho = density_from_pure(&out);
        let mut rng = task_rng(self.seed, setting);
        sample_shots(&rho, obs, self.shots, &self.readout, &mut rng)
    }
}

/// The four tetrahedral SIC states: pure, pairwise overlap 1/3.
pub fn sic_states() -> Vec<CVec> {
    let s2 = 2.0f64.sqrt();
    let s3 = 3.0f64.sqrt();
    let phase = |k: f64| C64::from_polar(1.0, k * std::f64::consts::TAU / 3.0);
    let mut out = vec![ket0()];
    for k in 0..3 {
        let v = ndarray::arr1(&[
            C64::new(1.0 / s3, 0.0),
            phase(k as f64) * (s2 / s3),
        ]);
        out.push(v);
    }
    out
}

/// Tensor product of SIC states selected by the base-4 digits of `index`
/// (most significant digit = qubit 1).
pub fn sic_product(n: usize, index: usize) -> CVec {
    let sic = sic_states();
    let mut factors = Vec::with_capacity(n);
    for q in 0..n {
        let digit = (index >> (2 * (n - 1 - q))) & 3;
        factors.push(sic[digit].clone());
    }
    product_state(&factors)
}

/// Full linear-inversion process tomography from an informationally
/// complete SIC⊗…⊗SIC preparation set and all nontrivial Pauli
/// observables: 4ⁿ preparations × (4ⁿ − 1) expectation values.
pub fn process_tomography(oracle: &dyn ChannelOracle, n: usize) -> Result<ProcessMatrix> {
    if n == 0 {
        return Err(Error::InvalidArg("tomography needs n ≥ 1".into()));
    }
    let d = 1usize << n;
    let d2 = d * d;
    let basis = pauli_basis(n)?;
    let n_preps = 4usize.pow(n as u32);

    // measured output density matrices per preparation
    let outputs: Vec<Result<CMat>> = (0..n_preps)
        .into_par_iter()
        .map(|prep| {
            let input = sic_product(n, prep);
            let mut rho = CMat::eye(d);
            for (oi, obs) in basis.iter().enumerate().skip(1) {
                let setting = (prep * basis.len() + oi) as u64;
                let e = oracle.expect(&input, obs, setting)?;
                rho.scaled_add(C64::new(e, 0.0), &obs.matrix());
            }
            Ok(rho.mapv(|z| z / d as f64))
        })
        .collect();

    // superoperator from S · vec(ρ_in) = vec(ρ_out), row-major vec
    let mut r_in = CMat::zeros((d2, n_preps));
    let mut r_out = CMat::zeros((d2, n_preps));
    for (prep, out) in outputs.into_iter().enumerate() {
        let rho_out = out?;
        let rho_in = density_from_pure(&sic_product(n, prep));
        for a in 0..d {
            for b in 0..d {
                r_in[[a * d + b, prep]] = rho_in[[a, b]];
                r_out[[a * d + b, prep]] = rho_out[[a, b]];
            }
        }
    }
    // S = R_out · R_in⁻¹  ⇔  R_inᵀ Sᵀ = R_outᵀ
    let st = lu_solve(&r_in.t().to_owned(), &r_out.t().to_owned())
        .map_err(|_| Error::Config("singular tomography design matrix".into()))?;
    let s = st.t().to_owned();

    // χ_ij = tr[(σ_i ⊗ σ_jᵀ)† S] / d²  (row-major vec: S = Σ χ_ij σ_i ⊗ σ_jᵀ)
    let m = basis.len();
    let mut chi = CMat::zeros((m, m));
    for (i, si) in basis.iter().enumerate() {
        for (j, sj) in basis.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for a in 0..d {
                let (ca, va) = si.row_entry(a);
                for b in 0..d {
                    // σ_jᵀ row b has its entry at column col_j(b) with value
                    // σ_j[col_j(b), b]
                    let (db, _) = sj.row_entry(b);
                    let (_, wj) = sj.row_entry(db);
                    let entry = va * wj;
                    acc += entry.conj() * s[[a * d + b, ca * d + db]];
                }
            }
            chi[[i, j]] = acc / d2 as f64;
        }
    }
    Ok(ProcessMatrix { n, chi })
}

/// Which target-qubit axis the reduced protocol assumes: the abelian span
/// {𝟙𝟙, Z𝟙, 𝟙A, ZA} with A = X or Y on the target.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReducedAxis {
    X,
    Y,
}

impl ReducedAxis {
    fn pauli(self) -> Pauli {
        match self {
            ReducedAxis::X => Pauli::X,
            ReducedAxis::Y => Pauli::Y,
        }
    }
}

/// Reduced process matrix: 4×4 entries indexed by {𝟙𝟙, Z𝟙, 𝟙A, ZA}.
#[derive(Clone, Debug)]
pub struct ReducedChi {
    pub axis: ReducedAxis,
    pub chi: CMat,
}

/// The images σ_a |+0⟩ of the span operators: mutually orthonormal.
fn reduced_basis_states(axis: ReducedAxis) -> Vec<CVec> {
    let p0 = product_state(&[plus(), ket0()]);
    let ops: Vec<PauliString> = match axis {
        ReducedAxis::X => ["II", "ZI", "IX", "ZX"],
        ReducedAxis::Y => ["II", "ZI", "IY", "ZY"],
    }
    .iter()
    .map(|s| s.parse().expect("static"))
    .collect();
    ops.iter().map(|p| p.apply(&p0)).collect()
}

/// Reduced process tomography: one preparation |+0⟩, full state tomography
/// of the output (15 Pauli expectations), and the reduced χ read off as the
/// output density matrix in the {σ_a|+0⟩} basis.
pub fn reduced_process_tomography(
    oracle: &dyn ChannelOracle,
    axis: ReducedAxis,
) -> Result<ReducedChi> {
    if oracle.n_qubits() != 2 {
        return Err(Error::InvalidArg("reduced tomography is a two-qubit protocol".into()));
    }
    let input = product_state(&[plus(), ket0()]);
    let basis = pauli_basis(2)?;
    let exps: Vec<Result<f64>> = basis
        .par_iter()
        .enumerate()
        .skip(1)
        .map(|(oi, obs)| oracle.expect(&input, obs, oi as u64))
        .collect();
    let mut rho = CMat::eye(4);
    for (k, e) in exps.into_iter().enumerate() {
        rho.scaled_add(C64::new(e?, 0.0), &basis[k + 1].matrix());
    }
    let rho = rho.mapv(|z| z / 4.0);
    let vs = reduced_basis_states(axis);
    let mut chi = CMat::zeros((4, 4));
    for a in 0..4 {
        for b in 0..4 {
            let mut acc = C64::new(0.0, 0.0);
            for r in 0..4 {
                for c in 0..4 {
                    acc += vs[a][r].conj() * rho[[r, c]] * vs[b][c];
                }
            }
            chi[[a, b]] = acc;
        }
    }
    Ok(ReducedChi { axis, chi })
}

/// Ideal reduced χ of a unitary whose generator lies in the span:
/// rank one from the amplitudes ⟨σ_a +0|U|+0⟩.
pub fn reduced_chi_of_unitary(u: &CMat, axis: ReducedAxis) -> Result<ReducedChi> {
    if u.nrows() != 4 {
        return Err(Error::DimMismatch("reduced χ targets are two-qubit".into()));
    }
    let p0 = product_state(&[plus(), ket0()]);
    let out = u.dot(&p0);
    let vs = reduced_basis_states(axis);
    let w: Vec<C64> = vs
        .iter()
        .map(|v| (0..4).map(|r| v[r].conj() * out[r]).sum())
        .collect();
    let mut chi = CMat::zeros((4, 4));
    for a in 0..4 {
        for b in 0..4 {
            chi[[a, b]] = w[a] * w[b].conj();
        }
    }
    Ok(ReducedChi { axis, chi })
}

/// `Re tr[r · target†]`: the reduced-χ overlap.
pub fn reduced_overlap(r: &ReducedChi, target: &ReducedChi) -> f64 {
    let prod = r.chi.dot(&dagger(&target.chi));
    trace(&prod).re
}

/// Two-qubit unitary generated inside the reduced span:
/// `exp(−i(j_za ZA + j_z1 Z𝟙 + j_1a 𝟙A) t)` with A set by the axis.
pub fn span_unitary(j_za: f64, j_z1: f64, j_1a: f64, t: f64, axis: ReducedAxis) -> Result<CMat> {
    let a = axis.pauli();
    let za = PauliString(vec![Pauli::Z, a]).matrix();
    let z1 = PauliString(vec![Pauli::Z, Pauli::I]).matrix();
    let ia = PauliString(vec![Pauli::I, a]).matrix();
    let mut h = za.mapv(|z| z * C64::new(j_za, 0.0));
    h.scaled_add(C64::new(j_z1, 0.0), &z1);
    h.scaled_add(C64::new(j_1a, 0.0), &ia);
    crate::linalg::expm_hermitian(&h, t)
}

/// Expectation-count bookkeeping: full tomography uses 4ⁿ preparations and
/// 4ⁿ−1 observables each; the reduced protocol one preparation with 15.
pub fn tomography_cost(n: usize) -> (usize, usize) {
    let full = 4usize.pow(n as u32) * (4usize.pow(n as u32) - 1);
    let reduced = 4usize.pow(n as u32) - 1;
    (full, reduced)
}

/// Serialize χ entries as label-indexed text lines (`σ_i σ_j re im`).
pub fn chi_to_text(p: &ProcessMatrix) -> Result<String> {
    use std::fmt::Write;
    let basis = pauli_basis(p.n)?;
    let mut out = String::new();
    writeln!(out, "# process matrix, n = {}", p.n).ok();
    writeln!(out, "# row_label col_label real imag").ok();
    for (i, si) in basis.iter().enumerate() {
        for (j, sj) in basis.iter().enumerate() {
            let z = p.chi[[i, j]];
            writeln!(out, "{si} {sj} {:+.12e} {:+.12e}", z.re, z.im).ok();
        }
    }
    Ok(out)
}

/// Parse the text format produced by [`chi_to_text`].
pub fn chi_from_text(text: &str) -> Result<ProcessMatrix> {
    let mut entries = Vec::new();
    let mut n = 0usize;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 4 {
            return Err(Error::Serde(format!("bad chi line: {line}")));
        }
        let row: PauliString = parts[0].parse()?;
        let col: PauliString = parts[1].parse()?;
        let re: f64 = parts[2].parse().map_err(|_| Error::Serde("bad real".into()))?;
        let im: f64 = parts[3].parse().map_err(|_| Error::Serde("bad imag".into()))?;
        n = row.n_qubits();
        entries.push((row.index(), col.index(), C64::new(re, im)));
    }
    if n == 0 {
        return Err(Error::Serde("empty chi file".into()));
    }
    let m = 4usize.pow(n as u32);
    let mut chi: Array2<C64> = Array2::zeros((m, m));
    for (i, j, z) in entries {
        chi[[i, j]] = z;
    }
    Ok(ProcessMatrix { n, chi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::expm_hermitian;
    use crate::random::{master_rng, random_unitary};

    fn zx_unitary(theta: f64) -> CMat {
        // exp(iθ ZX) = expm_hermitian(ZX, −θ)
        let zx = PauliString(vec![Pauli::Z, Pauli::X]).matrix();
        expm_hermitian(&zx, -theta).unwrap()
    }

    #[test]
    fn sic_states_are_pure_with_third_overlaps() {
        let sic = sic_states();
        for (i, a) in sic.iter().enumerate() {
            let na: f64 = a.iter().map(|z| z.norm_sqr()).sum();
            assert!((na - 1.0).abs() < 1e-12);
            for (j, b) in sic.iter().enumerate() {
                if i != j {
                    let ov: C64 = a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum();
                    assert!((ov.norm_sqr() - 1.0 / 3.0).abs() < 1e-12, "{i},{j}");
                }
            }
        }
    }

    #[test]
    fn sic_states_span_operator_space() {
        // design matrix of the four projectors has rank 4
        let sic = sic_states();
        let mut design = CMat::zeros((4, 4));
        for (k, s) in sic.iter().enumerate() {
            let rho = density_from_pure(s);
            for (l, p) in pauli_basis(1).unwrap().iter().enumerate() {
                design[[k, l]] = C64::new(p.expectation(&rho), 0.0);
            }
        }
        // invertibility <=> LU succeeds
        assert!(lu_solve(&design, &CMat::eye(4)).is_ok());
    }

    #[test]
    fn chi_of_identity_two_qubits() {
        let chi = chi_from_unitary(&CMat::eye(4)).unwrap();
        assert!((chi.chi[[0, 0]].re - 1.0).abs() < 1e-12);
        let total: f64 = chi.chi.iter().map(|z| z.norm()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chi_of_single_qubit_x() {
        let chi = chi_from_unitary(&Pauli::X.matrix()).unwrap();
        assert!((chi.chi[[1, 1]].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chi_of_maximally_entangling_zx() {
        // exp(iπ/4 ZX): four equal-magnitude elements with the expected signs
        let chi = chi_from_unitary(&zx_unitary(std::f64::consts::FRAC_PI_4)).unwrap();
        let ii = 0usize;
        let zx = PauliString(vec![Pauli::Z, Pauli::X]).index();
        assert!((chi.chi[[ii, ii]].re - 0.5).abs() < 1e-12);
        assert!((chi.chi[[zx, zx]].re - 0.5).abs() < 1e-12);
        assert!((chi.chi[[ii, zx]] - C64::new(0.0, -0.5)).norm() < 1e-12);
        assert!((chi.chi[[zx, ii]] + chi.chi[[ii, zx]]).norm() < 1e-12);
        assert!(chi.hermiticity_error() < 1e-12);
    }

    #[test]
    fn chi_rejects_non_unitary() {
        let mut m = CMat::eye(4);
        m[[0, 0]] = C64::new(0.5, 0.0);
        assert!(chi_from_unitary(&m).is_err());
    }

    #[test]
    fn tomography_reconstructs_identity_channel() {
        let oracle = UnitaryChannel::exact(CMat::eye(4));
        let chi = process_tomography(&oracle, 2).unwrap();
        let ideal = chi_from_unitary(&CMat::eye(4)).unwrap();
        assert!(chi.max_entry_distance(&ideal) < 1e-9);
    }

    #[test]
    fn tomography_roundtrip_zx_quarter() {
        let u = zx_unitary(std::f64::consts::FRAC_PI_4);
        let oracle = UnitaryChannel::exact(u.clone());
        let chi = process_tomography(&oracle, 2).unwrap();
        let ideal = chi_from_unitary(&u).unwrap();
        assert!(chi.max_entry_distance(&ideal) < 1e-8);
        assert!(chi.trace_preservation_error().unwrap() < 1e-6);
    }

    #[test]
    fn tomography_roundtrip_random_unitaries() {
        let mut rng = master_rng(31);
        for _ in 0..3 {
            let u = random_unitary(4, &mut rng);
            let oracle = UnitaryChannel::exact(u.clone());
            let chi = process_tomography(&oracle, 2).unwrap();
            let ideal = chi_from_unitary(&u).unwrap();
            assert!(chi.max_entry_distance(&ideal) < 1e-8);
        }
    }

    #[test]
    fn expectation_value_counts() {
        let (full, red) = tomography_cost(2);
        assert_eq!(full, 240);
        assert_eq!(red, 15);
        assert_eq!(full / red, 16); // twenty-ish to one
    }

    #[test]
    fn process_fidelity_examples() {
        let a = chi_from_unitary(&CMat::eye(2)).unwrap();
        assert!((process_fidelity(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        let b = chi_from_unitary(&Pauli::X.matrix()).unwrap();
        assert!(process_fidelity(&a, &b).unwrap().abs() < 1e-12);
        // rotation-angle mismatch: F = cos²(θ − π/4) at θ = π/8
        let t1 = chi_from_unitary(&zx_unitary(std::f64::consts::FRAC_PI_4)).unwrap();
        let t2 = chi_from_unitary(&zx_unitary(std::f64::consts::PI / 8.0)).unwrap();
        let f = process_fidelity(&t2, &t1).unwrap();
        let expect = (std::f64::consts::PI / 8.0 - std::f64::consts::FRAC_PI_4)
            .cos()
            .powi(2);
        assert!((f - expect).abs() < 1e-10, "f = {f}, expect {expect}");
        assert!((expect - 0.8535533905932737).abs() < 1e-12);
    }

    #[test]
    fn reduced_matches_full_for_span_channels() {
        // pure ZX rotation: reduced overlap = 1 against its own target
        let u = span_unitary(std::f64::consts::FRAC_PI_4, 0.0, 0.0, 1.0, ReducedAxis::X).unwrap();
        let oracle = UnitaryChannel::exact(u.clone());
        let red = reduced_process_tomography(&oracle, ReducedAxis::X).unwrap();
        let tgt = reduced_chi_of_unitary(&u, ReducedAxis::X).unwrap();
        assert!((reduced_overlap(&red, &tgt) - 1.0).abs() < 1e-10);

        // over-rotated Z𝟙: reduced overlap equals the full-χ fidelity
        let target = span_unitary(std::f64::consts::FRAC_PI_4, 0.0, 0.0, 1.0, ReducedAxis::X).unwrap();
        let noisy = span_unitary(std::f64::consts::FRAC_PI_4, 0.3, 0.0, 1.0, ReducedAxis::X).unwrap();
        let red = reduced_process_tomography(
            &UnitaryChannel::exact(noisy.clone()),
            ReducedAxis::X,
        )
        .unwrap();
        let tgt = reduced_chi_of_unitary(&target, ReducedAxis::X).unwrap();
        let ov = reduced_overlap(&red, &tgt);
        let f = process_fidelity(
            &process_tomography(&UnitaryChannel::exact(noisy), 2).unwrap(),
            &chi_from_unitary(&target).unwrap(),
        )
        .unwrap();
        assert!((ov - f).abs() < 1e-6, "reduced {ov} vs full {f}");
    }

    #[test]
    fn out_of_span_component_biases_reduced_overlap() {
        // add a ZY rotation of angle 0.2: reduced ≠ full, discrepancy > 0.01
        let target = span_unitary(std::f64::consts::FRAC_PI_4, 0.0, 0.0, 1.0, ReducedAxis::X).unwrap();
        let zy = PauliString(vec![Pauli::Z, Pauli::Y]).matrix();
        let extra = expm_hermitian(&zy, 0.2).unwrap();
        let noisy = extra.dot(&target);
        let red = reduced_process_tomography(
            &UnitaryChannel::exact(noisy.clone()),
            ReducedAxis::X,
        )
        .unwrap();
        let tgt = reduced_chi_of_unitary(&target, ReducedAxis::X).unwrap();
        let ov = reduced_overlap(&red, &tgt);
        let f = process_fidelity(
            &process_tomography(&UnitaryChannel::exact(noisy), 2).unwrap(),
            &chi_from_unitary(&target).unwrap(),
        )
        .unwrap();
        assert!((ov - f).abs() > 0.01, "reduced {ov} vs full {f}");
    }

    #[test]
    fn reduced_y_axis_span_works_like_x() {
        let u = span_unitary(0.6, 0.2, -0.1, 1.0, ReducedAxis::Y).unwrap();
        let red =
            reduced_process_tomography(&UnitaryChannel::exact(u.clone()), ReducedAxis::Y).unwrap();
        let tgt = reduced_chi_of_unitary(&u, ReducedAxis::Y).unwrap();
        assert!((reduced_overlap(&red, &tgt) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn chi_text_roundtrip() {
        let u = zx_unitary(0.42);
        let chi = chi_from_unitary(&u).unwrap();
        let text = chi_to_text(&chi).unwrap();
        let parsed = chi_from_text(&text).unwrap();
        assert!(chi.max_entry_distance(&parsed) < 1e-11);
    }
}
