//! Pauli-basis tomography with finite shots, Bloch vectors and density reconstruction.
//!
//! Each of the `3^n` product bases is measured once per preparation. A basis
//! estimates every Pauli string obtained by replacing some of its letters with
//! `I` (marginals), and each string pools the samples of all bases that agree
//! with it on its support. Pauli strings are indexed in base 4 with qubit `q`
//! as digit `q` (I=0, X=1, Y=2, Z=3).

mod bloch;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forging::{ForgedAnsatz, Preparation};
use crate::pauli::{i_pow, Pauli, PauliString, QubitOperator};
use crate::rng::{derive_seed, stream_rng};
use crate::simcore::{Circuit, InitialState, Statevector};

pub use bloch::{BlochEntry, BlochVector};

/// Largest register accepted by the tomography routines.
pub const MAX_QUBITS: usize = 10;

/// Sampling knobs beyond shots and seed.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TomographyOptions {
    /// Independent per-qubit readout flip probability (robustness testing only).
    pub bit_flip: f64,
}

/// Measurement basis `b` in base 3 (X=0, Y=1, Z=2), qubit `q` as digit `q`.
pub fn basis_letters(b: usize, n: usize) -> Vec<Pauli> {
    let mut b = b;
    (0..n)
        .map(|_| {
            let d = b % 3;
            b /= 3;
            [Pauli::X, Pauli::Y, Pauli::Z][d]
        })
        .collect()
}

fn flip_channel(p: &mut [f64], n: usize, f: f64) {
    if f <= 0.0 {
        return;
    }
    for q in 0..n {
        let m = 1 << q;
        for j in 0..p.len() {
            if j & m == 0 {
                let (a, b) = (p[j], p[j | m]);
                p[j] = (1.0 - f) * a + f * b;
                p[j | m] = (1.0 - f) * b + f * a;
            }
        }
    }
}

/// Multinomial draw by sequential conditional binomials.
fn multinomial(p: &[f64], shots: u64, rng: &mut impl rand::Rng) -> Result<Vec<u64>> {
    let mut left = shots;
    let mut mass = 1.0;
    let mut out = vec![0u64; p.len()];
    for (j, &pj) in p.iter().enumerate() {
        if left == 0 {
            break;
        }
        let q = if j + 1 == p.len() || mass <= 0.0 {
            1.0
        } else {
            (pj / mass).clamp(0.0, 1.0)
        };
        let k = Binomial::new(left, q)
            .map_err(|e| Error::Numerical(format!("binomial sampling failed: {e}")))?
            .sample(rng);
        out[j] = k;
        left -= k;
        mass -= pj;
    }
    Ok(out)
}

/// In-place Walsh-Hadamard transform: `out[S] = Σ_j v[j] (-1)^{|j & S|}`.
fn walsh_hadamard(v: &mut [f64]) {
    let mut h = 1;
    while h < v.len() {
        for i in (0..v.len()).step_by(2 * h) {
            for j in i..i + h {
                let (a, b) = (v[j], v[j + h]);
                v[j] = a + b;
                v[j + h] = a - b;
            }
        }
        h *= 2;
    }
}

/// Tomography of a fixed state. `shots = 0` is the exact (infinite-shot) mode.
pub fn sample_state_tomography(
    state: &Statevector<f64>,
    shots: usize,
    seed: u64,
    options: &TomographyOptions,
) -> Result<BlochVector> {
    let n = state.n_qubits();
    if n > MAX_QUBITS {
        return Err(Error::Capacity { what: "tomography register", dim: n, limit: MAX_QUBITS });
    }
    if !(0.0..=1.0).contains(&options.bit_flip) {
        return Err(Error::validation(format!("bit-flip probability {} outside [0, 1]", options.bit_flip)));
    }
    let n_bases = 3usize.pow(n as u32);
    // per basis: marginal means for every Z-subset
    let per_basis: Vec<Vec<f64>> = (0..n_bases)
        .into_par_iter()
        .map(|b| -> Result<Vec<f64>> {
            let letters = basis_letters(b, n);
            let mut s = state.clone();
            s.apply(&Circuit::basis_rotation(&letters))?;
            let mut p = s.probabilities();
            flip_channel(&mut p, n, options.bit_flip);
            let mut freq = if shots == 0 {
                p
            } else {
                let mut rng = stream_rng(seed, b as u64);
                multinomial(&p, shots as u64, &mut rng)?
                    .into_iter()
                    .map(|c| c as f64 / shots as f64)
                    .collect()
            };
            walsh_hadamard(&mut freq);
            Ok(freq)
        })
        .collect::<Result<_>>()?;

    let dim4 = 1usize << (2 * n);
    let mut sums = vec![0.0; dim4];
    let mut counts = vec![0usize; dim4];
    let pow4: Vec<usize> = (0..n).map(|q| 1 << (2 * q)).collect();
    for (b, marg) in per_basis.iter().enumerate() {
        let digits: Vec<usize> = basis_letters(b, n).iter().map(|p| p.digit()).collect();
        for (subset, &m) in marg.iter().enumerate() {
            let mut idx = 0;
            for q in 0..n {
                if subset >> q & 1 == 1 {
                    idx += digits[q] * pow4[q];
                }
            }
            sums[idx] += m;
            counts[idx] += 1;
        }
    }
    let entries = (0..dim4)
        .map(|idx| {
            if idx == 0 {
                return Some(BlochEntry { value: 1.0, error: 0.0 });
            }
            let value = sums[idx] / counts[idx] as f64;
            let error = if shots == 0 {
                0.0
            } else {
                // ±1 outcomes: the pooled sample variance is fixed by the pooled mean
                let total = (counts[idx] * shots) as f64;
                if total > 1.0 {
                    ((1.0 - value * value).max(0.0) / (total - 1.0)).sqrt()
                } else {
                    1.0
                }
            };
            Some(BlochEntry { value, error })
        })
        .collect();
    Ok(BlochVector::from_parts(n, shots, seed, entries))
}

/// Prepares `prep`, applies `circuit`, then runs [`sample_state_tomography`].
pub fn sample_tomography(
    prep: &InitialState,
    circuit: &Circuit<f64>,
    shots: usize,
    seed: u64,
    options: &TomographyOptions,
) -> Result<BlochVector> {
    let n = circuit.n_qubits();
    let mut s = Statevector::zero_state(n);
    s.apply(&prep.circuit(n)?)?;
    s.apply(circuit)?;
    sample_state_tomography(&s, shots, seed, options)
}

/// Hermitian density operator on `n` qubits (not necessarily positive).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    matrix: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn from_matrix(matrix: DMatrix<Complex64>) -> Result<Self> {
        let d = matrix.nrows();
        if d != matrix.ncols() || d == 0 || !d.is_power_of_two() {
            return Err(Error::validation(format!("density matrix of shape {}x{}", d, matrix.ncols())));
        }
        Ok(DensityMatrix { n_qubits: d.trailing_zeros() as usize, matrix })
    }

    pub fn from_pure(amplitudes: &[Complex64]) -> Result<Self> {
        let v = nalgebra::DVector::from_column_slice(amplitudes);
        Self::from_matrix(&v * v.adjoint())
    }

    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let d = 1 << n_qubits;
        DensityMatrix {
            n_qubits,
            matrix: DMatrix::identity(d, d) * Complex64::new(1.0 / d as f64, 0.0),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).camax()
    }

    /// `Tr[O ρ]` (real part; the operator is assumed Hermitian).
    pub fn expectation(&self, op: &QubitOperator<f64>) -> f64 {
        let mut total = Complex64::default();
        for (s, c) in op.terms() {
            total += c * pauli_trace(&self.matrix, s);
        }
        total.re
    }

    /// Exact Bloch vector `a_P = Tr[P ρ]`.
    pub fn bloch_vector(&self) -> BlochVector {
        let n = self.n_qubits;
        let entries = (0..1usize << (2 * n))
            .map(|idx| {
                let value = pauli_trace(&self.matrix, &PauliString::from_index(idx, n)).re;
                Some(BlochEntry { value, error: 0.0 })
            })
            .collect();
        BlochVector::from_parts(n, 0, 0, entries)
    }
}

/// `Tr[P ρ] = Σ_k i^pow ρ[k, k ^ x]` where `P|k> = i^pow |k ^ x>`.
fn pauli_trace(rho: &DMatrix<Complex64>, s: &PauliString) -> Complex64 {
    (0..rho.nrows())
        .map(|k| {
            let (pow, j) = s.apply_basis(k);
            i_pow::<f64>(pow) * rho[(k, j)]
        })
        .sum()
}

/// `ρ = 2^-n Σ_P a_P P`; fails if any entry is missing.
pub fn reconstruct_density(b: &BlochVector) -> Result<DensityMatrix> {
    let n = b.n_qubits();
    let missing = b.missing_count();
    if missing > 0 {
        return Err(Error::IncompleteBloch { missing, total: 1 << (2 * n) });
    }
    let dim = 1usize << n;
    let scale = 1.0 / dim as f64;
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for idx in 0..1usize << (2 * n) {
        let a = b.value_at(idx).expect("complete");
        if a == 0.0 {
            continue;
        }
        let s = PauliString::from_index(idx, n);
        for j in 0..dim {
            let (pow, k) = s.apply_basis(j);
            m[(k, j)] += i_pow::<f64>(pow) * (a * scale);
        }
    }
    // exact Hermitian symmetrization removes rounding asymmetry
    let m = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    DensityMatrix::from_matrix(m)
}

/// Bloch vectors for every forging preparation of one ansatz.
#[derive(Debug, Clone)]
pub struct ForgedTomography {
    pub ansatz: ForgedAnsatz,
    pub shots: usize,
    pub seed: u64,
    pub bloch: BTreeMap<Preparation, BlochVector>,
}

impl ForgedTomography {
    /// Tomographic estimate of `<O>` on a preparation.
    pub fn expectation(&self, prep: &Preparation, op: &QubitOperator<f64>) -> Result<f64> {
        let b = self
            .bloch
            .get(prep)
            .ok_or_else(|| Error::validation(format!("no Bloch vector for {}", prep.label())))?;
        b.expectation(op)
    }

    pub fn densities(&self) -> Result<BTreeMap<Preparation, DensityMatrix>> {
        self.bloch
            .iter()
            .map(|(p, b)| Ok((*p, reconstruct_density(b)?)))
            .collect()
    }

    pub fn n_circuits(&self) -> usize {
        self.bloch.len() * 3usize.pow(self.ansatz.n_qubits() as u32)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let map: serde_json::Map<String, serde_json::Value> = self
            .bloch
            .iter()
            .map(|(p, b)| (p.label(), b.to_json()))
            .collect();
        serde_json::Value::Object(map)
    }
}

/// Tomography of all `K + 4·C(K,2)` preparations; preparation `i` uses seed `derive(seed, i)`.
pub fn forged_tomography_sweep(
    ansatz: &ForgedAnsatz,
    shots: usize,
    seed: u64,
    options: &TomographyOptions,
) -> Result<ForgedTomography> {
    let preps = Preparation::all(ansatz.n_bitstrings());
    let bloch = preps
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let state = ansatz.prepared_state(p)?;
            Ok((*p, sample_state_tomography(&state, shots, derive_seed(seed, i as u64), options)?))
        })
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok(ForgedTomography { ansatz: ansatz.clone(), shots, seed, bloch })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simcore::Gate;

    fn random_state(n: usize, seed: u64) -> Statevector<f64> {
        use rand::Rng;
        let mut rng = stream_rng(seed, 99);
        let mut s = Statevector::zero_state(n);
        for _ in 0..4 {
            for q in 0..n {
                s.apply_gate(&Gate::H(q));
                if rng.random_bool(0.5) {
                    s.apply_gate(&Gate::S(q));
                }
            }
            for q in 0..n.saturating_sub(1) {
                s.apply_gate(&Gate::Hop { qubits: [q, q + 1], theta: rng.random_range(-3.0..3.0) });
            }
        }
        s
    }

    #[test]
    fn zero_state_exact_and_sampled() {
        let s = Statevector::<f64>::zero_state(1);
        let exact = sample_state_tomography(&s, 0, 0, &Default::default()).unwrap();
        assert_eq!(exact.get("Z").unwrap().value, 1.0);
        assert!(exact.get("X").unwrap().value.abs() < 1e-15);
        assert!(exact.get("Y").unwrap().value.abs() < 1e-15);
        let sampled = sample_state_tomography(&s, 10_000, 3, &Default::default()).unwrap();
        assert_eq!(sampled.get("Z").unwrap(), BlochEntry { value: 1.0, error: 0.0 });
        assert!(sampled.get("X").unwrap().error > 0.0);
        assert_eq!(sampled.get("I").unwrap(), BlochEntry { value: 1.0, error: 0.0 });
    }

    #[test]
    fn exact_reconstruction_is_projector() {
        for n in 1..=4 {
            let s = random_state(n, n as u64);
            let b = sample_state_tomography(&s, 0, 0, &Default::default()).unwrap();
            let rho = reconstruct_density(&b).unwrap();
            let pure = DensityMatrix::from_pure(s.amplitudes()).unwrap();
            assert!((rho.matrix() - pure.matrix()).camax() < 1e-10, "n={n}");
            assert!((rho.trace().re - 1.0).abs() < 1e-12);
            // and the direct Bloch route agrees
            let direct = pure.bloch_vector();
            for idx in 0..1 << (2 * n) {
                assert!((direct.value_at(idx).unwrap() - b.value_at(idx).unwrap()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn simple_reconstructions() {
        let b = BlochVector::from_labels(1, [("I", 1.0, 0.0), ("X", 0.0, 0.0), ("Y", 0.0, 0.0), ("Z", 1.0, 0.0)]).unwrap();
        let rho = reconstruct_density(&b).unwrap();
        assert!((rho.matrix()[(0, 0)].re - 1.0).abs() < 1e-15 && rho.matrix()[(1, 1)].norm() < 1e-15);
        let mixed = BlochVector::maximally_mixed(3);
        let rho = reconstruct_density(&mixed).unwrap();
        assert!((rho.matrix() - DensityMatrix::maximally_mixed(3).matrix()).camax() < 1e-15);
        let partial = BlochVector::from_labels(1, [("I", 1.0, 0.0), ("Z", 1.0, 0.0)]).unwrap();
        assert!(matches!(reconstruct_density(&partial), Err(Error::IncompleteBloch { missing: 2, .. })));
    }

    #[test]
    fn sampled_means_are_unbiased() {
        let s = random_state(2, 7);
        let exact = sample_state_tomography(&s, 0, 0, &Default::default()).unwrap();
        let runs: Vec<BlochVector> = (0..50)
            .map(|seed| sample_state_tomography(&s, 4096, seed, &Default::default()).unwrap())
            .collect();
        let mut good = 0;
        for idx in 1..16 {
            let mean = runs.iter().map(|b| b.value_at(idx).unwrap()).sum::<f64>() / 50.0;
            let eps = runs.iter().map(|b| b.get_index(idx).unwrap().error).sum::<f64>() / 50.0;
            if (mean - exact.value_at(idx).unwrap()).abs() <= 4.0 * eps {
                good += 1;
            }
        }
        assert!(good as f64 >= 0.95 * 15.0, "{good}/15");
    }

    #[test]
    fn bit_flip_hook_damps_z() {
        let s = Statevector::<f64>::zero_state(1);
        let b = sample_state_tomography(&s, 0, 0, &TomographyOptions { bit_flip: 0.1 }).unwrap();
        assert!((b.get("Z").unwrap().value - 0.8).abs() < 1e-12);
    }

    #[test]
    fn sweep_counts_and_determinism() {
        let a = ForgedAnsatz::new(2, vec![0b01, 0b10], vec![0.9, 0.3], crate::simcore::HopLayout::default_for(2), vec![0.4]).unwrap();
        let t = forged_tomography_sweep(&a, 100, 5, &Default::default()).unwrap();
        assert_eq!(t.bloch.len(), 6);
        assert_eq!(t.n_circuits(), 54);
        let again = forged_tomography_sweep(&a, 100, 5, &Default::default()).unwrap();
        assert_eq!(t.bloch, again.bloch);
        let other = forged_tomography_sweep(&a, 100, 6, &Default::default()).unwrap();
        assert_ne!(t.bloch, other.bloch);
        let exact = forged_tomography_sweep(&a, 0, 0, &Default::default()).unwrap();
        let rho = reconstruct_density(&exact.bloch[&Preparation::Basis(0)]).unwrap();
        let psi = a.prepared_state(&Preparation::Basis(0)).unwrap();
        assert!((rho.matrix() - DensityMatrix::from_pure(psi.amplitudes()).unwrap().matrix()).camax() < 1e-12);
    }

    #[test]
    fn mixture_linearity() {
        let (s1, s2) = (random_state(2, 1), random_state(2, 2));
        let b1 = sample_state_tomography(&s1, 0, 0, &Default::default()).unwrap();
        let b2 = sample_state_tomography(&s2, 0, 0, &Default::default()).unwrap();
        let r1 = DensityMatrix::from_pure(s1.amplitudes()).unwrap();
        let r2 = DensityMatrix::from_pure(s2.amplitudes()).unwrap();
        let mix = DensityMatrix::from_matrix(r1.matrix() * Complex64::new(0.3, 0.0) + r2.matrix() * Complex64::new(0.7, 0.0)).unwrap();
        let bm = mix.bloch_vector();
        for idx in 0..16 {
            let want = 0.3 * b1.value_at(idx).unwrap() + 0.7 * b2.value_at(idx).unwrap();
            assert!((bm.value_at(idx).unwrap() - want).abs() < 1e-12);
        }
    }
}
