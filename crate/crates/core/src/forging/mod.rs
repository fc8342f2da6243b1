//! Entanglement-forged ansatz `|Ψ> = Σ_k λ_k U|x_k> ⊗ U|x_k>` and its energy.
//!
//! Off-diagonal sector elements `<x_k|U† O U|x_l>` are recovered from
//! expectation values on `|φ^p> = (|x_k> + i^p |x_l>)/√2`:
//! `O_kl = Σ_p (-i)^p / 2 · <φ^p|U† O U|φ^p>`.

mod optimize;
mod select;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::det::{string_label, CIVector, DeterminantSpace};
use crate::error::{Error, Result};
use crate::hamio::SpinFactorizedHamiltonian;
use crate::pauli::{i_pow, QubitOperator};
use crate::simcore::{Circuit, HopLayout, InitialState, Statevector};

pub use optimize::{nelder_mead, vqe_minimize, NelderMeadResult, OptimizerConfig, TraceRow, VqeResult};
pub use select::{schmidt_weights, select_bitstrings};

/// Tolerance on `Σ λ² = 1`.
pub const NORM_TOL: f64 = 1e-12;

/// One of the circuits whose expectation values feed the forged energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Preparation {
    Basis(usize),
    Superposition { k: usize, l: usize, p: u8 },
}

impl Preparation {
    /// `x_k` states first, then `φ^p_kl` for `k < l`, `p = 0..4`.
    pub fn all(n_bitstrings: usize) -> Vec<Preparation> {
        let mut out: Vec<Preparation> = (0..n_bitstrings).map(Preparation::Basis).collect();
        for k in 0..n_bitstrings {
            for l in k + 1..n_bitstrings {
                out.extend((0..4).map(|p| Preparation::Superposition { k, l, p }));
            }
        }
        out
    }

    /// `"x0"` or `"phi2_01"`.
    pub fn label(&self) -> String {
        match *self {
            Preparation::Basis(k) => format!("x{k}"),
            Preparation::Superposition { k, l, p } => format!("phi{p}_{k}{l}"),
        }
    }

    pub fn parse(label: &str) -> Result<Self> {
        let bad = || Error::validation(format!("unknown preparation label `{label}`"));
        if let Some(rest) = label.strip_prefix('x') {
            return rest.parse().map(Preparation::Basis).map_err(|_| bad());
        }
        let rest = label.strip_prefix("phi").ok_or_else(bad)?;
        let (p, kl) = rest.split_once('_').ok_or_else(bad)?;
        let p: u8 = p.parse().map_err(|_| bad())?;
        let mut digits = kl.chars().map(|c| c.to_digit(10).map(|d| d as usize));
        match (digits.next().flatten(), digits.next().flatten(), digits.next()) {
            (Some(k), Some(l), None) if k < l && p < 4 => Ok(Preparation::Superposition { k, l, p }),
            _ => Err(bad()),
        }
    }
}

/// Spherical parameterization: `K - 1` angles give a unit `K`-vector.
pub fn schmidt_from_angles(angles: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(angles.len() + 1);
    let mut tail = 1.0;
    for &a in angles {
        out.push(tail * a.cos());
        tail *= a.sin();
    }
    out.push(tail);
    out
}

/// Inverse of [`schmidt_from_angles`] for a unit vector.
pub fn angles_from_schmidt(lambda: &[f64]) -> Vec<f64> {
    let k = lambda.len();
    (0..k.saturating_sub(1))
        .map(|i| {
            if i + 2 == k {
                lambda[k - 1].atan2(lambda[k - 2])
            } else {
                let tail = lambda[i + 1..].iter().map(|v| v * v).sum::<f64>().sqrt();
                tail.atan2(lambda[i])
            }
        })
        .collect()
}

/// Bitstrings, Schmidt coefficients and the hop circuit shared by both spin sectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForgedAnsatz {
    n_qubits: usize,
    bitstrings: Vec<u64>,
    schmidt: Vec<f64>,
    layout: HopLayout,
    theta: Vec<f64>,
}

impl ForgedAnsatz {
    /// Validates the bitstrings and normalizes `schmidt`.
    pub fn new(n_qubits: usize, bitstrings: Vec<u64>, schmidt: Vec<f64>, layout: HopLayout, theta: Vec<f64>) -> Result<Self> {
        if bitstrings.is_empty() {
            return Err(Error::validation("ansatz needs at least one bitstring"));
        }
        if schmidt.len() != bitstrings.len() {
            return Err(Error::validation(format!(
                "{} Schmidt coefficients for {} bitstrings",
                schmidt.len(),
                bitstrings.len()
            )));
        }
        let mask = (1u64 << n_qubits) - 1;
        let weight = bitstrings[0].count_ones();
        for (i, &x) in bitstrings.iter().enumerate() {
            if x & !mask != 0 {
                return Err(Error::validation(format!("bitstring {x:#b} longer than {n_qubits} qubits")));
            }
            if x.count_ones() != weight {
                return Err(Error::validation("bitstrings differ in Hamming weight"));
            }
            if bitstrings[..i].contains(&x) {
                return Err(Error::validation(format!(
                    "duplicate bitstring {}",
                    string_label(x, n_qubits)
                )));
            }
        }
        if layout.n_qubits != n_qubits {
            return Err(Error::validation("layout and ansatz disagree on qubit count"));
        }
        layout.validate()?;
        if theta.len() != layout.n_hops() {
            return Err(Error::validation(format!(
                "layout has {} hops but {} angles were given",
                layout.n_hops(),
                theta.len()
            )));
        }
        let norm = schmidt.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::validation("Schmidt coefficients have zero norm"));
        }
        Ok(ForgedAnsatz {
            n_qubits,
            bitstrings,
            schmidt: schmidt.into_iter().map(|v| v / norm).collect(),
            layout,
            theta,
        })
    }

    /// Default layout for the register, all angles zero, weight on the first bitstring.
    pub fn with_defaults(n_qubits: usize, bitstrings: Vec<u64>) -> Result<Self> {
        let layout = HopLayout::default_for(n_qubits);
        let theta = vec![0.0; layout.n_hops()];
        let mut schmidt = vec![0.0; bitstrings.len()];
        if let Some(first) = schmidt.first_mut() {
            *first = 1.0;
        }
        Self::new(n_qubits, bitstrings, schmidt, layout, theta)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_bitstrings(&self) -> usize {
        self.bitstrings.len()
    }

    /// Electrons per spin sector.
    pub fn n_electrons_per_spin(&self) -> usize {
        self.bitstrings[0].count_ones() as usize
    }

    pub fn bitstrings(&self) -> &[u64] {
        &self.bitstrings
    }

    pub fn schmidt(&self) -> &[f64] {
        &self.schmidt
    }

    pub fn layout(&self) -> &HopLayout {
        &self.layout
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn with_parameters(&self, theta: Vec<f64>, schmidt: Vec<f64>) -> Result<Self> {
        Self::new(self.n_qubits, self.bitstrings.clone(), schmidt, self.layout.clone(), theta)
    }

    /// Appends a bitstring with zero weight (parameters otherwise unchanged).
    pub fn with_extra_bitstring(&self, x: u64) -> Result<Self> {
        let mut bits = self.bitstrings.clone();
        bits.push(x);
        let mut schmidt = self.schmidt.clone();
        schmidt.push(0.0);
        Self::new(self.n_qubits, bits, schmidt, self.layout.clone(), self.theta.clone())
    }

    pub fn unitary(&self) -> Circuit<f64> {
        self.layout.circuit(&self.theta).expect("validated at construction")
    }

    pub fn initial_state(&self, prep: &Preparation) -> InitialState {
        match *prep {
            Preparation::Basis(k) => InitialState::Bitstring(self.bitstrings[k]),
            Preparation::Superposition { k, l, p } => InitialState::Superposition {
                k: self.bitstrings[k],
                l: self.bitstrings[l],
                p,
            },
        }
    }

    /// State preparation followed by `U(θ)`.
    pub fn preparation_circuit(&self, prep: &Preparation) -> Result<Circuit<f64>> {
        let mut c = self.initial_state(prep).circuit(self.n_qubits)?;
        c.extend(&self.unitary())?;
        Ok(c)
    }

    pub fn prepared_state(&self, prep: &Preparation) -> Result<Statevector<f64>> {
        let mut s = Statevector::zero_state(self.n_qubits);
        s.apply(&self.preparation_circuit(prep)?)?;
        Ok(s)
    }

    /// `U|x_k>` for every bitstring.
    pub fn sector_states(&self) -> Vec<Statevector<f64>> {
        let u = self.unitary();
        self.bitstrings
            .iter()
            .map(|&x| {
                let mut s = Statevector::basis_state(self.n_qubits, x as usize);
                s.apply(&u).expect("same register");
                s
            })
            .collect()
    }

    /// The forged state in the `(w, w)` determinant sector.
    pub fn ci_vector(&self) -> Result<CIVector> {
        let w = self.n_electrons_per_spin();
        let space = DeterminantSpace::new(self.n_qubits, w, w);
        let states = self.sector_states();
        let amps = (0..space.dim())
            .map(|i| {
                let (a, b) = space.det(i);
                states
                    .iter()
                    .zip(&self.schmidt)
                    .map(|(s, &lam)| s.amplitudes()[a as usize] * s.amplitudes()[b as usize] * lam)
                    .sum()
            })
            .collect();
        CIVector::new(&space, amps)
    }
}

/// `<x_k|U† O U|x_l>` for every operator, assembled from per-preparation
/// expectation values `expect(prep, operator_index)`.
pub fn elements_from_expectations(
    n_bitstrings: usize,
    n_operators: usize,
    mut expect: impl FnMut(&Preparation, usize) -> Result<f64>,
) -> Result<Vec<DMatrix<Complex64>>> {
    let mut out = vec![DMatrix::zeros(n_bitstrings, n_bitstrings); n_operators];
    for prep in Preparation::all(n_bitstrings) {
        for (op, m) in out.iter_mut().enumerate() {
            let e = expect(&prep, op)?;
            match prep {
                Preparation::Basis(k) => m[(k, k)] = Complex64::new(e, 0.0),
                Preparation::Superposition { k, l, p } => {
                    let w = i_pow::<f64>((4 - p) % 4) * 0.5;
                    m[(k, l)] += w * e;
                }
            }
        }
    }
    for m in &mut out {
        for k in 0..n_bitstrings {
            for l in k + 1..n_bitstrings {
                m[(l, k)] = m[(k, l)].conj();
            }
        }
    }
    Ok(out)
}

/// Per-term `A_klμ` and `B_klμ` with the assembled energy.
#[derive(Debug, Clone)]
pub struct ForgedEnergy {
    pub value: f64,
    pub a_terms: Vec<DMatrix<Complex64>>,
    pub b_terms: Vec<DMatrix<Complex64>>,
}

fn check_compatible(ansatz: &ForgedAnsatz, ham: &SpinFactorizedHamiltonian) -> Result<()> {
    if ansatz.n_qubits() != ham.n_qubits() {
        return Err(Error::validation(format!(
            "ansatz has {} qubits per sector, Hamiltonian {}",
            ansatz.n_qubits(),
            ham.n_qubits()
        )));
    }
    Ok(())
}

/// Operator elements evaluated on the preparation circuits.
pub fn operator_elements(ansatz: &ForgedAnsatz, ham: &SpinFactorizedHamiltonian) -> Result<Vec<DMatrix<Complex64>>> {
    check_compatible(ansatz, ham)?;
    let preps = Preparation::all(ansatz.n_bitstrings());
    let states = preps
        .iter()
        .map(|p| Ok((*p, ansatz.prepared_state(p)?)))
        .collect::<Result<std::collections::BTreeMap<_, _>>>()?;
    let ops = ham.operators();
    elements_from_expectations(ansatz.n_bitstrings(), ops.len(), |prep, op| states[prep].expectation(&ops[op]))
}

/// `(A_terms, B_terms)` indexed by Hamiltonian term.
pub fn forged_matrix_elements(
    ansatz: &ForgedAnsatz,
    ham: &SpinFactorizedHamiltonian,
) -> Result<(Vec<DMatrix<Complex64>>, Vec<DMatrix<Complex64>>)> {
    let elems = operator_elements(ansatz, ham)?;
    Ok(split_terms(&elems, ham))
}

fn split_terms(elems: &[DMatrix<Complex64>], ham: &SpinFactorizedHamiltonian) -> (Vec<DMatrix<Complex64>>, Vec<DMatrix<Complex64>>) {
    ham.terms()
        .iter()
        .map(|t| (elems[t.a].clone(), elems[t.b].clone()))
        .unzip()
}

/// `Σ_μ w_μ Σ_kl λ_k λ_l A_klμ B_klμ + c`.
pub fn assemble_energy(schmidt: &[f64], elems: &[DMatrix<Complex64>], ham: &SpinFactorizedHamiltonian) -> Result<f64> {
    let mut total = Complex64::new(ham.constant(), 0.0);
    for t in ham.terms() {
        let (a, b) = (&elems[t.a], &elems[t.b]);
        for (k, &lk) in schmidt.iter().enumerate() {
            for (l, &ll) in schmidt.iter().enumerate() {
                total += a[(k, l)] * b[(k, l)] * (lk * ll * t.coeff);
            }
        }
    }
    if total.im.abs() > 1e-8 {
        return Err(Error::Numerical(format!("forged energy has imaginary part {:e}", total.im)));
    }
    Ok(total.re)
}

pub fn forged_energy(ansatz: &ForgedAnsatz, ham: &SpinFactorizedHamiltonian) -> Result<ForgedEnergy> {
    let elems = operator_elements(ansatz, ham)?;
    let value = assemble_energy(ansatz.schmidt(), &elems, ham)?;
    let (a_terms, b_terms) = split_terms(&elems, ham);
    Ok(ForgedEnergy { value, a_terms, b_terms })
}

/// Fast exact evaluator: sector operators restricted to the fixed-weight
/// subspace as dense real matrices, so one energy costs a few small products.
#[derive(Debug, Clone)]
pub struct ForgedEvaluator {
    n_qubits: usize,
    basis: Vec<u64>,
    operators: Vec<DMatrix<f64>>,
    ham: SpinFactorizedHamiltonian,
}

impl ForgedEvaluator {
    pub fn new(ham: &SpinFactorizedHamiltonian, weight: usize) -> Result<Self> {
        let n = ham.n_qubits();
        let basis = crate::det::strings_with_weight(n, weight);
        let operators = ham
            .operators()
            .iter()
            .map(|op| restrict_real(op, &basis))
            .collect::<Result<Vec<_>>>()?;
        Ok(ForgedEvaluator {
            n_qubits: n,
            basis,
            operators,
            ham: ham.clone(),
        })
    }

    /// Coefficients of `U|x_k>` on the fixed-weight basis.
    fn sector_vectors(&self, layout: &HopLayout, theta: &[f64], bitstrings: &[u64]) -> Result<Vec<nalgebra::DVector<f64>>> {
        let u = layout.circuit(theta)?;
        bitstrings
            .iter()
            .map(|&x| {
                let mut s = Statevector::<f64>::basis_state(self.n_qubits, x as usize);
                s.apply(&u)?;
                Ok(nalgebra::DVector::from_iterator(
                    self.basis.len(),
                    self.basis.iter().map(|&b| s.amplitudes()[b as usize].re),
                ))
            })
            .collect()
    }

    pub fn energy(&self, layout: &HopLayout, theta: &[f64], bitstrings: &[u64], schmidt: &[f64]) -> Result<f64> {
        let vecs = self.sector_vectors(layout, theta, bitstrings)?;
        let k = vecs.len();
        let elems: Vec<DMatrix<f64>> = self
            .operators
            .iter()
            .map(|op| {
                let ov: Vec<_> = vecs.iter().map(|v| op * v).collect();
                DMatrix::from_fn(k, k, |i, j| vecs[i].dot(&ov[j]))
            })
            .collect();
        let mut total = self.ham.constant();
        for t in self.ham.terms() {
            let (a, b) = (&elems[t.a], &elems[t.b]);
            for (i, &li) in schmidt.iter().enumerate() {
                for (j, &lj) in schmidt.iter().enumerate() {
                    total += t.coeff * li * lj * a[(i, j)] * b[(i, j)];
                }
            }
        }
        Ok(total)
    }

    pub fn ansatz_energy(&self, ansatz: &ForgedAnsatz) -> Result<f64> {
        check_compatible(ansatz, &self.ham)?;
        self.energy(ansatz.layout(), ansatz.theta(), ansatz.bitstrings(), ansatz.schmidt())
    }
}

fn restrict_real(op: &QubitOperator<f64>, basis: &[u64]) -> Result<DMatrix<f64>> {
    let dim = 1usize << op.n_qubits();
    let pos: std::collections::HashMap<u64, usize> = basis.iter().enumerate().map(|(i, &b)| (b, i)).collect();
    let mut m = DMatrix::zeros(basis.len(), basis.len());
    for (j, &b) in basis.iter().enumerate() {
        let mut e = vec![Complex64::default(); dim];
        e[b as usize] = Complex64::new(1.0, 0.0);
        for (idx, v) in op.apply(&e).into_iter().enumerate() {
            if v.norm() < 1e-14 {
                continue;
            }
            let i = *pos.get(&(idx as u64)).ok_or_else(|| {
                Error::Numerical("sector operator does not conserve particle number".into())
            })?;
            if v.im.abs() > 1e-12 {
                return Err(Error::Numerical("sector operator has a complex matrix element".into()));
            }
            m[(i, j)] = v.re;
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::det::{lowest_string, sector_matrix};
    use crate::fixtures::{bundled, random_hamiltonian};
    use crate::hamio::spin_factorize;

    #[test]
    fn preparation_labels_round_trip() {
        let preps = Preparation::all(2);
        assert_eq!(preps.len(), 6);
        let labels: Vec<String> = preps.iter().map(Preparation::label).collect();
        assert_eq!(labels, ["x0", "x1", "phi0_01", "phi1_01", "phi2_01", "phi3_01"]);
        for p in preps {
            assert_eq!(Preparation::parse(&p.label()).unwrap(), p);
        }
        assert!(Preparation::parse("phi4_01").is_err());
        assert_eq!(Preparation::all(3).len(), 15);
    }

    #[test]
    fn schmidt_angles_round_trip() {
        for lam in [vec![0.6, -0.8], vec![0.5, 0.5, -0.7071067811865476], vec![1.0, 0.0, 0.0], vec![0.8, -0.6, 0.0]] {
            let back = schmidt_from_angles(&angles_from_schmidt(&lam));
            for (a, b) in lam.iter().zip(&back) {
                assert!((a - b).abs() < 1e-12, "{lam:?} -> {back:?}");
            }
        }
    }

    #[test]
    fn ansatz_validation() {
        let l = HopLayout::default_for(4);
        assert!(ForgedAnsatz::new(4, vec![0b0011, 0b0011], vec![1.0, 0.0], l.clone(), vec![0.0; 2]).is_err());
        assert!(ForgedAnsatz::new(4, vec![0b0011, 0b0111], vec![1.0, 0.0], l.clone(), vec![0.0; 2]).is_err());
        assert!(ForgedAnsatz::new(4, vec![0b0011], vec![1.0], l.clone(), vec![0.0; 3]).is_err());
        assert!(ForgedAnsatz::new(4, vec![0b0011], vec![0.0], l.clone(), vec![0.0; 2]).is_err());
        let a = ForgedAnsatz::new(4, vec![0b0011, 0b0101], vec![3.0, 4.0], l, vec![0.0; 2]).unwrap();
        assert!((a.schmidt()[0] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn single_bitstring_gives_determinant_energy() {
        let h = random_hamiltonian(3, 1, 1, 3);
        let f = spin_factorize(&h);
        let a = ForgedAnsatz::with_defaults(3, vec![lowest_string(1)]).unwrap();
        let e = forged_energy(&a, &f).unwrap().value;
        let space = DeterminantSpace::for_hamiltonian(&h);
        let m = sector_matrix(&h, &space);
        let hf = space.hf_index();
        assert!((e - m[(hf, hf)]).abs() < 1e-10);
    }

    fn random_ansatz(n: usize, bits: Vec<u64>, seed: u64) -> ForgedAnsatz {
        use rand::Rng;
        let mut rng = crate::rng::stream_rng(seed, 0);
        let layout = HopLayout::default_for(n);
        let theta = (0..layout.n_hops()).map(|_| rng.random_range(-3.0..3.0)).collect();
        let lam = (0..bits.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        ForgedAnsatz::new(n, bits, lam, layout, theta).unwrap()
    }

    #[test]
    fn superposition_route_matches_direct_elements() {
        let h = random_hamiltonian(4, 2, 2, 5);
        let f = spin_factorize(&h);
        let a = random_ansatz(4, vec![0b0011, 0b0101, 0b1010], 1);
        let elems = operator_elements(&a, &f).unwrap();
        let states = a.sector_states();
        for (op, m) in f.operators().iter().zip(&elems) {
            assert!((m - m.adjoint()).norm() < 1e-10);
            for k in 0..3 {
                for l in 0..3 {
                    let direct = op.matrix_element(states[k].amplitudes(), states[l].amplitudes());
                    assert!((m[(k, l)] - direct).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn theta_zero_elements_are_bitstring_elements() {
        let h = random_hamiltonian(4, 2, 2, 8);
        let f = spin_factorize(&h);
        let a = ForgedAnsatz::with_defaults(4, vec![0b0011, 0b0110]).unwrap();
        let elems = operator_elements(&a, &f).unwrap();
        for (op, m) in f.operators().iter().zip(&elems) {
            for (k, &xk) in a.bitstrings().iter().enumerate() {
                for (l, &xl) in a.bitstrings().iter().enumerate() {
                    let bra = Statevector::<f64>::basis_state(4, xk as usize);
                    let ket = Statevector::<f64>::basis_state(4, xl as usize);
                    let direct = op.matrix_element(bra.amplitudes(), ket.amplitudes());
                    assert!((m[(k, l)].norm() - direct.norm()).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn energy_matches_full_register_and_ci_vector() {
        for (n, seed) in [(2usize, 1u64), (3, 2), (4, 3)] {
            let w = n / 2 + n % 2;
            let h = random_hamiltonian(n, w, w, seed);
            let f = spin_factorize(&h);
            let strings = crate::det::strings_with_weight(n, w);
            let a = random_ansatz(n, strings[..2].to_vec(), seed);
            let e = forged_energy(&a, &f).unwrap().value;

            // full 2N-qubit statevector Σ λ_k ψ_k ⊗ ψ_k
            let states = a.sector_states();
            let dim = 1 << n;
            let mut full = vec![Complex64::default(); dim * dim];
            for (s, &lam) in states.iter().zip(a.schmidt()) {
                for x in 0..dim {
                    for y in 0..dim {
                        full[x | y << n] += s.amplitudes()[x] * s.amplitudes()[y] * lam;
                    }
                }
            }
            let direct = f.to_full_operator().matrix_element(&full, &full).re;
            assert!((e - direct).abs() < 1e-10, "n={n}: {e} vs {direct}");

            let civ = a.ci_vector().unwrap();
            let sh = crate::det::SectorHamiltonian::new(&h, &civ.space());
            assert!((sh.expectation(civ.amplitudes()) - e).abs() < 1e-10);

            let fast = ForgedEvaluator::new(&f, w).unwrap().ansatz_energy(&a).unwrap();
            assert!((fast - e).abs() < 1e-10);
        }
    }

    #[test]
    fn vanishing_weight_and_sign_flip() {
        let h = bundled("butadiene_4e4o").unwrap();
        let f = spin_factorize(&h);
        let one = random_ansatz(4, vec![0b0011], 4);
        let two = one.with_extra_bitstring(0b0101).unwrap();
        let e1 = forged_energy(&one, &f).unwrap().value;
        let e2 = forged_energy(&two, &f).unwrap().value;
        assert!((e1 - e2).abs() < 1e-12);
        let mixed = two.with_parameters(two.theta().to_vec(), vec![0.3, -0.7]).unwrap();
        let flipped = two.with_parameters(two.theta().to_vec(), vec![-0.3, 0.7]).unwrap();
        let (a, b) = (forged_energy(&mixed, &f).unwrap().value, forged_energy(&flipped, &f).unwrap().value);
        assert!((a - b).abs() < 1e-12);
    }
}
