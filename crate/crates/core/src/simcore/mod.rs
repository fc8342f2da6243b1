//! Dense statevector simulation of the forging circuits.
//!
//! Qubit `q` is bit `q` of the amplitude index. Two-qubit gates use the local
//! index `bit(q0) + 2 * bit(q1)` for their 4x4 matrix.

mod layout;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::pauli::{i_pow, Pauli, QubitOperator};
use crate::scalar::Real;

pub use layout::{count_resources, default_hop_count, HopLayout, ResourceCount};

/// Particle-conserving hop gate. Rows and columns ordered `|00>, |01>, |10>, |11>`.
pub fn hop_gate<T: Real>(theta: T) -> [[T; 4]; 4] {
    let (s, c) = theta.sin_cos();
    let (o, z) = (T::one(), T::zero());
    [[o, z, z, z], [z, c, s, z], [z, s, -c, z], [z, z, z, -o]]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate<T: Real = f64> {
    Hop { qubits: [usize; 2], theta: T },
    X(usize),
    H(usize),
    S(usize),
    Sdg(usize),
    Z(usize),
    /// `diag(1, i^p)`.
    Phase { qubit: usize, p: u8 },
    Cnot { control: usize, target: usize },
}

impl<T: Real> Gate<T> {
    fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::Hop { qubits, .. } => qubits.to_vec(),
            Gate::Cnot { control, target } => vec![control, target],
            Gate::X(q) | Gate::H(q) | Gate::S(q) | Gate::Sdg(q) | Gate::Z(q) | Gate::Phase { qubit: q, .. } => vec![q],
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        matches!(self, Gate::Hop { .. } | Gate::Cnot { .. })
    }
}

/// Ordered gate list on a fixed register.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit<T: Real = f64> {
    n_qubits: usize,
    gates: Vec<Gate<T>>,
}

impl<T: Real> Circuit<T> {
    pub fn new(n_qubits: usize) -> Self {
        Circuit { n_qubits, gates: Vec::new() }
    }

    /// Validates qubit indices and hop adjacency.
    pub fn from_gates(n_qubits: usize, gates: Vec<Gate<T>>) -> Result<Self> {
        let mut c = Circuit::new(n_qubits);
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn push(&mut self, gate: Gate<T>) -> Result<()> {
        let qs = gate.qubits();
        if let Some(&bad) = qs.iter().find(|&&q| q >= self.n_qubits) {
            return Err(Error::validation(format!(
                "gate {gate:?} addresses qubit {bad} on a {}-qubit register",
                self.n_qubits
            )));
        }
        if qs.len() == 2 && qs[0] == qs[1] {
            return Err(Error::validation(format!("gate {gate:?} repeats a qubit")));
        }
        if let Gate::Hop { qubits: [a, b], .. } = gate {
            if a.abs_diff(b) != 1 {
                return Err(Error::validation(format!("hop gate on non-adjacent qubits ({a}, {b})")));
            }
        }
        self.gates.push(gate);
        Ok(())
    }

    pub fn extend(&mut self, other: &Circuit<T>) -> Result<()> {
        for g in &other.gates {
            self.push(*g)?;
        }
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate<T>] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Rotations mapping the eigenbasis of `basis[q]` on each qubit to Z.
    /// `I` and `Z` need no rotation; X gets H, Y gets S† then H.
    pub fn basis_rotation(basis: &[Pauli]) -> Self {
        let mut c = Circuit::new(basis.len());
        for (q, p) in basis.iter().enumerate() {
            match p {
                Pauli::X => c.gates.push(Gate::H(q)),
                Pauli::Y => {
                    c.gates.push(Gate::Sdg(q));
                    c.gates.push(Gate::H(q));
                }
                Pauli::I | Pauli::Z => {}
            }
        }
        c
    }
}

/// Basis-state or two-determinant superposition preparation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InitialState {
    Bitstring(u64),
    /// `(|k> + i^p |l>) / √2`.
    Superposition { k: u64, l: u64, p: u8 },
}

impl InitialState {
    /// Gate sequence preparing the state from `|0...0>`.
    ///
    /// The superposition uses a pivot qubit (lowest differing bit): H then
    /// `diag(1, i^p)` on it, CNOTs fanning out to the other differing bits,
    /// and X gates fixing common and `k`-only bits.
    pub fn circuit<T: Real>(&self, n_qubits: usize) -> Result<Circuit<T>> {
        let mask = if n_qubits >= 64 { u64::MAX } else { (1u64 << n_qubits) - 1 };
        let mut c = Circuit::new(n_qubits);
        match *self {
            InitialState::Bitstring(x) => {
                if x & !mask != 0 {
                    return Err(Error::validation(format!("bitstring {x:#b} longer than {n_qubits} qubits")));
                }
                for q in 0..n_qubits {
                    if x >> q & 1 == 1 {
                        c.push(Gate::X(q))?;
                    }
                }
            }
            InitialState::Superposition { k, l, p } => {
                if (k | l) & !mask != 0 {
                    return Err(Error::validation(format!("bitstrings longer than {n_qubits} qubits")));
                }
                if k == l {
                    return Err(Error::validation("superposition of a bitstring with itself"));
                }
                if p > 3 {
                    return Err(Error::validation(format!("phase index {p} outside 0..=3")));
                }
                let diff = k ^ l;
                let pivot = diff.trailing_zeros() as usize;
                for q in 0..n_qubits {
                    if (k & l) >> q & 1 == 1 {
                        c.push(Gate::X(q))?;
                    }
                }
                c.push(Gate::H(pivot))?;
                if p != 0 {
                    c.push(Gate::Phase { qubit: pivot, p })?;
                }
                for q in (pivot + 1)..n_qubits {
                    if diff >> q & 1 == 1 {
                        c.push(Gate::Cnot { control: pivot, target: q })?;
                    }
                }
                for q in 0..n_qubits {
                    if (diff & k) >> q & 1 == 1 {
                        c.push(Gate::X(q))?;
                    }
                }
            }
        }
        Ok(c)
    }
}

/// Dense `2^n` amplitude vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Statevector<T: Real = f64> {
    n_qubits: usize,
    amplitudes: Vec<Complex<T>>,
}

impl<T: Real> Statevector<T> {
    pub fn zero_state(n_qubits: usize) -> Self {
        Self::basis_state(n_qubits, 0)
    }

    pub fn basis_state(n_qubits: usize, index: usize) -> Self {
        assert!(index < 1 << n_qubits, "basis index out of range");
        let mut amplitudes = vec![Complex::new(T::zero(), T::zero()); 1 << n_qubits];
        amplitudes[index] = Complex::new(T::one(), T::zero());
        Statevector { n_qubits, amplitudes }
    }

    /// Wraps raw amplitudes; the length must be a power of two.
    pub fn from_amplitudes(amplitudes: Vec<Complex<T>>) -> Result<Self> {
        let len = amplitudes.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::validation(format!("amplitude count {len} is not a power of two")));
        }
        Ok(Statevector {
            n_qubits: len.trailing_zeros() as usize,
            amplitudes,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex<T>> {
        self.amplitudes
    }

    pub fn norm(&self) -> T {
        self.amplitudes
            .iter()
            .fold(T::zero(), |acc, a| acc + a.norm_sqr())
            .sqrt()
    }

    pub fn probabilities(&self) -> Vec<T> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn inner(&self, other: &Statevector<T>) -> Complex<T> {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| acc + a.conj() * b)
    }

    pub fn apply_gate(&mut self, gate: &Gate<T>) {
        let amps = &mut self.amplitudes;
        let half = T::FRAC_1_SQRT_2();
        match *gate {
            Gate::X(q) => {
                let m = 1 << q;
                for i in 0..amps.len() {
                    if i & m == 0 {
                        amps.swap(i, i | m);
                    }
                }
            }
            Gate::H(q) => {
                let m = 1 << q;
                for i in 0..amps.len() {
                    if i & m == 0 {
                        let (a, b) = (amps[i], amps[i | m]);
                        amps[i] = (a + b) * half;
                        amps[i | m] = (a - b) * half;
                    }
                }
            }
            Gate::S(q) => phase_on(amps, q, i_pow(1)),
            Gate::Sdg(q) => phase_on(amps, q, i_pow(3)),
            Gate::Z(q) => phase_on(amps, q, i_pow(2)),
            Gate::Phase { qubit, p } => phase_on(amps, qubit, i_pow(p)),
            Gate::Cnot { control, target } => {
                let (mc, mt) = (1 << control, 1 << target);
                for i in 0..amps.len() {
                    if i & mc != 0 && i & mt == 0 {
                        amps.swap(i, i | mt);
                    }
                }
            }
            Gate::Hop { qubits: [a, b], theta } => {
                let (s, c) = theta.sin_cos();
                let (ma, mb) = (1 << a, 1 << b);
                for i in 0..amps.len() {
                    if i & (ma | mb) == 0 {
                        let (i01, i10, i11) = (i | ma, i | mb, i | ma | mb);
                        let (v01, v10) = (amps[i01], amps[i10]);
                        amps[i01] = v01 * c + v10 * s;
                        amps[i10] = v01 * s - v10 * c;
                        amps[i11] = -amps[i11];
                    }
                }
            }
        }
    }

    pub fn apply(&mut self, circuit: &Circuit<T>) -> Result<()> {
        if circuit.n_qubits() != self.n_qubits {
            return Err(Error::validation(format!(
                "circuit on {} qubits applied to a {}-qubit state",
                circuit.n_qubits(),
                self.n_qubits
            )));
        }
        for g in circuit.gates() {
            self.apply_gate(g);
        }
        Ok(())
    }

    /// `<s|op|s>` for a Hermitian operator; fails if the imaginary part is not negligible.
    pub fn expectation(&self, op: &QubitOperator<T>) -> Result<T> {
        if op.n_qubits() != self.n_qubits {
            return Err(Error::validation(format!(
                "operator on {} qubits measured on a {}-qubit state",
                op.n_qubits(),
                self.n_qubits
            )));
        }
        let v = op.matrix_element(&self.amplitudes, &self.amplitudes);
        let tol = T::lit(1e-8).max(T::epsilon() * T::lit(1e3));
        if v.im.abs() > tol {
            return Err(Error::Numerical(format!(
                "expectation has imaginary part {} (operator not Hermitian?)",
                v.im
            )));
        }
        Ok(v.re)
    }
}

fn phase_on<T: Real>(amps: &mut [Complex<T>], q: usize, phase: Complex<T>) {
    let m = 1 << q;
    for (i, a) in amps.iter_mut().enumerate() {
        if i & m != 0 {
            *a *= phase;
        }
    }
}

pub fn prepare_initial_state<T: Real>(n_qubits: usize, kind: &InitialState) -> Result<Statevector<T>> {
    let mut s = Statevector::zero_state(n_qubits);
    s.apply(&kind.circuit(n_qubits)?)?;
    Ok(s)
}

pub fn apply_circuit<T: Real>(c: &Circuit<T>, s: &Statevector<T>) -> Result<Statevector<T>> {
    let mut out = s.clone();
    out.apply(c)?;
    Ok(out)
}

pub fn expectation<T: Real>(s: &Statevector<T>, op: &QubitOperator<T>) -> Result<T> {
    s.expectation(op)
}
