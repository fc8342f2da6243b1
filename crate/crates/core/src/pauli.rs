//! Pauli strings, weighted Pauli sums and the Jordan-Wigner ladder operators.
//!
//! A string is stored as an (x, z) bit pair per qubit: I = (0,0), X = (1,0),
//! Z = (0,1), Y = (1,1). Qubit `q` is bit `q`. Labels are printed with the
//! highest qubit first, so `"XI"` is X on qubit 1.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    /// Digit used by the base-4 string index (I=0, X=1, Y=2, Z=3).
    pub fn digit(self) -> usize {
        match self {
            Pauli::I => 0,
            Pauli::X => 1,
            Pauli::Y => 2,
            Pauli::Z => 3,
        }
    }

    pub fn from_digit(d: usize) -> Self {
        Pauli::ALL[d & 3]
    }

    pub fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Tensor product of single-qubit Paulis (no phase).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct PauliString {
    pub x: u64,
    pub z: u64,
}

impl PauliString {
    pub const IDENTITY: PauliString = PauliString { x: 0, z: 0 };

    pub fn single(q: usize, p: Pauli) -> Self {
        let (x, z) = p.bits();
        PauliString {
            x: (x as u64) << q,
            z: (z as u64) << q,
        }
    }

    pub fn get(&self, q: usize) -> Pauli {
        Pauli::from_bits(self.x >> q & 1 == 1, self.z >> q & 1 == 1)
    }

    pub fn set(&mut self, q: usize, p: Pauli) {
        let (x, z) = p.bits();
        let m = 1u64 << q;
        self.x = (self.x & !m) | if x { m } else { 0 };
        self.z = (self.z & !m) | if z { m } else { 0 };
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn n_y(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    /// Positions carrying a non-identity letter.
    pub fn support(&self) -> u64 {
        self.x | self.z
    }

    /// Product `self * other` as (power of i, string).
    pub fn mul(&self, other: &PauliString) -> (u8, PauliString) {
        // Write each string as i^{#Y} X^x Z^z; moving Z^{z1} past X^{x2} costs (-1)^{|z1 & x2|}.
        let ny = self.n_y() + other.n_y();
        let anti = (self.z & other.x).count_ones();
        let out = PauliString {
            x: self.x ^ other.x,
            z: self.z ^ other.z,
        };
        let ny_out = out.n_y();
        // i^{ny} (-1)^{anti} X^x Z^z = i^{ny + 2 anti - ny_out} * (i^{ny_out} X^x Z^z)
        let pow = (ny as i64 + 2 * anti as i64 - ny_out as i64).rem_euclid(4) as u8;
        (pow, out)
    }

    /// Action on a computational basis state: returns (power of i, sign flip, new index).
    #[inline]
    pub fn apply_basis(&self, b: usize) -> (u8, usize) {
        let b64 = b as u64;
        let mut pow = (self.n_y() % 4) as u8;
        if (b64 & self.z).count_ones() % 2 == 1 {
            pow = (pow + 2) % 4;
        }
        (pow, (b64 ^ self.x) as usize)
    }

    /// Base-4 index with qubit `q` as digit `q`.
    pub fn index(&self, n: usize) -> usize {
        (0..n).rev().fold(0, |acc, q| acc * 4 + self.get(q).digit())
    }

    pub fn from_index(mut idx: usize, n: usize) -> Self {
        let mut s = PauliString::IDENTITY;
        for q in 0..n {
            s.set(q, Pauli::from_digit(idx % 4));
            idx /= 4;
        }
        s
    }

    pub fn label(&self, n: usize) -> String {
        (0..n).rev().map(|q| self.get(q).symbol()).collect()
    }

    pub fn parse(label: &str) -> Result<(Self, usize)> {
        let n = label.chars().count();
        if n > 63 {
            return Err(Error::validation("Pauli label longer than 63 qubits"));
        }
        let mut s = PauliString::IDENTITY;
        for (pos, c) in label.chars().enumerate() {
            let p = match c {
                'I' => Pauli::I,
                'X' => Pauli::X,
                'Y' => Pauli::Y,
                'Z' => Pauli::Z,
                other => {
                    return Err(Error::validation(format!(
                        "invalid Pauli letter `{other}` in `{label}`"
                    )))
                }
            };
            s.set(n - 1 - pos, p);
        }
        Ok((s, n))
    }
}

/// `i^pow` as a complex number.
pub fn i_pow<T: Real>(pow: u8) -> Complex<T> {
    match pow % 4 {
        0 => Complex::new(T::one(), T::zero()),
        1 => Complex::new(T::zero(), T::one()),
        2 => Complex::new(-T::one(), T::zero()),
        _ => Complex::new(T::zero(), -T::one()),
    }
}

/// Weighted sum of Pauli strings on `n_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitOperator<T: Real = f64> {
    n_qubits: usize,
    terms: BTreeMap<PauliString, Complex<T>>,
}

impl<T: Real> QubitOperator<T> {
    pub fn zero(n_qubits: usize) -> Self {
        QubitOperator {
            n_qubits,
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self::from_term(n_qubits, PauliString::IDENTITY, Complex::new(T::one(), T::zero()))
    }

    pub fn from_term(n_qubits: usize, s: PauliString, c: Complex<T>) -> Self {
        let mut op = Self::zero(n_qubits);
        op.add_term(s, c);
        op
    }

    pub fn from_terms<I: IntoIterator<Item = (PauliString, Complex<T>)>>(n_qubits: usize, it: I) -> Self {
        let mut op = Self::zero(n_qubits);
        for (s, c) in it {
            op.add_term(s, c);
        }
        op
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PauliString, &Complex<T>)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, s: &PauliString) -> Complex<T> {
        self.terms.get(s).copied().unwrap_or_default()
    }

    pub fn add_term(&mut self, s: PauliString, c: Complex<T>) {
        debug_assert!(self.n_qubits >= 64 || (s.support() >> self.n_qubits) == 0);
        *self.terms.entry(s).or_default() += c;
    }

    pub fn add_assign_scaled(&mut self, other: &QubitOperator<T>, scale: Complex<T>) {
        assert_eq!(self.n_qubits, other.n_qubits, "qubit count mismatch");
        for (s, c) in &other.terms {
            self.add_term(*s, *c * scale);
        }
    }

    pub fn scaled(&self, scale: Complex<T>) -> Self {
        QubitOperator {
            n_qubits: self.n_qubits,
            terms: self.terms.iter().map(|(s, c)| (*s, *c * scale)).collect(),
        }
    }

    pub fn mul(&self, other: &QubitOperator<T>) -> Self {
        assert_eq!(self.n_qubits, other.n_qubits, "qubit count mismatch");
        let mut out = Self::zero(self.n_qubits);
        for (s1, c1) in &self.terms {
            for (s2, c2) in &other.terms {
                let (pow, s) = s1.mul(s2);
                out.add_term(s, *c1 * *c2 * i_pow::<T>(pow));
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        QubitOperator {
            n_qubits: self.n_qubits,
            terms: self.terms.iter().map(|(s, c)| (*s, c.conj())).collect(),
        }
    }

    /// Drop terms with modulus at or below `threshold`.
    pub fn prune(&mut self, threshold: T) {
        self.terms.retain(|_, c| c.norm() > threshold);
    }

    /// Hermitian iff every coefficient is real.
    pub fn is_hermitian(&self, tol: T) -> bool {
        self.terms.values().all(|c| c.im.abs() <= tol)
    }

    pub fn is_identity_only(&self) -> bool {
        self.terms.keys().all(|s| s.is_identity())
    }

    /// `op |psi>` on a dense amplitude vector.
    pub fn apply(&self, psi: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut out = vec![Complex::default(); psi.len()];
        for (s, c) in &self.terms {
            for (b, amp) in psi.iter().enumerate() {
                let (pow, b2) = s.apply_basis(b);
                out[b2] += *c * i_pow::<T>(pow) * *amp;
            }
        }
        out
    }

    /// `<bra| op |ket>`.
    pub fn matrix_element(&self, bra: &[Complex<T>], ket: &[Complex<T>]) -> Complex<T> {
        let mut acc = Complex::default();
        for (s, c) in &self.terms {
            let mut partial = Complex::default();
            for (b, amp) in ket.iter().enumerate() {
                if amp.re == T::zero() && amp.im == T::zero() {
                    continue;
                }
                let (pow, b2) = s.apply_basis(b);
                partial += bra[b2].conj() * i_pow::<T>(pow) * *amp;
            }
            acc += *c * partial;
        }
        acc
    }

    /// Dense matrix in the computational basis (small qubit counts only).
    pub fn to_matrix(&self) -> DMatrix<Complex<T>> {
        let dim = 1usize << self.n_qubits;
        let mut m = DMatrix::from_element(dim, dim, Complex::default());
        for (s, c) in &self.terms {
            for b in 0..dim {
                let (pow, b2) = s.apply_basis(b);
                m[(b2, b)] += *c * i_pow::<T>(pow);
            }
        }
        m
    }
}

impl<T: Real> fmt::Display for QubitOperator<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (s, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({}{:+}i) {}", c.re, c.im, s.label(self.n_qubits))?;
        }
        Ok(())
    }
}

/// Jordan-Wigner image of the annihilation operator on mode `j`: Z_0..Z_{j-1} (X_j + iY_j)/2.
pub fn annihilation<T: Real>(j: usize, n_qubits: usize) -> QubitOperator<T> {
    ladder(j, n_qubits, false)
}

/// Jordan-Wigner image of the creation operator on mode `j`: Z_0..Z_{j-1} (X_j - iY_j)/2.
pub fn creation<T: Real>(j: usize, n_qubits: usize) -> QubitOperator<T> {
    ladder(j, n_qubits, true)
}

fn ladder<T: Real>(j: usize, n_qubits: usize, dagger: bool) -> QubitOperator<T> {
    assert!(j < n_qubits, "mode {j} out of range for {n_qubits} qubits");
    let zmask = (1u64 << j) - 1;
    let half = T::lit(0.5);
    let xs = PauliString { x: 1 << j, z: zmask };
    let ys = PauliString {
        x: 1 << j,
        z: zmask | (1 << j),
    };
    let ycoef = if dagger { -half } else { half };
    QubitOperator::from_terms(
        n_qubits,
        [(xs, Complex::new(half, T::zero())), (ys, Complex::new(T::zero(), ycoef))],
    )
}

/// Jordan-Wigner image of the number-conserving hop a†_p a_q.
pub fn excitation<T: Real>(p: usize, q: usize, n_qubits: usize) -> QubitOperator<T> {
    creation::<T>(p, n_qubits).mul(&annihilation(q, n_qubits))
}
