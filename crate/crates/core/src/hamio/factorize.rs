//! Opposite-spin tensor-product factorization `H = c + Σ_μ w_μ A_μ ⊗ B_μ`.
//!
//! Each spin sector is Jordan-Wigner encoded on its own N qubits (orbital p ->
//! qubit p). Opposite-spin two-body terms factor into products of spin-conserving
//! bilinears, which carry no parity string across the α/β cut, so the sector
//! encodings compose without extra signs.

use num_complex::Complex64;

use super::ActiveSpaceHamiltonian;
use crate::pauli::{excitation, PauliString, QubitOperator};

/// Coefficients below this magnitude are pruned.
pub const PRUNE_THRESHOLD: f64 = 1e-12;

/// One `w · A ⊗ B` term; `a` and `b` index [`SpinFactorizedHamiltonian::operators`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinTerm {
    pub a: usize,
    pub b: usize,
    pub coeff: f64,
}

/// Factorized Hamiltonian. Distinct sector operators are stored once and shared
/// between terms; operator 0 is always the identity.
#[derive(Debug, Clone)]
pub struct SpinFactorizedHamiltonian {
    n_qubits: usize,
    operators: Vec<QubitOperator<f64>>,
    terms: Vec<SpinTerm>,
    constant: f64,
}

impl SpinFactorizedHamiltonian {
    pub const IDENTITY: usize = 0;

    /// Qubits per spin sector.
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn operators(&self) -> &[QubitOperator<f64>] {
        &self.operators
    }

    pub fn terms(&self) -> &[SpinTerm] {
        &self.terms
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    /// `(A_μ, B_μ, w_μ)` for term `mu`.
    pub fn term(&self, mu: usize) -> (&QubitOperator<f64>, &QubitOperator<f64>, f64) {
        let t = self.terms[mu];
        (&self.operators[t.a], &self.operators[t.b], t.coeff)
    }

    /// Reassembled operator on 2N qubits, α on qubits `0..N` and β on `N..2N`,
    /// including the constant.
    pub fn to_full_operator(&self) -> QubitOperator<f64> {
        let n = self.n_qubits;
        let mut full = QubitOperator::from_term(2 * n, PauliString::IDENTITY, Complex64::new(self.constant, 0.0));
        for t in &self.terms {
            for (sa, ca) in self.operators[t.a].terms() {
                for (sb, cb) in self.operators[t.b].terms() {
                    let s = PauliString {
                        x: sa.x | sb.x << n,
                        z: sa.z | sb.z << n,
                    };
                    full.add_term(s, *ca * *cb * t.coeff);
                }
            }
        }
        full.prune(PRUNE_THRESHOLD);
        full
    }
}

/// Splits `h` into α-only, β-only and αβ tensor-product terms.
pub fn spin_factorize(h: &ActiveSpaceHamiltonian) -> SpinFactorizedHamiltonian {
    let n = h.n_orbitals();
    let hop: Vec<Vec<QubitOperator<f64>>> = (0..n)
        .map(|p| (0..n).map(|q| excitation(p, q, n)).collect())
        .collect();

    // Same-spin part: Σ h_pq E_pq + ½ Σ (pq|rs) (E_pq E_rs - δ_qr E_ps)
    let mut same = QubitOperator::zero(n);
    for p in 0..n {
        for q in 0..n {
            let mut k = h.one_body(p, q);
            for r in 0..n {
                k -= 0.5 * h.eri(p, r, r, q);
            }
            if k.abs() > PRUNE_THRESHOLD {
                same.add_assign_scaled(&hop[p][q], Complex64::new(k, 0.0));
            }
        }
    }
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                for s in 0..n {
                    let g = h.eri(p, q, r, s);
                    if g.abs() > PRUNE_THRESHOLD {
                        same.add_assign_scaled(&hop[p][q].mul(&hop[r][s]), Complex64::new(0.5 * g, 0.0));
                    }
                }
            }
        }
    }
    same.prune(PRUNE_THRESHOLD);

    let mut operators = vec![QubitOperator::identity(n)];
    let mut terms = Vec::new();
    if !same.is_empty() {
        operators.push(same);
        terms.push(SpinTerm { a: 1, b: 0, coeff: 1.0 });
        terms.push(SpinTerm { a: 0, b: 1, coeff: 1.0 });
    }

    // Opposite-spin part: Σ (pq|rs) E^α_pq E^β_rs = Σ_{p≤q, r≤s} (pq|rs) F_pq ⊗ F_rs
    // with F_pq = E_pq + E_qp (F_pp = E_pp), which is Hermitian.
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|p| (p..n).map(move |q| (p, q))).collect();
    let mut pair_op = vec![None; pairs.len()];
    for (i, &(p, q)) in pairs.iter().enumerate() {
        for (j, &(r, s)) in pairs.iter().enumerate() {
            let g = h.eri(p, q, r, s);
            if g.abs() <= PRUNE_THRESHOLD {
                continue;
            }
            let mut ids = [0usize; 2];
            for (slot, (k, (a, b))) in ids.iter_mut().zip([(i, (p, q)), (j, (r, s))]) {
                *slot = *pair_op[k].get_or_insert_with(|| {
                    let mut f = hop[a][b].clone();
                    if a != b {
                        f.add_assign_scaled(&hop[b][a], Complex64::new(1.0, 0.0));
                    }
                    f.prune(PRUNE_THRESHOLD);
                    operators.push(f);
                    operators.len() - 1
                });
            }
            terms.push(SpinTerm {
                a: ids[0],
                b: ids[1],
                coeff: g,
            });
        }
    }

    SpinFactorizedHamiltonian {
        n_qubits: n,
        operators,
        terms,
        constant: h.e_core(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::det::{sector_matrix, DeterminantSpace};
    use crate::fixtures::random_hamiltonian;
    use nalgebra::DMatrix;

    /// Restriction of a 2N-qubit matrix to the determinant basis of a sector.
    fn restrict(full: &DMatrix<Complex64>, space: &DeterminantSpace) -> DMatrix<Complex64> {
        let idx: Vec<usize> = space.full_indices().collect();
        DMatrix::from_fn(idx.len(), idx.len(), |i, j| full[(idx[i], idx[j])])
    }

    #[test]
    fn one_body_only_has_no_cross_terms() {
        let h = ActiveSpaceHamiltonian::from_fn(3, 1, 1, 0.0, |p, q| if p == q { p as f64 } else { 0.1 }, |_, _, _, _| 0.0).unwrap();
        let f = spin_factorize(&h);
        for t in f.terms() {
            assert!(t.a == 0 || t.b == 0);
        }
    }

    #[test]
    fn non_interacting_two_orbital_spectrum() {
        let (e1, e2) = (-1.3, 0.4);
        let h = ActiveSpaceHamiltonian::from_fn(2, 1, 1, 0.0, |p, q| match (p, q) {
            (0, 0) => e1,
            (1, 1) => e2,
            _ => 0.0,
        }, |_, _, _, _| 0.0)
        .unwrap();
        let full = spin_factorize(&h).to_full_operator().to_matrix();
        let space = DeterminantSpace::new(2, 1, 1);
        let block = restrict(&full, &space);
        let mut eig: Vec<f64> = block.symmetric_eigenvalues().iter().copied().collect();
        eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut expected = vec![e1 + e1, e1 + e2, e2 + e1, e2 + e2];
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in eig.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn reassembled_matches_determinant_matrix() {
        for (n, seed) in [(2, 1), (3, 2), (4, 3)] {
            let h = random_hamiltonian(n, n / 2, n / 2, seed);
            let f = spin_factorize(&h);
            let full = f.to_full_operator().to_matrix();
            assert!((&full - full.adjoint()).norm() < 1e-12, "Hermiticity");
            for na in 0..=n {
                for nb in 0..=n {
                    let space = DeterminantSpace::new(n, na, nb);
                    let det = sector_matrix(&h, &space).map(|v| Complex64::new(v, 0.0));
                    let diff = (restrict(&full, &space) - det).camax();
                    assert!(diff < 1e-10, "n={n} sector ({na},{nb}) diff {diff:e}");
                }
            }
        }
    }

    #[test]
    fn pauli_strings_have_sector_length() {
        let h = random_hamiltonian(4, 2, 2, 9);
        let f = spin_factorize(&h);
        for op in f.operators() {
            assert_eq!(op.n_qubits(), 4);
            for (s, _) in op.terms() {
                assert_eq!(s.support() >> 4, 0);
            }
            assert!(op.is_hermitian(1e-12));
        }
    }
}
