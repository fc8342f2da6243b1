//! Determinant (occupation-string) basis for fixed (n_alpha, n_beta) sectors.
//!
//! Spin-orbital modes are ordered α orbitals `0..N` then β orbitals `N..2N`,
//! matching the qubit layout of the forged 2N-qubit state. A determinant is a
//! pair of bit strings; its full-register index is `alpha | beta << N`. All
//! fermionic signs follow the Jordan-Wigner convention (parity of occupied
//! modes below the acted-on mode).

use std::collections::{BTreeMap, HashMap};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamio::ActiveSpaceHamiltonian;

/// All `n`-bit strings with `k` bits set, ascending.
pub fn strings_with_weight(n: usize, k: usize) -> Vec<u64> {
    (0u64..1 << n).filter(|s| s.count_ones() as usize == k).collect()
}

/// Lowest-`k`-orbitals-occupied string.
pub fn lowest_string(k: usize) -> u64 {
    (1u64 << k) - 1
}

/// Renders a string with the highest orbital first (`0b011` over 3 orbitals is `"011"`).
pub fn string_label(s: u64, n: usize) -> String {
    (0..n).rev().map(|q| if s >> q & 1 == 1 { '1' } else { '0' }).collect()
}

pub fn parse_string_label(label: &str) -> Result<(u64, usize)> {
    let n = label.len();
    if n == 0 || n > 63 {
        return Err(Error::validation(format!("bitstring `{label}` has bad length")));
    }
    let mut s = 0u64;
    for (pos, c) in label.chars().enumerate() {
        match c {
            '0' => {}
            '1' => s |= 1 << (n - 1 - pos),
            _ => return Err(Error::validation(format!("bitstring `{label}` has non-binary digit"))),
        }
    }
    Ok((s, n))
}

#[inline]
fn parity(x: u64) -> f64 {
    if x.count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `a†_p a_q` on a single-spin string.
#[inline]
pub fn hop_string(s: u64, p: usize, q: usize) -> Option<(u64, f64)> {
    let qm = 1u64 << q;
    if s & qm == 0 {
        return None;
    }
    if p == q {
        return Some((s, 1.0));
    }
    let pm = 1u64 << p;
    let removed = s ^ qm;
    if removed & pm != 0 {
        return None;
    }
    let sign = parity(s & (qm - 1)) * parity(removed & (pm - 1));
    Some((removed | pm, sign))
}

/// Creation or annihilation on spin-orbital mode `0..2N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Ladder {
    Create(usize),
    Annihilate(usize),
}

/// Applies an operator product to a full occupation; `ops[0]` is the leftmost factor.
pub fn apply_ladders(occ: u64, ops: &[Ladder]) -> Option<(u64, f64)> {
    let mut occ = occ;
    let mut sign = 1.0;
    for op in ops.iter().rev() {
        match *op {
            Ladder::Create(j) => {
                let m = 1u64 << j;
                if occ & m != 0 {
                    return None;
                }
                sign *= parity(occ & (m - 1));
                occ |= m;
            }
            Ladder::Annihilate(j) => {
                let m = 1u64 << j;
                if occ & m == 0 {
                    return None;
                }
                sign *= parity(occ & (m - 1));
                occ ^= m;
            }
        }
    }
    Some((occ, sign))
}

/// Determinants of one (n_alpha, n_beta) sector; index `ia * n_beta_strings + ib`.
#[derive(Debug, Clone)]
pub struct DeterminantSpace {
    n_orbitals: usize,
    n_alpha: usize,
    n_beta: usize,
    alpha: Vec<u64>,
    beta: Vec<u64>,
    alpha_index: HashMap<u64, usize>,
    beta_index: HashMap<u64, usize>,
}

impl DeterminantSpace {
    pub fn new(n_orbitals: usize, n_alpha: usize, n_beta: usize) -> Self {
        assert!(n_orbitals <= 31, "at most 31 orbitals");
        assert!(n_alpha <= n_orbitals && n_beta <= n_orbitals, "sector outside orbital space");
        let alpha = strings_with_weight(n_orbitals, n_alpha);
        let beta = strings_with_weight(n_orbitals, n_beta);
        let alpha_index = alpha.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        let beta_index = beta.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        DeterminantSpace {
            n_orbitals,
            n_alpha,
            n_beta,
            alpha,
            beta,
            alpha_index,
            beta_index,
        }
    }

    pub fn for_hamiltonian(h: &ActiveSpaceHamiltonian) -> Self {
        Self::new(h.n_orbitals(), h.n_alpha(), h.n_beta())
    }

    pub fn n_orbitals(&self) -> usize {
        self.n_orbitals
    }

    pub fn sector(&self) -> (usize, usize) {
        (self.n_alpha, self.n_beta)
    }

    pub fn dim(&self) -> usize {
        self.alpha.len() * self.beta.len()
    }

    pub fn alpha_strings(&self) -> &[u64] {
        &self.alpha
    }

    pub fn beta_strings(&self) -> &[u64] {
        &self.beta
    }

    #[inline]
    pub fn det(&self, i: usize) -> (u64, u64) {
        let nb = self.beta.len();
        (self.alpha[i / nb], self.beta[i % nb])
    }

    #[inline]
    pub fn index(&self, a: u64, b: u64) -> Option<usize> {
        Some(self.alpha_index.get(&a)? * self.beta.len() + self.beta_index.get(&b)?)
    }

    /// Index of the determinant in the 2N-qubit register.
    #[inline]
    pub fn full_index(&self, i: usize) -> usize {
        let (a, b) = self.det(i);
        (a | b << self.n_orbitals) as usize
    }

    pub fn full_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.dim()).map(|i| self.full_index(i))
    }

    /// Inverse of [`Self::full_index`] for in-sector register indices.
    pub fn from_full_index(&self, full: usize) -> Option<usize> {
        let mask = (1u64 << self.n_orbitals) - 1;
        let full = full as u64;
        self.index(full & mask, full >> self.n_orbitals)
    }

    /// Aufbau determinant (lowest orbitals occupied in both spins).
    pub fn hf_index(&self) -> usize {
        self.index(lowest_string(self.n_alpha), lowest_string(self.n_beta))
            .expect("aufbau determinant is in the sector")
    }

    pub fn label(&self, i: usize) -> String {
        let (a, b) = self.det(i);
        format!("{}|{}", string_label(a, self.n_orbitals), string_label(b, self.n_orbitals))
    }

    /// Applies a ladder product that preserves the sector.
    pub fn apply_ladders(&self, ops: &[Ladder], psi: &[Complex64]) -> Vec<Complex64> {
        let n = self.n_orbitals;
        let mask = (1u64 << n) - 1;
        let mut out = vec![Complex64::default(); psi.len()];
        for (i, amp) in psi.iter().enumerate() {
            if amp.norm_sqr() == 0.0 {
                continue;
            }
            let (a, b) = self.det(i);
            if let Some((occ, sign)) = apply_ladders(a | b << n, ops) {
                let j = self
                    .index(occ & mask, occ >> n)
                    .expect("ladder product leaves the sector");
                out[j] += amp * sign;
            }
        }
        out
    }
}

/// Sparse sector Hamiltonian; column `j` lists `(i, H_ij)` sorted by `i`.
#[derive(Debug, Clone)]
pub struct SectorHamiltonian {
    space: DeterminantSpace,
    columns: Vec<Vec<(usize, f64)>>,
}

impl SectorHamiltonian {
    pub fn new(h: &ActiveSpaceHamiltonian, space: &DeterminantSpace) -> Self {
        let n = h.n_orbitals();
        assert_eq!(n, space.n_orbitals(), "orbital count mismatch");
        let dim = space.dim();

        // H = c + Σ k_pq E_pq + ½ Σ (pq|rs) E_pq E_rs with E = E^α + E^β
        let mut k = DMatrix::zeros(n, n);
        for p in 0..n {
            for q in 0..n {
                k[(p, q)] = h.one_body(p, q) - 0.5 * (0..n).map(|r| h.eri(p, r, r, q)).sum::<f64>();
            }
        }
        let mut nonzero_pq: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); n * n];
        for r in 0..n {
            for s in 0..n {
                for p in 0..n {
                    for q in 0..n {
                        let g = h.eri(p, q, r, s);
                        if g != 0.0 {
                            nonzero_pq[r * n + s].push((p, q, 0.5 * g));
                        }
                    }
                }
            }
        }

        let mut scratch = vec![0.0; dim];
        let mut touched: Vec<usize> = Vec::new();
        let mut columns = Vec::with_capacity(dim);
        for j in 0..dim {
            let (a, b) = space.det(j);
            let mut add = |i: usize, v: f64| {
                if scratch[i] == 0.0 {
                    touched.push(i);
                }
                scratch[i] += v;
            };
            add(j, h.e_core());
            for spin_r in 0..2 {
                for r in 0..n {
                    for s in 0..n {
                        let src = if spin_r == 0 { a } else { b };
                        let Some((s1, sg1)) = hop_string(src, r, s) else {
                            continue;
                        };
                        let (a1, b1) = if spin_r == 0 { (s1, b) } else { (a, s1) };
                        let kv = k[(r, s)];
                        if kv != 0.0 {
                            add(space.index(a1, b1).unwrap(), kv * sg1);
                        }
                        for &(p, q, half_g) in &nonzero_pq[r * n + s] {
                            for spin_p in 0..2 {
                                let src2 = if spin_p == 0 { a1 } else { b1 };
                                let Some((s2, sg2)) = hop_string(src2, p, q) else {
                                    continue;
                                };
                                let (a2, b2) = if spin_p == 0 { (s2, b1) } else { (a1, s2) };
                                add(space.index(a2, b2).unwrap(), half_g * sg1 * sg2);
                            }
                        }
                    }
                }
            }
            touched.sort_unstable();
            touched.dedup();
            let col: Vec<(usize, f64)> = touched
                .iter()
                .map(|&i| (i, std::mem::take(&mut scratch[i])))
                .filter(|(_, v)| *v != 0.0)
                .collect();
            touched.clear();
            columns.push(col);
        }
        SectorHamiltonian {
            space: space.clone(),
            columns,
        }
    }

    pub fn space(&self) -> &DeterminantSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.columns
            .iter()
            .enumerate()
            .map(|(j, col)| col.iter().find(|(i, _)| *i == j).map_or(0.0, |e| e.1))
            .collect()
    }

    pub fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); psi.len()];
        for (j, col) in self.columns.iter().enumerate() {
            let amp = psi[j];
            if amp.norm_sqr() == 0.0 {
                continue;
            }
            for &(i, v) in col {
                out[i] += amp * v;
            }
        }
        out
    }

    pub fn apply_real(&self, psi: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; psi.len()];
        for (j, col) in self.columns.iter().enumerate() {
            let amp = psi[j];
            if amp == 0.0 {
                continue;
            }
            for &(i, v) in col {
                out[i] += amp * v;
            }
        }
        out
    }

    pub fn expectation(&self, psi: &[Complex64]) -> f64 {
        let hpsi = self.apply(psi);
        let num: Complex64 = psi.iter().zip(&hpsi).map(|(a, b)| a.conj() * b).sum();
        let den: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
        num.re / den
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let dim = self.dim();
        let mut m = DMatrix::zeros(dim, dim);
        for (j, col) in self.columns.iter().enumerate() {
            for &(i, v) in col {
                m[(i, j)] = v;
            }
        }
        m
    }
}

/// Dense sector matrix of `h`.
pub fn sector_matrix(h: &ActiveSpaceHamiltonian, space: &DeterminantSpace) -> DMatrix<f64> {
    SectorHamiltonian::new(h, space).to_dense()
}

/// Normalized amplitude vector over one sector's determinants.
#[derive(Debug, Clone, PartialEq)]
pub struct CIVector {
    n_orbitals: usize,
    n_alpha: usize,
    n_beta: usize,
    amplitudes: Vec<Complex64>,
}

impl CIVector {
    /// Normalizes `amplitudes` to unit length.
    pub fn new(space: &DeterminantSpace, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::validation(format!(
                "CI vector length {} does not match sector dimension {}",
                amplitudes.len(),
                space.dim()
            )));
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Numerical("CI vector has zero or non-finite norm".into()));
        }
        let (na, nb) = space.sector();
        Ok(CIVector {
            n_orbitals: space.n_orbitals(),
            n_alpha: na,
            n_beta: nb,
            amplitudes: amplitudes.into_iter().map(|a| a / norm).collect(),
        })
    }

    pub fn from_real(space: &DeterminantSpace, amplitudes: &[f64]) -> Result<Self> {
        Self::new(space, amplitudes.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    /// Restriction of a 2N-qubit register state to a sector.
    pub fn from_register(space: &DeterminantSpace, register: &[Complex64]) -> Result<Self> {
        Self::new(space, space.full_indices().map(|f| register[f]).collect())
    }

    pub fn space(&self) -> DeterminantSpace {
        DeterminantSpace::new(self.n_orbitals, self.n_alpha, self.n_beta)
    }

    pub fn n_orbitals(&self) -> usize {
        self.n_orbitals
    }

    pub fn sector(&self) -> (usize, usize) {
        (self.n_alpha, self.n_beta)
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn overlap(&self, other: &CIVector) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `|<self|other>|²`.
    pub fn fidelity(&self, other: &CIVector) -> f64 {
        self.overlap(other).norm_sqr()
    }

    /// Multiplies by a global phase so amplitude `i` is real and non-negative.
    pub fn with_phase_fixed_at(mut self, i: usize) -> Self {
        let a = self.amplitudes[i];
        if a.norm() > 0.0 {
            let phase = a.conj() / a.norm();
            self.amplitudes.iter_mut().for_each(|x| *x *= phase);
        }
        self
    }

    /// Fixes the phase at the largest-modulus amplitude (lowest index on ties).
    pub fn with_canonical_phase(self) -> Self {
        let mut best = 0;
        for (i, a) in self.amplitudes.iter().enumerate() {
            if a.norm() > self.amplitudes[best].norm() + 1e-12 {
                best = i;
            }
        }
        self.with_phase_fixed_at(best)
    }

    /// Embeds into the 2N-qubit register.
    pub fn to_register(&self) -> Vec<Complex64> {
        let space = self.space();
        let mut out = vec![Complex64::default(); 1 << (2 * self.n_orbitals)];
        for (i, f) in space.full_indices().enumerate() {
            out[f] = self.amplitudes[i];
        }
        out
    }

    /// Determinant label -> `[re, im]`.
    pub fn to_json(&self) -> serde_json::Value {
        let space = self.space();
        let map: BTreeMap<String, [f64; 2]> = (0..space.dim())
            .map(|i| (space.label(i), [self.amplitudes[i].re, self.amplitudes[i].im]))
            .collect();
        serde_json::json!({
            "n_orbitals": self.n_orbitals,
            "n_alpha": self.n_alpha,
            "n_beta": self.n_beta,
            "amplitudes": map,
        })
    }
}
