//! Active-space Hamiltonians: storage, FCIDUMP I/O and the opposite-spin factorization.

mod factorize;
mod fcidump;

pub use factorize::{spin_factorize, SpinFactorizedHamiltonian, SpinTerm};
pub use fcidump::{parse_fcidump, read_fcidump, write_fcidump};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Symmetry tolerance for integral validation.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Second-quantized Hamiltonian over `n_orbitals` spatial orbitals.
///
/// Two-electron integrals are in chemists' notation `(pq|rs)` and stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveSpaceHamiltonian {
    n_orbitals: usize,
    n_alpha: usize,
    n_beta: usize,
    h1: DMatrix<f64>,
    h2: Vec<f64>,
    e_core: f64,
}

impl ActiveSpaceHamiltonian {
    pub fn new(
        n_orbitals: usize,
        n_alpha: usize,
        n_beta: usize,
        h1: DMatrix<f64>,
        h2: Vec<f64>,
        e_core: f64,
    ) -> Result<Self> {
        let ham = ActiveSpaceHamiltonian {
            n_orbitals,
            n_alpha,
            n_beta,
            h1,
            h2,
            e_core,
        };
        ham.validate()?;
        Ok(ham)
    }

    /// Builds a Hamiltonian from a closure over the unique integrals, filling every
    /// symmetry-equivalent slot.
    pub fn from_fn(
        n_orbitals: usize,
        n_alpha: usize,
        n_beta: usize,
        e_core: f64,
        one: impl Fn(usize, usize) -> f64,
        two: impl Fn(usize, usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let n = n_orbitals;
        let mut h1 = DMatrix::zeros(n, n);
        for p in 0..n {
            for q in 0..=p {
                let v = one(p, q);
                h1[(p, q)] = v;
                h1[(q, p)] = v;
            }
        }
        let mut h2 = vec![0.0; n.pow(4)];
        for (p, q, r, s) in unique_quartets(n) {
            let v = two(p, q, r, s);
            for idx in symmetric_slots(n, p, q, r, s) {
                h2[idx] = v;
            }
        }
        Self::new(n_orbitals, n_alpha, n_beta, h1, h2, e_core)
    }

    fn validate(&self) -> Result<()> {
        let n = self.n_orbitals;
        if n == 0 || n > 31 {
            return Err(Error::validation(format!("orbital count {n} outside 1..=31")));
        }
        if self.n_alpha > n || self.n_beta > n {
            return Err(Error::validation(format!(
                "electron counts ({}, {}) exceed {} orbitals",
                self.n_alpha, self.n_beta, n
            )));
        }
        if self.h1.nrows() != n || self.h1.ncols() != n {
            return Err(Error::validation("one-electron integral shape mismatch"));
        }
        if self.h2.len() != n.pow(4) {
            return Err(Error::validation("two-electron integral shape mismatch"));
        }
        for p in 0..n {
            for q in 0..n {
                if (self.h1[(p, q)] - self.h1[(q, p)]).abs() > SYMMETRY_TOL {
                    return Err(Error::validation(format!("h1 not symmetric at ({p},{q})")));
                }
            }
        }
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        let v = self.eri(p, q, r, s);
                        let perms = [self.eri(q, p, r, s), self.eri(p, q, s, r), self.eri(r, s, p, q)];
                        if perms.iter().any(|w| (w - v).abs() > SYMMETRY_TOL) {
                            return Err(Error::validation(format!(
                                "h2 lacks 8-fold symmetry at ({p}{q}|{r}{s})"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn n_orbitals(&self) -> usize {
        self.n_orbitals
    }

    pub fn n_alpha(&self) -> usize {
        self.n_alpha
    }

    pub fn n_beta(&self) -> usize {
        self.n_beta
    }

    pub fn n_electrons(&self) -> usize {
        self.n_alpha + self.n_beta
    }

    pub fn e_core(&self) -> f64 {
        self.e_core
    }

    pub fn h1(&self) -> &DMatrix<f64> {
        &self.h1
    }

    #[inline]
    pub fn one_body(&self, p: usize, q: usize) -> f64 {
        self.h1[(p, q)]
    }

    /// `(pq|rs)`.
    #[inline]
    pub fn eri(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        let n = self.n_orbitals;
        self.h2[((p * n + q) * n + r) * n + s]
    }

    /// Same integrals with a different electron count.
    pub fn with_electrons(&self, n_alpha: usize, n_beta: usize) -> Result<Self> {
        let mut out = self.clone();
        out.n_alpha = n_alpha;
        out.n_beta = n_beta;
        out.validate()?;
        Ok(out)
    }

    /// Multiplies every integral (and the constant) by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.h1 *= factor;
        out.h2.iter_mut().for_each(|v| *v *= factor);
        out.e_core *= factor;
        out
    }

    /// Sum of two Hamiltonians over the same orbitals and electrons.
    pub fn added(&self, other: &Self) -> Result<Self> {
        if self.n_orbitals != other.n_orbitals
            || self.n_alpha != other.n_alpha
            || self.n_beta != other.n_beta
        {
            return Err(Error::validation("cannot add Hamiltonians over different spaces"));
        }
        let mut out = self.clone();
        out.h1 += &other.h1;
        out.h2.iter_mut().zip(&other.h2).for_each(|(a, b)| *a += b);
        out.e_core += other.e_core;
        Ok(out)
    }

    /// Frozen-core projection onto the orbital window `[n_core, n_core + n_active)`;
    /// the first `n_core` orbitals are doubly occupied.
    pub fn frozen_core(&self, n_core: usize, n_active: usize) -> Result<Self> {
        let n = self.n_orbitals;
        if n_core + n_active > n {
            return Err(Error::validation(format!(
                "window [{n_core}, {}) exceeds {n} orbitals",
                n_core + n_active
            )));
        }
        if self.n_alpha < n_core || self.n_beta < n_core {
            return Err(Error::validation("core larger than the electron count"));
        }
        let (na, nb) = (self.n_alpha - n_core, self.n_beta - n_core);
        if na > n_active || nb > n_active {
            return Err(Error::validation("active window too small for the active electrons"));
        }
        let mut e = self.e_core;
        for i in 0..n_core {
            e += 2.0 * self.one_body(i, i);
            for j in 0..n_core {
                e += 2.0 * self.eri(i, i, j, j) - self.eri(i, j, j, i);
            }
        }
        let off = n_core;
        ActiveSpaceHamiltonian::from_fn(
            n_active,
            na,
            nb,
            e,
            |p, q| {
                let (p, q) = (p + off, q + off);
                self.one_body(p, q)
                    + (0..n_core)
                        .map(|i| 2.0 * self.eri(p, q, i, i) - self.eri(p, i, i, q))
                        .sum::<f64>()
            },
            |p, q, r, s| self.eri(p + off, q + off, r + off, s + off),
        )
    }
}

/// Unique `(pq|rs)` quartets with p ≥ q, r ≥ s and pq ≥ rs (compound index).
pub(crate) fn unique_quartets(n: usize) -> impl Iterator<Item = (usize, usize, usize, usize)> {
    (0..n).flat_map(move |p| {
        (0..=p).flat_map(move |q| {
            let pq = p * (p + 1) / 2 + q;
            (0..n).flat_map(move |r| {
                (0..=r).filter_map(move |s| {
                    let rs = r * (r + 1) / 2 + s;
                    (pq >= rs).then_some((p, q, r, s))
                })
            })
        })
    })
}

/// Flat indices of all eight permutations of `(pq|rs)`.
pub(crate) fn symmetric_slots(n: usize, p: usize, q: usize, r: usize, s: usize) -> [usize; 8] {
    let idx = |a: usize, b: usize, c: usize, d: usize| ((a * n + b) * n + c) * n + d;
    [
        idx(p, q, r, s),
        idx(q, p, r, s),
        idx(p, q, s, r),
        idx(q, p, s, r),
        idx(r, s, p, q),
        idx(s, r, p, q),
        idx(r, s, q, p),
        idx(s, r, q, p),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_asymmetric_one_body() {
        let mut h1 = DMatrix::zeros(2, 2);
        h1[(0, 1)] = 0.1;
        let err = ActiveSpaceHamiltonian::new(2, 1, 1, h1, vec![0.0; 16], 0.0).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn rejects_too_many_electrons() {
        let err = ActiveSpaceHamiltonian::new(1, 2, 0, DMatrix::zeros(1, 1), vec![0.0], 0.0).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn unique_quartet_count() {
        // M(M+1)/2 with M = n(n+1)/2
        for n in 1..6 {
            let m = n * (n + 1) / 2;
            assert_eq!(unique_quartets(n).count(), m * (m + 1) / 2);
        }
    }

    #[test]
    fn frozen_core_with_no_core_is_identity() {
        let h = crate::fixtures::random_hamiltonian(3, 1, 1, 5);
        assert_eq!(h.frozen_core(0, 3).unwrap(), h);
    }
}
