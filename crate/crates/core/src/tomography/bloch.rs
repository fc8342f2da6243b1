use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{PauliString, QubitOperator};

/// Estimate of `Tr[P ρ]` with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochEntry {
    pub value: f64,
    pub error: f64,
}

/// Pauli expectation values indexed by base-4 string index.
#[derive(Debug, Clone, PartialEq)]
pub struct BlochVector {
    n_qubits: usize,
    shots_per_basis: usize,
    seed: u64,
    entries: Vec<Option<BlochEntry>>,
}

#[derive(Serialize, Deserialize)]
struct BlochJson {
    n_qubits: usize,
    shots_per_basis: usize,
    seed: u64,
    entries: BTreeMap<String, [f64; 2]>,
}

impl BlochVector {
    pub(crate) fn from_parts(n_qubits: usize, shots_per_basis: usize, seed: u64, entries: Vec<Option<BlochEntry>>) -> Self {
        debug_assert_eq!(entries.len(), 1 << (2 * n_qubits));
        BlochVector { n_qubits, shots_per_basis, seed, entries }
    }

    /// Exact-mode vector from `(label, value, error)` triples; unlisted strings are missing.
    pub fn from_labels<'a>(n_qubits: usize, items: impl IntoIterator<Item = (&'a str, f64, f64)>) -> Result<Self> {
        let mut entries = vec![None; 1 << (2 * n_qubits)];
        for (label, value, error) in items {
            let (s, n) = PauliString::parse(label)?;
            if n != n_qubits {
                return Err(Error::validation(format!("label `{label}` is not {n_qubits} qubits long")));
            }
            if !(error >= 0.0) {
                return Err(Error::validation(format!("negative error for `{label}`")));
            }
            entries[s.index(n)] = Some(BlochEntry { value, error });
        }
        Ok(Self::from_parts(n_qubits, 0, 0, entries))
    }

    /// `a_I = 1`, all other entries zero.
    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let mut entries = vec![Some(BlochEntry { value: 0.0, error: 0.0 }); 1 << (2 * n_qubits)];
        entries[0] = Some(BlochEntry { value: 1.0, error: 0.0 });
        Self::from_parts(n_qubits, 0, 0, entries)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Zero in exact mode.
    pub fn shots_per_basis(&self) -> usize {
        self.shots_per_basis
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_exact(&self) -> bool {
        self.shots_per_basis == 0
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn missing_count(&self) -> usize {
        self.entries.iter().filter(|e| e.is_none()).count()
    }

    pub fn get_index(&self, idx: usize) -> Option<BlochEntry> {
        self.entries.get(idx).copied().flatten()
    }

    pub fn value_at(&self, idx: usize) -> Option<f64> {
        self.get_index(idx).map(|e| e.value)
    }

    pub fn get(&self, label: &str) -> Option<BlochEntry> {
        let (s, n) = PauliString::parse(label).ok()?;
        if n != self.n_qubits {
            return None;
        }
        self.get_index(s.index(n))
    }

    /// Values and errors in index order; fails if incomplete.
    pub fn values_and_errors(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let missing = self.missing_count();
        if missing > 0 {
            return Err(Error::IncompleteBloch { missing, total: self.entries.len() });
        }
        Ok(self.entries.iter().map(|e| e.map(|e| (e.value, e.error)).unwrap()).unzip())
    }

    /// `Σ_P c_P a_P` for an operator on the same register.
    pub fn expectation(&self, op: &QubitOperator<f64>) -> Result<f64> {
        if op.n_qubits() != self.n_qubits {
            return Err(Error::validation("operator and Bloch vector sizes differ"));
        }
        let mut total = num_complex::Complex64::default();
        for (s, c) in op.terms() {
            let idx = s.index(self.n_qubits);
            let a = self.value_at(idx).ok_or(Error::IncompleteBloch { missing: 1, total: self.entries.len() })?;
            total += c * a;
        }
        Ok(total.re)
    }

    /// Identity pinned to 1, errors non-negative, `|a| <= 1 + 3ε`.
    pub fn check_invariants(&self) -> Result<()> {
        match self.get_index(0) {
            Some(BlochEntry { value, error }) if value == 1.0 && error == 0.0 => {}
            _ => return Err(Error::Numerical("identity entry of Bloch vector is not exactly 1".into())),
        }
        for (idx, e) in self.entries.iter().enumerate() {
            if let Some(e) = e {
                if !(e.error >= 0.0) || e.value.abs() > 1.0 + 3.0 * e.error + 1e-12 {
                    return Err(Error::Numerical(format!(
                        "Bloch entry {} = {} ± {} out of range",
                        PauliString::from_index(idx, self.n_qubits).label(self.n_qubits),
                        e.value,
                        e.error
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let entries = self
            .entries
            .iter()
            .enumerate()
            .filter_map(|(idx, e)| {
                e.map(|e| (PauliString::from_index(idx, self.n_qubits).label(self.n_qubits), [e.value, e.error]))
            })
            .collect();
        serde_json::to_value(BlochJson {
            n_qubits: self.n_qubits,
            shots_per_basis: self.shots_per_basis,
            seed: self.seed,
            entries,
        })
        .expect("plain data serializes")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let raw: BlochJson = serde_json::from_value(v.clone())?;
        let mut b = Self::from_labels(raw.n_qubits, raw.entries.iter().map(|(k, v)| (k.as_str(), v[0], v[1])))?;
        b.shots_per_basis = raw.shots_per_basis;
        b.seed = raw.seed;
        Ok(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let b = BlochVector::from_labels(2, [("II", 1.0, 0.0), ("ZX", 0.25, 0.01), ("YI", -0.5, 0.02)]).unwrap();
        let back = BlochVector::from_json(&b.to_json()).unwrap();
        assert_eq!(back, b);
        assert_eq!(b.missing_count(), 13);
        assert_eq!(b.get("ZX").unwrap().value, 0.25);
        assert!(b.get("ZZZ").is_none());
    }

    #[test]
    fn invariants() {
        BlochVector::maximally_mixed(2).check_invariants().unwrap();
        let bad = BlochVector::from_labels(1, [("I", 1.0, 0.0), ("Z", 1.5, 0.01)]).unwrap();
        assert!(bad.check_invariants().is_err());
    }
}
