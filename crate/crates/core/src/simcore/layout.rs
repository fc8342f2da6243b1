//! Brick-wall hop layouts and gate/circuit accounting.

use serde::{Deserialize, Serialize};

use super::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Hop counts giving one parameter per hop on the 2/4/6/8-qubit registers.
pub fn default_hop_count(n_qubits: usize) -> usize {
    match n_qubits {
        2 => 1,
        4 => 2,
        6 => 6,
        8 => 12,
        n => n.saturating_sub(1),
    }
}

/// Ordered hop placements on adjacent qubit pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HopLayout {
    pub n_qubits: usize,
    pub pairs: Vec<[usize; 2]>,
}

impl HopLayout {
    /// Alternating even/odd layers of adjacent pairs, truncated after `n_hops`.
    pub fn brick_wall(n_qubits: usize, n_hops: usize) -> Result<Self> {
        if n_hops > 0 && n_qubits < 2 {
            return Err(Error::validation("hop gates need at least two qubits"));
        }
        let mut pairs = Vec::with_capacity(n_hops);
        let mut layer = 0;
        while pairs.len() < n_hops {
            let mut q = layer % 2;
            while q + 1 < n_qubits && pairs.len() < n_hops {
                pairs.push([q, q + 1]);
                q += 2;
            }
            layer += 1;
        }
        Ok(HopLayout { n_qubits, pairs })
    }

    pub fn default_for(n_qubits: usize) -> Self {
        Self::brick_wall(n_qubits, default_hop_count(n_qubits)).expect("default layout is valid")
    }

    pub fn n_hops(&self) -> usize {
        self.pairs.len()
    }

    pub fn validate(&self) -> Result<()> {
        for &[a, b] in &self.pairs {
            if a >= self.n_qubits || b >= self.n_qubits || a.abs_diff(b) != 1 {
                return Err(Error::validation(format!(
                    "hop pair ({a}, {b}) is not an adjacent pair of a {}-qubit register",
                    self.n_qubits
                )));
            }
        }
        Ok(())
    }

    /// `U(θ)`: one hop per pair, in layout order.
    pub fn circuit<T: Real>(&self, theta: &[T]) -> Result<Circuit<T>> {
        if theta.len() != self.pairs.len() {
            return Err(Error::validation(format!(
                "layout has {} hops but {} angles were given",
                self.pairs.len(),
                theta.len()
            )));
        }
        Circuit::from_gates(
            self.n_qubits,
            self.pairs
                .iter()
                .zip(theta)
                .map(|(&qubits, &theta)| Gate::Hop { qubits, theta })
                .collect(),
        )
    }
}

/// Gate and circuit totals for one forged ansatz.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceCount {
    pub n_qubits: usize,
    pub n_hops: usize,
    pub n_init_unitaries: usize,
    pub n_bitstrings: usize,
    pub n_parameters: usize,
    pub n_preparations: usize,
    /// Accounting estimate only.
    pub single_qubit_gates: usize,
    pub two_qubit_gates: usize,
    pub n_tomography_circuits: usize,
}

// per-block costs: init unitary 4 single + 1 CNOT, hop 4 single + 3 CNOT,
// measurement 2 single per qubit
const INIT_SINGLE: usize = 4;
const INIT_TWO: usize = 1;
const HOP_SINGLE: usize = 4;
const HOP_TWO: usize = 3;
const MEASURE_SINGLE: usize = 2;

pub fn count_resources(layout: &HopLayout, n_bitstrings: usize) -> ResourceCount {
    let n = layout.n_qubits;
    let h = layout.n_hops();
    let u = 1;
    let pairs = n_bitstrings * n_bitstrings.saturating_sub(1) / 2;
    let n_preparations = n_bitstrings + 4 * pairs;
    ResourceCount {
        n_qubits: n,
        n_hops: h,
        n_init_unitaries: u,
        n_bitstrings,
        n_parameters: h + n_bitstrings,
        n_preparations,
        single_qubit_gates: INIT_SINGLE * u + HOP_SINGLE * h + MEASURE_SINGLE * n,
        two_qubit_gates: INIT_TWO * u + HOP_TWO * h,
        n_tomography_circuits: n_preparations * 3usize.pow(n as u32),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brick_wall_layers() {
        let l = HopLayout::brick_wall(6, 6).unwrap();
        assert_eq!(l.pairs, vec![[0, 1], [2, 3], [4, 5], [1, 2], [3, 4], [0, 1]]);
        assert_eq!(HopLayout::brick_wall(2, 3).unwrap().pairs, vec![[0, 1]; 3]);
        assert!(HopLayout::brick_wall(1, 1).is_err());
        for n in [2, 4, 6, 8] {
            HopLayout::default_for(n).validate().unwrap();
        }
    }

    #[test]
    fn angle_count_checked() {
        assert!(HopLayout::default_for(4).circuit(&[0.1f64]).is_err());
        assert_eq!(HopLayout::default_for(4).circuit(&[0.1f64, 0.2]).unwrap().len(), 2);
    }

    #[test]
    fn two_bitstring_counts() {
        let r = count_resources(&HopLayout::default_for(2), 2);
        assert_eq!((r.two_qubit_gates, r.n_tomography_circuits, r.n_parameters), (4, 54, 3));
        assert_eq!(r.n_preparations, 6);
        assert_eq!(count_resources(&HopLayout::default_for(2), 1).n_tomography_circuits, 9);
    }
}
