//! Bitstring choice from an exact ground state.

use nalgebra::DMatrix;

use crate::det::CIVector;
use crate::error::{Error, Result};

/// Rank threshold for singular values of the α×β coefficient matrix.
const RANK_TOL: f64 = 1e-12;

fn coefficient_matrix(fci: &CIVector) -> DMatrix<num_complex::Complex64> {
    let space = fci.space();
    let (na, nb) = (space.alpha_strings().len(), space.beta_strings().len());
    DMatrix::from_fn(na, nb, |i, j| fci.amplitudes()[i * nb + j])
}

/// `(α string, weight)` for every string, weight `Σ_b |C_ab|²`, non-increasing
/// (ties broken by string value).
pub fn schmidt_weights(fci: &CIVector) -> Vec<(u64, f64)> {
    let space = fci.space();
    let c = coefficient_matrix(fci);
    let mut out: Vec<(u64, f64)> = space
        .alpha_strings()
        .iter()
        .enumerate()
        .map(|(i, &a)| (a, c.row(i).iter().map(|v| v.norm_sqr()).sum()))
        .collect();
    out.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
    out
}

/// The `k` heaviest strings with their weights.
pub fn select_bitstrings(fci: &CIVector, k: usize) -> Result<Vec<(u64, f64)>> {
    if k == 0 {
        return Err(Error::validation("need at least one bitstring"));
    }
    let rank = coefficient_matrix(fci)
        .singular_values()
        .iter()
        .filter(|&&s| s > RANK_TOL)
        .count();
    if k > rank {
        return Err(Error::validation(format!(
            "requested {k} bitstrings but the state has Schmidt rank {rank}"
        )));
    }
    Ok(schmidt_weights(fci).into_iter().take(k).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::bundled;
    use crate::hamio::ActiveSpaceHamiltonian;
    use crate::oracle::fci_ground_state;

    #[test]
    fn non_interacting_has_one_dominant_string() {
        let h = ActiveSpaceHamiltonian::from_fn(3, 1, 1, 0.0, |p, q| if p == q { p as f64 } else { 0.0 }, |_, _, _, _| 0.0).unwrap();
        let (_, v) = fci_ground_state(&h, None).unwrap();
        let w = schmidt_weights(&v);
        assert_eq!(w[0].0, 0b001);
        assert!(w[1].1 < 1e-12);
        assert_eq!(select_bitstrings(&v, 1).unwrap().len(), 1);
        assert!(select_bitstrings(&v, 2).is_err());
    }

    #[test]
    fn stretched_pair_has_two_comparable_strings() {
        let h = bundled("stretched_2e2o").unwrap();
        let (_, v) = fci_ground_state(&h, None).unwrap();
        let sel = select_bitstrings(&v, 2).unwrap();
        let strings: Vec<u64> = sel.iter().map(|s| s.0).collect();
        assert_eq!(strings, vec![0b01, 0b10]);
        assert!(sel[1].1 > 0.3, "{sel:?}");
        assert!(sel[0].1 >= sel[1].1);
    }
}
