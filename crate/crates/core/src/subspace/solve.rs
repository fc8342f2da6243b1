use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::SubspaceProblem;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceSolution {
    /// Ascending.
    pub energies: Vec<f64>,
    /// Column `i` expands state `i` over the excitation basis.
    #[serde(skip)]
    pub coefficients: DMatrix<Complex64>,
    pub retained_rank: usize,
}

fn sorted_hermitian(m: DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

/// Canonical orthogonalization: drop overlap eigenvalues below `cutoff`,
/// diagonalize `X† H X` with `X = U_kept Λ^{-1/2}`.
pub fn solve_generalized(problem: &SubspaceProblem, cutoff: f64) -> Result<SubspaceSolution> {
    if !(cutoff > 0.0) {
        return Err(Error::Config(format!("overlap cutoff must be positive, got {cutoff}")));
    }
    let m = problem.dim();
    if problem.s.nrows() != m || problem.h.ncols() != m || problem.s.ncols() != m {
        return Err(Error::validation("H and S shapes differ"));
    }
    let (svals, svecs) = sorted_hermitian(problem.s.clone());
    let kept: Vec<usize> = (0..m).filter(|&i| svals[i] > cutoff).collect();
    if kept.is_empty() {
        return Err(Error::DegenerateSubspace { cutoff });
    }
    let x = DMatrix::from_fn(m, kept.len(), |r, c| svecs[(r, kept[c])] / svals[kept[c]].sqrt());
    let hp = x.adjoint() * &problem.h * &x;
    let hp = (&hp + hp.adjoint()) * Complex64::new(0.5, 0.0);
    let (energies, vecs) = sorted_hermitian(hp);
    Ok(SubspaceSolution { energies, coefficients: x * vecs, retained_rank: kept.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    #[test]
    fn identity_overlap_is_plain_eigenproblem() {
        let h = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.5), c(0.5), c(-1.0)]);
        let p = SubspaceProblem { h, s: DMatrix::identity(2, 2), labels: vec![] };
        let sol = solve_generalized(&p, 1e-8).unwrap();
        assert!((sol.energies[0] + 1.25f64.sqrt()).abs() < 1e-12);
        assert_eq!(sol.retained_rank, 2);
    }

    #[test]
    fn duplicated_vector_drops_rank() {
        let h = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.5), c(0.5), c(-1.0)]);
        let p = SubspaceProblem { h: h.clone(), s: DMatrix::identity(2, 2), labels: vec![] };
        let base = solve_generalized(&p, 1e-8).unwrap();
        // third basis vector equal to the second
        let t = DMatrix::from_row_slice(2, 3, &[c(1.0), c(0.0), c(0.0), c(0.0), c(1.0), c(1.0)]);
        let p3 = SubspaceProblem { h: t.adjoint() * &h * &t, s: t.adjoint() * &t, labels: vec![] };
        let sol = solve_generalized(&p3, 1e-8).unwrap();
        assert_eq!(sol.retained_rank, 2);
        for (a, b) in base.energies.iter().zip(&sol.energies) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn fully_degenerate_overlap_errors() {
        let p = SubspaceProblem { h: DMatrix::identity(2, 2), s: DMatrix::zeros(2, 2), labels: vec![] };
        assert!(matches!(solve_generalized(&p, 1e-8), Err(Error::DegenerateSubspace { .. })));
    }
}
