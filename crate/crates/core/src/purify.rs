//! Sector projection of reconstructed densities and CI-vector extraction.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::det::{CIVector, DeterminantSpace, SectorHamiltonian};
use crate::error::{Error, Result};
use crate::forging::{ForgedAnsatz, Preparation};
use crate::hamio::ActiveSpaceHamiltonian;
use crate::tomography::{forged_tomography_sweep, reconstruct_density, DensityMatrix, ForgedTomography, TomographyOptions};

/// Projected traces below this mean the sector was lost to noise.
pub const MIN_SECTOR_TRACE: f64 = 1e-10;
/// Reference columns with smaller norm trigger the eigenvector fallback.
pub const MIN_REFERENCE_NORM: f64 = 1e-8;

/// Unit-trace density restricted to one `(n_alpha, n_beta)` determinant sector.
#[derive(Debug, Clone)]
pub struct SectorDensity {
    space: DeterminantSpace,
    matrix: DMatrix<Complex64>,
    in_sector_trace: f64,
}

impl SectorDensity {
    /// Renormalizes `matrix` (indexed like `space`) to unit trace.
    pub fn new(space: DeterminantSpace, matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != space.dim() || matrix.ncols() != space.dim() {
            return Err(Error::validation(format!(
                "sector density is {}x{} but the sector has {} determinants",
                matrix.nrows(),
                matrix.ncols(),
                space.dim()
            )));
        }
        let trace = matrix.trace().re;
        if !(trace >= MIN_SECTOR_TRACE) {
            return Err(Error::SectorDestroyed { trace });
        }
        let matrix = (&matrix + matrix.adjoint()) * Complex64::new(0.5 / trace, 0.0);
        Ok(SectorDensity { space, matrix, in_sector_trace: trace })
    }

    pub fn from_ci(ci: &CIVector) -> Self {
        let v = nalgebra::DVector::from_column_slice(ci.amplitudes());
        SectorDensity { space: ci.space(), matrix: &v * v.adjoint(), in_sector_trace: 1.0 }
    }

    pub fn space(&self) -> &DeterminantSpace {
        &self.space
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// Trace of the block before renormalization.
    pub fn in_sector_trace(&self) -> f64 {
        self.in_sector_trace
    }

    /// `Tr[H ρ]`.
    pub fn energy(&self, h: &SectorHamiltonian) -> f64 {
        let mut total = Complex64::default();
        for j in 0..self.space.dim() {
            let col = h.apply(&unit(self.space.dim(), j));
            for (i, v) in col.iter().enumerate() {
                if v.norm_sqr() != 0.0 {
                    total += v * self.matrix[(j, i)];
                }
            }
        }
        total.re
    }

    /// Zero-padded 2N-qubit density.
    pub fn to_full(&self) -> DensityMatrix {
        let n = self.space.n_orbitals();
        let dim = 1usize << (2 * n);
        let idx: Vec<usize> = self.space.full_indices().collect();
        let mut m = DMatrix::zeros(dim, dim);
        for (i, &fi) in idx.iter().enumerate() {
            for (j, &fj) in idx.iter().enumerate() {
                m[(fi, fj)] = self.matrix[(i, j)];
            }
        }
        DensityMatrix::from_matrix(m).expect("power-of-two register")
    }
}

fn unit(dim: usize, j: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::default(); dim];
    v[j] = Complex64::new(1.0, 0.0);
    v
}

/// Keeps the in-sector block of a 2N-qubit density and renormalizes it.
pub fn project_sector(rho: &DensityMatrix, sector: (usize, usize)) -> Result<SectorDensity> {
    if rho.n_qubits() % 2 != 0 {
        return Err(Error::validation("sector projection needs an even (2N-qubit) register"));
    }
    let n = rho.n_qubits() / 2;
    if sector.0 > n || sector.1 > n {
        return Err(Error::validation("sector outside the orbital space"));
    }
    let space = DeterminantSpace::new(n, sector.0, sector.1);
    let idx: Vec<usize> = space.full_indices().collect();
    let m = DMatrix::from_fn(idx.len(), idx.len(), |i, j| rho.matrix()[(idx[i], idx[j])]);
    SectorDensity::new(space, m)
}

/// Per-sector transition operators `M_kl ≈ U|x_k><x_l|U†` from a forged
/// tomography: `M_kk = ρ_{x_k}`, `M_kl = Σ_p (i^p / 2) ρ_{φ^p_kl}`.
pub fn transition_densities(tomo: &ForgedTomography) -> Result<Vec<Vec<DMatrix<Complex64>>>> {
    let k = tomo.ansatz.n_bitstrings();
    let rhos = tomo.densities()?;
    let dim = 1usize << tomo.ansatz.n_qubits();
    let mut m = vec![vec![DMatrix::zeros(dim, dim); k]; k];
    for (prep, rho) in &rhos {
        match *prep {
            Preparation::Basis(i) => m[i][i] = rho.matrix().clone(),
            Preparation::Superposition { k: i, l, p } => {
                m[i][l] += rho.matrix() * (crate::pauli::i_pow::<f64>(p) * 0.5);
            }
        }
    }
    for i in 0..k {
        for l in i + 1..k {
            m[l][i] = m[i][l].adjoint();
        }
    }
    Ok(m)
}

/// Sector block of `Σ_kl λ_k λ_l M_kl ⊗ M_kl`, renormalized.
pub fn forged_sector_density(tomo: &ForgedTomography) -> Result<SectorDensity> {
    let w = tomo.ansatz.n_electrons_per_spin();
    let space = DeterminantSpace::new(tomo.ansatz.n_qubits(), w, w);
    let m = transition_densities(tomo)?;
    let lam = tomo.ansatz.schmidt();
    let dim = space.dim();
    let dets: Vec<(usize, usize)> = (0..dim).map(|i| {
        let (a, b) = space.det(i);
        (a as usize, b as usize)
    }).collect();
    let mut rho = DMatrix::zeros(dim, dim);
    for (k, row) in m.iter().enumerate() {
        for (l, mkl) in row.iter().enumerate() {
            let c = lam[k] * lam[l];
            if c == 0.0 {
                continue;
            }
            for (i, &(ai, bi)) in dets.iter().enumerate() {
                for (j, &(aj, bj)) in dets.iter().enumerate() {
                    rho[(i, j)] += mkl[(ai, aj)] * mkl[(bi, bj)] * c;
                }
            }
        }
    }
    SectorDensity::new(space, rho)
}

/// Full 2N-qubit `Σ_kl λ_k λ_l M_kl ⊗ M_kl` (small registers only).
pub fn forged_full_density(tomo: &ForgedTomography) -> Result<DensityMatrix> {
    let n = tomo.ansatz.n_qubits();
    if n > 5 {
        return Err(Error::Capacity { what: "full forged density (qubits per sector)", dim: n, limit: 5 });
    }
    let m = transition_densities(tomo)?;
    let lam = tomo.ansatz.schmidt();
    let d = 1usize << n;
    let mut rho = DMatrix::zeros(d * d, d * d);
    for (k, row) in m.iter().enumerate() {
        for (l, mkl) in row.iter().enumerate() {
            let c = lam[k] * lam[l];
            if c == 0.0 {
                continue;
            }
            for i in 0..d * d {
                for j in 0..d * d {
                    rho[(i, j)] += mkl[(i % d, j % d)] * mkl[(i / d, j / d)] * c;
                }
            }
        }
    }
    DensityMatrix::from_matrix(rho)
}

/// Extracted pure state with provenance flags.
#[derive(Debug, Clone)]
pub struct PurifiedState {
    pub ci: CIVector,
    pub reference: usize,
    /// The reference column vanished and the dominant eigenvector was used.
    pub fallback: bool,
}

/// Normalized reference column `ρ[:, ref]` (that is, `ψ ψ*_ref`), phase fixed so
/// the reference amplitude is real and positive.
pub fn extract_ci_vector(rho: &SectorDensity, reference: usize) -> Result<PurifiedState> {
    let dim = rho.space().dim();
    if reference >= dim {
        return Err(Error::validation(format!("reference index {reference} outside sector of {dim}")));
    }
    let col: Vec<Complex64> = rho.matrix().column(reference).iter().copied().collect();
    let norm = col.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if norm > MIN_REFERENCE_NORM {
        let ci = CIVector::new(rho.space(), col)?.with_phase_fixed_at(reference);
        return Ok(PurifiedState { ci, reference, fallback: false });
    }
    log::warn!("reference column norm {norm:e} too small; using dominant eigenvector");
    let eig = SymmetricEigen::new(rho.matrix().clone());
    let top = (0..dim)
        .max_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(b.cmp(&a)))
        .expect("non-empty sector");
    let v: Vec<Complex64> = eig.eigenvectors.column(top).iter().copied().collect();
    let ci = CIVector::new(rho.space(), v)?;
    let ci = if ci.amplitudes()[reference].norm() > MIN_REFERENCE_NORM {
        ci.with_phase_fixed_at(reference)
    } else {
        ci.with_canonical_phase()
    };
    Ok(PurifiedState { ci, reference, fallback: true })
}

/// One seeded tomography run scored before and after purification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergySample {
    pub seed: u64,
    pub raw_energy: f64,
    pub purified_energy: f64,
    pub fallback: bool,
}

/// Raw `Tr[H ρ]` and purified `<ψ|H|ψ>` per seed (parallel over seeds, order kept).
pub fn purified_energy_samples(
    ansatz: &ForgedAnsatz,
    ham: &ActiveSpaceHamiltonian,
    shots: usize,
    seeds: &[u64],
    options: &TomographyOptions,
) -> Result<Vec<EnergySample>> {
    let w = ansatz.n_electrons_per_spin();
    if ham.n_orbitals() != ansatz.n_qubits() || ham.n_alpha() != w || ham.n_beta() != w {
        return Err(Error::validation("ansatz does not match the Hamiltonian sector"));
    }
    let space = DeterminantSpace::for_hamiltonian(ham);
    let sh = SectorHamiltonian::new(ham, &space);
    seeds
        .par_iter()
        .map(|&seed| {
            let tomo = forged_tomography_sweep(ansatz, shots, seed, options)?;
            let rho = forged_sector_density(&tomo)?;
            let pure = extract_ci_vector(&rho, space.hf_index())?;
            Ok(EnergySample {
                seed,
                raw_energy: rho.energy(&sh),
                purified_energy: sh.expectation(pure.ci.amplitudes()),
                fallback: pure.fallback,
            })
        })
        .collect()
}

pub fn write_samples_csv(samples: &[EnergySample], w: impl std::io::Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for s in samples {
        out.serialize(s)?;
    }
    out.flush()?;
    Ok(())
}

/// Density of one reconstructed preparation (used by diagnostics).
pub fn preparation_density(tomo: &ForgedTomography, prep: &Preparation) -> Result<DensityMatrix> {
    let b = tomo
        .bloch
        .get(prep)
        .ok_or_else(|| Error::validation(format!("no Bloch vector for {}", prep.label())))?;
    reconstruct_density(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::bundled;
    use crate::simcore::HopLayout;

    fn ansatz4() -> ForgedAnsatz {
        ForgedAnsatz::new(4, vec![0b0011, 0b0101], vec![0.95, -0.31], HopLayout::default_for(4), vec![0.3, -0.2]).unwrap()
    }

    #[test]
    fn exact_forged_density_is_the_ci_projector() {
        let a = ansatz4();
        let tomo = forged_tomography_sweep(&a, 0, 0, &Default::default()).unwrap();
        let rho = forged_sector_density(&tomo).unwrap();
        let want = SectorDensity::from_ci(&a.ci_vector().unwrap());
        assert!((rho.matrix() - want.matrix()).camax() < 1e-10);
        assert!((rho.in_sector_trace() - 1.0).abs() < 1e-10);
        // direct sector assembly equals projecting the full 2N-qubit density
        let full = forged_full_density(&tomo).unwrap();
        let projected = project_sector(&full, (2, 2)).unwrap();
        assert!((projected.matrix() - rho.matrix()).camax() < 1e-12);
    }

    #[test]
    fn sampled_sector_assembly_matches_projection() {
        let a = ansatz4();
        let tomo = forged_tomography_sweep(&a, 256, 9, &Default::default()).unwrap();
        let full = forged_full_density(&tomo).unwrap();
        let projected = project_sector(&full, (2, 2)).unwrap();
        let direct = forged_sector_density(&tomo).unwrap();
        assert!((projected.matrix() - direct.matrix()).camax() < 1e-12);
    }

    #[test]
    fn projection_of_pure_and_mixed_states() {
        let a = ansatz4();
        let ci = a.ci_vector().unwrap();
        let full = DensityMatrix::from_pure(&ci.to_register()).unwrap();
        let p = project_sector(&full, (2, 2)).unwrap();
        assert!((p.matrix() - SectorDensity::from_ci(&ci).matrix()).camax() < 1e-12);

        // 16 labels, two of them in the (1, 0) sector
        let mixed = DensityMatrix::maximally_mixed(4);
        let p = project_sector(&mixed, (1, 0)).unwrap();
        assert_eq!(p.space().dim(), 2);
        assert!((p.matrix()[(0, 0)].re - 0.5).abs() < 1e-15 && (p.matrix()[(1, 1)].re - 0.5).abs() < 1e-15);

        let empty = DensityMatrix::from_pure(&crate::simcore::Statevector::<f64>::zero_state(4).into_amplitudes()).unwrap();
        assert!(matches!(project_sector(&empty, (1, 1)), Err(Error::SectorDestroyed { .. })));
    }

    #[test]
    fn leakage_is_removed() {
        let a = ansatz4();
        let ci = a.ci_vector().unwrap();
        let pure = DensityMatrix::from_pure(&ci.to_register()).unwrap();
        let mut leak = DMatrix::zeros(256, 256);
        leak[(0b0001_0001, 0b0001_0001)] = Complex64::new(1.0, 0.0);
        let noisy = DensityMatrix::from_matrix(pure.matrix() * Complex64::new(0.95, 0.0) + leak * Complex64::new(0.05, 0.0)).unwrap();
        let p = project_sector(&noisy, (2, 2)).unwrap();
        assert!((p.in_sector_trace() - 0.95).abs() < 1e-12);
        let full = p.to_full();
        for i in 0..256 {
            if p.space().from_full_index(i).is_none() {
                assert_eq!(full.matrix().row(i).iter().map(|v| v.norm()).sum::<f64>(), 0.0);
            }
        }
    }

    #[test]
    fn extraction_recovers_pure_state() {
        let ci = ansatz4().ci_vector().unwrap().with_phase_fixed_at(DeterminantSpace::new(4, 2, 2).hf_index());
        let rho = SectorDensity::from_ci(&ci);
        let hf = rho.space().hf_index();
        let got = extract_ci_vector(&rho, hf).unwrap();
        assert!(!got.fallback);
        assert!((got.ci.fidelity(&ci) - 1.0).abs() < 1e-12);
        for (a, b) in got.ci.amplitudes().iter().zip(ci.amplitudes()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn extraction_with_small_noise() {
        use rand::Rng;
        let ci = ansatz4().ci_vector().unwrap();
        let clean = SectorDensity::from_ci(&ci);
        let dim = clean.space().dim();
        let mut rng = crate::rng::stream_rng(4, 0);
        let mut e = DMatrix::from_fn(dim, dim, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        e = &e + e.adjoint();
        let spectral = e.clone().symmetric_eigenvalues().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        e *= Complex64::new(1e-3 / spectral, 0.0);
        let noisy = SectorDensity::new(clean.space().clone(), clean.matrix() + e).unwrap();
        let got = extract_ci_vector(&noisy, clean.space().hf_index()).unwrap();
        assert!(got.ci.fidelity(&ci) >= 0.999);
    }

    #[test]
    fn zero_reference_column_falls_back() {
        let space = DeterminantSpace::new(2, 1, 1);
        let mut amps = vec![Complex64::default(); 4];
        amps[3] = Complex64::new(0.0, 1.0);
        let ci = CIVector::new(&space, amps).unwrap();
        let rho = SectorDensity::from_ci(&ci);
        let got = extract_ci_vector(&rho, 0).unwrap();
        assert!(got.fallback);
        assert!((got.ci.fidelity(&ci) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_samples_agree() {
        let h = bundled("butadiene_4e4o").unwrap();
        let a = ansatz4();
        let s = purified_energy_samples(&a, &h, 0, &[1], &Default::default()).unwrap();
        let sh = SectorHamiltonian::new(&h, &DeterminantSpace::for_hamiltonian(&h));
        let e = sh.expectation(a.ci_vector().unwrap().amplitudes());
        assert!((s[0].raw_energy - e).abs() < 1e-10);
        assert!((s[0].purified_energy - e).abs() < 1e-10);
    }
}
