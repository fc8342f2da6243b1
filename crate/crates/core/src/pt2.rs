//! Uncontracted second-order perturbation theory with the Dyall partitioning.
//!
//! `H = H_D + V`, where `H_D` is the frozen-core active Hamiltonian plus the
//! core and virtual blocks of the reference Fock operator. `H_D` is
//! diagonalized exactly, block by block over its conserved core/virtual
//! occupations, and `ΔE = −Σ_ν |<Ψ_ν|V|Ψ_0>|² / (E_ν − E_0)`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::det::{CIVector, DeterminantSpace, Ladder, SectorHamiltonian};
use crate::error::{Error, Result};
use crate::hamio::ActiveSpaceHamiltonian;
use crate::oracle::{fci_ground_state, sorted_eigen};

/// `|E_ν − E_0|` below this is treated as degenerate.
pub const DEGENERACY_THRESHOLD: f64 = 1e-8;
/// Degenerate terms with `|<Ψ_ν|V|Ψ_0>|` below this are dropped.
pub const NUMERATOR_FLOOR: f64 = 1e-10;
/// Largest full determinant sector.
pub const FULL_DIM_LIMIT: usize = 100_000;
/// Largest block of `H_D` diagonalized densely.
pub const BLOCK_LIMIT: usize = 4096;

/// Contiguous active window: orbitals `n_core..n_core + n_active`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActiveWindow {
    pub n_core: usize,
    pub n_active: usize,
}

#[derive(Debug, Clone)]
pub struct DyallPartition {
    window: ActiveWindow,
    full: ActiveSpaceHamiltonian,
    active: ActiveSpaceHamiltonian,
    fock: DMatrix<f64>,
    h_d: ActiveSpaceHamiltonian,
    v: ActiveSpaceHamiltonian,
    degeneracy_threshold: f64,
}

/// Spin-summed one-particle density `γ_tu = Σ_σ <ψ|a†_tσ a_uσ|ψ>`.
pub fn one_rdm(psi: &CIVector) -> DMatrix<f64> {
    let space = psi.space();
    let n = space.n_orbitals();
    let amps = psi.amplitudes();
    DMatrix::from_fn(n, n, |t, u| {
        [0, n]
            .iter()
            .map(|&off| {
                let moved = space.apply_ladders(&[Ladder::Create(t + off), Ladder::Annihilate(u + off)], amps);
                amps.iter().zip(&moved).map(|(a, b)| (a.conj() * b).re).sum::<f64>()
            })
            .sum()
    })
}

/// Dyall partition of `full` around the active reference `reference`.
pub fn build_dyall(full: &ActiveSpaceHamiltonian, window: ActiveWindow, reference: &CIVector) -> Result<DyallPartition> {
    let active = full.frozen_core(window.n_core, window.n_active)?;
    if reference.n_orbitals() != window.n_active || reference.sector() != (active.n_alpha(), active.n_beta()) {
        return Err(Error::validation(format!(
            "reference CI vector ({} orbitals, sector {:?}) does not match the active window ({} orbitals, sector {:?})",
            reference.n_orbitals(),
            reference.sector(),
            window.n_active,
            (active.n_alpha(), active.n_beta())
        )));
    }
    build_dyall_with_rdm(full, window, &one_rdm(reference))
}

/// Dyall partition from a spin-summed active one-particle density.
pub fn build_dyall_with_rdm(full: &ActiveSpaceHamiltonian, window: ActiveWindow, gamma: &DMatrix<f64>) -> Result<DyallPartition> {
    let ActiveWindow { n_core, n_active } = window;
    let active = full.frozen_core(n_core, n_active)?;
    if gamma.nrows() != n_active || gamma.ncols() != n_active {
        return Err(Error::validation("active density does not match the window"));
    }
    let n = full.n_orbitals();
    let act = n_core..n_core + n_active;
    let fock = DMatrix::from_fn(n, n, |p, q| {
        let mut f = full.one_body(p, q);
        for i in 0..n_core {
            f += 2.0 * full.eri(p, q, i, i) - full.eri(p, i, i, q);
        }
        for t in act.clone() {
            for u in act.clone() {
                let g = gamma[(t - n_core, u - n_core)];
                if g != 0.0 {
                    f += g * (full.eri(p, q, t, u) - 0.5 * full.eri(p, t, u, q));
                }
            }
        }
        f
    });
    let fock = (&fock + fock.transpose()) * 0.5;

    #[derive(PartialEq)]
    enum Space {
        Core,
        Active,
        Virtual,
    }
    let class = |p: usize| {
        if p < n_core {
            Space::Core
        } else if act.contains(&p) {
            Space::Active
        } else {
            Space::Virtual
        }
    };
    let constant = active.e_core() - 2.0 * (0..n_core).map(|i| fock[(i, i)]).sum::<f64>();
    let h_d = ActiveSpaceHamiltonian::from_fn(
        n,
        full.n_alpha(),
        full.n_beta(),
        constant,
        |p, q| match (class(p), class(q)) {
            (Space::Active, Space::Active) => active.one_body(p - n_core, q - n_core),
            (a, b) if a == b => fock[(p, q)],
            _ => 0.0,
        },
        |p, q, r, s| {
            if [p, q, r, s].iter().all(|&x| act.contains(&x)) {
                full.eri(p, q, r, s)
            } else {
                0.0
            }
        },
    )?;
    let v = full.added(&h_d.scaled(-1.0))?;
    Ok(DyallPartition { window, full: full.clone(), active, fock, h_d, v, degeneracy_threshold: DEGENERACY_THRESHOLD })
}

/// Per-term and summed correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pt2Result {
    pub delta_e: f64,
    /// Standard error over samples; 0 for a single state.
    pub stderr: f64,
    pub n_samples: usize,
    /// Contributing states of `H_D` (single-state runs).
    pub n_terms: usize,
    /// Zeroth-order energy (single-state runs).
    pub e0: f64,
    /// Per-sample corrections (sampled runs).
    pub samples: Vec<f64>,
    /// Samples dropped after an intruder-state failure.
    pub excluded: usize,
}

impl Pt2Result {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "delta_e": self.delta_e, "stderr": self.stderr, "n_samples": self.n_samples })
    }
}

impl DyallPartition {
    pub fn window(&self) -> ActiveWindow {
        self.window
    }

    pub fn full_hamiltonian(&self) -> &ActiveSpaceHamiltonian {
        &self.full
    }

    /// Frozen-core Hamiltonian of the active window.
    pub fn active_hamiltonian(&self) -> &ActiveSpaceHamiltonian {
        &self.active
    }

    /// Reference Fock matrix over all orbitals.
    pub fn fock(&self) -> &DMatrix<f64> {
        &self.fock
    }

    /// Core-core and virtual-virtual Fock blocks.
    pub fn fock_inactive(&self) -> DMatrix<f64> {
        let ActiveWindow { n_core, n_active } = self.window;
        let inactive = |p: usize| p < n_core || p >= n_core + n_active;
        DMatrix::from_fn(self.fock.nrows(), self.fock.ncols(), |p, q| {
            if inactive(p) && inactive(q) && ((p < n_core) == (q < n_core)) {
                self.fock[(p, q)]
            } else {
                0.0
            }
        })
    }

    pub fn h_d(&self) -> &ActiveSpaceHamiltonian {
        &self.h_d
    }

    pub fn v(&self) -> &ActiveSpaceHamiltonian {
        &self.v
    }

    pub fn degeneracy_threshold(&self) -> f64 {
        self.degeneracy_threshold
    }

    pub fn with_degeneracy_threshold(mut self, threshold: f64) -> Result<Self> {
        if !(threshold > 0.0) {
            return Err(Error::Config(format!("degeneracy threshold must be positive, got {threshold}")));
        }
        self.degeneracy_threshold = threshold;
        Ok(self)
    }

    /// Same `H_D`, perturbation `λV` (the full Hamiltonian becomes `H_D + λV`).
    pub fn with_scaled_perturbation(&self, lambda: f64) -> Result<Self> {
        let v = self.v.scaled(lambda);
        Ok(DyallPartition { full: self.h_d.added(&v)?, v, ..self.clone() })
    }

    pub fn full_space(&self) -> DeterminantSpace {
        DeterminantSpace::for_hamiltonian(&self.full)
    }

    /// Embeds an active CI vector with the core doubly occupied.
    pub fn embed(&self, psi: &CIVector) -> Result<CIVector> {
        let ActiveWindow { n_core, n_active } = self.window;
        if psi.n_orbitals() != n_active || psi.sector() != (self.active.n_alpha(), self.active.n_beta()) {
            return Err(Error::validation("CI vector does not live in the active window"));
        }
        let full_space = self.full_space();
        let act_space = psi.space();
        let core = (1u64 << n_core) - 1;
        let mut amps = vec![Complex64::default(); full_space.dim()];
        for (i, a) in psi.amplitudes().iter().enumerate() {
            let (sa, sb) = act_space.det(i);
            let j = full_space
                .index(core | sa << n_core, core | sb << n_core)
                .ok_or_else(|| Error::validation("embedded determinant outside the full sector"))?;
            amps[j] = *a;
        }
        CIVector::new(&full_space, amps)
    }

    /// Correction for one active state; `e0` defaults to `<ψ|H_D|ψ>`.
    pub fn pt2_correction(&self, psi0: &CIVector, e0: Option<f64>) -> Result<Pt2Result> {
        let space = self.full_space();
        if space.dim() > FULL_DIM_LIMIT {
            return Err(Error::Capacity { what: "PT2 full determinant sector", dim: space.dim(), limit: FULL_DIM_LIMIT });
        }
        let psi = self.embed(psi0)?;
        let hd = SectorHamiltonian::new(&self.h_d, &space);
        let e0 = e0.unwrap_or_else(|| hd.expectation(psi.amplitudes()));
        let w = SectorHamiltonian::new(&self.v, &space).apply(psi.amplitudes());
        let single = |delta_e: f64, n_terms: usize| Pt2Result {
            delta_e,
            stderr: 0.0,
            n_samples: 1,
            n_terms,
            e0,
            samples: Vec::new(),
            excluded: 0,
        };
        if w.iter().all(|x| x.norm_sqr() == 0.0) {
            return Ok(single(0.0, 0));
        }

        let blocks = self.blocks(&space);
        let mut delta_e = 0.0;
        let mut n_terms = 0;
        for idx in blocks.values() {
            if idx.iter().all(|&i| w[i].norm_sqr() == 0.0) {
                continue;
            }
            if idx.len() > BLOCK_LIMIT {
                return Err(Error::Capacity { what: "Dyall Hamiltonian block", dim: idx.len(), limit: BLOCK_LIMIT });
            }
            let local: BTreeMap<usize, usize> = idx.iter().enumerate().map(|(k, &i)| (i, k)).collect();
            let mut block = DMatrix::zeros(idx.len(), idx.len());
            for (c, &j) in idx.iter().enumerate() {
                let mut e = vec![0.0; space.dim()];
                e[j] = 1.0;
                for (r, v) in hd.apply_real(&e).into_iter().enumerate() {
                    if v != 0.0 {
                        let k = *local.get(&r).ok_or_else(|| Error::Numerical("Dyall Hamiltonian couples blocks".into()))?;
                        block[(k, c)] = v;
                    }
                }
            }
            let (vals, vecs) = sorted_eigen((&block + block.transpose()) * 0.5);
            for (nu, &e_nu) in vals.iter().enumerate() {
                let overlap: Complex64 = idx.iter().enumerate().map(|(k, &i)| w[i] * vecs[(k, nu)]).sum();
                let num = overlap.norm();
                let den = e_nu - e0;
                if den < self.degeneracy_threshold {
                    if num < NUMERATOR_FLOOR {
                        continue;
                    }
                    return Err(Error::IntruderState { index: nu, denominator: den, numerator: num });
                }
                let term = -overlap.norm_sqr() / den;
                assert!(term <= 0.0, "positive second-order term {term}");
                delta_e += term;
                n_terms += 1;
            }
        }
        Ok(single(delta_e, n_terms))
    }

    /// Determinant indices grouped by (core α, core β, virtual α, virtual β) counts.
    fn blocks(&self, space: &DeterminantSpace) -> BTreeMap<[u32; 4], Vec<usize>> {
        let ActiveWindow { n_core, n_active } = self.window;
        let core = (1u64 << n_core) - 1;
        let virt = !((1u64 << (n_core + n_active)) - 1);
        let mut out: BTreeMap<[u32; 4], Vec<usize>> = BTreeMap::new();
        for i in 0..space.dim() {
            let (a, b) = space.det(i);
            let key = [(a & core).count_ones(), (b & core).count_ones(), (a & virt).count_ones(), (b & virt).count_ones()];
            out.entry(key).or_default().push(i);
        }
        out
    }

    /// Mean correction over sampled CI vectors; intruder failures drop the sample.
    pub fn pt2_with_sampling(&self, samples: &[CIVector]) -> Result<Pt2Result> {
        if samples.is_empty() {
            return Err(Error::validation("PT2 sampling needs at least one CI vector"));
        }
        let runs: Vec<Result<Pt2Result>> = samples.par_iter().map(|s| self.pt2_correction(s, None)).collect();
        let mut values = Vec::new();
        let mut excluded = 0;
        for (i, r) in runs.into_iter().enumerate() {
            match r {
                Ok(r) => values.push(r.delta_e),
                Err(e @ Error::IntruderState { .. }) => {
                    log::warn!("PT2 sample {i} excluded: {e}");
                    excluded += 1;
                }
                Err(e) => return Err(e),
            }
        }
        if values.is_empty() {
            return Err(Error::Numerical("every PT2 sample hit an intruder state".into()));
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64 / n as f64).sqrt()
        } else {
            0.0
        };
        Ok(Pt2Result { delta_e: mean, stderr, n_samples: n, n_terms: 0, e0: f64::NAN, samples: values, excluded })
    }
}

/// CASCI reference of the window: (energy, active CI vector).
pub fn casci_reference(full: &ActiveSpaceHamiltonian, window: ActiveWindow) -> Result<(f64, CIVector)> {
    fci_ground_state(&full.frozen_core(window.n_core, window.n_active)?, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::det::sector_matrix;
    use crate::fixtures::{pt2_companion, random_hamiltonian};
    use crate::hamio::spin_factorize;

    fn companion() -> (DyallPartition, CIVector, f64) {
        let (full, n_core, n_active) = pt2_companion("butadiene_4o_2act").unwrap();
        let window = ActiveWindow { n_core, n_active };
        let (e, psi) = casci_reference(&full, window).unwrap();
        (build_dyall(&full, window, &psi).unwrap(), psi, e)
    }

    #[test]
    fn partition_identity() {
        let (part, _, _) = companion();
        let space = part.full_space();
        let diff = sector_matrix(part.h_d(), &space) + sector_matrix(part.v(), &space) - sector_matrix(part.full_hamiltonian(), &space);
        assert!(diff.amax() < 1e-12);
        for seed in 0..3 {
            let full = random_hamiltonian(5, 3, 3, seed);
            let window = ActiveWindow { n_core: 1, n_active: 3 };
            let (_, psi) = casci_reference(&full, window).unwrap();
            let part = build_dyall(&full, window, &psi).unwrap();
            for (na, nb) in [(3, 3), (2, 3), (4, 2)] {
                let space = DeterminantSpace::new(5, na, nb);
                let diff = sector_matrix(part.h_d(), &space) + sector_matrix(part.v(), &space) - sector_matrix(&full, &space);
                assert!(diff.amax() < 1e-12, "seed {seed} sector ({na},{nb})");
            }
        }
    }

    #[test]
    fn reference_energy_is_casci() {
        let (part, psi, e) = companion();
        let r = part.pt2_correction(&psi, None).unwrap();
        assert!((r.e0 - e).abs() < 1e-12);
        let hf = SectorHamiltonian::new(part.full_hamiltonian(), &part.full_space());
        assert!((hf.expectation(part.embed(&psi).unwrap().amplitudes()) - e).abs() < 1e-12);
    }

    #[test]
    fn full_active_space_gives_exact_zero() {
        let full = random_hamiltonian(4, 2, 2, 5);
        let window = ActiveWindow { n_core: 0, n_active: 4 };
        let (_, psi) = casci_reference(&full, window).unwrap();
        let part = build_dyall(&full, window, &psi).unwrap();
        assert_eq!(part.pt2_correction(&psi, None).unwrap().delta_e, 0.0);
        let space = part.full_space();
        assert!(sector_matrix(part.v(), &space).amax() < 1e-12);
    }

    #[test]
    fn non_interacting_fock_is_orbital_energies() {
        let eps = [-1.0, -0.5, 0.3, 0.9];
        let full = ActiveSpaceHamiltonian::from_fn(4, 2, 2, 0.0, |p, q| if p == q { eps[p] } else { 0.0 }, |_, _, _, _| 0.0).unwrap();
        let window = ActiveWindow { n_core: 1, n_active: 2 };
        let (_, psi) = casci_reference(&full, window).unwrap();
        let part = build_dyall(&full, window, &psi).unwrap();
        let f = part.fock_inactive();
        assert_eq!(f[(0, 0)], eps[0]);
        assert_eq!(f[(3, 3)], eps[3]);
        assert_eq!(f[(1, 1)], 0.0);
        assert_eq!(part.pt2_correction(&psi, None).unwrap().delta_e, 0.0);
    }

    /// Independent route: H_D and V through the Jordan-Wigner qubit operators,
    /// dense diagonalization of the whole restricted H_D, with the perturbation sum written out.
    fn jw_oracle(part: &DyallPartition, psi: &CIVector) -> f64 {
        let space = part.full_space();
        let idx: Vec<usize> = space.full_indices().collect();
        let restrict = |h: &ActiveSpaceHamiltonian| {
            let m = spin_factorize(h).to_full_operator().to_matrix();
            DMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])].re)
        };
        let hd = restrict(part.h_d());
        let v = restrict(part.v());
        let x = nalgebra::DVector::from_iterator(idx.len(), part.embed(psi).unwrap().amplitudes().iter().map(|a| a.re));
        let e0 = x.dot(&(&hd * &x));
        let eig = nalgebra::SymmetricEigen::new(hd);
        let vx = &v * &x;
        let mut sum = 0.0;
        for nu in 0..idx.len() {
            let den = eig.eigenvalues[nu] - e0;
            if den.abs() < 1e-8 {
                continue;
            }
            sum -= eig.eigenvectors.column(nu).dot(&vx).powi(2) / den;
        }
        sum
    }

    #[test]
    fn matches_dense_jordan_wigner_oracle() {
        let (part, psi, _) = companion();
        let r = part.pt2_correction(&psi, None).unwrap();
        let oracle = jw_oracle(&part, &psi);
        assert!((r.delta_e - oracle).abs() < 1e-10, "{} vs {oracle}", r.delta_e);
        assert!(r.delta_e < 0.0);
        for seed in 0..3 {
            let full = random_hamiltonian(4, 2, 2, 40 + seed);
            let window = ActiveWindow { n_core: 1, n_active: 2 };
            let (_, psi) = casci_reference(&full, window).unwrap();
            let part = build_dyall(&full, window, &psi).unwrap();
            let r = part.pt2_correction(&psi, None).unwrap();
            assert!((r.delta_e - jw_oracle(&part, &psi)).abs() < 1e-10);
            assert!(r.delta_e <= 0.0);
        }
    }

    #[test]
    fn quadratic_in_perturbation_strength() {
        let (part, psi, _) = companion();
        let base = part.pt2_correction(&psi, None).unwrap().delta_e;
        for lambda in [0.5, 0.1, 2.0] {
            let scaled = part.with_scaled_perturbation(lambda).unwrap().pt2_correction(&psi, None).unwrap().delta_e;
            assert!((scaled - lambda * lambda * base).abs() < 1e-10);
        }
    }

    #[test]
    fn sampling_statistics() {
        let (part, psi, _) = companion();
        let exact = part.pt2_correction(&psi, None).unwrap().delta_e;
        let one = part.pt2_with_sampling(std::slice::from_ref(&psi)).unwrap();
        assert_eq!(one.delta_e, exact);
        assert_eq!(one.stderr, 0.0);
        let same = part.pt2_with_sampling(&vec![psi.clone(); 5]).unwrap();
        assert_eq!(same.stderr, 0.0);
        assert_eq!(same.n_samples, 5);
        assert!(part.pt2_with_sampling(&[]).is_err());
    }

    #[test]
    fn rdm_constructor_matches() {
        let (part, psi, _) = companion();
        let again = build_dyall_with_rdm(part.full_hamiltonian(), part.window(), &one_rdm(&psi)).unwrap();
        assert_eq!(again.h_d(), part.h_d());
        let g = one_rdm(&psi);
        assert!((g.trace() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_mismatched_reference() {
        let (full, n_core, n_active) = pt2_companion("butadiene_4o_2act").unwrap();
        let (_, wrong) = fci_ground_state(&full, None).unwrap();
        assert!(build_dyall(&full, ActiveWindow { n_core, n_active }, &wrong).is_err());
    }
}
