//! Quantum subspace expansion over spin-conserving singles and doubles.
//!
//! Occupied and virtual orbitals are taken relative to the aufbau determinant
//! of the sector. Matrices `H_IJ = <ψ|O_I† H O_J|ψ>` and `S_IJ = <ψ|O_I† O_J|ψ>`
//! come from a CI vector, a sector density (trace form), or a full-register
//! density, and are solved by canonical orthogonalization.

mod solve;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::det::{apply_ladders, CIVector, DeterminantSpace, Ladder, SectorHamiltonian};
use crate::error::{Error, Result};
use crate::forging::ForgedAnsatz;
use crate::hamio::{spin_factorize, ActiveSpaceHamiltonian};
use crate::purify::{extract_ci_vector, forged_full_density, forged_sector_density, SectorDensity};
use crate::tomography::{forged_tomography_sweep, DensityMatrix, ForgedTomography, TomographyOptions};

pub use solve::{solve_generalized, SubspaceSolution};

/// Default overlap cutoff for exact inputs.
pub const DEFAULT_CUTOFF: f64 = 1e-8;

/// Product of ladder operators, leftmost factor first; empty is the identity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Excitation {
    pub ladders: Vec<Ladder>,
}

impl Excitation {
    pub fn identity() -> Self {
        Excitation { ladders: Vec::new() }
    }

    pub fn is_identity(&self) -> bool {
        self.ladders.is_empty()
    }

    /// `"1"`, or e.g. `"a+2 a0"` with modes `0..2N` (β modes offset by N).
    pub fn label(&self) -> String {
        if self.ladders.is_empty() {
            return "1".into();
        }
        self.ladders
            .iter()
            .map(|l| match l {
                Ladder::Create(j) => format!("a+{j}"),
                Ladder::Annihilate(j) => format!("a{j}"),
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Ordered excitation operators; the identity is first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcitationBasis {
    pub n_orbitals: usize,
    pub n_alpha: usize,
    pub n_beta: usize,
    pub operators: Vec<Excitation>,
}

impl ExcitationBasis {
    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    /// Same operators in a different order (`order[i]` is the old index of new slot `i`).
    pub fn permuted(&self, order: &[usize]) -> Self {
        ExcitationBasis {
            operators: order.iter().map(|&i| self.operators[i].clone()).collect(),
            ..self.clone()
        }
    }
}

/// Identity, singles per spin, same-spin doubles and αβ doubles.
pub fn build_excitations(n_orbitals: usize, n_alpha: usize, n_beta: usize) -> ExcitationBasis {
    use Ladder::{Annihilate as A, Create as C};
    let n = n_orbitals;
    let occ = |k: usize, off: usize| (0..k).map(move |i| i + off);
    let virt = |k: usize, off: usize| (k..n).map(move |i| i + off);
    let mut ops = vec![Excitation::identity()];
    for (k, off) in [(n_alpha, 0), (n_beta, n)] {
        for i in occ(k, off) {
            for a in virt(k, off) {
                ops.push(Excitation { ladders: vec![C(a), A(i)] });
            }
        }
    }
    for (k, off) in [(n_alpha, 0), (n_beta, n)] {
        for i in occ(k, off) {
            for j in occ(k, off).filter(|&j| j > i) {
                for a in virt(k, off) {
                    for b in virt(k, off).filter(|&b| b > a) {
                        ops.push(Excitation { ladders: vec![C(a), C(b), A(j), A(i)] });
                    }
                }
            }
        }
    }
    for i in occ(n_alpha, 0) {
        for a in virt(n_alpha, 0) {
            for j in occ(n_beta, n) {
                for b in virt(n_beta, n) {
                    ops.push(Excitation { ladders: vec![C(a), C(b), A(j), A(i)] });
                }
            }
        }
    }
    ExcitationBasis { n_orbitals, n_alpha, n_beta, operators: ops }
}

/// `H` and `S` over an excitation basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceProblem {
    pub h: DMatrix<Complex64>,
    pub s: DMatrix<Complex64>,
    pub labels: Vec<String>,
}

impl SubspaceProblem {
    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    /// `(M + M†) / 2` for both matrices.
    pub fn symmetrized(&self) -> Self {
        let half = Complex64::new(0.5, 0.0);
        SubspaceProblem {
            h: (&self.h + self.h.adjoint()) * half,
            s: (&self.s + self.s.adjoint()) * half,
            labels: self.labels.clone(),
        }
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.h - self.h.adjoint()).camax().max((&self.s - self.s.adjoint()).camax())
    }

    /// Reference energy `H_00 / S_00`.
    pub fn reference_energy(&self) -> f64 {
        self.h[(0, 0)].re / self.s[(0, 0)].re
    }

    pub fn to_json(&self) -> serde_json::Value {
        let dump = |m: &DMatrix<Complex64>| -> Vec<Vec<[f64; 2]>> {
            (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
        };
        serde_json::json!({ "labels": self.labels, "h": dump(&self.h), "s": dump(&self.s) })
    }
}

/// Signed determinant map of one excitation on a sector: `O|b> = s |σ(b)>`.
fn sector_action(space: &DeterminantSpace, op: &Excitation) -> Vec<Option<(usize, f64)>> {
    let n = space.n_orbitals();
    let mask = (1u64 << n) - 1;
    (0..space.dim())
        .map(|i| {
            let (a, b) = space.det(i);
            let (occ, sign) = apply_ladders(a | b << n, &op.ladders)?;
            Some((space.index(occ & mask, occ >> n)?, sign))
        })
        .collect()
}

/// `Tr[O† M]` for a signed permutation-like `O`.
fn permuted_trace(mat: &DMatrix<Complex64>, action: &[Option<(usize, f64)>]) -> Complex64 {
    action
        .iter()
        .enumerate()
        .filter_map(|(b, a)| a.map(|(t, s)| mat[(t, b)] * s))
        .sum()
}

fn check_basis(space: &DeterminantSpace, basis: &ExcitationBasis) -> Result<()> {
    if (basis.n_orbitals, basis.n_alpha, basis.n_beta) != (space.n_orbitals(), space.sector().0, space.sector().1) {
        return Err(Error::validation("excitation basis and state belong to different sectors"));
    }
    if basis.operators.first().map(Excitation::is_identity) != Some(true) {
        return Err(Error::validation("excitation basis must start with the identity"));
    }
    Ok(())
}

fn labels(basis: &ExcitationBasis) -> Vec<String> {
    basis.operators.iter().map(Excitation::label).collect()
}

/// Matrices from a CI vector by sparse excitation application.
pub fn subspace_matrices_ci(ci: &CIVector, ham: &SectorHamiltonian, basis: &ExcitationBasis) -> Result<SubspaceProblem> {
    let space = ham.space();
    if ci.sector() != space.sector() || ci.n_orbitals() != space.n_orbitals() {
        return Err(Error::validation("CI vector and Hamiltonian sectors differ"));
    }
    check_basis(space, basis)?;
    let phi: Vec<Vec<Complex64>> = basis
        .operators
        .par_iter()
        .map(|op| space.apply_ladders(&op.ladders, ci.amplitudes()))
        .collect();
    let hphi: Vec<Vec<Complex64>> = phi.par_iter().map(|v| ham.apply(v)).collect();
    let m = basis.len();
    let dot = |a: &[Complex64], b: &[Complex64]| -> Complex64 { a.iter().zip(b).map(|(x, y)| x.conj() * y).sum() };
    let entries: Vec<(Complex64, Complex64)> = (0..m * m)
        .into_par_iter()
        .map(|ij| {
            let (i, j) = (ij / m, ij % m);
            (dot(&phi[i], &hphi[j]), dot(&phi[i], &phi[j]))
        })
        .collect();
    let h = DMatrix::from_fn(m, m, |i, j| entries[i * m + j].0);
    let s = DMatrix::from_fn(m, m, |i, j| entries[i * m + j].1);
    Ok(SubspaceProblem { h, s, labels: labels(basis) })
}

/// Trace form `Tr[O_I† H O_J ρ]` on a sector density.
pub fn subspace_matrices_density(rho: &SectorDensity, ham: &SectorHamiltonian, basis: &ExcitationBasis) -> Result<SubspaceProblem> {
    let space = ham.space();
    if rho.space().dim() != space.dim() || rho.space().sector() != space.sector() {
        return Err(Error::validation("density and Hamiltonian sectors differ"));
    }
    check_basis(space, basis)?;
    let dim = space.dim();
    let actions: Vec<Vec<Option<(usize, f64)>>> = basis.operators.iter().map(|op| sector_action(space, op)).collect();
    let m = basis.len();
    let columns: Vec<(Vec<Complex64>, Vec<Complex64>)> = actions
        .par_iter()
        .map(|act_j| {
            // Y = O_J ρ, Z = H Y
            let mut y = DMatrix::<Complex64>::zeros(dim, dim);
            for (b, a) in act_j.iter().enumerate() {
                if let Some((t, s)) = *a {
                    for c in 0..dim {
                        y[(t, c)] += rho.matrix()[(b, c)] * s;
                    }
                }
            }
            let mut z = DMatrix::<Complex64>::zeros(dim, dim);
            for c in 0..dim {
                let col: Vec<Complex64> = y.column(c).iter().copied().collect();
                if col.iter().all(|v| v.norm_sqr() == 0.0) {
                    continue;
                }
                for (r, v) in ham.apply(&col).into_iter().enumerate() {
                    z[(r, c)] = v;
                }
            }
            let h_col = actions.iter().map(|act_i| permuted_trace(&z, act_i)).collect();
            let s_col = actions.iter().map(|act_i| permuted_trace(&y, act_i)).collect();
            (h_col, s_col)
        })
        .collect();
    let h = DMatrix::from_fn(m, m, |i, j| columns[j].0[i]);
    let s = DMatrix::from_fn(m, m, |i, j| columns[j].1[i]);
    Ok(SubspaceProblem { h, s, labels: labels(basis) })
}

/// Largest register (qubits per sector) for full-register assembly.
pub const MAX_FULL_REGISTER: usize = 4;

/// Trace form on an unprojected 2N-qubit density, normalized by `S_00`.
pub fn subspace_matrices_full(rho: &DensityMatrix, ham: &ActiveSpaceHamiltonian, basis: &ExcitationBasis) -> Result<SubspaceProblem> {
    let n = ham.n_orbitals();
    if rho.n_qubits() != 2 * n {
        return Err(Error::validation("density register does not match 2N qubits"));
    }
    if n > MAX_FULL_REGISTER {
        return Err(Error::Capacity { what: "full-register subspace assembly", dim: n, limit: MAX_FULL_REGISTER });
    }
    let dim = 1usize << (2 * n);
    let h_full = spin_factorize(ham).to_full_operator().to_matrix();
    let actions: Vec<Vec<Option<(usize, f64)>>> = basis
        .operators
        .iter()
        .map(|op| {
            (0..dim)
                .map(|b| apply_ladders(b as u64, &op.ladders).map(|(t, s)| (t as usize, s)))
                .collect()
        })
        .collect();
    let m = basis.len();
    let columns: Vec<(Vec<Complex64>, Vec<Complex64>)> = actions
        .par_iter()
        .map(|act_j| {
            let mut y = DMatrix::<Complex64>::zeros(dim, dim);
            for (b, a) in act_j.iter().enumerate() {
                if let Some((t, s)) = *a {
                    for c in 0..dim {
                        y[(t, c)] += rho.matrix()[(b, c)] * s;
                    }
                }
            }
            let z = &h_full * &y;
            let h_col = actions.iter().map(|act_i| permuted_trace(&z, act_i)).collect();
            let s_col = actions.iter().map(|act_i| permuted_trace(&y, act_i)).collect();
            (h_col, s_col)
        })
        .collect();
    let h = DMatrix::from_fn(m, m, |i, j| columns[j].0[i]);
    let s = DMatrix::from_fn(m, m, |i, j| columns[j].1[i]);
    let s00 = s[(0, 0)].re;
    if !(s00.abs() > 1e-10) {
        return Err(Error::SectorDestroyed { trace: s00 });
    }
    let scale = Complex64::new(1.0 / s00, 0.0);
    Ok(SubspaceProblem { h: h * scale, s: s * scale, labels: labels(basis) })
}

/// Where the sector projection happens for density inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionOrder {
    /// Project the density onto the sector, then assemble in the sector.
    #[default]
    ProjectFirst,
    /// Assemble on the full 2N-qubit register, normalize by `S_00`.
    AssembleFirst,
}

/// How the state entering the subspace expansion is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QseSource {
    Exact,
    Shots { shots: usize, seed: u64 },
    Purified { shots: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QseOptions {
    /// Overlap cutoff; `None` means 1e-8 for pure inputs and 10·median(ε) for sampled ones.
    pub cutoff: Option<f64>,
    pub projection: ProjectionOrder,
    pub tomography: TomographyOptions,
}

impl Default for QseOptions {
    fn default() -> Self {
        QseOptions { cutoff: None, projection: ProjectionOrder::ProjectFirst, tomography: TomographyOptions::default() }
    }
}

/// Result of one expansion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QseOutcome {
    pub energy: f64,
    /// `H_00 / S_00`, the energy of the state before expansion.
    pub reference_energy: f64,
    pub retained_rank: usize,
    pub basis_size: usize,
    pub cutoff: f64,
    pub fallback: bool,
    /// Expanded ground state, when the input was a CI vector.
    #[serde(skip)]
    pub state: Option<CIVector>,
}

/// `10 · median(ε)` over all non-identity Bloch entries of a tomography.
pub fn sampled_cutoff(tomo: &ForgedTomography) -> f64 {
    let mut errs: Vec<f64> = tomo
        .bloch
        .values()
        .flat_map(|b| (1..b.len()).filter_map(|i| b.get_index(i).map(|e| e.error)))
        .collect();
    if errs.is_empty() {
        return DEFAULT_CUTOFF;
    }
    errs.sort_by(f64::total_cmp);
    let mid = errs.len() / 2;
    let median = if errs.len() % 2 == 0 { 0.5 * (errs[mid - 1] + errs[mid]) } else { errs[mid] };
    (10.0 * median).max(DEFAULT_CUTOFF)
}

/// `Σ_I c_I O_I |ψ>`, normalized.
fn expanded_state(ci: &CIVector, basis: &ExcitationBasis, coeffs: &[Complex64]) -> Result<CIVector> {
    let space = ci.space();
    let mut out = vec![Complex64::default(); space.dim()];
    for (op, c) in basis.operators.iter().zip(coeffs) {
        if c.norm_sqr() == 0.0 {
            continue;
        }
        for (o, v) in out.iter_mut().zip(space.apply_ladders(&op.ladders, ci.amplitudes())) {
            *o += c * v;
        }
    }
    Ok(CIVector::new(&space, out)?.with_phase_fixed_at(space.hf_index()))
}

fn solve_outcome(problem: &SubspaceProblem, cutoff: f64, fallback: bool, source: Option<(&CIVector, &ExcitationBasis)>) -> Result<QseOutcome> {
    let sol = solve_generalized(problem, cutoff)?;
    let state = match source {
        Some((ci, basis)) => {
            let c: Vec<Complex64> = sol.coefficients.column(0).iter().copied().collect();
            Some(expanded_state(ci, basis, &c)?)
        }
        None => None,
    };
    Ok(QseOutcome {
        energy: sol.energies[0],
        reference_energy: problem.reference_energy(),
        retained_rank: sol.retained_rank,
        basis_size: problem.dim(),
        cutoff,
        fallback,
        state,
    })
}

fn check_sector(ansatz: &ForgedAnsatz, ham: &ActiveSpaceHamiltonian) -> Result<()> {
    let w = ansatz.n_electrons_per_spin();
    if ham.n_orbitals() != ansatz.n_qubits() || ham.n_alpha() != w || ham.n_beta() != w {
        return Err(Error::validation("ansatz does not match the Hamiltonian sector"));
    }
    Ok(())
}

/// Expansion on an exact CI vector.
pub fn qse_on_ci(ci: &CIVector, ham: &ActiveSpaceHamiltonian, cutoff: f64) -> Result<QseOutcome> {
    let space = DeterminantSpace::for_hamiltonian(ham);
    let sh = SectorHamiltonian::new(ham, &space);
    let basis = build_excitations(ham.n_orbitals(), ham.n_alpha(), ham.n_beta());
    let problem = subspace_matrices_ci(ci, &sh, &basis)?;
    solve_outcome(&problem, cutoff, false, Some((ci, &basis)))
}

/// Raw (density) and purified (CI vector) expansions from one tomography sweep.
pub fn qse_from_tomography(tomo: &ForgedTomography, ham: &ActiveSpaceHamiltonian, options: &QseOptions) -> Result<(QseOutcome, QseOutcome)> {
    check_sector(&tomo.ansatz, ham)?;
    let space = DeterminantSpace::for_hamiltonian(ham);
    let sh = SectorHamiltonian::new(ham, &space);
    let basis = build_excitations(ham.n_orbitals(), ham.n_alpha(), ham.n_beta());
    let rho = forged_sector_density(tomo)?;
    let raw_cutoff = options.cutoff.unwrap_or_else(|| sampled_cutoff(tomo));
    let problem = match options.projection {
        ProjectionOrder::ProjectFirst => subspace_matrices_density(&rho, &sh, &basis)?,
        ProjectionOrder::AssembleFirst => subspace_matrices_full(&forged_full_density(tomo)?, ham, &basis)?,
    };
    let raw = solve_outcome(&problem.symmetrized(), raw_cutoff, false, None)?;
    let pure = extract_ci_vector(&rho, space.hf_index())?;
    let problem = subspace_matrices_ci(&pure.ci, &sh, &basis)?;
    let purified = solve_outcome(&problem, options.cutoff.unwrap_or(DEFAULT_CUTOFF), pure.fallback, Some((&pure.ci, &basis)))?;
    Ok((raw, purified))
}

/// State acquisition, optional purification, matrices and solve.
pub fn ef_qse_energy(ansatz: &ForgedAnsatz, ham: &ActiveSpaceHamiltonian, source: QseSource, options: &QseOptions) -> Result<QseOutcome> {
    check_sector(ansatz, ham)?;
    match source {
        QseSource::Exact => qse_on_ci(&ansatz.ci_vector()?, ham, options.cutoff.unwrap_or(DEFAULT_CUTOFF)),
        QseSource::Shots { shots, seed } | QseSource::Purified { shots, seed } => {
            let tomo = forged_tomography_sweep(ansatz, shots, seed, &options.tomography)?;
            let (raw, purified) = qse_from_tomography(&tomo, ham, options)?;
            Ok(if matches!(source, QseSource::Shots { .. }) { raw } else { purified })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{bundled, random_hamiltonian};
    use crate::oracle::fci_ground_state;
    use crate::simcore::HopLayout;

    fn binom(n: usize, k: usize) -> usize {
        if k > n {
            return 0;
        }
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn basis_sizes() {
        assert_eq!(build_excitations(2, 1, 1).len(), 4);
        assert_eq!(build_excitations(1, 1, 1).len(), 1);
        for n in 1..=6 {
            for na in 0..=n {
                for nb in 0..=n {
                    let (va, vb) = (n - na, n - nb);
                    let want = 1 + na * va + nb * vb + binom(na, 2) * binom(va, 2) + binom(nb, 2) * binom(vb, 2) + na * va * nb * vb;
                    assert_eq!(build_excitations(n, na, nb).len(), want, "({n},{na},{nb})");
                }
            }
        }
    }

    /// Brute force: every ladder product of up to two creators and two annihilators,
    /// kept if it conserves both spin counts and moves electrons from aufbau-occupied
    /// to aufbau-virtual spin orbitals in canonical order.
    fn brute_force_count(n: usize, na: usize, nb: usize) -> usize {
        let occ = |m: usize| if m < n { m < na } else { m - n < nb };
        let spin = |m: usize| m >= n;
        let mut count = 1;
        let modes = 2 * n;
        for a in 0..modes {
            for i in 0..modes {
                if !occ(a) && occ(i) && spin(a) == spin(i) {
                    count += 1;
                }
            }
        }
        for a in 0..modes {
            for b in a + 1..modes {
                for i in 0..modes {
                    for j in i + 1..modes {
                        let ok = !occ(a) && !occ(b) && occ(i) && occ(j)
                            && (spin(a) as usize + spin(b) as usize) == (spin(i) as usize + spin(j) as usize);
                        if ok {
                            count += 1;
                        }
                    }
                }
            }
        }
        count
    }

    #[test]
    fn basis_size_matches_brute_force() {
        for n in 1..=6 {
            for na in 0..=n {
                let nb = n / 2;
                assert_eq!(build_excitations(n, na, nb).len(), brute_force_count(n, na, nb), "({n},{na},{nb})");
            }
        }
    }

    #[test]
    fn identity_only_basis() {
        let h = random_hamiltonian(3, 1, 1, 1);
        let space = DeterminantSpace::for_hamiltonian(&h);
        let sh = SectorHamiltonian::new(&h, &space);
        let (_, ci) = fci_ground_state(&h, None).unwrap();
        let basis = ExcitationBasis { operators: vec![Excitation::identity()], ..build_excitations(3, 1, 1) };
        let p = subspace_matrices_ci(&ci, &sh, &basis).unwrap();
        assert!((p.h[(0, 0)].re - sh.expectation(ci.amplitudes())).abs() < 1e-12);
        assert!((p.s[(0, 0)].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hf_in_two_by_two_reaches_fci() {
        let h = bundled("stretched_2e2o").unwrap();
        let (efci, _) = fci_ground_state(&h, None).unwrap();
        let space = DeterminantSpace::for_hamiltonian(&h);
        let sh = SectorHamiltonian::new(&h, &space);
        let mut amps = vec![Complex64::default(); space.dim()];
        amps[space.hf_index()] = Complex64::new(1.0, 0.0);
        let hf = CIVector::new(&space, amps).unwrap();
        let p = subspace_matrices_ci(&hf, &sh, &build_excitations(2, 1, 1)).unwrap();
        let e = solve_generalized(&p, DEFAULT_CUTOFF).unwrap().energies[0];
        assert!((e - efci).abs() < 1e-10);
    }

    #[test]
    fn fci_state_is_a_fixed_point() {
        let h = bundled("butadiene_4e4o").unwrap();
        let (efci, ci) = fci_ground_state(&h, None).unwrap();
        let sh = SectorHamiltonian::new(&h, &DeterminantSpace::for_hamiltonian(&h));
        let p = subspace_matrices_ci(&ci, &sh, &build_excitations(4, 2, 2)).unwrap();
        let e = solve_generalized(&p, DEFAULT_CUTOFF).unwrap().energies[0];
        assert!((e - efci).abs() < 1e-10);
        let q = qse_on_ci(&ci, &h, DEFAULT_CUTOFF).unwrap();
        assert!((q.state.unwrap().fidelity(&ci) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn expanded_state_carries_the_energy() {
        let h = bundled("butadiene_4e4o").unwrap();
        let q = qse_on_ci(&ansatz4().ci_vector().unwrap(), &h, DEFAULT_CUTOFF).unwrap();
        let sh = SectorHamiltonian::new(&h, &DeterminantSpace::for_hamiltonian(&h));
        assert!((sh.expectation(q.state.unwrap().amplitudes()) - q.energy).abs() < 1e-10);
    }

    fn ansatz4() -> ForgedAnsatz {
        ForgedAnsatz::new(4, vec![0b0011, 0b0101], vec![0.95, -0.31], HopLayout::default_for(4), vec![0.3, -0.2]).unwrap()
    }

    #[test]
    fn density_routes_agree_with_ci_route() {
        let h = bundled("butadiene_4e4o").unwrap();
        let a = ansatz4();
        let ci = a.ci_vector().unwrap();
        let sh = SectorHamiltonian::new(&h, &DeterminantSpace::for_hamiltonian(&h));
        let basis = build_excitations(4, 2, 2);
        let from_ci = subspace_matrices_ci(&ci, &sh, &basis).unwrap();
        let from_rho = subspace_matrices_density(&SectorDensity::from_ci(&ci), &sh, &basis).unwrap();
        assert!((from_ci.h.clone() - from_rho.h).camax() < 1e-12);
        assert!((from_ci.s.clone() - from_rho.s).camax() < 1e-12);
        let full = DensityMatrix::from_pure(&ci.to_register()).unwrap();
        let from_full = subspace_matrices_full(&full, &h, &basis).unwrap();
        assert!((from_ci.h.clone() - from_full.h).camax() < 1e-10);
        assert!((from_ci.s - from_full.s).camax() < 1e-12);
    }

    #[test]
    fn exact_sources_agree() {
        let h = bundled("butadiene_4e4o").unwrap();
        let a = ansatz4();
        let exact = ef_qse_energy(&a, &h, QseSource::Exact, &QseOptions::default()).unwrap();
        let zero_shot = ef_qse_energy(&a, &h, QseSource::Shots { shots: 0, seed: 1 }, &QseOptions { cutoff: Some(DEFAULT_CUTOFF), ..Default::default() }).unwrap();
        let purified = ef_qse_energy(&a, &h, QseSource::Purified { shots: 0, seed: 1 }, &QseOptions::default()).unwrap();
        let assemble = ef_qse_energy(&a, &h, QseSource::Shots { shots: 0, seed: 1 }, &QseOptions { cutoff: Some(DEFAULT_CUTOFF), projection: ProjectionOrder::AssembleFirst, ..Default::default() }).unwrap();
        for other in [&zero_shot, &purified, &assemble] {
            assert!((exact.energy - other.energy).abs() < 1e-9, "{exact:?} vs {other:?}");
        }
        assert!(exact.energy <= exact.reference_energy + 1e-10);
        let (efci, _) = fci_ground_state(&h, None).unwrap();
        assert!(exact.energy >= efci - 1e-10);
    }

    #[test]
    fn basis_order_does_not_matter() {
        let h = bundled("butadiene_4e4o").unwrap();
        let ci = ansatz4().ci_vector().unwrap();
        let sh = SectorHamiltonian::new(&h, &DeterminantSpace::for_hamiltonian(&h));
        let basis = build_excitations(4, 2, 2);
        let mut order: Vec<usize> = (1..basis.len()).rev().collect();
        order.insert(0, 0);
        let e1 = solve_generalized(&subspace_matrices_ci(&ci, &sh, &basis).unwrap(), DEFAULT_CUTOFF).unwrap().energies[0];
        let e2 = solve_generalized(&subspace_matrices_ci(&ci, &sh, &basis.permuted(&order)).unwrap(), DEFAULT_CUTOFF).unwrap().energies[0];
        assert!((e1 - e2).abs() < 1e-10);
    }
}
