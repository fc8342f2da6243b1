//! End-to-end workflow: VQE, tomography, purification, subspace expansion, PT2.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::PreparedRun;
use crate::det::{string_label, CIVector, DeterminantSpace, SectorHamiltonian};
use crate::error::{Error, Result};
use crate::forging::{select_bitstrings, vqe_minimize, ForgedAnsatz, VqeResult};
use crate::hamio::spin_factorize;
use crate::oracle::{fci_ground_state, FciOracle, CAPACITY_LIMIT};
use crate::pt2::{build_dyall, build_dyall_with_rdm, one_rdm, ActiveWindow, Pt2Result};
use crate::purify::{extract_ci_vector, forged_sector_density};
use crate::rng::derive_seed;
use crate::simcore::{count_resources, ResourceCount};
use crate::subspace::{qse_from_tomography, qse_on_ci, QseOptions, QseOutcome, DEFAULT_CUTOFF};
use crate::tomography::{forged_tomography_sweep, TomographyOptions};

/// Hartree to kcal/mol.
pub const HARTREE_TO_KCAL: f64 = 627.5094740631;

/// Mean, sample standard deviation and standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
    pub stderr: f64,
    pub n: usize,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Stat> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(Stat { mean, std, stderr: std / (n as f64).sqrt(), n })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemReport {
    pub source: String,
    pub n_orbitals: usize,
    pub n_alpha: usize,
    pub n_beta: usize,
    pub fci_energy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqeReport {
    pub bitstrings: Vec<String>,
    pub initial_energy: f64,
    pub energy: f64,
    pub converged: bool,
    pub evaluations: usize,
    pub theta: Vec<f64>,
    pub schmidt: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleReport {
    pub index: usize,
    pub seed: u64,
    pub ef_raw: f64,
    pub ef_purified: f64,
    pub qse_raw: Option<f64>,
    pub qse_purified: Option<f64>,
    pub purification_fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingReport {
    pub shots: usize,
    pub seed: u64,
    pub samples: Vec<SampleReport>,
    pub ef_raw: Stat,
    pub ef_purified: Stat,
    pub qse_raw: Option<Stat>,
    pub qse_purified: Option<Stat>,
    pub qse_raw_cutoff: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pt2Report {
    pub window: ActiveWindow,
    /// Correction on the exact (noise-free) reference.
    pub exact: Pt2Result,
    /// Mean correction over purified samples.
    pub sampled: Option<Pt2Result>,
}

/// Headline energies (hartree).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergySummary {
    pub fci: Option<f64>,
    pub ef: f64,
    pub ef_qse: Option<f64>,
    pub ef_qse_raw: Option<Stat>,
    pub ef_qse_purified: Option<Stat>,
    pub ef_qse_pt2: Option<f64>,
    pub ef_qse_purified_pt2: Option<Stat>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub name: Option<String>,
    pub system: Option<SystemReport>,
    pub resources: Option<ResourceCount>,
    pub vqe: Option<VqeReport>,
    pub qse: Option<QseOutcome>,
    pub sampling: Option<SamplingReport>,
    pub pt2: Option<Pt2Report>,
    pub energies: Option<EnergySummary>,
    /// Completed stages in order.
    pub stages: Vec<String>,
    /// Wall-clock milliseconds per stage; excluded from the JSON report.
    #[serde(skip)]
    pub timings_ms: BTreeMap<String, f64>,
    #[serde(skip)]
    pub vqe_result: Option<VqeResult>,
}

impl Report {
    fn empty(name: Option<String>) -> Self {
        Report {
            name,
            system: None,
            resources: None,
            vqe: None,
            qse: None,
            sampling: None,
            pt2: None,
            energies: None,
            stages: Vec::new(),
            timings_ms: BTreeMap::new(),
            vqe_result: None,
        }
    }

    /// Deterministic JSON (no timings).
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn timings_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.timings_ms)?)
    }
}

/// A failed stage with everything computed before it.
#[derive(Debug)]
pub struct PipelineFailure {
    pub error: Error,
    pub partial: Box<Report>,
}

impl std::fmt::Display for PipelineFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.error.fmt(f)
    }
}

impl std::error::Error for PipelineFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

struct Runner {
    report: Report,
}

impl Runner {
    fn stage<T>(&mut self, name: &str, f: impl FnOnce(&mut Report) -> Result<T>) -> std::result::Result<T, PipelineFailure> {
        let start = Instant::now();
        log::info!("stage {name}");
        match f(&mut self.report) {
            Ok(v) => {
                self.report.stages.push(name.to_string());
                self.report.timings_ms.insert(name.to_string(), start.elapsed().as_secs_f64() * 1e3);
                Ok(v)
            }
            Err(e) => Err(PipelineFailure {
                error: Error::Stage { stage: name.to_string(), source: Box::new(e) },
                partial: Box::new(std::mem::replace(&mut self.report, Report::empty(None))),
            }),
        }
    }
}

/// Stages the config asks for, in execution order.
pub fn planned_stages(run: &PreparedRun) -> Vec<&'static str> {
    let mut s = vec!["system", "resources", "vqe"];
    if run.config.qse.enabled {
        s.push("qse");
    }
    if run.config.tomography.shots > 0 {
        s.push("sampling");
    }
    if run.pt2.is_some() {
        s.push("pt2");
    }
    s.push("summary");
    s
}

struct SampleState {
    row: SampleReport,
    pt2_reference: CIVector,
    raw_cutoff: Option<f64>,
}

pub fn run_pipeline(run: &PreparedRun) -> std::result::Result<Report, PipelineFailure> {
    let cfg = &run.config;
    let ham = &run.hamiltonian;
    let mut r = Runner { report: Report::empty(cfg.name.clone()) };
    let n = ham.n_orbitals();
    let k = cfg.ansatz.n_bitstrings;

    let fci = r.stage("system", |rep| {
        let space = DeterminantSpace::for_hamiltonian(ham);
        let fci = if space.dim() <= CAPACITY_LIMIT { Some(FciOracle::new(ham, None)?.ground_state()?) } else { None };
        rep.system = Some(SystemReport {
            source: cfg.system.label(),
            n_orbitals: n,
            n_alpha: ham.n_alpha(),
            n_beta: ham.n_beta(),
            fci_energy: fci.as_ref().map(|f| f.0),
        });
        Ok(fci)
    })?;

    r.stage("resources", |rep| {
        rep.resources = Some(count_resources(&run.layout, k));
        Ok(())
    })?;

    let vqe = r.stage("vqe", |rep| {
        let bits = match &run.bitstrings {
            Some(b) => b.clone(),
            None => {
                let (_, ci) = fci.as_ref().ok_or_else(|| Error::Config("bitstrings must be given when the FCI vector is unavailable".into()))?;
                select_bitstrings(ci, k)?.into_iter().map(|(x, _)| x).collect()
            }
        };
        let mut schmidt = vec![0.0; k];
        schmidt[0] = 1.0;
        let theta = cfg.ansatz.theta.clone().unwrap_or_else(|| vec![0.0; run.layout.n_hops()]);
        let ansatz = ForgedAnsatz::new(n, bits, schmidt, run.layout.clone(), theta)?;
        let res = vqe_minimize(&ansatz, &spin_factorize(ham), &cfg.optimizer)?;
        rep.vqe = Some(VqeReport {
            bitstrings: res.ansatz.bitstrings().iter().map(|&x| string_label(x, n)).collect(),
            initial_energy: res.initial_energy,
            energy: res.energy,
            converged: res.converged,
            evaluations: res.evaluations,
            theta: res.theta().to_vec(),
            schmidt: res.schmidt().to_vec(),
        });
        rep.vqe_result = Some(res.clone());
        Ok(res)
    })?;
    let ansatz = vqe.ansatz.clone();

    let qse_options = QseOptions {
        cutoff: cfg.qse.cutoff,
        projection: cfg.qse.projection,
        tomography: TomographyOptions { bit_flip: cfg.tomography.bit_flip },
    };

    let exact_qse = if cfg.qse.enabled {
        Some(r.stage("qse", |rep| {
            let q = qse_on_ci(&ansatz.ci_vector()?, ham, cfg.qse.cutoff.unwrap_or(DEFAULT_CUTOFF))?;
            rep.qse = Some(q.clone());
            Ok(q)
        })?)
    } else {
        None
    };

    let samples: Vec<SampleState> = if cfg.tomography.shots > 0 {
        r.stage("sampling", |rep| {
            let sh = SectorHamiltonian::new(ham, &DeterminantSpace::for_hamiltonian(ham));
            let t = &cfg.tomography;
            let states = (0..t.n_samples)
                .into_par_iter()
                .map(|i| -> Result<SampleState> {
                    let seed = derive_seed(t.seed, i as u64);
                    let tomo = forged_tomography_sweep(&ansatz, t.shots, seed, &qse_options.tomography)?;
                    let rho = forged_sector_density(&tomo)?;
                    let pure = extract_ci_vector(&rho, rho.space().hf_index())?;
                    let mut row = SampleReport {
                        index: i,
                        seed,
                        ef_raw: rho.energy(&sh),
                        ef_purified: sh.expectation(pure.ci.amplitudes()),
                        qse_raw: None,
                        qse_purified: None,
                        purification_fallback: pure.fallback,
                    };
                    let mut reference = pure.ci.clone();
                    let mut raw_cutoff = None;
                    if cfg.qse.enabled {
                        let (raw, purified) = qse_from_tomography(&tomo, ham, &qse_options)?;
                        row.qse_raw = Some(raw.energy);
                        row.qse_purified = Some(purified.energy);
                        raw_cutoff = Some(raw.cutoff);
                        reference = purified.state.expect("CI route returns its state");
                    }
                    Ok(SampleState { row, pt2_reference: reference, raw_cutoff })
                })
                .collect::<Result<Vec<_>>>()?;
            let col = |f: &dyn Fn(&SampleReport) -> Option<f64>| -> Option<Stat> {
                let v: Vec<f64> = states.iter().filter_map(|s| f(&s.row)).collect();
                Stat::of(&v)
            };
            let cutoffs: Vec<f64> = states.iter().filter_map(|s| s.raw_cutoff).collect();
            rep.sampling = Some(SamplingReport {
                shots: t.shots,
                seed: t.seed,
                samples: states.iter().map(|s| s.row.clone()).collect(),
                ef_raw: col(&|s| Some(s.ef_raw)).expect("at least one sample"),
                ef_purified: col(&|s| Some(s.ef_purified)).expect("at least one sample"),
                qse_raw: col(&|s| s.qse_raw),
                qse_purified: col(&|s| s.qse_purified),
                qse_raw_cutoff: Stat::of(&cutoffs).map(|s| s.mean),
            });
            Ok(states)
        })?
    } else {
        Vec::new()
    };

    if let Some((full, window)) = &run.pt2 {
        let threshold = cfg.pt2.as_ref().map(|p| p.degeneracy_threshold).unwrap_or(crate::pt2::DEGENERACY_THRESHOLD);
        r.stage("pt2", |rep| {
            let exact_ref = match &exact_qse {
                Some(q) => q.state.clone().expect("CI route returns its state"),
                None => ansatz.ci_vector()?,
            };
            let exact = build_dyall(full, *window, &exact_ref)?
                .with_degeneracy_threshold(threshold)?
                .pt2_correction(&exact_ref, None)?;
            let sampled = if samples.is_empty() {
                None
            } else {
                let refs: Vec<CIVector> = samples.iter().map(|s| s.pt2_reference.clone()).collect();
                let mut gamma = one_rdm(&refs[0]) * 0.0;
                for c in &refs {
                    gamma += one_rdm(c);
                }
                gamma /= refs.len() as f64;
                let part = build_dyall_with_rdm(full, *window, &gamma)?.with_degeneracy_threshold(threshold)?;
                Some(part.pt2_with_sampling(&refs)?)
            };
            rep.pt2 = Some(Pt2Report { window: *window, exact, sampled });
            Ok(())
        })?;
    }

    r.stage("summary", |rep| {
        let ef_qse = exact_qse.as_ref().map(|q| q.energy);
        let sampling = rep.sampling.as_ref();
        let pt2 = rep.pt2.as_ref();
        let purified_pt2 = match (sampling, pt2) {
            (Some(s), Some(p)) => {
                let base: Vec<f64> = s.samples.iter().map(|x| x.qse_purified.unwrap_or(x.ef_purified)).collect();
                let sampled = p.sampled.as_ref().expect("sampled PT2 accompanies sampling");
                if sampled.samples.len() == base.len() {
                    let totals: Vec<f64> = base.iter().zip(&sampled.samples).map(|(a, b)| a + b).collect();
                    Stat::of(&totals)
                } else {
                    // intruder-excluded samples break the pairing; combine the means
                    Stat::of(&base).map(|b| Stat {
                        mean: b.mean + sampled.delta_e,
                        std: (b.std.powi(2) + (sampled.stderr * (sampled.n_samples as f64).sqrt()).powi(2)).sqrt(),
                        stderr: (b.stderr.powi(2) + sampled.stderr.powi(2)).sqrt(),
                        n: b.n.min(sampled.n_samples),
                    })
                }
            }
            _ => None,
        };
        rep.energies = Some(EnergySummary {
            fci: fci.as_ref().map(|f| f.0),
            ef: vqe.energy,
            ef_qse,
            ef_qse_raw: sampling.and_then(|s| s.qse_raw),
            ef_qse_purified: sampling.and_then(|s| s.qse_purified),
            ef_qse_pt2: pt2.map(|p| ef_qse.unwrap_or(vqe.energy) + p.exact.delta_e),
            ef_qse_purified_pt2: purified_pt2,
        });
        Ok(())
    })?;
    Ok(r.report)
}

/// One row of a barrier table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarrierLevel {
    pub level: String,
    pub transition_state: f64,
    pub reactants: f64,
    pub barrier_hartree: f64,
    pub barrier_kcal_mol: f64,
}

/// `ΔE‡ = E(TS) − Σ E(reactants)` for every energy level present in all reports.
pub fn barrier(ts: &Report, reactants: &[Report]) -> Result<Vec<BarrierLevel>> {
    if reactants.is_empty() {
        return Err(Error::Config("barrier needs at least one reactant".into()));
    }
    let levels = |r: &Report| -> Result<Vec<(&'static str, Option<f64>)>> {
        let e = r.energies.as_ref().ok_or_else(|| Error::validation("report has no energy summary"))?;
        Ok(vec![
            ("fci", e.fci),
            ("ef", Some(e.ef)),
            ("ef_qse", e.ef_qse),
            ("ef_qse_raw", e.ef_qse_raw.map(|s| s.mean)),
            ("ef_qse_purified", e.ef_qse_purified.map(|s| s.mean)),
            ("ef_qse_pt2", e.ef_qse_pt2),
            ("ef_qse_purified_pt2", e.ef_qse_purified_pt2.map(|s| s.mean)),
        ])
    };
    let ts_levels = levels(ts)?;
    let reactant_levels = reactants.iter().map(levels).collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for (i, (name, ts_e)) in ts_levels.iter().enumerate() {
        let Some(ts_e) = ts_e else { continue };
        let sum: Option<f64> = reactant_levels.iter().map(|l| l[i].1).sum();
        if let Some(sum) = sum {
            let b = ts_e - sum;
            out.push(BarrierLevel {
                level: name.to_string(),
                transition_state: *ts_e,
                reactants: sum,
                barrier_hartree: b,
                barrier_kcal_mol: b * HARTREE_TO_KCAL,
            });
        }
    }
    Ok(out)
}

/// FCI energy of the configured system (the `oracle` command).
pub fn oracle_energy(run: &PreparedRun) -> Result<(f64, CIVector)> {
    fci_ground_state(&run.hamiltonian, None)
}
