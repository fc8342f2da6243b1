//! Run configuration (TOML) with fail-fast loading of every input.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::det::parse_string_label;
use crate::error::{Error, Result};
use crate::fixtures;
use crate::forging::OptimizerConfig;
use crate::hamio::{read_fcidump, ActiveSpaceHamiltonian};
use crate::pt2::{ActiveWindow, DEGENERACY_THRESHOLD};
use crate::simcore::HopLayout;
use crate::subspace::ProjectionOrder;

/// Hamiltonian source: a file or a bundled fixture name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub fcidump: Option<PathBuf>,
    pub fixture: Option<String>,
}

impl SystemConfig {
    fn load(&self, what: &str) -> Result<ActiveSpaceHamiltonian> {
        match (&self.fcidump, &self.fixture) {
            (Some(path), None) => read_fcidump(path).map_err(|e| match e {
                Error::Io(io) => Error::Config(format!("cannot read {what} `{}`: {io}", path.display())),
                other => other,
            }),
            (None, Some(name)) => fixtures::bundled(name)
                .ok_or_else(|| Error::Config(format!("unknown fixture `{name}` (known: {})", fixtures::BUNDLED.join(", ")))),
            (Some(_), Some(_)) => Err(Error::Config(format!("{what}: give either `fcidump` or `fixture`, not both"))),
            (None, None) => Err(Error::Config(format!("{what}: missing `fcidump` or `fixture`"))),
        }
    }

    /// Display name.
    pub fn label(&self) -> String {
        match (&self.fcidump, &self.fixture) {
            (Some(p), _) => p.display().to_string(),
            (_, Some(f)) => f.clone(),
            _ => String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnsatzConfig {
    pub n_bitstrings: usize,
    /// MSB-first labels; chosen from FCI weights when absent.
    pub bitstrings: Option<Vec<String>>,
    /// Brick-wall hop count; the register default when absent.
    pub hops: Option<usize>,
    pub theta: Option<Vec<f64>>,
}

impl Default for AnsatzConfig {
    fn default() -> Self {
        AnsatzConfig { n_bitstrings: 2, bitstrings: None, hops: None, theta: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TomographyConfig {
    /// Shots per basis; 0 runs only the exact mode.
    pub shots: usize,
    pub seed: u64,
    /// Independent tomography repetitions; sample `i` uses `derive_seed(seed, i)`.
    pub n_samples: usize,
    pub bit_flip: f64,
}

impl Default for TomographyConfig {
    fn default() -> Self {
        TomographyConfig { shots: 0, seed: 0, n_samples: 1, bit_flip: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QseConfig {
    pub enabled: bool,
    pub cutoff: Option<f64>,
    pub projection: ProjectionOrder,
}

impl Default for QseConfig {
    fn default() -> Self {
        QseConfig { enabled: true, cutoff: None, projection: ProjectionOrder::ProjectFirst }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pt2Config {
    /// Full-space Hamiltonian; the active system must be its frozen-core window.
    pub full: SystemConfig,
    pub n_core: usize,
    pub n_active: usize,
    #[serde(default = "default_degeneracy")]
    pub degeneracy_threshold: f64,
}

fn default_degeneracy() -> f64 {
    DEGENERACY_THRESHOLD
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub system: SystemConfig,
    #[serde(default)]
    pub ansatz: AnsatzConfig,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub tomography: TomographyConfig,
    #[serde(default)]
    pub qse: QseConfig,
    #[serde(default)]
    pub pt2: Option<Pt2Config>,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Config with every input loaded and checked.
#[derive(Debug, Clone)]
pub struct PreparedRun {
    pub config: RunConfig,
    pub hamiltonian: ActiveSpaceHamiltonian,
    pub bitstrings: Option<Vec<u64>>,
    pub layout: HopLayout,
    pub pt2: Option<(ActiveSpaceHamiltonian, ActiveWindow)>,
}

fn resolve(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a TOML file; relative paths are taken from the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config `{}`: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        resolve(base, &mut cfg.system.fcidump);
        if let Some(pt2) = cfg.pt2.as_mut() {
            resolve(base, &mut pt2.full.fcidump);
        }
        resolve(base, &mut cfg.output.dir);
        Ok(cfg)
    }

    /// Minimal config for one Hamiltonian source.
    pub fn for_system(system: SystemConfig) -> Self {
        RunConfig { system, ..Default::default() }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Loads and validates every input; nothing is computed on failure.
    pub fn prepare(&self) -> Result<PreparedRun> {
        let cfg = self.clone();
        let ham = cfg.system.load("system")?;
        let n = ham.n_orbitals();
        if ham.n_alpha() != ham.n_beta() {
            return Err(Error::Config(format!(
                "the forged ansatz needs a closed-shell sector, got ({}, {})",
                ham.n_alpha(),
                ham.n_beta()
            )));
        }
        if n > crate::tomography::MAX_QUBITS {
            return Err(Error::Config(format!("{n} orbitals exceed the {}-qubit simulator limit", crate::tomography::MAX_QUBITS)));
        }
        let k = cfg.ansatz.n_bitstrings;
        if k == 0 {
            return Err(Error::Config("ansatz.n_bitstrings must be at least 1".into()));
        }
        let bitstrings = match &cfg.ansatz.bitstrings {
            None => None,
            Some(labels) => {
                if labels.len() != k {
                    return Err(Error::Config(format!("{} bitstrings listed but n_bitstrings = {k}", labels.len())));
                }
                let mut out = Vec::new();
                for l in labels {
                    let (x, len) = parse_string_label(l).map_err(|e| Error::Config(format!("bitstring `{l}`: {e}")))?;
                    if len != n || x.count_ones() as usize != ham.n_alpha() {
                        return Err(Error::Config(format!(
                            "bitstring `{l}` must have {n} digits and {} ones",
                            ham.n_alpha()
                        )));
                    }
                    out.push(x);
                }
                Some(out)
            }
        };
        let layout = match cfg.ansatz.hops {
            Some(h) => HopLayout::brick_wall(n, h).map_err(|e| Error::Config(e.to_string()))?,
            None => HopLayout::default_for(n),
        };
        if let Some(theta) = &cfg.ansatz.theta {
            if theta.len() != layout.n_hops() {
                return Err(Error::Config(format!("{} angles given for {} hops", theta.len(), layout.n_hops())));
            }
        }
        let opt = &cfg.optimizer;
        if !(opt.tol > 0.0) || opt.max_iter == 0 || !(opt.initial_step > 0.0) {
            return Err(Error::Config("optimizer needs tol > 0, max_iter > 0 and initial_step > 0".into()));
        }
        let tomo = &cfg.tomography;
        if !(0.0..=1.0).contains(&tomo.bit_flip) {
            return Err(Error::Config(format!("tomography.bit_flip {} outside [0, 1]", tomo.bit_flip)));
        }
        if tomo.shots > 0 && tomo.n_samples == 0 {
            return Err(Error::Config("tomography.n_samples must be at least 1".into()));
        }
        if let Some(c) = cfg.qse.cutoff {
            if !(c > 0.0) {
                return Err(Error::Config(format!("qse.cutoff must be positive, got {c}")));
            }
        }
        let pt2 = match &cfg.pt2 {
            None => None,
            Some(p) => {
                if !(p.degeneracy_threshold > 0.0) {
                    return Err(Error::Config("pt2.degeneracy_threshold must be positive".into()));
                }
                let full = p.full.load("pt2.full")?;
                let window = ActiveWindow { n_core: p.n_core, n_active: p.n_active };
                let derived = full.frozen_core(p.n_core, p.n_active).map_err(|e| Error::Config(format!("pt2 window: {e}")))?;
                check_window(&derived, &ham)?;
                Some((full, window))
            }
        };
        Ok(PreparedRun { config: cfg, hamiltonian: ham, bitstrings, layout, pt2 })
    }
}

/// The active system must equal the frozen-core window of the full one.
fn check_window(derived: &ActiveSpaceHamiltonian, active: &ActiveSpaceHamiltonian) -> Result<()> {
    let n = active.n_orbitals();
    if derived.n_orbitals() != n || derived.n_alpha() != active.n_alpha() || derived.n_beta() != active.n_beta() {
        return Err(Error::Config(format!(
            "pt2 window gives {} orbitals / ({}, {}) electrons, the active system has {} / ({}, {})",
            derived.n_orbitals(),
            derived.n_alpha(),
            derived.n_beta(),
            n,
            active.n_alpha(),
            active.n_beta()
        )));
    }
    let mut diff = (derived.e_core() - active.e_core()).abs();
    for p in 0..n {
        for q in 0..n {
            diff = diff.max((derived.one_body(p, q) - active.one_body(p, q)).abs());
            for r in 0..n {
                for s in 0..n {
                    diff = diff.max((derived.eri(p, q, r, s) - active.eri(p, q, r, s)).abs());
                }
            }
        }
    }
    if diff > 1e-8 {
        return Err(Error::Config(format!(
            "active integrals differ from the frozen-core window of the full system by {diff:e}"
        )));
    }
    Ok(())
}
