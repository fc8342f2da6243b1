//! Synthetic integral fixtures.
//!
//! The bundled systems are Pariser-Parr-Pople π models (one orbital per carbon,
//! Ohno-interpolated repulsion, zero differential overlap) transformed to the
//! Hückel molecular-orbital basis, so orbitals are ordered by energy and the
//! aufbau determinant is the natural reference. Everything is deterministic.

use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::hamio::{write_fcidump, ActiveSpaceHamiltonian};

/// Random integrals with 8-fold symmetry and a mildly diagonal-dominant spectrum.
pub fn random_hamiltonian(n: usize, n_alpha: usize, n_beta: usize, seed: u64) -> ActiveSpaceHamiltonian {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h1 = DMatrix::zeros(n, n);
    for p in 0..n {
        for q in 0..=p {
            let v = if p == q {
                -1.0 + 0.5 * p as f64 + rng.random_range(-0.1..0.1)
            } else {
                rng.random_range(-0.2..0.2)
            };
            h1[(p, q)] = v;
            h1[(q, p)] = v;
        }
    }
    let mut vals = std::collections::HashMap::new();
    for (p, q, r, s) in crate::hamio::unique_quartets(n) {
        let v = if p == q && r == s {
            0.3 + rng.random_range(0.0..0.2)
        } else {
            rng.random_range(-0.05..0.05)
        };
        vals.insert((p, q, r, s), v);
    }
    let e_core = rng.random_range(-1.0..1.0);
    ActiveSpaceHamiltonian::from_fn(n, n_alpha, n_beta, e_core, |p, q| h1[(p, q)], |p, q, r, s| vals[&(p, q, r, s)])
        .expect("random integrals are symmetric")
}

/// π-site model: 2D coordinates (bohr), bonded pairs with hopping (hartree),
/// and the on-site repulsion.
#[derive(Debug, Clone)]
pub struct PppModel {
    pub coords: Vec<[f64; 2]>,
    pub bonds: Vec<(usize, usize, f64)>,
    pub hubbard_u: f64,
}

impl PppModel {
    fn gamma(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.coords[i], self.coords[j]);
        let r = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        self.hubbard_u / (1.0 + (self.hubbard_u * r).powi(2)).sqrt()
    }

    /// Half-filled Hamiltonian in the Hückel orbital basis.
    pub fn hamiltonian(&self) -> ActiveSpaceHamiltonian {
        let n = self.coords.len();
        let mut hop = DMatrix::zeros(n, n);
        for &(i, j, t) in &self.bonds {
            hop[(i, j)] = -t;
            hop[(j, i)] = -t;
        }
        let gamma = DMatrix::from_fn(n, n, |i, j| self.gamma(i, j));
        // site one-body: hopping plus attraction to the other unit cores
        let mut h_site = hop.clone();
        let mut e_core = 0.0;
        for i in 0..n {
            h_site[(i, i)] = -(0..n).filter(|&j| j != i).map(|j| gamma[(i, j)]).sum::<f64>();
            for j in 0..i {
                e_core += gamma[(i, j)];
            }
        }

        let eig = SymmetricEigen::new(hop);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
        let mut c = DMatrix::zeros(n, n);
        for (col, &k) in order.iter().enumerate() {
            let mut v = eig.eigenvectors.column(k).into_owned();
            let pivot = v.iter().position(|x| x.abs() > 1e-8).unwrap_or(0);
            if v[pivot] < 0.0 {
                v = -v;
            }
            c.set_column(col, &v);
        }

        let h_mo = c.transpose() * &h_site * &c;
        let h_mo = (&h_mo + h_mo.transpose()) * 0.5;
        // (pq|rs) = Σ_ij C_ip C_iq γ_ij C_jr C_js
        let pair = |p: usize, q: usize| -> Vec<f64> { (0..n).map(|i| c[(i, p)] * c[(i, q)]).collect() };
        let mut cache = std::collections::HashMap::new();
        for (p, q, r, s) in crate::hamio::unique_quartets(n) {
            let d1 = pair(p, q);
            let d2 = pair(r, s);
            let mut v = 0.0;
            for i in 0..n {
                for j in 0..n {
                    v += d1[i] * gamma[(i, j)] * d2[j];
                }
            }
            cache.insert((p, q, r, s), v);
        }
        let half = n / 2;
        ActiveSpaceHamiltonian::from_fn(
            n,
            n - half,
            half,
            e_core,
            |p, q| h_mo[(p, q)],
            |p, q, r, s| cache[&(p, q, r, s)],
        )
        .expect("model integrals are symmetric")
    }
}

const BOND: f64 = 2.65;

fn zigzag(n: usize) -> Vec<[f64; 2]> {
    let dx = BOND * (30f64).to_radians().cos();
    let dy = BOND * (30f64).to_radians().sin();
    (0..n).map(|i| [i as f64 * dx, if i % 2 == 1 { dy } else { 0.0 }]).collect()
}

fn ring(n: usize, radius: f64) -> Vec<[f64; 2]> {
    (0..n)
        .map(|i| {
            let a = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            [radius * a.cos(), radius * a.sin()]
        })
        .collect()
}

fn chain_bonds(n: usize, strong: f64, weak: f64) -> Vec<(usize, usize, f64)> {
    (0..n - 1).map(|i| (i, i + 1, if i % 2 == 0 { strong } else { weak })).collect()
}

/// Names of the bundled fixtures.
pub const BUNDLED: [&str; 6] = [
    "ethylene_2e2o",
    "stretched_2e2o",
    "butadiene_4e4o",
    "hexatriene_6e6o",
    "ts_6e6o",
    "ts_8e8o",
];

pub fn ppp_model(name: &str) -> Option<PppModel> {
    let u = 0.40;
    Some(match name {
        "ethylene_2e2o" => PppModel {
            coords: zigzag(2),
            bonds: vec![(0, 1, 0.10)],
            hubbard_u: u,
        },
        "stretched_2e2o" => PppModel {
            coords: vec![[0.0, 0.0], [6.0, 0.0]],
            bonds: vec![(0, 1, 0.02)],
            hubbard_u: u,
        },
        "butadiene_4e4o" => PppModel {
            coords: zigzag(4),
            bonds: chain_bonds(4, 0.10, 0.08),
            hubbard_u: u,
        },
        "hexatriene_6e6o" => PppModel {
            coords: zigzag(6),
            bonds: chain_bonds(6, 0.10, 0.08),
            hubbard_u: u,
        },
        // diene (0-3) and ene (4-5) joined by two stretched forming bonds
        "ts_6e6o" => PppModel {
            coords: ring(6, 3.2),
            bonds: vec![(0, 1, 0.095), (1, 2, 0.085), (2, 3, 0.095), (4, 5, 0.10), (3, 4, 0.035), (5, 0, 0.035)],
            hubbard_u: u,
        },
        "ts_8e8o" => PppModel {
            coords: ring(8, 3.6),
            bonds: vec![
                (0, 1, 0.095),
                (1, 2, 0.085),
                (2, 3, 0.095),
                (3, 4, 0.08),
                (4, 5, 0.10),
                (5, 6, 0.035),
                (6, 7, 0.09),
                (7, 0, 0.035),
            ],
            hubbard_u: u,
        },
        _ => return None,
    })
}

pub fn bundled(name: &str) -> Option<ActiveSpaceHamiltonian> {
    ppp_model(name).map(|m| m.hamiltonian())
}

/// Full-space companion for perturbation theory: (full Hamiltonian, first
/// active orbital, active orbital count).
pub fn pt2_companion(name: &str) -> Option<(ActiveSpaceHamiltonian, usize, usize)> {
    match name {
        "butadiene_4o_2act" => Some((bundled("butadiene_4e4o")?, 1, 2)),
        "hexatriene_6o_4act" => Some((bundled("hexatriene_6e6o")?, 1, 4)),
        _ => None,
    }
}

pub const PT2_COMPANIONS: [&str; 2] = ["butadiene_4o_2act", "hexatriene_6o_4act"];

/// Writes every bundled fixture plus the frozen-core active parts of the PT2 companions.
pub fn write_bundled(dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for name in BUNDLED {
        let path = dir.join(format!("{name}.fcidump"));
        std::fs::write(&path, write_fcidump(&bundled(name).expect("bundled name")))?;
        written.push(path);
    }
    for name in PT2_COMPANIONS {
        let (full, start, len) = pt2_companion(name).expect("companion name");
        let active = full.frozen_core(start, len)?;
        let path = dir.join(format!("{name}_active.fcidump"));
        std::fs::write(&path, write_fcidump(&active))?;
        written.push(path);
    }
    Ok(written)
}
