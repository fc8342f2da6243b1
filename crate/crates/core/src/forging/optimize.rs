//! Nelder-Mead simplex search with seeded restarts, used for the forged VQE.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{angles_from_schmidt, schmidt_from_angles, ForgedAnsatz, ForgedEvaluator};
use crate::error::{Error, Result};
use crate::hamio::SpinFactorizedHamiltonian;
use crate::rng::{derive_seed, stream_rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    /// Iterations per simplex run.
    pub max_iter: usize,
    /// Absolute energy spread across the simplex at convergence.
    pub tol: f64,
    pub seed: u64,
    /// Extra random starts on top of the initial point.
    pub restarts: usize,
    pub initial_step: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            max_iter: 4000,
            tol: 1e-8,
            seed: 0,
            restarts: 16,
            initial_step: 0.4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Minimizes `f` from `x0`. `on_iter(iteration, best_f)` is called once per iteration.
pub fn nelder_mead(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    step: f64,
    max_iter: usize,
    tol: f64,
    mut on_iter: impl FnMut(usize, f64),
) -> NelderMeadResult {
    let n = x0.len();
    let mut evals = 0;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    if n == 0 {
        let v = eval(x0, &mut evals);
        return NelderMeadResult { x: vec![], f: v, iterations: 0, evaluations: evals, converged: true };
    }
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0, &mut evals)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut converged = false;
    let mut iter = 0;
    while iter < max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        on_iter(iter, simplex[0].1);
        if simplex[n].1 - simplex[0].1 <= tol {
            converged = true;
            break;
        }
        iter += 1;
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };
        let xr = along(-alpha);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = along(-gamma);
            let fe = eval(&xe, &mut evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[n].1 {
                let xc = along(-rho);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            } else {
                let xc = along(rho);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            };
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for v in simplex.iter_mut().skip(1) {
                    for (xi, bi) in v.0.iter_mut().zip(&best) {
                        *xi = bi + sigma * (*xi - bi);
                    }
                    v.1 = eval(&v.0, &mut evals);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, fx) = simplex.swap_remove(0);
    NelderMeadResult { x, f: fx, iterations: iter, evaluations: evals, converged }
}

/// One convergence-trace row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub start: usize,
    pub iteration: usize,
    pub energy: f64,
}

#[derive(Debug, Clone)]
pub struct VqeResult {
    pub ansatz: ForgedAnsatz,
    pub energy: f64,
    pub initial_energy: f64,
    /// The winning start met the tolerance.
    pub converged: bool,
    pub evaluations: usize,
    pub trace: Vec<TraceRow>,
}

impl VqeResult {
    pub fn theta(&self) -> &[f64] {
        self.ansatz.theta()
    }

    pub fn schmidt(&self) -> &[f64] {
        self.ansatz.schmidt()
    }

    pub fn write_trace_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for row in &self.trace {
            out.serialize(row)?;
        }
        out.flush()?;
        Ok(())
    }
}

const POLISH_ROUNDS: usize = 6;

/// Minimizes the forged energy over hop angles and Schmidt angles.
///
/// Start 0 is the ansatz's own parameters; starts `1..=restarts` are seeded
/// random points. Each start is re-simplexed from its optimum until the gain
/// drops below `tol`. The best point over all starts wins (lowest index on ties).
pub fn vqe_minimize(ansatz: &ForgedAnsatz, ham: &SpinFactorizedHamiltonian, config: &OptimizerConfig) -> Result<VqeResult> {
    if !(config.tol > 0.0) || config.max_iter == 0 {
        return Err(Error::Config("optimizer needs tol > 0 and max_iter > 0".into()));
    }
    let eval = ForgedEvaluator::new(ham, ansatz.n_electrons_per_spin())?;
    let h = ansatz.layout().n_hops();
    let to_params = |theta: &[f64], schmidt: &[f64]| -> Vec<f64> {
        theta.iter().copied().chain(angles_from_schmidt(schmidt)).collect()
    };
    let energy_at = |x: &[f64]| -> f64 {
        let lam = schmidt_from_angles(&x[h..]);
        eval.energy(ansatz.layout(), &x[..h], ansatz.bitstrings(), &lam)
            .unwrap_or(f64::INFINITY)
    };
    let x0 = to_params(ansatz.theta(), ansatz.schmidt());
    let initial_energy = energy_at(&x0);
    if !initial_energy.is_finite() {
        return Err(Error::Numerical("initial forged energy is not finite".into()));
    }

    let starts: Vec<Vec<f64>> = (0..=config.restarts)
        .map(|s| {
            if s == 0 {
                x0.clone()
            } else {
                let mut rng = stream_rng(derive_seed(config.seed, s as u64), 0);
                (0..x0.len())
                    .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
                    .collect()
            }
        })
        .collect();

    let runs: Vec<(NelderMeadResult, usize, Vec<TraceRow>)> = starts
        .par_iter()
        .enumerate()
        .map(|(s, x)| {
            let mut trace = Vec::new();
            let mut total_evals = 0;
            let mut best = nelder_mead(energy_at, x, config.initial_step, config.max_iter, config.tol, |_, _| {});
            let mut iter_offset = 0;
            for round in 0..POLISH_ROUNDS {
                let step = config.initial_step * 0.5f64.powi(round as i32);
                let r = nelder_mead(energy_at, &best.x, step, config.max_iter, config.tol, |i, e| {
                    trace.push(TraceRow { start: s, iteration: iter_offset + i, energy: e })
                });
                iter_offset += r.iterations + 1;
                total_evals += r.evaluations;
                let gain = best.f - r.f;
                let done = gain <= config.tol && r.converged;
                if r.f <= best.f {
                    best = r;
                }
                if done {
                    break;
                }
            }
            (best, total_evals, trace)
        })
        .collect();

    let mut winner = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.0.f < runs[winner].0.f {
            winner = i;
        }
    }
    let evaluations = runs.iter().map(|r| r.1 + r.0.evaluations).sum();
    let trace = runs.iter().flat_map(|r| r.2.iter().cloned()).collect();
    let (best, _, _) = &runs[winner];
    let (x, energy, converged) = if best.f <= initial_energy {
        (best.x.clone(), best.f, best.converged)
    } else {
        (x0.clone(), initial_energy, false)
    };
    let result = ansatz.with_parameters(x[..h].to_vec(), schmidt_from_angles(&x[h..]))?;
    if !converged {
        log::warn!("forged VQE did not meet tol {:e}; returning best point", config.tol);
    }
    Ok(VqeResult {
        ansatz: result,
        energy,
        initial_energy,
        converged,
        evaluations,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = nelder_mead(f, &[-1.2, 1.0], 0.5, 10_000, 1e-14, |_, _| {});
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] - 1.0).abs() < 1e-4, "{:?}", r.x);
    }

    #[test]
    fn stationary_start_does_not_move_far() {
        let f = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let r = nelder_mead(f, &[0.0, 0.0, 0.0], 1e-6, 1000, 1e-10, |_, _| {});
        assert!(r.f <= 1e-10);
    }
}
