//! Error-weighted Pearson correlation, shot sweeps and plateau detection.

use std::io::Write;

use num_traits::Float;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forging::{ForgedAnsatz, Preparation};
use crate::rng::derive_seed;
use crate::tomography::{sample_state_tomography, TomographyOptions};

/// Smallest admissible variance factor in the correlation denominator.
pub const MIN_SPREAD: f64 = 1e-14;
/// Default plateau tolerance in r.
pub const PLATEAU_THRESHOLD: f64 = 0.005;

/// Which weighting to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PearsonVariant {
    /// Weighted mean and variance for X only, plain mean and variance for Y.
    #[default]
    AsPrinted,
    /// Weighted means and variances for both series.
    Symmetric,
}

/// Estimates `x` with errors `x_err` against reference values `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSeries<T> {
    x: Vec<T>,
    x_err: Vec<T>,
    y: Vec<T>,
}

impl<T: Float> WeightedSeries<T> {
    pub fn new(x: Vec<T>, x_err: Vec<T>, y: Vec<T>) -> Result<Self> {
        if x.len() != y.len() || x.len() != x_err.len() {
            return Err(Error::validation(format!(
                "series lengths differ: x {}, errors {}, y {}",
                x.len(),
                x_err.len(),
                y.len()
            )));
        }
        if x.len() < 2 {
            return Err(Error::validation("correlation needs at least two points"));
        }
        if let Some(e) = x_err.iter().find(|e| !(**e >= T::zero() && **e <= T::one())) {
            return Err(Error::validation(format!(
                "error {} outside [0, 1]",
                e.to_f64().unwrap_or(f64::NAN)
            )));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::validation("non-finite series value"));
        }
        Ok(WeightedSeries { x, x_err, y })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// `w_i = 1 − ε_i²`.
    pub fn weights(&self) -> Vec<T> {
        self.x_err.iter().map(|&e| T::one() - e * e).collect()
    }

    pub fn pearson(&self, variant: PearsonVariant) -> Result<T> {
        let w = self.weights();
        let sum_w = w.iter().fold(T::zero(), |a, &b| a + b);
        if !(sum_w > T::zero()) {
            return Err(Error::UndefinedCorrelation("all weights are zero".into()));
        }
        let n = T::from(self.len()).expect("length fits the scalar");
        let x_bar = w.iter().zip(&self.x).fold(T::zero(), |a, (&wi, &xi)| a + wi * xi) / sum_w;
        let y_bar = match variant {
            PearsonVariant::AsPrinted => self.y.iter().fold(T::zero(), |a, &b| a + b) / n,
            PearsonVariant::Symmetric => w.iter().zip(&self.y).fold(T::zero(), |a, (&wi, &yi)| a + wi * yi) / sum_w,
        };
        let (mut cov, mut var_x, mut var_y) = (T::zero(), T::zero(), T::zero());
        for i in 0..self.len() {
            let dx = self.x[i] - x_bar;
            let dy = self.y[i] - y_bar;
            cov = cov + w[i] * dx * dy;
            var_x = var_x + w[i] * dx * dx;
            var_y = var_y
                + match variant {
                    PearsonVariant::AsPrinted => dy * dy,
                    PearsonVariant::Symmetric => w[i] * dy * dy,
                };
        }
        let (sx, sy) = (var_x.sqrt(), var_y.sqrt());
        let floor = T::from(MIN_SPREAD).expect("representable");
        if !(sx > floor) || !(sy > floor) {
            return Err(Error::UndefinedCorrelation(format!(
                "zero spread (x {:e}, y {:e})",
                sx.to_f64().unwrap_or(f64::NAN),
                sy.to_f64().unwrap_or(f64::NAN)
            )));
        }
        Ok(cov / (sx * sy))
    }
}

/// Correlation in the printed (X-weighted) form.
pub fn weighted_pearson<T: Float>(x: &[T], x_err: &[T], y: &[T]) -> Result<T> {
    WeightedSeries::new(x.to_vec(), x_err.to_vec(), y.to_vec())?.pearson(PearsonVariant::AsPrinted)
}

/// Textbook Pearson coefficient.
pub fn pearson<T: Float>(x: &[T], y: &[T]) -> Result<T> {
    weighted_pearson(x, &vec![T::zero(); x.len()], y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub prep_label: String,
    pub shots: usize,
    pub seed: u64,
    pub r_weighted: f64,
}

/// Detected plateau point; `BeyondGrid` compares greater than any shot count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Plateau {
    At(usize),
    BeyondGrid,
}

impl std::fmt::Display for Plateau {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Plateau::At(s) => write!(f, "{s}"),
            Plateau::BeyondGrid => write!(f, "beyond grid"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotSweepResult {
    /// Sorted by (preparation, shots, seed).
    pub rows: Vec<SweepRow>,
    pub plateaus: Vec<(String, Plateau)>,
}

impl ShotSweepResult {
    /// `(shots, mean r)` over seeds for one preparation.
    pub fn mean_curve(&self, prep_label: &str) -> Vec<(usize, f64)> {
        mean_by_shots(self.rows.iter().filter(|r| r.prep_label == prep_label))
    }

    pub fn plateau(&self, prep_label: &str) -> Option<Plateau> {
        self.plateaus.iter().find(|(l, _)| l == prep_label).map(|(_, p)| *p)
    }

    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for row in &self.rows {
            out.serialize(row)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn mean_by_shots<'a>(rows: impl Iterator<Item = &'a SweepRow>) -> Vec<(usize, f64)> {
    let mut acc: std::collections::BTreeMap<usize, (f64, usize)> = Default::default();
    for r in rows {
        let e = acc.entry(r.shots).or_default();
        e.0 += r.r_weighted;
        e.1 += 1;
    }
    acc.into_iter().map(|(s, (sum, n))| (s, sum / n as f64)).collect()
}

/// Smallest shot count whose mean r is within `threshold` of the best mean.
/// When only the largest grid point qualifies, the curve has not flattened
/// inside the grid and `BeyondGrid` is returned.
pub fn detect_plateau(rows: &[SweepRow], threshold: f64) -> Result<Plateau> {
    let curve = mean_by_shots(rows.iter());
    if curve.len() < 3 {
        return Err(Error::validation("plateau detection needs at least three shot values"));
    }
    if !(threshold >= 0.0) {
        return Err(Error::Config(format!("plateau threshold must be non-negative, got {threshold}")));
    }
    let best = curve.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    let first = curve.iter().position(|c| c.1 >= best - threshold).expect("the maximum qualifies");
    Ok(if first + 1 == curve.len() { Plateau::BeyondGrid } else { Plateau::At(curve[first].0) })
}

/// Correlates sampled Bloch vectors with the exact one over all `4^n` Pauli strings.
pub fn shot_sweep(
    ansatz: &ForgedAnsatz,
    preps: &[Preparation],
    shot_grid: &[usize],
    seeds: &[u64],
    options: &TomographyOptions,
) -> Result<ShotSweepResult> {
    if shot_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("shot grid must be strictly ascending".into()));
    }
    if preps.is_empty() || shot_grid.is_empty() || seeds.is_empty() {
        return Err(Error::Config("shot sweep needs preparations, shots and seeds".into()));
    }
    let states = preps
        .iter()
        .map(|p| {
            let state = ansatz.prepared_state(p)?;
            let exact = sample_state_tomography(&state, 0, 0, &TomographyOptions::default())?.values_and_errors()?.0;
            Ok((p.label(), state, exact))
        })
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize, u64)> = (0..preps.len())
        .flat_map(|i| shot_grid.iter().flat_map(move |&s| seeds.iter().map(move |&seed| (i, s, seed))))
        .collect();
    let mut rows = jobs
        .par_iter()
        .map(|&(i, shots, seed)| {
            let (label, state, exact) = &states[i];
            let sampled = sample_state_tomography(state, shots, derive_seed(seed, i as u64), options)?;
            let (x, err) = sampled.values_and_errors()?;
            let r = weighted_pearson(&x, &err, exact)?;
            Ok(SweepRow { prep_label: label.clone(), shots, seed, r_weighted: r })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| (&a.prep_label, a.shots, a.seed).cmp(&(&b.prep_label, b.shots, b.seed)));
    let plateaus = if shot_grid.len() >= 3 {
        states
            .iter()
            .map(|(label, _, _)| {
                let mine: Vec<SweepRow> = rows.iter().filter(|r| &r.prep_label == label).cloned().collect();
                Ok((label.clone(), detect_plateau(&mine, PLATEAU_THRESHOLD)?))
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    Ok(ShotSweepResult { rows, plateaus })
}
