//! Joint Levenberg–Marquardt fit of `P = 1 − |cos(a(K − 1))|^{b k}` and a
//! unitary-level block bootstrap.

use nalgebra::{Matrix2, Vector2};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::stats::percentile;
use super::sweep::SweepRow;
use super::{stream_id, FitConfig};
use crate::error::{Error, Result};
use crate::scrambling::task_rng;

const ABS_COS_FLOOR: f64 = 1e-300;
const MAX_REL_STEP: f64 = 0.5;

#[derive(Clone, Copy, Debug)]
pub struct FitOptions {
    pub max_iterations: usize,
    pub rel_tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            rel_tolerance: 1e-10,
        }
    }
}

impl From<&FitConfig> for FitOptions {
    fn from(c: &FitConfig) -> Self {
        Self {
            max_iterations: c.max_iterations,
            rel_tolerance: c.rel_tolerance,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FitResult {
    pub a: f64,
    pub b: f64,
    pub a_stderr: f64,
    pub b_stderr: f64,
    pub a_ci95: (f64, f64),
    pub b_ci95: (f64, f64),
    pub bootstrap_samples: Vec<(f64, f64)>,
    pub bootstrap_failures: usize,
    pub rss: f64,
    pub iterations: usize,
    pub converged: bool,
    pub n_rows: usize,
}

/// Ansatz value and gradient in `(a, b)`. `d|x|/dx` is taken as `sign(x)`.
pub fn ansatz(a: f64, b: f64, capacity: f64, k: usize) -> (f64, [f64; 2]) {
    let x = capacity - 1.0;
    let c = (a * x).cos();
    let s = c.abs().max(ABS_COS_FLOOR);
    let e = b * k as f64;
    let p = s.powf(e);
    let da = e * s.powf(e - 1.0) * c.signum() * (a * x).sin() * x;
    let db = -(k as f64) * s.ln() * p;
    (1.0 - p, [da, db])
}

fn rss(rows: &[SweepRow], a: f64, b: f64) -> f64 {
    rows.iter().map(|r| (r.apep - ansatz(a, b, r.capacity, r.k).0).powi(2)).sum()
}

fn normal_equations(rows: &[SweepRow], a: f64, b: f64) -> (Matrix2<f64>, Vector2<f64>, f64) {
    let mut jtj = Matrix2::zeros();
    let mut jtr = Vector2::zeros();
    let mut s = 0.0;
    for r in rows {
        let (f, g) = ansatz(a, b, r.capacity, r.k);
        let res = r.apep - f;
        let j = Vector2::new(g[0], g[1]);
        jtj += j * j.transpose();
        jtr += j * res;
        s += res * res;
    }
    (jtj, jtr, s)
}

/// LM from `(a0, b0)` with Marquardt diagonal scaling.
pub fn fit_from_start(rows: &[SweepRow], a0: f64, b0: f64, opts: &FitOptions) -> Result<FitResult> {
    if rows.is_empty() {
        return Err(Error::InvalidArgument("empty dataset".into()));
    }
    let (mut a, mut b) = (a0, b0);
    let mut lambda = 1e-3;
    let (mut jtj, mut jtr, mut cur) = normal_equations(rows, a, b);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        let mut damped = jtj;
        for i in 0..2 {
            damped[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
        }
        let Some(step) = damped.lu().solve(&jtr) else {
            lambda *= 10.0;
            continue;
        };
        let (na, nb) = (a + step[0], b + step[1]);
        // steps beyond half the parameter scale overshoot into the a²b valley
        let bounded = step[0].abs() <= MAX_REL_STEP * a.abs().max(0.1) && step[1].abs() <= MAX_REL_STEP * b.abs().max(0.1);
        let trial = if bounded { rss(rows, na, nb) } else { f64::INFINITY };
        if trial.is_finite() && trial <= cur {
            let rel = (cur - trial) / cur.max(f64::MIN_POSITIVE);
            a = na;
            b = nb;
            (jtj, jtr, cur) = normal_equations(rows, a, b);
            // a tiny decrease under heavy damping is slow progress, not convergence
            let lightly_damped = lambda < 1.0;
            lambda = (lambda / 10.0).max(1e-15);
            if rel < opts.rel_tolerance && lightly_damped {
                converged = true;
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e16 {
                // no descent direction left at working precision
                converged = true;
                break;
            }
        }
    }
    // the ansatz depends on a only through |cos(a x)|
    a = a.abs();
    let dof = rows.len().saturating_sub(2).max(1) as f64;
    let sigma2 = cur / dof;
    let cov = jtj.try_inverse().map(|m| m * sigma2);
    let (a_se, b_se) = cov.map_or((f64::NAN, f64::NAN), |c| (c[(0, 0)].max(0.0).sqrt(), c[(1, 1)].max(0.0).sqrt()));
    Ok(FitResult {
        a,
        b,
        a_stderr: a_se,
        b_stderr: b_se,
        a_ci95: (a - 1.96 * a_se, a + 1.96 * a_se),
        b_ci95: (b - 1.96 * b_se, b + 1.96 * b_se),
        bootstrap_samples: Vec::new(),
        bootstrap_failures: 0,
        rss: cur,
        iterations,
        converged,
        n_rows: rows.len(),
    })
}

/// Starting points for the multi-start fit.
pub const FIT_STARTS: [(f64, f64); 9] = [
    (1.0, 1.0),
    (0.6, 0.6),
    (0.6, 1.5),
    (1.5, 0.6),
    (1.5, 1.5),
    (1.2, 1.0),
    (1.9, 1.0),
    (0.8, 1.9),
    (1.9, 1.9),
];

/// Multi-start LM; returns the converged fit with the lowest RSS.
pub fn fit_apep_capacity(rows: &[SweepRow], opts: &FitOptions) -> Result<FitResult> {
    let fits: Vec<FitResult> = FIT_STARTS
        .par_iter()
        .map(|&(a0, b0)| fit_from_start(rows, a0, b0, opts))
        .collect::<Result<_>>()?;
    fits.into_iter()
        .filter(|f| f.rss.is_finite())
        .min_by(|x, y| x.rss.total_cmp(&y.rss))
        .ok_or_else(|| Error::Numerical("no start produced a finite fit".into()))
}

/// Resamples unitaries with replacement (all `k` rows of a unitary move
/// together), refits from the full-data optimum, and attaches percentile
/// 95% intervals to the full-data fit.
pub fn bootstrap_fit(rows: &[SweepRow], resamples: usize, seed: u64, opts: &FitOptions) -> Result<FitResult> {
    let mut full = fit_apep_capacity(rows, opts)?;
    let mut blocks: Vec<Vec<SweepRow>> = Vec::new();
    for r in rows {
        match blocks.last_mut() {
            Some(bl) if bl[0].unitary == r.unitary => bl.push(r.clone()),
            _ => blocks.push(vec![r.clone()]),
        }
    }
    let nb = blocks.len();
    let outcomes: Vec<Option<(f64, f64)>> = (0..resamples)
        .into_par_iter()
        .map(|i| {
            let mut rng = task_rng(seed, stream_id(3, &[i as u64]));
            let sample: Vec<SweepRow> = (0..nb)
                .flat_map(|_| blocks[rng.random_range(0..nb)].iter().cloned())
                .collect();
            match fit_from_start(&sample, full.a, full.b, opts) {
                Ok(f) if f.converged && f.a.is_finite() && f.b.is_finite() => Some((f.a, f.b)),
                _ => None,
            }
        })
        .collect();
    let samples: Vec<(f64, f64)> = outcomes.iter().flatten().copied().collect();
    full.bootstrap_failures = resamples - samples.len();
    if !samples.is_empty() {
        let av: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let bv: Vec<f64> = samples.iter().map(|s| s.1).collect();
        full.a_ci95 = (percentile(&av, 0.025), percentile(&av, 0.975));
        full.b_ci95 = (percentile(&bv, 0.025), percentile(&bv, 0.975));
    }
    full.bootstrap_samples = samples;
    Ok(full)
}
