//! Small statistics helpers.

use serde::Serialize;

use crate::error::{cap, Error, Result};

pub const SPEARMAN_EXACT_CAP: usize = 10;

/// Unbiased sample variance; 0 for fewer than two samples.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = xs.iter().sum::<f64>() / n as f64;
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Linear-interpolated percentile (`q` in [0, 1]) of unsorted data.
pub fn percentile(xs: &[f64], q: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        return f64::NAN;
    }
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

/// Average ranks (1-based) with ties sharing their mean rank.
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut r = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &t in &idx[i..=j] {
            r[t] = avg;
        }
        i = j + 1;
    }
    r
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SpearmanTest {
    pub rho: f64,
    /// One-sided `P(ρ ≤ observed)` under exchangeability.
    pub p_negative: f64,
    pub n: usize,
}

/// Spearman rank correlation with an exact permutation p-value for a
/// negative association.
pub fn exact_spearman_test(x: &[f64], y: &[f64]) -> Result<SpearmanTest> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidArgument("need two equal-length samples of size >= 2".into()));
    }
    cap("exact Spearman sample size", x.len(), SPEARMAN_EXACT_CAP)?;
    let rx = ranks(x);
    let ry = ranks(y);
    let rho = pearson(&rx, &ry);
    let mut perm = ry.clone();
    let mut total = 0usize;
    let mut hits = 0usize;
    permute(&mut perm, 0, &mut |p| {
        total += 1;
        if pearson(&rx, p) <= rho + 1e-12 {
            hits += 1;
        }
    });
    Ok(SpearmanTest {
        rho,
        p_negative: hits as f64 / total as f64,
        n: x.len(),
    })
}

fn permute(v: &mut Vec<f64>, start: usize, f: &mut dyn FnMut(&[f64])) {
    if start == v.len() {
        f(v);
        return;
    }
    for i in start..v.len() {
        v.swap(start, i);
        permute(v, start + 1, f);
        v.swap(start, i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spearman_exact_values() {
        let x = [4.0, 5.0, 6.0, 7.0];
        let t = exact_spearman_test(&x, &[0.4, 0.3, 0.2, 0.1]).unwrap();
        assert!((t.rho + 1.0).abs() < 1e-12);
        assert!((t.p_negative - 1.0 / 24.0).abs() < 1e-12);
        let t = exact_spearman_test(&x, &[0.1, 0.2, 0.3, 0.4]).unwrap();
        assert!((t.p_negative - 1.0).abs() < 1e-12);
        let t = exact_spearman_test(&[1.0, 2.0, 3.0, 4.0, 5.0], &[5.0, 4.0, 3.0, 1.0, 2.0]).unwrap();
        assert!((t.rho + 0.9).abs() < 1e-12);
        assert!((t.p_negative - 5.0 / 120.0).abs() < 1e-12);
    }

    #[test]
    fn ranks_with_ties() {
        assert_eq!(ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn percentiles() {
        let xs = [5.0, 1.0, 3.0, 2.0, 4.0];
        assert_eq!(percentile(&xs, 0.5), 3.0);
        assert_eq!(percentile(&xs, 0.0), 1.0);
        assert_eq!(percentile(&xs, 1.0), 5.0);
        assert!((sample_variance(&[1.0, 2.0, 3.0]) - 1.0).abs() < 1e-15);
    }
}
