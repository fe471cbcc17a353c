//! Variance over random Cliffords of per-instance APEP and A-OTOC values.

use rand::RngCore;
use rayon::prelude::*;
use serde::Serialize;

use super::stats::{mean, sample_variance};
use super::{check_range, haar_random_unitary_stream, stream_id, TypicalityAotocConfig, TypicalityApepConfig};
use crate::dense_ops::{DenseOperator, QuantumChannel};
use crate::error::Result;
use crate::nonlocal_magic::apep_single_copy;
use crate::pauli_clifford::random_clifford;
use crate::scrambling::{aotoc_state_estimator, task_rng, Bipartition, CliffordSandwich};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TypicalityRecord {
    pub l: usize,
    pub k: usize,
    /// Variance over Cliffords, one entry per noise unitary.
    pub variances: Vec<f64>,
    pub mean_variance: f64,
    /// Sample SD of `variances` over √(number of unitaries).
    pub stderr: f64,
}

impl TypicalityRecord {
    fn new(l: usize, k: usize, variances: Vec<f64>) -> Self {
        let n = variances.len() as f64;
        let mean_variance = mean(&variances);
        let stderr = (sample_variance(&variances) / n).sqrt();
        Self {
            l,
            k,
            variances,
            mean_variance,
            stderr,
        }
    }
}

/// Ordered `(L, k)` records for `k ≤ min(k_max, L)`.
fn assemble(
    l_min: usize,
    l_max: usize,
    k_max: usize,
    n_u: usize,
    values: impl Fn(usize, usize, usize) -> Vec<f64>,
) -> Vec<TypicalityRecord> {
    let mut out = Vec::new();
    for l in l_min..=l_max {
        for k in 1..=k_max.min(l) {
            let vars = (0..n_u).map(|u| sample_variance(&values(l, k, u))).collect();
            out.push(TypicalityRecord::new(l, k, vars));
        }
    }
    out
}

/// APEP of `C† (U^{⊗k} ⊗ I)` over `n_c` Cliffords for each of `n_u` Haar `U`.
pub fn typicality_apep(cfg: &TypicalityApepConfig, seed: u64) -> Result<Vec<TypicalityRecord>> {
    check_range("L", cfg.l_min.max(2), cfg.l_max)?;
    check_range("k", 1, cfg.k_max)?;
    let us: Vec<DenseOperator> = (0..cfg.n_u)
        .map(|u| haar_random_unitary_stream(seed, stream_id(4, &[u as u64])))
        .collect();
    typicality_apep_for(cfg, &us, seed)
}

/// [`typicality_apep`] with given noise unitaries.
pub fn typicality_apep_for(cfg: &TypicalityApepConfig, us: &[DenseOperator], seed: u64) -> Result<Vec<TypicalityRecord>> {
    let mut tasks = Vec::new();
    for l in cfg.l_min..=cfg.l_max {
        for u in 0..us.len() {
            for c in 0..cfg.n_c {
                tasks.push((l, u, c));
            }
        }
    }
    // values[(l, u, c)][k - 1]
    let vals: Vec<Vec<f64>> = tasks
        .par_iter()
        .map(|&(l, u, c)| {
            let mut rng = task_rng(seed, stream_id(5, &[l as u64, u as u64, c as u64]));
            let cl = random_clifford(l, &mut rng)?;
            let cut = Bipartition::halves(l)?;
            (1..=cfg.k_max.min(l))
                .map(|k| apep_single_copy(&cl, &us[u], k, l, &cut))
                .collect()
        })
        .collect::<Result<_>>()?;
    let index = |l: usize, u: usize, c: usize| ((l - cfg.l_min) * us.len() + u) * cfg.n_c + c;
    Ok(assemble(cfg.l_min, cfg.l_max, cfg.k_max, us.len(), |l, k, u| {
        (0..cfg.n_c).map(|c| vals[index(l, u, c)][k - 1]).collect()
    }))
}

/// Per-Clifford A-OTOC state estimates (each over `n_psi` Haar inputs) for
/// `Ω = C† (V^{⊗k} ⊗ I) C` at `L` qubits, symmetric-as-possible cut.
pub fn aotoc_per_clifford_values(
    v: &QuantumChannel,
    k: usize,
    l: usize,
    n_c: usize,
    n_psi: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    (0..n_c)
        .into_par_iter()
        .map(|c| aotoc_clifford_value(v, k, l, n_psi, seed, &[c as u64]))
        .collect()
}

/// One Clifford (stream from `tag`) and the state estimate for it.
fn aotoc_clifford_value(v: &QuantumChannel, k: usize, l: usize, n_psi: usize, seed: u64, tag: &[u64]) -> Result<f64> {
    let mut fields = vec![l as u64, k as u64];
    fields.extend_from_slice(tag);
    let mut rng = task_rng(seed, stream_id(7, &fields));
    let cl = random_clifford(l, &mut rng)?;
    let omega = CliffordSandwich::new(&cl, v, k)?;
    Ok(aotoc_state_estimator(&omega, &Bipartition::halves(l)?, n_psi, rng.next_u64())?.mean)
}

/// A-OTOC over `n_c` Cliffords for each of `n_v` Haar noise unitaries.
pub fn typicality_aotoc(cfg: &TypicalityAotocConfig, seed: u64) -> Result<Vec<TypicalityRecord>> {
    check_range("L", cfg.l_min.max(2), cfg.l_max)?;
    check_range("k", 1, cfg.k_max)?;
    let vs: Vec<QuantumChannel> = (0..cfg.n_v)
        .map(|v| QuantumChannel::unitary(haar_random_unitary_stream(seed, stream_id(6, &[v as u64]))))
        .collect::<Result<_>>()?;
    typicality_aotoc_for(cfg, &vs, seed)
}

/// [`typicality_aotoc`] with given noise channels.
pub fn typicality_aotoc_for(cfg: &TypicalityAotocConfig, vs: &[QuantumChannel], seed: u64) -> Result<Vec<TypicalityRecord>> {
    let mut tasks = Vec::new();
    for l in cfg.l_min..=cfg.l_max {
        for k in 1..=cfg.k_max.min(l) {
            for v in 0..vs.len() {
                for c in 0..cfg.n_c {
                    tasks.push((l, k, v, c));
                }
            }
        }
    }
    let vals: Vec<f64> = tasks
        .par_iter()
        .map(|&(l, k, v, c)| aotoc_clifford_value(&vs[v], k, l, cfg.n_psi, seed, &[v as u64, c as u64]))
        .collect::<Result<_>>()?;
    let mut lookup = std::collections::HashMap::new();
    for (t, x) in tasks.iter().zip(vals) {
        lookup.insert(*t, x);
    }
    Ok(assemble(cfg.l_min, cfg.l_max, cfg.k_max, vs.len(), |l, k, v| {
        (0..cfg.n_c).map(|c| lookup[&(l, k, v, c)]).collect()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford_moments::avg_aotoc_finite_l;
    use crate::dense_ops::rz;
    use crate::scrambling::Estimate;

    #[test]
    fn identity_noise_has_zero_variance() {
        let cfg = TypicalityApepConfig {
            l_min: 3,
            l_max: 4,
            n_u: 2,
            n_c: 4,
            k_max: 2,
        };
        let id = DenseOperator::identity(&[2]);
        let recs = typicality_apep_for(&cfg, &[id.clone(), id], 1).unwrap();
        assert!(recs.iter().all(|r| r.mean_variance.abs() < 1e-20));
        let cfg = TypicalityAotocConfig {
            l_min: 4,
            l_max: 4,
            n_psi: 2,
            n_c: 4,
            n_v: 1,
            k_max: 2,
        };
        let recs = typicality_aotoc_for(&cfg, &[QuantumChannel::identity(&[2])], 1).unwrap();
        assert!(recs.iter().all(|r| r.mean_variance.abs() < 1e-20));
    }

    #[test]
    fn deterministic_records() {
        let cfg = TypicalityApepConfig {
            l_min: 3,
            l_max: 4,
            n_u: 2,
            n_c: 3,
            k_max: 2,
        };
        assert_eq!(typicality_apep(&cfg, 8).unwrap(), typicality_apep(&cfg, 8).unwrap());
    }

    #[test]
    fn per_clifford_values_match_engine() {
        let v = QuantumChannel::unitary(rz(1.1)).unwrap();
        let xs = aotoc_per_clifford_values(&v, 1, 4, 400, 8, 21).unwrap();
        let e = Estimate::from_samples(&xs);
        let want = avg_aotoc_finite_l(&v, 1, 4).unwrap();
        assert!(e.agrees_with(want, 3.0), "{e:?} vs {want}");
    }
}
