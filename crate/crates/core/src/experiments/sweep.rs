//! APEP versus magic capacity over Haar-random single-qubit unitaries.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{haar_random_unitary_stream, stream_id, SweepConfig};
use crate::clifford_moments::avg_apep_infinite;
use crate::dense_ops::{DenseOperator, QuantumChannel};
use crate::error::{Error, Result};
use crate::magic_capacity::magic_capacity;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub unitary: usize,
    pub capacity: f64,
    pub k: usize,
    pub apep: f64,
}

/// Rows for every unitary `i` (stream derived from `seed`, `i`) and
/// `k = 1..=k_max`, ordered by unitary then `k`.
pub fn sweep_apep_vs_capacity(cfg: &SweepConfig, seed: u64) -> Result<Vec<SweepRow>> {
    if cfg.n_unitaries == 0 || cfg.k_max == 0 {
        return Err(Error::InvalidArgument("sweep needs at least one unitary and one k".into()));
    }
    let unitaries: Vec<DenseOperator> = (0..cfg.n_unitaries)
        .map(|i| haar_random_unitary_stream(seed, stream_id(1, &[i as u64])))
        .collect();
    sweep_unitaries(&unitaries, cfg.k_max)
}

/// The sweep on a given list of single-qubit unitaries.
pub fn sweep_unitaries(unitaries: &[DenseOperator], k_max: usize) -> Result<Vec<SweepRow>> {
    let per: Vec<Vec<SweepRow>> = unitaries
        .par_iter()
        .enumerate()
        .map(|(i, u)| {
            let capacity = magic_capacity(&QuantumChannel::unitary(u.clone())?)?.value;
            (1..=k_max)
                .map(|k| {
                    Ok(SweepRow {
                        unitary: i,
                        capacity,
                        k,
                        apep: avg_apep_infinite(u, k)?,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(per.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford_moments::rz_apep_closed_form;
    use crate::dense_ops::{rz, s_gate};

    #[test]
    fn clifford_and_rz_rows() {
        let rows = sweep_unitaries(&[s_gate(), rz(0.3)], 4).unwrap();
        assert_eq!(rows.len(), 8);
        for r in &rows[..4] {
            assert!((r.capacity - 1.0).abs() < 1e-6 && r.apep.abs() < 1e-12);
        }
        for r in &rows[4..] {
            assert!((r.apep - rz_apep_closed_form(0.3, r.k)).abs() < 1e-12);
            assert!(r.capacity > 1.0);
        }
    }

    #[test]
    fn sweep_is_deterministic_and_in_range() {
        let cfg = SweepConfig {
            n_unitaries: 6,
            k_max: 3,
        };
        let a = sweep_apep_vs_capacity(&cfg, 5).unwrap();
        let b = sweep_apep_vs_capacity(&cfg, 5).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|r| (0.0..1.0).contains(&r.apep)));
    }
}
