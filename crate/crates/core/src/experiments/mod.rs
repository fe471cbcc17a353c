//! Numerical studies: APEP versus magic capacity with a joint fit and
//! bootstrap, and typicality scans of the per-Clifford variance.
//!
//! Every experiment is a pure function of its configuration and seed. Each
//! independent task draws from its own ChaCha stream (see [`task_rng`]).

pub mod fit;
pub mod output;
pub mod stats;
pub mod sweep;
pub mod typicality;

use serde::{Deserialize, Serialize};

pub use fit::{bootstrap_fit, fit_apep_capacity, fit_from_start, FitOptions, FitResult};
pub use output::*;
pub use stats::{exact_spearman_test, sample_variance, SpearmanTest};
pub use sweep::{sweep_apep_vs_capacity, SweepRow};
pub use typicality::{aotoc_per_clifford_values, typicality_aotoc, typicality_apep, TypicalityRecord};

use crate::dense_ops::{haar_unitary, DenseOperator};
use crate::error::{Error, Result};
use crate::scrambling::task_rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub n_unitaries: usize,
    pub k_max: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n_unitaries: 1000,
            k_max: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub max_iterations: usize,
    pub rel_tolerance: f64,
    pub bootstrap_resamples: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            rel_tolerance: 1e-10,
            bootstrap_resamples: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TypicalityApepConfig {
    pub l_min: usize,
    pub l_max: usize,
    pub n_u: usize,
    pub n_c: usize,
    pub k_max: usize,
}

impl Default for TypicalityApepConfig {
    fn default() -> Self {
        Self {
            l_min: 3,
            l_max: 8,
            n_u: 4,
            n_c: 12,
            k_max: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TypicalityAotocConfig {
    pub l_min: usize,
    pub l_max: usize,
    pub n_psi: usize,
    pub n_c: usize,
    pub n_v: usize,
    pub k_max: usize,
}

impl Default for TypicalityAotocConfig {
    fn default() -> Self {
        Self {
            l_min: 4,
            l_max: 8,
            n_psi: 8,
            n_c: 50,
            n_v: 10,
            k_max: 3,
        }
    }
}

/// Complete experiment configuration; every field has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub sweep: SweepConfig,
    pub fit: FitConfig,
    pub typicality_apep: TypicalityApepConfig,
    pub typicality_aotoc: TypicalityAotocConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 2024,
            sweep: SweepConfig::default(),
            fit: FitConfig::default(),
            typicality_apep: TypicalityApepConfig::default(),
            typicality_aotoc: TypicalityAotocConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Haar-random single-qubit unitary from stream 0 of `seed`.
pub fn haar_random_unitary(seed: u64) -> DenseOperator {
    haar_random_unitary_stream(seed, 0)
}

pub fn haar_random_unitary_stream(seed: u64, task: u64) -> DenseOperator {
    let mut rng = task_rng(seed, task);
    DenseOperator::new(haar_unitary(2, &mut rng), vec![2]).expect("2x2 unitary")
}

pub(crate) fn check_range(name: &str, lo: usize, hi: usize) -> Result<()> {
    if lo > hi || lo == 0 {
        return Err(Error::InvalidArgument(format!("{name}: empty or invalid range {lo}..={hi}")));
    }
    Ok(())
}

/// Stream identifiers for independent tasks: disjoint bit fields per tag.
pub(crate) fn stream_id(tag: u64, fields: &[u64]) -> u64 {
    fields.iter().fold(tag << 56, |acc, &f| (acc.rotate_left(14)) ^ f.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scrambling::Estimate;

    #[test]
    fn config_defaults_round_trip() {
        let c = ExperimentConfig::default();
        let back = ExperimentConfig::from_json(&c.to_json().unwrap()).unwrap();
        assert_eq!(c, back);
        let partial = ExperimentConfig::from_json(r#"{"seed": 7, "sweep": {"n_unitaries": 5}}"#).unwrap();
        assert_eq!(partial.seed, 7);
        assert_eq!(partial.sweep.n_unitaries, 5);
        assert_eq!(partial.sweep.k_max, 20);
        assert!(ExperimentConfig::from_json(r#"{"sed": 7}"#).is_err());
    }

    #[test]
    fn haar_unitary_moments() {
        let xs: Vec<f64> = (0..100_000)
            .map(|i| haar_random_unitary_stream(11, i).matrix()[(0, 0)].norm_sqr())
            .collect();
        let e = Estimate::from_samples(&xs);
        assert!(e.agrees_with(0.5, 3.0), "{e:?}");
        let u = haar_random_unitary(3);
        assert!((u.matrix().determinant().norm() - 1.0).abs() < 1e-12);
        assert_eq!(u.matrix(), haar_random_unitary(3).matrix());
    }
}
