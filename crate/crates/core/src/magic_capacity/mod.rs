//! Robustness of magic over pure stabilizer states and the magic capacity of
//! single-qubit channels.

pub mod lp;

use std::collections::{HashSet, VecDeque};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

pub use lp::{LinearProgram, LpCertificate, LpSolution, LpTolerances};

use crate::dense_ops::{hadamard, s_gate, CMatrix, DenseOperator, QuantumChannel, C64};
use crate::error::{cap, Error, Result};
use crate::pauli_clifford::enumerate_paulis_capped;
use crate::scrambling::apply_single_qubit;

pub const STABILIZER_ENUM_CAP: usize = 3;

/// All pure `n`-qubit stabilizer states.
#[derive(Clone, Debug)]
pub struct StabilizerStateSet {
    n: usize,
    vectors: Vec<DVector<C64>>,
    states: Vec<DenseOperator>,
}

fn phase_key(v: &DVector<C64>) -> Vec<(i64, i64)> {
    let lead = v.iter().find(|z| z.norm() > 1e-6).copied().unwrap_or(C64::new(1.0, 0.0));
    let ph = lead.conj() / lead.norm();
    v.iter()
        .map(|z| {
            let w = z * ph;
            ((w.re * 1e6).round() as i64, (w.im * 1e6).round() as i64)
        })
        .collect()
}

fn apply_cnot(ctrl: usize, tgt: usize, n: usize, v: &DVector<C64>) -> DVector<C64> {
    let cb = n - 1 - ctrl;
    let tb = n - 1 - tgt;
    DVector::from_fn(v.len(), |i, _| if (i >> cb) & 1 == 1 { v[i ^ (1 << tb)] } else { v[i] })
}

impl StabilizerStateSet {
    /// Orbit of `|0…0⟩` under H, S and CNOT, deduplicated up to global phase.
    pub fn enumerate(n: usize) -> Result<Self> {
        cap("stabilizer enumeration qubits", n, STABILIZER_ENUM_CAP)?;
        if n == 0 {
            return Err(Error::InvalidArgument("n must be positive".into()));
        }
        let d = 1usize << n;
        let h = hadamard().into_matrix();
        let s = s_gate().into_matrix();
        let mut start = DVector::zeros(d);
        start[0] = C64::new(1.0, 0.0);
        let mut seen = HashSet::new();
        seen.insert(phase_key(&start));
        let mut queue = VecDeque::from([start.clone()]);
        let mut vectors = vec![start];
        while let Some(v) = queue.pop_front() {
            let mut next = Vec::new();
            for q in 0..n {
                next.push(apply_single_qubit(&h, q, n, &v));
                next.push(apply_single_qubit(&s, q, n, &v));
                for t in 0..n {
                    if t != q {
                        next.push(apply_cnot(q, t, n, &v));
                    }
                }
            }
            for w in next {
                if seen.insert(phase_key(&w)) {
                    vectors.push(w.clone());
                    queue.push_back(w);
                }
            }
        }
        let states = vectors
            .iter()
            .map(|v| DenseOperator::new(v * v.adjoint(), vec![2; n]).unwrap())
            .collect();
        Ok(Self { n, vectors, states })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[DenseOperator] {
        &self.states
    }

    pub fn vectors(&self) -> &[DVector<C64>] {
        &self.vectors
    }

    /// Number of Pauli strings with expectation ±1 on state `i`.
    pub fn stabilizer_group_size(&self, i: usize) -> Result<usize> {
        let v = &self.vectors[i];
        let mut count = 0;
        for p in enumerate_paulis_capped(self.n, STABILIZER_ENUM_CAP)? {
            let e = (v.adjoint() * p.apply_to(v))[(0, 0)];
            if (e.norm() - 1.0).abs() < 1e-9 {
                count += 1;
            }
        }
        Ok(count)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RobustnessSolution {
    pub value: f64,
    pub q: Vec<f64>,
    pub residual: f64,
    pub certificate: LpCertificate,
}

/// Real equality rows for `Σ qᵢ φᵢ = ρ`: diagonal, then real and imaginary
/// parts of the strict upper triangle.
fn hermitian_coordinates(m: &CMatrix) -> Vec<f64> {
    let d = m.nrows();
    let mut out: Vec<f64> = (0..d).map(|i| m[(i, i)].re).collect();
    for i in 0..d {
        for j in i + 1..d {
            out.push(m[(i, j)].re);
            out.push(m[(i, j)].im);
        }
    }
    out
}

fn validate_density(rho: &DenseOperator, d: usize) -> Result<()> {
    if rho.dim() != d {
        return Err(Error::DimensionMismatch(format!("state dimension {} vs basis {d}", rho.dim())));
    }
    if !rho.is_hermitian(1e-10) {
        return Err(Error::InvalidArgument("state is not Hermitian".into()));
    }
    if (rho.trace().re - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidArgument("state does not have unit trace".into()));
    }
    let eig = nalgebra::SymmetricEigen::new(hermitian_as_real(rho.matrix()));
    if eig.eigenvalues.min() < -1e-10 {
        return Err(Error::InvalidArgument("state is not positive semidefinite".into()));
    }
    Ok(())
}

/// Real symmetric `[[Re, −Im], [Im, Re]]` embedding with the same spectrum
/// (each eigenvalue doubled).
fn hermitian_as_real(m: &CMatrix) -> DMatrix<f64> {
    let d = m.nrows();
    DMatrix::from_fn(2 * d, 2 * d, |i, j| {
        let z = m[(i % d, j % d)];
        match (i < d, j < d) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

pub fn robustness(rho: &DenseOperator, basis: &StabilizerStateSet) -> Result<RobustnessSolution> {
    robustness_with(rho, basis, &LpTolerances::default())
}

/// `min ‖q‖₁` subject to `Σ qᵢ φᵢ = ρ`, as an LP in `q = q⁺ − q⁻`.
pub fn robustness_with(rho: &DenseOperator, basis: &StabilizerStateSet, tol: &LpTolerances) -> Result<RobustnessSolution> {
    let d = 1usize << basis.n;
    validate_density(rho, d)?;
    let m = basis.len();
    let cols: Vec<Vec<f64>> = basis.states.iter().map(|s| hermitian_coordinates(s.matrix())).collect();
    let rows = d * d;
    let a = DMatrix::from_fn(rows, 2 * m, |i, j| if j < m { cols[j][i] } else { -cols[j - m][i] });
    let b = DVector::from_vec(hermitian_coordinates(rho.matrix()));
    let c = DVector::from_element(2 * m, 1.0);
    let sol = LinearProgram::new(a, b, c)?.solve_with(tol)?;
    if !sol.certificate.is_valid(tol) {
        return Err(Error::Numerical(format!("LP certificate failed: {:?}", sol.certificate)));
    }
    let q: Vec<f64> = (0..m).map(|i| sol.x[i] - sol.x[m + i]).collect();
    let mut recon = CMatrix::zeros(d, d);
    for (qi, s) in q.iter().zip(&basis.states) {
        recon += s.matrix() * C64::from(*qi);
    }
    let residual = (recon - rho.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(RobustnessSolution {
        value: q.iter().map(|v| v.abs()).sum(),
        q,
        residual,
        certificate: sol.certificate,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct MagicCapacity {
    pub value: f64,
    /// Index of a maximizing input in the two-qubit stabilizer set.
    pub argmax: usize,
    pub robustness: Vec<f64>,
    pub max_duality_gap: f64,
}

/// `(M ⊗ I)(ρ)` with `M` acting on the first qubit.
pub fn apply_on_first(channel: &QuantumChannel, rho: &DenseOperator) -> Result<DenseOperator> {
    let id = CMatrix::identity(2, 2);
    let mut acc = CMatrix::zeros(4, 4);
    for k in channel.schrodinger_kraus() {
        let kk = k.matrix().kronecker(&id);
        acc += &kk * rho.matrix() * kk.adjoint();
    }
    DenseOperator::new(acc, vec![2, 2])
}

pub fn magic_capacity(channel: &QuantumChannel) -> Result<MagicCapacity> {
    let basis = StabilizerStateSet::enumerate(2)?;
    let all: Vec<usize> = (0..basis.len()).collect();
    magic_capacity_over(channel, &basis, &all)
}

/// Capacity restricted to the maximally entangled stabilizer inputs.
pub fn magic_capacity_maximally_entangled(channel: &QuantumChannel) -> Result<MagicCapacity> {
    let basis = StabilizerStateSet::enumerate(2)?;
    let inputs: Vec<usize> = (0..basis.len())
        .filter(|&i| {
            let red = basis.states[i].partial_trace(&[1]).unwrap();
            red.max_abs_diff(&DenseOperator::identity(&[2]).scale(C64::from(0.5))) < 1e-10
        })
        .collect();
    magic_capacity_over(channel, &basis, &inputs)
}

fn magic_capacity_over(channel: &QuantumChannel, basis: &StabilizerStateSet, inputs: &[usize]) -> Result<MagicCapacity> {
    if channel.dim() != 2 {
        return Err(Error::DimensionMismatch("magic capacity is implemented for single-qubit channels".into()));
    }
    let sols: Vec<RobustnessSolution> = inputs
        .par_iter()
        .map(|&i| robustness(&apply_on_first(channel, &basis.states[i])?, basis))
        .collect::<Result<_>>()?;
    let (best, value) = sols
        .iter()
        .enumerate()
        .map(|(i, s)| (i, s.value))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| Error::InvalidArgument("no inputs".into()))?;
    Ok(MagicCapacity {
        value,
        argmax: inputs[best],
        max_duality_gap: sols.iter().map(|s| s.certificate.duality_gap).fold(0.0, f64::max),
        robustness: sols.into_iter().map(|s| s.value).collect(),
    })
}
