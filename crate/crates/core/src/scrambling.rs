//! Bipartite A-OTOC: exact swap-form evaluation, the commutator-norm
//! definition by Monte Carlo, and the pure-state estimator.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dense_ops::{
    haar_state, haar_unitary, permutation_operator, site_to_copy_major, CMatrix, DenseOperator, NaturalRep,
    QuantumChannel, C64, DENSE_DIM_CAP, ONE, ZERO,
};
use crate::error::{cap, Error, Result};
use crate::pauli_clifford::{CliffordTableau, PauliString};

/// Qubit sites split into A and B.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bipartition {
    in_a: Vec<bool>,
}

impl Bipartition {
    pub fn new(in_a: Vec<bool>) -> Result<Self> {
        if in_a.is_empty() {
            return Err(Error::InvalidArgument("empty bipartition".into()));
        }
        Ok(Self { in_a })
    }

    /// First `n_a` sites in A.
    pub fn split(n_sites: usize, n_a: usize) -> Result<Self> {
        if n_a > n_sites {
            return Err(Error::InvalidArgument(format!("{n_a} A sites out of {n_sites}")));
        }
        Self::new((0..n_sites).map(|i| i < n_a).collect())
    }

    /// Equal halves `⌊L/2⌋ | ⌈L/2⌉`; symmetric when L is even.
    pub fn halves(n_sites: usize) -> Result<Self> {
        Self::split(n_sites, n_sites / 2)
    }

    pub fn n_sites(&self) -> usize {
        self.in_a.len()
    }

    pub fn in_a(&self, site: usize) -> bool {
        self.in_a[site]
    }

    pub fn labels(&self) -> &[bool] {
        &self.in_a
    }

    pub fn n_a(&self) -> usize {
        self.in_a.iter().filter(|&&a| a).count()
    }

    pub fn n_b(&self) -> usize {
        self.n_sites() - self.n_a()
    }

    pub fn d_a(&self) -> usize {
        1 << self.n_a()
    }

    pub fn d_b(&self) -> usize {
        1 << self.n_b()
    }

    pub fn a_sites(&self) -> Vec<usize> {
        (0..self.n_sites()).filter(|&i| self.in_a[i]).collect()
    }

    pub fn b_sites(&self) -> Vec<usize> {
        (0..self.n_sites()).filter(|&i| !self.in_a[i]).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        self.n_a() == self.n_b()
    }

    /// Basis-index mask of the A sites (site `j` is bit `L-1-j`).
    pub fn a_mask(&self) -> u64 {
        let n = self.n_sites();
        self.a_sites().iter().fold(0, |m, &j| m | 1 << (n - 1 - j))
    }

    fn check(&self, dim: usize) -> Result<()> {
        if 1usize << self.n_sites() != dim {
            return Err(Error::DimensionMismatch(format!(
                "cut over {} qubits, operator dimension {dim}",
                self.n_sites()
            )));
        }
        Ok(())
    }
}

/// Monte Carlo estimate with its standard error (sample SD / √n).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl Estimate {
    /// Sample mean and standard error; zero error for a single sample.
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Self {
            mean,
            stderr: (var / n as f64).sqrt(),
            n,
        }
    }

    /// `|mean - target| ≤ z·stderr`, with a small absolute floor.
    pub fn agrees_with(&self, target: f64, z: f64) -> bool {
        (self.mean - target).abs() <= z * self.stderr + 1e-12
    }
}

/// `G(E) = (1/d²) Tr((d_B S − S_AA′) E^{⊗2}(S_AA′))`.
///
/// Evaluated by expanding `S_AA′ = (1/d_A) Σ_{P_A} P_A ⊗ P_A`, which turns it
/// into `(1/(d² d_A)) Σ_P [d_B Tr(Y_P²) − Tr((Tr_B Y_P)²)]` with
/// `Y_P = E(P_A ⊗ I_B)`. No two-copy matrix is formed.
pub fn aotoc_exact(e: &QuantumChannel, cut: &Bipartition) -> Result<f64> {
    let d = e.dim();
    cut.check(d)?;
    cap("two-copy dimension", d * d, DENSE_DIM_CAP)?;
    let n = cut.n_sites();
    let a = cut.a_sites();
    let (da, db) = (cut.d_a() as f64, cut.d_b() as f64);
    let mut total = 0.0;
    for x in 0..(1u64 << cut.n_a()) {
        for z in 0..(1u64 << cut.n_a()) {
            let p = embed_a_pauli(n, &a, x, z)?;
            let y = e.apply(&p.to_dense()?)?;
            let full = (y.matrix() * y.matrix()).trace().re;
            let ya = y.partial_trace(&a)?;
            let red = (ya.matrix() * ya.matrix()).trace().re;
            total += db * full - red;
        }
    }
    Ok(total / ((d * d) as f64 * da))
}

/// Pauli on the A sites given `n_a`-bit patterns in A-site order.
fn embed_a_pauli(n: usize, a: &[usize], x: u64, z: u64) -> Result<PauliString> {
    let na = a.len();
    let mut xm = 0u64;
    let mut zm = 0u64;
    for (i, &site) in a.iter().enumerate() {
        let src = na - 1 - i;
        let dst = n - 1 - site;
        xm |= ((x >> src) & 1) << dst;
        zm |= ((z >> src) & 1) << dst;
    }
    PauliString::new(n, xm, zm, 0)
}

/// Literal two-copy evaluation of the swap formula with dense `S` and
/// `S_AA′`; use as an oracle for small systems.
pub fn aotoc_swap_dense(e: &QuantumChannel, cut: &Bipartition) -> Result<f64> {
    let d = e.dim();
    cut.check(d)?;
    cap("two-copy dimension", d * d, 1024)?;
    let n = cut.n_sites();
    let s = permutation_operator(&[1, 0], d, 2)?;
    let swap1 = permutation_operator(&[1, 0], 2, 2)?;
    let id1 = DenseOperator::identity(&[2, 2]);
    let mut factors = (0..n).map(|i| if cut.in_a(i) { swap1.clone() } else { id1.clone() });
    let first = factors.next().unwrap();
    let saa = site_to_copy_major(&factors.fold(first, |acc, f| acc.kron(&f)), n, 2)?;
    let ks = e.schrodinger_kraus();
    let mut evolved = CMatrix::zeros(d * d, d * d);
    for ki in &ks {
        for kj in &ks {
            let kk = ki.matrix().kronecker(kj.matrix());
            evolved += &kk * saa.matrix() * kk.adjoint();
        }
    }
    let lhs = s.matrix() * C64::from(cut.d_b() as f64) - saa.matrix();
    Ok((lhs * evolved).trace().re / (d * d) as f64)
}

/// `(1/2d) E ‖[I_A ⊗ X_B, E(Y_A ⊗ I_B)]‖₂²` over Haar unitaries `X_B`, `Y_A`.
pub fn aotoc_definition_mc(e: &QuantumChannel, cut: &Bipartition, n_samples: usize, seed: u64) -> Result<Estimate> {
    let d = e.dim();
    cut.check(d)?;
    cap("Monte Carlo qubits", cut.n_sites(), 4)?;
    if n_samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let n = cut.n_sites();
    let a = cut.a_sites();
    let b = cut.b_sites();
    let mut order = a.clone();
    order.extend(&b);
    let mut inverse = vec![0; n];
    for (i, &o) in order.iter().enumerate() {
        inverse[o] = i;
    }
    let (da, db) = (cut.d_a(), cut.d_b());
    let id_a = CMatrix::identity(da, da);
    let id_b = CMatrix::identity(db, db);
    let samples: Vec<f64> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = task_rng(seed, i as u64);
            let xb = haar_unitary(db, &mut rng);
            let ya = haar_unitary(da, &mut rng);
            // build in (A, B) order, then move to site order
            let xop = DenseOperator::new(id_a.kronecker(&xb), vec![2; n]).unwrap();
            let yop = DenseOperator::new(ya.kronecker(&id_b), vec![2; n]).unwrap();
            let xop = xop.permute_subsystems(&inverse).unwrap();
            let yop = yop.permute_subsystems(&inverse).unwrap();
            let ey = e.apply(&yop).unwrap();
            let comm = xop.matrix() * ey.matrix() - ey.matrix() * xop.matrix();
            comm.iter().map(|z| z.norm_sqr()).sum::<f64>() / (2.0 * d as f64)
        })
        .collect();
    Ok(Estimate::from_samples(&samples))
}

/// Reproducible per-task stream derived from one master seed.
pub fn task_rng(seed: u64, task: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(task);
    rng
}

/// Action of a channel's Schrödinger Kraus operators on state vectors.
pub trait KrausAction: Sync {
    fn dim(&self) -> usize;
    fn n_kraus(&self) -> usize;
    fn apply_kraus(&self, index: usize, v: &DVector<C64>) -> DVector<C64>;
}

impl KrausAction for QuantumChannel {
    fn dim(&self) -> usize {
        QuantumChannel::dim(self)
    }

    fn n_kraus(&self) -> usize {
        self.kraus().len()
    }

    fn apply_kraus(&self, index: usize, v: &DVector<C64>) -> DVector<C64> {
        let k = &self.schrodinger_kraus()[index];
        k.matrix() * v
    }
}

/// `Ω = C† (E^{⊗k} ⊗ I) C` acting on vectors without forming `Ω`'s Kraus
/// matrices: each Kraus operator is `C† (K_{i_1} ⊗ … ⊗ K_{i_k} ⊗ I) C`.
pub struct CliffordSandwich {
    c: CMatrix,
    c_adj: CMatrix,
    noise: Vec<CMatrix>,
    k: usize,
    n: usize,
}

/// Largest register for [`CliffordSandwich`] (single-copy vectors).
pub const SANDWICH_QUBIT_CAP: usize = 10;

impl CliffordSandwich {
    pub fn new(c: &CliffordTableau, noise: &QuantumChannel, k: usize) -> Result<Self> {
        let n = c.n_qubits();
        cap("sandwich qubits", n, SANDWICH_QUBIT_CAP)?;
        if noise.dim() != 2 {
            return Err(Error::InvalidArgument("noise must act on one qubit".into()));
        }
        if k == 0 || k > n {
            return Err(Error::InvalidArgument(format!("k = {k} outside 1..={n}")));
        }
        let c = dense_clifford(c)?;
        Ok(Self {
            c_adj: c.adjoint(),
            c,
            noise: noise.schrodinger_kraus().into_iter().map(|k| k.into_matrix()).collect(),
            k,
            n,
        })
    }

    /// Dense channel (for small registers).
    pub fn to_channel(&self) -> Result<QuantumChannel> {
        let mut ks = Vec::with_capacity(self.n_kraus());
        let d = 1 << self.n;
        for idx in 0..self.n_kraus() {
            let mut m = CMatrix::zeros(d, d);
            for col in 0..d {
                let mut e = DVector::from_element(d, ZERO);
                e[col] = ONE;
                m.set_column(col, &self.apply_kraus(idx, &e));
            }
            ks.push(DenseOperator::new(m, vec![2; self.n])?);
        }
        QuantumChannel::with_tolerance(ks, crate::dense_ops::Picture::Schrodinger, 1e-10)
    }
}

/// Dense Clifford unitary for registers up to [`SANDWICH_QUBIT_CAP`].
pub fn dense_clifford(c: &CliffordTableau) -> Result<CMatrix> {
    Ok(c.to_dense_capped(SANDWICH_QUBIT_CAP)?.into_matrix())
}

/// Applies a 2×2 matrix to qubit `q` of an `n`-qubit vector.
pub fn apply_single_qubit(m: &CMatrix, q: usize, n: usize, v: &DVector<C64>) -> DVector<C64> {
    let stride = 1usize << (n - 1 - q);
    let mut out = v.clone();
    for base in 0..v.len() {
        if base & stride != 0 {
            continue;
        }
        let (a0, a1) = (v[base], v[base | stride]);
        out[base] = m[(0, 0)] * a0 + m[(0, 1)] * a1;
        out[base | stride] = m[(1, 0)] * a0 + m[(1, 1)] * a1;
    }
    out
}

impl KrausAction for CliffordSandwich {
    fn dim(&self) -> usize {
        1 << self.n
    }

    fn n_kraus(&self) -> usize {
        self.noise.len().pow(self.k as u32)
    }

    fn apply_kraus(&self, index: usize, v: &DVector<C64>) -> DVector<C64> {
        let mut w = &self.c * v;
        let r = self.noise.len();
        let mut idx = index;
        for q in (0..self.k).rev() {
            w = apply_single_qubit(&self.noise[idx % r], q, self.n, &w);
            idx /= r;
        }
        &self.c_adj * w
    }
}

/// `N_A · E_ψ[S_L(Tr_B ρ) − d_B (S_L(ρ) − (1 − 1/d_B))]` with
/// `ρ = Ω(ψ ⊗ I/d_B)`, `S_L(ρ) = 1 − Tr ρ²`, `N_A = (d_A + 1)/d_A` and Haar
/// pure states `ψ` on A.
pub fn aotoc_state_estimator<K: KrausAction + ?Sized>(
    omega: &K,
    cut: &Bipartition,
    n_psi: usize,
    seed: u64,
) -> Result<Estimate> {
    Ok(Estimate::from_samples(&aotoc_state_samples(omega, cut, n_psi, seed)?))
}

/// Per-state terms of [`aotoc_state_estimator`].
pub fn aotoc_state_samples<K: KrausAction + ?Sized>(
    omega: &K,
    cut: &Bipartition,
    n_psi: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let d = omega.dim();
    cut.check(d)?;
    cap("state estimator qubits", cut.n_sites(), 8)?;
    if n_psi == 0 {
        return Err(Error::InvalidArgument("need at least one state".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (da, db) = (cut.d_a(), cut.d_b());
    let n = cut.n_sites();
    let a_sites = cut.a_sites();
    let b_sites = cut.b_sites();
    // site-order basis index from (a, b) digits
    let index_of = |a: usize, b: usize| -> usize {
        let mut idx = 0usize;
        for (i, &s) in a_sites.iter().enumerate() {
            idx |= ((a >> (a_sites.len() - 1 - i)) & 1) << (n - 1 - s);
        }
        for (i, &s) in b_sites.iter().enumerate() {
            idx |= ((b >> (b_sites.len() - 1 - i)) & 1) << (n - 1 - s);
        }
        idx
    };
    let na = (da as f64 + 1.0) / da as f64;
    let mut out = Vec::with_capacity(n_psi);
    for _ in 0..n_psi {
        let psi = haar_state(da, &mut rng);
        let mut vecs: Vec<DVector<C64>> = Vec::with_capacity(db * omega.n_kraus());
        for b in 0..db {
            let mut input = DVector::from_element(d, ZERO);
            for a in 0..da {
                input[index_of(a, b)] = psi[a];
            }
            for kidx in 0..omega.n_kraus() {
                vecs.push(omega.apply_kraus(kidx, &input));
            }
        }
        // ρ = (1/d_B) Σ |v><v|
        let scale = 1.0 / db as f64;
        let mut purity = 0.0;
        for i in 0..vecs.len() {
            for j in 0..vecs.len() {
                purity += vecs[i].dotc(&vecs[j]).norm_sqr();
            }
        }
        purity *= scale * scale;
        let mut red = CMatrix::zeros(da, da);
        for v in &vecs {
            let m = CMatrix::from_fn(da, db, |a, b| v[index_of(a, b)]);
            red += &m * m.adjoint();
        }
        red *= C64::from(scale);
        let red_purity: f64 = red.iter().map(|z| z.norm_sqr()).sum();
        let s_red = 1.0 - red_purity;
        let s_full = 1.0 - purity;
        let s_min = 1.0 - 1.0 / db as f64;
        out.push(na * (s_red - db as f64 * (s_full - s_min)));
    }
    Ok(out)
}

/// `‖X/2‖₂^{2k} − (Tr X / 4)^{2k}` for a single-qubit natural representation.
pub fn haar_avg_aotoc_infinite(x: &NaturalRep, k: usize) -> Result<f64> {
    if x.x().dim() != 4 {
        return Err(Error::DimensionMismatch(format!(
            "expected a 4x4 natural representation, got {}",
            x.x().dim()
        )));
    }
    let hs = x.x().norm_sq() / 4.0;
    let tr = x.trace().re / 4.0;
    Ok(hs.powi(k as i32) - tr.powi(2 * k as i32))
}
