//! Fourth-moment Clifford twirl `Φ(O) = E_C C^{⊗4} O C^{†⊗4}`.
//!
//! The commutant of `C^{⊗4}` is spanned by `Q T_π` and `(I − Q) T_π`, so
//! `Φ(O) = Σ_π [b⁺_π Q T_π + b⁻_π (I − Q) T_π]` with
//! `b⁺_π = Σ_σ W⁺(πσ) Tr(O Q T_σ)` and `b⁻_π = Σ_σ W⁻(πσ) Tr(O (I−Q) T_σ)`.
//! `W±` are assembled from the characters and the multiplicities
//! `D⁺_λ = (1/24) Σ_g χ_λ(g) Tr(Q T_g)`,
//! `D⁻_λ = (1/24) Σ_g χ_λ(g) Tr((I − Q) T_g)`;
//! irreps with zero multiplicity are dropped, giving the pseudo-inverse of
//! the Gram matrix on the commutant. `D⁺` vanishes on (31) and (211) at every
//! L because the Klein four-group acts trivially on the range of `Q`; further
//! zeros occur at L = 1, 2.
//!
//! Every global trace of a per-site product operator factorizes into 16×16
//! traces, raised to the number of sites sharing that factor. The products
//! are combined in exact rational arithmetic on the exact binary values of
//! the f64 site traces: at L ≳ 30 the cancellations exceed f64 range.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use std::sync::OnceLock;

use super::s4::{S4Data, CHARACTERS, CLASS_SIZES, IRREP_DIMS};
use crate::dense_ops::{permutation_operator, permuted_index, CMatrix, DenseOperator, C64};
use crate::error::{cap, Error, Result};
use crate::nonlocal_magic::MagicProjectors;
use crate::pauli_clifford::enumerate_paulis_capped;

pub type Exact = Complex<BigRational>;

pub fn exact_from_f64(z: C64) -> Exact {
    let conv = |x: f64| BigRational::from_float(x).expect("finite site trace");
    Complex::new(conv(z.re), conv(z.im))
}

pub fn exact_to_c64(z: &Exact) -> C64 {
    C64::new(z.re.to_f64().unwrap_or(f64::NAN), z.im.to_f64().unwrap_or(f64::NAN))
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn rat_pow(base: &BigRational, e: usize) -> BigRational {
    num_traits::pow(base.clone(), e)
}

fn real(r: BigRational) -> Exact {
    Complex::new(r, BigRational::zero())
}

/// Per-site 16×16 building blocks: `t_σ` for every σ ∈ S₄ and `Λ₁`.
pub struct SiteFactorSet {
    t: Vec<CMatrix>,
    lambda: CMatrix,
}

impl SiteFactorSet {
    pub fn get() -> &'static SiteFactorSet {
        static SET: OnceLock<SiteFactorSet> = OnceLock::new();
        SET.get_or_init(|| {
            let s4 = S4Data::get();
            let t = s4
                .elements()
                .iter()
                .map(|p| permutation_operator(p, 2, 4).unwrap().into_matrix())
                .collect();
            Self {
                t,
                lambda: MagicProjectors::lambda1().into_matrix(),
            }
        })
    }

    pub fn t(&self, idx: usize) -> &CMatrix {
        &self.t[idx]
    }

    pub fn t_perm(&self, p: &super::s4::Perm) -> &CMatrix {
        &self.t[S4Data::get().index_of(p)]
    }

    pub fn lambda(&self) -> &CMatrix {
        &self.lambda
    }

    /// `(Tr(t_σ f), Tr((Λ₁/4) t_σ f))` for all σ.
    pub fn traces(&self, f: &CMatrix) -> ([C64; 24], [C64; 24]) {
        let mut plain = [C64::new(0.0, 0.0); 24];
        let mut with_q = plain;
        for s in 0..24 {
            let tf = &self.t[s] * f;
            plain[s] = tf.trace();
            with_q[s] = (&self.lambda * tf).trace() * 0.25;
        }
        (plain, with_q)
    }
}

/// Exact Weingarten data at `L` qubits; `W±` depend only on the class of `πσ`.
#[derive(Clone, Debug)]
pub struct WeingartenTable {
    l: usize,
    d_plus: [BigRational; 5],
    d_minus: [BigRational; 5],
    w_plus: [BigRational; 5],
    w_minus: [BigRational; 5],
}

/// Single-site `Tr(Λ₁ t_g)` per class (e, (12), (12)(34), (123), (1234)).
pub const SITE_LAMBDA_TRACE: [i64; 5] = [16, 8, 16, 4, 8];
/// Single-site `Tr(t_g) = 2^{#cycles}` per class.
pub const SITE_PERM_TRACE: [i64; 5] = [16, 8, 4, 4, 2];

impl WeingartenTable {
    pub fn new(l: usize) -> Result<Self> {
        if l == 0 {
            return Err(Error::InvalidArgument("L must be at least 1".into()));
        }
        let inv_d2 = rat_pow(&rat(1, 4), l);
        let tr_q: Vec<BigRational> = (0..5)
            .map(|c| rat_pow(&rat(SITE_LAMBDA_TRACE[c], 1), l) * &inv_d2)
            .collect();
        let tr_t: Vec<BigRational> = (0..5).map(|c| rat_pow(&rat(SITE_PERM_TRACE[c], 1), l)).collect();
        let mult = |tr: &dyn Fn(usize) -> BigRational| -> [BigRational; 5] {
            std::array::from_fn(|lam| {
                let s: BigRational = (0..5)
                    .map(|c| rat(CLASS_SIZES[c] as i64 * CHARACTERS[lam][c], 1) * tr(c))
                    .fold(BigRational::zero(), |a, b| a + b);
                s / rat(24, 1)
            })
        };
        let d_plus = mult(&|c| tr_q[c].clone());
        let d_minus = mult(&|c| &tr_t[c] - &tr_q[c]);
        let weights = |d: &[BigRational; 5]| -> [BigRational; 5] {
            std::array::from_fn(|class| {
                (0..5)
                    .filter(|&lam| !d[lam].is_zero())
                    .map(|lam| rat(IRREP_DIMS[lam] * IRREP_DIMS[lam] * CHARACTERS[lam][class], 576) / &d[lam])
                    .fold(BigRational::zero(), |a, b| a + b)
            })
        };
        let w_plus = weights(&d_plus);
        let w_minus = weights(&d_minus);
        for d in d_plus.iter().chain(&d_minus) {
            if d < &BigRational::zero() {
                return Err(Error::Numerical("negative irrep multiplicity".into()));
            }
        }
        Ok(Self {
            l,
            d_plus,
            d_minus,
            w_plus,
            w_minus,
        })
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn d_plus(&self) -> &[BigRational; 5] {
        &self.d_plus
    }

    pub fn d_minus(&self) -> &[BigRational; 5] {
        &self.d_minus
    }

    /// Irreps dropped from the inverse because their multiplicity vanishes.
    pub fn vanishing_irreps(&self) -> (Vec<usize>, Vec<usize>) {
        let z = |d: &[BigRational; 5]| (0..5).filter(|&i| d[i].is_zero()).collect();
        (z(&self.d_plus), z(&self.d_minus))
    }

    pub fn w_plus_class(&self, class: usize) -> &BigRational {
        &self.w_plus[class]
    }

    pub fn w_minus_class(&self, class: usize) -> &BigRational {
        &self.w_minus[class]
    }

    /// `W⁺_{π,σ}` as a 24×24 f64 matrix.
    pub fn w_plus(&self) -> DMatrix<f64> {
        self.matrix(&self.w_plus)
    }

    pub fn w_minus(&self) -> DMatrix<f64> {
        self.matrix(&self.w_minus)
    }

    fn matrix(&self, w: &[BigRational; 5]) -> DMatrix<f64> {
        let s4 = S4Data::get();
        DMatrix::from_fn(24, 24, |p, s| w[s4.class(s4.product(p, s))].to_f64().unwrap())
    }
}

/// `coeff · ⊗ (site factor)^{⊗multiplicity}` over all sites, in any site order.
#[derive(Clone, Debug)]
pub struct ProductOperator {
    pub coeff: Exact,
    pub factors: Vec<(CMatrix, usize)>,
}

impl ProductOperator {
    pub fn new(factors: Vec<(CMatrix, usize)>) -> Self {
        Self {
            coeff: real(BigRational::one()),
            factors,
        }
    }

    pub fn scaled(mut self, c: BigRational) -> Self {
        self.coeff = &self.coeff * real(c);
        self
    }

    pub fn n_sites(&self) -> usize {
        self.factors.iter().map(|f| f.1).sum()
    }

    /// Exact `(Tr(T_σ O), Tr(Q T_σ O))` for all σ.
    fn traces(&self) -> (Vec<Exact>, Vec<Exact>) {
        let set = SiteFactorSet::get();
        let mut plain = vec![self.coeff.clone(); 24];
        let mut with_q = plain.clone();
        for (f, mult) in &self.factors {
            if *mult == 0 {
                continue;
            }
            let (tp, tq) = set.traces(f);
            for s in 0..24 {
                plain[s] = &plain[s] * exact_from_f64(tp[s]).powu(*mult as u32);
                with_q[s] = &with_q[s] * exact_from_f64(tq[s]).powu(*mult as u32);
            }
        }
        (plain, with_q)
    }
}

/// A sum of [`ProductOperator`] terms on the same number of sites.
#[derive(Clone, Debug, Default)]
pub struct FactorizedOperator {
    pub terms: Vec<ProductOperator>,
}

impl FactorizedOperator {
    pub fn single(p: ProductOperator) -> Self {
        Self { terms: vec![p] }
    }

    pub fn push(&mut self, p: ProductOperator) {
        self.terms.push(p);
    }

    fn n_sites(&self) -> Result<usize> {
        let n = self
            .terms
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty operator".into()))?
            .n_sites();
        if self.terms.iter().any(|t| t.n_sites() != n) {
            return Err(Error::DimensionMismatch("terms act on different numbers of sites".into()));
        }
        Ok(n)
    }

    /// Exact `(Tr(T_σ O), Tr(Q T_σ O))`.
    pub fn traces(&self) -> Result<(Vec<Exact>, Vec<Exact>)> {
        self.n_sites()?;
        let zero = real(BigRational::zero());
        let mut plain = vec![zero.clone(); 24];
        let mut with_q = vec![zero; 24];
        for t in &self.terms {
            let (p, q) = t.traces();
            for s in 0..24 {
                plain[s] = &plain[s] + &p[s];
                with_q[s] = &with_q[s] + &q[s];
            }
        }
        Ok((plain, with_q))
    }

    /// Dense copy-major operator, for small systems.
    pub fn to_dense(&self) -> Result<DenseOperator> {
        let l = self.n_sites()?;
        cap("dense four-copy qubits", l, 2)?;
        let mut acc = CMatrix::zeros(1 << (4 * l), 1 << (4 * l));
        for t in &self.terms {
            let mut sites = Vec::new();
            for (f, m) in &t.factors {
                sites.extend(std::iter::repeat_n(f.clone(), *m));
            }
            let mut op = CMatrix::identity(1, 1);
            for s in &sites {
                op = op.kronecker(s);
            }
            let op = DenseOperator::new(op, vec![2; 4 * l])?;
            let op = crate::dense_ops::site_to_copy_major(&op, l, 4)?;
            acc += op.into_matrix() * exact_to_c64(&t.coeff);
        }
        DenseOperator::new(acc, vec![2; 4 * l])
    }
}

/// Coefficients of `Φ(O)` in the commutant basis, indexed by S₄ element.
#[derive(Clone, Debug)]
pub struct MomentDecomposition {
    l: usize,
    plus: Vec<Exact>,
    minus: Vec<Exact>,
}

impl MomentDecomposition {
    /// Coefficients from the traces `Tr(T_σ O)` and `Tr(Q T_σ O)`.
    pub fn from_traces(table: &WeingartenTable, plain: &[Exact], with_q: &[Exact]) -> Self {
        let s4 = S4Data::get();
        let zero = real(BigRational::zero());
        let other: Vec<Exact> = plain.iter().zip(with_q).map(|(p, q)| p - q).collect();
        let mut plus = vec![zero.clone(); 24];
        let mut minus = vec![zero; 24];
        for p in 0..24 {
            for s in 0..24 {
                let class = s4.class(s4.product(p, s));
                plus[p] = &plus[p] + &with_q[s] * real(table.w_plus[class].clone());
                minus[p] = &minus[p] + &other[s] * real(table.w_minus[class].clone());
            }
        }
        Self {
            l: table.l,
            plus,
            minus,
        }
    }

    pub fn project(o: &FactorizedOperator, table: &WeingartenTable) -> Result<Self> {
        if o.n_sites()? != table.l {
            return Err(Error::DimensionMismatch("operator and table differ in L".into()));
        }
        let (plain, with_q) = o.traces()?;
        Ok(Self::from_traces(table, &plain, &with_q))
    }

    pub fn b_plus(&self) -> Vec<C64> {
        self.plus.iter().map(exact_to_c64).collect()
    }

    pub fn b_minus(&self) -> Vec<C64> {
        self.minus.iter().map(exact_to_c64).collect()
    }

    /// Exact `Tr(Φ(O) Y)`.
    pub fn trace_with(&self, y: &FactorizedOperator) -> Result<Exact> {
        if y.n_sites()? != self.l {
            return Err(Error::DimensionMismatch("operator and decomposition differ in L".into()));
        }
        let (plain, with_q) = y.traces()?;
        let mut acc = real(BigRational::zero());
        for p in 0..24 {
            acc = acc + &self.plus[p] * &with_q[p] + &self.minus[p] * (&plain[p] - &with_q[p]);
        }
        Ok(acc)
    }

    /// Dense `Φ(O)` (copy-major).
    pub fn to_dense(&self) -> Result<DenseOperator> {
        let l = self.l;
        cap("four-copy qubits", l, 3)?;
        let d = 1usize << l;
        let n = d.pow(4);
        let q = MagicProjectors::q(l)?.into_matrix();
        let s4 = S4Data::get();
        let bp = self.b_plus();
        let bm = self.b_minus();
        let mut out = CMatrix::zeros(n, n);
        for (idx, perm) in s4.elements().iter().enumerate() {
            let diff = bp[idx] - bm[idx];
            for c in 0..n {
                let r = permuted_index(perm, d, c);
                // (Q T_π)[:, c] = Q[:, T_π(c)]
                for row in 0..n {
                    out[(row, c)] += diff * q[(row, r)];
                }
                out[(r, c)] += bm[idx];
            }
        }
        DenseOperator::new(out, vec![2; 4 * l])
    }
}

/// `(Tr(T_σ O), Tr(Q T_σ O))` for a dense copy-major four-copy operator,
/// using `Q = (1/d²) Σ_P P^{⊗4}` and the monomial form of `P^{⊗4} T_σ`.
pub fn dense_traces(o: &DenseOperator, l: usize) -> Result<(Vec<Exact>, Vec<Exact>)> {
    cap("four-copy qubits", l, 3)?;
    let d = 1usize << l;
    let n = d.pow(4);
    if o.dim() != n {
        return Err(Error::DimensionMismatch(format!("expected a {n}-dimensional 4-copy operator")));
    }
    let m = o.matrix();
    let s4 = S4Data::get();
    let paulis: Vec<_> = enumerate_paulis_capped(l, 3)?.collect();
    let mut plain = Vec::with_capacity(24);
    let mut with_q = Vec::with_capacity(24);
    for perm in s4.elements() {
        let mut tp = C64::new(0.0, 0.0);
        let mut tq = C64::new(0.0, 0.0);
        for s in 0..n {
            let t = permuted_index(perm, d, s);
            tp += m[(s, t)];
            for p in &paulis {
                let (x, z) = (p.x_mask() as usize, p.z_mask() as usize);
                // σ(x,z)|b> = i^{|x∧z|} (−1)^{z·b} |b ⊕ x>, per copy
                let mut ph = (4 * (x & z).count_ones()) & 3;
                let mut tx = 0usize;
                for c in 0..4 {
                    let shift = (3 - c) * l;
                    let tc = (t >> shift) & (d - 1);
                    ph += 2 * ((z & tc).count_ones() & 1);
                    tx |= (tc ^ x) << shift;
                }
                let phase = C64::new(0.0, 1.0).powu(ph & 3);
                tq += m[(s, tx)] * phase;
            }
        }
        plain.push(exact_from_f64(tp));
        with_q.push(exact_from_f64(tq / (d * d) as f64));
    }
    Ok((plain, with_q))
}

/// Dense `Φ(O)` on four copies of `L ≤ 3` qubits (copy-major layout).
pub fn phi_clifford_4(o: &DenseOperator, l: usize) -> Result<DenseOperator> {
    let table = WeingartenTable::new(l)?;
    let (plain, with_q) = dense_traces(o, l)?;
    MomentDecomposition::from_traces(&table, &plain, &with_q).to_dense()
}

/// `Φ(O)` for a per-site product operator, kept in coefficient form.
pub fn phi_clifford_4_factorized(o: &FactorizedOperator, l: usize) -> Result<MomentDecomposition> {
    MomentDecomposition::project(o, &WeingartenTable::new(l)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford_moments::s4::{from_cycles, inverse};
    use crate::dense_ops::haar_unitary;
    use crate::pauli_clifford::enumerate_cliffords;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_op(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        let a = haar_unitary(n, rng);
        let b = haar_unitary(n, rng);
        a + b * C64::new(0.3, -0.7)
    }

    #[test]
    fn multiplicities_small_l() {
        let t1 = WeingartenTable::new(1).unwrap();
        let as_i: Vec<i64> = t1.d_plus().iter().map(|r| r.to_integer().try_into().unwrap()).collect();
        assert_eq!(as_i, vec![2, 0, 1, 0, 0]);
        let as_i: Vec<i64> = t1.d_minus().iter().map(|r| r.to_integer().try_into().unwrap()).collect();
        assert_eq!(as_i, vec![3, 3, 0, 0, 0]);
        let t2 = WeingartenTable::new(2).unwrap();
        let as_i: Vec<i64> = t2.d_plus().iter().map(|r| r.to_integer().try_into().unwrap()).collect();
        assert_eq!(as_i, vec![5, 0, 5, 0, 1]);
        for l in 1..=12 {
            let t = WeingartenTable::new(l).unwrap();
            for d in t.d_plus().iter().chain(t.d_minus()) {
                assert!(d.is_integer() && *d >= BigRational::zero());
            }
            let (vp, vm) = t.vanishing_irreps();
            // the Klein four-group acts trivially on the range of Q
            assert_eq!(vp, if l >= 3 { vec![1, 3] } else { vp.clone() });
            if l >= 3 {
                assert!(vm.is_empty(), "L={l}: {vm:?}");
            }
        }
    }

    #[test]
    fn multiplicities_match_dense_traces_at_l1() {
        let set = SiteFactorSet::get();
        let s4 = S4Data::get();
        let t1 = WeingartenTable::new(1).unwrap();
        for lam in 0..5 {
            let s: f64 = (0..24)
                .map(|g| s4.character(lam, g) as f64 * (set.lambda() * set.t(g)).trace().re / 4.0)
                .sum::<f64>()
                / 24.0;
            assert!((s - t1.d_plus()[lam].to_f64().unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn swap_trick_cycle_products() {
        // Tr(T_σ M₁⊗M₂⊗M₃⊗M₄) = Π_cycles Tr(M_a M_{σ⁻¹(a)} M_{σ⁻²(a)} …)
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let ms: Vec<CMatrix> = (0..4).map(|_| random_op(2, &mut rng)).collect();
        let prod = ms[0].kronecker(&ms[1]).kronecker(&ms[2]).kronecker(&ms[3]);
        let set = SiteFactorSet::get();
        for (idx, p) in S4Data::get().elements().iter().enumerate() {
            let got = (set.t(idx) * &prod).trace();
            let inv = inverse(p);
            let mut seen = [false; 4];
            let mut want = C64::new(1.0, 0.0);
            for start in 0..4 {
                if seen[start] {
                    continue;
                }
                let mut acc = CMatrix::identity(2, 2);
                let mut a = start;
                while !seen[a] {
                    seen[a] = true;
                    acc *= &ms[a];
                    a = inv[a];
                }
                want *= acc.trace();
            }
            assert!((got - want).norm() < 1e-12, "{p:?}");
        }
        let _ = from_cycles(&[&[1, 2, 3, 4]]);
    }

    fn twirl_exhaustive_l1(o: &CMatrix) -> CMatrix {
        let all = enumerate_cliffords(1).unwrap();
        let mut acc = CMatrix::zeros(16, 16);
        for c in &all {
            let u = c.to_dense().unwrap().into_matrix();
            let u4 = u.kronecker(&u).kronecker(&u).kronecker(&u);
            acc += &u4 * o * u4.adjoint();
        }
        acc / C64::from(all.len() as f64)
    }

    #[test]
    fn dense_phi_matches_exhaustive_l1() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..3 {
            let o = random_op(16, &mut rng);
            let want = twirl_exhaustive_l1(&o);
            let got = phi_clifford_4(&DenseOperator::new(o, vec![2; 4]).unwrap(), 1).unwrap();
            let err = (got.matrix() - want).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(err < 1e-12, "{err}");
        }
    }

    #[test]
    fn phi_is_idempotent_and_unital() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for l in 1..=2 {
            let n = 1 << (4 * l);
            let o = DenseOperator::new(random_op(n, &mut rng), vec![2; 4 * l]).unwrap();
            let once = phi_clifford_4(&o, l).unwrap();
            let twice = phi_clifford_4(&once, l).unwrap();
            assert!(once.max_abs_diff(&twice) < 1e-10);
            let id = DenseOperator::identity(&vec![2; 4 * l]);
            assert!(phi_clifford_4(&id, l).unwrap().max_abs_diff(&id) < 1e-10);
        }
    }

    #[test]
    fn factorized_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let fa = random_op(16, &mut rng);
        let fb = random_op(16, &mut rng);
        let o = FactorizedOperator::single(ProductOperator::new(vec![(fa.clone(), 1), (fb.clone(), 1)]));
        let dense = o.to_dense().unwrap();
        let table = WeingartenTable::new(2).unwrap();
        let md = MomentDecomposition::project(&o, &table).unwrap();
        let via_factors = md.to_dense().unwrap();
        let via_dense = phi_clifford_4(&dense, 2).unwrap();
        assert!(via_factors.max_abs_diff(&via_dense) < 1e-10);
        let y = FactorizedOperator::single(ProductOperator::new(vec![(fb, 2)]));
        let tr = exact_to_c64(&md.trace_with(&y).unwrap());
        let want = (via_dense.matrix() * y.to_dense().unwrap().matrix()).trace();
        assert!((tr - want).norm() < 1e-9 * want.norm().max(1.0));
    }
}
