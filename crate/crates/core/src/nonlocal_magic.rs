//! Linear operator entanglement and the average Pauli-entangling power
//! `P_E(U) = E_P E_lin(U† P U)` over phaseless Paulis.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::dense_ops::{
    kron_all, operator_schmidt, pauli_matrix, permutation_operator, site_to_copy_major, CMatrix, DenseOperator, C64,
    DENSE_DIM_CAP,
};
use crate::error::{cap, Error, Result};
use crate::pauli_clifford::{enumerate_paulis_capped, CliffordTableau, PauliString};
use crate::scrambling::Bipartition;

pub const APEP_ENUM_CAP: usize = 6;
pub const APEP_FOUR_COPY_CAP: usize = 3;
pub const APEP_SINGLE_COPY_CAP: usize = 10;

/// `Λ₁ = Σ_{P ∈ {I,X,Y,Z}} P^{⊗4}` and `Q = (1/4^L) Λ₁^{⊗L}` (copy-major).
pub struct MagicProjectors;

impl MagicProjectors {
    pub fn lambda1() -> DenseOperator {
        let mut acc = CMatrix::zeros(16, 16);
        for a in 0..4 {
            let p = pauli_matrix(a);
            acc += p.kronecker(&p).kronecker(&p).kronecker(&p);
        }
        DenseOperator::new(acc, vec![2; 4]).unwrap()
    }

    /// `Q` at `l` qubits on four copies, copy-major layout.
    pub fn q(l: usize) -> Result<DenseOperator> {
        cap("four-copy qubits", l, APEP_FOUR_COPY_CAP)?;
        let site = Self::lambda1().scale(C64::from(0.25));
        let op = kron_all(&vec![site; l]);
        site_to_copy_major(&op, l, 4)
    }

    /// `Q = (1/d²) Σ_P P^{⊗4}` summed directly.
    pub fn q_from_paulis(l: usize) -> Result<DenseOperator> {
        cap("four-copy qubits", l, 2)?;
        let d = 1usize << l;
        let mut acc = CMatrix::zeros(d.pow(4), d.pow(4));
        for p in enumerate_paulis_capped(l, 2)? {
            let m = p.to_dense()?.into_matrix();
            acc += m.kronecker(&m).kronecker(&m).kronecker(&m);
        }
        DenseOperator::new(acc / C64::from((d * d) as f64), vec![2; 4 * l])
    }

    /// `T^A_{(12)(34)}`: the pair swap on the A sites of four copies.
    pub fn t_a(cut: &Bipartition) -> Result<DenseOperator> {
        let l = cut.n_sites();
        cap("four-copy qubits", l, APEP_FOUR_COPY_CAP)?;
        let t = permutation_operator(&[1, 0, 3, 2], 2, 4)?;
        let id = DenseOperator::identity(&[2; 4]);
        let factors: Vec<_> = (0..l).map(|s| if cut.in_a(s) { t.clone() } else { id.clone() }).collect();
        site_to_copy_major(&kron_all(&factors), l, 4)
    }
}

/// `1 − Σ λ_i²` from the operator-Schmidt spectrum; `O` must satisfy `‖O‖₂² = d`.
pub fn e_lin(o: &DenseOperator, cut: &Bipartition) -> Result<f64> {
    check_cut(o, cut)?;
    let d = o.dim() as f64;
    if (o.norm_sq() - d).abs() > 1e-8 * d {
        return Err(Error::InvalidArgument(format!(
            "operator entanglement needs ‖O‖² = d, got {} for d = {d}",
            o.norm_sq()
        )));
    }
    let lam = operator_schmidt(o, &cut.a_sites())?;
    Ok(1.0 - lam.iter().map(|l| l * l).sum::<f64>())
}

fn check_cut(o: &DenseOperator, cut: &Bipartition) -> Result<()> {
    if o.dim() != 1 << cut.n_sites() {
        return Err(Error::DimensionMismatch(format!(
            "operator dimension {} does not match a {}-site cut",
            o.dim(),
            cut.n_sites()
        )));
    }
    Ok(())
}

fn check_unitary(u: &DenseOperator) -> Result<()> {
    if !u.is_unitary(1e-10) {
        return Err(Error::InvalidArgument("APEP needs a unitary".into()));
    }
    Ok(())
}

/// Mean of `E_lin(U† P U)` over all `4^L` phaseless Paulis.
pub fn apep_enumeration(u: &DenseOperator, cut: &Bipartition) -> Result<f64> {
    check_cut(u, cut)?;
    check_unitary(u)?;
    let l = cut.n_sites();
    let paulis: Vec<PauliString> = enumerate_paulis_capped(l, APEP_ENUM_CAP)?.collect();
    let ud = u.adjoint();
    let vals = paulis
        .par_iter()
        .map(|p| {
            let m = ud.mul(&p.to_dense()?)?.mul(u)?;
            e_lin(&m, cut)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(vals.iter().sum::<f64>() / vals.len() as f64)
}

/// `1 − (1/d²) Tr(T^A_{(12)(34)} U^{†⊗4} Q U^{⊗4})`.
///
/// With `Q = (1/d²) Σ_P P^{⊗4}` the conjugated projector is a sum of tensor
/// powers `M_P^{⊗4}`, `M_P = U† P U`, so the trace is an index sum
/// `Σ_s Π_c M_P[s_c, r(s)_c]` with `r = T^A(s)`; no 4-copy matrix is stored.
pub fn apep_four_copy(u: &DenseOperator, cut: &Bipartition) -> Result<f64> {
    check_cut(u, cut)?;
    check_unitary(u)?;
    let l = cut.n_sites();
    cap("four-copy qubits", l, APEP_FOUR_COPY_CAP)?;
    let d = 1usize << l;
    let amask = cut.a_mask() as usize;
    let ud = u.adjoint();
    let paulis: Vec<PauliString> = enumerate_paulis_capped(l, APEP_FOUR_COPY_CAP)?.collect();
    let traces = paulis
        .par_iter()
        .map(|p| {
            let m = ud.mul(&p.to_dense()?)?.mul(u)?.into_matrix();
            Ok(trace_ta_fourth_power(&m, d, amask))
        })
        .collect::<Result<Vec<C64>>>()?;
    let total: C64 = traces.iter().sum();
    let dd = (d * d) as f64;
    Ok(1.0 - total.re / (dd * dd))
}

/// `Tr(T^A_{(12)(34)} M^{⊗4})` by direct index summation.
fn trace_ta_fourth_power(m: &CMatrix, d: usize, amask: usize) -> C64 {
    let bmask = !amask & (d - 1);
    let mut total = C64::new(0.0, 0.0);
    // T^A maps column s to the row whose A parts are swapped within (1,2) and (3,4)
    for s1 in 0..d {
        for s2 in 0..d {
            let r1 = (s2 & amask) | (s1 & bmask);
            let r2 = (s1 & amask) | (s2 & bmask);
            let f12 = m[(s1, r1)] * m[(s2, r2)];
            if f12.norm_sqr() == 0.0 {
                continue;
            }
            let mut f34 = C64::new(0.0, 0.0);
            for s3 in 0..d {
                for s4 in 0..d {
                    let r3 = (s4 & amask) | (s3 & bmask);
                    let r4 = (s3 & amask) | (s4 & bmask);
                    f34 += m[(s3, r3)] * m[(s4, r4)];
                }
            }
            total += f12 * f34;
        }
    }
    total
}

/// Literal dense 4-copy evaluation with explicit `Q`, `T^A` and `U^{⊗4}`.
pub fn apep_four_copy_dense(u: &DenseOperator, cut: &Bipartition) -> Result<f64> {
    check_cut(u, cut)?;
    let l = cut.n_sites();
    cap("dense four-copy qubits", l, 2)?;
    let d = (1usize << l) as f64;
    let u4 = kron_all(&vec![u.clone(); 4]);
    let q = MagicProjectors::q(l)?;
    let ta = MagicProjectors::t_a(cut)?;
    let inner = u4.adjoint().mul(&q)?.mul(&u4)?;
    Ok(1.0 - ta.mul(&inner)?.trace().re / (d * d))
}

/// The single-copy partial-trace reading
/// `1 − (1/d⁴) Σ_P (Tr[(Tr_B M_P)²])²`, `M_P = U† P U`.
pub fn apep_partial_trace_form(u: &DenseOperator, cut: &Bipartition) -> Result<f64> {
    check_cut(u, cut)?;
    check_unitary(u)?;
    let l = cut.n_sites();
    let d = (1usize << l) as f64;
    let a = cut.a_sites();
    let ud = u.adjoint();
    let mut total = 0.0;
    for p in enumerate_paulis_capped(l, APEP_ENUM_CAP)? {
        let m = ud.mul(&p.to_dense()?)?.mul(u)?;
        let ma = m.partial_trace(&a)?;
        let t = (ma.matrix() * ma.matrix()).trace().re;
        total += t * t;
    }
    Ok(1.0 - total / (d * d * d * d))
}

/// Real Pauli transfer matrix `R[a][b] = Tr(σ_a V σ_b V†)/2`.
pub fn pauli_transfer(v: &DenseOperator) -> Result<[[f64; 4]; 4]> {
    if v.dim() != 2 || !v.is_unitary(1e-10) {
        return Err(Error::InvalidArgument("expected a single-qubit unitary".into()));
    }
    let mut r = [[0.0; 4]; 4];
    for (a, row) in r.iter_mut().enumerate() {
        for (b, entry) in row.iter_mut().enumerate() {
            let m = pauli_matrix(a) * v.matrix() * pauli_matrix(b) * v.matrix().adjoint();
            *entry = m.trace().re / 2.0;
        }
    }
    Ok(r)
}

/// `P_E(Ω′)` for `Ω′ = C† (U^{⊗k} ⊗ I)`: every Pauli is conjugated by
/// `U^{⊗k}` (a real combination of at most `3^k` strings) and then by `C†`
/// (a signed string each), giving the real coefficient matrix `M[α_A, β_B]`
/// of the evolved operator in the Pauli product basis. Its squared singular
/// values are the operator-Schmidt coefficients, so `E_lin = 1 − ‖M Mᵀ‖_F²`.
pub fn apep_single_copy(
    c: &CliffordTableau,
    u: &DenseOperator,
    k: usize,
    l: usize,
    cut: &Bipartition,
) -> Result<f64> {
    cap("single-copy qubits", l, APEP_SINGLE_COPY_CAP)?;
    if c.n_qubits() != l || cut.n_sites() != l {
        return Err(Error::DimensionMismatch(format!(
            "tableau on {}, cut on {}, L = {l}",
            c.n_qubits(),
            cut.n_sites()
        )));
    }
    if k == 0 || k > l {
        return Err(Error::InvalidArgument(format!("k = {k} outside 1..={l}")));
    }
    let r = pauli_transfer(u)?;
    let ci = c.inverse();
    let n_noisy = 1usize << (2 * k);
    // letters on the first k sites, site 0 most significant in base 4
    let noisy_pauli = |pattern: usize| -> PauliString {
        let mut p = PauliString::identity(l);
        for j in 0..k {
            let letter = (pattern >> (2 * (k - 1 - j))) & 3;
            p = p.mul_unchecked(&PauliString::single(l, j, letter).unwrap());
        }
        p
    };
    let conj_noisy: Vec<PauliString> = (0..n_noisy).map(|a| ci.conjugate_unchecked(&noisy_pauli(a))).collect();
    let expansions: Vec<Vec<(usize, f64)>> = (0..n_noisy)
        .map(|b| {
            (0..n_noisy)
                .filter_map(|a| {
                    let coeff: f64 = (0..k)
                        .map(|j| {
                            let shift = 2 * (k - 1 - j);
                            r[(a >> shift) & 3][(b >> shift) & 3]
                        })
                        .product();
                    (coeff != 0.0).then_some((a, coeff))
                })
                .collect()
        })
        .collect();
    let amask = cut.a_mask();
    let bmask = !amask & ((1u64 << l) - 1);
    let noisy_mask = ((1u64 << k) - 1) << (l - k);
    let total_paulis = 1u64 << (2 * l);
    let chunk = 1u64 << 12;
    let sum: f64 = (0..total_paulis.div_ceil(chunk))
        .into_par_iter()
        .map(|blk| {
            let mut acc = 0.0;
            let mut entries: Vec<(u128, u128, f64)> = Vec::with_capacity(64);
            for idx in blk * chunk..((blk + 1) * chunk).min(total_paulis) {
                let x = idx >> l;
                let z = idx & ((1u64 << l) - 1);
                let (xn, zn) = (x & noisy_mask, z & noisy_mask);
                if xn == 0 && zn == 0 {
                    continue;
                }
                let rest = PauliString::new(l, x & !noisy_mask, z & !noisy_mask, 0).unwrap();
                let b = noisy_pattern(xn, zn, k, l);
                let r_img = ci.conjugate_unchecked(&rest);
                entries.clear();
                for &(a, coeff) in &expansions[b] {
                    let q = conj_noisy[a].mul_unchecked(&r_img);
                    let sign = if q.phase() == 0 { 1.0 } else { -1.0 };
                    let row = ((q.x_mask() & amask) as u128) << 64 | (q.z_mask() & amask) as u128;
                    let col = ((q.x_mask() & bmask) as u128) << 64 | (q.z_mask() & bmask) as u128;
                    entries.push((row, col, sign * coeff));
                }
                acc += 1.0 - schmidt_purity(&entries);
            }
            acc
        })
        .sum();
    Ok(sum / total_paulis as f64)
}

fn noisy_pattern(xn: u64, zn: u64, k: usize, l: usize) -> usize {
    let mut pat = 0usize;
    for j in 0..k {
        let bit = l - 1 - j;
        let letter = match ((xn >> bit) & 1, (zn >> bit) & 1) {
            (0, 0) => 0,
            (1, 0) => 1,
            (1, 1) => 2,
            _ => 3,
        };
        pat = pat * 4 + letter;
    }
    pat
}

/// `‖M Mᵀ‖_F²` for a sparse real matrix given as distinct `(row, col, value)`.
fn schmidt_purity(entries: &[(u128, u128, f64)]) -> f64 {
    let mut rows: Vec<u128> = entries.iter().map(|e| e.0).collect();
    rows.sort_unstable();
    rows.dedup();
    let mut cols: Vec<u128> = entries.iter().map(|e| e.1).collect();
    cols.sort_unstable();
    cols.dedup();
    let mut m = DMatrix::<f64>::zeros(rows.len(), cols.len());
    for &(r, c, v) in entries {
        let i = rows.binary_search(&r).unwrap();
        let j = cols.binary_search(&c).unwrap();
        m[(i, j)] += v;
    }
    let norm2: f64 = m.iter().map(|v| v * v).sum();
    let g = &m * m.transpose();
    g.iter().map(|v| v * v).sum::<f64>() / (norm2 * norm2)
}

/// `|P_E(U) − P_E(C U)| < 1e−10`: the Clifford acts on the Pauli before `U`
/// does under the `U† P U` convention.
pub fn clifford_preprocessing_invariance_check(u: &DenseOperator, c: &CliffordTableau) -> Result<bool> {
    let l = c.n_qubits();
    let cut = Bipartition::halves(l)?;
    let cd = c.to_dense()?;
    let lhs = apep_enumeration(u, &cut)?;
    let rhs = apep_enumeration(&cd.mul(u)?, &cut)?;
    Ok((lhs - rhs).abs() < 1e-10)
}

/// Dense unitary `C† (U^{⊗k} ⊗ I) C` for small registers.
pub fn sandwich_unitary(c: &CliffordTableau, u: &DenseOperator, k: usize) -> Result<DenseOperator> {
    let l = c.n_qubits();
    if k == 0 || k > l {
        return Err(Error::InvalidArgument(format!("k = {k} outside 1..={l}")));
    }
    cap("dense sandwich dimension", 1 << l, DENSE_DIM_CAP)?;
    let mut factors = vec![u.clone(); k];
    factors.extend(std::iter::repeat_n(DenseOperator::identity(&[2]), l - k));
    let v = kron_all(&factors);
    let cd = c.to_dense_capped(crate::scrambling::SANDWICH_QUBIT_CAP)?;
    cd.adjoint().mul(&v)?.mul(&cd)
}

/// Dense unitary `C† (U^{⊗k} ⊗ I)`.
pub fn primed_unitary(c: &CliffordTableau, u: &DenseOperator, k: usize) -> Result<DenseOperator> {
    let l = c.n_qubits();
    if k == 0 || k > l {
        return Err(Error::InvalidArgument(format!("k = {k} outside 1..={l}")));
    }
    let mut factors = vec![u.clone(); k];
    factors.extend(std::iter::repeat_n(DenseOperator::identity(&[2]), l - k));
    let v = kron_all(&factors);
    let cd = c.to_dense_capped(crate::scrambling::SANDWICH_QUBIT_CAP)?;
    cd.adjoint().mul(&v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense_ops::{haar_unitary, t_gate};
    use crate::pauli_clifford::random_clifford;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn lambda_and_q_are_projectors() {
        let lam = MagicProjectors::lambda1();
        assert!(lam.is_hermitian(1e-14));
        let sq = lam.mul(&lam).unwrap();
        assert!(sq.max_abs_diff(&lam.scale(C64::from(4.0))) < 1e-12);
        for l in 1..=2 {
            let q = MagicProjectors::q(l).unwrap();
            assert!(q.mul(&q).unwrap().max_abs_diff(&q) < 1e-12);
            assert!(q.is_hermitian(1e-14));
            assert!(q.max_abs_diff(&MagicProjectors::q_from_paulis(l).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn e_lin_examples() {
        let cut = Bipartition::halves(2).unwrap();
        let cnot = crate::pauli_clifford::CliffordTableau::cnot(2, 0, 1).to_dense().unwrap();
        assert!((e_lin(&cnot, &cut).unwrap() - 0.5).abs() < 1e-12);
        let p: PauliString = "XZ".parse().unwrap();
        assert!(e_lin(&p.to_dense().unwrap(), &cut).unwrap().abs() < 1e-12);
    }

    #[test]
    fn four_copy_forms_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let cut = Bipartition::halves(2).unwrap();
        for _ in 0..3 {
            let u = DenseOperator::new(haar_unitary(4, &mut rng), vec![2, 2]).unwrap();
            let a = apep_enumeration(&u, &cut).unwrap();
            let b = apep_four_copy(&u, &cut).unwrap();
            let c = apep_four_copy_dense(&u, &cut).unwrap();
            let d = apep_partial_trace_form(&u, &cut).unwrap();
            assert!((a - b).abs() < 1e-10 && (a - c).abs() < 1e-10 && (a - d).abs() < 1e-10, "{a} {b} {c} {d}");
        }
    }

    #[test]
    fn single_copy_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let t = t_gate();
        for (l, k) in [(2, 1), (3, 1), (3, 2), (4, 2)] {
            let cut = Bipartition::halves(l).unwrap();
            let c = random_clifford(l, &mut rng).unwrap();
            let fast = apep_single_copy(&c, &t, k, l, &cut).unwrap();
            let w = primed_unitary(&c, &t, k).unwrap();
            // E_lin(C† V P V† C) is the U†PU form with U = V† C
            let slow = apep_enumeration(&w.adjoint(), &cut).unwrap();
            assert!((fast - slow).abs() < 1e-10, "L={l}: {fast} vs {slow}");
        }
    }

    #[test]
    fn clifford_noise_gives_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let c = random_clifford(4, &mut rng).unwrap();
        let cut = Bipartition::halves(4).unwrap();
        let s = crate::dense_ops::s_gate();
        assert!(apep_single_copy(&c, &s, 2, 4, &cut).unwrap().abs() < 1e-12);
        let c2 = random_clifford(2, &mut rng).unwrap().to_dense().unwrap();
        assert!(apep_four_copy(&c2, &Bipartition::halves(2).unwrap()).unwrap().abs() < 1e-10);
    }
}
