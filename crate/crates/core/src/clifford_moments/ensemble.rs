//! Clifford-ensemble averages of the A-OTOC and APEP of `Ω = C† (E^{⊗k} ⊗ I) C`,
//! their L → ∞ limits, the Haar baseline and closed forms.

use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::Serialize;

use super::engine::{FactorizedOperator, MomentDecomposition, ProductOperator, SiteFactorSet, WeingartenTable};
use super::s4::{from_cycles, Perm};
use crate::dense_ops::{axis_rotation, CMatrix, DenseOperator, QuantumChannel, C64};
use crate::error::{Error, Result};
use crate::scrambling::haar_avg_aotoc_infinite;

const P12_34: [&[usize]; 2] = [&[1, 2], &[3, 4]];
const P13_24: [&[usize]; 2] = [&[1, 3], &[2, 4]];
const P14_23: [&[usize]; 2] = [&[1, 4], &[2, 3]];

fn perm(cycles: &[&[usize]]) -> Perm {
    from_cycles(cycles)
}

fn t(p: &Perm) -> CMatrix {
    SiteFactorSet::get().t_perm(p).clone()
}

fn check_single_qubit_channel(noise: &QuantumChannel) -> Result<()> {
    if noise.dim() != 2 {
        return Err(Error::DimensionMismatch(format!("expected single-qubit noise, got dimension {}", noise.dim())));
    }
    Ok(())
}

fn check_single_qubit_unitary(u: &DenseOperator) -> Result<()> {
    if u.dim() != 2 || !u.is_unitary(1e-10) {
        return Err(Error::InvalidArgument("expected a 2x2 unitary".into()));
    }
    Ok(())
}

fn check_k_l(k: usize, l: usize) -> Result<()> {
    if k == 0 || k > l {
        return Err(Error::InvalidArgument(format!("need 1 <= k <= L, got k={k}, L={l}")));
    }
    if l % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "ensemble averages use the symmetric cut; L={l} is odd"
        )));
    }
    Ok(())
}

/// Per-site noisy four-copy factor `Σ_{ij} K_i ⊗ K_j ⊗ K_i† ⊗ K_j†`.
pub fn aotoc_noise_factor(noise: &QuantumChannel) -> Result<CMatrix> {
    check_single_qubit_channel(noise)?;
    let x = noise.natural_representation().x().matrix().clone();
    let xx = DenseOperator::new(x.kronecker(&x), vec![2; 4])?;
    Ok(xx.permute_subsystems(&[0, 2, 1, 3])?.into_matrix())
}

/// Per-site noisy four-copy factor `U†^{⊗4} Λ₁ U^{⊗4} / 4`.
pub fn apep_noise_factor(u: &DenseOperator) -> Result<CMatrix> {
    check_single_qubit_unitary(u)?;
    let m = u.matrix();
    let u4 = m.kronecker(m).kronecker(m).kronecker(m);
    Ok(u4.adjoint() * SiteFactorSet::get().lambda() * u4 * C64::from(0.25))
}

/// `Y` with `Tr(Φ(N) Y) = d² G`: the swap on copies (13)(24) times the
/// A-boundary `T^A_{(12)} ⊗ (d_B T_{(34)} − T^A_{(34)})`.
fn aotoc_boundary(n_a: usize, n_b: usize) -> FactorizedOperator {
    let t13 = t(&perm(&P13_24));
    let a_site = t(&perm(&P12_34)) * &t13;
    let b_first = t(&perm(&[&[3, 4]])) * &t13;
    let d_b = num_traits::pow(BigRational::from_integer(2.into()), n_b);
    let mut y = FactorizedOperator::single(ProductOperator::new(vec![(a_site.clone(), n_a), (b_first, n_b)]).scaled(d_b));
    y.push(ProductOperator::new(vec![(a_site, n_a), (t13, n_b)]).scaled(-BigRational::one()));
    y
}

fn inv_d2(l: usize) -> BigRational {
    num_traits::pow(BigRational::new(1.into(), 4.into()), l)
}

fn aotoc_with_cut(noise: &QuantumChannel, k: usize, l: usize, n_a: usize) -> Result<f64> {
    let n = aotoc_noise_factor(noise)?;
    let o = FactorizedOperator::single(ProductOperator::new(vec![(n, k), (CMatrix::identity(16, 16), l - k)]));
    let table = WeingartenTable::new(l)?;
    let md = MomentDecomposition::project(&o, &table)?;
    let tr = md.trace_with(&aotoc_boundary(n_a, l - n_a))?;
    Ok((tr.re * inv_d2(l)).to_f64().unwrap_or(f64::NAN))
}

fn apep_with_cut(u: &DenseOperator, k: usize, l: usize, n_a: usize) -> Result<f64> {
    let n = apep_noise_factor(u)?;
    let lam = SiteFactorSet::get().lambda() * C64::from(0.25);
    let o = FactorizedOperator::single(ProductOperator::new(vec![(n, k), (lam, l - k)]));
    let table = WeingartenTable::new(l)?;
    let md = MomentDecomposition::project(&o, &table)?;
    let y = FactorizedOperator::single(ProductOperator::new(vec![
        (t(&perm(&P12_34)), n_a),
        (CMatrix::identity(16, 16), l - n_a),
    ]));
    let tr = md.trace_with(&y)?;
    Ok(1.0 - (tr.re * inv_d2(l)).to_f64().unwrap_or(f64::NAN))
}

/// Exact Clifford average of the bipartite A-OTOC at `L` qubits (even),
/// noise on `k` qubits, symmetric cut.
pub fn avg_aotoc_finite_l(noise: &QuantumChannel, k: usize, l: usize) -> Result<f64> {
    check_k_l(k, l)?;
    aotoc_with_cut(noise, k, l, l / 2)
}

/// Exact Clifford average of the APEP at `L` qubits (even), unitary noise
/// `u^{⊗k}`, symmetric cut.
pub fn avg_apep_finite_l(u: &DenseOperator, k: usize, l: usize) -> Result<f64> {
    check_k_l(k, l)?;
    apep_with_cut(u, k, l, l / 2)
}

/// L → ∞ Clifford-averaged A-OTOC.
///
/// At large `L` only the `T_{(13)(24)}`-type pairing survives in the
/// boundary trace, leaving `(Tr(n t_{(14)(23)})/4)^k − (Tr(n Λ₁)/16)^k`,
/// where `n` is [`aotoc_noise_factor`] and the normalizers are the values at
/// identity noise.
pub fn avg_aotoc_infinite(noise: &QuantumChannel, k: usize) -> Result<f64> {
    let (a, b) = aotoc_limit_site_terms(noise)?;
    Ok(a.powi(k as i32) - b.powi(k as i32))
}

/// The two normalized single-site quantities of the L → ∞ A-OTOC.
pub fn aotoc_limit_site_terms(noise: &QuantumChannel) -> Result<(f64, f64)> {
    let n = aotoc_noise_factor(noise)?;
    let a = (&n * t(&perm(&P14_23))).trace().re / 4.0;
    let b = (&n * SiteFactorSet::get().lambda()).trace().re / 16.0;
    Ok((a, b))
}

/// The single-site trace terms `Tr(T_π U^{⊗4} Λ₁ U†^{⊗4} Λ₁)` for
/// π = (1234), (12)(34), (13)(24), each divided by its value at `U = I`
/// (32, 64, 64).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ApepLimitTerms {
    pub t_1234: f64,
    pub t_12_34: f64,
    pub t_13_24: f64,
}

impl ApepLimitTerms {
    /// `1 − (a^k + 2 b^k + c^k)/4` with `(a, b, c)` the three terms.
    pub fn printed_combination(&self, k: usize) -> f64 {
        let e = k as i32;
        1.0 - 0.25 * (self.t_1234.powi(e) + 2.0 * self.t_12_34.powi(e) + self.t_13_24.powi(e))
    }
}

pub fn apep_limit_trace_terms(u: &DenseOperator) -> Result<ApepLimitTerms> {
    check_single_qubit_unitary(u)?;
    let m = u.matrix();
    let u4 = m.kronecker(m).kronecker(m).kronecker(m);
    let lam = SiteFactorSet::get().lambda();
    let core = &u4 * lam * u4.adjoint() * lam;
    let term = |p: Perm, norm: f64| (t(&p) * &core).trace().re / norm;
    Ok(ApepLimitTerms {
        t_1234: term(perm(&[&[1, 2, 3, 4]]), 32.0),
        t_12_34: term(perm(&P12_34), 64.0),
        t_13_24: term(perm(&P13_24), 64.0),
    })
}

/// L → ∞ Clifford-averaged APEP, `1 − τ^k` with
/// `τ = Tr(t_{(12)(34)} U†^{⊗4} Λ₁ U^{⊗4} Λ₁)/64` (1 at `U = I`).
pub fn avg_apep_infinite(u: &DenseOperator, k: usize) -> Result<f64> {
    Ok(1.0 - apep_limit_tau(u)?.powi(k as i32))
}

pub fn apep_limit_tau(u: &DenseOperator) -> Result<f64> {
    let n = apep_noise_factor(u)?;
    Ok((t(&perm(&P12_34)) * n * SiteFactorSet::get().lambda()).trace().re / 16.0)
}

pub fn rz_aotoc_closed_form(theta: f64, k: usize) -> f64 {
    1.0 - ((3.0 + (2.0 * theta).cos()) / 4.0).powi(k as i32)
}

pub fn rz_apep_closed_form(theta: f64, k: usize) -> f64 {
    1.0 - ((7.0 + (4.0 * theta).cos()) / 8.0).powi(k as i32)
}

/// L → ∞ A-OTOC for a rotation by `theta` about `(sinγ cosφ, sinγ sinφ, cosγ)`.
pub fn general_axis_aotoc_closed_form(theta: f64, gamma: f64, phi: f64, k: usize) -> f64 {
    let (sg2, cg2) = (gamma.sin().powi(2), gamma.cos().powi(2));
    let sc = (phi.sin() * phi.cos()).powi(2);
    let inner = 3.0 + (2.0 * theta).cos() - 8.0 * sg2 * (cg2 + sg2 * sc) * (theta / 2.0).sin().powi(4);
    1.0 - (inner / 4.0).powi(k as i32)
}

/// Haar-averaged L → ∞ A-OTOC for single-qubit depolarizing noise.
pub fn haar_depolarizing_closed_form(p: f64, k: usize) -> f64 {
    let e = k as i32;
    (1.0 - 1.5 * p + 0.75 * p * p).powi(e) - (1.0 - 0.75 * p).powi(2 * e)
}

#[derive(Clone, Debug, Serialize)]
pub struct HaarCliffordReport {
    pub k: usize,
    pub haar_aotoc: f64,
    pub clifford_aotoc: f64,
    /// Present when the noise is a single unitary.
    pub clifford_apep: Option<f64>,
}

pub fn haar_vs_clifford_report(noise: &QuantumChannel, k: usize) -> Result<HaarCliffordReport> {
    check_single_qubit_channel(noise)?;
    let clifford_apep = match noise.as_unitary() {
        Some(u) => Some(avg_apep_infinite(&u, k)?),
        None => None,
    };
    Ok(HaarCliffordReport {
        k,
        haar_aotoc: haar_avg_aotoc_infinite(&noise.natural_representation(), k)?,
        clifford_aotoc: avg_aotoc_infinite(noise, k)?,
        clifford_apep,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct RotationOptimum {
    pub theta: f64,
    pub gamma: f64,
    pub phi: f64,
    pub value: f64,
}

impl RotationOptimum {
    pub fn axis(&self) -> [f64; 3] {
        [
            self.gamma.sin() * self.phi.cos(),
            self.gamma.sin() * self.phi.sin(),
            self.gamma.cos(),
        ]
    }
}

/// Maximizes the L → ∞ Clifford A-OTOC over single-qubit rotations by
/// Nelder–Mead from a grid of starting points.
pub fn maximize_rotation_aotoc(k: usize) -> Result<RotationOptimum> {
    let f = |x: &[f64; 3]| -> f64 {
        let ch = QuantumChannel::unitary(axis_rotation(x[0], x[1], x[2])).expect("rotation is unitary");
        -avg_aotoc_infinite(&ch, k).unwrap_or(f64::NAN)
    };
    let mut best: Option<([f64; 3], f64)> = None;
    for &th in &[1.0, 2.0, 2.8] {
        for &ga in &[0.4, 1.0, 1.5] {
            for &ph in &[0.3, 0.9, 1.4] {
                let (x, v) = nelder_mead(&f, [th, ga, ph], 0.3, 1e-14, 4000);
                if best.is_none_or(|b| v < b.1) {
                    best = Some((x, v));
                }
            }
        }
    }
    let (x, v) = best.expect("at least one start");
    Ok(RotationOptimum {
        theta: x[0],
        gamma: x[1],
        phi: x[2],
        value: -v,
    })
}

/// Minimizes `f` over R³; returns the best vertex and value.
pub fn nelder_mead<F: Fn(&[f64; 3]) -> f64>(
    f: &F,
    start: [f64; 3],
    step: f64,
    ftol: f64,
    max_iter: usize,
) -> ([f64; 3], f64) {
    let mut simplex: Vec<([f64; 3], f64)> = (0..4)
        .map(|i| {
            let mut x = start;
            if i > 0 {
                x[i - 1] += step;
            }
            (x, f(&x))
        })
        .collect();
    let lerp = |a: &[f64; 3], b: &[f64; 3], t: f64| -> [f64; 3] { std::array::from_fn(|j| a[j] + t * (b[j] - a[j])) };
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if (simplex[3].1 - simplex[0].1).abs() <= ftol * (1.0 + simplex[0].1.abs()) {
            break;
        }
        let centroid: [f64; 3] = std::array::from_fn(|j| (0..3).map(|i| simplex[i].0[j]).sum::<f64>() / 3.0);
        let worst = simplex[3];
        let xr = lerp(&centroid, &worst.0, -1.0);
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe = lerp(&centroid, &worst.0, -2.0);
            let fe = f(&xe);
            simplex[3] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[2].1 {
            simplex[3] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst.1 {
                let x = lerp(&centroid, &worst.0, -0.5);
                (x, f(&x))
            } else {
                let x = lerp(&centroid, &worst.0, 0.5);
                (x, f(&x))
            };
            if fc < worst.1.min(fr) {
                simplex[3] = (xc, fc);
            } else {
                let best = simplex[0].0;
                for v in simplex.iter_mut().skip(1) {
                    v.0 = lerp(&best, &v.0, 0.5);
                    v.1 = f(&v.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex[0]
}
