//! Fast oracle-equivalence checks run by `noisy-clifford selftest`.

use std::f64::consts::PI;

use noisy_clifford::clifford_moments as cm;
use noisy_clifford::dense_ops::{self, DenseOperator, QuantumChannel, C64};
use noisy_clifford::magic_capacity::{robustness, StabilizerStateSet};
use noisy_clifford::nonlocal_magic::{apep_enumeration, apep_four_copy, apep_single_copy, primed_unitary, sandwich_unitary};
use noisy_clifford::pauli_clifford::{enumerate_cliffords, random_clifford};
use noisy_clifford::scrambling::{aotoc_exact, aotoc_swap_dense, task_rng, Bipartition, CliffordSandwich};

type Check = fn() -> Result<(), String>;

fn close(name: &str, got: f64, want: f64, tol: f64) -> Result<(), String> {
    if (got - want).abs() <= tol {
        Ok(())
    } else {
        Err(format!("{name}: got {got}, expected {want} (tol {tol:e})"))
    }
}

fn e<E: std::fmt::Display>(x: E) -> String {
    x.to_string()
}

fn s4_table() -> Result<(), String> {
    cm::S4Data::get().self_test().map_err(e)
}

fn phi_matches_exhaustive_l1() -> Result<(), String> {
    let mut rng = task_rng(1, 0);
    let o = dense_ops::haar_unitary(16, &mut rng);
    let mut acc = dense_ops::CMatrix::zeros(16, 16);
    let all = enumerate_cliffords(1).map_err(e)?;
    for c in &all {
        let u = c.to_dense().map_err(e)?.into_matrix();
        let u4 = u.kronecker(&u).kronecker(&u).kronecker(&u);
        acc += &u4 * &o * u4.adjoint();
    }
    acc /= C64::from(all.len() as f64);
    let got = cm::phi_clifford_4(&DenseOperator::new(o, vec![2; 4]).map_err(e)?, 1).map_err(e)?;
    let diff = (got.matrix() - acc).iter().map(|z| z.norm()).fold(0.0, f64::max);
    close("max deviation", diff, 0.0, 1e-10)
}

fn aotoc_engine_matches_exhaustive_l2() -> Result<(), String> {
    let noise = QuantumChannel::unitary(dense_ops::rz(PI / 2.0)).map_err(e)?;
    let cut = Bipartition::halves(2).map_err(e)?;
    let all = enumerate_cliffords(2).map_err(e)?;
    let mut g = 0.0;
    for c in &all {
        let om = CliffordSandwich::new(c, &noise, 1).and_then(|s| s.to_channel()).map_err(e)?;
        g += aotoc_exact(&om, &cut).map_err(e)?;
    }
    close("avg A-OTOC", g / all.len() as f64, cm::avg_aotoc_finite_l(&noise, 1, 2).map_err(e)?, 1e-10)
}

fn aotoc_forms_agree() -> Result<(), String> {
    let mut rng = task_rng(2, 0);
    let c = random_clifford(3, &mut rng).map_err(e)?;
    let noise = QuantumChannel::depolarizing(0.3).map_err(e)?;
    let om = CliffordSandwich::new(&c, &noise, 2).and_then(|s| s.to_channel()).map_err(e)?;
    let cut = Bipartition::split(3, 1).map_err(e)?;
    close(
        "pauli vs swap form",
        aotoc_exact(&om, &cut).map_err(e)?,
        aotoc_swap_dense(&om, &cut).map_err(e)?,
        1e-10,
    )
}

fn apep_triangle() -> Result<(), String> {
    let mut rng = task_rng(3, 0);
    let c = random_clifford(3, &mut rng).map_err(e)?;
    let u = DenseOperator::new(dense_ops::haar_unitary(2, &mut rng), vec![2]).map_err(e)?;
    let cut = Bipartition::halves(3).map_err(e)?;
    let sandwich = sandwich_unitary(&c, &u, 1).map_err(e)?;
    let a = apep_enumeration(&sandwich, &cut).map_err(e)?;
    close("four-copy", apep_four_copy(&sandwich, &cut).map_err(e)?, a, 1e-10)?;
    let primed = primed_unitary(&c, &u, 1).map_err(e)?;
    close(
        "single-copy",
        apep_single_copy(&c, &u, 1, 3, &cut).map_err(e)?,
        apep_enumeration(&primed.adjoint(), &cut).map_err(e)?,
        1e-10,
    )
}

fn closed_forms() -> Result<(), String> {
    for i in 0..=8 {
        let th = PI * i as f64 / 8.0;
        let ch = QuantumChannel::unitary(dense_ops::rz(th)).map_err(e)?;
        for k in 1..=4 {
            close("Rz A-OTOC", cm::avg_aotoc_infinite(&ch, k).map_err(e)?, cm::rz_aotoc_closed_form(th, k), 1e-10)?;
            close("Rz APEP", cm::avg_apep_infinite(&dense_ops::rz(th), k).map_err(e)?, cm::rz_apep_closed_form(th, k), 1e-10)?;
        }
    }
    Ok(())
}

fn depolarizing_zero() -> Result<(), String> {
    let ch = QuantumChannel::depolarizing(0.5).map_err(e)?;
    close("finite L", cm::avg_aotoc_finite_l(&ch, 2, 6).map_err(e)?, 0.0, 1e-10)
}

fn t_state_robustness() -> Result<(), String> {
    let set = StabilizerStateSet::enumerate(1).map_err(e)?;
    let t = dense_ops::t_gate().into_matrix();
    let plus = nalgebra::DVector::from_element(2, C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0));
    let v = t * plus;
    let rho = DenseOperator::new(&v * v.adjoint(), vec![2]).map_err(e)?;
    close("R(T|+>)", robustness(&rho, &set).map_err(e)?.value, 2f64.sqrt(), 1e-6)
}

pub fn run_all() -> Vec<(&'static str, Result<(), String>)> {
    let checks: [(&str, Check); 8] = [
        ("character table", s4_table),
        ("fourth-moment projector vs exhaustive L=1", phi_matches_exhaustive_l1),
        ("finite-L A-OTOC vs exhaustive L=2", aotoc_engine_matches_exhaustive_l2),
        ("A-OTOC Pauli and swap forms", aotoc_forms_agree),
        ("APEP evaluators", apep_triangle),
        ("Rz closed forms", closed_forms),
        ("depolarizing noise does not scramble", depolarizing_zero),
        ("T-state robustness", t_state_robustness),
    ];
    checks.iter().map(|(n, f)| (*n, f())).collect()
}
