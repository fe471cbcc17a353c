use std::collections::HashMap;

use nalgebra::DVector;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use noisy_clifford::clifford_moments::phi_clifford_4;
use noisy_clifford::dense_ops::{
    haar_unitary, kron, partial_trace, DenseOperator, QuantumChannel, C64,
};
use noisy_clifford::magic_capacity::{magic_capacity, robustness, StabilizerStateSet};
use noisy_clifford::pauli_clifford::{
    commutes, conjugate_pauli, enumerate_cliffords, enumerate_paulis, pauli_mul, random_clifford, CliffordTableau,
    PauliString,
};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn pauli(n: usize) -> impl Strategy<Value = PauliString> {
    let m = (1u64 << n) - 1;
    (any::<u64>(), any::<u64>(), 0u8..4).prop_map(move |(x, z, ph)| PauliString::new(n, x & m, z & m, ph).unwrap())
}

fn max_diff(a: &DenseOperator, b: &DenseOperator) -> f64 {
    a.max_abs_diff(b)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pauli_product_matches_dense(p in pauli(4), q in pauli(4)) {
        let pq = pauli_mul(&p, &q).unwrap();
        let dense = p.to_dense().unwrap().mul(&q.to_dense().unwrap()).unwrap();
        prop_assert!(max_diff(&pq.to_dense().unwrap(), &dense) < 1e-12);
    }

    #[test]
    fn commutation_matches_dense(p in pauli(5), q in pauli(5)) {
        let (a, b) = (p.to_dense().unwrap(), q.to_dense().unwrap());
        let comm = a.mul(&b).unwrap().add(&b.mul(&a).unwrap().scale(C64::from(-1.0))).unwrap();
        prop_assert_eq!(commutes(&p, &q).unwrap(), comm.norm_sq() < 1e-12);
    }

    #[test]
    fn conjugation_matches_dense(seed in any::<u64>(), p in pauli(4)) {
        let c = random_clifford(4, &mut rng(seed)).unwrap();
        let u = c.to_dense().unwrap();
        let want = u.mul(&p.to_dense().unwrap()).unwrap().mul(&u.adjoint()).unwrap();
        let got = conjugate_pauli(&c, &p).unwrap().to_dense().unwrap();
        prop_assert!(max_diff(&got, &want) < 1e-10);
    }

    #[test]
    fn conjugation_preserves_commutation(seed in any::<u64>(), p in pauli(5), q in pauli(5)) {
        let c = random_clifford(5, &mut rng(seed)).unwrap();
        let (cp, cq) = (c.conjugate(&p).unwrap(), c.conjugate(&q).unwrap());
        prop_assert_eq!(commutes(&p, &q).unwrap(), commutes(&cp, &cq).unwrap());
        prop_assert!(c.is_symplectic());
    }

    #[test]
    fn pauli_text_round_trip(p in pauli(6)) {
        let back: PauliString = p.to_string().parse().unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn tableau_text_round_trip(seed in any::<u64>(), n in 1usize..6) {
        let c = random_clifford(n, &mut rng(seed)).unwrap();
        prop_assert_eq!(CliffordTableau::from_text(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn inverse_is_two_sided(seed in any::<u64>(), n in 1usize..6) {
        let c = random_clifford(n, &mut rng(seed)).unwrap();
        let id = CliffordTableau::identity(n);
        prop_assert_eq!(c.compose(&c.inverse()).unwrap(), id.clone());
        prop_assert_eq!(c.inverse().compose(&c).unwrap(), id);
    }

    #[test]
    fn partial_trace_of_product(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = DenseOperator::new(haar_unitary(2, &mut r), vec![2]).unwrap();
        let b = DenseOperator::new(haar_unitary(4, &mut r), vec![2, 2]).unwrap();
        let ab = kron(&a, &b);
        let got = partial_trace(&ab, &[0]).unwrap();
        prop_assert!(max_diff(&got, &a.scale(b.trace())) < 1e-12);
        let got = partial_trace(&ab, &[1, 2]).unwrap();
        prop_assert!(max_diff(&got, &b.scale(a.trace())) < 1e-12);
    }

    #[test]
    fn operator_text_round_trip(seed in any::<u64>()) {
        let o = DenseOperator::new(haar_unitary(4, &mut rng(seed)), vec![2, 2]).unwrap();
        let back = DenseOperator::from_text(&o.to_text()).unwrap();
        prop_assert!(max_diff(&o, &back) == 0.0);
        prop_assert_eq!(back.dims(), o.dims());
    }
}

#[test]
fn composition_closure_1000_triples() {
    let mut r = rng(17);
    for t in 0..1000 {
        let n = 1 + t % 5;
        let a = random_clifford(n, &mut r).unwrap();
        let b = random_clifford(n, &mut r).unwrap();
        let m = (1u64 << n) - 1;
        let p = PauliString::new(n, rand::Rng::random::<u64>(&mut r) & m, rand::Rng::random::<u64>(&mut r) & m, 0).unwrap();
        let direct = a.compose(&b).unwrap().conjugate(&p).unwrap();
        let seq = a.conjugate(&b.conjugate(&p).unwrap()).unwrap();
        assert_eq!(direct, seq);
        assert!(a.compose(&b).unwrap().is_symplectic());
    }
}

#[test]
fn commutation_matrix_preserved_n3() {
    let basis: Vec<PauliString> = enumerate_paulis(3).unwrap().collect();
    let mut r = rng(18);
    for _ in 0..100 {
        let c = random_clifford(3, &mut r).unwrap();
        let img: Vec<PauliString> = basis.iter().map(|p| c.conjugate(p).unwrap()).collect();
        for i in 0..basis.len() {
            for j in 0..basis.len() {
                assert_eq!(commutes(&basis[i], &basis[j]).unwrap(), commutes(&img[i], &img[j]).unwrap());
            }
        }
    }
}

#[test]
fn single_qubit_sampler_chi_squared() {
    let classes = enumerate_cliffords(1).unwrap();
    let index: HashMap<CliffordTableau, usize> = classes.iter().cloned().enumerate().map(|(i, c)| (c, i)).collect();
    let mut counts = vec![0usize; 24];
    let mut r = rng(19);
    let draws = 100_000;
    for _ in 0..draws {
        counts[index[&random_clifford(1, &mut r).unwrap()]] += 1;
    }
    let e = draws as f64 / 24.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    // 23 degrees of freedom, upper 0.001 quantile
    assert!(chi2 < 49.728, "chi2 = {chi2}");
    for &c in &counts {
        assert!((c as f64 - e).abs() < 4.0 * (e * (1.0 - 1.0 / 24.0)).sqrt());
    }
}

#[test]
fn two_qubit_sampler_matches_enumeration() {
    // joint law of the phaseless images of X0 and Z0
    let key = |c: &CliffordTableau| {
        let im = c.images();
        (im[0].phaseless(), im[2].phaseless())
    };
    let all = enumerate_cliffords(2).unwrap();
    let mut exact: HashMap<_, f64> = HashMap::new();
    for c in &all {
        *exact.entry(key(c)).or_default() += 1.0 / all.len() as f64;
    }
    let mut counts: HashMap<_, usize> = HashMap::new();
    let mut r = rng(20);
    let draws = 100_000;
    for _ in 0..draws {
        *counts.entry(key(&random_clifford(2, &mut r).unwrap())).or_default() += 1;
    }
    assert_eq!(counts.len(), exact.len());
    for (k, p) in &exact {
        let c = *counts.get(k).unwrap_or(&0) as f64;
        let sd = (draws as f64 * p * (1.0 - p)).sqrt();
        assert!((c - draws as f64 * p).abs() < 4.0 * sd, "{k:?}");
    }
}

#[test]
fn phi_commutes_with_clifford_conjugation() {
    let mut r = rng(21);
    for _ in 0..3 {
        let o = DenseOperator::new(haar_unitary(256, &mut r), vec![2; 8]).unwrap();
        let c = random_clifford(2, &mut r).unwrap().to_dense().unwrap();
        // copy-major: the four copies are the outer tensor factors
        let c4 = c.kron(&c).kron(&c).kron(&c);
        let conj = c4.mul(&o).unwrap().mul(&c4.adjoint()).unwrap();
        let lhs = phi_clifford_4(&conj, 2).unwrap();
        let rhs = phi_clifford_4(&o, 2).unwrap();
        let rhs = c4.mul(&rhs).unwrap().mul(&c4.adjoint()).unwrap();
        assert!(lhs.max_abs_diff(&rhs) < 1e-9);
        assert!(lhs.max_abs_diff(&phi_clifford_4(&o, 2).unwrap()) < 1e-9);
    }
}

fn random_state(d: usize, r: &mut ChaCha8Rng) -> DenseOperator {
    let v: DVector<C64> = noisy_clifford::dense_ops::haar_state(d, r);
    DenseOperator::new(&v * v.adjoint(), vec![2; d.trailing_zeros() as usize]).unwrap()
}

#[test]
fn robustness_is_convex() {
    let set = StabilizerStateSet::enumerate(1).unwrap();
    let mut r = rng(22);
    for _ in 0..20 {
        let a = random_state(2, &mut r);
        let b = random_state(2, &mut r);
        let mid = a.add(&b).unwrap().scale(C64::from(0.5));
        let (ra, rb, rm) = (
            robustness(&a, &set).unwrap().value,
            robustness(&b, &set).unwrap().value,
            robustness(&mid, &set).unwrap().value,
        );
        assert!(rm <= 0.5 * (ra + rb) + 1e-8);
        assert!(ra >= 1.0 - 1e-9 && rb >= 1.0 - 1e-9);
    }
}

#[test]
fn capacity_is_clifford_invariant() {
    let mut r = rng(23);
    for _ in 0..10 {
        let u = DenseOperator::new(haar_unitary(2, &mut r), vec![2]).unwrap();
        let c1 = random_clifford(1, &mut r).unwrap().to_dense().unwrap();
        let c2 = random_clifford(1, &mut r).unwrap().to_dense().unwrap();
        let dressed = c1.mul(&u).unwrap().mul(&c2).unwrap();
        let k0 = magic_capacity(&QuantumChannel::unitary(u).unwrap()).unwrap().value;
        let k1 = magic_capacity(&QuantumChannel::unitary(dressed).unwrap()).unwrap().value;
        assert!((k0 - k1).abs() < 1e-6, "{k0} {k1}");
    }
}
