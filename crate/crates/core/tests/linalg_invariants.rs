use nalgebra::Complex;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, RngSeed};
use qsc_core::layout::{Owner, Register, TensorLayout};
use qsc_core::linalg::random::{random_density, random_matrix, random_state, random_unitary};
use qsc_core::linalg::{
    eigh, fidelity, partial_trace, purify, reduced_from_pure, schmidt_decompose, svd,
    trace_distance, CMat, DensityMatrix, StateVector,
};
use qsc_core::protocol::{build_pgm, measure, mutual_information, Label};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type C64 = Complex<f64>;

fn config() -> Config {
    Config {
        cases: 200,
        rng_algorithm: RngAlgorithm::ChaCha,
        rng_seed: RngSeed::Fixed(0x5eed),
        failure_persistence: None,
        ..Config::default()
    }
}

fn two_party(da: usize, db: usize) -> TensorLayout {
    TensorLayout::new(vec![
        Register::new("a", da, Owner::Alice),
        Register::new("b", db, Owner::Bob),
    ])
    .unwrap()
}

fn three_party(da: usize, db: usize, dc: usize) -> TensorLayout {
    TensorLayout::new(vec![
        Register::new("a", da, Owner::Alice),
        Register::new("b", db, Owner::Bob),
        Register::new("c", dc, Owner::Bob),
    ])
    .unwrap()
}

fn close(a: &CMat, b: &CMat, tol: f64) -> bool {
    (a - b).norm() <= tol
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn schmidt_reconstructs_and_matches_reduced_spectrum(
        seed in any::<u64>(), da in 1usize..=8, db in 1usize..=8,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = two_party(da, db);
        let psi = random_state(da * db, &mut rng);
        let form = schmidt_decompose(&psi, &layout, &["a"]).unwrap();
        let back = form.reconstruct();
        prop_assert!((back - psi.amplitudes()).norm() < 1e-9);
        let total: f64 = form.coefficients.iter().map(|c| c * c).sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        prop_assert!(form.coefficients.windows(2).all(|w| w[0] >= w[1]));

        let rho_a = reduced_from_pure(&psi, &layout, &["a"]).unwrap();
        let mut spectrum = rho_a.eigenvalues();
        spectrum.sort_by(|x, y| y.total_cmp(x));
        for (k, &lam) in spectrum.iter().enumerate() {
            let c = form.coefficients.get(k).copied().unwrap_or(0.0);
            prop_assert!((lam - c * c).abs() < 1e-9);
        }
    }

    #[test]
    fn partial_trace_is_a_density_matrix_and_composes(
        seed in any::<u64>(), da in 1usize..=4, db in 1usize..=4, dc in 1usize..=4,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = three_party(da, db, dc);
        let d = da * db * dc;
        let rho = random_density(d, rng.random_range(1..=d), &mut rng);
        let ab = partial_trace(&rho, &layout, &["a", "b"]).unwrap();
        prop_assert!((ab.trace() - 1.0).abs() < 1e-9);
        prop_assert!(ab.eigenvalues().iter().all(|&l| l > -1e-10));
        // tracing c then b equals tracing both at once
        let a_direct = partial_trace(&rho, &layout, &["a"]).unwrap();
        let a_steps = partial_trace(&ab, &two_party(da, db), &["a"]).unwrap();
        prop_assert!(close(a_direct.matrix(), a_steps.matrix(), 1e-10));
    }

    #[test]
    fn partial_trace_of_product_returns_factor(
        seed in any::<u64>(), da in 1usize..=8, db in 1usize..=8,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_density(da, da, &mut rng);
        let b = random_density(db, db, &mut rng);
        let ab = DensityMatrix::new(a.matrix().kronecker(b.matrix())).unwrap();
        let back = partial_trace(&ab, &two_party(da, db), &["a"]).unwrap();
        prop_assert!(close(back.matrix(), a.matrix(), 1e-10));
    }

    #[test]
    fn fidelity_is_symmetric_bounded_and_unitarily_invariant(
        seed in any::<u64>(), d in 1usize..=8,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_density(d, rng.random_range(1..=d), &mut rng);
        let sigma = random_density(d, rng.random_range(1..=d), &mut rng);
        let f = fidelity(&rho, &sigma).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!((f - fidelity(&sigma, &rho).unwrap()).abs() < 1e-8);
        prop_assert!((fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-8);
        let u = random_unitary(d, &mut rng);
        let f_rot = fidelity(&u.conjugate(&rho).unwrap(), &u.conjugate(&sigma).unwrap()).unwrap();
        prop_assert!((f - f_rot).abs() < 1e-8);
    }

    #[test]
    fn fidelity_brackets_trace_distance(seed in any::<u64>(), d in 1usize..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_density(d, rng.random_range(1..=d), &mut rng);
        // mix toward rho sometimes so that F close to 1 is exercised
        let t: f64 = if rng.random_bool(0.3) { rng.random_range(0.0..0.01) } else { 1.0 };
        let other = random_density(d, rng.random_range(1..=d), &mut rng);
        let sigma = DensityMatrix::new(
            rho.matrix() * C64::new(1.0 - t, 0.0) + other.matrix() * C64::new(t, 0.0),
        )
        .unwrap();
        let f = fidelity(&rho, &sigma).unwrap();
        let dist = trace_distance(&rho, &sigma).unwrap();
        prop_assert!(1.0 - f <= dist + 1e-7);
        prop_assert!(dist <= (1.0 - f * f).max(0.0).sqrt() + 1e-7);
        // F = 1 exactly when the states coincide
        prop_assert_eq!(f > 1.0 - 1e-9, dist < 1e-4);
    }

    #[test]
    fn purification_round_trips(seed in any::<u64>(), d in 1usize..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_density(d, rng.random_range(1..=d), &mut rng);
        let psi = purify(&rho).unwrap();
        prop_assert!((psi.amplitudes().norm() - 1.0).abs() < 1e-10);
        let back = reduced_from_pure(&psi, &two_party(d, d), &["a"]).unwrap();
        prop_assert!(close(back.matrix(), rho.matrix(), 1e-9));
    }

    #[test]
    fn pure_state_fidelity_is_overlap(seed in any::<u64>(), d in 1usize..=64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_state(d, &mut rng);
        let b = random_state(d, &mut rng);
        let f = fidelity(&a.to_density(), &b.to_density()).unwrap();
        prop_assert!((f - a.inner(&b).norm()).abs() < 1e-7);
    }

    #[test]
    fn eigh_and_svd_reconstruct(seed in any::<u64>(), r in 1usize..=8, c in 1usize..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_matrix(r, c, &mut rng);
        let dec = svd(&a).unwrap();
        prop_assert!(close(&dec.reconstruct(), &a, 1e-9));
        let h = &a * a.adjoint();
        let (vals, vecs) = eigh(&h).unwrap();
        let diag = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
            vals.len(),
            vals.iter().map(|&v| C64::new(v, 0.0)),
        ));
        prop_assert!(close(&(&vecs * diag * vecs.adjoint()), &h, 1e-8));
    }

    #[test]
    fn mutual_information_is_bounded(
        seed in any::<u64>(), inputs in 1usize..=6, outcomes in 1usize..=6,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normalize = |v: Vec<f64>| {
            let s: f64 = v.iter().sum();
            v.into_iter().map(|x| x / s).collect::<Vec<_>>()
        };
        let prior = normalize((0..inputs).map(|_| rng.random_range(0.01..1.0)).collect());
        let cond: Vec<Vec<f64>> = (0..inputs)
            .map(|_| normalize((0..outcomes).map(|_| rng.random_range(0.0..1.0) + 1e-3).collect()))
            .collect();
        let info = mutual_information(&prior, &cond).unwrap();
        let h_prior: f64 = prior.iter().map(|p| -p * p.log2()).sum();
        prop_assert!(info >= 0.0);
        prop_assert!(info <= h_prior + 1e-9);
        prop_assert!(info <= (outcomes as f64).log2() + 1e-9);
    }
}

/// Hermitian matrix exponential `exp(i t h)` through nalgebra's own
/// eigendecomposition, kept apart from the library's routines.
fn expi(h: &CMat, t: f64) -> CMat {
    let eig = h.clone().symmetric_eigen();
    let phases = nalgebra::DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues
            .iter()
            .map(|&l| Complex::from_polar(1.0, t * l)),
    );
    &eig.eigenvectors * CMat::from_diagonal(&phases) * eig.eigenvectors.adjoint()
}

/// Largest `|<psi|(I x U)|phi>|` over unitaries on the second factor, by
/// Riemannian gradient ascent.
fn maximize_over_purifications(
    psi: &StateVector,
    phi: &StateVector,
    d: usize,
    steps: usize,
) -> f64 {
    let a = CMat::from_fn(d, d, |x, k| psi.amplitudes()[x * d + k]);
    let b = CMat::from_fn(d, d, |x, l| phi.amplitudes()[x * d + l]);
    // <psi|(I x U)|phi> = Tr(U m) with m = b^T conj(a)
    let m = b.transpose() * a.map(|z| z.conj());
    let mut u = CMat::identity(d, d);
    let mut best: f64 = 0.0;
    for _ in 0..steps {
        let x = &u * &m;
        let z = x.trace();
        best = best.max(z.norm());
        let phase = if z.norm() > 1e-14 {
            z.conj() / z.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let y = x * (C64::i() * phase);
        let grad = (&y + y.adjoint()) * C64::new(0.5, 0.0);
        u = expi(&grad, 0.3) * u;
    }
    best.max((&u * &m).trace().norm())
}

#[test]
fn fidelity_matches_purification_maximization() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..5 {
        let rho = random_density(3, 3, &mut rng);
        let sigma = random_density(3, 2, &mut rng);
        let searched =
            maximize_over_purifications(&purify(&rho).unwrap(), &purify(&sigma).unwrap(), 3, 2000);
        let f = fidelity(&rho, &sigma).unwrap();
        assert!(
            (searched - f).abs() < 1e-4,
            "search {searched} vs fidelity {f}"
        );
    }
}

#[test]
fn pgm_matches_projective_grid_search() {
    let zero = StateVector::from_reals(&[1.0, 0.0]).unwrap().to_density();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let plus = StateVector::from_reals(&[s, s]).unwrap().to_density();
    let pgm = build_pgm(&[(0.5, zero.clone()), (0.5, plus.clone())]).unwrap();
    let hit = |rho: &DensityMatrix, k: u32| {
        measure(rho, &pgm)
            .unwrap()
            .into_iter()
            .find(|r| r.label == Label::Value(k))
            .map_or(0.0, |r| r.probability)
    };
    let pgm_success = 0.5 * hit(&zero, 0) + 0.5 * hit(&plus, 1);

    // two-outcome projective measurements {|t><t|, |t_perp><t_perp|}
    let mut best: f64 = 0.0;
    for step in 0..=3600 {
        let t = std::f64::consts::PI * step as f64 / 3600.0;
        let (c, sn) = (t.cos(), t.sin());
        // outcome t -> guess |0>, outcome t_perp -> guess |+>
        let p_zero = c * c;
        let overlap_plus = -sn * s + c * s;
        best = best.max(0.5 * p_zero + 0.5 * overlap_plus * overlap_plus);
    }
    assert!(
        (pgm_success - best).abs() < 0.02,
        "pgm {pgm_success} vs grid {best}"
    );
}
