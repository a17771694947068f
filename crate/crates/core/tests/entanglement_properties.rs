use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use spinthermal::entanglement::*;
use spinthermal::hamiltonians::{two_spin_hamiltonian, PairSpec};
use spinthermal::thermal::pair_gibbs_state;
use spinthermal::DensityMatrix4;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn random_state(rng: &mut StdRng, rank: usize) -> DensityMatrix4 {
    let g = nalgebra::DMatrix::<Complex64>::from_fn(4, rank, |_, _| {
        c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let m = &g * g.adjoint();
    let tr = m.trace();
    DensityMatrix4::new(Matrix4::from_fn(|r, k| m[(r, k)] / tr)).unwrap()
}

fn random_unitary(rng: &mut StdRng) -> Matrix2<Complex64> {
    let (t, p1, p2, g) = (
        rng.random_range(0.0..std::f64::consts::FRAC_PI_2),
        rng.random_range(0.0..std::f64::consts::TAU),
        rng.random_range(0.0..std::f64::consts::TAU),
        rng.random_range(0.0..std::f64::consts::TAU),
    );
    let a = Complex64::from_polar(t.cos(), p1);
    let b = Complex64::from_polar(t.sin(), p2);
    Matrix2::new(a, -b.conj(), b, a.conj()) * Complex64::from_polar(1.0, g)
}

/// `U1 ⊗ U2` in the index convention `s1 + 2 s2`.
fn kron(u1: &Matrix2<Complex64>, u2: &Matrix2<Complex64>) -> Matrix4<Complex64> {
    Matrix4::from_fn(|r, k| u1[(r & 1, k & 1)] * u2[(r >> 1, k >> 1)])
}

#[test]
fn concurrence_is_local_unitary_invariant() {
    let mut rng = StdRng::seed_from_u64(1);
    for trial in 0..500 {
        let rho = random_state(&mut rng, 1 + trial % 4);
        let u = kron(&random_unitary(&mut rng), &random_unitary(&mut rng));
        let rotated = DensityMatrix4::new(u * rho.matrix() * u.adjoint()).unwrap();
        let (a, b) = (
            concurrence(&rho).concurrence,
            concurrence(&rotated).concurrence,
        );
        assert!((a - b).abs() < 1e-10, "trial {trial}: {a} vs {b}");
    }
}

#[test]
fn concurrence_of_pure_states_matches_overlap_formula() {
    let mut rng = StdRng::seed_from_u64(2);
    for _ in 0..500 {
        let psi = nalgebra::Vector4::from_fn(|_, _| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let psi = psi / c(psi.norm(), 0.0);
        // C = 2 |a00 a11 - a01 a10| in the (s1 + 2 s2) ordering
        let want = 2.0 * (psi[0] * psi[3] - psi[1] * psi[2]).norm();
        let got = concurrence(&DensityMatrix4::from_pure(&psi).unwrap()).concurrence;
        assert!((got - want).abs() < 1e-10);
    }
}

#[test]
fn states_in_the_separable_ball_have_zero_concurrence() {
    let mut rng = StdRng::seed_from_u64(3);
    let mixed = DensityMatrix4::maximally_mixed();
    for trial in 0..10_000 {
        let sigma = random_state(&mut rng, 1 + trial % 4);
        let excess = sigma.purity() - 0.25;
        let t_max = if excess > 0.0 {
            ((1.0 / 3.0 - 0.25) / excess).sqrt().min(1.0)
        } else {
            1.0
        };
        let t = if trial % 10 == 0 {
            t_max
        } else {
            rng.random_range(0.0..t_max)
        };
        let rho = sigma.mix(&mixed, t).unwrap();
        assert!(rho.purity() <= 1.0 / 3.0 + 1e-12);
        assert!(concurrence(&rho).concurrence < 1e-12, "trial {trial}");
    }
}

#[test]
fn concurrence_is_bounded_and_lambdas_sorted() {
    let mut rng = StdRng::seed_from_u64(4);
    for k in 0..2000 {
        let r = concurrence(&random_state(&mut rng, 1 + k % 4));
        assert!((0.0..=1.0 + 1e-12).contains(&r.concurrence));
        assert!(r.lambdas.windows(2).all(|w| w[0] >= w[1]));
        assert!(r.lambdas.iter().all(|&l| l >= 0.0));
    }
}

#[test]
fn x_state_formula_agrees_with_general_route() {
    let mut rng = StdRng::seed_from_u64(5);
    for _ in 0..1000 {
        let spec = PairSpec::new(
            if rng.random_bool(0.5) { 1.0 } else { -1.0 },
            rng.random_range(-1.0..1.5),
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
        )
        .unwrap();
        let beta = rng.random_range(0.0..20.0);
        let rho = pair_gibbs_state(&two_spin_hamiltonian(&spec).unwrap(), beta).unwrap();
        let fast = concurrence_x_state(&rho).unwrap().concurrence;
        let general = concurrence(&rho).concurrence;
        assert!((fast - general).abs() < 1e-10, "{spec:?} beta={beta}");
    }
}

#[test]
fn eof_is_strictly_increasing() {
    let mut last = eof(0.0).unwrap();
    assert_eq!(last, 0.0);
    for k in 1..=10_000 {
        let e = eof(k as f64 / 10_000.0).unwrap();
        assert!(e > last, "C = {}", k as f64 / 10_000.0);
        last = e;
    }
    assert!((last - 1.0).abs() < 1e-12);
    assert!(eof(-0.1).is_err() && eof(1.1).is_err() && eof(f64::NAN).is_err());
}

#[test]
fn threshold_separates_signs_of_chi() {
    let mut rng = StdRng::seed_from_u64(6);
    let mut finite = 0;
    for _ in 0..500 {
        let spec = PairSpec::from_detuning(
            rng.random_range(0.3..2.0),
            rng.random_range(-1.0..1.5),
            rng.random_range(0.0..3.0),
            rng.random_range(-2.0..2.0),
        )
        .unwrap();
        match threshold_beta(&spec).unwrap() {
            ThresholdResult::Finite { root, residual } => {
                finite += 1;
                assert!(residual.abs() < 1e-9);
                assert!(analytic_chi(&spec, 0.99 * root).unwrap() < 0.0);
                assert!(analytic_chi(&spec, 1.01 * root).unwrap() > 0.0);
                assert!(analytic_concurrence(&spec, 0.99 * root).unwrap() == 0.0);
            }
            ThresholdResult::None => {
                for beta in [0.1, 1.0, 10.0, 100.0] {
                    assert!(analytic_concurrence(&spec, beta).unwrap() == 0.0);
                }
            }
        }
    }
    assert!(finite > 300);
}

#[test]
fn delta_e_threshold_grows_with_detuning() {
    let mut last = 0.0;
    for k in 0..=40 {
        let dh = 0.1 * k as f64;
        let t = threshold_beta_delta_e(0.4, dh).unwrap();
        let root = t.result.root().unwrap();
        assert!(root > last, "dh = {dh}");
        assert!(t.consistent);
        last = root;
    }
}

proptest! {
    #[test]
    fn analytic_concurrence_in_unit_interval(
        gamma in -1.0f64..1.5, dh in 0.0f64..5.0, hs in -3.0f64..3.0, beta in 0.0f64..50.0,
    ) {
        let spec = PairSpec::from_detuning(1.0, gamma, dh, hs).unwrap();
        let c = analytic_concurrence(&spec, beta).unwrap();
        prop_assert!((0.0..=1.0).contains(&c));
    }
}
