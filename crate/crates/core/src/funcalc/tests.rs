use super::*;
use crate::algebra::CMat;
use crate::random::{random_element, random_hermitian, stream_rng};
use rand::Rng;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn scalar_alg() -> (Algebra, SqrtDomain) {
    let alg = Algebra::matrix(1).unwrap();
    let dom = SqrtDomain::for_algebra(&alg);
    (alg, dom)
}

fn scalar(alg: &Algebra, z: C64) -> Element {
    alg.from_matrix(CMat::from_element(1, 1, z)).unwrap()
}

fn value(e: &Element) -> C64 {
    e.as_matrix().unwrap()[(0, 0)]
}

#[test]
fn domain_membership() {
    let (s, dom) = scalar_alg();
    assert!(in_domain(&s, &s.zero(), &dom));
    assert!(in_domain(&s, &scalar(&s, c(0.49, 0.0)), &dom));
    assert!(!in_domain(&s, &scalar(&s, c(0.51, 0.0)), &dom));
    assert!(!in_domain(&s, &scalar(&s, c(0.1, 0.1)), &dom));

    let m = Algebra::matrix(2).unwrap();
    let nil = m.from_matrix(CMat::from_fn(2, 2, |i, j| if i == 0 && j == 1 { c(1.0, 0.0) } else { c(0.0, 0.0) })).unwrap();
    assert!(!in_domain(&m, &nil, &SqrtDomain::for_algebra(&m)));
    // Other algebras are never members.
    assert!(!in_domain(&m, &m.zero(), &dom));
}

#[test]
fn radius_is_configurable_within_unit_interval() {
    let (s, dom) = scalar_alg();
    let wide = dom.clone().with_radius(0.9).unwrap();
    assert!(in_domain(&s, &scalar(&s, c(0.8, 0.0)), &wide));
    assert!(dom.clone().with_radius(1.5).is_err());
    assert!(dom.with_radius(0.0).is_err());
}

#[test]
fn theta_examples() {
    let (s, dom) = scalar_alg();
    assert_eq!(theta(&s, &s.zero(), &dom).unwrap(), s.zero());
    let th = theta(&s, &scalar(&s, c(0.21, 0.0)), &dom).unwrap();
    assert!((value(&th) - c(-1.0 / 11.0, 0.0)).norm() < 1e-15);

    let m = Algebra::matrix(2).unwrap();
    let d = m.from_matrix(CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.21, 0.0), c(-0.19, 0.0)]))).unwrap();
    let th = theta(&m, &d, &SqrtDomain::for_algebra(&m)).unwrap();
    let got = th.as_matrix().unwrap();
    assert!((got[(0, 0)] - c(-1.0 / 11.0, 0.0)).norm() < 1e-14);
    assert!((got[(1, 1)] - c(1.0 / 9.0, 0.0)).norm() < 1e-14);
    assert!(got[(0, 1)].norm() < 1e-15);

    assert!(matches!(theta(&s, &scalar(&s, c(0.6, 0.0)), &dom), Err(Error::OutsideSqrtDomain(_))));
}

#[test]
fn taylor_examples() {
    let (s, _) = scalar_alg();
    let zero = theta_taylor(&s, &s.zero(), 7).unwrap();
    assert_eq!(zero.value, s.zero());
    assert_eq!(zero.remainder_bound, 0.0);

    let t = theta_taylor(&s, &scalar(&s, c(0.21, 0.0)), 30).unwrap();
    let err = (value(&t.value) - c(-1.0 / 11.0, 0.0)).norm();
    assert!(err <= t.remainder_bound + 1e-16, "{err} > {}", t.remainder_bound);
    assert!(t.remainder_bound < 1e-19);

    assert!(matches!(theta_taylor(&s, &scalar(&s, c(1.0, 0.0)), 5), Err(Error::Divergent(_))));
}

#[test]
fn binomial_coefficients() {
    let c = binomial_minus_half(4);
    assert_eq!(c, vec![1.0, -0.5, 0.375, -0.3125, 0.2734375]);
}

#[test]
fn taylor_agrees_with_eigendecomposition() {
    let m = Algebra::matrix(4).unwrap();
    let dom = SqrtDomain::for_algebra(&m);
    let mut rng = stream_rng(11, 0);
    for _ in 0..50 {
        let ra: f64 = rng.random_range(0.0..0.4);
        let a = random_hermitian(&m, &mut rng, 0, ra).unwrap();
        let direct = theta(&m, &a, &dom).unwrap();
        let series = theta_taylor(&m, &a, 60).unwrap();
        let diff = m.top_seminorm(&m.sub(&direct, &series.value).unwrap()).unwrap();
        assert!(diff <= 1e-10);
        assert!(diff <= series.remainder_bound + 1e-13);
    }
}

#[test]
fn inverse_sqrt_examples() {
    let (s, dom) = scalar_alg();
    let r = verify_inverse_sqrt(&s, &s.zero(), &dom, 1e-12).unwrap();
    assert!(r.all_passed());
    assert_eq!(r.max_defect(), 0.0);

    let r = verify_inverse_sqrt(&s, &scalar(&s, c(0.21, 0.0)), &dom, 1e-12).unwrap();
    assert!(r.all_passed());
    assert!(r.annihilation < 1e-15);
}

#[test]
fn inverse_sqrt_on_random_hermitian_matrices() {
    let m = Algebra::matrix(4).unwrap();
    let dom = SqrtDomain::for_algebra(&m);
    let mut rng = stream_rng(12, 0);
    for _ in 0..500 {
        let ra: f64 = rng.random_range(0.0..0.45);
        let a = random_hermitian(&m, &mut rng, 0, ra).unwrap();
        let r = verify_inverse_sqrt(&m, &a, &dom, 1e-10).unwrap();
        assert!(r.all_passed(), "{r:?}");
    }
}

#[test]
fn inverse_sqrt_on_the_circle() {
    let circle = Algebra::smooth_circle(32, 6).unwrap();
    let dom = SqrtDomain::for_algebra(&circle);
    let mut rng = stream_rng(13, 0);
    for _ in 0..50 {
        let ra: f64 = rng.random_range(0.0..0.4);
        let a = random_hermitian(&circle, &mut rng, 0, ra).unwrap();
        // Level 5 weighs rounding noise in mode k by 2^5 k^5, about 1e9 at the cap.
        let r = verify_inverse_sqrt(&circle, &a, &dom, 1e-4).unwrap();
        assert!(r.all_passed(), "{r:?}");
        let th2 = theta(&circle, &a, &dom).unwrap();
        let ann = circle.quasi_product(&a, &circle.quasi_product(&th2, &th2).unwrap()).unwrap();
        assert!(circle.seminorm(0, &ann).unwrap() < 1e-12);
        let inv = circle.quasi_inverse(&a).unwrap();
        assert!(circle.seminorm(0, &circle.quasi_product(&a, &inv).unwrap()).unwrap() < 1e-12);
        // Pointwise agreement with (1 + f)^{-1/2} - 1.
        let space = circle.circle().unwrap();
        let th = theta(&circle, &a, &dom).unwrap();
        let fv = space.values(a.as_fourier().unwrap());
        let tv = space.values(th.as_fourier().unwrap());
        for (x, y) in fv.iter().zip(&tv) {
            assert!((y.re - (1.0 / (1.0 + x.re).sqrt() - 1.0)).abs() < 1e-9);
        }
    }
}

#[test]
fn quasi_polar_examples() {
    let (s, dom) = scalar_alg();
    assert_eq!(quasi_polar(&s, &s.zero(), &dom).unwrap(), s.zero());
    let u = quasi_polar(&s, &scalar(&s, c(0.1, 0.0)), &dom).unwrap();
    assert!(value(&u).norm() < 1e-15);
    let u = quasi_polar(&s, &scalar(&s, c(0.0, 0.1)), &dom).unwrap();
    assert!((value(&u) - c(-0.00496281, 0.09950372)).norm() < 1e-8);
    let expected = c(1.0, 0.1) / 1.01f64.sqrt() - 1.0;
    assert!((value(&u) - expected).norm() < 1e-15);
    let a = scalar(&s, c(-1.0, 1.0));
    let u = quasi_polar(&s, &a, &dom).unwrap();
    assert!((value(&u) - c(-1.0, 1.0)).norm() < 1e-15);

    // a* • a = |1 + a|^2 - 1 = 3 lies outside V.
    assert!(matches!(quasi_polar(&s, &scalar(&s, c(1.0, 0.0)), &dom), Err(Error::OutsideSqrtDomain(_))));
}

#[test]
fn quasi_polar_is_quasi_unitary_and_matches_scalar_oracle() {
    let m = Algebra::matrix(4).unwrap();
    let dom = SqrtDomain::for_algebra(&m);
    let mut rng = stream_rng(14, 0);
    for _ in 0..200 {
        let a = random_element(&m, &mut rng, 0, 0.2).unwrap();
        let u = quasi_polar(&m, &a, &dom).unwrap();
        assert!(m.is_quasi_unitary(&u, 1e-9).unwrap().quasi_unitary);
    }
    let (s, dom) = scalar_alg();
    for _ in 0..200 {
        let r = rng.random_range(0.75..1.2);
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        let z = C64::from_polar(r, phase) - 1.0;
        let u = quasi_polar(&s, &scalar(&s, z), &dom).unwrap();
        let oracle = (z + 1.0) / (z + 1.0).norm();
        assert!((value(&u) + 1.0 - oracle).norm() < 1e-12);
    }
}

#[test]
fn theta_commutes_with_its_argument() {
    let m = Algebra::matrix(4).unwrap();
    let dom = SqrtDomain::for_algebra(&m);
    let mut rng = stream_rng(15, 0);
    for _ in 0..100 {
        let a = random_hermitian(&m, &mut rng, 0, 0.45).unwrap();
        let th = theta(&m, &a, &dom).unwrap();
        let comm = m.sub(&m.mul(&a, &th).unwrap(), &m.mul(&th, &a).unwrap()).unwrap();
        assert!(m.top_seminorm(&comm).unwrap() <= 1e-11);
    }
}

#[test]
fn theta_lipschitz_probe() {
    let m = Algebra::matrix(4).unwrap();
    let dom = SqrtDomain::for_algebra(&m);
    let lip = 0.5 * 0.6f64.powf(-1.5);
    let mut rng = stream_rng(16, 0);
    for _ in 0..200 {
        let ra: f64 = rng.random_range(0.0..0.4);
        let a = random_hermitian(&m, &mut rng, 0, ra).unwrap();
        let rb: f64 = rng.random_range(0.0..0.4);
        let b = random_hermitian(&m, &mut rng, 0, rb).unwrap();
        let lhs = m.top_seminorm(&m.sub(&theta(&m, &a, &dom).unwrap(), &theta(&m, &b, &dom).unwrap()).unwrap()).unwrap();
        let rhs = lip * m.top_seminorm(&m.sub(&a, &b).unwrap()).unwrap();
        assert!(lhs <= rhs + 1e-14);
    }
}

#[test]
fn weighted_polar_endpoints() {
    let m = Algebra::matrix(3).unwrap();
    let dom = SqrtDomain::for_algebra(&m);
    let mut rng = stream_rng(17, 0);
    let a = random_element(&m, &mut rng, 0, 0.15).unwrap();
    assert_eq!(weighted_polar(&m, &a, 0.0, &dom).unwrap(), a);
    assert!(weighted_polar(&m, &a, 1.0, &dom).unwrap().bits_eq(&quasi_polar(&m, &a, &dom).unwrap()));
    assert!(weighted_polar(&m, &a, 1.5, &dom).is_err());
}
