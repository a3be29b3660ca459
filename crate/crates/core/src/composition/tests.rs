use super::*;
use crate::asymptotic::{compression_family, defect_mul, exact_hom, perturbed_hom, uniform_times};
use crate::random::{random_element, random_quasi_unitary, stream_rng, supported_quasi_unitary};

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

#[derive(Debug)]
struct Doubling(Algebra);

impl AsymptoticFamily for Doubling {
    fn id(&self) -> &str {
        "doubling"
    }
    fn domain(&self) -> &Algebra {
        &self.0
    }
    fn codomain(&self) -> &Algebra {
        &self.0
    }
    fn eval(&self, a: &Element, _t: f64) -> Result<Element> {
        self.0.scale(c(2.0), a)
    }
}

fn samples(alg: &Algebra, count: usize, seed: u64) -> Vec<Element> {
    let mut rng = stream_rng(seed, 0);
    (0..count).map(|_| random_element(alg, &mut rng, 0, 1.0).unwrap()).collect()
}

fn search_config(t_values: Vec<f64>, s_values: Vec<f64>, tol: f64) -> SearchConfig {
    SearchConfig {
        t_values,
        s_values,
        tol: TolSchedule::Constant { tol },
        lambda: C64::new(0.6, -0.8),
        levels: vec![0],
    }
}

fn c3_only(f: &dyn AsymptoticFamily, g: &dyn AsymptoticFamily, elements: &[Element], cfg: &SearchConfig) -> Vec<C1C3Certificate> {
    elements
        .iter()
        .enumerate()
        .map(|(i, a)| C1C3Certificate {
            element_id: format!("a{i}"),
            c1: Vec::new(),
            c3: vec![check_c3(f, g, a, 0, &cfg.t_values, &cfg.s_values).unwrap()],
        })
        .collect()
}

#[test]
fn piecewise_linear_evaluation() {
    let p = PiecewiseLinear::new(vec![(1.0, 2.0), (3.0, 6.0)], 0.5).unwrap();
    assert_eq!(p.eval(0.0), 2.0);
    assert_eq!(p.eval(1.0), 2.0);
    assert_eq!(p.eval(2.0), 4.0);
    assert_eq!(p.eval(3.0), 6.0);
    assert_eq!(p.eval(5.0), 7.0);
    assert!(PiecewiseLinear::new(vec![], 0.0).is_err());
    assert!(PiecewiseLinear::new(vec![(1.0, 1.0), (1.0, 2.0)], 0.0).is_err());
    assert!(PiecewiseLinear::new(vec![(0.0, 1.0), (1.0, 0.5)], 0.0).is_err());
    assert!(PiecewiseLinear::new(vec![(0.0, 1.0)], -1.0).is_err());
}

#[test]
fn join_dots_takes_running_maximum() {
    let phi = Reparameterization::join_dots(&[(0.0, 3.0), (1.0, 1.0), (2.0, 5.0), (4.0, 6.0)]).unwrap();
    assert_eq!(phi.eval(1.0), 3.0);
    assert_eq!(phi.eval(1.5), 4.0);
    assert_eq!(phi.eval(4.0), 6.0);
    // tail continues the last segment, slope 1/2
    assert_eq!(phi.eval(6.0), 7.0);
    let single = Reparameterization::join_dots(&[(2.0, 4.0)]).unwrap();
    assert_eq!(single.eval(100.0), 4.0);
    assert_eq!(single.to_json(), json!({"dots": [[2.0, 4.0]], "tail_slope": 0.0}));
}

#[test]
fn covering_dots_meet_each_requirement_one_cell_early() {
    let cs = [(0.0, 0.0), (1.0, 2.0), (2.0, 2.0), (3.0, 5.0)];
    let th = Reparameterization::covering_dots(&cs).unwrap();
    assert_eq!(th.eval(0.0), 2.0);
    assert_eq!(th.eval(2.0), 5.0);
    assert_eq!(th.eval(3.0), 5.0);
    for w in cs.windows(2) {
        for k in 0..=8 {
            let t = w[0].0 + (w[1].0 - w[0].0) * k as f64 / 8.0;
            assert!(th.eval(t) >= w[1].1);
        }
    }
}

#[test]
fn shift_and_maximum() {
    let phi = Reparameterization::join_dots(&[(0.0, 1.0), (2.0, 1.5)]).unwrap();
    let up = phi.shifted(0.25).unwrap();
    assert_eq!(up.eval(2.0), 1.75);
    let id = Reparameterization::identity();
    assert_eq!(id.eval(3.5), 3.5);
    let psi = Reparameterization::pointwise_max(&[&id, &phi]).unwrap();
    assert_eq!(psi.eval(0.5), 1.125);
    assert_eq!(psi.eval(3.0), 3.0);
    assert!(psi.to_json().get("max_of").is_some());
}

#[test]
fn composition_requires_matching_algebras() {
    let a = Algebra::matrix(2).unwrap();
    let b = Algebra::matrix(3).unwrap();
    let err = compose_with(exact_hom(&a), exact_hom(&b), Reparameterization::identity()).unwrap_err();
    assert!(matches!(err, Error::FamilyMismatch { .. }));
}

#[test]
fn composite_with_exact_inner_inherits_outer_defects() {
    let alg = Algebra::matrix(3).unwrap();
    let g = perturbed_hom(&alg, 1.0).unwrap();
    let h = compose_with(exact_hom(&alg), g.clone(), Reparameterization::identity()).unwrap();
    let xs = samples(&alg, 2, 3);
    for t in [0.0, 1.0, 2.5] {
        assert_eq!(defect_mul(&h, &xs[0], &xs[1], t, 0).unwrap(), defect_mul(&*g, &xs[0], &xs[1], t, 0).unwrap());
    }
    // g_s(b) = b + e^{-s} b^2 read at s = φ(t) = 2t
    let phi = Reparameterization::from_dots(vec![(0.0, 0.0), (1.0, 2.0)], 2.0).unwrap();
    let h = compose_with(exact_hom(&alg), g, phi).unwrap();
    let a = &xs[0];
    let m = a.as_matrix().unwrap();
    let want = m + m * m * c((-3.0f64).exp());
    let got = h.eval(a, 1.5).unwrap();
    assert!((got.as_matrix().unwrap() - want).norm() < 1e-14);
}

#[test]
fn reparam_blend_endpoints_are_bit_identical() {
    let alg = Algebra::matrix(3).unwrap();
    let f = perturbed_hom(&alg, 0.7).unwrap();
    let g = perturbed_hom(&alg, 1.3).unwrap();
    let phi = Reparameterization::join_dots(&[(0.0, 0.3), (1.0, 1.7), (3.0, 2.2)]).unwrap();
    let theta = phi.shifted(1.0 / 3.0).unwrap();
    let blend = ReparamBlend::new(f.clone(), g.clone(), phi.clone(), theta.clone(), 7).unwrap();
    let path = blend.codomain().clone();
    for a in samples(&alg, 3, 4) {
        for t in [0.0, 0.4, 2.9, 11.0] {
            let h = blend.eval(&a, t).unwrap();
            assert!(path.path_node(&h, 0).unwrap().bits_eq(&blend.start().eval(&a, t).unwrap()));
            assert!(path.path_node(&h, 6).unwrap().bits_eq(&blend.end().eval(&a, t).unwrap()));
        }
    }
}

#[test]
fn c1_and_c3_for_exact_homs_hold_immediately() {
    let alg = Algebra::matrix(3).unwrap();
    let f = exact_hom(&alg);
    let a = &samples(&alg, 1, 5)[0];
    let ts = uniform_times(1.0, 4.0).unwrap();
    let e = check_c1(&*f, &*f, a, 0.1, &ts, &ts, &C1Config::default(), 0).unwrap();
    assert_eq!(e.q_prime, Some(0.0));
    // probes sit within 0.9 ξ / 2 of f_t(a), and d is 1-Lipschitz through the identity
    assert_eq!(e.xi, Some(0.1));
    let c3 = check_c3(&*f, &*f, a, 0, &ts, &ts).unwrap();
    assert_eq!(c3.m_n, alg.seminorm(0, a).unwrap());
    assert_eq!(c3.q_n, Some(0.0));
    assert!(c3.s_n.iter().all(|(_, s)| *s == Some(0.0)));
}

#[test]
fn c3_bound_settles_after_compression_saturates() {
    let alg = Algebra::matrix(6).unwrap();
    let f = compression_family(&alg, 1.0).unwrap();
    let a = &samples(&alg, 1, 6)[0];
    let ts = uniform_times(1.0, 12.0).unwrap();
    let c3 = check_c3(&*f, &*f, a, 0, &ts, &ts).unwrap();
    assert!((c3.m_n - alg.seminorm(0, a).unwrap()).abs() < 1e-12);
    assert!(c3.q_n.is_some());
    let cert = certify(&*f, &*f, a, "a0", &[0.05], &[0], &ts, &ts, &C1Config::default(), 1).unwrap();
    assert!(cert.complete());
}

#[test]
fn search_on_exact_homs_is_constant() {
    let alg = Algebra::matrix(3).unwrap();
    let f = exact_hom(&alg);
    let xs = samples(&alg, 3, 7);
    let cfg = search_config(uniform_times(1.0, 5.0).unwrap(), uniform_times(1.0, 5.0).unwrap(), 1e-12);
    let out = search_reparam(&*f, &*f, &xs, &c3_only(&*f, &*f, &xs, &cfg), &cfg).unwrap();
    assert!(out.constraints.iter().all(|(_, s)| *s == 0.0));
    assert_eq!(out.phi.eval(17.0), 0.0);
}

#[test]
fn search_on_compressions_waits_for_saturation_and_is_valid() {
    let alg = Algebra::matrix(6).unwrap();
    let f = compression_family(&alg, 1.0).unwrap();
    let g = compression_family(&alg, 1.0).unwrap();
    let xs = samples(&alg, 3, 8);
    let cfg = search_config(uniform_times(1.0, 10.0).unwrap(), uniform_times(1.0, 12.0).unwrap(), 1e-10);
    let out = search_reparam(&*f, &*g, &xs, &c3_only(&*f, &*g, &xs, &cfg), &cfg).unwrap();
    // the outer compression is exact from s = dim on
    let sat = 6.0;
    for &(t, s) in &out.constraints {
        assert!(s <= sat, "s({t}) = {s}");
        assert!(out.phi.eval(t) >= s);
    }
    let grid = SamplingGrid::new(uniform_times(1.0, 10.0).unwrap(), xs, vec![0]).unwrap();
    let ev = validity_evidence(&f, &g, &out.phi, &grid, &PbamConfig::default(), 1.0, 5).unwrap();
    assert!(ev.blend_endpoints_exact);
    assert!(ev.passed, "{ev:?}");
}

#[test]
fn search_reports_the_failing_condition() {
    let alg = Algebra::matrix(2).unwrap();
    let f = exact_hom(&alg);
    let g = Doubling(alg.clone());
    let xs = samples(&alg, 2, 9);
    let cfg = search_config(uniform_times(1.0, 3.0).unwrap(), uniform_times(1.0, 3.0).unwrap(), 1e-6);
    let certs = c3_only(&*f, &g, &xs, &cfg);
    match search_reparam(&*f, &g, &xs, &certs, &cfg).unwrap_err() {
        Error::SearchFailed { t, witness } => {
            assert_eq!(t, 0.0);
            assert!(witness.contains("scalar") || witness.contains("add") || witness.contains("mul"), "{witness}");
        }
        e => panic!("unexpected {e}"),
    }
    assert!(search_reparam(&*f, &g, &xs, &certs[..1], &cfg).is_err());
}

#[test]
fn retraction_maps_reduce_to_polar_retractions() {
    let alg = Algebra::matrix(3).unwrap();
    let dom = SqrtDomain::for_algebra(&alg);
    let f = exact_hom(&alg);
    let mut rng = stream_rng(10, 0);
    let u = random_quasi_unitary(&alg, &mut rng, 0.05).unwrap();
    assert!(hat_f(&*f, &u, 0.0, 0.0, &dom).unwrap().bits_eq(&u));
    let r = r_map(&*f, &*f, &u, 0.0, 0.0, 1.0, &dom, &dom).unwrap();
    let twice = weighted_polar(&alg, &weighted_polar(&alg, &u, 1.0, &dom).unwrap(), 1.0, &dom).unwrap();
    assert!(r.bits_eq(&twice));
    let far = alg.scalar(c(3.0));
    let err = r_map(&*f, &*f, &far, 0.0, 0.0, 1.0, &dom, &dom).unwrap_err();
    assert!(err.to_string().contains("a* • a"), "{err}");
}

fn supported_net(alg: &Algebra, count: usize, seed: u64) -> QuasiUnitaryNet {
    let mut rng = stream_rng(seed, 0);
    let pts = (0..count).map(|_| supported_quasi_unitary(alg, &mut rng, 3).unwrap()).collect();
    QuasiUnitaryNet::new(alg, pts, 1e-10).unwrap()
}

fn functoriality_config(step: f64, horizon: f64) -> FunctorialityConfig {
    let ts = uniform_times(step, horizon).unwrap();
    FunctorialityConfig {
        search: search_config(ts.clone(), ts, 1e-10),
        p_values: (0..=10).map(|k| k as f64 / 10.0).collect(),
        margin: 0.5,
        radius: 1.0,
        scan_shrink: 0.9,
        net_tolerance: 1e-8,
        tolerance: 1e-8,
        endpoint_tolerance: 1e-8,
    }
}

#[test]
fn retraction_scan_on_exact_homs_is_immediate() {
    let alg = Algebra::matrix(3).unwrap();
    let dom = SqrtDomain::for_algebra(&alg);
    let f = exact_hom(&alg);
    let net = supported_net(&alg, 3, 11);
    let ts = uniform_times(1.0, 3.0).unwrap();
    let scan = retraction_scan(&*f, &*f, &net, &ts, &ts, &[0.0, 0.5, 1.0], &dom, &dom).unwrap();
    assert_eq!(scan.gamma, vec![0.0; 3]);
    assert_eq!(scan.theta.eval(9.0), 0.0);
}

#[test]
fn functoriality_chain_for_exact_homs() {
    let alg = Algebra::matrix(3).unwrap();
    let dom = SqrtDomain::for_algebra(&alg);
    let f = exact_hom(&alg);
    let net = supported_net(&alg, 4, 12);
    let r = functoriality_check(&f, &f, &net, &dom, &dom, &functoriality_config(1.0, 4.0)).unwrap();
    assert!(r.passed, "{:?}", r.witnesses);
    assert_eq!(r.rows.len(), 4 * 3 * 11);
    for p in &r.points {
        assert!(p.junction_h_h1 && p.junction_h1_h2);
        assert_eq!(p.omega, 0.5);
        assert!(p.start_gap <= 1e-15 && p.end_gap <= 1e-15);
    }
}

#[test]
fn functoriality_chain_for_compressions() {
    let alg = Algebra::matrix(6).unwrap();
    let dom = SqrtDomain::for_algebra(&alg);
    let f = compression_family(&alg, 1.0).unwrap();
    let g = compression_family(&alg, 0.5).unwrap();
    let net = supported_net(&alg, 5, 13);
    let r = functoriality_check(&f, &g, &net, &dom, &dom, &functoriality_config(0.25, 14.0)).unwrap();
    assert!(r.passed, "{:?} {:?}", r.witnesses, r.stages);
    assert!(r.points.iter().all(|p| p.psi_omega >= p.omega));
}

#[test]
fn functoriality_chain_for_perturbed_after_compression() {
    let alg = Algebra::matrix(4).unwrap();
    let dom = SqrtDomain::for_algebra(&alg);
    let f = compression_family(&alg, 1.0).unwrap();
    let g = perturbed_hom(&alg, 1.0).unwrap();
    let net = supported_net(&alg, 4, 14);
    let mut cfg = functoriality_config(0.25, 16.0);
    cfg.search.tol = TolSchedule::Constant { tol: 1e-3 };
    let r = functoriality_check(&f, &g, &net, &dom, &dom, &cfg).unwrap();
    assert!(r.passed, "{:?} {:?}", r.witnesses, r.points);
}

#[test]
fn operation_difference_margins_are_non_negative() {
    for alg in [Algebra::matrix(3).unwrap(), Algebra::smooth_circle(16, 4).unwrap()] {
        let xs = samples(&alg, 4, 15);
        let m = operation_difference_margins(&alg, &xs[0], &xs[1], &xs[2], &xs[3], C64::new(0.3, 1.1), C64::new(-0.2, 0.9), 1).unwrap();
        assert!(m.iter().all(|v| *v >= -1e-12), "{m:?}");
    }
    let alg = Algebra::matrix(2).unwrap();
    let xs = samples(&alg, 4, 16);
    assert!(operation_difference_margins(&alg, &xs[0], &xs[1], &xs[2], &xs[3], c(1.0), c(1.0), 100).is_err());
}

#[test]
fn operation_difference_and_product_shift_samples_on_families() {
    let alg = Algebra::matrix(3).unwrap();
    let dom = SqrtDomain::for_algebra(&alg);
    let f = perturbed_hom(&alg, 1.0).unwrap();
    let g = compression_family(&alg, 1.0).unwrap();
    let xs = samples(&alg, 4, 17);
    let m = operation_difference_sample(&*f, &*g, &xs[0], &xs[1], &xs[2], &xs[3], 2.0, 1.0, c(0.5), c(0.4), 0).unwrap();
    assert!(m.iter().all(|v| *v >= -1e-12), "{m:?}");
    let mut rng = stream_rng(18, 0);
    let y = random_quasi_unitary(&alg, &mut rng, 0.05).unwrap();
    for p in [0.0, 0.5, 1.0] {
        let v = product_shift_sample(&*f, &xs[0], &y, 1.0, 3.0, p, &dom, 0).unwrap();
        assert!(v >= -1e-12, "{v}");
    }
}


#[test]
fn scalar_chain_matches_closed_form() {
    let alg = Algebra::matrix(1).unwrap();
    let dom = SqrtDomain::for_algebra(&alg);
    let f = perturbed_hom(&alg, 1.0).unwrap();
    let u = alg.scalar(c(-2.0));
    let (t, s, p): (f64, f64, f64) = (3.0, 4.0, 0.5);
    // x = f_t(-2) = -2 + 4e^{-t}; x* • x = (1+x)^2 - 1; x • ϑ(w) = (1+x)(1+w)^{-1/2} - 1
    let x = -2.0 + 4.0 * (-t).exp();
    let hat = (1.0 + x) * (1.0 + p * ((1.0 + x).powi(2) - 1.0)).powf(-0.5) - 1.0;
    let got = hat_f(&*f, &u, t, p, &dom).unwrap();
    assert!((got.as_matrix().unwrap()[(0, 0)] - c(hat)).norm() < 1e-14);
    let z = hat + (-s).exp() * hat * hat;
    let want = (1.0 + z) / (1.0 + z).abs() - 1.0;
    let r = r_map(&*f, &*f, &u, s, t, p, &dom, &dom).unwrap();
    assert!((r.as_matrix().unwrap()[(0, 0)] - c(want)).norm() < 1e-14);
}
