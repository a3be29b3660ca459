use pbam_core::composition::{operation_difference_margins, product_shift_margin};
use pbam_core::random::{random_element, stream_rng};
use pbam_core::{Algebra, Element, Result, C64};
use rand::Rng;
use rayon::prelude::*;
use serde_json::json;

use super::Measure;
use crate::config::{Registry, ScenarioConfig};
use crate::output::{slug, Artifact};
use crate::{CheckOutcome, ConfigError};

const ASSOCIATIVITY_TOL: f64 = 1e-12;
const STAR_TOL: f64 = 1e-14;
const MARGIN_TOL: f64 = 1e-12;
/// Relative slack for the seminorm contracts.
const CONTRACT_SLACK: f64 = 1e-12;

struct Sample {
    x: [Element; 5],
    small: Element,
    lambda: C64,
    mu: C64,
}

pub fn verify_algebra(cfg: &ScenarioConfig, reg: &Registry, base: u64) -> std::result::Result<Vec<CheckOutcome>, ConfigError> {
    cfg.verify_algebra
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let alg = reg.algebra(&spec.algebra)?;
            let mut rng = stream_rng(cfg.seed, base + i as u64);
            let samples = (0..spec.samples)
                .map(|_| draw_sample(alg, &mut rng, spec.scale))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| ConfigError::Invalid(format!("samples: {e}")))?;
            let label = format!("verify-algebra:{}", spec.algebra);
            Ok(match measure_all(alg, &samples, spec.inverse_tolerance) {
                Ok(measures) => {
                    let passed = measures.iter().all(|m| m.passed);
                    CheckOutcome {
                        summary: json!({ "check": label, "algebra": spec.algebra, "passed": passed, "measures": measures }),
                        passed,
                        artifacts: vec![Artifact::csv(
                            format!("{}.csv", slug(&["verify-algebra", &format!("{i:02}"), &spec.algebra])),
                            &measures,
                            &["name", "samples", "worst", "tolerance", "passed"],
                        )],
                    }
                }
                Err(e) => CheckOutcome::errored(&label, e),
            })
        })
        .collect()
}

fn draw_sample<R: Rng>(alg: &Algebra, rng: &mut R, scale: f64) -> Result<Sample> {
    let mut x = Vec::with_capacity(5);
    for _ in 0..5 {
        x.push(random_element(alg, rng, 0, scale)?);
    }
    let small = random_element(alg, rng, 0, 0.5)?;
    let mut c = || C64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
    let (lambda, mu) = (c(), c());
    Ok(Sample { x: x.try_into().expect("five elements"), small, lambda, mu })
}

struct PerSample {
    assoc: f64,
    identity_ok: bool,
    inverse: f64,
    star: f64,
    contract_violations: usize,
    square_diff: Vec<f64>,
    op_diff: Vec<[f64; 4]>,
    product_shift: Vec<f64>,
}

fn one_sample(alg: &Algebra, s: &Sample) -> Result<PerSample> {
    let [a, b, c, d, e] = &s.x;
    let n0 = |x: &Element| alg.seminorm(0, x);
    let ab_c = alg.quasi_product(&alg.quasi_product(a, b)?, c)?;
    let a_bc = alg.quasi_product(a, &alg.quasi_product(b, c)?)?;
    let assoc = n0(&alg.sub(&ab_c, &a_bc)?)? / n0(&ab_c)?.max(1.0);
    let zero = alg.zero();
    let identity_ok = alg.quasi_product(a, &zero)?.bits_eq(a) && alg.quasi_product(&zero, a)?.bits_eq(a);
    let inv = alg.quasi_inverse(&s.small)?;
    let inverse = n0(&alg.quasi_product(&s.small, &inv)?)?.max(n0(&alg.quasi_product(&inv, &s.small)?)?);
    let ab = alg.quasi_product(a, b)?;
    let rev = alg.quasi_product(&alg.star(b)?, &alg.star(a)?)?;
    let star = n0(&alg.sub(&alg.star(&ab)?, &rev)?)? / n0(&ab)?.max(1.0);

    let na = alg.seminorms(a)?;
    let nb = alg.seminorms(b)?;
    let ns = alg.seminorms(&alg.star(a)?)?;
    let np = alg.seminorms(&alg.mul(a, b)?)?;
    let levels = alg.levels();
    let mut contract_violations = 0;
    for n in 0..levels - 1 {
        let ok = na[n] <= na[n + 1]
            && ns[n] <= na[n + 1] * (1.0 + CONTRACT_SLACK)
            && np[n] <= na[n + 1] * nb[n + 1] * (1.0 + CONTRACT_SLACK);
        contract_violations += usize::from(!ok);
    }
    // levels 0..=3 where the algebra exposes enough levels above them
    let top_inequality_level = levels.saturating_sub(2).min(4);
    let square_diff = (0..top_inequality_level).map(|n| alg.square_difference_margin(a, b, n)).collect::<Result<Vec<_>>>()?;
    let op_diff = (0..top_inequality_level)
        .map(|n| operation_difference_margins(alg, a, b, c, d, s.lambda, s.mu, n))
        .collect::<Result<Vec<_>>>()?;
    let product_shift = (0..top_inequality_level).map(|n| product_shift_margin(alg, a, b, e, n)).collect::<Result<Vec<_>>>()?;
    Ok(PerSample { assoc, identity_ok, inverse, star, contract_violations, square_diff, op_diff, product_shift })
}

fn measure_all(alg: &Algebra, samples: &[Sample], inverse_tol: f64) -> Result<Vec<Measure>> {
    let per = samples.par_iter().map(|s| one_sample(alg, s)).collect::<Result<Vec<_>>>()?;
    let col = |f: &dyn Fn(&PerSample) -> f64| per.iter().map(f).collect::<Vec<_>>();
    let mut out = vec![
        Measure::error("associativity", &col(&|p| p.assoc), ASSOCIATIVITY_TOL),
        Measure::count("identity", per.len(), per.iter().filter(|p| !p.identity_ok).count()),
        Measure::error("quasi_inverse", &col(&|p| p.inverse), inverse_tol),
        Measure::error("star_reverses_products", &col(&|p| p.star), STAR_TOL),
        Measure::count("seminorm_contracts", per.len(), per.iter().map(|p| p.contract_violations).sum()),
    ];
    let levels = per.first().map_or(0, |p| p.square_diff.len());
    for n in 0..levels {
        out.push(Measure::margin(format!("square_difference_level{n}"), &col(&|p| p.square_diff[n]), MARGIN_TOL));
    }
    for (k, name) in ["star", "scalar", "add", "mul"].iter().enumerate() {
        for n in 0..per.first().map_or(0, |p| p.op_diff.len()) {
            out.push(Measure::margin(format!("difference_{name}_level{n}"), &col(&|p| p.op_diff[n][k]), MARGIN_TOL));
        }
    }
    for n in 0..per.first().map_or(0, |p| p.product_shift.len()) {
        out.push(Measure::margin(format!("product_shift_level{n}"), &col(&|p| p.product_shift[n]), MARGIN_TOL));
    }
    Ok(out)
}
