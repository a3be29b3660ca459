use pbam_core::funcalc::{quasi_polar, theta, theta_taylor, verify_inverse_sqrt};
use pbam_core::random::stream_rng;
use pbam_core::{Algebra, Element, Result, SqrtDomain, C64};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::Measure;
use crate::config::{hermitian_samples, FuncalcSpec, Registry, ScenarioConfig};
use crate::output::{slug, Artifact};
use crate::{CheckOutcome, ConfigError};

const SCALAR_TOL: f64 = 1e-12;
/// Rounding allowance on top of the Taylor remainder bound.
const ROUNDOFF: f64 = 1e-13;

#[derive(Serialize)]
struct Row {
    sample: usize,
    norm: f64,
    inverse_sqrt_defect: f64,
    taylor_gap: Option<f64>,
    taylor_bound: Option<f64>,
    polar_defect: f64,
}

pub fn funcalc(cfg: &ScenarioConfig, reg: &Registry, base: u64) -> std::result::Result<Vec<CheckOutcome>, ConfigError> {
    cfg.funcalc
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let alg = reg.algebra(&spec.algebra)?;
            let dom = SqrtDomain::for_algebra(alg);
            if !(spec.max_norm > 0.0 && spec.max_norm < dom.radius) {
                return Err(ConfigError::Invalid(format!("max_norm {} must lie in (0, {})", spec.max_norm, dom.radius)));
            }
            let stream = base + 2 * i as u64;
            let samples = hermitian_samples(alg, spec.samples, spec.max_norm, cfg.seed, stream)?;
            let label = format!("funcalc:{}", spec.algebra);
            let scalars = scalar_samples(spec.scalar_samples, cfg.seed, stream + 1);
            Ok(match run_one(alg, &dom, spec, &samples, &scalars) {
                Ok((measures, rows, skipped)) => {
                    let passed = measures.iter().all(|m| m.passed);
                    CheckOutcome {
                        summary: json!({
                            "check": label,
                            "algebra": spec.algebra,
                            "passed": passed,
                            "measures": measures,
                            "taylor_skipped": skipped,
                        }),
                        passed,
                        artifacts: vec![Artifact::csv(
                            format!("{}.csv", slug(&["funcalc", &format!("{i:02}"), &spec.algebra])),
                            &rows,
                            &["sample", "norm", "inverse_sqrt_defect", "taylor_gap", "taylor_bound", "polar_defect"],
                        )],
                    }
                }
                Err(e) => CheckOutcome::errored(&label, e),
            })
        })
        .collect()
}

/// `z` with `|1 + z|^2` in `(0.55, 1.45)`, so that `z* • z` lies in `V`.
fn scalar_samples(count: usize, seed: u64, stream: u64) -> Vec<C64> {
    let mut rng = stream_rng(seed, stream);
    (0..count)
        .map(|_| {
            let r = rng.random_range(0.55f64..1.45).sqrt();
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            C64::from_polar(r, phase) - 1.0
        })
        .collect()
}

fn run_one(
    alg: &Algebra,
    dom: &SqrtDomain,
    spec: &FuncalcSpec,
    samples: &[Element],
    scalars: &[C64],
) -> Result<(Vec<Measure>, Vec<Row>, usize)> {
    let rows = samples
        .par_iter()
        .enumerate()
        .map(|(k, h)| {
            let report = verify_inverse_sqrt(alg, h, dom, spec.tolerance)?;
            let th = theta(alg, h, dom)?;
            let (taylor_gap, taylor_bound) = if alg.top_seminorm(h)? < 1.0 {
                let t = theta_taylor(alg, h, spec.taylor_terms)?;
                (Some(alg.top_seminorm(&alg.sub(&th, &t.value)?)?), Some(t.remainder_bound))
            } else {
                (None, None)
            };
            // i h + h/4 is not quasi-unitary, and its a* • a = h/2 + (17/16) h^2 stays in V
            let b = alg.scale(C64::new(0.25, 1.0), h)?;
            let u = quasi_polar(alg, &b, dom)?;
            Ok(Row {
                sample: k,
                norm: alg.seminorm(0, h)?,
                inverse_sqrt_defect: if report.all_passed() { report.max_defect() } else { f64::INFINITY },
                taylor_gap,
                taylor_bound,
                polar_defect: alg.is_quasi_unitary(&u, f64::INFINITY)?.defect,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let gaps: Vec<f64> = rows.iter().filter_map(|r| r.taylor_gap).collect();
    // positive when the gap exceeds the remainder bound plus rounding
    let excess: Vec<f64> = rows.iter().filter_map(|r| Some(r.taylor_gap? - r.taylor_bound? - ROUNDOFF)).collect();
    let scalar = matrix1_oracle(scalars)?;
    let measures = vec![
        Measure::error("inverse_sqrt", &rows.iter().map(|r| r.inverse_sqrt_defect).collect::<Vec<_>>(), spec.tolerance),
        Measure::error("theta_vs_taylor", &gaps, spec.tolerance),
        Measure::error("taylor_gap_over_bound", &excess, 0.0),
        Measure::error("quasi_polar_defect", &rows.iter().map(|r| r.polar_defect).collect::<Vec<_>>(), spec.polar_tolerance),
        Measure::error("scalar_polar_oracle", &scalar, SCALAR_TOL),
    ];
    let skipped = rows.len() - gaps.len();
    Ok((measures, rows, skipped))
}

/// `|1 + quasi_polar(z) - (1 + z)/|1 + z||` in the 1×1 algebra.
fn matrix1_oracle(scalars: &[C64]) -> Result<Vec<f64>> {
    let alg = Algebra::matrix(1)?;
    let dom = SqrtDomain::for_algebra(&alg);
    scalars
        .iter()
        .map(|&z| {
            let u = quasi_polar(&alg, &alg.scalar(z), &dom)?;
            let got = u.as_matrix().expect("matrix algebra")[(0, 0)];
            Ok((1.0 + got - (1.0 + z) / (1.0 + z).norm()).norm())
        })
        .collect()
}
