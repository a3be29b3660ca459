use pbam_core::composition::{functoriality_check, FunctorialityConfig, SearchConfig};
use pbam_core::SqrtDomain;
use serde_json::json;

use crate::config::{build_net, complex, Registry, ScenarioConfig};
use crate::output::{slug, Artifact};
use crate::{CheckOutcome, ConfigError};

pub fn functoriality(cfg: &ScenarioConfig, reg: &Registry, base: u64) -> Result<Vec<CheckOutcome>, ConfigError> {
    let t_values = cfg.grid.t_values()?;
    let s_values = cfg.grid.s_values()?;
    let p_values = cfg.grid.p_values()?;
    cfg.functoriality
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let f = reg.family(&spec.f)?;
            let g = reg.family(&spec.g)?;
            let net = build_net(f.domain(), &spec.net, cfg.seed, base + i as u64)?;
            let domain_b = SqrtDomain::for_algebra(f.codomain());
            let domain_c = SqrtDomain::for_algebra(g.codomain());
            let config = FunctorialityConfig {
                search: SearchConfig {
                    t_values: t_values.clone(),
                    s_values: s_values.clone(),
                    tol: spec.tol,
                    lambda: complex(spec.lambda),
                    levels: spec.levels.clone(),
                },
                p_values: p_values.clone(),
                margin: spec.margin,
                radius: spec.radius,
                scan_shrink: spec.scan_shrink,
                net_tolerance: 1e-8,
                tolerance: spec.tolerance,
                endpoint_tolerance: spec.endpoint_tolerance,
            };
            let label = format!("functoriality:{}:{}", spec.f, spec.g);
            let stem = slug(&["functoriality", &format!("{i:02}"), &spec.f, &spec.g]);
            Ok(match functoriality_check(f, g, &net, &domain_b, &domain_c, &config) {
                Ok(report) => {
                    let max_start_gap = report.points.iter().map(|p| p.start_gap).fold(0.0, f64::max);
                    let max_end_gap = report.points.iter().map(|p| p.end_gap).fold(0.0, f64::max);
                    let junctions_exact = report.points.iter().all(|p| p.junction_h_h1 && p.junction_h1_h2);
                    let summary = json!({
                        "check": label,
                        "f": spec.f,
                        "g": spec.g,
                        "passed": report.passed,
                        "stages": report.stages,
                        "junctions_exact": junctions_exact,
                        "max_start_gap": max_start_gap,
                        "max_end_gap": max_end_gap,
                        "witnesses": report.witnesses,
                    });
                    let artifacts = vec![
                        Artifact::json(format!("{stem}.json"), &serde_json::to_value(&report).expect("serializable")),
                        Artifact::csv(format!("{stem}.csv"), &report.rows, &["u_id", "stage", "p", "defect"]),
                    ];
                    CheckOutcome { summary, passed: report.passed, artifacts }
                }
                Err(e) => CheckOutcome::errored(&label, e),
            })
        })
        .collect()
}
