use pbam_core::asymptotic::{AsymptoticFamily, LinearBlend};
use pbam_core::unitary::{
    alpha_homotopy_sweep, build_alpha, pba_homotopy_check, retract_representative, PbaConfig, QuasiUnitaryNet,
};
use pbam_core::{Result, SqrtDomain};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::Measure;
use crate::config::{build_net, Registry, RetractSpec, ScenarioConfig};
use crate::output::{slug, Artifact};
use crate::{CheckOutcome, ConfigError};

#[derive(Serialize)]
struct RepresentativeRow {
    v_id: String,
    alpha: f64,
    defect: f64,
}

pub fn retract(cfg: &ScenarioConfig, reg: &Registry, base: u64) -> std::result::Result<Vec<CheckOutcome>, ConfigError> {
    let t_values = cfg.grid.t_values()?;
    let p_values = cfg.grid.p_values()?;
    cfg.retract
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let f = reg.family(&spec.family)?;
            let net = build_net(f.domain(), &spec.net, cfg.seed, base + i as u64)?;
            let blend = match &spec.blend {
                Some(b) => Some(
                    LinearBlend::new(reg.family(&b.f)?.clone(), reg.family(&b.g)?.clone(), b.nodes)
                        .map_err(|e| ConfigError::Invalid(format!("blend: {e}")))?,
                ),
                None => None,
            };
            let label = format!("retract:{}", spec.family);
            let stem = slug(&["retract", &format!("{i:02}"), &spec.family]);
            let pba = PbaConfig {
                t_values: t_values.clone(),
                p_values: p_values.clone(),
                margin: spec.margin,
                radius: spec.radius,
                tolerance: spec.homotopy_tolerance,
            };
            Ok(match run_one(&**f, &net, spec, &pba, blend.as_ref(), &stem) {
                Ok((mut summary, passed, artifacts)) => {
                    summary["check"] = json!(label);
                    CheckOutcome { summary, passed, artifacts }
                }
                Err(e) => CheckOutcome::errored(&label, e),
            })
        })
        .collect()
}

fn run_one(
    f: &dyn AsymptoticFamily,
    net: &QuasiUnitaryNet,
    spec: &RetractSpec,
    pba: &PbaConfig,
    blend: Option<&LinearBlend>,
    stem: &str,
) -> Result<(Value, bool, Vec<Artifact>)> {
    let dom = SqrtDomain::for_algebra(f.codomain());
    let alpha = build_alpha(f, net, &dom, &pba.t_values, spec.margin, spec.radius)?;
    let reps = net
        .points()
        .par_iter()
        .map(|v| {
            let r = retract_representative(f, &alpha, v, &dom)?;
            Ok(f.codomain().is_quasi_unitary(&r, f64::INFINITY)?.defect)
        })
        .collect::<Result<Vec<f64>>>()?;
    let rep_rows: Vec<RepresentativeRow> = net
        .ids()
        .iter()
        .zip(&reps)
        .enumerate()
        .map(|(k, (id, d))| RepresentativeRow { v_id: id.clone(), alpha: alpha.at(k), defect: *d })
        .collect();
    let alpha_values: Vec<f64> = (0..net.len()).map(|k| alpha.at(k)).collect();
    let gamma: Vec<f64> = alpha_values.iter().map(|a| a + spec.gamma_shift).collect();
    let sweep = alpha_homotopy_sweep(f, net, &alpha_values, &gamma, &pba.p_values, &dom)?;
    let representatives = Measure::error("representative_defect", &reps, spec.representative_tolerance);
    let homotopy = Measure::error(
        "alpha_homotopy_defect",
        &sweep.rows.iter().map(|r| r.defect).collect::<Vec<_>>(),
        spec.homotopy_tolerance,
    );
    let pba_report = blend.map(|h| pba_homotopy_check(h, net, &dom, pba)).transpose()?;
    let passed = representatives.passed
        && homotopy.passed
        && sweep.breaks.is_empty()
        && pba_report.as_ref().is_none_or(|r| r.passed);
    let pba_summary = pba_report.as_ref().map(|r| {
        json!({
            "passed": r.passed,
            "eta": r.eta,
            "f_max_defect": r.f_sweep.max_defect,
            "g_max_defect": r.g_sweep.max_defect,
            "h_max_defect": r.h_sweep.max_defect,
            "breaks": r.f_sweep.breaks.len() + r.g_sweep.breaks.len() + r.h_sweep.breaks.len(),
            "endpoint_gap": r.endpoint_gap,
        })
    });
    let summary = json!({
        "family": spec.family,
        "family_id": f.id(),
        "passed": passed,
        "alpha": alpha.to_json(),
        "measures": [representatives, homotopy],
        "sweep_breaks": sweep.breaks,
        "pba_homotopy": pba_summary,
    });
    let mut artifacts = vec![
        Artifact::csv(format!("{stem}-representatives.csv"), &rep_rows, &["v_id", "alpha", "defect"]),
        Artifact::csv(format!("{stem}-alpha-homotopy.csv"), &sweep.rows, &["v_id", "p", "defect"]),
    ];
    if let Some(r) = &pba_report {
        artifacts.push(Artifact::json(format!("{stem}-pba.json"), &serde_json::to_value(r).expect("serializable")));
    }
    Ok((summary, passed, artifacts))
}
