use pbam_core::asymptotic::{Family, PbamConfig, SamplingGrid};
use pbam_core::composition::{certify, search_reparam, validity_evidence, C1Config, SearchConfig};
use pbam_core::{Element, Result};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{build_elements, complex, ComposeSpec, Registry, ScenarioConfig};
use crate::output::{slug, Artifact};
use crate::{CheckOutcome, ConfigError};

pub fn compose(cfg: &ScenarioConfig, reg: &Registry, base: u64) -> std::result::Result<Vec<CheckOutcome>, ConfigError> {
    let t_values = cfg.grid.t_values()?;
    let s_values = cfg.grid.s_values()?;
    cfg.compose
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let f = reg.family(&spec.f)?;
            let g = reg.family(&spec.g)?;
            if f.codomain().id() != g.domain().id() {
                return Err(ConfigError::Invalid(format!(
                    "cannot compose `{}` after `{}`: `{}` vs `{}`",
                    spec.g,
                    spec.f,
                    g.domain().id(),
                    f.codomain().id()
                )));
            }
            let elements = build_elements(f.domain(), &spec.elements, cfg.seed, base + 2 * i as u64)?;
            let search = SearchConfig {
                t_values: t_values.clone(),
                s_values: s_values.clone(),
                tol: spec.tol,
                lambda: complex(spec.lambda),
                levels: spec.levels.clone(),
            };
            let shift = spec.shift.unwrap_or(cfg.grid.s_step());
            let label = format!("compose:{}:{}", spec.f, spec.g);
            let stem = slug(&["compose", &format!("{i:02}"), &spec.f, &spec.g]);
            let c1 = C1Config { seed: cfg.seed, ..C1Config::default() };
            Ok(match run_one(f, g, spec, &elements, &search, &c1, shift, base + 2 * i as u64 + 1, &stem) {
                Ok((mut summary, passed, artifacts)) => {
                    summary["check"] = json!(label);
                    CheckOutcome { summary, passed, artifacts }
                }
                Err(e) => CheckOutcome::errored(&label, e),
            })
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn run_one(
    f: &Family,
    g: &Family,
    spec: &ComposeSpec,
    elements: &[Element],
    search: &SearchConfig,
    c1: &C1Config,
    shift: f64,
    stream: u64,
    stem: &str,
) -> Result<(Value, bool, Vec<Artifact>)> {
    let certificates = elements
        .par_iter()
        .enumerate()
        .map(|(k, a)| {
            certify(&**f, &**g, a, &format!("a{k}"), &spec.nus, &spec.levels, &search.t_values, &search.s_values, c1, stream)
        })
        .collect::<Result<Vec<_>>>()?;
    let complete = certificates.iter().all(|c| c.complete());
    let outcome = match search_reparam(&**f, &**g, elements, &certificates, search) {
        Ok(o) => o,
        Err(e) => {
            let summary = json!({
                "f": spec.f,
                "g": spec.g,
                "passed": false,
                "search_error": e.to_string(),
                "certificates": certificates,
            });
            return Ok((summary, false, Vec::new()));
        }
    };
    let grid = SamplingGrid::new(search.t_values.clone(), elements.to_vec(), spec.levels.clone())?;
    let pbam = PbamConfig { tolerance: spec.pbam_tolerance, lambda: search.lambda, ..PbamConfig::default() };
    let evidence = validity_evidence(f, g, &outcome.phi, &grid, &pbam, shift, spec.nodes)?;
    let monotone = outcome.constraints.windows(2).all(|w| outcome.phi.eval(w[0].0) <= outcome.phi.eval(w[1].0));
    let passed = evidence.passed && monotone && (complete || !spec.require_certificates);
    let phi = outcome.phi.to_json();
    let summary = json!({
        "f": spec.f,
        "g": spec.g,
        "passed": passed,
        "phi": phi,
        "constraints": outcome.constraints,
        "monotone": monotone,
        "certificates_complete": complete,
        "certificates": certificates,
        "validity": evidence,
    });
    Ok((summary, passed, vec![Artifact::json(format!("{stem}-phi.json"), &phi)]))
}
