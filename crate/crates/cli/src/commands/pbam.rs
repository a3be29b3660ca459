use pbam_core::asymptotic::{pbam_check, DefectReport, ModulusConfig, PbamConfig, SamplingGrid};
use serde::Serialize;
use serde_json::json;

use crate::config::{build_elements, complex, PbamSpec, Registry, ScenarioConfig};
use crate::output::{slug, Artifact};
use crate::{CheckOutcome, ConfigError};

const DEFECT_HEADER: [&str; 9] = [
    "family_id",
    "element_id",
    "t",
    "level",
    "defect_star",
    "defect_scalar",
    "defect_add",
    "defect_mul",
    "bound",
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BaselineComparison {
    pub path: String,
    pub rows: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub mismatch: Option<String>,
    pub passed: bool,
}

pub fn pbam(cfg: &ScenarioConfig, reg: &Registry, base: u64) -> Result<Vec<CheckOutcome>, ConfigError> {
    let t_values = cfg.grid.t_values()?;
    cfg.pbam
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let f = reg.family(&spec.family)?;
            let elements = build_elements(f.domain(), &spec.elements, cfg.seed, base + i as u64)?;
            let grid = SamplingGrid::new(t_values.clone(), elements, spec.levels.clone())
                .map_err(|e| ConfigError::Invalid(format!("pbam grid: {e}")))?;
            let config = PbamConfig {
                tolerance: spec.tolerance,
                lambda: complex(spec.lambda),
                moduli: spec.moduli.as_ref().map(|eps| ModulusConfig {
                    epsilons: eps.clone(),
                    seed: cfg.seed,
                    ..ModulusConfig::default()
                }),
                ..PbamConfig::default()
            };
            let label = format!("pbam:{}", spec.family);
            let csv_name = format!("{}.csv", slug(&["pbam", &format!("{i:02}"), &spec.family]));
            let report = match pbam_check(&**f, &grid, &config) {
                Ok(r) => r,
                Err(e) => return Ok(CheckOutcome::errored(&label, e)),
            };
            let artifact = Artifact::csv(&csv_name, &report.rows, &DEFECT_HEADER);
            let baseline = spec.baseline.as_ref().map(|p| compare_baseline(cfg, spec, p, &artifact)).transpose()?;
            let passed = report.summary.passed && baseline.as_ref().is_none_or(|b| b.passed);
            Ok(CheckOutcome {
                summary: summary(&label, spec, &report, &csv_name, baseline, passed),
                passed,
                artifacts: vec![artifact],
            })
        })
        .collect()
}

fn summary(
    label: &str,
    spec: &PbamSpec,
    report: &DefectReport,
    csv: &str,
    baseline: Option<BaselineComparison>,
    passed: bool,
) -> serde_json::Value {
    json!({
        "check": label,
        "family": spec.family,
        "family_id": report.family_id,
        "passed": passed,
        "rows": report.rows.len(),
        "defects_csv": csv,
        "summary": report.summary,
        "moduli": report.moduli,
        "baseline": baseline,
    })
}

/// Compares a freshly written defect CSV against a stored one: identical
/// labels, numeric columns within the tolerance.
fn compare_baseline(cfg: &ScenarioConfig, spec: &PbamSpec, path: &str, fresh: &Artifact) -> Result<BaselineComparison, ConfigError> {
    let full = cfg.resolve(path);
    let stored = std::fs::read(&full).map_err(|e| ConfigError::Io(format!("baseline {}: {e}", full.display())))?;
    let read = |bytes: &[u8]| -> Result<Vec<csv::StringRecord>, ConfigError> {
        csv::Reader::from_reader(bytes)
            .records()
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| ConfigError::Parse(format!("baseline {}: {e}", full.display())))
    };
    let old = read(&stored)?;
    let new = read(&fresh.contents)?;
    let mut max_deviation = 0.0f64;
    let mut mismatch = None;
    if old.len() != new.len() {
        mismatch = Some(format!("{} stored rows, {} regenerated", old.len(), new.len()));
    }
    'rows: for (k, (a, b)) in old.iter().zip(&new).enumerate() {
        for (col, (x, y)) in a.iter().zip(b.iter()).enumerate() {
            match (x.parse::<f64>(), y.parse::<f64>()) {
                (Ok(u), Ok(v)) => max_deviation = max_deviation.max((u - v).abs()),
                _ if x == y => {}
                _ => {
                    mismatch = Some(format!("row {k}, column {col}: `{x}` vs `{y}`"));
                    break 'rows;
                }
            }
        }
    }
    let passed = mismatch.is_none() && max_deviation <= spec.baseline_tolerance;
    Ok(BaselineComparison {
        path: path.to_string(),
        rows: old.len(),
        max_deviation,
        tolerance: spec.baseline_tolerance,
        mismatch,
        passed,
    })
}
