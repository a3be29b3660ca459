mod algebra;
mod compose;
mod funcalc;
mod functoriality;
mod pbam;
mod retract;

pub use algebra::verify_algebra;
pub use compose::compose;
pub use funcalc::funcalc;
pub use functoriality::functoriality;
pub use pbam::pbam;
pub use retract::retract;

use serde::Serialize;

/// Worst value of one measured quantity over a sample set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Measure {
    pub name: String,
    pub samples: usize,
    pub worst: f64,
    pub tolerance: f64,
    /// `worst <= tolerance` for errors, `worst >= -tolerance` for margins.
    pub passed: bool,
}

impl Measure {
    pub fn error(name: impl Into<String>, values: &[f64], tolerance: f64) -> Self {
        let worst = values.iter().cloned().fold(0.0, f64::max);
        let passed = values.iter().all(|v| *v <= tolerance);
        Self { name: name.into(), samples: values.len(), worst, tolerance, passed }
    }

    pub fn margin(name: impl Into<String>, values: &[f64], tolerance: f64) -> Self {
        let worst = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let passed = values.iter().all(|v| *v >= -tolerance);
        Self { name: name.into(), samples: values.len(), worst: if values.is_empty() { 0.0 } else { worst }, tolerance, passed }
    }

    /// Counts of violations of an exact property.
    pub fn count(name: impl Into<String>, samples: usize, violations: usize) -> Self {
        Self { name: name.into(), samples, worst: violations as f64, tolerance: 0.0, passed: violations == 0 }
    }
}
