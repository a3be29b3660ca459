//! Quasi-unitary nets, threshold scans, the α function and the representatives
//! `f̃_α(v) = f_{α(v)}(v) • ϑ(f_{α(v)}(v)* • f_{α(v)}(v))`.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::algebra::Algebra;
use crate::asymptotic::{check_increasing, AsymptoticFamily, PathFamily};
use crate::error::{Error, Result};
use crate::funcalc::{weighted_polar, SqrtDomain};
use crate::Element;

/// Finite sample of `U(A)` with its pairwise canonical distances.
#[derive(Clone, Debug)]
pub struct QuasiUnitaryNet {
    algebra: Algebra,
    points: Vec<Element>,
    ids: Vec<String>,
    tolerance: f64,
    defects: Vec<f64>,
    distances: Vec<Vec<f64>>,
}

impl QuasiUnitaryNet {
    pub fn new(algebra: &Algebra, points: Vec<Element>, tolerance: f64) -> Result<Self> {
        let mut defects = Vec::with_capacity(points.len());
        for (index, u) in points.iter().enumerate() {
            let check = algebra.is_quasi_unitary(u, tolerance)?;
            if !check.quasi_unitary {
                return Err(Error::NotQuasiUnitary { index, defect: check.defect });
            }
            defects.push(check.defect);
        }
        let distances = points
            .iter()
            .map(|u| points.iter().map(|v| algebra.distance(u, v)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let ids = (0..points.len()).map(|i| format!("u{i}")).collect();
        Ok(Self { algebra: algebra.clone(), points, ids, tolerance, defects, distances })
    }

    pub fn algebra(&self) -> &Algebra {
        &self.algebra
    }

    pub fn points(&self) -> &[Element] {
        &self.points
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn defects(&self) -> &[f64] {
        &self.defects
    }

    pub fn distances(&self) -> &[Vec<f64>] {
        &self.distances
    }
}

/// Smallest grid time `t₀` with `f_t(u) • f_t(u)*` and `f_t(u)* • f_t(u)` in
/// `V_B` for every sampled `t ≥ t₀`.
pub fn scan_threshold(
    f: &dyn AsymptoticFamily,
    u: &Element,
    point: usize,
    domain: &SqrtDomain,
    t_values: &[f64],
) -> Result<f64> {
    check_increasing(t_values)?;
    let b = f.codomain();
    let ok = t_values
        .iter()
        .map(|&t| {
            let x = f.eval(u, t)?;
            let xs = b.star(&x)?;
            Ok(domain.contains(b, &b.quasi_product(&x, &xs)?) && domain.contains(b, &b.quasi_product(&xs, &x)?))
        })
        .collect::<Result<Vec<bool>>>()?;
    crate::asymptotic::first_after_last_failure(t_values, &ok)
        .ok_or(Error::ThresholdNotFound { point, horizon: *t_values.last().expect("non-empty") })
}

/// Per-point thresholds plus a safety margin, extended off the net by taking
/// the maximum over net points within `radius` (or the nearest point).
#[derive(Clone, Debug)]
pub struct AlphaFunction {
    net: QuasiUnitaryNet,
    thresholds: Vec<f64>,
    margin: f64,
    radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlphaEntry {
    pub point: Value,
    #[serde(rename = "T")]
    pub threshold: f64,
    pub margin: f64,
}

impl AlphaFunction {
    pub fn from_thresholds(net: &QuasiUnitaryNet, thresholds: Vec<f64>, margin: f64, radius: f64) -> Result<Self> {
        if thresholds.len() != net.len() {
            return Err(Error::InvalidGrid("one threshold per net point is required".into()));
        }
        if thresholds.iter().any(|t| !(*t >= 0.0)) || !(margin >= 0.0) || !(radius >= 0.0) {
            return Err(Error::InvalidGrid("thresholds, margin and radius must be non-negative".into()));
        }
        Ok(Self { net: net.clone(), thresholds, margin, radius })
    }

    pub fn net(&self) -> &QuasiUnitaryNet {
        &self.net
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Stored values `T(u) + margin`.
    pub fn values(&self) -> Vec<f64> {
        self.thresholds.iter().map(|t| t + self.margin).collect()
    }

    /// Value at net point `i`.
    pub fn at(&self, i: usize) -> f64 {
        let row = &self.net.distances[i];
        self.pick(row)
    }

    pub fn eval(&self, v: &Element) -> Result<f64> {
        let alg = &self.net.algebra;
        let row = self.net.points.iter().map(|u| alg.distance(u, v)).collect::<Result<Vec<_>>>()?;
        Ok(self.pick(&row))
    }

    fn pick(&self, distances: &[f64]) -> f64 {
        let values = self.values();
        let near: Vec<f64> = distances
            .iter()
            .zip(&values)
            .filter(|(d, _)| **d <= self.radius)
            .map(|(_, v)| *v)
            .collect();
        if !near.is_empty() {
            return near.into_iter().fold(0.0, f64::max);
        }
        let mut best = 0;
        for (i, d) in distances.iter().enumerate() {
            if *d < distances[best] {
                best = i;
            }
        }
        values.get(best).copied().unwrap_or(0.0)
    }

    pub fn entries(&self) -> Vec<AlphaEntry> {
        self.net
            .points
            .iter()
            .zip(&self.thresholds)
            .map(|(p, t)| AlphaEntry { point: p.to_json(), threshold: *t, margin: self.margin })
            .collect()
    }

    pub fn to_json(&self) -> Value {
        json!({ "radius": self.radius, "entries": self.entries() })
    }
}

/// Scans every net point and stores `T(u) + margin`.
pub fn build_alpha(
    f: &dyn AsymptoticFamily,
    net: &QuasiUnitaryNet,
    domain: &SqrtDomain,
    t_values: &[f64],
    margin: f64,
    radius: f64,
) -> Result<AlphaFunction> {
    if f.domain().id() != net.algebra.id() {
        return Err(Error::FamilyMismatch {
            family: f.id().into(),
            reason: format!("net lives in `{}`", net.algebra.id()),
        });
    }
    let thresholds = net
        .points
        .par_iter()
        .enumerate()
        .map(|(i, u)| scan_threshold(f, u, i, domain, t_values))
        .collect::<Result<Vec<_>>>()?;
    AlphaFunction::from_thresholds(net, thresholds, margin, radius)
}

/// `f_t(v) • ϑ(f_t(v)* • f_t(v))`.
pub fn representative_at(f: &dyn AsymptoticFamily, v: &Element, t: f64, domain: &SqrtDomain) -> Result<Element> {
    weighted_polar(f.codomain(), &f.eval(v, t)?, 1.0, domain)
}

/// `f̃_α(v)`.
pub fn retract_representative(
    f: &dyn AsymptoticFamily,
    alpha: &AlphaFunction,
    v: &Element,
    domain: &SqrtDomain,
) -> Result<Element> {
    representative_at(f, v, alpha.eval(v)?, domain)
}

/// `H(v, p) = f̃_{pα + (1-p)γ}(v)` for the values `α(v)` and `γ(v)`.
pub fn alpha_homotopy(
    f: &dyn AsymptoticFamily,
    alpha_v: f64,
    gamma_v: f64,
    v: &Element,
    p: f64,
    domain: &SqrtDomain,
) -> Result<Element> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidHomotopy(format!("p = {p} outside [0, 1]")));
    }
    representative_at(f, v, p * alpha_v + (1.0 - p) * gamma_v, domain)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub v_id: String,
    pub p: f64,
    pub defect: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepBreak {
    pub v_id: String,
    pub p: f64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HomotopySweep {
    pub rows: Vec<SweepRow>,
    pub max_defect: f64,
    pub breaks: Vec<SweepBreak>,
}

impl HomotopySweep {
    pub fn passed(&self, tol: f64) -> bool {
        self.breaks.is_empty() && self.max_defect <= tol
    }
}

/// Sweeps `alpha_homotopy` over net points and a `p` grid, recording the
/// quasi-unitary defect of every value.
pub fn alpha_homotopy_sweep(
    f: &dyn AsymptoticFamily,
    net: &QuasiUnitaryNet,
    alpha: &[f64],
    gamma: &[f64],
    p_values: &[f64],
    domain: &SqrtDomain,
) -> Result<HomotopySweep> {
    let b = f.codomain();
    let jobs: Vec<(usize, f64)> = (0..net.len()).flat_map(|i| p_values.iter().map(move |&p| (i, p))).collect();
    let results: Vec<std::result::Result<f64, String>> = jobs
        .par_iter()
        .map(|&(i, p)| match alpha_homotopy(f, alpha[i], gamma[i], &net.points[i], p, domain) {
            Ok(h) => b.is_quasi_unitary(&h, f64::INFINITY).map(|c| c.defect).map_err(|e| e.to_string()),
            Err(e) => Err(e.to_string()),
        })
        .collect();
    Ok(collect_sweep(net.ids(), &jobs, results))
}

fn collect_sweep(ids: &[String], jobs: &[(usize, f64)], results: Vec<std::result::Result<f64, String>>) -> HomotopySweep {
    let mut rows = Vec::new();
    let mut breaks = Vec::new();
    let mut max_defect = 0.0f64;
    for (&(i, p), r) in jobs.iter().zip(results) {
        match r {
            Ok(d) => {
                max_defect = max_defect.max(d);
                rows.push(SweepRow { v_id: ids[i].clone(), p, defect: d });
            }
            Err(reason) => breaks.push(SweepBreak { v_id: ids[i].clone(), p, reason }),
        }
    }
    HomotopySweep { rows, max_defect, breaks }
}

#[derive(Clone, Debug)]
pub struct PbaConfig {
    pub t_values: Vec<f64>,
    pub p_values: Vec<f64>,
    pub margin: f64,
    pub radius: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PbaReport {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub eta: Vec<f64>,
    /// `f̃_α → f̃_η`.
    pub f_sweep: HomotopySweep,
    /// `g̃_β → g̃_η`.
    pub g_sweep: HomotopySweep,
    /// `p ↦ h̃_η(v)(p)` at the path nodes.
    pub h_sweep: HomotopySweep,
    /// `max_v |h̃_η(v)(0) - f̃_η(v)|_top` and the same at `p = 1` against `g̃_η`.
    pub endpoint_gap: f64,
    pub passed: bool,
}

/// Evidence that PBA homotopic `F` and `G` induce the same class: builds
/// `η = max{α, β, γ}` and sweeps the three connecting paths.
pub fn pba_homotopy_check(
    h: &dyn PathFamily,
    net: &QuasiUnitaryNet,
    domain_b: &SqrtDomain,
    config: &PbaConfig,
) -> Result<PbaReport> {
    let (f, g) = (h.start().as_ref(), h.end().as_ref());
    let b = f.codomain();
    let path = h.codomain();
    let last = path.path_nodes().expect("path algebra").len() - 1;
    for u in net.points() {
        for &t in &config.t_values {
            let hu = h.eval(u, t)?;
            if !path.path_node(&hu, 0)?.bits_eq(&f.eval(u, t)?) || !path.path_node(&hu, last)?.bits_eq(&g.eval(u, t)?) {
                return Err(Error::InvalidHomotopy(format!("endpoint mismatch at t = {t}")));
            }
        }
    }
    let domain_path = SqrtDomain { algebra: path.id().to_string(), ..domain_b.clone() };
    let alpha = build_alpha(f, net, domain_b, &config.t_values, config.margin, config.radius)?;
    let beta = build_alpha(g, net, domain_b, &config.t_values, config.margin, config.radius)?;
    let gamma = build_alpha(h, net, &domain_path, &config.t_values, config.margin, config.radius)?;
    let n = net.len();
    let (av, bv, gv): (Vec<f64>, Vec<f64>, Vec<f64>) =
        ((0..n).map(|i| alpha.at(i)).collect(), (0..n).map(|i| beta.at(i)).collect(), (0..n).map(|i| gamma.at(i)).collect());
    let eta: Vec<f64> = (0..n).map(|i| av[i].max(bv[i]).max(gv[i])).collect();
    let f_sweep = alpha_homotopy_sweep(f, net, &av, &eta, &config.p_values, domain_b)?;
    let g_sweep = alpha_homotopy_sweep(g, net, &bv, &eta, &config.p_values, domain_b)?;

    let nodes = path.path_nodes().expect("path algebra");
    let mut jobs = Vec::new();
    let mut results = Vec::new();
    let mut endpoint_gap = 0.0f64;
    for (i, u) in net.points().iter().enumerate() {
        match representative_at(h, u, eta[i], &domain_path) {
            Ok(hu) => {
                for (k, &p) in nodes.iter().enumerate() {
                    jobs.push((i, p));
                    results.push(
                        path.path_node(&hu, k)
                            .and_then(|x| b.is_quasi_unitary(&x, f64::INFINITY))
                            .map(|c| c.defect)
                            .map_err(|e| e.to_string()),
                    );
                }
                let f_eta = representative_at(f, u, eta[i], domain_b)?;
                let g_eta = representative_at(g, u, eta[i], domain_b)?;
                endpoint_gap = endpoint_gap
                    .max(b.top_seminorm(&b.sub(&path.path_node(&hu, 0)?, &f_eta)?)?)
                    .max(b.top_seminorm(&b.sub(&path.path_node(&hu, last)?, &g_eta)?)?);
            }
            Err(e) => {
                jobs.push((i, f64::NAN));
                results.push(Err(e.to_string()));
            }
        }
    }
    let h_sweep = collect_sweep(net.ids(), &jobs, results);
    let passed = f_sweep.passed(config.tolerance)
        && g_sweep.passed(config.tolerance)
        && h_sweep.passed(config.tolerance)
        && endpoint_gap <= config.tolerance;
    Ok(PbaReport { alpha: av, beta: bv, gamma: gv, eta, f_sweep, g_sweep, h_sweep, endpoint_gap, passed })
}
