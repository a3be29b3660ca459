//! Reparameterised composition `(g ∘_φ f)_t(a) = g_{φ(t)}(f_t(a))`, the C1/C3
//! scans, the reparameterisation search and the homotopy chains relating the
//! representative of `g ∘ f` to `g̃ ∘ f̃`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::algebra::Algebra;
use crate::asymptotic::{
    check_increasing, first_after_last_failure, pbam_check, AsymptoticFamily, Family, PathFamily, PbamConfig,
    PbamSummary, SamplingGrid,
};
use crate::error::{Error, Result};
use crate::funcalc::{theta, weighted_polar, SqrtDomain};
use crate::random::{random_direction, stream_rng};
use crate::unitary::{build_alpha, representative_at, QuasiUnitaryNet};
use crate::{Element, C64};

use std::sync::Arc;

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Non-decreasing piecewise-linear function through `dots`, constant before
/// the first dot and continued with `tail_slope` after the last.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PiecewiseLinear {
    pub dots: Vec<(f64, f64)>,
    pub tail_slope: f64,
}

impl PiecewiseLinear {
    pub fn new(dots: Vec<(f64, f64)>, tail_slope: f64) -> Result<Self> {
        if dots.is_empty() {
            return Err(Error::InvalidReparam("at least one dot is required".into()));
        }
        if dots.iter().any(|(t, s)| !t.is_finite() || !s.is_finite()) || !(tail_slope >= 0.0 && tail_slope.is_finite()) {
            return Err(Error::InvalidReparam("dots and tail slope must be finite, slope non-negative".into()));
        }
        if dots.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidReparam("dot times must be strictly increasing".into()));
        }
        if dots.windows(2).any(|w| w[0].1 > w[1].1) {
            return Err(Error::InvalidReparam("dot values must be non-decreasing".into()));
        }
        Ok(Self { dots, tail_slope })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let d = &self.dots;
        if t <= d[0].0 {
            return d[0].1;
        }
        let i = d.partition_point(|(ti, _)| *ti <= t) - 1;
        let (t0, s0) = d[i];
        match d.get(i + 1) {
            Some(&(t1, s1)) => s0 + (s1 - s0) * ((t - t0) / (t1 - t0)),
            None => s0 + self.tail_slope * (t - t0),
        }
    }
}

/// A time change `φ : [0, ∞) → [0, ∞)`: the pointwise maximum of one or more
/// piecewise-linear pieces.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Reparameterization {
    pieces: Vec<PiecewiseLinear>,
}

impl Reparameterization {
    pub fn from_dots(dots: Vec<(f64, f64)>, tail_slope: f64) -> Result<Self> {
        Ok(Self { pieces: vec![PiecewiseLinear::new(dots, tail_slope)?] })
    }

    /// `t ↦ t`.
    pub fn identity() -> Self {
        Self { pieces: vec![PiecewiseLinear { dots: vec![(0.0, 0.0)], tail_slope: 1.0 }] }
    }

    /// Joins the dots `(t_i, max_{j<=i} s_j)` with straight lines and continues
    /// with the slope of the last segment.
    pub fn join_dots(constraints: &[(f64, f64)]) -> Result<Self> {
        let mut running = f64::NEG_INFINITY;
        let dots: Vec<(f64, f64)> = constraints
            .iter()
            .map(|&(t, s)| {
                running = running.max(s);
                (t, running)
            })
            .collect();
        let tail_slope = match dots.as_slice() {
            [.., (t0, s0), (t1, s1)] => (s1 - s0) / (t1 - t0),
            _ => 0.0,
        };
        Self::from_dots(dots, tail_slope)
    }

    /// Like [`join_dots`](Self::join_dots), but each requirement `s_i` is
    /// already met at `t_{i-1}`, so the result dominates the requirements on
    /// every whole grid cell rather than only at the grid times.
    pub fn covering_dots(constraints: &[(f64, f64)]) -> Result<Self> {
        let mut dots: Vec<(f64, f64)> = constraints
            .windows(2)
            .map(|w| (w[0].0, w[0].1.max(w[1].1)))
            .collect();
        dots.extend(constraints.last());
        Self::join_dots(&dots)
    }

    /// `t ↦ φ(t) + delta`.
    pub fn shifted(&self, delta: f64) -> Result<Self> {
        let pieces = self
            .pieces
            .iter()
            .map(|p| PiecewiseLinear::new(p.dots.iter().map(|&(t, s)| (t, s + delta)).collect(), p.tail_slope))
            .collect::<Result<_>>()?;
        Ok(Self { pieces })
    }

    /// `t ↦ max_k φ_k(t)`.
    pub fn pointwise_max(parts: &[&Reparameterization]) -> Result<Self> {
        let pieces: Vec<PiecewiseLinear> = parts.iter().flat_map(|r| r.pieces.iter().cloned()).collect();
        if pieces.is_empty() {
            return Err(Error::InvalidReparam("maximum of no functions".into()));
        }
        Ok(Self { pieces })
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.pieces.iter().map(|p| p.eval(t)).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn pieces(&self) -> &[PiecewiseLinear] {
        &self.pieces
    }

    /// `{"dots": [[t, s], …], "tail_slope": …}` for a single piece, otherwise
    /// `{"max_of": [...]}`.
    pub fn to_json(&self) -> Value {
        let piece = |p: &PiecewiseLinear| json!({ "dots": p.dots, "tail_slope": p.tail_slope });
        match self.pieces.as_slice() {
            [p] => piece(p),
            ps => json!({ "max_of": ps.iter().map(piece).collect::<Vec<_>>() }),
        }
    }
}

/// `(g ∘_φ f)_t(a) = g_{φ(t)}(f_t(a))`.
#[derive(Clone, Debug)]
pub struct CompositeFamily {
    id: String,
    f: Family,
    g: Family,
    phi: Reparameterization,
}

impl CompositeFamily {
    pub fn f(&self) -> &Family {
        &self.f
    }

    pub fn g(&self) -> &Family {
        &self.g
    }

    pub fn phi(&self) -> &Reparameterization {
        &self.phi
    }
}

impl AsymptoticFamily for CompositeFamily {
    fn id(&self) -> &str {
        &self.id
    }
    fn domain(&self) -> &Algebra {
        self.f.domain()
    }
    fn codomain(&self) -> &Algebra {
        self.g.codomain()
    }
    fn eval(&self, a: &Element, t: f64) -> Result<Element> {
        self.g.eval(&self.f.eval(a, t)?, self.phi.eval(t))
    }
}

fn require_chain(f: &dyn AsymptoticFamily, g: &dyn AsymptoticFamily) -> Result<()> {
    if f.codomain().id() != g.domain().id() {
        return Err(Error::FamilyMismatch {
            family: g.id().into(),
            reason: format!("expects `{}` but `{}` lands in `{}`", g.domain().id(), f.id(), f.codomain().id()),
        });
    }
    Ok(())
}

pub fn compose_with(f: Family, g: Family, phi: Reparameterization) -> Result<CompositeFamily> {
    require_chain(&*f, &*g)?;
    let id = format!("{}∘{}", g.id(), f.id());
    Ok(CompositeFamily { id, f, g, phi })
}

/// `h_t(a)(p) = g_{pφ(t) + (1-p)θ(t)}(f_t(a))`, joining `g ∘_θ f` (at `p = 0`)
/// to `g ∘_φ f` (at `p = 1`).
#[derive(Clone, Debug)]
pub struct ReparamBlend {
    id: String,
    f: Family,
    g: Family,
    phi: Reparameterization,
    theta: Reparameterization,
    path: Algebra,
    start: Family,
    end: Family,
}

impl ReparamBlend {
    pub fn new(f: Family, g: Family, phi: Reparameterization, theta: Reparameterization, nodes: usize) -> Result<Self> {
        require_chain(&*f, &*g)?;
        let path = Algebra::path(g.codomain(), nodes)?;
        let start: Family = Arc::new(compose_with(f.clone(), g.clone(), theta.clone())?);
        let end: Family = Arc::new(compose_with(f.clone(), g.clone(), phi.clone())?);
        Ok(Self { id: format!("reparam_blend({})", end.id()), f, g, phi, theta, path, start, end })
    }
}

impl AsymptoticFamily for ReparamBlend {
    fn id(&self) -> &str {
        &self.id
    }
    fn domain(&self) -> &Algebra {
        self.f.domain()
    }
    fn codomain(&self) -> &Algebra {
        &self.path
    }
    fn eval(&self, a: &Element, t: f64) -> Result<Element> {
        let fa = self.f.eval(a, t)?;
        let (phi, theta) = (self.phi.eval(t), self.theta.eval(t));
        let values = self
            .path
            .path_nodes()
            .expect("path algebra")
            .into_iter()
            .map(|p| self.g.eval(&fa, p * phi + (1.0 - p) * theta))
            .collect::<Result<Vec<_>>>()?;
        self.path.from_path(values)
    }
}

impl PathFamily for ReparamBlend {
    fn start(&self) -> &Family {
        &self.start
    }
    fn end(&self) -> &Family {
        &self.end
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct C1Config {
    pub max_halvings: usize,
    pub probes: usize,
    /// Probe radii as fractions of `ξ`.
    pub fractions: Vec<f64>,
    /// Number of nearby `a'` whose images `f_t(a')` are also tried.
    pub neighbours: usize,
    /// Size of the perturbations `a' - a` in the top seminorm.
    pub neighbour_radius: f64,
    pub seed: u64,
}

impl Default for C1Config {
    fn default() -> Self {
        Self { max_halvings: 10, probes: 3, fractions: vec![0.5, 0.9], neighbours: 2, neighbour_radius: 1e-3, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct C1Entry {
    pub nu: f64,
    pub xi: Option<f64>,
    pub q_prime: Option<f64>,
    /// `(t, S'(t))` for the accepted (or last tried) `ξ`.
    pub s_prime: Vec<(f64, Option<f64>)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct C3Entry {
    pub level: usize,
    pub q_n: Option<f64>,
    pub m_n: f64,
    pub s_n: Vec<(f64, Option<f64>)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct C1C3Certificate {
    pub element_id: String,
    pub c1: Vec<C1Entry>,
    pub c3: Vec<C3Entry>,
}

impl C1C3Certificate {
    pub fn complete(&self) -> bool {
        self.c1.iter().all(|e| e.q_prime.is_some()) && self.c3.iter().all(|e| e.q_n.is_some())
    }
}

/// Scans for `ξ`, `Q'` and `S'(t)` such that probes `b` with `d(f_t(a), b) < ξ`
/// satisfy `d(g_s(f_t(a)), g_s(b)) < ν` for sampled `s ≥ S'(t)`.
#[allow(clippy::too_many_arguments)]
pub fn check_c1(
    f: &dyn AsymptoticFamily,
    g: &dyn AsymptoticFamily,
    a: &Element,
    nu: f64,
    t_values: &[f64],
    s_values: &[f64],
    config: &C1Config,
    stream: u64,
) -> Result<C1Entry> {
    require_chain(f, g)?;
    check_increasing(t_values)?;
    check_increasing(s_values)?;
    let (alg_a, alg_b, alg_c) = (f.domain(), f.codomain(), g.codomain());
    let mut rng = stream_rng(config.seed, stream);
    let directions = (0..config.probes).map(|_| random_direction(alg_b, &mut rng)).collect::<Result<Vec<_>>>()?;
    let neighbours = (0..config.neighbours)
        .map(|_| {
            let d = random_direction(alg_a, &mut rng)?;
            alg_a.add(a, &alg_a.scale(real(config.neighbour_radius), &d)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let images = t_values.iter().map(|&t| f.eval(a, t)).collect::<Result<Vec<_>>>()?;
    let neighbour_images = t_values
        .iter()
        .map(|&t| neighbours.iter().map(|x| f.eval(x, t)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;

    let mut last = Vec::new();
    for k in 0..=config.max_halvings {
        let xi = nu * f64::powi(0.5, k as i32);
        let s_prime = t_values
            .par_iter()
            .enumerate()
            .map(|(i, _)| {
                let b0 = &images[i];
                let mut probes = Vec::new();
                for d in &directions {
                    for frac in &config.fractions {
                        probes.push(alg_b.add(b0, &alg_b.scale(real(frac * xi / 2.0), d)?)?);
                    }
                }
                for b in &neighbour_images[i] {
                    if alg_b.distance(b0, b)? < xi {
                        probes.push(b.clone());
                    }
                }
                let ok = s_values
                    .iter()
                    .map(|&s| {
                        let gb0 = g.eval(b0, s)?;
                        for b in &probes {
                            if alg_c.distance(&gb0, &g.eval(b, s)?)? >= nu {
                                return Ok(false);
                            }
                        }
                        Ok(true)
                    })
                    .collect::<Result<Vec<bool>>>()?;
                Ok(first_after_last_failure(s_values, &ok))
            })
            .collect::<Result<Vec<Option<f64>>>>()?;
        let found: Vec<bool> = s_prime.iter().map(Option::is_some).collect();
        let q_prime = first_after_last_failure(t_values, &found);
        last = t_values.iter().cloned().zip(s_prime).collect();
        if q_prime.is_some() {
            return Ok(C1Entry { nu, xi: Some(xi), q_prime, s_prime: last });
        }
    }
    Ok(C1Entry { nu, xi: None, q_prime: None, s_prime: last })
}

/// `M_n` is the sup of `|g_s(f_t(a))|_n` over the second halves of both
/// grids; `S_n(t)` and `Q_n` are the first grid values after the last
/// sample exceeding it.
pub fn check_c3(
    f: &dyn AsymptoticFamily,
    g: &dyn AsymptoticFamily,
    a: &Element,
    level: usize,
    t_values: &[f64],
    s_values: &[f64],
) -> Result<C3Entry> {
    require_chain(f, g)?;
    check_increasing(t_values)?;
    check_increasing(s_values)?;
    let alg_c = g.codomain();
    if level >= alg_c.levels() {
        return Err(Error::LevelOutOfRange { level, count: alg_c.levels() });
    }
    let values = t_values
        .par_iter()
        .map(|&t| {
            let b = f.eval(a, t)?;
            s_values.iter().map(|&s| alg_c.seminorm(level, &g.eval(&b, s)?)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let (ht, hs) = (t_values.len() / 2, s_values.len() / 2);
    let m_n = values[ht..].iter().flat_map(|row| row[hs..].iter()).cloned().fold(0.0, f64::max);
    let s_n: Vec<(f64, Option<f64>)> = t_values
        .iter()
        .zip(&values)
        .map(|(&t, row)| {
            let ok: Vec<bool> = row.iter().map(|v| *v <= m_n).collect();
            (t, first_after_last_failure(s_values, &ok))
        })
        .collect();
    let found: Vec<bool> = s_n.iter().map(|(_, s)| s.is_some()).collect();
    Ok(C3Entry { level, q_n: first_after_last_failure(t_values, &found), m_n, s_n })
}

#[allow(clippy::too_many_arguments)]
pub fn certify(
    f: &dyn AsymptoticFamily,
    g: &dyn AsymptoticFamily,
    a: &Element,
    element_id: &str,
    nus: &[f64],
    levels: &[usize],
    t_values: &[f64],
    s_values: &[f64],
    c1: &C1Config,
    stream: u64,
) -> Result<C1C3Certificate> {
    let c1 = nus
        .iter()
        .map(|&nu| check_c1(f, g, a, nu, t_values, s_values, c1, stream))
        .collect::<Result<Vec<_>>>()?;
    let c3 = levels.iter().map(|&n| check_c3(f, g, a, n, t_values, s_values)).collect::<Result<Vec<_>>>()?;
    Ok(C1C3Certificate { element_id: element_id.to_string(), c1, c3 })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TolSchedule {
    Constant { tol: f64 },
    /// `scale · (1 + t)^{-exponent}`.
    Power { scale: f64, exponent: f64 },
}

impl TolSchedule {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            TolSchedule::Constant { tol } => tol,
            TolSchedule::Power { scale, exponent } => scale * (1.0 + t).powf(-exponent),
        }
    }
}

impl Default for TolSchedule {
    fn default() -> Self {
        TolSchedule::Constant { tol: 1e-2 }
    }
}

#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub t_values: Vec<f64>,
    pub s_values: Vec<f64>,
    pub tol: TolSchedule,
    pub lambda: C64,
    /// Levels at which `g`'s defects on the images are bounded.
    pub levels: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchOutcome {
    pub constraints: Vec<(f64, f64)>,
    #[serde(skip)]
    pub phi: Reparameterization,
}

/// Defects of `g` at the image points, one vector per condition.
fn g_defects_at(
    g: &dyn AsymptoticFamily,
    b: &Element,
    b2: &Element,
    lambda: C64,
    s: f64,
) -> Result<[Vec<f64>; 4]> {
    let (bb, cc) = (g.domain(), g.codomain());
    let gb = g.eval(b, s)?;
    let gb2 = g.eval(b2, s)?;
    Ok([
        cc.seminorms(&cc.sub(&cc.star(&gb)?, &g.eval(&bb.star(b)?, s)?)?)?,
        cc.seminorms(&cc.sub(&cc.scale(lambda, &gb)?, &g.eval(&bb.scale(lambda, b)?, s)?)?)?,
        cc.seminorms(&cc.sub(&cc.add(&gb, &gb2)?, &g.eval(&bb.add(b, b2)?, s)?)?)?,
        cc.seminorms(&cc.sub(&cc.mul(&gb, &gb2)?, &g.eval(&bb.mul(b, b2)?, s)?)?)?,
    ])
}

const CONDITIONS: [&str; 4] = ["star", "scalar", "add", "mul"];

/// For each grid `t_i`, the least grid `s_i` from which `g`'s defects on the
/// images `f_t(a), f_t(a')` stay within `tol(t_i)` and `|g_s(f_t(a))|_n` stays
/// within `M_n(a) + 1` for every later sampled `s`. Returns the joined dots.
pub fn search_reparam(
    f: &dyn AsymptoticFamily,
    g: &dyn AsymptoticFamily,
    elements: &[Element],
    certificates: &[C1C3Certificate],
    config: &SearchConfig,
) -> Result<SearchOutcome> {
    require_chain(f, g)?;
    check_increasing(&config.t_values)?;
    check_increasing(&config.s_values)?;
    if certificates.len() != elements.len() {
        return Err(Error::InvalidReparam("one C1/C3 certificate per element is required".into()));
    }
    if elements.is_empty() {
        return Err(Error::InvalidReparam("no test elements".into()));
    }
    let count = g.codomain().levels();
    if let Some(&n) = config.levels.iter().find(|&&n| n >= count) {
        return Err(Error::LevelOutOfRange { level: n, count });
    }
    let m = elements.len();
    let constraints = config
        .t_values
        .par_iter()
        .map(|&t| {
            let images = elements.iter().map(|a| f.eval(a, t)).collect::<Result<Vec<_>>>()?;
            let tol = config.tol.at(t);
            let mut witness = String::new();
            let ok = config
                .s_values
                .iter()
                .map(|&s| {
                    for j in 0..m {
                        let d = g_defects_at(g, &images[j], &images[(j + 1) % m], config.lambda, s)?;
                        for (c, name) in d.iter().zip(CONDITIONS) {
                            if let Some(&n) = config.levels.iter().find(|&&n| c[n] > tol) {
                                witness = format!("a{j}: {name} defect {:e} at level {n}, s = {s}", c[n]);
                                return Ok(false);
                            }
                        }
                        let norms = g.codomain().seminorms(&g.eval(&images[j], s)?)?;
                        for e in &certificates[j].c3 {
                            if norms[e.level] > e.m_n + 1.0 {
                                witness = format!("a{j}: |g_s(f_t(a))|_{} = {} > M + 1, s = {s}", e.level, norms[e.level]);
                                return Ok(false);
                            }
                        }
                    }
                    Ok(true)
                })
                .collect::<Result<Vec<bool>>>()?;
            first_after_last_failure(&config.s_values, &ok)
                .map(|s| (t, s))
                .ok_or(Error::SearchFailed { t, witness })
        })
        .collect::<Result<Vec<_>>>()?;
    let phi = Reparameterization::join_dots(&constraints)?;
    Ok(SearchOutcome { constraints, phi })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidityEvidence {
    pub phi_summary: PbamSummary,
    pub dominating_summary: PbamSummary,
    pub shift: f64,
    pub blend_endpoints_exact: bool,
    pub passed: bool,
}

/// Recomposes with `φ` and `φ + shift`, runs `pbam_check` on both and checks
/// that the blend between them has bit-identical end nodes.
pub fn validity_evidence(
    f: &Family,
    g: &Family,
    phi: &Reparameterization,
    grid: &SamplingGrid,
    config: &PbamConfig,
    shift: f64,
    nodes: usize,
) -> Result<ValidityEvidence> {
    let theta = phi.shifted(shift)?;
    let at_phi = compose_with(f.clone(), g.clone(), phi.clone())?;
    let at_theta = compose_with(f.clone(), g.clone(), theta.clone())?;
    let phi_summary = pbam_check(&at_phi, grid, config)?.summary;
    let dominating_summary = pbam_check(&at_theta, grid, config)?.summary;
    let blend = ReparamBlend::new(f.clone(), g.clone(), phi.clone(), theta, nodes)?;
    let path = blend.codomain().clone();
    let mut exact = true;
    for a in &grid.elements {
        for &t in &grid.t_values {
            let h = blend.eval(a, t)?;
            exact &= path.path_node(&h, 0)?.bits_eq(&at_theta.eval(a, t)?);
            exact &= path.path_node(&h, nodes - 1)?.bits_eq(&at_phi.eval(a, t)?);
        }
    }
    let passed = phi_summary.passed && dominating_summary.passed && exact;
    Ok(ValidityEvidence { phi_summary, dominating_summary, shift, blend_endpoints_exact: exact, passed })
}

/// `f̂_{t,p}(u) = f_t(u) • ϑ(p (f_t(u)* • f_t(u)))`.
pub fn hat_f(f: &dyn AsymptoticFamily, u: &Element, t: f64, p: f64, domain_b: &SqrtDomain) -> Result<Element> {
    weighted_polar(f.codomain(), &f.eval(u, t)?, p, domain_b)
}

/// `r_{s,t,p}(u)`: the quasi-polar retraction of `g_s(f̂_{t,p}(u))` in `C`.
#[allow(clippy::too_many_arguments)]
pub fn r_map(
    f: &dyn AsymptoticFamily,
    g: &dyn AsymptoticFamily,
    u: &Element,
    s: f64,
    t: f64,
    p: f64,
    domain_b: &SqrtDomain,
    domain_c: &SqrtDomain,
) -> Result<Element> {
    require_chain(f, g)?;
    weighted_polar(g.codomain(), &g.eval(&hat_f(f, u, t, p, domain_b)?, s)?, 1.0, domain_c)
}

fn both_in(alg: &Algebra, x: &Element, domain: &SqrtDomain) -> Result<bool> {
    let xs = alg.star(x)?;
    Ok(domain.contains(alg, &alg.quasi_product(&xs, x)?) && domain.contains(alg, &alg.quasi_product(x, &xs)?))
}

/// The membership predicate behind `r`: `f_t(y)` retracts in `B` and every
/// `g_s(f̂_{t,p}(y))` (sampled `p`) retracts in `C`.
#[allow(clippy::too_many_arguments)]
pub fn retraction_predicate(
    f: &dyn AsymptoticFamily,
    g: &dyn AsymptoticFamily,
    y: &Element,
    s: f64,
    t: f64,
    p_values: &[f64],
    domain_b: &SqrtDomain,
    domain_c: &SqrtDomain,
) -> Result<bool> {
    let b = f.codomain();
    if !both_in(b, &f.eval(y, t)?, domain_b)? {
        return Ok(false);
    }
    for &p in p_values {
        let x = g.eval(&hat_f(f, y, t, p, domain_b)?, s)?;
        if !both_in(g.codomain(), &x, domain_c)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Per-point `γ(u)` and the time change `θ` such that `r_{s,t,p}(u)` is
/// defined for sampled `t ≥ γ(u)`, `s ≥ θ(t)`. `θ` covers whole grid cells
/// because membership in `V` can switch between samples.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RetractionScan {
    pub gamma: Vec<f64>,
    #[serde(skip)]
    pub theta: Reparameterization,
    pub constraints: Vec<(f64, f64)>,
}

#[allow(clippy::too_many_arguments)]
pub fn retraction_scan(
    f: &dyn AsymptoticFamily,
    g: &dyn AsymptoticFamily,
    net: &QuasiUnitaryNet,
    t_values: &[f64],
    s_values: &[f64],
    p_values: &[f64],
    domain_b: &SqrtDomain,
    domain_c: &SqrtDomain,
) -> Result<RetractionScan> {
    require_chain(f, g)?;
    check_increasing(t_values)?;
    check_increasing(s_values)?;
    let jobs: Vec<(usize, usize)> =
        (0..net.len()).flat_map(|i| (0..t_values.len()).map(move |k| (i, k))).collect();
    let s_min = jobs
        .par_iter()
        .map(|&(i, k)| {
            let ok = s_values
                .iter()
                .map(|&s| retraction_predicate(f, g, &net.points()[i], s, t_values[k], p_values, domain_b, domain_c))
                .collect::<Result<Vec<bool>>>()?;
            Ok(first_after_last_failure(s_values, &ok))
        })
        .collect::<Result<Vec<Option<f64>>>>()?;
    let nt = t_values.len();
    let gamma = (0..net.len())
        .map(|i| {
            let found: Vec<bool> = (0..nt).map(|k| s_min[i * nt + k].is_some()).collect();
            first_after_last_failure(t_values, &found)
                .ok_or(Error::ThresholdNotFound { point: i, horizon: *t_values.last().expect("non-empty") })
        })
        .collect::<Result<Vec<_>>>()?;
    let constraints: Vec<(f64, f64)> = t_values
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let s = (0..net.len())
                .filter(|&i| t >= gamma[i])
                .filter_map(|i| s_min[i * nt + k])
                .fold(s_values[0], f64::max);
            (t, s)
        })
        .collect();
    let theta = Reparameterization::covering_dots(&constraints)?;
    Ok(RetractionScan { gamma, theta, constraints })
}

#[derive(Clone, Debug)]
pub struct FunctorialityConfig {
    pub search: SearchConfig,
    /// `p` grid of the three homotopies and of the retraction predicate.
    pub p_values: Vec<f64>,
    pub margin: f64,
    pub radius: f64,
    /// The threshold and membership scans use the square-root domains shrunk
    /// by this factor, so values between grid times keep some room.
    pub scan_shrink: f64,
    pub net_tolerance: f64,
    /// Bound on the quasi-unitary defect along every path.
    pub tolerance: f64,
    /// Bound on the endpoint comparisons.
    pub endpoint_tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FunctorialityRow {
    pub u_id: String,
    pub stage: String,
    pub p: f64,
    pub defect: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainWitness {
    pub u_id: String,
    pub stage: String,
    pub p: f64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainPoint {
    pub u_id: String,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub mu: f64,
    pub lambda: f64,
    pub omega: f64,
    pub psi_omega: f64,
    /// `h_1` and `h'_0` agree bit for bit.
    pub junction_h_h1: bool,
    /// `h'_1` and `h''_0` agree bit for bit.
    pub junction_h1_h2: bool,
    /// `|h_0 - (g ∘_ψ f)~_ω(u)|_top`.
    pub start_gap: f64,
    /// `|h''_1 - g̃_β(f̃_λ(u))|_top`.
    pub end_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageSummary {
    pub stage: String,
    pub max_defect: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FunctorialityReport {
    pub phi: Value,
    pub theta: Value,
    pub psi: Value,
    pub reparam_constraints: Vec<(f64, f64)>,
    pub retraction_constraints: Vec<(f64, f64)>,
    pub stages: Vec<StageSummary>,
    pub points: Vec<ChainPoint>,
    pub rows: Vec<FunctorialityRow>,
    pub witnesses: Vec<ChainWitness>,
    /// Where the smallness and membership moduli used by the chains come from.
    pub moduli_sources: Vec<String>,
    pub passed: bool,
}

const MODULI_SOURCES: [&str; 3] = [
    "V_B membership of f_t(u) for t >= alpha(u): threshold scan of f on the net",
    "V_C membership of g_s(f_hat_{t,p}(u)) for t >= gamma(u), s >= theta(t): retraction predicate scan",
    "boundedness of g_s(f_t(u)) by M_n + 1 along phi: C3 scan feeding the reparameterisation search",
];

struct PointOutcome {
    point: ChainPoint,
    rows: Vec<FunctorialityRow>,
    witnesses: Vec<ChainWitness>,
}

/// Builds `φ`, `γ`, `θ`, `ψ = max{t, φ, θ}`, `α`, `β`, `μ`, `λ`, `ω` on the net
/// and sweeps the three homotopies `h`, `h'`, `h''` from `(g ∘_ψ f)~_ω` to
/// `g̃_β ∘ f̃_λ`.
pub fn functoriality_check(
    f: &Family,
    g: &Family,
    net: &QuasiUnitaryNet,
    domain_b: &SqrtDomain,
    domain_c: &SqrtDomain,
    config: &FunctorialityConfig,
) -> Result<FunctorialityReport> {
    let (ff, gg) = (f.as_ref(), g.as_ref());
    require_chain(ff, gg)?;
    let sc = &config.search;
    if !(config.scan_shrink > 0.0 && config.scan_shrink <= 1.0) {
        return Err(Error::InvalidGrid(format!("scan_shrink {} must lie in (0, 1]", config.scan_shrink)));
    }
    let scan_b = domain_b.clone().with_radius(domain_b.radius * config.scan_shrink)?;
    let scan_c = domain_c.clone().with_radius(domain_c.radius * config.scan_shrink)?;
    let certificates = net
        .points()
        .iter()
        .zip(net.ids())
        .map(|(u, id)| {
            let c3 = sc
                .levels
                .iter()
                .map(|&n| check_c3(ff, gg, u, n, &sc.t_values, &sc.s_values))
                .collect::<Result<Vec<_>>>()?;
            Ok(C1C3Certificate { element_id: id.clone(), c1: Vec::new(), c3 })
        })
        .collect::<Result<Vec<_>>>()?;
    let search = search_reparam(ff, gg, net.points(), &certificates, sc)?;
    let scan = retraction_scan(ff, gg, net, &sc.t_values, &sc.s_values, &config.p_values, &scan_b, &scan_c)?;
    let identity = Reparameterization::identity();
    let psi = Reparameterization::pointwise_max(&[&identity, &search.phi, &scan.theta])?;
    let composite = compose_with(f.clone(), g.clone(), psi.clone())?;

    let alpha = build_alpha(ff, net, &scan_b, &sc.t_values, config.margin, config.radius)?;
    let mu = build_alpha(&composite, net, &scan_c, &sc.t_values, config.margin, config.radius)?;
    let n = net.len();
    let lambda: Vec<f64> = (0..n).map(|i| alpha.at(i).max(scan.gamma[i])).collect();
    let images = (0..n)
        .map(|i| representative_at(ff, &net.points()[i], lambda[i], domain_b))
        .collect::<Result<Vec<_>>>()?;
    let net_b = QuasiUnitaryNet::new(f.codomain(), images.clone(), config.net_tolerance)?;
    let beta = build_alpha(gg, &net_b, &scan_c, &sc.t_values, config.margin, config.radius)?;

    let outcomes: Vec<PointOutcome> = (0..n)
        .into_par_iter()
        .map(|i| {
            let u = &net.points()[i];
            let b_u = beta.at(i);
            let omega = alpha.at(i).max(b_u).max(scan.gamma[i]).max(mu.at(i));
            chain_point(ff, gg, &composite, &psi, u, &net.ids()[i], &images[i], alpha.at(i), b_u, scan.gamma[i], mu.at(i), lambda[i], omega, domain_b, domain_c, config)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    let mut witnesses = Vec::new();
    let mut points = Vec::new();
    for o in outcomes {
        rows.extend(o.rows);
        witnesses.extend(o.witnesses);
        points.push(o.point);
    }
    let stages: Vec<StageSummary> = ["h", "h1", "h2"]
        .iter()
        .map(|&stage| {
            let max_defect = rows.iter().filter(|r| r.stage == stage).map(|r| r.defect).fold(0.0, f64::max);
            let broken = witnesses.iter().any(|w| w.stage == stage);
            StageSummary { stage: stage.into(), max_defect, passed: !broken && max_defect <= config.tolerance }
        })
        .collect();
    let passed = stages.iter().all(|s| s.passed)
        && witnesses.is_empty()
        && points.iter().all(|p| {
            p.junction_h_h1
                && p.junction_h1_h2
                && p.start_gap <= config.endpoint_tolerance
                && p.end_gap <= config.endpoint_tolerance
        });
    Ok(FunctorialityReport {
        phi: search.phi.to_json(),
        theta: scan.theta.to_json(),
        psi: psi.to_json(),
        reparam_constraints: search.constraints,
        retraction_constraints: scan.constraints,
        stages,
        points,
        rows,
        witnesses,
        moduli_sources: MODULI_SOURCES.iter().map(|s| s.to_string()).collect(),
        passed,
    })
}

#[allow(clippy::too_many_arguments)]
fn chain_point(
    f: &dyn AsymptoticFamily,
    g: &dyn AsymptoticFamily,
    composite: &CompositeFamily,
    psi: &Reparameterization,
    u: &Element,
    u_id: &str,
    f_lambda: &Element,
    alpha: f64,
    beta: f64,
    gamma: f64,
    mu: f64,
    lambda: f64,
    omega: f64,
    domain_b: &SqrtDomain,
    domain_c: &SqrtDomain,
    config: &FunctorialityConfig,
) -> Result<PointOutcome> {
    let c = g.codomain();
    let polar_c = |x: &Element| weighted_polar(c, x, 1.0, domain_c);
    let psi_omega = psi.eval(omega);
    let tau = |p: f64| (1.0 - p) * omega + p * lambda;
    let zeta = |p: f64| psi.eval(tau(p)).max(beta);
    let zeta1 = zeta(1.0);
    let eta = |p: f64| (1.0 - p) * zeta1 + p * beta;

    let h = |p: f64| r_map(f, g, u, psi_omega, omega, p, domain_b, domain_c);
    let h1 = |p: f64| polar_c(&g.eval(&representative_at(f, u, tau(p), domain_b)?, zeta(p))?);
    let h2 = |p: f64| polar_c(&g.eval(f_lambda, eta(p))?);

    let mut rows = Vec::new();
    let mut witnesses = Vec::new();
    let mut ends: [[Option<Element>; 2]; 3] = Default::default();
    let last = config.p_values.len().saturating_sub(1);
    for (si, (stage, path)) in [("h", &h as &dyn Fn(f64) -> Result<Element>), ("h1", &h1), ("h2", &h2)]
        .into_iter()
        .enumerate()
    {
        for (k, &p) in config.p_values.iter().enumerate() {
            match path(p).and_then(|x| c.is_quasi_unitary(&x, f64::INFINITY).map(|q| (x, q.defect))) {
                Ok((x, defect)) => {
                    rows.push(FunctorialityRow { u_id: u_id.into(), stage: stage.into(), p, defect });
                    if k == 0 && p == 0.0 {
                        ends[si][0] = Some(x);
                    } else if k == last && p == 1.0 {
                        ends[si][1] = Some(x);
                    }
                }
                Err(e) => witnesses.push(ChainWitness {
                    u_id: u_id.into(),
                    stage: stage.into(),
                    p,
                    reason: e.to_string(),
                }),
            }
        }
    }
    let endpoint = |si: usize, end: usize, p: f64, path: &dyn Fn(f64) -> Result<Element>| -> Result<Element> {
        match &ends[si][end] {
            Some(x) => Ok(x.clone()),
            None => path(p),
        }
    };
    let exact = |a: Result<Element>, b: Result<Element>| matches!((a, b), (Ok(x), Ok(y)) if x.bits_eq(&y));
    let junction_h_h1 = exact(endpoint(0, 1, 1.0, &h), endpoint(1, 0, 0.0, &h1));
    let junction_h1_h2 = exact(endpoint(1, 1, 1.0, &h1), endpoint(2, 0, 0.0, &h2));
    let gap = |a: Result<Element>, b: Result<Element>| match (a, b) {
        (Ok(x), Ok(y)) => c.sub(&x, &y).and_then(|d| c.top_seminorm(&d)).unwrap_or(f64::INFINITY),
        _ => f64::INFINITY,
    };
    let start_gap = gap(endpoint(0, 0, 0.0, &h), representative_at(composite, u, omega, domain_c));
    let end_gap = gap(endpoint(2, 1, 1.0, &h2), representative_at(g, f_lambda, beta, domain_c));
    for (ok, stage, p, what) in [
        (junction_h_h1, "h", 1.0, "h_1 differs from h'_0"),
        (junction_h1_h2, "h1", 1.0, "h'_1 differs from h''_0"),
    ] {
        if !ok {
            witnesses.push(ChainWitness { u_id: u_id.into(), stage: stage.into(), p, reason: what.into() });
        }
    }
    Ok(PointOutcome {
        point: ChainPoint {
            u_id: u_id.into(),
            alpha,
            beta,
            gamma,
            mu,
            lambda,
            omega,
            psi_omega,
            junction_h_h1,
            junction_h1_h2,
            start_gap,
            end_gap,
        },
        rows,
        witnesses,
    })
}

/// Margins `RHS - LHS` of the four estimates
///
/// ```text
/// |x* - y*|_n          <= |x - y|_{n+1}
/// |λx - μy|_n          <= |λ-μ| |x|_n + (|λ| + |λ-μ|) |x - y|_n
/// |x + x' - y - y'|_n  <= |x - y|_n + |x' - y'|_n
/// |x x' - y y'|_n      <= |x|_{n+1} |x' - y'|_{n+1} + |x - y|_{n+1} (|x'|_{n+1} + |x' - y'|_{n+1})
/// ```
#[allow(clippy::too_many_arguments)]
pub fn operation_difference_margins(
    c: &Algebra,
    x: &Element,
    y: &Element,
    x2: &Element,
    y2: &Element,
    lambda: C64,
    mu: C64,
    n: usize,
) -> Result<[f64; 4]> {
    if n + 1 >= c.levels() {
        return Err(Error::LevelOutOfRange { level: n, count: c.levels() });
    }
    let norm = |k: usize, e: &Element| c.seminorm(k, e);
    let d = c.sub(x, y)?;
    let d2 = c.sub(x2, y2)?;
    let star = norm(n + 1, &d)? - norm(n, &c.sub(&c.star(x)?, &c.star(y)?)?)?;
    let lm = (lambda - mu).norm();
    let scalar = lm * norm(n, x)? + (lambda.norm() + lm) * norm(n, &d)?
        - norm(n, &c.sub(&c.scale(lambda, x)?, &c.scale(mu, y)?)?)?;
    let add = norm(n, &d)? + norm(n, &d2)? - norm(n, &c.sub(&c.add(x, x2)?, &c.add(y, y2)?)?)?;
    let mul = norm(n + 1, x)? * norm(n + 1, &d2)? + norm(n + 1, &d)? * (norm(n + 1, x2)? + norm(n + 1, &d2)?)
        - norm(n, &c.sub(&c.mul(x, x2)?, &c.mul(y, y2)?)?)?;
    Ok([star, scalar, add, mul])
}

/// The same margins for `x = g_s(f_t(a))`, `y = g_s(b)`, `x' = g_s(f_t(a'))`, `y' = g_s(b')`.
#[allow(clippy::too_many_arguments)]
pub fn operation_difference_sample(
    f: &dyn AsymptoticFamily,
    g: &dyn AsymptoticFamily,
    a: &Element,
    a2: &Element,
    b: &Element,
    b2: &Element,
    s: f64,
    t: f64,
    lambda: C64,
    mu: C64,
    n: usize,
) -> Result<[f64; 4]> {
    require_chain(f, g)?;
    let x = g.eval(&f.eval(a, t)?, s)?;
    let x2 = g.eval(&f.eval(a2, t)?, s)?;
    operation_difference_margins(g.codomain(), &x, &g.eval(b, s)?, &x2, &g.eval(b2, s)?, lambda, mu, n)
}

/// Margin of `|c • b - d|_n <= |c - d|_{n+1} + |b|_{n+1} (1 + |d|_{n+1} + |c - d|_{n+1})`.
pub fn product_shift_margin(alg: &Algebra, c: &Element, d: &Element, b: &Element, n: usize) -> Result<f64> {
    if n + 1 >= alg.levels() {
        return Err(Error::LevelOutOfRange { level: n, count: alg.levels() });
    }
    let cd = alg.seminorm(n + 1, &alg.sub(c, d)?)?;
    let rhs = cd + alg.seminorm(n + 1, b)? * (1.0 + alg.seminorm(n + 1, d)? + cd);
    Ok(rhs - alg.seminorm(n, &alg.sub(&alg.quasi_product(c, b)?, d)?)?)
}

/// The margin above with `c = f_t(y)`, `d = f_q(x)` and `b = ϑ(p (f_t(y)* • f_t(y)))`.
#[allow(clippy::too_many_arguments)]
pub fn product_shift_sample(
    f: &dyn AsymptoticFamily,
    x: &Element,
    y: &Element,
    q: f64,
    t: f64,
    p: f64,
    domain_b: &SqrtDomain,
    n: usize,
) -> Result<f64> {
    let b = f.codomain();
    let c = f.eval(y, t)?;
    let arg = b.scale(real(p), &b.quasi_product(&b.star(&c)?, &c)?)?;
    let th = theta(b, &arg, domain_b)?;
    product_shift_margin(b, &c, &f.eval(x, q)?, &th, n)
}

#[cfg(test)]
mod tests;
