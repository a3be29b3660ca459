//! Asymptotic families `f_t : A → B`, their PBAM defects and evidence reports.
//!
//! Limits "as t → ∞" are replaced by finite grids up to a horizon. A defect
//! curve counts as vanishing when its tail stays below the tolerance or when
//! its last-quarter maximum is below its first-quarter maximum.

use std::fmt::Debug;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{Algebra, CMat};
use crate::error::{Error, Result};
use crate::random::{random_direction, stream_rng};
use crate::{Element, C64};

/// A jointly continuous map `A × [0, ∞) → B`.
pub trait AsymptoticFamily: Send + Sync + Debug {
    fn id(&self) -> &str;
    fn domain(&self) -> &Algebra;
    fn codomain(&self) -> &Algebra;
    fn eval(&self, a: &Element, t: f64) -> Result<Element>;

    /// Declared joint continuity in `(a, t)`.
    fn is_continuous(&self) -> bool {
        true
    }
}

pub type Family = Arc<dyn AsymptoticFamily>;

/// A family into a path algebra `C([0,1], B)` whose end nodes are two other
/// families `F` (at `p = 0`) and `G` (at `p = 1`).
pub trait PathFamily: AsymptoticFamily {
    fn start(&self) -> &Family;
    fn end(&self) -> &Family;
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Ramp weights `w_j(t) = clamp(speed·t - j + 1, 0, 1)` for `j = 1..=dim`.
pub fn ramp_weights(dim: usize, speed: f64, t: f64) -> Vec<f64> {
    (1..=dim).map(|j| (speed * t - j as f64 + 1.0).clamp(0.0, 1.0)).collect()
}

/// `D a D` computed entrywise, so the result is exactly `*`-compatible.
fn damp(m: &CMat, w: &[f64]) -> CMat {
    CMat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * (w[i] * w[j]))
}

/// The identity family `f_t(a) = a`.
#[derive(Debug, Clone)]
pub struct ExactHom {
    id: String,
    alg: Algebra,
}

impl ExactHom {
    pub fn new(alg: &Algebra) -> Self {
        Self { id: format!("exact({})", alg.id()), alg: alg.clone() }
    }
}

impl AsymptoticFamily for ExactHom {
    fn id(&self) -> &str {
        &self.id
    }
    fn domain(&self) -> &Algebra {
        &self.alg
    }
    fn codomain(&self) -> &Algebra {
        &self.alg
    }
    fn eval(&self, a: &Element, _t: f64) -> Result<Element> {
        self.alg.check(a)?;
        Ok(a.clone())
    }
}

/// `f_t(a) = D_t a D_t` on a matrix algebra with ramp weights.
#[derive(Debug, Clone)]
pub struct Compression {
    id: String,
    alg: Algebra,
    dim: usize,
    speed: f64,
}

impl Compression {
    pub fn new(alg: &Algebra, speed: f64) -> Result<Self> {
        let dim = alg.matrix_dim().ok_or_else(|| Error::FamilyMismatch {
            family: "compression".into(),
            reason: format!("`{}` is not a matrix algebra", alg.id()),
        })?;
        if !(speed > 0.0 && speed.is_finite()) {
            return Err(Error::FamilyMismatch { family: "compression".into(), reason: "speed must be positive".into() });
        }
        let id = if speed == 1.0 {
            format!("compression({dim})")
        } else {
            format!("compression({dim};speed={speed})")
        };
        Ok(Self { id, alg: alg.clone(), dim, speed })
    }

    /// Time from which the family is the identity.
    pub fn saturation(&self) -> f64 {
        self.dim as f64 / self.speed
    }
}

impl AsymptoticFamily for Compression {
    fn id(&self) -> &str {
        &self.id
    }
    fn domain(&self) -> &Algebra {
        &self.alg
    }
    fn codomain(&self) -> &Algebra {
        &self.alg
    }
    fn eval(&self, a: &Element, t: f64) -> Result<Element> {
        self.alg.check(a)?;
        let m = a.as_matrix().expect("checked matrix payload");
        self.alg.from_matrix(damp(m, &ramp_weights(self.dim, self.speed, t)))
    }
}

/// `f_t(a) = a + e^{-rate·t} a²`.
#[derive(Debug, Clone)]
pub struct PerturbedHom {
    id: String,
    alg: Algebra,
    rate: f64,
}

impl PerturbedHom {
    pub fn new(alg: &Algebra, rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::FamilyMismatch { family: "perturbed_hom".into(), reason: "rate must be positive".into() });
        }
        Ok(Self { id: format!("perturbed({};rate={rate})", alg.id()), alg: alg.clone(), rate })
    }
}

impl AsymptoticFamily for PerturbedHom {
    fn id(&self) -> &str {
        &self.id
    }
    fn domain(&self) -> &Algebra {
        &self.alg
    }
    fn codomain(&self) -> &Algebra {
        &self.alg
    }
    fn eval(&self, a: &Element, t: f64) -> Result<Element> {
        let sq = self.alg.mul(a, a)?;
        self.alg.add(a, &self.alg.scale(real((-self.rate * t).exp()), &sq)?)
    }
}

/// Toeplitz quantisation `C^∞(S¹) → M_K`: `f_t(f) = D_t T_K(f) D_t` with
/// `T_{jk} = f̂(j - k)` and the corner damping of [`Compression`].
///
/// The codomain carries the tracial norm at level 0, in which the rank-one
/// multiplicative defect of the order-`K` truncation has size `K^{-1/2}`.
#[derive(Debug, Clone)]
pub struct Toeplitz {
    id: String,
    circle: Algebra,
    matrices: Algebra,
    order: usize,
}

impl Toeplitz {
    pub fn new(circle: &Algebra, order: usize) -> Result<Self> {
        if circle.circle().is_none() {
            return Err(Error::FamilyMismatch {
                family: "toeplitz".into(),
                reason: format!("`{}` is not a circle algebra", circle.id()),
            });
        }
        let matrices = Algebra::tracial_matrix(order)?.with_levels(circle.levels())?;
        Ok(Self { id: format!("toeplitz({};{order})", circle.id()), circle: circle.clone(), matrices, order })
    }

    pub fn order(&self) -> usize {
        self.order
    }
}

impl AsymptoticFamily for Toeplitz {
    fn id(&self) -> &str {
        &self.id
    }
    fn domain(&self) -> &Algebra {
        &self.circle
    }
    fn codomain(&self) -> &Algebra {
        &self.matrices
    }
    fn eval(&self, a: &Element, t: f64) -> Result<Element> {
        self.circle.check(a)?;
        let space = self.circle.circle().expect("circle algebra");
        let c = a.as_fourier().expect("checked fourier payload");
        let k = self.order;
        let symbol = |d: i64| space.slot(d).map_or(real(0.0), |s| c[s]);
        let t_mat = CMat::from_fn(k, k, |i, j| symbol(i as i64 - j as i64));
        self.matrices.from_matrix(damp(&t_mat, &ramp_weights(k, 1.0, t)))
    }
}

/// `f_t(a) = a + (1 + t)^{-1} tr(a) 1` on a matrix algebra.
#[derive(Debug, Clone)]
pub struct TraceShift {
    id: String,
    alg: Algebra,
}

impl TraceShift {
    pub fn new(alg: &Algebra) -> Result<Self> {
        if alg.matrix_dim().is_none() {
            return Err(Error::FamilyMismatch {
                family: "trace_shift".into(),
                reason: format!("`{}` is not a matrix algebra", alg.id()),
            });
        }
        Ok(Self { id: format!("trace_shift({})", alg.id()), alg: alg.clone() })
    }
}

impl AsymptoticFamily for TraceShift {
    fn id(&self) -> &str {
        &self.id
    }
    fn domain(&self) -> &Algebra {
        &self.alg
    }
    fn codomain(&self) -> &Algebra {
        &self.alg
    }
    fn eval(&self, a: &Element, t: f64) -> Result<Element> {
        self.alg.check(a)?;
        let tr = a.as_matrix().expect("checked matrix payload").trace();
        self.alg.add(a, &self.alg.scalar(tr / (1.0 + t)))
    }
}

/// Path-valued family `h_t(a)(p) = (1 - p) F_t(a) + p G_t(a)`.
///
/// The end nodes are `F_t(a)` and `G_t(a)` themselves, not the blend formula.
#[derive(Debug, Clone)]
pub struct LinearBlend {
    id: String,
    f: Family,
    g: Family,
    path: Algebra,
}

impl LinearBlend {
    pub fn new(f: Family, g: Family, nodes: usize) -> Result<Self> {
        if f.domain().id() != g.domain().id() || f.codomain().id() != g.codomain().id() {
            return Err(Error::FamilyMismatch {
                family: format!("blend({}, {})", f.id(), g.id()),
                reason: "endpoints must share domain and codomain".into(),
            });
        }
        let path = Algebra::path(f.codomain(), nodes)?;
        Ok(Self { id: format!("blend({},{})", f.id(), g.id()), f, g, path })
    }
}

impl PathFamily for LinearBlend {
    fn start(&self) -> &Family {
        &self.f
    }

    fn end(&self) -> &Family {
        &self.g
    }
}

impl AsymptoticFamily for LinearBlend {
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
        let b = self.f.codomain();
        let fa = self.f.eval(a, t)?;
        let ga = self.g.eval(a, t)?;
        let nodes = self.path.path_nodes().expect("path algebra");
        let last = nodes.len() - 1;
        let values = nodes
            .iter()
            .enumerate()
            .map(|(i, &p)| match i {
                0 => Ok(fa.clone()),
                i if i == last => Ok(ga.clone()),
                _ => b.add(&b.scale(real(1.0 - p), &fa)?, &b.scale(real(p), &ga)?),
            })
            .collect::<Result<Vec<_>>>()?;
        self.path.from_path(values)
    }
}

pub fn exact_hom(alg: &Algebra) -> Family {
    Arc::new(ExactHom::new(alg))
}

pub fn compression_family(alg: &Algebra, speed: f64) -> Result<Family> {
    Ok(Arc::new(Compression::new(alg, speed)?))
}

pub fn perturbed_hom(alg: &Algebra, rate: f64) -> Result<Family> {
    Ok(Arc::new(PerturbedHom::new(alg, rate)?))
}

pub fn toeplitz_family(circle: &Algebra, order: usize) -> Result<Family> {
    Ok(Arc::new(Toeplitz::new(circle, order)?))
}

pub fn trace_shift(alg: &Algebra) -> Result<Family> {
    Ok(Arc::new(TraceShift::new(alg)?))
}

pub fn homotopy_family(f: Family, g: Family, nodes: usize) -> Result<Family> {
    Ok(Arc::new(LinearBlend::new(f, g, nodes)?))
}

fn require_domain(f: &dyn AsymptoticFamily, a: &Element) -> Result<()> {
    f.domain().check(a).map_err(|_| Error::FamilyMismatch {
        family: f.id().into(),
        reason: format!("argument lives in `{}`, not `{}`", a.algebra_id(), f.domain().id()),
    })
}

/// `|F_t(a)* - F_t(a*)|_n`.
pub fn defect_star(f: &dyn AsymptoticFamily, a: &Element, t: f64, n: usize) -> Result<f64> {
    Ok(star_defects(f, a, t)?[level_index(f, n)?])
}

/// `|λ F_t(a) - F_t(λ a)|_n`.
pub fn defect_scalar(f: &dyn AsymptoticFamily, a: &Element, lambda: C64, t: f64, n: usize) -> Result<f64> {
    Ok(scalar_defects(f, a, lambda, t)?[level_index(f, n)?])
}

/// `|F_t(a) + F_t(a') - F_t(a + a')|_n`.
pub fn defect_add(f: &dyn AsymptoticFamily, a: &Element, a2: &Element, t: f64, n: usize) -> Result<f64> {
    Ok(add_defects(f, a, a2, t)?[level_index(f, n)?])
}

/// `|F_t(a) F_t(a') - F_t(a a')|_n`.
pub fn defect_mul(f: &dyn AsymptoticFamily, a: &Element, a2: &Element, t: f64, n: usize) -> Result<f64> {
    Ok(mul_defects(f, a, a2, t)?[level_index(f, n)?])
}

fn level_index(f: &dyn AsymptoticFamily, n: usize) -> Result<usize> {
    let count = f.codomain().levels();
    if n < count {
        Ok(n)
    } else {
        Err(Error::LevelOutOfRange { level: n, count })
    }
}

fn star_defects(f: &dyn AsymptoticFamily, a: &Element, t: f64) -> Result<Vec<f64>> {
    require_domain(f, a)?;
    let (dom, cod) = (f.domain(), f.codomain());
    let fa = f.eval(a, t)?;
    cod.seminorms(&cod.sub(&cod.star(&fa)?, &f.eval(&dom.star(a)?, t)?)?)
}

fn scalar_defects(f: &dyn AsymptoticFamily, a: &Element, lambda: C64, t: f64) -> Result<Vec<f64>> {
    require_domain(f, a)?;
    let (dom, cod) = (f.domain(), f.codomain());
    let fa = f.eval(a, t)?;
    cod.seminorms(&cod.sub(&cod.scale(lambda, &fa)?, &f.eval(&dom.scale(lambda, a)?, t)?)?)
}

fn add_defects(f: &dyn AsymptoticFamily, a: &Element, a2: &Element, t: f64) -> Result<Vec<f64>> {
    require_domain(f, a)?;
    require_domain(f, a2)?;
    let (dom, cod) = (f.domain(), f.codomain());
    let sum = cod.add(&f.eval(a, t)?, &f.eval(a2, t)?)?;
    cod.seminorms(&cod.sub(&sum, &f.eval(&dom.add(a, a2)?, t)?)?)
}

fn mul_defects(f: &dyn AsymptoticFamily, a: &Element, a2: &Element, t: f64) -> Result<Vec<f64>> {
    require_domain(f, a)?;
    require_domain(f, a2)?;
    let (dom, cod) = (f.domain(), f.codomain());
    let prod = cod.mul(&f.eval(a, t)?, &f.eval(a2, t)?)?;
    cod.seminorms(&cod.sub(&prod, &f.eval(&dom.mul(a, a2)?, t)?)?)
}

/// `sup_t |F_t(a)|_n` over the sampled times, one entry per level.
pub fn boundedness_profile(f: &dyn AsymptoticFamily, a: &Element, t_values: &[f64]) -> Result<Vec<f64>> {
    require_domain(f, a)?;
    let mut sup = vec![0.0f64; f.codomain().levels()];
    for &t in t_values {
        for (s, v) in sup.iter_mut().zip(f.codomain().seminorms(&f.eval(a, t)?)?) {
            *s = s.max(v);
        }
    }
    Ok(sup)
}

/// Finite stand-in for "all t ≥ T" and "all a ∈ A".
#[derive(Clone, Debug)]
pub struct SamplingGrid {
    pub t_values: Vec<f64>,
    pub elements: Vec<Element>,
    pub element_ids: Vec<String>,
    /// Levels reported in the defect rows.
    pub levels: Vec<usize>,
}

impl SamplingGrid {
    pub fn new(t_values: Vec<f64>, elements: Vec<Element>, levels: Vec<usize>) -> Result<Self> {
        check_increasing(&t_values)?;
        let element_ids = (0..elements.len()).map(|i| format!("a{i}")).collect();
        Ok(Self { t_values, elements, element_ids, levels })
    }

    pub fn with_ids(mut self, ids: Vec<String>) -> Result<Self> {
        if ids.len() != self.elements.len() {
            return Err(Error::InvalidGrid("one id per test element is required".into()));
        }
        self.element_ids = ids;
        Ok(self)
    }
}

pub(crate) fn check_increasing(t_values: &[f64]) -> Result<()> {
    if t_values.is_empty() {
        return Err(Error::InvalidGrid("time grid is empty".into()));
    }
    if t_values.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::InvalidGrid("times must be finite and non-negative".into()));
    }
    if t_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidGrid("times must be strictly increasing".into()));
    }
    Ok(())
}

/// `0, step, 2·step, …` up to and including `horizon`.
pub fn uniform_times(step: f64, horizon: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidGrid(format!("step {step} and horizon {horizon} do not define a grid")));
    }
    let n = (horizon / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| i as f64 * step).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DefectRow {
    pub family_id: String,
    pub element_id: String,
    pub t: f64,
    pub level: usize,
    pub defect_star: f64,
    pub defect_scalar: f64,
    pub defect_add: f64,
    pub defect_mul: f64,
    /// `|F_t(a)|_level`.
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurveWitness {
    pub element_id: String,
    pub level: usize,
    pub head_max: f64,
    pub tail_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionSummary {
    pub condition: String,
    pub tail_max: f64,
    pub passed: bool,
    pub witness: Option<CurveWitness>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PbamSummary {
    pub conditions: Vec<ConditionSummary>,
    pub bounded: bool,
    pub bounded_witness: Option<CurveWitness>,
    /// `max_t |F_t(0)|_top`; the built-in families give exactly 0.
    pub zero_image_max: f64,
    pub moduli_found: bool,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DefectReport {
    pub family_id: String,
    pub rows: Vec<DefectRow>,
    pub summary: PbamSummary,
    pub moduli: Vec<ModulusEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SaccyEntry {
    pub eta_bar: f64,
    pub p_bar: f64,
    /// `(q, δ̄(q))` for grid values `q ≥ P̄`; `None` when no step in the ladder works.
    pub delta_bar: Vec<(f64, Option<f64>)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModulusEntry {
    pub element_id: String,
    pub epsilon: f64,
    pub eta: Option<f64>,
    pub p: Option<f64>,
    pub saccy: Option<SaccyEntry>,
}

impl ModulusEntry {
    pub fn found(&self) -> bool {
        self.eta.is_some() && self.saccy.as_ref().is_none_or(|s| s.delta_bar.iter().all(|(_, d)| d.is_some()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModulusConfig {
    pub epsilons: Vec<f64>,
    pub max_halvings: usize,
    pub probes: usize,
    /// Probe radii as fractions of the admissible distance.
    pub fractions: Vec<f64>,
    pub seed: u64,
    pub delta_bar: bool,
}

impl Default for ModulusConfig {
    fn default() -> Self {
        Self { epsilons: vec![0.1], max_halvings: 12, probes: 4, fractions: vec![0.5, 0.9], seed: 0, delta_bar: false }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PbamConfig {
    pub tolerance: f64,
    pub lambda: C64,
    /// Allowed ratio between the tail sup and the earlier sup of `|F_t(a)|_n`.
    pub growth_factor: f64,
    pub moduli: Option<ModulusConfig>,
}

impl Default for PbamConfig {
    fn default() -> Self {
        Self { tolerance: 1e-6, lambda: C64::new(0.6, -0.8), growth_factor: 2.0, moduli: None }
    }
}

fn probe_points(
    f: &dyn AsymptoticFamily,
    x: &Element,
    distance: f64,
    config: &ModulusConfig,
    stream: u64,
) -> Result<Vec<Element>> {
    let dom = f.domain();
    let mut rng = stream_rng(config.seed, stream);
    let mut out = Vec::with_capacity(config.probes * config.fractions.len());
    for _ in 0..config.probes {
        let dir = random_direction(dom, &mut rng)?;
        for frac in &config.fractions {
            // d(x, x + sΔ) < 2s when |Δ|_top = 1.
            out.push(dom.add(x, &dom.scale(real(frac * distance / 2.0), &dir)?)?);
        }
    }
    Ok(out)
}

/// First grid value after the last failing one, `None` if the last one fails.
pub(crate) fn first_after_last_failure(values: &[f64], ok: &[bool]) -> Option<f64> {
    match ok.iter().rposition(|b| !b) {
        None => values.first().copied(),
        Some(i) if i + 1 < values.len() => Some(values[i + 1]),
        Some(_) => None,
    }
}

fn eta_p_search(
    f: &dyn AsymptoticFamily,
    x: &Element,
    epsilon: f64,
    t_values: &[f64],
    config: &ModulusConfig,
    stream: u64,
) -> Result<Option<(f64, f64)>> {
    let cod = f.codomain();
    let images = t_values.iter().map(|&t| f.eval(x, t)).collect::<Result<Vec<_>>>()?;
    for k in 0..=config.max_halvings {
        let eta = epsilon * f64::powi(0.5, k as i32);
        let probes = probe_points(f, x, eta, config, stream)?;
        let mut ok = vec![true; t_values.len()];
        for (i, &t) in t_values.iter().enumerate() {
            for p in &probes {
                if cod.distance(&images[i], &f.eval(p, t)?)? >= epsilon {
                    ok[i] = false;
                    break;
                }
            }
        }
        if let Some(p) = first_after_last_failure(t_values, &ok) {
            return Ok(Some((eta, p)));
        }
    }
    Ok(None)
}

/// Estimates `η(x, ε)` and `P(x, ε)` by probing, optionally with the
/// `(η̄, P̄, δ̄)` refinement that also allows `t` to move near `q`.
pub fn sac_modulus_estimate(
    f: &dyn AsymptoticFamily,
    x: &Element,
    element_id: &str,
    epsilon: f64,
    t_values: &[f64],
    config: &ModulusConfig,
    stream: u64,
) -> Result<ModulusEntry> {
    require_domain(f, x)?;
    check_increasing(t_values)?;
    let found = eta_p_search(f, x, epsilon, t_values, config, stream)?;
    let saccy = if config.delta_bar {
        match eta_p_search(f, x, epsilon / 2.0, t_values, config, stream)? {
            Some((eta_bar, p)) => {
                let p_bar = p + 1.0;
                let cod = f.codomain();
                let mut delta_bar = Vec::new();
                for &q in t_values.iter().filter(|&&q| q >= p_bar) {
                    let fq = f.eval(x, q)?;
                    let mut chosen = None;
                    for k in 1..=config.max_halvings {
                        let delta = f64::powi(0.5, k as i32);
                        let mut ok = true;
                        for frac in &config.fractions {
                            for t in [q - frac * delta, q + frac * delta] {
                                if cod.distance(&fq, &f.eval(x, t.max(0.0))?)? >= epsilon / 2.0 {
                                    ok = false;
                                }
                            }
                        }
                        if ok {
                            chosen = Some(delta);
                            break;
                        }
                    }
                    delta_bar.push((q, chosen));
                }
                Some(SaccyEntry { eta_bar, p_bar, delta_bar })
            }
            None => None,
        }
    } else {
        None
    };
    Ok(ModulusEntry {
        element_id: element_id.to_string(),
        epsilon,
        eta: found.map(|(e, _)| e),
        p: found.map(|(_, p)| p),
        saccy,
    })
}

struct Curve<'a> {
    element_id: &'a str,
    level: usize,
    values: Vec<f64>,
}

fn quarter(n: usize) -> usize {
    (n / 4).max(1)
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().cloned().fold(0.0, f64::max)
}

fn vanishing(values: &[f64], tol: f64) -> (bool, f64, f64) {
    let q = quarter(values.len());
    let head = max_of(&values[..q]);
    let tail = max_of(&values[values.len() - q..]);
    let ok = values.iter().all(|v| v.is_finite()) && (tail <= tol || tail < head);
    (ok, head, tail)
}

fn summarize(name: &str, curves: &[Curve], tol: f64) -> ConditionSummary {
    let mut tail_max = 0.0f64;
    let mut witness = None;
    for c in curves {
        let (ok, head, tail) = vanishing(&c.values, tol);
        tail_max = tail_max.max(tail);
        if !ok && witness.is_none() {
            witness = Some(CurveWitness {
                element_id: c.element_id.to_string(),
                level: c.level,
                head_max: head,
                tail_max: tail,
            });
        }
    }
    ConditionSummary { condition: name.into(), tail_max, passed: witness.is_none(), witness }
}

/// Evaluates all defect curves, boundedness profiles, the zero check and
/// (optionally) continuity moduli of `f` on `grid`. Only the grid's levels
/// are sampled and judged.
///
/// Condition (f) and friends use the partner `a_{i+1}` (cyclically) for each
/// test element `a_i`.
pub fn pbam_check(f: &dyn AsymptoticFamily, grid: &SamplingGrid, config: &PbamConfig) -> Result<DefectReport> {
    for &n in &grid.levels {
        level_index(f, n)?;
    }
    let m = grid.elements.len();
    let nt = grid.t_values.len();
    let jobs: Vec<(usize, usize)> = (0..m).flat_map(|i| (0..nt).map(move |k| (i, k))).collect();
    let samples = jobs
        .par_iter()
        .map(|&(i, k)| {
            let t = grid.t_values[k];
            let a = &grid.elements[i];
            let a2 = &grid.elements[(i + 1) % m];
            Ok([
                star_defects(f, a, t)?,
                scalar_defects(f, a, config.lambda, t)?,
                add_defects(f, a, a2, t)?,
                mul_defects(f, a, a2, t)?,
                f.codomain().seminorms(&f.eval(a, t)?)?,
            ])
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(jobs.len() * grid.levels.len());
    for (&(i, k), s) in jobs.iter().zip(&samples) {
        for &n in &grid.levels {
            rows.push(DefectRow {
                family_id: f.id().to_string(),
                element_id: grid.element_ids[i].clone(),
                t: grid.t_values[k],
                level: n,
                defect_star: s[0][n],
                defect_scalar: s[1][n],
                defect_add: s[2][n],
                defect_mul: s[3][n],
                bound: s[4][n],
            });
        }
    }

    let curves = |which: usize| -> Vec<Curve> {
        (0..m)
            .flat_map(|i| {
                let samples = &samples;
                grid.levels.iter().map(move |&n| Curve {
                    element_id: &grid.element_ids[i],
                    level: n,
                    values: (0..nt).map(|k| samples[i * nt + k][which][n]).collect(),
                })
            })
            .collect()
    };
    let conditions: Vec<ConditionSummary> = ["star", "scalar", "add", "mul"]
        .iter()
        .enumerate()
        .map(|(w, name)| summarize(name, &curves(w), config.tolerance))
        .collect();

    let mut bounded_witness = None;
    for c in curves(4) {
        let q = quarter(nt);
        let tail = max_of(&c.values[nt - q..]);
        let body = if nt > q { max_of(&c.values[..nt - q]) } else { tail };
        let ok = c.values.iter().all(|v| v.is_finite()) && tail <= config.growth_factor * body.max(config.tolerance);
        if !ok {
            bounded_witness = Some(CurveWitness {
                element_id: c.element_id.to_string(),
                level: c.level,
                head_max: body,
                tail_max: tail,
            });
            break;
        }
    }

    let zero = f.domain().zero();
    let zero_image_max = grid
        .t_values
        .iter()
        .map(|&t| f.codomain().top_seminorm(&f.eval(&zero, t)?))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);

    let moduli = match &config.moduli {
        Some(mc) => (0..m)
            .into_par_iter()
            .map(|i| {
                mc.epsilons
                    .iter()
                    .map(|&eps| {
                        sac_modulus_estimate(
                            f,
                            &grid.elements[i],
                            &grid.element_ids[i],
                            eps,
                            &grid.t_values,
                            mc,
                            i as u64,
                        )
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect(),
        None => Vec::new(),
    };
    let moduli_found = moduli.iter().all(ModulusEntry::found);
    let bounded = bounded_witness.is_none();
    let passed = bounded && moduli_found && conditions.iter().all(|c| c.passed);
    Ok(DefectReport {
        family_id: f.id().to_string(),
        rows,
        summary: PbamSummary { conditions, bounded, bounded_witness, zero_image_max, moduli_found, passed },
        moduli,
    })
}
