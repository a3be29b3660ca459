//! Concrete seminormed *-algebras and the quasi-group operations.
//!
//! Three instance families are provided: full matrix algebras `M_k(ℂ)`, a
//! truncated Fourier model of `C^∞(S¹)` and sampled path algebras
//! `C([0,1], B)`. Every instance exposes a finite, non-decreasing family of
//! seminorms satisfying
//!
//! ```text
//! |a|_n <= |a|_{n+1},   |a*|_n <= |a|_{n+1},   |ab|_n <= |a|_{n+1} |b|_{n+1}.
//! ```

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::C64;

pub mod circle;

use circle::{conjugate_reflect, convolve_truncated, CircleSpace};

pub type CMat = DMatrix<C64>;

pub const DEFAULT_LEVELS: usize = 6;
pub const MIN_LEVELS: usize = 4;

/// Relative singularity threshold for `1 + a` in matrix quasi-inversion.
const SINGULAR_RTOL: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixNorm {
    /// Every level is the operator norm.
    Operator,
    /// Level 0 is the normalised Hilbert-Schmidt norm `sqrt(tr(a*a)/k)`,
    /// higher levels are the operator norm.
    Tracial,
}

#[derive(Clone, Debug)]
pub enum AlgebraKind {
    Matrix { dim: usize, norm: MatrixNorm },
    Circle(Arc<CircleSpace>),
    Path { inner: Arc<Algebra>, nodes: usize },
}

#[derive(Clone, Debug)]
pub struct Algebra {
    id: Arc<str>,
    levels: usize,
    kind: AlgebraKind,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    Matrix(CMat),
    /// Fourier coefficients `c_{-D} … c_D`.
    Fourier(Vec<C64>),
    /// Values at the uniform nodes `p_i = i / (nodes - 1)`.
    Path(Vec<Payload>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Element {
    algebra: Arc<str>,
    payload: Payload,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuasiUnitaryCheck {
    pub quasi_unitary: bool,
    /// `max(|u* • u|_n, |u • u*|_n)` over all exposed levels.
    pub defect: f64,
}

impl Payload {
    fn zip_with(&self, other: &Payload, op: &impl Fn(C64, C64) -> C64) -> Payload {
        match (self, other) {
            (Payload::Matrix(a), Payload::Matrix(b)) => Payload::Matrix(a.zip_map(b, op)),
            (Payload::Fourier(a), Payload::Fourier(b)) => {
                Payload::Fourier(a.iter().zip(b).map(|(x, y)| op(*x, *y)).collect())
            }
            (Payload::Path(a), Payload::Path(b)) => {
                Payload::Path(a.iter().zip(b).map(|(x, y)| x.zip_with(y, op)).collect())
            }
            _ => unreachable!("payload shapes are validated by the owning algebra"),
        }
    }

    fn map(&self, op: &impl Fn(C64) -> C64) -> Payload {
        match self {
            Payload::Matrix(a) => Payload::Matrix(a.map(op)),
            Payload::Fourier(a) => Payload::Fourier(a.iter().map(|x| op(*x)).collect()),
            Payload::Path(a) => Payload::Path(a.iter().map(|x| x.map(op)).collect()),
        }
    }

    fn mul(&self, other: &Payload) -> Payload {
        match (self, other) {
            (Payload::Matrix(a), Payload::Matrix(b)) => Payload::Matrix(a * b),
            (Payload::Fourier(a), Payload::Fourier(b)) => Payload::Fourier(convolve_truncated(a, b)),
            (Payload::Path(a), Payload::Path(b)) => {
                Payload::Path(a.iter().zip(b).map(|(x, y)| x.mul(y)).collect())
            }
            _ => unreachable!("payload shapes are validated by the owning algebra"),
        }
    }

    fn adjoint(&self) -> Payload {
        match self {
            Payload::Matrix(a) => Payload::Matrix(a.adjoint()),
            Payload::Fourier(a) => Payload::Fourier(conjugate_reflect(a)),
            Payload::Path(a) => Payload::Path(a.iter().map(Payload::adjoint).collect()),
        }
    }

    /// Bitwise equality of every stored float.
    pub fn bits_eq(&self, other: &Payload) -> bool {
        let same = |x: &C64, y: &C64| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits();
        match (self, other) {
            (Payload::Matrix(a), Payload::Matrix(b)) => {
                a.shape() == b.shape() && a.iter().zip(b.iter()).all(|(x, y)| same(x, y))
            }
            (Payload::Fourier(a), Payload::Fourier(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| same(x, y))
            }
            (Payload::Path(a), Payload::Path(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.bits_eq(y))
            }
            _ => false,
        }
    }

    fn to_json(&self) -> Value {
        let pair = |c: &C64| json!([c.re, c.im]);
        match self {
            Payload::Matrix(m) => Value::Array(
                (0..m.nrows())
                    .map(|i| Value::Array((0..m.ncols()).map(|j| pair(&m[(i, j)])).collect()))
                    .collect(),
            ),
            Payload::Fourier(c) => Value::Array(c.iter().map(pair).collect()),
            Payload::Path(nodes) => Value::Array(nodes.iter().map(Payload::to_json).collect()),
        }
    }
}

impl Element {
    pub fn algebra_id(&self) -> &str {
        &self.algebra
    }

    pub fn payload(&self) -> &Payload {
        &self.payload
    }

    pub fn into_payload(self) -> Payload {
        self.payload
    }

    pub fn as_matrix(&self) -> Option<&CMat> {
        match &self.payload {
            Payload::Matrix(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_fourier(&self) -> Option<&[C64]> {
        match &self.payload {
            Payload::Fourier(c) => Some(c),
            _ => None,
        }
    }

    pub fn bits_eq(&self, other: &Element) -> bool {
        self.algebra == other.algebra && self.payload.bits_eq(&other.payload)
    }

    /// `{"algebra": id, "payload": [[re, im], …]}` nested per shape.
    pub fn to_json(&self) -> Value {
        json!({ "algebra": &*self.algebra, "payload": self.payload.to_json() })
    }
}

impl Algebra {
    pub fn matrix(dim: usize) -> Result<Self> {
        Self::matrix_with_norm(dim, MatrixNorm::Operator)
    }

    pub fn tracial_matrix(dim: usize) -> Result<Self> {
        Self::matrix_with_norm(dim, MatrixNorm::Tracial)
    }

    pub fn matrix_with_norm(dim: usize, norm: MatrixNorm) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidAlgebra("matrix dimension must be positive".into()));
        }
        let id = match norm {
            MatrixNorm::Operator => format!("M{dim}"),
            MatrixNorm::Tracial => format!("M{dim}:tracial"),
        };
        Ok(Self {
            id: id.into(),
            levels: DEFAULT_LEVELS,
            kind: AlgebraKind::Matrix { dim, norm },
        })
    }

    /// Truncated Fourier model of `C^∞(S¹)` with
    /// `|f|_n = 2^n max_{j<=n} sup_θ |f^{(j)}(θ)|`.
    ///
    /// The `2^n` weights make the product contract hold: Leibniz gives
    /// `sup|(fg)^{(j)}| <= 2^j p_j(f) p_j(g)`.
    pub fn smooth_circle(degree_cap: usize, levels: usize) -> Result<Self> {
        if degree_cap == 0 {
            return Err(Error::InvalidAlgebra("degree cap must be positive".into()));
        }
        check_levels(levels)?;
        Ok(Self {
            id: format!("Cinf(S1;{degree_cap})").into(),
            levels,
            kind: AlgebraKind::Circle(Arc::new(CircleSpace::new(degree_cap))),
        })
    }

    /// `C([0,1], inner)` sampled on `nodes` uniform points with the sup seminorms.
    pub fn path(inner: &Algebra, nodes: usize) -> Result<Self> {
        if nodes < 2 {
            return Err(Error::InvalidAlgebra("path algebra needs at least two nodes".into()));
        }
        Ok(Self {
            id: format!("C([0,1];{};{nodes})", inner.id).into(),
            levels: inner.levels,
            kind: AlgebraKind::Path { inner: Arc::new(inner.clone()), nodes },
        })
    }

    pub fn with_levels(mut self, levels: usize) -> Result<Self> {
        check_levels(levels)?;
        if let AlgebraKind::Path { inner, .. } = &self.kind {
            if levels > inner.levels {
                return Err(Error::InvalidAlgebra(format!(
                    "path algebra cannot expose more levels than its fibre ({})",
                    inner.levels
                )));
            }
        }
        self.levels = levels;
        Ok(self)
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into().into();
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn kind(&self) -> &AlgebraKind {
        &self.kind
    }

    pub fn matrix_dim(&self) -> Option<usize> {
        match self.kind {
            AlgebraKind::Matrix { dim, .. } => Some(dim),
            _ => None,
        }
    }

    pub fn circle(&self) -> Option<&CircleSpace> {
        match &self.kind {
            AlgebraKind::Circle(space) => Some(space),
            _ => None,
        }
    }

    pub fn path_fibre(&self) -> Option<&Algebra> {
        match &self.kind {
            AlgebraKind::Path { inner, .. } => Some(inner),
            _ => None,
        }
    }

    /// Node positions of a path algebra.
    pub fn path_nodes(&self) -> Option<Vec<f64>> {
        match self.kind {
            AlgebraKind::Path { nodes, .. } => {
                Some((0..nodes).map(|i| i as f64 / (nodes - 1) as f64).collect())
            }
            _ => None,
        }
    }

    fn zero_payload(&self) -> Payload {
        match &self.kind {
            AlgebraKind::Matrix { dim, .. } => Payload::Matrix(CMat::zeros(*dim, *dim)),
            AlgebraKind::Circle(space) => Payload::Fourier(vec![C64::new(0.0, 0.0); space.len()]),
            AlgebraKind::Path { inner, nodes } => Payload::Path(vec![inner.zero_payload(); *nodes]),
        }
    }

    pub fn zero(&self) -> Element {
        self.wrap(self.zero_payload())
    }

    /// `c · 1`: a multiple of the identity matrix, a constant function or a constant path.
    pub fn scalar(&self, c: C64) -> Element {
        self.wrap(self.scalar_payload(c))
    }

    fn scalar_payload(&self, c: C64) -> Payload {
        match &self.kind {
            AlgebraKind::Matrix { dim, .. } => Payload::Matrix(CMat::identity(*dim, *dim) * c),
            AlgebraKind::Circle(space) => {
                let mut coeffs = vec![C64::new(0.0, 0.0); space.len()];
                coeffs[space.degree_cap()] = c;
                Payload::Fourier(coeffs)
            }
            AlgebraKind::Path { inner, nodes } => Payload::Path(vec![inner.scalar_payload(c); *nodes]),
        }
    }

    fn wrap(&self, payload: Payload) -> Element {
        Element { algebra: self.id.clone(), payload }
    }

    fn shape_ok(&self, p: &Payload) -> bool {
        match (&self.kind, p) {
            (AlgebraKind::Matrix { dim, .. }, Payload::Matrix(m)) => m.nrows() == *dim && m.ncols() == *dim,
            (AlgebraKind::Circle(space), Payload::Fourier(c)) => c.len() == space.len(),
            (AlgebraKind::Path { inner, nodes }, Payload::Path(v)) => {
                v.len() == *nodes && v.iter().all(|x| inner.shape_ok(x))
            }
            _ => false,
        }
    }

    pub fn element(&self, payload: Payload) -> Result<Element> {
        if self.shape_ok(&payload) {
            Ok(self.wrap(payload))
        } else {
            Err(Error::Shape(self.id.to_string()))
        }
    }

    pub fn from_matrix(&self, m: CMat) -> Result<Element> {
        self.element(Payload::Matrix(m))
    }

    pub fn from_fourier(&self, coeffs: Vec<C64>) -> Result<Element> {
        self.element(Payload::Fourier(coeffs))
    }

    /// Builds a path element from fibre elements, one per node.
    pub fn from_path(&self, nodes: Vec<Element>) -> Result<Element> {
        let inner = self.path_fibre().ok_or_else(|| Error::Shape(self.id.to_string()))?;
        let payloads = nodes
            .into_iter()
            .map(|e| {
                inner.check(&e)?;
                Ok(e.payload)
            })
            .collect::<Result<Vec<_>>>()?;
        self.element(Payload::Path(payloads))
    }

    /// Value of a path element at node `i`, as an element of the fibre.
    pub fn path_node(&self, a: &Element, i: usize) -> Result<Element> {
        self.check(a)?;
        match (&self.kind, &a.payload) {
            (AlgebraKind::Path { inner, .. }, Payload::Path(v)) => v
                .get(i)
                .map(|p| inner.wrap(p.clone()))
                .ok_or_else(|| Error::Shape(self.id.to_string())),
            _ => Err(Error::Shape(self.id.to_string())),
        }
    }

    pub fn check(&self, a: &Element) -> Result<()> {
        if a.algebra != self.id {
            return Err(Error::OwnerMismatch {
                expected: self.id.to_string(),
                found: a.algebra.to_string(),
            });
        }
        if !self.shape_ok(&a.payload) {
            return Err(Error::Shape(self.id.to_string()));
        }
        Ok(())
    }

    pub fn add(&self, a: &Element, b: &Element) -> Result<Element> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.wrap(a.payload.zip_with(&b.payload, &|x, y| x + y)))
    }

    pub fn sub(&self, a: &Element, b: &Element) -> Result<Element> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.wrap(a.payload.zip_with(&b.payload, &|x, y| x - y)))
    }

    pub fn scale(&self, lambda: C64, a: &Element) -> Result<Element> {
        self.check(a)?;
        Ok(self.wrap(a.payload.map(&|x| lambda * x)))
    }

    pub fn mul(&self, a: &Element, b: &Element) -> Result<Element> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.wrap(a.payload.mul(&b.payload)))
    }

    pub fn star(&self, a: &Element) -> Result<Element> {
        self.check(a)?;
        Ok(self.wrap(a.payload.adjoint()))
    }

    /// `a • b = a + b + ab`.
    pub fn quasi_product(&self, a: &Element, b: &Element) -> Result<Element> {
        self.check(a)?;
        self.check(b)?;
        let ab = a.payload.mul(&b.payload);
        let sum = a.payload.zip_with(&b.payload, &|x, y| x + y);
        Ok(self.wrap(sum.zip_with(&ab, &|x, y| x + y)))
    }

    /// The `•`-inverse `a'` with `a • a' = a' • a = 0`, i.e. `(1+a)^{-1} - 1`.
    pub fn quasi_inverse(&self, a: &Element) -> Result<Element> {
        self.check(a)?;
        Ok(self.wrap(self.quasi_inverse_payload(&a.payload)?))
    }

    fn quasi_inverse_payload(&self, p: &Payload) -> Result<Payload> {
        match (&self.kind, p) {
            (AlgebraKind::Matrix { dim, .. }, Payload::Matrix(m)) => {
                let unit = CMat::identity(*dim, *dim);
                let shifted = &unit + m;
                let sv = shifted.singular_values();
                let smax = sv.iter().cloned().fold(0.0, f64::max);
                let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
                if !(smin > SINGULAR_RTOL * smax.max(1.0)) {
                    return Err(Error::NotQuasiInvertible);
                }
                let inv = shifted.lu().try_inverse().ok_or(Error::NotQuasiInvertible)?;
                Ok(Payload::Matrix(inv - unit))
            }
            (AlgebraKind::Circle(space), Payload::Fourier(c)) => {
                let mut values = space.values(c);
                let vmax = values.iter().map(|v| (v + 1.0).norm()).fold(0.0, f64::max);
                let vmin = values.iter().map(|v| (v + 1.0).norm()).fold(f64::INFINITY, f64::min);
                if !(vmin > SINGULAR_RTOL * vmax.max(1.0)) {
                    return Err(Error::NotQuasiInvertible);
                }
                for v in values.iter_mut() {
                    *v = (*v + 1.0).inv();
                }
                let mut coeffs = space.project(values);
                coeffs[space.degree_cap()] -= 1.0;
                Ok(Payload::Fourier(coeffs))
            }
            (AlgebraKind::Path { inner, .. }, Payload::Path(v)) => Ok(Payload::Path(
                v.iter().map(|x| inner.quasi_inverse_payload(x)).collect::<Result<_>>()?,
            )),
            _ => Err(Error::Shape(self.id.to_string())),
        }
    }

    pub fn is_quasi_unitary(&self, u: &Element, tol: f64) -> Result<QuasiUnitaryCheck> {
        let us = self.star(u)?;
        let left = self.top_seminorm(&self.quasi_product(&us, u)?)?;
        let right = self.top_seminorm(&self.quasi_product(u, &us)?)?;
        let defect = left.max(right);
        Ok(QuasiUnitaryCheck { quasi_unitary: defect <= tol, defect })
    }

    fn raw_seminorms(&self, p: &Payload) -> Vec<f64> {
        match (&self.kind, p) {
            (AlgebraKind::Matrix { dim, norm }, Payload::Matrix(m)) => {
                let op = operator_norm(m);
                let mut out = vec![op; self.levels];
                if *norm == MatrixNorm::Tracial {
                    out[0] = m.norm() / (*dim as f64).sqrt();
                }
                out
            }
            (AlgebraKind::Circle(space), Payload::Fourier(c)) => {
                let sups = space.derivative_sups(c, self.levels);
                let mut running = 0.0f64;
                sups.iter()
                    .enumerate()
                    .map(|(n, s)| {
                        running = running.max(*s);
                        running * f64::powi(2.0, n as i32)
                    })
                    .collect()
            }
            (AlgebraKind::Path { inner, .. }, Payload::Path(v)) => {
                let mut out = vec![0.0f64; self.levels];
                for node in v {
                    for (o, s) in out.iter_mut().zip(inner.raw_seminorms(node)) {
                        *o = o.max(s);
                    }
                }
                out
            }
            _ => unreachable!("payload shapes are validated by the owning algebra"),
        }
    }

    /// All seminorm levels `|a|_0 … |a|_{count-1}`, non-decreasing by construction.
    pub fn seminorms(&self, a: &Element) -> Result<Vec<f64>> {
        self.check(a)?;
        let mut out = self.raw_seminorms(&a.payload);
        for n in 1..out.len() {
            out[n] = out[n].max(out[n - 1]);
        }
        Ok(out)
    }

    pub fn seminorm(&self, level: usize, a: &Element) -> Result<f64> {
        if level >= self.levels {
            return Err(Error::LevelOutOfRange { level, count: self.levels });
        }
        Ok(self.seminorms(a)?[level])
    }

    pub fn top_seminorm(&self, a: &Element) -> Result<f64> {
        Ok(*self.seminorms(a)?.last().expect("at least one level"))
    }

    /// `d(a,b) = Σ_n 2^{-n} min(1, |a-b|_n)`.
    pub fn distance(&self, a: &Element, b: &Element) -> Result<f64> {
        let diff = self.sub(a, b)?;
        Ok(self
            .seminorms(&diff)?
            .iter()
            .enumerate()
            .map(|(n, s)| f64::powi(0.5, n as i32) * s.min(1.0))
            .sum())
    }

    /// Margin `RHS - LHS` of
    /// `|b*•b - c*•c|_n <= 2|b-c|_{n+2} (1 + |b|_{n+2} + |b-c|_{n+2})`.
    pub fn square_difference_margin(&self, b: &Element, c: &Element, level: usize) -> Result<f64> {
        if level + 2 >= self.levels {
            return Err(Error::LevelOutOfRange { level, count: self.levels });
        }
        let bb = self.quasi_product(&self.star(b)?, b)?;
        let cc = self.quasi_product(&self.star(c)?, c)?;
        let lhs = self.seminorm(level, &self.sub(&bb, &cc)?)?;
        let diff = self.seminorm(level + 2, &self.sub(b, c)?)?;
        let bn = self.seminorm(level + 2, b)?;
        Ok(2.0 * diff * (1.0 + bn + diff) - lhs)
    }

    pub fn element_from_json(&self, value: &Value) -> Result<Element> {
        let owner = value
            .get("algebra")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Json("missing `algebra`".into()))?;
        if owner != &*self.id {
            return Err(Error::OwnerMismatch { expected: self.id.to_string(), found: owner.into() });
        }
        let payload = value.get("payload").ok_or_else(|| Error::Json("missing `payload`".into()))?;
        let payload = self.payload_from_json(payload)?;
        self.element(payload)
    }

    fn payload_from_json(&self, v: &Value) -> Result<Payload> {
        let array = |v: &Value| v.as_array().cloned().ok_or_else(|| Error::Json("expected an array".into()));
        match &self.kind {
            AlgebraKind::Matrix { dim, .. } => {
                let rows = array(v)?;
                let mut m = CMat::zeros(*dim, *dim);
                if rows.len() != *dim {
                    return Err(Error::Shape(self.id.to_string()));
                }
                for (i, row) in rows.iter().enumerate() {
                    let row = array(row)?;
                    if row.len() != *dim {
                        return Err(Error::Shape(self.id.to_string()));
                    }
                    for (j, entry) in row.iter().enumerate() {
                        m[(i, j)] = complex_from_json(entry)?;
                    }
                }
                Ok(Payload::Matrix(m))
            }
            AlgebraKind::Circle(_) => Ok(Payload::Fourier(
                array(v)?.iter().map(complex_from_json).collect::<Result<_>>()?,
            )),
            AlgebraKind::Path { inner, .. } => Ok(Payload::Path(
                array(v)?.iter().map(|x| inner.payload_from_json(x)).collect::<Result<_>>()?,
            )),
        }
    }
}

fn check_levels(levels: usize) -> Result<()> {
    if levels < MIN_LEVELS {
        return Err(Error::InvalidAlgebra(format!("at least {MIN_LEVELS} seminorm levels are required")));
    }
    Ok(())
}

fn complex_from_json(v: &Value) -> Result<C64> {
    match v.as_array().map(Vec::as_slice) {
        Some([re, im]) => match (re.as_f64(), im.as_f64()) {
            (Some(re), Some(im)) => Ok(C64::new(re, im)),
            _ => Err(Error::Json("complex entries must be numbers".into())),
        },
        _ => Err(Error::Json("complex entries are [re, im] pairs".into())),
    }
}

/// Largest singular value.
pub fn operator_norm(m: &CMat) -> f64 {
    if m.iter().all(|x| x.re == 0.0 && x.im == 0.0) {
        return 0.0;
    }
    m.singular_values().iter().cloned().fold(0.0, f64::max)
}
