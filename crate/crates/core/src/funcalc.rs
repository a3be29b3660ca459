//! Inverse square root calculus on self-adjoint elements and the quasi-polar
//! retraction onto the quasi-unitaries.
//!
//! `ϑ(x) = (1+x)^{-1/2} - 1` is applied through a Hermitian eigendecomposition
//! for matrices and pointwise for functions. The Taylor expansion of `ϑ` has
//! no constant term and is kept as an independent oracle.

use serde::{Deserialize, Serialize};

use crate::algebra::{Algebra, AlgebraKind, MatrixNorm, Payload};
use crate::error::{Error, Result};
use crate::{Element, C64};

pub const DEFAULT_RADIUS: f64 = 0.5;
pub const SELF_ADJOINT_TOL: f64 = 1e-10;

/// Convex open neighbourhood `V = {a = a*, |a|_level < radius}` on which `ϑ` is defined.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqrtDomain {
    pub algebra: String,
    pub norm_level: usize,
    pub radius: f64,
    pub self_adjoint_tol: f64,
}

impl SqrtDomain {
    /// Radius 1/2 measured in the level that carries the Banach (or sup) norm.
    pub fn for_algebra(alg: &Algebra) -> Self {
        Self {
            algebra: alg.id().to_string(),
            norm_level: sup_level(alg),
            radius: DEFAULT_RADIUS,
            self_adjoint_tol: SELF_ADJOINT_TOL,
        }
    }

    pub fn with_radius(mut self, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius <= 1.0) {
            return Err(Error::OutsideSqrtDomain(format!("radius {radius} must lie in (0, 1]")));
        }
        self.radius = radius;
        Ok(self)
    }

    fn membership(&self, alg: &Algebra, a: &Element) -> Result<(f64, f64)> {
        if alg.id() != self.algebra {
            return Err(Error::OwnerMismatch { expected: self.algebra.clone(), found: alg.id().into() });
        }
        let skew = alg.top_seminorm(&alg.sub(a, &alg.star(a)?)?)?;
        let norm = alg.seminorm(self.norm_level, a)?;
        Ok((skew, norm))
    }

    fn require(&self, alg: &Algebra, a: &Element, what: &str) -> Result<()> {
        let (skew, norm) = self.membership(alg, a)?;
        if skew > self.self_adjoint_tol {
            return Err(Error::OutsideSqrtDomain(format!("{what} is not self-adjoint (|a - a*| = {skew:e})")));
        }
        if !(norm < self.radius) {
            return Err(Error::OutsideSqrtDomain(format!(
                "{what} has |a|_{} = {norm} >= {}",
                self.norm_level, self.radius
            )));
        }
        Ok(())
    }

    /// Membership test; elements of other algebras are simply outside.
    pub fn contains(&self, alg: &Algebra, a: &Element) -> bool {
        self.require(alg, a, "element").is_ok()
    }
}

fn sup_level(alg: &Algebra) -> usize {
    match alg.kind() {
        AlgebraKind::Matrix { norm: MatrixNorm::Tracial, .. } => 1,
        AlgebraKind::Matrix { .. } | AlgebraKind::Circle(_) => 0,
        AlgebraKind::Path { inner, .. } => sup_level(inner),
    }
}

pub fn in_domain(alg: &Algebra, a: &Element, domain: &SqrtDomain) -> bool {
    domain.contains(alg, a)
}

fn theta_scalar(x: f64) -> f64 {
    1.0 / (1.0 + x).sqrt() - 1.0
}

/// Applies a real function to a self-adjoint payload.
fn apply_hermitian(alg: &Algebra, p: &Payload, f: &impl Fn(f64) -> f64) -> Payload {
    match (alg.kind(), p) {
        (AlgebraKind::Matrix { .. }, Payload::Matrix(m)) => {
            if m.iter().all(|x| *x == C64::new(0.0, 0.0)) && f(0.0) == 0.0 {
                return Payload::Matrix(m.map(|_| C64::new(0.0, 0.0)));
            }
            let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
            let eig = h.symmetric_eigen();
            let vecs = eig.eigenvectors;
            let mut scaled = vecs.clone();
            for (j, lam) in eig.eigenvalues.iter().enumerate() {
                let fl = f(*lam);
                scaled.column_mut(j).iter_mut().for_each(|x| *x *= fl);
            }
            Payload::Matrix(scaled * vecs.adjoint())
        }
        (AlgebraKind::Circle(space), Payload::Fourier(c)) => {
            if c.iter().all(|x| *x == C64::new(0.0, 0.0)) && f(0.0) == 0.0 {
                return Payload::Fourier(vec![C64::new(0.0, 0.0); c.len()]);
            }
            let values = space.values(c).into_iter().map(|v| C64::new(f(v.re), 0.0)).collect();
            let coeffs = space.project(values);
            let n = coeffs.len();
            Payload::Fourier((0..n).map(|i| (coeffs[i] + coeffs[n - 1 - i].conj()) * 0.5).collect())
        }
        (AlgebraKind::Path { inner, .. }, Payload::Path(v)) => {
            Payload::Path(v.iter().map(|x| apply_hermitian(inner, x, f)).collect())
        }
        _ => unreachable!("payload shapes are validated by the owning algebra"),
    }
}

/// `ϑ(a) = (1+a)^{-1/2} - 1` for `a ∈ V`.
pub fn theta(alg: &Algebra, a: &Element, domain: &SqrtDomain) -> Result<Element> {
    domain.require(alg, a, "argument of theta")?;
    alg.element(apply_hermitian(alg, a.payload(), &theta_scalar))
}

/// Truncated binomial series of `ϑ` together with a bound on the discarded tail.
#[derive(Clone, Debug)]
pub struct TaylorTheta {
    pub value: Element,
    /// `Σ_{k>terms} |C(-1/2,k)| r^k` with `r = |a|_top`; a norm bound for
    /// instances whose levels are all submultiplicative.
    pub remainder_bound: f64,
}

/// `C(-1/2, k)` for `k = 0..=terms`.
pub fn binomial_minus_half(terms: usize) -> Vec<f64> {
    let mut c = Vec::with_capacity(terms + 1);
    c.push(1.0);
    for k in 1..=terms {
        let prev = c[k - 1];
        c.push(prev * (-0.5 - (k - 1) as f64) / k as f64);
    }
    c
}

pub fn theta_taylor(alg: &Algebra, a: &Element, terms: usize) -> Result<TaylorTheta> {
    let r = alg.top_seminorm(a)?;
    if r >= 1.0 {
        return Err(Error::Divergent(r));
    }
    let coeffs = binomial_minus_half(terms + 1);
    let tail = coeffs[terms + 1].abs() * r.powi(terms as i32 + 1) / (1.0 - r);
    if terms == 0 {
        return Ok(TaylorTheta { value: alg.zero(), remainder_bound: tail });
    }
    // Unit-free Horner: w_N = c_N a, w_k = c_k a + a w_{k+1}.
    let mut acc = alg.scale(C64::new(coeffs[terms], 0.0), a)?;
    for k in (1..terms).rev() {
        let lead = alg.scale(C64::new(coeffs[k], 0.0), a)?;
        acc = alg.add(&lead, &alg.mul(a, &acc)?)?;
    }
    Ok(TaylorTheta { value: acc, remainder_bound: tail })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InverseSqrtReport {
    /// `|a • ϑ(a) - ϑ(a) • a|`
    pub commutation: f64,
    /// `|a • (ϑ(a) • ϑ(a))|`
    pub annihilation: f64,
    /// `max(|a • a'|, |a' • a|)` for the computed quasi-inverse, if any.
    pub inverse_residual: Option<f64>,
    /// `|ϑ(0)|`
    pub theta_zero: f64,
    pub passed: [bool; 4],
}

impl InverseSqrtReport {
    pub fn all_passed(&self) -> bool {
        self.passed.iter().all(|p| *p)
    }

    pub fn max_defect(&self) -> f64 {
        self.commutation
            .max(self.annihilation)
            .max(self.inverse_residual.unwrap_or(f64::INFINITY))
            .max(self.theta_zero)
    }
}

/// Checks the four inverse-square-root conditions at `a`, measured in the top seminorm.
pub fn verify_inverse_sqrt(alg: &Algebra, a: &Element, domain: &SqrtDomain, tol: f64) -> Result<InverseSqrtReport> {
    let th = theta(alg, a, domain)?;
    let top = |x: &Element| alg.top_seminorm(x);
    let commutation = top(&alg.sub(&alg.quasi_product(a, &th)?, &alg.quasi_product(&th, a)?)?)?;
    let annihilation = top(&alg.quasi_product(a, &alg.quasi_product(&th, &th)?)?)?;
    let inverse_residual = match alg.quasi_inverse(a) {
        Ok(inv) => Some(top(&alg.quasi_product(a, &inv)?)?.max(top(&alg.quasi_product(&inv, a)?)?)),
        Err(Error::NotQuasiInvertible) => None,
        Err(e) => return Err(e),
    };
    let theta_zero = top(&theta(alg, &alg.zero(), domain)?)?;
    let passed = [
        commutation <= tol,
        annihilation <= tol,
        inverse_residual.is_some_and(|r| r <= tol),
        theta_zero <= tol,
    ];
    Ok(InverseSqrtReport { commutation, annihilation, inverse_residual, theta_zero, passed })
}

/// `a • ϑ(weight · (a* • a))`, requiring `a* • a ∈ V` and `a • a* ∈ V`.
///
/// Every retraction in the crate goes through this function so that equal
/// parameters give bit-identical results.
pub fn weighted_polar(alg: &Algebra, a: &Element, weight: f64, domain: &SqrtDomain) -> Result<Element> {
    if !(0.0..=1.0).contains(&weight) {
        return Err(Error::OutsideSqrtDomain(format!("weight {weight} outside [0, 1]")));
    }
    let a_star = alg.star(a)?;
    let left = alg.quasi_product(&a_star, a)?;
    let right = alg.quasi_product(a, &a_star)?;
    domain.require(alg, &left, "a* • a")?;
    domain.require(alg, &right, "a • a*")?;
    let scaled = alg.element(scale_real(left.payload(), weight))?;
    let th = alg.element(apply_hermitian(alg, scaled.payload(), &theta_scalar))?;
    alg.quasi_product(a, &th)
}

/// The quasi-polar retraction `a • ϑ(a* • a)`, a quasi-unitary.
pub fn quasi_polar(alg: &Algebra, a: &Element, domain: &SqrtDomain) -> Result<Element> {
    weighted_polar(alg, a, 1.0, domain)
}

fn scale_real(p: &Payload, w: f64) -> Payload {
    match p {
        Payload::Matrix(m) => Payload::Matrix(m.map(|x| x * w)),
        Payload::Fourier(c) => Payload::Fourier(c.iter().map(|x| x * w).collect()),
        Payload::Path(v) => Payload::Path(v.iter().map(|x| scale_real(x, w)).collect()),
    }
}

#[cfg(test)]
mod tests;
