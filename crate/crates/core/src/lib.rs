//! Numerical toolkit for quasi-unitary groups of seminormed *-algebras and
//! pointwise bounded asymptotic morphisms (PBAMs).
//!
//! The crate is organised bottom-up:
//!
//! * [`algebra`]: concrete seminormed *-algebras (matrices, truncated Fourier
//!   series on the circle, sampled paths), the quasi-product `a • b = a + b + ab`,
//!   quasi-inverses, quasi-unitaries and the canonical Fréchet metric.
//! * [`funcalc`]: the inverse square root calculus `ϑ(x) = (1+x)^{-1/2} - 1`
//!   and the quasi-polar retraction `a ↦ a • ϑ(a* • a)`.
//! * [`asymptotic`]: asymptotic families `f_t`, their PBAM defects, boundedness
//!   profiles and continuity moduli.
//! * [`unitary`]: threshold scans, the α function and the quasi-unitary
//!   representatives `f̃_α` with their connecting homotopies.
//! * [`composition`]: reparameterisations, composite families and the
//!   homotopy chains relating `(g ∘ f)~` to `g̃ ∘ f̃`.

pub mod algebra;
pub mod asymptotic;
pub mod composition;
pub mod error;
pub mod funcalc;
pub mod random;
pub mod unitary;

pub use algebra::{Algebra, Element, Payload};
pub use error::{Error, Result};
pub use funcalc::SqrtDomain;

/// Complex scalar used by every algebra instance.
pub type C64 = num_complex::Complex64;
