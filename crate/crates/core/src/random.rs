//! Seeded samplers for test elements, unitaries and quasi-unitary nets.
//!
//! Every sampler takes an explicit RNG; [`stream_rng`] derives independent,
//! reproducible streams so parallel sweeps do not depend on scheduling.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::algebra::{Algebra, AlgebraKind, CMat, Payload};
use crate::error::Result;
use crate::funcalc::{quasi_polar, SqrtDomain};
use crate::{Element, C64};

/// Highest Fourier mode used by random circle elements.
pub const CIRCLE_SAMPLE_DEGREE: usize = 3;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMat {
    DMatrix::from_fn(dim, dim, |_, _| complex_normal(rng))
}

/// Haar-distributed unitary from the QR factorisation of a Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMat {
    let qr = gaussian_matrix(rng, dim).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        q.column_mut(j).iter_mut().for_each(|x| *x *= phase);
    }
    q
}

fn raw_payload<R: Rng + ?Sized>(alg: &Algebra, rng: &mut R) -> Payload {
    match alg.kind() {
        AlgebraKind::Matrix { dim, .. } => Payload::Matrix(gaussian_matrix(rng, *dim)),
        AlgebraKind::Circle(space) => {
            let deg = CIRCLE_SAMPLE_DEGREE.min(space.degree_cap()) as i64;
            let mut c = vec![C64::new(0.0, 0.0); space.len()];
            for k in -deg..=deg {
                let decay = 1.0 / (1.0 + (k * k) as f64);
                c[space.slot(k).expect("within cap")] = complex_normal(rng) * decay;
            }
            Payload::Fourier(c)
        }
        AlgebraKind::Path { inner, nodes } => {
            // a0 + p a1: a continuous path.
            let a0 = raw_payload(inner, rng);
            let a1 = raw_payload(inner, rng);
            let e0 = inner.element(a0).expect("shape");
            let e1 = inner.element(a1).expect("shape");
            Payload::Path(
                (0..*nodes)
                    .map(|i| {
                        let p = i as f64 / (*nodes - 1) as f64;
                        inner
                            .add(&e0, &inner.scale(C64::new(p, 0.0), &e1).expect("owner"))
                            .expect("owner")
                            .into_payload()
                    })
                    .collect(),
            )
        }
    }
}

/// Rescales `a` so that `|a|_level = target` (zero stays zero).
pub fn normalize(alg: &Algebra, a: &Element, level: usize, target: f64) -> Result<Element> {
    let n = alg.seminorm(level, a)?;
    if n == 0.0 {
        return Ok(a.clone());
    }
    alg.scale(C64::new(target / n, 0.0), a)
}

/// Random element with `|a|_level` uniform in `(0, scale]`.
pub fn random_element<R: Rng + ?Sized>(alg: &Algebra, rng: &mut R, level: usize, scale: f64) -> Result<Element> {
    let a = alg.element(raw_payload(alg, rng))?;
    let r: f64 = rng.random_range(0.05..=1.0);
    normalize(alg, &a, level, scale * r)
}

/// Random direction with `|a|_top = 1`.
pub fn random_direction<R: Rng + ?Sized>(alg: &Algebra, rng: &mut R) -> Result<Element> {
    let a = alg.element(raw_payload(alg, rng))?;
    normalize(alg, &a, alg.levels() - 1, 1.0)
}

/// Random self-adjoint element with `|a|_level = norm`.
pub fn random_hermitian<R: Rng + ?Sized>(alg: &Algebra, rng: &mut R, level: usize, norm: f64) -> Result<Element> {
    let a = alg.element(raw_payload(alg, rng))?;
    let h = alg.scale(C64::new(0.5, 0.0), &alg.add(&a, &alg.star(&a)?)?)?;
    normalize(alg, &h, level, norm)
}

/// `W - 1` for a Haar unitary `W` acting on the leading `support × support` block.
pub fn supported_quasi_unitary<R: Rng + ?Sized>(alg: &Algebra, rng: &mut R, support: usize) -> Result<Element> {
    let dim = alg.matrix_dim().ok_or_else(|| crate::Error::Shape(alg.id().to_string()))?;
    let support = support.clamp(1, dim);
    let w = random_unitary(rng, support);
    let mut m = CMat::zeros(dim, dim);
    for i in 0..support {
        for j in 0..support {
            m[(i, j)] = w[(i, j)];
        }
        m[(i, i)] -= 1.0;
    }
    alg.from_matrix(m)
}

/// A quasi-unitary near a "known" one: the quasi-polar retraction of a small
/// perturbation of `W - 1` (matrices) or of `c e^{ikθ} - 1` (circle).
pub fn random_quasi_unitary<R: Rng + ?Sized>(alg: &Algebra, rng: &mut R, perturbation: f64) -> Result<Element> {
    let base = match alg.kind() {
        AlgebraKind::Matrix { dim, .. } => {
            let w = random_unitary(rng, *dim);
            alg.from_matrix(w - CMat::identity(*dim, *dim))?
        }
        AlgebraKind::Circle(space) => {
            let k = rng.random_range(-2i64..=2).clamp(-(space.degree_cap() as i64), space.degree_cap() as i64);
            let phase = C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
            let mut c = vec![C64::new(0.0, 0.0); space.len()];
            c[space.slot(k).expect("within cap")] += phase;
            c[space.slot(0).expect("within cap")] -= 1.0;
            alg.from_fourier(c)?
        }
        AlgebraKind::Path { inner, nodes } => {
            let u = random_quasi_unitary(inner, rng, 0.0)?;
            return alg.from_path(vec![u; *nodes]);
        }
    };
    if perturbation == 0.0 {
        return Ok(base);
    }
    let dir = random_direction(alg, rng)?;
    let a = alg.add(&base, &alg.scale(C64::new(perturbation, 0.0), &dir)?)?;
    quasi_polar(alg, &a, &SqrtDomain::for_algebra(alg))
}
