//! Truncated Fourier model of `C^∞(S¹)`.
//!
//! An element is the coefficient vector `(c_{-D}, …, c_D)` of a trigonometric
//! polynomial of degree at most `D`. Products are truncated convolutions, so
//! they are exact whenever the degrees of the factors add up to at most `D`.
//! Pointwise maps (reciprocal, inverse square root) are applied on an
//! oversampled θ-grid and projected back onto the retained modes.

use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::C64;

/// Oversampling factor of the θ-grid relative to the degree cap.
pub const GRID_OVERSAMPLING: usize = 8;

pub struct CircleSpace {
    degree_cap: usize,
    grid: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for CircleSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CircleSpace")
            .field("degree_cap", &self.degree_cap)
            .field("grid", &self.grid)
            .finish()
    }
}

impl CircleSpace {
    pub fn new(degree_cap: usize) -> Self {
        let grid = (GRID_OVERSAMPLING * degree_cap).max(16);
        let mut planner = FftPlanner::new();
        Self {
            degree_cap,
            grid,
            forward: planner.plan_fft_forward(grid),
            inverse: planner.plan_fft_inverse(grid),
        }
    }

    pub fn degree_cap(&self) -> usize {
        self.degree_cap
    }

    pub fn grid_size(&self) -> usize {
        self.grid
    }

    pub fn len(&self) -> usize {
        2 * self.degree_cap + 1
    }

    /// Slot of mode `k` in a coefficient vector.
    pub fn slot(&self, k: i64) -> Option<usize> {
        let d = self.degree_cap as i64;
        (-d..=d).contains(&k).then(|| (k + d) as usize)
    }

    /// Values of the `order`-th derivative on the uniform θ-grid.
    pub fn derivative_values(&self, coeffs: &[C64], order: u32) -> Vec<C64> {
        let d = self.degree_cap as i64;
        let m = self.grid as i64;
        let mut buf = vec![C64::new(0.0, 0.0); self.grid];
        for (i, c) in coeffs.iter().enumerate() {
            let k = i as i64 - d;
            let factor = C64::new(0.0, k as f64).powu(order);
            buf[k.rem_euclid(m) as usize] += c * factor;
        }
        self.inverse.process(&mut buf);
        buf
    }

    pub fn values(&self, coeffs: &[C64]) -> Vec<C64> {
        self.derivative_values(coeffs, 0)
    }

    /// Projects grid values back onto the retained modes `|k| <= D`.
    pub fn project(&self, mut values: Vec<C64>) -> Vec<C64> {
        debug_assert_eq!(values.len(), self.grid);
        self.forward.process(&mut values);
        let d = self.degree_cap as i64;
        let m = self.grid as i64;
        let scale = 1.0 / self.grid as f64;
        (-d..=d)
            .map(|k| values[k.rem_euclid(m) as usize] * scale)
            .collect()
    }

    /// `max_{θ} |f^{(j)}(θ)|` on the grid for `j = 0..orders`.
    pub fn derivative_sups(&self, coeffs: &[C64], orders: usize) -> Vec<f64> {
        (0..orders)
            .map(|j| {
                self.derivative_values(coeffs, j as u32)
                    .iter()
                    .map(|v| v.norm())
                    .fold(0.0, f64::max)
            })
            .collect()
    }
}

/// Truncated convolution of two coefficient vectors of equal length `2D+1`.
pub fn convolve_truncated(a: &[C64], b: &[C64]) -> Vec<C64> {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len() as i64;
    let d = (n - 1) / 2;
    let mut out = vec![C64::new(0.0, 0.0); a.len()];
    for (i, x) in a.iter().enumerate() {
        if *x == C64::new(0.0, 0.0) {
            continue;
        }
        let ki = i as i64 - d;
        let lo = (-d).max(-d - ki);
        let hi = d.min(d - ki);
        for kj in lo..=hi {
            out[(ki + kj + d) as usize] += x * b[(kj + d) as usize];
        }
    }
    out
}

/// Coefficients of `f*`, i.e. `c_k ↦ conj(c_{-k})`.
pub fn conjugate_reflect(a: &[C64]) -> Vec<C64> {
    a.iter().rev().map(|c| c.conj()).collect()
}
