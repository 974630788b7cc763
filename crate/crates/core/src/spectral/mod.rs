//! Uniform periodic grid, discrete Fourier transforms and Fourier-multiplier
//! operators.
//!
//! The real line is replaced by the torus `[-L, L)`. Every operator used by the
//! solver and by the verification suite is diagonal in frequency, so each one
//! is represented as a [`Multiplier`] acting on the unnormalized DFT of a
//! [`SpectralField`].

mod field;
pub mod io;
pub mod littlewood_paley;
mod multiplier;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub use field::SpectralField;
pub use littlewood_paley::{lp_block, DyadicRange, LpKind};
pub use multiplier::{FracKind, Multiplier, Sign};

use crate::error::{Error, Result};

/// Uniform grid on `[-L, L)` with `n` nodes and the matching DFT plans.
///
/// Cloning is cheap; the node, frequency and plan tables are shared.
#[derive(Clone)]
pub struct Grid1D {
    inner: Arc<GridInner>,
}

struct GridInner {
    n: usize,
    half_length: f64,
    dx: f64,
    nodes: Vec<f64>,
    // FFT order: m = 0, 1, .., n/2 - 1, -n/2, .., -1
    wavenumbers: Vec<i64>,
    freqs: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Grid1D {
    pub fn new(n: usize, half_length: f64) -> Result<Self> {
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::Grid(format!("n = {n} must be a power of two >= 16")));
        }
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(Error::Grid(format!("half length L = {half_length} must be positive")));
        }
        let dx = 2.0 * half_length / n as f64;
        let nodes = (0..n).map(|j| -half_length + j as f64 * dx).collect();
        let wavenumbers: Vec<i64> = (0..n as i64)
            .map(|k| if k < n as i64 / 2 { k } else { k - n as i64 })
            .collect();
        let freqs = wavenumbers.iter().map(|&m| PI * m as f64 / half_length).collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        Ok(Self {
            inner: Arc::new(GridInner {
                n,
                half_length,
                dx,
                nodes,
                wavenumbers,
                freqs,
                forward,
                inverse,
            }),
        })
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    pub fn half_length(&self) -> f64 {
        self.inner.half_length
    }

    pub fn dx(&self) -> f64 {
        self.inner.dx
    }

    pub fn nodes(&self) -> &[f64] {
        &self.inner.nodes
    }

    /// Angular frequencies `ξ_k = π m / L` in FFT order.
    pub fn freqs(&self) -> &[f64] {
        &self.inner.freqs
    }

    /// Integer wavenumbers `m ∈ [-n/2, n/2)` in FFT order.
    pub fn wavenumbers(&self) -> &[i64] {
        &self.inner.wavenumbers
    }

    /// Index of the unpaired mode `m = -n/2`.
    pub fn nyquist_index(&self) -> usize {
        self.inner.n / 2
    }

    /// Largest resolved `|ξ|`, attained by the Nyquist mode.
    pub fn max_freq(&self) -> f64 {
        PI * (self.inner.n / 2) as f64 / self.inner.half_length
    }

    /// Smallest nonzero `|ξ|`.
    pub fn min_freq(&self) -> f64 {
        PI / self.inner.half_length
    }

    /// Whether wavenumber `m` survives the 2/3-rule truncation.
    pub fn dealias_keeps(&self, m: i64) -> bool {
        3 * m.unsigned_abs() < self.inner.n as u64
    }

    /// Unnormalized forward DFT in place.
    pub fn forward_in_place(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.inner.n);
        self.inner.forward.process(buf);
    }

    /// Inverse DFT in place, including the `1/n` normalization.
    pub fn inverse_in_place(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.inner.n);
        self.inner.inverse.process(buf);
        let scale = 1.0 / self.inner.n as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
    }

    /// Zero the top third of the spectrum in place.
    pub fn dealias_in_place(&self, coeffs: &mut [Complex64]) {
        for (c, &m) in coeffs.iter_mut().zip(self.wavenumbers()) {
            if !self.dealias_keeps(m) {
                *c = Complex64::new(0.0, 0.0);
            }
        }
    }

    pub(crate) fn check_same(&self, other: &Grid1D) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "grid mismatch: (n = {}, L = {}) vs (n = {}, L = {})",
                self.n(),
                self.half_length(),
                other.n(),
                other.half_length()
            )))
        }
    }
}

impl PartialEq for Grid1D {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.n == other.inner.n && self.inner.half_length.to_bits() == other.inner.half_length.to_bits())
    }
}

impl fmt::Debug for Grid1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid1D")
            .field("n", &self.inner.n)
            .field("half_length", &self.inner.half_length)
            .finish()
    }
}

pub fn apply_multiplier(f: &SpectralField, m: &Multiplier) -> Result<SpectralField> {
    m.apply(f)
}

/// Restriction to `sgn ξ = sign`. The zero and Nyquist modes belong to neither side.
pub fn project(f: &SpectralField, sign: Sign) -> SpectralField {
    Multiplier::projection(f.grid(), sign)
        .apply(f)
        .expect("multiplier built on the field's own grid")
}

/// Hilbert transform with symbol `i sgn ξ`.
pub fn hilbert(f: &SpectralField) -> SpectralField {
    Multiplier::hilbert(f.grid())
        .apply(f)
        .expect("multiplier built on the field's own grid")
}

/// `D^s` (symbol `|ξ|^s`) or `J^s` (symbol `(1 + ξ²)^{s/2}`).
pub fn fractional(f: &SpectralField, s: f64, kind: FracKind) -> Result<SpectralField> {
    if kind == FracKind::D && s < 0.0 {
        let coeffs = f.coeffs();
        let scale = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if coeffs[0].norm() > 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Singular(format!(
                "D^{s} applied to a field with nonzero mean {:.3e}",
                coeffs[0].norm() / f.grid().n() as f64
            )));
        }
    }
    Multiplier::fractional(f.grid(), s, kind).apply(f)
}

/// Discrete `L^p` norm `(Σ |f(x_j)|^p dx)^{1/p}`; `p = ∞` gives the grid maximum.
pub fn lp_norm(f: &SpectralField, p: f64) -> Result<f64> {
    if p.is_nan() || p <= 1.0 {
        return Err(Error::Range(format!("L^p norm needs p > 1, got {p}")));
    }
    Ok(lp_norm_values(f.values(), f.grid().dx(), p))
}

pub(crate) fn lp_norm_values(values: &[Complex64], dx: f64, p: f64) -> f64 {
    if p.is_infinite() {
        return values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    }
    let peak = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return 0.0;
    }
    // scaled to avoid overflow for large p
    let sum: f64 = values.iter().map(|v| (v.norm() / peak).powf(p)).sum();
    peak * (sum * dx).powf(1.0 / p)
}

pub(crate) fn real_lp_norm(values: &[f64], dx: f64, p: f64) -> f64 {
    let c: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    lp_norm_values(&c, dx, p)
}
