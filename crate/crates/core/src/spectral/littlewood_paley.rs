//! Smooth dyadic frequency blocks.
//!
//! Everything is built from one radial bump `ψ`, equal to 1 on `[-1, 1]` and
//! supported in `[-2, 2]`:
//!
//! | block | symbol at `ζ = 2^{-k} ξ` | support            | identically 1 on |
//! |-------|--------------------------|--------------------|------------------|
//! | `Q`   | `η(ζ) = ψ(ζ) - ψ(2ζ)`    | `±(1/2, 2)`        |                  |
//! | `Q̃`   | `ψ(ζ/4) - ψ(8ζ)`         | `±(1/8, 8)`        | `±[1/4, 4]`      |
//! | `P`   | `ψ(8ζ)`                  | `(-1/4, 1/4)`      | `ζ = 0`          |
//! | `P̃`   | `ψ(ζ/10)`                | `[-20, 20]`        | `[-10, 10]`      |
//!
//! `Σ_k η(2^{-k}ξ)` telescopes to 1 for every `ξ ≠ 0`, and
//! `Σ_{j ≤ k-3} η(2^{-j}ξ) = ψ(2^{3-k}ξ)` is exactly the `P` block.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Grid1D, Multiplier, SpectralField};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpKind {
    Q,
    QTilde,
    P,
    PTilde,
}

/// `0` for `t ≤ 0`, `1` for `t ≥ 1`, C^∞ in between.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        a / (a + b)
    }
}

pub fn psi(xi: f64) -> f64 {
    1.0 - smooth_step(xi.abs() - 1.0)
}

pub fn eta(xi: f64) -> f64 {
    psi(xi) - psi(2.0 * xi)
}

pub fn eta_tilde(xi: f64) -> f64 {
    psi(xi / 4.0) - psi(8.0 * xi)
}

pub fn p_low(xi: f64) -> f64 {
    psi(8.0 * xi)
}

pub fn p_tilde(xi: f64) -> f64 {
    psi(xi / 10.0)
}

impl LpKind {
    pub fn profile(self, zeta: f64) -> f64 {
        match self {
            LpKind::Q => eta(zeta),
            LpKind::QTilde => eta_tilde(zeta),
            LpKind::P => p_low(zeta),
            LpKind::PTilde => p_tilde(zeta),
        }
    }
}

/// Dyadic indices `k` whose block `Q_k` is nonzero on some grid frequency.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DyadicRange {
    pub k_min: i32,
    pub k_max: i32,
}

impl DyadicRange {
    pub fn of(grid: &Grid1D) -> Self {
        Self {
            k_min: grid.min_freq().log2().floor() as i32,
            k_max: grid.max_freq().log2().ceil() as i32,
        }
    }

    pub fn contains(&self, k: i32) -> bool {
        (self.k_min..=self.k_max).contains(&k)
    }

    pub fn iter(&self) -> impl Iterator<Item = i32> {
        self.k_min..=self.k_max
    }
}

pub fn lp_multiplier(grid: &Grid1D, k: i32, kind: LpKind) -> Result<Multiplier> {
    let range = DyadicRange::of(grid);
    if !range.contains(k) {
        return Err(Error::Range(format!(
            "dyadic index {k} outside the resolvable range [{}, {}]",
            range.k_min, range.k_max
        )));
    }
    let scale = 2f64.powi(-k);
    Ok(Multiplier::from_fn(grid, format!("{kind:?}_{k}"), move |xi, _| {
        Complex64::new(kind.profile(scale * xi), 0.0)
    }))
}

pub fn lp_block(f: &SpectralField, k: i32, kind: LpKind) -> Result<SpectralField> {
    lp_multiplier(f.grid(), k, kind)?.apply(f)
}
