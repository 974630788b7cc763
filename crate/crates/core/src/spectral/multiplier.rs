use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Grid1D, SpectralField};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn opposite(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

/// Homogeneous `D^s = |ξ|^s` or inhomogeneous `J^s = (1 + ξ²)^{s/2}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FracKind {
    D,
    J,
}

/// A Fourier symbol sampled at the grid frequencies (FFT order).
#[derive(Clone, Debug)]
pub struct Multiplier {
    grid: Grid1D,
    symbol: Vec<Complex64>,
    label: String,
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

impl Multiplier {
    /// Build from a function of `(ξ, m)` where `m` is the integer wavenumber.
    pub fn from_fn(grid: &Grid1D, label: impl Into<String>, f: impl Fn(f64, i64) -> Complex64) -> Self {
        let symbol = grid
            .freqs()
            .iter()
            .zip(grid.wavenumbers())
            .map(|(&xi, &m)| f(xi, m))
            .collect();
        Self {
            grid: grid.clone(),
            symbol,
            label: label.into(),
        }
    }

    pub fn from_symbol(grid: &Grid1D, label: impl Into<String>, symbol: Vec<Complex64>) -> Result<Self> {
        if symbol.len() != grid.n() {
            return Err(Error::Shape(format!(
                "symbol of length {} for a grid of {} nodes",
                symbol.len(),
                grid.n()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            symbol,
            label: label.into(),
        })
    }

    pub fn identity(grid: &Grid1D) -> Self {
        Self::from_fn(grid, "I", |_, _| ONE)
    }

    /// `∂_x^order`, symbol `(iξ)^order`. Odd orders vanish on the Nyquist mode.
    pub fn derivative(grid: &Grid1D, order: u32) -> Self {
        let nyq = -(grid.n() as i64) / 2;
        Self::from_fn(grid, format!("d^{order}"), move |xi, m| {
            if order % 2 == 1 && m == nyq {
                ZERO
            } else {
                Complex64::new(0.0, xi).powu(order)
            }
        })
    }

    /// `P±`: indicator of `sgn ξ = ±1`, zero and Nyquist modes excluded.
    pub fn projection(grid: &Grid1D, sign: Sign) -> Self {
        let nyq = -(grid.n() as i64) / 2;
        let label = match sign {
            Sign::Plus => "P+",
            Sign::Minus => "P-",
        };
        Self::from_fn(grid, label, move |_, m| {
            let keep = match sign {
                Sign::Plus => m > 0,
                Sign::Minus => m < 0 && m != nyq,
            };
            if keep {
                ONE
            } else {
                ZERO
            }
        })
    }

    /// `Π₀`: the zero mode together with the Nyquist mode.
    pub fn mean_projection(grid: &Grid1D) -> Self {
        let nyq = -(grid.n() as i64) / 2;
        Self::from_fn(grid, "Pi0", move |_, m| if m == 0 || m == nyq { ONE } else { ZERO })
    }

    /// Hilbert transform, symbol `i sgn ξ` (zero on the zero and Nyquist modes).
    pub fn hilbert(grid: &Grid1D) -> Self {
        let nyq = -(grid.n() as i64) / 2;
        Self::from_fn(grid, "H", move |_, m| {
            if m == 0 || m == nyq {
                ZERO
            } else {
                Complex64::new(0.0, m.signum() as f64)
            }
        })
    }

    /// `D^s` or `J^s`. For `D^s` with `s < 0` the zero mode symbol is set to 0.
    pub fn fractional(grid: &Grid1D, s: f64, kind: FracKind) -> Self {
        let label = match kind {
            FracKind::D => format!("D^{s}"),
            FracKind::J => format!("J^{s}"),
        };
        Self::from_fn(grid, label, move |xi, m| match kind {
            FracKind::D => {
                if m == 0 {
                    if s == 0.0 {
                        ONE
                    } else {
                        ZERO
                    }
                } else {
                    Complex64::new(xi.abs().powf(s), 0.0)
                }
            }
            FracKind::J => Complex64::new((1.0 + xi * xi).powf(0.5 * s), 0.0),
        })
    }

    /// `e^{-s ∂_x⁴}`, symbol `exp(-s ξ⁴)`.
    pub fn heat_quartic(grid: &Grid1D, s: f64) -> Result<Self> {
        if s.is_nan() || s < 0.0 {
            return Err(Error::Range(format!("quartic heat semigroup needs s >= 0, got {s}")));
        }
        Ok(Self::from_fn(grid, format!("exp(-{s} d^4)"), move |xi, _| {
            Complex64::new((-s * xi.powi(4)).exp(), 0.0)
        }))
    }

    /// 2/3-rule truncation.
    pub fn dealias(grid: &Grid1D) -> Self {
        let g = grid.clone();
        Self::from_fn(grid, "dealias", move |_, m| if g.dealias_keeps(m) { ONE } else { ZERO })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn symbol(&self) -> &[Complex64] {
        &self.symbol
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Symbol product; the composed operator applies `other` first.
    pub fn compose(&self, other: &Multiplier) -> Result<Multiplier> {
        self.grid.check_same(&other.grid)?;
        Ok(Multiplier {
            grid: self.grid.clone(),
            symbol: self.symbol.iter().zip(&other.symbol).map(|(a, b)| a * b).collect(),
            label: format!("{}*{}", self.label, other.label),
        })
    }

    pub fn scaled(&self, s: Complex64) -> Multiplier {
        Multiplier {
            grid: self.grid.clone(),
            symbol: self.symbol.iter().map(|a| a * s).collect(),
            label: format!("{s}*{}", self.label),
        }
    }

    pub fn sum(&self, other: &Multiplier) -> Result<Multiplier> {
        self.grid.check_same(&other.grid)?;
        Ok(Multiplier {
            grid: self.grid.clone(),
            symbol: self.symbol.iter().zip(&other.symbol).map(|(a, b)| a + b).collect(),
            label: format!("{}+{}", self.label, other.label),
        })
    }

    pub fn apply(&self, f: &SpectralField) -> Result<SpectralField> {
        self.grid.check_same(f.grid())?;
        let mut c = f.coeffs();
        self.apply_coeffs(&mut c);
        SpectralField::from_coeffs(&self.grid, c)
    }

    /// Multiply DFT coefficients in place.
    pub fn apply_coeffs(&self, coeffs: &mut [Complex64]) {
        debug_assert_eq!(coeffs.len(), self.symbol.len());
        coeffs.iter_mut().zip(&self.symbol).for_each(|(c, s)| *c *= s);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_field, FieldKind};
    use crate::spectral::{fractional, hilbert, project};
    use std::f64::consts::PI;

    fn grid() -> Grid1D {
        Grid1D::new(128, 4.0 * PI).unwrap()
    }

    #[test]
    fn identity_is_identity() {
        let g = grid();
        let f = random_field(&g, 40, FieldKind::Complex, false, 1);
        let out = Multiplier::identity(&g).apply(&f).unwrap();
        assert!(out.rel_l2_diff(&f) < 1e-15);
    }

    #[test]
    fn derivative_of_sine_is_cosine() {
        let g = grid();
        let f = SpectralField::from_fn(&g, |x| Complex64::new(x.sin(), 0.0));
        let d = Multiplier::derivative(&g, 1).apply(&f).unwrap();
        let c = SpectralField::from_fn(&g, |x| Complex64::new(x.cos(), 0.0));
        assert!((&d - &c).max_abs() < 1e-12);
    }

    #[test]
    fn composition_equals_sequential_application() {
        let g = grid();
        let f = random_field(&g, 50, FieldKind::Complex, false, 2);
        let m1 = Multiplier::fractional(&g, 0.7, FracKind::J);
        let m2 = Multiplier::derivative(&g, 3);
        let once = m1.compose(&m2).unwrap().apply(&f).unwrap();
        let twice = m1.apply(&m2.apply(&f).unwrap()).unwrap();
        assert!(once.rel_l2_diff(&twice) < 1e-12);
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let g = grid();
        let h = Grid1D::new(64, 1.0).unwrap();
        let f = SpectralField::zeros(&h);
        assert!(matches!(Multiplier::identity(&g).apply(&f), Err(Error::Shape(_))));
    }

    #[test]
    fn single_sided_mode_projects_cleanly() {
        let g = grid();
        let xi0 = g.freqs()[5];
        let f = SpectralField::from_fn(&g, |x| Complex64::new(0.0, xi0 * x).exp());
        assert!(project(&f, Sign::Plus).rel_l2_diff(&f) < 1e-13);
        assert!(project(&f, Sign::Minus).l2_norm() < 1e-13);
    }

    #[test]
    fn hilbert_of_cosine() {
        let g = grid();
        let k = 3.0;
        let f = SpectralField::from_fn(&g, |x| Complex64::new((k * x).cos(), 0.0));
        let h = hilbert(&f);
        let expected = SpectralField::from_fn(&g, |x| Complex64::new(-(k * x).sin(), 0.0));
        assert!((&h - &expected).max_abs() < 1e-12);
        let c = SpectralField::from_fn(&g, |_| Complex64::new(2.5, 0.0));
        assert!(hilbert(&c).max_abs() < 1e-15);
    }

    #[test]
    fn fractional_on_a_mode() {
        let g = grid();
        let k = g.freqs()[7];
        let f = SpectralField::from_fn(&g, |x| Complex64::new(0.0, -k * x).exp());
        let d = fractional(&f, 1.0, FracKind::D).unwrap();
        assert!((&d - &(&f * k.abs())).max_abs() < 1e-12);
        let j0 = fractional(&f, 0.0, FracKind::J).unwrap();
        assert!(j0.rel_l2_diff(&f) < 1e-15);
    }

    #[test]
    fn heat_quartic_rejects_negative_time() {
        let g = grid();
        assert!(matches!(Multiplier::heat_quartic(&g, -1e-3), Err(Error::Range(_))));
    }
}
