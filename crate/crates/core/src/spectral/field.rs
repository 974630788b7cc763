use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use super::Grid1D;
use crate::error::{Error, Result};

/// Complex samples on a [`Grid1D`], stored in physical space.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Grid1D,
    values: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: &Grid1D, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::Shape(format!(
                "{} samples for a grid of {} nodes",
                values.len(),
                grid.n()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    pub fn zeros(grid: &Grid1D) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![Complex64::new(0.0, 0.0); grid.n()],
        }
    }

    pub fn from_fn(grid: &Grid1D, f: impl Fn(f64) -> Complex64) -> Self {
        Self {
            grid: grid.clone(),
            values: grid.nodes().iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn from_real(grid: &Grid1D, values: &[f64]) -> Result<Self> {
        Self::new(grid, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    /// Build from unnormalized DFT coefficients in FFT order.
    pub fn from_coeffs(grid: &Grid1D, mut coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.n() {
            return Err(Error::Shape(format!(
                "{} coefficients for a grid of {} nodes",
                coeffs.len(),
                grid.n()
            )));
        }
        grid.inverse_in_place(&mut coeffs);
        Ok(Self {
            grid: grid.clone(),
            values: coeffs,
        })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Unnormalized DFT coefficients in FFT order.
    pub fn coeffs(&self) -> Vec<Complex64> {
        let mut buf = self.values.clone();
        self.grid.forward_in_place(&mut buf);
        buf
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    pub fn l2_norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `Σ |f̂_k|² dx / n`, equal to [`Self::norm_sq`] by Parseval.
    pub fn spectral_norm_sq(&self) -> f64 {
        let n = self.grid.n() as f64;
        self.coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.dx() / n
    }

    /// `∫ f conj(g) dx` by the rectangle rule (exact for trigonometric polynomials).
    pub fn inner(&self, other: &SpectralField) -> Complex64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b.conj())
            .sum::<Complex64>()
            * self.grid.dx()
    }

    pub fn mean(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() / self.grid.n() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `‖f‖_{L²(|x| > 3L/4)}`: mass near the periodic seam.
    pub fn boundary_mass(&self) -> f64 {
        let cut = 0.75 * self.grid.half_length();
        let s: f64 = self
            .grid
            .nodes()
            .iter()
            .zip(&self.values)
            .filter(|(x, _)| x.abs() > cut)
            .map(|(_, v)| v.norm_sqr())
            .sum();
        (s * self.grid.dx()).sqrt()
    }

    pub fn scale(&self, s: Complex64) -> SpectralField {
        self.map(|v| v * s)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> SpectralField {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise product without dealiasing.
    pub fn pointwise(&self, other: &SpectralField) -> Result<SpectralField> {
        self.grid.check_same(&other.grid)?;
        Ok(Self {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
        })
    }

    /// Pointwise product with a real sample array, without dealiasing.
    pub fn mul_real(&self, weights: &[f64]) -> Result<SpectralField> {
        if weights.len() != self.values.len() {
            return Err(Error::Shape(format!(
                "{} weights for a field of {} samples",
                weights.len(),
                self.values.len()
            )));
        }
        Ok(Self {
            grid: self.grid.clone(),
            values: self.values.iter().zip(weights).map(|(a, &w)| a * w).collect(),
        })
    }

    /// Pointwise product under the 2/3 rule: both factors and the result are
    /// truncated to the lower two thirds of the spectrum.
    pub fn product(&self, other: &SpectralField) -> Result<SpectralField> {
        self.grid.check_same(&other.grid)?;
        let a = self.dealiased();
        let b = other.dealiased();
        a.pointwise(&b).map(|p| p.dealiased())
    }

    pub fn dealiased(&self) -> SpectralField {
        let mut c = self.coeffs();
        self.grid.dealias_in_place(&mut c);
        Self::from_coeffs(&self.grid, c).expect("same length")
    }

    /// Largest relative deviation from `other` in L², using `other` as scale.
    pub fn rel_l2_diff(&self, other: &SpectralField) -> f64 {
        let d = (self - other).l2_norm();
        let s = other.l2_norm();
        if s == 0.0 {
            d
        } else {
            d / s
        }
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        assert_eq!(self.grid, rhs.grid, "grid mismatch in field addition");
        SpectralField {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&rhs.values).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        assert_eq!(self.grid, rhs.grid, "grid mismatch in field subtraction");
        SpectralField {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&rhs.values).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.map(|v| -v)
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: f64) -> SpectralField {
        self.map(|v| v * rhs)
    }
}

impl Mul<Complex64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: Complex64) -> SpectralField {
        self.scale(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_field, FieldKind};

    #[test]
    fn round_trip_and_parseval() {
        let g = Grid1D::new(256, 7.0).unwrap();
        for seed in 0..5 {
            let f = random_field(&g, 40, FieldKind::Complex, false, seed);
            let back = SpectralField::from_coeffs(&g, f.coeffs()).unwrap();
            assert!(back.rel_l2_diff(&f) < 1e-12);
            let rel = (f.norm_sq() - f.spectral_norm_sq()).abs() / f.norm_sq();
            assert!(rel < 1e-12, "parseval {rel}");
        }
    }

    #[test]
    fn shape_errors() {
        let g = Grid1D::new(64, 1.0).unwrap();
        let h = Grid1D::new(128, 1.0).unwrap();
        assert!(SpectralField::new(&g, vec![Complex64::new(0.0, 0.0); 3]).is_err());
        let a = SpectralField::zeros(&g);
        let b = SpectralField::zeros(&h);
        assert!(matches!(a.pointwise(&b), Err(Error::Shape(_))));
    }

    #[test]
    fn dealiased_product_is_exact_for_low_modes() {
        let g = Grid1D::new(64, std::f64::consts::PI).unwrap();
        let a = SpectralField::from_fn(&g, |x| Complex64::new(x.cos(), 0.0));
        let b = SpectralField::from_fn(&g, |x| Complex64::new((2.0 * x).sin(), 0.0));
        let p = a.product(&b).unwrap();
        let exact = SpectralField::from_fn(&g, |x| Complex64::new(x.cos() * (2.0 * x).sin(), 0.0));
        assert!((&p - &exact).max_abs() < 1e-13);
    }
}
