//! Seeded band-limited random fields for ensembles and property tests.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::spectral::{Grid1D, SpectralField};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    Complex,
    Real,
}

/// Field with i.i.d. Gaussian DFT coefficients on `|m| ≤ band`, normalized to
/// unit L² norm. The Nyquist mode is never populated.
pub fn random_field(grid: &Grid1D, band: usize, kind: FieldKind, zero_mean: bool, seed: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.n();
    let band = band.min(n / 2 - 1) as i64;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
    let draw = |rng: &mut ChaCha8Rng| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im)
    };
    match kind {
        FieldKind::Complex => {
            for (c, &m) in coeffs.iter_mut().zip(grid.wavenumbers()) {
                if m.abs() <= band && m != -(n as i64) / 2 {
                    *c = draw(&mut rng);
                }
            }
        }
        FieldKind::Real => {
            for m in 1..=band as usize {
                let z = draw(&mut rng);
                coeffs[m] = z;
                coeffs[n - m] = z.conj();
            }
            let z0: f64 = StandardNormal.sample(&mut rng);
            coeffs[0] = Complex64::new(z0, 0.0);
        }
    }
    if zero_mean {
        coeffs[0] = Complex64::new(0.0, 0.0);
    }
    let mut f = SpectralField::from_coeffs(grid, coeffs).expect("length n");
    if kind == FieldKind::Real {
        f.values_mut().iter_mut().for_each(|v| v.im = 0.0);
    }
    let norm = f.l2_norm();
    if norm > 0.0 {
        f = &f * (1.0 / norm);
    }
    f
}

/// Real-valued band-limited field shifted so that its minimum equals `floor`.
pub fn random_positive_coefficient(grid: &Grid1D, band: usize, amplitude: f64, floor: f64, seed: u64) -> Vec<f64> {
    let f = random_field(grid, band, FieldKind::Real, true, seed);
    let peak = f.max_abs().max(f64::MIN_POSITIVE);
    let vals: Vec<f64> = f.values().iter().map(|v| amplitude * v.re / peak).collect();
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    vals.iter().map(|v| v - min + floor).collect()
}
