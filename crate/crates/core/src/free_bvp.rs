//! Constant-coefficient weighted equation `∂ₜv = i∂ₓ²v − 2iβ∂ₓv + iβ²v`
//! posed as a two-point problem: `P₋v(0) = f`, `P₊v(T) = g`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spacetime::SpaceTimeField;
use crate::spectral::{project, Grid1D, Sign, SpectralField};

pub const MAGNIFICATION_CAP: f64 = 1e12;
const PURITY_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct FreeBvpData {
    pub f: SpectralField,
    pub g: SpectralField,
    pub beta: f64,
    pub horizon: f64,
    pub times: Vec<f64>,
}

/// Reject `h` unless it lies in the range of `P_sign`.
pub fn check_projected(h: &SpectralField, sign: Sign, name: &str) -> Result<()> {
    let off = (h - &project(h, sign)).l2_norm();
    if off > PURITY_TOL * h.l2_norm() {
        return Err(Error::Data(format!(
            "{name} is not in the range of P{}: off-side mass {off:.3e} of {:.3e}",
            match sign {
                Sign::Plus => "+",
                Sign::Minus => "-",
            },
            h.l2_norm()
        )));
    }
    Ok(())
}

impl FreeBvpData {
    pub fn new(f: SpectralField, g: SpectralField, beta: f64, horizon: f64, times: Vec<f64>) -> Result<Self> {
        f.grid().check_same(g.grid())?;
        check_projected(&f, Sign::Minus, "f")?;
        check_projected(&g, Sign::Plus, "g")?;
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Config(format!("beta must be positive, got {beta}")));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Config(format!("horizon must be positive, got {horizon}")));
        }
        if times
            .iter()
            .any(|&t| !(-1e-12 * horizon..=horizon * (1.0 + 1e-12)).contains(&t))
        {
            return Err(Error::Config(format!("output times must lie in [0, {horizon}]")));
        }
        Ok(Self {
            f,
            g,
            beta,
            horizon,
            times,
        })
    }

    pub fn grid(&self) -> &Grid1D {
        self.f.grid()
    }

    pub fn delta(&self) -> f64 {
        self.f.l2_norm() + self.g.l2_norm()
    }
}

/// Exponent of the `f`-term: `−iξ² − 2β|ξ| + iβ²`.
pub fn f_symbol(xi: f64, beta: f64) -> Complex64 {
    Complex64::new(-2.0 * beta * xi.abs(), beta * beta - xi * xi)
}

/// Exponent of the `g`-term: `−iξ² + 2β|ξ| + iβ²`, applied with `−(T − t)`.
pub fn g_symbol(xi: f64, beta: f64) -> Complex64 {
    Complex64::new(2.0 * beta * xi.abs(), beta * beta - xi * xi)
}

/// Exact solution at a single time.
pub fn free_slice(data: &FreeBvpData, fh: &[Complex64], gh: &[Complex64], t: f64) -> SpectralField {
    let grid = data.grid();
    let coeffs: Vec<Complex64> = grid
        .freqs()
        .iter()
        .zip(fh.iter().zip(gh))
        .map(|(&xi, (&a, &b))| {
            let mut out = Complex64::new(0.0, 0.0);
            if a != Complex64::new(0.0, 0.0) {
                out += a * (f_symbol(xi, data.beta) * t).exp();
            }
            if b != Complex64::new(0.0, 0.0) {
                out += b * (-g_symbol(xi, data.beta) * (data.horizon - t)).exp();
            }
            out
        })
        .collect();
    SpectralField::from_coeffs(grid, coeffs).expect("grid length")
}

pub fn solve_free(data: &FreeBvpData) -> Result<SpaceTimeField> {
    let fh = data.f.coeffs();
    let gh = data.g.coeffs();
    SpaceTimeField::from_fn(data.grid(), data.times.clone(), |_, t| free_slice(data, &fh, &gh, t))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreeEstimateReport {
    pub sup_norm: f64,
    pub datum_norm: f64,
    pub ratio: f64,
    pub argmax_time: f64,
}

/// `sup_t ‖v(t)‖₂ / (‖f‖₂ + ‖g‖₂)`; 0 for vanishing data.
pub fn verify_free_estimate(solution: &SpaceTimeField, data: &FreeBvpData) -> FreeEstimateReport {
    let norms = solution.norms();
    let (k, sup) = norms
        .iter()
        .enumerate()
        .fold((0, 0.0), |acc, (k, &v)| if v > acc.1 { (k, v) } else { acc });
    let datum_norm = data.delta();
    let ratio = if datum_norm > 0.0 { sup / datum_norm } else { 0.0 };
    FreeEstimateReport {
        sup_norm: sup,
        datum_norm,
        ratio,
        argmax_time: solution.times()[k],
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeGrowth {
    pub xi: f64,
    pub magnification: f64,
    pub predicted: f64,
    pub saturated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub beta: f64,
    pub t: f64,
    pub modes: Vec<ModeGrowth>,
    pub max_magnification: f64,
    pub saturated: bool,
}

impl GrowthReport {
    /// Entry for the grid frequency closest to `xi`.
    pub fn mode(&self, xi: f64) -> Option<&ModeGrowth> {
        self.modes
            .iter()
            .min_by(|a, b| (a.xi - xi).abs().total_cmp(&(b.xi - xi).abs()))
    }
}

/// Evolve `u0` forward by the unprojected symbol `−iξ² + 2βξ + iβ²` and
/// report per-mode magnification.
pub fn forward_growth_demo(u0: &SpectralField, beta: f64, t: f64) -> Result<GrowthReport> {
    if !(t >= 0.0 && t.is_finite()) || !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::Config(format!(
            "need t >= 0 and beta >= 0, got t = {t}, beta = {beta}"
        )));
    }
    let grid = u0.grid();
    let exponent = 2.0 * beta * grid.max_freq() * t;
    if exponent > f64::MAX_EXP as f64 * std::f64::consts::LN_2 * 0.95 {
        return Err(Error::Range(format!(
            "e^(2 beta xi_max t) = e^{exponent:.1} would overflow; reduce t"
        )));
    }
    let coeffs = u0.coeffs();
    let peak = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut modes = Vec::new();
    for (&xi, c) in grid.freqs().iter().zip(&coeffs) {
        if peak == 0.0 || c.norm() <= 1e-12 * peak {
            continue;
        }
        let sym = Complex64::new(2.0 * beta * xi, beta * beta - xi * xi);
        let evolved = c * (sym * t).exp();
        let raw = evolved.norm() / c.norm();
        let saturated = raw > MAGNIFICATION_CAP;
        modes.push(ModeGrowth {
            xi,
            magnification: raw.min(MAGNIFICATION_CAP),
            predicted: (2.0 * beta * xi * t).exp().min(MAGNIFICATION_CAP),
            saturated,
        });
    }
    modes.sort_by(|a, b| a.xi.total_cmp(&b.xi));
    let max_magnification = modes.iter().map(|m| m.magnification).fold(0.0, f64::max);
    let saturated = modes.iter().any(|m| m.saturated);
    Ok(GrowthReport {
        beta,
        t,
        modes,
        max_magnification,
        saturated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_field, FieldKind};
    use crate::spacetime::uniform_times;

    fn gaussian(g: &Grid1D, sign: Sign) -> SpectralField {
        project(
            &SpectralField::from_fn(g, |x| Complex64::new((-x * x / 2.0).exp(), 0.0)),
            sign,
        )
    }

    #[test]
    fn boundary_data_reproduced() {
        let g = Grid1D::new(256, 20.0).unwrap();
        let f = gaussian(&g, Sign::Minus);
        let gg = gaussian(&g, Sign::Plus);
        let d = FreeBvpData::new(f.clone(), gg.clone(), 1.0, 0.5, uniform_times(0.0, 0.5, 10)).unwrap();
        let v = solve_free(&d).unwrap();
        assert!((&project(v.first(), Sign::Minus) - &f).l2_norm() <= 1e-12 * f.l2_norm());
        assert!((&project(v.last(), Sign::Plus) - &gg).l2_norm() <= 1e-12 * gg.l2_norm());
    }

    #[test]
    fn norm_matches_symbol_and_decreases() {
        let g = Grid1D::new(256, 20.0).unwrap();
        let f = gaussian(&g, Sign::Minus);
        let d = FreeBvpData::new(
            f.clone(),
            SpectralField::zeros(&g),
            1.0,
            1.0,
            uniform_times(0.0, 1.0, 20),
        )
        .unwrap();
        let v = solve_free(&d).unwrap();
        let fh = f.coeffs();
        let n = g.n() as f64;
        let mut prev = f64::INFINITY;
        for (k, &t) in v.times().iter().enumerate() {
            let oracle: f64 = fh
                .iter()
                .zip(g.freqs())
                .map(|(c, &xi)| c.norm_sqr() * (-4.0 * t * xi.abs()).exp())
                .sum::<f64>()
                * g.dx()
                / n;
            let got = v.slice(k).l2_norm();
            assert!((got - oracle.sqrt()).abs() <= 1e-12 * f.l2_norm());
            assert!(got <= prev + 1e-15);
            prev = got;
        }
    }

    #[test]
    fn single_mode_modulus() {
        let g = Grid1D::new(128, 10.0).unwrap();
        let m = -7i64;
        let xi0 = std::f64::consts::PI * m as f64 / 10.0;
        let f = SpectralField::from_fn(&g, |x| Complex64::new(0.0, xi0 * x).exp());
        let d = FreeBvpData::new(f, SpectralField::zeros(&g), 0.7, 1.0, uniform_times(0.0, 1.0, 5)).unwrap();
        let v = solve_free(&d).unwrap();
        for (k, &t) in v.times().iter().enumerate() {
            let expect = (-2.0 * 0.7 * xi0.abs() * t).exp();
            assert!(v.slice(k).values().iter().all(|z| (z.norm() - expect).abs() < 1e-12));
        }
    }

    #[test]
    fn estimate_ratio() {
        let g = Grid1D::new(256, 20.0).unwrap();
        let f = gaussian(&g, Sign::Minus);
        let d = FreeBvpData::new(f, SpectralField::zeros(&g), 1.0, 1.0, uniform_times(0.0, 1.0, 8)).unwrap();
        let r = verify_free_estimate(&solve_free(&d).unwrap(), &d);
        assert!((r.ratio - 1.0).abs() < 1e-14);
        assert_eq!(r.argmax_time, 0.0);

        let z = SpectralField::zeros(&g);
        let d = FreeBvpData::new(z.clone(), z, 1.0, 1.0, uniform_times(0.0, 1.0, 4)).unwrap();
        assert_eq!(verify_free_estimate(&solve_free(&d).unwrap(), &d).ratio, 0.0);

        for seed in 0..4 {
            for &beta in &[0.5, 1.0, 2.0] {
                for &t in &[0.5, 1.0] {
                    let f = project(&random_field(&g, 60, FieldKind::Complex, true, seed), Sign::Minus);
                    let gg = project(&random_field(&g, 60, FieldKind::Complex, true, seed + 100), Sign::Plus);
                    let d = FreeBvpData::new(f, gg, beta, t, uniform_times(0.0, t, 16)).unwrap();
                    let r = verify_free_estimate(&solve_free(&d).unwrap(), &d);
                    assert!(r.ratio <= 1.0 + 1e-10, "{}", r.ratio);
                }
            }
        }
    }

    #[test]
    fn rejects_unprojected_data() {
        let g = Grid1D::new(64, 5.0).unwrap();
        let f = gaussian(&g, Sign::Plus);
        let z = SpectralField::zeros(&g);
        assert!(matches!(
            FreeBvpData::new(f, z, 1.0, 1.0, vec![0.0]),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn growth_demo() {
        let g = Grid1D::new(256, 8.0 * std::f64::consts::PI).unwrap();
        let xi0 = 5.0;
        let u = SpectralField::from_fn(&g, |x| Complex64::new(0.0, xi0 * x).exp());
        let r = forward_growth_demo(&u, 1.0, 0.1).unwrap();
        let m = r.mode(xi0).unwrap();
        assert!((m.xi - xi0).abs() < 1e-12);
        assert!((m.magnification - 1f64.exp()).abs() < 1e-6 * 1f64.exp());

        let d = SpectralField::from_fn(&g, |x| Complex64::new(0.0, -xi0 * x).exp());
        let r = forward_growth_demo(&d, 1.0, 0.1).unwrap();
        assert!((r.mode(-xi0).unwrap().magnification - (-1f64).exp()).abs() < 1e-12);

        let r = forward_growth_demo(&u, 0.0, 0.1).unwrap();
        assert!(r.modes.iter().all(|m| (m.magnification - 1.0).abs() < 1e-12));

        let r = forward_growth_demo(&u, 1.0, 3.0).unwrap();
        assert!(r.saturated);
        assert_eq!(r.max_magnification, MAGNIFICATION_CAP);
        assert!(matches!(forward_growth_demo(&u, 1.0, 100.0), Err(Error::Range(_))));
    }

    #[test]
    fn interior_smoothing_bound() {
        let g = Grid1D::new(256, 20.0).unwrap();
        let f = project(&random_field(&g, 100, FieldKind::Complex, true, 1), Sign::Minus);
        let gg = project(&random_field(&g, 100, FieldKind::Complex, true, 2), Sign::Plus);
        let (fh, gh) = (f.coeffs(), gg.coeffs());
        let d = FreeBvpData::new(f, gg, 1.0, 1.0, uniform_times(0.0, 1.0, 10)).unwrap();
        let v = solve_free(&d).unwrap();
        for (k, &t) in v.times().iter().enumerate() {
            let vh = v.slice(k).coeffs();
            let vp = project(v.slice(k), Sign::Plus).coeffs();
            for j in 0..g.n() {
                let xi = g.freqs()[j];
                let bound = (-2.0 * xi.abs() * t.min(1.0 - t)).exp() * (fh[j].norm() + gh[j].norm());
                assert!(vh[j].norm() <= bound * (1.0 + 1e-10) + 1e-13);
                if xi < 0.0 {
                    assert!(vp[j].norm() < 1e-12);
                }
            }
        }
    }
}
