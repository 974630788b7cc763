//! The exponential weight `φ_β` and its logarithmic derivative `ϕ = φ'/φ`.
//!
//! In truncated mode `φ = exp(β h(x))`, where `h` vanishes for `x ≤ 0`, equals
//! `x` for `x ≥ X := 10β`, and on `[0, X]` is `X·H(x/X)` with the degree-9
//! Hermite polynomial
//!
//! `H(s) = 70 s⁵ − 224 s⁶ + 280 s⁷ − 160 s⁸ + 35 s⁹`,
//!
//! which has four vanishing derivatives at `s = 0`, `H(1) = H'(1) = 1` and
//! `H''(1) = H'''(1) = H''''(1) = 0`. Hence `φ ∈ C⁴` and `ϕ = β H'(x/X)`
//! interpolates between 0 and `β`, peaking near `1.79 β`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Grid1D, Multiplier, SpectralField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    Truncated,
    PureExponential,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightDirection {
    Apply,
    Invert,
}

/// Transition length in units of `β`.
pub const TRANSITION_FACTOR: f64 = 10.0;

const H_COEFFS: [f64; 5] = [70.0, -224.0, 280.0, -160.0, 35.0];

fn poly_deriv(s: f64, order: u32) -> f64 {
    // Σ c_i s^{5+i}, differentiated `order` times.
    H_COEFFS
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let p = 5 + i as i32;
            if order as i32 > p {
                return 0.0;
            }
            let falling: f64 = (0..order as i32).map(|j| (p - j) as f64).product();
            c * falling * s.powi(p - order as i32)
        })
        .sum()
}

/// Pointwise formulas for `h`, its derivatives, `φ` and `ϕ`.
#[derive(Clone, Copy, Debug)]
pub struct WeightShape {
    pub beta: f64,
    pub mode: WeightMode,
}

impl WeightShape {
    fn transition(&self) -> f64 {
        TRANSITION_FACTOR * self.beta
    }

    /// `log φ(x) / β`.
    pub fn exponent(&self, x: f64) -> f64 {
        match self.mode {
            WeightMode::PureExponential => x,
            WeightMode::Truncated => {
                let xt = self.transition();
                if x <= 0.0 {
                    0.0
                } else if x >= xt {
                    x
                } else {
                    xt * poly_deriv(x / xt, 0)
                }
            }
        }
    }

    pub fn phi(&self, x: f64) -> f64 {
        (self.beta * self.exponent(x)).exp()
    }

    /// `∂_x^order ϕ(x)` for `order ≤ 3`.
    pub fn logderiv(&self, x: f64, order: u32) -> f64 {
        match self.mode {
            WeightMode::PureExponential => {
                if order == 0 {
                    self.beta
                } else {
                    0.0
                }
            }
            WeightMode::Truncated => {
                let xt = self.transition();
                if x <= 0.0 {
                    0.0
                } else if x >= xt {
                    if order == 0 {
                        self.beta
                    } else {
                        0.0
                    }
                } else {
                    self.beta * poly_deriv(x / xt, order + 1) / xt.powi(order as i32)
                }
            }
        }
    }

    /// `e^{βx} / φ(x)`, bounded in both modes.
    pub fn exp_ratio(&self, x: f64) -> f64 {
        (self.beta * (x - self.exponent(x))).exp()
    }
}

/// Sampled weight on a grid.
#[derive(Clone, Debug)]
pub struct WeightProfile {
    shape: WeightShape,
    grid: Grid1D,
    phi: Vec<f64>,
    logderiv: Vec<f64>,
    logderiv_derivs: [Vec<f64>; 3],
    sup_logderiv: f64,
    monotone: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSummary {
    pub beta: f64,
    pub mode: WeightMode,
    pub sup_logderiv: f64,
    pub monotone: bool,
}

impl WeightProfile {
    pub fn build(beta: f64, grid: &Grid1D, mode: WeightMode) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::Config(format!("weight needs beta > 0, got {beta}")));
        }
        let shape = WeightShape { beta, mode };
        let xt = TRANSITION_FACTOR * beta;
        if mode == WeightMode::Truncated && xt >= 0.75 * grid.half_length() {
            return Err(Error::Config(format!(
                "transition region [0, {xt}] does not fit inside |x| < 3L/4 = {}",
                0.75 * grid.half_length()
            )));
        }
        let nodes = grid.nodes();
        let phi: Vec<f64> = nodes.iter().map(|&x| shape.phi(x)).collect();
        let logderiv: Vec<f64> = nodes.iter().map(|&x| shape.logderiv(x, 0)).collect();
        let logderiv_derivs = [1, 2, 3].map(|k| nodes.iter().map(|&x| shape.logderiv(x, k)).collect());
        let sup_logderiv = logderiv.iter().cloned().fold(0.0, f64::max);

        let monotone = match mode {
            WeightMode::PureExponential => true,
            WeightMode::Truncated => {
                let inside: Vec<f64> = nodes
                    .iter()
                    .filter(|&&x| x > 0.0 && x < xt)
                    .map(|&x| shape.exponent(x))
                    .collect();
                inside.windows(2).all(|w| w[1] > w[0])
                    && nodes
                        .iter()
                        .filter(|&&x| x > 0.0 && x < xt)
                        .all(|&x| shape.logderiv(x, 0) > 0.0)
            }
        };
        if !monotone {
            return Err(Error::Construction(format!(
                "weight with beta = {beta} is not strictly increasing on the sampled transition"
            )));
        }
        Ok(Self {
            shape,
            grid: grid.clone(),
            phi,
            logderiv,
            logderiv_derivs,
            sup_logderiv,
            monotone,
        })
    }

    /// `φ ≡ 1`, `ϕ ≡ 0`; only for exercising the unweighted equation.
    #[cfg(test)]
    pub(crate) fn flat(grid: &Grid1D) -> Self {
        let n = grid.n();
        Self {
            shape: WeightShape {
                beta: 0.0,
                mode: WeightMode::PureExponential,
            },
            grid: grid.clone(),
            phi: vec![1.0; n],
            logderiv: vec![0.0; n],
            logderiv_derivs: [vec![0.0; n], vec![0.0; n], vec![0.0; n]],
            sup_logderiv: 0.0,
            monotone: true,
        }
    }

    pub fn beta(&self) -> f64 {
        self.shape.beta
    }

    pub fn mode(&self) -> WeightMode {
        self.shape.mode
    }

    pub fn shape(&self) -> WeightShape {
        self.shape
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    /// `ϕ` at the nodes.
    pub fn logderiv(&self) -> &[f64] {
        &self.logderiv
    }

    /// `∂_x^k ϕ` at the nodes, `k = 1, 2, 3`.
    pub fn logderiv_deriv(&self, k: usize) -> &[f64] {
        &self.logderiv_derivs[k - 1]
    }

    /// Measured `max ϕ`; all constant bookkeeping uses this rather than `β`.
    pub fn sup_logderiv(&self) -> f64 {
        self.sup_logderiv
    }

    pub fn monotone(&self) -> bool {
        self.monotone
    }

    /// `e^{βx} / φ(x)` at the nodes.
    pub fn exp_ratio(&self) -> Vec<f64> {
        self.grid.nodes().iter().map(|&x| self.shape.exp_ratio(x)).collect()
    }

    pub fn summary(&self) -> WeightSummary {
        WeightSummary {
            beta: self.beta(),
            mode: self.mode(),
            sup_logderiv: self.sup_logderiv,
            monotone: self.monotone,
        }
    }

    /// Max over nodes of the spectral second derivative of `∂_x ϕ`, i.e. of
    /// `∂_x⁴ log φ`. `∂_x ϕ` is compactly supported, so this is periodic-safe.
    pub fn fourth_log_derivative_max(&self) -> f64 {
        let f = SpectralField::from_real(&self.grid, self.logderiv_deriv(1)).expect("grid length");
        let d2 = Multiplier::derivative(&self.grid, 2).apply(&f).expect("same grid");
        d2.max_abs()
    }

    /// The pure exponential mode is only valid for data far from the seam.
    pub fn check_support(&self, field: &SpectralField, tol: f64) -> Result<()> {
        if self.mode() == WeightMode::PureExponential {
            let mass = field.boundary_mass();
            let scale = field.l2_norm().max(f64::MIN_POSITIVE);
            if mass > tol * scale {
                return Err(Error::Data(format!(
                    "pure exponential weight needs compact data: boundary mass {:.3e} (relative {:.3e}) exceeds {tol:.1e}",
                    mass,
                    mass / scale
                )));
            }
        }
        Ok(())
    }
}

pub fn weight_multiply(f: &SpectralField, w: &WeightProfile, direction: WeightDirection) -> Result<SpectralField> {
    f.grid().check_same(w.grid())?;
    let phi = w.phi();
    let values = f
        .values()
        .iter()
        .zip(phi)
        .map(|(&v, &p)| match direction {
            WeightDirection::Apply => v * p,
            WeightDirection::Invert => v / p,
        })
        .collect();
    SpectralField::new(f.grid(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_field, FieldKind};
    use num_complex::Complex64;

    fn grid() -> Grid1D {
        Grid1D::new(2048, 40.0).unwrap()
    }

    #[test]
    fn hermite_conditions() {
        for k in 0..=4 {
            assert_eq!(poly_deriv(0.0, k), 0.0);
        }
        assert!((poly_deriv(1.0, 0) - 1.0).abs() < 1e-13);
        assert!((poly_deriv(1.0, 1) - 1.0).abs() < 1e-13);
        for k in 2..=4 {
            assert!(poly_deriv(1.0, k).abs() < 1e-10, "H^({k})(1)");
        }
    }

    #[test]
    fn truncated_endpoints() {
        let g = grid();
        let w = WeightProfile::build(0.5, &g, WeightMode::Truncated).unwrap();
        let s = w.shape();
        assert_eq!(s.phi(-1.0), 1.0);
        assert_eq!(s.logderiv(-1.0, 0), 0.0);
        let e3 = 3f64.exp();
        assert!((s.phi(6.0) - e3).abs() < 1e-12 * e3);
        for (&x, (&p, &l)) in g.nodes().iter().zip(w.phi().iter().zip(w.logderiv())) {
            if x <= 0.0 {
                assert_eq!(p, 1.0);
                assert_eq!(l, 0.0);
            } else if x >= 5.0 {
                assert!((p - (0.5 * x).exp()).abs() <= 1e-12 * p);
                assert_eq!(l, 0.5);
            }
        }
    }

    #[test]
    fn pure_exponential_logderiv_constant() {
        let w = WeightProfile::build(1.0, &grid(), WeightMode::PureExponential).unwrap();
        assert!(w.logderiv().iter().all(|&l| l == 1.0));
        assert_eq!(w.sup_logderiv(), 1.0);
    }

    #[test]
    fn logderiv_times_phi_is_phi_prime() {
        let s = WeightShape {
            beta: 1.0,
            mode: WeightMode::Truncated,
        };
        let h = 1e-3;
        for i in 1..200 {
            let x = i as f64 * 0.05;
            // five-point stencil
            let d = (-s.phi(x + 2.0 * h) + 8.0 * s.phi(x + h) - 8.0 * s.phi(x - h) + s.phi(x - 2.0 * h)) / (12.0 * h);
            let lhs = s.logderiv(x, 0) * s.phi(x);
            assert!((lhs - d).abs() <= 1e-8 * s.phi(x), "x = {x}: {lhs} vs {d}");
        }
    }

    #[test]
    fn sup_logderiv_within_two_beta() {
        for beta in [0.25, 0.5, 1.0, 2.0] {
            let w = WeightProfile::build(beta, &grid(), WeightMode::Truncated).unwrap();
            assert!(w.sup_logderiv() <= 2.0 * beta);
            assert!(w.sup_logderiv() > beta);
        }
    }

    #[test]
    fn transition_must_fit() {
        let g = Grid1D::new(256, 10.0).unwrap();
        assert!(matches!(
            WeightProfile::build(1.0, &g, WeightMode::Truncated),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            WeightProfile::build(0.0, &g, WeightMode::Truncated),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn fourth_derivative_converges() {
        let a = WeightProfile::build(1.0, &Grid1D::new(2048, 40.0).unwrap(), WeightMode::Truncated).unwrap();
        let b = WeightProfile::build(1.0, &Grid1D::new(4096, 40.0).unwrap(), WeightMode::Truncated).unwrap();
        let (ma, mb) = (a.fourth_log_derivative_max(), b.fourth_log_derivative_max());
        assert!(ma.is_finite() && mb.is_finite());
        assert!((ma - mb).abs() < 0.05 * mb, "{ma} vs {mb}");
    }

    #[test]
    fn multiply_and_divide() {
        let g = grid();
        let w = WeightProfile::build(1.0, &g, WeightMode::Truncated).unwrap();
        let f = random_field(&g, 200, FieldKind::Complex, false, 5);
        let v = weight_multiply(&f, &w, WeightDirection::Apply).unwrap();
        let back = weight_multiply(&v, &w, WeightDirection::Invert).unwrap();
        assert!(back.rel_l2_diff(&f) < 1e-12);

        let left = SpectralField::from_fn(&g, |x| {
            Complex64::new((-(x + 10.0).powi(2)).exp() * (x < 0.0) as u8 as f64, 0.0)
        });
        let same = weight_multiply(&left, &w, WeightDirection::Apply).unwrap();
        assert_eq!(same.values(), left.values());

        let x0 = 12.0;
        let bump = SpectralField::from_fn(&g, |x| Complex64::new((-(x - x0).powi(2) * 400.0).exp(), 0.0));
        let scaled = weight_multiply(&bump, &w, WeightDirection::Apply).unwrap();
        let j = g.nodes().iter().position(|&x| (x - x0).abs() < 0.5 * g.dx()).unwrap();
        let expected = bump.values()[j].re * g.nodes()[j].exp();
        assert!((scaled.values()[j].re - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn summary_serializes() {
        let w = WeightProfile::build(1.0, &grid(), WeightMode::Truncated).unwrap();
        let json = serde_json::to_value(w.summary()).unwrap();
        assert_eq!(json["mode"], "truncated");
        assert_eq!(json["monotone"], true);
    }
}
