//! Coefficients `(a, W)`, their norms, horizon selection and the Mizohata
//! index.

pub mod expr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use expr::Expr;

use crate::error::{Error, Result};
use crate::spectral::{Grid1D, SpectralField};

/// Scenario coefficient block as it appears in JSON configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSpec {
    pub a: String,
    #[serde(rename = "W")]
    pub w: String,
    pub lambda: f64,
    pub beta: f64,
}

#[derive(Clone, Debug)]
pub struct CoefficientField {
    a: Expr,
    da: Expr,
    d2a: Expr,
    w: Expr,
    lambda: f64,
    t_max: f64,
}

/// Samples of `a`, `∂ₓa`, `∂ₓ²a`, `W` at one time.
#[derive(Clone, Debug)]
pub struct CoefficientSample {
    pub t: f64,
    pub a: Vec<f64>,
    pub da: Vec<f64>,
    pub d2a: Vec<f64>,
    pub w: Vec<Complex64>,
}

impl CoefficientField {
    pub fn new(a: &str, w: &str, lambda: f64, t_max: f64) -> Result<Self> {
        let a = Expr::parse(a)?;
        let w = Expr::parse(w)?;
        if !(lambda >= 0.0) {
            return Err(Error::Config(format!(
                "ellipticity floor must be nonnegative, got {lambda}"
            )));
        }
        if !(t_max > 0.0) || !t_max.is_finite() {
            return Err(Error::Config(format!("time window must be positive, got {t_max}")));
        }
        let da = a.dx();
        let d2a = da.dx();
        Ok(Self {
            a,
            da,
            d2a,
            w,
            lambda,
            t_max,
        })
    }

    pub fn from_spec(spec: &CoefficientSpec, t_max: f64) -> Result<Self> {
        Self::new(&spec.a, &spec.w, spec.lambda, t_max)
    }

    pub fn constant(a0: f64, w0: f64, lambda: f64, t_max: f64) -> Result<Self> {
        Self::new(&format!("{a0:e}"), &format!("{w0:e}"), lambda, t_max)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn a_expr(&self) -> &Expr {
        &self.a
    }

    pub fn w_expr(&self) -> &Expr {
        &self.w
    }

    pub fn is_time_independent(&self) -> bool {
        !self.a.depends_on_t() && !self.w.depends_on_t()
    }

    pub fn is_constant_a(&self) -> bool {
        !self.a.depends_on_x() && !self.a.depends_on_t()
    }

    pub fn sample(&self, grid: &Grid1D, t: f64) -> Result<CoefficientSample> {
        let xs = grid.nodes();
        let s = CoefficientSample {
            t,
            a: self.a.sample_real(xs, t)?,
            da: self.da.sample_real(xs, t)?,
            d2a: self.d2a.sample_real(xs, t)?,
            w: self.w.sample(xs, t),
        };
        let finite = s.a.iter().chain(&s.da).chain(&s.d2a).all(|v| v.is_finite())
            && s.w.iter().all(|v| v.re.is_finite() && v.im.is_finite());
        if !finite {
            return Err(Error::Validation(format!("non-finite coefficient sample at t = {t}")));
        }
        Ok(s)
    }

    /// Check `a ≥ λ` and finiteness at every `(x, t)` on the given grid.
    pub fn validate(&self, grid: &Grid1D, times: &[f64]) -> Result<()> {
        for &t in times {
            let s = self.sample(grid, t)?;
            if let Some((i, v)) =
                s.a.iter()
                    .enumerate()
                    .find(|(_, v)| **v < self.lambda - 1e-12 * self.lambda.max(1.0))
            {
                return Err(Error::Validation(format!(
                    "a = {v} below the floor {} at (x, t) = ({}, {t})",
                    self.lambda,
                    grid.nodes()[i]
                )));
            }
        }
        Ok(())
    }
}

fn bracket(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

fn sup(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(0.0, f64::max)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NormBundle {
    pub beta: f64,
    pub times: Vec<f64>,
    pub triple_norm: f64,
    pub a_sup: Vec<f64>,
    pub da_sup: Vec<f64>,
    pub d2a_sup: Vec<f64>,
    pub w_sup: Vec<f64>,
    pub weighted_da_sup: Vec<f64>,
    pub weighted_d2a_sup: Vec<f64>,
    pub k_samples: Vec<f64>,
    pub c_samples: Vec<f64>,
    pub int_k: f64,
    pub int_c: f64,
}

/// Cumulative trapezoid integral, starting at 0.
pub fn cumulative_trapezoid(times: &[f64], values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    for i in 0..times.len() {
        if i > 0 {
            acc += 0.5 * (times[i] - times[i - 1]) * (values[i] + values[i - 1]);
        }
        out.push(acc);
    }
    out
}

impl NormBundle {
    /// Per-time norms `‖a‖, ‖∂a‖, ‖∂²a‖, ‖W‖, ‖⟨x⟩∂a‖, ‖⟨x⟩∂²a‖` already
    /// known; derive `K`, `c` and the integrals.
    pub fn from_sup_norms(
        beta: f64,
        times: Vec<f64>,
        a_sup: Vec<f64>,
        da_sup: Vec<f64>,
        d2a_sup: Vec<f64>,
        w_sup: Vec<f64>,
        weighted_da_sup: Vec<f64>,
        weighted_d2a_sup: Vec<f64>,
    ) -> Result<Self> {
        let n = times.len();
        for v in [&a_sup, &da_sup, &d2a_sup, &w_sup, &weighted_da_sup, &weighted_d2a_sup] {
            if v.len() != n {
                return Err(Error::Shape(format!("norm series of length {} vs {n} times", v.len())));
            }
            if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(Error::Validation("non-finite or negative norm sample".into()));
            }
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Shape("time grid must be strictly increasing".into()));
        }
        let k_samples: Vec<f64> = (0..n)
            .map(|i| d2a_sup[i] + beta * da_sup[i] + beta * beta * a_sup[i] + a_sup[i] + w_sup[i])
            .collect();
        let c_samples: Vec<f64> = (0..n)
            .map(|i| a_sup[i] + (1.0 + beta) * weighted_da_sup[i] + beta * weighted_d2a_sup[i])
            .collect();
        let last = |v: &[f64]| cumulative_trapezoid(&times, v).last().copied().unwrap_or(0.0);
        let triple_norm = last(&a_sup) + last(&weighted_da_sup) + last(&weighted_d2a_sup);
        let int_k = last(&k_samples);
        let int_c = last(&c_samples);
        Ok(Self {
            beta,
            times,
            triple_norm,
            a_sup,
            da_sup,
            d2a_sup,
            w_sup,
            weighted_da_sup,
            weighted_d2a_sup,
            k_samples,
            c_samples,
            int_k,
            int_c,
        })
    }

    pub fn cumulative_k(&self) -> Vec<f64> {
        cumulative_trapezoid(&self.times, &self.k_samples)
    }

    pub fn cumulative_c(&self) -> Vec<f64> {
        cumulative_trapezoid(&self.times, &self.c_samples)
    }

    /// Same bundle with `K` and `c` multiplied by constants.
    pub fn scaled(&self, k_factor: f64, c_factor: f64) -> Self {
        let mut out = self.clone();
        out.k_samples.iter_mut().for_each(|v| *v *= k_factor);
        out.c_samples.iter_mut().for_each(|v| *v *= c_factor);
        out.int_k *= k_factor;
        out.int_c *= c_factor;
        out
    }
}

pub fn norm_bundle(coeffs: &CoefficientField, grid: &Grid1D, beta: f64, times: &[f64]) -> Result<NormBundle> {
    if times.is_empty() {
        return Err(Error::Shape("empty time grid".into()));
    }
    let xs = grid.nodes();
    let n = times.len();
    let mut cols: [Vec<f64>; 6] = Default::default();
    for c in cols.iter_mut() {
        c.reserve(n);
    }
    for &t in times {
        let s = coeffs.sample(grid, t)?;
        cols[0].push(sup(s.a.iter().map(|v| v.abs())));
        cols[1].push(sup(s.da.iter().map(|v| v.abs())));
        cols[2].push(sup(s.d2a.iter().map(|v| v.abs())));
        cols[3].push(sup(s.w.iter().map(|v| v.norm())));
        cols[4].push(sup(s.da.iter().zip(xs).map(|(v, &x)| bracket(x) * v.abs())));
        cols[5].push(sup(s.d2a.iter().zip(xs).map(|(v, &x)| bracket(x) * v.abs())));
    }
    let [a, da, d2a, w, wda, wd2a] = cols;
    NormBundle::from_sup_norms(beta, times.to_vec(), a, da, d2a, w, wda, wd2a)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorizonSelection {
    pub horizon: f64,
    pub index: usize,
    pub int_k: f64,
    pub int_c: f64,
    /// `6 e^{4∫c} ∫K` at the selected horizon.
    pub contraction_factor: f64,
    pub delta: f64,
    /// The uncorrected condition `e^{4∫c} ≤ 2/3`, `∫K ≤ 1/8`.
    pub literal_satisfied: bool,
    pub window_end: f64,
}

fn horizon_ok(int_k: f64, int_c: f64) -> bool {
    6.0 * (4.0 * int_c).exp() * int_k <= 0.5 && int_k <= 0.125
}

/// Largest grid time `T > 0` with `6 e^{4∫₀ᵀc} ∫₀ᵀK ≤ 1/2` and
/// `∫₀ᵀK ≤ 1/8`.
pub fn select_horizon(bundle: &NormBundle, delta: f64) -> Result<HorizonSelection> {
    let ck = bundle.cumulative_k();
    let cc = bundle.cumulative_c();
    let times = &bundle.times;
    if times.len() < 2 {
        return Err(Error::Shape("horizon selection needs at least two times".into()));
    }
    let mut best = None;
    for i in 1..times.len() {
        if horizon_ok(ck[i], cc[i]) {
            best = Some(i);
        } else {
            break;
        }
    }
    let t0 = times[0];
    let window_end = *times.last().unwrap();
    let i = best.ok_or_else(|| Error::Horizon {
        window: window_end - t0,
        int_k: ck[1],
        int_c: cc[1],
    })?;
    let literal_satisfied = (4.0 * cc[i]).exp() <= 2.0 / 3.0 && ck[i] <= 0.125;
    Ok(HorizonSelection {
        horizon: times[i] - t0,
        index: i,
        int_k: ck[i],
        int_c: cc[i],
        contraction_factor: 6.0 * (4.0 * cc[i]).exp() * ck[i],
        delta,
        literal_satisfied,
        window_end,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MizohataVerdict {
    Bounded,
    Diverging,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MizohataReport {
    pub sup_value: f64,
    pub verdict: MizohataVerdict,
    pub growth_slope: f64,
    pub threshold: f64,
    pub radii: Vec<f64>,
    pub running_sup: Vec<f64>,
}

/// `sup_{x, ω=±1, 0<R≤R_max} |Im ∫₀ᴿ b(x+rω) ω dr|`, integrating along grid
/// lines without wrapping around the periodic box.
pub fn mizohata_index(b: &SpectralField, r_max: f64) -> Result<MizohataReport> {
    let grid = b.grid();
    let l = grid.half_length();
    if !(r_max > 0.0) || r_max > l {
        return Err(Error::Range(format!("R_max = {r_max} must lie in (0, L = {l}]")));
    }
    let dx = grid.dx();
    let n = grid.n();
    let im: Vec<f64> = b.values().iter().map(|v| v.im).collect();
    // prefix trapezoid C(i) = ∫_{x_0}^{x_i} Im b
    let mut c = vec![0.0; n];
    for i in 1..n {
        c[i] = c[i - 1] + 0.5 * dx * (im[i] + im[i - 1]);
    }
    let m_max = ((r_max / dx).floor() as usize).min(n - 1).max(1);
    // Both orientations give |C(i+m) - C(i)| over all admissible starting points.
    let mut radii = Vec::with_capacity(m_max);
    let mut running = Vec::with_capacity(m_max);
    let mut best: f64 = 0.0;
    for m in 1..=m_max {
        let s = (0..n - m).map(|i| (c[i + m] - c[i]).abs()).fold(0.0, f64::max);
        best = best.max(s);
        radii.push(m as f64 * dx);
        running.push(best);
    }
    let r_top = *radii.last().unwrap();
    let lo = r_top / 10.0;
    let (mut sx, mut sy, mut sxx, mut sxy, mut cnt) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&r, &s) in radii.iter().zip(&running) {
        if r >= lo {
            sx += r;
            sy += s;
            sxx += r * r;
            sxy += r * s;
            cnt += 1.0;
        }
    }
    let denom = cnt * sxx - sx * sx;
    let slope = if cnt >= 2.0 && denom > 0.0 {
        (cnt * sxy - sx * sy) / denom
    } else {
        0.0
    };
    let threshold = 0.1 * best / r_top;
    let verdict = if best > 0.0 && slope > threshold {
        MizohataVerdict::Diverging
    } else {
        MizohataVerdict::Bounded
    };
    Ok(MizohataReport {
        sup_value: best,
        verdict,
        growth_slope: slope,
        threshold,
        radii,
        running_sup: running,
    })
}
