//! Regularized linear sub-problems
//! `∂ₜv = −ε∂ₓ⁴v + i∂ₓ(a∂ₓv) − 2iaϕ∂ₓv + F`, solved forward from `t = 0` or
//! backward from `t = T`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coefficients::CoefficientField;
use crate::error::{Error, Result};
use crate::spacetime::{uniform_times, SpaceTimeField};
use crate::spectral::{Grid1D, Multiplier, SpectralField};
use crate::weights::WeightProfile;

pub const DEFAULT_STEPS: usize = 2048;
pub const DEFAULT_EPSILON: f64 = 1e-3;
pub const STIFFNESS_CAP: f64 = 50.0;
const BLOWUP: f64 = 1e150;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    EtdRk4,
    DuhamelPicard,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepperConfig {
    pub epsilon: f64,
    /// Requested step; the horizon is split into `ceil(T / dt)` equal steps.
    pub dt: Option<f64>,
    pub scheme: Scheme,
    pub epsilon_schedule: Vec<f64>,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            dt: None,
            scheme: Scheme::EtdRk4,
            epsilon_schedule: vec![1e-2, 1e-3, 1e-4],
        }
    }
}

impl StepperConfig {
    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        Self {
            epsilon,
            ..self.clone()
        }
    }

    pub fn steps(&self, horizon: f64) -> Result<usize> {
        match self.dt {
            None => Ok(DEFAULT_STEPS),
            Some(dt) if dt > 0.0 && dt.is_finite() => Ok(((horizon / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize),
            Some(dt) => Err(Error::Config(format!("dt must be positive, got {dt}"))),
        }
    }

    pub fn validate(&self, grid: &Grid1D, horizon: f64) -> Result<usize> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Config(format!("horizon must be positive, got {horizon}")));
        }
        let steps = self.steps(horizon)?;
        let dt = horizon / steps as f64;
        let stiff = self.epsilon * grid.max_freq().powi(4) * dt;
        if stiff > STIFFNESS_CAP {
            return Err(Error::Config(format!(
                "epsilon xi_max^4 dt = {stiff:.3e} exceeds {STIFFNESS_CAP}; reduce dt or epsilon"
            )));
        }
        Ok(steps)
    }
}

#[derive(Clone, Debug)]
pub struct LinearProblem {
    pub direction: Direction,
    pub coeffs: CoefficientField,
    pub weight: WeightProfile,
    pub source: Option<SpaceTimeField>,
    pub datum: SpectralField,
    pub horizon: f64,
}

impl LinearProblem {
    fn validate(&self) -> Result<()> {
        self.datum.grid().check_same(self.weight.grid())?;
        if let Some(src) = &self.source {
            self.datum.grid().check_same(src.grid())?;
        }
        if !(self.horizon > 0.0) {
            return Err(Error::Config(format!("horizon must be positive, got {}", self.horizon)));
        }
        Ok(())
    }

    pub fn grid(&self) -> &Grid1D {
        self.datum.grid()
    }
}

/// `e^{-s∂ₓ⁴}`.
pub fn heat_quartic(f: &SpectralField, s: f64) -> Result<SpectralField> {
    Multiplier::heat_quartic(f.grid(), s)?.apply(f)
}

/// `max_ξ |ξ|^j e^{-sξ⁴}` over the grid frequencies.
pub fn smoothing_constant(grid: &Grid1D, j: u32, s: f64) -> f64 {
    grid.freqs()
        .iter()
        .map(|&xi| xi.abs().powi(j as i32) * (-s * xi.powi(4)).exp())
        .fold(0.0, f64::max)
}

/// `(j / 4e)^{j/4} s^{-j/4}`.
pub fn smoothing_oracle(j: u32, s: f64) -> f64 {
    let j = j as f64;
    (j / (4.0 * std::f64::consts::E)).powf(j / 4.0) * s.powf(-j / 4.0)
}

/// Whether `argmax |ξ|^j e^{-sξ⁴} = (j/4s)^{1/4}` sits well inside the grid
/// band and spans many grid frequencies.
pub fn smoothing_resolved(grid: &Grid1D, j: u32, s: f64) -> bool {
    let xi_star = (j as f64 / (4.0 * s)).powf(0.25);
    xi_star < 0.5 * grid.max_freq() && xi_star > 20.0 * grid.min_freq()
}

/// Coefficient samples at every half step `t_j = j dt / 2`.
#[derive(Clone, Debug)]
pub struct CoefficientCache {
    horizon: f64,
    steps: usize,
    constant: bool,
    abar: Vec<f64>,
    /// `a − ā`
    b1: Vec<Vec<f64>>,
    /// `aϕ`
    b2: Vec<Vec<f64>>,
}

impl CoefficientCache {
    pub fn build(coeffs: &CoefficientField, weight: &WeightProfile, horizon: f64, steps: usize) -> Result<Self> {
        let grid = weight.grid();
        let constant = !coeffs.a_expr().depends_on_t();
        let count = if constant { 1 } else { 2 * steps + 1 };
        let mut abar = Vec::with_capacity(count);
        let mut b1 = Vec::with_capacity(count);
        let mut b2 = Vec::with_capacity(count);
        let xs = grid.nodes();
        for j in 0..count {
            let t = horizon * j as f64 / (2 * steps) as f64;
            let a = coeffs.a_expr().sample_real(xs, t)?;
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::Validation(format!("non-finite a at t = {t}")));
            }
            let mean = a.iter().sum::<f64>() / a.len() as f64;
            b2.push(a.iter().zip(weight.logderiv()).map(|(a, p)| a * p).collect());
            b1.push(a.iter().map(|v| v - mean).collect());
            abar.push(mean);
        }
        Ok(Self {
            horizon,
            steps,
            constant,
            abar,
            b1,
            b2,
        })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    fn idx(&self, half: usize) -> usize {
        if self.constant {
            0
        } else {
            half
        }
    }
}

/// Scratch space for evaluating the non-diagonal remainder.
struct Remainder<'a> {
    grid: &'a Grid1D,
    sigma: f64,
    ik: Vec<Complex64>,
    keep: Vec<bool>,
    work: Vec<Complex64>,
    r1: Vec<Complex64>,
    r2: Vec<Complex64>,
}

impl<'a> Remainder<'a> {
    fn new(grid: &'a Grid1D, sigma: f64) -> Self {
        let n = grid.n();
        let ik = grid
            .freqs()
            .iter()
            .zip(grid.wavenumbers())
            .map(|(&xi, &m)| {
                if m == -(n as i64) / 2 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, xi)
                }
            })
            .collect();
        let keep = grid.wavenumbers().iter().map(|&m| grid.dealias_keeps(m)).collect();
        let z = vec![Complex64::new(0.0, 0.0); n];
        Self {
            grid,
            sigma,
            ik,
            keep,
            work: z.clone(),
            r1: z.clone(),
            r2: z,
        }
    }

    /// `σ[i∂ₓ(b1 ∂ₓy) − 2i b2 ∂ₓy + F]` in coefficient space.
    #[allow(clippy::needless_range_loop)]
    fn eval(&mut self, y: &[Complex64], b1: &[f64], b2: &[f64], forcing: Option<&[Complex64]>, out: &mut [Complex64]) {
        for j in 0..y.len() {
            self.work[j] = if self.keep[j] {
                self.ik[j] * y[j]
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
        self.grid.inverse_in_place(&mut self.work);
        for j in 0..y.len() {
            let yx = self.work[j];
            self.r1[j] = yx * b1[j];
            self.r2[j] = yx * b2[j];
        }
        self.grid.forward_in_place(&mut self.r1);
        self.grid.forward_in_place(&mut self.r2);
        let s = self.sigma;
        let minus_2i = Complex64::new(0.0, -2.0);
        for j in 0..y.len() {
            // i∂ₓ ↦ i(iξ) = −ξ
            let mut v = if self.keep[j] {
                self.r1[j] * (-self.ik[j].im) + minus_2i * self.r2[j]
            } else {
                Complex64::new(0.0, 0.0)
            };
            if let Some(f) = forcing {
                v += f[j];
            }
            out[j] = v * s;
        }
    }
}

fn check_finite(y: &[Complex64], step: usize) -> Result<()> {
    let bad = y
        .iter()
        .any(|c| !(c.re.is_finite() && c.im.is_finite()) || c.norm_sqr() > BLOWUP);
    if bad {
        return Err(Error::Instability {
            step,
            reason: "non-finite or exploding coefficients".into(),
        });
    }
    Ok(())
}

/// Transformed source at each half step, produced lazily.
struct Forcing<'a> {
    source: Option<&'a SpaceTimeField>,
    horizon: f64,
    steps: usize,
    cache: Vec<(usize, Vec<Complex64>)>,
}

impl<'a> Forcing<'a> {
    fn get(&mut self, half_t: usize) -> Option<&[Complex64]> {
        let src = self.source?;
        if let Some(pos) = self.cache.iter().position(|(j, _)| *j == half_t) {
            return Some(&self.cache[pos].1);
        }
        let t = self.horizon * half_t as f64 / (2 * self.steps) as f64;
        let mut c = src.at(t).into_values();
        src.grid().forward_in_place(&mut c);
        if self.cache.len() >= 4 {
            self.cache.remove(0);
        }
        self.cache.push((half_t, c));
        Some(&self.cache.last().unwrap().1)
    }
}

pub fn solve_linear(p: &LinearProblem, cfg: &StepperConfig) -> Result<SpaceTimeField> {
    p.validate()?;
    let steps = cfg.validate(p.grid(), p.horizon)?;
    let cache = CoefficientCache::build(&p.coeffs, &p.weight, p.horizon, steps)?;
    solve_linear_cached(p, cfg, &cache)
}

/// As [`solve_linear`], reusing coefficient samples across solves.
pub fn solve_linear_cached(p: &LinearProblem, cfg: &StepperConfig, cache: &CoefficientCache) -> Result<SpaceTimeField> {
    p.validate()?;
    let steps = cfg.validate(p.grid(), p.horizon)?;
    if steps != cache.steps || (cache.horizon - p.horizon).abs() > 1e-14 * p.horizon {
        return Err(Error::Config(
            "coefficient cache built for a different time grid".into(),
        ));
    }
    match cfg.scheme {
        Scheme::EtdRk4 => run_etd_rk4(p, cfg.epsilon, cache),
        Scheme::DuhamelPicard => run_duhamel_picard(p, cfg.epsilon, cache),
    }
}

/// Half-step index in `t` of the half step `h` in the marching variable.
fn t_half(direction: Direction, steps: usize, h: usize) -> usize {
    match direction {
        Direction::Forward => h,
        Direction::Backward => 2 * steps - h,
    }
}

fn sigma(direction: Direction) -> f64 {
    match direction {
        Direction::Forward => 1.0,
        Direction::Backward => -1.0,
    }
}

/// `exp(D τ)` with `D = −εξ⁴ − iσāξ²`.
fn diagonal(grid: &Grid1D, epsilon: f64, sigma: f64, abar: f64, tau: f64, out: &mut [Complex64]) {
    for (o, &xi) in out.iter_mut().zip(grid.freqs()) {
        let x2 = xi * xi;
        *o = (Complex64::new(-epsilon * x2 * x2, -sigma * abar * x2) * tau).exp();
    }
}

fn finish(p: &LinearProblem, steps: usize, mut march: Vec<Vec<Complex64>>) -> Result<SpaceTimeField> {
    if p.direction == Direction::Backward {
        march.reverse();
    }
    let grid = p.grid();
    let slices = march
        .into_iter()
        .map(|c| SpectralField::from_coeffs(grid, c))
        .collect::<Result<Vec<_>>>()?;
    SpaceTimeField::new(grid, uniform_times(0.0, p.horizon, steps), slices)
}

fn run_etd_rk4(p: &LinearProblem, epsilon: f64, cache: &CoefficientCache) -> Result<SpaceTimeField> {
    let grid = p.grid();
    let n = grid.n();
    let steps = cache.steps;
    let dt = p.horizon / steps as f64;
    let sg = sigma(p.direction);
    let mut rem = Remainder::new(grid, sg);
    let mut forcing = Forcing {
        source: p.source.as_ref(),
        horizon: p.horizon,
        steps,
        cache: Vec::new(),
    };
    let zero = Complex64::new(0.0, 0.0);
    let mut y = p.datum.coeffs();
    let mut out = Vec::with_capacity(steps + 1);
    out.push(y.clone());
    let mut e = vec![zero; n];
    let (mut k1, mut k2, mut k3, mut k4) = (vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n]);
    let mut yi = vec![zero; n];
    let mut tmp = vec![zero; n];
    let mut last_abar = f64::NAN;
    for step in 0..steps {
        let h0 = t_half(p.direction, steps, 2 * step);
        let h1 = t_half(p.direction, steps, 2 * step + 1);
        let h2 = t_half(p.direction, steps, 2 * step + 2);
        let abar = cache.abar[cache.idx(h1)];
        if abar != last_abar {
            diagonal(grid, epsilon, sg, abar, 0.5 * dt, &mut e);
            last_abar = abar;
        }
        let c0 = cache.idx(h0);
        let c1 = cache.idx(h1);
        let c2 = cache.idx(h2);

        rem.eval(&y, &cache.b1[c0], &cache.b2[c0], forcing.get(h0), &mut k1);
        for j in 0..n {
            yi[j] = e[j] * y[j];
            k1[j] *= e[j];
            tmp[j] = yi[j] + 0.5 * dt * k1[j];
        }
        rem.eval(&tmp, &cache.b1[c1], &cache.b2[c1], forcing.get(h1), &mut k2);
        for j in 0..n {
            tmp[j] = yi[j] + 0.5 * dt * k2[j];
        }
        rem.eval(&tmp, &cache.b1[c1], &cache.b2[c1], forcing.get(h1), &mut k3);
        for j in 0..n {
            tmp[j] = e[j] * (yi[j] + dt * k3[j]);
        }
        rem.eval(&tmp, &cache.b1[c2], &cache.b2[c2], forcing.get(h2), &mut k4);
        for j in 0..n {
            y[j] = e[j] * (yi[j] + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j])) + dt / 6.0 * k4[j];
        }
        check_finite(&y, step + 1)?;
        out.push(y.clone());
    }
    finish(p, steps, out)
}

/// Fixed point of the Duhamel formula with the remainder frozen on the
/// previous iterate; trapezoid quadrature in time.
fn run_duhamel_picard(p: &LinearProblem, epsilon: f64, cache: &CoefficientCache) -> Result<SpaceTimeField> {
    const MAX_ITER: usize = 60;
    const TOL: f64 = 1e-11;
    let grid = p.grid();
    let n = grid.n();
    let steps = cache.steps;
    let dt = p.horizon / steps as f64;
    let sg = sigma(p.direction);
    let mut rem = Remainder::new(grid, sg);
    let mut forcing = Forcing {
        source: p.source.as_ref(),
        horizon: p.horizon,
        steps,
        cache: Vec::new(),
    };
    let zero = Complex64::new(0.0, 0.0);
    let y0 = p.datum.coeffs();
    let scale = y0
        .iter()
        .map(|c| c.norm_sqr())
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);

    let mut props = Vec::with_capacity(steps);
    let mut e = vec![zero; n];
    for step in 0..steps {
        let h1 = t_half(p.direction, steps, 2 * step + 1);
        diagonal(grid, epsilon, sg, cache.abar[cache.idx(h1)], dt, &mut e);
        props.push(e.clone());
    }

    let mut iterate: Vec<Vec<Complex64>> = Vec::with_capacity(steps + 1);
    iterate.push(y0.clone());
    for step in 0..steps {
        let next = props[step].iter().zip(&iterate[step]).map(|(a, b)| a * b).collect();
        iterate.push(next);
    }
    let mut nk = vec![zero; n];
    let mut nk1 = vec![zero; n];
    for sweep in 0..MAX_ITER {
        let mut next = Vec::with_capacity(steps + 1);
        next.push(y0.clone());
        let c = cache.idx(t_half(p.direction, steps, 0));
        rem.eval(
            &iterate[0],
            &cache.b1[c],
            &cache.b2[c],
            forcing.get(t_half(p.direction, steps, 0)),
            &mut nk,
        );
        let mut diff: f64 = 0.0;
        for step in 0..steps {
            let h2 = t_half(p.direction, steps, 2 * step + 2);
            let c2 = cache.idx(h2);
            rem.eval(
                &iterate[step + 1],
                &cache.b1[c2],
                &cache.b2[c2],
                forcing.get(h2),
                &mut nk1,
            );
            let prev: &Vec<Complex64> = &next[step];
            let y: Vec<Complex64> = (0..n)
                .map(|j| props[step][j] * (prev[j] + 0.5 * dt * nk[j]) + 0.5 * dt * nk1[j])
                .collect();
            check_finite(&y, step + 1)?;
            let d = y
                .iter()
                .zip(&iterate[step + 1])
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            diff = diff.max(d);
            next.push(y);
            std::mem::swap(&mut nk, &mut nk1);
        }
        iterate = next;
        if diff <= TOL * scale.max(1.0) {
            return finish(p, steps, iterate);
        }
        if sweep + 1 == MAX_ITER {
            return Err(Error::Divergence {
                rho: diff / scale,
                streak: MAX_ITER,
            });
        }
    }
    unreachable!()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonStudy {
    pub epsilons: Vec<f64>,
    /// `sup_t ‖v^{εᵢ} − v^{εᵢ₊₁}‖₂`
    pub differences: Vec<f64>,
    pub fitted_order: Option<f64>,
    pub cauchy: bool,
}

pub fn epsilon_study(p: &LinearProblem, cfg: &StepperConfig) -> Result<EpsilonStudy> {
    let eps = &cfg.epsilon_schedule;
    if eps.len() < 3 {
        return Err(Error::Config("epsilon schedule needs at least 3 entries".into()));
    }
    if eps.windows(2).any(|w| !(w[1] < w[0])) || eps.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::Config(
            "epsilon schedule must be positive and strictly decreasing".into(),
        ));
    }
    p.validate()?;
    let steps = cfg.validate(p.grid(), p.horizon)?;
    let cache = CoefficientCache::build(&p.coeffs, &p.weight, p.horizon, steps)?;
    let mut prev: Option<SpaceTimeField> = None;
    let mut differences = Vec::new();
    for &e in eps {
        let sol = solve_linear_cached(p, &cfg.with_epsilon(e), &cache)?;
        if let Some(prev) = &prev {
            differences.push(sol.sup_diff(prev)?);
        }
        prev = Some(sol);
    }
    let cauchy = differences.windows(2).all(|w| w[1] <= 0.5 * w[0]);
    // least squares of log d_i against log ε_i
    let pts: Vec<(f64, f64)> = differences
        .iter()
        .zip(eps)
        .filter(|(d, _)| **d > 0.0)
        .map(|(d, e)| (e.ln(), d.ln()))
        .collect();
    let fitted_order = if pts.len() >= 2 {
        let m = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        Some((m * sxy - sx * sy) / (m * sxx - sx * sx))
    } else {
        None
    };
    Ok(EpsilonStudy {
        epsilons: eps.clone(),
        differences,
        fitted_order,
        cauchy,
    })
}
