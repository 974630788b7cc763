//! Coupled two-point problem for `(v₊, v₋)` solved by Picard iteration on the
//! order-zero coupling `Λ±`, plus assembly of `v`, `u = v/φ`, `w = e^{βx}u`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coefficients::{norm_bundle, CoefficientField};
use crate::error::{Error, Result};
use crate::free_bvp::check_projected;
use crate::spacetime::SpaceTimeField;
use crate::spectral::{Grid1D, Sign, SpectralField};
use crate::stepper::{solve_linear_cached, CoefficientCache, Direction, LinearProblem, StepperConfig};
use crate::weights::WeightProfile;

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 50;
const DIVERGENCE_STREAK: usize = 3;

/// Coefficients entering the coupling and the full operator at one time.
#[derive(Clone, Debug)]
pub struct SliceCoefficients {
    pub t: f64,
    pub a: Vec<f64>,
    pub abar: f64,
    pub aphi: Vec<f64>,
    /// `i((ϕ² − ∂ₓϕ)a − ϕ∂ₓa + W)`
    pub potential: Vec<Complex64>,
}

impl SliceCoefficients {
    pub fn new(coeffs: &CoefficientField, weight: &WeightProfile, t: f64) -> Result<Self> {
        let s = coeffs.sample(weight.grid(), t)?;
        let phi = weight.logderiv();
        let dphi = weight.logderiv_deriv(1);
        let potential = (0..s.a.len())
            .map(|j| {
                let re = (phi[j] * phi[j] - dphi[j]) * s.a[j] - phi[j] * s.da[j];
                Complex64::new(0.0, 1.0) * (Complex64::new(re, 0.0) + s.w[j])
            })
            .collect();
        let aphi = s.a.iter().zip(phi).map(|(a, p)| a * p).collect();
        let abar = s.a.iter().sum::<f64>() / s.a.len() as f64;
        Ok(Self {
            t,
            a: s.a,
            abar,
            aphi,
            potential,
        })
    }
}

/// Dealiased products shared by the coupling and the full operator.
struct Products {
    vd_hat: Vec<Complex64>,
    /// `F[a ∂ₓv]`, `F[a P₊∂ₓv]`, `F[aϕ ∂ₓv]`, `F[aϕ P₊∂ₓv]`, `F[potential · v]`
    a_vx: Vec<Complex64>,
    a_pvx: Vec<Complex64>,
    b_vx: Vec<Complex64>,
    b_pvx: Vec<Complex64>,
    x: Vec<Complex64>,
}

fn ik(grid: &Grid1D, j: usize) -> Complex64 {
    if j == grid.nyquist_index() {
        Complex64::new(0.0, 0.0)
    } else {
        Complex64::new(0.0, grid.freqs()[j])
    }
}

fn products(grid: &Grid1D, v_hat: &[Complex64], sc: &SliceCoefficients, with_plus: bool) -> Products {
    let n = grid.n();
    let zero = Complex64::new(0.0, 0.0);
    let keep: Vec<bool> = grid.wavenumbers().iter().map(|&m| grid.dealias_keeps(m)).collect();
    let vd_hat: Vec<Complex64> = (0..n).map(|j| if keep[j] { v_hat[j] } else { zero }).collect();
    let vx_hat: Vec<Complex64> = (0..n).map(|j| ik(grid, j) * vd_hat[j]).collect();
    let mut vx = vx_hat.clone();
    grid.inverse_in_place(&mut vx);
    let mut v = vd_hat.clone();
    grid.inverse_in_place(&mut v);

    let transform = |mut buf: Vec<Complex64>| {
        grid.forward_in_place(&mut buf);
        for (c, k) in buf.iter_mut().zip(&keep) {
            if !k {
                *c = zero;
            }
        }
        buf
    };
    let a_vx = transform(vx.iter().zip(&sc.a).map(|(z, a)| z * a).collect());
    let b_vx = transform(vx.iter().zip(&sc.aphi).map(|(z, a)| z * a).collect());
    let x = transform(v.iter().zip(&sc.potential).map(|(z, p)| z * p).collect());
    let (a_pvx, b_pvx) = if with_plus {
        let mut pvx: Vec<Complex64> = (0..n)
            .map(|j| if grid.wavenumbers()[j] > 0 { vx_hat[j] } else { zero })
            .collect();
        grid.inverse_in_place(&mut pvx);
        (
            transform(pvx.iter().zip(&sc.a).map(|(z, a)| z * a).collect()),
            transform(pvx.iter().zip(&sc.aphi).map(|(z, a)| z * a).collect()),
        )
    } else {
        (Vec::new(), Vec::new())
    };
    Products {
        vd_hat,
        a_vx,
        a_pvx,
        b_vx,
        b_pvx,
        x,
    }
}

/// `Λ±` in coefficient space. The zero and Nyquist modes are carried by the
/// minus side, so `Λ₊ + Λ₋` is the full order-zero part.
fn lambda_hat(grid: &Grid1D, v_hat: &[Complex64], sc: &SliceCoefficients) -> (Vec<Complex64>, Vec<Complex64>) {
    let p = products(grid, v_hat, sc, true);
    let n = grid.n();
    let two_i = Complex64::new(0.0, 2.0);
    let zero = Complex64::new(0.0, 0.0);
    let mut plus = vec![zero; n];
    let mut minus = vec![zero; n];
    for j in 0..n {
        let pos = grid.wavenumbers()[j] > 0;
        // i∂ₓ ↦ i·iξ
        let d = Complex64::new(0.0, 1.0) * ik(grid, j);
        let (a, ap, b, bp, x) = (p.a_vx[j], p.a_pvx[j], p.b_vx[j], p.b_pvx[j], p.x[j]);
        let on = |z: Complex64, side: bool| if side { z } else { zero };
        plus[j] = on(x, pos) + d * (on(a, pos) - ap) - two_i * (on(b, pos) - bp);
        minus[j] = on(x, !pos) + d * (on(a, !pos) - (a - ap)) - two_i * (on(b, !pos) - (b - bp));
    }
    (plus, minus)
}

pub fn coupling_lambda_with(
    vp: &SpectralField,
    vm: &SpectralField,
    sc: &SliceCoefficients,
) -> Result<(SpectralField, SpectralField)> {
    vp.grid().check_same(vm.grid())?;
    if sc.a.len() != vp.grid().n() {
        return Err(Error::Shape("coefficient samples do not match the grid".into()));
    }
    let grid = vp.grid();
    let v = vp + vm;
    let (plus, minus) = lambda_hat(grid, &v.coeffs(), sc);
    Ok((
        SpectralField::from_coeffs(grid, plus)?,
        SpectralField::from_coeffs(grid, minus)?,
    ))
}

pub fn coupling_lambda(
    vp: &SpectralField,
    vm: &SpectralField,
    coeffs: &CoefficientField,
    weight: &WeightProfile,
    t: f64,
) -> Result<(SpectralField, SpectralField)> {
    vp.grid().check_same(weight.grid())?;
    coupling_lambda_with(vp, vm, &SliceCoefficients::new(coeffs, weight, t)?)
}

/// Discrete `i∂ₓ(a∂ₓv) − 2iaϕ∂ₓv + i((ϕ²−∂ₓϕ)a − ϕ∂ₓa + W)v`, in coefficient space.
fn operator_hat(grid: &Grid1D, v_hat: &[Complex64], sc: &SliceCoefficients) -> Vec<Complex64> {
    let p = products(grid, v_hat, sc, false);
    let two_i = Complex64::new(0.0, 2.0);
    (0..grid.n())
        .map(|j| {
            let xi = grid.freqs()[j];
            // the undealiased top third only sees the mean of a
            Complex64::new(0.0, -sc.abar * xi * xi) * (v_hat[j] - p.vd_hat[j])
                + Complex64::new(0.0, 1.0) * ik(grid, j) * p.a_vx[j]
                - two_i * p.b_vx[j]
                + p.x[j]
        })
        .collect()
}

pub fn apply_operator(v: &SpectralField, sc: &SliceCoefficients) -> Result<SpectralField> {
    SpectralField::from_coeffs(v.grid(), operator_hat(v.grid(), &v.coeffs(), sc))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualProfile {
    pub times: Vec<f64>,
    /// `‖J^{-2} r(t)‖₂`
    pub norms: Vec<f64>,
    pub max: f64,
}

/// Centered-difference residual of the weighted equation, in the discrete
/// `H^{-2}` norm, at interior slices.
pub fn pde_residual(v: &SpaceTimeField, coeffs: &CoefficientField, weight: &WeightProfile) -> Result<ResidualProfile> {
    if v.len() < 3 {
        return Err(Error::Shape(format!(
            "residual needs at least 3 slices, got {}",
            v.len()
        )));
    }
    let grid = v.grid();
    grid.check_same(weight.grid())?;
    let dt = v.dt();
    let n = grid.n();
    let jm2: Vec<f64> = grid.freqs().iter().map(|xi| 1.0 / (1.0 + xi * xi)).collect();
    let static_sc = if coeffs.is_time_independent() {
        Some(SliceCoefficients::new(coeffs, weight, 0.0)?)
    } else {
        None
    };
    let mut prev = v.slice(0).coeffs();
    let mut cur = v.slice(1).coeffs();
    let mut times = Vec::with_capacity(v.len() - 2);
    let mut norms = Vec::with_capacity(v.len() - 2);
    for k in 1..v.len() - 1 {
        let next = v.slice(k + 1).coeffs();
        let t = v.times()[k];
        let sc = match &static_sc {
            Some(s) => s.clone(),
            None => SliceCoefficients::new(coeffs, weight, t)?,
        };
        let op = operator_hat(grid, &cur, &sc);
        let sq: f64 = (0..n)
            .map(|j| ((next[j] - prev[j]) / (2.0 * dt) - op[j]).norm_sqr() * jm2[j] * jm2[j])
            .sum();
        times.push(t);
        norms.push((sq * grid.dx() / n as f64).sqrt());
        prev = std::mem::replace(&mut cur, next);
    }
    let max = norms.iter().cloned().fold(0.0, f64::max);
    Ok(ResidualProfile { times, norms, max })
}

#[derive(Clone, Debug)]
pub struct BvpProblem {
    pub f: SpectralField,
    pub g: SpectralField,
    pub coeffs: CoefficientField,
    pub weight: WeightProfile,
    pub horizon: f64,
    pub horizon_overridden: bool,
    pub stepper: StepperConfig,
    pub tol: f64,
    pub max_iter: usize,
}

impl BvpProblem {
    pub fn delta(&self) -> f64 {
        self.f.l2_norm() + self.g.l2_norm()
    }

    pub fn grid(&self) -> &Grid1D {
        self.f.grid()
    }

    fn validate(&self) -> Result<()> {
        self.f.grid().check_same(self.g.grid())?;
        self.f.grid().check_same(self.weight.grid())?;
        check_projected(&self.f, Sign::Minus, "f")?;
        check_projected(&self.g, Sign::Plus, "g")?;
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::Config(
                "Picard tolerance and iteration cap must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub m: usize,
    pub sup_vplus: f64,
    pub sup_vminus: f64,
    pub triple_norm: f64,
    pub diff: f64,
    pub rho: Option<f64>,
    pub leakage: f64,
    pub confined: bool,
    /// `max_t max_± ‖Λ±‖₂ / (K(t)(‖v₊‖₂ + ‖v₋‖₂))` for the sources of this sweep.
    pub lambda_bound_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PicardReport {
    pub converged: bool,
    pub iterations: Vec<IterationRecord>,
    pub delta: f64,
    pub horizon: f64,
    pub horizon_overridden: bool,
    pub epsilon: f64,
    pub steps: usize,
    pub max_rho_after_two: Option<f64>,
    pub leakage: f64,
}

#[derive(Clone, Debug)]
pub struct PicardState {
    pub m: usize,
    pub vplus: SpaceTimeField,
    pub vminus: SpaceTimeField,
}

/// One linear sub-solve, exposed to observers.
pub struct SubSolve<'a> {
    pub m: usize,
    pub sign: Sign,
    pub solution: &'a SpaceTimeField,
    pub source: Option<&'a SpaceTimeField>,
    pub datum: &'a SpectralField,
}

fn leakage(vp: &SpaceTimeField, vm: &SpaceTimeField) -> f64 {
    let wrong = |f: &SpaceTimeField, bad: Sign| {
        f.slices()
            .iter()
            .map(|s| {
                let c = s.coeffs();
                let sq: f64 = c
                    .iter()
                    .zip(s.grid().wavenumbers())
                    .filter(|(_, &m)| match bad {
                        Sign::Plus => m > 0,
                        Sign::Minus => m < 0 && m != -(s.grid().n() as i64) / 2,
                    })
                    .map(|(z, _)| z.norm_sqr())
                    .sum();
                (sq * s.grid().dx() / s.grid().n() as f64).sqrt()
            })
            .fold(0.0, f64::max)
    };
    wrong(vm, Sign::Plus) + wrong(vp, Sign::Minus)
}

pub fn picard_solve(p: &BvpProblem) -> Result<(PicardState, PicardReport)> {
    picard_solve_observed(p, &mut |_| Ok(()))
}

/// As [`picard_solve`], calling `observer` after every linear sub-solve.
pub fn picard_solve_observed(
    p: &BvpProblem,
    observer: &mut dyn FnMut(&SubSolve<'_>) -> Result<()>,
) -> Result<(PicardState, PicardReport)> {
    p.validate()?;
    let grid = p.grid().clone();
    let steps = p.stepper.validate(&grid, p.horizon)?;
    let cache = CoefficientCache::build(&p.coeffs, &p.weight, p.horizon, steps)?;
    let times = crate::spacetime::uniform_times(0.0, p.horizon, steps);
    let slice_coeffs: Vec<SliceCoefficients> = if p.coeffs.is_time_independent() {
        vec![SliceCoefficients::new(&p.coeffs, &p.weight, 0.0)?]
    } else {
        times
            .iter()
            .map(|&t| SliceCoefficients::new(&p.coeffs, &p.weight, t))
            .collect::<Result<_>>()?
    };
    let sc_at = |k: usize| &slice_coeffs[if slice_coeffs.len() == 1 { 0 } else { k }];
    let bundle = norm_bundle(&p.coeffs, &grid, p.weight.sup_logderiv(), &times)?;

    let delta = p.delta();
    let mut vp = SpaceTimeField::zeros(&grid, times.clone())?;
    let mut vm = SpaceTimeField::zeros(&grid, times.clone())?;
    let mut records: Vec<IterationRecord> = Vec::new();
    let mut prev_diff: Option<f64> = None;
    let mut streak = 0;
    let mut converged = false;

    for m in 1..=p.max_iter {
        let (sources, ratio) = if m == 1 {
            (None, None)
        } else {
            let mut plus = Vec::with_capacity(times.len());
            let mut minus = Vec::with_capacity(times.len());
            let mut ratio: f64 = 0.0;
            for k in 0..times.len() {
                let (lp, lm) = coupling_lambda_with(vp.slice(k), vm.slice(k), sc_at(k))?;
                let denom = bundle.k_samples[k] * (vp.slice(k).l2_norm() + vm.slice(k).l2_norm());
                if denom > 0.0 {
                    ratio = ratio.max(lp.l2_norm().max(lm.l2_norm()) / denom);
                }
                plus.push(lp);
                minus.push(lm);
            }
            (
                Some((
                    SpaceTimeField::new(&grid, times.clone(), plus)?,
                    SpaceTimeField::new(&grid, times.clone(), minus)?,
                )),
                Some(ratio),
            )
        };
        let (src_p, src_m) = match &sources {
            Some((a, b)) => (Some(a.clone()), Some(b.clone())),
            None => (None, None),
        };
        let minus_problem = LinearProblem {
            direction: Direction::Forward,
            coeffs: p.coeffs.clone(),
            weight: p.weight.clone(),
            source: src_m,
            datum: p.f.clone(),
            horizon: p.horizon,
        };
        let new_vm = solve_linear_cached(&minus_problem, &p.stepper, &cache)?;
        observer(&SubSolve {
            m,
            sign: Sign::Minus,
            solution: &new_vm,
            source: minus_problem.source.as_ref(),
            datum: &p.f,
        })?;
        let plus_problem = LinearProblem {
            direction: Direction::Backward,
            source: src_p,
            datum: p.g.clone(),
            ..minus_problem
        };
        let new_vp = solve_linear_cached(&plus_problem, &p.stepper, &cache)?;
        observer(&SubSolve {
            m,
            sign: Sign::Plus,
            solution: &new_vp,
            source: plus_problem.source.as_ref(),
            datum: &p.g,
        })?;
        drop(sources);

        let diff = new_vp.sup_diff(&vp)? + new_vm.sup_diff(&vm)?;
        let rho = match prev_diff {
            Some(d) if d > 0.0 => Some(diff / d),
            Some(_) => Some(0.0),
            None => None,
        };
        vp = new_vp;
        vm = new_vm;
        let (sup_vplus, sup_vminus) = (vp.sup_l2(), vm.sup_l2());
        records.push(IterationRecord {
            m,
            sup_vplus,
            sup_vminus,
            triple_norm: sup_vplus + sup_vminus,
            diff,
            rho,
            leakage: leakage(&vp, &vm),
            confined: sup_vplus + sup_vminus <= 4.0 * delta * (1.0 + 1e-12),
            lambda_bound_ratio: ratio,
        });
        if diff <= p.tol * delta {
            converged = true;
            break;
        }
        if let Some(r) = rho {
            if r >= 1.0 {
                streak += 1;
                if streak >= DIVERGENCE_STREAK {
                    return Err(Error::Divergence { rho: r, streak });
                }
            } else {
                streak = 0;
            }
        }
        prev_diff = Some(diff);
    }

    let max_rho_after_two = records
        .iter()
        .filter(|r| r.m >= 2)
        .filter_map(|r| r.rho)
        .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |a| a.max(r))));
    let report = PicardReport {
        converged,
        leakage: records.last().map_or(0.0, |r| r.leakage),
        iterations: records,
        delta,
        horizon: p.horizon,
        horizon_overridden: p.horizon_overridden,
        epsilon: p.stepper.epsilon,
        steps,
        max_rho_after_two,
    };
    Ok((
        PicardState {
            m: report.iterations.len(),
            vplus: vp,
            vminus: vm,
        },
        report,
    ))
}

#[derive(Clone, Debug)]
pub struct Assembled {
    pub v: SpaceTimeField,
    pub u: SpaceTimeField,
    pub w: SpaceTimeField,
    /// `‖P₋v(0) − f‖₂`
    pub residual_f: f64,
    /// `‖P₊v(T) − g‖₂`
    pub residual_g: f64,
}

impl Assembled {
    pub fn w_norms(&self) -> Vec<f64> {
        self.w.norms()
    }
}

pub fn assemble_solution(
    vplus: &SpaceTimeField,
    vminus: &SpaceTimeField,
    weight: &WeightProfile,
    f: &SpectralField,
    g: &SpectralField,
) -> Result<Assembled> {
    let v = vplus.add(vminus)?;
    let phi = weight.phi();
    let ratio = weight.exp_ratio();
    let u = v.try_map_slices(|_, s| {
        SpectralField::new(s.grid(), s.values().iter().zip(phi).map(|(z, p)| z / p).collect())
    })?;
    // e^{βx}/φ is bounded, so w never forms e^{βx} on its own
    let w = v.try_map_slices(|_, s| s.mul_real(&ratio))?;
    let residual_f = (&crate::spectral::project(v.first(), Sign::Minus) - f).l2_norm();
    let residual_g = (&crate::spectral::project(v.last(), Sign::Plus) - g).l2_norm();
    Ok(Assembled {
        v,
        u,
        w,
        residual_f,
        residual_g,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::free_bvp::{solve_free, FreeBvpData};
    use crate::random::{random_field, FieldKind};
    use crate::spacetime::uniform_times;
    use crate::spectral::project;
    use crate::weights::WeightMode;

    fn modulated(g: &Grid1D, k0: f64, sign: Sign) -> SpectralField {
        let s = match sign {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        };
        project(
            &SpectralField::from_fn(g, |x| Complex64::new(0.0, s * k0 * x).exp() * (-x * x / 8.0).exp()),
            sign,
        )
    }

    #[test]
    fn lambda_vanishes_on_zero_and_is_diagonal_for_constants() {
        let g = Grid1D::new(256, 30.0).unwrap();
        let w = WeightProfile::build(1.5, &g, WeightMode::PureExponential).unwrap();
        let c = CoefficientField::new("1", "0", 0.0, 1.0).unwrap();
        let z = SpectralField::zeros(&g);
        let (a, b) = coupling_lambda(&z, &z, &c, &w, 0.0).unwrap();
        assert_eq!(a.l2_norm() + b.l2_norm(), 0.0);
        let vp = project(&random_field(&g, 60, FieldKind::Complex, true, 1), Sign::Plus);
        let vm = project(&random_field(&g, 60, FieldKind::Complex, true, 2), Sign::Minus);
        let (lp, lm) = coupling_lambda(&vp, &vm, &c, &w, 0.0).unwrap();
        let i_b2 = Complex64::new(0.0, 2.25);
        assert!((&lp - &vp.scale(i_b2)).l2_norm() < 1e-12);
        assert!((&lm - &vm.scale(i_b2)).l2_norm() < 1e-12);
    }

    #[test]
    fn lambda_sum_is_order_zero_part() {
        let g = Grid1D::new(256, 30.0).unwrap();
        let w = WeightProfile::build(1.0, &g, WeightMode::Truncated).unwrap();
        let c = CoefficientField::new("1 + 0.2*sech(x - 3)", "0.1*cos(x)*sech(x)", 0.0, 1.0).unwrap();
        let sc = SliceCoefficients::new(&c, &w, 0.3).unwrap();
        let vp = project(&random_field(&g, 60, FieldKind::Complex, true, 3), Sign::Plus);
        let vm = project(&random_field(&g, 60, FieldKind::Complex, true, 4), Sign::Minus);
        let (lp, lm) = coupling_lambda_with(&vp, &vm, &sc).unwrap();
        let v = &vp + &vm;
        let pot = SpectralField::new(&g, sc.potential.clone()).unwrap();
        let expect = v.dealiased().pointwise(&pot).unwrap().dealiased();
        assert!((&(&lp + &lm) - &expect).l2_norm() < 1e-10 * expect.l2_norm());
    }

    #[test]
    fn lambda_bounded_by_k() {
        let g = Grid1D::new(512, 40.0).unwrap();
        let w = WeightProfile::build(1.0, &g, WeightMode::Truncated).unwrap();
        let c = CoefficientField::new("1 + 0.1*exp(-t)*sech(x)", "0.05*sech(x)", 0.9, 1.0).unwrap();
        let sc = SliceCoefficients::new(&c, &w, 0.0).unwrap();
        let b = norm_bundle(&c, &g, w.sup_logderiv(), &[0.0]).unwrap();
        let mut worst: Vec<f64> = Vec::new();
        for band in [32, 64, 128] {
            let mut m: f64 = 0.0;
            for seed in 0..10 {
                let vp = project(&random_field(&g, band, FieldKind::Complex, true, seed), Sign::Plus);
                let vm = project(
                    &random_field(&g, band, FieldKind::Complex, true, seed + 50),
                    Sign::Minus,
                );
                let (lp, lm) = coupling_lambda_with(&vp, &vm, &sc).unwrap();
                let r = lp.l2_norm().max(lm.l2_norm()) / (b.k_samples[0] * (vp.l2_norm() + vm.l2_norm()));
                assert!(r <= 1.0, "{r}");
                m = m.max(r);
            }
            worst.push(m);
        }
        assert!(worst[2] <= 1.1 * worst[0], "{worst:?}");
    }

    #[test]
    fn zero_data_converges_immediately() {
        let g = Grid1D::new(128, 30.0).unwrap();
        let w = WeightProfile::build(1.0, &g, WeightMode::Truncated).unwrap();
        let z = SpectralField::zeros(&g);
        let p = BvpProblem {
            f: z.clone(),
            g: z,
            coeffs: CoefficientField::new("1 + 0.1*sech(x)", "0", 0.0, 1.0).unwrap(),
            weight: w,
            horizon: 0.02,
            horizon_overridden: false,
            stepper: StepperConfig {
                epsilon: 1e-10,
                dt: Some(0.02 / 64.0),
                ..Default::default()
            },
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        };
        let (s, r) = picard_solve(&p).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations.len(), 1);
        assert_eq!(s.vplus.sup_l2() + s.vminus.sup_l2(), 0.0);
    }

    #[test]
    fn decoupled_matches_closed_form() {
        let g = Grid1D::new(512, 40.0).unwrap();
        let beta = 1.0;
        let t_end = 0.03;
        let w = WeightProfile::build(beta, &g, WeightMode::PureExponential).unwrap();
        let f = modulated(&g, 5.0, Sign::Minus);
        let gg = modulated(&g, 5.0, Sign::Plus);
        let p = BvpProblem {
            f: f.clone(),
            g: gg.clone(),
            coeffs: CoefficientField::new("1", "0", 0.0, 1.0).unwrap(),
            weight: w.clone(),
            horizon: t_end,
            horizon_overridden: false,
            stepper: StepperConfig {
                epsilon: 1e-12,
                dt: Some(t_end / 1024.0),
                ..Default::default()
            },
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        };
        let (s, r) = picard_solve(&p).unwrap();
        assert!(r.converged);
        assert!(r.max_rho_after_two.unwrap() <= 0.5);
        let data = FreeBvpData::new(f.clone(), gg.clone(), beta, t_end, s.vplus.times().to_vec()).unwrap();
        let exact = solve_free(&data).unwrap();
        let asm = assemble_solution(&s.vplus, &s.vminus, &w, &f, &gg).unwrap();
        let err = asm.v.sup_diff(&exact).unwrap() / exact.sup_l2();
        assert!(err < 1e-6, "{err}");
        assert!(asm.residual_f < 1e-8 * r.delta && asm.residual_g < 1e-8 * r.delta);
        let res = pde_residual(&asm.v, &p.coeffs, &w).unwrap();
        assert!(res.max < 1e-6, "{}", res.max);
    }

    #[test]
    fn residual_of_exact_solution_is_second_order() {
        let g = Grid1D::new(256, 30.0).unwrap();
        let beta = 1.0;
        let w = WeightProfile::build(beta, &g, WeightMode::PureExponential).unwrap();
        let c = CoefficientField::new("1", "0", 0.0, 1.0).unwrap();
        let f = modulated(&g, 3.0, Sign::Minus);
        let gg = modulated(&g, 3.0, Sign::Plus);
        let mut prev: Option<f64> = None;
        for steps in [20, 40, 80] {
            let d = FreeBvpData::new(f.clone(), gg.clone(), beta, 0.2, uniform_times(0.0, 0.2, steps)).unwrap();
            let v = solve_free(&d).unwrap();
            let r = pde_residual(&v, &c, &w).unwrap();
            if let Some(p) = prev {
                let order: f64 = (p / r.max).log2();
                assert!((order - 2.0).abs() < 0.15, "{order}");
            }
            prev = Some(r.max);
        }
        let z = SpaceTimeField::zeros(&g, uniform_times(0.0, 1.0, 4)).unwrap();
        assert_eq!(pde_residual(&z, &c, &w).unwrap().max, 0.0);
        let short = SpaceTimeField::zeros(&g, uniform_times(0.0, 1.0, 1)).unwrap();
        assert!(pde_residual(&short, &c, &w).is_err());
    }
}
