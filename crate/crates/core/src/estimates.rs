//! Numerical monitors for the energy, smoothing and commutator inequalities
//! satisfied by the linear sub-solves and the assembled solution.
//!
//! Every monitor returns an [`EstimateReport`]; constants on right-hand
//! sides are taken to be 1 and the measured ratio is reported.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::coefficients::{cumulative_trapezoid, norm_bundle, CoefficientField};
use crate::error::{Error, Result};
use crate::spacetime::SpaceTimeField;
use crate::spectral::{lp_norm, real_lp_norm, FracKind, Grid1D, Multiplier, Sign, SpectralField};
use crate::weights::WeightProfile;

pub const DEFAULT_SLACK: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: Option<f64>,
    pub slack: f64,
    pub verdict: Verdict,
    pub constants: BTreeMap<String, f64>,
}

impl EstimateReport {
    pub fn judged(name: impl Into<String>, lhs: f64, rhs: f64, slack: f64, constants: BTreeMap<String, f64>) -> Self {
        let ratio = (rhs > 0.0).then(|| lhs / rhs);
        let verdict = match ratio {
            Some(r) if r.is_finite() && r <= 1.0 + slack => Verdict::Pass,
            None if lhs == 0.0 => Verdict::Pass,
            _ => Verdict::Fail,
        };
        Self {
            name: name.into(),
            lhs,
            rhs,
            ratio,
            slack,
            verdict,
            constants,
        }
    }

    fn not_applicable(name: impl Into<String>, constants: BTreeMap<String, f64>) -> Self {
        Self {
            name: name.into(),
            lhs: 0.0,
            rhs: 0.0,
            ratio: None,
            slack: DEFAULT_SLACK,
            verdict: Verdict::NotApplicable,
            constants,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Fail
    }
}

fn half_derivative(grid: &Grid1D) -> Multiplier {
    Multiplier::fractional(grid, 0.5, FracKind::D)
}

fn apply(m: &Multiplier, f: &SpectralField) -> SpectralField {
    m.apply(f).expect("multiplier on the field's grid")
}

/// `Σ_j weight_j |D^{1/2} f(x_j)|² dx`.
fn weighted_half_energy(half: &Multiplier, f: &SpectralField, weight: &[f64]) -> f64 {
    let d = apply(half, f);
    d.values()
        .iter()
        .zip(weight)
        .map(|(v, w)| w * v.norm_sqr())
        .sum::<f64>()
        * f.grid().dx()
}

fn check_times(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() || a.iter().zip(b).any(|(x, y)| (x - y).abs() > 1e-12 * x.abs().max(1.0)) {
        return Err(Error::Shape("monitor fields live on different time grids".into()));
    }
    Ok(())
}

/// Per-slice `aϕ` and the cumulative `∫c` with `β` replaced by the measured
/// `sup ϕ`; shared by all energy monitors on one time grid.
#[derive(Clone, Debug)]
pub struct MonitorContext {
    times: Vec<f64>,
    aphi: Vec<Vec<f64>>,
    int_c: f64,
    sup_logderiv: f64,
}

impl MonitorContext {
    pub fn new(coeffs: &CoefficientField, weight: &WeightProfile, times: &[f64]) -> Result<Self> {
        let grid = weight.grid();
        let bundle = norm_bundle(coeffs, grid, weight.sup_logderiv(), times)?;
        let phi = weight.logderiv();
        let sample = |t: f64| -> Result<Vec<f64>> {
            let s = coeffs.sample(grid, t)?;
            let v: Vec<f64> = s.a.iter().zip(phi).map(|(a, p)| a * p).collect();
            if let Some(bad) = v.iter().find(|x| **x < -1e-14) {
                return Err(Error::Data(format!(
                    "a·ϕ takes the negative value {bad:.3e} at t = {t}"
                )));
            }
            Ok(v)
        };
        let aphi = if coeffs.is_time_independent() {
            vec![sample(times[0])?]
        } else {
            times.iter().map(|&t| sample(t)).collect::<Result<Vec<_>>>()?
        };
        Ok(Self {
            times: times.to_vec(),
            aphi,
            int_c: bundle.int_c,
            sup_logderiv: weight.sup_logderiv(),
        })
    }

    fn aphi(&self, k: usize) -> &[f64] {
        if self.aphi.len() == 1 {
            &self.aphi[0]
        } else {
            &self.aphi[k]
        }
    }

    pub fn int_c(&self) -> f64 {
        self.int_c
    }
}

/// `sup‖v‖ + 2(∫∫aϕ|D^{1/2}v|²)^{1/2} ≤ 3(‖v(t_datum)‖ + ∫‖F‖)e^{4∫c}`,
/// with the datum at `t = 0` for `Sign::Minus` and at `t = T` for `Sign::Plus`.
pub fn energy_monitor(
    v: &SpaceTimeField,
    source: Option<&SpaceTimeField>,
    sign: Sign,
    coeffs: &CoefficientField,
    weight: &WeightProfile,
) -> Result<EstimateReport> {
    let ctx = MonitorContext::new(coeffs, weight, v.times())?;
    energy_monitor_in(v, source, sign, &ctx)
}

pub fn energy_monitor_in(
    v: &SpaceTimeField,
    source: Option<&SpaceTimeField>,
    sign: Sign,
    ctx: &MonitorContext,
) -> Result<EstimateReport> {
    check_times(v.times(), &ctx.times)?;
    let half = half_derivative(v.grid());
    let sup_norm = v.sup_l2();
    let dens: Vec<f64> = v
        .slices()
        .iter()
        .enumerate()
        .map(|(k, s)| weighted_half_energy(&half, s, ctx.aphi(k)))
        .collect();
    let smoothing = cumulative_trapezoid(v.times(), &dens)
        .last()
        .copied()
        .unwrap_or(0.0)
        .max(0.0);
    let datum_norm = match sign {
        Sign::Minus => v.first().l2_norm(),
        Sign::Plus => v.last().l2_norm(),
    };
    let source_integral = match source {
        Some(f) => cumulative_trapezoid(f.times(), &f.norms())
            .last()
            .copied()
            .unwrap_or(0.0),
        None => 0.0,
    };
    let growth = (4.0 * ctx.int_c).exp();
    let lhs = sup_norm + 2.0 * smoothing.sqrt();
    let rhs = 3.0 * (datum_norm + source_integral) * growth;
    let constants = BTreeMap::from([
        ("sup_norm".to_string(), sup_norm),
        ("smoothing_integral".to_string(), smoothing),
        ("datum_norm".to_string(), datum_norm),
        ("source_integral".to_string(), source_integral),
        ("int_c".to_string(), ctx.int_c),
        ("sup_logderiv".to_string(), ctx.sup_logderiv),
    ]);
    let name = match sign {
        Sign::Minus => "energy_minus",
        Sign::Plus => "energy_plus",
    };
    Ok(EstimateReport::judged(name, lhs, rhs, DEFAULT_SLACK, constants))
}

fn check_finite(f: &SpaceTimeField, name: &str) -> Result<()> {
    if f.slices()
        .iter()
        .any(|s| s.values().iter().any(|v| !v.re.is_finite() || !v.im.is_finite()))
    {
        return Err(Error::Data(format!("{name} has non-finite samples")));
    }
    Ok(())
}

/// `β∫∫a(|D^{1/2}w₊|² + |D^{1/2}w₋|²) ≤ c(‖w₋(0)‖² + ‖w₊(T)‖²)` with `c = 1`;
/// the implied constant is reported as `implied_c`.
pub fn smoothing_monitor_w(
    wplus: &SpaceTimeField,
    wminus: &SpaceTimeField,
    coeffs: &CoefficientField,
    beta: f64,
) -> Result<EstimateReport> {
    check_times(wplus.times(), wminus.times())?;
    wplus.grid().check_same(wminus.grid())?;
    check_finite(wplus, "w+")?;
    check_finite(wminus, "w-")?;
    let grid = wplus.grid();
    let half = half_derivative(grid);
    let fixed = if coeffs.is_time_independent() {
        Some(coeffs.sample(grid, wplus.times()[0])?.a)
    } else {
        None
    };
    let mut dens = Vec::with_capacity(wplus.len());
    for (k, &t) in wplus.times().iter().enumerate() {
        let a = match &fixed {
            Some(a) => a.clone(),
            None => coeffs.sample(grid, t)?.a,
        };
        dens.push(weighted_half_energy(&half, wplus.slice(k), &a) + weighted_half_energy(&half, wminus.slice(k), &a));
    }
    let lhs = beta
        * cumulative_trapezoid(wplus.times(), &dens)
            .last()
            .copied()
            .unwrap_or(0.0);
    let data = wminus.first().norm_sq() + wplus.last().norm_sq();
    let mut constants = BTreeMap::from([("data".to_string(), data), ("beta".to_string(), beta)]);
    if data > 0.0 {
        constants.insert("implied_c".to_string(), lhs / data);
    }
    Ok(EstimateReport::judged(
        "smoothing_w",
        lhs,
        data,
        DEFAULT_SLACK,
        constants,
    ))
}

/// `|c_fine / c_coarse − 1|` for an implied constant measured on two grids.
pub fn refinement_change(coarse: f64, fine: f64) -> f64 {
    (fine / coarse - 1.0).abs()
}

fn check_chain_exponents(q: f64, delta: f64) -> Result<()> {
    if !(q > 1.0 && q.is_finite()) {
        return Err(Error::Config(format!("q must lie in (1, inf), got {q}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Config(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(delta > 1.0 / q && delta > 1.0 - 1.0 / q) {
        return Err(Error::Config(format!(
            "delta = {delta} must exceed both 1/q = {} and 1 - 1/q = {}",
            1.0 / q,
            1.0 - 1.0 / q
        )));
    }
    Ok(())
}

fn bracket_inverse_lq(grid: &Grid1D, q: f64) -> f64 {
    let v: Vec<f64> = grid.nodes().iter().map(|x| 1.0 / (1.0 + x * x).sqrt()).collect();
    real_lp_norm(&v, grid.dx(), q)
}

/// `aϕ` and `∂(aϕ) = ∂a ϕ + a ∂ϕ` at time `t`, from the pointwise formulas
/// (the product is not periodic when `ϕ` differs at the two ends).
pub fn aphi_profile(coeffs: &CoefficientField, weight: &WeightProfile, t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let s = coeffs.sample(weight.grid(), t)?;
    let phi = weight.logderiv();
    let dphi = weight.logderiv_deriv(1);
    let b = s.a.iter().zip(phi).map(|(a, p)| a * p).collect();
    let db = (0..phi.len()).map(|j| s.da[j] * phi[j] + s.a[j] * dphi[j]).collect();
    Ok((b, db))
}

/// `‖J^δ g‖_q` for real samples `g`.
pub fn j_delta_norm(grid: &Grid1D, g: &[f64], q: f64, delta: f64) -> Result<f64> {
    let f = SpectralField::from_real(grid, g)?;
    lp_norm(&apply(&Multiplier::fractional(grid, delta, FracKind::J), &f), q)
}

/// `‖D^{1/2}[D^{1/2}, b]v‖₂ ≤ ‖J^δ ∂b‖_q ‖v‖₂` for `b = aϕ`. The derivative
/// of `b` is taken spectrally unless supplied.
pub fn commutator_chain_check(
    a_phi: &[f64],
    derivative: Option<&[f64]>,
    v: &SpectralField,
    q: f64,
    delta: f64,
) -> Result<EstimateReport> {
    check_chain_exponents(q, delta)?;
    let grid = v.grid();
    if a_phi.len() != grid.n() || derivative.is_some_and(|d| d.len() != grid.n()) {
        return Err(Error::Shape(format!(
            "coefficient samples do not match {} nodes",
            grid.n()
        )));
    }
    let half = half_derivative(grid);
    let bv = v.mul_real(a_phi)?;
    let comm = &apply(&half, &bv) - &apply(&half, v).mul_real(a_phi)?;
    let lhs = apply(&half, &comm).l2_norm();
    let db = match derivative {
        Some(d) => SpectralField::from_real(grid, d)?,
        None => apply(
            &Multiplier::derivative(grid, 1),
            &SpectralField::from_real(grid, a_phi)?,
        ),
    };
    let db_re: Vec<f64> = db.values().iter().map(|z| z.re).collect();
    let jd = j_delta_norm(grid, &db_re, q, delta)?;
    let rhs = jd * v.l2_norm();
    let weighted_sup = db
        .values()
        .iter()
        .zip(grid.nodes())
        .map(|(z, x)| (1.0 + x * x).sqrt() * z.re.abs())
        .fold(0.0, f64::max);
    let constants = BTreeMap::from([
        ("q".to_string(), q),
        ("delta".to_string(), delta),
        ("j_delta_derivative_lq".to_string(), jd),
        ("derivative_lq".to_string(), lp_norm(&db, q)?),
        ("weighted_derivative_sup".to_string(), weighted_sup),
        ("bracket_inverse_lq".to_string(), bracket_inverse_lq(grid, q)),
    ]);
    Ok(EstimateReport::judged(
        "commutator_chain",
        lhs,
        rhs,
        DEFAULT_SLACK,
        constants,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZLevelConfig {
    /// Measured constant of the first-order commutator bound, used in the
    /// `βλ` hypothesis.
    pub lemma_constant: f64,
    pub q: f64,
    pub delta: f64,
    /// Maximum number of slices at which the pairings are evaluated.
    pub max_samples: usize,
}

impl Default for ZLevelConfig {
    fn default() -> Self {
        Self {
            lemma_constant: 1.0,
            q: 2.0,
            delta: 0.6,
            max_samples: 64,
        }
    }
}

fn argmin_norm_in(z: &[SpectralField], times: &[f64], lo: f64, hi: f64) -> Option<usize> {
    (0..times.len())
        .filter(|&k| times[k] > lo && times[k] < hi)
        .min_by(|&i, &j| z[i].l2_norm().total_cmp(&z[j].l2_norm()))
}

/// Diagnostics for `z = D^{1/2}w`: the two commutator pairings, finiteness
/// of `z` at interior times near both ends, and the absorbed inequality
/// `βλ∫∫|D^{1/2}z|² ≤ C₀ + ‖J^δ∂a‖_q ∫‖D^{1/2}z‖²` on `[t₀, t₁]` with
/// `C₀ = ‖P₋z(t₀)‖² + ‖P₊z(t₁)‖² + 2∫K‖z‖²`.
pub fn z_level_diagnostics(
    w: &SpaceTimeField,
    coeffs: &CoefficientField,
    beta: f64,
    lambda: f64,
    cfg: &ZLevelConfig,
) -> Result<EstimateReport> {
    let name = "z_level";
    if !(lambda > 0.0) {
        return Ok(EstimateReport::not_applicable(
            name,
            BTreeMap::from([("lambda".to_string(), lambda)]),
        ));
    }
    check_chain_exponents(cfg.q, cfg.delta)?;
    check_finite(w, "w")?;
    if w.len() < 5 {
        return Err(Error::Shape(format!(
            "z-level diagnostics need at least 5 slices, got {}",
            w.len()
        )));
    }
    let grid = w.grid().clone();
    let times = w.times();
    let (t_start, t_end) = (times[0], times[times.len() - 1]);
    let span = t_end - t_start;

    let bundle = norm_bundle(coeffs, &grid, beta, times)?;
    let weighted: f64 = bundle
        .weighted_da_sup
        .iter()
        .zip(&bundle.weighted_d2a_sup)
        .map(|(a, b)| a + b)
        .fold(0.0, f64::max);
    let hypothesis_rhs = cfg.lemma_constant * weighted;
    let mut constants = BTreeMap::from([
        ("beta_lambda".to_string(), beta * lambda),
        ("hypothesis_rhs".to_string(), hypothesis_rhs),
        ("lemma_constant".to_string(), cfg.lemma_constant),
    ]);
    if beta * lambda < hypothesis_rhs {
        return Ok(EstimateReport::not_applicable(name, constants));
    }

    let half = half_derivative(&grid);
    let hil = Multiplier::hilbert(&grid);
    let dx1 = Multiplier::derivative(&grid, 1);
    let pp = Multiplier::projection(&grid, Sign::Plus);
    let pm = Multiplier::projection(&grid, Sign::Minus);
    let z: Vec<SpectralField> = w.slices().iter().map(|s| apply(&half, s)).collect();
    let dz: Vec<SpectralField> = z.iter().map(|s| apply(&half, s)).collect();
    let z_norms: Vec<f64> = z.iter().map(|s| s.l2_norm()).collect();
    let dz_sq: Vec<f64> = dz.iter().map(|s| s.norm_sq()).collect();

    let mut finite = true;
    let mut window = None;
    for (label, frac) in [("tenth", 10.0), ("twentieth", 20.0)] {
        let eps = span / frac;
        let i0 = argmin_norm_in(&z, times, t_start, t_start + eps);
        let i1 = argmin_norm_in(&z, times, t_end - eps, t_end);
        match (i0, i1) {
            (Some(i0), Some(i1)) => {
                finite &= z_norms[i0].is_finite() && z_norms[i1].is_finite();
                constants.insert(format!("z_norm_start_{label}"), z_norms[i0]);
                constants.insert(format!("z_norm_end_{label}"), z_norms[i1]);
                if window.is_none() {
                    window = Some((i0, i1));
                }
            }
            _ => {
                return Err(Error::Shape(format!(
                    "no slice strictly inside the end windows of width {eps:.3e}"
                )))
            }
        }
    }
    let (i0, i1) = window.expect("set above");

    let stride = ((i1 - i0) / cfg.max_samples.max(1)).max(1);
    let mut ratio20: f64 = 0.0;
    let mut ratio21: f64 = 0.0;
    let mut jd_max: f64 = 0.0;
    let mut k = i0;
    while k <= i1 {
        let sample = coeffs.sample(&grid, times[k])?;
        let a = sample.a;
        let jd = j_delta_norm(&grid, &sample.da, cfg.q, cfg.delta)?;
        jd_max = jd_max.max(jd);
        let comm = |g: &SpectralField| -> Result<SpectralField> {
            Ok(&apply(&half, &g.mul_real(&a)?) - &apply(&half, g).mul_real(&a)?)
        };
        let p20 = apply(&half, &comm(&apply(&hil, &z[k]))?);
        let p21 = comm(&apply(&dx1, &z[k]))?;
        for proj in [&pp, &pm] {
            let zs = apply(proj, &z[k]);
            let dzs = apply(&half, &zs);
            let b20 = jd * z_norms[k] * zs.l2_norm();
            if b20 > 0.0 {
                ratio20 = ratio20.max(p20.inner(&zs).norm() / b20);
            }
            let b21 = jd * dz_sq[k].sqrt() * dzs.l2_norm();
            if b21 > 0.0 {
                ratio21 = ratio21.max(p21.inner(&dzs).norm() / b21);
            }
        }
        k += stride;
    }

    let sub = &times[i0..=i1];
    let int_dz = cumulative_trapezoid(sub, &dz_sq[i0..=i1])
        .last()
        .copied()
        .unwrap_or(0.0);
    let kz: Vec<f64> = (i0..=i1)
        .map(|k| bundle.k_samples[k] * z_norms[k] * z_norms[k])
        .collect();
    let int_kz = cumulative_trapezoid(sub, &kz).last().copied().unwrap_or(0.0);
    let c0 = apply(&pm, &z[i0]).norm_sq() + apply(&pp, &z[i1]).norm_sq() + 2.0 * int_kz;
    let lhs = beta * lambda * int_dz;
    let rhs = c0 + jd_max * int_dz;

    let mid = &w.slices()[w.len() / 2];
    let c = mid.coeffs();
    let total: f64 = c.iter().map(|z| z.norm_sqr()).sum();
    let tail: f64 = c
        .iter()
        .zip(grid.freqs())
        .filter(|(_, xi)| xi.abs() > 0.5 * grid.max_freq())
        .map(|(z, _)| z.norm_sqr())
        .sum();

    constants.insert("pairing_ratio_20".into(), ratio20);
    constants.insert("pairing_ratio_21".into(), ratio21);
    constants.insert("c0".into(), c0);
    constants.insert("j_delta_derivative_lq".into(), jd_max);
    constants.insert("t0".into(), times[i0]);
    constants.insert("t1".into(), times[i1]);
    constants.insert("tail_fraction_mid".into(), if total > 0.0 { tail / total } else { 0.0 });
    constants.insert("z_finite".into(), if finite { 1.0 } else { 0.0 });

    let mut report = EstimateReport::judged(name, lhs, rhs, DEFAULT_SLACK, constants);
    let limit = 1.0 + DEFAULT_SLACK;
    if !finite || ratio20 > limit || ratio21 > limit {
        report.verdict = Verdict::Fail;
    }
    Ok(report)
}

/// `(w₊, w₋) = (P₊w, P₋w)`.
pub fn split_sides(w: &SpaceTimeField) -> (SpaceTimeField, SpaceTimeField) {
    (w.project(Sign::Plus), w.project(Sign::Minus))
}
