//! Commutators of Fourier multipliers with multiplication operators:
//! ensemble estimates of their operator constants, the dyadic
//! decomposition of `P₊(a P₋ ∂ᵐf)`, and fractional commutators.
//!
//! Products are taken pointwise without truncation, so every routine
//! requires the two factors to be band-limited with combined band below
//! `n/2`; the discrete products are then exact.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::random::{random_field, FieldKind};
use crate::spectral::{lp_block, lp_norm, DyadicRange, FracKind, Grid1D, LpKind, Multiplier, Sign, SpectralField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommutatorOp {
    Pplus,
    Pminus,
    Hilbert,
}

impl CommutatorOp {
    pub fn multiplier(self, grid: &Grid1D) -> Multiplier {
        match self {
            CommutatorOp::Pplus => Multiplier::projection(grid, Sign::Plus),
            CommutatorOp::Pminus => Multiplier::projection(grid, Sign::Minus),
            CommutatorOp::Hilbert => Multiplier::hilbert(grid),
        }
    }
}

impl fmt::Display for CommutatorOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CommutatorOp::Pplus => "pplus",
            CommutatorOp::Pminus => "pminus",
            CommutatorOp::Hilbert => "hilbert",
        })
    }
}

impl FromStr for CommutatorOp {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pplus" | "p+" => Ok(CommutatorOp::Pplus),
            "pminus" | "p-" => Ok(CommutatorOp::Pminus),
            "hilbert" | "h" => Ok(CommutatorOp::Hilbert),
            _ => Err(Error::Config(format!(
                "unknown operator {s:?}; expected pplus, pminus or hilbert"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CommutatorTrial {
    pub operator: CommutatorOp,
    pub a: SpectralField,
    pub f: SpectralField,
    pub l: u32,
    pub m: u32,
    pub p: f64,
}

/// Largest `|m|` whose DFT coefficient exceeds `1e-13` of the peak.
pub fn occupied_band(f: &SpectralField) -> usize {
    let c = f.coeffs();
    let peak = c.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return 0;
    }
    c.iter()
        .zip(f.grid().wavenumbers())
        .filter(|(z, _)| z.norm() > 1e-13 * peak)
        .map(|(_, m)| m.unsigned_abs() as usize)
        .max()
        .unwrap_or(0)
}

fn check_bands(a: &SpectralField, f: &SpectralField) -> Result<()> {
    a.grid().check_same(f.grid())?;
    let (ba, bf) = (occupied_band(a), occupied_band(f));
    let n = a.grid().n();
    if 2 * (ba + bf) >= n {
        return Err(Error::Validation(format!(
            "bands {ba} + {bf} reach n/2 = {}; products would alias",
            n / 2
        )));
    }
    Ok(())
}

fn check_real(a: &SpectralField) -> Result<()> {
    let peak = a.max_abs();
    let im = a.values().iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    if im > 1e-12 * peak.max(f64::MIN_POSITIVE) {
        return Err(Error::Data(format!(
            "coefficient is not real (imaginary part {im:.3e})"
        )));
    }
    Ok(())
}

fn apply(m: &Multiplier, f: &SpectralField) -> SpectralField {
    m.apply(f).expect("multiplier on the field's grid")
}

fn mul(a: &SpectralField, b: &SpectralField) -> SpectralField {
    a.pointwise(b).expect("same grid")
}

fn deriv(f: &SpectralField, order: u32) -> SpectralField {
    if order == 0 {
        f.clone()
    } else {
        apply(&Multiplier::derivative(f.grid(), order), f)
    }
}

fn frac(f: &SpectralField, s: f64) -> SpectralField {
    apply(&Multiplier::fractional(f.grid(), s, FracKind::D), f)
}

/// `[T, a] g = T(ag) − a T(g)`.
pub fn commutator(t: &Multiplier, a: &SpectralField, g: &SpectralField) -> SpectralField {
    &apply(t, &mul(a, g)) - &mul(a, &apply(t, g))
}

/// `∂ˡ [T, a] ∂ᵐ f`.
pub fn commutator_apply(trial: &CommutatorTrial) -> Result<SpectralField> {
    check_real(&trial.a)?;
    check_bands(&trial.a, &trial.f)?;
    let t = trial.operator.multiplier(trial.f.grid());
    let g = deriv(&trial.f, trial.m);
    Ok(deriv(&commutator(&t, &trial.a, &g), trial.l))
}

/// `‖∂ˡ[T,a]∂ᵐf‖_p / (‖∂^{l+m}a‖_∞ ‖f‖_p)`; `None` for a vanishing denominator.
pub fn trial_ratio(trial: &CommutatorTrial) -> Result<Option<f64>> {
    let out = commutator_apply(trial)?;
    let den = deriv(&trial.a, trial.l + trial.m).max_abs() * lp_norm(&trial.f, trial.p)?;
    if den <= 1e-300 {
        return Ok(None);
    }
    Ok(Some(lp_norm(&out, trial.p)? / den))
}

/// `[P₊,a]g = P₊(aP₋g) − P₋(aP₊g) − Π₀(aP₊g)` for zero-mean `g`; returns the
/// relative residual of this splitting.
pub fn splitting_residual(a: &SpectralField, g: &SpectralField) -> Result<f64> {
    check_bands(a, g)?;
    let grid = g.grid();
    let pp = Multiplier::projection(grid, Sign::Plus);
    let pm = Multiplier::projection(grid, Sign::Minus);
    let lhs = commutator(&pp, a, g);
    let ap = mul(a, &apply(&pp, g));
    let rhs =
        &(&apply(&pp, &mul(a, &apply(&pm, g))) - &apply(&pm, &ap)) - &apply(&Multiplier::mean_projection(grid), &ap);
    Ok((&lhs - &rhs).l2_norm() / (a.max_abs() * g.l2_norm()).max(f64::MIN_POSITIVE))
}

/// Relative residual of `[D, a]f = [H̃, a]∂f + H̃(∂a f)` with `H̃ = −H` the
/// transform of symbol `−i sgn ξ` (so that `D = H̃∂`).
pub fn note_identity_residual(a: &SpectralField, f: &SpectralField) -> Result<f64> {
    check_bands(a, f)?;
    let grid = f.grid();
    let d = Multiplier::fractional(grid, 1.0, FracKind::D);
    let ht = Multiplier::hilbert(grid).scaled(Complex64::new(-1.0, 0.0));
    let lhs = commutator(&d, a, f);
    let rhs = &commutator(&ht, a, &deriv(f, 1)) + &apply(&ht, &mul(&deriv(a, 1), f));
    let scale = deriv(a, 1).max_abs() * f.l2_norm() + a.max_abs() * deriv(f, 1).l2_norm();
    Ok((&lhs - &rhs).l2_norm() / scale.max(f64::MIN_POSITIVE))
}

/// Symbol-level residuals of `H = i(P₊ − P₋)` and `∂ = D^{1/2} H D^{1/2}`.
pub fn hilbert_identity_residuals(grid: &Grid1D) -> (f64, f64) {
    let h = Multiplier::hilbert(grid);
    let pp = Multiplier::projection(grid, Sign::Plus);
    let pm = Multiplier::projection(grid, Sign::Minus);
    let diff = pp
        .sum(&pm.scaled(Complex64::new(-1.0, 0.0)))
        .expect("same grid")
        .scaled(Complex64::new(0.0, 1.0));
    let r1 = h
        .symbol()
        .iter()
        .zip(diff.symbol())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let half = Multiplier::fractional(grid, 0.5, FracKind::D);
    let comp = half.compose(&h).and_then(|m| m.compose(&half)).expect("same grid");
    let d1 = Multiplier::derivative(grid, 1);
    let r2 = comp
        .symbol()
        .iter()
        .zip(d1.symbol())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max)
        / grid.max_freq();
    (r1, r2)
}

/// Ratio statistics of one ensemble, with the grid that produced them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundEstimate {
    pub label: String,
    pub trials: usize,
    pub skipped: usize,
    pub samples: Vec<f64>,
    pub max_ratio: f64,
    pub mean_ratio: f64,
    pub n: usize,
    pub half_length: f64,
    pub band_a: usize,
    pub band_f: usize,
    /// `max_ratio(2n) / max_ratio(n)`.
    pub stability_factor: Option<f64>,
    /// `max_ratio(2·bands) / max_ratio(bands)`.
    pub bandwidth_factor: Option<f64>,
}

impl BoundEstimate {
    fn from_samples(label: String, samples: Vec<f64>, skipped: usize, spec: &EnsembleGrid) -> Self {
        let max_ratio = samples.iter().cloned().fold(0.0, f64::max);
        let mean_ratio = if samples.is_empty() {
            0.0
        } else {
            samples.iter().sum::<f64>() / samples.len() as f64
        };
        Self {
            label,
            trials: samples.len() + skipped,
            skipped,
            samples,
            max_ratio,
            mean_ratio,
            n: spec.n,
            half_length: spec.half_length,
            band_a: spec.band_a,
            band_f: spec.band_f,
            stability_factor: None,
            bandwidth_factor: None,
        }
    }

    pub fn all_finite(&self) -> bool {
        self.samples.iter().all(|r| r.is_finite() && *r >= 0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleGrid {
    pub n: usize,
    pub half_length: f64,
    pub band_a: usize,
    pub band_f: usize,
}

impl Default for EnsembleGrid {
    fn default() -> Self {
        Self {
            n: 2048,
            half_length: 20.0,
            band_a: 32,
            band_f: 128,
        }
    }
}

impl EnsembleGrid {
    pub fn refined(&self) -> Self {
        Self { n: 2 * self.n, ..*self }
    }

    pub fn widened(&self) -> Self {
        Self {
            band_a: 2 * self.band_a,
            band_f: 2 * self.band_f,
            ..*self
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub operator: CommutatorOp,
    pub lm: Vec<(u32, u32)>,
    pub p: f64,
    pub trials: usize,
    pub seed: u64,
    pub grid: EnsembleGrid,
}

/// Seeded trial pair: real `a` with unit sup norm and zero-mean complex `f`.
pub fn trial_fields(grid: &Grid1D, spec: &EnsembleGrid, seed: u64, index: usize) -> (SpectralField, SpectralField) {
    let base = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(2 * index as u64);
    let a = random_field(grid, spec.band_a, FieldKind::Real, false, base);
    let a = &a * (1.0 / a.max_abs());
    let f = random_field(grid, spec.band_f, FieldKind::Complex, true, base + 1);
    (a, f)
}

fn run_lemma_ensemble(
    op: CommutatorOp,
    l: u32,
    m: u32,
    p: f64,
    trials: usize,
    seed: u64,
    eg: &EnsembleGrid,
) -> Result<BoundEstimate> {
    let grid = Grid1D::new(eg.n, eg.half_length)?;
    let mut samples = Vec::with_capacity(trials);
    let mut skipped = 0;
    for k in 0..trials {
        let (a, f) = trial_fields(&grid, eg, seed, k);
        let trial = CommutatorTrial {
            operator: op,
            a,
            f,
            l,
            m,
            p,
        };
        match trial_ratio(&trial)? {
            Some(r) => samples.push(r),
            None => skipped += 1,
        }
    }
    Ok(BoundEstimate::from_samples(
        format!("{op} l={l} m={m} p={p}"),
        samples,
        skipped,
        eg,
    ))
}

fn check_exponent(p: f64, name: &str) -> Result<()> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::Config(format!("{name} must lie in (1, inf), got {p}")));
    }
    Ok(())
}

/// One [`BoundEstimate`] per `(l, m)`, each with its refinement and bandwidth
/// stability factors.
pub fn estimate_constant(spec: &EnsembleSpec) -> Result<Vec<BoundEstimate>> {
    check_exponent(spec.p, "p")?;
    if spec.trials == 0 {
        return Err(Error::Config("ensemble needs at least one trial".into()));
    }
    spec.lm
        .iter()
        .map(|&(l, m)| {
            let run = |eg: &EnsembleGrid| run_lemma_ensemble(spec.operator, l, m, spec.p, spec.trials, spec.seed, eg);
            let mut base = run(&spec.grid)?;
            let refined = run(&spec.grid.refined())?;
            let wide = run(&spec.grid.widened())?;
            base.stability_factor = ratio_of(refined.max_ratio, base.max_ratio);
            base.bandwidth_factor = ratio_of(wide.max_ratio, base.max_ratio);
            Ok(base)
        })
        .collect()
}

fn ratio_of(a: f64, b: f64) -> Option<f64> {
    (b > 0.0).then(|| a / b)
}

/// Dyadic pieces of `P₊(a P₋ ∂ᵐf)` and the residuals of the identities used
/// to bound them. Residuals are relative to `‖a‖_∞ ‖∂ᵐf‖₂`.
#[derive(Clone, Debug)]
pub struct DecompositionAudit {
    pub i: SpectralField,
    pub ii: SpectralField,
    pub iii: SpectralField,
    pub summary: AuditSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditSummary {
    pub m: u32,
    pub scale: f64,
    pub ii_norm: f64,
    /// `‖III_j‖₂` for `j = −2..=2`, relative.
    pub iii_by_j: Vec<(i32, f64)>,
    pub support_low_high: f64,
    pub support_comparable: f64,
    pub reconstruction: f64,
}

pub fn decomposition_audit(a: &SpectralField, f: &SpectralField, m: u32) -> Result<DecompositionAudit> {
    check_real(a)?;
    check_bands(a, f)?;
    let grid = f.grid().clone();
    if m == 0 && f.mean().norm() > 1e-12 * f.max_abs().max(f64::MIN_POSITIVE) {
        return Err(Error::Data("decomposition needs a zero-mean f".into()));
    }
    let range = DyadicRange::of(&grid);
    let pp = Multiplier::projection(&grid, Sign::Plus);
    let pm = Multiplier::projection(&grid, Sign::Minus);
    let g = apply(&pm, &deriv(f, m));
    let scale = (a.max_abs() * g.l2_norm()).max(f64::MIN_POSITIVE);

    let block = |h: &SpectralField, k: i32, kind: LpKind| -> SpectralField {
        if range.contains(k) {
            lp_block(h, k, kind).expect("index in range")
        } else {
            SpectralField::zeros(&grid)
        }
    };
    let qa: Vec<SpectralField> = range.iter().map(|k| block(a, k, LpKind::Q)).collect();
    let qg: Vec<SpectralField> = range.iter().map(|k| block(&g, k, LpKind::Q)).collect();
    fn q_at(v: &[SpectralField], range: DyadicRange, k: i32) -> Option<&SpectralField> {
        range.contains(k).then(|| &v[(k - range.k_min) as usize])
    }

    let mut low_high = SpectralField::zeros(&grid);
    let mut high_low = SpectralField::zeros(&grid);
    let mut by_j: Vec<SpectralField> = (0..5).map(|_| SpectralField::zeros(&grid)).collect();
    let mut support_low_high: f64 = 0.0;
    let mut support_comparable: f64 = 0.0;
    for k in range.iter() {
        let qak = q_at(&qa, range, k).expect("in range");
        let prod = mul(qak, &block(&g, k, LpKind::P));
        let check = block(&prod, k, LpKind::QTilde);
        support_low_high = support_low_high.max((&prod - &check).l2_norm() / scale);
        low_high = &low_high + &prod;
        high_low = &high_low + &mul(&block(a, k, LpKind::P), q_at(&qg, range, k).expect("in range"));
        for j in -2..=2 {
            if let Some(qgj) = q_at(&qg, range, k - j) {
                let pr = mul(qak, qgj);
                let check = block(&pr, k, LpKind::PTilde);
                support_comparable = support_comparable.max((&pr - &check).l2_norm() / scale);
                let slot = &mut by_j[(j + 2) as usize];
                *slot = &*slot + &pr;
            }
        }
    }
    let i = apply(&pp, &low_high);
    let ii = apply(&pp, &high_low);
    let iii_parts: Vec<SpectralField> = by_j.iter().map(|s| apply(&pp, s)).collect();
    let mut iii = SpectralField::zeros(&grid);
    for s in &iii_parts {
        iii = &iii + s;
    }
    let target = apply(&pp, &mul(a, &g));
    let reconstruction = (&(&(&i + &ii) + &iii) - &target).l2_norm() / scale;
    let summary = AuditSummary {
        m,
        scale,
        ii_norm: ii.l2_norm() / scale,
        iii_by_j: (-2..=2).zip(iii_parts.iter().map(|s| s.l2_norm() / scale)).collect(),
        support_low_high,
        support_comparable,
        reconstruction,
    };
    Ok(DecompositionAudit { i, ii, iii, summary })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FractionalParams {
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
    pub q: f64,
    pub delta: f64,
}

impl FractionalParams {
    pub fn validate(&self) -> Result<()> {
        let FractionalParams {
            alpha,
            beta,
            p,
            q,
            delta,
        } = *self;
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::Config(format!("alpha must lie in [0, 1), got {alpha}")));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::Config(format!("beta must lie in (0, 1), got {beta}")));
        }
        if alpha + beta > 1.0 {
            return Err(Error::Config(format!("alpha + beta = {} exceeds 1", alpha + beta)));
        }
        check_exponent(p, "p")?;
        check_exponent(q, "q")?;
        if !(delta > 1.0 / q) {
            return Err(Error::Config(format!("delta = {delta} must exceed 1/q = {}", 1.0 / q)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FractionalSample {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: Option<f64>,
    /// Relative residual of the reduction to `α = 0`.
    pub reduction_residual: f64,
}

/// `‖D^α[D^β, a]D^{1−α−β} f‖_p` against `‖J^δ ∂a‖_q ‖f‖_p`.
pub fn fractional_commutator(
    a: &SpectralField,
    f: &SpectralField,
    params: &FractionalParams,
) -> Result<FractionalSample> {
    params.validate()?;
    check_real(a)?;
    check_bands(a, f)?;
    let FractionalParams {
        alpha,
        beta,
        p,
        q,
        delta,
    } = *params;
    let grid = f.grid();
    let g = frac(f, 1.0 - alpha - beta);
    let inner = commutator(&Multiplier::fractional(grid, beta, FracKind::D), a, &g);
    let out = frac(&inner, alpha);
    let red = &commutator(&Multiplier::fractional(grid, alpha + beta, FracKind::D), a, &g)
        - &commutator(
            &Multiplier::fractional(grid, alpha, FracKind::D),
            a,
            &frac(f, 1.0 - alpha),
        );
    let jd = apply(&Multiplier::fractional(grid, delta, FracKind::J), &deriv(a, 1));
    let lhs = lp_norm(&out, p)?;
    let rhs = lp_norm(&jd, q)? * lp_norm(f, p)?;
    let scale = out.l2_norm().max(red.l2_norm()).max(f64::MIN_POSITIVE);
    Ok(FractionalSample {
        lhs,
        rhs,
        ratio: (rhs > 1e-300).then(|| lhs / rhs),
        reduction_residual: if out.l2_norm() == 0.0 && red.l2_norm() == 0.0 {
            0.0
        } else {
            (&out - &red).l2_norm() / scale
        },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FractionalEnsemble {
    pub estimate: BoundEstimate,
    pub params: FractionalParams,
    pub max_reduction_residual: f64,
}

fn run_fractional(
    params: &FractionalParams,
    trials: usize,
    seed: u64,
    eg: &EnsembleGrid,
) -> Result<(BoundEstimate, f64)> {
    let grid = Grid1D::new(eg.n, eg.half_length)?;
    let mut samples = Vec::with_capacity(trials);
    let mut skipped = 0;
    let mut worst: f64 = 0.0;
    for k in 0..trials {
        let (a, f) = trial_fields(&grid, eg, seed, k);
        let s = fractional_commutator(&a, &f, params)?;
        worst = worst.max(s.reduction_residual);
        match s.ratio {
            Some(r) => samples.push(r),
            None => skipped += 1,
        }
    }
    let label = format!(
        "D^{}[D^{},a] p={} q={} delta={}",
        params.alpha, params.beta, params.p, params.q, params.delta
    );
    Ok((BoundEstimate::from_samples(label, samples, skipped, eg), worst))
}

pub fn fractional_ensemble(
    params: &FractionalParams,
    trials: usize,
    seed: u64,
    eg: &EnsembleGrid,
) -> Result<FractionalEnsemble> {
    params.validate()?;
    let (mut base, w0) = run_fractional(params, trials, seed, eg)?;
    let (refined, w1) = run_fractional(params, trials, seed, &eg.refined())?;
    let (wide, w2) = run_fractional(params, trials, seed, &eg.widened())?;
    base.stability_factor = ratio_of(refined.max_ratio, base.max_ratio);
    base.bandwidth_factor = ratio_of(wide.max_ratio, base.max_ratio);
    Ok(FractionalEnsemble {
        estimate: base,
        params: *params,
        max_reduction_residual: w0.max(w1).max(w2),
    })
}
