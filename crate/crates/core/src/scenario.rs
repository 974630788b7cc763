//! Scenario files: coefficients, weight, grid, data, stepper and Picard
//! settings in one JSON document, plus the built-in presets.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coefficients::{norm_bundle, select_horizon, CoefficientField, CoefficientSpec, HorizonSelection};
use crate::error::{Error, Result};
use crate::picard::{BvpProblem, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::random::{random_field, FieldKind};
use crate::spacetime::uniform_times;
use crate::spectral::{io, project, Grid1D, Sign, SpectralField};
use crate::stepper::StepperConfig;
use crate::weights::{WeightMode, WeightProfile};

pub const PRESETS: [&str; 3] = ["benchmark", "decoupled", "free"];
pub const PRESET_EPSILON: f64 = 1e-10;
pub const DEFAULT_RANDOM_BAND: usize = 32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n: usize,
    #[serde(rename = "L")]
    pub half_length: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            n: 2048,
            half_length: 40.0,
        }
    }
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid1D> {
        Grid1D::new(self.n, self.half_length)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    pub f: String,
    pub g: String,
}

impl Default for DataSpec {
    fn default() -> Self {
        Self {
            f: "gaussian".into(),
            g: "gaussian".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PicardSpec {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PicardSpec {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub coefficients: CoefficientSpec,
    pub weight_mode: WeightMode,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub data: DataSpec,
    #[serde(default)]
    pub stepper: StepperConfig,
    /// Fixed horizon instead of the selected one.
    #[serde(default)]
    pub horizon: Option<f64>,
    /// Window scanned by horizon selection, and its sample count.
    #[serde(default = "default_window")]
    pub horizon_window: f64,
    #[serde(default = "default_window_samples")]
    pub horizon_samples: usize,
    #[serde(default)]
    pub picard: PicardSpec,
    /// Times at which field dumps are written.
    #[serde(default)]
    pub output_times: Vec<f64>,
    #[serde(default)]
    pub estimates: EstimateToggles,
    /// Default output directory; the command line takes precedence.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimateToggles {
    pub energy: bool,
    pub smoothing: bool,
    pub z_level: bool,
}

impl Default for EstimateToggles {
    fn default() -> Self {
        Self {
            energy: true,
            smoothing: true,
            z_level: true,
        }
    }
}

fn default_window() -> f64 {
    0.25
}

fn default_window_samples() -> usize {
    5000
}

/// Modulated Gaussian `e^{-(x-x0)²/(2σ²)} e^{±ik0x}` on the requested side.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianDatum {
    pub k0: f64,
    pub x0: f64,
    pub sigma: f64,
}

impl Default for GaussianDatum {
    fn default() -> Self {
        Self {
            k0: 5.0,
            x0: 0.0,
            sigma: 2.0,
        }
    }
}

impl GaussianDatum {
    pub fn field(&self, grid: &Grid1D, sign: Sign) -> SpectralField {
        let s = match sign {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        };
        let raw = SpectralField::from_fn(grid, |x| {
            let env = (-(x - self.x0).powi(2) / (2.0 * self.sigma * self.sigma)).exp();
            Complex64::new(0.0, s * self.k0 * x).exp() * env
        });
        project(&raw, sign)
    }
}

fn parse_gaussian(args: &str) -> Result<GaussianDatum> {
    let mut g = GaussianDatum::default();
    for part in args.split(',').filter(|p| !p.trim().is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value in gaussian spec, got {part:?}")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad number in gaussian spec: {part:?}")))?;
        match k.trim() {
            "k0" => g.k0 = v,
            "x0" => g.x0 = v,
            "sigma" => g.sigma = v,
            other => return Err(Error::Config(format!("unknown gaussian parameter {other:?}"))),
        }
    }
    Ok(g)
}

/// Resolve a datum description for the `sign` side, normalized to `‖·‖₂ = 1/2`
/// for the named presets. Accepted forms: `zero`, `gaussian`,
/// `gaussian:k0=5,x0=0,sigma=2`, `mode:k` (wavenumber `|m| = k` on the
/// datum's side), `random` or `random:band=32` (seeded band-limited noise
/// under the envelope `e^{-x²/8}`), or a path to a
/// CSV/binary field dump.
pub fn resolve_datum(spec: &str, grid: &Grid1D, sign: Sign, base: Option<&Path>, seed: u64) -> Result<SpectralField> {
    let normalized = |f: SpectralField| {
        let n = f.l2_norm();
        if n == 0.0 {
            Err(Error::Data(format!("datum {spec:?} vanishes on this grid")))
        } else {
            Ok(f.scale(Complex64::new(0.5 / n, 0.0)))
        }
    };
    if spec == "zero" {
        return Ok(SpectralField::zeros(grid));
    }
    if spec == "gaussian" {
        return normalized(GaussianDatum::default().field(grid, sign));
    }
    if let Some(args) = spec.strip_prefix("gaussian:") {
        return normalized(parse_gaussian(args)?.field(grid, sign));
    }
    if spec == "random" || spec.starts_with("random:") {
        let band = match spec.strip_prefix("random:") {
            None => DEFAULT_RANDOM_BAND,
            Some(args) => args
                .strip_prefix("band=")
                .and_then(|b| b.trim().parse::<usize>().ok())
                .ok_or_else(|| Error::Config(format!("expected random:band=<int>, got {spec:?}")))?,
        };
        let noise = random_field(grid, band, FieldKind::Complex, false, seed);
        let env = SpectralField::from_fn(grid, |x| Complex64::new((-x * x / 8.0).exp(), 0.0));
        return normalized(project(&noise.pointwise(&env)?, sign));
    }
    if let Some(k) = spec.strip_prefix("mode:") {
        let k: i64 = k
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad mode index in {spec:?}")))?;
        let m = k.abs();
        if m == 0 || m >= grid.n() as i64 / 2 {
            return Err(Error::Config(format!("mode index {k} outside 1..{}", grid.n() / 2)));
        }
        let s = match sign {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        };
        let xi = s * std::f64::consts::PI * m as f64 / grid.half_length();
        return normalized(SpectralField::from_fn(grid, |x| Complex64::new(0.0, xi * x).exp()));
    }
    let path = match base {
        Some(b) if Path::new(spec).is_relative() => b.join(spec),
        _ => PathBuf::from(spec),
    };
    let bytes =
        std::fs::read(&path).map_err(|e| Error::Config(format!("cannot read datum {}: {e}", path.display())))?;
    let f = io::read_any(&bytes)?;
    grid.check_same(f.grid())?;
    Ok(f)
}

fn coeffs_spec(a: &str, w: &str, lambda: f64, beta: f64) -> CoefficientSpec {
    CoefficientSpec {
        a: a.into(),
        w: w.into(),
        lambda,
        beta,
    }
}

impl ScenarioConfig {
    pub fn preset(name: &str) -> Result<Self> {
        let stepper = StepperConfig {
            epsilon: PRESET_EPSILON,
            ..Default::default()
        };
        let base = |coefficients, weight_mode, horizon| ScenarioConfig {
            name: name.to_string(),
            coefficients,
            weight_mode,
            grid: GridSpec::default(),
            data: DataSpec::default(),
            stepper: stepper.clone(),
            horizon,
            horizon_window: default_window(),
            horizon_samples: default_window_samples(),
            picard: PicardSpec::default(),
            output_times: Vec::new(),
            estimates: EstimateToggles::default(),
            out_dir: None,
            seed: 0,
        };
        match name {
            "benchmark" => Ok(base(
                coeffs_spec("1 + 0.1*exp(-t)*sech(x)", "0.05*sech(x)", 0.9, 1.0),
                WeightMode::Truncated,
                None,
            )),
            "decoupled" => Ok(base(coeffs_spec("1", "0", 1.0, 1.0), WeightMode::PureExponential, None)),
            "free" => Ok(base(
                coeffs_spec("1", "0", 1.0, 1.0),
                WeightMode::PureExponential,
                Some(0.5),
            )),
            other => Err(Error::Config(format!(
                "unknown preset {other:?}; available: {}",
                PRESETS.join(", ")
            ))),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// A preset name or a path to a JSON scenario.
    pub fn load(spec: &str) -> Result<(Self, Option<PathBuf>)> {
        if PRESETS.contains(&spec) {
            return Ok((Self::preset(spec)?, None));
        }
        let path = PathBuf::from(spec);
        let text =
            std::fs::read_to_string(&path).map_err(|e| Error::Config(format!("cannot read scenario {spec}: {e}")))?;
        let cfg = Self::from_json(&text)?;
        Ok((cfg, path.parent().map(Path::to_path_buf)))
    }

    pub fn beta(&self) -> f64 {
        self.coefficients.beta
    }

    pub fn grid(&self) -> Result<Grid1D> {
        self.grid.build()
    }

    pub fn weight(&self, grid: &Grid1D) -> Result<WeightProfile> {
        WeightProfile::build(self.beta(), grid, self.weight_mode)
    }

    pub fn coefficient_field(&self) -> Result<CoefficientField> {
        CoefficientField::from_spec(&self.coefficients, self.horizon_window.max(self.horizon.unwrap_or(0.0)))
    }

    /// Horizon from the corrected selection rule on `[0, horizon_window]`.
    pub fn select_horizon(&self, grid: &Grid1D, delta: f64) -> Result<HorizonSelection> {
        let coeffs = self.coefficient_field()?;
        let times = uniform_times(0.0, self.horizon_window, self.horizon_samples.max(2));
        let bundle = norm_bundle(&coeffs, grid, self.beta(), &times)?;
        select_horizon(&bundle, delta)
    }

    pub fn build(&self, base: Option<&Path>) -> Result<Scenario> {
        let grid = self.grid()?;
        let weight = self.weight(&grid)?;
        let coeffs = self.coefficient_field()?;
        let f = resolve_datum(&self.data.f, &grid, Sign::Minus, base, self.seed)?;
        let g = resolve_datum(&self.data.g, &grid, Sign::Plus, base, self.seed.wrapping_add(1))?;
        weight.check_support(&f, 1e-10)?;
        weight.check_support(&g, 1e-10)?;
        let delta = f.l2_norm() + g.l2_norm();
        let selection = self.select_horizon(&grid, delta)?;
        let (horizon, overridden) = match self.horizon {
            Some(t) => (t, true),
            None => (selection.horizon, false),
        };
        coeffs.validate(&grid, &uniform_times(0.0, horizon, 16))?;
        let problem = BvpProblem {
            f,
            g,
            coeffs,
            weight,
            horizon,
            horizon_overridden: overridden,
            stepper: self.stepper.clone(),
            tol: self.picard.tol,
            max_iter: self.picard.max_iter,
        };
        Ok(Scenario {
            config: self.clone(),
            selection,
            problem,
        })
    }
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub selection: HorizonSelection,
    pub problem: BvpProblem,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_build() {
        for name in PRESETS {
            let s = ScenarioConfig::preset(name).unwrap().build(None).unwrap();
            assert!((s.problem.delta() - 1.0).abs() < 1e-12);
            assert!(s.problem.horizon > 0.0);
        }
        let b = ScenarioConfig::preset("benchmark").unwrap().build(None).unwrap();
        assert!(!b.problem.horizon_overridden);
        assert!(b.problem.horizon < 0.0625);
        assert!(ScenarioConfig::preset("nope").is_err());
    }

    #[test]
    fn json_round_trip_and_unknown_keys() {
        let c = ScenarioConfig::preset("benchmark").unwrap();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(ScenarioConfig::from_json(&text).unwrap(), c);
        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v["bogus"] = serde_json::json!(1);
        assert!(ScenarioConfig::from_json(&v.to_string()).is_err());
        v.as_object_mut().unwrap().remove("bogus");
        v["coefficients"]["extra"] = serde_json::json!("x");
        assert!(ScenarioConfig::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn datum_forms() {
        let g = Grid1D::new(256, 40.0).unwrap();
        let f = resolve_datum("gaussian:k0=4,x0=1,sigma=1.5", &g, Sign::Minus, None, 0).unwrap();
        assert!((f.l2_norm() - 0.5).abs() < 1e-12);
        let m = resolve_datum("mode:6", &g, Sign::Plus, None, 0).unwrap();
        assert!((&project(&m, Sign::Plus) - &m).l2_norm() < 1e-12);
        assert_eq!(resolve_datum("zero", &g, Sign::Plus, None, 0).unwrap().l2_norm(), 0.0);
        assert!(resolve_datum("gaussian:q=1", &g, Sign::Plus, None, 0).is_err());
        assert!(resolve_datum("mode:500", &g, Sign::Plus, None, 0).is_err());
        assert!(resolve_datum("/nonexistent/file.csv", &g, Sign::Plus, None, 0).is_err());
        let r1 = resolve_datum("random:band=20", &g, Sign::Minus, None, 3).unwrap();
        let r2 = resolve_datum("random:band=20", &g, Sign::Minus, None, 3).unwrap();
        assert_eq!(r1.values(), r2.values());
        assert!((r1.l2_norm() - 0.5).abs() < 1e-12);
        assert!(project(&r1, Sign::Plus).l2_norm() < 1e-14);
        assert!(resolve_datum("random:band=x", &g, Sign::Minus, None, 3).is_err());
    }
}
