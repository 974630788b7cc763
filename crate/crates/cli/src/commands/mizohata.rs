use anyhow::{bail, Context, Result};
use clap::Args;
use num_complex::Complex64;
use serde::Serialize;

use schro_core::coefficients::{mizohata_index, Expr, MizohataReport};
use schro_core::{Grid1D, SpectralField};

use super::{load_scenario, out_dir, Versions};
use crate::{OutArgs, Status};

#[derive(Args, Debug)]
pub struct MizohataArgs {
    /// `real` (sech x), `imaginary` (i times --constant), `weighted` (−2iaϕ of
    /// --scenario) or `expr:<expression in x>`
    #[arg(long, default_value = "real")]
    pub b: String,
    #[arg(long, default_value_t = 1.0)]
    pub constant: f64,
    /// Scenario supplying a and the weight for `--b weighted`
    #[arg(long, default_value = "benchmark")]
    pub scenario: String,
    /// Time at which time-dependent coefficients are sampled
    #[arg(long, default_value_t = 0.0)]
    pub time: f64,
    #[arg(long, default_value_t = 2048)]
    pub grid_n: usize,
    #[arg(long = "grid-L", default_value_t = 40.0)]
    pub grid_l: f64,
    /// Largest ray length [default: 3L/4]
    #[arg(long)]
    pub r_max: Option<f64>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Serialize)]
struct Report<'a> {
    b: &'a str,
    r_max: f64,
    n: usize,
    half_length: f64,
    #[serde(flatten)]
    report: &'a MizohataReport,
    versions: Versions,
}

fn coefficient(args: &MizohataArgs, grid: &Grid1D) -> Result<SpectralField> {
    Ok(match args.b.as_str() {
        "real" => SpectralField::from_fn(grid, |x| Complex64::new(1.0 / x.cosh(), 0.0)),
        "imaginary" => SpectralField::from_fn(grid, |_| Complex64::new(0.0, args.constant)),
        "weighted" => {
            let (mut cfg, _) = load_scenario(&args.scenario)?;
            cfg.grid.n = grid.n();
            cfg.grid.half_length = grid.half_length();
            let weight = cfg.weight(grid)?;
            let a = cfg.coefficient_field()?.sample(grid, args.time)?.a;
            let vals = a
                .iter()
                .zip(weight.logderiv())
                .map(|(a, phi)| Complex64::new(0.0, -2.0 * a * phi))
                .collect();
            SpectralField::new(grid, vals)?
        }
        other => match other.strip_prefix("expr:") {
            Some(src) => {
                let e = Expr::parse(src).with_context(|| format!("expression {src:?}"))?;
                SpectralField::new(grid, e.sample(grid.nodes(), args.time))?
            }
            None => bail!("unknown coefficient {other:?}; expected real, imaginary, weighted or expr:<expression>"),
        },
    })
}

pub fn run(args: &MizohataArgs) -> Result<Status> {
    let grid = Grid1D::new(args.grid_n, args.grid_l)?;
    let b = coefficient(args, &grid)?;
    let r_max = args.r_max.unwrap_or(0.75 * args.grid_l);
    let report = mizohata_index(&b, r_max)?;
    let out = out_dir(&args.out, None)?;
    out.write_csv(
        "mizohata.csv",
        "r,running_sup",
        report.radii.iter().zip(&report.running_sup).map(|(&r, &s)| vec![r, s]),
    )?;
    out.write_json(
        "report.json",
        &Report {
            b: &args.b,
            r_max,
            n: args.grid_n,
            half_length: args.grid_l,
            report: &report,
            versions: Versions::current(),
        },
    )?;
    println!(
        "verdict: {:?}, sup {:.6e}, slope {:.6e}",
        report.verdict, report.sup_value, report.growth_slope
    );
    Ok(Status::Pass)
}
