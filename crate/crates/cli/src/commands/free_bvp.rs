use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Serialize;

use schro_core::free_bvp::{free_slice, solve_free, verify_free_estimate, FreeBvpData, FreeEstimateReport};
use schro_core::scenario::resolve_datum;
use schro_core::spacetime::uniform_times;
use schro_core::spectral::project;
use schro_core::{Grid1D, Sign};

use super::{out_dir, parse_numbers, Versions};
use crate::output::time_tag;
use crate::{OutArgs, Status};

const NORM_SAMPLES: usize = 128;
const RATIO_TOL: f64 = 1e-10;

#[derive(Args, Debug)]
pub struct FreeBvpArgs {
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long = "T", default_value_t = 1.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 2048)]
    pub grid_n: usize,
    #[arg(long = "grid-L", default_value_t = 40.0)]
    pub grid_l: f64,
    /// Field file or preset (zero, gaussian, gaussian:k0=..,x0=..,sigma=.., mode:k, random:band=..)
    #[arg(long, default_value = "gaussian")]
    pub datum_f: String,
    #[arg(long, default_value = "gaussian")]
    pub datum_g: String,
    /// Comma-separated times for field dumps [default: 0,T]
    #[arg(long)]
    pub times: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Serialize)]
struct FreeBvpReport<'a> {
    beta: f64,
    horizon: f64,
    n: usize,
    half_length: f64,
    datum_f: &'a str,
    datum_g: &'a str,
    estimate: FreeEstimateReport,
    residual_f: f64,
    residual_g: f64,
    passed: bool,
    versions: Versions,
}

pub fn run(args: &FreeBvpArgs) -> Result<Status> {
    let grid = Grid1D::new(args.grid_n, args.grid_l)?;
    let f = resolve_datum(&args.datum_f, &grid, Sign::Minus, None, args.seed).context("datum f")?;
    let g = resolve_datum(&args.datum_g, &grid, Sign::Plus, None, args.seed.wrapping_add(1)).context("datum g")?;
    let dump_times = match &args.times {
        Some(t) => parse_numbers(t)?,
        None => vec![0.0, args.horizon],
    };
    if dump_times.iter().any(|&t| !(0.0..=args.horizon).contains(&t)) {
        bail!("--times must lie in [0, T = {}]", args.horizon);
    }
    let out = out_dir(&args.out, None)?;

    let data = FreeBvpData::new(
        f.clone(),
        g.clone(),
        args.beta,
        args.horizon,
        uniform_times(0.0, args.horizon, NORM_SAMPLES),
    )?;
    let v = solve_free(&data)?;
    let estimate = verify_free_estimate(&v, &data);
    let residual_f = (&project(v.first(), Sign::Minus) - &f).l2_norm();
    let residual_g = (&project(v.last(), Sign::Plus) - &g).l2_norm();
    let passed = estimate.ratio <= 1.0 + RATIO_TOL;

    let rows = v.times().iter().zip(v.slices()).map(|(&t, s)| {
        vec![
            t,
            project(s, Sign::Plus).l2_norm(),
            project(s, Sign::Minus).l2_norm(),
            s.l2_norm(),
        ]
    });
    out.write_csv("norms.csv", "t,norm_vplus,norm_vminus,norm_v", rows)?;

    let (fh, gh) = (f.coeffs(), g.coeffs());
    for &t in &dump_times {
        out.write_field(
            &format!("fields/v_t{}.csv", time_tag(t)),
            &free_slice(&data, &fh, &gh, t),
        )?;
    }

    out.write_json(
        "report.json",
        &FreeBvpReport {
            beta: args.beta,
            horizon: args.horizon,
            n: args.grid_n,
            half_length: args.grid_l,
            datum_f: &args.datum_f,
            datum_g: &args.datum_g,
            estimate,
            residual_f,
            residual_g,
            passed,
            versions: Versions::current(),
        },
    )?;
    Ok(if passed { Status::Pass } else { Status::EstimateFailure })
}
