use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use serde::Serialize;

use schro_core::estimates::{energy_monitor, EstimateReport};
use schro_core::scenario::ScenarioConfig;
use schro_core::stepper::{epsilon_study, solve_linear, Direction, EpsilonStudy, LinearProblem, Scheme};
use schro_core::Sign;

use super::{load_scenario, out_dir, parse_numbers, status_of, write_estimates, Versions};
use crate::output::time_tag;
use crate::{OutArgs, Status};

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum DirectionArg {
    /// From t = 0 with the datum f (negative-frequency side)
    Forward,
    /// From t = T with the datum g (positive-frequency side)
    Backward,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SchemeArg {
    EtdRk4,
    DuhamelPicard,
}

#[derive(Args, Debug)]
pub struct LinearArgs {
    /// Preset name or scenario JSON file
    #[arg(long, default_value = "benchmark")]
    pub scenario: String,
    #[arg(long, value_enum, default_value = "forward")]
    pub direction: DirectionArg,
    #[arg(long = "T")]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeArg>,
    /// Comma-separated decreasing viscosities for the vanishing-viscosity study
    #[arg(long)]
    pub epsilon_schedule: Option<String>,
    /// Run the vanishing-viscosity study over the schedule
    #[arg(long)]
    pub epsilon_study: bool,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Serialize)]
struct LinearReport<'a> {
    scenario: &'a ScenarioConfig,
    direction: Direction,
    horizon: f64,
    epsilon: f64,
    steps: usize,
    sup_norm: f64,
    energy: &'a EstimateReport,
    epsilon_study: Option<EpsilonStudy>,
    versions: Versions,
}

pub fn run(args: &LinearArgs) -> Result<Status> {
    let (mut cfg, base) = load_scenario(&args.scenario)?;
    if let Some(t) = args.horizon {
        cfg.horizon = Some(t);
    }
    if let Some(e) = args.epsilon {
        cfg.stepper.epsilon = e;
    }
    if args.dt.is_some() {
        cfg.stepper.dt = args.dt;
    }
    if let Some(s) = args.scheme {
        cfg.stepper.scheme = match s {
            SchemeArg::EtdRk4 => Scheme::EtdRk4,
            SchemeArg::DuhamelPicard => Scheme::DuhamelPicard,
        };
    }
    if let Some(s) = &args.epsilon_schedule {
        cfg.stepper.epsilon_schedule = parse_numbers(s)?;
    }
    let scenario = cfg.build(base.as_deref()).context("building scenario")?;
    let p = scenario.problem;
    let out = out_dir(&args.out, cfg.out_dir.as_deref())?;

    let (direction, sign, datum) = match args.direction {
        DirectionArg::Forward => (Direction::Forward, Sign::Minus, p.f.clone()),
        DirectionArg::Backward => (Direction::Backward, Sign::Plus, p.g.clone()),
    };
    let lp = LinearProblem {
        direction,
        coeffs: p.coeffs.clone(),
        weight: p.weight.clone(),
        source: None,
        datum,
        horizon: p.horizon,
    };
    let v = solve_linear(&lp, &p.stepper)?;
    let energy = energy_monitor(&v, None, sign, &p.coeffs, &p.weight)?;
    let study = if args.epsilon_study {
        Some(epsilon_study(&lp, &p.stepper)?)
    } else {
        None
    };

    out.write_csv(
        "norms.csv",
        "t,norm_v",
        v.times().iter().zip(v.norms()).map(|(&t, n)| vec![t, n]),
    )?;
    for &t in &cfg.output_times {
        out.write_field(&format!("fields/v_t{}.csv", time_tag(t)), &v.at(t))?;
    }
    let reports = vec![energy];
    write_estimates(&out, &reports)?;
    out.write_json(
        "report.json",
        &LinearReport {
            scenario: &cfg,
            direction,
            horizon: p.horizon,
            epsilon: p.stepper.epsilon,
            steps: v.len() - 1,
            sup_norm: v.sup_l2(),
            energy: &reports[0],
            epsilon_study: study,
            versions: Versions::current(),
        },
    )?;
    Ok(status_of(&reports))
}
