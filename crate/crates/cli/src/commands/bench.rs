use anyhow::{bail, Result};
use clap::Args;
use serde::Serialize;

use schro_core::commutator::{
    estimate_constant, fractional_ensemble, BoundEstimate, CommutatorOp, EnsembleGrid, EnsembleSpec,
    FractionalEnsemble, FractionalParams,
};

use super::{out_dir, parse_numbers, parse_pairs, Versions};
use crate::{OutArgs, Status};

/// Largest accepted relative change of the max ratio under grid refinement.
const REFINEMENT_TOL: f64 = 0.1;

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// pplus, pminus or hilbert
    #[arg(long, default_value = "pplus")]
    pub operator: CommutatorOp,
    /// Derivative orders `l,m;l,m;..`
    #[arg(long, default_value = "0,1;1,1;0,2")]
    pub lm: String,
    /// Comma-separated exponents; fractions like 4/3 are accepted
    #[arg(long, default_value = "4/3,2,4")]
    pub p: String,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = EnsembleGrid::default().n)]
    pub grid_n: usize,
    #[arg(long = "grid-L", default_value_t = EnsembleGrid::default().half_length)]
    pub grid_l: f64,
    #[arg(long, default_value_t = EnsembleGrid::default().band_a)]
    pub band_a: usize,
    #[arg(long, default_value_t = EnsembleGrid::default().band_f)]
    pub band_f: usize,
    /// Fractional commutator pairs `alpha,beta;..` (run instead of the operator ensembles)
    #[arg(long)]
    pub fractional: Option<String>,
    #[arg(long, default_value_t = 2.0)]
    pub q: f64,
    #[arg(long, default_value_t = 0.6)]
    pub delta: f64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Serialize)]
struct Summary<'a> {
    operator: Option<CommutatorOp>,
    seed: u64,
    trials: usize,
    estimates: &'a [BoundEstimate],
    fractional: &'a [FractionalEnsemble],
    passed: bool,
    versions: Versions,
}

fn acceptable(e: &BoundEstimate) -> bool {
    e.all_finite() && e.stability_factor.is_none_or(|f| (f - 1.0).abs() < REFINEMENT_TOL)
}

pub fn run(args: &BenchArgs) -> Result<Status> {
    let grid = EnsembleGrid {
        n: args.grid_n,
        half_length: args.grid_l,
        band_a: args.band_a,
        band_f: args.band_f,
    };
    let mut estimates = Vec::new();
    let mut fractional = Vec::new();
    match &args.fractional {
        None => {
            let lm = parse_pairs::<u32>(&args.lm)?;
            let ps = parse_numbers(&args.p)?;
            if lm.is_empty() || ps.is_empty() {
                bail!("--lm and --p must be non-empty");
            }
            for p in ps {
                let spec = EnsembleSpec {
                    operator: args.operator,
                    lm: lm.clone(),
                    p,
                    trials: args.trials,
                    seed: args.seed,
                    grid,
                };
                estimates.extend(estimate_constant(&spec)?);
            }
        }
        Some(pairs) => {
            let ps = parse_numbers(&args.p)?;
            for (alpha, beta) in parse_pairs::<f64>(pairs)? {
                for &p in &ps {
                    let params = FractionalParams {
                        alpha,
                        beta,
                        p,
                        q: args.q,
                        delta: args.delta,
                    };
                    fractional.push(fractional_ensemble(&params, args.trials, args.seed, &grid)?);
                }
            }
        }
    }
    let passed = estimates.iter().all(acceptable) && fractional.iter().all(|f| acceptable(&f.estimate));
    let out = out_dir(&args.out, None)?;
    let mut csv = String::from("label,sample,ratio\n");
    for e in estimates.iter().chain(fractional.iter().map(|f| &f.estimate)) {
        for (k, r) in e.samples.iter().enumerate() {
            csv.push_str(&format!("\"{}\",{k},{r:.16e}\n", e.label));
        }
    }
    out.write_bytes("bench.csv", csv.as_bytes())?;
    out.write_json(
        "bench-summary.json",
        &Summary {
            operator: args.fractional.is_none().then_some(args.operator),
            seed: args.seed,
            trials: args.trials,
            estimates: &estimates,
            fractional: &fractional,
            passed,
            versions: Versions::current(),
        },
    )?;
    Ok(if passed { Status::Pass } else { Status::EstimateFailure })
}
