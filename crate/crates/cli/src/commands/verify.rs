use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;

use schro_core::estimates::ZLevelConfig;
use schro_core::scenario::ScenarioConfig;
use schro_core::spacetime::SpaceTimeField;

use super::picard::{energy_from_iterate, final_estimates, SCENARIO_FILE, VMINUS_FILE, VPLUS_FILE};
use super::{status_of, write_estimates};
use crate::output::OutDir;
use crate::Status;

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Output directory of a previous `picard` run
    #[arg(long)]
    pub run: PathBuf,
    #[arg(long, default_value_t = ZLevelConfig::default().lemma_constant)]
    pub lemma_constant: f64,
    /// Where to write the reports [default: the run directory]
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

fn load_field(run: &Path, name: &str) -> Result<SpaceTimeField> {
    let path = run.join(name);
    let file = std::fs::File::open(&path).with_context(|| format!("cannot open {}", path.display()))?;
    SpaceTimeField::read_binary(std::io::BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

pub fn run(args: &VerifyArgs) -> Result<Status> {
    let scenario_path = args.run.join(SCENARIO_FILE);
    let text = std::fs::read_to_string(&scenario_path).with_context(|| {
        format!(
            "{} is not a stored run: cannot read {}",
            args.run.display(),
            scenario_path.display()
        )
    })?;
    let cfg = ScenarioConfig::from_json(&text).with_context(|| format!("scenario {}", scenario_path.display()))?;
    let vplus = load_field(&args.run, VPLUS_FILE)?;
    let vminus = load_field(&args.run, VMINUS_FILE)?;
    let grid = vplus.grid().clone();
    let coeffs = cfg.coefficient_field()?;
    let weight = cfg.weight(&grid)?;

    let mut reports = Vec::new();
    if cfg.estimates.energy {
        reports.extend(energy_from_iterate(&vplus, &vminus, &coeffs, &weight)?);
    }
    let ratio = weight.exp_ratio();
    let w = vplus.add(&vminus)?.try_map_slices(|_, s| s.mul_real(&ratio))?;
    reports.extend(final_estimates(&w, &coeffs, &cfg, cfg.estimates, args.lemma_constant)?);

    let out = OutDir::create(args.out_dir.as_ref().unwrap_or(&args.run))?;
    write_estimates(&out, &reports)?;
    Ok(status_of(&reports))
}
