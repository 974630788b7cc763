use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use serde::Serialize;

use schro_core::coefficients::{CoefficientField, HorizonSelection};
use schro_core::estimates::{
    energy_monitor, energy_monitor_in, smoothing_monitor_w, split_sides, z_level_diagnostics, EstimateReport,
    MonitorContext, ZLevelConfig,
};
use schro_core::picard::{
    assemble_solution, coupling_lambda, pde_residual, picard_solve_observed, PicardReport, SubSolve,
};
use schro_core::scenario::{EstimateToggles, ScenarioConfig};
use schro_core::spacetime::SpaceTimeField;
use schro_core::weights::WeightProfile;
use schro_core::Sign;

use super::{load_scenario, out_dir, status_of, write_estimates, Versions};
use crate::output::{time_tag, OutDir};
use crate::{OutArgs, Status};

pub const VPLUS_FILE: &str = "run/vplus.stf";
pub const VMINUS_FILE: &str = "run/vminus.stf";
pub const SCENARIO_FILE: &str = "scenario.json";

#[derive(Args, Debug)]
pub struct PicardArgs {
    /// Preset name or scenario JSON file
    #[arg(long, default_value = "benchmark", conflicts_with = "batch")]
    pub scenario: String,
    /// JSON array of scenarios, each written to its own subdirectory
    #[arg(long)]
    pub batch: Option<PathBuf>,
    /// Parallel scenario runs for --batch
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Override the selected horizon
    #[arg(long = "T")]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Commutator constant used by the z-level hypothesis check
    #[arg(long, default_value_t = ZLevelConfig::default().lemma_constant)]
    pub lemma_constant: f64,
    /// Maximum number of time slices kept in the stored run
    #[arg(long, default_value_t = 256)]
    pub store_slices: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    pub horizon: Option<f64>,
    pub epsilon: Option<f64>,
    pub lemma_constant: f64,
    pub store_slices: usize,
}

#[derive(Serialize)]
struct Residuals {
    pde_max: f64,
    boundary_f: f64,
    boundary_g: f64,
}

#[derive(Serialize)]
struct RunReport<'a> {
    scenario: &'a ScenarioConfig,
    horizon_selection: &'a HorizonSelection,
    horizon: f64,
    picard: &'a PicardReport,
    residuals: Residuals,
    estimates: &'a [EstimateReport],
    versions: Versions,
}

#[derive(Serialize)]
struct Timing {
    build_s: f64,
    solve_s: f64,
    post_s: f64,
}

pub fn run(args: &PicardArgs) -> Result<Status> {
    let opts = RunOptions {
        horizon: args.horizon,
        epsilon: args.epsilon,
        lemma_constant: args.lemma_constant,
        store_slices: args.store_slices,
    };
    match &args.batch {
        None => {
            let (cfg, base) = load_scenario(&args.scenario)?;
            let out = out_dir(&args.out, cfg.out_dir.as_deref())?;
            run_scenario(cfg, base.as_deref(), &out, &opts)
        }
        Some(path) => run_batch(path, args, &opts),
    }
}

fn run_batch(path: &Path, args: &PicardArgs, opts: &RunOptions) -> Result<Status> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read batch file {}", path.display()))?;
    let configs: Vec<ScenarioConfig> =
        serde_json::from_str(&text).with_context(|| format!("batch file {}", path.display()))?;
    if configs.is_empty() {
        bail!("batch file {} holds no scenarios", path.display());
    }
    let base = path.parent().map(Path::to_path_buf);
    let root = out_dir(&args.out, None)?;
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<(usize, Result<Status>)>> = Mutex::new(Vec::new());
    let jobs = args.jobs.clamp(1, configs.len());
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                let Some(cfg) = configs.get(k) else { break };
                let dir = root.path().join(format!("{k:03}_{}", sanitize(&cfg.name)));
                let r = OutDir::create(&dir)
                    .and_then(|out| run_scenario(cfg.clone(), base.as_deref(), &out, opts))
                    .with_context(|| format!("batch entry {k} ({})", cfg.name));
                results.lock().expect("poisoned").push((k, r));
            });
        }
    });
    let mut results = results.into_inner().expect("poisoned");
    results.sort_by_key(|r| r.0);
    let mut status = Status::Pass;
    let mut errors = Vec::new();
    for (k, r) in results {
        match r {
            Ok(s) => status = status.max(s),
            Err(e) => {
                eprintln!("error: {e:#}");
                errors.push(k);
            }
        }
    }
    if !errors.is_empty() {
        return Err(anyhow!(
            "{} of {} batch entries failed: {errors:?}",
            errors.len(),
            configs.len()
        ));
    }
    Ok(status)
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect()
}

pub fn run_scenario(mut cfg: ScenarioConfig, base: Option<&Path>, out: &OutDir, opts: &RunOptions) -> Result<Status> {
    let t0 = Instant::now();
    if let Some(e) = opts.epsilon {
        cfg.stepper.epsilon = e;
    }
    if let Some(t) = opts.horizon {
        cfg.horizon = Some(t);
    }
    let scenario = cfg.build(base).context("building scenario")?;
    let p = &scenario.problem;
    if p.horizon_overridden {
        eprintln!(
            "warning: horizon fixed at T = {} (selected T = {:.6}); contraction is not guaranteed",
            p.horizon, scenario.selection.horizon
        );
    }
    let t1 = Instant::now();

    let toggles = cfg.estimates;
    let mut reports = Vec::new();
    let mut ctx: Option<MonitorContext> = None;
    let mut observe = |sub: &SubSolve| -> schro_core::Result<()> {
        if !toggles.energy {
            return Ok(());
        }
        if ctx.is_none() {
            ctx = Some(MonitorContext::new(&p.coeffs, &p.weight, sub.solution.times())?);
        }
        let mut r = energy_monitor_in(sub.solution, sub.source, sub.sign, ctx.as_ref().expect("set above"))?;
        r.name = format!("{}_sweep{}", r.name, sub.m);
        reports.push(r);
        Ok(())
    };
    let (state, report) = picard_solve_observed(p, &mut observe)?;
    let t2 = Instant::now();

    let assembled = assemble_solution(&state.vplus, &state.vminus, &p.weight, &p.f, &p.g)?;
    let residual = pde_residual(&assembled.v, &p.coeffs, &p.weight)?;
    reports.extend(final_estimates(
        &assembled.w,
        &p.coeffs,
        &cfg,
        toggles,
        opts.lemma_constant,
    )?);

    let rows = (0..assembled.v.len()).map(|k| {
        vec![
            assembled.v.times()[k],
            state.vplus.slice(k).l2_norm(),
            state.vminus.slice(k).l2_norm(),
            assembled.w.slice(k).l2_norm(),
        ]
    });
    out.write_csv("norms.csv", "t,norm_vplus,norm_vminus,norm_w", rows)?;
    for &t in &cfg.output_times {
        let tag = time_tag(t);
        out.write_field(&format!("fields/v_t{tag}.csv"), &assembled.v.at(t))?;
        out.write_field(&format!("fields/w_t{tag}.csv"), &assembled.w.at(t))?;
    }

    let mut echo = cfg.clone();
    echo.horizon = Some(p.horizon);
    out.write_json(SCENARIO_FILE, &echo)?;
    let stride = store_stride(state.vplus.len() - 1, opts.store_slices);
    store_field(out, VPLUS_FILE, &state.vplus.subsample(stride)?)?;
    store_field(out, VMINUS_FILE, &state.vminus.subsample(stride)?)?;

    write_estimates(out, &reports)?;
    out.write_json(
        "report.json",
        &RunReport {
            scenario: &cfg,
            horizon_selection: &scenario.selection,
            horizon: p.horizon,
            picard: &report,
            residuals: Residuals {
                pde_max: residual.max,
                boundary_f: assembled.residual_f,
                boundary_g: assembled.residual_g,
            },
            estimates: &reports,
            versions: Versions::current(),
        },
    )?;
    out.write_json(
        "timing.json",
        &Timing {
            build_s: (t1 - t0).as_secs_f64(),
            solve_s: (t2 - t1).as_secs_f64(),
            post_s: t2.elapsed().as_secs_f64(),
        },
    )?;
    if !report.converged {
        bail!(
            "Picard iteration did not converge in {} sweeps (tolerance {:.1e})",
            report.iterations.len(),
            p.tol
        );
    }
    Ok(status_of(&reports))
}

/// Smallest divisor of `steps` that keeps at most `max_slices + 1` slices.
fn store_stride(steps: usize, max_slices: usize) -> usize {
    let target = steps.div_ceil(max_slices.max(1)).max(1);
    (target..=steps.max(1)).find(|s| steps.is_multiple_of(*s)).unwrap_or(1)
}

fn store_field(out: &OutDir, name: &str, f: &SpaceTimeField) -> Result<PathBuf> {
    out.write_with(name, |w| Ok(f.write_binary(w)?))
}

/// Smoothing and z-level monitors on the assembled `w = e^{βx}u`.
pub fn final_estimates(
    w: &SpaceTimeField,
    coeffs: &CoefficientField,
    cfg: &ScenarioConfig,
    toggles: EstimateToggles,
    lemma_constant: f64,
) -> Result<Vec<EstimateReport>> {
    let beta = cfg.beta();
    let mut reports = Vec::new();
    if toggles.smoothing {
        let (wp, wm) = split_sides(w);
        reports.push(smoothing_monitor_w(&wp, &wm, coeffs, beta)?);
    }
    if toggles.z_level {
        let zc = ZLevelConfig {
            lemma_constant,
            ..ZLevelConfig::default()
        };
        reports.push(z_level_diagnostics(w, coeffs, beta, cfg.coefficients.lambda, &zc)?);
    }
    Ok(reports)
}

/// Energy monitors for a stored final iterate, with the coupling sources
/// recomputed from the iterate itself.
pub fn energy_from_iterate(
    vplus: &SpaceTimeField,
    vminus: &SpaceTimeField,
    coeffs: &CoefficientField,
    weight: &WeightProfile,
) -> Result<Vec<EstimateReport>> {
    let mut src_plus = Vec::with_capacity(vplus.len());
    let mut src_minus = Vec::with_capacity(vplus.len());
    for (k, &t) in vplus.times().iter().enumerate() {
        let (lp, lm) = coupling_lambda(vplus.slice(k), vminus.slice(k), coeffs, weight, t)?;
        src_plus.push(lp);
        src_minus.push(lm);
    }
    let times = vplus.times().to_vec();
    let sp = SpaceTimeField::new(vplus.grid(), times.clone(), src_plus)?;
    let sm = SpaceTimeField::new(vplus.grid(), times, src_minus)?;
    Ok(vec![
        energy_monitor(vminus, Some(&sm), Sign::Minus, coeffs, weight)?,
        energy_monitor(vplus, Some(&sp), Sign::Plus, coeffs, weight)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stride_divides_steps() {
        assert_eq!(store_stride(2048, 256), 8);
        assert_eq!(store_stride(2048, 5000), 1);
        assert_eq!(store_stride(100, 30), 4);
        assert_eq!(store_stride(7, 2), 7);
        assert_eq!(sanitize("a b/c-1"), "a_b_c-1");
    }
}
