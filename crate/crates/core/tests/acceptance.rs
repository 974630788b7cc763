use std::time::{Duration, Instant};

use num_complex::Complex64;
use schro_core::coefficients::{mizohata_index, MizohataVerdict};
use schro_core::commutator::{
    commutator_apply, decomposition_audit, estimate_constant, fractional_ensemble, hilbert_identity_residuals,
    note_identity_residual, splitting_residual, trial_fields, CommutatorOp, CommutatorTrial, EnsembleGrid,
    EnsembleSpec, FractionalParams,
};
use schro_core::estimates::{
    energy_monitor_in, refinement_change, smoothing_monitor_w, split_sides, z_level_diagnostics, MonitorContext,
    Verdict, ZLevelConfig,
};
use schro_core::free_bvp::{forward_growth_demo, solve_free, verify_free_estimate, FreeBvpData};
use schro_core::picard::{assemble_solution, pde_residual, picard_solve, picard_solve_observed, Assembled, SubSolve};
use schro_core::random::{random_field, FieldKind};
use schro_core::scenario::{Scenario, ScenarioConfig};
use schro_core::spacetime::uniform_times;
use schro_core::spectral::project;
use schro_core::stepper::{
    epsilon_study, smoothing_constant, smoothing_oracle, smoothing_resolved, Direction, LinearProblem,
};
use schro_core::{Grid1D, Sign, SpectralField};

struct Outcome {
    pass: bool,
    detail: String,
}

fn run(id: u32, name: &str, limit: Option<Duration>, body: impl FnOnce() -> schro_core::Result<Outcome>) -> bool {
    let start = Instant::now();
    let out = body().unwrap_or_else(|e| Outcome {
        pass: false,
        detail: format!("error: {e}"),
    });
    let elapsed = start.elapsed();
    let in_time = limit.is_none_or(|l| elapsed <= l);
    let pass = out.pass && in_time;
    let budget = limit.map_or(String::new(), |l| format!(" (limit {:.0}s)", l.as_secs_f64()));
    println!(
        "{} [{id:>2}] {name}: {}; {:.2}s{budget}",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64()
    );
    pass
}

fn benchmark(n: Option<usize>, epsilon: Option<f64>) -> schro_core::Result<Scenario> {
    let mut cfg = ScenarioConfig::preset("benchmark")?;
    if let Some(n) = n {
        cfg.grid.n = n;
    }
    if let Some(e) = epsilon {
        cfg.stepper.epsilon = e;
    }
    cfg.build(None)
}

fn free_bvp_fidelity() -> schro_core::Result<Outcome> {
    let grid = Grid1D::new(2048, 40.0)?;
    let mut worst_bdry: f64 = 0.0;
    let mut worst_ratio: f64 = 0.0;
    let mut seed = 0;
    for beta in [0.5, 1.0, 2.0] {
        for horizon in [0.5, 1.0] {
            seed += 2;
            let f = project(&random_field(&grid, 400, FieldKind::Complex, false, seed), Sign::Minus);
            let g = project(
                &random_field(&grid, 400, FieldKind::Complex, false, seed + 1),
                Sign::Plus,
            );
            let data = FreeBvpData::new(f.clone(), g.clone(), beta, horizon, uniform_times(0.0, horizon, 64))?;
            let v = solve_free(&data)?;
            let rf = (&project(v.first(), Sign::Minus) - &f).l2_norm() / f.l2_norm();
            let rg = (&project(v.last(), Sign::Plus) - &g).l2_norm() / g.l2_norm();
            worst_bdry = worst_bdry.max(rf).max(rg);
            worst_ratio = worst_ratio.max(verify_free_estimate(&v, &data).ratio);
        }
    }
    Ok(Outcome {
        pass: worst_bdry <= 1e-10 && worst_ratio <= 1.0 + 1e-10,
        detail: format!("max boundary rel {worst_bdry:.2e} (<= 1e-10), max ratio {worst_ratio:.12} (<= 1+1e-10)"),
    })
}

fn growth_exhibit() -> schro_core::Result<Outcome> {
    let grid = Grid1D::new(256, 8.0 * std::f64::consts::PI)?;
    let u0 = SpectralField::from_fn(&grid, |x| Complex64::new(0.0, 5.0 * x).exp());
    let rep = forward_growth_demo(&u0, 1.0, 0.1)?;
    let mode = rep
        .mode(5.0)
        .ok_or_else(|| schro_core::Error::Data("no mode at 5".into()))?;
    let target = std::f64::consts::E;
    let rel = (mode.magnification / target - 1.0).abs();
    Ok(Outcome {
        pass: (mode.xi - 5.0).abs() < 1e-12 && rel < 0.01,
        detail: format!(
            "xi {:.3}, magnification {:.6} vs e, rel {rel:.2e} (< 1e-2)",
            mode.xi, mode.magnification
        ),
    })
}

fn decoupled_oracle() -> schro_core::Result<Outcome> {
    let s = ScenarioConfig::preset("decoupled")?.build(None)?;
    let p = &s.problem;
    let (st, rep) = picard_solve(p)?;
    let v = st.vplus.add(&st.vminus)?;
    let data = FreeBvpData::new(p.f.clone(), p.g.clone(), p.weight.beta(), p.horizon, v.times().to_vec())?;
    let free = solve_free(&data)?;
    let rel = v.sup_diff(&free)? / free.sup_l2();
    let rho = rep.max_rho_after_two.unwrap_or(0.0);
    Ok(Outcome {
        pass: rep.converged && rho <= 0.5 && rel <= 1e-6,
        detail: format!(
            "converged {} in {} sweeps, max rho {rho:.3e} (<= 0.5), rel sup_t L2 diff {rel:.2e} (<= 1e-6)",
            rep.converged,
            rep.iterations.len()
        ),
    })
}

struct BenchmarkRun {
    scenario: Scenario,
    assembled: Assembled,
}

fn benchmark_contraction(slot: &mut Option<BenchmarkRun>) -> schro_core::Result<Outcome> {
    let s = benchmark(None, None)?;
    let p = &s.problem;
    let (st, rep) = picard_solve(p)?;
    let a = assemble_solution(&st.vplus, &st.vminus, &p.weight, &p.f, &p.g)?;
    let res = pde_residual(&a.v, &p.coeffs, &p.weight)?;
    let delta = p.delta();
    let rho = rep
        .iterations
        .iter()
        .filter(|r| r.m >= 2)
        .filter_map(|r| r.rho)
        .fold(0.0, f64::max);
    let bdry = a.residual_f.max(a.residual_g);
    let pass = rep.converged && rho <= 0.5 && res.max <= 1e-6 && bdry <= 1e-8 * delta && rep.leakage <= 1e-6 * delta;
    let detail = format!(
        "T {:.5}, {} sweeps, max rho {rho:.3e} (<= 0.5), residual {:.2e} (<= 1e-6), boundary {bdry:.2e} (<= {:.1e}), leakage {:.2e} (<= {:.1e})",
        p.horizon,
        rep.iterations.len(),
        res.max,
        1e-8 * delta,
        rep.leakage,
        1e-6 * delta
    );
    *slot = Some(BenchmarkRun {
        scenario: s,
        assembled: a,
    });
    Ok(Outcome { pass, detail })
}

fn energy_estimates() -> schro_core::Result<Outcome> {
    let mut parts = Vec::new();
    let mut pass = true;
    for eps in [1e-2, 1e-3, 1e-4] {
        let s = benchmark(None, Some(eps))?;
        let p = &s.problem;
        let mut ctx: Option<MonitorContext> = None;
        let mut worst: f64 = 0.0;
        let mut count = 0;
        let mut failed = 0;
        let mut obs = |sub: &SubSolve| -> schro_core::Result<()> {
            if ctx.is_none() {
                ctx = Some(MonitorContext::new(&p.coeffs, &p.weight, sub.solution.times())?);
            }
            let r = energy_monitor_in(sub.solution, sub.source, sub.sign, ctx.as_ref().expect("set"))?;
            count += 1;
            if !r.passed() {
                failed += 1;
            }
            worst = worst.max(r.ratio.unwrap_or(f64::INFINITY));
            Ok(())
        };
        let (_, rep) = picard_solve_observed(p, &mut obs)?;
        pass &= rep.converged && failed == 0 && count > 0;
        parts.push(format!("eps {eps:.0e}: {count} sub-solves, worst ratio {worst:.3}"));
    }
    Ok(Outcome {
        pass,
        detail: format!("{} (<= 1, slack 5%)", parts.join(", ")),
    })
}

fn viscosity_machinery() -> schro_core::Result<Outcome> {
    let grid = Grid1D::new(2048, 40.0)?;
    let mut worst: f64 = 0.0;
    let mut resolved = [0usize; 3];
    for eps in [1e-2, 1e-3, 1e-4] {
        for t in [0.01, 0.1, 0.5, 1.0] {
            let s = eps * t;
            for j in 1..=3u32 {
                if !smoothing_resolved(&grid, j, s) {
                    continue;
                }
                resolved[j as usize - 1] += 1;
                let rel = (smoothing_constant(&grid, j, s) / smoothing_oracle(j, s) - 1.0).abs();
                worst = worst.max(rel);
            }
        }
    }
    let s = benchmark(None, None)?;
    let p = &s.problem;
    let lp = LinearProblem {
        direction: Direction::Forward,
        coeffs: p.coeffs.clone(),
        weight: p.weight.clone(),
        source: None,
        datum: p.f.clone(),
        horizon: p.horizon,
    };
    let mut cfg = p.stepper.clone();
    cfg.epsilon_schedule = vec![1e-2, 1e-3, 1e-4];
    let study = epsilon_study(&lp, &cfg)?;
    let order = study.fitted_order.unwrap_or(f64::NAN);
    Ok(Outcome {
        pass: resolved.iter().all(|&c| c > 0) && worst < 0.01 && study.cauchy && (0.8..=1.2).contains(&order),
        detail: format!(
            "resolved cases j=1,2,3: {resolved:?}, max rel error {worst:.2e} (< 1e-2); cauchy {}, order {order:.3} (in [0.8, 1.2])",
            study.cauchy
        ),
    })
}

fn lemma_ensemble(lemma_max: &mut f64) -> schro_core::Result<Outcome> {
    let mut parts = Vec::new();
    let mut pass = true;
    let mut worst_refine: f64 = 0.0;
    let mut worst_width: f64 = 0.0;
    for p in [4.0 / 3.0, 2.0, 4.0] {
        let spec = EnsembleSpec {
            operator: CommutatorOp::Pplus,
            lm: vec![(0, 1), (1, 1), (0, 2)],
            p,
            trials: 100,
            seed: 7,
            grid: EnsembleGrid::default(),
        };
        for est in estimate_constant(&spec)? {
            let refine = (est.stability_factor.unwrap_or(f64::NAN) - 1.0).abs();
            let width = est.bandwidth_factor.unwrap_or(f64::NAN);
            pass &= est.all_finite() && est.skipped == 0 && refine < 0.1 && width <= 1.1;
            worst_refine = worst_refine.max(refine);
            worst_width = worst_width.max(width);
            *lemma_max = lemma_max.max(est.max_ratio);
            parts.push(format!("{:.3}", est.max_ratio));
        }
    }
    let eg = EnsembleGrid::default();
    let grid = Grid1D::new(eg.n, eg.half_length)?;
    let (_, f) = trial_fields(&grid, &eg, 11, 0);
    let a = SpectralField::from_fn(&grid, |_| Complex64::new(1.7, 0.0));
    let mut constant: f64 = 0.0;
    for (l, m) in [(0, 1), (1, 1), (0, 2)] {
        let t = CommutatorTrial {
            operator: CommutatorOp::Pplus,
            a: a.clone(),
            f: f.clone(),
            l,
            m,
            p: 2.0,
        };
        constant = constant.max(commutator_apply(&t)?.l2_norm());
    }
    pass &= constant <= 1e-12;
    Ok(Outcome {
        pass,
        detail: format!(
            "max ratios [{}], worst |n-refinement - 1| {worst_refine:.3} (< 0.1), worst bandwidth factor {worst_width:.3} (<= 1.1), constant a {constant:.1e} (<= 1e-12)",
            parts.join(" ")
        ),
    })
}

fn appendix_structure() -> schro_core::Result<Outcome> {
    let eg = EnsembleGrid {
        n: 1024,
        half_length: 20.0,
        band_a: 24,
        band_f: 96,
    };
    let grid = Grid1D::new(eg.n, eg.half_length)?;
    let mut recon: f64 = 0.0;
    let mut ii: f64 = 0.0;
    let mut split: f64 = 0.0;
    let mut note: f64 = 0.0;
    for k in 0..5 {
        let (a, f) = trial_fields(&grid, &eg, 23, k);
        for m in [1, 2] {
            let audit = decomposition_audit(&a, &f, m)?;
            recon = recon.max(audit.summary.reconstruction);
            ii = ii.max(audit.summary.ii_norm / audit.summary.scale);
        }
        split = split.max(splitting_residual(&a, &f)?);
        note = note.max(note_identity_residual(&a, &f)?);
    }
    let (rh, rd) = hilbert_identity_residuals(&grid);
    let audit = recon.max(split);
    Ok(Outcome {
        pass: audit <= 1e-10 && ii <= 1e-12 && note <= 1e-10 && rh <= 1e-12 && rd <= 1e-12,
        detail: format!(
            "audit {audit:.1e} (<= 1e-10), II {ii:.1e} (<= 1e-12), [D,a] identity {note:.1e} (<= 1e-10), H symbol {rh:.1e}, d = D^1/2 H D^1/2 {rd:.1e} (<= 1e-12)"
        ),
    })
}

fn fractional_prop() -> schro_core::Result<Outcome> {
    let mut parts = Vec::new();
    let mut pass = true;
    let mut worst_red: f64 = 0.0;
    for (alpha, beta) in [(0.0, 0.5), (0.5, 0.25), (0.5, 0.5)] {
        let params = FractionalParams {
            alpha,
            beta,
            p: 2.0,
            q: 2.0,
            delta: 0.6,
        };
        let ens = fractional_ensemble(&params, 50, 31, &EnsembleGrid::default())?;
        let refine = (ens.estimate.stability_factor.unwrap_or(f64::NAN) - 1.0).abs();
        pass &= ens.estimate.all_finite() && refine < 0.1 && ens.max_reduction_residual <= 1e-10;
        worst_red = worst_red.max(ens.max_reduction_residual);
        parts.push(format!(
            "({alpha},{beta}) max {:.3} refine {refine:.3}",
            ens.estimate.max_ratio
        ));
    }
    Ok(Outcome {
        pass,
        detail: format!(
            "{} (< 0.1), reduction residual {worst_red:.1e} (<= 1e-10)",
            parts.join(", ")
        ),
    })
}

fn mizohata() -> schro_core::Result<Outcome> {
    let grid = Grid1D::new(2048, 40.0)?;
    let r_max = 30.0;
    let real = SpectralField::from_fn(&grid, |x| Complex64::new(1.0 / x.cosh(), 0.0));
    let r1 = mizohata_index(&real, r_max)?;
    let c = 0.7;
    let imag = SpectralField::from_fn(&grid, |_| Complex64::new(0.0, c));
    let r2 = mizohata_index(&imag, r_max)?;
    let s = benchmark(None, None)?;
    let p = &s.problem;
    let a = p.coeffs.sample(&grid, 0.0)?.a;
    let b = SpectralField::new(
        &grid,
        a.iter()
            .zip(p.weight.logderiv())
            .map(|(a, phi)| Complex64::new(0.0, -2.0 * a * phi))
            .collect(),
    )?;
    let r3 = mizohata_index(&b, r_max)?;
    let slope_rel = (r2.growth_slope / c - 1.0).abs();
    Ok(Outcome {
        pass: r1.verdict == MizohataVerdict::Bounded
            && r1.sup_value == 0.0
            && r2.verdict == MizohataVerdict::Diverging
            && slope_rel < 0.01
            && r3.verdict == MizohataVerdict::Diverging,
        detail: format!(
            "real b {:?} sup {:.1e}; b = {c}i {:?} slope {:.4} (rel {slope_rel:.1e} < 1e-2); -2i a phi {:?} slope {:.3}",
            r1.verdict, r1.sup_value, r2.verdict, r2.growth_slope, r3.verdict, r3.growth_slope
        ),
    })
}

fn decay_persistence(base: Option<&BenchmarkRun>, lemma_max: f64) -> schro_core::Result<Outcome> {
    let run = base.ok_or_else(|| schro_core::Error::Data("benchmark run unavailable".into()))?;
    let p = &run.scenario.problem;
    let norms = run.assembled.w_norms();
    let finite = norms.iter().all(|v| v.is_finite());
    let jump = norms
        .windows(2)
        .map(|w| (w[1] - w[0]).abs() / w[0].max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);

    let beta = p.weight.beta();
    let (wp, wm) = split_sides(&run.assembled.w);
    let coarse = smoothing_monitor_w(&wp, &wm, &p.coeffs, beta)?;
    let fine_run = benchmark(Some(4096), None)?;
    let fp = &fine_run.problem;
    let (st, _) = picard_solve(fp)?;
    let fa = assemble_solution(&st.vplus, &st.vminus, &fp.weight, &fp.f, &fp.g)?;
    let (fwp, fwm) = split_sides(&fa.w);
    let fine = smoothing_monitor_w(&fwp, &fwm, &fp.coeffs, beta)?;
    let c0 = coarse.constants.get("implied_c").copied().unwrap_or(f64::NAN);
    let c1 = fine.constants.get("implied_c").copied().unwrap_or(f64::NAN);
    let change = refinement_change(c0, c1);

    let lambda = run.scenario.config.coefficients.lambda;
    let cfg = ZLevelConfig {
        lemma_constant: lemma_max,
        ..ZLevelConfig::default()
    };
    let z = z_level_diagnostics(&run.assembled.w, &p.coeffs, beta, lambda, &cfg)?;
    let hyp = z.constants.get("hypothesis_rhs").copied().unwrap_or(f64::NAN);
    let z_ok = z.verdict == Verdict::Pass;
    Ok(Outcome {
        pass: finite && jump <= 0.05 && coarse.passed() && change < 0.1 && z_ok,
        detail: format!(
            "w finite {finite}, max slice jump {jump:.2e} (<= 0.05); implied c {c0:.4} -> {c1:.4} (change {change:.3} < 0.1); z-level {:?} (beta lambda {:.2} vs {hyp:.3}, lemma constant {lemma_max:.3})",
            z.verdict,
            beta * lambda
        ),
    })
}

fn main() {
    let mut results = Vec::new();
    let mut bench_run = None;
    let mut lemma_max: f64 = 0.0;
    let secs = Duration::from_secs;
    results.push(run(1, "free BVP fidelity", Some(secs(5)), free_bvp_fidelity));
    results.push(run(2, "ill-posedness exhibit", Some(secs(1)), growth_exhibit));
    results.push(run(3, "decoupled oracle equivalence", Some(secs(60)), decoupled_oracle));
    results.push(run(4, "benchmark contraction and residual", Some(secs(120)), || {
        benchmark_contraction(&mut bench_run)
    }));
    results.push(run(5, "energy estimates", None, energy_estimates));
    results.push(run(6, "viscosity machinery", None, viscosity_machinery));
    results.push(run(7, "commutator ensemble", Some(secs(60)), || {
        lemma_ensemble(&mut lemma_max)
    }));
    results.push(run(8, "decomposition structure", None, appendix_structure));
    results.push(run(9, "fractional commutator ensemble", None, fractional_prop));
    results.push(run(10, "Mizohata discrimination", None, mizohata));
    results.push(run(11, "decay persistence and smoothing", None, || {
        decay_persistence(bench_run.as_ref(), lemma_max)
    }));
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
