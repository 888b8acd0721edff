//! The six subcommands. Each returns the file names it wrote.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use cbm_core::combined::{first_passage_hazard, hazard_derivative, hazard_limit, simulate_first_passage, LifetimeTable};
use cbm_core::degradation::{fit_half_width, matched_variance_comparison, simulate_observations, GammaModel, ScaleSpec};
use cbm_core::maintenance::{
    analytic_cycle_quantities, estimate_from_outcomes, grid_search, sensitivity_sweep, simulate_cycles,
    summarize_by_inspection, write_surface_csv, write_sweep_csv, CycleAction, SweepAxes,
};
use cbm_core::rng::{streams, StreamKey};
use cbm_core::shock_arrivals::{expected_num_arrivals, simulate_arrivals, simulate_shocks};
use rayon::prelude::*;

use crate::config::{read_observations, ExperimentConfig, SweepAxis};
use crate::exit::{ChecksFailed, Validation};

pub struct Context_ {
    pub cfg: ExperimentConfig,
    pub out: PathBuf,
}

impl Context_ {
    fn create(&self, name: &str) -> anyhow::Result<BufWriter<File>> {
        let path = self.out.join(name);
        let f = File::create(&path).with_context(|| format!("creating `{}`", path.display()))?;
        Ok(BufWriter::new(f))
    }

    fn write_text(&self, name: &str, text: &str) -> anyhow::Result<()> {
        let mut w = self.create(name)?;
        w.write_all(text.as_bytes())?;
        w.flush()?;
        Ok(())
    }
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

pub fn simulate_arrivals_cmd(ctx: &Context_) -> anyhow::Result<Vec<String>> {
    let cfg = &ctx.cfg;
    let sec = cfg.section(&cfg.arrivals, "arrivals")?;
    let params = cfg.system_spec()?.arrivals;
    let seed = cfg.seed;
    let runs: Vec<(Vec<f64>, Vec<f64>)> = (0..sec.runs as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = StreamKey::new(seed, i).stream(streams::ARRIVALS);
            let shocks = simulate_shocks(&params, sec.horizon, &mut rng);
            let arr = simulate_arrivals(&params, &shocks, sec.horizon, &mut rng)?;
            let counts = sec.check_times.iter().map(|&t| arr.count_until(t) as f64).collect();
            let kept = if (i as usize) < sec.saved_trajectories { arr.arrival_times } else { Vec::new() };
            Ok((counts, kept))
        })
        .collect::<cbm_core::Result<Vec<_>>>()?;

    let mut w = csv::Writer::from_writer(ctx.create("arrivals.csv")?);
    w.write_record(["run", "time"])?;
    for (i, (_, times)) in runs.iter().enumerate().take(sec.saved_trajectories) {
        for t in times {
            w.write_record([i.to_string(), t.to_string()])?;
        }
    }
    w.flush()?;

    let mut w = csv::Writer::from_writer(ctx.create("arrival_check.csv")?);
    w.write_record(["t", "empirical_mean", "std_error", "analytic", "ratio"])?;
    for (j, &t) in sec.check_times.iter().enumerate() {
        let col: Vec<f64> = runs.iter().map(|r| r.0[j]).collect();
        let (m, se) = mean_se(&col);
        let exact = expected_num_arrivals(&params, t);
        let ratio = if exact > 0.0 { m / exact } else { f64::NAN };
        println!("t = {t}: mean count {m:.5} (se {se:.5}), closed form {exact:.5}, ratio {ratio:.4}");
        w.write_record([t.to_string(), m.to_string(), se.to_string(), exact.to_string(), ratio.to_string()])?;
    }
    w.flush()?;
    let mut files = vec!["arrivals.csv".to_string(), "arrival_check.csv".to_string()];
    if cfg.output.gnuplot {
        ctx.write_text(
            "arrival_check.gp",
            "set datafile separator ','\nset key top left\nset xlabel 't'\nset ylabel 'E[N(t)]'\n\
             plot 'arrival_check.csv' every ::1 using 1:2:3 with yerrorbars title 'simulated', \\\n\
             '' every ::1 using 1:4 with linespoints title 'closed form'\n",
        )?;
        files.push("arrival_check.gp".into());
    }
    Ok(files)
}

pub fn reliability_cmd(ctx: &Context_) -> anyhow::Result<Vec<String>> {
    let cfg = &ctx.cfg;
    let sec = cfg.section(&cfg.reliability, "reliability")?;
    let spec = cfg.system_spec()?;
    let l = spec.failure_threshold;
    let table = LifetimeTable::new(&spec, l, sec.horizon, sec.step.min(0.05))?;
    let n = (sec.horizon / sec.step + 1e-9).floor() as usize;
    let times: Vec<f64> = (0..=n).map(|i| i as f64 * sec.step).collect();
    let curve = table.curve(&times);
    let limit = hazard_limit(&spec);

    let mc = if sec.runs > 0 {
        let law = spec.hitting_law(l)?;
        let seed = cfg.seed;
        let mut draws = (0..sec.runs as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = StreamKey::new(seed, i).stream(streams::ARRIVALS);
                Ok(simulate_first_passage(&spec, &law, sec.horizon, &mut rng)?.unwrap_or(f64::INFINITY))
            })
            .collect::<cbm_core::Result<Vec<f64>>>()?;
        draws.sort_by(|a, b| a.total_cmp(b));
        let total = draws.len() as f64;
        Some(times.iter().map(|&t| (draws.len() - draws.partition_point(|&w| w <= t)) as f64 / total).collect::<Vec<_>>())
    } else {
        None
    };

    let mut w = csv::Writer::from_writer(ctx.create("lifetime.csv")?);
    let mut header = vec!["t", "survival", "hazard", "hazard_limit"];
    if mc.is_some() {
        header.push("mc_survival");
    }
    w.write_record(&header)?;
    let mut gap: f64 = 0.0;
    for (i, &t) in times.iter().enumerate() {
        let mut row = vec![t.to_string(), curve.survival[i].to_string(), curve.hazard[i].to_string(), limit.to_string()];
        if let Some(m) = &mc {
            gap = gap.max((m[i] - curve.survival[i]).abs());
            row.push(m[i].to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    println!("hazard limit {limit:.6}; hazard at t = {} is {:.6}", sec.horizon, curve.hazard[n]);
    if mc.is_some() {
        println!("largest |simulated - analytic| survival gap over {} runs: {gap:.5}", sec.runs);
    }
    let mut files = vec!["lifetime.csv".to_string()];
    if cfg.output.gnuplot {
        let overlay = if mc.is_some() { ", \\\n     '' every ::1 using 1:5 with lines title 'simulated'" } else { "" };
        ctx.write_text(
            "lifetime.gp",
            &format!(
                "set datafile separator ','\nset xlabel 't'\nset y2tics\n\
                 plot 'lifetime.csv' every ::1 using 1:2 with lines title 'survival', \\\n\
                 '' every ::1 using 1:3 axes x1y2 with lines title 'hazard', \\\n\
                 '' every ::1 using 1:4 axes x1y2 with lines dt 2 title 'hazard limit'{overlay}\n"
            ),
        )?;
        files.push("lifetime.gp".into());
    }
    Ok(files)
}

pub fn fit_cmd(ctx: &Context_, data_path: Option<&Path>) -> anyhow::Result<Vec<String>> {
    let cfg = &ctx.cfg;
    let sec = cfg.section(&cfg.fit, "fit")?;
    let grid = sec.half_widths.values("fit.half_widths")?;
    let mut files = Vec::new();
    let data = match (data_path, &sec.data) {
        (Some(p), _) => read_observations(p)?,
        (None, Some(p)) => read_observations(Path::new(p))?,
        (None, None) => {
            let sim = sec.simulate.as_ref().expect("validated");
            if !(sim.half_width > 0.0 && sim.half_width < sec.center) {
                return Err(Validation::new("fit.simulate.half_width must lie in (0, center)").into());
            }
            let model = GammaModel::uniform_inverse_scale(sec.alpha, sec.center - sim.half_width, sec.center + sim.half_width)
                .map_err(|e| Validation::new(format!("fit.simulate: {e}")))?;
            let mut rng = StreamKey::new(cfg.seed, 0).stream(streams::ARRIVALS);
            let data = simulate_observations(&model, sim.processes, sim.horizon, sim.dt, &mut rng)
                .map_err(|e| Validation::new(format!("fit.simulate: {e}")))?;
            data.write_csv(ctx.create("fit_data.csv")?)?;
            files.push("fit_data.csv".to_string());
            data
        }
    };
    let fit = fit_half_width(sec.alpha, sec.center, &data, &grid, true)?;
    let mut w = csv::Writer::from_writer(ctx.create("fit_curve.csv")?);
    w.write_record(["half_width", "neg_log_lik"])?;
    for (g, v) in fit.grid.iter().zip(&fit.neg_log_lik) {
        w.write_record([g.to_string(), v.to_string()])?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_writer(ctx.create("fit_summary.csv")?);
    w.write_record(["estimate", "neg_log_lik", "log_lik", "interior", "refined", "processes"])?;
    w.write_record([
        fit.estimate.to_string(),
        fit.min_neg_log_lik.to_string(),
        (-fit.min_neg_log_lik).to_string(),
        fit.interior.to_string(),
        fit.refined.to_string(),
        data.processes.len().to_string(),
    ])?;
    w.flush()?;
    println!(
        "half-width estimate {:.4} (log-likelihood {:.4}, {} minimum)",
        fit.estimate,
        -fit.min_neg_log_lik,
        if fit.interior { "interior" } else { "boundary" }
    );
    files.extend(["fit_curve.csv".to_string(), "fit_summary.csv".to_string()]);
    if cfg.output.gnuplot {
        ctx.write_text(
            "fit_curve.gp",
            "set datafile separator ','\nset xlabel 'half-width'\nset ylabel '-log L'\n\
             plot 'fit_curve.csv' every ::1 using 1:2 with lines notitle\n",
        )?;
        files.push("fit_curve.gp".into());
    }
    Ok(files)
}

pub fn optimize_cmd(ctx: &Context_) -> anyhow::Result<Vec<String>> {
    let cfg = &ctx.cfg;
    let spec = cfg.system_spec()?;
    let costs = cfg.costs()?;
    let (t, m) = cfg.grids()?;
    let r = grid_search(&spec, &costs, &t, &m, cfg.simulation.n_cycles, &cfg.sim_control()?, cfg.seed)?;
    write_surface_csv(&r.surface, ctx.create("surface.csv")?)?;
    let mut w = csv::Writer::from_writer(ctx.create("optimum.csv")?);
    w.write_record(["T_opt", "M_opt", "cost_rate", "std_error"])?;
    w.write_record([r.t_opt.to_string(), r.m_opt.to_string(), r.best.point.to_string(), r.best.std_error.to_string()])?;
    w.flush()?;
    println!(
        "optimum T = {:.4}, M = {:.4}, cost rate {:.4} (se {:.4}) over {} cells x {} cycles",
        r.t_opt,
        r.m_opt,
        r.best.point,
        r.best.std_error,
        r.surface.len(),
        cfg.simulation.n_cycles
    );
    let mut files = vec!["surface.csv".to_string(), "optimum.csv".to_string()];
    if cfg.output.gnuplot {
        ctx.write_text(
            "surface.gp",
            &format!(
                "set datafile separator ','\nset xlabel 'T'\nset ylabel 'M'\nset zlabel 'cost rate'\n\
                 set dgrid3d {} ,{}\nset hidden3d\n\
                 splot 'surface.csv' every ::1 using 1:2:3 with lines notitle\n",
                m.len(),
                t.len()
            ),
        )?;
        files.push("surface.gp".into());
    }
    Ok(files)
}

pub fn sensitivity_cmd(ctx: &Context_) -> anyhow::Result<Vec<String>> {
    let cfg = &ctx.cfg;
    let sec = cfg.section(&cfg.sensitivity, "sensitivity")?;
    let spec = cfg.system_spec()?;
    let costs = cfg.costs()?;
    let (t, m) = cfg.grids()?;
    let first = sec.first.values("sensitivity.first")?;
    let second = sec.second.values("sensitivity.second")?;
    let axes = match sec.axis {
        SweepAxis::ShapeRate => SweepAxes::ShapeRate { alphas: first, betas: second },
        SweepAxis::ShapeCenter => SweepAxes::ShapeCenter { alphas: first, centers: second, half_width: sec.half_width },
        SweepAxis::Costs => SweepAxes::Costs { corrective: first, preventive: second, policy: cfg.fixed_policy()? },
    };
    let rows = sensitivity_sweep(&spec, &costs, &axes, &t, &m, sec.n_cycles, &cfg.sim_control()?, cfg.seed)
        .map_err(|e| match e {
            cbm_core::Error::InvalidParameter { .. } => anyhow::Error::new(Validation::new(format!("sensitivity: {e}"))),
            other => other.into(),
        })?;
    write_sweep_csv(&rows, ctx.create("sensitivity.csv")?)?;
    for r in &rows {
        println!("{:>8.4} {:>8.4}  cost {:>9.4}  T {:>8.4}  M {:>8.4}", r.axis1, r.axis2, r.cost_opt, r.t_opt, r.m_opt);
    }
    let mut files = vec!["sensitivity.csv".to_string()];
    if cfg.output.gnuplot {
        ctx.write_text(
            "sensitivity.gp",
            "set datafile separator ','\nset xlabel 'axis1'\nset ylabel 'axis2'\nset zlabel 'optimal cost rate'\n\
             splot 'sensitivity.csv' every ::1 using 1:2:3 with points pt 7 notitle\n",
        )?;
        files.push("sensitivity.gp".into());
    }
    Ok(files)
}

struct Check {
    name: String,
    value: f64,
    bound: f64,
    pass: bool,
}

impl Check {
    fn within(name: impl Into<String>, diff: f64, bound: f64) -> Self {
        Check { name: name.into(), value: diff, bound, pass: diff.abs() <= bound }
    }
}

pub fn validate_cmd(ctx: &Context_) -> anyhow::Result<Vec<String>> {
    let cfg = &ctx.cfg;
    let sec = cfg.section(&cfg.validate, "validate")?;
    let spec = cfg.system_spec()?;
    let costs = cfg.costs()?;
    let sim = cfg.sim_control()?;
    let policy = cfg.fixed_policy()?;
    let l = spec.failure_threshold;
    let z = sec.sigmas;
    let mut checks = Vec::new();

    // Mean number of processes started by t.
    let times = [1.0, 2.0, 5.0, 10.0];
    let counts: Vec<Vec<f64>> = (0..sec.runs as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = StreamKey::new(cfg.seed, i).stream(streams::ARRIVALS);
            let shocks = simulate_shocks(&spec.arrivals, 10.0, &mut rng);
            let arr = simulate_arrivals(&spec.arrivals, &shocks, 10.0, &mut rng)?;
            Ok(times.iter().map(|&t| arr.count_until(t) as f64).collect())
        })
        .collect::<cbm_core::Result<_>>()?;
    for (j, &t) in times.iter().enumerate() {
        let col: Vec<f64> = counts.iter().map(|c| c[j]).collect();
        let (m, se) = mean_se(&col);
        checks.push(Check::within(format!("arrival_mean_t{t}"), m - expected_num_arrivals(&spec.arrivals, t), z * se));
    }

    // Lifetime law against simulated first failures.
    let law = spec.hitting_law(l)?;
    let table = LifetimeTable::new(&spec, l, 20.0, 0.05)?;
    let mut draws = (0..sec.runs as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = StreamKey::new(cfg.seed ^ 0x9e37_79b9, i).stream(streams::ARRIVALS);
            Ok(simulate_first_passage(&spec, &law, 20.0, &mut rng)?.unwrap_or(f64::INFINITY))
        })
        .collect::<cbm_core::Result<Vec<f64>>>()?;
    draws.sort_by(|a, b| a.total_cmp(b));
    let gap = (0..=80)
        .map(|i| {
            let t = i as f64 * 0.25;
            let emp = (draws.len() - draws.partition_point(|&w| w <= t)) as f64 / draws.len() as f64;
            (emp - table.survival(t)).abs()
        })
        .fold(0.0, f64::max);
    checks.push(Check::within("lifetime_survival_gap", gap, sec.max_gap));

    // Increasing failure rate and its limit.
    let worst = (0..300)
        .map(|i| hazard_derivative(&spec, l, i as f64 * 0.1))
        .collect::<cbm_core::Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    checks.push(Check { name: "hazard_nondecreasing".into(), value: worst, bound: -1e-10, pass: worst >= -1e-10 });
    let far = first_passage_hazard(&spec, l, 400.0)?;
    checks.push(Check::within("hazard_limit", far - hazard_limit(&spec), 1e-3));

    if let ScaleSpec::UniformInverseScale { a, b } = spec.growth.scale {
        let ts: Vec<f64> = (1..=40).map(|i| i as f64 * 0.5).collect();
        let cmp = matched_variance_comparison(spec.growth.shape_rate, a, b, &ts)?;
        let margin = cmp.uniform.iter().zip(&cmp.deterministic).map(|(u, d)| u - d).fold(f64::INFINITY, f64::min);
        checks.push(Check { name: "variance_ordering".into(), value: margin, bound: 0.0, pass: cmp.uniform_dominates });
    }

    // Cycle analytics against simulation at the fixed policy.
    let q = analytic_cycle_quantities(&spec, &policy, 200, 1e-6)?;
    checks.push(Check::within("truncation_deficit", q.deficit, 1e-3));
    let out = simulate_cycles(&spec, &policy, &costs, &sim, sec.cycles, cfg.seed)?;
    let emp = summarize_by_inspection(&out, sec.k_max);
    let floor = 3.0 / sec.cycles as f64;
    for (a, e) in q.intervals.iter().zip(&emp) {
        checks.push(Check::within(format!("P_p_k{}", a.k), a.preventive - e.preventive, z * e.preventive_se.max(floor)));
        checks.push(Check::within(format!("P_c_k{}", a.k), a.corrective - e.corrective, z * e.corrective_se.max(floor)));
        checks.push(Check::within(format!("E_d_k{}", a.k), a.downtime - e.downtime, z * e.downtime_se.max(floor)));
    }
    let lengths: Vec<f64> = out.iter().map(|o| o.length).collect();
    let (len, len_se) = mean_se(&lengths);
    checks.push(Check::within("expected_cycle_length", q.expected_length - len, z * len_se));
    let inspections: Vec<f64> = out.iter().map(|o| o.inspections as f64).collect();
    let (ni, ni_se) = mean_se(&inspections);
    checks.push(Check::within("expected_inspections", q.expected_inspections - ni, z * ni_se));
    let est = estimate_from_outcomes(&out, &costs)?;
    checks.push(Check::within("cost_rate", q.cost_rate(&costs) - est.point, z * est.std_error));

    // Bookkeeping invariants.
    let partition = est.preventive_fraction + est.corrective_fraction + est.censored_fraction - 1.0;
    checks.push(Check { name: "event_partition".into(), value: partition, bound: 0.0, pass: partition == 0.0 });
    let accounting = out.iter().all(|o| o.cycle_cost == o.cost_under(&costs));
    let downtime_ok = out
        .iter()
        .all(|o| o.downtime >= 0.0 && o.downtime < policy.inspection_period && (o.action == CycleAction::Corrective || o.downtime == 0.0));
    checks.push(Check { name: "cycle_accounting".into(), value: f64::from(u8::from(accounting)), bound: 1.0, pass: accounting });
    checks.push(Check { name: "downtime_bounds".into(), value: f64::from(u8::from(downtime_ok)), bound: 1.0, pass: downtime_ok });
    let serial = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()?
        .install(|| simulate_cycles(&spec, &policy, &costs, &sim, 2_000.min(sec.cycles), cfg.seed))?;
    let same = serial[..] == out[..serial.len()];
    checks.push(Check { name: "seed_determinism".into(), value: f64::from(u8::from(same)), bound: 1.0, pass: same });

    let mut w = csv::Writer::from_writer(ctx.create("validation_report.csv")?);
    w.write_record(["check", "value", "bound", "status"])?;
    let mut failed = Vec::new();
    for c in &checks {
        let status = if c.pass { "PASS" } else { "FAIL" };
        println!("{status} {:<24} value {:>13.6e}  bound {:>12.6e}", c.name, c.value, c.bound);
        w.write_record([c.name.clone(), c.value.to_string(), c.bound.to_string(), status.to_string()])?;
        if !c.pass {
            failed.push(c.name.clone());
        }
    }
    w.flush()?;
    println!("{}/{} checks passed", checks.len() - failed.len(), checks.len());
    if !failed.is_empty() {
        return Err(ChecksFailed(failed).into());
    }
    Ok(vec!["validation_report.csv".to_string()])
}
