use std::io::Write;

use rayon::prelude::*;

use super::simulation::{estimate_from_outcomes, simulate_cycles, CostRateEstimate};
use super::{CostRates, PolicyParams, SimControl};
use crate::combined::SystemSpec;
use crate::degradation::GammaModel;
use crate::error::{invalid, Result};
use crate::real::Real;
use crate::shock_arrivals::ShotNoiseParams;

/// λ0 = 1, μ = 2, δ = 0.5, α = 1.1, L = 10 and either β = 1.4 or
/// θ = 1/β ~ U(1/1.4 − 0.1, 1/1.4 + 0.1).
pub fn paper_system<T: Real>(random_effects: bool) -> SystemSpec<T> {
    let arrivals = ShotNoiseParams { lambda0: T::one(), mu: T::c(2.0), delta: T::c(0.5) };
    let growth = if random_effects {
        let center = T::one() / T::c(1.4);
        GammaModel::uniform_inverse_scale(T::c(1.1), center - T::c(0.1), center + T::c(0.1))
    } else {
        GammaModel::deterministic(T::c(1.1), T::c(1.4))
    }
    .expect("preset parameters are valid");
    SystemSpec { arrivals, growth, failure_threshold: T::c(10.0) }
}

pub fn paper_costs<T: Real>() -> CostRates<T> {
    CostRates { preventive: T::c(100.0), corrective: T::c(200.0), inspection: T::c(50.0), downtime: T::c(60.0) }
}

/// T = 1 + i·24/9 (i = 0..9) and M = 1 + j·9/7 (j = 0..7).
pub fn paper_grids<T: Real>() -> (Vec<T>, Vec<T>) {
    let t = (0..10).map(|i| T::one() + T::from_count(i) * T::c(24.0) / T::c(9.0)).collect();
    let m = (0..8).map(|j| T::one() + T::from_count(j) * T::c(9.0) / T::c(7.0)).collect();
    (t, m)
}

/// Ten interior points of (0, 25) and eight of (0, 10).
pub fn open_interval_grids<T: Real>() -> (Vec<T>, Vec<T>) {
    let t = (1..=10).map(|i| T::c(25.0) * T::from_count(i) / T::c(11.0)).collect();
    let m = (1..=8).map(|j| T::c(10.0) * T::from_count(j) / T::c(9.0)).collect();
    (t, m)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceCell<T> {
    pub inspection_period: T,
    pub preventive_threshold: T,
    pub estimate: CostRateEstimate<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchResult<T> {
    pub t_opt: T,
    pub m_opt: T,
    pub best: CostRateEstimate<T>,
    /// Row-major: T outer, M inner, in grid order.
    pub surface: Vec<SurfaceCell<T>>,
}

/// Estimates every (T, M) cell with the same cycle seeds and returns the
/// cheapest; ties go to the smaller T, then the smaller M.
pub fn grid_search<T: Real>(
    spec: &SystemSpec<T>,
    costs: &CostRates<T>,
    t_grid: &[T],
    m_grid: &[T],
    n_cycles: usize,
    sim: &SimControl<T>,
    master_seed: u64,
) -> Result<GridSearchResult<T>> {
    if t_grid.is_empty() || m_grid.is_empty() {
        return Err(invalid("grid", "T and M grids must be non-empty"));
    }
    if n_cycles == 0 {
        return Err(invalid("n_cycles", "must be >= 1"));
    }
    let mut policies = Vec::with_capacity(t_grid.len() * m_grid.len());
    for &t in t_grid {
        for &m in m_grid {
            policies.push(PolicyParams::new(t, m, spec.failure_threshold)?);
        }
    }
    let surface = policies
        .par_iter()
        .map(|p| {
            let outcomes = simulate_cycles(spec, p, costs, sim, n_cycles, master_seed)?;
            Ok(SurfaceCell {
                inspection_period: p.inspection_period,
                preventive_threshold: p.preventive_threshold,
                estimate: estimate_from_outcomes(&outcomes, costs)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = surface
        .iter()
        .min_by(|a, b| {
            a.estimate
                .point
                .partial_cmp(&b.estimate.point)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.inspection_period.partial_cmp(&b.inspection_period).unwrap_or(std::cmp::Ordering::Equal))
                .then(
                    a.preventive_threshold
                        .partial_cmp(&b.preventive_threshold)
                        .unwrap_or(std::cmp::Ordering::Equal),
                )
        })
        .copied()
        .expect("non-empty surface");
    Ok(GridSearchResult {
        t_opt: best.inspection_period,
        m_opt: best.preventive_threshold,
        best: best.estimate,
        surface,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepAxes<T> {
    /// α × deterministic β, re-optimizing (T, M) per cell.
    ShapeRate { alphas: Vec<T>, betas: Vec<T> },
    /// α × center c of θ ~ U(c − w, c + w), re-optimizing (T, M) per cell.
    ShapeCenter { alphas: Vec<T>, centers: Vec<T>, half_width: T },
    /// C_c × C_p at a fixed policy.
    Costs { corrective: Vec<T>, preventive: Vec<T>, policy: PolicyParams<T> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow<T> {
    pub axis1: T,
    pub axis2: T,
    pub cost_opt: T,
    pub t_opt: T,
    pub m_opt: T,
}

#[allow(clippy::too_many_arguments)]
pub fn sensitivity_sweep<T: Real>(
    base: &SystemSpec<T>,
    costs: &CostRates<T>,
    axes: &SweepAxes<T>,
    t_grid: &[T],
    m_grid: &[T],
    n_cycles: usize,
    sim: &SimControl<T>,
    master_seed: u64,
) -> Result<Vec<SweepRow<T>>> {
    let optimize_over = |pairs: Vec<(T, T, GammaModel<T>)>| -> Result<Vec<SweepRow<T>>> {
        let mut rows = Vec::with_capacity(pairs.len());
        for (x1, x2, growth) in pairs {
            let spec = SystemSpec::new(base.arrivals, growth, base.failure_threshold)?;
            let r = grid_search(&spec, costs, t_grid, m_grid, n_cycles, sim, master_seed)?;
            rows.push(SweepRow { axis1: x1, axis2: x2, cost_opt: r.best.point, t_opt: r.t_opt, m_opt: r.m_opt });
        }
        Ok(rows)
    };
    match axes {
        SweepAxes::ShapeRate { alphas, betas } => {
            let mut pairs = Vec::new();
            for &a in alphas {
                for &b in betas {
                    pairs.push((a, b, GammaModel::deterministic(a, b)?));
                }
            }
            optimize_over(pairs)
        }
        SweepAxes::ShapeCenter { alphas, centers, half_width } => {
            let mut pairs = Vec::new();
            for &a in alphas {
                for &c in centers {
                    pairs.push((a, c, GammaModel::uniform_inverse_scale(a, c - *half_width, c + *half_width)?));
                }
            }
            optimize_over(pairs)
        }
        SweepAxes::Costs { corrective, preventive, policy } => {
            // Paths do not depend on costs, so one batch of cycles serves every cell.
            let outcomes = simulate_cycles(base, policy, costs, sim, n_cycles, master_seed)?;
            let mut rows = Vec::new();
            for &cc in corrective {
                for &cp in preventive {
                    let c = CostRates { corrective: cc, preventive: cp, ..*costs };
                    c.validate()?;
                    let est = estimate_from_outcomes(&outcomes, &c)?;
                    rows.push(SweepRow {
                        axis1: cc,
                        axis2: cp,
                        cost_opt: est.point,
                        t_opt: policy.inspection_period,
                        m_opt: policy.preventive_threshold,
                    });
                }
            }
            Ok(rows)
        }
    }
}

pub fn write_surface_csv<T: Real, W: Write>(cells: &[SurfaceCell<T>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "T",
        "M",
        "cost_rate",
        "std_error",
        "preventive_fraction",
        "corrective_fraction",
        "censored_fraction",
        "mean_cycle_length",
    ])?;
    for c in cells {
        let e = &c.estimate;
        w.write_record([
            c.inspection_period.to_string(),
            c.preventive_threshold.to_string(),
            e.point.to_string(),
            e.std_error.to_string(),
            e.preventive_fraction.to_string(),
            e.corrective_fraction.to_string(),
            e.censored_fraction.to_string(),
            e.mean_cycle_length.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep_csv<T: Real, W: Write>(rows: &[SweepRow<T>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["axis1", "axis2", "cost_opt", "T_opt", "M_opt"])?;
    for r in rows {
        w.write_record([
            r.axis1.to_string(),
            r.axis2.to_string(),
            r.cost_opt.to_string(),
            r.t_opt.to_string(),
            r.m_opt.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_grids_contain_reported_optima() {
        let (t, m) = paper_grids::<f64>();
        assert_eq!(t.len(), 10);
        assert_eq!(m.len(), 8);
        assert!((t[2] - 6.3333).abs() < 1e-4);
        assert!((m[4] - 6.1429).abs() < 1e-4);
        assert!((m[3] - 4.8571).abs() < 1e-4);
        let (t, m) = open_interval_grids::<f64>();
        assert!(t.iter().all(|&x| x > 0.0 && x < 25.0));
        assert!(m.iter().all(|&x| x > 0.0 && x < 10.0));
    }

    #[test]
    fn single_cell_is_passthrough() {
        let spec = paper_system::<f64>(false);
        let costs = paper_costs();
        let sim = SimControl::default();
        let r = grid_search(&spec, &costs, &[5.0], &[6.0], 100, &sim, 4).unwrap();
        assert_eq!((r.t_opt, r.m_opt), (5.0, 6.0));
        let p = PolicyParams::new(5.0, 6.0, 10.0).unwrap();
        let direct = super::super::estimate_cost_rate(&spec, &p, &costs, 100, &sim, 4).unwrap();
        assert_eq!(r.best, direct);
    }
}
