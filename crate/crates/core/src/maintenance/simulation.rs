use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{CostRates, CycleAction, CycleOutcome, PolicyParams, SimControl};
use crate::combined::SystemSpec;
use crate::degradation::{locate_crossing, realize_scale, sample_increment, ScaleRealization};
use crate::error::{Error, Result};
use crate::real::Real;
use crate::rng::{streams, StreamKey};
use crate::shock_arrivals::ArrivalStream;

struct Defect<T> {
    scale: ScaleRealization<T>,
    level: T,
    rng: ChaCha8Rng,
}

/// Simulates one renewal cycle from a new system.
///
/// Arrivals come from stream 0 of `key`; the i-th process uses stream
/// 1 + i for its scale, increments and crossing refinement. A cycle's
/// randomness therefore does not depend on T or M, which gives common
/// random numbers across policy cells.
pub fn simulate_cycle<T: Real>(
    spec: &SystemSpec<T>,
    policy: &PolicyParams<T>,
    costs: &CostRates<T>,
    sim: &SimControl<T>,
    key: StreamKey,
) -> CycleOutcome<T> {
    let period = policy.inspection_period;
    let big_l = spec.failure_threshold;
    let big_m = policy.preventive_threshold;
    let alpha = spec.growth.shape_rate;
    let step = period / T::from_count(sim.substeps);

    let mut arrivals = ArrivalStream::new(spec.arrivals, key.stream(streams::ARRIVALS));
    let mut next = arrivals.next_arrival();
    let mut defects: Vec<Defect<T>> = Vec::new();

    let finish = |k: usize, action: CycleAction, downtime: T| {
        let mut out = CycleOutcome {
            length: period * T::from_count(k),
            inspections: k,
            action,
            downtime,
            cycle_cost: T::zero(),
        };
        out.cycle_cost = out.cost_under(costs);
        out
    };

    for k in 1..=sim.max_inspections {
        let start = period * T::from_count(k - 1);
        let inspection = period * T::from_count(k);
        let mut failure: Option<T> = None;
        for j in 1..=sim.substeps {
            let t0 = if j == 1 { start } else { start + step * T::from_count(j - 1) };
            let t1 = if j == sim.substeps { inspection } else { start + step * T::from_count(j) };
            for d in defects.iter_mut() {
                let before = d.level;
                d.level = before + sample_increment(d.scale, alpha, t1 - t0, &mut d.rng);
                if before < big_l && d.level >= big_l {
                    let c = locate_crossing(alpha, (t0, before), (t1, d.level), big_l, sim.crossing_tol, &mut d.rng);
                    failure = Some(failure.map_or(c, |f: T| f.min(c)));
                }
            }
            while let Some(s) = next.filter(|&s| s <= t1) {
                let mut rng = key.stream(streams::DEFECT_BASE + defects.len() as u64);
                let scale = realize_scale(&spec.growth, &mut rng);
                let level = if t1 > s { sample_increment(scale, alpha, t1 - s, &mut rng) } else { T::zero() };
                if level >= big_l {
                    let c = locate_crossing(alpha, (s, T::zero()), (t1, level), big_l, sim.crossing_tol, &mut rng);
                    failure = Some(failure.map_or(c, |f: T| f.min(c)));
                }
                defects.push(Defect { scale, level, rng });
                next = arrivals.next_arrival();
            }
            if failure.is_some() {
                break;
            }
        }
        if let Some(f) = failure {
            let downtime = (inspection - f).max(T::zero());
            return finish(k, CycleAction::Corrective, downtime);
        }
        if defects.iter().any(|d| d.level >= big_m) {
            return finish(k, CycleAction::Preventive, T::zero());
        }
    }
    finish(sim.max_inspections, CycleAction::Censored, T::zero())
}

/// Cycles 0..n of `master_seed`, in index order, simulated in parallel.
pub fn simulate_cycles<T: Real>(
    spec: &SystemSpec<T>,
    policy: &PolicyParams<T>,
    costs: &CostRates<T>,
    sim: &SimControl<T>,
    n_cycles: usize,
    master_seed: u64,
) -> Result<Vec<CycleOutcome<T>>> {
    spec.validate()?;
    policy.validate(spec.failure_threshold)?;
    costs.validate()?;
    sim.validate()?;
    Ok((0..n_cycles as u64)
        .into_par_iter()
        .map(|i| simulate_cycle(spec, policy, costs, sim, StreamKey::new(master_seed, i)))
        .collect())
}

/// Ratio-of-sums cost-rate estimate over non-censored cycles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostRateEstimate<T> {
    pub point: T,
    /// Delta-method standard error of the ratio.
    pub std_error: T,
    pub n_cycles: usize,
    pub n_censored: usize,
    pub preventive_fraction: T,
    pub corrective_fraction: T,
    pub censored_fraction: T,
    pub mean_cycle_length: T,
    pub mean_cycle_cost: T,
}

#[derive(Default, Clone, Copy)]
struct Sum<T> {
    sum: T,
    carry: T,
}

impl<T: Real> Sum<T> {
    fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> T {
        self.sum + self.carry
    }
}

/// Aggregates outcomes under `costs` (which may differ from the costs
/// the cycles were simulated with; the paths do not depend on them).
pub fn estimate_from_outcomes<T: Real>(outcomes: &[CycleOutcome<T>], costs: &CostRates<T>) -> Result<CostRateEstimate<T>> {
    let n = outcomes.len();
    let mut used = Vec::with_capacity(n);
    let (mut n_p, mut n_c, mut n_z) = (0usize, 0usize, 0usize);
    for o in outcomes {
        match o.action {
            CycleAction::Preventive => n_p += 1,
            CycleAction::Corrective => n_c += 1,
            CycleAction::Censored => {
                n_z += 1;
                continue;
            }
        }
        used.push((o.cost_under(costs), o.length));
    }
    if used.is_empty() {
        return Err(Error::AllCensored(n));
    }
    let m = used.len();
    let (mut cost, mut len) = (Sum::<T>::default(), Sum::<T>::default());
    for &(c, l) in &used {
        cost.add(c);
        len.add(l);
    }
    let mf = T::from_count(m);
    let mean_cost = cost.value() / mf;
    let mean_len = len.value() / mf;
    let point = cost.value() / len.value();
    let mut resid = Sum::<T>::default();
    for &(c, l) in &used {
        let r = c - point * l;
        resid.add(r * r);
    }
    let std_error = if m > 1 {
        (resid.value() / T::from_count(m - 1) / mf).sqrt() / mean_len
    } else {
        T::infinity()
    };
    let nf = T::from_count(n);
    Ok(CostRateEstimate {
        point,
        std_error,
        n_cycles: n,
        n_censored: n_z,
        preventive_fraction: T::from_count(n_p) / nf,
        corrective_fraction: T::from_count(n_c) / nf,
        censored_fraction: T::from_count(n_z) / nf,
        mean_cycle_length: mean_len,
        mean_cycle_cost: mean_cost,
    })
}

pub fn estimate_cost_rate<T: Real>(
    spec: &SystemSpec<T>,
    policy: &PolicyParams<T>,
    costs: &CostRates<T>,
    n_cycles: usize,
    sim: &SimControl<T>,
    master_seed: u64,
) -> Result<CostRateEstimate<T>> {
    if n_cycles == 0 {
        return Err(crate::error::invalid("n_cycles", "must be >= 1"));
    }
    let outcomes = simulate_cycles(spec, policy, costs, sim, n_cycles, master_seed)?;
    estimate_from_outcomes(&outcomes, costs)
}

/// Empirical per-inspection event frequencies (denominator: all cycles).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InspectionSummary<T> {
    /// Inspection index k (replacement at kT).
    pub k: usize,
    pub preventive: T,
    pub preventive_se: T,
    pub corrective: T,
    pub corrective_se: T,
    /// E[downtime; corrective at kT].
    pub downtime: T,
    pub downtime_se: T,
}

pub fn summarize_by_inspection<T: Real>(outcomes: &[CycleOutcome<T>], k_max: usize) -> Vec<InspectionSummary<T>> {
    let n = T::from_count(outcomes.len().max(1));
    let freq_se = |p: T| (p * (T::one() - p) / n).sqrt();
    (1..=k_max)
        .map(|k| {
            let mut n_p = 0usize;
            let mut n_c = 0usize;
            let mut d1 = Sum::<T>::default();
            let mut d2 = Sum::<T>::default();
            for o in outcomes.iter().filter(|o| o.inspections == k) {
                match o.action {
                    CycleAction::Preventive => n_p += 1,
                    CycleAction::Corrective => {
                        n_c += 1;
                        d1.add(o.downtime);
                        d2.add(o.downtime * o.downtime);
                    }
                    CycleAction::Censored => {}
                }
            }
            let p = T::from_count(n_p) / n;
            let c = T::from_count(n_c) / n;
            let mean_d = d1.value() / n;
            let var_d = (d2.value() / n - mean_d * mean_d).max(T::zero());
            InspectionSummary {
                k,
                preventive: p,
                preventive_se: freq_se(p),
                corrective: c,
                corrective_se: freq_se(c),
                downtime: mean_d,
                downtime_se: (var_d / n).sqrt(),
            }
        })
        .collect()
}
