//! Closed-form cycle quantities, evaluated by quadrature.
//!
//! Everything follows from the joint void probability
//!
//!   Π(a, b) = P(V > a, W > b),   a ≤ b,
//!
//! where V is the first time any process reaches M and W the first time
//! any reaches L. A process born at s spoils the event iff X(a − s) ≥ M
//! or X(b − s) ≥ L, so with q(s) the probability of that and
//! Φ(τ) = ∫ e^{−δ(s−τ)} q(s) ds, the Cox void formula gives
//!
//!   Π(a, b) = exp(−λ0 ∫_0^b q − μ ∫_0^b (1 − e^{−Φ})).
//!
//! With x = b − a, for s < a the probability is R_x(a − s) where
//! R_x(c) = P(X(c) ≥ M) + P(X(c) < M, X(c + x) ≥ L), and for s ≥ a it is
//! just F_L(b − s). Hence Π(a, a + x) = P(W > x)·exp(−λ0 A_x(a) − μ B_x(a))
//! with A_x(a) = ∫_0^a R_x, B_x(a) = ∫_0^a (1 − exp(−K_x(t) − e^{−δt} K_L(x))) dt
//! and K_x(t) = ∫_0^t e^{−δ(t−c)} R_x(c) dc. For a = (k−1)T:
//!
//!   P_p(k) = Π(a, a+T) − Π(a+T, a+T),   P_c(k) = Π(a, a) − Π(a, a+T),
//!   E_d(k) = ∫_0^T (Π(a, a) − Π(a, a+x)) dx.

use crate::combined::{LifetimeTable, SystemSpec};
use crate::degradation::{ScaleSpec, GAP_MIXTURE_NODES};
use crate::error::{invalid, Error, Result};
use crate::maintenance::{CostRates, PolicyParams};
use crate::real::Real;
use crate::special_functions::{integrate, ln_gamma, ln_regularized_pair, GaussLegendre, QuadratureSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalQuantities<T> {
    /// Replacement at inspection kT.
    pub k: usize,
    pub preventive: T,
    pub corrective: T,
    /// Expected downtime accrued in ((k−1)T, kT].
    pub downtime: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticCycleQuantities<T> {
    pub inspection_period: T,
    pub expected_length: T,
    pub expected_inspections: T,
    pub intervals: Vec<IntervalQuantities<T>>,
    /// 1 − Σ(P_p + P_c): mass beyond the last interval kept.
    pub deficit: T,
}

/// Cubic interpolation on a uniform grid with central-difference slopes.
struct GridTable<T> {
    step: T,
    values: Vec<T>,
}

impl<T: Real> GridTable<T> {
    fn from_values(step: T, values: Vec<T>) -> Self {
        GridTable { step, values }
    }

    fn eval(&self, x: T) -> T {
        let n = self.values.len() - 1;
        if x <= T::zero() || n == 0 {
            return self.values[0];
        }
        let pos = x / self.step;
        let i = pos.floor().to_usize().unwrap_or(n).min(n - 1);
        let s = pos - T::from_count(i);
        let y = &self.values;
        if n == 1 {
            return y[0] + s * (y[1] - y[0]);
        }
        let half = T::c(0.5);
        let d0 = if i == 0 { y[1] - y[0] } else { half * (y[i + 1] - y[i - 1]) };
        let d1 = if i + 1 == n { y[n] - y[n - 1] } else { half * (y[i + 2] - y[i]) };
        let s2 = s * s;
        let s3 = s2 * s;
        let two = T::c(2.0);
        let three = T::c(3.0);
        (two * s3 - three * s2 + T::one()) * y[i] + (s3 - two * s2 + s) * d0 + (three * s2 - two * s3) * y[i + 1]
            + (s3 - s2) * d1
    }
}

fn upper<T: Real>(a: T, x: T) -> T {
    if a <= T::zero() {
        return T::zero();
    }
    ln_regularized_pair(a, x).1.exp()
}

struct Engine<'a, T> {
    lambda0: T,
    mu: T,
    delta: T,
    alpha: T,
    m: T,
    l: T,
    /// (rate, weight) per scale node.
    scales: Vec<(T, T)>,
    to_l: &'a LifetimeTable<T>,
    spec: QuadratureSpec<T>,
    gl: GaussLegendre<T>,
}

impl<T: Real> Engine<'_, T> {
    /// R_x(c) for one scale.
    fn spoil_one(&self, rate: T, c: T, x: T) -> Result<T> {
        let (bm, bl) = (rate * self.m, rate * self.l);
        let later = self.alpha * x;
        if c <= T::zero() {
            return Ok(upper(later, bl));
        }
        let s = self.alpha * c;
        let reached = upper(s, bm);
        if later <= T::zero() {
            return Ok(reached);
        }
        let tail = if s < T::one() {
            // u = ζ^s absorbs the ζ^{s−1} factor.
            let inv = s.recip();
            let ln_norm = ln_gamma(s + T::one());
            integrate(
                |u: T| {
                    let z = u.powf(inv);
                    (-z - ln_norm).exp() * upper(later, bl - z)
                },
                T::zero(),
                bm.powf(s),
                &self.spec,
            )?
        } else {
            let ln_norm = ln_gamma(s);
            integrate(
                |z: T| {
                    if z <= T::zero() {
                        return if s == T::one() { upper(later, bl) } else { T::zero() };
                    }
                    ((s - T::one()) * z.ln() - z - ln_norm).exp() * upper(later, bl - z)
                },
                T::zero(),
                bm,
                &self.spec,
            )?
        };
        Ok((reached + tail).min(T::one()))
    }

    fn spoil(&self, c: T, x: T) -> Result<T> {
        self.scales.iter().try_fold(T::zero(), |acc, &(rate, w)| Ok(acc + w * self.spoil_one(rate, c, x)?))
    }

    /// Π(jh, jh + x) for j = 0..=n, i.e. on the grid of birth-offset steps.
    fn void_sweep(&self, x: T, h: T, n: usize) -> Result<Vec<T>> {
        let values = (0..=n).map(|j| self.spoil(h * T::from_count(j), x)).collect::<Result<Vec<_>>>()?;
        let r = GridTable::from_values(h, values);
        let k_l = self.to_l.shot_convolution(x);
        let head = self.to_l.survival(x);
        let d = self.delta;
        let mut k = T::zero();
        let (mut a, mut b) = (T::zero(), T::zero());
        let mut out = Vec::with_capacity(n + 1);
        out.push(head);
        for j in 0..n {
            let c0 = h * T::from_count(j);
            let c1 = c0 + h;
            // K_x at t from its value at c0.
            let k_at = |t: T| (-d * (t - c0)).exp() * k + self.gl.integrate(|c| (-d * (t - c)).exp() * r.eval(c), c0, t);
            a += self.gl.integrate(|c| r.eval(c), c0, c1);
            b += self.gl.integrate(|t| -(-k_at(t) - (-d * t).exp() * k_l).exp_m1(), c0, c1);
            k = k_at(c1);
            out.push(head * (-self.lambda0 * a - self.mu * b).exp());
        }
        Ok(out)
    }
}

pub fn analytic_cycle_quantities<T: Real>(
    spec: &SystemSpec<T>,
    policy: &PolicyParams<T>,
    k_max: usize,
    tol: T,
) -> Result<AnalyticCycleQuantities<T>> {
    spec.validate()?;
    policy.validate(spec.failure_threshold)?;
    if k_max == 0 {
        return Err(invalid("k_max", "must be >= 1"));
    }
    if !(tol > T::zero()) {
        return Err(invalid("tol", "must be > 0"));
    }
    let period = policy.inspection_period;
    let m = policy.preventive_threshold;
    let horizon = period * T::from_count(k_max);
    let step = T::c(0.05).min(period / T::c(16.0));
    let to_m = LifetimeTable::new(spec, m, horizon, step).map_err(|e| e.within("f_V"))?;

    // Intervals are kept until the survival of V drops below tol.
    let mut kept = k_max;
    for i in 0..k_max {
        if to_m.survival(period * T::from_count(i)) < tol {
            kept = i.max(1);
            break;
        }
    }
    let tail = to_m.survival(period * T::from_count(kept));
    if tail > T::c(10.0) * tol {
        return Err(Error::Truncation { deficit: tail.as_f64(), limit: (T::c(10.0) * tol).as_f64() });
    }

    let to_l = LifetimeTable::new(spec, spec.failure_threshold, period, step).map_err(|e| e.within("f_W"))?;
    let scales = match spec.growth.scale {
        ScaleSpec::Deterministic { beta } => vec![(beta, T::one())],
        ScaleSpec::UniformInverseScale { a, b } => {
            GaussLegendre::new(GAP_MIXTURE_NODES).on(a, b).map(|(th, w)| (th.recip(), w / (b - a))).collect()
        }
    };
    let engine = Engine {
        lambda0: spec.arrivals.lambda0,
        mu: spec.arrivals.mu,
        delta: spec.arrivals.delta,
        alpha: spec.growth.shape_rate,
        m,
        l: spec.failure_threshold,
        scales,
        to_l: &to_l,
        spec: QuadratureSpec::with_tolerance(T::c(1e-12), T::c(1e-10)),
        gl: GaussLegendre::new(8),
    };
    let per = (period / T::c(0.05)).ceil().to_usize().unwrap_or(1).max(4);
    let h = period / T::from_count(per);
    let n = per * kept;
    let at = |sweep: &[T], k: usize| sweep[per * k];
    let same = engine.void_sweep(T::zero(), h, n).map_err(|e| e.within("P(V > a)"))?;
    let full = engine.void_sweep(period, h, n).map_err(|e| e.within("void probability"))?;
    let outer = GaussLegendre::new(20);
    let partial = outer
        .on(T::zero(), period)
        .map(|(x, w)| Ok((w, engine.void_sweep(x, h, n)?)))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.within("downtime"))?;

    let mut expected_length = T::zero();
    for i in 0..=n / per {
        expected_length += period * at(&same, i);
    }
    let mut intervals = Vec::with_capacity(kept);
    let mut total = T::zero();
    for k in 1..=kept {
        let i = k - 1;
        let pp = (at(&full, i) - at(&same, k)).max(T::zero());
        let pc = (at(&same, i) - at(&full, i)).max(T::zero());
        let ed = partial.iter().fold(T::zero(), |acc, (w, s)| acc + *w * (at(&same, i) - at(s, i)));
        total += pp + pc;
        intervals.push(IntervalQuantities { k, preventive: pp, corrective: pc, downtime: ed });
    }
    Ok(AnalyticCycleQuantities {
        inspection_period: period,
        expected_length,
        expected_inspections: expected_length / period,
        intervals,
        deficit: T::one() - total,
    })
}

/// (C_c ΣP_c + C_p ΣP_p + C_I E[N_I] + C_d ΣE_d) / E[R].
pub fn cost_rate_analytic<T: Real>(
    spec: &SystemSpec<T>,
    policy: &PolicyParams<T>,
    costs: &CostRates<T>,
    k_max: usize,
    tol: T,
) -> Result<T> {
    costs.validate()?;
    let q = analytic_cycle_quantities(spec, policy, k_max, tol)?;
    Ok(q.cost_rate(costs))
}

impl<T: Real> AnalyticCycleQuantities<T> {
    pub fn cost_rate(&self, costs: &CostRates<T>) -> T {
        let (pp, pc, ed) = self.intervals.iter().fold((T::zero(), T::zero(), T::zero()), |acc, q| {
            (acc.0 + q.preventive, acc.1 + q.corrective, acc.2 + q.downtime)
        });
        (costs.corrective * pc + costs.preventive * pp + costs.inspection * self.expected_inspections + costs.downtime * ed)
            / self.expected_length
    }
}
