//! Threshold exceedances of the whole system and the lifetime law.
//!
//! Process i exceeds a level at W_i = S_i + σ_i. The W_i form a displaced
//! Cox process; its first point W_[1] has survival
//!
//!   P(W_[1] > t) = exp(−λ0 ∫₀ᵗ F) · exp(−μ ∫₀ᵗ (1 − e^{−K(x)}) dx),
//!   K(x) = ∫₀ˣ e^{−δw} F(x − w) dw,
//!
//! where F is the first-passage CDF of one process. K satisfies
//! K' = F − δK, which the tables below integrate step by step.

use std::io::Write;

use rand::Rng;

use crate::degradation::{realize_scale, GammaModel, HittingLaw};
use crate::error::{invalid, Result};
use crate::real::Real;
use crate::shock_arrivals::{expected_intensity, simulate_arrivals, simulate_shocks, ShotNoiseParams};
use crate::special_functions::{integrate, GaussLegendre, MonotoneCubic, QuadratureSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemSpec<T> {
    pub arrivals: ShotNoiseParams<T>,
    pub growth: GammaModel<T>,
    pub failure_threshold: T,
}

impl<T: Real> SystemSpec<T> {
    pub fn new(arrivals: ShotNoiseParams<T>, growth: GammaModel<T>, failure_threshold: T) -> Result<Self> {
        let s = SystemSpec { arrivals, growth, failure_threshold };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.arrivals.validate()?;
        self.growth.validate()?;
        if !(self.failure_threshold > T::zero() && self.failure_threshold.is_finite()) {
            return Err(invalid("L", format!("must be finite and > 0, got {}", self.failure_threshold)));
        }
        Ok(())
    }

    pub fn hitting_law(&self, threshold: T) -> Result<HittingLaw<T>> {
        HittingLaw::new(&self.growth, threshold)
    }
}

fn fine<T: Real>() -> QuadratureSpec<T> {
    QuadratureSpec::with_tolerance(T::c(1e-12), T::c(1e-10))
}

fn check_time<T: Real>(t: T) -> Result<()> {
    if !(t >= T::zero() && t.is_finite()) {
        return Err(invalid("t", format!("must be finite and >= 0, got {t}")));
    }
    Ok(())
}

/// K(t) = ∫₀ᵗ e^{−δw} F(t − w) dw by adaptive quadrature.
fn shot_convolution<T: Real>(law: &HittingLaw<T>, delta: T, t: T) -> Result<T> {
    if t <= T::zero() {
        return Ok(T::zero());
    }
    integrate(|w| (-delta * w).exp() * law.cdf(t - w), T::zero(), t, &fine())
        .map_err(|e| e.within("shot convolution"))
}

/// E[λ_threshold(t)] = λ0 F(t) + μ K(t).
pub fn displaced_expected_intensity<T: Real>(spec: &SystemSpec<T>, threshold: T, t: T) -> Result<T> {
    check_time(t)?;
    let law = spec.hitting_law(threshold)?;
    let p = &spec.arrivals;
    Ok(p.lambda0 * law.cdf(t) + p.mu * shot_convolution(&law, p.delta, t)?)
}

/// E[N_threshold(t)] = ∫₀ᵗ E[λ*(u)] F(t − u) du.
pub fn expected_exceedances<T: Real>(spec: &SystemSpec<T>, threshold: T, t: T) -> Result<T> {
    check_time(t)?;
    if t == T::zero() {
        return Ok(T::zero());
    }
    let law = spec.hitting_law(threshold)?;
    integrate(|u| expected_intensity(&spec.arrivals, u) * law.cdf(t - u), T::zero(), t, &fine())
        .map_err(|e| e.within("expected_exceedances"))
}

/// The two factors of the lifetime survival, (C1, C2).
pub fn survival_factors<T: Real>(spec: &SystemSpec<T>, threshold: T, t: T) -> Result<(T, T)> {
    check_time(t)?;
    if t == T::zero() {
        return Ok((T::one(), T::one()));
    }
    let law = spec.hitting_law(threshold)?;
    let p = &spec.arrivals;
    let base = integrate(|u| law.cdf(u), T::zero(), t, &fine()).map_err(|e| e.within("C1"))?;
    let c1 = (-p.lambda0 * base).exp();
    if p.mu == T::zero() {
        return Ok((c1, T::one()));
    }
    let mut failure = None;
    let shot = integrate(
        |x| match shot_convolution(&law, p.delta, x) {
            Ok(k) => -(-k).exp_m1(),
            Err(e) => {
                failure.get_or_insert(e);
                T::nan()
            }
        },
        T::zero(),
        t,
        &fine(),
    );
    if let Some(e) = failure {
        return Err(e.within("C2"));
    }
    let c2 = (-p.mu * shot.map_err(|e| e.within("C2"))?).exp();
    Ok((c1, c2))
}

/// P(first exceedance of `threshold` > t) = C1·C2.
pub fn first_passage_survival<T: Real>(spec: &SystemSpec<T>, threshold: T, t: T) -> Result<T> {
    survival_factors(spec, threshold, t).map(|(c1, c2)| c1 * c2)
}

/// r(t) = λ0 F(t) + μ(1 − e^{−K(t)}).
pub fn first_passage_hazard<T: Real>(spec: &SystemSpec<T>, threshold: T, t: T) -> Result<T> {
    check_time(t)?;
    let law = spec.hitting_law(threshold)?;
    let p = &spec.arrivals;
    let k = shot_convolution(&law, p.delta, t)?;
    Ok(p.lambda0 * law.cdf(t) - p.mu * (-k).exp_m1())
}

/// r'(t) = λ0 f(t) + μ e^{−K(t)} ∫₀ᵗ e^{−δw} f(t − w) dw; every term is ≥ 0.
pub fn hazard_derivative<T: Real>(spec: &SystemSpec<T>, threshold: T, t: T) -> Result<T> {
    check_time(t)?;
    if t == T::zero() {
        return Ok(T::zero());
    }
    let law = spec.hitting_law(threshold)?;
    let p = &spec.arrivals;
    let k = shot_convolution(&law, p.delta, t)?;
    let dk = integrate(
        |w| {
            let s = t - w;
            if s <= T::zero() {
                T::zero()
            } else {
                (-p.delta * w).exp() * law.pdf(s).unwrap_or(T::zero())
            }
        },
        T::zero(),
        t,
        &fine(),
    )
    .map_err(|e| e.within("hazard_derivative"))?;
    let f = law.pdf(t)?;
    Ok(p.lambda0 * f + p.mu * (-k).exp() * dk)
}

/// lim r(t) = λ0 + μ(1 − e^{−1/δ}).
pub fn hazard_limit<T: Real>(spec: &SystemSpec<T>) -> T {
    let p = &spec.arrivals;
    p.lambda0 - p.mu * (-p.delta.recip()).exp_m1()
}

/// Lifetime quantities on a uniform grid, interpolated in between.
#[derive(Debug, Clone)]
pub struct LifetimeTable<T> {
    law: HittingLaw<T>,
    params: ShotNoiseParams<T>,
    horizon: T,
    k: HermiteTable<T>,
    int_f: MonotoneCubic<T>,
    int_g: MonotoneCubic<T>,
}

/// K is not monotone in general, so it is interpolated by cubic Hermite
/// through its exact slopes instead of PCHIP.
#[derive(Debug, Clone)]
struct HermiteTable<T> {
    step: T,
    values: Vec<T>,
    slopes: Vec<T>,
}

impl<T: Real> HermiteTable<T> {
    fn eval(&self, t: T) -> T {
        let n = self.values.len() - 1;
        let pos = t / self.step;
        let i = pos.floor().to_usize().unwrap_or(0).min(n - 1);
        let s = pos - T::from_count(i);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (d0, d1) = (self.slopes[i] * self.step, self.slopes[i + 1] * self.step);
        let s2 = s * s;
        let s3 = s2 * s;
        let two = T::c(2.0);
        let three = T::c(3.0);
        (two * s3 - three * s2 + T::one()) * y0 + (s3 - two * s2 + s) * d0 + (three * s2 - two * s3) * y1 + (s3 - s2) * d1
    }
}

const STEP_NODES: usize = 8;

impl<T: Real> LifetimeTable<T> {
    /// Tabulates on [0, horizon] with the given step; beyond the horizon
    /// values are extended by quadrature.
    pub fn new(spec: &SystemSpec<T>, threshold: T, horizon: T, step: T) -> Result<Self> {
        spec.validate()?;
        if !(horizon > T::zero() && step > T::zero() && step <= horizon) {
            return Err(invalid("horizon, step", format!("need 0 < step <= horizon, got {step}, {horizon}")));
        }
        let law = spec.hitting_law(threshold)?;
        let delta = spec.arrivals.delta;
        let n = (horizon / step).ceil().to_usize().unwrap_or(1).max(1);
        let gl = GaussLegendre::new(STEP_NODES);
        let mut ts = Vec::with_capacity(n + 1);
        let mut ks = vec![T::zero()];
        let mut dks = vec![T::zero()];
        ts.push(T::zero());
        for i in 1..=n {
            let t0 = step * T::from_count(i - 1);
            let t1 = step * T::from_count(i);
            let decay = (-delta * step).exp();
            let fresh = gl.integrate(|s| (-delta * (t1 - s)).exp() * law.cdf(s), t0, t1);
            let k = decay * ks[i - 1] + fresh;
            let f = law.cdf(t1);
            ts.push(t1);
            ks.push(k);
            dks.push(f - delta * k);
        }
        let k = HermiteTable { step, values: ks, slopes: dks };
        let mut int_f = vec![T::zero()];
        let mut int_g = vec![T::zero()];
        for i in 1..=n {
            let (t0, t1) = (ts[i - 1], ts[i]);
            let df = gl.integrate(|s| law.cdf(s), t0, t1);
            let dg = gl.integrate(|s| -(-k.eval(s)).exp_m1(), t0, t1);
            int_f.push(int_f[i - 1] + df);
            int_g.push(int_g[i - 1] + dg);
        }
        Ok(LifetimeTable {
            law,
            params: spec.arrivals,
            horizon: ts[n],
            k,
            int_f: MonotoneCubic::new(ts.clone(), int_f)?,
            int_g: MonotoneCubic::new(ts, int_g)?,
        })
    }

    pub fn horizon(&self) -> T {
        self.horizon
    }

    pub fn law(&self) -> &HittingLaw<T> {
        &self.law
    }

    /// K(t).
    pub fn shot_convolution(&self, t: T) -> T {
        if t <= T::zero() {
            return T::zero();
        }
        if t <= self.horizon {
            return self.k.eval(t);
        }
        let d = self.params.delta;
        let gl = GaussLegendre::new(STEP_NODES * 4);
        (-d * (t - self.horizon)).exp() * self.k.eval(self.horizon)
            + gl.integrate(|s| (-d * (t - s)).exp() * self.law.cdf(s), self.horizon, t)
    }

    /// K'(t) = F(t) − δK(t) = ∫₀ᵗ e^{−δw} f(t − w) dw.
    pub fn shot_convolution_rate(&self, t: T) -> T {
        if t <= T::zero() {
            return T::zero();
        }
        (self.law.cdf(t) - self.params.delta * self.shot_convolution(t)).max(T::zero())
    }

    fn exponents(&self, t: T) -> (T, T) {
        if t <= T::zero() {
            return (T::zero(), T::zero());
        }
        if t <= self.horizon {
            return (self.int_f.eval(t), self.int_g.eval(t));
        }
        let gl = GaussLegendre::new(STEP_NODES * 4);
        let (f0, g0) = (self.int_f.eval(self.horizon), self.int_g.eval(self.horizon));
        (
            f0 + gl.integrate(|s| self.law.cdf(s), self.horizon, t),
            g0 + gl.integrate(|s| -(-self.shot_convolution(s)).exp_m1(), self.horizon, t),
        )
    }

    pub fn survival(&self, t: T) -> T {
        let (f, g) = self.exponents(t);
        (-self.params.lambda0 * f - self.params.mu * g).exp()
    }

    pub fn hazard(&self, t: T) -> T {
        if t <= T::zero() {
            return T::zero();
        }
        self.params.lambda0 * self.law.cdf(t) - self.params.mu * (-self.shot_convolution(t)).exp_m1()
    }

    /// Lifetime density hazard × survival.
    pub fn density(&self, t: T) -> T {
        self.hazard(t) * self.survival(t)
    }

    pub fn curve(&self, times: &[T]) -> LifetimeCurve<T> {
        LifetimeCurve {
            times: times.to_vec(),
            survival: times.iter().map(|&t| self.survival(t)).collect(),
            hazard: times.iter().map(|&t| self.hazard(t)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LifetimeCurve<T> {
    pub times: Vec<T>,
    pub survival: Vec<T>,
    pub hazard: Vec<T>,
}

impl<T: Real> LifetimeCurve<T> {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "survival", "hazard"])?;
        for i in 0..self.times.len() {
            w.write_record([self.times[i].to_string(), self.survival[i].to_string(), self.hazard[i].to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// One draw of the first exceedance time, `None` if beyond `horizon`.
///
/// σ_i is only inverted when it can beat the current minimum, which is
/// the case exactly when the uniform lies below F(best − S_i).
pub fn simulate_first_passage<T: Real, R: Rng + ?Sized>(
    spec: &SystemSpec<T>,
    law: &HittingLaw<T>,
    horizon: T,
    rng: &mut R,
) -> Result<Option<T>> {
    let shocks = simulate_shocks(&spec.arrivals, horizon, rng);
    let arrivals = simulate_arrivals(&spec.arrivals, &shocks, horizon, rng)?;
    let mut best = horizon;
    let mut hit = false;
    for &s in &arrivals.arrival_times {
        let cap = best - s;
        if cap <= T::zero() {
            break;
        }
        let rate = realize_scale(&spec.growth, rng).rate;
        let u = T::sample_open01(rng);
        let shape = law.shape_rate() * cap;
        let reach = crate::special_functions::ln_regularized_pair(shape, rate * law.level()).1.exp();
        if u < reach {
            best = s + law.invert_for_rate(rate, u)?;
            hit = true;
        }
    }
    Ok(if hit { Some(best) } else { None })
}
