use rand::Rng;

use crate::error::{invalid, Result};
use crate::real::Real;

/// How the rate β of a gamma process is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScaleSpec<T> {
    /// Every process uses the same rate β.
    Deterministic { beta: T },
    /// Each process draws θ = 1/β uniformly on (a, b) once, at initiation.
    UniformInverseScale { a: T, b: T },
}

/// Gamma process with shape α·t and rate β (mean α·t/β).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaModel<T> {
    pub shape_rate: T,
    pub scale: ScaleSpec<T>,
}

/// Rate β of one concrete degradation process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleRealization<T> {
    pub rate: T,
}

impl<T: Real> GammaModel<T> {
    pub fn deterministic(shape_rate: T, beta: T) -> Result<Self> {
        let m = GammaModel { shape_rate, scale: ScaleSpec::Deterministic { beta } };
        m.validate()?;
        Ok(m)
    }

    pub fn uniform_inverse_scale(shape_rate: T, a: T, b: T) -> Result<Self> {
        let m = GammaModel { shape_rate, scale: ScaleSpec::UniformInverseScale { a, b } };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.shape_rate > T::zero() && self.shape_rate.is_finite()) {
            return Err(invalid("alpha", format!("must be finite and > 0, got {}", self.shape_rate)));
        }
        match self.scale {
            ScaleSpec::Deterministic { beta } => {
                if !(beta > T::zero() && beta.is_finite()) {
                    return Err(invalid("beta", format!("must be finite and > 0, got {beta}")));
                }
            }
            ScaleSpec::UniformInverseScale { a, b } => {
                if !(a > T::zero() && b > a && b.is_finite()) {
                    return Err(invalid("a, b", format!("need 0 < a < b < inf, got a={a}, b={b}")));
                }
            }
        }
        Ok(())
    }

    /// Mean of 1/β: β⁻¹ itself, or (a + b)/2.
    pub fn mean_inverse_rate(&self) -> T {
        match self.scale {
            ScaleSpec::Deterministic { beta } => beta.recip(),
            ScaleSpec::UniformInverseScale { a, b } => T::c(0.5) * (a + b),
        }
    }
}

pub fn realize_scale<T: Real, R: Rng + ?Sized>(model: &GammaModel<T>, rng: &mut R) -> ScaleRealization<T> {
    match model.scale {
        ScaleSpec::Deterministic { beta } => ScaleRealization { rate: beta },
        ScaleSpec::UniformInverseScale { a, b } => {
            let theta = a + (b - a) * T::sample_open01(rng);
            ScaleRealization { rate: theta.recip() }
        }
    }
}

/// One Gamma(α·dt, β) increment.
pub fn sample_increment<T: Real, R: Rng + ?Sized>(scale: ScaleRealization<T>, shape_rate: T, dt: T, rng: &mut R) -> T {
    let x = T::sample_unit_gamma(shape_rate * dt, rng) / scale.rate;
    x.max(T::zero())
}

/// ln of a Gamma(shape, 1) variate; stays finite for tiny shapes.
fn ln_unit_gamma<T: Real, R: Rng + ?Sized>(shape: T, rng: &mut R) -> T {
    if shape < T::one() {
        T::sample_unit_gamma(shape + T::one(), rng).ln() + T::sample_open01(rng).ln() / shape
    } else {
        T::sample_unit_gamma(shape, rng).ln()
    }
}

/// Beta(p, q) built from two gamma variates in log space.
pub(crate) fn sample_beta<T: Real, R: Rng + ?Sized>(p: T, q: T, rng: &mut R) -> T {
    let lp = ln_unit_gamma(p, rng);
    let lq = ln_unit_gamma(q, rng);
    T::one() / (T::one() + (lq - lp).exp())
}

/// First time a gamma path crosses `level` inside (t0, t1], given
/// X(t0) = x0 < level ≤ x1 = X(t1).
///
/// Bisects with gamma-bridge draws: conditional on both endpoints the
/// fraction of the increment gained by the midpoint is
/// Beta(α(tm − t0), α(t1 − tm)), independent of β.
pub fn locate_crossing<T: Real, R: Rng + ?Sized>(
    shape_rate: T,
    (mut t0, mut x0): (T, T),
    (mut t1, mut x1): (T, T),
    level: T,
    tol: T,
    rng: &mut R,
) -> T {
    debug_assert!(x0 < level && level <= x1);
    while t1 - t0 > tol {
        let tm = T::c(0.5) * (t0 + t1);
        if !(tm > t0 && tm < t1) {
            break;
        }
        let frac = sample_beta(shape_rate * (tm - t0), shape_rate * (t1 - tm), rng);
        let xm = x0 + (x1 - x0) * frac;
        if xm >= level {
            t1 = tm;
            x1 = xm;
        } else {
            t0 = tm;
            x0 = xm;
        }
    }
    t1
}

/// Path values at `times` (starting from level 0 at time 0).
pub fn simulate_path<T: Real, R: Rng + ?Sized>(
    scale: ScaleRealization<T>,
    shape_rate: T,
    times: &[T],
    rng: &mut R,
) -> Vec<T> {
    let mut level = T::zero();
    let mut prev = T::zero();
    times
        .iter()
        .map(|&t| {
            if t > prev {
                level += sample_increment(scale, shape_rate, t - prev, rng);
            }
            prev = t;
            level
        })
        .collect()
}
