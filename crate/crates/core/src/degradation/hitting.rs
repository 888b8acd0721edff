use rand::Rng;

use crate::degradation::model::{GammaModel, ScaleSpec};
use crate::error::{invalid, Error, Result};
use crate::real::Real;
use crate::special_functions::{integrate, ln_regularized_pair, solve_increasing, GaussLegendre, QuadratureSpec};

/// Nodes used to average over θ = 1/β in the random-effects case.
pub const MIXTURE_NODES: usize = 24;

fn check_level<T: Real>(level: T) -> Result<()> {
    if !(level > T::zero() && level.is_finite()) {
        return Err(invalid("level", format!("must be finite and > 0, got {level}")));
    }
    Ok(())
}

/// F(t) = P(σ_L ≤ t) = Γ(αt, βL)/Γ(αt).
pub fn hitting_cdf<T: Real>(shape_rate: T, rate: T, level: T, t: T) -> Result<T> {
    check_level(level)?;
    if !(shape_rate > T::zero()) || !(rate > T::zero()) {
        return Err(invalid("alpha, beta", "must be > 0"));
    }
    Ok(cdf_unchecked(shape_rate, rate, level, t))
}

fn cdf_unchecked<T: Real>(shape_rate: T, rate: T, level: T, t: T) -> T {
    if t <= T::zero() {
        return T::zero();
    }
    ln_regularized_pair(shape_rate * t, rate * level).1.exp()
}

/// Derivative of [`hitting_cdf`] by central differences.
pub fn hitting_pdf<T: Real>(shape_rate: T, rate: T, level: T, t: T) -> Result<T> {
    check_level(level)?;
    central_difference(|s| cdf_unchecked(shape_rate, rate, level, s), t, "hitting_pdf")
}

/// Step h = max(1e−5, 1e−4·t), shrunk near the origin so t − h ≥ 0.
pub(crate) fn central_difference<T: Real, F: Fn(T) -> T>(f: F, t: T, function: &'static str) -> Result<T> {
    if !(t > T::zero()) {
        return Err(Error::Domain { function, detail: format!("needs t > 0, got {t}") });
    }
    let h = T::c(1e-5).max(T::c(1e-4) * t).min(T::c(0.5) * t);
    let hi = f(t + h);
    let lo = f(t - h);
    let mid = f(t);
    if hi == lo && mid > T::c(1e-6) && mid < T::one() - T::c(1e-6) {
        return Err(Error::StepBreakdown { function, at: t.as_f64() });
    }
    Ok(((hi - lo) / (T::c(2.0) * h)).max(T::zero()))
}

/// θ-mixture F^h(t) = ∫ₐᵇ F_{α,1/θ}(t) dθ/(b − a), by adaptive quadrature.
pub fn random_effect_hitting_cdf<T: Real>(shape_rate: T, a: T, b: T, level: T, t: T) -> Result<T> {
    check_level(level)?;
    if !(a > T::zero() && b > a) {
        return Err(invalid("a, b", format!("need 0 < a < b, got a={a}, b={b}")));
    }
    if t <= T::zero() {
        return Ok(T::zero());
    }
    let spec = QuadratureSpec::with_tolerance(T::c(1e-12), T::c(1e-10));
    let v = integrate(|theta| cdf_unchecked(shape_rate, theta.recip(), level, t), a, b, &spec)
        .map_err(|e| e.within("random_effect_hitting_cdf: theta"))?;
    Ok((v / (b - a)).min(T::one()))
}

/// First-passage law of one degradation process through a fixed level.
///
/// Covers both scale specifications: the random-effects law is a fixed
/// Gauss–Legendre mixture over θ.
#[derive(Debug, Clone)]
pub struct HittingLaw<T> {
    shape_rate: T,
    level: T,
    /// (rate β, weight); weights sum to 1.
    components: Vec<(T, T)>,
}

impl<T: Real> HittingLaw<T> {
    pub fn new(model: &GammaModel<T>, level: T) -> Result<Self> {
        model.validate()?;
        check_level(level)?;
        let components = match model.scale {
            ScaleSpec::Deterministic { beta } => vec![(beta, T::one())],
            ScaleSpec::UniformInverseScale { a, b } => GaussLegendre::new(MIXTURE_NODES)
                .on(a, b)
                .map(|(theta, w)| (theta.recip(), w / (b - a)))
                .collect(),
        };
        Ok(HittingLaw { shape_rate: model.shape_rate, level, components })
    }

    pub fn level(&self) -> T {
        self.level
    }

    pub fn shape_rate(&self) -> T {
        self.shape_rate
    }

    pub fn components(&self) -> &[(T, T)] {
        &self.components
    }

    pub fn cdf(&self, t: T) -> T {
        if t <= T::zero() {
            return T::zero();
        }
        let shape = self.shape_rate * t;
        self.components
            .iter()
            .fold(T::zero(), |acc, &(rate, w)| acc + w * ln_regularized_pair(shape, rate * self.level).1.exp())
    }

    pub fn survival(&self, t: T) -> T {
        if t <= T::zero() {
            return T::one();
        }
        let shape = self.shape_rate * t;
        self.components
            .iter()
            .fold(T::zero(), |acc, &(rate, w)| acc + w * ln_regularized_pair(shape, rate * self.level).0.exp())
    }

    pub fn pdf(&self, t: T) -> Result<T> {
        central_difference(|s| self.cdf(s), t, "hitting_pdf")
    }

    /// Smallest t with F(t) ≥ 1 − eps (an integration horizon).
    pub fn quantile_upper(&self, eps: T) -> Result<T> {
        let guess = self.level * self.components.iter().fold(T::zero(), |m, &(r, _)| m.max(r)) / self.shape_rate;
        solve_increasing(|t| Ok(self.cdf(t)), T::one() - eps, T::zero(), guess.max(T::one()), T::c(1e-6))
    }

    /// Inverse-transform draw of σ for the component with rate `rate`.
    pub fn invert_for_rate(&self, rate: T, u: T) -> Result<T> {
        let guess = (rate * self.level / self.shape_rate).max(T::c(1e-3));
        solve_increasing(
            |t| Ok(cdf_unchecked(self.shape_rate, rate, self.level, t)),
            u,
            T::zero(),
            guess,
            T::c(1e-10),
        )
    }

    /// Draws a rate from the mixture, then σ by inverse transform.
    pub fn sample<R: Rng + ?Sized>(&self, model: &GammaModel<T>, rng: &mut R) -> Result<T> {
        let rate = crate::degradation::model::realize_scale(model, rng).rate;
        self.invert_for_rate(rate, T::sample_open01(rng))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special_functions::regularized_upper_gamma;

    #[test]
    fn cdf_basics() {
        assert_eq!(hitting_cdf(1.1, 1.4, 10.0, 0.0).unwrap(), 0.0);
        assert!(hitting_cdf(1.1, 1.4, 1e-12, 0.0).is_ok());
        assert!(hitting_cdf(1.1, 1.4, 0.0, 2.0).is_err());
        let v = hitting_cdf(1.0f64, 1.0, 10.0, 10.0).unwrap();
        assert!((v - regularized_upper_gamma(10.0, 10.0).unwrap()).abs() < 1e-15);
        // Frozen quadrature oracle value of Q(10, 10).
        assert!((v - 0.457_929_714_471_852_3).abs() < 1e-12);
        let mut prev = 0.0;
        for t in 1..=50 {
            let c = hitting_cdf(1.1, 1.4, 10.0, t as f64).unwrap();
            assert!(c >= prev);
            prev = c;
        }
        assert!(prev > 1.0 - 1e-9);
    }

    #[test]
    fn mixture_matches_adaptive() {
        let m = GammaModel::<f64>::uniform_inverse_scale(1.1, 1.0 / 1.4 - 0.1, 1.0 / 1.4 + 0.1).unwrap();
        let law = HittingLaw::new(&m, 10.0).unwrap();
        for &t in &[2.0, 6.0, 10.0, 15.0] {
            let a = law.cdf(t);
            let b = random_effect_hitting_cdf(1.1, 1.0 / 1.4 - 0.1, 1.0 / 1.4 + 0.1, 10.0, t).unwrap();
            assert!((a - b).abs() < 1e-10, "t={t}: {a} vs {b}");
            assert!((law.cdf(t) + law.survival(t) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn inverse_transform_round_trip() {
        let m = GammaModel::<f64>::deterministic(1.1, 1.4).unwrap();
        let law = HittingLaw::new(&m, 10.0).unwrap();
        for &u in &[1e-6, 0.1, 0.5, 0.9, 0.999_999] {
            let t = law.invert_for_rate(1.4, u).unwrap();
            assert!((law.cdf(t) - u).abs() < 1e-9, "u={u}");
        }
    }
}
