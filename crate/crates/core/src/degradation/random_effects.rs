use crate::error::{invalid, Result};
use crate::real::Real;
use crate::special_functions::{ln_gamma, ln_gamma_window};

fn check_ab<T: Real>(a: T, b: T) -> Result<()> {
    if !(a > T::zero() && b > a && b.is_finite()) {
        return Err(invalid("a, b", format!("need 0 < a < b < inf, got a={a}, b={b}")));
    }
    Ok(())
}

/// Density of X_h(t) when θ = 1/β ~ U(a, b):
/// [Γ(αt−1, u/b) − Γ(αt−1, u/a)] / ((b − a) Γ(αt)).
pub fn random_effect_pdf<T: Real>(shape_rate: T, a: T, b: T, t: T, u: T) -> Result<T> {
    check_ab(a, b)?;
    if !(u > T::zero() && t > T::zero()) {
        return Err(invalid("t, u", format!("need t > 0 and u > 0, got t={t}, u={u}")));
    }
    let s = shape_rate * t;
    let window = ln_gamma_window(s - T::one(), u / b, u / a)?;
    Ok((window - (b - a).ln() - ln_gamma(s)).exp())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomEffectMoments<T> {
    pub mean: T,
    pub variance: T,
    /// variance / mean
    pub ratio: T,
}

pub fn random_effect_moments<T: Real>(shape_rate: T, a: T, b: T, t: T) -> RandomEffectMoments<T> {
    let s = shape_rate * t;
    let two = T::c(2.0);
    let three = T::c(3.0);
    let quad = b * b + a * b + a * a;
    let mean = s * (a + b) / two;
    let variance = s * quad / three + s * s * (a - b) * (a - b) / T::c(12.0);
    let ratio = (T::c(4.0) * quad + s * (b - a) * (b - a)) / (T::c(6.0) * (a + b));
    RandomEffectMoments { mean, variance, ratio }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceComparison<T> {
    pub times: Vec<T>,
    /// Variance with θ ~ U(a, b).
    pub uniform: Vec<T>,
    /// Variance of the homogeneous process with 1/β = (a + b)/2.
    pub deterministic: Vec<T>,
    /// Uniform variance ≥ deterministic variance at every time.
    pub uniform_dominates: bool,
    /// Strict inequality at every time.
    pub strictly: bool,
    /// k₁ above which a gamma-distributed random effect overtakes the uniform one.
    pub crossover_k1: T,
}

/// Variances at matched mean (same α, 1/β₃ = (a + b)/2).
pub fn matched_variance_comparison<T: Real>(shape_rate: T, a: T, b: T, times: &[T]) -> Result<VarianceComparison<T>> {
    if !(a > T::zero() && b >= a && b.is_finite()) {
        return Err(invalid("a, b", format!("need 0 < a <= b, got a={a}, b={b}")));
    }
    let inv_beta = (a + b) / T::c(2.0);
    let uniform: Vec<T> = times.iter().map(|&t| random_effect_moments(shape_rate, a, b, t).variance).collect();
    let deterministic: Vec<T> = times.iter().map(|&t| shape_rate * t * inv_beta * inv_beta).collect();
    let uniform_dominates = uniform.iter().zip(&deterministic).all(|(u, d)| u >= d);
    let strictly = uniform.iter().zip(&deterministic).all(|(u, d)| u > d);
    let crossover_k1 = T::c(2.0) * (b * b + a * b + a * a) / (T::c(3.0) * (a + b)) - T::one();
    Ok(VarianceComparison {
        times: times.to_vec(),
        uniform,
        deterministic,
        uniform_dominates,
        strictly,
        crossover_k1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special_functions::{gamma_pdf, integrate, integrate_power_singular, QuadratureSpec};

    #[test]
    fn moments_examples() {
        let m = random_effect_moments(1.0f64, 0.7, 1.3, 10.0);
        assert!((m.mean - 10.0).abs() < 1e-12);
        assert!((m.variance - 13.3).abs() < 1e-12);
        assert!((m.ratio - 1.33).abs() < 1e-12);
        let d = random_effect_moments(1.3f64, 0.9, 0.9, 4.0);
        assert!((d.mean - 1.3 * 4.0 * 0.9).abs() < 1e-12);
        assert!((d.variance - 1.3 * 4.0 * 0.81).abs() < 1e-12);
        assert!((d.ratio - 0.9).abs() < 1e-12);
    }

    #[test]
    fn crossover_and_ordering() {
        let c = matched_variance_comparison(1.0f64, 1.0, 2.0, &[1.0]).unwrap();
        assert!((c.crossover_k1 - 5.0 / 9.0).abs() < 1e-15);
        let c = matched_variance_comparison(1.0, 0.7, 1.3, &[1.0, 10.0, 100.0]).unwrap();
        assert!(c.strictly && c.uniform_dominates);
        let e = matched_variance_comparison(1.0, 0.8, 0.8, &[1.0, 10.0]).unwrap();
        assert!(e.uniform_dominates && !e.strictly);
    }

    #[test]
    fn pdf_matches_direct_mixture() {
        let (alpha, a, b, t) = (1.0, 1.0, 2.0, 5.0);
        let spec = QuadratureSpec::with_tolerance(1e-14, 1e-12);
        for &u in &[0.5, 3.0, 7.5, 20.0] {
            let want = integrate(
                |theta: f64| gamma_pdf(alpha * t, 1.0 / theta, u).unwrap(),
                a,
                b,
                &spec,
            )
            .unwrap()
                / (b - a);
            let got = random_effect_pdf(alpha, a, b, t, u).unwrap();
            assert!((got - want).abs() < 1e-8, "u={u}: {got} vs {want}");
        }
    }

    #[test]
    fn pdf_small_shape_normalizes() {
        // αt = 0.6 < 1 puts the incomplete-gamma shape below zero.
        let spec = QuadratureSpec::with_tolerance(1e-10, 1e-9);
        let head = integrate_power_singular(|u: f64| random_effect_pdf(1.2, 0.7, 1.3, 0.5, u).unwrap(), 0.0, 1.0, 0.6, &spec);
        let total = head.unwrap()
            + integrate(|u: f64| random_effect_pdf(1.2, 0.7, 1.3, 0.5, u).unwrap(), 1.0, f64::INFINITY, &spec)
                .unwrap();
        assert!((total - 1.0).abs() < 1e-6, "{total}");
    }

    #[test]
    fn pdf_degenerate_limit() {
        let b: f64 = 1.0 / 1.4;
        let a = b - 1e-7;
        for &u in &[1.0, 4.0, 9.0] {
            let got = random_effect_pdf(1.1, a, b, 6.0, u).unwrap();
            let want = gamma_pdf(1.1 * 6.0, 1.0 / b, u).unwrap();
            assert!((got - want).abs() < 1e-6 * want.max(1e-3), "u={u}");
        }
    }
}
