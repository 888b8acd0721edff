//! Adaptive Gauss–Kronrod quadrature and fixed Gauss–Legendre rules.

use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::real::Real;

/// Tolerances for adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    pub max_depth: usize,
    /// Semi-infinite integrals stop once whole panels fall below this.
    pub tail_epsilon: T,
}

impl<T: Real> Default for QuadratureSpec<T> {
    fn default() -> Self {
        QuadratureSpec {
            abs_tol: T::c(1e-9),
            rel_tol: T::c(1e-8),
            max_depth: 50,
            tail_epsilon: T::c(1e-12),
        }
    }
}

impl<T: Real> QuadratureSpec<T> {
    pub fn with_tolerance(abs_tol: T, rel_tol: T) -> Self {
        QuadratureSpec {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Panel<T> {
    a: T,
    b: T,
    value: T,
    error: T,
    depth: usize,
}

impl<T: Real> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T: Real> Eq for Panel<T> {}
impl<T: Real> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(std::cmp::Ordering::Equal)
    }
}

/// One 15-point Kronrod evaluation with the QUADPACK error heuristic.
fn gk15<T: Real, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> (T, T, T) {
    let half = T::c(0.5);
    let center = half * (a + b);
    let half_len = half * (b - a);
    let fc = f(center);
    let mut res_k = fc * T::c(WGK[7]);
    let mut res_g = fc * T::c(WG[3]);
    let mut res_abs = res_k.abs();
    let mut fv1 = [T::zero(); 7];
    let mut fv2 = [T::zero(); 7];
    for j in 0..7 {
        let dx = half_len * T::c(XGK[j]);
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        let w = T::c(WGK[j]);
        res_k += w * (f1 + f2);
        res_abs += w * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += T::c(WG[j / 2]) * (f1 + f2);
        }
    }
    let mean = res_k * half;
    let mut res_asc = T::c(WGK[7]) * (fc - mean).abs();
    for j in 0..7 {
        res_asc += T::c(WGK[j]) * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let scale = half_len.abs();
    let value = res_k * half_len;
    res_abs *= scale;
    res_asc *= scale;
    let mut err = ((res_k - res_g) * half_len).abs();
    if res_asc != T::zero() && err != T::zero() {
        err = res_asc * T::one().min((T::c(200.0) * err / res_asc).powf(T::c(1.5)));
    }
    let round = T::c(50.0) * T::epsilon() * res_abs;
    if res_abs > T::min_positive_value() / (T::c(50.0) * T::epsilon()) {
        err = err.max(round);
    }
    (value, err, res_abs)
}

/// ∫ₐᵇ f(x) dx. If `b` is +∞ the integral is split into doubling panels.
pub fn integrate<T: Real, F: FnMut(T) -> T>(mut f: F, a: T, b: T, spec: &QuadratureSpec<T>) -> Result<T> {
    if a.is_nan() || b.is_nan() || a.is_infinite() {
        return Err(Error::Domain {
            function: "integrate",
            detail: format!("bad interval [{a}, {b}]"),
        });
    }
    if b.is_infinite() {
        if b < T::zero() {
            return Err(Error::Domain {
                function: "integrate",
                detail: "lower-infinite intervals are not supported".into(),
            });
        }
        return integrate_tail(&mut f, a, spec);
    }
    if a == b {
        return Ok(T::zero());
    }
    if b < a {
        return integrate_finite(&mut f, b, a, spec).map(|v| -v);
    }
    integrate_finite(&mut f, a, b, spec)
}

fn integrate_finite<T: Real, F: FnMut(T) -> T>(f: &mut F, a: T, b: T, spec: &QuadratureSpec<T>) -> Result<T> {
    let (value, error, _) = gk15(f, a, b);
    if !value.is_finite() {
        return Err(Error::Quadrature {
            context: "non-finite integrand".into(),
            estimate: value.as_f64(),
            error: f64::INFINITY,
            depth: 0,
        });
    }
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value, error, depth: 0 });
    let mut total = value;
    let mut total_err = error;
    let max_panels = 1usize << 13;
    loop {
        let tol = spec.abs_tol.max(spec.rel_tol * total.abs());
        if total_err <= tol {
            return Ok(total);
        }
        let worst = heap.pop().expect("heap never empty");
        if worst.depth >= spec.max_depth || heap.len() >= max_panels {
            return Err(Error::Quadrature {
                context: String::new(),
                estimate: total.as_f64(),
                error: total_err.as_f64(),
                depth: worst.depth,
            });
        }
        let mid = T::c(0.5) * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // Interval exhausted in floating point; accept what we have.
            heap.push(Panel { error: T::zero(), ..worst });
            total_err = heap.iter().map(|p| p.error).fold(T::zero(), |x, y| x + y);
            if total_err <= tol {
                return Ok(total);
            }
            continue;
        }
        let (v1, e1, _) = gk15(f, worst.a, mid);
        let (v2, e2, _) = gk15(f, mid, worst.b);
        if !(v1.is_finite() && v2.is_finite()) {
            return Err(Error::Quadrature {
                context: "non-finite integrand".into(),
                estimate: total.as_f64(),
                error: f64::INFINITY,
                depth: worst.depth + 1,
            });
        }
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1, depth: worst.depth + 1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2, depth: worst.depth + 1 });
        if heap.len() % 64 == 0 {
            // Resum occasionally to keep running totals honest.
            total = heap.iter().map(|p| p.value).fold(T::zero(), |x, y| x + y);
            total_err = heap.iter().map(|p| p.error).fold(T::zero(), |x, y| x + y);
        }
    }
}

fn integrate_tail<T: Real, F: FnMut(T) -> T>(f: &mut F, a: T, spec: &QuadratureSpec<T>) -> Result<T> {
    let mut total = T::zero();
    let mut width = T::one();
    let mut start = a;
    let mut quiet = 0;
    for panel in 0..80 {
        let end = start + width;
        let budget = QuadratureSpec {
            abs_tol: spec.abs_tol * T::c(0.5).powi(panel.min(40) + 1),
            ..*spec
        };
        let part = integrate_finite(f, start, end, &budget)?;
        total += part;
        let edge = f(end).abs();
        if part.abs() < spec.tail_epsilon.max(spec.rel_tol * total.abs() * T::c(1e-3))
            && edge < spec.tail_epsilon
        {
            quiet += 1;
            if quiet >= 2 {
                return Ok(total);
            }
        } else {
            quiet = 0;
        }
        start = end;
        width *= T::c(2.0);
    }
    Err(Error::Quadrature {
        context: "semi-infinite tail did not decay".into(),
        estimate: total.as_f64(),
        error: f64::INFINITY,
        depth: 80,
    })
}

/// ∫ₐᵇ f(x) dx for f with an integrable (x − a)^{p−1} singularity, p > 0.
///
/// Substitutes x = a + (b − a) u^{1/p}, which removes the power factor.
pub fn integrate_power_singular<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    a: T,
    b: T,
    p: T,
    spec: &QuadratureSpec<T>,
) -> Result<T> {
    if !(p > T::zero()) {
        return Err(Error::Domain {
            function: "integrate_power_singular",
            detail: format!("exponent must be positive, got {p}"),
        });
    }
    let len = b - a;
    let inv_p = p.recip();
    let g = |u: T| {
        if u <= T::zero() {
            return T::zero();
        }
        let jac = len * inv_p * u.powf(inv_p - T::one());
        let x = a + len * u.powf(inv_p);
        if jac == T::zero() || x <= a {
            return T::zero();
        }
        f(x) * jac
    };
    integrate(g, T::zero(), T::one(), spec)
}

/// Fixed n-point Gauss–Legendre rule on [−1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss–Legendre rule needs at least one node");
        let mut nodes = vec![T::zero(); n];
        let mut weights = vec![T::zero(); n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, 0.0);
                for j in 0..n {
                    let p2 = p1;
                    p1 = p0;
                    p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
                }
                dp = nf * (z * p0 - p1) / (z * z - 1.0);
                let z_next = z - p0 / dp;
                let done = (z_next - z).abs() < 1e-16;
                z = z_next;
                if done {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = T::c(-z);
            nodes[n - 1 - i] = T::c(z);
            weights[i] = T::c(w);
            weights[n - 1 - i] = T::c(w);
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto [a, b].
    pub fn on(&self, a: T, b: T) -> impl Iterator<Item = (T, T)> + '_ {
        let half = T::c(0.5) * (b - a);
        let mid = T::c(0.5) * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(T) -> T>(&self, mut f: F, a: T, b: T) -> T {
        self.on(a, b).fold(T::zero(), |acc, (x, w)| acc + w * f(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let spec = QuadratureSpec::<f64>::default();
        let v = integrate(|x: f64| 3.0 * x * x, 0.0, 2.0, &spec).unwrap();
        assert!((v - 8.0).abs() < 1e-13);
        let rev = integrate(|x: f64| 3.0 * x * x, 2.0, 0.0, &spec).unwrap();
        assert!((rev + 8.0).abs() < 1e-13);
    }

    #[test]
    fn semi_infinite_exponential() {
        let spec = QuadratureSpec::<f64>::default();
        let v = integrate(|x: f64| (-x).exp(), 0.0, f64::INFINITY, &spec).unwrap();
        assert!((v - 1.0).abs() < 1e-9);
        let slow = integrate(|x: f64| (-0.01 * x).exp(), 0.0, f64::INFINITY, &spec).unwrap();
        assert!((slow - 100.0).abs() < 1e-6);
    }

    #[test]
    fn endpoint_singularity() {
        let spec = QuadratureSpec::<f64>::default();
        let v = integrate_power_singular(|x: f64| x.powf(-0.5), 0.0, 1.0, 0.5, &spec).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        let loose = QuadratureSpec::with_tolerance(1e-6, 1e-6);
        let raw = integrate(|x: f64| x.powf(-0.5), 0.0, 1.0, &loose).unwrap();
        assert!((raw - 2.0).abs() < 1e-6);
        let w = integrate_power_singular(|x: f64| x.powf(-0.9), 0.0, 1.0, 0.1, &spec).unwrap();
        assert!((w - 10.0).abs() < 1e-8);
    }

    #[test]
    fn non_integrable_reports_error() {
        let spec = QuadratureSpec::<f64>::default();
        let r = integrate(|x: f64| 1.0 / x.abs().max(1e-300), 0.0, 1.0, &spec);
        assert!(r.is_err());
        let tail = integrate(|_x: f64| 1.0, 0.0, f64::INFINITY, &spec);
        assert!(tail.is_err());
    }

    #[test]
    fn gauss_legendre_rules() {
        let gl = GaussLegendre::<f64>::new(10);
        let w: f64 = gl.on(-1.0, 1.0).map(|(_, w)| w).sum();
        assert!((w - 2.0).abs() < 1e-14);
        let v = gl.integrate(|x| x.powi(19), 0.0, 1.0);
        assert!((v - 0.05).abs() < 1e-14);
        let one = GaussLegendre::<f64>::new(1);
        assert!((one.integrate(|x| x, 0.0, 2.0) - 2.0).abs() < 1e-15);
    }
}
