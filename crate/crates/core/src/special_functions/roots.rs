//! Bracketed root finding for monotone functions.

use crate::error::{Error, Result};
use crate::real::Real;

/// Solves g(x) = target for non-decreasing g on [lo, ∞).
///
/// The upper end is doubled until it brackets the target, then the bracket
/// is narrowed by bisection and finished with safeguarded secant steps.
pub fn solve_increasing<T: Real, G: FnMut(T) -> Result<T>>(
    mut g: G,
    target: T,
    lo: T,
    initial_hi: T,
    tol: T,
) -> Result<T> {
    let mut a = lo;
    let mut ga = g(a)? - target;
    if ga >= T::zero() {
        return Ok(a);
    }
    let mut b = initial_hi.max(lo + T::one());
    let mut gb = g(b)? - target;
    let mut expansions = 0;
    while gb < T::zero() {
        a = b;
        ga = gb;
        b = lo + (b - lo) * T::c(2.0);
        gb = g(b)? - target;
        expansions += 1;
        if expansions > 200 || !b.is_finite() {
            return Err(Error::RootFinding {
                function: "solve_increasing",
                detail: format!("could not bracket target {target}"),
            });
        }
    }
    for _ in 0..40 {
        if (b - a) <= tol * T::one().max(a.abs()) {
            return Ok(T::c(0.5) * (a + b));
        }
        let m = T::c(0.5) * (a + b);
        let gm = g(m)? - target;
        if gm < T::zero() {
            a = m;
            ga = gm;
        } else {
            b = m;
            gb = gm;
        }
        if gb - ga > T::zero() && (b - a) < T::c(1e-3) * T::one().max(a.abs()) {
            break;
        }
    }
    for _ in 0..100 {
        if (b - a) <= tol * T::one().max(a.abs()) || gb == ga {
            break;
        }
        let mut x = a - ga * (b - a) / (gb - ga);
        if !(x > a && x < b) {
            x = T::c(0.5) * (a + b);
        }
        let gx = g(x)? - target;
        if gx == T::zero() {
            return Ok(x);
        }
        if gx < T::zero() {
            // Nudge the step toward the other end so the bracket keeps shrinking.
            let shrink = x - a;
            a = x;
            ga = gx;
            if shrink < T::c(0.1) * (b - a) {
                let m = a + T::c(0.5) * (b - a);
                let gm = g(m)? - target;
                if gm < T::zero() {
                    a = m;
                    ga = gm;
                } else {
                    b = m;
                    gb = gm;
                }
            }
        } else {
            let shrink = b - x;
            b = x;
            gb = gx;
            if shrink < T::c(0.1) * (b - a) {
                let m = a + T::c(0.5) * (b - a);
                let gm = g(m)? - target;
                if gm < T::zero() {
                    a = m;
                    ga = gm;
                } else {
                    b = m;
                    gb = gm;
                }
            }
        }
    }
    Ok(a - ga * (b - a) / (gb - ga).max(T::min_positive_value()))
}
