//! Random-effects likelihood and maximum-likelihood fits.
//!
//! For one process with increments Δx_j over Δt_j and θ = 1/β the joint
//! density is ∏ Δx_j^{αΔt_j−1}/Γ(αΔt_j) · θ^{−A} e^{−X/θ}, with A = α·(t_n − t_0)
//! and X = x_n − x_0. Averaging over θ ~ U(a, b) gives
//!
//!   X^{1−A} ∫_{X/b}^{X/a} z^{A−2} e^{−z} dz / (b − a).
//!
//! Writing the power as X^{−A} instead only shifts the log-likelihood by a
//! data-dependent constant.

use std::collections::HashMap;
use std::io::{Read, Write};

use rand::Rng;

use crate::degradation::model::{realize_scale, sample_increment, GammaModel};
use crate::error::{invalid, Error, Result};
use crate::real::Real;
use crate::special_functions::{ln_gamma, ln_gamma_window};

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessRecord<T> {
    pub id: String,
    pub times: Vec<T>,
    pub levels: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegradationObservations<T> {
    pub processes: Vec<ProcessRecord<T>>,
}

impl<T: Real> DegradationObservations<T> {
    pub fn new(processes: Vec<ProcessRecord<T>>) -> Result<Self> {
        if processes.is_empty() {
            return Err(Error::Data("no degradation processes".into()));
        }
        for p in &processes {
            if p.times.len() != p.levels.len() {
                return Err(Error::Data(format!("process {}: times and levels differ in length", p.id)));
            }
            if p.times.len() < 2 {
                return Err(Error::Data(format!("process {}: needs at least two observations", p.id)));
            }
            if p.times.iter().chain(&p.levels).any(|v| !v.is_finite()) {
                return Err(Error::Data(format!("process {}: non-finite value", p.id)));
            }
            if p.times.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::Data(format!("process {}: times must increase strictly", p.id)));
            }
            if p.levels.windows(2).any(|w| w[1] < w[0]) {
                return Err(Error::Data(format!("process {}: levels must not decrease", p.id)));
            }
        }
        Ok(DegradationObservations { processes })
    }

    /// Reads `process_id,time,level` rows; rows of one process must be in time order.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let headers = reader.headers()?.clone();
        let expected = ["process_id", "time", "level"];
        if headers.len() != 3 || headers.iter().zip(expected).any(|(h, e)| h != e) {
            return Err(Error::Data(format!(
                "expected header `process_id,time,level`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut order: Vec<ProcessRecord<T>> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        for (row, record) in reader.records().enumerate() {
            let record = record?;
            let parse = |k: usize, name: &str| -> Result<T> {
                record[k]
                    .parse::<f64>()
                    .map(T::c)
                    .map_err(|_| Error::Data(format!("row {}: bad {name} `{}`", row + 2, &record[k])))
            };
            let t = parse(1, "time")?;
            let x = parse(2, "level")?;
            let id = record[0].to_string();
            let k = *index.entry(id.clone()).or_insert_with(|| {
                order.push(ProcessRecord { id, times: Vec::new(), levels: Vec::new() });
                order.len() - 1
            });
            order[k].times.push(t);
            order[k].levels.push(x);
        }
        Self::new(order)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["process_id", "time", "level"])?;
        for p in &self.processes {
            for (t, x) in p.times.iter().zip(&p.levels) {
                w.write_record([p.id.clone(), t.to_string(), x.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Log-likelihood of (α, a, b) for θ = 1/β ~ U(a, b).
pub fn log_likelihood<T: Real>(shape_rate: T, a: T, b: T, data: &DegradationObservations<T>) -> Result<T> {
    if !(shape_rate > T::zero()) {
        return Err(invalid("alpha", format!("must be > 0, got {shape_rate}")));
    }
    if !(a > T::zero() && b > a) {
        return Err(invalid("a, b", format!("need 0 < a < b, got a={a}, b={b}")));
    }
    let ln_width = (b - a).ln();
    let mut total = T::zero();
    for p in &data.processes {
        for (w_t, w_x) in p.times.windows(2).zip(p.levels.windows(2)) {
            let dt = w_t[1] - w_t[0];
            let dx = w_x[1] - w_x[0];
            if !(dx > T::zero()) {
                return Err(Error::Data(format!(
                    "process {}: zero increment between t={} and t={}",
                    p.id, w_t[0], w_t[1]
                )));
            }
            let s = shape_rate * dt;
            total += (s - T::one()) * dx.ln() - ln_gamma(s);
        }
        let n = p.times.len() - 1;
        let big_a = shape_rate * (p.times[n] - p.times[0]);
        let big_x = p.levels[n] - p.levels[0];
        let window = ln_gamma_window(big_a - T::one(), big_x / b, big_x / a)?;
        total += (T::one() - big_a) * big_x.ln() + window - ln_width;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HalfWidthFit<T> {
    pub grid: Vec<T>,
    /// Negative log-likelihood at each grid point (+∞ where it fails).
    pub neg_log_lik: Vec<T>,
    pub estimate: T,
    pub min_neg_log_lik: T,
    /// Grid minimum is not at either end of the grid.
    pub interior: bool,
    pub refined: bool,
}

/// Fits the half-width w of θ ~ U(c − w, c + w) with α held fixed.
pub fn fit_half_width<T: Real>(
    shape_rate: T,
    center: T,
    data: &DegradationObservations<T>,
    grid: &[T],
    refine: bool,
) -> Result<HalfWidthFit<T>> {
    if grid.is_empty() {
        return Err(invalid("grid", "empty half-width grid"));
    }
    if grid.iter().any(|&w| !(w > T::zero() && w < center)) {
        return Err(invalid("grid", format!("half-widths must lie in (0, {center})")));
    }
    let nll = |w: T| -> Result<T> { log_likelihood(shape_rate, center - w, center + w, data).map(|v| -v) };
    let mut values = Vec::with_capacity(grid.len());
    for &w in grid {
        let v = match nll(w) {
            Ok(v) if v.is_finite() => v,
            Ok(_) => T::infinity(),
            Err(e @ Error::Data(_)) => return Err(e),
            Err(_) => T::infinity(),
        };
        values.push(v);
    }
    let best = values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .min_by(|x, y| x.1.partial_cmp(y.1).unwrap())
        .map(|(i, _)| i)
        .ok_or_else(|| Error::Data("likelihood is not finite anywhere on the grid".into()))?;
    let interior = best > 0 && best + 1 < grid.len();
    let mut estimate = grid[best];
    let mut min_value = values[best];
    let mut refined = false;
    if refine && interior {
        let (w, v) = golden_section(|w| nll(w).unwrap_or(T::infinity()), grid[best - 1], grid[best + 1], T::c(1e-7));
        if v < min_value {
            estimate = w;
            min_value = v;
        }
        refined = true;
    }
    Ok(HalfWidthFit {
        grid: grid.to_vec(),
        neg_log_lik: values,
        estimate,
        min_neg_log_lik: min_value,
        interior,
        refined,
    })
}

fn golden_section<T: Real, F: Fn(T) -> T>(f: F, mut lo: T, mut hi: T, tol: T) -> (T, T) {
    let ratio = T::c(0.618_033_988_749_894_8);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 { (x1, f1) } else { (x2, f2) }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullFit<T> {
    pub alpha: T,
    pub a: T,
    pub b: T,
    pub neg_log_lik: T,
    pub iterations: usize,
}

/// Joint (α, a, b) fit by Nelder–Mead in (ln α, ln a, ln(b − a)).
pub fn fit_full<T: Real>(data: &DegradationObservations<T>, start: (T, T, T), max_iter: usize) -> Result<FullFit<T>> {
    let (alpha0, a0, b0) = start;
    if !(alpha0 > T::zero() && a0 > T::zero() && b0 > a0) {
        return Err(invalid("start", "need alpha > 0 and 0 < a < b"));
    }
    let decode = |p: &[T; 3]| (p[0].exp(), p[1].exp(), p[1].exp() + p[2].exp());
    let objective = |p: &[T; 3]| {
        let (al, a, b) = decode(p);
        match log_likelihood(al, a, b, data) {
            Ok(v) if v.is_finite() => -v,
            _ => T::infinity(),
        }
    };
    let x0 = [alpha0.ln(), a0.ln(), (b0 - a0).ln()];
    let mut simplex: Vec<([T; 3], T)> = Vec::with_capacity(4);
    simplex.push((x0, objective(&x0)));
    for k in 0..3 {
        let mut x = x0;
        x[k] += T::c(0.2);
        simplex.push((x, objective(&x)));
    }
    if !simplex[0].1.is_finite() {
        return Err(Error::Data("likelihood is not finite at the starting point".into()));
    }
    let mut iterations = 0;
    let half = T::c(0.5);
    while iterations < max_iter {
        iterations += 1;
        simplex.sort_by(|x, y| x.1.partial_cmp(&y.1).unwrap_or(std::cmp::Ordering::Equal));
        let spread = (simplex[3].1 - simplex[0].1).abs();
        if spread < T::c(1e-10) * (T::one() + simplex[0].1.abs()) {
            break;
        }
        let mut centroid = [T::zero(); 3];
        for (x, _) in &simplex[..3] {
            for k in 0..3 {
                centroid[k] += x[k] / T::c(3.0);
            }
        }
        let along = |t: T| -> [T; 3] {
            let w = simplex[3].0;
            [
                centroid[0] + t * (w[0] - centroid[0]),
                centroid[1] + t * (w[1] - centroid[1]),
                centroid[2] + t * (w[2] - centroid[2]),
            ]
        };
        let xr = along(-T::one());
        let fr = objective(&xr);
        if fr < simplex[0].1 {
            let xe = along(-T::c(2.0));
            let fe = objective(&xe);
            simplex[3] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[2].1 {
            simplex[3] = (xr, fr);
        } else {
            let xc = along(half);
            let fc = objective(&xc);
            if fc < simplex[3].1 {
                simplex[3] = (xc, fc);
            } else {
                let best = simplex[0].0;
                for item in simplex.iter_mut().skip(1) {
                    let mut x = item.0;
                    for k in 0..3 {
                        x[k] = best[k] + half * (x[k] - best[k]);
                    }
                    *item = (x, objective(&x));
                }
            }
        }
    }
    simplex.sort_by(|x, y| x.1.partial_cmp(&y.1).unwrap_or(std::cmp::Ordering::Equal));
    let (alpha, a, b) = decode(&simplex[0].0);
    Ok(FullFit { alpha, a, b, neg_log_lik: simplex[0].1, iterations })
}

/// Simulates `n_processes` paths observed at 0, dt, 2dt, … ≤ horizon.
pub fn simulate_observations<T: Real, R: Rng + ?Sized>(
    model: &GammaModel<T>,
    n_processes: usize,
    horizon: T,
    dt: T,
    rng: &mut R,
) -> Result<DegradationObservations<T>> {
    model.validate()?;
    if !(dt > T::zero() && horizon >= dt) {
        return Err(invalid("dt", format!("need 0 < dt <= horizon, got dt={dt}, horizon={horizon}")));
    }
    let steps = (horizon / dt + T::c(1e-9)).floor().to_usize().unwrap_or(0);
    let mut processes = Vec::with_capacity(n_processes);
    for i in 0..n_processes {
        let scale = realize_scale(model, rng);
        let mut times = vec![T::zero()];
        let mut levels = vec![T::zero()];
        let mut x = T::zero();
        for k in 1..=steps {
            x += sample_increment(scale, model.shape_rate, dt, rng);
            times.push(dt * T::from_count(k));
            levels.push(x);
        }
        processes.push(ProcessRecord { id: format!("{}", i + 1), times, levels });
    }
    DegradationObservations::new(processes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special_functions::gamma_pdf;

    fn single(dx: f64, dt: f64) -> DegradationObservations<f64> {
        DegradationObservations::new(vec![ProcessRecord {
            id: "p".into(),
            times: vec![0.0, dt],
            levels: vec![0.0, dx],
        }])
        .unwrap()
    }

    #[test]
    fn collapses_to_gamma_density() {
        let (alpha, b, dx, dt) = (1.5, 1.0, 1.7, 2.0);
        let a = b - 1e-7;
        let ll = log_likelihood(alpha, a, b, &single(dx, dt)).unwrap();
        let want = gamma_pdf(alpha * dt, 1.0 / b, dx).unwrap().ln();
        assert!((ll - want).abs() < 1e-6, "{ll} vs {want}");
    }

    #[test]
    fn rejects_bad_input() {
        let data = DegradationObservations::new(vec![ProcessRecord {
            id: "p".into(),
            times: vec![0.0, 1.0, 2.0],
            levels: vec![0.0, 1.0, 1.0],
        }])
        .unwrap();
        assert!(matches!(log_likelihood(1.0, 0.7, 1.3, &data), Err(Error::Data(_))));
        assert!(log_likelihood(1.0, 1.3, 0.7, &single(1.0, 1.0)).is_err());
        assert!(DegradationObservations::<f64>::new(vec![]).is_err());
        let bad = ProcessRecord { id: "q".into(), times: vec![0.0, 1.0], levels: vec![2.0, 1.0] };
        assert!(DegradationObservations::new(vec![bad]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let data = DegradationObservations::new(vec![
            ProcessRecord { id: "a".into(), times: vec![0.0, 1.0], levels: vec![0.0, 0.5] },
            ProcessRecord { id: "b".into(), times: vec![0.0, 2.0], levels: vec![0.1, 0.9] },
        ])
        .unwrap();
        let mut buf = Vec::new();
        data.write_csv(&mut buf).unwrap();
        let back = DegradationObservations::<f64>::read_csv(&buf[..]).unwrap();
        assert_eq!(back, data);
        assert!(DegradationObservations::<f64>::read_csv("id,t,x\n1,0,0\n".as_bytes()).is_err());
        assert!(DegradationObservations::<f64>::read_csv("process_id,time,level\n".as_bytes()).is_err());
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let (x, v) = golden_section(|x: f64| (x - 0.3).powi(2) + 1.0, 0.0, 1.0, 1e-9);
        assert!((x - 0.3).abs() < 1e-6 && (v - 1.0).abs() < 1e-12);
    }
}
