//! Shot-noise Cox initiation process.
//!
//! Shocks arrive as a Poisson process of rate `mu`; each adds an
//! exponentially decaying bump `exp(-delta (s - T_i))` on top of the base
//! level `lambda0`. Degradation processes start at the points of the Cox
//! process driven by that intensity.
//!
//! Note on the expected intensity: the unconditional mean is
//! `lambda0 + (mu/delta)(1 - exp(-delta s))`. A form with a stray factor
//! `n/(s delta)` left over from conditioning on the shock count sometimes
//! appears in derivations; it does not integrate to the expected number of
//! arrivals and is not used here.

use std::io::Write;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotNoiseParams<T> {
    pub lambda0: T,
    pub mu: T,
    pub delta: T,
}

impl<T: Real> ShotNoiseParams<T> {
    pub fn new(lambda0: T, mu: T, delta: T) -> Result<Self> {
        let p = ShotNoiseParams { lambda0, mu, delta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda0 >= T::zero() && self.lambda0.is_finite()) {
            return Err(invalid("lambda0", format!("must be finite and >= 0, got {}", self.lambda0)));
        }
        if !(self.mu >= T::zero() && self.mu.is_finite()) {
            return Err(invalid("mu", format!("must be finite and >= 0, got {}", self.mu)));
        }
        if !(self.delta > T::zero()) || self.delta.is_nan() {
            return Err(invalid("delta", format!("must be > 0, got {}", self.delta)));
        }
        Ok(())
    }

    /// Λ0(s) = λ0·s.
    pub fn base_cumulative(&self, s: T) -> T {
        self.lambda0 * s
    }

    /// 1/δ mass of one shock; zero once decay is instantaneous.
    fn shock_mass(&self) -> T {
        if self.delta.is_infinite() {
            T::zero()
        } else {
            self.mu / self.delta
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShockTrajectory<T> {
    pub horizon: T,
    pub shock_times: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalTrajectory<T> {
    pub horizon: T,
    pub arrival_times: Vec<T>,
}

impl<T: Real> ArrivalTrajectory<T> {
    /// N*(t): arrivals in [0, t].
    pub fn count_until(&self, t: T) -> usize {
        self.arrival_times.partition_point(|&s| s <= t)
    }
}

fn check_sorted<T: Real>(times: &[T], horizon: T, what: &'static str) -> Result<()> {
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid(what, "times must increase strictly"));
    }
    if times.iter().any(|&t| t < T::zero() || t > horizon) {
        return Err(invalid(what, format!("times must lie in [0, {horizon}]")));
    }
    Ok(())
}

impl<T: Real> ShockTrajectory<T> {
    pub fn new(horizon: T, shock_times: Vec<T>) -> Result<Self> {
        check_sorted(&shock_times, horizon, "shock_times")?;
        Ok(ShockTrajectory { horizon, shock_times })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_time_column(out, &self.shock_times)
    }
}

impl<T: Real> ArrivalTrajectory<T> {
    pub fn new(horizon: T, arrival_times: Vec<T>) -> Result<Self> {
        check_sorted(&arrival_times, horizon, "arrival_times")?;
        Ok(ArrivalTrajectory { horizon, arrival_times })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_time_column(out, &self.arrival_times)
    }
}

fn write_time_column<T: Real, W: Write>(out: W, times: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["time"])?;
    for t in times {
        w.write_record([t.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// λ*(s) = λ0 + Σ_{T_i ≤ s} exp(−δ(s − T_i)).
pub fn intensity_at<T: Real>(params: &ShotNoiseParams<T>, shocks: &ShockTrajectory<T>, s: T) -> Result<T> {
    if !(s >= T::zero() && s <= shocks.horizon) {
        return Err(Error::Domain {
            function: "intensity_at",
            detail: format!("time {s} outside [0, {}]", shocks.horizon),
        });
    }
    let upto = shocks.shock_times.partition_point(|&t| t <= s);
    let excitation = shocks.shock_times[..upto]
        .iter()
        .fold(T::zero(), |acc, &ti| acc + (-params.delta * (s - ti)).exp());
    Ok(params.lambda0 + excitation)
}

/// E[λ*(s)] = λ0 + (μ/δ)(1 − e^{−δs}).
pub fn expected_intensity<T: Real>(params: &ShotNoiseParams<T>, s: T) -> T {
    params.lambda0 - params.shock_mass() * (-params.delta * s).exp_m1()
}

/// E[N*(s)] = λ0·s + μs/δ + (μ/δ²)(e^{−δs} − 1).
pub fn expected_num_arrivals<T: Real>(params: &ShotNoiseParams<T>, s: T) -> T {
    let d = params.delta;
    let x = d * s;
    // μ/δ · (s − (1 − e^{−δs})/δ), written to stay accurate for small δs.
    let tail = if x < T::c(1e-3) {
        s * x * (T::c(0.5) - x / T::c(6.0) + x * x / T::c(24.0))
    } else {
        s + (-x).exp_m1() / d
    };
    params.base_cumulative(s) + params.shock_mass() * tail
}

/// Homogeneous Poisson(μ) shock times on [0, horizon].
pub fn simulate_shocks<T: Real, R: Rng + ?Sized>(params: &ShotNoiseParams<T>, horizon: T, rng: &mut R) -> ShockTrajectory<T> {
    let mut times = Vec::new();
    if params.mu > T::zero() {
        let mut t = T::zero();
        loop {
            t += T::sample_exp1(rng) / params.mu;
            if t > horizon {
                break;
            }
            times.push(t);
        }
    }
    ShockTrajectory { horizon, shock_times: times }
}

/// Excitation Σ exp(−δ(now − T_i)) carried forward between events.
#[derive(Debug, Clone, Copy)]
struct Thinning<T> {
    now: T,
    excitation: T,
}

enum Step<T> {
    Arrival(T),
    /// Reached the next shock (or the limit) without an accepted point.
    Reached,
}

impl<T: Real> Thinning<T> {
    fn start() -> Self {
        Thinning { now: T::zero(), excitation: T::zero() }
    }

    fn decayed(&self, delta: T, to: T) -> T {
        self.excitation * (-delta * (to - self.now)).exp()
    }

    /// Advances toward `until` (the next shock or the horizon). Between
    /// shocks the intensity only decays, so its current value dominates.
    fn advance<R: Rng + ?Sized>(&mut self, lambda0: T, delta: T, until: T, rng: &mut R) -> Step<T> {
        loop {
            let bound = lambda0 + self.excitation;
            if !(bound > T::zero()) {
                self.jump_to(delta, until);
                return Step::Reached;
            }
            let proposal = self.now + T::sample_exp1(rng) / bound;
            if !(proposal < until) {
                self.jump_to(delta, until);
                return Step::Reached;
            }
            let excitation = self.decayed(delta, proposal);
            let ratio = (lambda0 + excitation) / bound;
            debug_assert!(ratio <= T::one() + T::c(1e-12), "thinning bound violated: {ratio}");
            self.now = proposal;
            self.excitation = excitation;
            if rng.random::<f64>() < ratio.as_f64() {
                return Step::Arrival(proposal);
            }
        }
    }

    fn jump_to(&mut self, delta: T, to: T) {
        if to.is_finite() {
            self.excitation = self.decayed(delta, to);
            self.now = to;
        }
    }
}

/// Arrival times of the Cox process given the shock path (Ogata thinning).
pub fn simulate_arrivals<T: Real, R: Rng + ?Sized>(
    params: &ShotNoiseParams<T>,
    shocks: &ShockTrajectory<T>,
    horizon: T,
    rng: &mut R,
) -> Result<ArrivalTrajectory<T>> {
    if shocks.horizon < horizon {
        return Err(Error::Domain {
            function: "simulate_arrivals",
            detail: format!("shock path covers [0, {}] but horizon is {horizon}", shocks.horizon),
        });
    }
    let mut state = Thinning::start();
    let mut out = Vec::new();
    for &shock in shocks.shock_times.iter().take_while(|&&t| t <= horizon) {
        while let Step::Arrival(s) = state.advance(params.lambda0, params.delta, shock, rng) {
            out.push(s);
        }
        state.excitation += T::one();
    }
    while let Step::Arrival(s) = state.advance(params.lambda0, params.delta, horizon, rng) {
        out.push(s);
    }
    Ok(ArrivalTrajectory { horizon, arrival_times: out })
}

/// Unbounded arrival sequence with shocks generated on the fly.
///
/// Used where the horizon is not known in advance, such as a renewal
/// cycle that ends at the first replacement.
#[derive(Debug, Clone)]
pub struct ArrivalStream<T, R> {
    params: ShotNoiseParams<T>,
    state: Thinning<T>,
    next_shock: T,
    rng: R,
}

impl<T: Real, R: Rng> ArrivalStream<T, R> {
    pub fn new(params: ShotNoiseParams<T>, mut rng: R) -> Self {
        let next_shock = Self::shock_gap(&params, &mut rng);
        ArrivalStream { params, state: Thinning::start(), next_shock, rng }
    }

    fn shock_gap(params: &ShotNoiseParams<T>, rng: &mut R) -> T {
        if params.mu > T::zero() {
            T::sample_exp1(rng) / params.mu
        } else {
            T::infinity()
        }
    }

    /// Next arrival time, or `None` if the intensity is identically zero.
    pub fn next_arrival(&mut self) -> Option<T> {
        loop {
            if self.next_shock.is_infinite() && self.params.lambda0 + self.state.excitation <= T::zero() {
                return None;
            }
            let p = self.params;
            match self.state.advance(p.lambda0, p.delta, self.next_shock, &mut self.rng) {
                Step::Arrival(s) => return Some(s),
                Step::Reached => {
                    if self.next_shock.is_infinite() {
                        return None;
                    }
                    self.state.excitation += T::one();
                    self.next_shock += Self::shock_gap(&p, &mut self.rng);
                }
            }
        }
    }

    /// All arrivals in [0, horizon]; the stream stays positioned after them.
    pub fn take_until(&mut self, horizon: T) -> (Vec<T>, Option<T>) {
        let mut out = Vec::new();
        loop {
            match self.next_arrival() {
                Some(s) if s <= horizon => out.push(s),
                other => return (out, other),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn paper() -> ShotNoiseParams<f64> {
        ShotNoiseParams::new(1.0, 2.0, 0.5).unwrap()
    }

    #[test]
    fn intensity_examples() {
        let p = paper();
        let none = ShockTrajectory::new(10.0, vec![]).unwrap();
        assert_eq!(intensity_at(&p, &none, 4.0).unwrap(), 1.0);
        let one = ShockTrajectory::new(10.0, vec![2.5]).unwrap();
        assert_eq!(intensity_at(&p, &one, 2.5).unwrap(), 2.0);
        let two = ShockTrajectory::new(10.0, vec![1.0, 2.0]).unwrap();
        let v = intensity_at(&p, &two, 3.0).unwrap();
        // Frozen: 1 + e^{-1} + e^{-0.5}
        assert!((v - 1.974_410_100_884_075_8).abs() < 1e-14);
        assert!(intensity_at(&p, &two, 10.5).is_err());
    }

    #[test]
    fn expectations_closed_forms() {
        let p = paper();
        assert_eq!(expected_intensity(&p, 0.0), 1.0);
        assert!((expected_intensity(&p, 1e6) - 5.0).abs() < 1e-12);
        assert!((expected_intensity(&p, 2.0) - 3.528_482_235_314_231).abs() < 1e-12);
        assert_eq!(expected_num_arrivals(&p, 0.0), 0.0);
        assert!((expected_num_arrivals(&p, 5.0) - 17.656_679_988_991_19).abs() < 1e-10);
        let poisson = ShotNoiseParams::<f64>::new(1.3, 0.0, 0.5).unwrap();
        assert!((expected_num_arrivals(&poisson, 7.0) - 9.1).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(ShotNoiseParams::new(1.0, 2.0, 0.0).is_err());
        assert!(ShotNoiseParams::new(-1.0, 2.0, 0.5).is_err());
        assert!(ShotNoiseParams::new(1.0, -2.0, 0.5).is_err());
        assert!(ShockTrajectory::new(1.0, vec![0.5, 0.2]).is_err());
    }

    #[test]
    fn zero_rates_never_arrive() {
        let p = ShotNoiseParams::new(0.0, 0.0, 0.5).unwrap();
        let mut s = ArrivalStream::new(p, ChaCha8Rng::seed_from_u64(1));
        assert_eq!(s.next_arrival(), None);
        let shocks = simulate_shocks(&p, 5.0, &mut ChaCha8Rng::seed_from_u64(2));
        assert!(shocks.shock_times.is_empty());
    }

    #[test]
    fn arrivals_sorted_and_in_range() {
        let p = paper();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let shocks = simulate_shocks(&p, 8.0, &mut rng);
            let arr = simulate_arrivals(&p, &shocks, 8.0, &mut rng).unwrap();
            assert!(ArrivalTrajectory::new(8.0, arr.arrival_times.clone()).is_ok());
        }
    }

    #[test]
    fn csv_has_time_header() {
        let t = ArrivalTrajectory::new(2.0, vec![0.5, 1.5]).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "time\n0.5\n1.5\n");
    }
}
