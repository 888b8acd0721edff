//! Law of the gap σ_L − σ_M between the first passages of two levels.
//!
//! At σ_M the path sits at the overshoot level Y ≥ M. By the strong Markov
//! property the remaining time to L is the first passage of L − Y, so
//!
//!   P(σ_L − σ_M > t) = ∫₀^{L−M} R(L − x) g_{αt,β}(x) dx,
//!
//! with R the distribution function of Y. Jumps of size s arrive with
//! Lévy density α e^{−βs}/s, and in units of 1/β
//!
//!   R(y) = 1 − ∫₀^{βM} ν(r) E₁(βy − r) dr,   ν(r) = ∫₀^∞ r^{w−1} e^{−r} / Γ(w) dw,
//!
//! where ν is the (scaled) potential density of the process. R does not
//! depend on α. ν has a 1/(r ln² r) spike at 0; the mass below a tiny ε is
//! ∫₀^∞ P(w, ε) dw and is integrated separately.

use crate::degradation::model::{GammaModel, ScaleSpec};
use crate::error::{invalid, Result};
use crate::real::Real;
use crate::special_functions::{
    e1_unchecked, integrate, ln_gamma, ln_regularized_pair, solve_increasing, GaussLegendre, MonotoneCubic,
    QuadratureSpec,
};

/// θ nodes used when the scale is random.
pub const GAP_MIXTURE_NODES: usize = 8;

const POTENTIAL_NODES: usize = 401;
const OVERSHOOT_NODES: usize = 97;
const SURVIVAL_NODES: usize = 241;
const SURVIVAL_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone)]
struct Component<T> {
    shape_rate: T,
    rate: T,
    /// β·(L − M)
    span: T,
    /// β·L
    top: T,
    /// Overshoot CDF in scaled level βy, on [βM, βL].
    overshoot: MonotoneCubic<T>,
    /// ∫ν over the whole of [0, βM]; analytically 1 (see `total_mass`).
    total_mass: T,
    survival: MonotoneCubic<T>,
    t_max: T,
}

fn tight<T: Real>() -> QuadratureSpec<T> {
    QuadratureSpec {
        abs_tol: T::c(1e-13),
        rel_tol: T::c(1e-11),
        max_depth: 60,
        tail_epsilon: T::c(1e-16),
    }
}

/// ν(r) = ∫₀^∞ r^{w−1} e^{−r} / Γ(w) dw.
fn potential<T: Real>(r: T) -> Result<T> {
    let lr = r.ln();
    let f = |w: T| {
        if w <= T::zero() {
            T::zero()
        } else {
            ((w - T::one()) * lr - r - ln_gamma(w)).exp()
        }
    };
    integrate(f, T::zero(), T::infinity(), &tight()).map_err(|e| e.within("potential density"))
}

impl<T: Real> Component<T> {
    fn build(shape_rate: T, rate: T, m: T, l: T) -> Result<Self> {
        let lo_scaled = rate * m;
        let top = rate * l;
        let eps = lo_scaled * T::c(1e-10);
        let spec = tight::<T>();

        // Mass of ν on [0, ε].
        let near_zero = integrate(
            |w: T| if w <= T::zero() { T::one() } else { ln_regularized_pair(w, eps).0.exp() },
            T::zero(),
            T::infinity(),
            &spec,
        )
        .map_err(|e| e.within("overshoot: potential mass near 0"))?;

        // ln ν on a uniform grid in ln r.
        let (v0, v1) = (eps.ln(), lo_scaled.ln());
        let step = (v1 - v0) / T::from_count(POTENTIAL_NODES - 1);
        let mut vs = Vec::with_capacity(POTENTIAL_NODES);
        let mut lnu = Vec::with_capacity(POTENTIAL_NODES);
        for i in 0..POTENTIAL_NODES {
            let v = v0 + step * T::from_count(i);
            vs.push(v);
            lnu.push(potential(v.exp())?.ln());
        }
        let ln_nu = MonotoneCubic::new(vs, lnu)?;

        // ∫ ν(r) E₁(η − r) dr over [0, βM], split at ε.
        let convolve = |eta: T| -> Result<T> {
            let f = |v: T| {
                let r = v.exp();
                let gap = eta - r;
                if gap <= T::zero() {
                    return T::zero();
                }
                (ln_nu.eval(v) + v).exp() * e1_unchecked(gap)
            };
            let body = integrate(f, v0, v1, &spec).map_err(|e| e.within("overshoot: level axis"))?;
            Ok(near_zero * e1_unchecked(eta) + body)
        };

        let total_mass = {
            let f = |v: T| {
                let r = v.exp();
                let gap = lo_scaled - r;
                if gap <= T::zero() {
                    return T::zero();
                }
                (ln_nu.eval(v) + v).exp() * e1_unchecked(gap)
            };
            near_zero * e1_unchecked(lo_scaled)
                + integrate(f, v0, v1, &spec).map_err(|e| e.within("overshoot: normalization"))?
        };

        let width = top - lo_scaled;
        let mut ys = Vec::with_capacity(OVERSHOOT_NODES);
        let mut rs = Vec::with_capacity(OVERSHOOT_NODES);
        let mut running = T::zero();
        for j in 0..OVERSHOOT_NODES {
            let s = T::from_count(j) / T::from_count(OVERSHOOT_NODES - 1);
            let eta = lo_scaled + width * s * s;
            let value = if j == 0 {
                T::zero()
            } else {
                (total_mass - convolve(eta)?).max(T::zero()).min(T::one())
            };
            running = running.max(value);
            ys.push(eta);
            rs.push(running);
        }
        let overshoot = MonotoneCubic::new(ys, rs)?;

        let mut comp = Component {
            shape_rate,
            rate,
            span: width,
            top,
            overshoot,
            total_mass,
            survival: MonotoneCubic::new(vec![T::zero(), T::one()], vec![T::one(), T::one()])?,
            t_max: T::one(),
        };

        // Past t_max even P(X(t) < L − M) is below the floor.
        let floor = T::c(SURVIVAL_FLOOR);
        let t_max = solve_increasing(
            |t| Ok(-ln_regularized_pair(shape_rate * t, width).0),
            -floor.ln(),
            T::zero(),
            width / shape_rate + T::one(),
            T::c(1e-8),
        )?;
        let mut ts = Vec::with_capacity(SURVIVAL_NODES);
        let mut ss = Vec::with_capacity(SURVIVAL_NODES);
        let mut running = T::infinity();
        for k in 0..SURVIVAL_NODES {
            let t = t_max * T::from_count(k) / T::from_count(SURVIVAL_NODES - 1);
            let v = if k == 0 { comp.overshoot.eval(top) } else { comp.direct(t)? };
            running = running.min(v);
            ts.push(t);
            ss.push(running);
        }
        comp.survival = MonotoneCubic::new(ts, ss)?;
        comp.t_max = t_max;
        Ok(comp)
    }

    /// P(σ_L − σ_M > t) by quadrature, t > 0.
    fn direct(&self, t: T) -> Result<T> {
        let s = self.shape_rate * t;
        let spec = QuadratureSpec {
            abs_tol: T::c(1e-13),
            rel_tol: T::c(1e-10),
            max_depth: 60,
            tail_epsilon: T::c(1e-16),
        };
        let value = if s < T::one() {
            // u = ξ^s removes the ξ^{s−1} factor of the gamma density.
            let inv = s.recip();
            let ln_norm = ln_gamma(s + T::one());
            let f = |u: T| {
                let xi = u.powf(inv);
                self.overshoot.eval(self.top - xi) * (-xi - ln_norm).exp()
            };
            integrate(f, T::zero(), self.span.powf(s), &spec)
        } else {
            let ln_norm = ln_gamma(s);
            let f = |xi: T| {
                if xi <= T::zero() {
                    return if s == T::one() { self.overshoot.eval(self.top) } else { T::zero() };
                }
                self.overshoot.eval(self.top - xi) * ((s - T::one()) * xi.ln() - xi - ln_norm).exp()
            };
            integrate(f, T::zero(), self.span, &spec)
        };
        value.map(|v| v.max(T::zero()).min(T::one())).map_err(|e| e.within("gap survival: level axis"))
    }

    fn survival(&self, t: T) -> T {
        if t <= T::zero() {
            T::one()
        } else if t >= self.t_max {
            T::zero()
        } else {
            self.survival.eval(t)
        }
    }
}

/// Survival function of σ_L − σ_M, tabulated once per (model, M, L).
#[derive(Debug, Clone)]
pub struct OvershootGap<T> {
    components: Vec<(T, Component<T>)>,
}

impl<T: Real> OvershootGap<T> {
    pub fn new(model: &GammaModel<T>, m: T, l: T) -> Result<Self> {
        model.validate()?;
        if !(m > T::zero() && l > m && l.is_finite()) {
            return Err(invalid("M, L", format!("need 0 < M < L, got M={m}, L={l}")));
        }
        let alpha = model.shape_rate;
        let components = match model.scale {
            ScaleSpec::Deterministic { beta } => vec![(T::one(), Component::build(alpha, beta, m, l)?)],
            ScaleSpec::UniformInverseScale { a, b } => GaussLegendre::new(GAP_MIXTURE_NODES)
                .on(a, b)
                .map(|(theta, w)| Ok((w / (b - a), Component::build(alpha, theta.recip(), m, l)?)))
                .collect::<Result<Vec<_>>>()?,
        };
        Ok(OvershootGap { components })
    }

    /// P(σ_L − σ_M ≥ t); 1 at t = 0.
    pub fn survival(&self, t: T) -> T {
        self.components.iter().fold(T::zero(), |acc, (w, c)| acc + *w * c.survival(t))
    }

    pub fn cdf(&self, t: T) -> T {
        T::one() - self.survival(t)
    }

    /// Same as [`survival`](Self::survival) but by direct quadrature.
    pub fn survival_direct(&self, t: T) -> Result<T> {
        if t <= T::zero() {
            return Ok(T::one());
        }
        self.components
            .iter()
            .try_fold(T::zero(), |acc, (w, c)| Ok(acc + *w * c.direct(t)?))
    }

    /// P(Y ≤ y) for the level Y at which the path first reaches M.
    pub fn overshoot_cdf(&self, y: T) -> T {
        self.components
            .iter()
            .fold(T::zero(), |acc, (w, c)| acc + *w * c.overshoot.eval(c.rate * y))
    }

    /// Total overshoot probability mass found by quadrature (exactly 1 in theory).
    pub fn total_mass(&self) -> T {
        self.components.iter().fold(T::zero(), |acc, (w, c)| acc + *w * c.total_mass)
    }

    /// Time past which the survival is treated as zero.
    pub fn horizon(&self) -> T {
        self.components.iter().fold(T::zero(), |m, (_, c)| m.max(c.t_max))
    }

    pub fn shape_rate(&self) -> T {
        self.components[0].1.shape_rate
    }
}

/// P(σ_L − σ_M ≥ t) for a process with rate β. Builds the tables on each
/// call; hold an [`OvershootGap`] to evaluate many times.
pub fn delta_hitting_survival<T: Real>(shape_rate: T, rate: T, m: T, l: T, t: T) -> Result<T> {
    let model = GammaModel::deterministic(shape_rate, rate)?;
    OvershootGap::new(&model, m, l)?.survival_direct(t)
}
