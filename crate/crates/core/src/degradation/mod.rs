//! Gamma-process degradation: sampling, first-passage laws, the gap
//! between two first passages, and the uniform random-effects model.

mod hitting;
mod likelihood;
mod model;
mod overshoot;
mod random_effects;

pub use hitting::{hitting_cdf, hitting_pdf, random_effect_hitting_cdf, HittingLaw, MIXTURE_NODES};
pub use likelihood::{
    fit_full, fit_half_width, log_likelihood, simulate_observations, DegradationObservations, FullFit, HalfWidthFit,
    ProcessRecord,
};
pub use model::{
    locate_crossing, realize_scale, sample_increment, simulate_path, GammaModel, ScaleRealization, ScaleSpec,
};
pub use overshoot::{delta_hitting_survival, OvershootGap, GAP_MIXTURE_NODES};
pub use random_effects::{
    matched_variance_comparison, random_effect_moments, random_effect_pdf, RandomEffectMoments, VarianceComparison,
};
