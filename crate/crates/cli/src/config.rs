//! Experiment configuration: TOML, strict keys, optional preset base.

use std::path::Path;

use anyhow::{anyhow, bail, Context};
use cbm_core::combined::SystemSpec;
use cbm_core::degradation::GammaModel;
use cbm_core::maintenance::{open_interval_grids, paper_grids, CostRates, PolicyParams, SimControl};
use cbm_core::shock_arrivals::ShotNoiseParams;
use serde::{Deserialize, Serialize};

use crate::exit::Validation;

pub const PRESETS: [(&str, &str); 2] = [
    ("paper_deterministic", include_str!("presets/paper_deterministic.toml")),
    ("paper_random_effects", include_str!("presets/paper_random_effects.toml")),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, with = "seed_repr")]
    pub seed: u64,
    pub system: SystemSection,
    pub costs: CostSection,
    pub policy: PolicySection,
    pub simulation: SimulationSection,
    pub arrivals: Option<ArrivalSection>,
    pub reliability: Option<ReliabilitySection>,
    pub fit: Option<FitSection>,
    pub sensitivity: Option<SensitivitySection>,
    pub validate: Option<ValidateSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub lambda0: f64,
    pub mu: f64,
    pub delta: f64,
    pub alpha: f64,
    /// Rate of the gamma increments; give either this or `theta_range`.
    pub beta: Option<f64>,
    /// θ = 1/β ~ U(a, b).
    pub theta_range: Option<[f64; 2]>,
    pub failure_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSection {
    pub preventive: f64,
    pub corrective: f64,
    pub inspection: f64,
    pub downtime: f64,
}

/// `"paper"`, `"open"` or an explicit list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Named(String),
    Values(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySection {
    pub inspection_periods: GridSpec,
    pub preventive_thresholds: GridSpec,
    pub fixed_period: f64,
    pub fixed_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub n_cycles: usize,
    pub substeps: usize,
    pub max_inspections: usize,
    pub crossing_tol: f64,
}

/// Inclusive arithmetic range or explicit values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RangeSpec {
    Values(Vec<f64>),
    Range(StepRange),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl RangeSpec {
    pub fn values(&self, what: &str) -> anyhow::Result<Vec<f64>> {
        match self {
            RangeSpec::Values(v) if !v.is_empty() => Ok(v.clone()),
            RangeSpec::Values(_) => Err(Validation::new(format!("{what}: empty list")).into()),
            RangeSpec::Range(r) => {
                if !(r.step > 0.0 && r.stop >= r.start && r.start.is_finite() && r.stop.is_finite()) {
                    return Err(Validation::new(format!("{what}: need step > 0 and stop >= start")).into());
                }
                let n = ((r.stop - r.start) / r.step + 1e-9).floor() as usize;
                if n > 100_000 {
                    return Err(Validation::new(format!("{what}: more than 100000 points")).into());
                }
                Ok((0..=n).map(|i| r.start + r.step * i as f64).collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrivalSection {
    pub runs: usize,
    pub horizon: f64,
    pub check_times: Vec<f64>,
    pub saved_trajectories: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReliabilitySection {
    pub horizon: f64,
    pub step: f64,
    /// Monte Carlo lifetimes for the overlay; 0 disables it.
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    pub alpha: f64,
    pub center: f64,
    pub half_widths: RangeSpec,
    /// `process_id,time,level` CSV; simulated from `simulate` when absent.
    pub data: Option<String>,
    pub simulate: Option<FitSimulation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSimulation {
    pub processes: usize,
    pub horizon: f64,
    pub dt: f64,
    pub half_width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// α × deterministic β.
    ShapeRate,
    /// α × center of θ.
    ShapeCenter,
    /// C_c × C_p at the fixed policy.
    Costs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivitySection {
    pub axis: SweepAxis,
    pub first: RangeSpec,
    pub second: RangeSpec,
    pub half_width: f64,
    pub n_cycles: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateSection {
    pub cycles: usize,
    pub runs: usize,
    /// Agreement band in standard errors.
    pub sigmas: f64,
    pub max_gap: f64,
    pub k_max: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub gnuplot: bool,
}

/// TOML integers are signed 64-bit, so seeds above i64::MAX travel as strings.
mod seed_repr {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Int(i64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(seed: &u64, s: S) -> Result<S::Ok, S::Error> {
        match i64::try_from(*seed) {
            Ok(v) => Repr::Int(v),
            Err(_) => Repr::Text(seed.to_string()),
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Int(v) => u64::try_from(v).map_err(|_| serde::de::Error::custom("seed must be >= 0")),
            Repr::Text(t) => t.parse().map_err(|_| serde::de::Error::custom(format!("bad seed `{t}`"))),
        }
    }
}

fn preset_table(name: &str) -> Option<toml::Table> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| text.parse::<toml::Table>().expect("bundled preset parses"))
}

/// Overlays `top` on `base`, recursing into tables.
fn merge(base: &mut toml::Table, top: toml::Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

impl ExperimentConfig {
    pub fn preset(name: &str) -> anyhow::Result<Self> {
        let table = preset_table(name).ok_or_else(|| Validation::new(format!("unknown preset `{name}`")))?;
        Self::from_table(table)
    }

    /// A preset name, or a TOML file optionally starting from `preset = "..."`.
    pub fn load(source: &str) -> anyhow::Result<Self> {
        if preset_table(source).is_some() && !Path::new(source).exists() {
            return Self::preset(source);
        }
        let text = std::fs::read_to_string(source)
            .map_err(|e| Validation::new(format!("cannot read config `{source}`: {e}")))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let mut user: toml::Table = text.parse().map_err(|e| Validation::new(format!("config: {e}")))?;
        let table = match user.remove("preset") {
            Some(toml::Value::String(name)) => {
                let mut base =
                    preset_table(&name).ok_or_else(|| Validation::new(format!("unknown preset `{name}`")))?;
                merge(&mut base, user);
                base
            }
            Some(_) => return Err(Validation::new("config: `preset` must be a string").into()),
            None => user,
        };
        Self::from_table(table)
    }

    fn from_table(table: toml::Table) -> anyhow::Result<Self> {
        let cfg: ExperimentConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Validation::new(format!("config: {}", e.message())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks every component invariant before anything runs.
    pub fn validate(&self) -> anyhow::Result<()> {
        self.system_spec()?;
        self.costs()?;
        self.sim_control()?;
        self.grids()?;
        self.fixed_policy()?;
        if self.simulation.n_cycles == 0 {
            return Err(Validation::new("simulation.n_cycles: must be >= 1").into());
        }
        if let Some(a) = &self.arrivals {
            if a.runs == 0 || !(a.horizon > 0.0) || a.check_times.iter().any(|&t| !(t > 0.0 && t <= a.horizon)) {
                return Err(Validation::new("arrivals: need runs >= 1, horizon > 0 and check_times in (0, horizon]").into());
            }
        }
        if let Some(r) = &self.reliability {
            if !(r.horizon > 0.0 && r.step > 0.0 && r.step <= r.horizon) {
                return Err(Validation::new("reliability: need 0 < step <= horizon").into());
            }
        }
        if let Some(f) = &self.fit {
            if !(f.alpha > 0.0 && f.center > 0.0) {
                return Err(Validation::new("fit: alpha and center must be > 0").into());
            }
            let grid = f.half_widths.values("fit.half_widths")?;
            if grid.iter().any(|&w| !(w > 0.0 && w < f.center)) {
                return Err(Validation::new("fit.half_widths: every value must lie in (0, center)").into());
            }
            if f.data.is_none() && f.simulate.is_none() {
                return Err(Validation::new("fit: give `data` or `simulate`").into());
            }
        }
        if let Some(s) = &self.sensitivity {
            s.first.values("sensitivity.first")?;
            s.second.values("sensitivity.second")?;
            if s.n_cycles == 0 {
                return Err(Validation::new("sensitivity.n_cycles: must be >= 1").into());
            }
        }
        if let Some(v) = &self.validate {
            if v.cycles == 0 || v.runs == 0 || v.k_max == 0 || v.sigmas.is_nan() || v.max_gap.is_nan() {
                return Err(Validation::new("validate: counts must be >= 1 and tolerances numbers").into());
            }
        }
        Ok(())
    }

    pub fn growth(&self) -> anyhow::Result<GammaModel<f64>> {
        let s = &self.system;
        let model = match (s.beta, s.theta_range) {
            (Some(beta), None) => GammaModel::deterministic(s.alpha, beta),
            (None, Some([a, b])) => GammaModel::uniform_inverse_scale(s.alpha, a, b),
            _ => return Err(Validation::new("system: give exactly one of `beta` and `theta_range`").into()),
        };
        model.map_err(|e| Validation::new(format!("system: {e}")).into())
    }

    pub fn system_spec(&self) -> anyhow::Result<SystemSpec<f64>> {
        let s = &self.system;
        let arrivals = ShotNoiseParams::new(s.lambda0, s.mu, s.delta).map_err(|e| Validation::new(format!("system: {e}")))?;
        SystemSpec::new(arrivals, self.growth()?, s.failure_threshold)
            .map_err(|e| Validation::new(format!("system: {e}")).into())
    }

    pub fn costs(&self) -> anyhow::Result<CostRates<f64>> {
        let c = &self.costs;
        let costs = CostRates { preventive: c.preventive, corrective: c.corrective, inspection: c.inspection, downtime: c.downtime };
        costs.validate().map_err(|e| Validation::new(format!("costs: {e}")))?;
        Ok(costs)
    }

    pub fn sim_control(&self) -> anyhow::Result<SimControl<f64>> {
        let s = &self.simulation;
        let sim = SimControl { substeps: s.substeps, max_inspections: s.max_inspections, crossing_tol: s.crossing_tol };
        sim.validate().map_err(|e| Validation::new(format!("simulation: {e}")))?;
        Ok(sim)
    }

    pub fn grids(&self) -> anyhow::Result<(Vec<f64>, Vec<f64>)> {
        let (paper_t, paper_m) = paper_grids::<f64>();
        let (open_t, open_m) = open_interval_grids::<f64>();
        let pick = |g: &GridSpec, paper: &[f64], open: &[f64], what: &str| -> anyhow::Result<Vec<f64>> {
            match g {
                GridSpec::Named(n) if n == "paper" => Ok(paper.to_vec()),
                GridSpec::Named(n) if n == "open" => Ok(open.to_vec()),
                GridSpec::Named(n) => Err(Validation::new(format!("{what}: unknown grid `{n}` (paper, open or a list)")).into()),
                GridSpec::Values(v) if v.is_empty() => Err(Validation::new(format!("{what}: empty grid")).into()),
                GridSpec::Values(v) => Ok(v.clone()),
            }
        };
        let t = pick(&self.policy.inspection_periods, &paper_t, &open_t, "policy.inspection_periods")?;
        let m = pick(&self.policy.preventive_thresholds, &paper_m, &open_m, "policy.preventive_thresholds")?;
        let l = self.system.failure_threshold;
        for &tt in &t {
            for &mm in &m {
                PolicyParams::new(tt, mm, l).map_err(|e| Validation::new(format!("policy grid: {e}")))?;
            }
        }
        Ok((t, m))
    }

    pub fn fixed_policy(&self) -> anyhow::Result<PolicyParams<f64>> {
        PolicyParams::new(self.policy.fixed_period, self.policy.fixed_threshold, self.system.failure_threshold)
            .map_err(|e| Validation::new(format!("policy: {e}")).into())
    }

    pub fn section<'a, S>(&self, s: &'a Option<S>, name: &str) -> anyhow::Result<&'a S> {
        s.as_ref().ok_or_else(|| anyhow!(Validation::new(format!("config has no [{name}] section"))))
    }
}

/// Reads a degradation data file for `fit`.
pub fn read_observations(path: &Path) -> anyhow::Result<cbm_core::degradation::DegradationObservations<f64>> {
    let file = std::fs::File::open(path).map_err(|e| Validation::new(format!("cannot open `{}`: {e}", path.display())))?;
    cbm_core::degradation::DegradationObservations::read_csv(file)
        .with_context(|| format!("reading `{}`", path.display()))
}

pub fn ensure_dir(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating `{}`", dir.display()))?;
    if !dir.is_dir() {
        bail!("`{}` is not a directory", dir.display());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_round_trip_through_toml() {
        for name in ["paper_deterministic", "paper_random_effects"] {
            let cfg = ExperimentConfig::preset(name).unwrap();
            assert_eq!(ExperimentConfig::parse(&cfg.to_toml()).unwrap(), cfg, "{name}");
        }
    }

    #[test]
    fn large_seeds_survive_serialisation() {
        let mut cfg = ExperimentConfig::preset("paper_deterministic").unwrap();
        cfg.seed = u64::MAX;
        assert_eq!(ExperimentConfig::parse(&cfg.to_toml()).unwrap().seed, u64::MAX);
    }

    #[test]
    fn overlay_replaces_only_named_keys() {
        let cfg = ExperimentConfig::parse("preset = \"paper_random_effects\"\n[costs]\ninspection = 10.0\n").unwrap();
        let base = ExperimentConfig::preset("paper_random_effects").unwrap();
        assert_eq!(cfg.costs.inspection, 10.0);
        assert_eq!(cfg.costs.corrective, base.costs.corrective);
        assert_eq!(cfg.system, base.system);
    }

    #[test]
    fn scale_must_be_given_exactly_once() {
        let both = "preset = \"paper_deterministic\"\n[system]\ntheta_range = [0.5, 0.7]\n";
        assert!(ExperimentConfig::parse(both).is_err());
    }

    #[test]
    fn paper_grid_reaches_the_failure_level() {
        let (t, m) = ExperimentConfig::preset("paper_deterministic").unwrap().grids().unwrap();
        assert_eq!((t.len(), m.len()), (10, 8));
        assert!((m[7] - 10.0).abs() < 1e-12 && (t[9] - 25.0).abs() < 1e-12);
    }
}
