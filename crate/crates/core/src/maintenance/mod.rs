//! Periodic-inspection condition-based maintenance.
//!
//! The system is inspected every T. At an inspection it is replaced
//! correctively if it has failed (some process reached L), preventively if
//! some process is at or above M, and left alone otherwise. Replacements
//! renew the system, so the long-run cost rate is E[cycle cost]/E[cycle length].

mod analytics;
mod search;
mod simulation;

pub use analytics::{analytic_cycle_quantities, cost_rate_analytic, AnalyticCycleQuantities, IntervalQuantities};
pub use search::{
    grid_search, open_interval_grids, paper_costs, paper_grids, paper_system, sensitivity_sweep, write_surface_csv,
    write_sweep_csv, GridSearchResult, SurfaceCell, SweepAxes, SweepRow,
};
pub use simulation::{
    estimate_cost_rate, estimate_from_outcomes, simulate_cycle, simulate_cycles, summarize_by_inspection,
    CostRateEstimate, InspectionSummary,
};

use crate::error::{invalid, Result};
use crate::real::Real;

/// `M == L` is allowed and means the policy never replaces preventively.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyParams<T> {
    pub inspection_period: T,
    pub preventive_threshold: T,
}

impl<T: Real> PolicyParams<T> {
    pub fn new(inspection_period: T, preventive_threshold: T, failure_threshold: T) -> Result<Self> {
        let p = PolicyParams { inspection_period, preventive_threshold };
        p.validate(failure_threshold)?;
        Ok(p)
    }

    pub fn validate(&self, failure_threshold: T) -> Result<()> {
        if !(self.inspection_period > T::zero() && self.inspection_period.is_finite()) {
            return Err(invalid("T", format!("must be finite and > 0, got {}", self.inspection_period)));
        }
        if !(self.preventive_threshold > T::zero() && self.preventive_threshold <= failure_threshold) {
            return Err(invalid(
                "M",
                format!("need 0 < M <= L = {failure_threshold}, got {}", self.preventive_threshold),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostRates<T> {
    pub preventive: T,
    pub corrective: T,
    pub inspection: T,
    /// Per unit of downtime.
    pub downtime: T,
}

impl<T: Real> CostRates<T> {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("C_p", self.preventive),
            ("C_c", self.corrective),
            ("C_I", self.inspection),
            ("C_d", self.downtime),
        ] {
            if !(v >= T::zero() && v.is_finite()) {
                return Err(invalid(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Corrective replacement cheaper than preventive is allowed but unusual.
    pub fn is_unusual(&self) -> bool {
        self.corrective < self.preventive
    }
}

/// Simulation resolution and safety limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimControl<T> {
    /// Fine steps per inspection interval.
    pub substeps: usize,
    /// Cycles still running after this many inspections are censored.
    pub max_inspections: usize,
    /// Width to which a failure time is bracketed inside its fine step.
    pub crossing_tol: T,
}

impl<T: Real> Default for SimControl<T> {
    fn default() -> Self {
        SimControl { substeps: 16, max_inspections: 200, crossing_tol: T::c(1e-9) }
    }
}

impl<T: Real> SimControl<T> {
    pub fn validate(&self) -> Result<()> {
        if self.substeps == 0 {
            return Err(invalid("substeps", "must be >= 1"));
        }
        if self.max_inspections == 0 {
            return Err(invalid("max_inspections", "must be >= 1"));
        }
        if !(self.crossing_tol > T::zero()) {
            return Err(invalid("crossing_tol", "must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CycleAction {
    Preventive,
    Corrective,
    /// Still running at the inspection cap.
    Censored,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleOutcome<T> {
    pub length: T,
    pub inspections: usize,
    pub action: CycleAction,
    pub downtime: T,
    pub cycle_cost: T,
}

impl<T: Real> CycleOutcome<T> {
    /// C_I·n + (C_p or C_c) + C_d·downtime; censored cycles carry inspection cost only.
    pub fn cost_under(&self, costs: &CostRates<T>) -> T {
        let action = match self.action {
            CycleAction::Preventive => costs.preventive,
            CycleAction::Corrective => costs.corrective,
            CycleAction::Censored => T::zero(),
        };
        costs.inspection * T::from_count(self.inspections) + action + costs.downtime * self.downtime
    }
}
