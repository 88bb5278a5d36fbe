//! Monte Carlo reliability estimation per location and over grids.
//!
//! Reliability at a location is the probability that one packet makes
//! its latency budget, estimated as the fraction of SINR trials at or
//! above the equivalent threshold.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::exec;
use crate::scenario::{Deployment, EvaluationGrid, Location, Requirements, ResourceConfig};
use crate::seeding::{derive_seed, STREAM_POINT};
use crate::sinr::{sinr_threshold, LargeScaleMode, SinrSampler};

/// A binomial reliability estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityEstimate {
    pub alpha_hat: f64,
    /// Binomial standard error, zero at the degenerate estimates 0 and 1.
    pub stderr: f64,
    pub n_trials: usize,
}

impl ReliabilityEstimate {
    pub fn from_successes(successes: usize, n_trials: usize) -> Self {
        let alpha_hat = successes as f64 / n_trials as f64;
        Self {
            alpha_hat,
            stderr: (alpha_hat * (1.0 - alpha_hat) / n_trials as f64).sqrt(),
            n_trials,
        }
    }
}

/// Estimates reliability against an explicit SINR threshold.
///
/// `seed` names the location's random stream; the same seed replays the
/// same trials, and the trials equal those of `SinrSampler` for the same
/// seed, so reliability estimates and collected SINR traces agree.
pub fn estimate_reliability_at_threshold(
    loc: &Location,
    deployment: &Deployment,
    config: &ResourceConfig,
    params: &ChannelParams,
    threshold: f64,
    mode: LargeScaleMode,
    n_trials: usize,
    seed: u64,
) -> Result<ReliabilityEstimate> {
    if n_trials == 0 {
        return Err(Error::InvalidArgument("n_trials must be positive".into()));
    }
    let mut sampler = SinrSampler::for_location(loc, deployment, config, params, mode, seed);
    let mut successes = 0usize;
    for _ in 0..n_trials {
        if sampler.sample() >= threshold {
            successes += 1;
        }
    }
    Ok(ReliabilityEstimate::from_successes(successes, n_trials))
}

/// Estimates the probability that a packet meets the latency budget at
/// one location.
pub fn estimate_reliability(
    loc: &Location,
    deployment: &Deployment,
    config: &ResourceConfig,
    params: &ChannelParams,
    requirements: &Requirements,
    mode: LargeScaleMode,
    n_trials: usize,
    seed: u64,
) -> Result<ReliabilityEstimate> {
    requirements.validate()?;
    let t = sinr_threshold(
        requirements.payload_bits,
        config.bandwidth_hz,
        requirements.gamma_latency_s,
    );
    estimate_reliability_at_threshold(loc, deployment, config, params, t, mode, n_trials, seed)
}

/// Closed-form reliability of a single Rayleigh-faded link with mean SNR
/// `mean_snr`: `exp(-t / mean_snr)`. The oracle for sampler validation.
pub fn rayleigh_link_reliability(threshold: f64, mean_snr: f64) -> f64 {
    assert!(mean_snr > 0.0, "mean SNR must be positive");
    (-threshold / mean_snr).exp()
}

/// Reliability estimates over an evaluation grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityMap {
    pub grid: EvaluationGrid,
    pub threshold_sinr: f64,
    pub estimates: Vec<ReliabilityEstimate>,
}

impl ReliabilityMap {
    /// Fraction of grid points whose estimate meets `alpha_star`.
    pub fn coverage(&self, alpha_star: f64) -> f64 {
        fraction_meeting(self.estimates.iter().map(|e| e.alpha_hat), alpha_star)
    }
}

/// Covered fraction plus the per-point mask behind it, for rendering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageResult {
    pub alpha_star: f64,
    pub eta: f64,
    pub covered: Vec<bool>,
}

/// Evaluates a map against a reliability target, keeping the mask.
pub fn reliability_coverage(map: &ReliabilityMap, alpha_star: f64) -> CoverageResult {
    let covered: Vec<bool> = map.estimates.iter().map(|e| e.alpha_hat >= alpha_star).collect();
    let eta = covered.iter().filter(|&&c| c).count() as f64 / covered.len().max(1) as f64;
    CoverageResult {
        alpha_star,
        eta,
        covered,
    }
}

/// Fraction of values at or above a target. Plain counting; the
/// building block of every coverage figure in the crate.
pub fn fraction_meeting<I: IntoIterator<Item = f64>>(values: I, target: f64) -> f64 {
    let mut total = 0usize;
    let mut meeting = 0usize;
    for v in values {
        total += 1;
        if v >= target {
            meeting += 1;
        }
    }
    assert!(total > 0, "coverage of an empty set is undefined");
    meeting as f64 / total as f64
}

/// Estimates reliability at every grid point.
///
/// Point seeds derive from `master_seed` and the point index alone, so
/// the map is bit-identical for any worker count and any evaluation
/// order.
pub fn reliability_map(
    grid: &EvaluationGrid,
    deployment: &Deployment,
    config: &ResourceConfig,
    params: &ChannelParams,
    requirements: &Requirements,
    mode: LargeScaleMode,
    n_trials: usize,
    master_seed: u64,
) -> Result<ReliabilityMap> {
    requirements.validate()?;
    config.validate()?;
    if grid.is_empty() {
        return Err(Error::InvalidArgument("evaluation grid is empty".into()));
    }
    if deployment.n_aps() == 0 {
        return Err(Error::InvalidScenario("deployment has no APs".into()));
    }
    let threshold = sinr_threshold(
        requirements.payload_bits,
        config.bandwidth_hz,
        requirements.gamma_latency_s,
    );
    let results = exec::map_indexed(grid.len(), |i| {
        let seed = derive_seed(master_seed, &[STREAM_POINT, i as u64]);
        estimate_reliability_at_threshold(
            &grid.points[i],
            deployment,
            config,
            params,
            threshold,
            mode,
            n_trials,
            seed,
        )
        .expect("n_trials checked above")
    });
    Ok(ReliabilityMap {
        grid: grid.clone(),
        threshold_sinr: threshold,
        estimates: results,
    })
}
