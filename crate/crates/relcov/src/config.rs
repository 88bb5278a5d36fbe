//! TOML run configuration.
//!
//! Every tool reads the same file; each subcommand uses the sections it
//! needs and ignores the rest. Missing sections and fields fall back to
//! defaults, unknown keys are rejected so typos surface instead of
//! silently reverting to a default.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::allocate::LocalizationModel;
use crate::channel::ChannelParams;
use crate::dimensioning::{StudyConfig, SweepSpec};
use crate::error::{Error, Result};
use crate::evtmap::{Interpolator, MeasurementLayout, TailFitConfig};
use crate::scenario::{Requirements, ResourceConfig, ServiceArea};

/// Bandwidth search bracket and stopping rule for the minimum-bandwidth
/// subcommand, plus the coverage probe for density comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub bandwidth_lo_hz: f64,
    pub bandwidth_hi_hz: f64,
    pub rel_tol: f64,
    pub eta_probe: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            bandwidth_lo_hz: 1e6,
            bandwidth_hi_hz: 1e9,
            rel_tol: 0.01,
            eta_probe: 0.95,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth_lo_hz > 0.0 && self.bandwidth_hi_hz > self.bandwidth_lo_hz) {
            return Err(Error::InvalidArgument(format!(
                "search bracket must satisfy 0 < lo < hi, got ({}, {})",
                self.bandwidth_lo_hz, self.bandwidth_hi_hz
            )));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidArgument("rel_tol must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.eta_probe) {
            return Err(Error::InvalidArgument(format!(
                "eta_probe must lie in [0, 1], got {}",
                self.eta_probe
            )));
        }
        Ok(())
    }
}

/// Measurement campaign shape for map building.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasurementConfig {
    pub layout: MeasurementLayout,
    pub n_samples: usize,
    pub interpolator: Interpolator,
    pub tail: TailFitConfig,
}

impl Default for MeasurementConfig {
    fn default() -> Self {
        Self {
            layout: MeasurementLayout::FullGrid,
            n_samples: 100_000,
            interpolator: Interpolator::default(),
            tail: TailFitConfig::default(),
        }
    }
}

/// Rate allocation knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AllocationConfig {
    /// Outage budget; defaults to `1 - alpha_star` when absent.
    pub epsilon: Option<f64>,
    /// Positioning uncertainty for conservative allocation, meters.
    pub error_radius_m: f64,
    /// Admissible discrete rates; absent means continuous allocation.
    pub rate_levels_bps: Option<Vec<f64>>,
}

impl Default for AllocationConfig {
    fn default() -> Self {
        Self {
            epsilon: None,
            error_radius_m: 0.0,
            rate_levels_bps: None,
        }
    }
}

impl AllocationConfig {
    pub fn localization(&self) -> LocalizationModel {
        LocalizationModel {
            error_radius_m: self.error_radius_m,
        }
    }
}

/// One file describing a complete run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub area: ServiceArea,
    pub requirements: Requirements,
    pub resources: ResourceConfig,
    pub channel: ChannelParams,
    pub study: StudyConfig,
    pub sweep: Option<SweepSpec>,
    pub search: SearchConfig,
    pub measurement: MeasurementConfig,
    pub allocation: AllocationConfig,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text)
            .map_err(|e| Error::InvalidArgument(format!("config parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::InvalidArgument(format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self)
            .map_err(|e| Error::Numeric(format!("config serialization failed: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        ServiceArea::new(self.area.width_m, self.area.height_m)?;
        self.requirements.validate()?;
        self.resources.validate()?;
        self.study.validate()?;
        if let Some(sweep) = &self.sweep {
            sweep.validate()?;
        }
        self.search.validate()?;
        if self.measurement.n_samples == 0 {
            return Err(Error::InvalidArgument(
                "measurement.n_samples must be positive".into(),
            ));
        }
        if let Some(eps) = self.allocation.epsilon {
            if !(eps >= 0.0 && eps < 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "allocation.epsilon must lie in [0, 1), got {eps}"
                )));
            }
        }
        self.allocation.localization().validate()?;
        if let Some(levels) = &self.allocation.rate_levels_bps {
            if levels.is_empty() || levels.iter().any(|l| !(*l > 0.0)) {
                return Err(Error::InvalidArgument(
                    "allocation.rate_levels_bps must be non-empty and positive".into(),
                ));
            }
        }
        if !(self.measurement.tail.tail_fraction > 0.0
            && self.measurement.tail.tail_fraction < 1.0)
        {
            return Err(Error::InvalidArgument(format!(
                "measurement.tail.tail_fraction must lie in (0, 1), got {}",
                self.measurement.tail.tail_fraction
            )));
        }
        Ok(())
    }

    /// Outage budget for allocation: explicit, or read off the
    /// reliability target.
    pub fn allocation_epsilon(&self) -> f64 {
        self.allocation
            .epsilon
            .unwrap_or(1.0 - self.requirements.alpha_star)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dimensioning::CoverageEstimator;
    use crate::evt::TailDomain;
    use crate::sinr::LargeScaleMode;

    #[test]
    fn empty_config_is_all_defaults() {
        let cfg = RunConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.area.width_m, 200.0);
        assert_eq!(cfg.resources.bandwidth_hz, 50e6);
        assert_eq!(cfg.study.n_deployments, 20);
        assert!(cfg.sweep.is_none());
    }

    #[test]
    fn full_round_trip_preserves_every_field() {
        let text = r#"
[area]
width_m = 120.0
height_m = 80.0

[requirements]
payload_bits = 1024.0
gamma_latency_s = 1e-4
alpha_star = 0.9999
eta_star = 0.9

[resources]
bandwidth_hz = 2e7
n_aps = 12
tx_power_dbm = 24.0
carrier_hz = 3.5e9
ap_height_m = 8.0
user_height_m = 1.2
noise_figure_db = 7.0
noise_enabled = false

[channel]
los_full_within_m = 15.0
los_decay_m = 40.0
shadow_sigma_los_db = 2.5
shadow_sigma_nlos_db = 5.0
rician_k_db = 8.0
env_height_m = 1.0
min_distance_m = 5.0

[study]
grid_spacing_m = 4.0
n_trials = 5000
n_deployments = 3
mode = "static"
estimator = { kind = "evt", tail_fraction = 0.1, min_exceedances = 30 }

[sweep]
bandwidths_hz = [1e6, 1e7, 1e8]
densities = [5, 10]
alpha_stars = [0.999, 0.99999]

[search]
bandwidth_lo_hz = 5e5
bandwidth_hi_hz = 5e8
rel_tol = 0.005
eta_probe = 0.99

[measurement]
layout = { subgrid = { stride = 3 } }
n_samples = 20000
interpolator = { kind = "idw", power = 1.5, neighbors = 4 }
tail = { domain = "decibel", tail_fraction = 0.08, min_exceedances = 40, min_trace_samples = 1000 }

[allocation]
epsilon = 1e-4
error_radius_m = 3.0
rate_levels_bps = [1e6, 4e6, 16e6]
"#;
        let cfg = RunConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.requirements.gamma_latency_s, 1e-4);
        assert_eq!(cfg.resources.n_aps, 12);
        assert!(!cfg.resources.noise_enabled);
        assert_eq!(cfg.channel.min_distance_m, 5.0);
        assert_eq!(cfg.study.mode, LargeScaleMode::Static);
        // `domain` left out of the TOML: the decibel default fills in.
        assert_eq!(
            cfg.study.estimator,
            CoverageEstimator::Evt {
                tail_fraction: 0.1,
                min_exceedances: 30,
                domain: TailDomain::Decibel
            }
        );
        let sweep = cfg.sweep.as_ref().unwrap();
        assert_eq!(sweep.densities, vec![5, 10]);
        assert_eq!(
            cfg.measurement.layout,
            MeasurementLayout::Subgrid { stride: 3 }
        );
        assert_eq!(cfg.allocation.epsilon, Some(1e-4));
        assert_eq!(cfg.measurement.tail.domain, TailDomain::Decibel);
        assert_eq!(cfg.measurement.tail.min_trace_samples, 1000);
        assert_eq!(
            cfg.allocation.rate_levels_bps,
            Some(vec![1e6, 4e6, 16e6])
        );
        assert_eq!(cfg.allocation.localization().error_radius_m, 3.0);

        let echoed = cfg.to_toml_string().unwrap();
        let reparsed = RunConfig::from_toml_str(&echoed).unwrap();
        assert_eq!(cfg, reparsed);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::from_toml_str("[area]\nwidht_m = 100.0\n").unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("widht_m"), "{msg}");
    }

    #[test]
    fn invalid_values_fail_validation() {
        assert!(RunConfig::from_toml_str("[area]\nwidth_m = -5.0\n").is_err());
        assert!(RunConfig::from_toml_str("[requirements]\nalpha_star = 1.5\n").is_err());
        assert!(
            RunConfig::from_toml_str("[search]\nbandwidth_lo_hz = 1e9\nbandwidth_hi_hz = 1e6\n")
                .is_err()
        );
        assert!(RunConfig::from_toml_str("[allocation]\nepsilon = 1.0\n").is_err());
        assert!(RunConfig::from_toml_str("[allocation]\nrate_levels_bps = []\n").is_err());
        assert!(
            RunConfig::from_toml_str("[measurement]\ntail = { tail_fraction = 1.5 }\n").is_err()
        );
    }

    #[test]
    fn epsilon_defaults_to_the_reliability_complement() {
        let cfg = RunConfig::from_toml_str("[requirements]\nalpha_star = 0.999\n").unwrap();
        assert!((cfg.allocation_epsilon() - 1e-3).abs() < 1e-15);
        let cfg = RunConfig::from_toml_str("[allocation]\nepsilon = 0.05\n").unwrap();
        assert_eq!(cfg.allocation_epsilon(), 0.05);
    }
}
