//! Service area geometry, evaluation grids, requirement sets, and access
//! point deployments.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding;

/// A planar location in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub x_m: f64,
    pub y_m: f64,
}

impl Location {
    pub fn new(x_m: f64, y_m: f64) -> Self {
        Self { x_m, y_m }
    }

    /// Horizontal distance to another location.
    pub fn distance_2d(&self, other: &Location) -> f64 {
        (self.x_m - other.x_m).hypot(self.y_m - other.y_m)
    }
}

/// Rectangular service area `[0, width] x [0, height]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceArea {
    pub width_m: f64,
    pub height_m: f64,
}

impl Default for ServiceArea {
    /// A 200 m square service area.
    fn default() -> Self {
        Self {
            width_m: 200.0,
            height_m: 200.0,
        }
    }
}

impl ServiceArea {
    pub fn new(width_m: f64, height_m: f64) -> Result<Self> {
        if !(width_m > 0.0) || !(height_m > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "service area dimensions must be positive, got {width_m} x {height_m}"
            )));
        }
        Ok(Self { width_m, height_m })
    }

    /// Closed-region membership.
    pub fn contains(&self, loc: &Location) -> bool {
        (0.0..=self.width_m).contains(&loc.x_m) && (0.0..=self.height_m).contains(&loc.y_m)
    }

    /// Length of the area diagonal, an upper bound on any 2D distance.
    pub fn diagonal(&self) -> f64 {
        self.width_m.hypot(self.height_m)
    }
}

/// Regular grid of evaluation points at cell centers.
///
/// The area is tiled with `spacing x spacing` cells starting at the
/// origin; the final row and column of cells may be truncated by the
/// area boundary, in which case the point sits at the truncated cell's
/// center. Points are stored row-major (y outer, x inner).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationGrid {
    pub spacing_m: f64,
    pub nx: usize,
    pub ny: usize,
    pub points: Vec<Location>,
}

impl EvaluationGrid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn axis_centers(extent: f64, spacing: f64) -> Vec<f64> {
    let n = (extent / spacing).ceil() as usize;
    (0..n)
        .map(|i| {
            let lo = i as f64 * spacing;
            let hi = (lo + spacing).min(extent);
            0.5 * (lo + hi)
        })
        .collect()
}

/// Builds the evaluation grid for an area.
///
/// Point count is `ceil(width / spacing) * ceil(height / spacing)`; all
/// points lie inside the area.
pub fn build_grid(area: &ServiceArea, spacing_m: f64) -> Result<EvaluationGrid> {
    if !(spacing_m > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "grid spacing must be positive, got {spacing_m}"
        )));
    }
    let xs = axis_centers(area.width_m, spacing_m);
    let ys = axis_centers(area.height_m, spacing_m);
    let mut points = Vec::with_capacity(xs.len() * ys.len());
    for &y in &ys {
        for &x in &xs {
            points.push(Location::new(x, y));
        }
    }
    Ok(EvaluationGrid {
        spacing_m,
        nx: xs.len(),
        ny: ys.len(),
        points,
    })
}

/// What the service must deliver, and where the bar for "covered" sits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Requirements {
    /// Packet size in bits. Fractional values are allowed by the model.
    pub payload_bits: f64,
    /// Latency budget per packet, seconds.
    pub gamma_latency_s: f64,
    /// Per-location reliability target, `Pr(latency <= gamma)`.
    pub alpha_star: f64,
    /// Required fraction of the area meeting `alpha_star`.
    pub eta_star: f64,
}

impl Default for Requirements {
    /// 32-byte packets within a millisecond, five nines per location,
    /// over 95 percent of the area.
    fn default() -> Self {
        Self {
            payload_bits: 256.0,
            gamma_latency_s: 1e-3,
            alpha_star: 0.999_99,
            eta_star: 0.95,
        }
    }
}

impl Requirements {
    pub fn validate(&self) -> Result<()> {
        if !(self.payload_bits > 0.0) {
            return Err(Error::InvalidScenario(format!(
                "payload_bits must be positive, got {}",
                self.payload_bits
            )));
        }
        if !(self.gamma_latency_s > 0.0) {
            return Err(Error::InvalidScenario(format!(
                "gamma_latency_s must be positive, got {}",
                self.gamma_latency_s
            )));
        }
        if !(self.alpha_star > 0.0 && self.alpha_star < 1.0) {
            return Err(Error::InvalidScenario(format!(
                "alpha_star must lie strictly between 0 and 1, got {}",
                self.alpha_star
            )));
        }
        if !(0.0..=1.0).contains(&self.eta_star) {
            return Err(Error::InvalidScenario(format!(
                "eta_star must lie in [0, 1], got {}",
                self.eta_star
            )));
        }
        Ok(())
    }
}

/// Radio resources and hardware of the deployment under study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResourceConfig {
    pub bandwidth_hz: f64,
    pub n_aps: usize,
    /// Per-AP transmit power. `-inf` means the AP radiates nothing.
    pub tx_power_dbm: f64,
    pub carrier_hz: f64,
    pub ap_height_m: f64,
    pub user_height_m: f64,
    /// Receiver noise figure applied on top of thermal noise.
    pub noise_figure_db: f64,
    /// With noise disabled the system is interference limited and SINR
    /// becomes scale invariant in transmit power.
    pub noise_enabled: bool,
}

impl ResourceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth_hz > 0.0) {
            return Err(Error::InvalidScenario(format!(
                "bandwidth_hz must be positive, got {}",
                self.bandwidth_hz
            )));
        }
        if self.n_aps == 0 {
            return Err(Error::InvalidScenario("n_aps must be at least 1".into()));
        }
        if !(self.carrier_hz > 0.0) {
            return Err(Error::InvalidScenario(format!(
                "carrier_hz must be positive, got {}",
                self.carrier_hz
            )));
        }
        if !(self.ap_height_m > 0.0) || !(self.user_height_m > 0.0) {
            return Err(Error::InvalidScenario(
                "antenna heights must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Transmit power in linear milliwatts.
    pub fn tx_power_mw(&self) -> f64 {
        10f64.powf(self.tx_power_dbm / 10.0)
    }

    /// Thermal noise power over the configured bandwidth, in milliwatts.
    /// Zero when noise is disabled.
    pub fn noise_power_mw(&self) -> f64 {
        if !self.noise_enabled {
            return 0.0;
        }
        let dbm = -174.0 + 10.0 * self.bandwidth_hz.log10() + self.noise_figure_db;
        10f64.powf(dbm / 10.0)
    }

    /// Same resources at a different bandwidth.
    pub fn with_bandwidth(&self, bandwidth_hz: f64) -> Self {
        Self {
            bandwidth_hz,
            ..*self
        }
    }
}

impl Default for ResourceConfig {
    fn default() -> Self {
        Self {
            bandwidth_hz: 50e6,
            n_aps: 5,
            tx_power_dbm: 30.0,
            carrier_hz: 1.5e9,
            ap_height_m: 10.0,
            user_height_m: 1.5,
            noise_figure_db: 9.0,
            noise_enabled: true,
        }
    }
}

/// A concrete set of AP positions inside the service area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deployment {
    pub ap_locations: Vec<Location>,
}

impl Deployment {
    pub fn n_aps(&self) -> usize {
        self.ap_locations.len()
    }
}

/// Draws `n` AP positions as a binomial point process: independent and
/// uniform over the area. The draw is fully determined by `seed`.
pub fn generate_bpp_deployment(area: &ServiceArea, n: usize, seed: u64) -> Deployment {
    let mut rng = seeding::stream(seeding::derive_seed(seed, &[seeding::STREAM_DEPLOYMENT]));
    let ap_locations = (0..n)
        .map(|_| {
            let x = rng.gen::<f64>() * area.width_m;
            let y = rng.gen::<f64>() * area.height_m;
            Location::new(x, y)
        })
        .collect();
    Deployment { ap_locations }
}
