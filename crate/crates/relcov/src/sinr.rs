//! SINR sampling under full-buffer downlink interference, and the
//! latency / SINR-threshold correspondence.
//!
//! Every AP transmits constantly, so a user served by one AP sees all
//! others as interferers. A packet of `payload_bits` makes its latency
//! budget `gamma` exactly when the SINR clears the threshold
//! `2^(payload / (w * gamma)) - 1`, which lets reliability be estimated
//! by counting threshold crossings instead of timing packets.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelParams, LinkGeometry};
use crate::scenario::{Deployment, Location, ResourceConfig};
use crate::seeding::{self, STREAM_LINK};

const LN10_OVER_10: f64 = core::f64::consts::LN_10 / 10.0;

/// SINR needed to push `payload_bits` through bandwidth `w` within
/// `gamma_s` at Shannon rate.
pub fn sinr_threshold(payload_bits: f64, bandwidth_hz: f64, gamma_s: f64) -> f64 {
    ((payload_bits / (bandwidth_hz * gamma_s)) * core::f64::consts::LN_2).exp_m1()
}

/// Time to deliver `payload_bits` at Shannon rate over bandwidth `w`.
/// Infinite at zero SINR.
pub fn latency_s(sinr: f64, payload_bits: f64, bandwidth_hz: f64) -> f64 {
    if sinr <= 0.0 {
        return f64::INFINITY;
    }
    let rate = bandwidth_hz * sinr.ln_1p() / core::f64::consts::LN_2;
    payload_bits / rate
}

/// Shannon rate in bit/s at a given SINR, zero at or below zero SINR.
pub fn shannon_rate(sinr: f64, bandwidth_hz: f64) -> f64 {
    if sinr <= 0.0 {
        return 0.0;
    }
    bandwidth_hz * sinr.ln_1p() / core::f64::consts::LN_2
}

/// Picks the serving AP for a location: highest LoS-weighted expected
/// linear gain, ties resolved to the lowest index.
pub fn associate(
    loc: &Location,
    deployment: &Deployment,
    config: &ResourceConfig,
    params: &ChannelParams,
) -> usize {
    assert!(
        !deployment.ap_locations.is_empty(),
        "cannot associate in an empty deployment"
    );
    let mut best = 0usize;
    let mut best_gain = f64::NEG_INFINITY;
    for (i, ap) in deployment.ap_locations.iter().enumerate() {
        let geom = LinkGeometry::from_d2d(
            loc.distance_2d(ap),
            config.ap_height_m,
            config.user_height_m,
        );
        let gain = params.expected_linear_gain(&geom, config.carrier_hz);
        if gain > best_gain {
            best_gain = gain;
            best = i;
        }
    }
    best
}

/// Whether large-scale state is redrawn per trial or frozen per link.
///
/// Ergodic mode treats blockage and shadowing as part of the per-packet
/// randomness; static mode freezes one large-scale realization per link
/// and only fading varies across trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LargeScaleMode {
    Ergodic,
    Static,
}

struct Link {
    lin_los_mw: f64,
    lin_nlos_mw: f64,
    p_los: f64,
    shadow_ln_los: f64,
    shadow_ln_nlos: f64,
    /// Rician `(a, s)` per LoS branch: `[nlos, los]`.
    fading: [(f64, f64); 2],
    rng: ChaCha8Rng,
    /// `(is_los, linear shadow factor)` frozen in static mode.
    frozen: Option<(bool, f64)>,
}

impl Link {
    /// Mean received power of the frozen large-scale state, fading
    /// averaged out. `None` when the link redraws per trial.
    fn frozen_mean_mw(&self) -> Option<f64> {
        self.frozen.map(|(is_los, shadow_fac)| {
            let base = if is_los {
                self.lin_los_mw
            } else {
                self.lin_nlos_mw
            };
            base * shadow_fac
        })
    }

    #[inline]
    fn draw_gain_mw(&mut self) -> f64 {
        let (is_los, shadow_fac) = match self.frozen {
            Some(state) => state,
            None => {
                let u: f64 = self.rng.gen();
                let is_los = u < self.p_los;
                let z: f64 = StandardNormal.sample(&mut self.rng);
                let sigma = if is_los {
                    self.shadow_ln_los
                } else {
                    self.shadow_ln_nlos
                };
                (is_los, (-sigma * z).exp())
            }
        };
        let (a, s) = self.fading[is_los as usize];
        let fading = crate::channel::sample_rician_power(a, s, &mut self.rng);
        let base = if is_los {
            self.lin_los_mw
        } else {
            self.lin_nlos_mw
        };
        base * shadow_fac * fading
    }
}

/// Draws SINR realizations for one user location under one deployment.
///
/// Each link runs on its own derived random stream, so enlarging the
/// deployment never perturbs the draws of existing links, and a given
/// `(seed, link)` pair replays identically whatever else runs.
pub struct SinrSampler {
    links: Vec<Link>,
    serving: usize,
    noise_mw: f64,
}

impl SinrSampler {
    /// `seed` identifies the user location's stream; link streams are
    /// derived from it by AP index.
    pub fn new(
        loc: &Location,
        deployment: &Deployment,
        serving: usize,
        config: &ResourceConfig,
        params: &ChannelParams,
        mode: LargeScaleMode,
        seed: u64,
    ) -> Self {
        assert!(serving < deployment.n_aps(), "serving index out of range");
        let tx_mw = config.tx_power_mw();
        let fading = [params.rician_components(false), params.rician_components(true)];
        let links = deployment
            .ap_locations
            .iter()
            .enumerate()
            .map(|(i, ap)| {
                let geom = LinkGeometry::from_d2d(
                    loc.distance_2d(ap),
                    config.ap_height_m,
                    config.user_height_m,
                );
                let pl_los = params.pathloss_db(&geom, true, config.carrier_hz);
                let pl_nlos = params.pathloss_db(&geom, false, config.carrier_hz);
                let mut rng =
                    seeding::stream(seeding::derive_seed(seed, &[STREAM_LINK, i as u64]));
                let p_los = params.los_probability(geom.d2d_m);
                let frozen = match mode {
                    LargeScaleMode::Ergodic => None,
                    LargeScaleMode::Static => {
                        let state = params.sample_large_scale(geom.d2d_m, &mut rng);
                        Some((state.is_los, (-state.shadow_db * LN10_OVER_10).exp()))
                    }
                };
                Link {
                    lin_los_mw: tx_mw * (-pl_los * LN10_OVER_10).exp(),
                    lin_nlos_mw: tx_mw * (-pl_nlos * LN10_OVER_10).exp(),
                    p_los,
                    shadow_ln_los: params.shadow_sigma_los_db * LN10_OVER_10,
                    shadow_ln_nlos: params.shadow_sigma_nlos_db * LN10_OVER_10,
                    fading,
                    rng,
                    frozen,
                }
            })
            .collect();
        Self {
            links,
            serving,
            noise_mw: config.noise_power_mw(),
        }
    }

    /// Convenience constructor that associates internally.
    ///
    /// Under per-trial large-scale redraws no single realization exists
    /// to select on, so the serving AP is the best link in expectation.
    /// Under a frozen map the user camps on the strongest realized link
    /// (pathloss plus shadowing, fading averaged out), the way cell
    /// selection reads beacon power on a live map.
    pub fn for_location(
        loc: &Location,
        deployment: &Deployment,
        config: &ResourceConfig,
        params: &ChannelParams,
        mode: LargeScaleMode,
        seed: u64,
    ) -> Self {
        let serving = associate(loc, deployment, config, params);
        let mut sampler = Self::new(loc, deployment, serving, config, params, mode, seed);
        if mode == LargeScaleMode::Static {
            // Ties resolve to the lowest index, same as associate().
            let mut best = 0usize;
            let mut best_mw = f64::NEG_INFINITY;
            for (i, link) in sampler.links.iter().enumerate() {
                let mw = link.frozen_mean_mw().expect("static links are frozen");
                if mw > best_mw {
                    best_mw = mw;
                    best = i;
                }
            }
            sampler.serving = best;
        }
        sampler
    }

    pub fn serving(&self) -> usize {
        self.serving
    }

    /// One trial: received signal and total interference in mW.
    #[inline]
    pub fn sample_components(&mut self) -> (f64, f64) {
        let mut signal = 0.0;
        let mut interference = 0.0;
        for (i, link) in self.links.iter_mut().enumerate() {
            let g = link.draw_gain_mw();
            if i == self.serving {
                signal = g;
            } else {
                interference += g;
            }
        }
        (signal, interference)
    }

    /// One SINR realization.
    #[inline]
    pub fn sample(&mut self) -> f64 {
        let (s, i) = self.sample_components();
        s / (i + self.noise_mw)
    }

    /// Draws `n` SINR realizations into a vector.
    pub fn sample_n(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.sample()).collect()
    }
}
