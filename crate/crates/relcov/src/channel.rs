//! Street-level propagation: line-of-sight statistics, dual-slope
//! pathloss with an NLOS floor, lognormal shadowing and small-scale
//! fading.
//!
//! Distances below `min_distance_m` are clamped before evaluating the
//! pathloss curves, which are not calibrated closer in.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

// LOS pathloss below the breakpoint: 22 log10(d3d) + 28 + 20 log10(f_GHz).
const LOS_NEAR_SLOPE: f64 = 22.0;
const LOS_INTERCEPT: f64 = 28.0;
const LOS_FREQ_SLOPE: f64 = 20.0;
// Beyond the breakpoint the distance slope steepens to 40 and the curve
// is shifted by -9 log10(bp^2 + dh^2) to stay continuous.
const LOS_FAR_SLOPE: f64 = 40.0;
const LOS_FAR_ANCHOR: f64 = 9.0;
// NLOS candidate curve; actual NLOS pathloss never undercuts LOS.
const NLOS_SLOPE: f64 = 36.7;
const NLOS_INTERCEPT: f64 = 22.7;
const NLOS_FREQ_SLOPE: f64 = 26.0;
const NLOS_HEIGHT_SLOPE: f64 = 0.3;
const NLOS_HEIGHT_REF_M: f64 = 1.5;

const SPEED_OF_LIGHT: f64 = 3.0e8;

/// Knobs of the propagation model. Pathloss curve coefficients are fixed
/// constants of the model family; these are the parameters a study may
/// reasonably vary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    /// Below this horizontal distance a link is always line of sight.
    pub los_full_within_m: f64,
    /// Exponential decay length of the LoS probability.
    pub los_decay_m: f64,
    pub shadow_sigma_los_db: f64,
    pub shadow_sigma_nlos_db: f64,
    /// Rician K factor for LOS fading. `-inf` degenerates to Rayleigh.
    pub rician_k_db: f64,
    /// Rician K factor for NLOS fading. `-inf` degenerates to Rayleigh.
    /// Indoor halls keep a strong specular component even off-sight, and
    /// the coverage levels of reference deployments are only reached
    /// with it; set `-inf` for a classical heavy-tailed NLOS.
    pub rician_k_nlos_db: f64,
    /// Effective environment height subtracted from antenna heights in
    /// the breakpoint distance.
    pub env_height_m: f64,
    /// Pathloss validity floor for horizontal distance.
    pub min_distance_m: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            los_full_within_m: 18.0,
            los_decay_m: 36.0,
            shadow_sigma_los_db: 3.0,
            shadow_sigma_nlos_db: 4.0,
            rician_k_db: 10.0,
            rician_k_nlos_db: 9.0,
            env_height_m: 1.0,
            min_distance_m: 10.0,
        }
    }
}

/// Geometry of one AP-to-user link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkGeometry {
    pub d2d_m: f64,
    pub d3d_m: f64,
    pub ap_height_m: f64,
    pub user_height_m: f64,
}

impl LinkGeometry {
    /// Derives the slant distance from the horizontal one.
    pub fn from_d2d(d2d_m: f64, ap_height_m: f64, user_height_m: f64) -> Self {
        Self {
            d2d_m,
            d3d_m: d2d_m.hypot(ap_height_m - user_height_m),
            ap_height_m,
            user_height_m,
        }
    }
}

/// Large-scale state of a link for one coherence interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LargeScaleState {
    pub is_los: bool,
    pub shadow_db: f64,
}

impl ChannelParams {
    /// Probability that a link at horizontal distance `d2d_m` is LOS.
    /// Equal to 1 up to `los_full_within_m`, then decays towards 0.
    pub fn los_probability(&self, d2d_m: f64) -> f64 {
        if d2d_m <= self.los_full_within_m {
            return 1.0;
        }
        let escape = (-d2d_m / self.los_decay_m).exp();
        (self.los_full_within_m / d2d_m) * (1.0 - escape) + escape
    }

    /// Dual-slope breakpoint distance for the LOS curve.
    pub fn breakpoint_m(&self, ap_height_m: f64, user_height_m: f64, carrier_hz: f64) -> f64 {
        let ha = (ap_height_m - self.env_height_m).max(0.0);
        let hu = (user_height_m - self.env_height_m).max(0.0);
        4.0 * ha * hu * carrier_hz / SPEED_OF_LIGHT
    }

    fn clamped(&self, geom: &LinkGeometry) -> LinkGeometry {
        if geom.d2d_m >= self.min_distance_m {
            *geom
        } else {
            LinkGeometry::from_d2d(self.min_distance_m, geom.ap_height_m, geom.user_height_m)
        }
    }

    fn los_pathloss_db(&self, geom: &LinkGeometry, f_ghz: f64, carrier_hz: f64) -> f64 {
        let bp = self.breakpoint_m(geom.ap_height_m, geom.user_height_m, carrier_hz);
        let base = LOS_INTERCEPT + LOS_FREQ_SLOPE * f_ghz.log10();
        if geom.d2d_m <= bp {
            LOS_NEAR_SLOPE * geom.d3d_m.log10() + base
        } else {
            let dh = geom.ap_height_m - geom.user_height_m;
            LOS_FAR_SLOPE * geom.d3d_m.log10() + base
                - LOS_FAR_ANCHOR * (bp * bp + dh * dh).log10()
        }
    }

    /// Distance-dependent pathloss in dB for a link in the given
    /// visibility state. NLOS is floored at the LOS curve.
    pub fn pathloss_db(&self, geom: &LinkGeometry, is_los: bool, carrier_hz: f64) -> f64 {
        let geom = self.clamped(geom);
        let f_ghz = carrier_hz / 1e9;
        let los = self.los_pathloss_db(&geom, f_ghz, carrier_hz);
        if is_los {
            return los;
        }
        let nlos = NLOS_SLOPE * geom.d3d_m.log10()
            + NLOS_INTERCEPT
            + NLOS_FREQ_SLOPE * f_ghz.log10()
            - NLOS_HEIGHT_SLOPE * (geom.user_height_m - NLOS_HEIGHT_REF_M);
        los.max(nlos)
    }

    /// Draws the LoS state and the shadowing of one coherence interval.
    pub fn sample_large_scale<R: Rng + ?Sized>(
        &self,
        d2d_m: f64,
        rng: &mut R,
    ) -> LargeScaleState {
        let is_los = rng.gen::<f64>() < self.los_probability(d2d_m);
        let sigma = if is_los {
            self.shadow_sigma_los_db
        } else {
            self.shadow_sigma_nlos_db
        };
        let z: f64 = StandardNormal.sample(rng);
        LargeScaleState {
            is_los,
            shadow_db: sigma * z,
        }
    }

    /// Rician component amplitudes `(a, s)` for the given LoS state: the
    /// fading gain is `(a + s X)^2 + (s Y)^2` with X, Y standard normal,
    /// and has unit mean. K = 0 (in linear terms) reduces to Rayleigh.
    pub fn rician_components(&self, is_los: bool) -> (f64, f64) {
        let k_db = if is_los {
            self.rician_k_db
        } else {
            self.rician_k_nlos_db
        };
        let k = 10f64.powf(k_db / 10.0);
        ((k / (k + 1.0)).sqrt(), (0.5 / (k + 1.0)).sqrt())
    }

    /// Unit-mean small-scale power gain, Rician with the K factor of the
    /// LoS branch. A zero K (exactly Rayleigh) short-circuits to a
    /// single exponential draw.
    pub fn sample_fading_gain<R: Rng + ?Sized>(&self, is_los: bool, rng: &mut R) -> f64 {
        let (a, s) = self.rician_components(is_los);
        sample_rician_power(a, s, rng)
    }

    /// LoS-probability-weighted linear power gain, the association
    /// metric. Shadowing and fading average out and do not appear.
    pub fn expected_linear_gain(&self, geom: &LinkGeometry, carrier_hz: f64) -> f64 {
        let p = self.los_probability(geom.d2d_m);
        let g_los = 10f64.powf(-self.pathloss_db(geom, true, carrier_hz) / 10.0);
        let g_nlos = 10f64.powf(-self.pathloss_db(geom, false, carrier_hz) / 10.0);
        p * g_los + (1.0 - p) * g_nlos
    }
}

/// Unit-mean Rician power gain from precomputed `(a, s)` components.
/// `a == 0` is exact Rayleigh; a single exponential draw keeps that
/// common case at one stream pull instead of two.
#[inline]
pub fn sample_rician_power<R: Rng + ?Sized>(a: f64, s: f64, rng: &mut R) -> f64 {
    if a == 0.0 {
        let f: f64 = Exp1.sample(rng);
        return 2.0 * s * s * f;
    }
    let x: f64 = StandardNormal.sample(rng);
    let y: f64 = StandardNormal.sample(rng);
    let re = a + s * x;
    let im = s * y;
    re * re + im * im
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding;

    const F: f64 = 1.5e9;

    fn params() -> ChannelParams {
        ChannelParams::default()
    }

    #[test]
    fn los_probability_hand_values() {
        let p = params();
        assert_eq!(p.los_probability(10.0), 1.0);
        assert_eq!(p.los_probability(18.0), 1.0);
        let e = (-1f64).exp();
        let expect = 0.5 * (1.0 - e) + e;
        assert!((p.los_probability(36.0) - expect).abs() < 1e-12);
    }

    #[test]
    fn los_probability_decays_monotonically() {
        let p = params();
        let mut prev = 1.0;
        for i in 18..2000 {
            let v = p.los_probability(i as f64);
            assert!(v <= prev + 1e-15 && v > 0.0 && v <= 1.0);
            prev = v;
        }
        assert!(p.los_probability(5000.0) < 0.01);
    }

    #[test]
    fn breakpoint_at_reference_geometry() {
        // 4 * 9 * 0.5 * 1.5e9 / 3e8 = 90 m.
        let bp = params().breakpoint_m(10.0, 1.5, F);
        assert!((bp - 90.0).abs() < 1e-9, "bp {bp}");
    }

    #[test]
    fn pathloss_hand_values() {
        let p = params();
        let near = LinkGeometry::from_d2d(0.0, 10.0, 1.5);
        // The clamp makes d2d = 10 the effective floor everywhere.
        let at10 = p.pathloss_db(&LinkGeometry::from_d2d(10.0, 10.0, 1.5), true, F);
        assert!((p.pathloss_db(&near, true, F) - at10).abs() < 1e-12);

        // LOS below the breakpoint at d3d = 50 m.
        let g = LinkGeometry {
            d2d_m: 50.0,
            d3d_m: 50.0,
            ap_height_m: 10.0,
            user_height_m: 1.5,
        };
        let expect = 22.0 * 50f64.log10() + 28.0 + 20.0 * 1.5f64.log10();
        assert!((p.pathloss_db(&g, true, F) - expect).abs() < 1e-9);
        assert!((expect - 68.899).abs() < 1e-3);

        // NLOS at d3d = 100 m: the candidate curve dominates the LOS
        // far branch, max(76.31, 100.68).
        let g = LinkGeometry {
            d2d_m: 100.0,
            d3d_m: 100.0,
            ap_height_m: 10.0,
            user_height_m: 1.5,
        };
        let nlos = p.pathloss_db(&g, false, F);
        assert!((nlos - 100.678).abs() < 1e-3, "nlos {nlos}");
        let los_far = p.pathloss_db(&g, true, F);
        assert!((los_far - 76.311).abs() < 1e-3, "los far {los_far}");
    }

    #[test]
    fn los_curve_is_continuous_at_the_breakpoint() {
        let p = params();
        let bp = p.breakpoint_m(10.0, 1.5, F);
        let below = p.pathloss_db(&LinkGeometry::from_d2d(bp - 1e-9, 10.0, 1.5), true, F);
        let above = p.pathloss_db(&LinkGeometry::from_d2d(bp + 1e-9, 10.0, 1.5), true, F);
        assert!((below - above).abs() < 1e-6, "jump {}", (below - above).abs());
    }

    #[test]
    fn nlos_never_undercuts_los_and_both_grow_with_distance() {
        let p = params();
        let mut prev_los = 0.0;
        let mut prev_nlos = 0.0;
        for i in 1..500 {
            let g = LinkGeometry::from_d2d(i as f64, 10.0, 1.5);
            let los = p.pathloss_db(&g, true, F);
            let nlos = p.pathloss_db(&g, false, F);
            assert!(nlos >= los, "d {}: nlos {nlos} < los {los}", i);
            assert!(los >= prev_los - 1e-12 && nlos >= prev_nlos - 1e-12);
            prev_los = los;
            prev_nlos = nlos;
        }
    }

    #[test]
    fn large_scale_statistics_at_36m() {
        let p = params();
        let mut rng = seeding::stream(11);
        let n = 1_000_000;
        let mut los_count = 0usize;
        let mut shadow_sum = 0.0;
        let mut nlos_shadow = Vec::new();
        for _ in 0..n {
            let s = p.sample_large_scale(36.0, &mut rng);
            if s.is_los {
                los_count += 1;
            } else {
                nlos_shadow.push(s.shadow_db);
            }
            shadow_sum += s.shadow_db;
        }
        let e = (-1f64).exp();
        let p_expect = 0.5 * (1.0 - e) + e;
        let frac = los_count as f64 / n as f64;
        assert!((frac - p_expect).abs() < 0.002, "LoS fraction {frac}");
        assert!((shadow_sum / n as f64).abs() < 0.01);
        let m = nlos_shadow.iter().sum::<f64>() / nlos_shadow.len() as f64;
        let var = nlos_shadow.iter().map(|x| (x - m) * (x - m)).sum::<f64>()
            / (nlos_shadow.len() - 1) as f64;
        assert!((var.sqrt() - 4.0).abs() < 0.02, "NLOS sigma {}", var.sqrt());
    }

    #[test]
    fn fading_has_unit_mean_in_both_states() {
        let p = params();
        let mut rng = seeding::stream(12);
        let n = 1_000_000;
        for los in [false, true] {
            let mean: f64 =
                (0..n).map(|_| p.sample_fading_gain(los, &mut rng)).sum::<f64>() / n as f64;
            assert!((mean - 1.0).abs() < 0.005, "los {los} mean {mean}");
        }
    }

    #[test]
    fn rayleigh_deep_fades_have_the_right_mass() {
        // Pr(gain < 1e-3) = 1 - exp(-1e-3) ~ 9.995e-4.
        let mut p = params();
        p.rician_k_nlos_db = f64::NEG_INFINITY;
        let mut rng = seeding::stream(13);
        let n = 10_000_000;
        let hits = (0..n)
            .filter(|_| p.sample_fading_gain(false, &mut rng) < 1e-3)
            .count();
        let frac = hits as f64 / n as f64;
        assert!(
            (9.0e-4..=1.1e-3).contains(&frac),
            "deep fade fraction {frac}"
        );
    }

    #[test]
    fn rician_k_of_zero_is_rayleigh() {
        let mut p = params();
        p.rician_k_db = f64::NEG_INFINITY;
        let (a, s) = p.rician_components(true);
        assert_eq!(a, 0.0);
        assert!((s - 0.5f64.sqrt()).abs() < 1e-15);
        // Exponential tail check at the median.
        let mut rng = seeding::stream(14);
        let n = 200_000;
        let below = (0..n)
            .filter(|_| p.sample_fading_gain(true, &mut rng) < 2f64.ln())
            .count();
        let frac = below as f64 / n as f64;
        assert!((frac - 0.5).abs() < 0.005, "median mass {frac}");
    }

    #[test]
    fn association_gain_prefers_the_near_ap() {
        let p = params();
        let near = LinkGeometry::from_d2d(20.0, 10.0, 1.5);
        let far = LinkGeometry::from_d2d(120.0, 10.0, 1.5);
        assert!(p.expected_linear_gain(&near, F) > p.expected_linear_gain(&far, F));
    }
}
