//! Peaks-over-threshold modeling of the lower SINR tail.
//!
//! Outage levels like 1e-5 sit far below what per-location Monte Carlo
//! can resolve directly. The lower tail of SINR is mapped to an upper
//! tail through y = -sinr, exceedances over a high empirical quantile
//! of y are fitted with a generalized Pareto distribution, and outage
//! probabilities below the threshold mass are read off the fitted tail.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fraction of samples treated as the tail unless configured otherwise.
pub const DEFAULT_TAIL_FRACTION: f64 = 0.05;
/// Smallest exceedance count the fit accepts.
pub const DEFAULT_MIN_EXCEEDANCES: usize = 50;

/// Below this |shape| the tail is evaluated in its exponential limit.
const XI_EXPONENTIAL_EPS: f64 = 1e-6;

/// Domain the tail is fitted in.
///
/// The threshold-event formulation works on linear SINR, the default.
/// Decibel fitting is a config alternative; outage queries and
/// quantiles still speak linear SINR either way, the transform is
/// internal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailDomain {
    #[default]
    Linear,
    Decibel,
}

impl TailDomain {
    /// The monotone pseudo-SINR the fit pipeline runs on.
    fn to_pseudo(self, sinr: f64) -> f64 {
        match self {
            TailDomain::Linear => sinr,
            TailDomain::Decibel => 10.0 * sinr.log10(),
        }
    }

    fn from_pseudo(self, pseudo: f64) -> f64 {
        match self {
            TailDomain::Linear => pseudo,
            TailDomain::Decibel => 10f64.powf(pseudo / 10.0),
        }
    }
}

/// How the tail parameters were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    MaxLikelihood,
    /// Probability-weighted moments, used when the likelihood search
    /// fails to produce a valid optimum.
    MomentMatching,
}

/// A fitted generalized Pareto tail above threshold `u` in y = -sinr.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpdFit {
    pub xi: f64,
    pub sigma: f64,
    /// Tail threshold in the y domain.
    pub threshold_u: f64,
    /// Probability mass above `u`, estimated as the exceedance fraction.
    pub zeta_u: f64,
    pub n_exceedances: usize,
    pub method: FitMethod,
}

impl GpdFit {
    /// Upper end of the y support for negative shapes: `u - sigma/xi`.
    /// Outage is exactly zero beyond it.
    pub fn support_bound_y(&self) -> Option<f64> {
        (self.xi < 0.0).then(|| self.threshold_u - self.sigma / self.xi)
    }
}

/// GPD survival function at excess `z >= 0`.
///
/// `(1 + xi z / sigma)^(-1/xi)`, continued as `exp(-z/sigma)` near
/// `xi = 0`, and zero beyond the support bound when `xi < 0`.
pub fn gpd_survival(z: f64, xi: f64, sigma: f64) -> f64 {
    debug_assert!(sigma > 0.0);
    if z <= 0.0 {
        return 1.0;
    }
    if xi.abs() < XI_EXPONENTIAL_EPS {
        (-z / sigma).exp()
    } else {
        let arg = 1.0 + xi * z / sigma;
        if arg <= 0.0 {
            0.0
        } else {
            arg.powf(-1.0 / xi)
        }
    }
}

/// GPD excess quantile: the `z` whose survival equals `p`.
pub fn gpd_excess_quantile(p: f64, xi: f64, sigma: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p) && p > 0.0);
    if xi.abs() < XI_EXPONENTIAL_EPS {
        -sigma * p.ln()
    } else {
        sigma / xi * (p.powf(-xi) - 1.0)
    }
}

/// Result of the threshold selection step.
#[derive(Debug, Clone)]
pub struct ThresholdSelection {
    pub threshold_u: f64,
    pub zeta_u: f64,
    /// Strictly positive excesses over the threshold, ascending.
    pub exceedances: Vec<f64>,
    pub n_samples: usize,
}

/// Picks the tail threshold as the empirical `(1 - tail_fraction)`
/// quantile of y = -sinr and extracts the excesses above it.
///
/// Fails when fewer than `min_exceedances` strictly positive excesses
/// remain, which also catches degenerate all-equal sample sets.
pub fn select_threshold(
    sinr_samples: &[f64],
    tail_fraction: f64,
    min_exceedances: usize,
) -> Result<ThresholdSelection> {
    if !(tail_fraction > 0.0 && tail_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "tail_fraction must lie strictly between 0 and 1, got {tail_fraction}"
        )));
    }
    let n = sinr_samples.len();
    let k = (n as f64 * tail_fraction).floor() as usize;
    if k < min_exceedances {
        return Err(Error::InsufficientData(format!(
            "{n} samples at tail fraction {tail_fraction} yield {k} exceedances, \
             need at least {min_exceedances}"
        )));
    }
    let mut y: Vec<f64> = sinr_samples.iter().map(|s| -s).collect();
    y.sort_unstable_by(|a, b| a.total_cmp(b));
    let u = y[n - k - 1];
    let exceedances: Vec<f64> = y[n - k..]
        .iter()
        .map(|v| v - u)
        .filter(|e| *e > 0.0)
        .collect();
    if exceedances.len() < min_exceedances {
        return Err(Error::InsufficientData(format!(
            "only {} strictly positive exceedances over u = {u} (ties at the \
             threshold), need at least {min_exceedances}",
            exceedances.len()
        )));
    }
    let zeta_u = exceedances.len() as f64 / n as f64;
    Ok(ThresholdSelection {
        threshold_u: u,
        zeta_u,
        exceedances,
        n_samples: n,
    })
}

/// Mean of ln(1 + theta x) over the excesses; the profile shape.
fn profile_xi(theta: f64, x: &[f64]) -> f64 {
    x.iter().map(|&v| (theta * v).ln_1p()).sum::<f64>() / x.len() as f64
}

/// Profile log-likelihood of the GPD over the scalar theta = xi/sigma.
///
/// For fixed theta the inner maximum over xi is attained at
/// xi = mean ln(1 + theta x), giving
/// `l(theta) = -k (ln(xi/theta) + xi + 1)`; theta = 0 is the
/// exponential limit with sigma = mean(x).
fn profile_loglik(theta: f64, x: &[f64]) -> f64 {
    let k = x.len() as f64;
    if theta == 0.0 {
        let mean = x.iter().sum::<f64>() / k;
        return -k * (mean.ln() + 1.0);
    }
    let xi = profile_xi(theta, x);
    let sigma = xi / theta;
    if !(sigma > 0.0) || !sigma.is_finite() {
        return f64::NEG_INFINITY;
    }
    -k * (sigma.ln() + xi + 1.0)
}

fn golden_section_max(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    const INVPHI: f64 = 0.618_033_988_749_894_8;
    let mut a = hi - INVPHI * (hi - lo);
    let mut b = lo + INVPHI * (hi - lo);
    let mut fa = f(a);
    let mut fb = f(b);
    for _ in 0..200 {
        if fa > fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - INVPHI * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + INVPHI * (hi - lo);
            fb = f(b);
        }
        if (hi - lo).abs() <= 1e-12 * (1.0 + lo.abs() + hi.abs()) {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn fit_mle(x: &[f64]) -> Option<(f64, f64)> {
    let x_max = x.iter().cloned().fold(f64::MIN, f64::max);
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    if !(x_max > 0.0) || !(mean > 0.0) {
        return None;
    }
    // theta must keep 1 + theta x positive for every excess.
    let theta_min = -(1.0 - 1e-8) / x_max;

    // Upper end: grow until the implied shape is implausibly heavy.
    let mut theta_max = 1.0 / mean;
    while profile_xi(theta_max, x) < 4.0 && theta_max < 1e12 / mean {
        theta_max *= 2.0;
    }

    let mut candidates: Vec<f64> = Vec::with_capacity(401);
    for j in 0..200 {
        candidates.push(theta_min * (1.0 - j as f64 / 200.0));
    }
    candidates.push(0.0);
    let ratio = (theta_max / (1e-6 / mean)).powf(1.0 / 199.0);
    let mut t = 1e-6 / mean;
    for _ in 0..200 {
        candidates.push(t);
        t *= ratio;
    }

    let mut best_i = 0;
    let mut best_l = f64::NEG_INFINITY;
    for (i, &theta) in candidates.iter().enumerate() {
        let l = profile_loglik(theta, x);
        if l > best_l {
            best_l = l;
            best_i = i;
        }
    }
    if !best_l.is_finite() {
        return None;
    }
    let lo = candidates[best_i.saturating_sub(1)];
    let hi = candidates[(best_i + 1).min(candidates.len() - 1)];
    let theta = golden_section_max(lo, hi, |t| profile_loglik(t, x));
    let theta = if profile_loglik(theta, x) >= best_l {
        theta
    } else {
        candidates[best_i]
    };

    let (xi, sigma) = if theta == 0.0 {
        (0.0, mean)
    } else {
        let xi = profile_xi(theta, x);
        (xi, xi / theta)
    };
    (sigma > 0.0 && sigma.is_finite() && xi.is_finite() && xi.abs() < 10.0)
        .then_some((xi, sigma))
}

/// Probability-weighted-moment estimate, the fallback fit.
///
/// With a_s = E[X (1-F(X))^s] the GPD satisfies xi = 2 - a0/(a0 - 2 a1)
/// and sigma = a0 (1 - xi); a1 is estimated with (i - 0.35)/n plotting
/// positions.
pub fn fit_gpd_pwm(exceedances_ascending: &[f64]) -> Result<(f64, f64)> {
    let n = exceedances_ascending.len();
    if n < 2 {
        return Err(Error::InsufficientData(
            "moment fit needs at least 2 exceedances".into(),
        ));
    }
    let nf = n as f64;
    let a0 = exceedances_ascending.iter().sum::<f64>() / nf;
    let a1 = exceedances_ascending
        .iter()
        .enumerate()
        .map(|(i, &v)| v * (1.0 - (i as f64 + 1.0 - 0.35) / nf))
        .sum::<f64>()
        / nf;
    let denom = a0 - 2.0 * a1;
    if !(denom > 0.0) {
        return Err(Error::FitFailed(format!(
            "probability-weighted moments degenerate: a0 = {a0}, a1 = {a1}"
        )));
    }
    let xi = 2.0 - a0 / denom;
    let sigma = a0 * (1.0 - xi);
    if !(sigma > 0.0) || !xi.is_finite() {
        return Err(Error::FitFailed(format!(
            "moment estimates out of range: xi = {xi}, sigma = {sigma}"
        )));
    }
    Ok((xi, sigma))
}

/// Fits GPD parameters to excesses by profile maximum likelihood,
/// falling back to probability-weighted moments; the method used is
/// recorded in the result.
pub fn fit_gpd(selection: &ThresholdSelection) -> Result<GpdFit> {
    let x = &selection.exceedances;
    let (xi, sigma, method) = match fit_mle(x) {
        Some((xi, sigma)) => (xi, sigma, FitMethod::MaxLikelihood),
        None => {
            let (xi, sigma) = fit_gpd_pwm(x)?;
            (xi, sigma, FitMethod::MomentMatching)
        }
    };
    Ok(GpdFit {
        xi,
        sigma,
        threshold_u: selection.threshold_u,
        zeta_u: selection.zeta_u,
        n_exceedances: x.len(),
        method,
    })
}

/// A fitted tail stitched onto the empirical bulk of one sample set.
///
/// Queries at SINR thresholds inside the bulk are answered empirically;
/// queries below the tail threshold extrapolate along the fitted GPD.
/// The two branches agree at the junction by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailModel {
    pub fit: GpdFit,
    #[serde(default)]
    pub domain: TailDomain,
    /// All y = -pseudo_sinr samples, ascending.
    sorted_y: Vec<f64>,
}

impl TailModel {
    /// Fits the tail of a SINR sample set in the linear domain.
    pub fn fit(sinr_samples: &[f64], tail_fraction: f64, min_exceedances: usize) -> Result<Self> {
        Self::fit_in(sinr_samples, TailDomain::Linear, tail_fraction, min_exceedances)
    }

    /// Fits the tail in the chosen domain. Decibel fitting requires
    /// strictly positive samples.
    pub fn fit_in(
        sinr_samples: &[f64],
        domain: TailDomain,
        tail_fraction: f64,
        min_exceedances: usize,
    ) -> Result<Self> {
        if domain == TailDomain::Decibel && sinr_samples.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::InvalidArgument(
                "decibel-domain fitting needs strictly positive SINR samples".into(),
            ));
        }
        let pseudo: Vec<f64> = sinr_samples.iter().map(|s| domain.to_pseudo(*s)).collect();
        let selection = select_threshold(&pseudo, tail_fraction, min_exceedances)?;
        let fit = fit_gpd(&selection)?;
        let mut sorted_y: Vec<f64> = pseudo.iter().map(|s| -s).collect();
        sorted_y.sort_unstable_by(|a, b| a.total_cmp(b));
        Ok(Self {
            fit,
            domain,
            sorted_y,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.sorted_y.len()
    }

    /// Estimated outage `Pr(SINR < t)`, clipped to [0, 1].
    ///
    /// Exactly zero beyond the support bound of a negative-shape fit;
    /// that is a statement of the fitted model, not of the channel.
    pub fn outage(&self, threshold_sinr: f64) -> f64 {
        if self.domain == TailDomain::Decibel && threshold_sinr <= 0.0 {
            // All fitted samples were positive, so mass below a
            // non-positive threshold is zero by construction.
            return 0.0;
        }
        let y_t = -self.domain.to_pseudo(threshold_sinr);
        let est = if y_t > self.fit.threshold_u {
            self.fit.zeta_u * gpd_survival(y_t - self.fit.threshold_u, self.fit.xi, self.fit.sigma)
        } else {
            let below_or_equal = self.sorted_y.partition_point(|v| *v <= y_t);
            (self.sorted_y.len() - below_or_equal) as f64 / self.sorted_y.len() as f64
        };
        est.clamp(0.0, 1.0)
    }

    /// Largest SINR threshold whose estimated outage stays within
    /// `epsilon`.
    ///
    /// `epsilon = 0` is admissible only for negative-shape fits, whose
    /// outage reaches zero at the fitted support bound.
    pub fn quantile_sinr(&self, epsilon: f64) -> Result<f64> {
        self.pseudo_quantile(epsilon)
            .map(|p| self.domain.from_pseudo(p))
    }

    fn pseudo_quantile(&self, epsilon: f64) -> Result<f64> {
        if epsilon == 0.0 {
            return self
                .fit
                .support_bound_y()
                .map(|y| -y)
                .ok_or_else(|| Error::InvalidArgument(
                    "epsilon = 0 is only resolvable for tails with a finite support bound".into(),
                ));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must lie in [0, 1), got {epsilon}"
            )));
        }
        if epsilon < self.fit.zeta_u {
            let z = gpd_excess_quantile(epsilon / self.fit.zeta_u, self.fit.xi, self.fit.sigma);
            Ok(-(self.fit.threshold_u + z))
        } else {
            let n = self.sorted_y.len();
            let m = (epsilon * n as f64).floor() as usize;
            // y sorted ascending holds -pseudo: the (m+1)-th smallest
            // pseudo-sinr is the (m+1)-th largest y.
            Ok(-self.sorted_y[n - 1 - m.min(n - 1)])
        }
    }
}

/// Common face of the fitted and the purely empirical tail estimators,
/// so downstream consumers (rate allocation, coverage maps) accept
/// either.
pub trait OutageModel {
    /// Estimated outage `Pr(SINR < t)` at a linear SINR threshold.
    fn outage(&self, threshold_sinr: f64) -> f64;
    /// Largest SINR threshold whose estimated outage stays within
    /// `epsilon`.
    fn quantile_sinr(&self, epsilon: f64) -> Result<f64>;
}

impl OutageModel for TailModel {
    fn outage(&self, threshold_sinr: f64) -> f64 {
        TailModel::outage(self, threshold_sinr)
    }

    fn quantile_sinr(&self, epsilon: f64) -> Result<f64> {
        TailModel::quantile_sinr(self, epsilon)
    }
}

impl OutageModel for EmpiricalTail {
    fn outage(&self, threshold_sinr: f64) -> f64 {
        EmpiricalTail::outage(self, threshold_sinr)
    }

    fn quantile_sinr(&self, epsilon: f64) -> Result<f64> {
        EmpiricalTail::quantile_sinr(self, epsilon)
    }
}

/// A plain empirical tail with no extrapolation, for comparison runs
/// and for rate allocation straight from measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalTail {
    sorted_sinr: Vec<f64>,
}

impl EmpiricalTail {
    pub fn new(mut sinr_samples: Vec<f64>) -> Result<Self> {
        if sinr_samples.is_empty() {
            return Err(Error::InsufficientData("no samples".into()));
        }
        sinr_samples.sort_unstable_by(|a, b| a.total_cmp(b));
        Ok(Self {
            sorted_sinr: sinr_samples,
        })
    }

    pub fn outage(&self, threshold_sinr: f64) -> f64 {
        self.sorted_sinr.partition_point(|v| *v < threshold_sinr) as f64
            / self.sorted_sinr.len() as f64
    }

    /// Largest threshold with empirical outage within `epsilon`; errors
    /// below the 1/n resolution of the sample set.
    pub fn quantile_sinr(&self, epsilon: f64) -> Result<f64> {
        let n = self.sorted_sinr.len();
        if !(0.0..1.0).contains(&epsilon) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must lie in [0, 1), got {epsilon}"
            )));
        }
        if epsilon > 0.0 && epsilon < 1.0 / n as f64 {
            return Err(Error::ResolutionLimit {
                min_epsilon: 1.0 / n as f64,
            });
        }
        let m = (epsilon * n as f64).floor() as usize;
        Ok(self.sorted_sinr[m.min(n - 1)])
    }
}
