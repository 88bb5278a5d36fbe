//! Outage maps: per-location tail fits interpolated over the grid.
//!
//! Measurement traces are SINR sample sets collected at chosen
//! locations, here produced by the simulator itself with the same seed
//! schedule as the reliability estimators. Each trace gets a tail fit,
//! the fitted outage at the queried threshold is evaluated, and grid
//! points without measurements are filled in by interpolating in the
//! log10-outage domain.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::evt::{TailDomain, TailModel};
use crate::exec;
use crate::scenario::{Deployment, EvaluationGrid, Location, ResourceConfig};
use crate::seeding::{derive_seed, STREAM_MEASUREMENT, STREAM_POINT};
use crate::sinr::{LargeScaleMode, SinrSampler};

/// Outage values are floored here before taking logs, so a fitted tail
/// that reaches exactly zero stays finite in the interpolation domain.
pub const OUTAGE_LOG_FLOOR: f64 = 1e-15;

/// Which locations receive measurement traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementLayout {
    /// Every grid point.
    FullGrid,
    /// Every `stride`-th grid row and column.
    Subgrid { stride: usize },
    /// `count` locations drawn uniformly over the area, off-grid.
    Random { count: usize },
}

/// SINR traces at known locations.
///
/// `grid_index[i]` is the evaluation grid point that measurement `i`
/// sits on, if any; grid-aligned measurements reuse the grid point's
/// random stream, so a trace replays exactly the trials a reliability
/// estimate at that point would consume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSet {
    pub locations: Vec<Location>,
    pub traces: Vec<Vec<f64>>,
    pub grid_index: Vec<Option<usize>>,
}

/// Smallest per-location trace the map pipeline accepts by default.
pub const DEFAULT_MIN_TRACE_SAMPLES: usize = 2_000;

impl MeasurementSet {
    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    /// Checks trace sizes and sample sanity before fitting.
    pub fn validate(&self, min_trace_samples: usize) -> Result<()> {
        if self.is_empty() {
            return Err(Error::InsufficientData("no measurement locations".into()));
        }
        if self.locations.len() != self.traces.len()
            || self.locations.len() != self.grid_index.len()
        {
            return Err(Error::InvalidArgument(
                "measurement set arrays disagree in length".into(),
            ));
        }
        for (i, trace) in self.traces.iter().enumerate() {
            if trace.len() < min_trace_samples {
                return Err(Error::InsufficientData(format!(
                    "trace {i} holds {} samples, need at least {min_trace_samples}",
                    trace.len()
                )));
            }
            if trace.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
                return Err(Error::InvalidArgument(format!(
                    "trace {i} holds a negative or non-finite SINR sample"
                )));
            }
        }
        Ok(())
    }

    /// Marks measurements sitting on grid points (within `tol_m`) so
    /// externally ingested campaigns get measured-point provenance.
    pub fn align_to_grid(&mut self, grid: &EvaluationGrid, tol_m: f64) {
        for (loc, slot) in self.locations.iter().zip(self.grid_index.iter_mut()) {
            *slot = grid
                .points
                .iter()
                .position(|p| loc.distance_2d(p) <= tol_m);
        }
    }
}

/// Simulates measurement traces for the chosen layout.
pub fn collect_measurements(
    grid: &EvaluationGrid,
    layout: MeasurementLayout,
    deployment: &Deployment,
    config: &ResourceConfig,
    params: &ChannelParams,
    mode: LargeScaleMode,
    n_samples: usize,
    master_seed: u64,
) -> Result<MeasurementSet> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be positive".into()));
    }
    let (locations, grid_index): (Vec<Location>, Vec<Option<usize>>) = match layout {
        MeasurementLayout::FullGrid => (
            grid.points.clone(),
            (0..grid.len()).map(Some).collect(),
        ),
        MeasurementLayout::Subgrid { stride } => {
            if stride == 0 {
                return Err(Error::InvalidArgument("subgrid stride must be positive".into()));
            }
            let mut locs = Vec::new();
            let mut idx = Vec::new();
            for j in (0..grid.ny).step_by(stride) {
                for i in (0..grid.nx).step_by(stride) {
                    let g = j * grid.nx + i;
                    locs.push(grid.points[g]);
                    idx.push(Some(g));
                }
            }
            (locs, idx)
        }
        MeasurementLayout::Random { count } => {
            if count == 0 {
                return Err(Error::InvalidArgument(
                    "random layout needs at least one location".into(),
                ));
            }
            let width = grid.nx as f64 * grid.spacing_m;
            let height = grid.ny as f64 * grid.spacing_m;
            let mut rng = crate::seeding::stream(derive_seed(
                master_seed,
                &[STREAM_MEASUREMENT, u64::MAX],
            ));
            use rand::Rng;
            let locs: Vec<Location> = (0..count)
                .map(|_| {
                    Location::new(rng.gen::<f64>() * width, rng.gen::<f64>() * height)
                })
                .collect();
            (locs, vec![None; count])
        }
    };

    let traces = exec::map_indexed(locations.len(), |i| {
        let seed = match grid_index[i] {
            Some(g) => derive_seed(master_seed, &[STREAM_POINT, g as u64]),
            None => derive_seed(master_seed, &[STREAM_MEASUREMENT, i as u64]),
        };
        SinrSampler::for_location(&locations[i], deployment, config, params, mode, seed)
            .sample_n(n_samples)
    });

    Ok(MeasurementSet {
        locations,
        traces,
        grid_index,
    })
}

/// Fits a tail model to every trace, failing on the first bad trace.
///
/// Rate allocation needs a model at every point, so this is the strict
/// variant; map building tolerates failed fits via
/// [`outage_map_from_measurements`].
pub fn fit_tails(
    set: &MeasurementSet,
    domain: TailDomain,
    tail_fraction: f64,
    min_exceedances: usize,
) -> Result<Vec<TailModel>> {
    if set.is_empty() {
        return Err(Error::InsufficientData("no measurement locations".into()));
    }
    let fitted = exec::map_indexed(set.len(), |i| {
        TailModel::fit_in(&set.traces[i], domain, tail_fraction, min_exceedances)
    });
    fitted.into_iter().collect()
}

/// Whether a map value was measured at that point or interpolated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Measured,
    Interpolated,
}

/// Spatial interpolator for log-outage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Interpolator {
    /// Inverse-distance weighting: a convex combination of the
    /// `neighbors` nearest measured values with weights `1/d^power`.
    Idw { power: f64, neighbors: usize },
    /// Kernel regression with a squared-exponential kernel; the length
    /// scale is picked by marginal likelihood on the measured values.
    Kernel,
}

impl Default for Interpolator {
    fn default() -> Self {
        Interpolator::Idw {
            power: 2.0,
            neighbors: 8,
        }
    }
}

/// Estimated outage at one SINR threshold over the whole grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutageMap {
    pub grid: EvaluationGrid,
    pub threshold_sinr: f64,
    pub outage: Vec<f64>,
    pub log10_outage: Vec<f64>,
    pub provenance: Vec<Provenance>,
}

impl OutageMap {
    /// Fraction of grid points whose outage stays within `1 - alpha_star`.
    pub fn coverage(&self, alpha_star: f64) -> f64 {
        let target = 1.0 - alpha_star;
        self.outage.iter().filter(|&&o| o <= target).count() as f64 / self.outage.len() as f64
    }
}

fn idw_interpolate(
    target: &Location,
    sources: &[Location],
    values: &[f64],
    power: f64,
    neighbors: usize,
) -> f64 {
    // Nearest-k by linear scan; measurement sets are small enough that
    // an index structure would not pay for itself.
    let k = neighbors.min(sources.len());
    let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
    for (i, s) in sources.iter().enumerate() {
        let d2 = (target.x_m - s.x_m).powi(2) + (target.y_m - s.y_m).powi(2);
        if best.len() < k {
            best.push((d2, i));
            best.sort_by(|a, b| a.0.total_cmp(&b.0));
        } else if d2 < best[k - 1].0 {
            best[k - 1] = (d2, i);
            best.sort_by(|a, b| a.0.total_cmp(&b.0));
        }
    }
    if best[0].0 < 1e-18 {
        return values[best[0].1];
    }
    let mut wsum = 0.0;
    let mut acc = 0.0;
    for &(d2, i) in &best {
        let w = d2.powf(-power / 2.0);
        wsum += w;
        acc += w * values[i];
    }
    acc / wsum
}

/// Dense Cholesky factorization in place; returns false if the matrix
/// is not positive definite.
fn cholesky(a: &mut [f64], n: usize) -> bool {
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= a[i * n + k] * a[j * n + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return false;
                }
                a[i * n + j] = sum.sqrt();
            } else {
                a[i * n + j] = sum / a[j * n + j];
            }
        }
    }
    true
}

fn cholesky_solve(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * n + k] * b[k];
        }
        b[i] = sum / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut sum = b[i];
        for k in (i + 1)..n {
            sum -= l[k * n + i] * b[k];
        }
        b[i] = sum / l[i * n + i];
    }
}

const KERNEL_MAX_POINTS: usize = 2000;

struct KernelRegressor {
    sources: Vec<Location>,
    alpha: Vec<f64>,
    length_scale: f64,
    mean: f64,
    signal_var: f64,
}

impl KernelRegressor {
    fn fit(sources: &[Location], values: &[f64], spacing_hint: f64) -> Result<Self> {
        let m = sources.len();
        if m > KERNEL_MAX_POINTS {
            return Err(Error::InvalidArgument(format!(
                "kernel interpolation supports at most {KERNEL_MAX_POINTS} measurement \
                 points, got {m}; use the inverse-distance interpolator for dense campaigns"
            )));
        }
        let mean = values.iter().sum::<f64>() / m as f64;
        let centered: Vec<f64> = values.iter().map(|v| v - mean).collect();
        let signal_var = centered.iter().map(|v| v * v).sum::<f64>() / m as f64;
        if signal_var == 0.0 {
            return Ok(Self {
                sources: sources.to_vec(),
                alpha: vec![0.0; m],
                length_scale: spacing_hint.max(1.0),
                mean,
                signal_var: 0.0,
            });
        }
        let max_d = {
            let (mut lo_x, mut hi_x) = (f64::MAX, f64::MIN);
            let (mut lo_y, mut hi_y) = (f64::MAX, f64::MIN);
            for s in sources {
                lo_x = lo_x.min(s.x_m);
                hi_x = hi_x.max(s.x_m);
                lo_y = lo_y.min(s.y_m);
                hi_y = hi_y.max(s.y_m);
            }
            (hi_x - lo_x).hypot(hi_y - lo_y).max(spacing_hint)
        };
        let nugget = (1e-6 * signal_var).max(1e-12);

        let mut best: Option<(f64, f64, Vec<f64>)> = None; // (loglik, ell, alpha)
        let lo = (spacing_hint * 0.5).max(max_d * 1e-3);
        let candidates = 12;
        for c in 0..candidates {
            let ell = lo * (max_d / lo).powf(c as f64 / (candidates - 1) as f64);
            let mut k = vec![0.0; m * m];
            for i in 0..m {
                for j in 0..=i {
                    let d2 = (sources[i].x_m - sources[j].x_m).powi(2)
                        + (sources[i].y_m - sources[j].y_m).powi(2);
                    let mut v = signal_var * (-d2 / (2.0 * ell * ell)).exp();
                    if i == j {
                        v += nugget;
                    }
                    k[i * m + j] = v;
                    k[j * m + i] = v;
                }
            }
            if !cholesky(&mut k, m) {
                continue;
            }
            let mut alpha = centered.clone();
            cholesky_solve(&k, m, &mut alpha);
            let data_fit: f64 = centered.iter().zip(&alpha).map(|(y, a)| y * a).sum();
            let log_det: f64 = (0..m).map(|i| k[i * m + i].ln()).sum::<f64>() * 2.0;
            let loglik = -0.5 * data_fit - 0.5 * log_det;
            if best.as_ref().map_or(true, |(b, _, _)| loglik > *b) {
                best = Some((loglik, ell, alpha));
            }
        }
        let (_, length_scale, alpha) = best.ok_or_else(|| {
            Error::Numeric("kernel matrix never factorized; measurements may be duplicated".into())
        })?;
        Ok(Self {
            sources: sources.to_vec(),
            alpha,
            length_scale,
            mean,
            signal_var,
        })
    }

    fn predict(&self, target: &Location) -> f64 {
        if self.signal_var == 0.0 {
            return self.mean;
        }
        let mut acc = 0.0;
        for (s, a) in self.sources.iter().zip(&self.alpha) {
            let d2 = (target.x_m - s.x_m).powi(2) + (target.y_m - s.y_m).powi(2);
            acc += self.signal_var * (-d2 / (2.0 * self.length_scale * self.length_scale)).exp() * a;
        }
        self.mean + acc
    }
}

/// Builds the outage map at one SINR threshold from fitted tails.
///
/// `models` must align with `set`. Grid points carrying a measurement
/// keep their fitted value and are flagged `Measured`; the rest are
/// interpolated in log10-outage.
pub fn build_outage_map(
    grid: &EvaluationGrid,
    set: &MeasurementSet,
    models: &[TailModel],
    threshold_sinr: f64,
    interpolator: Interpolator,
) -> Result<OutageMap> {
    if set.len() != models.len() {
        return Err(Error::InvalidArgument(format!(
            "{} measurements but {} tail models",
            set.len(),
            models.len()
        )));
    }
    if set.is_empty() {
        return Err(Error::InsufficientData("no measurements to map".into()));
    }
    let measured_raw: Vec<f64> = models
        .iter()
        .map(|m| m.outage(threshold_sinr).max(OUTAGE_LOG_FLOOR))
        .collect();
    let measured_log: Vec<f64> = measured_raw.iter().map(|o| o.log10()).collect();

    let mut log10_outage = vec![f64::NAN; grid.len()];
    let mut provenance = vec![Provenance::Interpolated; grid.len()];
    for (i, gi) in set.grid_index.iter().enumerate() {
        if let Some(g) = gi {
            log10_outage[*g] = measured_log[i];
            provenance[*g] = Provenance::Measured;
        }
    }

    let kernel = match interpolator {
        Interpolator::Kernel => Some(KernelRegressor::fit(
            &set.locations,
            &measured_log,
            grid.spacing_m,
        )?),
        Interpolator::Idw { power, neighbors } => {
            if !(power > 0.0) || neighbors == 0 {
                return Err(Error::InvalidArgument(
                    "inverse-distance interpolation needs positive power and neighbors".into(),
                ));
            }
            None
        }
    };

    let filled = exec::map_indexed(grid.len(), |g| {
        if provenance[g] == Provenance::Measured {
            return log10_outage[g];
        }
        match (&interpolator, &kernel) {
            (Interpolator::Idw { power, neighbors }, _) => idw_interpolate(
                &grid.points[g],
                &set.locations,
                &measured_log,
                *power,
                *neighbors,
            ),
            (Interpolator::Kernel, Some(k)) => k.predict(&grid.points[g]),
            (Interpolator::Kernel, None) => unreachable!(),
        }
    });

    // Measured points keep the fitted value verbatim; only filled-in
    // points go through the exponentiation round trip.
    let mut outage: Vec<f64> = filled.iter().map(|l| 10f64.powf(*l).clamp(0.0, 1.0)).collect();
    for (i, gi) in set.grid_index.iter().enumerate() {
        if let Some(g) = gi {
            outage[*g] = measured_raw[i];
        }
    }
    Ok(OutageMap {
        grid: grid.clone(),
        threshold_sinr,
        outage,
        log10_outage: filled,
        provenance,
    })
}

/// Fit knobs for the measurement-to-map pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TailFitConfig {
    pub domain: TailDomain,
    pub tail_fraction: f64,
    pub min_exceedances: usize,
    pub min_trace_samples: usize,
}

impl Default for TailFitConfig {
    fn default() -> Self {
        Self {
            domain: TailDomain::Decibel,
            tail_fraction: crate::evt::DEFAULT_TAIL_FRACTION,
            min_exceedances: crate::evt::DEFAULT_MIN_EXCEEDANCES,
            min_trace_samples: DEFAULT_MIN_TRACE_SAMPLES,
        }
    }
}

/// Full measurement-to-map pipeline, tolerant of per-location fit
/// failures.
///
/// Locations whose fit fails contribute nothing to interpolation and
/// their grid points stay flagged `Interpolated`; the failure count is
/// returned alongside the map. Only a fully failed campaign errors.
pub fn outage_map_from_measurements(
    grid: &EvaluationGrid,
    set: &MeasurementSet,
    threshold_sinr: f64,
    fit_cfg: &TailFitConfig,
    interpolator: Interpolator,
) -> Result<(OutageMap, usize)> {
    set.validate(fit_cfg.min_trace_samples)?;
    let fitted: Vec<Option<TailModel>> = exec::map_indexed(set.len(), |i| {
        TailModel::fit_in(
            &set.traces[i],
            fit_cfg.domain,
            fit_cfg.tail_fraction,
            fit_cfg.min_exceedances,
        )
        .ok()
    });
    let n_failed = fitted.iter().filter(|f| f.is_none()).count();
    if n_failed == set.len() {
        return Err(Error::FitFailed(
            "every measurement location failed to fit".into(),
        ));
    }
    let mut kept = MeasurementSet {
        locations: Vec::new(),
        traces: Vec::new(),
        grid_index: Vec::new(),
    };
    let mut models = Vec::new();
    for (i, fit) in fitted.into_iter().enumerate() {
        if let Some(model) = fit {
            kept.locations.push(set.locations[i]);
            kept.traces.push(Vec::new());
            kept.grid_index.push(set.grid_index[i]);
            models.push(model);
        }
    }
    let map = build_outage_map(grid, &kept, &models, threshold_sinr, interpolator)?;
    Ok((map, n_failed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{build_grid, generate_bpp_deployment, ServiceArea};

    fn inputs() -> (
        EvaluationGrid,
        Deployment,
        ResourceConfig,
        ChannelParams,
    ) {
        let area = ServiceArea::new(200.0, 200.0).unwrap();
        let grid = build_grid(&area, 20.0).unwrap(); // 10x10
        let dep = generate_bpp_deployment(&area, 5, 42);
        (grid, dep, ResourceConfig::default(), ChannelParams::default())
    }

    #[test]
    fn layouts_pick_the_documented_locations() {
        let (grid, dep, cfg, params) = inputs();
        let full = collect_measurements(
            &grid,
            MeasurementLayout::FullGrid,
            &dep,
            &cfg,
            &params,
            LargeScaleMode::Ergodic,
            10,
            1,
        )
        .unwrap();
        assert_eq!(full.len(), 100);
        assert!(full.grid_index.iter().all(|g| g.is_some()));

        let sub = collect_measurements(
            &grid,
            MeasurementLayout::Subgrid { stride: 2 },
            &dep,
            &cfg,
            &params,
            LargeScaleMode::Ergodic,
            10,
            1,
        )
        .unwrap();
        assert_eq!(sub.len(), 25);
        assert_eq!(sub.grid_index[1], Some(2));

        let rnd = collect_measurements(
            &grid,
            MeasurementLayout::Random { count: 17 },
            &dep,
            &cfg,
            &params,
            LargeScaleMode::Ergodic,
            10,
            1,
        )
        .unwrap();
        assert_eq!(rnd.len(), 17);
        assert!(rnd.grid_index.iter().all(|g| g.is_none()));
        let rnd2 = collect_measurements(
            &grid,
            MeasurementLayout::Random { count: 17 },
            &dep,
            &cfg,
            &params,
            LargeScaleMode::Ergodic,
            10,
            1,
        )
        .unwrap();
        assert_eq!(rnd, rnd2);
    }

    #[test]
    fn grid_aligned_traces_replay_the_grid_point_stream() {
        let (grid, dep, cfg, params) = inputs();
        let set = collect_measurements(
            &grid,
            MeasurementLayout::FullGrid,
            &dep,
            &cfg,
            &params,
            LargeScaleMode::Ergodic,
            50,
            9,
        )
        .unwrap();
        let direct = SinrSampler::for_location(
            &grid.points[7],
            &dep,
            &cfg,
            &params,
            LargeScaleMode::Ergodic,
            derive_seed(9, &[STREAM_POINT, 7]),
        )
        .sample_n(50);
        assert_eq!(set.traces[7], direct);
    }

    fn synthetic_set(grid: &EvaluationGrid, picks: &[usize], seed: u64) -> (MeasurementSet, Vec<TailModel>) {
        // Exponential SINR with location-dependent mean gives a smooth
        // outage field without running the full simulator.
        use rand_distr::{Distribution, Exp1};
        let mut locations = Vec::new();
        let mut traces = Vec::new();
        let mut grid_index = Vec::new();
        for &g in picks {
            let p = grid.points[g];
            let mean = 5.0 + (p.x_m + p.y_m) / 40.0;
            let mut rng = crate::seeding::stream(seed ^ g as u64);
            let trace: Vec<f64> = (0..4000)
                .map(|_| {
                    let e: f64 = Exp1.sample(&mut rng);
                    mean * e
                })
                .collect();
            locations.push(p);
            traces.push(trace);
            grid_index.push(Some(g));
        }
        let set = MeasurementSet {
            locations,
            traces,
            grid_index,
        };
        let models = fit_tails(&set, TailDomain::Linear, 0.05, 50).unwrap();
        (set, models)
    }

    #[test]
    fn full_coverage_measurements_interpolate_nothing() {
        let (grid, ..) = inputs();
        let picks: Vec<usize> = (0..grid.len()).collect();
        let (set, models) = synthetic_set(&grid, &picks, 3);
        let map = build_outage_map(&grid, &set, &models, 0.05, Interpolator::default()).unwrap();
        assert!(map.provenance.iter().all(|p| *p == Provenance::Measured));
        for (i, model) in models.iter().enumerate() {
            assert_eq!(map.outage[i], model.outage(0.05).max(OUTAGE_LOG_FLOOR));
        }
    }

    #[test]
    fn single_measurement_paints_a_constant_map() {
        let (grid, ..) = inputs();
        let (set, models) = synthetic_set(&grid, &[55], 4);
        let map = build_outage_map(&grid, &set, &models, 0.05, Interpolator::default()).unwrap();
        let v = map.log10_outage[55];
        assert!(map.log10_outage.iter().all(|l| (l - v).abs() < 1e-12));
        assert_eq!(
            map.provenance.iter().filter(|p| **p == Provenance::Measured).count(),
            1
        );
    }

    #[test]
    fn interpolated_values_stay_inside_the_measured_range() {
        let (grid, ..) = inputs();
        let picks = [0, 3, 9, 33, 47, 61, 78, 90, 99, 12, 84];
        let (set, models) = synthetic_set(&grid, &picks, 5);
        let map = build_outage_map(&grid, &set, &models, 0.05, Interpolator::default()).unwrap();
        let measured: Vec<f64> = picks.iter().map(|&g| map.log10_outage[g]).collect();
        let lo = measured.iter().cloned().fold(f64::MAX, f64::min);
        let hi = measured.iter().cloned().fold(f64::MIN, f64::max);
        for (g, l) in map.log10_outage.iter().enumerate() {
            assert!(
                *l >= lo - 1e-12 && *l <= hi + 1e-12,
                "point {g}: {l} outside [{lo}, {hi}]"
            );
        }
    }

    #[test]
    fn kernel_mode_reproduces_measured_points_and_stays_finite() {
        let (grid, ..) = inputs();
        let picks = [0, 9, 90, 99, 44, 23, 67];
        let (set, models) = synthetic_set(&grid, &picks, 6);
        let map = build_outage_map(&grid, &set, &models, 0.05, Interpolator::Kernel).unwrap();
        assert!(map.log10_outage.iter().all(|l| l.is_finite()));
        for &g in &picks {
            assert_eq!(map.provenance[g], Provenance::Measured);
        }
        // Interpolation must follow the field's broad gradient: outage
        // shrinks towards the high-mean corner.
        assert!(map.log10_outage[0] > map.log10_outage[99]);
    }

    #[test]
    fn coverage_counts_outage_within_budget() {
        let (grid, ..) = inputs();
        let picks: Vec<usize> = (0..grid.len()).collect();
        let (set, models) = synthetic_set(&grid, &picks, 7);
        let map = build_outage_map(&grid, &set, &models, 0.05, Interpolator::default()).unwrap();
        assert_eq!(map.coverage(0.0), 1.0);
        let eta = map.coverage(0.999);
        let manual = map.outage.iter().filter(|&&o| o <= 1e-3).count() as f64
            / map.outage.len() as f64;
        assert_eq!(eta, manual);
        assert!(map.coverage(0.9) >= map.coverage(0.999));
    }

    #[test]
    fn failed_fits_fall_back_to_interpolation_and_are_counted() {
        let (grid, ..) = inputs();
        let picks = [5, 27, 50, 72, 95];
        let (mut set, _) = synthetic_set(&grid, &picks, 9);
        // A constant trace cannot be fitted: its exceedance set is
        // degenerate.
        set.traces[2] = vec![1.0; 4000];
        let fit_cfg = TailFitConfig::default();
        let (map, n_failed) =
            outage_map_from_measurements(&grid, &set, 0.05, &fit_cfg, Interpolator::default())
                .unwrap();
        assert_eq!(n_failed, 1);
        assert_eq!(map.provenance[50], Provenance::Interpolated);
        assert_eq!(
            map.provenance.iter().filter(|p| **p == Provenance::Measured).count(),
            4
        );
        assert!(map.log10_outage.iter().all(|l| l.is_finite()));

        set.traces = vec![vec![1.0; 4000]; picks.len()];
        assert!(outage_map_from_measurements(
            &grid,
            &set,
            0.05,
            &fit_cfg,
            Interpolator::default()
        )
        .is_err());
    }

    #[test]
    fn validation_guards_trace_size_and_sample_sanity() {
        let (grid, ..) = inputs();
        let (mut set, _) = synthetic_set(&grid, &[1, 2], 10);
        assert!(set.validate(2000).is_ok());
        assert!(set.validate(4001).is_err());
        set.traces[0][7] = -1.0;
        assert!(set.validate(2000).is_err());
    }

    #[test]
    fn external_campaigns_align_to_the_grid_by_distance() {
        let (grid, ..) = inputs();
        let mut set = MeasurementSet {
            locations: vec![
                grid.points[3],
                Location::new(grid.points[42].x_m + 0.2, grid.points[42].y_m - 0.1),
                Location::new(5.0, 3.0),
            ],
            traces: vec![vec![1.0]; 3],
            grid_index: vec![None; 3],
        };
        set.align_to_grid(&grid, 0.5);
        assert_eq!(set.grid_index, vec![Some(3), Some(42), None]);
    }

    #[test]
    fn mismatched_models_are_rejected() {
        let (grid, ..) = inputs();
        let (set, models) = synthetic_set(&grid, &[1, 2, 3], 8);
        assert!(build_outage_map(&grid, &set, &models[..2], 0.05, Interpolator::default()).is_err());
    }
}
