//! Subcommand implementations: wire config to library calls, write
//! artifacts, return the list of files for the manifest.

use std::fs::File;
use std::path::Path;

use serde::Serialize;

use relcov::allocate::{check_outage_requirements, check_rate_requirements, rate_map};
use relcov::config::RunConfig;
use relcov::dimensioning::{min_bandwidth, run_sweep, study_deployments, DensityDemand};
use relcov::emit::{
    read_measurements_csv, read_measurements_json, write_density_demand_csv, write_json,
    write_outage_map_csv, write_rate_map_csv, write_reliability_map_csv, write_sweep_csv,
};
use relcov::evt::TailModel;
use relcov::evtmap::{
    collect_measurements, fit_tails, outage_map_from_measurements, MeasurementLayout,
    MeasurementSet, OutageMap,
};
use relcov::reliability::{reliability_coverage, reliability_map, ReliabilityMap};
use relcov::scenario::{build_grid, Deployment, EvaluationGrid};
use relcov::sinr::sinr_threshold;
use relcov::{Error, Result};

use crate::gnuplot;

pub struct Ctx<'a> {
    pub cfg: &'a RunConfig,
    pub seed: u64,
    pub out_dir: &'a Path,
    pub gnuplot: bool,
}

impl Ctx<'_> {
    fn create(&self, name: &str) -> Result<File> {
        Ok(File::create(self.out_dir.join(name))?)
    }

    fn write_script(&self, text: String, outputs: &mut Vec<String>) -> Result<()> {
        if self.gnuplot {
            std::fs::write(self.out_dir.join("plot.gp"), text)?;
            outputs.push("plot.gp".into());
        }
        Ok(())
    }

    /// First study deployment: the one a full sweep would evaluate
    /// first under the same seed, so single-map runs and studies see
    /// the same geometry.
    fn deployment(&self) -> Deployment {
        study_deployments(&self.cfg.area, self.cfg.resources.n_aps, 1, self.seed)
            .pop()
            .expect("one deployment requested")
    }
}

#[derive(Serialize)]
struct DimensionArtifact<'a> {
    alpha_star: f64,
    eta_star: f64,
    payload_bits: f64,
    gamma_latency_s: f64,
    bandwidth_lo_hz: f64,
    bandwidth_hi_hz: f64,
    rel_tol: f64,
    demands: &'a [DensityDemand],
}

pub fn dimension(ctx: &Ctx) -> Result<Vec<String>> {
    let cfg = ctx.cfg;
    let densities = match &cfg.sweep {
        Some(spec) => spec.densities.clone(),
        None => vec![cfg.resources.n_aps],
    };
    let mut demands = Vec::with_capacity(densities.len());
    for n_aps in densities {
        let w = min_bandwidth(
            &cfg.area,
            &cfg.resources,
            &cfg.channel,
            &cfg.requirements,
            n_aps,
            (cfg.search.bandwidth_lo_hz, cfg.search.bandwidth_hi_hz),
            cfg.search.rel_tol,
            &cfg.study,
            ctx.seed,
        )?;
        demands.push(DensityDemand {
            n_aps,
            bandwidth_hz: Some(w),
        });
    }

    write_density_demand_csv(ctx.create("density_demand.csv")?, &demands)?;
    write_json(
        ctx.create("dimension.json")?,
        &DimensionArtifact {
            alpha_star: cfg.requirements.alpha_star,
            eta_star: cfg.requirements.eta_star,
            payload_bits: cfg.requirements.payload_bits,
            gamma_latency_s: cfg.requirements.gamma_latency_s,
            bandwidth_lo_hz: cfg.search.bandwidth_lo_hz,
            bandwidth_hi_hz: cfg.search.bandwidth_hi_hz,
            rel_tol: cfg.search.rel_tol,
            demands: &demands,
        },
    )?;
    let mut outputs = vec!["density_demand.csv".into(), "dimension.json".into()];
    ctx.write_script(gnuplot::dimension_script(), &mut outputs)?;
    Ok(outputs)
}

pub fn sweep(ctx: &Ctx) -> Result<Vec<String>> {
    let cfg = ctx.cfg;
    let spec = cfg.sweep.as_ref().ok_or_else(|| {
        Error::InvalidArgument("sweep needs a [sweep] section or a --figure preset".into())
    })?;
    let table = run_sweep(
        &cfg.area,
        &cfg.resources,
        &cfg.channel,
        &cfg.requirements,
        &cfg.study,
        spec,
        ctx.seed,
    )?;
    write_sweep_csv(ctx.create("sweep.csv")?, &table)?;
    write_json(ctx.create("sweep.json")?, &table)?;
    let mut outputs = vec!["sweep.csv".into(), "sweep.json".into()];
    ctx.write_script(gnuplot::sweep_script(&table), &mut outputs)?;
    Ok(outputs)
}

#[derive(Serialize)]
struct RelmapArtifact<'a> {
    threshold_sinr: f64,
    n_trials: usize,
    alpha_star: f64,
    eta: f64,
    map: &'a ReliabilityMap,
}

pub fn relmap(ctx: &Ctx) -> Result<Vec<String>> {
    let cfg = ctx.cfg;
    let grid = build_grid(&cfg.area, cfg.study.grid_spacing_m)?;
    let deployment = ctx.deployment();
    let map = reliability_map(
        &grid,
        &deployment,
        &cfg.resources,
        &cfg.channel,
        &cfg.requirements,
        cfg.study.mode,
        cfg.study.n_trials,
        ctx.seed,
    )?;
    let alpha_star = cfg.requirements.alpha_star;
    let coverage = reliability_coverage(&map, alpha_star);

    // A per-point standard error above half the outage budget means the
    // trial count cannot distinguish covered from uncovered there.
    let budget = 1.0 - alpha_star;
    let wobbly = map
        .estimates
        .iter()
        .filter(|e| e.stderr > 0.5 * budget)
        .count();
    if wobbly > 0 {
        eprintln!(
            "warning: standard error above {:.1e} at {wobbly} of {} points; raise n_trials \
             or use the tail estimator",
            0.5 * budget,
            grid.len()
        );
    }

    write_reliability_map_csv(ctx.create("relmap.csv")?, &map, alpha_star)?;
    write_json(
        ctx.create("relmap.json")?,
        &RelmapArtifact {
            threshold_sinr: map.threshold_sinr,
            n_trials: cfg.study.n_trials,
            alpha_star,
            eta: coverage.eta,
            map: &map,
        },
    )?;
    println!(
        "covered fraction at target {alpha_star}: {:.4} over {} points",
        coverage.eta,
        grid.len()
    );
    let mut outputs = vec!["relmap.csv".into(), "relmap.json".into()];
    ctx.write_script(gnuplot::relmap_script(), &mut outputs)?;
    Ok(outputs)
}

fn load_measurements(path: &Path, grid: &EvaluationGrid) -> Result<MeasurementSet> {
    let file = File::open(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let mut set = if is_csv {
        read_measurements_csv(file)?
    } else {
        read_measurements_json(file)?
    };
    // Locations written and reparsed through text match exactly; the
    // micron tolerance only absorbs foreign formatting.
    set.align_to_grid(grid, 1e-6);
    Ok(set)
}

fn measurements_for(ctx: &Ctx, grid: &EvaluationGrid, path: Option<&Path>, layout: MeasurementLayout) -> Result<MeasurementSet> {
    match path {
        Some(p) => load_measurements(p, grid),
        None => collect_measurements(
            grid,
            layout,
            &ctx.deployment(),
            &ctx.cfg.resources,
            &ctx.cfg.channel,
            ctx.cfg.study.mode,
            ctx.cfg.measurement.n_samples,
            ctx.seed,
        ),
    }
}

#[derive(Serialize)]
struct EvtmapSummary {
    threshold_sinr: f64,
    alpha_star: f64,
    eta: f64,
    measured_locations: usize,
    failed_fits: usize,
}

pub fn evtmap(ctx: &Ctx, measurements: Option<&Path>) -> Result<Vec<String>> {
    let cfg = ctx.cfg;
    let grid = build_grid(&cfg.area, cfg.study.grid_spacing_m)?;
    let set = measurements_for(ctx, &grid, measurements, cfg.measurement.layout)?;
    let threshold = sinr_threshold(
        cfg.requirements.payload_bits,
        cfg.resources.bandwidth_hz,
        cfg.requirements.gamma_latency_s,
    );
    let (map, failed_fits) = outage_map_from_measurements(
        &grid,
        &set,
        threshold,
        &cfg.measurement.tail,
        cfg.measurement.interpolator,
    )?;
    if failed_fits > 0 {
        eprintln!(
            "warning: tail fit failed at {failed_fits} of {} locations; those grid points \
             are interpolated from their neighbours",
            set.len()
        );
    }
    let eta = map.coverage(cfg.requirements.alpha_star);

    write_outage_map_csv(ctx.create("outage_map.csv")?, &map)?;
    write_json(ctx.create("outage_map.json")?, &map)?;
    write_json(
        ctx.create("evtmap_summary.json")?,
        &EvtmapSummary {
            threshold_sinr: threshold,
            alpha_star: cfg.requirements.alpha_star,
            eta,
            measured_locations: set.len(),
            failed_fits,
        },
    )?;
    println!(
        "covered fraction at target {}: {eta:.4} over {} points",
        cfg.requirements.alpha_star,
        grid.len()
    );
    let mut outputs = vec![
        "outage_map.csv".into(),
        "outage_map.json".into(),
        "evtmap_summary.json".into(),
    ];
    ctx.write_script(gnuplot::evtmap_script(), &mut outputs)?;
    Ok(outputs)
}

#[derive(Serialize)]
struct VerdictRecord {
    source: &'static str,
    met: bool,
    eta: f64,
    eta_star: f64,
    alpha_star: f64,
    epsilon: f64,
    payload_bits: f64,
    gamma_latency_s: f64,
    bandwidth_hz: f64,
    demand_bps: f64,
    /// Coverage of the emitted map when a discrete rate alphabet is
    /// configured; rounding down can only lose coverage, never gain it.
    eta_quantized: Option<f64>,
    error_radius_m: f64,
}

/// Orders fitted models by grid point, requiring full grid coverage.
fn models_per_grid_point(
    set: &MeasurementSet,
    models: Vec<TailModel>,
    grid_len: usize,
) -> Result<Vec<TailModel>> {
    let mut slots: Vec<Option<TailModel>> = (0..grid_len).map(|_| None).collect();
    let mut placed = 0usize;
    for (i, model) in models.into_iter().enumerate() {
        if let Some(g) = set.grid_index[i] {
            if slots[g].is_none() {
                placed += 1;
            }
            slots[g] = Some(model);
        }
    }
    if placed != grid_len {
        return Err(Error::InvalidArgument(format!(
            "rate allocation needs a trace at every grid point; have {placed} of {grid_len} \
             (use a full-grid measurement layout)"
        )));
    }
    Ok(slots.into_iter().map(|m| m.expect("all slots placed")).collect())
}

pub fn allocate(
    ctx: &Ctx,
    measurements: Option<&Path>,
    outage_map: Option<&Path>,
) -> Result<Vec<String>> {
    let cfg = ctx.cfg;
    let req = &cfg.requirements;
    let demand_bps = req.payload_bits / req.gamma_latency_s;

    if let Some(path) = outage_map {
        // A single-threshold map carries no quantile information, so the
        // verdict is the only artifact it supports.
        let file = File::open(path).map_err(|e| {
            Error::InvalidArgument(format!("cannot read {}: {e}", path.display()))
        })?;
        let map: OutageMap = serde_json::from_reader(file).map_err(|e| {
            Error::InvalidArgument(format!("{} is not an outage map: {e}", path.display()))
        })?;
        let check = check_outage_requirements(&map, req)?;
        write_json(
            ctx.create("verdict.json")?,
            &VerdictRecord {
                source: "outage_map",
                met: check.met,
                eta: check.eta,
                eta_star: check.eta_star,
                alpha_star: req.alpha_star,
                epsilon: 1.0 - req.alpha_star,
                payload_bits: req.payload_bits,
                gamma_latency_s: req.gamma_latency_s,
                bandwidth_hz: cfg.resources.bandwidth_hz,
                demand_bps,
                eta_quantized: None,
                error_radius_m: cfg.allocation.error_radius_m,
            },
        )?;
        println!(
            "verdict: eta {:.4} vs target {} -> {}",
            check.eta,
            check.eta_star,
            if check.met { "pass" } else { "fail" }
        );
        return Ok(vec!["verdict.json".into()]);
    }

    let epsilon = cfg.allocation_epsilon();
    let implied = 1.0 - req.alpha_star;
    if (epsilon - implied).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "allocation.epsilon = {epsilon} but the verdict against alpha_star = {} needs \
             the budget {implied}; drop the override or change alpha_star",
            req.alpha_star
        )));
    }

    let grid = build_grid(&cfg.area, cfg.study.grid_spacing_m)?;
    // Rate selection needs a quantile function at every grid point, so
    // the simulated campaign is always full grid here.
    let set = measurements_for(ctx, &grid, measurements, MeasurementLayout::FullGrid)?;
    let models = fit_tails(
        &set,
        cfg.measurement.tail.domain,
        cfg.measurement.tail.tail_fraction,
        cfg.measurement.tail.min_exceedances,
    )?;
    let models = models_per_grid_point(&set, models, grid.len())?;
    let mut map = rate_map(&grid, &models, epsilon, cfg.resources.bandwidth_hz)?;
    let check = check_rate_requirements(&map, req)?;

    let eta_quantized = match &cfg.allocation.rate_levels_bps {
        Some(levels) => {
            map.quantize(levels)?;
            Some(map.fraction_at_least(demand_bps))
        }
        None => None,
    };

    write_rate_map_csv(ctx.create("rate_map.csv")?, &map)?;
    write_json(ctx.create("rate_map.json")?, &map)?;
    let mut outputs = vec!["rate_map.csv".into(), "rate_map.json".into()];

    if cfg.allocation.error_radius_m > 0.0 {
        // Worst case over the localization disk around each grid point.
        let conservative = relcov::allocate::RateMap {
            grid: map.grid.clone(),
            epsilon: map.epsilon,
            bandwidth_hz: map.bandwidth_hz,
            rates_bps: map
                .grid
                .points
                .iter()
                .map(|p| map.conservative_rate(p, cfg.allocation.error_radius_m))
                .collect(),
        };
        write_rate_map_csv(ctx.create("rate_map_conservative.csv")?, &conservative)?;
        outputs.push("rate_map_conservative.csv".into());
    }

    write_json(
        ctx.create("verdict.json")?,
        &VerdictRecord {
            source: if measurements.is_some() {
                "measurements"
            } else {
                "simulated"
            },
            met: check.met,
            eta: check.eta,
            eta_star: check.eta_star,
            alpha_star: req.alpha_star,
            epsilon,
            payload_bits: req.payload_bits,
            gamma_latency_s: req.gamma_latency_s,
            bandwidth_hz: cfg.resources.bandwidth_hz,
            demand_bps,
            eta_quantized,
            error_radius_m: cfg.allocation.error_radius_m,
        },
    )?;
    outputs.push("verdict.json".into());
    println!(
        "verdict: eta {:.4} vs target {} -> {}",
        check.eta,
        check.eta_star,
        if check.met { "pass" } else { "fail" }
    );
    ctx.write_script(gnuplot::allocate_script(), &mut outputs)?;
    Ok(outputs)
}
