//! File emitters and readers: CSV for flat tables and maps, JSON for
//! structured results.
//!
//! Column layouts are part of the tool's external contract and are
//! pinned by tests; change them deliberately.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::allocate::RateMap;
use crate::dimensioning::{DensityDemand, SweepTable};
use crate::error::{Error, Result};
use crate::evtmap::{MeasurementSet, OutageMap, Provenance};
use crate::reliability::ReliabilityMap;
use crate::scenario::Location;

/// Any serializable result as pretty JSON.
pub fn write_json<W: Write, T: Serialize>(mut out: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)
        .map_err(|e| Error::Numeric(format!("json serialization failed: {e}")))?;
    out.write_all(b"\n")?;
    Ok(())
}

#[derive(Serialize)]
struct ReliabilityRow {
    x_m: f64,
    y_m: f64,
    alpha_hat: f64,
    stderr: f64,
    covered: u8,
    log10_outage: f64,
}

/// Reliability map rows with the coverage mask at `alpha_star`.
///
/// `log10_outage` is log10(1 - alpha_hat), floored at the map's
/// resolution (one failure among the trials) so an all-success point
/// stays finite for plotting.
pub fn write_reliability_map_csv<W: Write>(
    out: W,
    map: &ReliabilityMap,
    alpha_star: f64,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (p, est) in map.grid.points.iter().zip(&map.estimates) {
        let floor = 1.0 / est.n_trials.max(1) as f64;
        w.serialize(ReliabilityRow {
            x_m: p.x_m,
            y_m: p.y_m,
            alpha_hat: est.alpha_hat,
            stderr: est.stderr,
            covered: u8::from(est.alpha_hat >= alpha_star),
            log10_outage: (1.0 - est.alpha_hat).max(floor).log10(),
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct OutageRow {
    x_m: f64,
    y_m: f64,
    outage: f64,
    log10_outage: f64,
    provenance: &'static str,
}

pub fn write_outage_map_csv<W: Write>(out: W, map: &OutageMap) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for i in 0..map.grid.len() {
        let p = &map.grid.points[i];
        w.serialize(OutageRow {
            x_m: p.x_m,
            y_m: p.y_m,
            outage: map.outage[i],
            log10_outage: map.log10_outage[i],
            provenance: match map.provenance[i] {
                Provenance::Measured => "measured",
                Provenance::Interpolated => "interpolated",
            },
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct RateRow {
    x_m: f64,
    y_m: f64,
    rate_bps: f64,
}

pub fn write_rate_map_csv<W: Write>(out: W, map: &RateMap) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (p, r) in map.grid.points.iter().zip(&map.rates_bps) {
        w.serialize(RateRow {
            x_m: p.x_m,
            y_m: p.y_m,
            rate_bps: *r,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct SweepRow {
    bandwidth_hz: f64,
    n_aps: usize,
    alpha_star: f64,
    mean_eta: f64,
    spread: f64,
    min_eta: f64,
    max_eta: f64,
    n_deployments: usize,
}

/// Sweep summary, one row per cell. Per-deployment detail stays in the
/// JSON emitter.
pub fn write_sweep_csv<W: Write>(out: W, table: &SweepTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for cell in &table.cells {
        w.serialize(SweepRow {
            bandwidth_hz: cell.bandwidth_hz,
            n_aps: cell.n_aps,
            alpha_star: cell.alpha_star,
            mean_eta: cell.mean_eta,
            spread: cell.spread,
            min_eta: cell.etas.iter().cloned().fold(f64::MAX, f64::min),
            max_eta: cell.etas.iter().cloned().fold(f64::MIN, f64::max),
            n_deployments: cell.etas.len(),
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct DemandRow {
    n_aps: usize,
    /// Empty when the probe was not attained within the sweep range.
    bandwidth_hz: Option<f64>,
}

pub fn write_density_demand_csv<W: Write>(out: W, demands: &[DensityDemand]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for d in demands {
        w.serialize(DemandRow {
            n_aps: d.n_aps,
            bandwidth_hz: d.bandwidth_hz,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct MeasurementRow {
    x: f64,
    y: f64,
    sinr_linear: f64,
}

/// Long-form measurement export: one row per sample, columns
/// `x,y,sinr_linear` in meters and linear SINR.
pub fn write_measurements_csv<W: Write>(out: W, set: &MeasurementSet) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (loc, trace) in set.locations.iter().zip(&set.traces) {
        for s in trace {
            w.serialize(MeasurementRow {
                x: loc.x_m,
                y: loc.y_m,
                sinr_linear: *s,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a long-form measurement CSV back into location-grouped traces.
///
/// Rows sharing exact coordinates form one trace regardless of order;
/// locations appear in first-seen order. Grid alignment is not known to
/// the file format, so `grid_index` comes back empty and callers align
/// against their grid afterwards.
pub fn read_measurements_csv<R: Read>(input: R) -> Result<MeasurementSet> {
    let mut reader = csv::Reader::from_reader(input);
    let mut locations: Vec<Location> = Vec::new();
    let mut traces: Vec<Vec<f64>> = Vec::new();
    let mut index: std::collections::HashMap<(u64, u64), usize> = std::collections::HashMap::new();
    for row in reader.deserialize() {
        let row: MeasurementRow = row?;
        if !(row.sinr_linear.is_finite() && row.sinr_linear >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sinr_linear must be finite and non-negative, got {}",
                row.sinr_linear
            )));
        }
        let key = (row.x.to_bits(), row.y.to_bits());
        let slot = *index.entry(key).or_insert_with(|| {
            locations.push(Location::new(row.x, row.y));
            traces.push(Vec::new());
            locations.len() - 1
        });
        traces[slot].push(row.sinr_linear);
    }
    if locations.is_empty() {
        return Err(Error::InsufficientData("measurement file holds no rows".into()));
    }
    let n = locations.len();
    Ok(MeasurementSet {
        locations,
        traces,
        grid_index: vec![None; n],
    })
}

/// Reads the JSON batch form of a measurement set: the serialized
/// [`MeasurementSet`] itself, as written by [`write_json`].
pub fn read_measurements_json<R: Read>(input: R) -> Result<MeasurementSet> {
    let set: MeasurementSet = serde_json::from_reader(input)
        .map_err(|e| Error::InvalidArgument(format!("measurement json parse error: {e}")))?;
    if set.locations.len() != set.traces.len() || set.locations.len() != set.grid_index.len() {
        return Err(Error::InvalidArgument(
            "measurement json arrays disagree in length".into(),
        ));
    }
    Ok(set)
}
