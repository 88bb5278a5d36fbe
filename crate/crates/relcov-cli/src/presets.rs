//! Scenario presets for the standard evaluation figures.
//!
//! All four presets share one hall: 200 x 200 m, 30 dBm access points at
//! 1.5 GHz, 10 m masts serving 1.5 m terminals, 32-byte packets on a
//! 1 ms budget. They differ in what is swept and how finely the area is
//! sampled. A preset overrides only the fields it owns; everything else
//! comes from the config file or the defaults.

use clap::ValueEnum;

use relcov::config::RunConfig;
use relcov::dimensioning::SweepSpec;
use relcov::evtmap::MeasurementLayout;
use relcov::scenario::ServiceArea;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    /// Coverage vs bandwidth at 20 APs for three reliability targets.
    Fig3,
    /// Bandwidth demand vs density at the five-nines target.
    Fig4,
    /// Reliability map: 5 APs, 50 MHz, 2 m grid, outage 1e-3.
    Fig5,
    /// Tail-extrapolated outage map: 5 APs, 50 MHz, 4 m grid.
    Fig6,
}

pub fn apply(cfg: &mut RunConfig, figure: Figure) {
    cfg.area = ServiceArea {
        width_m: 200.0,
        height_m: 200.0,
    };
    cfg.resources.tx_power_dbm = 30.0;
    cfg.resources.carrier_hz = 1.5e9;
    cfg.resources.ap_height_m = 10.0;
    cfg.resources.user_height_m = 1.5;
    cfg.requirements.payload_bits = 256.0;
    cfg.requirements.gamma_latency_s = 1e-3;

    match figure {
        Figure::Fig3 => {
            cfg.resources.n_aps = 20;
            cfg.sweep = Some(SweepSpec {
                bandwidths_hz: vec![1e6, 2e6, 5e6, 1e7, 2e7, 5e7, 1e8],
                densities: vec![20],
                alpha_stars: vec![0.9, 0.999, 0.999_99],
            });
        }
        Figure::Fig4 => {
            cfg.requirements.alpha_star = 0.999_99;
            cfg.requirements.eta_star = 0.99;
            cfg.sweep = Some(SweepSpec {
                bandwidths_hz: vec![1e6, 2e6, 5e6, 1e7, 2e7, 5e7, 1e8, 2e8, 5e8],
                densities: vec![5, 10, 15, 20],
                alpha_stars: vec![0.999_99],
            });
        }
        Figure::Fig5 => {
            cfg.resources.n_aps = 5;
            cfg.resources.bandwidth_hz = 50e6;
            cfg.requirements.alpha_star = 0.999;
            cfg.study.grid_spacing_m = 2.0;
            cfg.study.n_trials = 100_000;
            cfg.study.n_deployments = 1;
        }
        Figure::Fig6 => {
            cfg.resources.n_aps = 5;
            cfg.resources.bandwidth_hz = 50e6;
            cfg.requirements.alpha_star = 0.999_99;
            cfg.study.grid_spacing_m = 4.0;
            cfg.study.n_deployments = 1;
            cfg.measurement.layout = MeasurementLayout::FullGrid;
            cfg.measurement.n_samples = 100_000;
        }
    }
}
