//! Reliability coverage toolkit for dense local wireless deployments.
//!
//! The crate estimates, for a service area covered by a set of access
//! points, the probability that a short packet gets through within a
//! latency budget at every location, and searches for the bandwidth and
//! access point density that push the covered fraction of the area above
//! a target. Lower tails of the SINR distribution are extrapolated with
//! a peaks-over-threshold fit so that outage levels far below the reach
//! of plain Monte Carlo remain measurable.

pub mod allocate;
pub mod channel;
pub mod config;
pub mod dimensioning;
pub mod emit;
pub mod error;
pub mod evt;
pub mod evtmap;
pub(crate) mod exec;
pub mod reliability;
pub mod scenario;
pub mod seeding;
pub mod sinr;

pub use error::{Error, Result};
