//! Monte Carlo pricing engine for kth-to-default basket CDSs and CDO tranches
//! under a copula-contagion mixture model of correlated default times.
//!
//! Marginal default intensities follow a homogeneous contagion process with
//! exponentially decaying shocks, while the names' exponential thresholds are
//! coupled through a product, Marshall-Olkin exponential, or Gaussian
//! one-factor copula. Ordered default times are generated by the total hazard
//! construction: a closed-form recursion when shocks are permanent, a guarded
//! Newton solve when they decay, and a direct inversion when contagion is
//! absent. Contagion-driven counterparty default times can truncate both legs
//! of every contract.
//!
//! The crate is organised as:
//!
//! - [`copulas`]: correlated uniform variates and sorted exponential thresholds
//! - [`contagion`]: thresholds to ordered default times, counterparty times
//! - [`oracle`]: closed-form densities of ordered default times (no decay),
//!   used to validate the simulation path
//! - [`pricing`]: per-path contingent/fee leg present values and swap rates
//! - [`driver`]: deterministic block-partitioned Monte Carlo execution
//! - [`config`]: strict run-configuration parsing
//! - [`report`]: CSV result tables and analytic density dumps

pub mod config;
pub mod contagion;
pub mod copulas;
pub mod driver;
pub mod error;
pub mod math;
pub mod oracle;
pub mod pricing;
pub mod report;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
