//! Monte Carlo toolkit for the bias of the Kaplan-Meier estimator when
//! dropout censoring depends on the failure time.
//!
//! Survival data are treated as three competing risks: failure, dropout and
//! administrative (end of study) censoring. [`scenarios`] generates the four
//! censoring designs, [`survival`] fits product-limit curves, [`oracles`]
//! holds closed-form and quadrature cross-checks, and [`reproduce`] runs the
//! reference tables against their published values.

pub mod error;
pub mod io;
pub mod oracles;
pub mod plot;
pub mod rand_dist;
pub mod reference;
pub mod reproduce;
pub mod scenarios;
pub mod survival;

pub use error::{ConfigError, DomainError, Error, EstimationError, FormatError, Result};
pub use oracles::{
    admin_fraction_s2, admin_fraction_s3, brute_force_km, km_limit_scenario1, LimitCurve,
};
pub use rand_dist::{make_stream, DropoutSpec, RandomStream};
pub use scenarios::{run_scenario, summarize, ScenarioConfig, ScenarioId, SimulationSummary};
pub use survival::{
    censoring_breakdown, dropout_sensitivity, fit_km, median_survival, survival_at,
    CensoringBreakdown, CensoringPolicy, KmCurve, Status, SubjectRecord, SurvivalDataset,
};
