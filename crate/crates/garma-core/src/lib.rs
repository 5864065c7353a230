//! Poisson GARMA(p,q) count time-series models.
//!
//! The conditional mean of each count follows a generalized ARMA recursion on
//! the log scale, driven by past observations through clipped log residuals.
//! This crate provides the model math, maximum partial likelihood estimation
//! by Fisher scoring, seeded simulation, and coherent forecasting: profile
//! predictive likelihood distributions over the non-negative integers, with
//! mode point forecasts and highest-density regions.
//!
//! The crate is `no_std` (with `alloc`); all floating-point math goes through
//! `libm` so results are reproducible across platforms.

#![no_std]

extern crate alloc;

pub mod design;
pub mod error;
pub mod estimate;
pub mod forecast;
pub mod linalg;
pub mod model;
pub mod series;
pub mod simulate;

pub use design::{harmonic_covariates, HarmonicSchema};
pub use error::{Error, Result};
pub use estimate::{deviance, fit, standard_errors, FitOptions, FitWarning, FittedModel};
pub use forecast::{
    forecast_density_variance, hdr, m_step_pl, one_step_pl, point_forecast, rolling_forecast,
    ForecastDistribution, ForecastStep, HdrRegion, TruncationRule, DEFAULT_TUPLE_BUDGET,
};
pub use linalg::Matrix;
pub use model::{
    clip_series, conditional_information, log_partial_likelihood, predictor_path, score, Link,
    ModelSpec, ParamVector, PredictorPath, ETA_GUARD,
};
pub use series::SeriesFrame;
pub use simulate::{replicate, simulate, simulate_stream, SimScenario};
