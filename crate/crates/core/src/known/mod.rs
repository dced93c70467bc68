//! Estimation when the first covariance is known, and covariance fitting.

pub mod descent;
pub mod model;
pub mod objective;

pub use descent::{
    fit_covariance, fit_from, linear_shrinkage_init, retract, shrinkage_intensity,
    write_trace_csv, DescentOptions, DescentState, FitResult,
};
pub use model::{
    build_known_model, estimate_sqrt_known, estimate_sqrt_known_with, sqrt_known_and_gradient,
    KnownPopModel,
};
pub use objective::{gradient_h, objective_h, Evaluation, Objective};
