//! Closed-form and fitted predictions of observable errors: gate-count
//! estimates, the heuristic error model and its optimal step, the XY energy
//! decay law, the RPE heating trajectory and perturbative Trotter errors.

mod error_model;
mod heating;
mod tdpt;

pub use error_model::{
    error_model, fit_error_model, naive_estimate, optimal_tau, xy_decay_rate, xy_energy, ErrorFit, ErrorPrediction,
    FitWindow,
};
pub use heating::{heating_trajectory, HeatingPoint, HeatingState};
pub use tdpt::{tdpt_trotter_error, tdpt_trotter_error_pure, TdptPlan, TdptPoint, TDPT_DEGENERACY_TOL};
