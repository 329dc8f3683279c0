//! Random product state ensemble: fixed-energy and energy-window Metropolis
//! sampling of classical spin configurations, a rejection-sampling oracle and
//! ensemble averages on an energy grid.

mod classical;
mod mcmc;
mod rejection;
mod tables;

pub use crate::stats::autocorrelation;
pub use classical::{
    config_energy, effective_field, prepare_product_state, product_expectation, random_unit_vector,
    ClassicalHamiltonian, SpinConfiguration, NORM_TOL,
};
pub use mcmc::{
    feasible_interval, mcmc_run, mcmc_run_chains, mcmc_step, seed_configuration, McmcChain, MoveRecord,
    Sample, SamplerConfig, DEGENERATE_FIELD,
};
pub use rejection::{rejection_sample, RejectionSampler, DEFAULT_MAX_TRIES};
pub use tables::{
    bond_paulis, default_grid, ensemble_tables, read_samples_csv, write_samples_csv, EnsembleTables, Lookup,
    TableConfig, TableRow, DEFAULT_GRID_POINTS,
};
