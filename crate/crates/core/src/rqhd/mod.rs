//! The relativistic quantum hydrodynamic system: residual evaluation, the
//! hyperbolic-elliptic reformulation, source assembly, the fixed-point
//! solver, and the well-posedness monitor.

mod monitor;
mod picard;
mod reform;
mod residuals;
mod sources;
mod wave;

pub use monitor::{
    amplitude_ratio_a0, energy_inequality_ratio, existence_time, initial_norm_i0,
    monitor_estimates, write_norm_history_csv, NormRow, WellposednessEstimates,
    NORM_HISTORY_HEADER,
};
pub use picard::{
    initial_iterate, picard_iterate, picard_solve, sine_perturbation_init, trajectory_diff,
    IterationReport, PicardOptions,
};
pub use reform::{reformulate, unreformulate, ReformInit, ReformState};
pub use residuals::{
    conserved_charge, quantum_stress_divergence, relativistic_term, residual_continuity,
    residual_momentum, QuantumForm, RelativisticForm,
};
pub use sources::{assemble_sources, slice_sources, SourceTriple};
pub use wave::{linear_wave_solve, linear_wave_solve_with_speed};
