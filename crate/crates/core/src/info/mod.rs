//! Projective number measurements, reduced density matrices and linear
//! entropy.

mod density;
mod measurement;

pub use density::{
    linear_entropy, mode_labels, partial_trace, DensityMatrix, ENTROPY_BOUND_TOL,
    ENTROPY_TRACE_TOL, TRACE_TOL,
};
pub use measurement::{
    collapse, measure_distribution, noon_reference, outcome_fidelity, outcome_overlap,
    sample_outcome, sample_outcomes, MeasurementDistribution, MeasurementRecord,
    COLLAPSE_THRESHOLD, DISTRIBUTION_TOL,
};
