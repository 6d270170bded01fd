//! Arrival densities of space-conditional states, the full-line reference density, the
//! probability current and backflow detection.

pub mod current;
pub mod density;
pub mod distribution;

pub use current::{current_sweep, probability_current, search_backflow_coefficient, BackflowFixture, BackflowSearch};
pub use density::{
    arrival_density, arrival_time_density, core_relative_difference, kijowski_reference, l1_distance, sc_conditional_y_at_time, sc_cumulative_y,
    CoreAgreement, WINDOW_TAIL_LIMIT,
};
pub use distribution::{detect_backflow, moments, variance, ArrivalDistribution, BackflowInterval, DistributionAxis, FluxSeries};
