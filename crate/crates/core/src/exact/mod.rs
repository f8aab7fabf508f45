//! Finite-`n` stationary analysis of the occupancy chain.

mod balance;
mod generator;
pub mod hetero;
mod integral;
mod state;
mod stationary;

pub use balance::{balance_function, ln_balance_function, routing_probabilities};
pub use generator::{generator_matrix, Generator, DENSE_SOLVE_LIMIT};
pub use hetero::{
    enumerate_hetero_states, hetero_generator, hetero_routing_rates, hetero_stationary,
    hetero_stationary_log_prob, HeteroConfig, HeteroStationary, ServerType, HETERO_STATE_CAP,
};
pub use integral::{blocking_via_integral, ln_blocking_via_integral, tasks_mgf};
pub use state::{
    enumerate_states, for_each_state, state_count, state_rank, OccupancyVector, DEFAULT_STATE_CAP,
};
pub use stationary::{
    blocking_from_empty_state, exact_blocking_enumeration, exact_stationary, routing_rates,
    stationary_log_prob, StationaryResult,
};
