//! Scalar special-function layer shared by every other module.

mod erlang;
mod kernel;
mod level;
pub mod quadrature;
mod rate;
pub mod special;

pub use erlang::{erlang_b, erlang_b_inverse, ln_truncated_exp_sum, truncated_exp_sum};
pub use kernel::{ln_phi_hat, phi_hat};
pub use level::{
    fixed_point_mean, level_distribution, ln_psi, mean_sojourn_little, mean_sojourn_meanfield,
    psi,
};
pub use rate::{gamma_alpha, log_truncexp_expansion_residual, rate_function, RateFunctionData};
