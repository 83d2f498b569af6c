//! Entropy-penalized control of counting processes: exact semigroup
//! evaluation, thinning simulation on planar Poisson noise, a Kolmogorov ODE
//! cross-check and a Picard fixed-point diagnostic.

mod fixedpoint;
mod noise;
mod ode;
mod policy;
mod semigroup;
mod simulate;

pub use fixedpoint::{fixed_point_solve, FixedPointReport};
pub use noise::{trajectory_rng, PlanarNoise};
pub use ode::{default_x_max, dopri45, ode_policy_value, TRUNCATION_MASS};
pub use policy::{
    optimal_policy, ConstantPolicy, HistoryPolicy, IntensityPolicy, MarkovPolicy, OptimalPolicy,
    SinusoidalPolicy,
};
pub use semigroup::{log_poisson_integral, semigroup_apply, Payoff, ValueFunction};
pub use simulate::{
    intensity_identity_check, legendre_gap, mc_functional, path_integral, phi, simulate_counting,
    supermartingale_check, CountingPath, IdentityReport, McEstimate, SupermartingaleReport,
};
