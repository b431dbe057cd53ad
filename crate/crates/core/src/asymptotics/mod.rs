//! Long-time behaviour: periodic orbits, distances to the singularity set,
//! regime labels and the effective Lyapunov exponent.

pub mod distance;
pub mod lyapunov;
pub mod orbit;
pub mod regime;

pub use distance::{
    dist_attractor_to_s, dist_traj_to_s, markov_horizon, period_bound, stable_manifold_radius, PeriodBound,
};
pub use lyapunov::{effective_lyapunov, LyapunovConfig};
pub use orbit::{
    find_periodic_orbit, omega_sample, same_orbit, sample_initial_state, Horizons, OmegaSample, OrbitReport,
    OrbitSearch, DEFAULT_TOLERANCE,
};
pub use regime::{classify_regime, RegimeLabel, DEFAULT_EPSILON_SINGULAR};
