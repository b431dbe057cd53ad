//! Distances to the singularity set `S = {v : v_i = theta for some i}` and
//! the horizon / period bounds that follow from them.

use crate::asymptotics::orbit::OrbitReport;
use crate::error::{Error, Result};
use crate::model::{State, Trajectory};

/// `min_{t,i} |v_i(t) - theta|` over the stored horizon.
pub fn dist_traj_to_s(traj: &Trajectory) -> f64 {
    traj.states()
        .iter()
        .map(State::threshold_gap)
        .fold(f64::INFINITY, f64::min)
}

/// Minimum threshold gap over a set of detected orbits.
pub fn dist_attractor_to_s(orbits: &[OrbitReport]) -> Result<f64> {
    orbits
        .iter()
        .map(|o| o.min_threshold_gap)
        .reduce(f64::min)
        .ok_or(Error::EmptyOrbitList)
}

/// Any perturbation of `v0` strictly smaller than this keeps the raster
/// unchanged over the observed horizon.
pub fn stable_manifold_radius(traj: &Trajectory) -> f64 {
    dist_traj_to_s(traj)
}

/// Number of iterates after which a domain of diameter `domain_diameter`
/// has contracted below `epsilon`.
///
/// `gamma == 0` returns 1: a single step collapses every direction.
pub fn markov_horizon(epsilon: f64, domain_diameter: f64, gamma: f64) -> Result<u64> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::invalid(format!("gamma must lie in [0, 1), got {gamma}")));
    }
    if !(epsilon > 0.0 && domain_diameter > 0.0) {
        return Err(Error::invalid("epsilon and the domain diameter must be positive"));
    }
    if gamma == 0.0 {
        return Ok(1);
    }
    if epsilon >= domain_diameter {
        return Ok(0);
    }
    Ok(((epsilon.ln() - domain_diameter.ln()) / gamma.ln()).floor() as u64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeriodBound {
    /// `log2` of the bound; the bound itself overflows quickly.
    pub log2: f64,
    /// `2^log2`, possibly infinite.
    pub value: f64,
    /// Set when `d_as >= 1`, where the bound carries no information.
    pub vacuous: bool,
}

/// Upper bound `2^(N log d / log gamma)` on the number of orbit points and
/// hence on the period.
pub fn period_bound(n: usize, d_as: f64, gamma: f64) -> Result<PeriodBound> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::invalid(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    if d_as.is_nan() || d_as < 0.0 {
        return Err(Error::invalid(format!("distance must be >= 0, got {d_as}")));
    }
    if d_as >= 1.0 {
        return Ok(PeriodBound {
            log2: 0.0,
            value: 1.0,
            vacuous: true,
        });
    }
    let log2 = n as f64 * d_as.ln() / gamma.ln();
    Ok(PeriodBound {
        log2,
        value: log2.exp2(),
        vacuous: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{simulate, NetworkParams};

    #[test]
    fn trajectory_distance_examples() {
        let ghost = NetworkParams::new(0.5, 1.0, vec![vec![0.0]], vec![0.5]).unwrap();
        let traj = simulate(&ghost, &State::zeros(&ghost), 50).unwrap();
        assert_eq!(dist_traj_to_s(&traj), 0.5f64.powi(50));

        let dead = NetworkParams::new(0.5, 1.0, vec![vec![0.0]], vec![0.0]).unwrap();
        let flat = simulate(&dead, &State::zeros(&dead), 10).unwrap();
        assert_eq!(dist_traj_to_s(&flat), 1.0);
        assert_eq!(stable_manifold_radius(&flat), 1.0);

        let touching = Trajectory::from_states(vec![State::from_potentials(&dead, &[1.0]).unwrap()]).unwrap();
        assert_eq!(dist_traj_to_s(&touching), 0.0);
        assert_eq!(stable_manifold_radius(&touching), 0.0);
    }

    #[test]
    fn attractor_distance_needs_orbits() {
        assert!(matches!(dist_attractor_to_s(&[]), Err(Error::EmptyOrbitList)));
    }

    #[test]
    fn markov_horizon_examples() {
        assert_eq!(markov_horizon(0.01, 2.0, 0.5).unwrap(), 7);
        assert_eq!(markov_horizon(2.0, 2.0, 0.5).unwrap(), 0);
        assert_eq!(markov_horizon(0.01, 2.0, 0.1).unwrap(), 2);
        assert_eq!(markov_horizon(0.01, 2.0, 0.0).unwrap(), 1);
        assert!(markov_horizon(0.0, 2.0, 0.5).is_err());
    }

    #[test]
    fn period_bound_examples() {
        let b = period_bound(2, 0.25, 0.5).unwrap();
        assert!((b.value - 16.0).abs() < 1e-9);
        let b = period_bound(7, 0.3, 0.3).unwrap();
        assert!((b.value - 128.0).abs() < 1e-9);
        let b = period_bound(50, 1e-6, 0.5).unwrap();
        assert!((b.log2 - 996.578).abs() < 1e-3);
        let v = period_bound(3, 1.5, 0.5).unwrap();
        assert!(v.vacuous && v.value == 1.0);
    }
}
