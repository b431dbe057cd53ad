//! Periodic-orbit detection and sampling of the omega-limit set.
//!
//! Detection runs Brent's power-of-two cycle search on the simulated
//! trajectory, with recurrence meaning "same spiking pattern and max-metric
//! distance within `tol`". A candidate cycle is accepted only if its raster
//! code is realizable (periodic reconstruction reproduces it) and one more
//! simulated period closes within `tol`. The reported states are the exact
//! periodic reconstruction of the code, so never-firing neurons are given
//! at their limit values rather than wherever the approach happened to be.
//!
//! Orbits that accumulate on the threshold without firing (ghost orbits)
//! produce recurrences whose code is not realizable; they run out the
//! horizon and are reported as [`OrbitSearch::Undetermined`].

use std::collections::HashSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::coding::{encode_states, is_realizable_cycle, reconstruct_periodic};
use crate::error::{Error, Result};
use crate::model::{compute_bounds, max_distance, pattern_of, NetworkParams, State, Stepper};
use crate::pattern::{Raster, SpikingPattern};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Search budget: the search gives up after `max_transient + 2 * max_period`
/// steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Horizons {
    pub max_transient: usize,
    pub max_period: usize,
}

impl Default for Horizons {
    fn default() -> Self {
        Horizons {
            max_transient: 100_000,
            max_period: 10_000,
        }
    }
}

impl Horizons {
    pub fn limit(&self) -> usize {
        self.max_transient + 2 * self.max_period
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrbitReport {
    /// Steps before the trajectory first recurs onto the cycle.
    pub transient: usize,
    pub period: usize,
    /// One period of orbit states; `states[0]` has the phase reached at
    /// time `transient`.
    pub states: Vec<State>,
    pub cycle_raster: Raster,
    /// `min |v_i - theta|` over the orbit.
    pub min_threshold_gap: f64,
}

impl OrbitReport {
    pub fn is_quiescent_fixed_point(&self) -> bool {
        self.period == 1 && self.cycle_raster[0].is_all_zero()
    }

    pub fn is_full_activity_fixed_point(&self) -> bool {
        self.period == 1 && self.cycle_raster[0].is_all_ones()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum OrbitSearch {
    Periodic(OrbitReport),
    /// No accepted recurrence within `horizon` steps.
    Undetermined { horizon: usize },
}

impl OrbitSearch {
    pub fn periodic(self) -> Option<OrbitReport> {
        match self {
            OrbitSearch::Periodic(r) => Some(r),
            OrbitSearch::Undetermined { .. } => None,
        }
    }
}

#[inline]
fn same_pattern(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (*x >= 0.0) == (*y >= 0.0))
}

#[inline]
fn recurs(a: &[f64], b: &[f64], tol: f64) -> bool {
    same_pattern(a, b) && max_distance(a, b) <= tol
}

/// Growing pattern window with an incremental prefix function, which gives
/// the shortest period of the window in amortized constant time per push.
struct Window {
    patterns: Vec<SpikingPattern>,
    prefix: Vec<usize>,
}

impl Window {
    fn new() -> Self {
        Window {
            patterns: Vec::new(),
            prefix: Vec::new(),
        }
    }

    fn clear(&mut self) {
        self.patterns.clear();
        self.prefix.clear();
    }

    fn push(&mut self, p: SpikingPattern) {
        let k = self.patterns.len();
        let mut j = if k == 0 { 0 } else { self.prefix[k - 1] };
        if k > 0 {
            while j > 0 && self.patterns[j] != p {
                j = self.prefix[j - 1];
            }
            if self.patterns[j] == p {
                j += 1;
            }
        }
        self.patterns.push(p);
        self.prefix.push(j);
    }

    /// Length of the primitive cyclic block when the window is read as one
    /// full cycle.
    fn cyclic_period(&self) -> usize {
        let len = self.patterns.len();
        let per = len - self.prefix[len - 1];
        if len % per == 0 {
            per
        } else {
            len
        }
    }
}

fn validate(net: &NetworkParams, v0: &State, horizons: Horizons, tol: f64) -> Result<()> {
    if v0.n() != net.n() {
        return Err(Error::DimensionMismatch {
            expected: net.n(),
            got: v0.n(),
        });
    }
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(Error::invalid(format!("tolerance must be finite and >= 0, got {tol}")));
    }
    if horizons.max_transient == 0 || horizons.max_period == 0 {
        return Err(Error::invalid("horizons must be at least 1"));
    }
    Ok(())
}

pub fn find_periodic_orbit(net: &NetworkParams, v0: &State, horizons: Horizons, tol: f64) -> Result<OrbitSearch> {
    validate(net, v0, horizons, tol)?;
    let limit = horizons.limit();
    let mut stepper = Stepper::new(net);
    let mut scratch = Vec::with_capacity(net.n());

    let mut tortoise = v0.offsets().to_vec();
    let mut tortoise_time = 0usize;
    let mut window = Window::new();
    window.push(pattern_of(&tortoise));
    let mut hare = tortoise.clone();
    stepper.step_in_place(&mut hare, &mut scratch);
    let mut t = 1usize;
    let mut lag = 1usize;
    let mut power = 1usize;
    let mut rejected: HashSet<Vec<SpikingPattern>> = HashSet::new();

    loop {
        if recurs(&hare, &tortoise, tol) {
            let period = window.cyclic_period();
            let code = &window.patterns[..period];
            if follows_code(&mut stepper, &mut scratch, &hare, code, tol) && !rejected.contains(code) {
                if !is_realizable_cycle(net, code) {
                    rejected.insert(code.to_vec());
                } else if let Some(report) = confirm(net, v0, tortoise_time, lag, code, tol) {
                    return Ok(OrbitSearch::Periodic(report));
                }
            }
        }
        if t >= limit {
            return Ok(OrbitSearch::Undetermined { horizon: limit });
        }
        if lag == power {
            tortoise.copy_from_slice(&hare);
            tortoise_time = t;
            window.clear();
            power *= 2;
            lag = 0;
        }
        window.push(pattern_of(&hare));
        stepper.step_in_place(&mut hare, &mut scratch);
        t += 1;
        lag += 1;
    }
}

/// One more period from `start` follows `code` and closes within `tol`.
fn follows_code(
    stepper: &mut Stepper<'_>,
    scratch: &mut Vec<f64>,
    start: &[f64],
    code: &[SpikingPattern],
    tol: f64,
) -> bool {
    let mut probe = start.to_vec();
    for eta in code {
        if &pattern_of(&probe) != eta {
            return false;
        }
        stepper.step_in_place(&mut probe, scratch);
    }
    recurs(&probe, start, tol)
}

/// Builds the report for a realizable candidate cycle found at
/// `tortoise_time` with lag `lag` and primitive code `code`.
fn confirm(
    net: &NetworkParams,
    v0: &State,
    tortoise_time: usize,
    lag: usize,
    code: &[SpikingPattern],
    tol: f64,
) -> Option<OrbitReport> {
    let period = code.len();
    let cycle = Raster::from_patterns(net.n(), code.to_vec()).ok()?;
    let mut states = reconstruct_periodic(net, &cycle).ok()?;
    let transient = first_recurrence(net, v0, period, tortoise_time + lag, tol)?;

    // code[0] is the phase at tortoise_time
    let shift = (transient % period + period - tortoise_time % period) % period;
    states.rotate_left(shift);
    let cycle_raster = encode_states(&states).ok()?;
    let min_threshold_gap = states.iter().map(State::threshold_gap).fold(f64::INFINITY, f64::min);
    Some(OrbitReport {
        transient,
        period,
        states,
        cycle_raster,
        min_threshold_gap,
    })
}

/// First `t <= bound` with `v(t)` and `v(t + lag)` recurrent.
fn first_recurrence(net: &NetworkParams, v0: &State, lag: usize, bound: usize, tol: f64) -> Option<usize> {
    let slots = lag + 1;
    let mut ring: Vec<Vec<f64>> = Vec::with_capacity(slots);
    ring.push(v0.offsets().to_vec());
    let mut stepper = Stepper::new(net);
    for t in 1..=bound + lag {
        let mut next = if ring.len() < slots {
            vec![0.0; net.n()]
        } else {
            std::mem::take(&mut ring[t % slots])
        };
        stepper.advance(&ring[(t - 1) % slots], &mut next);
        if ring.len() < slots {
            ring.push(next);
        } else {
            ring[t % slots] = next;
        }
        if t >= lag && recurs(&ring[t % slots], &ring[(t - lag) % slots], tol) {
            return Some(t - lag);
        }
    }
    None
}

/// Sampled inner approximation of the omega-limit set.
#[derive(Clone, Debug, PartialEq)]
pub struct OmegaSample {
    /// Distinct orbits in order of first discovery.
    pub orbits: Vec<OrbitReport>,
    pub undetermined: usize,
    pub runs: usize,
    pub horizon: usize,
}

/// Initial condition number `index` of a sample seeded with `seed`.
pub fn sample_initial_state(net: &NetworkParams, seed: u64, index: usize) -> State {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    State::random_in(net, &compute_bounds(net), &mut rng)
}

/// Runs the orbit search from `num_inits` uniform initial conditions in
/// `[v_min, v_max]^N`. Each initial condition has its own random stream, so
/// the result does not depend on how the runs are scheduled.
pub fn omega_sample(
    net: &NetworkParams,
    num_inits: usize,
    seed: u64,
    horizons: Horizons,
    tol: f64,
) -> Result<OmegaSample> {
    if num_inits == 0 {
        return Err(Error::invalid("num_inits must be at least 1"));
    }
    let searches: Vec<OrbitSearch> = (0..num_inits)
        .into_par_iter()
        .map(|k| find_periodic_orbit(net, &sample_initial_state(net, seed, k), horizons, tol))
        .collect::<Result<_>>()?;

    let mut orbits: Vec<OrbitReport> = Vec::new();
    let mut undetermined = 0;
    for s in searches {
        match s {
            OrbitSearch::Periodic(report) => {
                if !orbits.iter().any(|o| same_orbit(o, &report, tol)) {
                    orbits.push(report);
                }
            }
            OrbitSearch::Undetermined { .. } => undetermined += 1,
        }
    }
    Ok(OmegaSample {
        orbits,
        undetermined,
        runs: num_inits,
        horizon: horizons.limit(),
    })
}

/// Same cycle up to rotation of the raster, then matching states.
pub fn same_orbit(a: &OrbitReport, b: &OrbitReport, tol: f64) -> bool {
    if a.period != b.period {
        return false;
    }
    match a.cycle_raster.rotation_to(&b.cycle_raster) {
        Some(r) => (0..a.period).all(|k| a.states[(r + k) % a.period].distance(&b.states[k]) <= tol),
        None => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::step;

    fn h(t: usize, p: usize) -> Horizons {
        Horizons {
            max_transient: t,
            max_period: p,
        }
    }

    #[test]
    fn prefix_window_period() {
        let mut w = Window::new();
        for s in ["10", "01", "10", "01"] {
            w.push(s.parse().unwrap());
        }
        assert_eq!(w.cyclic_period(), 2);
        w.push("10".parse().unwrap());
        assert_eq!(w.cyclic_period(), 5);
        w.push("01".parse().unwrap());
        assert_eq!(w.cyclic_period(), 2);
    }

    #[test]
    fn neural_death_is_the_quiescent_fixed_point() {
        let net = NetworkParams::new(0.5, 1.0, vec![vec![0.0; 3]; 3], vec![0.0; 3]).unwrap();
        let v0 = State::from_potentials(&net, &[0.3, -0.2, 0.9]).unwrap();
        let r = find_periodic_orbit(&net, &v0, h(1000, 100), DEFAULT_TOLERANCE)
            .unwrap()
            .periodic()
            .unwrap();
        assert_eq!(r.period, 1);
        assert!(r.is_quiescent_fixed_point());
        assert_eq!(r.states[0].potentials(), vec![0.0; 3]);
        assert_eq!(r.min_threshold_gap, 1.0);
    }

    #[test]
    fn full_activity_fixed_point() {
        let w = vec![vec![0.7, 0.5], vec![0.2, 0.9]];
        let net = NetworkParams::new(0.6, 1.0, w, vec![0.1, 0.0]).unwrap();
        let v0 = State::from_potentials(&net, &[1.0, 2.0]).unwrap();
        let r = find_periodic_orbit(&net, &v0, h(1000, 100), DEFAULT_TOLERANCE)
            .unwrap()
            .periodic()
            .unwrap();
        assert_eq!(r.period, 1);
        assert!(r.is_full_activity_fixed_point());
        let v = r.states[0].potentials();
        assert!((v[0] - 1.3).abs() < 1e-12 && (v[1] - 1.1).abs() < 1e-12);
        // v0 itself is not on the orbit
        assert_eq!(r.transient, 1);
    }

    #[test]
    fn ghost_orbit_is_undetermined() {
        let net = NetworkParams::new(0.5, 1.0, vec![vec![0.0]], vec![0.5]).unwrap();
        for horizon in [10, 1000, 20_000] {
            let res = find_periodic_orbit(&net, &State::zeros(&net), h(horizon, 10), DEFAULT_TOLERANCE).unwrap();
            assert_eq!(res, OrbitSearch::Undetermined { horizon: horizon + 20 });
        }
    }

    #[test]
    fn alternating_pair_has_period_two() {
        let net = NetworkParams::new(0.5, 1.0, vec![vec![0.0, 1.2], vec![1.3, 0.0]], vec![0.0, 0.0]).unwrap();
        let v0 = State::from_potentials(&net, &[1.0, 0.0]).unwrap();
        let r = find_periodic_orbit(&net, &v0, h(1000, 100), 0.0)
            .unwrap()
            .periodic()
            .unwrap();
        assert_eq!(r.period, 2);
        for k in 0..2 {
            assert!(step(&net, &r.states[k]).distance(&r.states[(k + 1) % 2]) < 1e-12);
        }
    }

    #[test]
    fn slow_approach_reports_limit_states() {
        // neuron 1 is driven by the periodic neuron 0 but never fires
        let net = NetworkParams::new(
            0.9,
            1.0,
            vec![vec![0.0, 0.0, 1.5], vec![0.05, 0.0, 0.0], vec![1.5, 0.0, 0.0]],
            vec![0.0, 0.0, 0.0],
        )
        .unwrap();
        let v0 = State::from_potentials(&net, &[1.0, 0.0, 0.0]).unwrap();
        let r = find_periodic_orbit(&net, &v0, h(10_000, 100), DEFAULT_TOLERANCE)
            .unwrap()
            .periodic()
            .unwrap();
        assert_eq!(r.period, 2);
        // fixed point of the two-step map for neuron 1: (0.05 + 0.9*0)/(1 - 0.81) style sums
        let states = &r.states;
        let a = states[0].potential(1);
        let b = states[1].potential(1);
        assert!((0.9 * a + if states[0].fires(0) { 0.05 } else { 0.0 } - b).abs() < 1e-14);
        assert!((0.9 * b + if states[1].fires(0) { 0.05 } else { 0.0 } - a).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_arguments() {
        let net = NetworkParams::new(0.5, 1.0, vec![vec![0.0]], vec![0.0]).unwrap();
        let v0 = State::zeros(&net);
        assert!(find_periodic_orbit(&net, &v0, h(0, 10), 1e-10).is_err());
        assert!(find_periodic_orbit(&net, &v0, h(10, 10), -1.0).is_err());
        assert!(omega_sample(&net, 0, 1, h(10, 10), 1e-10).is_err());
    }

    #[test]
    fn omega_sample_dedups_death() {
        let net = NetworkParams::new(0.3, 1.0, vec![vec![0.0; 4]; 4], vec![0.2; 4]).unwrap();
        let s = omega_sample(&net, 16, 5, h(10_000, 100), DEFAULT_TOLERANCE).unwrap();
        assert_eq!(s.orbits.len(), 1);
        assert_eq!(s.undetermined, 0);
        let one = omega_sample(&net, 1, 5, h(10_000, 100), DEFAULT_TOLERANCE).unwrap();
        assert!(one.orbits.len() <= 1);
    }
}
