//! Network parameters, the one-step map and trajectory simulation.
//!
//! States are stored relative to the firing threshold: coordinate `i` holds
//! `v_i - theta`. The map is evaluated in these coordinates so that
//! potentials accumulating just below threshold keep their full relative
//! precision, and the firing test is an exact sign test.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pattern::{Raster, SpikingPattern};

/// JSON shape of a network file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkFile {
    pub n: usize,
    pub gamma: f64,
    pub theta: f64,
    pub weights: Vec<Vec<f64>>,
    pub i_ext: Vec<f64>,
}

/// The system `(W, I_ext, gamma, theta)` defining the map `F`.
///
/// Row `i` of the weight matrix holds the synaptic inputs to neuron `i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetworkFile", into = "NetworkFile")]
pub struct NetworkParams {
    n: usize,
    gamma: f64,
    theta: f64,
    weights: Vec<f64>,
    i_ext: Vec<f64>,
    // (1 - gamma) * theta, the constant pulled out of the sub-threshold update
    leak_shift: f64,
}

impl NetworkParams {
    pub fn new(gamma: f64, theta: f64, weights: Vec<Vec<f64>>, i_ext: Vec<f64>) -> Result<Self> {
        let n = weights.len();
        Self::try_from(NetworkFile {
            n,
            gamma,
            theta,
            weights,
            i_ext,
        })
    }

    /// Network with a row-major flat weight matrix.
    pub fn from_flat(gamma: f64, theta: f64, weights: Vec<f64>, i_ext: Vec<f64>) -> Result<Self> {
        let n = i_ext.len();
        if weights.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: weights.len(),
            });
        }
        Self::validate_scalars(n, gamma, theta)?;
        if weights.iter().chain(i_ext.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidNetwork("weights and i_ext must be finite".into()));
        }
        Ok(NetworkParams {
            n,
            gamma,
            theta,
            weights,
            i_ext,
            leak_shift: (1.0 - gamma) * theta,
        })
    }

    fn validate_scalars(n: usize, gamma: f64, theta: f64) -> Result<()> {
        if n == 0 {
            return Err(Error::InvalidNetwork("network must have at least one neuron".into()));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::InvalidNetwork(format!("gamma must lie in [0, 1), got {gamma}")));
        }
        if !(theta.is_finite() && theta > 0.0) {
            return Err(Error::InvalidNetwork(format!("theta must be positive and finite, got {theta}")));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n + j]
    }

    /// Inputs to neuron `i`.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.weights[i * self.n..(i + 1) * self.n]
    }

    pub fn weights_flat(&self) -> &[f64] {
        &self.weights
    }

    pub fn i_ext(&self) -> &[f64] {
        &self.i_ext
    }

    /// Same network with a different leak rate.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::from_flat(gamma, self.theta, self.weights.clone(), self.i_ext.clone())
    }

    /// Total current `sum_{j in fired} W_ij + I_ext_i`.
    ///
    /// Every code path that needs this quantity goes through here so the
    /// summation order (ascending `j`) is the same everywhere.
    #[inline]
    pub(crate) fn total_current(&self, i: usize, fired: &[usize]) -> f64 {
        let row = self.row(i);
        let mut s = 0.0;
        for &j in fired {
            s += row[j];
        }
        s + self.i_ext[i]
    }

    /// Offset update for neuron `i` given its current offset and whether it
    /// fires now.
    #[inline]
    pub(crate) fn update_offset(&self, offset: f64, fires: bool, total: f64) -> f64 {
        if fires {
            total - self.theta
        } else {
            self.gamma * offset + (total - self.leak_shift)
        }
    }
}

impl TryFrom<NetworkFile> for NetworkParams {
    type Error = Error;

    fn try_from(f: NetworkFile) -> Result<Self> {
        if f.weights.len() != f.n {
            return Err(Error::DimensionMismatch {
                expected: f.n,
                got: f.weights.len(),
            });
        }
        if let Some(row) = f.weights.iter().find(|r| r.len() != f.n) {
            return Err(Error::DimensionMismatch {
                expected: f.n,
                got: row.len(),
            });
        }
        if f.i_ext.len() != f.n {
            return Err(Error::DimensionMismatch {
                expected: f.n,
                got: f.i_ext.len(),
            });
        }
        let flat = f.weights.into_iter().flatten().collect();
        NetworkParams::from_flat(f.gamma, f.theta, flat, f.i_ext)
    }
}

impl From<NetworkParams> for NetworkFile {
    fn from(net: NetworkParams) -> Self {
        NetworkFile {
            n: net.n,
            gamma: net.gamma,
            theta: net.theta,
            weights: net.weights.chunks(net.n).map(<[f64]>::to_vec).collect(),
            i_ext: net.i_ext,
        }
    }
}

/// Membrane-potential vector, held as offsets from the threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    theta: f64,
    offsets: Vec<f64>,
}

impl State {
    pub fn from_potentials(net: &NetworkParams, potentials: &[f64]) -> Result<State> {
        if potentials.len() != net.n {
            return Err(Error::DimensionMismatch {
                expected: net.n,
                got: potentials.len(),
            });
        }
        if potentials.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("membrane potentials must be finite"));
        }
        Ok(State {
            theta: net.theta,
            offsets: potentials.iter().map(|v| v - net.theta).collect(),
        })
    }

    /// State given directly by `v_i - theta`.
    pub fn from_offsets(theta: f64, offsets: Vec<f64>) -> State {
        State { theta, offsets }
    }

    /// All potentials at zero.
    pub fn zeros(net: &NetworkParams) -> State {
        State {
            theta: net.theta,
            offsets: vec![-net.theta; net.n],
        }
    }

    /// Uniform draw from `[v_min, v_max]^N`.
    pub fn random_in<R: Rng + ?Sized>(net: &NetworkParams, bounds: &Bounds, rng: &mut R) -> State {
        let v: Vec<f64> = (0..net.n)
            .map(|_| rng.random_range(bounds.v_min..=bounds.v_max))
            .collect();
        State {
            theta: net.theta,
            offsets: v.iter().map(|x| x - net.theta).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.offsets.len()
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `v_i - theta` for every neuron.
    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn potential(&self, i: usize) -> f64 {
        self.offsets[i] + self.theta
    }

    pub fn potentials(&self) -> Vec<f64> {
        self.offsets.iter().map(|u| u + self.theta).collect()
    }

    #[inline]
    pub fn fires(&self, i: usize) -> bool {
        self.offsets[i] >= 0.0
    }

    pub fn pattern(&self) -> SpikingPattern {
        pattern_of(&self.offsets)
    }

    /// Max-metric distance `max_i |v_i - v'_i|`.
    pub fn distance(&self, other: &State) -> f64 {
        max_distance(&self.offsets, &other.offsets)
    }

    /// `min_i |v_i - theta|`.
    pub fn threshold_gap(&self) -> f64 {
        self.offsets.iter().fold(f64::INFINITY, |m, u| m.min(u.abs()))
    }
}

#[inline]
pub(crate) fn max_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub(crate) fn pattern_of(offsets: &[f64]) -> SpikingPattern {
    let mut p = SpikingPattern::zeros(offsets.len());
    for (i, &u) in offsets.iter().enumerate() {
        if u >= 0.0 {
            p.set(i, true);
        }
    }
    p
}

/// Firing state `Z(v) = [v >= theta]`.
#[inline]
pub fn spiking_state(v: f64, theta: f64) -> bool {
    v >= theta
}

/// Phase-space box `[v_min, v_max]^N` mapped into itself by `F`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub v_min: f64,
    pub v_max: f64,
}

impl Bounds {
    pub fn diameter(&self) -> f64 {
        self.v_max - self.v_min
    }

    /// True when every potential lies in the box, up to `slack`.
    pub fn contains(&self, state: &State, slack: f64) -> bool {
        state
            .offsets
            .iter()
            .map(|u| u + state.theta)
            .all(|v| v >= self.v_min - slack && v <= self.v_max + slack)
    }
}

pub fn compute_bounds(net: &NetworkParams) -> Bounds {
    let scale = 1.0 - net.gamma;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..net.n {
        let row = net.row(i);
        let neg: f64 = row.iter().filter(|w| **w < 0.0).sum();
        let pos: f64 = row.iter().filter(|w| **w > 0.0).sum();
        lo = lo.min(neg + net.i_ext[i]);
        hi = hi.max(pos + net.i_ext[i]);
    }
    Bounds {
        v_min: (lo / scale).min(0.0),
        v_max: (hi / scale).max(0.0),
    }
}

/// Synaptic current `i -> sum_{j in D(eta)} W_ij`, without the external term.
pub fn synaptic_current(net: &NetworkParams, eta: &SpikingPattern) -> Result<Vec<f64>> {
    if eta.len() != net.n {
        return Err(Error::DimensionMismatch {
            expected: net.n,
            got: eta.len(),
        });
    }
    let fired: Vec<usize> = eta.fire_set().collect();
    Ok((0..net.n)
        .map(|i| {
            let row = net.row(i);
            let mut s = 0.0;
            for &j in &fired {
                s += row[j];
            }
            s
        })
        .collect())
}

/// Total current `I_i(eta)` for every neuron.
pub fn total_current(net: &NetworkParams, eta: &SpikingPattern) -> Vec<f64> {
    let fired: Vec<usize> = eta.fire_set().collect();
    (0..net.n).map(|i| net.total_current(i, &fired)).collect()
}

/// Reusable buffers for iterating the map without per-step allocation.
pub(crate) struct Stepper<'a> {
    net: &'a NetworkParams,
    fired: Vec<usize>,
}

impl<'a> Stepper<'a> {
    pub(crate) fn new(net: &'a NetworkParams) -> Self {
        Stepper {
            net,
            fired: Vec::with_capacity(net.n),
        }
    }

    /// Writes `F(cur)` into `next`. All firing states are read from `cur`.
    pub(crate) fn advance(&mut self, cur: &[f64], next: &mut [f64]) {
        self.fired.clear();
        self.fired
            .extend(cur.iter().enumerate().filter(|(_, u)| **u >= 0.0).map(|(j, _)| j));
        for (i, out) in next.iter_mut().enumerate() {
            let total = self.net.total_current(i, &self.fired);
            *out = self.net.update_offset(cur[i], cur[i] >= 0.0, total);
        }
    }

    pub(crate) fn step_in_place(&mut self, cur: &mut Vec<f64>, scratch: &mut Vec<f64>) {
        scratch.resize(cur.len(), 0.0);
        self.advance(cur, scratch);
        std::mem::swap(cur, scratch);
    }
}

fn check_state(net: &NetworkParams, v: &State) -> Result<()> {
    if v.n() != net.n {
        return Err(Error::DimensionMismatch {
            expected: net.n,
            got: v.n(),
        });
    }
    Ok(())
}

/// One synchronous application of the map.
pub fn step(net: &NetworkParams, v: &State) -> State {
    assert_eq!(v.n(), net.n, "state dimension must match the network");
    let mut next = vec![0.0; net.n];
    Stepper::new(net).advance(&v.offsets, &mut next);
    State {
        theta: net.theta,
        offsets: next,
    }
}

/// `step` plus independent centred Gaussian noise of standard deviation
/// `sigma_b` on every coordinate. `sigma_b == 0` is bit-identical to `step`.
pub fn step_noisy<R: Rng + ?Sized>(net: &NetworkParams, v: &State, sigma_b: f64, rng: &mut R) -> State {
    let mut next = step(net, v);
    if sigma_b != 0.0 {
        for u in &mut next.offsets {
            let z: f64 = rng.sample(StandardNormal);
            *u += sigma_b * z;
        }
    }
    next
}

/// States `v(0..=t_max)` together with their raster.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    states: Vec<State>,
    raster: Raster,
}

impl Trajectory {
    pub fn from_states(states: Vec<State>) -> Result<Trajectory> {
        let n = states.first().map(State::n).ok_or_else(|| Error::invalid("empty trajectory"))?;
        let mut raster = Raster::with_capacity(n, states.len());
        for s in &states {
            raster.push(s.pattern())?;
        }
        Ok(Trajectory { states, raster })
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn raster(&self) -> &Raster {
        &self.raster
    }

    /// Number of stored states (`t_max + 1`).
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> &State {
        self.states.last().expect("trajectories are never empty")
    }
}

pub fn simulate(net: &NetworkParams, v0: &State, t_max: usize) -> Result<Trajectory> {
    simulate_with_noise::<rand::rngs::ThreadRng>(net, v0, t_max, 0.0, None)
}

/// Simulation with optional additive Gaussian noise. Noise requires a
/// random source.
pub fn simulate_with_noise<R: Rng + ?Sized>(
    net: &NetworkParams,
    v0: &State,
    t_max: usize,
    sigma_b: f64,
    rng: Option<&mut R>,
) -> Result<Trajectory> {
    check_state(net, v0)?;
    if !(sigma_b.is_finite() && sigma_b >= 0.0) {
        return Err(Error::invalid(format!("noise amplitude must be finite and >= 0, got {sigma_b}")));
    }
    let mut rng = match (sigma_b > 0.0, rng) {
        (true, None) => return Err(Error::MissingRng(sigma_b)),
        (_, r) => r,
    };
    let mut states = Vec::with_capacity(t_max + 1);
    let mut raster = Raster::with_capacity(net.n, t_max + 1);
    let mut stepper = Stepper::new(net);
    states.push(v0.clone());
    raster.push(v0.pattern())?;
    for _ in 0..t_max {
        let cur = states.last().expect("non-empty");
        let mut next = vec![0.0; net.n];
        stepper.advance(&cur.offsets, &mut next);
        if sigma_b > 0.0 {
            let rng = rng.as_deref_mut().expect("checked above");
            for u in &mut next {
                let z: f64 = rng.sample(StandardNormal);
                *u += sigma_b * z;
            }
        }
        let s = State {
            theta: net.theta,
            offsets: next,
        };
        raster.push(s.pattern())?;
        states.push(s);
    }
    Ok(Trajectory { states, raster })
}

/// Firing times of neuron `i` in a raster.
pub fn firing_times(raster: &Raster, i: usize) -> Result<Vec<usize>> {
    raster.firing_times(i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn example1() -> NetworkParams {
        NetworkParams::new(0.5, 1.0, vec![vec![0.0]], vec![0.5]).unwrap()
    }

    #[test]
    fn bounds_examples() {
        let net = NetworkParams::new(0.5, 1.0, vec![vec![0.0, 1.0], vec![-1.0, 0.0]], vec![0.0, 0.0]).unwrap();
        assert_eq!(compute_bounds(&net), Bounds { v_min: -2.0, v_max: 2.0 });

        for gamma in [0.0, 0.3, 0.9] {
            let zero = NetworkParams::new(gamma, 1.0, vec![vec![0.0; 3]; 3], vec![0.0; 3]).unwrap();
            assert_eq!(compute_bounds(&zero), Bounds { v_min: 0.0, v_max: 0.0 });
        }

        assert_eq!(compute_bounds(&example1()), Bounds { v_min: 0.0, v_max: 1.0 });
    }

    #[test]
    fn threshold_is_inclusive() {
        assert!(spiking_state(1.0, 1.0));
        assert!(!spiking_state(1.0 - 1e-15, 1.0));
        let b = Bounds { v_min: -1.0, v_max: 2.0 };
        assert!(spiking_state(b.v_max, 1.0));
    }

    #[test]
    fn synaptic_current_examples() {
        let net = NetworkParams::new(0.5, 1.0, vec![vec![0.0, 1.0], vec![-1.0, 0.0]], vec![0.0, 0.0]).unwrap();
        assert_eq!(synaptic_current(&net, &SpikingPattern::zeros(2)).unwrap(), vec![0.0, 0.0]);
        assert_eq!(synaptic_current(&net, &SpikingPattern::ones(2)).unwrap(), vec![1.0, -1.0]);

        let one = example1();
        for eta in [SpikingPattern::zeros(1), SpikingPattern::ones(1)] {
            assert_eq!(synaptic_current(&one, &eta).unwrap(), vec![0.0]);
        }
        assert!(synaptic_current(&net, &SpikingPattern::zeros(3)).is_err());
    }

    #[test]
    fn step_examples() {
        let net = example1();
        let v = step(&net, &State::zeros(&net));
        assert_eq!(v.potentials(), vec![0.5]);

        let fired = step(&net, &State::from_potentials(&net, &[1.0]).unwrap());
        assert_eq!(fired.potentials(), vec![0.5]);

        let dead = NetworkParams::new(0.5, 1.0, vec![vec![0.0]], vec![0.0]).unwrap();
        assert_eq!(step(&dead, &State::zeros(&dead)).potentials(), vec![0.0]);
    }

    #[test]
    fn synchronous_update_reads_pre_step_state() {
        // neuron 0 excites 1 and 1 excites 0; both start above threshold
        let net = NetworkParams::new(0.5, 1.0, vec![vec![0.0, 0.3], vec![0.4, 0.0]], vec![0.0, 0.0]).unwrap();
        let v = State::from_potentials(&net, &[1.5, 1.5]).unwrap();
        let next = step(&net, &v).potentials();
        assert!((next[0] - 0.3).abs() < 1e-15 && (next[1] - 0.4).abs() < 1e-15, "{next:?}");
    }

    #[test]
    fn zero_noise_is_bit_identical() {
        let net = NetworkParams::new(0.7, 1.0, vec![vec![0.2, -0.4], vec![0.9, 0.1]], vec![0.3, 0.05]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let v = State::from_potentials(&net, &[0.3, 1.2]).unwrap();
        let a = step(&net, &v);
        let b = step_noisy(&net, &v, 0.0, &mut rng);
        let bits = |s: &State| s.offsets().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn noisy_step_is_reproducible() {
        let net = example1();
        let v = State::zeros(&net);
        let a = step_noisy(&net, &v, 0.3, &mut ChaCha8Rng::seed_from_u64(11));
        let b = step_noisy(&net, &v, 0.3, &mut ChaCha8Rng::seed_from_u64(11));
        assert_eq!(a, b);
    }

    #[test]
    fn noise_has_zero_mean() {
        let net = NetworkParams::new(0.5, 1.0, vec![vec![0.0]], vec![0.0]).unwrap();
        let v = State::zeros(&net);
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let draws = 100_000;
        let mean = (0..draws)
            .map(|_| step_noisy(&net, &v, 1.0, &mut rng).potential(0))
            .sum::<f64>()
            / draws as f64;
        assert!(mean.abs() < 0.01, "sample mean {mean}");
    }

    #[test]
    fn simulate_rejects_noise_without_rng() {
        let net = example1();
        let err = simulate_with_noise::<ChaCha8Rng>(&net, &State::zeros(&net), 3, 0.1, None).unwrap_err();
        assert!(matches!(err, Error::MissingRng(_)));
    }

    #[test]
    fn simulate_example1_and_zero_horizon() {
        let net = example1();
        let traj = simulate(&net, &State::zeros(&net), 10).unwrap();
        assert_eq!(traj.len(), 11);
        for (t, s) in traj.states().iter().enumerate() {
            assert_eq!(s.potential(0), 1.0 - 0.5f64.powi(t as i32));
        }
        assert!(traj.raster().iter().all(SpikingPattern::is_all_zero));

        let single = simulate(&net, &State::zeros(&net), 0).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(single.states()[0], State::zeros(&net));
    }

    #[test]
    fn full_activity_persists() {
        let net = NetworkParams::new(0.6, 1.0, vec![vec![0.7, 0.5], vec![0.2, 0.9]], vec![0.1, 0.0]).unwrap();
        let v0 = State::from_potentials(&net, &[1.0, 3.0]).unwrap();
        let traj = simulate(&net, &v0, 50).unwrap();
        assert!(traj.raster().iter().all(SpikingPattern::is_all_ones));
    }

    #[test]
    fn example2_first_firing_time() {
        // W22 > theta keeps neuron 2 firing; neuron 1 integrates W12 = 0.6
        let net = NetworkParams::new(0.5, 1.0, vec![vec![0.0, 0.6], vec![0.1, 1.5]], vec![0.0, 0.0]).unwrap();
        let v0 = State::from_potentials(&net, &[0.0, 1.5]).unwrap();
        let traj = simulate(&net, &v0, 10).unwrap();
        // v1(t) = 1.2 (1 - 0.5^t): 0.6, 0.9, 1.05 -> first crossing at t = 3
        assert_eq!(firing_times(traj.raster(), 0).unwrap().first(), Some(&3));
        assert!(firing_times(traj.raster(), 2).is_err());
    }

    #[test]
    fn invalid_networks_are_rejected() {
        assert!(NetworkParams::new(1.0, 1.0, vec![vec![0.0]], vec![0.0]).is_err());
        assert!(NetworkParams::new(0.5, 0.0, vec![vec![0.0]], vec![0.0]).is_err());
        assert!(NetworkParams::new(0.5, 1.0, vec![vec![f64::NAN]], vec![0.0]).is_err());
        assert!(NetworkParams::new(0.5, 1.0, vec![vec![0.0, 0.0], vec![0.0, 0.0]], vec![0.0; 3]).is_err());
        assert!(NetworkParams::new(0.5, 1.0, vec![vec![0.0, 0.0], vec![0.0]], vec![0.0; 2]).is_err());
    }

    #[test]
    fn json_shape() {
        let net = NetworkParams::new(0.5, 1.0, vec![vec![0.0, 1.0], vec![-1.0, 0.25]], vec![0.1, 0.0]).unwrap();
        let json = serde_json::to_string(&net).unwrap();
        assert_eq!(
            json,
            r#"{"n":2,"gamma":0.5,"theta":1.0,"weights":[[0.0,1.0],[-1.0,0.25]],"i_ext":[0.1,0.0]}"#
        );
        let back: NetworkParams = serde_json::from_str(&json).unwrap();
        assert_eq!(back, net);
        let bad = r#"{"n":2,"gamma":0.5,"theta":1.0,"weights":[[0,1],[1,0]],"i_ext":[0,0,0]}"#;
        assert!(serde_json::from_str::<NetworkParams>(bad).is_err());
    }
}
