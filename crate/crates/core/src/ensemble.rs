//! Random networks with Gaussian couplings and `(gamma, C)` parameter
//! sweeps.
//!
//! Weights are i.i.d. `N(0, C^2 / N)`, diagonal included. Every network in a
//! sweep draws from its own stream keyed by `(seed, gamma, C, network
//! index)`, so a cell's result does not depend on the grid order or on the
//! thread schedule.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{
    classify_regime, dist_attractor_to_s, effective_lyapunov, omega_sample, sample_initial_state, Horizons,
    LyapunovConfig, RegimeLabel, DEFAULT_EPSILON_SINGULAR, DEFAULT_TOLERANCE,
};
use crate::error::{Error, Result};
use crate::model::NetworkParams;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub n: usize,
    /// Coupling scale `C`; weight variance is `C^2 / N`.
    pub c: f64,
    pub gamma: f64,
    pub theta: f64,
    pub i_ext: f64,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn new(n: usize, c: f64, gamma: f64, seed: u64) -> Self {
        EnsembleSpec {
            n,
            c,
            gamma,
            theta: 1.0,
            i_ext: 0.0,
            seed,
        }
    }

    /// Draws one network from the spec's own seed.
    pub fn sample(&self) -> Result<NetworkParams> {
        sample_network(self, &mut ChaCha8Rng::seed_from_u64(self.seed))
    }
}

pub fn sample_network<R: Rng + ?Sized>(spec: &EnsembleSpec, rng: &mut R) -> Result<NetworkParams> {
    if spec.n == 0 {
        return Err(Error::invalid("ensemble size must be at least 1"));
    }
    if !(spec.c >= 0.0 && spec.c.is_finite()) {
        return Err(Error::invalid(format!("coupling scale must be finite and >= 0, got {}", spec.c)));
    }
    let std_dev = spec.c / (spec.n as f64).sqrt();
    let weights = (0..spec.n * spec.n)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            if spec.c == 0.0 {
                0.0
            } else {
                std_dev * z
            }
        })
        .collect();
    NetworkParams::from_flat(spec.gamma, spec.theta, weights, vec![spec.i_ext; spec.n])
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for a sub-task, mixed from a parent seed and a key path.
pub fn derive_seed(seed: u64, keys: &[u64]) -> u64 {
    keys.iter().fold(splitmix(seed), |acc, k| splitmix(acc ^ splitmix(*k)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub gammas: Vec<f64>,
    pub cs: Vec<f64>,
    pub n: usize,
    pub networks_per_cell: usize,
    pub inits_per_network: usize,
    pub max_transient: usize,
    pub max_period: usize,
    pub tol: f64,
    pub theta: f64,
    pub i_ext: f64,
    pub epsilon_singular: f64,
    pub seed: u64,
}

impl Default for SweepConfig {
    /// 8x8 grid with gamma in [0, 0.875] and C in [0.25, 3], N=20, ten
    /// networks per cell and five initial conditions each.
    fn default() -> Self {
        let h = Horizons::default();
        SweepConfig {
            gammas: (0..8).map(|k| 0.125 * k as f64).collect(),
            cs: (0..8).map(|k| 0.25 + 2.75 * k as f64 / 7.0).collect(),
            n: 20,
            networks_per_cell: 10,
            inits_per_network: 5,
            max_transient: h.max_transient,
            max_period: h.max_period,
            tol: DEFAULT_TOLERANCE,
            theta: 1.0,
            i_ext: 0.0,
            epsilon_singular: DEFAULT_EPSILON_SINGULAR,
            seed: 0,
        }
    }
}

impl SweepConfig {
    pub fn horizons(&self) -> Horizons {
        Horizons {
            max_transient: self.max_transient,
            max_period: self.max_period,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.gammas.is_empty() || self.cs.is_empty() {
            return Err(Error::invalid("parameter grids must be non-empty"));
        }
        if self.gammas.iter().any(|g| !(0.0..1.0).contains(g)) {
            return Err(Error::invalid("every gamma must lie in [0, 1)"));
        }
        if self.cs.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::invalid("every C must be finite and >= 0"));
        }
        if self.n == 0 || self.networks_per_cell == 0 || self.inits_per_network == 0 {
            return Err(Error::invalid("n, networks per cell and inits per network must be at least 1"));
        }
        Ok(())
    }

    fn cells(&self) -> Vec<(f64, f64)> {
        self.gammas
            .iter()
            .flat_map(|&g| self.cs.iter().map(move |&c| (g, c)))
            .collect()
    }

    fn network_seed(&self, gamma: f64, c: f64, k: usize) -> u64 {
        derive_seed(self.seed, &[gamma.to_bits(), c.to_bits(), k as u64])
    }

    fn network(&self, gamma: f64, c: f64, k: usize) -> Result<(NetworkParams, u64)> {
        let seed = self.network_seed(gamma, c, k);
        let spec = EnsembleSpec {
            n: self.n,
            c,
            gamma,
            theta: self.theta,
            i_ext: self.i_ext,
            seed,
        };
        Ok((spec.sample()?, seed))
    }
}

/// Per-network summary used to build a sweep cell.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkOutcome {
    pub regime: RegimeLabel,
    pub d_as: Option<f64>,
    pub mean_period: Option<f64>,
    pub undetermined: usize,
    pub runs: usize,
}

pub fn analyze_network(net: &NetworkParams, cfg: &SweepConfig, seed: u64) -> Result<NetworkOutcome> {
    let sample = omega_sample(
        net,
        cfg.inits_per_network,
        derive_seed(seed, &[1]),
        cfg.horizons(),
        cfg.tol,
    )?;
    let regime = classify_regime(&sample, cfg.epsilon_singular)?;
    let d_as = dist_attractor_to_s(&sample.orbits).ok();
    let mean_period = (!sample.orbits.is_empty()).then(|| {
        sample.orbits.iter().map(|o| o.period as f64).sum::<f64>() / sample.orbits.len() as f64
    });
    Ok(NetworkOutcome {
        regime,
        d_as,
        mean_period,
        undetermined: sample.undetermined,
        runs: sample.runs,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub gamma: f64,
    pub c: f64,
    pub samples: usize,
    /// Arithmetic mean of the attractor distance over networks with at
    /// least one detected orbit. `NaN` when there are none.
    pub avg_d_as: f64,
    /// Mean of `log10` of the same distances (zero distances are clamped to
    /// the smallest normal float).
    pub log10_d_as: f64,
    pub death_fraction: f64,
    pub avg_period: f64,
    /// Fraction of orbit searches that hit the horizon.
    pub undetermined_fraction: f64,
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

impl SweepCell {
    pub fn aggregate(gamma: f64, c: f64, outcomes: &[NetworkOutcome]) -> SweepCell {
        let d: Vec<f64> = outcomes.iter().filter_map(|o| o.d_as).collect();
        let log_d: Vec<f64> = d.iter().map(|x| x.max(f64::MIN_POSITIVE).log10()).collect();
        let periods: Vec<f64> = outcomes.iter().filter_map(|o| o.mean_period).collect();
        let deaths = outcomes
            .iter()
            .filter(|o| o.regime == RegimeLabel::NeuralDeath)
            .count();
        let runs: usize = outcomes.iter().map(|o| o.runs).sum();
        let undetermined: usize = outcomes.iter().map(|o| o.undetermined).sum();
        SweepCell {
            gamma,
            c,
            samples: outcomes.len(),
            avg_d_as: mean(&d),
            log10_d_as: mean(&log_d),
            death_fraction: deaths as f64 / outcomes.len().max(1) as f64,
            avg_period: mean(&periods),
            undetermined_fraction: if runs == 0 {
                0.0
            } else {
                undetermined as f64 / runs as f64
            },
        }
    }
}

/// One cell per `(gamma, C)` pair, gammas outer, in grid order.
pub fn sweep(cfg: &SweepConfig) -> Result<Vec<SweepCell>> {
    cfg.validate()?;
    let cells = cfg.cells();
    let tasks: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|cell| (0..cfg.networks_per_cell).map(move |k| (cell, k)))
        .collect();
    let outcomes: Vec<NetworkOutcome> = tasks
        .par_iter()
        .map(|&(cell, k)| {
            let (gamma, c) = cells[cell];
            let (net, seed) = cfg.network(gamma, c, k)?;
            analyze_network(&net, cfg, seed)
        })
        .collect::<Result<_>>()?;
    Ok(cells
        .iter()
        .zip(outcomes.chunks(cfg.networks_per_cell))
        .map(|(&(gamma, c), chunk)| SweepCell::aggregate(gamma, c, chunk))
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovCell {
    pub gamma: f64,
    pub c: f64,
    pub samples: usize,
    /// Mean over finite estimates; `-inf` when every estimate was
    /// superstable.
    pub mean_lambda: f64,
    /// Fraction of runs where the ball collapsed on every step.
    pub superstable_fraction: f64,
}

/// Mean effective Lyapunov exponent per `(gamma, C)` cell, over the same
/// networks and initial conditions as [`sweep`].
pub fn lyapunov_map(cfg: &SweepConfig, lyap: &LyapunovConfig) -> Result<Vec<LyapunovCell>> {
    cfg.validate()?;
    let cells = cfg.cells();
    let inits = cfg.inits_per_network;
    let tasks: Vec<(usize, usize, usize)> = (0..cells.len())
        .flat_map(|cell| (0..cfg.networks_per_cell).flat_map(move |k| (0..inits).map(move |j| (cell, k, j))))
        .collect();
    let lambdas: Vec<f64> = tasks
        .par_iter()
        .map(|&(cell, k, j)| {
            let (gamma, c) = cells[cell];
            let (net, seed) = cfg.network(gamma, c, k)?;
            let v0 = sample_initial_state(&net, derive_seed(seed, &[1]), j);
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[2, j as u64]));
            effective_lyapunov(&net, &v0, lyap, &mut rng)
        })
        .collect::<Result<_>>()?;
    let per_cell = cfg.networks_per_cell * inits;
    Ok(cells
        .iter()
        .zip(lambdas.chunks(per_cell))
        .map(|(&(gamma, c), chunk)| {
            let finite: Vec<f64> = chunk.iter().copied().filter(|x| x.is_finite()).collect();
            LyapunovCell {
                gamma,
                c,
                samples: chunk.len(),
                mean_lambda: if finite.is_empty() {
                    f64::NEG_INFINITY
                } else {
                    mean(&finite)
                },
                superstable_fraction: (chunk.len() - finite.len()) as f64 / chunk.len() as f64,
            }
        })
        .collect())
}
