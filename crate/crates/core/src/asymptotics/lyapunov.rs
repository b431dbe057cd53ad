//! Finite-ball ("effective") Lyapunov exponent.
//!
//! A set of companion trajectories is kept at max-metric distance
//! `ball_radius` from a mother trajectory. After each step the largest
//! separation is logged relative to the radius and every companion is
//! pulled back onto the ball along its current displacement. The map is
//! a contraction away from the threshold, so the estimate only becomes
//! positive when the ball is wide enough to straddle the threshold.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{max_distance, NetworkParams, State, Stepper};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LyapunovConfig {
    pub ball_radius: f64,
    pub num_directions: usize,
    /// Steps averaged over.
    pub horizon: usize,
    /// Steps the mother runs alone before companions are attached.
    pub burn_in: usize,
}

impl Default for LyapunovConfig {
    fn default() -> Self {
        LyapunovConfig {
            ball_radius: 1e-3,
            num_directions: 4,
            horizon: 2_000,
            burn_in: 1_000,
        }
    }
}

fn random_direction<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let d: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let norm = d.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if norm > 0.0 {
            return d.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn place_on_ball(mother: &[f64], direction: &[f64], radius: f64, out: &mut [f64]) {
    for ((o, m), d) in out.iter_mut().zip(mother).zip(direction) {
        *o = m + radius * d;
    }
}

/// Time-averaged log expansion of the ball around the trajectory of `v0`.
///
/// Companions that collapse onto the mother (every displaced coordinate
/// fired) are re-seeded along a fresh random direction. Steps on which all
/// companions collapsed carry no finite expansion and are skipped; if that
/// happens on every step the result is `-inf`.
pub fn effective_lyapunov<R: Rng + ?Sized>(
    net: &NetworkParams,
    v0: &State,
    cfg: &LyapunovConfig,
    rng: &mut R,
) -> Result<f64> {
    if v0.n() != net.n() {
        return Err(Error::DimensionMismatch {
            expected: net.n(),
            got: v0.n(),
        });
    }
    if !(cfg.ball_radius > 0.0 && cfg.ball_radius.is_finite()) {
        return Err(Error::invalid("ball radius must be positive and finite"));
    }
    if cfg.num_directions == 0 || cfg.horizon == 0 {
        return Err(Error::invalid("num_directions and horizon must be at least 1"));
    }
    let n = net.n();
    let r = cfg.ball_radius;
    let mut stepper = Stepper::new(net);
    let mut scratch = Vec::with_capacity(n);

    let mut mother = v0.offsets().to_vec();
    for _ in 0..cfg.burn_in {
        stepper.step_in_place(&mut mother, &mut scratch);
    }
    let mut companions: Vec<Vec<f64>> = (0..cfg.num_directions)
        .map(|_| {
            let mut c = vec![0.0; n];
            place_on_ball(&mother, &random_direction(n, rng), r, &mut c);
            c
        })
        .collect();

    let mut sum = 0.0;
    let mut counted = 0usize;
    let mut direction = vec![0.0; n];
    for _ in 0..cfg.horizon {
        stepper.step_in_place(&mut mother, &mut scratch);
        let mut widest = 0.0f64;
        for c in &mut companions {
            stepper.step_in_place(c, &mut scratch);
            let d = max_distance(c, &mother);
            widest = widest.max(d);
            if d > 0.0 {
                for ((dir, x), m) in direction.iter_mut().zip(c.iter()).zip(&mother) {
                    *dir = (x - m) / d;
                }
            } else {
                direction = random_direction(n, rng);
            }
            place_on_ball(&mother, &direction, r, c);
        }
        if widest > 0.0 {
            sum += (widest / r).ln();
            counted += 1;
        }
    }
    Ok(if counted == 0 {
        f64::NEG_INFINITY
    } else {
        sum / counted as f64
    })
}
