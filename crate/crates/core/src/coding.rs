//! Raster coding of trajectories and reconstruction of potentials from a
//! raster.
//!
//! Given the spiking sequence, neuron `i` evolves by an affine recursion: a
//! firing step resets it to `I_i(eta)`, a quiescent step applies the leak and
//! adds `I_i(eta)`. Reconstruction evaluates the closed-form sum in this
//! nested (Horner) order, which matches the simulator operation for
//! operation, so agreement with simulation is exact once a neuron has fired.

use crate::error::{Error, Result};
use crate::model::{pattern_of, NetworkParams, State, Trajectory};
use crate::pattern::{Raster, SpikingPattern};

/// Raster of a trajectory, recomputed from its states.
pub fn encode(traj: &Trajectory) -> Raster {
    encode_states(traj.states()).expect("trajectory states share one dimension")
}

pub fn encode_states(states: &[State]) -> Result<Raster> {
    let n = states.first().map_or(0, State::n);
    let mut raster = Raster::with_capacity(n, states.len());
    for s in states {
        raster.push(s.pattern())?;
    }
    Ok(raster)
}

fn fired_lists(raster: &Raster) -> Vec<Vec<usize>> {
    raster.iter().map(|p| p.fire_set().collect()).collect()
}

fn check_dims(net: &NetworkParams, v0: &State, raster: &Raster) -> Result<()> {
    if raster.n() != net.n() {
        return Err(Error::DimensionMismatch {
            expected: net.n(),
            got: raster.n(),
        });
    }
    if v0.n() != net.n() {
        return Err(Error::DimensionMismatch {
            expected: net.n(),
            got: v0.n(),
        });
    }
    Ok(())
}

/// Potentials at time `t` from `v0` and the raster `eta_0..eta_{t-1}`.
pub fn reconstruct(net: &NetworkParams, v0: &State, raster: &Raster, t: usize) -> Result<State> {
    check_dims(net, v0, raster)?;
    if t >= raster.len() {
        return Err(Error::TimeOutOfRange { t, len: raster.len() });
    }
    let fired = fired_lists(raster);
    let mut offsets = v0.offsets().to_vec();
    for (k, f) in fired.iter().take(t).enumerate() {
        let eta = &raster[k];
        for (i, u) in offsets.iter_mut().enumerate() {
            *u = net.update_offset(*u, eta.get(i), net.total_current(i, f));
        }
    }
    Ok(State::from_offsets(net.theta(), offsets))
}

/// Reconstruction at every time `0..raster.len()`.
pub fn reconstruct_all(net: &NetworkParams, v0: &State, raster: &Raster) -> Result<Vec<State>> {
    check_dims(net, v0, raster)?;
    let fired = fired_lists(raster);
    let mut out = Vec::with_capacity(raster.len());
    let mut offsets = v0.offsets().to_vec();
    for (k, f) in fired.iter().enumerate() {
        out.push(State::from_offsets(net.theta(), offsets.clone()));
        if k + 1 == raster.len() {
            break;
        }
        let eta = &raster[k];
        for (i, u) in offsets.iter_mut().enumerate() {
            *u = net.update_offset(*u, eta.get(i), net.total_current(i, f));
        }
    }
    Ok(out)
}

/// States of the periodic orbit coded by `cycle`, read as a bi-infinite
/// periodic sequence. Entry `t` carries pattern `cycle[t]`.
///
/// A neuron that fires somewhere in the cycle is rebuilt from its last
/// firing. A neuron that never fires is the fixed point of the period map,
/// summed in closed form over one period and divided by `1 - gamma^P`.
///
/// Returns [`Error::IllegalCode`] when the resulting states do not
/// reproduce the cycle.
pub fn reconstruct_periodic(net: &NetworkParams, cycle: &Raster) -> Result<Vec<State>> {
    if cycle.is_empty() {
        return Err(Error::invalid("cycle must contain at least one pattern"));
    }
    if cycle.n() != net.n() {
        return Err(Error::DimensionMismatch {
            expected: net.n(),
            got: cycle.n(),
        });
    }
    let offsets = periodic_offsets(net, cycle.patterns());
    let states: Vec<State> = offsets
        .into_iter()
        .map(|o| State::from_offsets(net.theta(), o))
        .collect();
    if states.iter().zip(cycle.iter()).any(|(s, eta)| &s.pattern() != eta) {
        return Err(Error::IllegalCode);
    }
    Ok(states)
}

/// Periodic reconstruction on raw patterns, without the legality check.
pub(crate) fn periodic_offsets(net: &NetworkParams, cycle: &[SpikingPattern]) -> Vec<Vec<f64>> {
    let n = net.n();
    let period = cycle.len();
    let gamma = net.gamma();
    let fired: Vec<Vec<usize>> = cycle.iter().map(|p| p.fire_set().collect()).collect();
    // totals[r][i] = I_i(eta_r)
    let totals: Vec<Vec<f64>> = fired
        .iter()
        .map(|f| (0..n).map(|i| net.total_current(i, f)).collect())
        .collect();
    let damping = 1.0 - gamma.powi(period as i32);

    let mut out = vec![vec![0.0; n]; period];
    for i in 0..n {
        let fires_somewhere = cycle.iter().any(|p| p.get(i));
        for (t, row) in out.iter_mut().enumerate() {
            row[i] = if fires_somewhere {
                // most recent firing strictly before t (cyclically)
                let back = (1..=period)
                    .find(|&k| cycle[(t + period - k) % period].get(i))
                    .expect("neuron fires somewhere in the cycle");
                let s = (t + period - back) % period;
                let mut u = net.update_offset(0.0, true, totals[s][i]);
                for k in (1..back).rev() {
                    let r = (t + period - k) % period;
                    u = net.update_offset(u, false, totals[r][i]);
                }
                u
            } else {
                let mut acc = 0.0;
                for k in (1..=period).rev() {
                    let r = (t + period - k) % period;
                    acc = net.update_offset(acc, false, totals[r][i]);
                }
                acc / damping
            };
        }
    }
    out
}

/// True when the periodic reconstruction of `cycle` reproduces it and no
/// quiescent step of the reconstruction lands within the subnormal range of
/// the threshold after its leak term underflowed. Such a cycle exists only
/// because of floating-point underflow (the exact orbit approaches the
/// threshold without reaching it), so it cannot be certified.
pub(crate) fn is_realizable_cycle(net: &NetworkParams, cycle: &[SpikingPattern]) -> bool {
    let offsets = periodic_offsets(net, cycle);
    if !offsets.iter().zip(cycle).all(|(o, eta)| &pattern_of(o) == eta) {
        return false;
    }
    let period = cycle.len();
    let gamma = net.gamma();
    let tiny = f64::MIN_POSITIVE;
    (0..period).all(|t| {
        let next = &offsets[(t + 1) % period];
        offsets[t].iter().zip(next).enumerate().all(|(i, (&prev, &after))| {
            cycle[t].get(i) || prev == 0.0 || (gamma * prev).abs() >= tiny || after.abs() >= tiny
        })
    })
}
