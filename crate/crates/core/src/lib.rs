//! Discrete-time leaky integrate-and-fire networks viewed as a piecewise
//! affine map.
//!
//! The state is the membrane-potential vector `V`; one step applies
//!
//! ```text
//! V'_i = gamma * V_i * (1 - Z(V_i)) + sum_j W_ij Z(V_j) + I_ext_i,   Z(x) = [x >= theta]
//! ```
//!
//! synchronously to every neuron. The crate provides the map and its
//! simulation ([`model`]), the raster code and the legal-transition graph
//! of the natural partition ([`coding`], [`graph`]), periodic-orbit
//! detection and distances to the threshold set ([`asymptotics`]), random
//! ensembles and parameter sweeps ([`ensemble`]), and the file formats used
//! by the command-line tool ([`io`]).
//!
//! ```
//! use bms_core::model::{simulate, NetworkParams, State};
//!
//! let net = NetworkParams::new(0.5, 1.0, vec![vec![0.0]], vec![0.5]).unwrap();
//! let traj = simulate(&net, &State::zeros(&net), 3).unwrap();
//! assert_eq!(traj.last().potential(0), 0.875);
//! ```

pub mod asymptotics;
pub mod coding;
pub mod ensemble;
pub mod error;
pub mod graph;
pub mod io;
pub mod model;
pub mod pattern;

pub use error::{Error, Result};
pub use model::{Bounds, NetworkParams, State, Trajectory};
pub use pattern::{Raster, SpikingPattern};
