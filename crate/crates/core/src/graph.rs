//! Legal transitions between domains of the natural partition.
//!
//! Inside a domain `M_eta` the map acts coordinatewise once `eta` is fixed,
//! so the image `F(M_eta)` is a product of per-neuron intervals. An edge
//! `eta -> eta'` therefore factorizes into one requirement per neuron:
//! a firing neuron's next state depends only on `I_i(eta)`, a quiescent
//! neuron's next state depends on where `v_i` sits in `[v_min, theta)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{compute_bounds, NetworkParams};
use crate::pattern::{Raster, SpikingPattern};

/// Largest network for which the `2^N` domains are enumerated.
pub const DEFAULT_ENUMERATION_CAP: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Unconditional,
    Conditional,
    Illegal,
}

/// Outcome of one neuron over the source domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NeuronRule {
    /// Fires for every admissible `v_i`.
    Fires,
    /// Stays quiescent for every admissible `v_i`.
    Silent,
    /// Fires iff `v_i >= fire_from`, with both outcomes reachable.
    Either { fire_from: f64 },
}

/// Half-open potential interval `[lo, hi)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EdgeCounts {
    pub unconditional: u64,
    pub conditional: u64,
    pub illegal: u64,
}

#[derive(Clone, Debug)]
pub struct TransitionGraph {
    n: usize,
    v_min: f64,
    theta: f64,
    // rules[source index][neuron]
    rules: Vec<Vec<NeuronRule>>,
}

pub fn build_transition_graph(net: &NetworkParams) -> Result<TransitionGraph> {
    build_transition_graph_capped(net, DEFAULT_ENUMERATION_CAP)
}

pub fn build_transition_graph_capped(net: &NetworkParams, cap: usize) -> Result<TransitionGraph> {
    let n = net.n();
    if n > cap || n > 63 {
        return Err(Error::TooLarge { n, cap });
    }
    let bounds = compute_bounds(net);
    let theta = net.theta();
    let gamma = net.gamma();
    let rules = (0..1u64 << n)
        .map(|idx| {
            let eta = SpikingPattern::from_index(n, idx);
            let fired: Vec<usize> = eta.fire_set().collect();
            (0..n)
                .map(|i| {
                    let current = net.total_current(i, &fired);
                    if eta.get(i) {
                        if current >= theta {
                            NeuronRule::Fires
                        } else {
                            NeuronRule::Silent
                        }
                    } else {
                        quiescent_rule(gamma, theta, bounds.v_min, current)
                    }
                })
                .collect()
        })
        .collect();
    Ok(TransitionGraph {
        n,
        v_min: bounds.v_min,
        theta,
        rules,
    })
}

// v_i ranges over [v_min, theta). The supremum gamma*theta + I is not
// attained, so firing needs it strictly above theta unless gamma = 0.
fn quiescent_rule(gamma: f64, theta: f64, v_min: f64, current: f64) -> NeuronRule {
    if gamma == 0.0 {
        return if current >= theta {
            NeuronRule::Fires
        } else {
            NeuronRule::Silent
        };
    }
    let can_fire = gamma * theta + current > theta;
    let can_rest = gamma * v_min + current < theta;
    match (can_fire, can_rest) {
        (true, true) => NeuronRule::Either {
            fire_from: (theta - current) / gamma,
        },
        (true, false) => NeuronRule::Fires,
        (false, _) => NeuronRule::Silent,
    }
}

impl TransitionGraph {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn node_count(&self) -> u64 {
        1u64 << self.n
    }

    pub fn rules(&self, from: &SpikingPattern) -> &[NeuronRule] {
        &self.rules[from.to_index() as usize]
    }

    pub fn edge_kind(&self, from: &SpikingPattern, to: &SpikingPattern) -> EdgeKind {
        self.edge_kind_by_index(from.to_index(), to.to_index())
    }

    fn edge_kind_by_index(&self, from: u64, to: u64) -> EdgeKind {
        let mut conditional = false;
        for (i, rule) in self.rules[from as usize].iter().enumerate() {
            let want_fire = (to >> i) & 1 == 1;
            match (rule, want_fire) {
                (NeuronRule::Fires, true) | (NeuronRule::Silent, false) => {}
                (NeuronRule::Fires, false) | (NeuronRule::Silent, true) => return EdgeKind::Illegal,
                (NeuronRule::Either { .. }, _) => conditional = true,
            }
        }
        if conditional {
            EdgeKind::Conditional
        } else {
            EdgeKind::Unconditional
        }
    }

    /// For a conditional edge, the interval of `v_i` each constrained
    /// quiescent neuron must lie in. `None` for illegal edges; empty for
    /// unconditional ones.
    pub fn conditions(&self, from: &SpikingPattern, to: &SpikingPattern) -> Option<Vec<(usize, Interval)>> {
        if self.edge_kind(from, to) == EdgeKind::Illegal {
            return None;
        }
        Some(
            self.rules(from)
                .iter()
                .enumerate()
                .filter_map(|(i, rule)| match rule {
                    NeuronRule::Either { fire_from } => {
                        let iv = if to.get(i) {
                            Interval {
                                lo: fire_from.max(self.v_min),
                                hi: self.theta,
                            }
                        } else {
                            Interval {
                                lo: self.v_min,
                                hi: fire_from.min(self.theta),
                            }
                        };
                        Some((i, iv))
                    }
                    _ => None,
                })
                .collect(),
        )
    }

    /// Non-illegal successors of `from` with their kinds.
    pub fn successors(&self, from: &SpikingPattern) -> Vec<(SpikingPattern, EdgeKind)> {
        let rules = self.rules(from);
        let mut base = 0u64;
        let mut free = Vec::new();
        for (i, rule) in rules.iter().enumerate() {
            match rule {
                NeuronRule::Fires => base |= 1 << i,
                NeuronRule::Silent => {}
                NeuronRule::Either { .. } => free.push(i),
            }
        }
        let kind = if free.is_empty() {
            EdgeKind::Unconditional
        } else {
            EdgeKind::Conditional
        };
        (0..1u64 << free.len())
            .map(|mask| {
                let mut idx = base;
                for (b, &i) in free.iter().enumerate() {
                    if (mask >> b) & 1 == 1 {
                        idx |= 1 << i;
                    }
                }
                (SpikingPattern::from_index(self.n, idx), kind)
            })
            .collect()
    }

    pub fn counts(&self) -> EdgeCounts {
        let total = self.node_count();
        let mut c = EdgeCounts::default();
        for rules in &self.rules {
            let free = rules
                .iter()
                .filter(|r| matches!(r, NeuronRule::Either { .. }))
                .count();
            let legal = 1u64 << free;
            if free == 0 {
                c.unconditional += 1;
            } else {
                c.conditional += legal;
            }
            c.illegal += total - legal;
        }
        c
    }

    /// True when every domain maps into a single domain.
    pub fn is_markov(&self) -> bool {
        self.rules
            .iter()
            .flatten()
            .all(|r| !matches!(r, NeuronRule::Either { .. }))
    }

    /// Every edge as `(from, to, kind)`, sources in index order. Illegal
    /// edges are listed only when asked for.
    pub fn edges(&self, include_illegal: bool) -> Vec<(SpikingPattern, SpikingPattern, EdgeKind)> {
        let mut out = Vec::new();
        for from_idx in 0..self.node_count() {
            let from = SpikingPattern::from_index(self.n, from_idx);
            if include_illegal {
                for to_idx in 0..self.node_count() {
                    let kind = self.edge_kind_by_index(from_idx, to_idx);
                    out.push((from.clone(), SpikingPattern::from_index(self.n, to_idx), kind));
                }
            } else {
                let mut succ = self.successors(&from);
                succ.sort_by_key(|(p, _)| p.to_index());
                out.extend(succ.into_iter().map(|(to, k)| (from.clone(), to, k)));
            }
        }
        out
    }
}

/// Whether the natural partition is already Markov for this network.
pub fn is_markov_natural(net: &NetworkParams) -> Result<bool> {
    Ok(build_transition_graph(net)?.is_markov())
}

/// True iff no consecutive pair of patterns is an illegal edge.
pub fn check_legal(raster: &Raster, graph: &TransitionGraph) -> bool {
    raster
        .patterns()
        .windows(2)
        .all(|w| graph.edge_kind(&w[0], &w[1]) != EdgeKind::Illegal)
}
