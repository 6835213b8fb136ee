//! Centipedes, brooms and centibrooms.
//!
//! All three structures are chains `θ_0 ⤳ θ_1 ⤳ ... ⤳ θ_k` starting at
//! `θ_0 = <i_0, t>` where each later node must satisfy a per-level predicate
//! relative to the end time `t'`:
//!
//! - centibroom: `θ_h ⇢ <i, t'>` for every `i` in the level's group;
//! - centipede: the same with singleton groups for `h < k`, and `θ_k` is
//!   exactly `<i_k, t'>`;
//! - broom: a centibroom with one level.
//!
//! The search runs forward over levels (candidates reachable from the
//! previous level that satisfy the level predicate), prunes backward to the
//! candidates that can still be completed, and then picks the least node by
//! `(time, agent)` at each level, which gives a deterministic witness.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::causality::{bound_guarantee, CausalGraph, NodeRef};
use crate::network::{AgentId, Network, Time};

pub type AgentSet = BTreeSet<AgentId>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StructureKind {
    Centipede,
    Broom,
    Centibroom,
}

impl fmt::Display for StructureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StructureKind::Centipede => "centipede",
            StructureKind::Broom => "broom",
            StructureKind::Centibroom => "centibroom",
        })
    }
}

/// What the chain's legs must cover.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Targets {
    /// Centipede agents `i_1..i_k`.
    Agents(Vec<AgentId>),
    /// Centibroom groups `I^1..I^k`.
    Groups(Vec<AgentSet>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StructureWitness {
    pub kind: StructureKind,
    /// `θ_0..θ_k`.
    pub nodes: Vec<NodeRef>,
    pub interval: (Time, Time),
    pub targets: Targets,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("interval start {start} is after its end {end}")]
    IntervalError { start: Time, end: Time },
    #[error("interval end {end} is after the horizon {horizon}")]
    HorizonExceeded { end: Time, horizon: Time },
    #[error("a structure needs at least one level (k >= 1)")]
    NoLevels,
    #[error("group {0} is empty")]
    EmptyGroup(usize),
    #[error("unknown agent {0}")]
    UnknownAgent(AgentId),
}

impl StructureWitness {
    /// Re-checks the witness clause by clause against `graph` and `network`.
    pub fn validate(&self, graph: &CausalGraph, network: &Network) -> bool {
        let (t, t_end) = self.interval;
        let k = self.nodes.len().saturating_sub(1);
        if k == 0 || self.nodes[0].time != t {
            return false;
        }
        if !self.nodes.windows(2).all(|w| graph.syncausal(w[0], w[1])) {
            return false;
        }
        match &self.targets {
            Targets::Groups(groups) => {
                groups.len() == k
                    && self.nodes[1..].iter().zip(groups).all(|(&node, group)| {
                        group.iter().all(|&m| bound_guarantee(network, node, NodeRef { agent: m, time: t_end }))
                    })
            }
            Targets::Agents(agents) => {
                agents.len() == k
                    && self.nodes[k] == NodeRef { agent: agents[k - 1], time: t_end }
                    && (1..k)
                        .all(|h| bound_guarantee(network, self.nodes[h], NodeRef { agent: agents[h - 1], time: t_end }))
            }
        }
    }

    pub fn origin(&self) -> NodeRef {
        self.nodes[0]
    }
}

impl fmt::Display for StructureWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} in ({}..{}):", self.kind, self.interval.0, self.interval.1)?;
        for (i, n) in self.nodes.iter().enumerate() {
            if i > 0 {
                f.write_str(" ~>")?;
            }
            write!(f, " {n}")?;
        }
        Ok(())
    }
}

enum Level<'a> {
    Covers(&'a AgentSet),
    Exactly(NodeRef),
}

impl Level<'_> {
    fn admits(&self, network: &Network, node: NodeRef, t_end: Time) -> bool {
        match self {
            Level::Covers(group) => {
                group.iter().all(|&m| bound_guarantee(network, node, NodeRef { agent: m, time: t_end }))
            }
            Level::Exactly(target) => node == *target,
        }
    }
}

fn check_interval(graph: &CausalGraph, t: Time, t_end: Time) -> Result<(), StructureError> {
    if t > t_end {
        return Err(StructureError::IntervalError { start: t, end: t_end });
    }
    if t_end > graph.horizon() {
        return Err(StructureError::HorizonExceeded { end: t_end, horizon: graph.horizon() });
    }
    Ok(())
}

fn check_agent(network: &Network, a: AgentId) -> Result<(), StructureError> {
    if network.contains(a) {
        Ok(())
    } else {
        Err(StructureError::UnknownAgent(a))
    }
}

fn search(
    graph: &CausalGraph,
    network: &Network,
    origin: NodeRef,
    levels: &[Level<'_>],
    t_end: Time,
) -> Option<Vec<NodeRef>> {
    let window: Vec<NodeRef> = graph.future(origin).filter(|n| n.time <= t_end).collect();

    let mut layers: Vec<Vec<NodeRef>> = vec![vec![origin]];
    for level in levels {
        let prev = layers.last().expect("nonempty");
        let next: Vec<NodeRef> = window
            .iter()
            .copied()
            .filter(|&n| level.admits(network, n, t_end) && prev.iter().any(|&p| graph.syncausal(p, n)))
            .collect();
        if next.is_empty() {
            return None;
        }
        layers.push(next);
    }

    for h in (1..layers.len() - 1).rev() {
        let (head, tail) = layers.split_at_mut(h + 1);
        let later = &tail[0];
        head[h].retain(|&n| later.iter().any(|&m| graph.syncausal(n, m)));
    }

    let mut chain = vec![origin];
    for layer in &layers[1..] {
        let last = *chain.last().expect("nonempty");
        let pick = layer
            .iter()
            .copied()
            .filter(|&n| graph.syncausal(last, n))
            .min_by_key(NodeRef::order_key)
            .expect("pruned layers are completable");
        chain.push(pick);
    }
    Some(chain)
}

/// A centibroom for `<origin, groups...>` in `(r, t..t_end)`, if one exists.
pub fn find_centibroom(
    graph: &CausalGraph,
    network: &Network,
    origin: AgentId,
    groups: &[AgentSet],
    t: Time,
    t_end: Time,
) -> Result<Option<StructureWitness>, StructureError> {
    check_interval(graph, t, t_end)?;
    check_agent(network, origin)?;
    if groups.is_empty() {
        return Err(StructureError::NoLevels);
    }
    for (i, g) in groups.iter().enumerate() {
        if g.is_empty() {
            return Err(StructureError::EmptyGroup(i));
        }
        for &a in g {
            check_agent(network, a)?;
        }
    }
    let levels: Vec<Level<'_>> = groups.iter().map(Level::Covers).collect();
    let origin = NodeRef { agent: origin, time: t };
    Ok(search(graph, network, origin, &levels, t_end).map(|nodes| StructureWitness {
        kind: StructureKind::Centibroom,
        nodes,
        interval: (t, t_end),
        targets: Targets::Groups(groups.to_vec()),
    }))
}

/// A centipede for `<origin, agents...>` in `(r, t..t_end)`, if one exists.
/// `agents` lists `i_1..i_k`, so `k = agents.len()`.
pub fn find_centipede(
    graph: &CausalGraph,
    network: &Network,
    origin: AgentId,
    agents: &[AgentId],
    t: Time,
    t_end: Time,
) -> Result<Option<StructureWitness>, StructureError> {
    check_interval(graph, t, t_end)?;
    check_agent(network, origin)?;
    let (&last, legs) = agents.split_last().ok_or(StructureError::NoLevels)?;
    for &a in agents {
        check_agent(network, a)?;
    }
    let singletons: Vec<AgentSet> = legs.iter().map(|&a| AgentSet::from([a])).collect();
    let mut levels: Vec<Level<'_>> = singletons.iter().map(Level::Covers).collect();
    levels.push(Level::Exactly(NodeRef { agent: last, time: t_end }));
    let origin = NodeRef { agent: origin, time: t };
    Ok(search(graph, network, origin, &levels, t_end).map(|nodes| StructureWitness {
        kind: StructureKind::Centipede,
        nodes,
        interval: (t, t_end),
        targets: Targets::Agents(agents.to_vec()),
    }))
}

/// A broom for `<origin, group>`: a one-level centibroom.
pub fn find_broom(
    graph: &CausalGraph,
    network: &Network,
    origin: AgentId,
    group: &AgentSet,
    t: Time,
    t_end: Time,
) -> Result<Option<StructureWitness>, StructureError> {
    Ok(find_centibroom(graph, network, origin, std::slice::from_ref(group), t, t_end)?.map(|mut w| {
        w.kind = StructureKind::Broom;
        w
    }))
}

/// Least `t' in [t, horizon]` at which a centibroom exists, `None` if never.
pub fn earliest_formation_time(
    graph: &CausalGraph,
    network: &Network,
    origin: AgentId,
    groups: &[AgentSet],
    t: Time,
) -> Result<Option<Time>, StructureError> {
    if t > graph.horizon() {
        return Ok(None);
    }
    for t_end in t..=graph.horizon() {
        if find_centibroom(graph, network, origin, groups, t, t_end)?.is_some() {
            return Ok(Some(t_end));
        }
    }
    Ok(None)
}
