//! Weighted channel graph with per-channel delivery bounds.
//!
//! Distances are shortest directed path weights where a channel's weight is
//! its delivery bound. The radius of an agent is its largest distance to any
//! other agent.

use std::collections::BTreeMap;
use std::fmt;

use petgraph::algo::floyd_warshall;
use petgraph::graph::{DiGraph, NodeIndex};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Integer global time.
pub type Time = u32;

/// Dense agent index into `0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub u32);

impl AgentId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for AgentId {
    fn from(v: u32) -> Self {
        AgentId(v)
    }
}

/// A shortest-path distance. Disconnected pairs are `Unreachable`, never a
/// large sentinel number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Distance {
    Finite(Time),
    Unreachable,
}

impl Distance {
    pub fn finite(self) -> Option<Time> {
        match self {
            Distance::Finite(d) => Some(d),
            Distance::Unreachable => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Distance::Finite(_))
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distance::Finite(d) => write!(f, "{d}"),
            Distance::Unreachable => f.write_str("unreachable"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetworkError {
    #[error("channel ({from},{to}) has bound {bound}; every bound must be at least 1")]
    BoundViolation { from: AgentId, to: AgentId, bound: Time },
    #[error("channel ({from},{to}) is listed more than once")]
    DuplicateChannel { from: AgentId, to: AgentId },
    #[error("unknown agent {0}")]
    UnknownAgent(AgentId),
    #[error("self-channel ({0},{0}) is not allowed")]
    SelfChannel(AgentId),
    #[error("a network needs at least one agent")]
    NoAgents,
    #[error("network is not strongly connected: {from} cannot reach {to}")]
    NotStronglyConnected { from: AgentId, to: AgentId },
}

/// The channel graph `(P, C, b)` together with its precomputed distance
/// matrix and radii. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    names: Vec<String>,
    channels: BTreeMap<(AgentId, AgentId), Time>,
    outgoing: Vec<Vec<AgentId>>,
    incoming: Vec<Vec<AgentId>>,
    distances: Vec<Vec<Distance>>,
    radii: Vec<Distance>,
}

impl Network {
    /// Builds a network over `agent_count` agents from `(from, to, bound)`
    /// triples.
    pub fn new<I>(agent_count: usize, channels: I) -> Result<Self, NetworkError>
    where
        I: IntoIterator<Item = (AgentId, AgentId, Time)>,
    {
        let names = (0..agent_count).map(|i| i.to_string()).collect();
        Self::with_names(names, channels)
    }

    pub fn with_names<I>(names: Vec<String>, channels: I) -> Result<Self, NetworkError>
    where
        I: IntoIterator<Item = (AgentId, AgentId, Time)>,
    {
        let n = names.len();
        if n == 0 {
            return Err(NetworkError::NoAgents);
        }
        let mut map = BTreeMap::new();
        for (from, to, bound) in channels {
            for a in [from, to] {
                if a.index() >= n {
                    return Err(NetworkError::UnknownAgent(a));
                }
            }
            if from == to {
                return Err(NetworkError::SelfChannel(from));
            }
            if bound < 1 {
                return Err(NetworkError::BoundViolation { from, to, bound });
            }
            if map.insert((from, to), bound).is_some() {
                return Err(NetworkError::DuplicateChannel { from, to });
            }
        }

        let mut outgoing = vec![Vec::new(); n];
        let mut incoming = vec![Vec::new(); n];
        for &(from, to) in map.keys() {
            outgoing[from.index()].push(to);
            incoming[to.index()].push(from);
        }
        for list in incoming.iter_mut() {
            list.sort();
        }

        let distances = all_pairs_distances(n, &map);
        let radii = distances
            .iter()
            .map(|row| {
                row.iter()
                    .try_fold(0, |acc, d| d.finite().map(|d| acc.max(d)))
                    .map_or(Distance::Unreachable, Distance::Finite)
            })
            .collect();

        Ok(Network { names, channels: map, outgoing, incoming, distances, radii })
    }

    pub fn agent_count(&self) -> usize {
        self.names.len()
    }

    pub fn agents(&self) -> impl Iterator<Item = AgentId> + '_ {
        (0..self.names.len() as u32).map(AgentId)
    }

    pub fn name(&self, agent: AgentId) -> &str {
        &self.names[agent.index()]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Looks an agent up by its display name.
    pub fn agent_named(&self, name: &str) -> Option<AgentId> {
        self.names.iter().position(|n| n == name).map(|i| AgentId(i as u32))
    }

    pub fn contains(&self, agent: AgentId) -> bool {
        agent.index() < self.names.len()
    }

    fn check(&self, agent: AgentId) -> Result<(), NetworkError> {
        if self.contains(agent) {
            Ok(())
        } else {
            Err(NetworkError::UnknownAgent(agent))
        }
    }

    /// Delivery bound of channel `(from, to)`, if the channel exists.
    pub fn bound(&self, from: AgentId, to: AgentId) -> Option<Time> {
        self.channels.get(&(from, to)).copied()
    }

    pub fn channels(&self) -> impl Iterator<Item = (AgentId, AgentId, Time)> + '_ {
        self.channels.iter().map(|(&(f, t), &b)| (f, t, b))
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn outgoing(&self, agent: AgentId) -> &[AgentId] {
        &self.outgoing[agent.index()]
    }

    pub fn incoming(&self, agent: AgentId) -> &[AgentId] {
        &self.incoming[agent.index()]
    }

    /// Largest bound over all channels, 0 when there are none.
    pub fn max_bound(&self) -> Time {
        self.channels.values().copied().max().unwrap_or(0)
    }

    /// Largest bound over channels into `agent`, 0 when there are none.
    pub fn max_incoming_bound(&self, agent: AgentId) -> Time {
        self.incoming(agent).iter().filter_map(|&from| self.bound(from, agent)).max().unwrap_or(0)
    }

    /// Shortest distance `δ(from, to)`.
    pub fn distance(&self, from: AgentId, to: AgentId) -> Result<Distance, NetworkError> {
        self.check(from)?;
        self.check(to)?;
        Ok(self.distances[from.index()][to.index()])
    }

    /// Unchecked variant for hot loops; panics on out-of-range agents.
    pub fn dist(&self, from: AgentId, to: AgentId) -> Distance {
        self.distances[from.index()][to.index()]
    }

    /// `Rad(agent)`: the maximum distance from `agent` to any agent.
    pub fn radius(&self, agent: AgentId) -> Result<Distance, NetworkError> {
        self.check(agent)?;
        Ok(self.radii[agent.index()])
    }

    pub fn rad(&self, agent: AgentId) -> Distance {
        self.radii[agent.index()]
    }

    /// Largest radius; `Unreachable` unless strongly connected.
    pub fn max_radius(&self) -> Distance {
        self.radii
            .iter()
            .try_fold(0, |acc, d| d.finite().map(|d| acc.max(d)))
            .map_or(Distance::Unreachable, Distance::Finite)
    }

    pub fn is_strongly_connected(&self) -> bool {
        self.max_radius().is_finite()
    }

    pub fn require_strongly_connected(&self) -> Result<(), NetworkError> {
        for from in self.agents() {
            for to in self.agents() {
                if !self.dist(from, to).is_finite() {
                    return Err(NetworkError::NotStronglyConnected { from, to });
                }
            }
        }
        Ok(())
    }
}

fn all_pairs_distances(n: usize, channels: &BTreeMap<(AgentId, AgentId), Time>) -> Vec<Vec<Distance>> {
    let mut graph: DiGraph<(), u64> = DiGraph::with_capacity(n, channels.len());
    let nodes: Vec<NodeIndex> = (0..n).map(|_| graph.add_node(())).collect();
    for (&(from, to), &bound) in channels {
        graph.add_edge(nodes[from.index()], nodes[to.index()], u64::from(bound));
    }
    // No negative weights, so the negative-cycle error is impossible.
    let dist = floyd_warshall(&graph, |e| *e.weight()).expect("bounds are positive");
    let mut out = vec![vec![Distance::Unreachable; n]; n];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            let d = dist[&(nodes[i], nodes[j])];
            if d != u64::MAX {
                *cell = Distance::Finite(d as Time);
            }
        }
    }
    out
}
