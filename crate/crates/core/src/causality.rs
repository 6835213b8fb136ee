//! Syncausality and bound guarantees.
//!
//! The syncausal relation of a run is reachability in the agent-time node
//! graph whose edges are: locality `<i,t> -> <i,t+1>`, send-receive edges from
//! the run's message records, and null-message edges `<i,t> -> <j,t+b_ij>` for
//! every channel on which nothing was sent at `t`. Every edge moves strictly
//! forward in time except locality's reflexive closure, so the descendant sets
//! are computed in one reverse-time sweep.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::network::{AgentId, Network, Time};
use crate::simulator::Run;

/// An agent-time node `<agent, time>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeRef {
    pub agent: AgentId,
    pub time: Time,
}

impl NodeRef {
    pub fn new(agent: impl Into<AgentId>, time: Time) -> Self {
        NodeRef { agent: agent.into(), time }
    }

    /// Tie-breaking order used for witnesses: by time, then agent.
    pub fn order_key(&self) -> (Time, AgentId) {
        (self.time, self.agent)
    }
}

impl fmt::Display for NodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{},{}>", self.agent, self.time)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    SendReceive,
    NullMessage,
}

/// The node graph of one run with its reachability closure precomputed.
#[derive(Debug, Clone)]
pub struct CausalGraph {
    agents: usize,
    horizon: Time,
    edges: Vec<(NodeRef, NodeRef, EdgeKind)>,
    reach: Vec<FixedBitSet>,
}

impl CausalGraph {
    /// Builds a graph from explicit (non-locality) edges. Edges must go
    /// strictly forward in time and stay within the horizon.
    pub fn from_edges(agents: usize, horizon: Time, edges: Vec<(NodeRef, NodeRef, EdgeKind)>) -> Self {
        let size = agents * (horizon as usize + 1);
        let idx = |n: NodeRef| n.time as usize * agents + n.agent.index();
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); size];
        for &(from, to, _) in &edges {
            assert!(from.time < to.time && to.time <= horizon, "edge {from}->{to} breaks time order");
            out[idx(from)].push(idx(to));
        }
        let mut reach = vec![FixedBitSet::with_capacity(size); size];
        for t in (0..=horizon as usize).rev() {
            for a in 0..agents {
                let i = t * agents + a;
                let mut set = FixedBitSet::with_capacity(size);
                set.insert(i);
                if t < horizon as usize {
                    set.union_with(&reach[i + agents]);
                }
                for &j in &out[i] {
                    set.union_with(&reach[j]);
                }
                reach[i] = set;
            }
        }
        CausalGraph { agents, horizon, edges, reach }
    }

    pub fn agent_count(&self) -> usize {
        self.agents
    }

    pub fn horizon(&self) -> Time {
        self.horizon
    }

    pub fn edges(&self) -> &[(NodeRef, NodeRef, EdgeKind)] {
        &self.edges
    }

    pub fn contains(&self, node: NodeRef) -> bool {
        node.agent.index() < self.agents && node.time <= self.horizon
    }

    fn index(&self, node: NodeRef) -> usize {
        node.time as usize * self.agents + node.agent.index()
    }

    fn node_at(&self, index: usize) -> NodeRef {
        NodeRef { agent: AgentId((index % self.agents) as u32), time: (index / self.agents) as Time }
    }

    /// All nodes, in (time, agent) order.
    pub fn nodes(&self) -> impl Iterator<Item = NodeRef> + '_ {
        (0..self.reach.len()).map(|i| self.node_at(i))
    }

    /// `from ⤳ to`. False when either node is outside the graph.
    pub fn syncausal(&self, from: NodeRef, to: NodeRef) -> bool {
        self.contains(from) && self.contains(to) && self.reach[self.index(from)].contains(self.index(to))
    }

    /// Nodes reachable from `from`, in (time, agent) order.
    pub fn future(&self, from: NodeRef) -> impl Iterator<Item = NodeRef> + '_ {
        let set = self.contains(from).then(|| &self.reach[self.index(from)]);
        set.into_iter().flat_map(|s| s.ones()).map(|i| self.node_at(i))
    }

    /// `{ θ : θ ⤳ node }`.
    pub fn causal_past(&self, node: NodeRef) -> BTreeSet<NodeRef> {
        if !self.contains(node) {
            return BTreeSet::new();
        }
        let target = self.index(node);
        (0..self.reach.len()).filter(|&i| self.reach[i].contains(target)).map(|i| self.node_at(i)).collect()
    }
}

/// Builds the syncausal node graph of `run`. Null-message edges that would
/// land after the horizon are omitted.
pub fn build_causal_graph(run: &Run, network: &Network) -> CausalGraph {
    let horizon = run.horizon;
    let mut edges = Vec::new();
    let mut sent = HashSet::new();
    for m in &run.messages {
        sent.insert(m.key());
        if let Some(r) = m.received_at {
            edges.push((NodeRef::new(m.from, m.sent_at), NodeRef::new(m.to, r), EdgeKind::SendReceive));
        }
    }
    for (from, to, b) in network.channels() {
        for t in 0..=horizon {
            if t + b > horizon {
                break;
            }
            let key = crate::simulator::SendKey { from, to, time: t };
            if !sent.contains(&key) {
                edges.push((NodeRef::new(from, t), NodeRef::new(to, t + b), EdgeKind::NullMessage));
            }
        }
    }
    CausalGraph::from_edges(network.agent_count(), horizon, edges)
}

/// `from ⇢ to`: `from.time + δ(from.agent, to.agent) <= to.time`.
pub fn bound_guarantee(network: &Network, from: NodeRef, to: NodeRef) -> bool {
    match network.distance(from.agent, to.agent) {
        Ok(d) => d.finite().is_some_and(|d| from.time + d <= to.time),
        Err(_) => false,
    }
}

pub fn syncausal(graph: &CausalGraph, from: NodeRef, to: NodeRef) -> bool {
    graph.syncausal(from, to)
}

pub fn causal_past(graph: &CausalGraph, node: NodeRef) -> BTreeSet<NodeRef> {
    graph.causal_past(node)
}
