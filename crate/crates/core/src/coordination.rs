//! Ordered response specifications and a protocol that solves them.
//!
//! A [`ResponseOrdering`] is a directed graph over trigger events and
//! responses whose reflexive-transitive closure is the preorder `⪯`. Cycles
//! mark responses that must happen simultaneously. [`scc_decompose`]
//! condenses the response subgraph into a DAG of clusters (the CRO), and
//! [`required_chains`] lists, for a response, every path from a trigger in its
//! base through the covering edges of that DAG.
//!
//! [`GorProtocol`] is full-information: every agent broadcasts its state on
//! every channel each round, and performs a response at the first round in
//! which, inside its own causal past, every required chain has a centibroom.
//! In a full-information run there are no null-message edges and every node of
//! the causal past is known, so the reconstructed view and the real run agree
//! on reachability between the nodes that matter. Detection is therefore exact
//! whenever the responder belongs to the last group of the chain, which is
//! always the case.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use fixedbitset::FixedBitSet;
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use thiserror::Error;

use crate::causality::{CausalGraph, EdgeKind, NodeRef};
use crate::network::{AgentId, Network, NetworkError, Time};
use crate::simulator::{
    ActionId, Actions, Context, EventId, FullInformation, LocalState, Protocol, StateDigest, StepView, SystemBundle,
};
use crate::structures::{find_centibroom, AgentSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoordinationError {
    #[error("name {0} is declared more than once")]
    DuplicateName(String),
    #[error("edge mentions unknown node {0}")]
    UnknownNode(String),
    #[error("unknown response {0}")]
    UnknownResponse(String),
    #[error("edge {from} -> {to} points into a trigger")]
    TriggerNotInitial { from: String, to: String },
    #[error("trigger {0} has no input slot")]
    UnboundTrigger(EventId),
    #[error("response {action} belongs to unknown agent {agent}")]
    UnknownAgent { action: ActionId, agent: AgentId },
    #[error("an ordered joint response needs at least one cluster")]
    NoClusters,
    #[error("cluster {0} is empty")]
    EmptyCluster(usize),
    #[error("response {0} appears in more than one cluster")]
    OverlappingClusters(ActionId),
    #[error("horizon {horizon} is below the completion bound {needed}")]
    HorizonTooShort { needed: Time, horizon: Time },
    #[error(transparent)]
    Connectivity(#[from] NetworkError),
}

/// A response `α = <a, i>`. Action ids are unique across the ordering.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Response {
    pub action: ActionId,
    pub agent: AgentId,
    /// Display name shared by the members of one cluster.
    pub group: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RoNode {
    Trigger(usize),
    Response(usize),
}

/// Triggers, responses, and the edges generating `⪯`.
#[derive(Debug, Clone)]
pub struct ResponseOrdering {
    triggers: Vec<EventId>,
    responses: Vec<Response>,
    edges: Vec<(RoNode, RoNode)>,
    /// `reach[u]` holds `v` iff `u ⪯ v`; nodes are numbered triggers first.
    reach: Vec<FixedBitSet>,
}

impl ResponseOrdering {
    /// Builds an ordering from named edges. Trigger and response names share
    /// one namespace.
    pub fn new(
        triggers: Vec<EventId>,
        responses: Vec<Response>,
        edges: &[(String, String)],
    ) -> Result<Self, CoordinationError> {
        let mut names: HashMap<&str, RoNode> = HashMap::new();
        for (i, t) in triggers.iter().enumerate() {
            if names.insert(t, RoNode::Trigger(i)).is_some() {
                return Err(CoordinationError::DuplicateName(t.clone()));
            }
        }
        for (i, r) in responses.iter().enumerate() {
            if names.insert(&r.action, RoNode::Response(i)).is_some() {
                return Err(CoordinationError::DuplicateName(r.action.clone()));
            }
        }
        let lookup =
            |s: &String| names.get(s.as_str()).copied().ok_or_else(|| CoordinationError::UnknownNode(s.clone()));
        let mut resolved = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            resolved.push((lookup(a)?, lookup(b)?));
        }
        resolved.sort();
        resolved.dedup();
        Ok(Self::from_parts(triggers, responses, resolved))
    }

    fn from_parts(triggers: Vec<EventId>, responses: Vec<Response>, edges: Vec<(RoNode, RoNode)>) -> Self {
        let size = triggers.len() + responses.len();
        let mut ro = ResponseOrdering { triggers, responses, edges, reach: Vec::new() };
        let mut adj = vec![Vec::new(); size];
        for &(a, b) in &ro.edges {
            adj[ro.index(a)].push(ro.index(b));
        }
        ro.reach = (0..size)
            .map(|start| {
                let mut seen = FixedBitSet::with_capacity(size);
                let mut stack = vec![start];
                while let Some(u) = stack.pop() {
                    if !seen.put(u) {
                        stack.extend(adj[u].iter().copied());
                    }
                }
                seen
            })
            .collect();
        ro
    }

    fn index(&self, node: RoNode) -> usize {
        match node {
            RoNode::Trigger(i) => i,
            RoNode::Response(i) => self.triggers.len() + i,
        }
    }

    pub fn triggers(&self) -> &[EventId] {
        &self.triggers
    }

    pub fn responses(&self) -> &[Response] {
        &self.responses
    }

    pub fn edges(&self) -> &[(RoNode, RoNode)] {
        &self.edges
    }

    pub fn node_name(&self, node: RoNode) -> &str {
        match node {
            RoNode::Trigger(i) => &self.triggers[i],
            RoNode::Response(i) => &self.responses[i].action,
        }
    }

    pub fn response_index(&self, action: &str) -> Option<usize> {
        self.responses.iter().position(|r| r.action == action)
    }

    /// `a ⪯ b`.
    pub fn precedes(&self, a: RoNode, b: RoNode) -> bool {
        self.reach[self.index(a)].contains(self.index(b))
    }

    /// Agents performing some response.
    pub fn agents(&self) -> AgentSet {
        self.responses.iter().map(|r| r.agent).collect()
    }
}

/// A node of the condensation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CroNode {
    Trigger(usize),
    Scc(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scc {
    /// Response indices, ascending.
    pub members: Vec<usize>,
    pub label: String,
    /// `I(scc)`: the agents performing its responses.
    pub agents: AgentSet,
}

/// The DAG decomposition of a response ordering.
#[derive(Debug, Clone)]
pub struct Cro {
    pub triggers: Vec<EventId>,
    /// In topological order.
    pub sccs: Vec<Scc>,
    /// `⪯'` without reflexive pairs.
    pub order: BTreeSet<(CroNode, CroNode)>,
    /// Covering edges of `⪯'`.
    pub cover: BTreeSet<(CroNode, CroNode)>,
    scc_of: Vec<usize>,
}

impl Cro {
    pub fn scc_of(&self, response: usize) -> usize {
        self.scc_of[response]
    }

    pub fn scc_named(&self, label: &str) -> Option<usize> {
        self.sccs.iter().position(|s| s.label == label)
    }

    pub fn node_name(&self, node: CroNode) -> &str {
        match node {
            CroNode::Trigger(i) => &self.triggers[i],
            CroNode::Scc(i) => &self.sccs[i].label,
        }
    }

    /// Covering edges rendered by name, sorted.
    pub fn named_cover(&self) -> BTreeSet<(String, String)> {
        self.cover.iter().map(|&(a, b)| (self.node_name(a).to_string(), self.node_name(b).to_string())).collect()
    }
}

/// Condenses the response subgraph into strongly connected components.
pub fn scc_decompose(ro: &ResponseOrdering) -> Result<Cro, CoordinationError> {
    for &(a, b) in &ro.edges {
        if matches!(b, RoNode::Trigger(_)) && a != b {
            return Err(CoordinationError::TriggerNotInitial {
                from: ro.node_name(a).to_string(),
                to: ro.node_name(b).to_string(),
            });
        }
    }
    let mut g: DiGraph<usize, ()> = DiGraph::new();
    let ids: Vec<_> = (0..ro.responses.len()).map(|i| g.add_node(i)).collect();
    for &(a, b) in &ro.edges {
        if let (RoNode::Response(x), RoNode::Response(y)) = (a, b) {
            g.add_edge(ids[x], ids[y], ());
        }
    }
    // tarjan_scc yields components in reverse topological order.
    let mut comps: Vec<Vec<usize>> = tarjan_scc(&g)
        .into_iter()
        .rev()
        .map(|c| {
            let mut m: Vec<usize> = c.into_iter().map(|n| g[n]).collect();
            m.sort_unstable();
            m
        })
        .collect();
    // Stable, deterministic order: topological, ties by first member.
    topo_sort_by_first(&mut comps, ro);

    let mut scc_of = vec![0; ro.responses.len()];
    let sccs: Vec<Scc> = comps
        .into_iter()
        .enumerate()
        .map(|(k, members)| {
            for &m in &members {
                scc_of[m] = k;
            }
            let agents = members.iter().map(|&m| ro.responses[m].agent).collect();
            let groups: BTreeSet<Option<&String>> = members.iter().map(|&m| ro.responses[m].group.as_ref()).collect();
            let label = match groups.into_iter().collect::<Vec<_>>().as_slice() {
                [Some(g)] => (*g).clone(),
                _ => members.iter().map(|&m| ro.responses[m].action.as_str()).collect::<Vec<_>>().join("+"),
            };
            Scc { members, label, agents }
        })
        .collect();

    let node = |n: RoNode| match n {
        RoNode::Trigger(i) => CroNode::Trigger(i),
        RoNode::Response(i) => CroNode::Scc(scc_of[i]),
    };
    let all: Vec<RoNode> =
        (0..ro.triggers.len()).map(RoNode::Trigger).chain((0..ro.responses.len()).map(RoNode::Response)).collect();
    let mut order = BTreeSet::new();
    for &a in &all {
        for &b in &all {
            if ro.precedes(a, b) && node(a) != node(b) {
                order.insert((node(a), node(b)));
            }
        }
    }
    let cover = order
        .iter()
        .copied()
        .filter(|&(a, c)| !order.iter().any(|&(x, b)| x == a && b != c && order.contains(&(b, c))))
        .collect();
    Ok(Cro { triggers: ro.triggers.clone(), sccs, order, cover, scc_of })
}

fn topo_sort_by_first(comps: &mut Vec<Vec<usize>>, ro: &ResponseOrdering) {
    let mut remaining: Vec<Vec<usize>> = std::mem::take(comps);
    while !remaining.is_empty() {
        // A source: no other remaining component strictly precedes it.
        let pick = (0..remaining.len())
            .filter(|&i| {
                !(0..remaining.len()).any(|j| {
                    j != i && ro.precedes(RoNode::Response(remaining[j][0]), RoNode::Response(remaining[i][0]))
                })
            })
            .min_by_key(|&i| remaining[i][0])
            .expect("condensation is acyclic");
        comps.push(remaining.swap_remove(pick));
    }
}

/// `base_α`: the triggers below `α`, by index.
pub fn trigger_base(ro: &ResponseOrdering, action: &str) -> Result<BTreeSet<usize>, CoordinationError> {
    let r = ro.response_index(action).ok_or_else(|| CoordinationError::UnknownResponse(action.to_string()))?;
    Ok((0..ro.triggers.len()).filter(|&t| ro.precedes(RoNode::Trigger(t), RoNode::Response(r))).collect())
}

/// A path `e_0 ⪯' scc_1 ⪯' ... ⪯' scc_k` along covering edges.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Chain {
    pub trigger: usize,
    pub sccs: Vec<usize>,
}

impl Chain {
    pub fn groups(&self, cro: &Cro) -> Vec<AgentSet> {
        self.sccs.iter().map(|&s| cro.sccs[s].agents.clone()).collect()
    }

    pub fn display<'a>(&'a self, cro: &'a Cro) -> impl fmt::Display + 'a {
        struct Show<'a>(&'a Chain, &'a Cro);
        impl fmt::Display for Show<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.1.triggers[self.0.trigger])?;
                for &s in &self.0.sccs {
                    write!(f, " -> {}", self.1.sccs[s].label)?;
                }
                Ok(())
            }
        }
        Show(self, cro)
    }
}

/// Every covering-edge path from a trigger to the SCC containing `action`.
pub fn required_chains(cro: &Cro, ro: &ResponseOrdering, action: &str) -> Result<Vec<Chain>, CoordinationError> {
    let r = ro.response_index(action).ok_or_else(|| CoordinationError::UnknownResponse(action.to_string()))?;
    let target = cro.scc_of(r);
    let mut succ: BTreeMap<CroNode, Vec<usize>> = BTreeMap::new();
    for &(a, b) in &cro.cover {
        if let CroNode::Scc(s) = b {
            succ.entry(a).or_default().push(s);
        }
    }
    let mut out = Vec::new();
    for t in 0..cro.triggers.len() {
        let mut path = Vec::new();
        walk(CroNode::Trigger(t), target, &succ, &mut path, &mut |p| {
            out.push(Chain { trigger: t, sccs: p.to_vec() });
        });
    }
    out.sort();
    out.dedup();
    Ok(out)
}

fn walk(
    at: CroNode,
    target: usize,
    succ: &BTreeMap<CroNode, Vec<usize>>,
    path: &mut Vec<usize>,
    emit: &mut dyn FnMut(&[usize]),
) {
    if at == CroNode::Scc(target) {
        emit(path);
        return;
    }
    for &s in succ.get(&at).map(Vec::as_slice).unwrap_or(&[]) {
        path.push(s);
        walk(CroNode::Scc(s), target, succ, path, emit);
        path.pop();
    }
}

/// `OJR<e_s, A^1, ..., A^k>` over named responses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OjrSpec {
    pub trigger: EventId,
    pub clusters: Vec<Vec<ActionId>>,
}

impl OjrSpec {
    pub fn validate(&self, ro: &ResponseOrdering) -> Result<(), CoordinationError> {
        if self.clusters.is_empty() {
            return Err(CoordinationError::NoClusters);
        }
        let mut seen = HashSet::new();
        for (g, c) in self.clusters.iter().enumerate() {
            if c.is_empty() {
                return Err(CoordinationError::EmptyCluster(g));
            }
            for a in c {
                if ro.response_index(a).is_none() {
                    return Err(CoordinationError::UnknownResponse(a.clone()));
                }
                if !seen.insert(a) {
                    return Err(CoordinationError::OverlappingClusters(a.clone()));
                }
            }
        }
        Ok(())
    }

    /// `I^1, ..., I^k`.
    pub fn agent_sets(&self, ro: &ResponseOrdering) -> Result<Vec<AgentSet>, CoordinationError> {
        self.validate(ro)?;
        Ok(self
            .clusters
            .iter()
            .map(|c| c.iter().map(|a| ro.responses[ro.response_index(a).expect("validated")].agent).collect())
            .collect())
    }

    /// Encodes the instance as a response ordering: the trigger precedes
    /// `A^1`, each cluster is a cycle, and every member of `A^g` precedes every
    /// member of `A^{g+1}`.
    pub fn to_ordering(&self, responses: Vec<Response>) -> Result<ResponseOrdering, CoordinationError> {
        let mut edges = Vec::new();
        for (g, c) in self.clusters.iter().enumerate() {
            if c.is_empty() {
                return Err(CoordinationError::EmptyCluster(g));
            }
            if g == 0 {
                edges.extend(c.iter().map(|a| (self.trigger.clone(), a.clone())));
            }
            for (i, a) in c.iter().enumerate() {
                edges.push((a.clone(), c[(i + 1) % c.len()].clone()));
            }
            if let Some(next) = self.clusters.get(g + 1) {
                for a in c {
                    edges.extend(next.iter().map(|b| (a.clone(), b.clone())));
                }
            }
        }
        edges.retain(|(a, b)| a != b);
        let ro = ResponseOrdering::new(vec![self.trigger.clone()], responses, &edges)?;
        self.validate(&ro)?;
        Ok(ro)
    }
}

/// One required centibroom, bound to its trigger's slot.
#[derive(Debug, Clone)]
struct ChainPlan {
    event: EventId,
    origin: AgentId,
    time: Time,
    groups: Vec<AgentSet>,
}

#[derive(Debug, Clone)]
struct ResponsePlan {
    action: ActionId,
    agent: AgentId,
    /// Empty when the base is empty; such a response never fires.
    chains: Vec<ChainPlan>,
}

/// Full-information protocol responding at the first time all required
/// centibrooms are visible.
#[derive(Debug, Clone)]
pub struct GorProtocol {
    plans: Vec<ResponsePlan>,
}

#[derive(Debug, Clone, Default)]
pub struct GorMemory {
    known: HashMap<(AgentId, Time), LocalState>,
    seen: HashSet<StateDigest>,
    done: BTreeSet<usize>,
}

impl GorMemory {
    /// Adds every state reachable from `state` through history and payloads.
    fn absorb(&mut self, state: &LocalState) {
        let mut stack = vec![state.clone()];
        while let Some(s) = stack.pop() {
            if !self.seen.insert(s.digest()) {
                continue;
            }
            if let Some(p) = s.prev() {
                stack.push(p.clone());
            }
            for d in s.received() {
                if let Some(inner) = d.payload.as_state() {
                    stack.push(inner.clone());
                }
            }
            self.known.insert((s.agent(), s.time()), s);
        }
    }

    fn knows_input(&self, agent: AgentId, time: Time, event: &str) -> bool {
        self.known.get(&(agent, time)).is_some_and(|s| s.inputs().iter().any(|e| e == event))
    }

    /// The message graph over known states, up to `now`.
    fn view(&self, agents: usize, now: Time) -> CausalGraph {
        let mut edges = Vec::new();
        for s in self.known.values() {
            for d in s.received() {
                edges.push((NodeRef::new(d.from, d.sent_at), NodeRef::new(s.agent(), s.time()), EdgeKind::SendReceive));
            }
        }
        edges.sort_by_key(|&(a, b, _)| (a, b));
        CausalGraph::from_edges(agents, now, edges)
    }
}

/// Builds the protocol for `ro` in `ctx`. Triggers must be bound to slots.
pub fn gor_protocol(ro: &ResponseOrdering, ctx: &Context) -> Result<GorProtocol, CoordinationError> {
    let cro = scc_decompose(ro)?;
    let mut plans = Vec::new();
    for r in &ro.responses {
        if !ctx.network.contains(r.agent) {
            return Err(CoordinationError::UnknownAgent { action: r.action.clone(), agent: r.agent });
        }
        let mut chains = Vec::new();
        for c in required_chains(&cro, ro, &r.action)? {
            let event = &cro.triggers[c.trigger];
            let slot = ctx.slot(event).ok_or_else(|| CoordinationError::UnboundTrigger(event.clone()))?;
            chains.push(ChainPlan {
                event: event.clone(),
                origin: slot.agent,
                time: slot.time,
                groups: c.groups(&cro),
            });
        }
        plans.push(ResponsePlan { action: r.action.clone(), agent: r.agent, chains });
    }
    Ok(GorProtocol { plans })
}

impl GorProtocol {
    fn ready(
        &self,
        plan: &ResponsePlan,
        mem: &GorMemory,
        view: &StepView<'_>,
        graph: &mut Option<CausalGraph>,
    ) -> bool {
        if plan.chains.is_empty() {
            return false;
        }
        if !plan.chains.iter().all(|c| c.time <= view.time && mem.knows_input(c.origin, c.time, &c.event)) {
            return false;
        }
        let g = graph.get_or_insert_with(|| mem.view(view.network.agent_count(), view.time));
        plan.chains.iter().all(|c| {
            find_centibroom(g, view.network, c.origin, &c.groups, c.time, view.time).is_ok_and(|w| w.is_some())
        })
    }
}

impl Protocol for GorProtocol {
    type Memory = GorMemory;

    fn name(&self) -> &str {
        "gor"
    }

    fn init(&self, _: AgentId, _: &Network) -> GorMemory {
        GorMemory::default()
    }

    fn step(&self, view: &StepView<'_>, mem: &mut GorMemory) -> Actions {
        let mut actions = Actions { sends: FullInformation::broadcast(view), responses: Vec::new() };
        let pending: Vec<usize> =
            (0..self.plans.len()).filter(|&i| self.plans[i].agent == view.agent && !mem.done.contains(&i)).collect();
        if pending.is_empty() {
            return actions;
        }
        mem.absorb(view.state);
        let mut graph = None;
        for i in pending {
            if self.ready(&self.plans[i], mem, view, &mut graph) {
                mem.done.insert(i);
                actions.responses.push(self.plans[i].action.clone());
            }
        }
        actions
    }
}

/// `max slot + (k_max + 1) * max Rad + max b`, with `k_max` the longest
/// required chain.
pub fn completion_bound(ro: &ResponseOrdering, ctx: &Context) -> Result<Time, CoordinationError> {
    let cro = scc_decompose(ro)?;
    let mut k_max = 0;
    for r in &ro.responses {
        for c in required_chains(&cro, ro, &r.action)? {
            k_max = k_max.max(c.sccs.len() as Time);
        }
    }
    let net = &ctx.network;
    net.require_strongly_connected()?;
    let rad = net.max_radius().finite().unwrap_or(Time::MAX);
    let last = ctx.slots.iter().map(|s| s.time).max().unwrap_or(0);
    Ok(last.saturating_add((k_max + 1).saturating_mul(rad)).saturating_add(net.max_bound()))
}

/// Validates a GOR scenario. Returns warnings for responses that can never
/// fire.
pub fn validate_gor_context(ro: &ResponseOrdering, ctx: &Context) -> Result<Vec<String>, CoordinationError> {
    for t in &ro.triggers {
        if ctx.slot(t).is_none() {
            return Err(CoordinationError::UnboundTrigger(t.clone()));
        }
    }
    for r in &ro.responses {
        if !ctx.network.contains(r.agent) {
            return Err(CoordinationError::UnknownAgent { action: r.action.clone(), agent: r.agent });
        }
    }
    let needed = completion_bound(ro, ctx)?;
    if ctx.horizon < needed {
        return Err(CoordinationError::HorizonTooShort { needed, horizon: ctx.horizon });
    }
    let mut warnings = Vec::new();
    for r in &ro.responses {
        if trigger_base(ro, &r.action)?.is_empty() {
            warnings.push(format!("response {} has an empty trigger base and is never performed", r.action));
        }
    }
    Ok(warnings)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Clause {
    Triggering,
    WeakOrdering,
    Simultaneity,
    LinearOrdering,
    RepeatedResponse,
    UnknownResponse,
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Clause::Triggering => "triggering",
            Clause::WeakOrdering => "weak-ordering",
            Clause::Simultaneity => "simultaneity",
            Clause::LinearOrdering => "linear-ordering",
            Clause::RepeatedResponse => "repeated-response",
            Clause::UnknownResponse => "unknown-response",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub run: usize,
    pub clause: Clause,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Verdict {
    pub runs: usize,
    pub violations: Vec<Violation>,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn clauses(&self) -> BTreeSet<Clause> {
        self.violations.iter().map(|v| v.clause).collect()
    }

    pub fn count(&self, clause: Clause) -> usize {
        self.violations.iter().filter(|v| v.clause == clause).count()
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} runs checked, {} violations", self.runs, self.violations.len())?;
        for v in &self.violations {
            writeln!(f, "  run {}: {}: {}", v.run, v.clause, v.detail)?;
        }
        Ok(())
    }
}

/// First time of each response of `ro` in a run, plus repeat and unknown
/// response violations.
fn response_times(
    ro: &ResponseOrdering,
    run_id: usize,
    run: &crate::simulator::Run,
    out: &mut Vec<Violation>,
) -> Vec<Option<Time>> {
    let mut times = vec![None; ro.responses.len()];
    for rec in &run.responses {
        let idx = ro.responses.iter().position(|r| r.action == rec.action && r.agent == rec.agent);
        match idx {
            Some(i) => match times[i] {
                None => times[i] = Some(rec.time),
                Some(t0) => out.push(Violation {
                    run: run_id,
                    clause: Clause::RepeatedResponse,
                    detail: format!("{} performed at {} and again at {}", rec.action, t0, rec.time),
                }),
            },
            None => out.push(Violation {
                run: run_id,
                clause: Clause::UnknownResponse,
                detail: format!("agent {} performed {} at {}", rec.agent, rec.action, rec.time),
            }),
        }
    }
    times
}

/// Checks Triggering (iff) and Weak Ordering for every run.
pub fn check_gor(bundle: &SystemBundle, ro: &ResponseOrdering) -> Verdict {
    let bases: Vec<BTreeSet<usize>> =
        ro.responses.iter().map(|r| trigger_base(ro, &r.action).expect("response of this ordering")).collect();
    let mut violations = Vec::new();
    for (id, run) in bundle.runs.iter().enumerate() {
        let times = response_times(ro, id, run, &mut violations);
        let occurred: Vec<bool> = ro.triggers.iter().map(|t| run.occurrence_time(t).is_some()).collect();
        for (i, r) in ro.responses.iter().enumerate() {
            let full = bases[i].iter().all(|&t| occurred[t]);
            match (times[i], full) {
                (Some(t), false) => {
                    let missing: Vec<&str> =
                        bases[i].iter().filter(|&&b| !occurred[b]).map(|&b| ro.triggers[b].as_str()).collect();
                    violations.push(Violation {
                        run: id,
                        clause: Clause::Triggering,
                        detail: format!("{} occurred at {t} without {}", r.action, missing.join(", ")),
                    });
                }
                (None, true) => violations.push(Violation {
                    run: id,
                    clause: Clause::Triggering,
                    detail: format!("{} never occurred although its whole base did", r.action),
                }),
                _ => {}
            }
        }
        for (a, ra) in ro.responses.iter().enumerate() {
            for (b, rb) in ro.responses.iter().enumerate() {
                if a == b || !ro.precedes(RoNode::Response(a), RoNode::Response(b)) {
                    continue;
                }
                if let (Some(ta), Some(tb)) = (times[a], times[b]) {
                    if ta > tb {
                        violations.push(Violation {
                            run: id,
                            clause: Clause::WeakOrdering,
                            detail: format!("{} at {ta} precedes {} at {tb}", ra.action, rb.action),
                        });
                    }
                }
            }
        }
    }
    Verdict { runs: bundle.runs.len(), violations }
}

/// Checks the three OJR clauses, with the weak triggering form: if any
/// response of `A^h` occurs, the trigger and all of `A^1 ∪ ... ∪ A^h` occur.
pub fn check_ojr(bundle: &SystemBundle, ro: &ResponseOrdering, spec: &OjrSpec) -> Result<Verdict, CoordinationError> {
    spec.validate(ro)?;
    let clusters: Vec<Vec<usize>> =
        spec.clusters.iter().map(|c| c.iter().map(|a| ro.response_index(a).expect("validated")).collect()).collect();
    let mut violations = Vec::new();
    for (id, run) in bundle.runs.iter().enumerate() {
        let times = response_times(ro, id, run, &mut violations);
        let t0 = run.occurrence_time(&spec.trigger);
        for (h, cluster) in clusters.iter().enumerate() {
            if !cluster.iter().any(|&a| times[a].is_some()) {
                continue;
            }
            let name = |a: usize| ro.responses[a].action.as_str();
            if t0.is_none() {
                violations.push(Violation {
                    run: id,
                    clause: Clause::Triggering,
                    detail: format!("cluster {} acted without {}", h + 1, spec.trigger),
                });
            }
            for cluster in &clusters[..=h] {
                for &a in cluster {
                    if times[a].is_none() {
                        violations.push(Violation {
                            run: id,
                            clause: Clause::Triggering,
                            detail: format!("cluster {} acted but {} never occurred", h + 1, name(a)),
                        });
                    }
                }
            }
            let present: BTreeSet<Time> = cluster.iter().filter_map(|&a| times[a]).collect();
            if present.len() > 1 {
                violations.push(Violation {
                    run: id,
                    clause: Clause::Simultaneity,
                    detail: format!("cluster {} acted at times {:?}", h + 1, present),
                });
            }
            if let (Some(t0), Some(&first)) = (t0, present.iter().next()) {
                if first < t0 {
                    violations.push(Violation {
                        run: id,
                        clause: Clause::LinearOrdering,
                        detail: format!("cluster {} acted at {first} before the trigger at {t0}", h + 1),
                    });
                }
            }
            if h > 0 {
                let prev: Option<Time> = clusters[h - 1].iter().filter_map(|&a| times[a]).max();
                if let (Some(p), Some(&first)) = (prev, present.iter().next()) {
                    if first < p {
                        violations.push(Violation {
                            run: id,
                            clause: Clause::LinearOrdering,
                            detail: format!("cluster {} acted at {first} before cluster {} at {p}", h + 1, h),
                        });
                    }
                }
            }
        }
    }
    Ok(Verdict { runs: bundle.runs.len(), violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{build_system, InputSlot, ScheduledResponder};

    fn resp(action: &str, agent: u32, group: Option<&str>) -> Response {
        Response { action: action.into(), agent: AgentId(agent), group: group.map(Into::into) }
    }

    fn e(a: &str, b: &str) -> (String, String) {
        (a.into(), b.into())
    }

    #[test]
    fn acyclic_ordering_has_singleton_sccs() {
        let ro = ResponseOrdering::new(
            vec!["go".into()],
            vec![resp("a", 0, None), resp("b", 1, None)],
            &[e("go", "a"), e("a", "b")],
        )
        .unwrap();
        let cro = scc_decompose(&ro).unwrap();
        assert_eq!(cro.sccs.len(), 2);
        assert!(cro.sccs.iter().all(|s| s.members.len() == 1));
        assert_eq!(cro.named_cover(), BTreeSet::from([e("go", "a"), e("a", "b")]));
    }

    #[test]
    fn two_cycle_is_one_scc() {
        let ro = ResponseOrdering::new(
            vec!["go".into()],
            vec![resp("a", 0, Some("pair")), resp("b", 1, Some("pair"))],
            &[e("go", "a"), e("a", "b"), e("b", "a")],
        )
        .unwrap();
        let cro = scc_decompose(&ro).unwrap();
        assert_eq!(cro.sccs.len(), 1);
        assert_eq!(cro.sccs[0].label, "pair");
        assert_eq!(cro.sccs[0].agents, AgentSet::from([AgentId(0), AgentId(1)]));
        let chains = required_chains(&cro, &ro, "b").unwrap();
        assert_eq!(chains, vec![Chain { trigger: 0, sccs: vec![0] }]);
    }

    #[test]
    fn edge_into_trigger_is_rejected() {
        let ro = ResponseOrdering::new(vec!["go".into()], vec![resp("a", 0, None)], &[e("a", "go")]).unwrap();
        assert!(matches!(scc_decompose(&ro), Err(CoordinationError::TriggerNotInitial { .. })));
        assert!(matches!(
            ResponseOrdering::new(vec!["go".into()], vec![resp("go", 0, None)], &[]),
            Err(CoordinationError::DuplicateName(_))
        ));
        assert!(matches!(
            ResponseOrdering::new(vec![], vec![resp("a", 0, None)], &[e("a", "z")]),
            Err(CoordinationError::UnknownNode(_))
        ));
    }

    #[test]
    fn diamond_has_two_chains_and_drops_transitive_edge() {
        let ro = ResponseOrdering::new(
            vec!["go".into()],
            vec![resp("x", 0, None), resp("y", 1, None), resp("z", 2, None)],
            &[e("go", "x"), e("go", "y"), e("x", "z"), e("y", "z"), e("go", "z")],
        )
        .unwrap();
        let cro = scc_decompose(&ro).unwrap();
        assert!(!cro.named_cover().contains(&e("go", "z")));
        let chains = required_chains(&cro, &ro, "z").unwrap();
        assert_eq!(chains.len(), 2);
        assert_eq!(trigger_base(&ro, "z").unwrap(), BTreeSet::from([0]));
    }

    #[test]
    fn empty_base_is_reported() {
        let ro =
            ResponseOrdering::new(vec!["go".into()], vec![resp("a", 0, None), resp("b", 0, None)], &[e("go", "a")])
                .unwrap();
        assert!(trigger_base(&ro, "b").unwrap().is_empty());
        assert!(required_chains(&scc_decompose(&ro).unwrap(), &ro, "b").unwrap().is_empty());
        assert!(matches!(trigger_base(&ro, "nope"), Err(CoordinationError::UnknownResponse(_))));
    }

    #[test]
    fn ojr_encoding_round_trips() {
        let spec = OjrSpec { trigger: "go".into(), clusters: vec![vec!["a".into(), "b".into()], vec!["c".into()]] };
        let ro = spec.to_ordering(vec![resp("a", 0, None), resp("b", 1, None), resp("c", 2, None)]).unwrap();
        let cro = scc_decompose(&ro).unwrap();
        assert_eq!(cro.sccs.len(), 2);
        assert_eq!(cro.sccs[0].members, vec![0, 1]);
        assert_eq!(spec.agent_sets(&ro).unwrap()[0], AgentSet::from([AgentId(0), AgentId(1)]));
        let bad = OjrSpec { trigger: "go".into(), clusters: vec![vec!["a".into()], vec!["a".into()]] };
        assert_eq!(bad.validate(&ro), Err(CoordinationError::OverlappingClusters("a".into())));
    }

    fn star() -> Network {
        let mut ch = Vec::new();
        for leaf in 1..3 {
            ch.push((AgentId(0), AgentId(leaf), 1));
            ch.push((AgentId(leaf), AgentId(0), 1));
        }
        Network::new(3, ch).unwrap()
    }

    #[test]
    fn trigger_holder_responds_at_once() {
        let ro = ResponseOrdering::new(vec!["go".into()], vec![resp("a", 0, None)], &[e("go", "a")]).unwrap();
        let ctx = Context::new(star(), 6, vec![InputSlot { event: "go".into(), agent: AgentId(0), time: 2 }]).unwrap();
        let p = gor_protocol(&ro, &ctx).unwrap();
        let b = build_system(&p, &ctx).unwrap();
        let with = b.runs.iter().find(|r| r.occurrence_time("go").is_some()).unwrap();
        assert_eq!(with.response_times("a"), vec![(AgentId(0), 2)]);
        assert!(check_gor(&b, &ro).passed());
    }

    #[test]
    fn leaves_respond_together_on_the_star() {
        let spec = OjrSpec { trigger: "go".into(), clusters: vec![vec!["l1".into(), "l2".into()]] };
        let ro = spec.to_ordering(vec![resp("l1", 1, None), resp("l2", 2, None)]).unwrap();
        let ctx = Context::new(star(), 6, vec![InputSlot { event: "go".into(), agent: AgentId(0), time: 0 }]).unwrap();
        assert!(validate_gor_context(&ro, &ctx).unwrap().is_empty());
        let b = build_system(&gor_protocol(&ro, &ctx).unwrap(), &ctx).unwrap();
        for run in &b.runs {
            if run.occurrence_time("go").is_some() {
                let mut t = run.response_times("l1");
                t.extend(run.response_times("l2"));
                assert_eq!(t, vec![(AgentId(1), 1), (AgentId(2), 1)]);
            } else {
                assert!(run.responses.is_empty());
            }
        }
        assert!(check_gor(&b, &ro).passed());
        assert!(check_ojr(&b, &ro, &spec).unwrap().passed());
    }

    #[test]
    fn scheduled_fixture_breaks_clauses() {
        let spec = OjrSpec { trigger: "go".into(), clusters: vec![vec!["l1".into(), "l2".into()], vec!["c".into()]] };
        let ro = spec.to_ordering(vec![resp("l1", 1, None), resp("l2", 2, None), resp("c", 0, None)]).unwrap();
        let ctx = Context::new(star(), 8, vec![InputSlot { event: "go".into(), agent: AgentId(0), time: 3 }]).unwrap();
        let mut schedule = BTreeMap::new();
        schedule.insert(("l1".into(), AgentId(1)), 4);
        schedule.insert(("l2".into(), AgentId(2)), 5);
        schedule.insert(("c".into(), AgentId(0)), 2);
        let b = build_system(&ScheduledResponder { schedule }, &ctx).unwrap();
        let gor = check_gor(&b, &ro);
        assert_eq!(gor.clauses(), BTreeSet::from([Clause::Triggering, Clause::WeakOrdering]));
        let ojr = check_ojr(&b, &ro, &spec).unwrap();
        assert_eq!(ojr.clauses(), BTreeSet::from([Clause::Triggering, Clause::Simultaneity, Clause::LinearOrdering]));
    }

    #[test]
    fn horizon_validation() {
        let ro = ResponseOrdering::new(vec!["go".into()], vec![resp("a", 1, None)], &[e("go", "a")]).unwrap();
        let ctx = Context::new(star(), 4, vec![InputSlot { event: "go".into(), agent: AgentId(0), time: 0 }]).unwrap();
        // k_max = 1, max Rad = 2, max b = 1.
        assert_eq!(completion_bound(&ro, &ctx).unwrap(), 5);
        assert_eq!(validate_gor_context(&ro, &ctx), Err(CoordinationError::HorizonTooShort { needed: 5, horizon: 4 }));
        let unbound = ResponseOrdering::new(vec!["nope".into()], vec![resp("a", 1, None)], &[e("nope", "a")]).unwrap();
        assert_eq!(validate_gor_context(&unbound, &ctx), Err(CoordinationError::UnboundTrigger("nope".into())));
    }
}
