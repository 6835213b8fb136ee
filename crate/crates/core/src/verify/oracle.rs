//! Brute-force reference implementations. Each one recomputes a quantity from
//! first principles, sharing no code with the optimized module it checks.

use std::collections::{BTreeSet, HashMap, VecDeque};

use crate::network::{AgentId, Network, Time};
use crate::simulator::{
    execute_with, ChoiceSource, Context, DelayOptions, InputSlot, LocalState, Protocol, Run, SendKey, SimError,
    SystemBundle,
};
use crate::structures::AgentSet;

/// `δ(from, to)` as the cheapest simple path, found by exhaustive DFS.
pub fn brute_distance(network: &Network, from: AgentId, to: AgentId) -> Option<Time> {
    fn dfs(net: &Network, at: AgentId, to: AgentId, seen: &mut Vec<bool>, cost: Time, best: &mut Option<Time>) {
        if at == to {
            *best = Some(best.map_or(cost, |b| b.min(cost)));
            return;
        }
        for &next in net.outgoing(at) {
            if !seen[next.index()] {
                seen[next.index()] = true;
                let b = net.bound(at, next).expect("outgoing channel has a bound");
                dfs(net, next, to, seen, cost + b, best);
                seen[next.index()] = false;
            }
        }
    }
    let mut seen = vec![false; network.agent_count()];
    seen[from.index()] = true;
    let mut best = None;
    dfs(network, from, to, &mut seen, 0, &mut best);
    best
}

/// Syncausality of one run, closed by breadth-first search from every node.
/// Edges are rebuilt from the message log: locality, deliveries, and a null
/// message wherever a channel was silent.
pub struct Reach {
    agents: usize,
    horizon: Time,
    matrix: Vec<Vec<bool>>,
    dist: Vec<Vec<Option<Time>>>,
}

impl Reach {
    pub fn new(run: &Run, network: &Network) -> Self {
        let agents = network.agent_count();
        let horizon = run.horizon;
        let width = horizon as usize + 1;
        let n = agents * width;
        let idx = |a: AgentId, t: Time| a.index() * width + t as usize;
        let mut adj = vec![Vec::new(); n];
        for a in network.agents() {
            for t in 0..horizon {
                adj[idx(a, t)].push(idx(a, t + 1));
            }
        }
        let sent: BTreeSet<(AgentId, AgentId, Time)> = run.messages.iter().map(|m| (m.from, m.to, m.sent_at)).collect();
        for m in &run.messages {
            if let Some(r) = m.received_at {
                adj[idx(m.from, m.sent_at)].push(idx(m.to, r));
            }
        }
        for a in network.agents() {
            for &b in network.outgoing(a) {
                let bound = network.bound(a, b).expect("channel");
                for t in 0..=horizon {
                    if t + bound <= horizon && !sent.contains(&(a, b, t)) {
                        adj[idx(a, t)].push(idx(b, t + bound));
                    }
                }
            }
        }
        let mut matrix = vec![vec![false; n]; n];
        for (s, row) in matrix.iter_mut().enumerate() {
            let mut queue = VecDeque::from([s]);
            row[s] = true;
            while let Some(u) = queue.pop_front() {
                for &v in &adj[u] {
                    if !row[v] {
                        row[v] = true;
                        queue.push_back(v);
                    }
                }
            }
        }
        let dist =
            network.agents().map(|a| network.agents().map(|b| brute_distance(network, a, b)).collect()).collect();
        Reach { agents, horizon, matrix, dist }
    }

    pub fn nodes(&self) -> impl Iterator<Item = (AgentId, Time)> + '_ {
        (0..self.agents as u32).flat_map(move |a| (0..=self.horizon).map(move |t| (AgentId(a), t)))
    }

    pub fn reaches(&self, from: (AgentId, Time), to: (AgentId, Time)) -> bool {
        let w = self.horizon as usize + 1;
        self.matrix[from.0.index() * w + from.1 as usize][to.0.index() * w + to.1 as usize]
    }

    fn guaranteed(&self, from: (AgentId, Time), to: (AgentId, Time)) -> bool {
        self.dist[from.0.index()][to.0.index()].is_some_and(|d| from.1 + d <= to.1)
    }
}

type Node = (AgentId, Time);
type Level<'a> = Box<dyn Fn(Node) -> bool + 'a>;

/// Tries every tuple `θ_1..θ_k` of nodes against the level predicates.
fn tuples(reach: &Reach, prev: Node, levels: &[&dyn Fn(Node) -> bool]) -> bool {
    let Some((first, rest)) = levels.split_first() else { return true };
    reach.nodes().any(|node| reach.reaches(prev, node) && first(node) && tuples(reach, node, rest))
}

/// Centibroom existence by tuple enumeration.
pub fn brute_centibroom(reach: &Reach, origin: AgentId, groups: &[AgentSet], t: Time, t_end: Time) -> bool {
    let preds: Vec<Level<'_>> = groups
        .iter()
        .map(|g| Box::new(move |n| g.iter().all(|&i| reach.guaranteed(n, (i, t_end)))) as Box<dyn Fn(_) -> bool>)
        .collect();
    let refs: Vec<&dyn Fn(Node) -> bool> = preds.iter().map(|b| b.as_ref()).collect();
    tuples(reach, (origin, t), &refs)
}

/// Centipede existence by tuple enumeration; `agents` is `i_1..i_k`.
pub fn brute_centipede(reach: &Reach, origin: AgentId, agents: &[AgentId], t: Time, t_end: Time) -> bool {
    let k = agents.len();
    let preds: Vec<Level<'_>> = agents
        .iter()
        .enumerate()
        .map(|(h, &i)| {
            if h + 1 == k {
                Box::new(move |n| n == (i, t_end)) as Box<dyn Fn(_) -> bool>
            } else {
                Box::new(move |n| reach.guaranteed(n, (i, t_end))) as Box<dyn Fn(_) -> bool>
            }
        })
        .collect();
    let refs: Vec<&dyn Fn(Node) -> bool> = preds.iter().map(|b| b.as_ref()).collect();
    t <= t_end && tuples(reach, (origin, t), &refs)
}

/// Follows a fixed prefix of option indices, then stops at the first fresh
/// choice point and reports its arity.
struct Probe<'a> {
    prefix: &'a [u32],
    pos: usize,
    fresh: Option<u32>,
}

impl Probe<'_> {
    fn pick(&mut self, arity: u32) -> Result<u32, SimError> {
        if let Some(&i) = self.prefix.get(self.pos) {
            self.pos += 1;
            return Ok(i);
        }
        self.fresh = Some(arity);
        // Abort the execution; the caller inspects `fresh`.
        Err(SimError::EnvIndexOutOfRange { index: 0, count: 0 })
    }
}

impl ChoiceSource for Probe<'_> {
    fn input_present(&mut self, _: usize, _: &InputSlot) -> Result<bool, SimError> {
        Ok(self.pick(2)? == 1)
    }

    fn delay(&mut self, _: SendKey, options: DelayOptions) -> Result<Time, SimError> {
        if options.arity() == 1 {
            return Ok(options.option(0));
        }
        Ok(options.option(self.pick(options.arity())?))
    }
}

/// Number of environments, by recursive descent over the choice tree.
pub fn count_environments<P: Protocol>(protocol: &P, ctx: &Context) -> Result<usize, SimError> {
    fn go<P: Protocol>(protocol: &P, ctx: &Context, prefix: &mut Vec<u32>) -> Result<usize, SimError> {
        let mut probe = Probe { prefix, pos: 0, fresh: None };
        match execute_with(protocol, ctx, &mut probe) {
            Ok(_) => Ok(1),
            Err(e) => {
                let Some(arity) = probe.fresh else { return Err(e) };
                let mut total = 0;
                for i in 0..arity {
                    prefix.push(i);
                    total += go(protocol, ctx, prefix)?;
                    prefix.pop();
                }
                Ok(total)
            }
        }
    }
    go(protocol, ctx, &mut Vec::new())
}

/// Closed form for a protocol that sends on every channel in every round:
/// `2^slots` times, per send, the number of distinct delivery outcomes
/// (each in-horizon delay, plus one "still in flight" outcome if any delay
/// overshoots the horizon).
pub fn broadcast_environment_count(ctx: &Context) -> u128 {
    let mut total: u128 = 1 << ctx.slots.len();
    for (_, _, b) in ctx.network.channels() {
        for t in 0..=ctx.horizon {
            let room = ctx.horizon - t;
            let outcomes = b.min(room) + u32::from(b > room);
            total *= u128::from(outcomes);
        }
    }
    total
}

/// Truth table over the points `(run, t)`, `t <= last`.
pub type Table = Vec<Vec<bool>>;

/// Knowledge computed by direct expansion of the definitions: `K_i` groups
/// runs by the literal local state, and `C_G` is the limit of `E_G^m`.
pub struct DirectModel<'a> {
    bundle: &'a SystemBundle,
    last: Time,
}

impl<'a> DirectModel<'a> {
    pub fn new(bundle: &'a SystemBundle, last: Time) -> Self {
        DirectModel { bundle, last }
    }

    pub fn occ(&self, event: &str) -> Table {
        self.bundle
            .runs
            .iter()
            .map(|r| {
                let at = r.occurrence_time(event);
                (0..=self.last).map(|t| at.is_some_and(|a| a <= t)).collect()
            })
            .collect()
    }

    pub fn not(&self, phi: &Table) -> Table {
        phi.iter().map(|row| row.iter().map(|v| !v).collect()).collect()
    }

    pub fn and(&self, a: &Table, b: &Table) -> Table {
        a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(p, q)| *p && *q).collect()).collect()
    }

    pub fn k(&self, agent: AgentId, phi: &Table) -> Table {
        let mut out = vec![vec![false; self.last as usize + 1]; self.bundle.runs.len()];
        for t in 0..=self.last {
            let mut all: HashMap<&LocalState, bool> = HashMap::new();
            for (r, run) in self.bundle.runs.iter().enumerate() {
                let v = phi[r][t as usize];
                all.entry(run.state(agent, t)).and_modify(|x| *x &= v).or_insert(v);
            }
            for (r, run) in self.bundle.runs.iter().enumerate() {
                out[r][t as usize] = all[run.state(agent, t)];
            }
        }
        out
    }

    pub fn everyone(&self, group: &AgentSet, phi: &Table) -> Table {
        group.iter().fold(vec![vec![true; self.last as usize + 1]; self.bundle.runs.len()], |acc, &i| {
            self.and(&acc, &self.k(i, phi))
        })
    }

    /// `∧_{m>=1} E^m φ`. By veridicality `E^{m+1} φ ⊆ E^m φ`, so the first
    /// repeated iterate is the whole conjunction.
    pub fn common(&self, group: &AgentSet, phi: &Table) -> Table {
        let mut cur = self.everyone(group, phi);
        loop {
            let next = self.everyone(group, &cur);
            if next == cur {
                return cur;
            }
            cur = next;
        }
    }
}
