//! Deterministic execution of agent protocols in the synchronous bounded-delay
//! context, plus exhaustive and sampled construction of run systems.
//!
//! Each round `t` proceeds in two phases. First every agent observes the
//! external inputs and messages that arrive at `t`, producing its local state
//! `r_i(t)`. Then every agent runs its protocol step on that state and emits
//! sends and responses stamped with time `t`. A message sent at `t` over a
//! channel with bound `b` is delivered at `t + d` for an environment-chosen
//! delay `1 <= d <= b`; deliveries past the horizon stay in flight.

mod enumerate;
mod protocols;
mod state;

pub use enumerate::{
    build_system, build_system_with_ceiling, enumerate_environments, environment_at, sample_system, Environments,
    SystemBundle, DEFAULT_CEILING,
};
pub use protocols::{FullInformation, ScheduledResponder, Silent};
pub use state::{ActionId, Delivery, EventId, LocalState, Payload, StateDigest};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{AgentId, Network, Time};

/// A place where the environment may or may not deliver an external input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputSlot {
    pub event: EventId,
    pub agent: AgentId,
    pub time: Time,
}

/// Everything about the context except the protocol: network, horizon, the
/// finite input alphabet, and the enumeration ceiling. The initial global
/// state is fixed (every agent starts with an empty history).
#[derive(Debug, Clone)]
pub struct Context {
    pub network: Network,
    pub horizon: Time,
    pub slots: Vec<InputSlot>,
    pub ceiling: usize,
}

impl Context {
    pub fn new(network: Network, horizon: Time, slots: Vec<InputSlot>) -> Result<Self, SimError> {
        let mut seen = BTreeSet::new();
        for s in &slots {
            if !network.contains(s.agent) {
                return Err(SimError::UnknownAgent(s.agent));
            }
            if s.time > horizon {
                return Err(SimError::SlotAfterHorizon { event: s.event.clone(), time: s.time, horizon });
            }
            if !seen.insert(s.event.clone()) {
                return Err(SimError::DuplicateSlot(s.event.clone()));
            }
        }
        Ok(Context { network, horizon, slots, ceiling: DEFAULT_CEILING })
    }

    pub fn with_ceiling(mut self, ceiling: usize) -> Self {
        self.ceiling = ceiling;
        self
    }

    /// Last time at which knowledge is evaluated: `T - max b`, so every null
    /// message relevant to an evaluation point lands inside the horizon.
    pub fn evaluation_horizon(&self) -> Option<Time> {
        self.horizon.checked_sub(self.network.max_bound())
    }

    pub fn slot(&self, event: &str) -> Option<&InputSlot> {
        self.slots.iter().find(|s| s.event == event)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("delay {delay} for message on ({from},{to}) at {time} is outside [1, {bound}]")]
    InvalidDelay { from: AgentId, to: AgentId, time: Time, delay: Time, bound: Time },
    #[error("protocol sent on nonexistent channel ({from},{to})")]
    UnknownChannel { from: AgentId, to: AgentId },
    #[error("protocol sent twice on channel ({from},{to}) at time {time}")]
    DuplicateSend { from: AgentId, to: AgentId, time: Time },
    #[error("environment gives no delay for the message on ({from},{to}) sent at {time}")]
    MissingDelay { from: AgentId, to: AgentId, time: Time },
    #[error("environment gives a delay for ({from},{to}) at {time} but no such message is sent")]
    UnusedDelay { from: AgentId, to: AgentId, time: Time },
    #[error("environment has {got} input flags, context has {expected} slots")]
    InputArity { expected: usize, got: usize },
    #[error("unknown agent {0}")]
    UnknownAgent(AgentId),
    #[error("input slot {event} at time {time} is after the horizon {horizon}")]
    SlotAfterHorizon { event: EventId, time: Time, horizon: Time },
    #[error("input event {0} has more than one slot")]
    DuplicateSlot(EventId),
    #[error("enumeration exceeds the ceiling of {ceiling} runs")]
    ExplosionGuard { ceiling: usize },
    #[error("environment index {index} is out of range ({count} environments)")]
    EnvIndexOutOfRange { index: usize, count: usize },
}

/// Identifies one message: the channel and the send time. A protocol sends at
/// most one message per channel per round, so this key is unique in a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SendKey {
    pub from: AgentId,
    pub to: AgentId,
    pub time: Time,
}

/// The environment's nondeterministic choices for one run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EnvironmentChoice {
    /// Presence flag per input slot, in slot order.
    pub inputs: Vec<bool>,
    /// Delivery delay per sent message.
    pub delays: BTreeMap<SendKey, Time>,
}

impl fmt::Display for EnvironmentChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let flags: String = self.inputs.iter().map(|&p| if p { '1' } else { '0' }).collect();
        write!(f, "inputs={flags}")?;
        for (k, d) in &self.delays {
            write!(f, " ({},{})@{}+{}", k.from, k.to, k.time, d)?;
        }
        Ok(())
    }
}

/// Distinct delivery outcomes for a message sent at `time` with bound `bound`
/// under horizon `horizon`: delays that land inside the horizon are distinct,
/// and all delays landing past it are one outcome ("still in flight"),
/// represented by the smallest such delay.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DelayOptions {
    pub bound: Time,
    pub remaining: Time,
}

impl DelayOptions {
    pub fn new(bound: Time, time: Time, horizon: Time) -> Self {
        DelayOptions { bound, remaining: horizon.saturating_sub(time) }
    }

    pub fn arity(&self) -> u32 {
        let inside = self.bound.min(self.remaining);
        inside + u32::from(self.bound > self.remaining)
    }

    pub fn option(&self, index: u32) -> Time {
        debug_assert!(index < self.arity());
        index + 1
    }

    /// Canonical option index of a legal delay.
    pub fn index_of(&self, delay: Time) -> u32 {
        delay.min(self.remaining + 1) - 1
    }
}

/// Source of environment decisions during one execution.
pub trait ChoiceSource {
    fn input_present(&mut self, index: usize, slot: &InputSlot) -> Result<bool, SimError>;
    fn delay(&mut self, key: SendKey, options: DelayOptions) -> Result<Time, SimError>;
}

/// Reads decisions from an explicit [`EnvironmentChoice`]. Missing delays are
/// an error.
struct StrictSource<'a> {
    env: &'a EnvironmentChoice,
    used: usize,
}

impl ChoiceSource for StrictSource<'_> {
    fn input_present(&mut self, index: usize, _slot: &InputSlot) -> Result<bool, SimError> {
        Ok(self.env.inputs[index])
    }

    fn delay(&mut self, key: SendKey, _options: DelayOptions) -> Result<Time, SimError> {
        let d = self.env.delays.get(&key).copied().ok_or(SimError::MissingDelay {
            from: key.from,
            to: key.to,
            time: key.time,
        })?;
        self.used += 1;
        Ok(d)
    }
}

/// Reads input flags and delays keyed by `(channel, send time)`; messages with
/// no recorded delay take the channel bound. Used to replay one environment
/// under a protocol that sends a different set of messages.
pub struct KeyedSource<'a> {
    pub inputs: &'a [bool],
    pub delays: &'a BTreeMap<SendKey, Time>,
}

impl ChoiceSource for KeyedSource<'_> {
    fn input_present(&mut self, index: usize, _slot: &InputSlot) -> Result<bool, SimError> {
        Ok(self.inputs.get(index).copied().unwrap_or(false))
    }

    fn delay(&mut self, key: SendKey, options: DelayOptions) -> Result<Time, SimError> {
        Ok(self.delays.get(&key).copied().unwrap_or(options.bound))
    }
}

/// An event in a run's log.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum EventKind {
    ExtInput(EventId),
    Receive { message: usize },
    Send { message: usize },
    Response(ActionId),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Event {
    pub kind: EventKind,
    pub agent: AgentId,
    pub time: Time,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MessageRecord {
    pub from: AgentId,
    pub to: AgentId,
    pub sent_at: Time,
    pub delay: Time,
    /// `None` when the message is still in flight at the horizon.
    pub received_at: Option<Time>,
    pub payload: Payload,
}

impl MessageRecord {
    pub fn key(&self) -> SendKey {
        SendKey { from: self.from, to: self.to, time: self.sent_at }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ResponseRecord {
    pub agent: AgentId,
    pub action: ActionId,
    pub time: Time,
}

/// What an agent does in one round.
#[derive(Debug, Clone, Default)]
pub struct Actions {
    pub sends: Vec<(AgentId, Payload)>,
    pub responses: Vec<ActionId>,
}

impl Actions {
    pub fn none() -> Self {
        Actions::default()
    }
}

/// What a protocol step may look at.
pub struct StepView<'a> {
    pub agent: AgentId,
    pub time: Time,
    pub network: &'a Network,
    pub state: &'a LocalState,
}

/// A deterministic agent protocol. `Memory` holds local variables; it is
/// touched only by `step`, so it is always a function of the agent's history.
pub trait Protocol: Sync {
    type Memory: Clone + Send;

    fn name(&self) -> &str;
    fn init(&self, agent: AgentId, network: &Network) -> Self::Memory;
    fn step(&self, view: &StepView<'_>, memory: &mut Self::Memory) -> Actions;
}

/// A finite run prefix `0..=horizon`.
#[derive(Debug, Clone)]
pub struct Run {
    pub horizon: Time,
    pub env: EnvironmentChoice,
    /// Canonical encoding of the environment: the option index taken at each
    /// choice point, in execution order.
    pub choices: Vec<u32>,
    pub events: Vec<Event>,
    /// `states[agent][time]`.
    pub states: Vec<Vec<LocalState>>,
    pub messages: Vec<MessageRecord>,
    pub responses: Vec<ResponseRecord>,
}

impl Run {
    pub fn state(&self, agent: AgentId, time: Time) -> &LocalState {
        &self.states[agent.index()][time as usize]
    }

    pub fn agent_count(&self) -> usize {
        self.states.len()
    }

    /// Earliest time `event` occurs: an input arrival or a response with
    /// that label.
    pub fn occurrence_time(&self, event: &str) -> Option<Time> {
        self.events
            .iter()
            .filter(|e| match &e.kind {
                EventKind::ExtInput(id) => id == event,
                EventKind::Response(id) => id == event,
                _ => false,
            })
            .map(|e| e.time)
            .min()
    }

    /// Where an input event arrived, if it did.
    pub fn input_node(&self, event: &str) -> Option<(AgentId, Time)> {
        self.events.iter().find_map(|e| match &e.kind {
            EventKind::ExtInput(id) if id == event => Some((e.agent, e.time)),
            _ => None,
        })
    }

    pub fn response_times(&self, action: &str) -> Vec<(AgentId, Time)> {
        self.responses.iter().filter(|r| r.action == action).map(|r| (r.agent, r.time)).collect()
    }

    /// Deterministic textual log.
    pub fn log_text(&self, network: &Network) -> String {
        let mut out = format!("environment: {}\n", self.env);
        for e in &self.events {
            let who = network.name(e.agent);
            let line = match &e.kind {
                EventKind::ExtInput(id) => format!("t={} {who}: input {id}", e.time),
                EventKind::Receive { message } => {
                    let m = &self.messages[*message];
                    format!(
                        "t={} {who}: receive from {} sent@{} {}",
                        e.time,
                        network.name(m.from),
                        m.sent_at,
                        m.payload
                    )
                }
                EventKind::Send { message } => {
                    let m = &self.messages[*message];
                    let arrival = m.received_at.map_or("in-flight".to_string(), |t| format!("arrives@{t}"));
                    format!("t={} {who}: send to {} {} {arrival}", e.time, network.name(m.to), m.payload)
                }
                EventKind::Response(a) => format!("t={} {who}: respond {a}", e.time),
            };
            out.push_str(&line);
            out.push('\n');
        }
        out
    }

    /// Checks the structural run invariants against `network`.
    pub fn check_invariants(&self, network: &Network) -> Result<(), String> {
        for m in &self.messages {
            let b = network
                .bound(m.from, m.to)
                .ok_or_else(|| format!("message on nonexistent channel ({},{})", m.from, m.to))?;
            if m.delay < 1 || m.delay > b {
                return Err(format!("delay {} outside [1,{b}]", m.delay));
            }
            match m.received_at {
                Some(r) if r != m.sent_at + m.delay => return Err("receive time != send + delay".into()),
                Some(r) if r > self.horizon => return Err("receive after horizon".into()),
                None if m.sent_at + m.delay <= self.horizon => return Err("undelivered in-horizon message".into()),
                _ => {}
            }
        }
        let mut keys = BTreeSet::new();
        for m in &self.messages {
            if !keys.insert(m.key()) {
                return Err("duplicate message key".into());
            }
        }
        let mut seen = std::collections::HashSet::new();
        for e in &self.events {
            if !seen.insert(e) {
                return Err(format!("duplicate event {e:?}"));
            }
        }
        for (i, row) in self.states.iter().enumerate() {
            if row.len() != self.horizon as usize + 1 {
                return Err("state row has wrong length".into());
            }
            for (t, s) in row.iter().enumerate() {
                if s.time() as usize != t || s.agent().index() != i {
                    return Err("state is mislabeled".into());
                }
                if t > 0 {
                    let earlier = row[t - 1].responses();
                    let later = s.responses();
                    if !earlier.iter().all(|r| later.contains(r)) {
                        return Err("responses were forgotten".into());
                    }
                }
            }
        }
        Ok(())
    }
}

/// Executes `protocol` under an explicit environment. Every sent message
/// must have a delay in `env`, and `env` must not carry delays for messages
/// that are never sent.
pub fn execute<P: Protocol>(protocol: &P, ctx: &Context, env: &EnvironmentChoice) -> Result<Run, SimError> {
    if env.inputs.len() != ctx.slots.len() {
        return Err(SimError::InputArity { expected: ctx.slots.len(), got: env.inputs.len() });
    }
    let mut source = StrictSource { env, used: 0 };
    let run = execute_with(protocol, ctx, &mut source)?;
    if source.used != env.delays.len() {
        let unused = env.delays.keys().find(|k| !run.env.delays.contains_key(k)).expect("some delay is unused");
        return Err(SimError::UnusedDelay { from: unused.from, to: unused.to, time: unused.time });
    }
    Ok(run)
}

/// Executes `protocol`, drawing each environment decision from `source`.
pub fn execute_with<P: Protocol, S: ChoiceSource>(
    protocol: &P,
    ctx: &Context,
    source: &mut S,
) -> Result<Run, SimError> {
    let net = &ctx.network;
    let n = net.agent_count();
    let horizon = ctx.horizon;

    let mut env = EnvironmentChoice::default();
    let mut choices = Vec::new();
    for (i, slot) in ctx.slots.iter().enumerate() {
        let present = source.input_present(i, slot)?;
        env.inputs.push(present);
        choices.push(u32::from(present));
    }

    let mut memory: Vec<P::Memory> = net.agents().map(|a| protocol.init(a, net)).collect();
    let mut states: Vec<Vec<LocalState>> = vec![Vec::with_capacity(horizon as usize + 1); n];
    let mut events = Vec::new();
    let mut messages: Vec<MessageRecord> = Vec::new();
    let mut responses = Vec::new();
    // inbox[time][agent] = message indices delivered then
    let mut inbox: Vec<Vec<Vec<usize>>> = vec![vec![Vec::new(); n]; horizon as usize + 1];
    let mut last_responses: Vec<Vec<ActionId>> = vec![Vec::new(); n];

    for t in 0..=horizon {
        for agent in net.agents() {
            let mut inputs = Vec::new();
            for (slot, &present) in ctx.slots.iter().zip(&env.inputs) {
                if present && slot.agent == agent && slot.time == t {
                    inputs.push(slot.event.clone());
                }
            }
            inputs.sort();
            for id in &inputs {
                events.push(Event { kind: EventKind::ExtInput(id.clone()), agent, time: t });
            }
            let mut delivered = std::mem::take(&mut inbox[t as usize][agent.index()]);
            delivered.sort_by_key(|&m| (messages[m].from, messages[m].sent_at));
            let mut received = Vec::with_capacity(delivered.len());
            for &m in &delivered {
                events.push(Event { kind: EventKind::Receive { message: m }, agent, time: t });
                let rec = &messages[m];
                received.push(Delivery { from: rec.from, sent_at: rec.sent_at, payload: rec.payload.clone() });
            }
            let prev = states[agent.index()].last().cloned();
            let prior = std::mem::take(&mut last_responses[agent.index()]);
            states[agent.index()].push(LocalState::extend(agent, t, prev, inputs, received, prior));
        }

        for agent in net.agents() {
            let view = StepView { agent, time: t, network: net, state: &states[agent.index()][t as usize] };
            let mut actions = protocol.step(&view, &mut memory[agent.index()]);

            let mut acted: Vec<ActionId> = Vec::new();
            for a in actions.responses.drain(..) {
                events.push(Event { kind: EventKind::Response(a.clone()), agent, time: t });
                responses.push(ResponseRecord { agent, action: a.clone(), time: t });
                acted.push(a);
            }
            last_responses[agent.index()] = acted;

            actions.sends.sort_by_key(|(to, _)| *to);
            for w in actions.sends.windows(2) {
                if w[0].0 == w[1].0 {
                    return Err(SimError::DuplicateSend { from: agent, to: w[0].0, time: t });
                }
            }
            for (to, payload) in actions.sends {
                let bound = net.bound(agent, to).ok_or(SimError::UnknownChannel { from: agent, to })?;
                let key = SendKey { from: agent, to, time: t };
                let options = DelayOptions::new(bound, t, horizon);
                let delay = source.delay(key, options)?;
                if delay < 1 || delay > bound {
                    return Err(SimError::InvalidDelay { from: agent, to, time: t, delay, bound });
                }
                if options.arity() > 1 {
                    choices.push(options.index_of(delay));
                }
                env.delays.insert(key, delay);
                let arrival = t + delay;
                let idx = messages.len();
                let received_at = (arrival <= horizon).then_some(arrival);
                messages.push(MessageRecord { from: agent, to, sent_at: t, delay, received_at, payload });
                events.push(Event { kind: EventKind::Send { message: idx }, agent, time: t });
                if let Some(r) = received_at {
                    inbox[r as usize][to.index()].push(idx);
                }
            }
        }
    }

    Ok(Run { horizon, env, choices, events, states, messages, responses })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(b: Time) -> Network {
        Network::new(2, [(AgentId(0), AgentId(1), b), (AgentId(1), AgentId(0), b)]).unwrap()
    }

    #[test]
    fn silent_run_has_no_events() {
        let ctx = Context::new(pair(1), 3, vec![]).unwrap();
        let run = execute(&Silent, &ctx, &EnvironmentChoice::default()).unwrap();
        assert!(run.events.is_empty());
        assert_eq!(run.states[0].len(), 4);
        assert_eq!(run.state(AgentId(1), 3).time(), 3);
        run.check_invariants(&ctx.network).unwrap();
    }

    #[test]
    fn execution_is_deterministic() {
        let slots = vec![InputSlot { event: "e".into(), agent: AgentId(0), time: 0 }];
        let ctx = Context::new(pair(2), 3, slots).unwrap();
        let env = environment_at(&FullInformation, &ctx, 5).unwrap();
        let a = execute(&FullInformation, &ctx, &env).unwrap();
        let b = execute(&FullInformation, &ctx, &env).unwrap();
        assert_eq!(a.log_text(&ctx.network), b.log_text(&ctx.network));
        assert_eq!(a.states, b.states);
        assert_eq!(a.choices, b.choices);
    }

    #[test]
    fn full_information_delivers_trigger_history() {
        let slots = vec![InputSlot { event: "e".into(), agent: AgentId(0), time: 0 }];
        let ctx = Context::new(pair(1), 2, slots).unwrap();
        let mut env = EnvironmentChoice { inputs: vec![true], delays: BTreeMap::new() };
        for t in 0..=2 {
            for (f, to) in [(0, 1), (1, 0)] {
                env.delays.insert(SendKey { from: AgentId(f), to: AgentId(to), time: t }, 1);
            }
        }
        let run = execute(&FullInformation, &ctx, &env).unwrap();
        let b1 = run.state(AgentId(1), 1);
        let from_a = &b1.received()[0];
        assert_eq!((from_a.from, from_a.sent_at), (AgentId(0), 0));
        let payload = from_a.payload.as_state().unwrap();
        assert_eq!(payload.all_inputs(), vec![("e".to_string(), 0)]);
    }

    #[test]
    fn strict_environment_errors() {
        let ctx = Context::new(pair(2), 1, vec![]).unwrap();
        let missing = EnvironmentChoice::default();
        assert!(matches!(execute(&FullInformation, &ctx, &missing), Err(SimError::MissingDelay { .. })));

        let mut bad = EnvironmentChoice::default();
        for t in 0..=1 {
            for (f, to) in [(0, 1), (1, 0)] {
                bad.delays.insert(SendKey { from: AgentId(f), to: AgentId(to), time: t }, 3);
            }
        }
        assert!(matches!(execute(&FullInformation, &ctx, &bad), Err(SimError::InvalidDelay { delay: 3, .. })));

        let mut extra = EnvironmentChoice::default();
        extra.delays.insert(SendKey { from: AgentId(0), to: AgentId(1), time: 0 }, 1);
        assert!(matches!(execute(&Silent, &ctx, &extra), Err(SimError::UnusedDelay { .. })));
    }

    #[test]
    fn sending_on_missing_channel_fails() {
        struct Rogue;
        impl Protocol for Rogue {
            type Memory = ();
            fn name(&self) -> &str {
                "rogue"
            }
            fn init(&self, _: AgentId, _: &Network) {}
            fn step(&self, view: &StepView<'_>, _: &mut ()) -> Actions {
                Actions { sends: vec![(view.agent, Payload::Label("x".into()))], responses: vec![] }
            }
        }
        let ctx = Context::new(pair(1), 1, vec![]).unwrap();
        let err = execute(&Rogue, &ctx, &EnvironmentChoice::default()).unwrap_err();
        assert!(matches!(err, SimError::UnknownChannel { .. }));
    }

    #[test]
    fn delay_options_collapse_past_horizon() {
        let o = DelayOptions::new(3, 4, 5);
        assert_eq!(o.arity(), 2);
        assert_eq!(o.option(0), 1);
        assert_eq!(o.option(1), 2);
        assert_eq!(o.index_of(3), 1);
        assert_eq!(DelayOptions::new(2, 5, 5).arity(), 1);
        assert_eq!(DelayOptions::new(2, 1, 5).arity(), 2);
        assert_eq!(DelayOptions::new(1, 0, 5).arity(), 1);
    }

    #[test]
    fn context_validation() {
        let net = pair(1);
        let slot = |e: &str, t| InputSlot { event: e.into(), agent: AgentId(0), time: t };
        assert!(matches!(Context::new(net.clone(), 2, vec![slot("e", 3)]), Err(SimError::SlotAfterHorizon { .. })));
        assert!(matches!(
            Context::new(net.clone(), 2, vec![slot("e", 0), slot("e", 1)]),
            Err(SimError::DuplicateSlot(_))
        ));
        let ctx = Context::new(net, 5, vec![]).unwrap();
        assert_eq!(ctx.evaluation_horizon(), Some(4));
    }
}
