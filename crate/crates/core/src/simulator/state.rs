//! Agent local states.
//!
//! A local state at time `t` is the agent's full observation history for
//! rounds `0..=t` plus the responses it performed before `t`. States are
//! persistent linked lists (each node points at the previous round), and
//! message payloads can embed other agents' states, so a full-information
//! state is a DAG rather than an exponentially large tree.
//!
//! Identity is the canonical encoding of a node, where embedded states are
//! represented by their SHA-256 digest. Two states compare equal iff their
//! digests match.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use sha2::{Digest, Sha256};

use crate::network::{AgentId, Time};

/// Label of an external input event.
pub type EventId = String;
/// Label of a response action.
pub type ActionId = String;

/// 32-byte canonical digest of a local state.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateDigest(pub [u8; 32]);

impl fmt::Debug for StateDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for StateDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0[..8] {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

/// Message contents.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Payload {
    /// The sender's entire local state (full-information messages).
    State(LocalState),
    /// A snapshot request carrying a proposed recording time.
    SnapTime(Time),
    /// An opaque label.
    Label(String),
}

impl Payload {
    fn encode(&self, out: &mut Vec<u8>) {
        match self {
            Payload::State(s) => {
                out.push(0);
                out.extend_from_slice(&s.digest().0);
            }
            Payload::SnapTime(t) => {
                out.push(1);
                out.extend_from_slice(&t.to_le_bytes());
            }
            Payload::Label(l) => {
                out.push(2);
                encode_str(l, out);
            }
        }
    }

    pub fn as_state(&self) -> Option<&LocalState> {
        match self {
            Payload::State(s) => Some(s),
            _ => None,
        }
    }

    pub fn snap_time(&self) -> Option<Time> {
        match self {
            Payload::SnapTime(t) => Some(*t),
            _ => None,
        }
    }
}

impl fmt::Display for Payload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Payload::State(s) => write!(f, "state<{}@{}:{}>", s.agent(), s.time(), s.digest()),
            Payload::SnapTime(t) => write!(f, "snap({t})"),
            Payload::Label(l) => write!(f, "label({l})"),
        }
    }
}

/// A message as seen by its receiver.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Delivery {
    pub from: AgentId,
    pub sent_at: Time,
    pub payload: Payload,
}

#[derive(Debug)]
struct StateNode {
    agent: AgentId,
    time: Time,
    prev: Option<LocalState>,
    inputs: Vec<EventId>,
    received: Vec<Delivery>,
    prior_responses: Vec<ActionId>,
    digest: StateDigest,
}

/// `r_i(t)`: an agent's local state at one time of one run.
#[derive(Clone)]
pub struct LocalState(Arc<StateNode>);

impl LocalState {
    /// Extends `prev` (the state at `time - 1`, absent at time 0) with the
    /// observations of round `time`. `prior_responses` are the responses
    /// performed at `time - 1`.
    pub fn extend(
        agent: AgentId,
        time: Time,
        prev: Option<LocalState>,
        mut inputs: Vec<EventId>,
        mut received: Vec<Delivery>,
        mut prior_responses: Vec<ActionId>,
    ) -> Self {
        debug_assert_eq!(prev.as_ref().map(|p| p.time() + 1).unwrap_or(0), time);
        inputs.sort();
        received.sort_by_key(|d| (d.from, d.sent_at));
        prior_responses.sort();

        let mut enc = Vec::with_capacity(64 + received.len() * 41);
        enc.extend_from_slice(b"LS1");
        enc.extend_from_slice(&agent.0.to_le_bytes());
        enc.extend_from_slice(&time.to_le_bytes());
        match &prev {
            Some(p) => {
                enc.push(1);
                enc.extend_from_slice(&p.digest().0);
            }
            None => enc.push(0),
        }
        enc.extend_from_slice(&(inputs.len() as u32).to_le_bytes());
        for e in &inputs {
            encode_str(e, &mut enc);
        }
        enc.extend_from_slice(&(received.len() as u32).to_le_bytes());
        for d in &received {
            enc.extend_from_slice(&d.from.0.to_le_bytes());
            enc.extend_from_slice(&d.sent_at.to_le_bytes());
            d.payload.encode(&mut enc);
        }
        enc.extend_from_slice(&(prior_responses.len() as u32).to_le_bytes());
        for a in &prior_responses {
            encode_str(a, &mut enc);
        }
        let digest = StateDigest(Sha256::digest(&enc).into());

        LocalState(Arc::new(StateNode { agent, time, prev, inputs, received, prior_responses, digest }))
    }

    pub fn agent(&self) -> AgentId {
        self.0.agent
    }

    pub fn time(&self) -> Time {
        self.0.time
    }

    pub fn digest(&self) -> StateDigest {
        self.0.digest
    }

    pub fn prev(&self) -> Option<&LocalState> {
        self.0.prev.as_ref()
    }

    /// External inputs that arrived at `self.time()`.
    pub fn inputs(&self) -> &[EventId] {
        &self.0.inputs
    }

    /// Messages delivered at `self.time()`.
    pub fn received(&self) -> &[Delivery] {
        &self.0.received
    }

    /// Responses performed at `self.time() - 1`.
    pub fn prior_responses(&self) -> &[ActionId] {
        &self.0.prior_responses
    }

    /// The same agent's state at an earlier `time`.
    pub fn at(&self, time: Time) -> Option<&LocalState> {
        let mut cur = self;
        loop {
            if cur.time() == time {
                return Some(cur);
            }
            if cur.time() < time {
                return None;
            }
            cur = cur.prev()?;
        }
    }

    /// States from time 0 up to and including this one.
    pub fn history(&self) -> Vec<&LocalState> {
        let mut out = Vec::with_capacity(self.time() as usize + 1);
        let mut cur = Some(self);
        while let Some(s) = cur {
            out.push(s);
            cur = s.prev();
        }
        out.reverse();
        out
    }

    /// Every response performed before `self.time()`, with its time.
    pub fn responses(&self) -> Vec<(ActionId, Time)> {
        let mut out = Vec::new();
        for s in self.history() {
            for a in s.prior_responses() {
                out.push((a.clone(), s.time() - 1));
            }
        }
        out
    }

    /// Every input this agent has observed, with its arrival time.
    pub fn all_inputs(&self) -> Vec<(EventId, Time)> {
        let mut out = Vec::new();
        for s in self.history() {
            for e in s.inputs() {
                out.push((e.clone(), s.time()));
            }
        }
        out
    }

    /// Human-readable history, one line per round.
    pub fn describe(&self) -> String {
        let mut out = String::new();
        for s in self.history() {
            out.push_str(&format!("t={}", s.time()));
            if !s.inputs().is_empty() {
                out.push_str(&format!(" inputs={:?}", s.inputs()));
            }
            for d in s.received() {
                out.push_str(&format!(" recv[{}@{}:{}]", d.from, d.sent_at, d.payload));
            }
            if !s.prior_responses().is_empty() {
                out.push_str(&format!(" responded@{}={:?}", s.time() - 1, s.prior_responses()));
            }
            out.push('\n');
        }
        out
    }
}

impl PartialEq for LocalState {
    fn eq(&self, other: &Self) -> bool {
        self.0.digest == other.0.digest
    }
}

impl Eq for LocalState {}

impl Hash for LocalState {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.digest.hash(state);
    }
}

impl fmt::Debug for LocalState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LocalState({}@{}:{})", self.agent(), self.time(), self.digest())
    }
}

fn encode_str(s: &str, out: &mut Vec<u8>) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}
