//! Simultaneous global snapshots by flooding a recording time.
//!
//! Each agent keeps `Snap_Time` (initially unset). In every round:
//!
//! 1. if the clock equals `Snap_Time`, the agent records its local state and
//!    clears `Snap_Time`; arrivals of that round are not examined;
//! 2. otherwise, if an `ext_Snap` input or any `Snap_msg(T_j)` arrived, the
//!    candidate is the least arrived `T_j` capped by `now + Rad(i)`; a strict
//!    improvement sets `Snap_Time` and floods `Snap_msg(Snap_Time)` on every
//!    outgoing channel. If the new `Snap_Time` is `now`, the agent records in
//!    the same round.
//!
//! `Snap_msg(T_j)` with `T_j` earlier than the current round is ignored: every
//! agent has already recorded at `T_j`, and acting on it would restart the
//! flood with a time that can never be reached.
//!
//! Every external input is treated as an `ext_Snap` request. The recording
//! response is the action `record`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::causality::build_causal_graph;
use crate::network::{AgentId, Network, NetworkError, Time};
use crate::simulator::{
    execute, execute_with, Actions, Context, EnvironmentChoice, FullInformation, KeyedSource, LocalState,
    MessageRecord, Payload, Protocol, Run, SimError, StepView,
};
use crate::structures::{earliest_formation_time, AgentSet};

pub const RECORD_ACTION: &str = "record";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SnapshotError {
    #[error("no ext_Snap input is present in this environment")]
    NoTrigger,
    #[error("agents recorded at different times: {0:?}")]
    NonSimultaneous(Vec<(AgentId, Option<Time>)>),
    #[error("horizon {horizon} is too short; the snapshot needs {needed}")]
    HorizonExceeded { needed: Time, horizon: Time },
    #[error(transparent)]
    Connectivity(#[from] NetworkError),
    #[error(transparent)]
    Simulation(#[from] SimError),
}

/// Per-agent protocol variables.
#[derive(Debug, Clone)]
pub struct SnapMemory {
    rad: Time,
    /// `None` stands for infinity.
    pub snap_time: Option<Time>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SnapshotProtocol;

pub fn snapshot_protocol() -> SnapshotProtocol {
    SnapshotProtocol
}

impl Protocol for SnapshotProtocol {
    type Memory = SnapMemory;

    fn name(&self) -> &str {
        "snapshot"
    }

    fn init(&self, agent: AgentId, network: &Network) -> SnapMemory {
        SnapMemory { rad: network.rad(agent).finite().unwrap_or(Time::MAX), snap_time: None }
    }

    fn step(&self, view: &StepView<'_>, mem: &mut SnapMemory) -> Actions {
        let now = view.time;
        let mut actions = Actions::none();
        if mem.snap_time == Some(now) {
            actions.responses.push(RECORD_ACTION.into());
            mem.snap_time = None;
            return actions;
        }
        // A request for a time already past names a finished episode.
        let arrived: Vec<Time> =
            view.state.received().iter().filter_map(|d| d.payload.snap_time()).filter(|&t| t >= now).collect();
        if view.state.inputs().is_empty() && arrived.is_empty() {
            return actions;
        }
        let candidate = arrived.into_iter().min().unwrap_or(Time::MAX).min(now.saturating_add(mem.rad));
        if mem.snap_time.is_none_or(|s| candidate < s) {
            mem.snap_time = Some(candidate);
            for &to in view.network.outgoing(view.agent) {
                actions.sends.push((to, Payload::SnapTime(candidate)));
            }
        }
        if mem.snap_time == Some(now) {
            actions.responses.push(RECORD_ACTION.into());
            mem.snap_time = None;
        }
        actions
    }
}

/// Rejects contexts in which a snapshot could be cut off by the horizon.
pub fn validate_snapshot_context(ctx: &Context) -> Result<(), SnapshotError> {
    let net = &ctx.network;
    net.require_strongly_connected()?;
    let max_rad = net.max_radius().finite().unwrap_or(Time::MAX);
    let last_trigger = ctx.slots.iter().map(|s| s.time).max().unwrap_or(0);
    let needed = last_trigger.saturating_add(max_rad.saturating_mul(2)).saturating_add(net.max_bound());
    if ctx.horizon < needed {
        return Err(SnapshotError::HorizonExceeded { needed, horizon: ctx.horizon });
    }
    Ok(())
}

/// In-transit messages per incoming channel `(from, to)`: sent at or before
/// `s`, received in `(s, s + b]`.
pub fn record_channels(
    run: &Run,
    network: &Network,
    s: Time,
) -> Result<BTreeMap<(AgentId, AgentId), Vec<MessageRecord>>, SnapshotError> {
    let needed = network.agents().map(|a| s + network.max_incoming_bound(a)).max().unwrap_or(s);
    if needed > run.horizon {
        return Err(SnapshotError::HorizonExceeded { needed, horizon: run.horizon });
    }
    let mut out: BTreeMap<(AgentId, AgentId), Vec<MessageRecord>> =
        network.channels().map(|(f, t, _)| ((f, t), Vec::new())).collect();
    for m in &run.messages {
        let b = network.bound(m.from, m.to).unwrap_or(0);
        if let Some(r) = m.received_at {
            if m.sent_at <= s && s < r && r <= s + b {
                out.entry((m.from, m.to)).or_default().push(m.clone());
            }
        }
    }
    for list in out.values_mut() {
        list.sort_by_key(|m| (m.sent_at, m.received_at));
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct SnapshotResult {
    /// Common recording time `S`.
    pub time: Time,
    pub states: Vec<LocalState>,
    pub channels: BTreeMap<(AgentId, AgentId), Vec<MessageRecord>>,
    /// Flooding initiations per agent up to and including `S`.
    pub floodings: Vec<usize>,
    pub run: Run,
}

#[derive(Serialize)]
struct ReportMessage {
    sent_at: Time,
    received_at: Time,
    payload: String,
}

impl SnapshotResult {
    /// Extracts the first snapshot episode from a run of [`SnapshotProtocol`].
    pub fn from_run(run: Run, network: &Network) -> Result<Self, SnapshotError> {
        if !run.env.inputs.iter().any(|&p| p) {
            return Err(SnapshotError::NoTrigger);
        }
        let first: Vec<(AgentId, Option<Time>)> = network
            .agents()
            .map(|a| {
                let t =
                    run.responses.iter().filter(|r| r.agent == a && r.action == RECORD_ACTION).map(|r| r.time).min();
                (a, t)
            })
            .collect();
        let times: BTreeSet<Option<Time>> = first.iter().map(|&(_, t)| t).collect();
        let time = match times.into_iter().collect::<Vec<_>>().as_slice() {
            [Some(t)] => *t,
            [None] => {
                return Err(SnapshotError::HorizonExceeded { needed: run.horizon + 1, horizon: run.horizon });
            }
            _ => return Err(SnapshotError::NonSimultaneous(first)),
        };
        let channels = record_channels(&run, network, time)?;
        let states = network.agents().map(|a| run.state(a, time).clone()).collect();
        let floodings = network
            .agents()
            .map(|a| {
                run.messages
                    .iter()
                    .filter(|m| m.from == a && m.sent_at <= time && m.payload.snap_time().is_some())
                    .map(|m| m.sent_at)
                    .collect::<BTreeSet<_>>()
                    .len()
            })
            .collect();
        Ok(SnapshotResult { time, states, channels, floodings, run })
    }

    /// Structured text report: one JSON document.
    pub fn report(&self, network: &Network) -> String {
        let agents: BTreeMap<&str, String> =
            network.agents().map(|a| (network.name(a), self.states[a.index()].describe())).collect();
        let channels: BTreeMap<String, Vec<ReportMessage>> = self
            .channels
            .iter()
            .map(|(&(f, t), msgs)| {
                let list = msgs
                    .iter()
                    .map(|m| ReportMessage {
                        sent_at: m.sent_at,
                        received_at: m.received_at.unwrap_or(m.sent_at + m.delay),
                        payload: m.payload.to_string(),
                    })
                    .collect();
                (format!("{}->{}", network.name(f), network.name(t)), list)
            })
            .collect();
        let doc = serde_json::json!({
            "snapshot_time": self.time,
            "agents": agents,
            "channels": channels,
            "floodings": network.agents().map(|a| (network.name(a).to_string(), self.floodings[a.index()])).collect::<BTreeMap<_, _>>(),
        });
        serde_json::to_string_pretty(&doc).expect("report serializes")
    }

    /// Short human-readable summary.
    pub fn summary(&self, network: &Network) -> String {
        let mut out = format!("snapshot time S = {}\n", self.time);
        for ((f, t), msgs) in &self.channels {
            let _ = write!(out, "channel {}->{}:", network.name(*f), network.name(*t));
            if msgs.is_empty() {
                out.push_str(" empty");
            }
            for m in msgs {
                let _ = write!(out, " [sent {} recv {}]", m.sent_at, m.received_at.unwrap_or(0));
            }
            out.push('\n');
        }
        out
    }
}

/// Executes the snapshot protocol under `env` and extracts the first episode.
pub fn run_snapshot_scenario(ctx: &Context, env: &EnvironmentChoice) -> Result<SnapshotResult, SnapshotError> {
    if !env.inputs.iter().any(|&p| p) {
        return Err(SnapshotError::NoTrigger);
    }
    let run = execute(&SnapshotProtocol, ctx, env)?;
    SnapshotResult::from_run(run, &ctx.network)
}

/// Earliest time at which a broom over all agents exists for some present
/// `ext_Snap` input, in the full-information run corresponding to `env`.
/// Delays are matched by `(channel, send time)`; sends that `env` does not
/// mention take the channel bound.
pub fn oracle_earliest_broom(ctx: &Context, env: &EnvironmentChoice) -> Result<Option<Time>, SnapshotError> {
    let mut source = KeyedSource { inputs: &env.inputs, delays: &env.delays };
    let run = execute_with(&FullInformation, ctx, &mut source)?;
    let graph = build_causal_graph(&run, &ctx.network);
    let everyone: AgentSet = ctx.network.agents().collect();
    let mut best: Option<Time> = None;
    for (slot, &present) in ctx.slots.iter().zip(&env.inputs) {
        if !present {
            continue;
        }
        let t = earliest_formation_time(&graph, &ctx.network, slot.agent, std::slice::from_ref(&everyone), slot.time)
            .expect("group is nonempty and agents are known");
        best = match (best, t) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
    }
    Ok(best)
}
