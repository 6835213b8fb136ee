//! Scenario files.
//!
//! A scenario is a JSON document with a `network`, a `context`, a `protocol`
//! and an optional `analysis` section. Agents may be referred to by index or
//! by name. Loading parses the document and then validates it as a whole;
//! every problem found is reported with its location, not just the first.
//!
//! The schema ships as `scenarios/schema.json`; the reference scenarios used
//! by the test suites are bundled and available through [`bundled`].

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coordination::{
    gor_protocol, validate_gor_context, GorMemory, GorProtocol, OjrSpec, Response, ResponseOrdering,
};
use crate::epistemics::{parse_formula, Formula};
use crate::network::{AgentId, Network, NetworkError, Time};
use crate::simulator::{
    Actions, Context, FullInformation, InputSlot, Protocol, ScheduledResponder, Silent, StepView, DEFAULT_CEILING,
};
use crate::snapshot::{validate_snapshot_context, SnapMemory, SnapshotProtocol};
use crate::structures::{AgentSet, StructureKind};

pub const SCHEMA: &str = include_str!("../scenarios/schema.json");

const BUNDLED: &[(&str, &str)] = &[
    ("trivial", include_str!("../scenarios/trivial.json")),
    ("r1", include_str!("../scenarios/r1.json")),
    ("r2", include_str!("../scenarios/r2.json")),
    ("r2-snapshot", include_str!("../scenarios/r2-snapshot.json")),
    ("r2-gor", include_str!("../scenarios/r2-gor.json")),
    ("r3", include_str!("../scenarios/r3.json")),
    ("r3-gor", include_str!("../scenarios/r3-gor.json")),
    ("ring-snapshot", include_str!("../scenarios/ring-snapshot.json")),
    ("judea", include_str!("../scenarios/judea.json")),
    ("judea-ojr", include_str!("../scenarios/judea-ojr.json")),
    ("broken-fixture", include_str!("../scenarios/broken-fixture.json")),
];

/// Names of the bundled scenarios.
pub fn bundled_names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(n, _)| *n)
}

/// Source text of a bundled scenario.
pub fn bundled_source(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

/// Loads a bundled scenario. Bundled files are valid by construction.
pub fn bundled(name: &str) -> Option<Scenario> {
    bundled_source(name).map(|s| Scenario::from_json(s).unwrap_or_else(|e| panic!("bundled scenario {name}: {e}")))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    /// JSON path of the offending value, e.g. `network.channels[2].bound`.
    pub location: String,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("{} validation error(s):\n{}", .0.len(), .0.iter().map(|i| format!("  {i}")).collect::<Vec<_>>().join("\n"))]
    Validation(Vec<Issue>),
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ScenarioError::Io { path: path.display().to_string(), message: e.to_string() })?;
    Scenario::from_json(&text)
}

/// An agent given by index or by name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AgentRef {
    Index(u32),
    Name(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AgentsSpec {
    Count(usize),
    Names(Vec<String>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub from: AgentRef,
    pub to: AgentRef,
    pub bound: i64,
    /// Also declares the reverse channel with the same bound.
    #[serde(default)]
    pub both_ways: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub agents: AgentsSpec,
    #[serde(default)]
    pub channels: Vec<ChannelSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlotSpec {
    pub event: String,
    pub agent: AgentRef,
    pub time: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextSpec {
    pub horizon: i64,
    #[serde(default)]
    pub slots: Vec<SlotSpec>,
    pub ceiling: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResponseSpec {
    pub action: String,
    pub agent: AgentRef,
    pub group: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OjrSection {
    pub trigger: String,
    pub clusters: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderingSpec {
    /// Trigger event ids; each must name an input slot.
    pub triggers: Vec<String>,
    pub responses: Vec<ResponseSpec>,
    #[serde(default)]
    pub edges: Vec<(String, String)>,
    /// When present, the edges are derived from this OJR instance and
    /// `edges` must be empty.
    pub ojr: Option<OjrSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleEntry {
    pub action: String,
    pub agent: AgentRef,
    pub time: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProtocolSpec {
    Silent,
    FullInformation,
    Snapshot,
    Gor {
        ordering: OrderingSpec,
    },
    /// Responds at fixed times regardless of inputs; a test fixture.
    Scheduled {
        schedule: Vec<ScheduleEntry>,
        ordering: Option<OrderingSpec>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureQuery {
    pub kind: StructureKind,
    pub origin: AgentRef,
    pub from: i64,
    pub to: i64,
    /// Centipede targets `i_1..i_k`.
    #[serde(default)]
    pub agents: Vec<AgentRef>,
    /// Broom or centibroom groups `I^1..I^k`.
    #[serde(default)]
    pub groups: Vec<Vec<AgentRef>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSpec {
    #[serde(default)]
    pub formulas: Vec<String>,
    #[serde(default)]
    pub structures: Vec<StructureQuery>,
}

/// The document as written, before validation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub network: Option<NetworkSpec>,
    pub context: Option<ContextSpec>,
    pub protocol: Option<ProtocolSpec>,
    #[serde(default)]
    pub analysis: AnalysisSpec,
}

/// A resolved structure query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub kind: StructureKind,
    pub origin: AgentId,
    pub from: Time,
    pub to: Time,
    pub agents: Vec<AgentId>,
    pub groups: Vec<AgentSet>,
}

/// The selected protocol, ready to execute.
#[derive(Debug, Clone)]
pub enum ProtocolChoice {
    Silent,
    FullInformation,
    Snapshot,
    Gor(GorProtocol),
    Scheduled(ScheduledResponder),
}

#[derive(Debug, Clone)]
pub enum ChoiceMemory {
    Unit,
    Snapshot(SnapMemory),
    Gor(GorMemory),
}

impl Protocol for ProtocolChoice {
    type Memory = ChoiceMemory;

    fn name(&self) -> &str {
        match self {
            ProtocolChoice::Silent => Silent.name(),
            ProtocolChoice::FullInformation => FullInformation.name(),
            ProtocolChoice::Snapshot => SnapshotProtocol.name(),
            ProtocolChoice::Gor(p) => p.name(),
            ProtocolChoice::Scheduled(p) => p.name(),
        }
    }

    fn init(&self, agent: AgentId, network: &Network) -> ChoiceMemory {
        match self {
            ProtocolChoice::Snapshot => ChoiceMemory::Snapshot(SnapshotProtocol.init(agent, network)),
            ProtocolChoice::Gor(p) => ChoiceMemory::Gor(p.init(agent, network)),
            _ => ChoiceMemory::Unit,
        }
    }

    fn step(&self, view: &StepView<'_>, memory: &mut ChoiceMemory) -> Actions {
        match (self, memory) {
            (ProtocolChoice::Silent, _) => Silent.step(view, &mut ()),
            (ProtocolChoice::FullInformation, _) => FullInformation.step(view, &mut ()),
            (ProtocolChoice::Scheduled(p), _) => p.step(view, &mut ()),
            (ProtocolChoice::Snapshot, ChoiceMemory::Snapshot(m)) => SnapshotProtocol.step(view, m),
            (ProtocolChoice::Gor(p), ChoiceMemory::Gor(m)) => p.step(view, m),
            _ => unreachable!("memory always matches the protocol that created it"),
        }
    }
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub context: Context,
    pub protocol: ProtocolChoice,
    pub ordering: Option<ResponseOrdering>,
    pub ojr: Option<OjrSpec>,
    pub formulas: Vec<Formula>,
    pub queries: Vec<Query>,
    /// Non-fatal findings, e.g. responses that can never fire.
    pub warnings: Vec<String>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        file.validate()
    }

    pub fn network(&self) -> &Network {
        &self.context.network
    }
}

struct Issues(Vec<Issue>);

impl Issues {
    fn push(&mut self, location: impl Into<String>, message: impl Into<String>) {
        self.0.push(Issue { location: location.into(), message: message.into() });
    }
}

fn to_time(v: i64, loc: &str, what: &str, issues: &mut Issues) -> Option<Time> {
    match Time::try_from(v) {
        Ok(t) => Some(t),
        Err(_) => {
            issues.push(loc, format!("{what} must be a non-negative integer, got {v}"));
            None
        }
    }
}

/// Resolves agent references against the declared agent names.
struct Agents {
    names: Vec<String>,
}

impl Agents {
    fn resolve(&self, r: &AgentRef, loc: &str, issues: &mut Issues) -> Option<AgentId> {
        match r {
            AgentRef::Index(i) if (*i as usize) < self.names.len() => Some(AgentId(*i)),
            AgentRef::Index(i) => {
                issues.push(loc, format!("agent index {i} is out of range (0..{})", self.names.len()));
                None
            }
            AgentRef::Name(n) => match self.names.iter().position(|x| x == n) {
                Some(i) => Some(AgentId(i as u32)),
                None => {
                    issues.push(loc, format!("unknown agent '{n}'"));
                    None
                }
            },
        }
    }
}

impl ScenarioFile {
    pub fn validate(&self) -> Result<Scenario, ScenarioError> {
        let mut issues = Issues(Vec::new());
        let network = self.build_network(&mut issues);
        let context = match (&network, &self.context) {
            (_, None) => {
                issues.push("context", "missing context section");
                None
            }
            (Some(net), Some(c)) => build_context(net, c, &mut issues),
            (None, Some(_)) => None,
        };
        let agents = network.as_ref().map(|n| Agents { names: n.names().to_vec() });

        let mut ordering = None;
        let mut ojr = None;
        let mut warnings = Vec::new();
        let protocol = match (&self.protocol, &context, &agents) {
            (None, _, _) => {
                issues.push("protocol", "missing protocol section");
                None
            }
            (Some(p), Some(ctx), Some(agents)) => {
                build_protocol(p, ctx, agents, &mut issues, &mut ordering, &mut ojr, &mut warnings)
            }
            _ => None,
        };

        let mut formulas = Vec::new();
        for (i, text) in self.analysis.formulas.iter().enumerate() {
            match parse_formula(text, network.as_ref()) {
                Ok(f) => formulas.push(f),
                Err(e) => issues.push(format!("analysis.formulas[{i}]"), e.to_string()),
            }
        }
        let mut queries = Vec::new();
        if let Some(agents) = &agents {
            for (i, q) in self.analysis.structures.iter().enumerate() {
                if let Some(q) = build_query(q, &format!("analysis.structures[{i}]"), agents, &mut issues) {
                    queries.push(q);
                }
            }
        }

        if !issues.0.is_empty() {
            return Err(ScenarioError::Validation(issues.0));
        }
        Ok(Scenario {
            name: self.name.clone(),
            description: self.description.clone(),
            context: context.expect("no issues implies a context"),
            protocol: protocol.expect("no issues implies a protocol"),
            ordering,
            ojr,
            formulas,
            queries,
            warnings,
        })
    }

    fn build_network(&self, issues: &mut Issues) -> Option<Network> {
        let Some(spec) = &self.network else {
            issues.push("network", "missing network section");
            return None;
        };
        let names: Vec<String> = match &spec.agents {
            AgentsSpec::Count(0) => {
                issues.push("network.agents", "a network needs at least one agent");
                return None;
            }
            AgentsSpec::Count(n) => (0..*n).map(|i| i.to_string()).collect(),
            AgentsSpec::Names(v) => v.clone(),
        };
        let agents = Agents { names: names.clone() };
        let mut channels = Vec::new();
        let before = issues.0.len();
        for (i, c) in spec.channels.iter().enumerate() {
            let loc = format!("network.channels[{i}]");
            let from = agents.resolve(&c.from, &format!("{loc}.from"), issues);
            let to = agents.resolve(&c.to, &format!("{loc}.to"), issues);
            if c.bound < 1 {
                issues.push(format!("{loc}.bound"), format!("bound {} violates b_ij >= 1", c.bound));
                continue;
            }
            let Ok(b) = Time::try_from(c.bound) else {
                issues.push(format!("{loc}.bound"), "bound is too large");
                continue;
            };
            if let (Some(f), Some(t)) = (from, to) {
                channels.push((f, t, b));
                if c.both_ways {
                    channels.push((t, f, b));
                }
            }
        }
        if issues.0.len() > before {
            return None;
        }
        match Network::with_names(names, channels) {
            Ok(n) => Some(n),
            Err(e) => {
                let loc = match &e {
                    NetworkError::NoAgents => "network.agents",
                    _ => "network.channels",
                };
                issues.push(loc, e.to_string());
                None
            }
        }
    }
}

fn build_context(net: &Network, spec: &ContextSpec, issues: &mut Issues) -> Option<Context> {
    let agents = Agents { names: net.names().to_vec() };
    let horizon = to_time(spec.horizon, "context.horizon", "horizon", issues);
    let mut slots = Vec::new();
    let before = issues.0.len();
    for (i, s) in spec.slots.iter().enumerate() {
        let loc = format!("context.slots[{i}]");
        let agent = agents.resolve(&s.agent, &format!("{loc}.agent"), issues);
        let time = to_time(s.time, &format!("{loc}.time"), "slot time", issues);
        if s.event.is_empty() {
            issues.push(format!("{loc}.event"), "event id is empty");
        }
        if let (Some(agent), Some(time)) = (agent, time) {
            slots.push(InputSlot { event: s.event.clone(), agent, time });
        }
    }
    if spec.ceiling == Some(0) {
        issues.push("context.ceiling", "ceiling must be positive");
    }
    let horizon = horizon?;
    if issues.0.len() > before {
        return None;
    }
    match Context::new(net.clone(), horizon, slots) {
        Ok(c) => Some(c.with_ceiling(spec.ceiling.unwrap_or(DEFAULT_CEILING))),
        Err(e) => {
            issues.push("context.slots", e.to_string());
            None
        }
    }
}

fn build_ordering(
    spec: &OrderingSpec,
    loc: &str,
    agents: &Agents,
    issues: &mut Issues,
) -> Option<(ResponseOrdering, Option<OjrSpec>)> {
    let before = issues.0.len();
    let mut responses = Vec::new();
    for (i, r) in spec.responses.iter().enumerate() {
        if let Some(agent) = agents.resolve(&r.agent, &format!("{loc}.responses[{i}].agent"), issues) {
            responses.push(Response { action: r.action.clone(), agent, group: r.group.clone() });
        }
    }
    if issues.0.len() > before {
        return None;
    }
    let result = match &spec.ojr {
        Some(o) => {
            if !spec.edges.is_empty() {
                issues.push(format!("{loc}.edges"), "edges must be empty when an ojr instance is given");
                return None;
            }
            if spec.triggers != [o.trigger.clone()] {
                issues.push(format!("{loc}.triggers"), "an ojr instance has exactly its own trigger");
                return None;
            }
            let o = OjrSpec { trigger: o.trigger.clone(), clusters: o.clusters.clone() };
            o.to_ordering(responses).map(|ro| (ro, Some(o)))
        }
        None => ResponseOrdering::new(spec.triggers.clone(), responses, &spec.edges).map(|ro| (ro, None)),
    };
    match result {
        Ok(r) => Some(r),
        Err(e) => {
            issues.push(loc, e.to_string());
            None
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn build_protocol(
    spec: &ProtocolSpec,
    ctx: &Context,
    agents: &Agents,
    issues: &mut Issues,
    ordering: &mut Option<ResponseOrdering>,
    ojr: &mut Option<OjrSpec>,
    warnings: &mut Vec<String>,
) -> Option<ProtocolChoice> {
    match spec {
        ProtocolSpec::Silent => Some(ProtocolChoice::Silent),
        ProtocolSpec::FullInformation => Some(ProtocolChoice::FullInformation),
        ProtocolSpec::Snapshot => match validate_snapshot_context(ctx) {
            Ok(()) => Some(ProtocolChoice::Snapshot),
            Err(e) => {
                issues.push("protocol", e.to_string());
                None
            }
        },
        ProtocolSpec::Gor { ordering: o } => {
            let (ro, spec) = build_ordering(o, "protocol.ordering", agents, issues)?;
            match validate_gor_context(&ro, ctx).and_then(|w| Ok((w, gor_protocol(&ro, ctx)?))) {
                Ok((w, p)) => {
                    warnings.extend(w);
                    *ordering = Some(ro);
                    *ojr = spec;
                    Some(ProtocolChoice::Gor(p))
                }
                Err(e) => {
                    issues.push("protocol.ordering", e.to_string());
                    None
                }
            }
        }
        ProtocolSpec::Scheduled { schedule, ordering: o } => {
            let mut map = BTreeMap::new();
            for (i, s) in schedule.iter().enumerate() {
                let loc = format!("protocol.schedule[{i}]");
                let agent = agents.resolve(&s.agent, &format!("{loc}.agent"), issues);
                let time = to_time(s.time, &format!("{loc}.time"), "time", issues);
                if let (Some(agent), Some(time)) = (agent, time) {
                    if map.insert((s.action.clone(), agent), time).is_some() {
                        issues.push(loc, "response scheduled twice");
                    }
                }
            }
            if let Some(o) = o {
                let (ro, spec) = build_ordering(o, "protocol.ordering", agents, issues)?;
                if let Err(e) = crate::coordination::scc_decompose(&ro) {
                    issues.push("protocol.ordering", e.to_string());
                }
                *ordering = Some(ro);
                *ojr = spec;
            }
            Some(ProtocolChoice::Scheduled(ScheduledResponder { schedule: map }))
        }
    }
}

fn build_query(q: &StructureQuery, loc: &str, agents: &Agents, issues: &mut Issues) -> Option<Query> {
    let before = issues.0.len();
    let origin = agents.resolve(&q.origin, &format!("{loc}.origin"), issues);
    let from = to_time(q.from, &format!("{loc}.from"), "time", issues);
    let to = to_time(q.to, &format!("{loc}.to"), "time", issues);
    let list: Vec<AgentId> = q
        .agents
        .iter()
        .enumerate()
        .filter_map(|(i, a)| agents.resolve(a, &format!("{loc}.agents[{i}]"), issues))
        .collect();
    let groups: Vec<AgentSet> = q
        .groups
        .iter()
        .enumerate()
        .map(|(g, members)| {
            members
                .iter()
                .enumerate()
                .filter_map(|(i, a)| agents.resolve(a, &format!("{loc}.groups[{g}][{i}]"), issues))
                .collect()
        })
        .collect();
    match q.kind {
        StructureKind::Centipede if list.is_empty() => issues.push(format!("{loc}.agents"), "a centipede needs agents"),
        StructureKind::Broom if groups.len() != 1 => {
            issues.push(format!("{loc}.groups"), "a broom has exactly one group")
        }
        StructureKind::Centibroom if groups.is_empty() => {
            issues.push(format!("{loc}.groups"), "a centibroom needs at least one group")
        }
        _ => {}
    }
    if let (Some(f), Some(t)) = (from, to) {
        if f > t {
            issues.push(loc, format!("interval {f}..{t} is empty"));
        }
    }
    if issues.0.len() > before {
        return None;
    }
    Some(Query { kind: q.kind, origin: origin?, from: from?, to: to?, agents: list, groups })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn issues(text: &str) -> Vec<Issue> {
        match Scenario::from_json(text) {
            Err(ScenarioError::Validation(v)) => v,
            other => panic!("expected validation errors, got {other:?}"),
        }
    }

    #[test]
    fn missing_network_is_a_validation_error() {
        let v = issues(r#"{"context": {"horizon": 3}, "protocol": {"kind": "silent"}}"#);
        assert_eq!(v[0].location, "network");
    }

    #[test]
    fn zero_bound_cites_the_rule() {
        let v = issues(
            r#"{"network": {"agents": 2, "channels": [{"from": 0, "to": 1, "bound": 0}]},
                "context": {"horizon": 3}, "protocol": {"kind": "silent"}}"#,
        );
        assert_eq!(v[0].location, "network.channels[0].bound");
        assert!(v[0].message.contains("b_ij >= 1"));
    }

    #[test]
    fn all_problems_are_reported_together() {
        let v = issues(
            r#"{"network": {"agents": ["a", "b"], "channels": [{"from": "a", "to": "z", "bound": 1}]},
                "protocol": {"kind": "silent"},
                "analysis": {"formulas": ["K[q] occ(e)", "occ(e) &"]}}"#,
        );
        let locs: Vec<&str> = v.iter().map(|i| i.location.as_str()).collect();
        assert_eq!(locs, ["network.channels[0].to", "context", "analysis.formulas[0]", "analysis.formulas[1]"]);
    }

    #[test]
    fn parse_errors_have_positions() {
        match Scenario::from_json("{\n  \"network\": ,\n}") {
            Err(ScenarioError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(Scenario::from_json(r#"{"bogus": 1}"#), Err(ScenarioError::Parse { .. })));
    }

    #[test]
    fn every_bundled_scenario_loads() {
        for name in bundled_names() {
            let s = bundled(name).unwrap();
            assert!(!s.description.is_empty(), "{name}");
        }
    }

    #[test]
    fn judea_has_three_triggers_and_four_groups() {
        let s = bundled("judea").unwrap();
        let ro = s.ordering.as_ref().unwrap();
        assert_eq!(ro.triggers().len(), 3);
        let groups: std::collections::BTreeSet<_> = ro.responses().iter().filter_map(|r| r.group.clone()).collect();
        assert_eq!(groups.len(), 4);
        assert!(s.warnings.is_empty());
    }

    #[test]
    fn schema_is_json() {
        let v: serde_json::Value = serde_json::from_str(SCHEMA).unwrap();
        assert!(v.get("properties").is_some());
    }
}
