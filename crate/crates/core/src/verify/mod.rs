//! The acceptance checks: each criterion exercises one result of the theory
//! on exhaustive bundles of the bundled reference scenarios and reports how
//! many individual checks ran and which of them failed.

pub mod oracle;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::causality::{bound_guarantee, build_causal_graph, NodeRef};
use crate::coordination::{check_gor, check_ojr, required_chains, scc_decompose, Clause, CoordinationError};
use crate::epistemics::{nested_ck, nested_k, EpistemicError, Evaluator, Formula, Point};
use crate::network::{AgentId, Network, Time};
use crate::scenario::{bundled, Scenario};
use crate::simulator::{
    build_system, sample_system, Context, FullInformation, InputSlot, Silent, SimError, SystemBundle,
};
use crate::snapshot::{oracle_earliest_broom, run_snapshot_scenario, snapshot_protocol, SnapshotError};
use crate::structures::{find_centibroom, find_centipede, AgentSet, StructureError};

use oracle::{brute_centibroom, brute_centipede, brute_distance, DirectModel, Reach, Table};

/// Violations kept verbatim per criterion; the rest are only counted.
const SAMPLE_LIMIT: usize = 12;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("bundled scenario {0:?} is missing")]
    MissingScenario(String),
    #[error("scenario {0:?} lacks {1}")]
    Incomplete(String, &'static str),
    #[error(transparent)]
    Simulation(#[from] SimError),
    #[error(transparent)]
    Epistemic(#[from] EpistemicError),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error(transparent)]
    Coordination(#[from] CoordinationError),
}

/// Outcome of one criterion.
#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub id: u8,
    pub title: &'static str,
    pub checks: u64,
    pub violations: u64,
    pub samples: Vec<String>,
    pub notes: Vec<String>,
}

impl CriterionReport {
    fn new(id: u8, title: &'static str) -> Self {
        CriterionReport { id, title, checks: 0, violations: 0, samples: Vec::new(), notes: Vec::new() }
    }

    /// A criterion with no checks has proved nothing and fails.
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.checks > 0
    }

    fn check(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.violations += 1;
            if self.samples.len() < SAMPLE_LIMIT {
                self.samples.push(detail());
            }
        }
    }

    fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        write!(
            f,
            "criterion {} [{verdict}] {}: {} checks, {} violations",
            self.id, self.title, self.checks, self.violations
        )
    }
}

/// One row per criterion, then every note and sampled violation.
pub fn table(reports: &[CriterionReport]) -> String {
    let mut out = format!("{:<4} {:<34} {:>10} {:>10}  {}\n", "id", "criterion", "checks", "violations", "result");
    for r in reports {
        let verdict = if r.passed() { "pass" } else { "FAIL" };
        out.push_str(&format!("{:<4} {:<34} {:>10} {:>10}  {verdict}\n", r.id, r.title, r.checks, r.violations));
    }
    for r in reports {
        for n in &r.notes {
            out.push_str(&format!("[{}] {n}\n", r.id));
        }
        for s in &r.samples {
            out.push_str(&format!("[{}] violation: {s}\n", r.id));
        }
    }
    out
}

pub const CRITERIA: [u8; 9] = [1, 2, 3, 4, 5, 6, 7, 8, 9];

/// Runs one criterion by number.
pub fn criterion(id: u8) -> Result<CriterionReport, VerifyError> {
    match id {
        1 => facts_suite(),
        2 => knowledge_gain(),
        3 => common_knowledge_gain(),
        4 => ojr_nested_common_knowledge(),
        5 => snapshot_optimality(),
        6 => coordination_conformance(),
        7 => judea_semantics(),
        8 => oracle_equivalences(),
        9 => epistemic_sanity(),
        _ => Err(VerifyError::MissingScenario(format!("criterion {id}"))),
    }
}

pub fn run_all() -> Result<Vec<CriterionReport>, VerifyError> {
    CRITERIA.iter().map(|&id| criterion(id)).collect()
}

fn load(name: &str) -> Result<Scenario, VerifyError> {
    bundled(name).ok_or_else(|| VerifyError::MissingScenario(name.to_string()))
}

fn full_information(name: &str) -> Result<(Scenario, SystemBundle), VerifyError> {
    let s = load(name)?;
    let bundle = build_system(&FullInformation, &s.context)?;
    Ok((s, bundle))
}

fn own_protocol(name: &str) -> Result<(Scenario, SystemBundle), VerifyError> {
    let s = load(name)?;
    let bundle = build_system(&s.protocol, &s.context)?;
    Ok((s, bundle))
}

fn trigger(s: &Scenario) -> Result<&InputSlot, VerifyError> {
    s.context.slots.first().ok_or_else(|| VerifyError::Incomplete(s.name.clone(), "an input slot"))
}

/// Every nonempty subset of `agents` with at most `max` members.
pub fn small_groups(network: &Network, max: usize) -> Vec<AgentSet> {
    let n = network.agent_count();
    (1u32..(1 << n))
        .filter(|m| m.count_ones() as usize <= max)
        .map(|m| (0..n as u32).filter(|i| m & (1 << i) != 0).map(AgentId).collect())
        .collect()
}

/// Every sequence of length `1..=max_len` over `items`.
fn sequences<T: Clone>(items: &[T], max_len: usize) -> Vec<Vec<T>> {
    let mut out: Vec<Vec<T>> = Vec::new();
    let mut layer: Vec<Vec<T>> = vec![Vec::new()];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|p| {
                items.iter().map(move |x| {
                    let mut q = p.clone();
                    q.push(x.clone());
                    q
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

fn show_group(network: &Network, g: &AgentSet) -> String {
    let names: Vec<&str> = g.iter().map(|&a| network.name(a)).collect();
    format!("{{{}}}", names.join(","))
}

/// Syncausality moves forward in time, and a bound guarantee implies
/// syncausality, over every node pair of every run.
pub fn check_facts(bundle: &SystemBundle, label: &str, report: &mut CriterionReport) {
    let net = &bundle.context.network;
    for (r, run) in bundle.runs.iter().enumerate() {
        let graph = build_causal_graph(run, net);
        let nodes: Vec<NodeRef> = graph.nodes().collect();
        for &a in &nodes {
            for &b in &nodes {
                let sc = graph.syncausal(a, b);
                if a != b {
                    report.check(!sc || a.time < b.time, || format!("{label} run {r}: {a} ~> {b} goes backwards"));
                }
                if bound_guarantee(net, a, b) {
                    report.check(sc, || format!("{label} run {r}: {a} --> {b} but not {a} ~> {b}"));
                }
            }
        }
    }
}

fn facts_suite() -> Result<CriterionReport, VerifyError> {
    let mut report = CriterionReport::new(1, "facts suite");
    for name in ["r1", "r2", "r3"] {
        let (_, bundle) = full_information(name)?;
        check_facts(&bundle, name, &mut report);
        report.note(format!("{name}: {} runs", bundle.len()));
    }
    Ok(report)
}

/// Nested knowledge `K_{i_k}..K_{i_1} occ(e)` at `(r, t')` implies a centipede
/// for `<i_0, i_1..i_k>` in `(r, t..t')`, for every sequence with `k <= max_k`.
pub fn check_knowledge_gain(
    bundle: &SystemBundle,
    slot: &InputSlot,
    max_k: usize,
    label: &str,
    report: &mut CriterionReport,
) -> Result<(), VerifyError> {
    let net = &bundle.context.network;
    let ev = Evaluator::new(bundle)?;
    let graphs: Vec<_> = bundle.runs.iter().map(|r| build_causal_graph(r, net)).collect();
    let agents: Vec<AgentId> = net.agents().collect();
    let mut held = 0u64;
    for seq in sequences(&agents, max_k) {
        let phi = nested_k(&seq, &slot.event);
        for p in ev.satisfying_points(&phi)? {
            held += 1;
            let found = find_centipede(&graphs[p.run], net, slot.agent, &seq, slot.time, p.time)?.is_some();
            report.check(found, || {
                format!(
                    "{label} run {} t'={}: {} holds without a centipede",
                    p.run,
                    p.time,
                    phi.display_with(Some(net))
                )
            });
        }
    }
    report.note(format!("{label}: nested knowledge held at {held} (point, sequence) pairs"));
    Ok(())
}

fn knowledge_gain() -> Result<CriterionReport, VerifyError> {
    let mut report = CriterionReport::new(2, "knowledge gain (centipedes)");
    for name in ["r1", "r3"] {
        let (s, bundle) = full_information(name)?;
        check_knowledge_gain(&bundle, trigger(&s)?, 3, name, &mut report)?;
    }
    Ok(report)
}

/// Nested common knowledge over group sequences implies a centibroom.
pub fn check_common_knowledge_gain(
    bundle: &SystemBundle,
    slot: &InputSlot,
    max_k: usize,
    max_group: usize,
    label: &str,
    report: &mut CriterionReport,
) -> Result<(), VerifyError> {
    let net = &bundle.context.network;
    let ev = Evaluator::new(bundle)?;
    let graphs: Vec<_> = bundle.runs.iter().map(|r| build_causal_graph(r, net)).collect();
    let mut held = 0u64;
    for groups in sequences(&small_groups(net, max_group), max_k) {
        let phi = nested_ck(&groups, &slot.event)?;
        for p in ev.satisfying_points(&phi)? {
            held += 1;
            let found = find_centibroom(&graphs[p.run], net, slot.agent, &groups, slot.time, p.time)?.is_some();
            report.check(found, || {
                format!(
                    "{label} run {} t'={}: {} holds without a centibroom",
                    p.run,
                    p.time,
                    phi.display_with(Some(net))
                )
            });
        }
    }
    report.note(format!("{label}: nested common knowledge held at {held} (point, sequence) pairs"));
    Ok(())
}

fn common_knowledge_gain() -> Result<CriterionReport, VerifyError> {
    let mut report = CriterionReport::new(3, "common knowledge gain (centibrooms)");
    for name in ["r2", "r3"] {
        let (s, bundle) = full_information(name)?;
        check_common_knowledge_gain(&bundle, trigger(&s)?, 2, 2, name, &mut report)?;
    }
    Ok(report)
}

/// At the time `t_h` a cluster of an ordered joint response is performed,
/// `C_{I^h} ... C_{I^1} occ(e_s)` holds.
pub fn check_ojr_knowledge(
    scenario: &Scenario,
    bundle: &SystemBundle,
    report: &mut CriterionReport,
) -> Result<(), VerifyError> {
    let label = scenario.name.as_str();
    let ro = scenario.ordering.as_ref().ok_or_else(|| VerifyError::Incomplete(label.to_string(), "an ordering"))?;
    let spec = scenario.ojr.as_ref().ok_or_else(|| VerifyError::Incomplete(label.to_string(), "an ojr section"))?;
    let sets = spec.agent_sets(ro)?;
    let ev = Evaluator::new(bundle)?;
    let mut fired = 0u64;
    for h in 1..=sets.len() {
        let phi = nested_ck(&sets[..h], &spec.trigger)?;
        for (r, run) in bundle.runs.iter().enumerate() {
            let times: Vec<Time> =
                spec.clusters[h - 1].iter().flat_map(|a| run.response_times(a).into_iter().map(|(_, t)| t)).collect();
            let Some(&t_h) = times.iter().min() else { continue };
            fired += 1;
            if t_h > ev.last_time() {
                report.check(false, || {
                    format!("{label} run {r}: cluster {h} acts at {t_h}, past the evaluation horizon")
                });
                continue;
            }
            let holds = ev.eval(Point { run: r, time: t_h }, &phi)?;
            report.check(holds, || {
                format!(
                    "{label} run {r}: cluster {h} acts at {t_h} but {} fails",
                    phi.display_with(Some(&bundle.context.network))
                )
            });
        }
    }
    report.note(format!("{label}: {} runs, {fired} cluster performances", bundle.len()));
    Ok(())
}

fn ojr_nested_common_knowledge() -> Result<CriterionReport, VerifyError> {
    let mut report = CriterionReport::new(4, "OJR nested common knowledge");
    for name in ["r2-gor", "r3-gor"] {
        let (s, bundle) = own_protocol(name)?;
        check_ojr_knowledge(&s, &bundle, &mut report)?;
    }
    Ok(report)
}

/// Recorded snapshot time equals the earliest broom over all agents, in
/// every environment of the snapshot protocol.
pub fn check_snapshot_optimality(ctx: &Context, label: &str, report: &mut CriterionReport) -> Result<(), VerifyError> {
    let bundle = build_system(&snapshot_protocol(), ctx)?;
    let mut max_flood = 0;
    for (r, run) in bundle.runs.iter().enumerate() {
        let oracle = oracle_earliest_broom(ctx, &run.env)?;
        if !run.env.inputs.iter().any(|&p| p) {
            report.check(oracle.is_none(), || format!("{label} run {r}: a broom exists without any trigger"));
            report.check(run.responses.is_empty(), || format!("{label} run {r}: recorded without any trigger"));
            continue;
        }
        let res = run_snapshot_scenario(ctx, &run.env)?;
        max_flood = max_flood.max(res.floodings.iter().copied().max().unwrap_or(0));
        report.check(oracle == Some(res.time), || {
            format!("{label} run {r} ({}): recorded at {} but the earliest broom is {oracle:?}", run.env, res.time)
        });
    }
    report.note(format!("{label}: {} environments, at most {max_flood} floodings per agent", bundle.len()));
    Ok(())
}

fn snapshot_optimality() -> Result<CriterionReport, VerifyError> {
    let mut report = CriterionReport::new(5, "snapshot optimality");
    for name in ["r2-snapshot", "ring-snapshot"] {
        let s = load(name)?;
        check_snapshot_optimality(&s.context, name, &mut report)?;
    }
    Ok(report)
}

/// The clauses the broken fixture violates by construction: it responds on
/// a fixed schedule whether or not the trigger arrived, performs the hub
/// before the leaves it must follow, and splits the leaf cluster across two
/// rounds.
pub const FIXTURE_GOR_CLAUSES: [Clause; 2] = [Clause::Triggering, Clause::WeakOrdering];
pub const FIXTURE_OJR_CLAUSES: [Clause; 3] = [Clause::Triggering, Clause::Simultaneity, Clause::LinearOrdering];

fn coordination_conformance() -> Result<CriterionReport, VerifyError> {
    let mut report = CriterionReport::new(6, "GOR/OJR conformance");
    for name in ["r2-gor", "r3-gor", "judea", "judea-ojr"] {
        let (s, bundle) = own_protocol(name)?;
        let ro = s.ordering.as_ref().ok_or_else(|| VerifyError::Incomplete(name.to_string(), "an ordering"))?;
        let mut verdicts = vec![("gor", check_gor(&bundle, ro))];
        if let Some(spec) = &s.ojr {
            verdicts.push(("ojr", check_ojr(&bundle, ro, spec)?));
        }
        for (kind, v) in verdicts {
            report.checks += v.runs as u64;
            for viol in &v.violations {
                report.violations += 1;
                if report.samples.len() < SAMPLE_LIMIT {
                    report.samples.push(format!("{name} {kind} run {}: {}: {}", viol.run, viol.clause, viol.detail));
                }
            }
            report.note(format!("{name}: {kind} checked {} runs, {} violations", v.runs, v.violations.len()));
        }
    }
    let (s, bundle) = own_protocol("broken-fixture")?;
    let ro = s.ordering.as_ref().ok_or_else(|| VerifyError::Incomplete(s.name.clone(), "an ordering"))?;
    let spec = s.ojr.as_ref().ok_or_else(|| VerifyError::Incomplete(s.name.clone(), "an ojr section"))?;
    let gor = check_gor(&bundle, ro).clauses();
    let ojr = check_ojr(&bundle, ro, spec)?.clauses();
    for c in FIXTURE_GOR_CLAUSES {
        report.check(gor.contains(&c), || format!("broken fixture: gor check missed {c}"));
    }
    for c in FIXTURE_OJR_CLAUSES {
        report.check(ojr.contains(&c), || format!("broken fixture: ojr check missed {c}"));
    }
    let show = |s: &BTreeSet<Clause>| s.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", ");
    report.note(format!("broken fixture flagged gor [{}], ojr [{}]", show(&gor), show(&ojr)));
    Ok(report)
}

/// The dependency DAG of the second Judea example.
pub const JUDEA_COVER: [(&str, &str); 6] = [
    ("brian_revolts", "JPF"),
    ("jedediah_revolts", "PFJ"),
    ("jeremiah_revolts", "PFJ"),
    ("JPF", "masses"),
    ("PFJ", "masses"),
    ("masses", "old regime"),
];

pub const JUDEA_OLD_REGIME_CHAINS: [&str; 3] = [
    "jeremiah_revolts -> PFJ -> masses -> old regime",
    "jedediah_revolts -> PFJ -> masses -> old regime",
    "brian_revolts -> JPF -> masses -> old regime",
];

fn judea_semantics() -> Result<CriterionReport, VerifyError> {
    let mut report = CriterionReport::new(7, "Judea semantics");
    let (s, bundle) = own_protocol("judea")?;
    let ro = s.ordering.as_ref().ok_or_else(|| VerifyError::Incomplete(s.name.clone(), "an ordering"))?;
    let cro = scc_decompose(ro)?;

    let cover = cro.named_cover();
    let expected: BTreeSet<(String, String)> =
        JUDEA_COVER.iter().map(|&(a, b)| (a.to_string(), b.to_string())).collect();
    report.check(cover == expected, || format!("condensation cover is {cover:?}"));
    let labels: BTreeSet<&str> = cro.sccs.iter().map(|c| c.label.as_str()).collect();
    report
        .check(labels == BTreeSet::from(["PFJ", "JPF", "masses", "old regime"]), || format!("clusters are {labels:?}"));

    let chains: BTreeSet<String> =
        required_chains(&cro, ro, "regime_south")?.iter().map(|c| c.display(&cro).to_string()).collect();
    let want: BTreeSet<String> = JUDEA_OLD_REGIME_CHAINS.iter().map(|c| c.to_string()).collect();
    report.check(chains == want, || format!("old regime chains are {chains:?}"));

    let slot_index = |event: &str| s.context.slots.iter().position(|x| x.event == event);
    let (jed, jer, bri) =
        match (slot_index("jedediah_revolts"), slot_index("jeremiah_revolts"), slot_index("brian_revolts")) {
            (Some(a), Some(b), Some(c)) => (a, b, c),
            _ => return Err(VerifyError::Incomplete(s.name.clone(), "the three instigator slots")),
        };
    let mut matched = 0;
    for (r, run) in bundle.runs.iter().enumerate() {
        let inputs = &run.env.inputs;
        let acted = |prefix: &str| run.responses.iter().filter(|x| x.action.starts_with(prefix)).count();
        if inputs[jed] && inputs[bri] && !inputs[jer] {
            matched += 1;
            report.check(acted("jpf_") == 2, || format!("run {r}: the JPF did not revolt"));
            for (group, prefix) in [("PFJ", "pfj_"), ("masses", "masses_"), ("old regime", "regime_")] {
                report.check(acted(prefix) == 0, || format!("run {r}: {group} revolted without Jeremiah"));
            }
        }
        if inputs[jed] && inputs[bri] && inputs[jer] {
            report.check(run.responses.len() == ro.responses().len(), || {
                format!("run {r}: all instigators revolted but only {} responses followed", run.responses.len())
            });
        }
    }
    report.check(matched > 0, || "no environment has exactly Jedediah and Brian revolting".to_string());
    report.note(format!("judea: {} runs, {matched} with Jedediah and Brian only", bundle.len()));
    Ok(report)
}

/// A four-agent network for the structure oracle, beyond the reference
/// configurations.
fn diamond() -> Result<Context, VerifyError> {
    let c = |a: u32, b: u32, t: Time| (AgentId(a), AgentId(b), t);
    let net = Network::new(4, [c(0, 1, 1), c(1, 2, 2), c(2, 3, 1), c(3, 0, 2), c(0, 2, 3), c(2, 0, 1)])
        .expect("static network is valid");
    let slot = InputSlot { event: "e".into(), agent: AgentId(0), time: 0 };
    Ok(Context::new(net, 4, vec![slot])?)
}

/// Structure search against tuple enumeration on every run, interval,
/// origin and level sequence.
pub fn check_structures_against_brute_force(
    bundle: &SystemBundle,
    label: &str,
    report: &mut CriterionReport,
) -> Result<(), VerifyError> {
    let net = &bundle.context.network;
    let agents: Vec<AgentId> = net.agents().collect();
    let group_seqs = sequences(&small_groups(net, 2), 2);
    let agent_seqs = sequences(&agents, 2);
    for (r, run) in bundle.runs.iter().enumerate() {
        let graph = build_causal_graph(run, net);
        let reach = Reach::new(run, net);
        for &origin in &agents {
            for t in 0..=run.horizon {
                for t_end in t..=run.horizon {
                    for groups in &group_seqs {
                        let fast = find_centibroom(&graph, net, origin, groups, t, t_end)?;
                        if let Some(w) = &fast {
                            report.check(w.validate(&graph, net), || format!("{label} run {r}: invalid witness {w:?}"));
                        }
                        let slow = brute_centibroom(&reach, origin, groups, t, t_end);
                        report.check(fast.is_some() == slow, || {
                            let gs: Vec<String> = groups.iter().map(|g| show_group(net, g)).collect();
                            format!(
                                "{label} run {r}: centibroom <{origin}, {}> in {t}..{t_end}: search {} brute {slow}",
                                gs.join(", "),
                                fast.is_some()
                            )
                        });
                    }
                    for seq in &agent_seqs {
                        let fast = find_centipede(&graph, net, origin, seq, t, t_end)?.is_some();
                        let slow = brute_centipede(&reach, origin, seq, t, t_end);
                        report.check(fast == slow, || {
                            format!("{label} run {r}: centipede <{origin}, {seq:?}> in {t}..{t_end}: search {fast} brute {slow}")
                        });
                    }
                }
            }
        }
    }
    Ok(())
}

/// `δ` against exhaustive simple-path search, for every ordered pair.
pub fn check_distances(network: &Network, label: &str, report: &mut CriterionReport) {
    for a in network.agents() {
        for b in network.agents() {
            let fast = network.dist(a, b).finite();
            let slow = brute_distance(network, a, b);
            report.check(fast == slow, || format!("{label}: delta({a},{b}) = {fast:?}, paths give {slow:?}"));
        }
    }
}

/// Bundle size against recursive descent and, for the broadcast protocol,
/// the closed-form product.
pub fn check_bundle_count(ctx: &Context, label: &str, report: &mut CriterionReport) -> Result<(), VerifyError> {
    let fi = build_system(&FullInformation, ctx)?;
    let recursive = oracle::count_environments(&FullInformation, ctx)?;
    let closed = oracle::broadcast_environment_count(ctx);
    report.check(fi.len() == recursive && fi.len() as u128 == closed, || {
        format!("{label}: full-information bundle has {} runs, recursion {recursive}, closed form {closed}", fi.len())
    });
    let envs: BTreeSet<String> = fi.runs.iter().map(|r| r.env.to_string()).collect();
    report.check(envs.len() == fi.len(), || format!("{label}: bundle repeats an environment"));
    let silent = build_system(&Silent, ctx)?;
    report.check(silent.len() == 1 << ctx.slots.len(), || format!("{label}: silent bundle has {} runs", silent.len()));
    let snap = build_system(&snapshot_protocol(), ctx)?;
    let snap_rec = oracle::count_environments(&snapshot_protocol(), ctx)?;
    report.check(snap.len() == snap_rec, || {
        format!("{label}: snapshot bundle has {} runs, recursion {snap_rec}", snap.len())
    });
    Ok(())
}

/// Small contexts (at most 3 agents, horizon at most 4) for the count oracle.
fn count_contexts() -> Result<Vec<(String, Context)>, VerifyError> {
    let c = |a: u32, b: u32, t: Time| (AgentId(a), AgentId(b), t);
    let slot = |a: u32, t: Time| InputSlot { event: format!("e{a}@{t}"), agent: AgentId(a), time: t };
    let nets = [
        ("pair b=2", Network::new(2, [c(0, 1, 2), c(1, 0, 2)]), vec![slot(0, 0)]),
        ("pair 3/1", Network::new(2, [c(0, 1, 3), c(1, 0, 1)]), vec![slot(0, 0), slot(1, 1)]),
        ("line", Network::new(3, [c(0, 1, 2), c(1, 0, 1), c(1, 2, 1), c(2, 1, 2)]), vec![slot(0, 0)]),
        ("ring", Network::new(3, [c(0, 1, 2), c(1, 2, 1), c(2, 0, 2)]), vec![slot(0, 0), slot(2, 1)]),
    ];
    let mut out = Vec::new();
    for (name, net, slots) in nets {
        let net = net.expect("static network is valid");
        for horizon in [3, 4] {
            out.push((format!("{name} T={horizon}"), Context::new(net.clone(), horizon, slots.clone())?));
        }
    }
    Ok(out)
}

fn oracle_equivalences() -> Result<CriterionReport, VerifyError> {
    let mut report = CriterionReport::new(8, "oracle equivalences");
    for name in ["r2", "r3"] {
        let (_, bundle) = full_information(name)?;
        check_structures_against_brute_force(&bundle, name, &mut report)?;
    }
    let (_, r1) = full_information("r1")?;
    let thinned = SystemBundle { runs: r1.runs.iter().step_by(16).cloned().collect(), exhaustive: false, ..r1.clone() };
    check_structures_against_brute_force(&thinned, "r1 (every 16th run)", &mut report)?;
    let diamond = diamond()?;
    let sampled = sample_system(&FullInformation, &diamond, 7, 12)?;
    check_structures_against_brute_force(&sampled, "diamond", &mut report)?;

    for name in ["r1", "r2", "r3", "ring-snapshot", "judea"] {
        let s = load(name)?;
        if s.network().agent_count() <= 5 {
            check_distances(s.network(), name, &mut report);
        }
    }
    check_distances(&diamond.network, "diamond", &mut report);
    let five = Network::new(
        5,
        [(0, 1, 4), (1, 2, 1), (2, 3, 2), (3, 4, 1), (4, 0, 3), (0, 3, 9), (2, 0, 5), (4, 2, 1)]
            .map(|(a, b, t)| (AgentId(a), AgentId(b), t)),
    )
    .expect("static network is valid");
    check_distances(&five, "five", &mut report);

    for (label, ctx) in count_contexts()? {
        check_bundle_count(&ctx, &label, &mut report)?;
    }
    Ok(report)
}

fn table_of(ev: &Evaluator<'_>, phi: &Formula) -> Result<Table, VerifyError> {
    let mut t = vec![vec![false; ev.last_time() as usize + 1]; ev.bundle().len()];
    for p in ev.satisfying_points(phi)? {
        t[p.run][p.time as usize] = true;
    }
    Ok(t)
}

/// Veridicality, the fixpoint property of `C`, `C_{i} = K_i`, and agreement
/// of `C` with the conjunction of its finite-depth approximations, at every
/// point of the bundle.
pub fn check_epistemic_sanity(
    bundle: &SystemBundle,
    event: &str,
    label: &str,
    report: &mut CriterionReport,
) -> Result<(), VerifyError> {
    let net = &bundle.context.network;
    let ev = Evaluator::new(bundle)?;
    let direct = DirectModel::new(bundle, ev.last_time());
    let agents: Vec<AgentId> = net.agents().collect();
    let occ = Formula::occ(event);
    let mut bases = vec![occ.clone(), Formula::not(occ.clone())];
    bases.extend(agents.iter().map(|&a| Formula::k(a, occ.clone())));
    let groups = small_groups(net, agents.len());

    let mut compare = |name: &str, phi_desc: &str, a: &Table, b: &Table, implies: bool| {
        for (r, (x, y)) in a.iter().zip(b).enumerate() {
            for (t, (&p, &q)) in x.iter().zip(y).enumerate() {
                let ok = if implies { !p || q } else { p == q };
                report.check(ok, || format!("{label} run {r} t={t}: {name} fails for {phi_desc}"));
            }
        }
    };

    for base in &bases {
        let desc = base.display_with(Some(net)).to_string();
        let base_t = table_of(&ev, base)?;
        let base_direct = match base {
            Formula::Occ(_) => direct.occ(event),
            Formula::Not(_) => direct.not(&direct.occ(event)),
            Formula::K(a, _) => direct.k(*a, &direct.occ(event)),
            _ => unreachable!("bases are built above"),
        };
        compare("direct expansion", &desc, &base_t, &base_direct, false);
        for &a in &agents {
            let k = table_of(&ev, &Formula::k(a, base.clone()))?;
            compare("veridicality of K", &desc, &k, &base_t, true);
            compare("K by direct expansion", &desc, &k, &direct.k(a, &base_t), false);
            let c1 = table_of(&ev, &Formula::c(AgentSet::from([a]), base.clone()))?;
            compare("C_{i} = K_i", &desc, &c1, &k, false);
        }
        for g in &groups {
            let gd = format!("{desc} over {}", show_group(net, g));
            let c = Formula::c(g.clone(), base.clone());
            let c_t = table_of(&ev, &c)?;
            compare("veridicality of C", &gd, &c_t, &base_t, true);
            let unfolded = g
                .iter()
                .map(|&i| Formula::k(i, Formula::and(base.clone(), c.clone())))
                .reduce(Formula::and)
                .expect("groups are nonempty");
            compare("fixpoint of C", &gd, &c_t, &table_of(&ev, &unfolded)?, false);
            compare("limit of E^m", &gd, &c_t, &direct.common(g, &base_t), false);
            let members: Vec<AgentId> = g.iter().copied().collect();
            for seq in sequences(&members, 3) {
                let nested = seq.iter().fold(base.clone(), |phi, &i| Formula::k(i, phi));
                compare("C implies nested K", &gd, &c_t, &table_of(&ev, &nested)?, true);
            }
        }
    }
    Ok(())
}

fn epistemic_sanity() -> Result<CriterionReport, VerifyError> {
    let mut report = CriterionReport::new(9, "epistemic sanity");
    for name in ["r1", "r2", "r3"] {
        let (s, bundle) = full_information(name)?;
        check_epistemic_sanity(&bundle, &trigger(&s)?.event, name, &mut report)?;
    }
    Ok(report)
}
