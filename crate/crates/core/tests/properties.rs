//! Property tests over random small networks and runs.

use std::collections::BTreeSet;

use proptest::prelude::*;
use syncausal::causality::{bound_guarantee, build_causal_graph, NodeRef};
use syncausal::epistemics::{parse_formula, Evaluator, Formula};
use syncausal::simulator::{
    build_system, execute, sample_system, Context, FullInformation, InputSlot, Run, SystemBundle,
};
use syncausal::snapshot::{
    oracle_earliest_broom, record_channels, run_snapshot_scenario, snapshot_protocol, RECORD_ACTION,
};
use syncausal::structures::{
    earliest_formation_time, find_broom, find_centibroom, find_centipede, AgentSet, StructureWitness, Targets,
};
use syncausal::verify::oracle::{brute_distance, Reach};
use syncausal::{AgentId, Network, Time};

type Channels = Vec<(u32, u32, Time)>;

/// A strongly connected network: a ring through every agent plus extra
/// channels, all with bounds in `1..=max_b`.
fn network(max_agents: usize, max_b: Time, extra: usize) -> impl Strategy<Value = (usize, Channels)> {
    (1..=max_agents).prop_flat_map(move |n| {
        let ring = proptest::collection::vec(1..=max_b, n);
        let extras = proptest::collection::vec((0..n as u32, 0..n as u32, 1..=max_b), 0..=extra);
        (Just(n), ring, extras).prop_map(|(n, ring, extras)| {
            let mut chans: Channels = Vec::new();
            if n > 1 {
                for (i, b) in ring.into_iter().enumerate() {
                    chans.push((i as u32, ((i + 1) % n) as u32, b));
                }
            }
            for (a, b, t) in extras {
                if a != b && !chans.iter().any(|&(x, y, _)| (x, y) == (a, b)) {
                    chans.push((a, b, t));
                }
            }
            (n, chans)
        })
    })
}

/// Arbitrary channel sets, not necessarily connected.
fn loose_network(max_agents: usize, max_b: Time) -> impl Strategy<Value = (usize, Channels)> {
    (2..=max_agents).prop_flat_map(move |n| {
        proptest::collection::vec((0..n as u32, 0..n as u32, 1..=max_b), 0..=n * n).prop_map(move |raw| {
            let mut chans: Channels = Vec::new();
            for (a, b, t) in raw {
                if a != b && !chans.iter().any(|&(x, y, _)| (x, y) == (a, b)) {
                    chans.push((a, b, t));
                }
            }
            (n, chans)
        })
    })
}

fn build(n: usize, chans: &Channels) -> Network {
    Network::new(n, chans.iter().map(|&(a, b, t)| (AgentId(a), AgentId(b), t))).unwrap()
}

fn same_run(a: &Run, b: &Run) -> bool {
    a.env == b.env
        && a.choices == b.choices
        && a.events == b.events
        && a.messages == b.messages
        && a.responses == b.responses
        && a.states.iter().flatten().map(|s| s.digest()).eq(b.states.iter().flatten().map(|s| s.digest()))
}

fn slot(agent: u32, time: Time) -> InputSlot {
    InputSlot { event: format!("e{agent}_{time}"), agent: AgentId(agent), time }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distance_is_the_cheapest_path((n, chans) in loose_network(5, 6)) {
        let net = build(n, &chans);
        for a in net.agents() {
            for b in net.agents() {
                prop_assert_eq!(net.dist(a, b).finite(), brute_distance(&net, a, b));
            }
        }
    }

    #[test]
    fn lowering_a_bound_never_raises_a_radius((n, chans) in network(5, 5, 6), pick in any::<prop::sample::Index>(), cut in 1u32..5) {
        prop_assume!(!chans.is_empty());
        let net = build(n, &chans);
        let mut lowered = chans.clone();
        let i = pick.index(lowered.len());
        lowered[i].2 = lowered[i].2.saturating_sub(cut).max(1);
        let low = build(n, &lowered);
        for a in net.agents() {
            let (before, after) = (net.rad(a).finite().unwrap(), low.rad(a).finite().unwrap());
            prop_assert!(after <= before);
        }
    }

    #[test]
    fn runs_are_legal_deterministic_and_recall((n, chans) in network(3, 3, 2), horizon in 0u32..6, seed in any::<u64>()) {
        let net = build(n, &chans);
        let mut second = slot((n - 1) as u32, horizon.min(1));
        second.event = "late".into();
        let slots = vec![slot(0, 0), second];
        let ctx = Context::new(net.clone(), horizon, slots).unwrap();
        for bundle in [
            sample_system(&FullInformation, &ctx, seed, 6).unwrap(),
            sample_system(&snapshot_protocol(), &ctx, seed, 6).unwrap(),
        ] {
            for run in &bundle.runs {
                prop_assert_eq!(run.check_invariants(&net), Ok(()));
                for m in &run.messages {
                    let b = net.bound(m.from, m.to).unwrap();
                    if let Some(r) = m.received_at {
                        prop_assert!(m.sent_at < r && r <= m.sent_at + b);
                    }
                }
                for a in net.agents() {
                    for t in 0..horizon {
                        let early: BTreeSet<_> = run.state(a, t).responses().into_iter().collect();
                        let late: BTreeSet<_> = run.state(a, t + 1).responses().into_iter().collect();
                        prop_assert!(early.is_subset(&late));
                    }
                }
                let again = match bundle.protocol.as_str() {
                    "full-information" => execute(&FullInformation, &ctx, &run.env).unwrap(),
                    _ => execute(&snapshot_protocol(), &ctx, &run.env).unwrap(),
                };
                prop_assert!(same_run(run, &again));
            }
        }
    }

    #[test]
    fn syncausality_matches_brute_closure((n, chans) in network(4, 3, 3), horizon in 0u32..6, seed in any::<u64>()) {
        let net = build(n, &chans);
        let ctx = Context::new(net.clone(), horizon, vec![slot(0, 0)]).unwrap();
        let bundle = sample_system(&FullInformation, &ctx, seed, 4).unwrap();
        let silent = sample_system(&syncausal::simulator::Silent, &ctx, seed, 1).unwrap();
        let mut guarantees: Option<Vec<bool>> = None;
        for run in bundle.runs.iter().chain(&silent.runs) {
            let graph = build_causal_graph(run, &net);
            let reach = Reach::new(run, &net);
            let nodes: Vec<NodeRef> = graph.nodes().collect();
            let mut g = Vec::new();
            for &a in &nodes {
                for &b in &nodes {
                    let sc = graph.syncausal(a, b);
                    prop_assert_eq!(sc, reach.reaches((a.agent, a.time), (b.agent, b.time)));
                    if a != b && sc {
                        prop_assert!(a.time < b.time);
                    }
                    let bg = bound_guarantee(&net, a, b);
                    if bg {
                        prop_assert!(sc);
                    }
                    g.push(bg);
                }
            }
            // The bound guarantee relation is the same in every run.
            match &guarantees {
                None => guarantees = Some(g),
                Some(prev) => prop_assert_eq!(prev, &g),
            }
        }
    }
}

/// Literal check of a witness against the brute-force closure.
fn witness_holds(w: &StructureWitness, reach: &Reach, net: &Network) -> bool {
    let (t, t_end) = w.interval;
    let leg = |n: NodeRef, i: AgentId| brute_distance(net, n.agent, i).is_some_and(|d| n.time + d <= t_end);
    let chain = w.nodes.windows(2).all(|p| reach.reaches((p[0].agent, p[0].time), (p[1].agent, p[1].time)));
    let k = w.nodes.len() - 1;
    chain
        && w.nodes[0].time == t
        && match &w.targets {
            Targets::Groups(gs) => {
                gs.len() == k && gs.iter().enumerate().all(|(h, g)| g.iter().all(|&i| leg(w.nodes[h + 1], i)))
            }
            Targets::Agents(ag) => {
                ag.len() == k
                    && w.nodes[k] == NodeRef::new(ag[k - 1], t_end)
                    && (1..k).all(|h| leg(w.nodes[h], ag[h - 1]))
            }
        }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn structure_witnesses_and_reductions(
        (n, chans) in network(3, 3, 2),
        horizon in 1u32..6,
        seed in any::<u64>(),
        groups in proptest::collection::vec(proptest::collection::btree_set(0u32..3, 1..=2), 1..=2),
    ) {
        let net = build(n, &chans);
        let groups: Vec<AgentSet> = groups
            .into_iter()
            .map(|g| g.into_iter().map(|a| AgentId(a % n as u32)).collect())
            .collect();
        let ctx = Context::new(net.clone(), horizon, vec![slot(0, 0)]).unwrap();
        let bundle = sample_system(&FullInformation, &ctx, seed, 3).unwrap();
        for run in &bundle.runs {
            let graph = build_causal_graph(run, &net);
            let reach = Reach::new(run, &net);
            for origin in net.agents() {
                for t in 0..=horizon {
                    for t_end in t..=horizon {
                        let cb = find_centibroom(&graph, &net, origin, &groups, t, t_end).unwrap();
                        if let Some(w) = &cb {
                            prop_assert!(witness_holds(w, &reach, &net));
                            // Every prefix of a witness is a witness for the prefix of the groups.
                            for g in 1..groups.len() {
                                let prefix = StructureWitness {
                                    kind: w.kind,
                                    nodes: w.nodes[..=g].to_vec(),
                                    interval: w.interval,
                                    targets: Targets::Groups(groups[..g].to_vec()),
                                };
                                prop_assert!(witness_holds(&prefix, &reach, &net));
                                prop_assert!(find_centibroom(&graph, &net, origin, &groups[..g], t, t_end).unwrap().is_some());
                            }
                        }
                        let broom = find_broom(&graph, &net, origin, &groups[0], t, t_end).unwrap();
                        let single = find_centibroom(&graph, &net, origin, &groups[..1], t, t_end).unwrap();
                        prop_assert_eq!(broom.is_some(), single.is_some());

                        let agents: Vec<AgentId> = groups.iter().map(|g| *g.iter().next().unwrap()).collect();
                        if let Some(w) = find_centipede(&graph, &net, origin, &agents, t, t_end).unwrap() {
                            prop_assert!(witness_holds(&w, &reach, &net));
                            let singletons: Vec<AgentSet> = agents.iter().map(|&a| AgentSet::from([a])).collect();
                            prop_assert!(find_centibroom(&graph, &net, origin, &singletons, t, t_end).unwrap().is_some());
                        }
                    }
                    // Once formed, a centibroom persists to later end times.
                    if let Some(first) = earliest_formation_time(&graph, &net, origin, &groups, t).unwrap() {
                        for t_end in first..=horizon {
                            prop_assert!(find_centibroom(&graph, &net, origin, &groups, t, t_end).unwrap().is_some());
                        }
                    }
                }
            }
        }
    }
}

fn small_exhaustive(n: usize, chans: &Channels, horizon: Time) -> Option<SystemBundle> {
    let net = build(n, chans);
    let ctx = Context::new(net, horizon, vec![slot(0, 0)]).unwrap().with_ceiling(4096);
    build_system(&FullInformation, &ctx).ok()
}

fn formula(n: u32) -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![Just(Formula::occ("e0_0")), Just(Formula::occ("other"))];
    leaf.prop_recursive(4, 24, 2, move |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (0..n, inner.clone()).prop_map(|(a, f)| Formula::k(AgentId(a), f)),
            (proptest::collection::btree_set(0..n, 1..=2), inner)
                .prop_map(|(g, f)| Formula::c(g.into_iter().map(AgentId).collect(), f)),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn knowledge_properties(
        chans in proptest::collection::vec(1u32..=2, 2).prop_map(|b| vec![(0, 1, b[0]), (1, 0, b[1])]),
        horizon in 2u32..5,
        phis in proptest::collection::vec(formula(2), 1..4),
    ) {
        let n = 2;
        let Some(bundle) = small_exhaustive(n, &chans, horizon) else { return Ok(()) };
        let Ok(ev) = Evaluator::new(&bundle) else { return Ok(()) };
        for phi in phis {
            let sat: BTreeSet<_> = ev.satisfying_points(&phi).unwrap().into_iter().collect();
            for p in ev.points().collect::<Vec<_>>() {
                let holds = ev.eval(p, &phi).unwrap();
                prop_assert_eq!(holds, sat.contains(&p));
                for i in 0..n as u32 {
                    let k = Formula::k(AgentId(i), phi.clone());
                    let kv = ev.eval(p, &k).unwrap();
                    if kv {
                        prop_assert!(holds);
                    }
                    // K_i φ is constant on i's indistinguishability class.
                    for q in ev.points().filter(|q| q.time == p.time) {
                        if bundle.runs[q.run].state(AgentId(i), q.time) == bundle.runs[p.run].state(AgentId(i), p.time) {
                            prop_assert_eq!(ev.eval(q, &k).unwrap(), kv);
                        }
                    }
                }
                let group: AgentSet = (0..n as u32).map(AgentId).collect();
                let c = Formula::c(group.clone(), phi.clone());
                if ev.eval(p, &c).unwrap() {
                    prop_assert!(holds);
                    for &i in &group {
                        prop_assert!(ev.eval(p, &Formula::k(i, c.clone())).unwrap());
                    }
                }
            }
            let text = phi.display_with(None).to_string();
            prop_assert_eq!(parse_formula(&text, None).unwrap(), phi);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn snapshot_is_optimal_and_consistent(
        (n, chans) in network(3, 3, 2),
        trigger_agent in 0u32..3,
        trigger_time in 0u32..2,
        seed in any::<u64>(),
    ) {
        let net = build(n, &chans);
        let max_rad = net.max_radius().finite().unwrap();
        let horizon = trigger_time + 2 * max_rad + net.max_bound();
        let trig = slot(trigger_agent % n as u32, trigger_time);
        let ctx = Context::new(net.clone(), horizon, vec![trig]).unwrap();
        let symmetric = chans.iter().all(|&(a, b, t)| net.bound(AgentId(b), AgentId(a)) == Some(t));
        let bundle = sample_system(&snapshot_protocol(), &ctx, seed, 8).unwrap();
        for run in &bundle.runs {
            if !run.env.inputs[0] {
                prop_assert!(run.responses.is_empty());
                continue;
            }
            let res = run_snapshot_scenario(&ctx, &run.env).unwrap();
            // Everyone records, and at one common time.
            let times: BTreeSet<Time> =
                run.responses.iter().filter(|r| r.action == RECORD_ACTION).map(|r| r.time).collect();
            prop_assert_eq!(times.len(), 1);
            prop_assert_eq!(run.responses.len(), n);
            prop_assert_eq!(Some(res.time), oracle_earliest_broom(&ctx, &run.env).unwrap());
            // In-transit messages, recomputed from the message log.
            for a in net.agents() {
                for &b in net.outgoing(a) {
                    let want: Vec<(Time, Option<Time>)> = run
                        .messages
                        .iter()
                        .filter(|m| m.from == a && m.to == b && m.sent_at <= res.time && m.sent_at + m.delay > res.time)
                        .map(|m| (m.sent_at, m.received_at))
                        .collect();
                    let got: Vec<(Time, Option<Time>)> =
                        res.channels[&(a, b)].iter().map(|m| (m.sent_at, m.received_at)).collect();
                    prop_assert_eq!(got, want);
                }
            }
            let channels = record_channels(run, &net, res.time).unwrap();
            prop_assert_eq!(channels.len(), net.channel_count());
            // Each re-flood strictly lowers a target confined to
            // [trigger, trigger + max radius].
            for &f in &res.floodings {
                prop_assert!(f <= 1 + max_rad as usize);
                if symmetric {
                    prop_assert!(f <= 1, "symmetric network flooded {f} times: {:?}", chans);
                }
            }
        }
    }
}
