//! GOR runs checked against brute-force structure detection on the real run.

use std::collections::BTreeMap;

use syncausal::coordination::{required_chains, scc_decompose, Chain, Cro, ResponseOrdering};
use syncausal::scenario::{bundled, Scenario};
use syncausal::simulator::{build_system, Run};
use syncausal::structures::AgentSet;
use syncausal::verify::oracle::{brute_centibroom, brute_centipede, Reach};
use syncausal::{AgentId, Time};

struct Fixture {
    s: Scenario,
    cro: Cro,
    /// Required chains per response action.
    chains: BTreeMap<String, Vec<Chain>>,
}

/// A dependency chain of single responders on the r3 line: the trigger at
/// `a`, then `c`, then `a` again.
const DAG: &str = r#"{
  "name": "dag",
  "network": {
    "agents": ["a", "b", "c"],
    "channels": [
      { "from": "a", "to": "b", "bound": 2 },
      { "from": "b", "to": "a", "bound": 1 },
      { "from": "b", "to": "c", "bound": 1, "both_ways": true }
    ]
  },
  "context": { "horizon": 11, "slots": [{ "event": "e", "agent": "a", "time": 0 }] },
  "protocol": {
    "kind": "gor",
    "ordering": {
      "triggers": ["e"],
      "responses": [{ "action": "relay", "agent": "c" }, { "action": "finish", "agent": "a" }],
      "edges": [["e", "relay"], ["relay", "finish"]]
    }
  }
}"#;

fn fixture(name: &str) -> Fixture {
    let s = if name == "dag" { Scenario::from_json(DAG).unwrap() } else { bundled(name).unwrap() };
    let ro: &ResponseOrdering = s.ordering.as_ref().unwrap();
    let cro = scc_decompose(ro).unwrap();
    let chains =
        ro.responses().iter().map(|r| (r.action.clone(), required_chains(&cro, ro, &r.action).unwrap())).collect();
    Fixture { s, cro, chains }
}

/// Whether every required chain of `action` has a centibroom ending at `t`.
fn all_chains_formed(f: &Fixture, run: &Run, reach: &Reach, action: &str, t: Time) -> bool {
    let chains = &f.chains[action];
    !chains.is_empty()
        && chains.iter().all(|c| {
            let event = &f.cro.triggers[c.trigger];
            let slot = f.s.context.slot(event).unwrap();
            run.occurrence_time(event) == Some(slot.time)
                && slot.time <= t
                && brute_centibroom(reach, slot.agent, &c.groups(&f.cro), slot.time, t)
        })
}

/// Each response fires exactly at the first time its chains have all formed.
fn responses_fire_at_first_formation(name: &str) -> usize {
    let f = fixture(name);
    let bundle = build_system(&f.s.protocol, &f.s.context).unwrap();
    let net = f.s.network();
    let mut fired = 0;
    for run in &bundle.runs {
        let reach = Reach::new(run, net);
        for action in f.chains.keys() {
            let first = (0..=run.horizon).find(|&t| all_chains_formed(&f, run, &reach, action, t));
            let got: Vec<Time> = run.response_times(action).into_iter().map(|(_, t)| t).collect();
            assert_eq!(got, first.into_iter().collect::<Vec<_>>(), "{name}: {action} in {:?}", run.env);
            fired += got.len();
        }
    }
    assert!(fired > 0);
    fired
}

#[test]
fn r3_gor_responses_are_necessary_and_earliest() {
    responses_fire_at_first_formation("r3-gor");
}

#[test]
fn r2_gor_responses_are_necessary_and_earliest() {
    responses_fire_at_first_formation("r2-gor");
}

#[test]
fn dag_responses_are_necessary_and_earliest() {
    responses_fire_at_first_formation("dag");
}

#[test]
fn judea_responses_are_necessary_and_earliest() {
    responses_fire_at_first_formation("judea");
}

#[test]
fn cluster_members_respond_together() {
    for name in ["r3-gor", "judea", "judea-ojr"] {
        let f = fixture(name);
        let ro = f.s.ordering.as_ref().unwrap();
        let bundle = build_system(&f.s.protocol, &f.s.context).unwrap();
        for run in &bundle.runs {
            for (i, a) in ro.responses().iter().enumerate() {
                for (j, b) in ro.responses().iter().enumerate() {
                    if f.cro.scc_of(i) == f.cro.scc_of(j) {
                        assert_eq!(
                            run.response_times(&a.action).first().map(|x| x.1),
                            run.response_times(&b.action).first().map(|x| x.1),
                            "{name}: {} and {} split",
                            a.action,
                            b.action
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn singleton_chains_are_centipedes() {
    // Where every cluster on a chain is one agent, the centibroom condition
    // is a centipede ending at the last agent.
    let mut compared = 0;
    for name in ["dag", "r3-gor", "r2-gor", "judea"] {
        let f = fixture(name);
        let bundle = build_system(&f.s.protocol, &f.s.context).unwrap();
        for chains in f.chains.values() {
            for c in chains {
                let groups = c.groups(&f.cro);
                if groups.iter().any(|g| g.len() != 1) {
                    continue;
                }
                let agents: Vec<AgentId> = groups.iter().map(|g| *g.iter().next().unwrap()).collect();
                let slot = f.s.context.slot(&f.cro.triggers[c.trigger]).unwrap();
                for run in bundle.runs.iter().step_by(7) {
                    let reach = Reach::new(run, f.s.network());
                    for t in slot.time..=run.horizon {
                        assert_eq!(
                            brute_centibroom(&reach, slot.agent, &groups, slot.time, t),
                            brute_centipede(&reach, slot.agent, &agents, slot.time, t),
                        );
                        compared += 1;
                    }
                }
            }
        }
    }
    assert!(compared > 0);
}

#[test]
fn chain_groups_are_cluster_agent_sets() {
    let f = fixture("judea");
    let ro = f.s.ordering.as_ref().unwrap();
    for c in f.chains.values().flatten() {
        for (&s, g) in c.sccs.iter().zip(c.groups(&f.cro)) {
            let want: AgentSet =
                (0..ro.responses().len()).filter(|&r| f.cro.scc_of(r) == s).map(|r| ro.responses()[r].agent).collect();
            assert_eq!(g, want);
        }
    }
}
