//! Graphviz output for runs, structure witnesses and response orderings.
//!
//! Node `<i,t>` is written as the identifier `n{i}_{t}`. Send-receive edges
//! are solid and null-message edges dashed; witness chain edges are labelled
//! `sync` and bound-guarantee legs `bound`. Locality edges are implied by the
//! layout and never drawn.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::causality::{CausalGraph, EdgeKind, NodeRef};
use crate::coordination::{Cro, CroNode};
use crate::network::{Network, Time};
use crate::structures::{StructureWitness, Targets};

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn id(n: NodeRef) -> String {
    format!("n{}_{}", n.agent.0, n.time)
}

fn node_line(out: &mut String, n: NodeRef, network: &Network, extra: &str) {
    let label = quote(&format!("{},{}", network.name(n.agent), n.time));
    let _ = writeln!(out, "  {} [label={label}{extra}];", id(n));
}

/// The node graph of one run. `cut` highlights the nodes at a snapshot time.
pub fn run_to_dot(graph: &CausalGraph, network: &Network, cut: Option<Time>) -> String {
    let mut out = String::from("digraph run {\n  rankdir=LR;\n  node [shape=circle];\n");
    for n in graph.nodes() {
        let extra = if cut == Some(n.time) { ", style=filled, fillcolor=\"lightblue\"" } else { "" };
        node_line(&mut out, n, network, extra);
    }
    for &(from, to, kind) in graph.edges() {
        let style = match kind {
            EdgeKind::SendReceive => "solid",
            EdgeKind::NullMessage => "dashed",
        };
        let _ = writeln!(out, "  {} -> {} [style={style}];", id(from), id(to));
    }
    out.push_str("}\n");
    out
}

/// A witness: its chain `θ_0 ⤳ ... ⤳ θ_k` and every leg `θ_h ⇢ <i, t'>`.
pub fn witness_to_dot(witness: &StructureWitness, network: &Network) -> String {
    let t_end = witness.interval.1;
    let mut legs: Vec<(NodeRef, NodeRef)> = Vec::new();
    match &witness.targets {
        Targets::Agents(agents) => {
            // The last centipede node is its own target; only earlier levels have legs.
            for (h, &a) in agents.iter().enumerate().take(agents.len().saturating_sub(1)) {
                legs.push((witness.nodes[h + 1], NodeRef { agent: a, time: t_end }));
            }
        }
        Targets::Groups(groups) => {
            for (h, g) in groups.iter().enumerate() {
                for &a in g {
                    legs.push((witness.nodes[h + 1], NodeRef { agent: a, time: t_end }));
                }
            }
        }
    }
    let mut nodes: BTreeSet<NodeRef> = witness.nodes.iter().copied().collect();
    nodes.extend(legs.iter().map(|&(_, t)| t));
    let mut out = format!("digraph {} {{\n  rankdir=LR;\n  node [shape=circle];\n", witness.kind);
    for &n in &nodes {
        let extra = if n == witness.nodes[0] { ", shape=doublecircle" } else { "" };
        node_line(&mut out, n, network, extra);
    }
    // Repeated chain nodes and legs ending at their own source are trivial
    // and left out.
    for w in witness.nodes.windows(2).filter(|w| w[0] != w[1]) {
        let _ = writeln!(out, "  {} -> {} [style=solid, label=\"sync\"];", id(w[0]), id(w[1]));
    }
    for (from, to) in legs.into_iter().filter(|(f, t)| f != t) {
        let _ = writeln!(out, "  {} -> {} [style=dashed, label=\"bound\"];", id(from), id(to));
    }
    out.push_str("}\n");
    out
}

/// The condensation DAG, drawn with its covering edges.
pub fn cro_to_dot(cro: &Cro, network: &Network) -> String {
    let name = |n: CroNode| match n {
        CroNode::Trigger(i) => format!("t{i}"),
        CroNode::Scc(i) => format!("s{i}"),
    };
    let mut out = String::from("digraph cro {\n  rankdir=TB;\n");
    for (i, t) in cro.triggers.iter().enumerate() {
        let _ = writeln!(out, "  t{i} [label={}, shape=box];", quote(t));
    }
    for (i, s) in cro.sccs.iter().enumerate() {
        let agents: Vec<&str> = s.agents.iter().map(|&a| network.name(a)).collect();
        let label = format!("{}\\n{{{}}}", s.label, agents.join(","));
        let _ = writeln!(out, "  s{i} [label=\"{}\", shape=ellipse];", label.replace('"', "\\\""));
    }
    for &(a, b) in &cro.cover {
        let _ = writeln!(out, "  {} -> {};", name(a), name(b));
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::causality::build_causal_graph;
    use crate::network::AgentId;
    use crate::simulator::{execute, Context, EnvironmentChoice, Silent};

    #[test]
    fn one_agent_run_has_only_nodes() {
        let net = Network::new(1, []).unwrap();
        let ctx = Context::new(net.clone(), 3, vec![]).unwrap();
        let run = execute(&Silent, &ctx, &EnvironmentChoice::default()).unwrap();
        let dot = run_to_dot(&build_causal_graph(&run, &net), &net, None);
        assert_eq!(dot.matches("[label=").count(), 4);
        assert!(!dot.contains("->"));
    }

    #[test]
    fn labels_are_escaped() {
        let net = Network::with_names(vec!["say \"hi\"".into()], []).unwrap();
        let mut out = String::new();
        node_line(&mut out, NodeRef::new(AgentId(0), 1), &net, "");
        assert!(out.contains(r#"label="say \"hi\",1""#));
    }
}
