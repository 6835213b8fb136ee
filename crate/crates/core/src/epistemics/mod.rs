//! Knowledge and common knowledge over a finite system of runs.
//!
//! Formulas are evaluated at points `(run, t)` with `t` no later than the
//! evaluation horizon `T - max b`. `K_i φ` holds at `(r, t)` when `φ` holds at
//! `(r', t)` for every run `r'` in which agent `i` has the same local state at
//! `t`. `C_G φ` is the greatest set `S` of points such that every point of
//! `S` satisfies `φ` and `K_i S` for all `i` in `G`; on a finite system this
//! is the same set as the infinite conjunction of nested `K` strings over `G`.
//!
//! Knowledge is relative to the bundle. Removing runs can only create
//! knowledge, so a bundle that is not exhaustive is refused unless the caller
//! opts in explicitly.

mod syntax;

pub use syntax::{parse_formula, FormulaParseError};

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use fixedbitset::FixedBitSet;
use thiserror::Error;

use crate::network::{AgentId, Network, Time};
use crate::simulator::{EventId, StateDigest, SystemBundle};
use crate::structures::AgentSet;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Occ(EventId),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    K(AgentId, Box<Formula>),
    C(AgentSet, Box<Formula>),
}

impl Formula {
    pub fn occ(event: impl Into<EventId>) -> Self {
        Formula::Occ(event.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(phi: Formula) -> Self {
        Formula::Not(Box::new(phi))
    }

    pub fn and(phi: Formula, psi: Formula) -> Self {
        Formula::And(Box::new(phi), Box::new(psi))
    }

    pub fn k(agent: AgentId, phi: Formula) -> Self {
        Formula::K(agent, Box::new(phi))
    }

    pub fn c(group: AgentSet, phi: Formula) -> Self {
        Formula::C(group, Box::new(phi))
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::Occ(_) => 0,
            Formula::Not(p) => p.depth(),
            Formula::And(p, q) => p.depth().max(q.depth()),
            Formula::K(_, p) | Formula::C(_, p) => 1 + p.depth(),
        }
    }

    /// Every event id mentioned by an `Occ`.
    pub fn events(&self) -> Vec<&EventId> {
        let mut out = Vec::new();
        self.collect_events(&mut out);
        out
    }

    fn collect_events<'a>(&'a self, out: &mut Vec<&'a EventId>) {
        match self {
            Formula::Occ(e) => out.push(e),
            Formula::Not(p) | Formula::K(_, p) | Formula::C(_, p) => p.collect_events(out),
            Formula::And(p, q) => {
                p.collect_events(out);
                q.collect_events(out);
            }
        }
    }

    /// Prints the formula in the textual syntax, naming agents via `network`.
    pub fn display_with<'a>(&'a self, network: Option<&'a Network>) -> impl fmt::Display + 'a {
        struct Show<'a>(&'a Formula, Option<&'a Network>);
        impl fmt::Display for Show<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let name = |a: AgentId| match self.1 {
                    Some(net) if net.contains(a) => net.name(a).to_string(),
                    _ => a.to_string(),
                };
                match self.0 {
                    Formula::Occ(e) => write!(f, "occ({e})"),
                    Formula::Not(p) => write!(f, "!{}", Show(p, self.1)),
                    Formula::And(p, q) => write!(f, "({} & {})", Show(p, self.1), Show(q, self.1)),
                    Formula::K(a, p) => write!(f, "K[{}] {}", name(*a), Show(p, self.1)),
                    Formula::C(g, p) => {
                        let names: Vec<String> = g.iter().map(|&a| name(a)).collect();
                        write!(f, "C{{{}}} {}", names.join(","), Show(p, self.1))
                    }
                }
            }
        }
        Show(self, network)
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display_with(None))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EpistemicError {
    #[error("knowledge over a sampled bundle is unsound; build an exhaustive bundle or opt in explicitly")]
    NonExhaustiveBundle,
    #[error("time {time} is past the evaluation horizon {limit}")]
    HorizonExceeded { time: Time, limit: Time },
    #[error("the horizon is shorter than the largest channel bound; no point can be evaluated")]
    NoEvaluationPoints,
    #[error("run index {0} is out of range")]
    UnknownRun(usize),
    #[error("group {0} is empty")]
    EmptyGroup(usize),
    #[error("nested common knowledge needs at least one group")]
    NoGroups,
    #[error("unknown agent {0}")]
    UnknownAgent(AgentId),
}

/// An evaluation point `(run, t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Point {
    pub run: usize,
    pub time: Time,
}

/// Runs grouped by agent local state, per agent and time.
#[derive(Debug, Clone)]
pub struct IndistinguishabilityIndex {
    /// `classes[agent][t]` lists the runs of each class.
    classes: Vec<Vec<Vec<Vec<usize>>>>,
    /// `class_of[agent][t][run]`.
    class_of: Vec<Vec<Vec<usize>>>,
}

impl IndistinguishabilityIndex {
    pub fn build(bundle: &SystemBundle, last_time: Time) -> Self {
        let agents = bundle.context.network.agent_count();
        let mut classes = vec![Vec::new(); agents];
        let mut class_of = vec![Vec::new(); agents];
        for a in 0..agents {
            for t in 0..=last_time {
                let mut ids: HashMap<StateDigest, usize> = HashMap::new();
                let mut members: Vec<Vec<usize>> = Vec::new();
                let mut of = Vec::with_capacity(bundle.runs.len());
                for (r, run) in bundle.runs.iter().enumerate() {
                    let d = run.state(AgentId(a as u32), t).digest();
                    let id = *ids.entry(d).or_insert_with(|| {
                        members.push(Vec::new());
                        members.len() - 1
                    });
                    members[id].push(r);
                    of.push(id);
                }
                classes[a].push(members);
                class_of[a].push(of);
            }
        }
        IndistinguishabilityIndex { classes, class_of }
    }

    pub fn classes(&self, agent: AgentId, time: Time) -> &[Vec<usize>] {
        &self.classes[agent.index()][time as usize]
    }

    pub fn same_class(&self, agent: AgentId, time: Time, r1: usize, r2: usize) -> bool {
        let of = &self.class_of[agent.index()][time as usize];
        of[r1] == of[r2]
    }
}

/// Evaluates formulas over one bundle. Subformula results are cached; the
/// cache is filled at most once per formula and is safe to share.
pub struct Evaluator<'a> {
    bundle: &'a SystemBundle,
    last_time: Time,
    index: IndistinguishabilityIndex,
    memo: Mutex<HashMap<Formula, Arc<FixedBitSet>>>,
}

impl<'a> Evaluator<'a> {
    pub fn new(bundle: &'a SystemBundle) -> Result<Self, EpistemicError> {
        if !bundle.exhaustive {
            return Err(EpistemicError::NonExhaustiveBundle);
        }
        Self::allowing_sampled(bundle)
    }

    /// Like [`Evaluator::new`] but accepts sampled bundles. Results are then
    /// knowledge relative to the sample, not to the system.
    pub fn allowing_sampled(bundle: &'a SystemBundle) -> Result<Self, EpistemicError> {
        let last_time = bundle.context.evaluation_horizon().ok_or(EpistemicError::NoEvaluationPoints)?;
        let index = IndistinguishabilityIndex::build(bundle, last_time);
        Ok(Evaluator { bundle, last_time, index, memo: Mutex::new(HashMap::new()) })
    }

    pub fn bundle(&self) -> &SystemBundle {
        self.bundle
    }

    /// Last evaluable time.
    pub fn last_time(&self) -> Time {
        self.last_time
    }

    pub fn index(&self) -> &IndistinguishabilityIndex {
        &self.index
    }

    fn width(&self) -> usize {
        self.last_time as usize + 1
    }

    fn slot(&self, p: Point) -> usize {
        p.run * self.width() + p.time as usize
    }

    fn check(&self, p: Point) -> Result<(), EpistemicError> {
        if p.run >= self.bundle.runs.len() {
            return Err(EpistemicError::UnknownRun(p.run));
        }
        if p.time > self.last_time {
            return Err(EpistemicError::HorizonExceeded { time: p.time, limit: self.last_time });
        }
        Ok(())
    }

    fn check_formula(&self, phi: &Formula) -> Result<(), EpistemicError> {
        let net = &self.bundle.context.network;
        match phi {
            Formula::Occ(_) => Ok(()),
            Formula::Not(p) => self.check_formula(p),
            Formula::And(p, q) => {
                self.check_formula(p)?;
                self.check_formula(q)
            }
            Formula::K(a, p) => {
                if !net.contains(*a) {
                    return Err(EpistemicError::UnknownAgent(*a));
                }
                self.check_formula(p)
            }
            Formula::C(g, p) => {
                if g.is_empty() {
                    return Err(EpistemicError::EmptyGroup(0));
                }
                if let Some(a) = g.iter().find(|a| !net.contains(**a)) {
                    return Err(EpistemicError::UnknownAgent(*a));
                }
                self.check_formula(p)
            }
        }
    }

    /// `(R, r, t) ⊨ φ`.
    pub fn eval(&self, p: Point, phi: &Formula) -> Result<bool, EpistemicError> {
        self.check(p)?;
        self.check_formula(phi)?;
        Ok(self.set(phi).contains(self.slot(p)))
    }

    /// All points satisfying `φ`, ordered by run then time.
    pub fn satisfying_points(&self, phi: &Formula) -> Result<Vec<Point>, EpistemicError> {
        self.check_formula(phi)?;
        let w = self.width();
        Ok(self.set(phi).ones().map(|i| Point { run: i / w, time: (i % w) as Time }).collect())
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.bundle.runs.len()).flat_map(move |run| (0..=self.last_time).map(move |time| Point { run, time }))
    }

    fn set(&self, phi: &Formula) -> Arc<FixedBitSet> {
        if let Some(s) = self.memo.lock().expect("memo poisoned").get(phi) {
            return Arc::clone(s);
        }
        let computed = Arc::new(self.compute(phi));
        let mut memo = self.memo.lock().expect("memo poisoned");
        Arc::clone(memo.entry(phi.clone()).or_insert(computed))
    }

    fn compute(&self, phi: &Formula) -> FixedBitSet {
        let size = self.bundle.runs.len() * self.width();
        match phi {
            Formula::Occ(e) => {
                let mut s = FixedBitSet::with_capacity(size);
                for (r, run) in self.bundle.runs.iter().enumerate() {
                    if let Some(t0) = run.occurrence_time(e) {
                        for t in t0..=self.last_time {
                            s.insert(self.slot(Point { run: r, time: t }));
                        }
                    }
                }
                s
            }
            Formula::Not(p) => {
                let mut s = (*self.set(p)).clone();
                s.toggle_range(..);
                s
            }
            Formula::And(p, q) => {
                let mut s = (*self.set(p)).clone();
                s.intersect_with(&self.set(q));
                s
            }
            Formula::K(a, p) => self.knows(*a, &self.set(p)),
            Formula::C(g, p) => {
                let base = self.set(p);
                let mut current = (*base).clone();
                loop {
                    let mut next = (*base).clone();
                    for &a in g {
                        next.intersect_with(&self.knows(a, &current));
                    }
                    if next == current {
                        break current;
                    }
                    current = next;
                }
            }
        }
    }

    /// Points where `agent` knows the point set `s`.
    fn knows(&self, agent: AgentId, s: &FixedBitSet) -> FixedBitSet {
        let mut out = FixedBitSet::with_capacity(s.len());
        for t in 0..=self.last_time {
            for class in self.index.classes(agent, t) {
                let all = class.iter().all(|&r| s.contains(self.slot(Point { run: r, time: t })));
                if all {
                    for &r in class {
                        out.insert(self.slot(Point { run: r, time: t }));
                    }
                }
            }
        }
        out
    }
}

/// `C_{I^k} C_{I^{k-1}} ... C_{I^1} occ(event)`; `groups[0]` is `I^1`.
pub fn nested_ck(groups: &[AgentSet], event: &str) -> Result<Formula, EpistemicError> {
    if groups.is_empty() {
        return Err(EpistemicError::NoGroups);
    }
    let mut phi = Formula::occ(event);
    for (i, g) in groups.iter().enumerate() {
        if g.is_empty() {
            return Err(EpistemicError::EmptyGroup(i));
        }
        phi = Formula::c(g.clone(), phi);
    }
    Ok(phi)
}

/// `K_{i_k} ... K_{i_1} occ(event)`; `agents[0]` is `i_1`.
pub fn nested_k(agents: &[AgentId], event: &str) -> Formula {
    agents.iter().fold(Formula::occ(event), |phi, &a| Formula::k(a, phi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Network;
    use crate::simulator::{build_system, sample_system, Context, FullInformation, InputSlot, Silent};

    fn pair_bundle() -> SystemBundle {
        let net = Network::new(2, [(AgentId(0), AgentId(1), 1), (AgentId(1), AgentId(0), 1)]).unwrap();
        let ctx = Context::new(net, 4, vec![InputSlot { event: "e".into(), agent: AgentId(0), time: 1 }]).unwrap();
        build_system(&FullInformation, &ctx).unwrap()
    }

    fn set(a: &[u32]) -> AgentSet {
        a.iter().map(|&i| AgentId(i)).collect()
    }

    #[test]
    fn occurrence_is_monotone_in_time() {
        let b = pair_bundle();
        let ev = Evaluator::new(&b).unwrap();
        let present = b.runs.iter().position(|r| r.occurrence_time("e").is_some()).unwrap();
        let e = Formula::occ("e");
        assert!(!ev.eval(Point { run: present, time: 0 }, &e).unwrap());
        assert!(ev.eval(Point { run: present, time: 1 }, &e).unwrap());
        assert!(ev.eval(Point { run: present, time: 3 }, &e).unwrap());
        let absent = 1 - present;
        assert!(!ev.eval(Point { run: absent, time: 3 }, &e).unwrap());
    }

    #[test]
    fn own_input_is_known_on_arrival() {
        let b = pair_bundle();
        let ev = Evaluator::new(&b).unwrap();
        let present = b.runs.iter().position(|r| r.occurrence_time("e").is_some()).unwrap();
        let k0 = Formula::k(AgentId(0), Formula::occ("e"));
        assert!(ev.eval(Point { run: present, time: 1 }, &k0).unwrap());
        let k1 = Formula::k(AgentId(1), Formula::occ("e"));
        assert!(!ev.eval(Point { run: present, time: 1 }, &k1).unwrap());
        assert!(ev.eval(Point { run: present, time: 2 }, &k1).unwrap());
    }

    #[test]
    fn singleton_common_knowledge_is_knowledge() {
        let b = pair_bundle();
        let ev = Evaluator::new(&b).unwrap();
        let phi = Formula::occ("e");
        for a in 0..2 {
            let k = Formula::k(AgentId(a), phi.clone());
            let c = Formula::c(set(&[a]), phi.clone());
            assert_eq!(ev.satisfying_points(&k).unwrap(), ev.satisfying_points(&c).unwrap());
        }
    }

    #[test]
    fn negation_partitions_points() {
        let b = pair_bundle();
        let ev = Evaluator::new(&b).unwrap();
        let phi = Formula::k(AgentId(1), Formula::occ("e"));
        let yes = ev.satisfying_points(&phi).unwrap();
        let no = ev.satisfying_points(&Formula::not(phi)).unwrap();
        assert_eq!(yes.len() + no.len(), ev.points().count());
        assert!(yes.iter().all(|p| !no.contains(p)));
    }

    #[test]
    fn refuses_sampled_and_out_of_range() {
        let net = Network::new(1, []).unwrap();
        let ctx = Context::new(net, 2, vec![InputSlot { event: "e".into(), agent: AgentId(0), time: 0 }]).unwrap();
        let sampled = sample_system(&Silent, &ctx, 3, 4).unwrap();
        assert_eq!(Evaluator::new(&sampled).err(), Some(EpistemicError::NonExhaustiveBundle));
        assert!(Evaluator::allowing_sampled(&sampled).is_ok());

        let b = build_system(&Silent, &ctx).unwrap();
        let ev = Evaluator::new(&b).unwrap();
        assert_eq!(
            ev.eval(Point { run: 0, time: 3 }, &Formula::occ("e")),
            Err(EpistemicError::HorizonExceeded { time: 3, limit: 2 })
        );
        assert_eq!(
            ev.eval(Point { run: 0, time: 0 }, &Formula::k(AgentId(4), Formula::occ("e"))),
            Err(EpistemicError::UnknownAgent(AgentId(4)))
        );
    }

    #[test]
    fn nested_ck_reads_inside_out() {
        let f = nested_ck(&[set(&[0]), set(&[0, 1])], "e").unwrap();
        assert_eq!(f, Formula::c(set(&[0, 1]), Formula::c(set(&[0]), Formula::occ("e"))));
        assert_eq!(nested_ck(&[], "e"), Err(EpistemicError::NoGroups));
        assert_eq!(nested_ck(&[set(&[])], "e"), Err(EpistemicError::EmptyGroup(0)));
        assert_eq!(nested_k(&[AgentId(1), AgentId(2)], "e").to_string(), "K[2] K[1] occ(e)");
    }
}
