//! Exhaustive and sampled exploration of environment behaviors.
//!
//! Enumeration is a depth-first walk over choice points discovered by
//! re-execution: a run is executed under a prefix of option indices, every
//! choice point past the prefix takes option 0, and the next prefix is found
//! by advancing the last choice point that still has options left. Only sends
//! the deterministic protocol actually performs become choice points, so the
//! walk visits each environment exactly once, in lexicographic order of the
//! canonical choice encoding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    execute_with, ChoiceSource, Context, DelayOptions, EnvironmentChoice, InputSlot, Protocol, Run, SendKey, SimError,
};
use crate::network::Time;

/// Default limit on the number of runs in an exhaustive system.
pub const DEFAULT_CEILING: usize = 200_000;

/// A finite set of runs of one protocol in one context.
#[derive(Debug, Clone)]
pub struct SystemBundle {
    pub context: Context,
    pub protocol: String,
    pub runs: Vec<Run>,
    /// Set when `runs` are all environments of the context, each exactly once.
    pub exhaustive: bool,
}

impl SystemBundle {
    pub fn len(&self) -> usize {
        self.runs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }
}

struct Odometer<'a> {
    prefix: &'a [u32],
    pos: usize,
    arities: Vec<u32>,
}

impl Odometer<'_> {
    fn next(&mut self, arity: u32) -> u32 {
        let i = self.prefix.get(self.pos).copied().unwrap_or(0);
        debug_assert!(i < arity);
        self.pos += 1;
        self.arities.push(arity);
        i
    }
}

impl ChoiceSource for Odometer<'_> {
    fn input_present(&mut self, _: usize, _: &InputSlot) -> Result<bool, SimError> {
        Ok(self.next(2) == 1)
    }

    fn delay(&mut self, _: SendKey, options: DelayOptions) -> Result<Time, SimError> {
        let arity = options.arity();
        if arity == 1 {
            return Ok(options.option(0));
        }
        Ok(options.option(self.next(arity)))
    }
}

/// Iterator over every run of a protocol in a context, in canonical order.
pub struct Environments<'a, P: Protocol> {
    protocol: &'a P,
    ctx: &'a Context,
    next: Option<Vec<u32>>,
    produced: usize,
}

impl<'a, P: Protocol> Environments<'a, P> {
    pub fn new(protocol: &'a P, ctx: &'a Context) -> Self {
        Environments { protocol, ctx, next: Some(Vec::new()), produced: 0 }
    }
}

impl<P: Protocol> Iterator for Environments<'_, P> {
    type Item = Result<Run, SimError>;

    fn next(&mut self) -> Option<Self::Item> {
        let prefix = self.next.take()?;
        if self.produced >= self.ctx.ceiling {
            return Some(Err(SimError::ExplosionGuard { ceiling: self.ctx.ceiling }));
        }
        let mut odo = Odometer { prefix: &prefix, pos: 0, arities: Vec::new() };
        let run = match execute_with(self.protocol, self.ctx, &mut odo) {
            Ok(run) => run,
            Err(e) => return Some(Err(e)),
        };
        debug_assert_eq!(run.choices.len(), odo.arities.len());
        self.next = (0..run.choices.len()).rev().find(|&i| run.choices[i] + 1 < odo.arities[i]).map(|i| {
            let mut p = run.choices[..i].to_vec();
            p.push(run.choices[i] + 1);
            p
        });
        self.produced += 1;
        Some(Ok(run))
    }
}

/// Every environment choice of the context, each exactly once.
pub fn enumerate_environments<'a, P: Protocol>(
    ctx: &'a Context,
    protocol: &'a P,
) -> impl Iterator<Item = Result<EnvironmentChoice, SimError>> + 'a {
    Environments::new(protocol, ctx).map(|r| r.map(|run| run.env))
}

/// The environment at a canonical index.
pub fn environment_at<P: Protocol>(protocol: &P, ctx: &Context, index: usize) -> Result<EnvironmentChoice, SimError> {
    let mut count = 0;
    for (i, run) in Environments::new(protocol, ctx).enumerate() {
        let run = run?;
        if i == index {
            return Ok(run.env);
        }
        count = i + 1;
    }
    Err(SimError::EnvIndexOutOfRange { index, count })
}

/// The exhaustive system `R(P, ctx)`.
pub fn build_system<P: Protocol>(protocol: &P, ctx: &Context) -> Result<SystemBundle, SimError> {
    let runs = Environments::new(protocol, ctx).collect::<Result<Vec<_>, _>>()?;
    Ok(SystemBundle { context: ctx.clone(), protocol: protocol.name().to_string(), runs, exhaustive: true })
}

pub fn build_system_with_ceiling<P: Protocol>(
    protocol: &P,
    ctx: &Context,
    ceiling: usize,
) -> Result<SystemBundle, SimError> {
    let ctx = ctx.clone().with_ceiling(ceiling);
    build_system(protocol, &ctx)
}

struct RandomSource {
    rng: ChaCha8Rng,
}

impl ChoiceSource for RandomSource {
    fn input_present(&mut self, _: usize, _: &InputSlot) -> Result<bool, SimError> {
        Ok(self.rng.random_bool(0.5))
    }

    fn delay(&mut self, _: SendKey, options: DelayOptions) -> Result<Time, SimError> {
        Ok(options.option(self.rng.random_range(0..options.arity())))
    }
}

/// `count` runs with environments drawn from a seeded generator. Duplicates
/// are possible; the bundle is never marked exhaustive.
pub fn sample_system<P: Protocol>(
    protocol: &P,
    ctx: &Context,
    seed: u64,
    count: usize,
) -> Result<SystemBundle, SimError> {
    let mut source = RandomSource { rng: ChaCha8Rng::seed_from_u64(seed) };
    let runs = (0..count.max(1)).map(|_| execute_with(protocol, ctx, &mut source)).collect::<Result<Vec<_>, _>>()?;
    Ok(SystemBundle { context: ctx.clone(), protocol: protocol.name().to_string(), runs, exhaustive: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{AgentId, Network};
    use crate::simulator::{execute, FullInformation, Silent};

    fn slot(event: &str, agent: u32, time: Time) -> InputSlot {
        InputSlot { event: event.into(), agent: AgentId(agent), time }
    }

    #[test]
    fn empty_context_has_one_environment() {
        let ctx = Context::new(Network::new(1, []).unwrap(), 0, vec![]).unwrap();
        let envs: Vec<_> = enumerate_environments(&ctx, &Silent).collect::<Result<_, _>>().unwrap();
        assert_eq!(envs, vec![EnvironmentChoice::default()]);
    }

    #[test]
    fn one_slot_gives_two_runs() {
        let ctx = Context::new(Network::new(1, []).unwrap(), 3, vec![slot("e", 0, 1)]).unwrap();
        let bundle = build_system(&Silent, &ctx).unwrap();
        assert_eq!(bundle.len(), 2);
        assert!(bundle.exhaustive);
        assert_eq!(bundle.runs[0].occurrence_time("e"), None);
        assert_eq!(bundle.runs[1].occurrence_time("e"), Some(1));
    }

    #[test]
    fn enumerated_environments_replay_to_the_same_run() {
        let net = Network::new(2, [(AgentId(0), AgentId(1), 2), (AgentId(1), AgentId(0), 2)]).unwrap();
        let ctx = Context::new(net, 3, vec![slot("e", 0, 0)]).unwrap();
        let bundle = build_system(&FullInformation, &ctx).unwrap();
        for run in &bundle.runs {
            let replay = execute(&FullInformation, &ctx, &run.env).unwrap();
            assert_eq!(replay.choices, run.choices);
            assert_eq!(replay.states, run.states);
        }
        let mut encodings: Vec<_> = bundle.runs.iter().map(|r| r.choices.clone()).collect();
        let sorted = {
            let mut s = encodings.clone();
            s.sort();
            s
        };
        assert_eq!(encodings, sorted);
        encodings.dedup();
        assert_eq!(encodings.len(), bundle.len());
    }

    #[test]
    fn ceiling_is_enforced() {
        let net = Network::new(2, [(AgentId(0), AgentId(1), 2), (AgentId(1), AgentId(0), 2)]).unwrap();
        let ctx = Context::new(net, 4, vec![]).unwrap().with_ceiling(10);
        assert_eq!(build_system(&FullInformation, &ctx).unwrap_err(), SimError::ExplosionGuard { ceiling: 10 });
    }

    #[test]
    fn sampling_is_seeded() {
        let net = Network::new(2, [(AgentId(0), AgentId(1), 2), (AgentId(1), AgentId(0), 2)]).unwrap();
        let ctx = Context::new(net, 3, vec![slot("e", 1, 0)]).unwrap();
        let a = sample_system(&FullInformation, &ctx, 7, 1).unwrap();
        let b = sample_system(&FullInformation, &ctx, 7, 1).unwrap();
        assert_eq!(a.runs[0].env, b.runs[0].env);
        assert!(!a.exhaustive);
        let many = sample_system(&FullInformation, &ctx, 1, 500).unwrap();
        assert_eq!(many.len(), 500);
        assert!(!many.exhaustive);
        for run in &many.runs {
            run.check_invariants(&ctx.network).unwrap();
        }
    }

    #[test]
    fn environment_index_is_addressable() {
        let ctx = Context::new(Network::new(1, []).unwrap(), 1, vec![slot("e", 0, 0)]).unwrap();
        assert_eq!(environment_at(&Silent, &ctx, 1).unwrap().inputs, vec![true]);
        assert!(matches!(environment_at(&Silent, &ctx, 2), Err(SimError::EnvIndexOutOfRange { index: 2, count: 2 })));
    }
}
