use std::collections::BTreeMap;

use super::{ActionId, Actions, Payload, Protocol, StepView};
use crate::network::{AgentId, Network, Time};

/// Never sends, never responds.
#[derive(Debug, Clone, Copy, Default)]
pub struct Silent;

impl Protocol for Silent {
    type Memory = ();

    fn name(&self) -> &str {
        "silent"
    }

    fn init(&self, _: AgentId, _: &Network) {}

    fn step(&self, _: &StepView<'_>, _: &mut ()) -> Actions {
        Actions::none()
    }
}

/// Every agent sends its entire local state on every outgoing channel every
/// round, and performs no responses.
#[derive(Debug, Clone, Copy, Default)]
pub struct FullInformation;

impl FullInformation {
    pub fn broadcast(view: &StepView<'_>) -> Vec<(AgentId, Payload)> {
        view.network.outgoing(view.agent).iter().map(|&to| (to, Payload::State(view.state.clone()))).collect()
    }
}

impl Protocol for FullInformation {
    type Memory = ();

    fn name(&self) -> &str {
        "full-information"
    }

    fn init(&self, _: AgentId, _: &Network) {}

    fn step(&self, view: &StepView<'_>, _: &mut ()) -> Actions {
        Actions { sends: Self::broadcast(view), responses: Vec::new() }
    }
}

/// Performs each listed response at a fixed time, ignoring everything it
/// observes. Sends nothing. Used as a known-bad coordination protocol.
#[derive(Debug, Clone, Default)]
pub struct ScheduledResponder {
    /// `(action, agent) -> time`
    pub schedule: BTreeMap<(ActionId, AgentId), Time>,
}

impl Protocol for ScheduledResponder {
    type Memory = ();

    fn name(&self) -> &str {
        "scheduled"
    }

    fn init(&self, _: AgentId, _: &Network) {}

    fn step(&self, view: &StepView<'_>, _: &mut ()) -> Actions {
        let responses = self
            .schedule
            .iter()
            .filter(|((_, agent), &t)| *agent == view.agent && t == view.time)
            .map(|((a, _), _)| a.clone())
            .collect();
        Actions { sends: Vec::new(), responses }
    }
}
