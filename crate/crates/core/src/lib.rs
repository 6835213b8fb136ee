//! Causal structure, knowledge, and coordination in synchronous networks
//! with bounded message delays.
//!
//! The crate simulates deterministic protocols over a weighted channel graph,
//! enumerates every environment behavior of a bounded context to obtain a
//! finite system of runs, and analyses those runs:
//!
//! - [`causality`]: syncausality (message chains plus null messages) and the
//!   run-independent bound-guarantee relation.
//! - [`structures`]: centipedes, brooms and centibrooms.
//! - [`epistemics`]: knowledge and common knowledge over a run system.
//! - [`snapshot`]: the flooding snapshot protocol and its optimality oracle.
//! - [`coordination`]: ordered response specifications, their SCC
//!   decomposition, and a full-information protocol that solves them.
//! - [`scenario`] and [`dot`]: scenario files and Graphviz output.

pub mod causality;
pub mod coordination;
pub mod dot;
pub mod epistemics;
pub mod network;
pub mod scenario;
pub mod simulator;
pub mod snapshot;
pub mod structures;
pub mod verify;

pub use network::{AgentId, Distance, Network, NetworkError, Time};
