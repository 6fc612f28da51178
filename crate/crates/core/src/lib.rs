//! Max-consensus cooperative guidance for simultaneous interception of a
//! stationary target by constant-speed unicycle pursuers.
//!
//! The crate is layered bottom-up:
//!
//! - [`geometry`]: per-pursuer formulas and exact arc propagation.
//! - [`graph`] and [`topology`]: directed communication graphs, their
//!   condensation, disconnection bounds and switching schedules.
//! - [`guidance`]: the distributed straight-or-circle decision.
//! - [`sim`] and [`monitor`]: the fixed-step runner and invariant checks.
//! - [`scenario`]: scenario files and result serialization.

use std::fmt;

use serde::{Deserialize, Serialize};

pub mod analysis;
pub mod error;
pub mod geometry;
pub mod graph;
pub mod guidance;
pub mod monitor;
pub mod scenario;
pub mod sim;
pub mod topology;

pub use error::{Error, Result};
pub use geometry::{EngagementGeometry, PursuerState, TargetState};
pub use graph::{CondensationGraph, Digraph, TtildeMap};
pub use guidance::{GuidanceDecision, GuidanceOptions, Regime};
pub use monitor::{MonitorStatus, MonitorVerdict};
pub use scenario::Scenario;
pub use sim::{SimulationConfig, SimulationResult};
pub use topology::{TopologyEvent, TopologySchedule};

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct PursuerId(pub u32);

impl fmt::Display for PursuerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<u32> for PursuerId {
    fn from(v: u32) -> Self {
        PursuerId(v)
    }
}
