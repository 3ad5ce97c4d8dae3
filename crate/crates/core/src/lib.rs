//! Deterministic simulator of two-level radio-access-network resource
//! slicing for latency-critical task offloading.
//!
//! The first level assigns gNB resource blocks to end-devices
//! ([`comm`]); the second picks an edge server and a CPU-core budget for
//! every offloaded task ([`comp`]). Both levels are discrete
//! decision problems solved by a from-scratch double deep Q-network
//! ([`neural`], [`ddqn`]) and validated against exhaustive brute-force
//! solvers ([`oracle`]) at small scale.
//!
//! All randomness flows from a single master seed through named
//! sub-streams ([`rng`]); every run is reproducible bit for bit.

pub mod comm;
pub mod comp;
pub mod ddqn;
pub mod env;
pub mod error;
pub mod neural;
pub mod oracle;
pub mod report;
pub mod rng;
pub mod topology;

pub use comm::{CommAction, CommEnv, CommState, CommStepOutcome};
pub use comp::{CompAction, CompEnv, CompState, CompStepOutcome};
pub use ddqn::{AgentHyper, EpisodeMetrics, Experience, ReplayBuffer, TrainResult};
pub use env::{Env, EvalSummary, Transition};
pub use error::ConfigError;
pub use neural::{AdamState, Gradients, MlpParams};
pub use topology::{EndDevice, GNodeB, MecServer, ScenarioConfig, Task, Topology};
