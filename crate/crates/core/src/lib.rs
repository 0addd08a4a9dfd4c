//! Intent-driven chain-of-thought orchestration for UAV wireless networks.
//!
//! Natural-language intents are embedded, clustered and parsed; a tabular
//! Q-learning agent picks a reasoning module; the module's prompt is sent to
//! an LLM backend (live or mock); the reply's structured block is validated
//! into a deployment command, executed against a free-space link-budget
//! simulator, and scored by a composite reasoning + communication utility.

pub mod activation;
pub mod cot;
pub mod evaluation;
pub mod harness;
pub mod http;
pub mod intent;
pub mod optimizer;
pub mod physics;
pub mod rng;

pub use evaluation::{UtilityReport, UtilityWeights};
pub use physics::{ChannelParams, NetworkMetrics, NetworkScenario, Position3D, UavNode, UserTerminal};
