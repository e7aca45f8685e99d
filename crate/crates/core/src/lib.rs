//! Hierarchical expert prompting for a text-driven macro-strategy agent.

pub mod action_grammar;
pub mod agent_runtime;
pub mod hierarchy_guard;
pub mod llm_backend;
pub mod macro_sim;
pub mod prompt_kit;
pub mod telemetry;
