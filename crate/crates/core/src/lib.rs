//! Self-taught neural controllers foraging in a toroidal world.
//!
//! Agents carry two small sigmoid networks: an action network that picks
//! one of three motor primitives and a reinforcement network whose output
//! the action network is trained toward at every step of its life. Innate
//! weights for both are evolved with a plain genetic algorithm; learned
//! changes are never inherited.
//!
//! Three regimes are provided: evolution of fixed controllers, evolution of
//! self-teaching controllers, and self-teaching from blank slates.

pub mod config;
pub mod error;
pub mod evolution;
pub mod experiment;
pub mod gradcheck;
pub mod neural;
pub mod output;
pub mod stats;
pub mod world;

pub use config::{echo_config, parse_config};
pub use error::{Error, Result};
pub use evolution::{EvolutionParams, Genome};
pub use experiment::{
    run_experiment, run_experiment_traced, run_generation, run_replicates, ControllerParams,
    ExperimentConfig, GenerationOutcome, GenerationStats, Mode, RunOutput, TraceFilter,
    TraceRecord,
};
pub use neural::{Action, LayerSpec, NetworkWeights, SelfTaughtController, SensoryInput};
pub use stats::{summarize, Summary};
pub use world::{AgentState, FoodRegion, Learning, MapKind, Point, World, WorldConfig};
