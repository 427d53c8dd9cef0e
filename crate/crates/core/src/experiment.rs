//! The three regimes, run generation by generation and replicated.
//!
//! Each run draws every random number from one ChaCha8 stream: the key is
//! `base_seed` and the stream id is the run id, so runs are independent of
//! each other and of the order they execute in. Within a run the draw order
//! is: the initial population (one genome per agent, action module first),
//! then per generation: blank-slate weights if the regime uses them, agent
//! spawn positions, initial food, food respawns during the steps, and
//! finally reproduction.

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{next_generation, spawn_phenotype, EvolutionParams, Genome};
use crate::neural::{Action, LayerSpec, NetworkWeights, DEFAULT_LEARNING_RATE};
use crate::world::{init_world, Learning, MapKind, WorldConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// Evolution of fixed controllers.
    Evo,
    /// Evolution of controllers that teach themselves during life.
    EvoSelfTaught,
    /// Self-teaching from freshly randomized weights every generation.
    SelfTaughtAlone,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Evo, Mode::EvoSelfTaught, Mode::SelfTaughtAlone];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Evo => "EVO",
            Mode::EvoSelfTaught => "EVO_SELF_TAUGHT",
            Mode::SelfTaughtAlone => "SELF_TAUGHT_ALONE",
        }
    }

    pub fn learning(self) -> Learning {
        match self {
            Mode::Evo => Learning::Off,
            Mode::EvoSelfTaught | Mode::SelfTaughtAlone => Learning::SelfTaught,
        }
    }

    pub fn evolves(self) -> bool {
        !matches!(self, Mode::SelfTaughtAlone)
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                format!("expected one of EVO, EVO_SELF_TAUGHT, SELF_TAUGHT_ALONE, got `{s}`")
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerParams {
    pub layers: LayerSpec,
    pub learning_rate: f64,
}

impl Default for ControllerParams {
    fn default() -> Self {
        Self {
            layers: LayerSpec::default(),
            learning_rate: DEFAULT_LEARNING_RATE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub world: WorldConfig,
    pub evo: EvolutionParams,
    pub controller: ControllerParams,
    pub n_generations: usize,
    pub steps_per_generation: usize,
    pub n_runs: usize,
    pub base_seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::full()
    }
}

impl ExperimentConfig {
    /// Full schedule: 100 generations of 5000 steps, 30 runs.
    pub fn full() -> Self {
        Self {
            mode: Mode::Evo,
            world: WorldConfig::default(),
            evo: EvolutionParams::default(),
            controller: ControllerParams::default(),
            n_generations: 100,
            steps_per_generation: 5000,
            n_runs: 30,
            base_seed: 0,
        }
    }

    /// Reduced schedule for quick checks: 20 generations of 2000 steps, 10 runs.
    pub fn desk() -> Self {
        Self {
            n_generations: 20,
            steps_per_generation: 2000,
            n_runs: 10,
            ..Self::full()
        }
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_map(mut self, map: MapKind) -> Self {
        self.world.map = map;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.base_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.world.validate()?;
        self.evo.validate()?;
        let layers = self.controller.layers;
        if layers.n_input != 3 {
            return Err(Error::config("n_input", "the agent has exactly 3 sensors"));
        }
        if layers.n_output != 3 {
            return Err(Error::config("n_output", "the agent has exactly 3 actions"));
        }
        if layers.n_hidden == 0 {
            return Err(Error::config("n_hidden", "must be at least 1"));
        }
        let lr = self.controller.learning_rate;
        if !(lr >= 0.0 && lr.is_finite()) {
            return Err(Error::config(
                "learning_rate",
                format!("must be finite and non-negative, got {lr}"),
            ));
        }
        if self.evo.population_size != self.world.n_agents {
            return Err(Error::config(
                "population_size",
                format!(
                    "must equal n_agents ({}) so every genome is evaluated, got {}",
                    self.world.n_agents, self.evo.population_size
                ),
            ));
        }
        for (key, value) in [
            ("n_generations", self.n_generations),
            ("n_runs", self.n_runs),
        ] {
            if value == 0 {
                return Err(Error::config(key, "must be at least 1"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub run_id: usize,
    pub generation: usize,
    pub mode: Mode,
    pub map: MapKind,
    pub best_fitness: u64,
    pub mean_fitness: f64,
}

/// One agent's state after one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub generation: usize,
    pub step: usize,
    pub agent_id: usize,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub energy: u64,
    pub action: Action,
}

/// Which generations to record agent-step traces for.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum TraceFilter {
    #[default]
    Off,
    All,
    Generations(BTreeSet<usize>),
}

impl TraceFilter {
    pub fn includes(&self, generation: usize) -> bool {
        match self {
            TraceFilter::Off => false,
            TraceFilter::All => true,
            TraceFilter::Generations(set) => set.contains(&generation),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationOutcome {
    /// Final energy of each agent, in agent order.
    pub fitnesses: Vec<u64>,
    pub respawns: u64,
    pub self_teach_calls: u64,
    /// Action weights at the end of life, in agent order.
    pub final_action_weights: Vec<NetworkWeights>,
    pub trace: Option<Vec<TraceRecord>>,
}

/// Lives one generation. Self-taught-alone ignores `genomes` and draws
/// fresh N(0, 1) controllers from `rng` instead.
pub fn run_generation(
    genomes: &[Genome],
    config: &ExperimentConfig,
    generation: usize,
    trace: bool,
    rng: &mut ChaCha8Rng,
) -> Result<GenerationOutcome> {
    let world_cfg = &config.world;
    if genomes.len() != world_cfg.n_agents {
        return Err(Error::PopulationMismatch {
            genomes: genomes.len(),
            agents: world_cfg.n_agents,
        });
    }
    let lr = config.controller.learning_rate;
    let controllers = match config.mode {
        Mode::SelfTaughtAlone => (0..world_cfg.n_agents)
            .map(|_| spawn_phenotype(&Genome::random(config.controller.layers, rng), lr))
            .collect::<Result<Vec<_>>>()?,
        Mode::Evo | Mode::EvoSelfTaught => genomes
            .iter()
            .map(|g| spawn_phenotype(g, lr))
            .collect::<Result<Vec<_>>>()?,
    };

    let mut world = init_world(world_cfg, controllers, rng)?;
    let learning = config.mode.learning();
    let mut records = trace.then(|| {
        Vec::with_capacity(config.steps_per_generation * world_cfg.n_agents)
    });
    for step in 0..config.steps_per_generation {
        world.step(learning, rng);
        if let Some(records) = records.as_mut() {
            records.extend(world.agents.iter().zip(world.last_actions()).enumerate().map(
                |(agent_id, (a, &action))| TraceRecord {
                    generation,
                    step,
                    agent_id,
                    x: a.x,
                    y: a.y,
                    heading: a.heading,
                    energy: a.energy,
                    action,
                },
            ));
        }
    }

    Ok(GenerationOutcome {
        fitnesses: world.agents.iter().map(|a| a.energy).collect(),
        respawns: world.respawns,
        self_teach_calls: world.self_teach_calls,
        final_action_weights: world.agents.into_iter().map(|a| a.controller.action).collect(),
        trace: records,
    })
}

/// The random stream for one run.
pub fn run_rng(base_seed: u64, run_id: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(run_id as u64);
    rng
}

pub fn generation_stats(
    config: &ExperimentConfig,
    run_id: usize,
    generation: usize,
    fitnesses: &[u64],
) -> GenerationStats {
    let best = fitnesses.iter().copied().max().unwrap_or(0);
    let mean = if fitnesses.is_empty() {
        0.0
    } else {
        fitnesses.iter().sum::<u64>() as f64 / fitnesses.len() as f64
    };
    GenerationStats {
        run_id,
        generation,
        mode: config.mode,
        map: config.world.map,
        best_fitness: best,
        mean_fitness: mean,
    }
}

/// Stats and sampled traces of one run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunOutput {
    pub stats: Vec<GenerationStats>,
    pub trace: Vec<TraceRecord>,
}

pub fn run_experiment_traced(
    config: &ExperimentConfig,
    run_id: usize,
    filter: &TraceFilter,
) -> Result<RunOutput> {
    config.validate()?;
    let mut rng = run_rng(config.base_seed, run_id);
    let mut genomes: Vec<Genome> = (0..config.evo.population_size)
        .map(|_| Genome::random(config.controller.layers, &mut rng))
        .collect();

    let mut out = RunOutput::default();
    for generation in 0..config.n_generations {
        let outcome = run_generation(
            &genomes,
            config,
            generation,
            filter.includes(generation),
            &mut rng,
        )?;
        out.stats
            .push(generation_stats(config, run_id, generation, &outcome.fitnesses));
        if let Some(trace) = outcome.trace {
            out.trace.extend(trace);
        }
        if config.mode.evolves() {
            genomes = next_generation(&genomes, &outcome.fitnesses, &config.evo, &mut rng)?;
        }
    }
    Ok(out)
}

pub fn run_experiment(config: &ExperimentConfig, run_id: usize) -> Result<Vec<GenerationStats>> {
    Ok(run_experiment_traced(config, run_id, &TraceFilter::Off)?.stats)
}

/// All runs `0..n_runs`, in parallel, returned in (run, generation) order.
pub fn run_replicates(config: &ExperimentConfig) -> Result<Vec<GenerationStats>> {
    config.validate()?;
    let runs = (0..config.n_runs)
        .into_par_iter()
        .map(|run_id| run_experiment(config, run_id))
        .collect::<Result<Vec<_>>>()?;
    Ok(runs.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(mode: Mode) -> ExperimentConfig {
        let mut c = ExperimentConfig::desk().with_mode(mode);
        c.n_generations = 3;
        c.steps_per_generation = 200;
        c.n_runs = 2;
        c
    }

    #[test]
    fn mode_names_roundtrip() {
        for m in Mode::ALL {
            assert_eq!(m.as_str().parse::<Mode>().unwrap(), m);
        }
        assert!("LAMARCK".parse::<Mode>().is_err());
    }

    #[test]
    fn default_schedules() {
        let p = ExperimentConfig::full();
        assert_eq!((p.n_generations, p.steps_per_generation, p.n_runs), (100, 5000, 30));
        let d = ExperimentConfig::desk();
        assert_eq!((d.n_generations, d.steps_per_generation, d.n_runs), (20, 2000, 10));
    }

    #[test]
    fn population_must_match_agents() {
        let mut c = tiny(Mode::Evo);
        c.evo.population_size = 100;
        assert!(matches!(c.validate(), Err(Error::Config { key, .. }) if key == "population_size"));
    }

    #[test]
    fn generation_rejects_wrong_genome_count() {
        let c = tiny(Mode::Evo);
        let mut rng = run_rng(0, 0);
        let genomes = vec![Genome::random(LayerSpec::default(), &mut rng); 3];
        assert!(matches!(
            run_generation(&genomes, &c, 0, false, &mut rng),
            Err(Error::PopulationMismatch { .. })
        ));
    }

    #[test]
    fn zero_steps_means_zero_fitness() {
        let mut c = tiny(Mode::EvoSelfTaught);
        c.steps_per_generation = 0;
        let stats = run_experiment(&c, 0).unwrap();
        assert!(stats.iter().all(|s| s.best_fitness == 0 && s.mean_fitness == 0.0));
    }

    #[test]
    fn one_row_per_generation_and_deterministic() {
        for mode in Mode::ALL {
            let c = tiny(mode);
            let a = run_experiment(&c, 1).unwrap();
            assert_eq!(a.len(), 3);
            assert_eq!(a, run_experiment(&c, 1).unwrap());
            assert!(a.iter().all(|s| s.best_fitness as f64 >= s.mean_fitness));
        }
    }

    #[test]
    fn replicates_concatenate_runs() {
        let c = tiny(Mode::EvoSelfTaught);
        let all = run_replicates(&c).unwrap();
        assert_eq!(all.len(), 6);
        assert_eq!(&all[..3], &run_experiment(&c, 0).unwrap()[..]);
        assert_eq!(&all[3..], &run_experiment(&c, 1).unwrap()[..]);
    }

    #[test]
    fn trace_filter_selects_generations() {
        let c = tiny(Mode::Evo);
        let filter = TraceFilter::Generations([1].into_iter().collect());
        let out = run_experiment_traced(&c, 0, &filter).unwrap();
        assert_eq!(out.trace.len(), 200 * 20);
        assert!(out.trace.iter().all(|r| r.generation == 1));
        assert_eq!(out.stats, run_experiment(&c, 0).unwrap());
    }
}
