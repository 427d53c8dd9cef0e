//! Genetic operators over innate weights.
//!
//! Reproduction is Darwinian: a genome is only ever copied into a
//! phenotype, never written back, so whatever an agent learns dies with it.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neural::{init_weights, LayerSpec, NetworkWeights, SelfTaughtController};

/// Innate weights of both modules.
///
/// Under plain evolution only `action` drives behavior; `reinforcement` is
/// still carried and varied so that every regime shares one genome layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Genome {
    pub action: NetworkWeights,
    pub reinforcement: NetworkWeights,
}

impl Genome {
    pub fn new(action: NetworkWeights, reinforcement: NetworkWeights) -> Result<Self> {
        if action.spec() != reinforcement.spec() {
            return Err(Error::InvalidGenome("module layer sizes differ".into()));
        }
        Ok(Self {
            action,
            reinforcement,
        })
    }

    /// Fresh N(0, 1) genome: action weights first, then reinforcement.
    pub fn random<R: Rng + ?Sized>(spec: LayerSpec, rng: &mut R) -> Self {
        let action = init_weights(spec, rng);
        let reinforcement = init_weights(spec, rng);
        Self {
            action,
            reinforcement,
        }
    }

    pub fn spec(&self) -> LayerSpec {
        self.action.spec()
    }

    /// Every gene in canonical order.
    pub fn genes(&self) -> impl Iterator<Item = &f64> {
        self.action.iter().chain(self.reinforcement.iter())
    }

    pub fn genes_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.action.iter_mut().chain(self.reinforcement.iter_mut())
    }

    pub fn len(&self) -> usize {
        self.action.len() + self.reinforcement.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionParams {
    pub population_size: usize,
    /// Per-gene probability of a perturbation.
    pub mutation_rate: f64,
    /// Perturbations are uniform in `[-amplitude, amplitude]`.
    pub mutation_amplitude: f64,
}

impl Default for EvolutionParams {
    fn default() -> Self {
        Self {
            population_size: 20,
            mutation_rate: 0.05,
            mutation_amplitude: 0.05,
        }
    }
}

impl EvolutionParams {
    pub fn validate(&self) -> Result<()> {
        if self.population_size == 0 {
            return Err(Error::config("population_size", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return Err(Error::config(
                "mutation_rate",
                format!("must lie in [0, 1], got {}", self.mutation_rate),
            ));
        }
        if !(self.mutation_amplitude >= 0.0 && self.mutation_amplitude.is_finite()) {
            return Err(Error::config(
                "mutation_amplitude",
                format!("must be finite and non-negative, got {}", self.mutation_amplitude),
            ));
        }
        Ok(())
    }
}

/// Copies the innate weights into a live controller.
pub fn spawn_phenotype(genome: &Genome, learning_rate: f64) -> Result<SelfTaughtController> {
    SelfTaughtController::new(
        genome.action.clone(),
        genome.reinforcement.clone(),
        learning_rate,
    )
}

fn roulette<R: Rng + ?Sized>(fitnesses: &[u64], total: u64, rng: &mut R) -> usize {
    if total == 0 {
        return rng.random_range(0..fitnesses.len());
    }
    let mut ticket = rng.random_range(0..total);
    for (i, &f) in fitnesses.iter().enumerate() {
        if ticket < f {
            return i;
        }
        ticket -= f;
    }
    unreachable!("ticket drawn below the fitness total")
}

/// Two independent fitness-proportionate draws, with replacement.
/// An all-zero population is sampled uniformly.
pub fn select_parent_pair<R: Rng + ?Sized>(fitnesses: &[u64], rng: &mut R) -> (usize, usize) {
    assert!(!fitnesses.is_empty(), "cannot select from an empty population");
    let total: u64 = fitnesses.iter().sum();
    let first = roulette(fitnesses, total, rng);
    let second = roulette(fitnesses, total, rng);
    (first, second)
}

/// Uniform crossover: each gene comes from the fitter parent when a fresh
/// uniform draw exceeds 0.5, otherwise from the other one. `p1` counts as
/// fitter on ties.
pub fn crossover<R: Rng + ?Sized>(
    p1: &Genome,
    f1: u64,
    p2: &Genome,
    f2: u64,
    rng: &mut R,
) -> Result<Genome> {
    if p1.spec() != p2.spec() || p1.reinforcement.spec() != p2.reinforcement.spec() {
        return Err(Error::InvalidGenome("parents have different shapes".into()));
    }
    let (fitter, other) = if f1 >= f2 { (p1, p2) } else { (p2, p1) };
    let mut child = fitter.clone();
    for (gene, &alt) in child.genes_mut().zip(other.genes()) {
        let u: f64 = rng.random();
        if u <= 0.5 {
            *gene = alt;
        }
    }
    Ok(child)
}

pub fn mutate<R: Rng + ?Sized>(genome: &mut Genome, params: &EvolutionParams, rng: &mut R) {
    let amp = params.mutation_amplitude;
    for gene in genome.genes_mut() {
        let u: f64 = rng.random();
        if u < params.mutation_rate && amp > 0.0 {
            *gene += rng.random_range(-amp..=amp);
        }
    }
}

/// Breeds a full replacement population with no elitism.
pub fn next_generation<R: Rng + ?Sized>(
    genomes: &[Genome],
    fitnesses: &[u64],
    params: &EvolutionParams,
    rng: &mut R,
) -> Result<Vec<Genome>> {
    if genomes.len() != fitnesses.len() || genomes.is_empty() {
        return Err(Error::InvalidGenome(format!(
            "{} genomes with {} fitness values",
            genomes.len(),
            fitnesses.len()
        )));
    }
    (0..params.population_size)
        .map(|_| {
            let (i, j) = select_parent_pair(fitnesses, rng);
            let mut child = crossover(&genomes[i], fitnesses[i], &genomes[j], fitnesses[j], rng)?;
            mutate(&mut child, params, rng);
            Ok(child)
        })
        .collect()
}
