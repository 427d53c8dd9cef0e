//! Flat `key = value` experiment configuration.
//!
//! One assignment per line; `#` starts a comment; values may be quoted.
//! Unspecified keys keep their defaults. The special key `profile`
//! (`full` or `desk`) picks the base schedule before any other key is
//! applied, wherever it appears. `population_size` follows `n_agents`
//! unless given explicitly.
//!
//! | key | default |
//! |-----|---------|
//! | `mode` | `EVO` (`EVO`, `EVO_SELF_TAUGHT`, `SELF_TAUGHT_ALONE`) |
//! | `map` | `A` |
//! | `n_generations` | 100 |
//! | `steps_per_generation` | 5000 |
//! | `n_runs` | 30 |
//! | `base_seed` | 0 |
//! | `width`, `height` | 640 |
//! | `n_agents` | 20 |
//! | `n_food` | 50 |
//! | `body_size` | 10 |
//! | `vision_radius` | 40 |
//! | `eat_distance` | 10 |
//! | `base_speed` | 1 |
//! | `turn_angle` | 9 |
//! | `population_size` | `n_agents` |
//! | `mutation_rate` | 0.05 |
//! | `mutation_amplitude` | 0.05 |
//! | `learning_rate` | 0.01 |
//! | `n_input`, `n_hidden`, `n_output` | 3, 10, 3 |

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::experiment::{ExperimentConfig, Mode};
use crate::world::MapKind;

/// Every accepted key except `profile`, in echo order.
pub const KEYS: &[&str] = &[
    "mode",
    "map",
    "n_generations",
    "steps_per_generation",
    "n_runs",
    "base_seed",
    "width",
    "height",
    "n_agents",
    "n_food",
    "body_size",
    "vision_radius",
    "eat_distance",
    "base_speed",
    "turn_angle",
    "population_size",
    "mutation_rate",
    "mutation_amplitude",
    "learning_rate",
    "n_input",
    "n_hidden",
    "n_output",
];

fn value<T: FromStr>(key: &str, raw: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    raw.parse::<T>()
        .map_err(|e| Error::config(key, format!("cannot parse `{raw}`: {e}")))
}

fn finite(key: &str, raw: &str) -> Result<f64> {
    let v: f64 = value(key, raw)?;
    if !v.is_finite() {
        return Err(Error::config(key, format!("`{raw}` is not a finite number")));
    }
    Ok(v)
}

fn unquote(raw: &str) -> &str {
    let raw = raw.trim();
    for q in ['"', '\''] {
        if let Some(inner) = raw.strip_prefix(q).and_then(|r| r.strip_suffix(q)) {
            return inner;
        }
    }
    raw
}

/// Splits the document into key/value pairs, rejecting malformed lines and
/// duplicates.
fn assignments(text: &str) -> Result<BTreeMap<String, (usize, String)>> {
    let mut out = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = match line.find('#') {
            Some(i) => &line[..i],
            None => line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, raw)) = line.split_once('=') else {
            return Err(Error::config(
                line,
                format!("line {}: expected `key = value`", lineno + 1),
            ));
        };
        let key = key.trim().to_string();
        if key.is_empty() {
            return Err(Error::config("", format!("line {}: missing key", lineno + 1)));
        }
        if out.contains_key(&key) {
            return Err(Error::config(key, "given more than once"));
        }
        out.insert(key, (lineno, unquote(raw).to_string()));
    }
    Ok(out)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut pairs = assignments(text)?;

    let mut cfg = match pairs.remove("profile").map(|(_, v)| v) {
        None => ExperimentConfig::full(),
        Some(p) if p == "full" => ExperimentConfig::full(),
        Some(p) if p == "desk" => ExperimentConfig::desk(),
        Some(p) => return Err(Error::config("profile", format!("expected full or desk, got `{p}`"))),
    };

    let mut explicit_population = false;
    // apply in document order so errors point at the first bad line
    let mut ordered: Vec<_> = pairs.into_iter().collect();
    ordered.sort_by_key(|(_, (line, _))| *line);
    for (key, (_, raw)) in ordered {
        let k = key.as_str();
        let raw = raw.as_str();
        match k {
            "mode" => cfg.mode = value::<Mode>(k, raw)?,
            "map" => cfg.world.map = value::<MapKind>(k, raw)?,
            "n_generations" => cfg.n_generations = value(k, raw)?,
            "steps_per_generation" => cfg.steps_per_generation = value(k, raw)?,
            "n_runs" => cfg.n_runs = value(k, raw)?,
            "base_seed" => cfg.base_seed = value(k, raw)?,
            "width" => cfg.world.width = finite(k, raw)?,
            "height" => cfg.world.height = finite(k, raw)?,
            "n_agents" => cfg.world.n_agents = value(k, raw)?,
            "n_food" => cfg.world.n_food = value(k, raw)?,
            "body_size" => cfg.world.body_size = finite(k, raw)?,
            "vision_radius" => cfg.world.vision_radius = finite(k, raw)?,
            "eat_distance" => cfg.world.eat_distance = finite(k, raw)?,
            "base_speed" => cfg.world.base_speed = finite(k, raw)?,
            "turn_angle" => cfg.world.turn_angle = finite(k, raw)?,
            "population_size" => {
                cfg.evo.population_size = value(k, raw)?;
                explicit_population = true;
            }
            "mutation_rate" => cfg.evo.mutation_rate = finite(k, raw)?,
            "mutation_amplitude" => cfg.evo.mutation_amplitude = finite(k, raw)?,
            "learning_rate" => cfg.controller.learning_rate = finite(k, raw)?,
            "n_input" => cfg.controller.layers.n_input = value(k, raw)?,
            "n_hidden" => cfg.controller.layers.n_hidden = value(k, raw)?,
            "n_output" => cfg.controller.layers.n_output = value(k, raw)?,
            _ => return Err(Error::config(k, "unknown key")),
        }
    }
    if !explicit_population {
        cfg.evo.population_size = cfg.world.n_agents;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// The effective configuration as a document that parses back to `cfg`.
pub fn echo_config(cfg: &ExperimentConfig) -> String {
    let mut out = String::new();
    for &key in KEYS {
        let v = match key {
            "mode" => cfg.mode.as_str().to_string(),
            "map" => cfg.world.map.as_str().to_string(),
            "n_generations" => cfg.n_generations.to_string(),
            "steps_per_generation" => cfg.steps_per_generation.to_string(),
            "n_runs" => cfg.n_runs.to_string(),
            "base_seed" => cfg.base_seed.to_string(),
            "width" => cfg.world.width.to_string(),
            "height" => cfg.world.height.to_string(),
            "n_agents" => cfg.world.n_agents.to_string(),
            "n_food" => cfg.world.n_food.to_string(),
            "body_size" => cfg.world.body_size.to_string(),
            "vision_radius" => cfg.world.vision_radius.to_string(),
            "eat_distance" => cfg.world.eat_distance.to_string(),
            "base_speed" => cfg.world.base_speed.to_string(),
            "turn_angle" => cfg.world.turn_angle.to_string(),
            "population_size" => cfg.evo.population_size.to_string(),
            "mutation_rate" => cfg.evo.mutation_rate.to_string(),
            "mutation_amplitude" => cfg.evo.mutation_amplitude.to_string(),
            "learning_rate" => cfg.controller.learning_rate.to_string(),
            "n_input" => cfg.controller.layers.n_input.to_string(),
            "n_hidden" => cfg.controller.layers.n_hidden.to_string(),
            "n_output" => cfg.controller.layers.n_output.to_string(),
            _ => unreachable!(),
        };
        let _ = writeln!(out, "{key} = {v}");
    }
    out
}
