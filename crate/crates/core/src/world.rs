//! Toroidal foraging arena.
//!
//! Coordinates are y-down: heading 0 points along +x and headings grow
//! clockwise on screen, so a heading `h` moves an agent by `(cos h, sin h)`.
//! Bearings to food use the same convention, which puts the "right" sensor
//! band at 15..45 degrees clockwise of the heading.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neural::{Action, SelfTaughtController, SensoryInput};

/// Food layout. Both maps start the agents in the top-left quarter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MapKind {
    /// Food in the top-right quarter, in line with the initial heading.
    A,
    /// Food in the bottom-right quarter.
    B,
}

impl MapKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MapKind::A => "A",
            MapKind::B => "B",
        }
    }
}

impl std::str::FromStr for MapKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "A" | "a" => Ok(MapKind::A),
            "B" | "b" => Ok(MapKind::B),
            other => Err(format!("expected A or B, got `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    pub width: f64,
    pub height: f64,
    pub n_agents: usize,
    pub n_food: usize,
    pub body_size: f64,
    /// Sensing range, center to center.
    pub vision_radius: f64,
    /// Collision range for eating, center to center.
    pub eat_distance: f64,
    pub base_speed: f64,
    /// Degrees turned by each turning action.
    pub turn_angle: f64,
    pub map: MapKind,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            width: 640.0,
            height: 640.0,
            n_agents: 20,
            n_food: 50,
            body_size: 10.0,
            vision_radius: 40.0,
            eat_distance: 10.0,
            base_speed: 1.0,
            turn_angle: 9.0,
            map: MapKind::A,
        }
    }
}

impl WorldConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("width", self.width),
            ("height", self.height),
            ("body_size", self.body_size),
            ("vision_radius", self.vision_radius),
            ("eat_distance", self.eat_distance),
            ("base_speed", self.base_speed),
            ("turn_angle", self.turn_angle),
        ];
        for (key, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::config(key, format!("must be positive, got {value}")));
            }
        }
        if self.n_agents == 0 {
            return Err(Error::config("n_agents", "must be at least 1"));
        }
        if self.n_food == 0 {
            return Err(Error::config("n_food", "must be at least 1"));
        }
        Ok(())
    }

    /// Agents are born within this distance of `(width/4, height/4)`.
    pub fn spawn_radius(&self) -> f64 {
        4.0 * self.body_size
    }

    pub fn spawn_center(&self) -> Point {
        Point::new(self.width / 4.0, self.height / 4.0)
    }

    pub fn food_region(&self) -> FoodRegion {
        FoodRegion::for_map(self.map, self.width, self.height)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Open rectangle in which food spawns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoodRegion {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl FoodRegion {
    pub fn for_map(map: MapKind, width: f64, height: f64) -> Self {
        let (y_lo, y_hi) = match map {
            MapKind::A => (1.0, 3.0),
            MapKind::B => (5.0, 7.0),
        };
        Self {
            x_min: width * 5.0 / 8.0,
            x_max: width * 7.0 / 8.0,
            y_min: height * y_lo / 8.0,
            y_max: height * y_hi / 8.0,
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x > self.x_min && p.x < self.x_max && p.y > self.y_min && p.y < self.y_max
    }

    /// Uniform point strictly inside the region.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        loop {
            let p = Point::new(
                rng.random_range(self.x_min..self.x_max),
                rng.random_range(self.y_min..self.y_max),
            );
            if self.contains(p) {
                return p;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub x: f64,
    pub y: f64,
    /// Degrees in `[0, 360)`.
    pub heading: f64,
    /// Food eaten this generation.
    pub energy: u64,
    pub controller: SelfTaughtController,
}

impl AgentState {
    pub fn new(position: Point, controller: SelfTaughtController) -> Self {
        Self {
            x: position.x,
            y: position.y,
            heading: 0.0,
            energy: 0,
            controller,
        }
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

fn wrap_axis(v: f64, extent: f64) -> f64 {
    let w = v.rem_euclid(extent);
    // rem_euclid rounds tiny negatives up to `extent`
    if w >= extent {
        0.0
    } else {
        w
    }
}

pub fn wrap_position(x: f64, y: f64, config: &WorldConfig) -> (f64, f64) {
    (wrap_axis(x, config.width), wrap_axis(y, config.height))
}

pub fn normalize_heading(degrees: f64) -> f64 {
    wrap_axis(degrees, 360.0)
}

fn shortest_axis(d: f64, extent: f64) -> f64 {
    let half = extent / 2.0;
    // both endpoints are normally wrapped already, so one shift suffices
    let d = if (-extent..extent).contains(&d) {
        d
    } else {
        d.rem_euclid(extent)
    };
    if d >= half {
        d - extent
    } else if d < -half {
        d + extent
    } else {
        d
    }
}

/// Shortest displacement from `from` to `to` on the torus.
pub fn toroidal_delta(from: Point, to: Point, config: &WorldConfig) -> (f64, f64) {
    (
        shortest_axis(to.x - from.x, config.width),
        shortest_axis(to.y - from.y, config.height),
    )
}

pub fn toroidal_distance(from: Point, to: Point, config: &WorldConfig) -> f64 {
    toroidal_distance_sq(from, to, config).sqrt()
}

pub fn toroidal_distance_sq(from: Point, to: Point, config: &WorldConfig) -> f64 {
    let (dx, dy) = toroidal_delta(from, to, config);
    dx * dx + dy * dy
}

/// Clockwise angle in `[0, 360)` from the agent's heading to `p`.
/// Coincident points have bearing 0.
pub fn relative_bearing(agent: &AgentState, p: Point, config: &WorldConfig) -> f64 {
    let (dx, dy) = toroidal_delta(agent.position(), p, config);
    if dx == 0.0 && dy == 0.0 {
        return 0.0;
    }
    normalize_heading(dy.atan2(dx).to_degrees() - agent.heading)
}

/// Maps a bearing onto the three sensor bands. Band edges detect nothing.
#[allow(clippy::manual_range_contains)]
pub fn classify_bearing(theta: f64) -> SensoryInput {
    if theta < 15.0 || theta > 345.0 {
        SensoryInput::FRONT
    } else if theta > 15.0 && theta < 45.0 {
        SensoryInput::RIGHT
    } else if theta > 315.0 && theta < 345.0 {
        SensoryInput::LEFT
    } else {
        SensoryInput::NONE
    }
}

/// Index of the nearest food within vision range; lowest index wins ties.
pub fn nearest_visible_food(agent: &AgentState, foods: &[Point], config: &WorldConfig) -> Option<usize> {
    let here = agent.position();
    let range_sq = config.vision_radius * config.vision_radius;
    let mut best: Option<(usize, f64)> = None;
    for (i, &food) in foods.iter().enumerate() {
        let d = toroidal_distance_sq(here, food, config);
        if d <= range_sq && best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i)
}

pub fn sense(agent: &AgentState, foods: &[Point], config: &WorldConfig) -> SensoryInput {
    match nearest_visible_food(agent, foods, config) {
        Some(i) => classify_bearing(relative_bearing(agent, foods[i], config)),
        None => SensoryInput::NONE,
    }
}

/// Turns (if asked) and then advances along the new heading.
pub fn apply_action(agent: &mut AgentState, action: Action, config: &WorldConfig) {
    let distance = match action {
        Action::TurnLeft => {
            agent.heading = normalize_heading(agent.heading - config.turn_angle);
            config.base_speed
        }
        Action::TurnRight => {
            agent.heading = normalize_heading(agent.heading + config.turn_angle);
            config.base_speed
        }
        Action::Forward => 2.0 * config.base_speed,
    };
    let rad = agent.heading.to_radians();
    let (x, y) = wrap_position(
        agent.x + distance * rad.cos(),
        agent.y + distance * rad.sin(),
        config,
    );
    agent.x = x;
    agent.y = y;
}

/// Consumes every food within eating range of `at`, respawning each one
/// elsewhere in the region. Returns the number eaten.
pub fn eat_foods<R: Rng + ?Sized>(
    at: Point,
    foods: &mut [Point],
    region: &FoodRegion,
    config: &WorldConfig,
    rng: &mut R,
) -> u64 {
    let mut eaten = 0;
    let range_sq = config.eat_distance * config.eat_distance;
    for food in foods.iter_mut() {
        if toroidal_distance_sq(at, *food, config) <= range_sq {
            let old = *food;
            *food = loop {
                let p = region.sample(rng);
                if p != old {
                    break p;
                }
            };
            eaten += 1;
        }
    }
    eaten
}

/// Whether controllers learn while they act.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Learning {
    Off,
    SelfTaught,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub config: WorldConfig,
    pub agents: Vec<AgentState>,
    pub foods: Vec<Point>,
    pub region: FoodRegion,
    /// Food respawns since the world was created.
    pub respawns: u64,
    /// Self-teaching updates since the world was created.
    pub self_teach_calls: u64,
    last_actions: Vec<Action>,
}

/// Uniform point in the disc around the spawn center.
fn sample_spawn<R: Rng + ?Sized>(config: &WorldConfig, rng: &mut R) -> Point {
    let c = config.spawn_center();
    let r = config.spawn_radius();
    loop {
        let dx = rng.random_range(-r..r);
        let dy = rng.random_range(-r..r);
        if dx.hypot(dy) <= r {
            let (x, y) = wrap_position(c.x + dx, c.y + dy, config);
            return Point::new(x, y);
        }
    }
}

pub fn init_world<R: Rng + ?Sized>(
    config: &WorldConfig,
    controllers: Vec<SelfTaughtController>,
    rng: &mut R,
) -> Result<World> {
    config.validate()?;
    if controllers.len() != config.n_agents {
        return Err(Error::PopulationMismatch {
            genomes: controllers.len(),
            agents: config.n_agents,
        });
    }
    let agents: Vec<AgentState> = controllers
        .into_iter()
        .map(|c| AgentState::new(sample_spawn(config, rng), c))
        .collect();
    let region = config.food_region();
    let foods = (0..config.n_food).map(|_| region.sample(rng)).collect();
    Ok(World {
        config: config.clone(),
        last_actions: vec![Action::Forward; agents.len()],
        agents,
        foods,
        region,
        respawns: 0,
        self_teach_calls: 0,
    })
}

impl World {
    /// Lets agent `index` eat whatever is in range.
    pub fn check_eat<R: Rng + ?Sized>(&mut self, index: usize, rng: &mut R) -> u64 {
        let at = self.agents[index].position();
        let eaten = eat_foods(at, &mut self.foods, &self.region, &self.config, rng);
        self.agents[index].energy += eaten;
        self.respawns += eaten;
        eaten
    }

    /// Advances every agent once, in index order: sense, act, move, eat,
    /// and with learning on, one self-teaching step on this step's input.
    /// Respawned food is visible to agents later in the same step.
    /// Returns the food eaten during the step.
    pub fn step<R: Rng + ?Sized>(&mut self, learning: Learning, rng: &mut R) -> u64 {
        let mut eaten = 0;
        for i in 0..self.agents.len() {
            let input = sense(&self.agents[i], &self.foods, &self.config);
            let action = self.agents[i].controller.act(input);
            apply_action(&mut self.agents[i], action, &self.config);
            eaten += self.check_eat(i, rng);
            if learning == Learning::SelfTaught {
                self.agents[i].controller.self_teach(input);
                self.self_teach_calls += 1;
            }
            self.last_actions[i] = action;
        }
        eaten
    }

    /// Actions taken in the most recent step, by agent index.
    pub fn last_actions(&self) -> &[Action] {
        &self.last_actions
    }

    pub fn total_energy(&self) -> u64 {
        self.agents.iter().map(|a| a.energy).sum()
    }
}
