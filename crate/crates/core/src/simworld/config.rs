//! Scenario configuration and its `key = value` text form.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ordering::Tactic;

use super::world::Cell;

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub width: i32,
    pub height: i32,
    pub obstacle_seed: u64,
    /// Probability that a lattice tile holds a pillar.
    pub obstacle_density: f64,
    /// Explicit goals; when empty, `n_goals` are drawn from the obstacle seed.
    pub goals: Vec<Cell>,
    pub n_goals: usize,
    /// Preferred Manhattan distance between consecutive drawn goals.
    pub goal_spacing: i32,
    /// World distance of one lattice step.
    pub step_length: f64,
    pub odom_sigmas: [f64; 3],
    pub lc_sigmas: [f64; 3],
    pub lc_radius: f64,
    pub lc_min_gap: usize,
    /// Minimum number of poses between consecutive loop closures.
    pub lc_spacing: usize,
    /// Candidates per planning session.
    pub k: usize,
    pub horizon: usize,
    /// Seed of the measurement noise.
    pub seed: u64,
    pub tactics: Vec<Tactic>,
    pub keep_order: bool,
    pub multi_hyp: bool,
    pub branch_k: usize,
    pub p_detect: f64,
    pub node_cap: usize,
    /// Wall-clock timings make logs run-dependent, so they are opt-in.
    pub record_wall_clock: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            width: 20,
            height: 30,
            obstacle_seed: 42,
            obstacle_density: 0.8,
            goals: Vec::new(),
            n_goals: 8,
            goal_spacing: 10,
            step_length: 1.0,
            odom_sigmas: [0.05, 0.05, 0.02],
            lc_sigmas: [0.1, 0.1, 0.05],
            lc_radius: 1.2,
            lc_min_gap: 10,
            lc_spacing: 15,
            k: 10,
            horizon: 2,
            seed: 42,
            tactics: Tactic::standard_set(),
            keep_order: true,
            multi_hyp: false,
            branch_k: 2,
            p_detect: 0.8,
            node_cap: 20_000,
            record_wall_clock: false,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("{key}: cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::InvalidConfig(format!("{key}: expected a boolean, got {value:?}"))),
    }
}

fn parse_triple(key: &str, value: &str) -> Result<[f64; 3]> {
    let parts: Vec<f64> = value
        .split(',')
        .map(|p| parse(key, p.trim()))
        .collect::<Result<_>>()?;
    parts
        .try_into()
        .map_err(|_| Error::InvalidConfig(format!("{key}: expected three comma-separated values")))
}

/// `x:y` pairs separated by `;`, e.g. `3:4; 10:2`.
fn parse_goals(key: &str, value: &str) -> Result<Vec<Cell>> {
    value
        .split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            let (x, y) = s
                .split_once(':')
                .ok_or_else(|| Error::InvalidConfig(format!("{key}: expected x:y, got {s:?}")))?;
            Ok((parse(key, x.trim())?, parse(key, y.trim())?))
        })
        .collect()
}

pub fn parse_tactics(value: &str) -> Result<Vec<Tactic>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<Tactic>())
        .collect()
}

impl ScenarioConfig {
    /// Sets one field from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "width" => self.width = parse(key, value)?,
            "height" => self.height = parse(key, value)?,
            "obstacle_seed" => self.obstacle_seed = parse(key, value)?,
            "obstacle_density" => self.obstacle_density = parse(key, value)?,
            "goals" => self.goals = parse_goals(key, value)?,
            "n_goals" => self.n_goals = parse(key, value)?,
            "goal_spacing" => self.goal_spacing = parse(key, value)?,
            "step_length" => self.step_length = parse(key, value)?,
            "odom_sigmas" => self.odom_sigmas = parse_triple(key, value)?,
            "lc_sigmas" => self.lc_sigmas = parse_triple(key, value)?,
            "lc_radius" => self.lc_radius = parse(key, value)?,
            "lc_min_gap" => self.lc_min_gap = parse(key, value)?,
            "lc_spacing" => self.lc_spacing = parse(key, value)?,
            "k" | "candidates_per_session" => self.k = parse(key, value)?,
            "horizon" => self.horizon = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "tactics" => self.tactics = parse_tactics(value)?,
            "keep_order" => self.keep_order = parse_bool(key, value)?,
            "multi_hyp" => self.multi_hyp = parse_bool(key, value)?,
            "branch_k" => self.branch_k = parse(key, value)?,
            "p_detect" => self.p_detect = parse(key, value)?,
            "node_cap" => self.node_cap = parse(key, value)?,
            "record_wall_clock" => self.record_wall_clock = parse_bool(key, value)?,
            _ => return Err(Error::InvalidConfig(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of the defaults. Blank lines and
    /// lines starting with `#` are skipped.
    pub fn from_kv(text: &str) -> Result<Self> {
        let mut cfg = ScenarioConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(Error::Parse {
                line: n + 1,
                message: "expected key = value".into(),
            })?;
            cfg.set(k.trim(), v).map_err(|e| Error::Parse {
                line: n + 1,
                message: e.to_string(),
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.width < 1 || self.height < 1 {
            return bad("grid dimensions must be positive");
        }
        if self.k < 1 {
            return bad("k must be at least 1");
        }
        if self.horizon < 1 || self.branch_k < 1 {
            return bad("horizon and branch_k must be at least 1");
        }
        if self.tactics.is_empty() {
            return bad("at least one tactic is required");
        }
        let positive = |xs: &[f64]| xs.iter().all(|&x| x > 0.0 && x.is_finite());
        if !positive(&self.odom_sigmas) || !positive(&self.lc_sigmas) || !positive(&[self.lc_radius, self.step_length]) {
            return bad("sigmas, lc_radius and step_length must be positive");
        }
        if !(0.0..=1.0).contains(&self.p_detect) || !(0.0..=1.0).contains(&self.obstacle_density) {
            return bad("probabilities must lie in [0, 1]");
        }
        if let Some(g) = self.goals.iter().find(|g| g.0 < 0 || g.1 < 0 || g.0 >= self.width || g.1 >= self.height) {
            return Err(Error::InvalidConfig(format!("goal {g:?} lies outside the grid")));
        }
        Ok(())
    }
}
