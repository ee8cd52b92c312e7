//! Lattice worlds and candidate path enumeration.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type Cell = (i32, i32);

/// Tiles of this period hold one square pillar each; the row and column of
/// every tile boundary is always free, so the free space is connected.
pub const PILLAR_PERIOD: i32 = 4;

/// Maximum shared-edge fraction between two accepted candidate paths.
pub const MAX_OVERLAP: f64 = 0.6;

/// 4-connected occupancy lattice.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct World {
    width: i32,
    height: i32,
    blocked: Vec<bool>,
}

impl World {
    pub fn open(width: i32, height: i32) -> Self {
        assert!(width > 0 && height > 0, "grid must be non-empty");
        World {
            width,
            height,
            blocked: vec![false; (width * height) as usize],
        }
    }

    /// Pillar lattice: each tile's interior square is blocked with
    /// probability `density`.
    pub fn generate(width: i32, height: i32, density: f64, seed: u64) -> Self {
        let mut w = World::open(width, height);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tiles = |n: i32| (n + PILLAR_PERIOD - 1) / PILLAR_PERIOD;
        for ty in 0..tiles(height) {
            for tx in 0..tiles(width) {
                if !rng.random_bool(density.clamp(0.0, 1.0)) {
                    continue;
                }
                for dy in 1..PILLAR_PERIOD {
                    for dx in 1..PILLAR_PERIOD {
                        let c = (tx * PILLAR_PERIOD + dx, ty * PILLAR_PERIOD + dy);
                        if w.in_bounds(c) {
                            w.set_blocked(c, true);
                        }
                    }
                }
            }
        }
        w
    }

    /// Parses rows of `.` (free) and `#` (blocked); the first line is `y = 0`.
    pub fn from_ascii(text: &str) -> Result<Self> {
        let rows: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        let width = rows.first().map_or(0, |r| r.len()) as i32;
        if width == 0 || rows.iter().any(|r| r.len() as i32 != width) {
            return Err(Error::InvalidConfig("ragged or empty world".into()));
        }
        let mut w = World::open(width, rows.len() as i32);
        for (y, row) in rows.iter().enumerate() {
            for (x, ch) in row.chars().enumerate() {
                match ch {
                    '.' => {}
                    '#' => w.set_blocked((x as i32, y as i32), true),
                    other => return Err(Error::InvalidConfig(format!("unknown world cell {other:?}"))),
                }
            }
        }
        Ok(w)
    }

    pub fn width(&self) -> i32 {
        self.width
    }

    pub fn height(&self) -> i32 {
        self.height
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.0 >= 0 && c.1 >= 0 && c.0 < self.width && c.1 < self.height
    }

    fn index(&self, c: Cell) -> usize {
        (c.1 * self.width + c.0) as usize
    }

    fn cell(&self, i: usize) -> Cell {
        (i as i32 % self.width, i as i32 / self.width)
    }

    fn set_blocked(&mut self, c: Cell, b: bool) {
        let i = self.index(c);
        self.blocked[i] = b;
    }

    pub fn is_free(&self, c: Cell) -> bool {
        self.in_bounds(c) && !self.blocked[self.index(c)]
    }

    pub fn free_cells(&self) -> Vec<Cell> {
        (0..self.blocked.len()).map(|i| self.cell(i)).filter(|&c| self.is_free(c)).collect()
    }

    /// Free 4-neighbours in a fixed order: +x, +y, −x, −y.
    pub fn neighbors(&self, c: Cell) -> impl Iterator<Item = Cell> + '_ {
        [(1, 0), (0, 1), (-1, 0), (0, -1)]
            .into_iter()
            .map(move |(dx, dy)| (c.0 + dx, c.1 + dy))
            .filter(|&n| self.is_free(n))
    }

    /// Free cells reachable from `start`.
    pub fn reachable(&self, start: Cell) -> BTreeSet<Cell> {
        let mut seen = BTreeSet::new();
        if !self.is_free(start) {
            return seen;
        }
        let mut queue = VecDeque::from([start]);
        seen.insert(start);
        while let Some(c) = queue.pop_front() {
            for n in self.neighbors(c) {
                if seen.insert(n) {
                    queue.push_back(n);
                }
            }
        }
        seen
    }

    /// Draws `count` goals from the free space reachable from `start`,
    /// preferring goals at least `spacing` steps (Manhattan) from their
    /// predecessor.
    pub fn draw_goals(&self, start: Cell, count: usize, spacing: i32, seed: u64) -> Vec<Cell> {
        let pool: Vec<Cell> = self.reachable(start).into_iter().filter(|&c| c != start).collect();
        if pool.is_empty() {
            return Vec::new();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut goals = Vec::with_capacity(count);
        let mut prev = start;
        for _ in 0..count {
            let far: Vec<Cell> = pool
                .iter()
                .copied()
                .filter(|&c| c != prev && manhattan(c, prev) >= spacing)
                .collect();
            let choices = if far.is_empty() { &pool } else { &far };
            let g = choices[rng.random_range(0..choices.len())];
            goals.push(g);
            prev = g;
        }
        goals
    }
}

pub fn manhattan(a: Cell, b: Cell) -> i32 {
    (a.0 - b.0).abs() + (a.1 - b.1).abs()
}

type Edge = (Cell, Cell);

fn edge(a: Cell, b: Cell) -> Edge {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

fn edges_of(path: &[Cell]) -> BTreeSet<Edge> {
    path.windows(2).map(|w| edge(w[0], w[1])).collect()
}

/// Shared-edge count relative to the shorter path.
pub fn overlap(a: &[Cell], b: &[Cell]) -> f64 {
    let (ea, eb) = (edges_of(a), edges_of(b));
    let shorter = ea.len().min(eb.len());
    if shorter == 0 {
        return 0.0;
    }
    ea.intersection(&eb).count() as f64 / shorter as f64
}

fn dijkstra(world: &World, start: Cell, goal: Cell, weight: &dyn Fn(Edge) -> u64) -> Option<Vec<Cell>> {
    let n = world.blocked.len();
    let mut dist = vec![u64::MAX; n];
    let mut prev = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    dist[world.index(start)] = 0;
    heap.push(Reverse((0u64, world.index(start))));
    while let Some(Reverse((d, i))) = heap.pop() {
        if d > dist[i] {
            continue;
        }
        let c = world.cell(i);
        if c == goal {
            break;
        }
        for nb in world.neighbors(c) {
            let j = world.index(nb);
            let nd = d + weight(edge(c, nb));
            if nd < dist[j] {
                dist[j] = nd;
                prev[j] = i;
                heap.push(Reverse((nd, j)));
            }
        }
    }
    let g = world.index(goal);
    if dist[g] == u64::MAX {
        return None;
    }
    let mut path = vec![goal];
    let mut i = g;
    while prev[i] != usize::MAX {
        i = prev[i];
        path.push(world.cell(i));
    }
    path.reverse();
    Some(path)
}

/// Up to `k` loopless paths from `start` to `goal`, shortest first, with
/// pairwise overlap at most [`MAX_OVERLAP`].
///
/// Paths come from repeated shortest-path searches in which every edge of a
/// path already found gets its weight doubled.
pub fn candidate_paths(world: &World, start: Cell, goal: Cell, k: usize) -> Result<Vec<Vec<Cell>>> {
    if !world.is_free(goal) || !world.is_free(start) {
        return Err(Error::GoalUnreachable(goal));
    }
    if start == goal {
        return Ok(vec![vec![start]]);
    }
    let mut penalty: std::collections::BTreeMap<Edge, u64> = Default::default();
    let mut accepted: Vec<Vec<Cell>> = Vec::new();
    let attempts = 4 * k.max(1) + 4;
    for _ in 0..attempts {
        if accepted.len() >= k {
            break;
        }
        let weight = |e: Edge| penalty.get(&e).copied().unwrap_or(1);
        let path = dijkstra(world, start, goal, &weight).ok_or(Error::GoalUnreachable(goal))?;
        for e in edges_of(&path) {
            *penalty.entry(e).or_insert(1) *= 2;
        }
        if accepted.iter().all(|p| overlap(p, &path) <= MAX_OVERLAP) {
            accepted.push(path);
        }
    }
    accepted.sort_by_key(Vec::len);
    Ok(accepted)
}
