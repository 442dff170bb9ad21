use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{gh_defects, CorrespondencePair, FiniteMetricSpace};

/// Largest `N_X·N_Y` searched exhaustively.
pub const EXHAUSTIVE_LIMIT: usize = 36;

const RESTARTS: usize = 64;
const MAX_SWEEPS: usize = 50;
const DEFAULT_SEED: u64 = 0x6768;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchRegime {
    /// Optimal over all map pairs.
    Exhaustive,
    /// Best pair found by local search; an upper bound only.
    Heuristic,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GhBound {
    pub epsilon: f64,
    pub maps: CorrespondencePair,
    pub regime: SearchRegime,
}

impl GhBound {
    pub fn flag(&self) -> &'static str {
        match self.regime {
            SearchRegime::Exhaustive => "exact",
            SearchRegime::Heuristic => "heuristic",
        }
    }
}

/// Minimizes the ε of a map pair between `x` and `y`.
pub fn gh_upper_bound(x: &FiniteMetricSpace, y: &FiniteMetricSpace) -> GhBound {
    gh_upper_bound_seeded(x, y, DEFAULT_SEED)
}

pub fn gh_upper_bound_seeded(x: &FiniteMetricSpace, y: &FiniteMetricSpace, seed: u64) -> GhBound {
    let exhaustive = x.len() * y.len() <= EXHAUSTIVE_LIMIT;
    let restarts = if exhaustive { 4 } else { RESTARTS };
    let (epsilon, maps) = local_search(x, y, seed, restarts);
    if !exhaustive {
        return GhBound {
            epsilon,
            maps,
            regime: SearchRegime::Heuristic,
        };
    }
    let mut search = Exhaustive::new(x, y, epsilon, maps);
    search.run();
    GhBound {
        epsilon: search.best,
        maps: search.best_maps,
        regime: SearchRegime::Exhaustive,
    }
}

fn objective(x: &FiniteMetricSpace, y: &FiniteMetricSpace, maps: &CorrespondencePair) -> (f64, f64) {
    let d = gh_defects(x, y, maps).expect("maps sized to the spaces");
    let mut total = 0.0;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            total += (x.dist(i, j) - y.dist(maps.f[i], maps.f[j])).abs();
        }
        total += x.dist(i, maps.g[maps.f[i]]);
    }
    for i in 0..y.len() {
        for j in i + 1..y.len() {
            total += (y.dist(i, j) - x.dist(maps.g[i], maps.g[j])).abs();
        }
        total += y.dist(i, maps.f[maps.g[i]]);
    }
    (d.epsilon, total)
}

/// Assigns each point in turn to the target that keeps the running distortion
/// smallest.
fn greedy_map(a: &FiniteMetricSpace, b: &FiniteMetricSpace) -> Vec<usize> {
    let mut map: Vec<usize> = Vec::with_capacity(a.len());
    for i in 0..a.len() {
        let cost = |c: usize| {
            (0..i)
                .map(|j| (a.dist(i, j) - b.dist(c, map[j])).abs())
                .fold(0.0, f64::max)
        };
        let best = (0..b.len())
            .min_by(|&p, &q| cost(p).total_cmp(&cost(q)))
            .expect("target space is nonempty");
        map.push(best);
    }
    map
}

fn improve(x: &FiniteMetricSpace, y: &FiniteMetricSpace, mut maps: CorrespondencePair) -> ((f64, f64), CorrespondencePair) {
    let mut score = objective(x, y, &maps);
    for _ in 0..MAX_SWEEPS {
        let mut moved = false;
        for i in 0..x.len() {
            for c in 0..y.len() {
                let old = std::mem::replace(&mut maps.f[i], c);
                let s = objective(x, y, &maps);
                if s < score {
                    score = s;
                    moved = true;
                } else {
                    maps.f[i] = old;
                }
            }
        }
        for i in 0..y.len() {
            for c in 0..x.len() {
                let old = std::mem::replace(&mut maps.g[i], c);
                let s = objective(x, y, &maps);
                if s < score {
                    score = s;
                    moved = true;
                } else {
                    maps.g[i] = old;
                }
            }
        }
        if !moved {
            break;
        }
    }
    (score, maps)
}

fn local_search(x: &FiniteMetricSpace, y: &FiniteMetricSpace, seed: u64, restarts: usize) -> (f64, CorrespondencePair) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = CorrespondencePair {
        f: greedy_map(x, y),
        g: greedy_map(y, x),
    };
    let (mut best_score, mut best) = improve(x, y, start);
    for _ in 1..restarts {
        let start = CorrespondencePair {
            f: (0..x.len()).map(|_| rng.gen_range(0..y.len())).collect(),
            g: (0..y.len()).map(|_| rng.gen_range(0..x.len())).collect(),
        };
        let (score, maps) = improve(x, y, start);
        if score < best_score {
            best_score = score;
            best = maps;
        }
    }
    (best_score.0, best)
}

/// Branch and bound over `F`, then `G`, keeping only strict improvements on
/// the incumbent.
struct Exhaustive<'a> {
    x: &'a FiniteMetricSpace,
    y: &'a FiniteMetricSpace,
    best: f64,
    best_maps: CorrespondencePair,
    f: Vec<usize>,
    g: Vec<usize>,
    /// Points of `x` sent to each `y` by the current `F`.
    fibers: Vec<Vec<usize>>,
}

impl<'a> Exhaustive<'a> {
    fn new(x: &'a FiniteMetricSpace, y: &'a FiniteMetricSpace, best: f64, best_maps: CorrespondencePair) -> Self {
        Self {
            x,
            y,
            best,
            best_maps,
            f: Vec::with_capacity(x.len()),
            g: Vec::with_capacity(y.len()),
            fibers: vec![Vec::new(); y.len()],
        }
    }

    fn run(&mut self) {
        self.assign_f(0.0);
    }

    fn assign_f(&mut self, cost: f64) {
        let i = self.f.len();
        if i == self.x.len() {
            for fiber in &mut self.fibers {
                fiber.clear();
            }
            for (p, &img) in self.f.iter().enumerate() {
                self.fibers[img].push(p);
            }
            self.assign_g(cost);
            return;
        }
        for c in 0..self.y.len() {
            let step = (0..i)
                .map(|j| (self.x.dist(i, j) - self.y.dist(c, self.f[j])).abs())
                .fold(cost, f64::max);
            if step < self.best {
                self.f.push(c);
                self.assign_f(step);
                self.f.pop();
            }
        }
    }

    fn assign_g(&mut self, cost: f64) {
        let i = self.g.len();
        if i == self.y.len() {
            self.best = cost;
            self.best_maps = CorrespondencePair {
                f: self.f.clone(),
                g: self.g.clone(),
            };
            return;
        }
        for c in 0..self.x.len() {
            let mut step = cost.max(self.y.dist(i, self.f[c]));
            step = self.fibers[i].iter().map(|&p| self.x.dist(p, c)).fold(step, f64::max);
            step = (0..i)
                .map(|j| (self.y.dist(i, j) - self.x.dist(c, self.g[j])).abs())
                .fold(step, f64::max);
            if step < self.best {
                self.g.push(c);
                self.assign_g(step);
                self.g.pop();
            }
        }
    }
}
