//! Stochastic improvement on an orbit graph: remove a random incumbent
//! vertex together with every incumbent vertex within a distance threshold
//! of it, then refill the freed region with the exact solver.

use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bits::Bits;
use crate::error::{Error, Result};
use crate::automorphism::GraphSymmetry;
use crate::exact::{
    greedy_in_order, max_weight_is, max_weight_is_restricted, max_weight_is_with, Budget, SolveOptions, SolveOutcome, Solution,
};
use crate::orbitgraph::OrbitGraph;
use crate::torus::CodeSet;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchConfig {
    /// Initial distance threshold for ball removal.
    pub ball_radius: u32,
    /// Iterations without improvement before the radius grows by one.
    pub stall_iterations: u64,
    /// Per restart.
    pub max_iterations: u64,
    /// Wall-clock limit for the whole search.
    pub time_limit: Option<Duration>,
    pub restarts: u32,
    pub seed: u64,
    /// Node limit for each refill solve.
    pub refill_nodes: u64,
    /// Stop once this weight is reached.
    pub target_weight: Option<u64>,
    /// Keep a statistics record every this many iterations (0 disables);
    /// improvements are always recorded.
    pub log_every: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            ball_radius: 2,
            stall_iterations: 500,
            max_iterations: u64::MAX,
            time_limit: Some(Duration::from_secs(60)),
            restarts: 1,
            seed: 0,
            refill_nodes: 200_000,
            target_weight: None,
            log_every: 0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 || self.restarts == 0 || self.refill_nodes == 0 || self.stall_iterations == 0 {
            return Err(Error::InvalidParams(
                "max_iterations, restarts, refill_nodes and stall_iterations must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`. `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(line_no, "expected key = value"))?;
            self.set(key.trim(), value.trim()).map_err(|msg| Error::parse(line_no, msg))?;
        }
        self.validate()
    }

    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
            v.parse().map_err(|_| format!("bad value {v:?} for {key}"))
        }
        let unlimited = matches!(value, "none" | "unlimited");
        match key {
            "ball_radius" => self.ball_radius = num(key, value)?,
            "stall_iterations" => self.stall_iterations = num(key, value)?,
            "max_iterations" if unlimited => self.max_iterations = u64::MAX,
            "max_iterations" => self.max_iterations = num(key, value)?,
            "time_limit" if unlimited => self.time_limit = None,
            "time_limit" => {
                let secs: f64 = num(key, value)?;
                self.time_limit = Some(Duration::try_from_secs_f64(secs).map_err(|e| format!("time_limit: {e}"))?);
            }
            "restarts" => self.restarts = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "refill_nodes" => self.refill_nodes = num(key, value)?,
            "target_weight" if unlimited => self.target_weight = None,
            "target_weight" => self.target_weight = Some(num(key, value)?),
            "log_every" => self.log_every = num(key, value)?,
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }
}

/// One line of the statistics stream.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub restart: u32,
    pub iteration: u64,
    pub incumbent: u64,
    pub best: u64,
    pub radius: u32,
    pub removed: usize,
    pub refill_optimal: bool,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TrajectoryPoint {
    pub iteration: u64,
    pub weight: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestartReport {
    pub restart: u32,
    pub best_weight: u64,
    pub iterations: u64,
    pub refills: u64,
    pub optimal_refills: u64,
    /// Best weight after each improvement, starting with the initial
    /// incumbent at iteration 0.
    pub trajectory: Vec<TrajectoryPoint>,
    #[serde(skip)]
    pub records: Vec<IterationRecord>,
    #[serde(skip)]
    pub best: Solution,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchReport {
    pub best: Solution,
    pub restarts: Vec<RestartReport>,
    pub elapsed_ms: u64,
}

impl SearchReport {
    pub fn iterations(&self) -> u64 {
        self.restarts.iter().map(|r| r.iterations).sum()
    }

    /// Fraction of refills that ran to optimality.
    pub fn refill_optimality_rate(&self) -> f64 {
        let refills: u64 = self.restarts.iter().map(|r| r.refills).sum();
        let optimal: u64 = self.restarts.iter().map(|r| r.optimal_refills).sum();
        if refills == 0 {
            1.0
        } else {
            optimal as f64 / refills as f64
        }
    }
}

/// Incumbent vertices within `radius` of `center`, and the rest.
pub fn remove_ball(graph: &OrbitGraph, incumbent: &Solution, center: usize, radius: u32) -> Result<(Solution, Vec<usize>)> {
    if !incumbent.contains(center) {
        return Err(Error::Contract(format!("ball center {center} is not in the incumbent")));
    }
    let (removed, kept): (Vec<usize>, Vec<usize>) = incumbent
        .vertices()
        .iter()
        .partition(|&&u| graph.distance(center, u) <= radius);
    Ok((Solution::from_trusted(graph.graph(), kept), removed))
}

/// Best extension of `reduced` by vertices compatible with all of it.
pub fn refill(graph: &OrbitGraph, reduced: &Solution, budget: &Budget, tie_keys: Option<&[u64]>) -> Result<SolveOutcome> {
    let g = graph.graph();
    let mut blocked = Bits::new(g.n());
    for &v in reduced.vertices() {
        blocked.set(v);
        blocked.or_assign(g.neighbors(v));
    }
    let candidates: Vec<usize> = (0..g.n()).filter(|&v| !blocked.get(v)).collect();
    let opts = SolveOptions {
        tie_keys,
        ..SolveOptions::default()
    };
    max_weight_is_restricted(g, reduced, &candidates, budget, &opts)
}

/// Expansion of a solution to its codewords.
pub fn expand_solution(graph: &OrbitGraph, s: &Solution) -> CodeSet {
    graph.expand(s)
}

/// Per-restart state of the improvement loop.
pub struct SearchState<'a> {
    graph: &'a OrbitGraph,
    config: &'a SearchConfig,
    rng: ChaCha8Rng,
    restart: u32,
    incumbent: Solution,
    best: Solution,
    iteration: u64,
    radius: u32,
    stall: u64,
    refills: u64,
    optimal_refills: u64,
    tie_keys: Vec<u64>,
    trajectory: Vec<TrajectoryPoint>,
}

impl<'a> SearchState<'a> {
    /// Greedy start by weight, ties shuffled by this restart's stream.
    pub fn new(graph: &'a OrbitGraph, config: &'a SearchConfig, restart: u32) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(restart as u64);
        let g = graph.graph();
        let mut order: Vec<usize> = (0..g.n()).collect();
        order.shuffle(&mut rng);
        order.sort_by_key(|&v| std::cmp::Reverse(g.weight(v)));
        let start = greedy_in_order(g, &order);
        SearchState {
            graph,
            config,
            rng,
            restart,
            trajectory: vec![TrajectoryPoint {
                iteration: 0,
                weight: start.weight(),
            }],
            best: start.clone(),
            incumbent: start,
            iteration: 0,
            radius: config.ball_radius,
            stall: 0,
            refills: 0,
            optimal_refills: 0,
            tie_keys: vec![0; g.n()],
        }
    }

    pub fn incumbent(&self) -> &Solution {
        &self.incumbent
    }

    pub fn best(&self) -> &Solution {
        &self.best
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    /// One remove-and-refill move.
    pub fn step(&mut self, started: Instant) -> Result<IterationRecord> {
        self.iteration += 1;
        let mut removed = 0;
        let mut refill_optimal = true;
        if !self.incumbent.is_empty() {
            let members = self.incumbent.vertices();
            let center = members[self.rng.gen_range(0..members.len())];
            let (reduced, gone) = remove_ball(self.graph, &self.incumbent, center, self.radius)?;
            removed = gone.len();
            for k in self.tie_keys.iter_mut() {
                *k = self.rng.next_u64();
            }
            let out = refill(self.graph, &reduced, &Budget::nodes(self.config.refill_nodes), Some(&self.tie_keys))?;
            self.refills += 1;
            refill_optimal = out.optimal;
            if out.optimal {
                self.optimal_refills += 1;
            }
            // a budget-limited refill may come back lighter
            if out.solution.weight() >= self.incumbent.weight() {
                self.incumbent = out.solution;
            }
        }
        if self.incumbent.weight() > self.best.weight() {
            self.best = self.incumbent.clone();
            self.trajectory.push(TrajectoryPoint {
                iteration: self.iteration,
                weight: self.best.weight(),
            });
            self.stall = 0;
            self.radius = self.config.ball_radius;
        } else {
            self.stall += 1;
            if self.stall >= self.config.stall_iterations {
                self.stall = 0;
                self.radius = (self.radius + 1).min(self.graph.params().max_distance());
            }
        }
        Ok(IterationRecord {
            restart: self.restart,
            iteration: self.iteration,
            incumbent: self.incumbent.weight(),
            best: self.best.weight(),
            radius: self.radius,
            removed,
            refill_optimal,
            elapsed_ms: started.elapsed().as_millis() as u64,
        })
    }

    fn into_report(self, records: Vec<IterationRecord>) -> RestartReport {
        RestartReport {
            restart: self.restart,
            best_weight: self.best.weight(),
            iterations: self.iteration,
            refills: self.refills,
            optimal_refills: self.optimal_refills,
            trajectory: self.trajectory,
            records,
            best: self.best,
        }
    }
}

/// Runs `config.restarts` independent restarts on up to `jobs` threads.
/// The time limit covers the whole call; restarts sharing a thread split
/// it evenly.
pub fn run_search(graph: &OrbitGraph, config: &SearchConfig, jobs: usize) -> Result<SearchReport> {
    config.validate()?;
    if graph.n() == 0 {
        return Err(Error::InvalidParams("orbit graph has no vertices".into()));
    }
    let started = Instant::now();
    let jobs = jobs.clamp(1, config.restarts as usize);
    let per_thread = (config.restarts as usize).div_ceil(jobs) as u32;
    let slice = config.time_limit.map(|t| t / per_thread);
    let shared_best = AtomicU64::new(0);
    let next = AtomicUsize::new(0);

    let run_one = |restart: u32| -> Result<RestartReport> {
        let deadline = slice.map(|s| Instant::now() + s);
        let mut state = SearchState::new(graph, config, restart);
        let mut records = Vec::new();
        shared_best.fetch_max(state.best().weight(), Ordering::Relaxed);
        let reached = |w: u64| config.target_weight.is_some_and(|t| w >= t);
        while state.iteration() < config.max_iterations
            && deadline.is_none_or(|d| Instant::now() < d)
            && !reached(shared_best.load(Ordering::Relaxed))
        {
            let before = state.best().weight();
            let rec = state.step(started)?;
            if rec.best > before {
                shared_best.fetch_max(rec.best, Ordering::Relaxed);
            }
            if config.log_every > 0 && (rec.best > before || rec.iteration % config.log_every == 0) {
                records.push(rec);
            }
        }
        Ok(state.into_report(records))
    };

    let mut reports: Vec<RestartReport> = std::thread::scope(|scope| {
        let workers: Vec<_> = (0..jobs)
            .map(|_| {
                scope.spawn(|| {
                    let mut done = Vec::new();
                    loop {
                        let r = next.fetch_add(1, Ordering::Relaxed);
                        if r >= config.restarts as usize {
                            break;
                        }
                        done.push(run_one(r as u32));
                    }
                    done
                })
            })
            .collect();
        workers
            .into_iter()
            .flat_map(|w| w.join().expect("search worker panicked"))
            .collect::<Result<Vec<_>>>()
    })?;
    reports.sort_by_key(|r| r.restart);
    let best = reports
        .iter()
        .map(|r| &r.best)
        .fold(None::<&Solution>, |acc, s| match acc {
            Some(a) if a.weight() >= s.weight() => Some(a),
            _ => Some(s),
        })
        .cloned()
        .unwrap_or_else(Solution::empty);
    Ok(SearchReport {
        best,
        restarts: reports,
        elapsed_ms: started.elapsed().as_millis() as u64,
    })
}

/// Nodes granted to the plain solver before any warm start. Small
/// instances finish inside this and skip the search entirely.
const QUICK_NODES: u64 = 100_000;

/// Exact optimum of an orbit graph. A search under `warm_start` first
/// supplies a good solution; with it in hand the solver can use the
/// symmetries of the graph induced by the torus automorphisms.
pub fn solve_exact(graph: &OrbitGraph, budget: &Budget, warm_start: &SearchConfig) -> Result<SolveOutcome> {
    if graph.n() == 0 {
        return Ok(SolveOutcome {
            solution: Solution::empty(),
            optimal: true,
            nodes: 0,
        });
    }
    let started = Instant::now();
    let quick_budget = Budget {
        max_nodes: Some(budget.max_nodes.map_or(QUICK_NODES, |n| n.min(QUICK_NODES))),
        time_limit: budget.time_limit,
    };
    let quick = max_weight_is(graph.graph(), &quick_budget);
    if quick.optimal {
        return Ok(quick);
    }
    let warm = run_search(graph, warm_start, 1)?.best;
    let incumbent = if warm.weight() >= quick.solution.weight() { warm } else { quick.solution };
    let symmetry = GraphSymmetry::from_generators(graph.graph(), &graph.symmetry_generators())?;
    let opts = SolveOptions {
        incumbent: Some(&incumbent),
        symmetry: Some(&symmetry),
        ..SolveOptions::default()
    };
    let rest = Budget {
        max_nodes: budget.max_nodes.map(|n| n.saturating_sub(quick.nodes)),
        time_limit: budget.time_limit.map(|t| t.saturating_sub(started.elapsed())),
    };
    let mut outcome = max_weight_is_with(graph.graph(), &rest, &opts);
    outcome.nodes += quick.nodes;
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symmetry::{Group, GroupElement};
    use crate::torus::{is_independent_set, CycleParams};

    fn trivial_graph(p: u32, d: usize) -> OrbitGraph {
        let params = CycleParams::new(p, d).unwrap();
        OrbitGraph::build(&Group::trivial(&params), 1 << 20).unwrap()
    }

    fn config(seed: u64, iterations: u64) -> SearchConfig {
        SearchConfig {
            seed,
            max_iterations: iterations,
            time_limit: None,
            log_every: 1,
            ..SearchConfig::default()
        }
    }

    #[test]
    fn ball_radius_extremes() {
        let og = trivial_graph(7, 2);
        let inc = crate::exact::greedy(og.graph());
        let center = inc.vertices()[0];
        let (kept, removed) = remove_ball(&og, &inc, center, 0).unwrap();
        assert_eq!(removed, vec![center]);
        assert_eq!(kept.len(), inc.len() - 1);
        let (kept, removed) = remove_ball(&og, &inc, center, og.params().max_distance()).unwrap();
        assert!(kept.is_empty());
        assert_eq!(removed.len(), inc.len());
        let outside = (0..og.n()).find(|&v| !inc.contains(v)).unwrap();
        assert!(remove_ball(&og, &inc, outside, 1).is_err());
    }

    #[test]
    fn ball_matches_distance_definition() {
        let params = CycleParams::new(15, 3).unwrap();
        let g = GroupElement::translation(&params, &[0, 5, 5]).unwrap();
        let og = OrbitGraph::build(&Group::cyclic(&params, g).unwrap(), 1 << 20).unwrap();
        let inc = crate::exact::greedy(og.graph());
        let center = inc.vertices()[inc.len() / 2];
        let (kept, removed) = remove_ball(&og, &inc, center, 4).unwrap();
        for &u in inc.vertices() {
            let d = crate::orbitgraph::orbit_distance_naive(&og.orbit(center), &og.orbit(u), og.params());
            assert_eq!(removed.contains(&u), d <= 4);
            assert_eq!(kept.contains(u), d > 4);
        }
    }

    #[test]
    fn unlimited_refill_never_loses_weight() {
        let og = trivial_graph(7, 2);
        let inc = crate::exact::greedy(og.graph());
        for &center in inc.vertices() {
            let (kept, _) = remove_ball(&og, &inc, center, 3).unwrap();
            let out = refill(&og, &kept, &Budget::unlimited(), None).unwrap();
            assert!(out.optimal);
            assert!(out.solution.weight() >= inc.weight());
            assert!(out.solution.is_valid_for(og.graph()));
        }
    }

    #[test]
    fn small_torus_reaches_optimum() {
        let og = trivial_graph(5, 2);
        for seed in 0..5 {
            let report = run_search(&og, &config(seed, 1000), 1).unwrap();
            assert_eq!(report.best.weight(), 5);
        }
    }

    #[test]
    fn four_cycle() {
        let og = trivial_graph(4, 1);
        let report = run_search(&og, &config(1, 10), 1).unwrap();
        assert_eq!(report.best.weight(), 2);
    }

    #[test]
    fn zero_time_returns_greedy_start() {
        let og = trivial_graph(7, 2);
        let cfg = SearchConfig {
            time_limit: Some(Duration::ZERO),
            ..SearchConfig::default()
        };
        let report = run_search(&og, &cfg, 1).unwrap();
        assert_eq!(report.iterations(), 0);
        assert!(report.best.is_valid_for(og.graph()));
        assert_eq!(report.best, SearchState::new(&og, &cfg, 0).best().clone());
    }

    #[test]
    fn restarts_are_reproducible_and_ordered() {
        let og = trivial_graph(7, 2);
        let cfg = SearchConfig {
            restarts: 3,
            ..config(9, 200)
        };
        let a = run_search(&og, &cfg, 2).unwrap();
        let b = run_search(&og, &cfg, 1).unwrap();
        let weights = |r: &SearchReport| r.restarts.iter().map(|x| x.records.iter().map(|e| e.best).collect::<Vec<_>>()).collect::<Vec<_>>();
        assert_eq!(weights(&a), weights(&b));
        assert_eq!(a.restarts.iter().map(|r| r.restart).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_eq!(a.best, b.best);
    }

    #[test]
    fn expansion_is_independent() {
        let og = trivial_graph(7, 2);
        let report = run_search(&og, &config(3, 50), 1).unwrap();
        let set = expand_solution(&og, &report.best);
        assert_eq!(set.len() as u64, report.best.weight());
        assert!(is_independent_set(&set));
        assert!(expand_solution(&og, &Solution::empty()).is_empty());
    }

    #[test]
    fn config_text() {
        let mut cfg = SearchConfig::default();
        cfg.apply_text("# comment\nball_radius = 3\ntime_limit=1.5\ntarget_weight = 33 # stop early\nmax_iterations=none\n")
            .unwrap();
        assert_eq!(cfg.ball_radius, 3);
        assert_eq!(cfg.time_limit, Some(Duration::from_millis(1500)));
        assert_eq!(cfg.target_weight, Some(33));
        assert_eq!(cfg.max_iterations, u64::MAX);
        assert!(matches!(cfg.apply_text("\nfoo = 1"), Err(Error::Parse { line: 2, .. })));
        assert!(cfg.apply_text("restarts = 0").is_err());
        assert!(cfg.apply_text("seed").is_err());
    }
}
